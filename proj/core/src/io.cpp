#include "gdn/io.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "gdn/errors.hpp"
#include "json_codec.hpp"

namespace gdn {

using codec::json;

namespace {

constexpr char kMagic[4] = {'G', 'D', 'P', '1'};
constexpr std::size_t kHeaderSize = 4 + 2 + 4 + 4 + 1 + 4 + 4;
constexpr std::uint8_t kFlagWeighted = 0x01;

std::uint32_t crc32_of(const std::uint8_t* data, std::size_t len) {
  uLong crc = crc32(0L, Z_NULL, 0);
  while (len > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(len, 1u << 30));
    crc = crc32(crc, data, chunk);
    data += chunk;
    len -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  void patch_u32(std::size_t at, std::uint32_t v) {
    for (int k = 0; k < 4; ++k) buf_[at + k] = static_cast<std::uint8_t>(v >> (8 * k));
  }
  std::size_t size() const { return buf_.size(); }
  std::vector<std::uint8_t>& buffer() { return buf_; }

 private:
  void put(std::uint64_t v, int n) {
    for (int k = 0; k < n; ++k) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
  }
  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& b, std::size_t pos = 0) : b_(b), pos_(pos) {}
  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  double f64() { return std::bit_cast<double>(get(8)); }
  std::size_t pos() const { return pos_; }

 private:
  std::uint64_t get(int n) {
    if (pos_ + static_cast<std::size_t>(n) > b_.size()) throw FormatError("dataset: truncated file");
    std::uint64_t v = 0;
    for (int k = 0; k < n; ++k) v |= static_cast<std::uint64_t>(b_[pos_ + k]) << (8 * k);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  const std::vector<std::uint8_t>& b_;
  std::size_t pos_;
};

json dataset_metadata(const GraphPairDataset& ds) {
  return json{{"meta", codec::encode(ds.meta)},
              {"splits", {{"train", ds.train}, {"val", ds.val}, {"test", ds.test}}}};
}

}  // namespace

std::vector<std::uint8_t> encode_dataset(const GraphPairDataset& ds) {
  ds.validate();
  const std::string meta = dataset_metadata(ds).dump();
  Writer w;
  w.bytes(kMagic, 4);
  w.u16(kDatasetVersion);
  w.u32(static_cast<std::uint32_t>(ds.n));
  w.u32(static_cast<std::uint32_t>(ds.size()));
  w.u8(ds.meta.weighted_labels ? kFlagWeighted : 0);
  const std::size_t crc_at = w.size();
  w.u32(0);
  w.u32(0);
  for (std::size_t s = 0; s < ds.size(); ++s) {
    for (double v : ds.observations[s].matrix().values()) w.f64(v);
    for (double v : ds.labels[s].weights().values()) w.f64(v);
  }
  auto& buf = w.buffer();
  const std::uint32_t payload_crc = crc32_of(buf.data() + kHeaderSize, buf.size() - kHeaderSize);
  w.u32(static_cast<std::uint32_t>(meta.size()));
  w.bytes(meta.data(), meta.size());
  const auto* mp = reinterpret_cast<const std::uint8_t*>(meta.data());
  w.patch_u32(crc_at, payload_crc);
  w.patch_u32(crc_at + 4, crc32_of(mp, meta.size()));
  return std::move(buf);
}

GraphPairDataset decode_dataset(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kHeaderSize) throw FormatError("dataset: file shorter than its header");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("dataset: bad magic (not a GDP1 file)");
  Reader r(bytes, 4);
  const std::uint16_t version = r.u16();
  if (version != kDatasetVersion) {
    std::ostringstream os;
    os << "dataset: unsupported version " << version << " (this build reads version "
       << kDatasetVersion << ")";
    throw VersionError(os.str());
  }
  const std::uint32_t n = r.u32();
  const std::uint32_t count = r.u32();
  const std::uint8_t flags = r.u8();
  if (flags & ~kFlagWeighted) throw FormatError("dataset: reserved flag bits are set");
  const std::uint32_t payload_crc = r.u32();
  const std::uint32_t meta_crc = r.u32();

  if (n > 65535 || count > bytes.size())
    throw FormatError("dataset: declared counts exceed file length");
  const std::size_t payload = static_cast<std::size_t>(count) * 2 * n * n * 8;
  if (bytes.size() < kHeaderSize + payload + 4)
    throw FormatError("dataset: truncated payload (declared counts exceed file length)");
  const std::size_t meta_len = Reader(bytes, kHeaderSize + payload).u32();
  if (bytes.size() != kHeaderSize + payload + 4 + meta_len) {
    std::ostringstream os;
    os << "dataset: file is " << bytes.size() << " bytes, header declares "
       << kHeaderSize + payload + 4 + meta_len;
    throw FormatError(os.str());
  }
  if (crc32_of(bytes.data() + kHeaderSize, payload) != payload_crc)
    throw ChecksumError("dataset: payload checksum mismatch");
  const std::uint8_t* mp = bytes.data() + kHeaderSize + payload + 4;
  if (crc32_of(mp, meta_len) != meta_crc) throw ChecksumError("dataset: metadata checksum mismatch");

  json meta;
  try {
    meta = json::parse(std::string(reinterpret_cast<const char*>(mp), meta_len));
  } catch (const json::exception& e) {
    throw FormatError(std::string("dataset: metadata is not valid JSON: ") + e.what());
  }

  GraphPairDataset ds;
  ds.n = n;
  try {
    ds.meta = codec::decode_meta(meta.at("meta"));
    const auto& sp = meta.at("splits");
    ds.train = sp.at("train").get<std::vector<std::size_t>>();
    ds.val = sp.at("val").get<std::vector<std::size_t>>();
    ds.test = sp.at("test").get<std::vector<std::size_t>>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("dataset: malformed metadata: ") + e.what());
  }
  if (ds.meta.weighted_labels != static_cast<bool>(flags & kFlagWeighted))
    throw FormatError("dataset: weighted flag disagrees with metadata");

  Reader body(bytes, kHeaderSize);
  for (std::uint32_t s = 0; s < count; ++s) {
    Matrix o(n, n), l(n, n);
    for (double& v : o.values()) v = body.f64();
    for (double& v : l.values()) v = body.f64();
    try {
      ds.observations.emplace_back(std::move(o));
      ds.labels.emplace_back(std::move(l));
    } catch (const Error& e) {
      std::ostringstream os;
      os << "dataset: sample " << s << " is invalid: " << e.what();
      throw FormatError(os.str());
    }
  }
  ds.validate();
  if (ds.train.size() + ds.val.size() + ds.test.size() != ds.size())
    throw FormatError("dataset: splits do not cover every sample");
  return ds;
}

void write_dataset(const GraphPairDataset& ds, const std::filesystem::path& path) {
  const auto bytes = encode_dataset(ds);
  write_file_atomic(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

GraphPairDataset read_dataset(const std::filesystem::path& path) {
  const std::string s = read_file(path);
  return decode_dataset(std::vector<std::uint8_t>(s.begin(), s.end()));
}

std::string encode_checkpoint(const Checkpoint& c) {
  c.params.validate();
  json j{{"format", kCheckpointFormat},
         {"architecture", codec::encode(c.params.architecture())},
         {"params", flatten(c.params)},
         {"threshold", c.threshold},
         {"task", to_string(c.task)},
         {"normalization", c.normalization}};
  if (!c.params.prior.empty()) j["prior"] = codec::encode(c.params.prior);
  return j.dump(1);
}

Checkpoint decode_checkpoint(const std::string& text, const std::optional<Architecture>& expected) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint: not valid JSON: ") + e.what());
  }
  Checkpoint c;
  try {
    const auto fmt = j.at("format").get<std::string>();
    if (fmt != kCheckpointFormat)
      throw VersionError("checkpoint: unsupported format '" + fmt + "' (expected " +
                         kCheckpointFormat + ")");
    const Architecture arch = codec::decode_architecture(j.at("architecture"));
    if (expected && !(*expected == arch)) {
      std::ostringstream os;
      os << "checkpoint: architecture mismatch: file has D=" << arch.depth << " C=" << arch.channels
         << " shared=" << arch.shared << " prior=" << to_string(arch.prior_mode)
         << " variant=" << to_string(arch.variant) << ", expected D=" << expected->depth
         << " C=" << expected->channels << " shared=" << expected->shared
         << " prior=" << to_string(expected->prior_mode)
         << " variant=" << to_string(expected->variant);
      throw ShapeError(os.str());
    }
    const Matrix prior = j.contains("prior") ? codec::decode_matrix(j["prior"]) : Matrix{};
    c.params = zero_params(arch, prior);
    unflatten(j.at("params").get<std::vector<double>>(), c.params);
    c.params.validate();
    c.threshold = j.at("threshold").get<double>();
    c.task = task_from_string(j.at("task").get<std::string>());
    c.normalization = j.at("normalization").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint: malformed: ") + e.what());
  }
  return c;
}

void write_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  write_file_atomic(path, encode_checkpoint(c));
}

Checkpoint read_checkpoint(const std::filesystem::path& path,
                           const std::optional<Architecture>& expected) {
  return decode_checkpoint(read_file(path), expected);
}

std::string history_csv(const std::vector<EpochRecord>& history) {
  std::ostringstream os;
  os << std::setprecision(10);
  os << "epoch,train_loss,val_metric,wall_ms,prior_grad_norm\n";
  for (const auto& e : history)
    os << e.epoch << ',' << e.train_loss << ',' << e.val_metric << ',' << e.wall_ms << ','
       << e.prior_grad_norm << '\n';
  return os.str();
}

std::string reports_csv(const std::vector<EvalReport>& reports) {
  std::ostringstream os;
  os << std::setprecision(10);
  os << "method,task,threshold,scale,error_mean,error_stderr,mse_mean,mse_stderr,mae_mean,"
        "mae_stderr,count\n";
  for (const auto& r : reports)
    os << r.method << ',' << to_string(r.task) << ',' << r.threshold << ',' << r.scale << ','
       << r.error.mean << ',' << r.error.std_error << ',' << r.mse.mean << ',' << r.mse.std_error
       << ',' << r.mae.mean << ',' << r.mae.std_error << ',' << r.error.count << '\n';
  return os.str();
}

std::string reports_json(const std::vector<EvalReport>& reports, bool with_samples) {
  json arr = json::array();
  for (const auto& r : reports) arr.push_back(codec::encode(r, with_samples));
  return arr.dump(1);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw IoError("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw IoError("cannot move '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace gdn
