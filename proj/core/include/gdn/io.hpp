#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gdn/dataset.hpp"
#include "gdn/model.hpp"
#include "gdn/training.hpp"

namespace gdn {

inline constexpr std::uint16_t kDatasetVersion = 1;
inline constexpr char kCheckpointFormat[] = "gdn-ckpt-v1";

/// Binary dataset file:
///   "GDP1" | u16 version | u32 n | u32 count | u8 flags (bit0 weighted)
///   | u32 payload crc32 | u32 metadata crc32
///   | count x (A_O, A_L) as f64 little endian, row-major
///   | u32 metadata length | metadata JSON
std::vector<std::uint8_t> encode_dataset(const GraphPairDataset& ds);
GraphPairDataset decode_dataset(const std::vector<std::uint8_t>& bytes);

void write_dataset(const GraphPairDataset& ds, const std::filesystem::path& path);
GraphPairDataset read_dataset(const std::filesystem::path& path);

struct Checkpoint {
  GdnParams params;
  double threshold = 0.0;
  Task task = Task::link;
  std::vector<double> normalization;  // per-sample observation scales of the training data
};

std::string encode_checkpoint(const Checkpoint& c);
/// Throws ShapeError when `expected` is given and differs from the stored
/// architecture.
Checkpoint decode_checkpoint(const std::string& text,
                             const std::optional<Architecture>& expected = std::nullopt);

void write_checkpoint(const Checkpoint& c, const std::filesystem::path& path);
Checkpoint read_checkpoint(const std::filesystem::path& path,
                           const std::optional<Architecture>& expected = std::nullopt);

/// epoch,train_loss,val_metric,wall_ms,prior_grad_norm
std::string history_csv(const std::vector<EpochRecord>& history);

/// method,task,threshold,scale,error_mean,error_stderr,mse_mean,mse_stderr,mae_mean,mae_stderr,count
std::string reports_csv(const std::vector<EvalReport>& reports);
std::string reports_json(const std::vector<EvalReport>& reports, bool with_samples = false);

/// Writes through a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace gdn
