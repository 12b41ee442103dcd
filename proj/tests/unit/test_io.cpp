#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "fd_oracle.hpp"
#include "gdn/dataset.hpp"
#include "gdn/errors.hpp"
#include "gdn/io.hpp"

using namespace gdn;
namespace fs = std::filesystem;

namespace {

DatasetRecipe small_recipe(std::size_t tr, std::size_t va, std::size_t te, std::uint64_t seed) {
  DatasetRecipe r;
  r.ensemble.kind = EnsembleKind::ER;
  r.ensemble.n = 7;
  r.ensemble.p = 0.5;
  r.train = tr;
  r.val = va;
  r.test = te;
  r.seed = seed;
  return r;
}

fs::path temp_dir() {
  const fs::path d = fs::temp_directory_path() / ("gdn_io_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()));
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST(Dataset, SplitsAreDisjointAndCover) {
  const GraphPairDataset ds = build_dataset(small_recipe(10, 5, 5, 1));
  EXPECT_EQ(ds.size(), 20u);
  std::vector<int> seen(20, 0);
  for (auto* split : {&ds.train, &ds.val, &ds.test})
    for (std::size_t i : *split) ++seen[i];
  for (int c : seen) EXPECT_EQ(c, 1);
  EXPECT_NO_THROW(ds.validate());
}

TEST(Dataset, ValidateCatchesLeakage) {
  GraphPairDataset ds = build_dataset(small_recipe(4, 2, 2, 2));
  ds.val[0] = ds.train[0];
  EXPECT_THROW(ds.validate(), Error);
}

TEST(Dataset, IdentityFilterEnsembleCovariance) {
  DatasetRecipe r = small_recipe(3, 1, 1, 3);
  r.filter = FilterCoeffs{{1, 0, 0}};
  r.ensemble_covariance = true;
  const GraphPairDataset ds = build_dataset(r);
  for (const SymMatrix& o : ds.observations) EXPECT_EQ(o.matrix(), Matrix::identity(7));
}

TEST(Dataset, ObservationsNormalizedAndFilterUnit) {
  const GraphPairDataset ds = build_dataset(small_recipe(5, 2, 2, 4));
  double sq = 0;
  for (double v : ds.meta.filter.h) sq += v * v;
  EXPECT_NEAR(sq, 1.0, 1e-12);
  for (const SymMatrix& o : ds.observations) {
    const EigenPair e = sym_eig(o);
    EXPECT_NEAR(std::max(-e.values.front(), e.values.back()), 1.0, 1e-8);
  }
  EXPECT_EQ(ds.meta.observation_scale.size(), ds.size());
}

TEST(Dataset, DeterministicAndSeedSensitive) {
  const GraphPairDataset a = build_dataset(small_recipe(5, 2, 2, 5));
  EXPECT_EQ(a, build_dataset(small_recipe(5, 2, 2, 5)));
  EXPECT_FALSE(a == build_dataset(small_recipe(5, 2, 2, 6)));
}

TEST(Dataset, WeightedLatentsScaledByMaximum) {
  std::mt19937_64 rng(6);
  std::vector<Adjacency> lat;
  for (int k = 0; k < 6; ++k) {
    Matrix m = fdcheck::random_prior(5, rng) * 4.0;
    lat.emplace_back(m);
  }
  DatasetRecipe r = small_recipe(4, 1, 1, 7);
  r.ensemble.n = 5;
  const GraphPairDataset ds = build_dataset_from_latents(r, lat);
  EXPECT_TRUE(ds.meta.weighted_labels);
  double top = 0;
  for (const Adjacency& l : ds.labels) top = std::max(top, max_abs(l.weights()));
  EXPECT_DOUBLE_EQ(top, 1.0);
}

TEST(DatasetFile, RoundTripIsBitExact) {
  const GraphPairDataset ds = build_dataset(small_recipe(2, 1, 0, 8));
  const auto bytes = encode_dataset(ds);
  const GraphPairDataset back = decode_dataset(bytes);
  EXPECT_EQ(back, ds);
  EXPECT_EQ(encode_dataset(back), bytes);

  const fs::path p = temp_dir() / "ds.gdp";
  write_dataset(ds, p);
  EXPECT_EQ(read_dataset(p), ds);
  write_dataset(read_dataset(p), p);
  EXPECT_EQ(encode_dataset(read_dataset(p)), bytes);
}

TEST(DatasetFile, RegenerationFromMetadataMatchesFile) {
  const GraphPairDataset ds = build_dataset(small_recipe(3, 1, 1, 9));
  const GraphPairDataset back = decode_dataset(encode_dataset(ds));
  EXPECT_EQ(encode_dataset(build_dataset(back.meta.recipe)), encode_dataset(ds));
}

TEST(DatasetFile, PayloadCorruptionIsDetected) {
  const auto bytes = encode_dataset(build_dataset(small_recipe(2, 1, 0, 10)));
  auto bad = bytes;
  bad[40] ^= 0x01;
  EXPECT_THROW(decode_dataset(bad), ChecksumError);
}

TEST(DatasetFile, EverySingleByteCorruptionIsDetected) {
  const auto bytes = encode_dataset(build_dataset(small_recipe(2, 1, 1, 11)));
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<std::size_t> pos(0, bytes.size() - 1);
  std::uniform_int_distribution<int> flip(1, 255);
  for (int t = 0; t < 100; ++t) {
    auto bad = bytes;
    bad[pos(rng)] ^= static_cast<std::uint8_t>(flip(rng));
    EXPECT_THROW(decode_dataset(bad), IoError);
  }
}

TEST(DatasetFile, VersionAndTruncation) {
  auto bytes = encode_dataset(build_dataset(small_recipe(2, 1, 0, 13)));
  auto bumped = bytes;
  bumped[4] = static_cast<std::uint8_t>(kDatasetVersion + 1);
  try {
    decode_dataset(bumped);
    FAIL();
  } catch (const VersionError& e) {
    const std::string w = e.what();
    EXPECT_NE(w.find("unsupported version"), std::string::npos) << w;
    EXPECT_NE(w.find(std::to_string(kDatasetVersion + 1)), std::string::npos) << w;
    EXPECT_NE(w.find(std::to_string(kDatasetVersion)), std::string::npos) << w;
  }
  bytes.resize(bytes.size() / 2);
  EXPECT_THROW(decode_dataset(bytes), IoError);
  EXPECT_THROW(decode_dataset({}), IoError);
  EXPECT_THROW(read_dataset(temp_dir() / "missing.gdp"), IoError);
}

TEST(Checkpoint, RoundTripReproducesPredictions) {
  std::mt19937_64 rng(14);
  Rng r(3);
  const GdnParams p = init_params(Architecture{3, 4, false, PriorMode::learned}, r, fdcheck::random_prior(6, rng));
  const Checkpoint c{p, 0.1234567890123, Task::link, {1.5, 2.25}};
  const Checkpoint back = decode_checkpoint(encode_checkpoint(c));
  EXPECT_EQ(back.params, p);
  EXPECT_EQ(back.threshold, c.threshold);
  EXPECT_EQ(back.normalization, c.normalization);
  EXPECT_EQ(back.task, Task::link);
  const SymMatrix a_o = fdcheck::random_observation(6, rng);
  EXPECT_EQ(predict(a_o, back.params), predict(a_o, p));

  const fs::path path = temp_dir() / "ck.json";
  write_checkpoint(c, path);
  EXPECT_EQ(read_checkpoint(path, p.architecture()).params, p);
}

TEST(Checkpoint, SharedAndFormatTag) {
  Rng r(4);
  const GdnParams p = init_params(Architecture{5, 3, true, PriorMode::ones}, r);
  const std::string text = encode_checkpoint(Checkpoint{p, 0.5, Task::regress_mse, {}});
  EXPECT_NE(text.find(kCheckpointFormat), std::string::npos);
  const Checkpoint back = decode_checkpoint(text);
  EXPECT_EQ(back.params, p);
  EXPECT_EQ(back.task, Task::regress_mse);
}

TEST(Checkpoint, ArchitectureMismatch) {
  Rng r(5);
  const GdnParams p = init_params(Architecture{3, 2}, r);
  const std::string text = encode_checkpoint(Checkpoint{p, 0.0, Task::link, {}});
  EXPECT_THROW(decode_checkpoint(text, Architecture{4, 2}), ShapeError);
  EXPECT_THROW(decode_checkpoint("{\"format\":\"other\"}"), VersionError);
  EXPECT_THROW(decode_checkpoint("not json"), FormatError);
}

TEST(Reports, CsvColumns) {
  std::vector<EpochRecord> h{{0, 1.0, 0.5, 2.0, 0.0}, {1, 0.9, 0.4, 3.0, 0.1}};
  const std::string csv = history_csv(h);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "epoch,train_loss,val_metric,wall_ms,prior_grad_norm");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);

  EvalReport e;
  e.method = "GDN";
  const std::string rc = reports_csv({e});
  EXPECT_EQ(rc.substr(0, rc.find('\n')),
            "method,task,threshold,scale,error_mean,error_stderr,mse_mean,mse_stderr,mae_mean,mae_stderr,count");
}

TEST(Files, AtomicWriteLeavesNoTemp) {
  const fs::path d = temp_dir() / "atomic";
  fs::remove_all(d);
  write_file_atomic(d / "x.txt", "hello");
  write_file_atomic(d / "x.txt", "world");
  EXPECT_EQ(read_file(d / "x.txt"), "world");
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(d)) {
    (void)e;
    ++files;
  }
  EXPECT_EQ(files, 1u);
}
