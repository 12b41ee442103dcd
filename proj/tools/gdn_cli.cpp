// gdn: dataset generation, training, evaluation and the benchmark,
// ablation and size-sweep protocols from the command line.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "gdn/baselines.hpp"
#include "gdn/dataset.hpp"
#include "gdn/errors.hpp"
#include "gdn/experiments.hpp"
#include "gdn/io.hpp"
#include "gdn/training.hpp"

namespace fs = std::filesystem;
using namespace gdn;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON experiment config (desk RG defaults when omitted)");
  cmd->add_option("--seed", c.seed, "overrides dataset and training seeds");
  cmd->add_option("--out", c.out, "output directory")->capture_default_str();
}

ExperimentConfig load_config(const Common& c) {
  ExperimentConfig cfg = c.config.empty() ? desk_config() : parse_experiment_config(read_file(c.config));
  if (c.seed) {
    cfg.dataset.seed = *c.seed;
    cfg.train.seed = *c.seed;
  }
  return cfg;
}

GraphPairDataset dataset_for(const ExperimentConfig& cfg, const std::string& data_path) {
  if (!data_path.empty()) return read_dataset(data_path);
  return build_dataset(cfg.dataset);
}

void print_reports(const std::vector<EvalReport>& reports) {
  std::printf("%-14s %10s %10s %12s %12s\n", "method", "error", "+-", "mse", "mae");
  for (const auto& r : reports)
    std::printf("%-14s %10.4f %10.4f %12.6f %12.6f\n", r.method.c_str(), r.error.mean,
                r.error.std_error, r.mse.mean, r.mae.mean);
}

void print_benchmark(const BenchmarkReport& b) {
  std::printf("%-14s %10s %10s %12s %12s %8s\n", "method", "error", "+-", "mse", "mae", "repeats");
  for (const auto& m : b.methods)
    std::printf("%-14s %10.4f %10.4f %12.6f %12.6f %8zu\n", m.method.c_str(), m.error.mean,
                m.error.std_error, m.mse.mean, m.mae.mean, m.repeats.size());
}

void save_benchmark(const BenchmarkReport& b, const fs::path& out, const std::string& stem) {
  write_file_atomic(out / (stem + ".json"), benchmark_json(b));
  write_file_atomic(out / (stem + ".csv"), benchmark_csv(b));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph deconvolution networks: train, evaluate and benchmark"};
  app.require_subcommand(1);

  Common gen_c, train_c, eval_c, base_c, size_c, abl_c, bench_c;
  std::string train_data, eval_data, eval_ckpt, base_data, abl_kind = "prior";
  std::vector<std::size_t> sizes{20, 40, 60};
  std::size_t graphs = 200, seeds = 3, draws = 20, gc_n = 8, gc_depth = 3, gc_channels = 2;
  std::uint64_t gc_seed = 7;
  bool gc_shared = false;

  auto* gen = app.add_subcommand("generate", "synthesize a dataset file");
  add_common(gen, gen_c);

  auto* tr = app.add_subcommand("train", "train a GDN and write a checkpoint");
  add_common(tr, train_c);
  tr->add_option("--data", train_data, "dataset file (generated from the config when omitted)");

  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a dataset's test split");
  add_common(ev, eval_c);
  ev->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();
  ev->add_option("--data", eval_data, "dataset file (generated from the config when omitted)");

  auto* bl = app.add_subcommand("baseline", "run the classical baselines");
  add_common(bl, base_c);
  bl->add_option("--data", base_data, "dataset file (generated from the config when omitted)");

  auto* sg = app.add_subcommand("sizegen", "train at one size, test frozen at others");
  add_common(sg, size_c);
  sg->add_option("--sizes", sizes, "test graph sizes")->delimiter(',')->capture_default_str();
  sg->add_option("--graphs", graphs, "test graphs per size")->capture_default_str();

  auto* ab = app.add_subcommand("ablate", "prior or K=0 ablation");
  add_common(ab, abl_c);
  ab->add_option("--kind", abl_kind, "prior | k0")->check(CLI::IsMember({"prior", "k0"}));
  ab->add_option("--seeds", seeds, "dataset seeds for the prior ablation")->capture_default_str();

  auto* bm = app.add_subcommand("benchmark", "GDN, GDN-S and baselines over filter resamples");
  add_common(bm, bench_c);

  auto* gc = app.add_subcommand("gradcheck", "finite-difference check of backward()");
  gc->add_option("--seed", gc_seed)->capture_default_str();
  gc->add_option("--draws", draws)->capture_default_str();
  gc->add_option("--n", gc_n)->capture_default_str();
  gc->add_option("--depth", gc_depth)->capture_default_str();
  gc->add_option("--channels", gc_channels)->capture_default_str();
  gc->add_flag("--shared", gc_shared);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const ExperimentConfig cfg = load_config(gen_c);
      const GraphPairDataset ds = build_dataset(cfg.dataset);
      const fs::path path = fs::path(gen_c.out) / "dataset.gdp";
      write_dataset(ds, path);
      std::printf("wrote %zu samples (n=%zu) to %s\n", ds.size(), ds.n, path.string().c_str());
    } else if (*tr) {
      const ExperimentConfig cfg = load_config(train_c);
      const GraphPairDataset ds = dataset_for(cfg, train_data);
      const Matrix prior = resolve_prior(cfg, ds);
      const TrainResult res = train(ds, cfg.model, cfg.train, prior);
      const fs::path out(train_c.out);
      write_checkpoint(Checkpoint{res.params, res.threshold, cfg.train.task, ds.meta.observation_scale},
                       out / "checkpoint.json");
      write_file_atomic(out / "history.csv", history_csv(res.history));
      std::printf("best epoch %zu, validation metric %.6f, threshold %.6f\n", res.best_epoch,
                  res.best_val, res.threshold);
    } else if (*ev) {
      const ExperimentConfig cfg = load_config(eval_c);
      const GraphPairDataset ds = dataset_for(cfg, eval_data);
      const Checkpoint ck = read_checkpoint(eval_ckpt);
      const EvalReport r = evaluate_model("GDN", ck.task, ck.params, gather(ds.observations, ds.test),
                                          gather(ds.labels, ds.test), ck.threshold);
      const fs::path out(eval_c.out);
      write_file_atomic(out / "eval.json", reports_json({r}, true));
      write_file_atomic(out / "eval.csv", reports_csv({r}));
      print_reports({r});
    } else if (*bl) {
      const ExperimentConfig cfg = load_config(base_c);
      const GraphPairDataset ds = dataset_for(cfg, base_data);
      const auto reports = run_baselines(ds, cfg.baselines, cfg.train.task);
      const fs::path out(base_c.out);
      write_file_atomic(out / "baselines.json", reports_json(reports));
      write_file_atomic(out / "baselines.csv", reports_csv(reports));
      print_reports(reports);
    } else if (*sg) {
      ExperimentConfig cfg = load_config(size_c);
      const SizeGenReport r = run_size_generalization(cfg, sizes, graphs);
      const fs::path out(size_c.out);
      write_file_atomic(out / "size_curve.csv", size_curve_csv(r));
      write_file_atomic(out / "size_curve.json", size_curve_json(r));
      for (const auto& p : r.points)
        std::printf("n=%-5zu error %.4f +- %.4f\n", p.n, p.report.error.mean, p.report.error.std_error);
    } else if (*ab) {
      const ExperimentConfig cfg = load_config(abl_c);
      const BenchmarkReport b =
          abl_kind == "prior" ? run_prior_ablation(cfg, seeds) : run_k0_ablation(cfg);
      save_benchmark(b, abl_c.out, "ablation_" + abl_kind);
      print_benchmark(b);
    } else if (*bm) {
      const ExperimentConfig cfg = load_config(bench_c);
      const BenchmarkReport b = run_benchmark(cfg);
      save_benchmark(b, bench_c.out, "benchmark");
      print_benchmark(b);
    } else if (*gc) {
      const Architecture arch{gc_depth, gc_channels, gc_shared, PriorMode::learned, Variant::full};
      const GradCheckResult r = gradient_check(arch, gc_n, draws, gc_seed);
      std::printf("draws %zu (skipped %zu), comparisons %zu, max relative error %.3e\n", r.draws,
                  r.skipped_draws, r.checked, r.max_rel_error);
      return r.max_rel_error <= 1e-5 ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "gdn: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
