#include "gdn/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <sstream>

#include "gdn/errors.hpp"
#include "gdn/rng.hpp"
#include "json_codec.hpp"

namespace gdn {

using codec::json;

std::string to_string(PriorSource s) {
  switch (s) {
    case PriorSource::zeros: return "zeros";
    case PriorSource::block: return "block";
    case PriorSource::mean: return "mean";
  }
  return "?";
}

PriorSource prior_source_from_string(const std::string& s) {
  if (s == "zeros") return PriorSource::zeros;
  if (s == "block") return PriorSource::block;
  if (s == "mean") return PriorSource::mean;
  throw Error("unknown prior source '" + s + "'");
}

void ExperimentConfig::validate() const {
  dataset.ensemble.validate();
  train.validate();
  if (repeats < 1) throw Error("experiment: repeats must be >= 1");
  if (dataset.train == 0 || dataset.val == 0 || dataset.test == 0)
    throw Error("experiment: every split needs at least one sample");
  if (model.depth < 1 || model.channels < 1) throw Error("experiment: depth and channels must be >= 1");
}

EnsembleSpec domain_ensemble(EnsembleKind kind, std::size_t n) {
  EnsembleSpec s;
  s.kind = kind;
  s.n = n;
  switch (kind) {
    case EnsembleKind::ER:
      s.p = 0.56;
      s.density_lo = 0.5;
      s.density_hi = 0.6;
      break;
    case EnsembleKind::RG:
      s.dim = 2;
      s.radius = 0.56;
      s.density_lo = 0.5;
      s.density_hi = 0.6;
      break;
    case EnsembleKind::BA: {
      // m = 15 at n = 68, scaled linearly for other sizes.
      const double m = std::round(15.0 * static_cast<double>(n) / 68.0);
      s.m = static_cast<std::size_t>(std::clamp(m, 1.0, static_cast<double>(n - 1)));
      s.density_lo = 0.3;
      s.density_hi = 0.4;
      break;
    }
    case EnsembleKind::SBM:
      s.blocks = 3;
      s.p_in = 0.6;
      s.p_out = 0.1;
      s.density_lo = 0.0;
      s.density_hi = 1.0;
      break;
  }
  return s;
}

ExperimentConfig desk_config(EnsembleKind kind) {
  ExperimentConfig c;
  c.dataset.ensemble = domain_ensemble(kind, kind == EnsembleKind::SBM ? 21 : 20);
  c.dataset.train = 300;
  c.dataset.val = 100;
  c.dataset.test = 100;
  c.dataset.filter_order = 2;
  c.dataset.signals = 50;
  c.dataset.seed = 1;
  c.model = Architecture{8, 8, false, PriorMode::zeros, Variant::full};
  c.train.seed = 1;
  return c;
}

ExperimentConfig full_scale_config(EnsembleKind kind) {
  ExperimentConfig c = desk_config(kind);
  c.dataset.ensemble = domain_ensemble(kind, kind == EnsembleKind::SBM ? 69 : 68);
  c.dataset.train = 913;
  c.dataset.val = 500;
  c.dataset.test = 500;
  return c;
}

namespace {

json encode_baselines(const BaselineConfig& b) {
  return json{{"threshold", b.threshold},
              {"nd", b.nd},
              {"glasso", b.glasso},
              {"lsopt", b.lsopt},
              {"nd_mode", to_string(b.nd_options.mode)},
              {"nd_rescale", b.nd_options.rescale},
              {"nd_eig_margin", b.nd_options.eig_margin},
              {"glasso_alphas", b.glasso_alphas},
              {"glasso_tol", b.glasso_tol},
              {"glasso_max_iter", b.glasso_max_iter},
              {"lsopt_steps", b.lsopt_steps},
              {"lsopt_lambdas", b.lsopt_lambdas},
              {"lsopt_iters", b.lsopt_iters},
              {"lsopt_ridge", b.lsopt_ridge},
              {"lsopt_adam", b.lsopt_adam},
              {"tune_samples", b.tune_samples}};
}

BaselineConfig decode_baselines(const json& j, BaselineConfig b) {
  using codec::get_or;
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!encode_baselines(b).contains(it.key()))
      throw FormatError("baselines: unknown key '" + it.key() + "'");
  b.threshold = get_or(j, "threshold", b.threshold);
  b.nd = get_or(j, "nd", b.nd);
  b.glasso = get_or(j, "glasso", b.glasso);
  b.lsopt = get_or(j, "lsopt", b.lsopt);
  if (j.contains("nd_mode")) b.nd_options.mode = nd_mode_from_string(j["nd_mode"].get<std::string>());
  b.nd_options.rescale = get_or(j, "nd_rescale", b.nd_options.rescale);
  b.nd_options.eig_margin = get_or(j, "nd_eig_margin", b.nd_options.eig_margin);
  b.glasso_alphas = get_or(j, "glasso_alphas", b.glasso_alphas);
  b.glasso_tol = get_or(j, "glasso_tol", b.glasso_tol);
  b.glasso_max_iter = get_or(j, "glasso_max_iter", b.glasso_max_iter);
  b.lsopt_steps = get_or(j, "lsopt_steps", b.lsopt_steps);
  b.lsopt_lambdas = get_or(j, "lsopt_lambdas", b.lsopt_lambdas);
  b.lsopt_iters = get_or(j, "lsopt_iters", b.lsopt_iters);
  b.lsopt_ridge = get_or(j, "lsopt_ridge", b.lsopt_ridge);
  b.lsopt_adam = get_or(j, "lsopt_adam", b.lsopt_adam);
  b.tune_samples = get_or(j, "tune_samples", b.tune_samples);
  return b;
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("config: not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw FormatError("config: expected a JSON object");
  static const char* keys[] = {"domain", "scale", "dataset", "model", "train", "prior_source",
                               "repeats", "run_gdn", "run_gdn_shared", "run_k0", "baselines"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find_if(std::begin(keys), std::end(keys), [&](const char* k) { return it.key() == k; }) ==
        std::end(keys))
      throw FormatError("config: unknown key '" + it.key() + "'");

  try {
    const EnsembleKind kind = ensemble_kind_from_string(codec::get_or<std::string>(j, "domain", "RG"));
    const std::string scale = codec::get_or<std::string>(j, "scale", "desk");
    if (scale != "desk" && scale != "full") throw FormatError("config: scale must be desk or full");
    ExperimentConfig c = scale == "full" ? full_scale_config(kind) : desk_config(kind);
    if (j.contains("dataset")) c.dataset = codec::decode_recipe(j["dataset"], c.dataset);
    if (j.contains("model")) c.model = codec::decode_architecture(j["model"], c.model);
    if (j.contains("train")) c.train = codec::decode_train_config(j["train"], c.train);
    if (j.contains("prior_source"))
      c.prior_source = prior_source_from_string(j["prior_source"].get<std::string>());
    c.repeats = codec::get_or(j, "repeats", c.repeats);
    c.run_gdn = codec::get_or(j, "run_gdn", c.run_gdn);
    c.run_gdn_shared = codec::get_or(j, "run_gdn_shared", c.run_gdn_shared);
    c.run_k0 = codec::get_or(j, "run_k0", c.run_k0);
    if (j.contains("baselines")) c.baselines = decode_baselines(j["baselines"], c.baselines);
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
}

std::string experiment_config_json(const ExperimentConfig& c) {
  json j{{"domain", to_string(c.dataset.ensemble.kind)},
         {"dataset", codec::encode(c.dataset)},
         {"model", codec::encode(c.model)},
         {"train", codec::encode(c.train)},
         {"prior_source", to_string(c.prior_source)},
         {"repeats", c.repeats},
         {"run_gdn", c.run_gdn},
         {"run_gdn_shared", c.run_gdn_shared},
         {"run_k0", c.run_k0},
         {"baselines", encode_baselines(c.baselines)}};
  return j.dump(2);
}

std::uint64_t repeat_seed(std::uint64_t seed, std::size_t r) {
  Rng rng = child_rng(seed, streams::kRepeat, r);
  return rng();
}

Matrix resolve_prior(const ExperimentConfig& cfg, const GraphPairDataset& ds) {
  if (cfg.model.prior_mode != PriorMode::fixed && cfg.model.prior_mode != PriorMode::learned)
    return {};
  switch (cfg.prior_source) {
    case PriorSource::zeros: return Matrix(ds.n, ds.n);
    case PriorSource::block: return block_diagonal(ds.n, cfg.dataset.ensemble.blocks).weights();
    case PriorSource::mean: return mean_training_label(ds);
  }
  throw Error("resolve_prior: unknown prior source");
}

const MethodResult& BenchmarkReport::method(const std::string& name) const {
  for (const auto& m : methods)
    if (m.method == name) return m;
  throw Error("benchmark report has no method '" + name + "'");
}

MethodResult aggregate(const std::string& method, std::vector<EvalReport> repeats) {
  MethodResult r;
  r.method = method;
  std::vector<double> e, s, a, pe, ps, pa;
  for (const auto& rep : repeats) {
    e.push_back(rep.error.mean);
    s.push_back(rep.mse.mean);
    a.push_back(rep.mae.mean);
    for (const auto& m : rep.samples) {
      pe.push_back(m.error);
      ps.push_back(m.mse);
      pa.push_back(m.mae);
    }
  }
  r.error = summarize(e);
  r.mse = summarize(s);
  r.mae = summarize(a);
  r.sample_error = summarize(pe);
  r.sample_mse = summarize(ps);
  r.sample_mae = summarize(pa);
  r.repeats = std::move(repeats);
  return r;
}

namespace {

template <class F>
auto staged(const std::string& stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const std::exception& e) {
    throw Error("[" + stage + "] " + e.what());
  }
}

struct Scored {
  std::vector<Adjacency> val;
  std::vector<Adjacency> test;
};

// Threshold (link) or scale + threshold (regression) tuned on validation.
EvalReport finish(const std::string& method, Task task, const Scored& sc,
                  const std::vector<Adjacency>& val_labels, const std::vector<Adjacency>& test_labels) {
  if (task == Task::link) {
    const double t = tune_threshold(sc.val, val_labels).t;
    return evaluate_predictions(method, task, sc.test, test_labels, t);
  }
  const double s = tune_scale(sc.val, val_labels, task);
  const double t = tune_threshold(scaled(sc.val, s), val_labels).t;
  EvalReport r = evaluate_predictions(method, task, scaled(sc.test, s), test_labels, t);
  r.scale = s;
  return r;
}

// Validation criterion used to pick baseline hyperparameters.
double selection_score(Task task, const std::vector<Adjacency>& scores,
                       const std::vector<Adjacency>& labels) {
  if (task == Task::link) return tune_threshold(scores, labels).error;
  const double s = tune_scale(scores, labels, task);
  const EvalReport r = evaluate_predictions("", task, scaled(scores, s), labels, 0.5);
  return task == Task::regress_mse ? r.mse.mean : r.mae.mean;
}

std::vector<Adjacency> map_scores(const std::vector<SymMatrix>& obs,
                                  const std::function<Adjacency(const SymMatrix&)>& f) {
  std::vector<Adjacency> out;
  out.reserve(obs.size());
  for (const auto& o : obs) out.push_back(f(o));
  return out;
}

SymMatrix glasso_input(const SymMatrix& a_o) {
  return normalize_observation(covariance_to_correlation(a_o));
}

}  // namespace

std::vector<EvalReport> run_baselines(const GraphPairDataset& ds, const BaselineConfig& bc, Task task) {
  const auto val_obs = gather(ds.observations, ds.val);
  const auto val_lab = gather(ds.labels, ds.val);
  const auto test_obs = gather(ds.observations, ds.test);
  const auto test_lab = gather(ds.labels, ds.test);
  const std::size_t nt = std::min(bc.tune_samples == 0 ? val_obs.size() : bc.tune_samples, val_obs.size());
  const std::vector<SymMatrix> tune_obs(val_obs.begin(), val_obs.begin() + static_cast<std::ptrdiff_t>(nt));
  const std::vector<Adjacency> tune_lab(val_lab.begin(), val_lab.begin() + static_cast<std::ptrdiff_t>(nt));

  std::vector<EvalReport> out;
  auto run = [&](const std::string& name, const std::function<Adjacency(const SymMatrix&)>& f) {
    Scored sc{map_scores(val_obs, f), map_scores(test_obs, f)};
    out.push_back(finish(name, task, sc, val_lab, test_lab));
  };

  if (bc.threshold)
    staged("Threshold", [&] { run("Threshold", [](const SymMatrix& o) { return score_matrix(o); }); });
  if (bc.nd)
    staged("ND", [&] {
      run("ND", [&](const SymMatrix& o) { return score_matrix(network_deconvolution(o, bc.nd_options)); });
    });
  if (bc.glasso)
    staged("GLASSO", [&] {
      if (bc.glasso_alphas.empty()) throw Error("empty alpha grid");
      auto est = [&](double alpha) {
        return [&, alpha](const SymMatrix& o) {
          return score_matrix(glasso(glasso_input(o), alpha, bc.glasso_tol, bc.glasso_max_iter).precision);
        };
      };
      double best = std::numeric_limits<double>::infinity(), best_alpha = bc.glasso_alphas.front();
      for (double alpha : bc.glasso_alphas) {
        const double v = selection_score(task, map_scores(tune_obs, est(alpha)), tune_lab);
        if (v < best) {
          best = v;
          best_alpha = alpha;
        }
      }
      run("GLASSO", est(best_alpha));
    });
  if (bc.lsopt)
    staged("LSOpt", [&] {
      const auto tr_obs = gather(ds.observations, ds.train);
      const auto tr_lab = gather(ds.labels, ds.train);
      // Sample covariances are quadratic in the filter: fit twice the order.
      const std::size_t order = 2 * std::max<std::size_t>(ds.meta.filter.order(), 1);
      const FilterCoeffs h = lsopt_fit_coeffs(tr_obs, tr_lab, order, bc.lsopt_ridge);
      auto est = [&](LsoptOptions o) {
        return [&, o](const SymMatrix& a) { return lsopt_solve(a, h, o).estimate; };
      };
      double best = std::numeric_limits<double>::infinity();
      LsoptOptions chosen;
      bool found = false;
      for (double step : bc.lsopt_steps)
        for (double lambda : bc.lsopt_lambdas) {
          LsoptOptions o{lambda, step, bc.lsopt_iters, bc.lsopt_adam, 0.01};
          try {
            const double v = selection_score(task, map_scores(tune_obs, est(o)), tune_lab);
            if (v < best) {
              best = v;
              chosen = o;
              found = true;
            }
          } catch (const DivergenceError&) {
            // this grid point diverges; try the next
          }
        }
      if (!found) throw DivergenceError("every step/lambda grid point diverged");
      run("LSOpt", est(chosen));
    });
  return out;
}

namespace {

struct TrainedEval {
  EvalReport report;
  TrainResult result;
};

TrainedEval train_and_eval(const std::string& name, const GraphPairDataset& ds,
                           const ExperimentConfig& cfg, Architecture arch, std::size_t r) {
  TrainConfig tc = cfg.train;
  tc.seed = repeat_seed(cfg.train.seed, r);
  ExperimentConfig pc = cfg;
  pc.model = arch;
  const Matrix prior = resolve_prior(pc, ds);
  TrainedEval out;
  out.result = train(ds, arch, tc, prior);
  out.report = evaluate_model(name, tc.task, out.result.params, gather(ds.observations, ds.test),
                              gather(ds.labels, ds.test), out.result.threshold);
  return out;
}

DatasetRecipe repeat_recipe(const ExperimentConfig& cfg, std::size_t r) {
  DatasetRecipe rec = cfg.dataset;
  rec.seed = repeat_seed(cfg.dataset.seed, r);
  return rec;
}

struct Collector {
  std::vector<std::string> order;
  std::vector<std::vector<EvalReport>> reports;
  std::vector<std::vector<std::vector<EpochRecord>>> histories;

  std::size_t slot(const std::string& name) {
    auto it = std::find(order.begin(), order.end(), name);
    if (it != order.end()) return static_cast<std::size_t>(it - order.begin());
    order.push_back(name);
    reports.emplace_back();
    histories.emplace_back();
    return order.size() - 1;
  }
  void add(EvalReport r) {
    const std::size_t k = slot(r.method);
    reports[k].push_back(std::move(r));
  }
  void add(TrainedEval t) {
    const std::size_t k = slot(t.report.method);
    reports[k].push_back(std::move(t.report));
    histories[k].push_back(std::move(t.result.history));
  }
  std::vector<MethodResult> finish() {
    std::vector<MethodResult> out;
    for (std::size_t k = 0; k < order.size(); ++k) {
      out.push_back(aggregate(order[k], std::move(reports[k])));
      out.back().histories = std::move(histories[k]);
    }
    return out;
  }
};

}  // namespace

BenchmarkReport run_benchmark(const ExperimentConfig& cfg) {
  cfg.validate();
  Collector col;
  for (std::size_t r = 0; r < cfg.repeats; ++r) {
    const GraphPairDataset ds = staged("dataset", [&] { return build_dataset(repeat_recipe(cfg, r)); });
    if (cfg.run_gdn) {
      Architecture a = cfg.model;
      a.shared = false;
      a.variant = Variant::full;
      col.add(staged("GDN", [&] { return train_and_eval("GDN", ds, cfg, a, r); }));
    }
    if (cfg.run_gdn_shared) {
      Architecture a = cfg.model;
      a.shared = true;
      a.variant = Variant::full;
      col.add(staged("GDN-S", [&] { return train_and_eval("GDN-S", ds, cfg, a, r); }));
    }
    if (cfg.run_k0) {
      Architecture a = cfg.model;
      a.shared = false;
      a.variant = Variant::no_linear;
      col.add(staged("GDN-K0", [&] { return train_and_eval("GDN-K0", ds, cfg, a, r); }));
    }
    for (auto& rep : run_baselines(ds, cfg.baselines, cfg.train.task)) col.add(std::move(rep));
  }
  BenchmarkReport out;
  out.domain = to_string(cfg.dataset.ensemble.kind);
  out.task = cfg.train.task;
  out.methods = col.finish();
  return out;
}

BenchmarkReport run_k0_ablation(const ExperimentConfig& cfg) {
  ExperimentConfig c = cfg;
  c.run_gdn = true;
  c.run_gdn_shared = false;
  c.run_k0 = true;
  c.baselines.threshold = c.baselines.nd = c.baselines.glasso = c.baselines.lsopt = false;
  return run_benchmark(c);
}

BenchmarkReport run_prior_ablation(const ExperimentConfig& cfg, std::size_t seeds) {
  cfg.validate();
  if (seeds < 1) throw Error("prior ablation: need at least one seed");
  struct Mode {
    const char* name;
    PriorMode mode;
  };
  const Mode modes[] = {{"prior-zeros", PriorMode::zeros},
                        {"prior-ones", PriorMode::ones},
                        {"prior-block", PriorMode::fixed},
                        {"prior-learned", PriorMode::learned}};
  Collector col;
  for (std::size_t r = 0; r < seeds; ++r) {
    const GraphPairDataset ds = staged("dataset", [&] { return build_dataset(repeat_recipe(cfg, r)); });
    for (const Mode& m : modes) {
      ExperimentConfig c = cfg;
      c.model.shared = false;
      c.model.variant = Variant::full;
      c.model.prior_mode = m.mode;
      if (m.mode == PriorMode::fixed) c.prior_source = PriorSource::block;
      col.add(staged(m.name, [&] { return train_and_eval(m.name, ds, c, c.model, r); }));
    }
  }
  BenchmarkReport out;
  out.domain = to_string(cfg.dataset.ensemble.kind);
  out.task = cfg.train.task;
  out.methods = col.finish();
  return out;
}

SizeGenReport run_size_generalization(const ExperimentConfig& cfg,
                                      const std::vector<std::size_t>& test_sizes,
                                      std::size_t graphs_per_size) {
  cfg.validate();
  if (test_sizes.empty()) throw Error("size generalization: no test sizes");
  if (graphs_per_size < 1) throw Error("size generalization: graphs_per_size must be >= 1");
  if (cfg.model.prior_mode == PriorMode::fixed || cfg.model.prior_mode == PriorMode::learned)
    throw Error("size generalization needs a size-free prior (zeros or ones)");
  ExperimentConfig c = cfg;
  c.dataset.ensemble_covariance = true;

  SizeGenReport out;
  out.train_n = c.dataset.ensemble.n;
  const GraphPairDataset ds = staged("dataset", [&] { return build_dataset(repeat_recipe(c, 0)); });
  const std::string name = c.model.shared ? "GDN-S" : "GDN";
  TrainedEval te = staged("train", [&] { return train_and_eval(name, ds, c, c.model, 0); });
  out.threshold = te.result.threshold;
  out.history = te.result.history;

  for (std::size_t n : test_sizes) {
    SizePoint pt;
    pt.n = n;
    if (n == out.train_n) {
      pt.report = te.report;
    } else {
      pt.report = staged("size " + std::to_string(n), [&] {
        DatasetRecipe rec = repeat_recipe(c, 0);
        rec.ensemble.n = n;
        rec.train = rec.val = 0;
        rec.test = graphs_per_size;
        rec.filter = ds.meta.filter;
        Rng rng = child_rng(rec.seed, streams::kSizeGen, n);
        rec.seed = rng();
        const GraphPairDataset big = build_dataset(rec);
        return evaluate_model(name, c.train.task, te.result.params, big.observations, big.labels,
                              out.threshold);
      });
    }
    out.points.push_back(std::move(pt));
  }
  return out;
}

namespace {

// Smallest distance of any pre-activation to its ReLU kink or of the
// normalizing max to a competing entry, over the whole pass.
double kink_margin(const Tape& tape, const GdnParams& p) {
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < tape.layers.size(); ++k) {
    const LayerTape& lt = tape.layers[k];
    const LayerParams& lp = p.layer(k);
    for (std::size_t j = 0; j < lt.normalized.size(); ++j) {
      const Matrix& u = lt.normalized[j];
      const std::size_t n = u.rows();
      const std::size_t ar = lt.anchor[j] / n, ac = lt.anchor[j] % n;
      const double top = std::abs(u.values()[lt.anchor[j]]);
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) {
          if (a == b) continue;
          margin = std::min(margin, std::abs(u(a, b) - lp.tau[j]));
          const bool twin = (a == ar && b == ac) || (a == ac && b == ar);
          if (lt.divided[j] && !twin) margin = std::min(margin, top - std::abs(u(a, b)));
        }
    }
  }
  return margin;
}

}  // namespace

GradCheckResult gradient_check(const Architecture& arch_in, std::size_t n, std::size_t draws,
                               std::uint64_t seed, double step) {
  Architecture arch = arch_in;
  arch.prior_mode = PriorMode::learned;
  GradCheckResult res;
  for (std::size_t d = 0; d < draws; ++d) {
    Rng rng = child_rng(seed, streams::kInit, d);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    Matrix prior(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) prior(i, j) = prior(j, i) = u01(rng);
    GdnParams p = init_params(arch, rng, prior);
    for (auto& l : p.layers)
      for (double& t : l.tau) t = 0.3 * u01(rng);

    EnsembleSpec spec = domain_ensemble(EnsembleKind::ER, n);
    spec.density_lo = 0.0;
    spec.density_hi = 1.0;
    spec.require_connected = false;
    const Adjacency g = sample_constrained(spec, rng);
    const FilterCoeffs h = sample_unit_sphere_coeffs(2, rng);
    const SymMatrix a_o = normalize_observation(sample_covariance(diffuse_white(g, h, 50, rng)));
    Matrix w(n, n);
    for (double& v : w.values()) v = u01(rng) - 0.5;

    ++res.draws;
    const ForwardResult fr = forward(a_o, p);
    if (kink_margin(fr.tape, p) < 1e-7) {
      ++res.skipped_draws;
      continue;
    }
    const std::vector<double> an = flatten(backward(fr.tape, p, w), p);
    std::vector<double> theta = flatten(p);
    const std::size_t prior_at = theta.size() - (n * n);
    auto loss_at = [&](const std::vector<double>& th) {
      GdnParams q = p;
      unflatten(th, q);
      return inner(predict(a_o, q).weights(), w);
    };
    auto rel = [](double a, double b) {
      return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-4});
    };
    for (std::size_t k = 0; k < prior_at; ++k) {
      std::vector<double> up = theta, dn = theta;
      up[k] += step;
      dn[k] -= step;
      const double fd = (loss_at(up) - loss_at(dn)) / (2.0 * step);
      res.max_rel_error = std::max(res.max_rel_error, rel(fd, an[k]));
      ++res.checked;
    }
    // The prior is symmetric: perturb (i, j) and (j, i) together.
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        std::vector<double> up = theta, dn = theta;
        for (std::size_t idx : {prior_at + i * n + j, prior_at + j * n + i}) {
          up[idx] += step;
          dn[idx] -= step;
        }
        const double fd = (loss_at(up) - loss_at(dn)) / (2.0 * step);
        const double a = an[prior_at + i * n + j] + an[prior_at + j * n + i];
        res.max_rel_error = std::max(res.max_rel_error, rel(fd, a));
        ++res.checked;
      }
  }
  return res;
}

namespace {

json encode_history(const std::vector<EpochRecord>& h) {
  json a = json::array();
  for (const auto& e : h)
    a.push_back({{"epoch", e.epoch},
                 {"train_loss", e.train_loss},
                 {"val_metric", e.val_metric},
                 {"wall_ms", e.wall_ms},
                 {"prior_grad_norm", e.prior_grad_norm}});
  return a;
}

}  // namespace

std::string benchmark_json(const BenchmarkReport& r) {
  json methods = json::array();
  for (const auto& m : r.methods) {
    json reps = json::array();
    for (const auto& rep : m.repeats) reps.push_back(codec::encode(rep, false));
    json hist = json::array();
    for (const auto& h : m.histories) hist.push_back(encode_history(h));
    methods.push_back({{"method", m.method},
                       {"error", codec::encode(m.error)},
                       {"mse", codec::encode(m.mse)},
                       {"mae", codec::encode(m.mae)},
                       {"sample_error", codec::encode(m.sample_error)},
                       {"sample_mse", codec::encode(m.sample_mse)},
                       {"sample_mae", codec::encode(m.sample_mae)},
                       {"repeats", std::move(reps)},
                       {"histories", std::move(hist)}});
  }
  return json{{"domain", r.domain}, {"task", to_string(r.task)}, {"methods", std::move(methods)}}.dump(2);
}

std::string benchmark_csv(const BenchmarkReport& r) {
  std::ostringstream os;
  os << std::setprecision(10);
  os << "domain,task,method,error_mean,error_stderr,mse_mean,mse_stderr,mae_mean,mae_stderr,"
        "repeats,sample_error_stderr,sample_mse_stderr,sample_mae_stderr\n";
  for (const auto& m : r.methods)
    os << r.domain << ',' << to_string(r.task) << ',' << m.method << ',' << m.error.mean << ','
       << m.error.std_error << ',' << m.mse.mean << ',' << m.mse.std_error << ',' << m.mae.mean
       << ',' << m.mae.std_error << ',' << m.repeats.size() << ',' << m.sample_error.std_error
       << ',' << m.sample_mse.std_error << ',' << m.sample_mae.std_error << '\n';
  return os.str();
}

std::string size_curve_csv(const SizeGenReport& r) {
  std::ostringstream os;
  os << std::setprecision(10);
  os << "n,error_mean,error_stderr,mse_mean,mse_stderr,mae_mean,mae_stderr,count\n";
  for (const auto& p : r.points)
    os << p.n << ',' << p.report.error.mean << ',' << p.report.error.std_error << ','
       << p.report.mse.mean << ',' << p.report.mse.std_error << ',' << p.report.mae.mean << ','
       << p.report.mae.std_error << ',' << p.report.error.count << '\n';
  return os.str();
}

std::string size_curve_json(const SizeGenReport& r) {
  json pts = json::array();
  for (const auto& p : r.points) pts.push_back({{"n", p.n}, {"report", codec::encode(p.report, false)}});
  return json{{"train_n", r.train_n},
              {"threshold", r.threshold},
              {"points", std::move(pts)},
              {"history", encode_history(r.history)}}
      .dump(2);
}

}  // namespace gdn
