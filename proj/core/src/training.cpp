#include "gdn/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "gdn/errors.hpp"
#include "gdn/rng.hpp"

namespace gdn {

std::string to_string(Task t) {
  switch (t) {
    case Task::link: return "link";
    case Task::regress_mse: return "regress-mse";
    case Task::regress_mae: return "regress-mae";
  }
  return "?";
}

Task task_from_string(const std::string& s) {
  if (s == "link") return Task::link;
  if (s == "regress-mse" || s == "regress_mse" || s == "mse") return Task::regress_mse;
  if (s == "regress-mae" || s == "regress_mae" || s == "mae") return Task::regress_mae;
  throw Error("unknown task '" + s + "'");
}

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw Error("TrainConfig: lr must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw Error("TrainConfig: beta1 and beta2 must lie in [0, 1)");
  if (!(eps > 0.0)) throw Error("TrainConfig: eps must be > 0");
  if (batch_size < 1) throw Error("TrainConfig: batch_size must be >= 1");
  if (!(hinge_margin >= 0.0)) throw Error("TrainConfig: hinge_margin must be >= 0");
}

namespace {

void check_pair(const Adjacency& pred, const Adjacency& label, const char* who) {
  if (pred.n() != label.n()) {
    std::ostringstream os;
    os << who << ": prediction is " << pred.n() << " nodes, label is " << label.n();
    throw ShapeError(os.str());
  }
}

}  // namespace

LossValue hinge_loss(const Adjacency& pred, const Adjacency& label, double margin) {
  check_pair(pred, label, "hinge_loss");
  if (!(margin >= 0.0)) throw Error("hinge_loss: margin must be >= 0");
  const std::size_t n = pred.n();
  LossValue r{0.0, Matrix(n, n)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double p = pred(i, j);
      if (label(i, j) > 0.0) {
        const double z = 1.0 - margin - p;
        if (z > 0.0) {
          r.value += z;
          r.grad(i, j) = -1.0;
        }
      } else {
        const double z = p - margin;
        if (z > 0.0) {
          r.value += z;
          r.grad(i, j) = 1.0;
        }
      }
    }
  }
  return r;
}

LossValue mse_loss(const Adjacency& pred, const Adjacency& label) {
  check_pair(pred, label, "mse_loss");
  const std::size_t n = pred.n();
  LossValue r{0.0, Matrix(n, n)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double d = pred(i, j) - label(i, j);
      r.value += 0.5 * d * d;
      r.grad(i, j) = d;
    }
  }
  return r;
}

LossValue mae_loss(const Adjacency& pred, const Adjacency& label) {
  check_pair(pred, label, "mae_loss");
  const std::size_t n = pred.n();
  LossValue r{0.0, Matrix(n, n)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double d = pred(i, j) - label(i, j);
      r.value += std::abs(d);
      r.grad(i, j) = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
    }
  }
  return r;
}

LossValue task_loss(Task task, const Adjacency& pred, const Adjacency& label, double margin) {
  switch (task) {
    case Task::link: return hinge_loss(pred, label, margin);
    case Task::regress_mse: return mse_loss(pred, label);
    case Task::regress_mae: return mae_loss(pred, label);
  }
  throw Error("task_loss: unknown task");
}

void adam_update(std::span<double> params, std::span<const double> grads, AdamState& state,
                 double lr, double beta1, double beta2, double eps) {
  if (params.size() != grads.size()) throw ShapeError("adam_update: size mismatch");
  for (std::size_t k = 0; k < grads.size(); ++k) {
    if (!std::isfinite(grads[k])) {
      std::ostringstream os;
      os << "adam: non-finite gradient at flat index " << k << " (step " << state.step + 1 << ")";
      throw DivergenceError(os.str());
    }
  }
  if (state.m.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  if (state.m.size() != params.size()) throw ShapeError("adam_update: state size mismatch");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(beta1, t);
  const double c2 = 1.0 - std::pow(beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    state.m[k] = beta1 * state.m[k] + (1.0 - beta1) * grads[k];
    state.v[k] = beta2 * state.v[k] + (1.0 - beta2) * grads[k] * grads[k];
    const double mh = state.m[k] / c1;
    const double vh = state.v[k] / c2;
    params[k] -= lr * mh / (std::sqrt(vh) + eps);
  }
}

void adam_step(GdnParams& params, const GdnGrads& grads, AdamState& state, const TrainConfig& cfg) {
  std::vector<double> flat = flatten(params);
  const std::vector<double> g = flatten(grads, params);
  adam_update(flat, g, state, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);
  unflatten(flat, params);
  project(params);
}

Adjacency binarize(const Adjacency& pred, double t) {
  const std::size_t n = pred.n();
  Matrix b(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && pred(i, j) >= t) b(i, j) = 1.0;
  return Adjacency(std::move(b));
}

double link_error(const Adjacency& pred_binary, const Adjacency& label) {
  check_pair(pred_binary, label, "link_error");
  const std::size_t n = label.n();
  if (n < 2) throw Error("link_error: need at least 2 nodes");
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if ((pred_binary(i, j) > 0.0) != (label(i, j) > 0.0)) ++wrong;
  return static_cast<double>(wrong) / (0.5 * static_cast<double>(n * (n - 1)));
}

double link_error_at(const std::vector<Adjacency>& preds, const std::vector<Adjacency>& labels,
                     double t) {
  if (preds.size() != labels.size()) throw ShapeError("link_error_at: list sizes differ");
  if (preds.empty()) throw Error("link_error_at: empty input");
  std::size_t wrong = 0, total = 0;
  for (std::size_t s = 0; s < preds.size(); ++s) {
    check_pair(preds[s], labels[s], "link_error_at");
    const std::size_t n = preds[s].n();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        if ((preds[s](i, j) >= t) != (labels[s](i, j) > 0.0)) ++wrong;
        ++total;
      }
  }
  if (total == 0) throw Error("link_error_at: no node pairs");
  return static_cast<double>(wrong) / static_cast<double>(total);
}

ThresholdChoice tune_threshold(const std::vector<Adjacency>& preds,
                               const std::vector<Adjacency>& labels) {
  if (preds.empty()) throw Error("tune_threshold: empty input");
  if (preds.size() != labels.size()) throw ShapeError("tune_threshold: list sizes differ");
  std::vector<double> pos, neg;
  for (std::size_t s = 0; s < preds.size(); ++s) {
    check_pair(preds[s], labels[s], "tune_threshold");
    const std::size_t n = preds[s].n();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        (labels[s](i, j) > 0.0 ? pos : neg).push_back(preds[s](i, j));
  }
  const std::size_t total = pos.size() + neg.size();
  if (total == 0) throw Error("tune_threshold: no node pairs");
  std::sort(pos.begin(), pos.end());
  std::sort(neg.begin(), neg.end());

  std::vector<double> values(pos);
  values.insert(values.end(), neg.begin(), neg.end());
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());

  std::vector<double> cand{0.0};
  for (std::size_t k = 0; k + 1 < values.size(); ++k)
    cand.push_back(0.5 * (values[k] + values[k + 1]));
  const double top = values.back();
  cand.push_back(top + 1e-9 * (1.0 + std::abs(top)));
  std::sort(cand.begin(), cand.end());

  ThresholdChoice best{0.0, 2.0};
  for (double t : cand) {
    // Edges below t are missed, non-edges at or above t are false alarms.
    const auto missed = std::lower_bound(pos.begin(), pos.end(), t) - pos.begin();
    const auto alarms = neg.end() - std::lower_bound(neg.begin(), neg.end(), t);
    const double err = static_cast<double>(missed + alarms) / static_cast<double>(total);
    if (err < best.error) best = {t, err};
  }
  return best;
}

MetricSummary summarize(std::span<const double> values) {
  MetricSummary s;
  s.count = values.size();
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(s.count);
  s.min = *std::min_element(values.begin(), values.end());
  s.max = *std::max_element(values.begin(), values.end());
  if (s.count > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    const double sd = std::sqrt(ss / static_cast<double>(s.count - 1));
    s.std_error = sd / std::sqrt(static_cast<double>(s.count));
  }
  // Guard the mean against rounding just outside [min, max].
  s.mean = std::clamp(s.mean, s.min, s.max);
  return s;
}

SampleMetrics sample_metrics(const Adjacency& pred, const Adjacency& label, double t) {
  check_pair(pred, label, "sample_metrics");
  const std::size_t n = pred.n();
  SampleMetrics m;
  m.error = link_error(binarize(pred, t), label);
  double se = 0.0, ae = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = pred(i, j) - label(i, j);
      se += d * d;
      ae += std::abs(d);
    }
  const double pairs = 0.5 * static_cast<double>(n * (n - 1));
  m.mse = se / pairs;
  m.mae = ae / pairs;
  return m;
}

EvalReport evaluate_predictions(const std::string& method, Task task,
                                const std::vector<Adjacency>& preds,
                                const std::vector<Adjacency>& labels, double t) {
  if (preds.size() != labels.size()) throw ShapeError("evaluate: list sizes differ");
  if (preds.empty()) throw Error("evaluate: empty input");
  EvalReport r;
  r.method = method;
  r.task = task;
  r.threshold = t;
  std::vector<double> e, s, a;
  for (std::size_t k = 0; k < preds.size(); ++k) {
    const SampleMetrics m = sample_metrics(preds[k], labels[k], t);
    r.samples.push_back(m);
    e.push_back(m.error);
    s.push_back(m.mse);
    a.push_back(m.mae);
  }
  r.error = summarize(e);
  r.mse = summarize(s);
  r.mae = summarize(a);
  return r;
}

std::vector<Adjacency> predict_all(const GdnParams& params, const std::vector<SymMatrix>& obs) {
  std::vector<Adjacency> out;
  out.reserve(obs.size());
  for (const auto& o : obs) out.push_back(predict(o, params));
  return out;
}

EvalReport evaluate_model(const std::string& method, Task task, const GdnParams& params,
                          const std::vector<SymMatrix>& obs, const std::vector<Adjacency>& labels,
                          double t) {
  return evaluate_predictions(method, task, predict_all(params, obs), labels, t);
}

double mean_loss(const GdnParams& params, const std::vector<SymMatrix>& obs,
                 const std::vector<Adjacency>& labels, const TrainConfig& cfg) {
  if (obs.empty()) throw Error("mean_loss: empty input");
  double total = 0.0;
  for (std::size_t k = 0; k < obs.size(); ++k)
    total += task_loss(cfg.task, predict(obs[k], params), labels[k], cfg.hinge_margin).value;
  return total / static_cast<double>(obs.size());
}

namespace {

struct Split {
  std::vector<SymMatrix> obs;
  std::vector<Adjacency> labels;
};

Split split_of(const GraphPairDataset& ds, const std::vector<std::size_t>& idx) {
  return Split{gather(ds.observations, idx), gather(ds.labels, idx)};
}

double validation_metric(const GdnParams& p, const Split& tr, const Split& va,
                         const TrainConfig& cfg) {
  if (cfg.task != Task::link) return mean_loss(p, va.obs, va.labels, cfg);
  const double t = tune_threshold(predict_all(p, tr.obs), tr.labels).t;
  return link_error_at(predict_all(p, va.obs), va.labels, t);
}

void accumulate(GdnGrads& acc, const GdnGrads& g) {
  for (std::size_t k = 0; k < acc.layers.size(); ++k) {
    acc.layers[k].alpha += g.layers[k].alpha;
    acc.layers[k].beta += g.layers[k].beta;
    acc.layers[k].gamma += g.layers[k].gamma;
    for (std::size_t j = 0; j < acc.layers[k].tau.size(); ++j)
      acc.layers[k].tau[j] += g.layers[k].tau[j];
  }
  if (!acc.prior.empty()) acc.prior += g.prior;
}

void scale(GdnGrads& g, double s) {
  for (auto& l : g.layers) {
    l.alpha *= s;
    l.beta *= s;
    l.gamma *= s;
    for (double& t : l.tau) t *= s;
  }
  if (!g.prior.empty()) g.prior *= s;
}

// The no_linear variant keeps alpha and beta frozen.
void mask_frozen(GdnGrads& g, Variant v) {
  if (v == Variant::full) return;
  for (auto& l : g.layers) {
    l.alpha.fill(0.0);
    l.beta.fill(0.0);
  }
}

}  // namespace

TrainResult train(const GraphPairDataset& ds, GdnParams init, const TrainConfig& cfg) {
  cfg.validate();
  init.validate();
  if (ds.train.empty()) throw Error("train: empty training split");
  if (ds.val.empty()) throw Error("train: empty validation split");
  const Split tr = split_of(ds, ds.train);
  const Split va = split_of(ds, ds.val);

  using clock = std::chrono::steady_clock;
  TrainResult res;
  GdnParams params = std::move(init);
  const auto t0 = clock::now();
  auto elapsed_ms = [&] {
    return std::chrono::duration<double, std::milli>(clock::now() - t0).count();
  };

  res.best_val = validation_metric(params, tr, va, cfg);
  res.history.push_back(
      {0, mean_loss(params, tr.obs, tr.labels, cfg), res.best_val, elapsed_ms(), 0.0});
  res.params = params;
  res.best_epoch = 0;

  AdamState adam;
  std::vector<std::size_t> order(tr.obs.size());
  std::size_t stale = 0;
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng rng = child_rng(cfg.seed, streams::kShuffle, epoch);
    std::shuffle(order.begin(), order.end(), rng);

    double epoch_loss = 0.0, prior_norm = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      GdnGrads acc = zero_grads(params);
      double batch_loss = 0.0;
      for (std::size_t b = start; b < stop; ++b) {
        const std::size_t s = order[b];
        ForwardResult fr = forward(tr.obs[s], params);
        const LossValue lv = task_loss(cfg.task, fr.prediction, tr.labels[s], cfg.hinge_margin);
        if (!std::isfinite(lv.value)) {
          std::ostringstream os;
          os << "train: non-finite loss at epoch " << epoch << ", batch " << batches;
          throw DivergenceError(os.str());
        }
        batch_loss += lv.value;
        accumulate(acc, backward(fr.tape, params, lv.grad));
      }
      const double inv = 1.0 / static_cast<double>(stop - start);
      scale(acc, inv);
      mask_frozen(acc, params.variant);
      if (!acc.prior.empty()) prior_norm += frobenius_norm(acc.prior);
      adam_step(params, acc, adam, cfg);
      epoch_loss += batch_loss;
      ++batches;
    }

    const double val = validation_metric(params, tr, va, cfg);
    res.history.push_back({epoch, epoch_loss / static_cast<double>(order.size()), val,
                           elapsed_ms(), prior_norm / static_cast<double>(batches)});
    if (val < res.best_val) {
      res.best_val = val;
      res.best_epoch = epoch;
      res.params = params;
      stale = 0;
    } else if (++stale >= cfg.patience) {
      break;
    }
  }

  res.threshold = tune_threshold(predict_all(res.params, va.obs), va.labels).t;
  return res;
}

GdnParams init_live_params(const GraphPairDataset& ds, const Architecture& arch,
                           std::uint64_t seed, const Matrix& prior) {
  const std::size_t probe = std::min<std::size_t>(ds.train.size(), 50);
  GdnParams p;
  for (std::size_t attempt = 0; attempt < kMaxInitAttempts; ++attempt) {
    Rng rng = child_rng(seed, streams::kInit, attempt);
    p = init_params(arch, rng, prior);
    for (std::size_t k = 0; k < probe; ++k)
      if (max_abs(predict(ds.observations.at(ds.train[k]), p).weights()) > 0.0) return p;
  }
  return p;
}

TrainResult train(const GraphPairDataset& ds, const Architecture& arch, const TrainConfig& cfg,
                  const Matrix& prior) {
  return train(ds, init_live_params(ds, arch, cfg.seed, prior), cfg);
}

}  // namespace gdn
