#include "json_codec.hpp"

#include <initializer_list>
#include <string>

#include "gdn/errors.hpp"

namespace gdn::codec {

namespace {

void reject_unknown(const json& j, const char* what, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw FormatError(std::string(what) + ": expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : keys) known = known || it.key() == k;
    if (!known) throw FormatError(std::string(what) + ": unknown key '" + it.key() + "'");
  }
}

}  // namespace

json encode(const EnsembleSpec& s) {
  return json{{"kind", to_string(s.kind)},
              {"n", s.n},
              {"p", s.p},
              {"dim", s.dim},
              {"radius", s.radius},
              {"m", s.m},
              {"blocks", s.blocks},
              {"p_in", s.p_in},
              {"p_out", s.p_out},
              {"density_range", {s.density_lo, s.density_hi}},
              {"require_connected", s.require_connected},
              {"max_tries", s.max_tries}};
}

EnsembleSpec decode_ensemble(const json& j, EnsembleSpec s) {
  reject_unknown(j, "ensemble", {"kind", "n", "p", "dim", "radius", "m", "blocks", "p_in", "p_out",
                                 "density_range", "require_connected", "max_tries"});
  if (j.contains("kind")) s.kind = ensemble_kind_from_string(j["kind"].get<std::string>());
  s.n = get_or(j, "n", s.n);
  s.p = get_or(j, "p", s.p);
  s.dim = get_or(j, "dim", s.dim);
  s.radius = get_or(j, "radius", s.radius);
  s.m = get_or(j, "m", s.m);
  s.blocks = get_or(j, "blocks", s.blocks);
  s.p_in = get_or(j, "p_in", s.p_in);
  s.p_out = get_or(j, "p_out", s.p_out);
  if (j.contains("density_range")) {
    const auto& r = j["density_range"];
    if (!r.is_array() || r.size() != 2) throw FormatError("ensemble: density_range needs [lo, hi]");
    s.density_lo = r[0].get<double>();
    s.density_hi = r[1].get<double>();
  }
  s.require_connected = get_or(j, "require_connected", s.require_connected);
  s.max_tries = get_or(j, "max_tries", s.max_tries);
  return s;
}

json encode(const DatasetRecipe& r) {
  json j{{"ensemble", encode(r.ensemble)},
         {"splits", {r.train, r.val, r.test}},
         {"filter_order", r.filter_order},
         {"signals", r.signals},
         {"ensemble_covariance", r.ensemble_covariance},
         {"observation", to_string(r.observation)},
         {"seed", r.seed}};
  if (r.filter) j["filter"] = r.filter->h;
  return j;
}

DatasetRecipe decode_recipe(const json& j, DatasetRecipe r) {
  reject_unknown(j, "dataset", {"ensemble", "splits", "filter_order", "filter", "signals",
                                "ensemble_covariance", "observation", "seed"});
  if (j.contains("ensemble")) r.ensemble = decode_ensemble(j["ensemble"], r.ensemble);
  if (j.contains("splits")) {
    const auto& s = j["splits"];
    if (!s.is_array() || s.size() != 3) throw FormatError("dataset: splits needs [train, val, test]");
    r.train = s[0].get<std::size_t>();
    r.val = s[1].get<std::size_t>();
    r.test = s[2].get<std::size_t>();
  }
  r.filter_order = get_or(j, "filter_order", r.filter_order);
  if (j.contains("filter")) {
    if (j["filter"].is_null())
      r.filter.reset();
    else
      r.filter = FilterCoeffs{j["filter"].get<std::vector<double>>()};
  }
  r.signals = get_or(j, "signals", r.signals);
  r.ensemble_covariance = get_or(j, "ensemble_covariance", r.ensemble_covariance);
  if (j.contains("observation"))
    r.observation = observation_form_from_string(j["observation"].get<std::string>());
  r.seed = get_or(j, "seed", r.seed);
  return r;
}

json encode(const DatasetMeta& m) {
  return json{{"recipe", encode(m.recipe)},
              {"filter", m.filter.h},
              {"weighted_labels", m.weighted_labels},
              {"label_scale", m.label_scale},
              {"observation_scale", m.observation_scale}};
}

DatasetMeta decode_meta(const json& j) {
  reject_unknown(j, "dataset metadata",
                 {"recipe", "filter", "weighted_labels", "label_scale", "observation_scale"});
  DatasetMeta m;
  m.recipe = decode_recipe(j.at("recipe"));
  m.filter.h = j.at("filter").get<std::vector<double>>();
  m.weighted_labels = j.at("weighted_labels").get<bool>();
  m.label_scale = j.at("label_scale").get<double>();
  m.observation_scale = j.at("observation_scale").get<std::vector<double>>();
  return m;
}

json encode(const Architecture& a) {
  return json{{"depth", a.depth},
              {"channels", a.channels},
              {"shared", a.shared},
              {"prior_mode", to_string(a.prior_mode)},
              {"variant", to_string(a.variant)}};
}

Architecture decode_architecture(const json& j, Architecture a) {
  reject_unknown(j, "model", {"depth", "channels", "shared", "prior_mode", "variant"});
  a.depth = get_or(j, "depth", a.depth);
  a.channels = get_or(j, "channels", a.channels);
  a.shared = get_or(j, "shared", a.shared);
  if (j.contains("prior_mode")) a.prior_mode = prior_mode_from_string(j["prior_mode"].get<std::string>());
  if (j.contains("variant")) a.variant = variant_from_string(j["variant"].get<std::string>());
  return a;
}

json encode(const TrainConfig& c) {
  return json{{"task", to_string(c.task)},     {"lr", c.lr},
              {"beta1", c.beta1},              {"beta2", c.beta2},
              {"eps", c.eps},                  {"batch_size", c.batch_size},
              {"max_epochs", c.max_epochs},    {"patience", c.patience},
              {"hinge_margin", c.hinge_margin}, {"seed", c.seed}};
}

TrainConfig decode_train_config(const json& j, TrainConfig c) {
  reject_unknown(j, "train", {"task", "lr", "beta1", "beta2", "eps", "batch_size", "max_epochs",
                              "patience", "hinge_margin", "seed"});
  if (j.contains("task")) c.task = task_from_string(j["task"].get<std::string>());
  c.lr = get_or(j, "lr", c.lr);
  c.beta1 = get_or(j, "beta1", c.beta1);
  c.beta2 = get_or(j, "beta2", c.beta2);
  c.eps = get_or(j, "eps", c.eps);
  c.batch_size = get_or(j, "batch_size", c.batch_size);
  c.max_epochs = get_or(j, "max_epochs", c.max_epochs);
  c.patience = get_or(j, "patience", c.patience);
  c.hinge_margin = get_or(j, "hinge_margin", c.hinge_margin);
  c.seed = get_or(j, "seed", c.seed);
  c.validate();
  return c;
}

json encode(const MetricSummary& s) {
  return json{{"mean", s.mean}, {"stderr", s.std_error}, {"min", s.min}, {"max", s.max},
              {"count", s.count}};
}

json encode(const EvalReport& r, bool with_samples) {
  json j{{"method", r.method},        {"task", to_string(r.task)}, {"threshold", r.threshold},
         {"scale", r.scale},          {"error", encode(r.error)},  {"mse", encode(r.mse)},
         {"mae", encode(r.mae)}};
  if (with_samples) {
    json s = json::array();
    for (const auto& m : r.samples) s.push_back({m.error, m.mse, m.mae});
    j["samples"] = std::move(s);
  }
  return j;
}

json encode(const Matrix& m) {
  return json{{"rows", m.rows()},
              {"cols", m.cols()},
              {"data", std::vector<double>(m.values().begin(), m.values().end())}};
}

Matrix decode_matrix(const json& j) {
  const auto rows = j.at("rows").get<std::size_t>();
  const auto cols = j.at("cols").get<std::size_t>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (data.size() != rows * cols) throw FormatError("matrix: data length does not match shape");
  Matrix m(rows, cols);
  std::copy(data.begin(), data.end(), m.values().begin());
  return m;
}

}  // namespace gdn::codec
