#pragma once
// JSON encoders/decoders shared by io.cpp and experiments.cpp. Private to the
// library so the public headers stay free of the json dependency.

#include <json.hpp>

#include "gdn/dataset.hpp"
#include "gdn/model.hpp"
#include "gdn/training.hpp"

namespace gdn::codec {

using nlohmann::json;

json encode(const EnsembleSpec& s);
EnsembleSpec decode_ensemble(const json& j, EnsembleSpec base = {});

json encode(const DatasetRecipe& r);
DatasetRecipe decode_recipe(const json& j, DatasetRecipe base = {});

json encode(const DatasetMeta& m);
DatasetMeta decode_meta(const json& j);

json encode(const Architecture& a);
Architecture decode_architecture(const json& j, Architecture base = {});

json encode(const TrainConfig& c);
TrainConfig decode_train_config(const json& j, TrainConfig base = {});

json encode(const MetricSummary& s);
json encode(const EvalReport& r, bool with_samples);

json encode(const Matrix& m);
Matrix decode_matrix(const json& j);

// Value of key `k` when present, `fallback` otherwise.
template <class T>
T get_or(const json& j, const char* k, T fallback) {
  auto it = j.find(k);
  return it == j.end() ? fallback : it->template get<T>();
}

}  // namespace gdn::codec
