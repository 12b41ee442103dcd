#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "gdn/graphs.hpp"
#include "gdn/linalg.hpp"
#include "gdn/rng.hpp"

namespace gdn {

enum class PriorMode { zeros, ones, fixed, learned };
std::string to_string(PriorMode m);
PriorMode prior_mode_from_string(const std::string& s);

/// `full` keeps the A and A_O A + A A_O terms of every layer. `no_linear`
/// is the truncated ablation A <- ReLU(A + gamma A_O - tau): alpha is frozen
/// to a channel selector and beta to zero.
enum class Variant { full, no_linear };
std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

/// MIMO filter of one layer. Row j of alpha/beta/gamma holds the weights
/// output channel j applies to each input channel.
struct LayerParams {
  Matrix alpha;              // c_out x c_in
  Matrix beta;               // c_out x c_in
  Matrix gamma;              // c_out x c_in
  std::vector<double> tau;   // c_out, nonnegative

  static LayerParams zeros(std::size_t c_out, std::size_t c_in);
  std::size_t c_out() const { return alpha.rows(); }
  std::size_t c_in() const { return alpha.cols(); }
  std::size_t parameter_count() const { return c_out() * (3 * c_in() + 1); }

  friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

struct Architecture {
  std::size_t depth = 8;
  std::size_t channels = 8;
  bool shared = false;
  PriorMode prior_mode = PriorMode::zeros;
  Variant variant = Variant::full;

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

/// Trainable state of a GDN. With `shared` set, `layers` holds a single
/// record applied at every one of the `depth` layers (GDN-S).
struct GdnParams {
  std::size_t depth = 0;
  bool shared = false;
  PriorMode prior_mode = PriorMode::zeros;
  Variant variant = Variant::full;
  Matrix prior;  // n x n for fixed/learned priors, empty otherwise
  std::vector<LayerParams> layers;

  const LayerParams& layer(std::size_t k) const { return layers[shared ? 0 : k]; }
  LayerParams& layer(std::size_t k) { return layers[shared ? 0 : k]; }
  std::size_t input_channels() const { return layers.front().c_in(); }
  std::size_t channels() const { return layers.front().c_out(); }
  std::size_t parameter_count() const;
  Architecture architecture() const;
  /// Throws ShapeError/InvariantError when the record is malformed.
  void validate() const;

  friend bool operator==(const GdnParams&, const GdnParams&) = default;
};

/// Gradient record with the same layout as GdnParams.
struct GdnGrads {
  std::vector<LayerParams> layers;
  Matrix prior;  // empty unless the prior is learned
};

/// Random initialization: alpha, beta, gamma ~ U[-s, s] with
/// s = 1/sqrt(3 c_in), tau = 0.1. Decoupled models are 1 -> C -> ... -> C -> 1,
/// shared models are C -> C. `prior` is required for fixed/learned modes.
GdnParams init_params(const Architecture& arch, Rng& rng, const Matrix& prior = {});

/// Same shapes as init_params with every value zero.
GdnParams zero_params(const Architecture& arch, const Matrix& prior = {});

GdnGrads zero_grads(const GdnParams& p);

/// The prior A[0] as an n x n matrix (zeros, hollow ones, or the stored one).
Matrix materialize_prior(const GdnParams& p, std::size_t n);

/// Stack of c matrices n x n.
struct ChannelTensor {
  std::vector<Matrix> slices;

  std::size_t channels() const { return slices.size(); }
  std::size_t n() const { return slices.empty() ? 0 : slices.front().rows(); }
  static ChannelTensor replicate(const Matrix& m, std::size_t c);
};

inline constexpr double kNormEpsilon = 1e-12;

/// Everything backward needs from one layer application.
struct LayerTape {
  ChannelTensor input;
  std::vector<Matrix> mixed;        // A_O A_i + A_i A_O per input channel
  std::vector<Matrix> normalized;   // pre-activation after diag zeroing / max scaling
  std::vector<Matrix> output;       // ReLU(normalized - tau)
  std::vector<double> scale;        // max |U_j|
  std::vector<std::size_t> anchor;  // flat row-major index of the max
  std::vector<char> divided;        // whether the slice was scaled
};

struct Tape {
  Variant variant = Variant::full;
  SymMatrix a_o;
  std::vector<LayerTape> layers;
  std::vector<std::size_t> widths;  // c_in of layer 0, then c_out of each layer
};

struct LayerResult {
  ChannelTensor output;
  LayerTape tape;
};

/// One MIMO layer: U_j = mean_i [alpha_ji A_i + beta_ji (A_O A_i + A_i A_O) + gamma_ji A_O],
/// zero diagonal, divide by max |U_j| (skipped below kNormEpsilon),
/// then ReLU(U_j - tau_j).
LayerResult layer_forward(const ChannelTensor& a_k, const SymMatrix& a_o, const LayerParams& p,
                          Variant variant = Variant::full);

struct ForwardResult {
  Adjacency prediction;
  Tape tape;
};

/// Runs params.depth layers from the prior; the prediction is channel 0 of
/// the last layer. Uses params.variant.
ForwardResult forward(const SymMatrix& a_o, const GdnParams& params);
/// Truncated ablation: same as forward with Variant::no_linear.
ForwardResult forward_k0(const SymMatrix& a_o, const GdnParams& params);
/// Prediction only, without recording a tape.
Adjacency predict(const SymMatrix& a_o, const GdnParams& params);

/// Exact reverse-mode gradient of <d_pred, prediction> through the recorded
/// pass. ReLU'(0) = 0; the normalizing max is differentiated at its anchor.
GdnGrads backward(const Tape& tape, const GdnParams& params, const Matrix& d_pred);

/// Flat views in declared order: per layer alpha, beta, gamma (row-major),
/// tau; then the learned prior if any.
std::vector<double> flatten(const GdnParams& p);
void unflatten(std::span<const double> values, GdnParams& p);
std::vector<double> flatten(const GdnGrads& g, const GdnParams& layout);

/// Clamp tau >= 0; project a learned prior onto symmetric, hollow, nonnegative.
void project(GdnParams& p);

}  // namespace gdn
