#pragma once

#include <cstddef>
#include <string>

#include "gdn/linalg.hpp"
#include "gdn/rng.hpp"

namespace gdn {

/// Undirected graph: symmetric (exactly), hollow, nonnegative weights.
class Adjacency {
 public:
  Adjacency() = default;
  explicit Adjacency(Matrix weights);

  static Adjacency empty(std::size_t n);
  static Adjacency complete(std::size_t n);

  std::size_t n() const noexcept { return w_.rows(); }
  const Matrix& weights() const noexcept { return w_; }
  double operator()(std::size_t i, std::size_t j) const { return w_(i, j); }
  bool is_binary() const;
  std::size_t edge_count() const;

  SymMatrix as_sym() const { return SymMatrix(w_); }

  friend bool operator==(const Adjacency&, const Adjacency&) = default;

 private:
  Matrix w_;
};

enum class EnsembleKind { ER, RG, BA, SBM };

std::string to_string(EnsembleKind k);
EnsembleKind ensemble_kind_from_string(const std::string& s);

/// Random graph ensemble plus the rejection rule applied to its draws.
struct EnsembleSpec {
  EnsembleKind kind = EnsembleKind::RG;
  std::size_t n = 20;
  double p = 0.56;           // ER
  std::size_t dim = 2;       // RG
  double radius = 0.56;      // RG
  std::size_t m = 15;        // BA
  std::size_t blocks = 3;    // SBM
  double p_in = 0.6;         // SBM
  double p_out = 0.1;        // SBM
  double density_lo = 0.0;
  double density_hi = 1.0;
  bool require_connected = true;
  std::size_t max_tries = 10000;

  void validate() const;
};

Adjacency gen_er(std::size_t n, double p, Rng& rng);
Adjacency gen_rg(std::size_t n, std::size_t dim, double radius, Rng& rng);
/// Preferential attachment grown from an m-node clique: each of the n - m
/// arrivals attaches to m distinct existing nodes, chosen proportionally to
/// degree. Edge count is m(m-1)/2 + (n-m)m.
Adjacency gen_ba(std::size_t n, std::size_t m, Rng& rng);
Adjacency gen_sbm(std::size_t n, std::size_t blocks, double p_in, double p_out, Rng& rng);

/// Raw draw from the ensemble, no rejection.
Adjacency draw(const EnsembleSpec& spec, Rng& rng);
/// True when `a` passes the ensemble's connectivity and density rules.
bool accepts(const EnsembleSpec& spec, const Adjacency& a);
/// First draw that `accepts`; throws RejectionError after max_tries.
Adjacency sample_constrained(const EnsembleSpec& spec, Rng& rng);

/// Fraction of unordered node pairs carrying a positive weight.
double edge_density(const Adjacency& a);
/// Breadth-first search over the positive-weight support.
bool is_connected(const Adjacency& a);

/// Hollow all-ones matrix restricted to `blocks` equal contiguous blocks.
Adjacency block_diagonal(std::size_t n, std::size_t blocks);

}  // namespace gdn
