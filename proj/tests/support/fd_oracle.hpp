#pragma once

// Central-difference check of gdn::backward, written against the public
// forward/flatten API only.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "gdn/model.hpp"

namespace fdcheck {

struct Outcome {
  double max_rel = 0.0;
  std::size_t draws_used = 0;
  std::size_t draws_skipped = 0;
  std::size_t comparisons = 0;
};

// Distance of the recorded pass from a ReLU kink or a tie for the max.
inline double kink_distance(const gdn::Tape& tape, const gdn::GdnParams& p) {
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < tape.layers.size(); ++k) {
    const auto& lt = tape.layers[k];
    const auto& lp = p.layer(k);
    for (std::size_t j = 0; j < lt.normalized.size(); ++j) {
      const gdn::Matrix& u = lt.normalized[j];
      const std::size_t n = u.rows();
      double first = 0, second = 0;
      for (std::size_t a = 0; a < n; ++a) {
        d = std::min(d, lp.tau[j]);  // diagonal sits at -tau
        for (std::size_t b = a + 1; b < n; ++b) {
          d = std::min(d, std::abs(u(a, b) - lp.tau[j]));
          const double v = std::abs(u(a, b));
          if (v > first) {
            second = first;
            first = v;
          } else if (v > second) {
            second = v;
          }
        }
      }
      if (lt.divided[j] && first > 0) d = std::min(d, (first - second) / first);
    }
  }
  return d;
}

inline gdn::SymMatrix random_observation(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  gdn::Matrix x(n, 3 * n);
  for (double& v : x.values()) v = nd(rng);
  gdn::Matrix c = gdn::matmul(x, gdn::transpose(x));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) c(j, i) = c(i, j);
  const gdn::SymMatrix s(c);
  return gdn::SymMatrix(c * (1.0 / gdn::max_abs_eigval(s)));
}

inline gdn::Matrix random_prior(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  gdn::Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) m(i, j) = m(j, i) = u(rng);
  return m;
}

// Loss <W, pred> with W dense random; every flat parameter is perturbed,
// prior entries in symmetric pairs so the prior stays symmetric.
inline Outcome run(const gdn::Architecture& arch, std::size_t n, std::size_t draws,
                   std::uint64_t seed, double step = 1e-5, double kink_floor = 1e-7,
                   double denom_floor = 1e-4) {
  Outcome out;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> tau_dist(0.01, 0.3);
  std::normal_distribution<double> nd;
  while (out.draws_used < draws) {
    if (out.draws_used + out.draws_skipped > 20 * draws) break;
    const gdn::SymMatrix a_o = random_observation(n, rng);
    const bool has_prior =
        arch.prior_mode == gdn::PriorMode::learned || arch.prior_mode == gdn::PriorMode::fixed;
    gdn::GdnParams p = gdn::init_params(arch, rng, has_prior ? random_prior(n, rng) : gdn::Matrix{});
    for (auto& l : p.layers)
      for (double& t : l.tau) t = tau_dist(rng);
    gdn::Matrix w(n, n);
    for (double& v : w.values()) v = nd(rng);

    const gdn::ForwardResult f = gdn::forward(a_o, p);
    if (kink_distance(f.tape, p) < kink_floor) {
      ++out.draws_skipped;
      continue;
    }
    const std::vector<double> analytic = gdn::flatten(gdn::backward(f.tape, p, w), p);
    std::vector<double> theta = gdn::flatten(p);
    auto loss_at = [&](const std::vector<double>& th) {
      gdn::GdnParams q = p;
      gdn::unflatten(th, q);
      return gdn::inner(w, gdn::predict(a_o, q).weights());
    };

    const std::size_t n_layer = theta.size() - (arch.prior_mode == gdn::PriorMode::learned ? n * n : 0);
    auto compare = [&](double num, double ana) {
      const double rel = std::abs(num - ana) / std::max({std::abs(num), std::abs(ana), denom_floor});
      out.max_rel = std::max(out.max_rel, rel);
      ++out.comparisons;
    };
    for (std::size_t k = 0; k < n_layer; ++k) {
      std::vector<double> up = theta, dn = theta;
      up[k] += step;
      dn[k] -= step;
      compare((loss_at(up) - loss_at(dn)) / (2 * step), analytic[k]);
    }
    if (arch.prior_mode == gdn::PriorMode::learned) {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
          const std::size_t a = n_layer + i * n + j, b = n_layer + j * n + i;
          std::vector<double> up = theta, dn = theta;
          up[a] += step;
          up[b] += step;
          dn[a] -= step;
          dn[b] -= step;
          compare((loss_at(up) - loss_at(dn)) / (2 * step), analytic[a] + analytic[b]);
        }
    }
    ++out.draws_used;
  }
  return out;
}

}  // namespace fdcheck
