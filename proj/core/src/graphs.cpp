#include "gdn/graphs.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>
#include <vector>

#include "gdn/errors.hpp"

namespace gdn {

Adjacency::Adjacency(Matrix weights) : w_(std::move(weights)) {
  if (!w_.square()) throw ShapeError("Adjacency: matrix is not square");
  const std::size_t n = w_.rows();
  for (std::size_t i = 0; i < n; ++i) {
    if (w_(i, i) != 0.0) throw InvariantError("Adjacency: nonzero diagonal");
    for (std::size_t j = 0; j < n; ++j) {
      const double v = w_(i, j);
      if (!std::isfinite(v)) throw InvariantError("Adjacency: non-finite weight");
      if (v < 0.0) throw InvariantError("Adjacency: negative weight");
      if (v != w_(j, i)) throw InvariantError("Adjacency: not symmetric");
    }
  }
}

Adjacency Adjacency::empty(std::size_t n) { return Adjacency(Matrix(n, n)); }

Adjacency Adjacency::complete(std::size_t n) {
  Matrix m(n, n, 1.0);
  m.zero_diagonal();
  return Adjacency(std::move(m));
}

bool Adjacency::is_binary() const {
  return std::all_of(w_.values().begin(), w_.values().end(),
                     [](double v) { return v == 0.0 || v == 1.0; });
}

std::size_t Adjacency::edge_count() const {
  std::size_t c = 0;
  for (std::size_t i = 0; i < n(); ++i)
    for (std::size_t j = i + 1; j < n(); ++j)
      if (w_(i, j) > 0.0) ++c;
  return c;
}

std::string to_string(EnsembleKind k) {
  switch (k) {
    case EnsembleKind::ER: return "ER";
    case EnsembleKind::RG: return "RG";
    case EnsembleKind::BA: return "BA";
    case EnsembleKind::SBM: return "SBM";
  }
  return "?";
}

EnsembleKind ensemble_kind_from_string(const std::string& s) {
  if (s == "ER") return EnsembleKind::ER;
  if (s == "RG") return EnsembleKind::RG;
  if (s == "BA") return EnsembleKind::BA;
  if (s == "SBM") return EnsembleKind::SBM;
  throw Error("unknown ensemble kind '" + s + "'");
}

void EnsembleSpec::validate() const {
  if (n < 2) throw Error("EnsembleSpec: n must be at least 2");
  if (!(0.0 <= density_lo && density_lo <= density_hi && density_hi <= 1.0))
    throw Error("EnsembleSpec: density range must satisfy 0 <= lo <= hi <= 1");
  if (max_tries < 1) throw Error("EnsembleSpec: max_tries must be >= 1");
  switch (kind) {
    case EnsembleKind::ER:
      if (!(p >= 0.0 && p <= 1.0)) throw Error("EnsembleSpec: ER p outside [0,1]");
      break;
    case EnsembleKind::RG:
      if (dim < 1 || !(radius >= 0.0)) throw Error("EnsembleSpec: RG needs dim >= 1, radius >= 0");
      break;
    case EnsembleKind::BA:
      if (m < 1 || m >= n) throw Error("EnsembleSpec: BA needs 1 <= m < n");
      break;
    case EnsembleKind::SBM:
      if (blocks < 1 || n % blocks != 0) throw Error("EnsembleSpec: blocks must divide n");
      if (!(p_in >= 0 && p_in <= 1 && p_out >= 0 && p_out <= 1))
        throw Error("EnsembleSpec: SBM probabilities outside [0,1]");
      break;
  }
}

Adjacency gen_er(std::size_t n, double p, Rng& rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error("gen_er: p outside [0,1]");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix w(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (u(rng) < p) w(i, j) = w(j, i) = 1.0;
  return Adjacency(std::move(w));
}

Adjacency gen_rg(std::size_t n, std::size_t dim, double radius, Rng& rng) {
  if (dim < 1) throw Error("gen_rg: dim must be >= 1");
  if (!(radius >= 0.0)) throw Error("gen_rg: radius must be >= 0");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> pts(n * dim);
  for (double& x : pts) x = u(rng);
  const double r2 = radius * radius;
  Matrix w(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        const double d = pts[i * dim + k] - pts[j * dim + k];
        d2 += d * d;
      }
      if (d2 <= r2) w(i, j) = w(j, i) = 1.0;
    }
  }
  return Adjacency(std::move(w));
}

Adjacency gen_ba(std::size_t n, std::size_t m, Rng& rng) {
  if (m < 1 || m >= n) throw Error("gen_ba: need 1 <= m < n");
  Matrix w(n, n);
  // Every edge endpoint is listed once; uniform picks from this list are
  // degree-proportional.
  std::vector<std::size_t> endpoints;
  endpoints.reserve(2 * (m * (m - 1) / 2 + (n - m) * m));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      w(i, j) = w(j, i) = 1.0;
      endpoints.push_back(i);
      endpoints.push_back(j);
    }
  }
  std::vector<std::size_t> targets;
  for (std::size_t v = m; v < n; ++v) {
    targets.clear();
    while (targets.size() < m) {
      std::size_t t;
      if (endpoints.empty()) {
        t = std::uniform_int_distribution<std::size_t>(0, v - 1)(rng);
      } else {
        t = endpoints[std::uniform_int_distribution<std::size_t>(0, endpoints.size() - 1)(rng)];
      }
      if (std::find(targets.begin(), targets.end(), t) == targets.end()) targets.push_back(t);
    }
    for (std::size_t t : targets) {
      w(v, t) = w(t, v) = 1.0;
      endpoints.push_back(v);
      endpoints.push_back(t);
    }
  }
  return Adjacency(std::move(w));
}

Adjacency gen_sbm(std::size_t n, std::size_t blocks, double p_in, double p_out, Rng& rng) {
  if (blocks < 1 || n % blocks != 0) {
    std::ostringstream os;
    os << "gen_sbm: " << blocks << " blocks do not divide n = " << n;
    throw Error(os.str());
  }
  const std::size_t size = n / blocks;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix w(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double p = (i / size == j / size) ? p_in : p_out;
      if (u(rng) < p) w(i, j) = w(j, i) = 1.0;
    }
  }
  return Adjacency(std::move(w));
}

Adjacency draw(const EnsembleSpec& spec, Rng& rng) {
  switch (spec.kind) {
    case EnsembleKind::ER: return gen_er(spec.n, spec.p, rng);
    case EnsembleKind::RG: return gen_rg(spec.n, spec.dim, spec.radius, rng);
    case EnsembleKind::BA: return gen_ba(spec.n, spec.m, rng);
    case EnsembleKind::SBM: return gen_sbm(spec.n, spec.blocks, spec.p_in, spec.p_out, rng);
  }
  throw Error("draw: unknown ensemble");
}

bool accepts(const EnsembleSpec& spec, const Adjacency& a) {
  const double d = edge_density(a);
  if (d < spec.density_lo || d > spec.density_hi) return false;
  return !spec.require_connected || is_connected(a);
}

Adjacency sample_constrained(const EnsembleSpec& spec, Rng& rng) {
  spec.validate();
  for (std::size_t t = 0; t < spec.max_tries; ++t) {
    Adjacency a = draw(spec, rng);
    if (accepts(spec, a)) return a;
  }
  std::ostringstream os;
  os << "sample_constrained: no " << to_string(spec.kind) << " draw accepted in " << spec.max_tries
     << " tries (acceptance rate 0/" << spec.max_tries << ", density range [" << spec.density_lo
     << ", " << spec.density_hi << "], connected=" << spec.require_connected << ")";
  throw RejectionError(os.str(), 0.0);
}

double edge_density(const Adjacency& a) {
  const std::size_t n = a.n();
  if (n < 2) throw Error("edge_density: need at least 2 nodes");
  return static_cast<double>(a.edge_count()) / (0.5 * static_cast<double>(n * (n - 1)));
}

bool is_connected(const Adjacency& a) {
  const std::size_t n = a.n();
  if (n <= 1) return true;
  std::vector<char> seen(n, 0);
  std::queue<std::size_t> q;
  q.push(0);
  seen[0] = 1;
  std::size_t visited = 1;
  while (!q.empty()) {
    const std::size_t u = q.front();
    q.pop();
    for (std::size_t v = 0; v < n; ++v) {
      if (!seen[v] && a(u, v) > 0.0) {
        seen[v] = 1;
        ++visited;
        q.push(v);
      }
    }
  }
  return visited == n;
}

Adjacency block_diagonal(std::size_t n, std::size_t blocks) {
  if (blocks < 1 || n % blocks != 0) throw Error("block_diagonal: blocks must divide n");
  const std::size_t size = n / blocks;
  Matrix w(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && i / size == j / size) w(i, j) = 1.0;
  return Adjacency(std::move(w));
}

}  // namespace gdn
