// End-to-end acceptance run. One PASS/FAIL line per criterion; exit status is
// nonzero if any criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "fd_oracle.hpp"
#include "gdn/baselines.hpp"
#include "gdn/errors.hpp"
#include "gdn/experiments.hpp"
#include "gdn/io.hpp"

using namespace gdn;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

SymMatrix random_sym(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) m(i, j) = m(j, i) = nd(rng);
  return SymMatrix(std::move(m));
}

Matrix random_permutation(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::shuffle(idx.begin(), idx.end(), rng);
  Matrix p(n, n);
  for (std::size_t i = 0; i < n; ++i) p(i, idx[i]) = 1.0;
  return p;
}

Matrix conj(const Matrix& p, const Matrix& a) { return matmul(matmul(p, a), transpose(p)); }

SymMatrix random_pd(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Matrix x(n, 2 * n + 2);
  for (double& v : x.values()) v = nd(rng);
  Matrix c = matmul(x, transpose(x)) * (1.0 / static_cast<double>(x.cols()));
  for (std::size_t i = 0; i < n; ++i) {
    c(i, i) += 0.1;
    for (std::size_t j = i + 1; j < n; ++j) c(j, i) = c(i, j);
  }
  return SymMatrix(c);
}

// Shared by the benchmark-ordering, K0 and size criteria.
ExperimentConfig desk(EnsembleKind kind) {
  ExperimentConfig c = desk_config(kind);
  c.repeats = 1;
  c.train.max_epochs = 120;
  c.train.patience = 30;
  return c;
}

Verdict gradient_correctness() {
  const auto r = fdcheck::run(Architecture{3, 2, false, PriorMode::learned}, 8, 20, 2024);
  Verdict v;
  v.pass = r.draws_used == 20 && r.max_rel <= 1e-5;
  v.detail = fmt("max rel err %.3g over %.0f draws (%.0f skipped near kinks)", r.max_rel,
                 static_cast<double>(r.draws_used), static_cast<double>(r.draws_skipped));
  return v;
}

Verdict gradient_algebra() {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  double at_zero = 0, coef = 0, worst_ratio = 0, fd = 0;
  // Magnitudes bounded away from 0 so the quadratic residual term cannot vanish.
  std::uniform_real_distribution<double> mag(0.3, 1.0);
  std::bernoulli_distribution neg(0.5);
  auto coeff = [&] { return neg(rng) ? -mag(rng) : mag(rng); };
  for (int t = 0; t < 10; ++t) {
    const FilterCoeffs h{{coeff(), coeff(), coeff()}};
    const SymMatrix a_o = random_sym(6, rng);
    at_zero = std::max(at_zero, max_abs(grad_g_linear(SymMatrix::zeros(6), a_o, h) - a_o.matrix() * (-h.h[1])));

    const SymMatrix a = random_sym(6, rng);
    const double c = 2 * h.h[0] * h.h[2] + h.h[1] * h.h[1];
    coef = std::max(coef, max_abs(grad_g_linear(a, SymMatrix::zeros(6), h) - a.matrix() * c));

    // Full minus linear is second order off the diagonal: halving A quarters it.
    auto resid = [&](double s) {
      Matrix d = grad_g_full(SymMatrix(a.matrix() * s), a_o, h) - grad_g_linear(SymMatrix(a.matrix() * s), a_o, h);
      d.zero_diagonal();
      return frobenius_norm(d);
    };
    worst_ratio = std::max(worst_ratio, std::abs(resid(0.004) / resid(0.002) - 4.0));

    const FilterCoeffs hf{{nd(rng), nd(rng), nd(rng), nd(rng)}};
    const SymMatrix x(random_sym(6, rng).matrix() * 0.3);
    const Matrix g = grad_g_full(x, a_o, hf);
    const double eps = 1e-6;
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = i; j < 6; ++j) {
        Matrix up = x.matrix(), dn = x.matrix();
        up(i, j) += eps;
        dn(i, j) -= eps;
        if (i != j) {
          up(j, i) += eps;
          dn(j, i) -= eps;
        }
        const double num =
            (g_objective(SymMatrix(up), a_o, hf) - g_objective(SymMatrix(dn), a_o, hf)) / (2 * eps);
        const double ana = i == j ? g(i, i) : g(i, j) + g(j, i);
        fd = std::max(fd, std::abs(num - ana) / std::max({std::abs(num), std::abs(ana), 1e-8}));
      }
  }
  Verdict v;
  v.pass = at_zero <= 1e-12 && coef <= 1e-12 && worst_ratio <= 0.3 && fd <= 1e-6;
  v.detail = fmt("at-zero %.2g, coefficient %.2g, |ratio-4| %.3f, full-vs-fd rel %.2g", at_zero, coef,
                 worst_ratio, fd);
  return v;
}

Verdict nd_inversion() {
  std::mt19937_64 rng(3);
  std::bernoulli_distribution b(0.2);
  const NdOptions raw{NdMode::raw, false, 0.0};
  double worst = 0;
  for (int t = 0; t < 20;) {
    Matrix m(15, 15);
    for (std::size_t i = 0; i < 15; ++i)
      for (std::size_t j = i + 1; j < 15; ++j) m(i, j) = m(j, i) = b(rng) ? 1.0 : 0.0;
    if (max_abs(m) == 0) continue;
    const SymMatrix a_l(m * (0.5 / max_abs_eigval(SymMatrix(m))));
    const Matrix inv = cholesky_inverse(cholesky_logdet(SymMatrix(Matrix::identity(15) - a_l.matrix()))).matrix();
    Matrix a_o = matmul(a_l.matrix(), inv);
    a_o = (a_o + transpose(a_o)) * 0.5;
    worst = std::max(worst, max_abs(network_deconvolution(SymMatrix(a_o), raw).matrix() - a_l.matrix()));
    ++t;
  }
  return {worst <= 1e-6, fmt("max abs err %.3g over 20 graphs", worst)};
}

Verdict benchmark_ordering(BenchmarkReport& link_out) {
  ExperimentConfig c = desk(EnsembleKind::RG);
  c.run_gdn_shared = false;
  c.run_k0 = true;
  c.baselines.glasso = c.baselines.lsopt = false;  // not part of the ordering
  link_out = run_benchmark(c);
  const double gdn = link_out.method("GDN").error.mean;
  const double thr = link_out.method("Threshold").error.mean;

  ExperimentConfig r = c;
  r.run_k0 = false;
  r.train.task = Task::regress_mse;
  r.baselines.threshold = false;
  const BenchmarkReport reg = run_benchmark(r);
  const double gdn_mse = reg.method("GDN").mse.mean;
  const double nd_mse = reg.method("ND").mse.mean;
  return {gdn <= 0.7 * thr && gdn_mse <= nd_mse,
          fmt("link GDN %.4f vs 0.7*Threshold %.4f; mse GDN %.5f vs ND %.5f", gdn, 0.7 * thr, gdn_mse, nd_mse)};
}

Verdict k0_gap(const BenchmarkReport& link) {
  const double full = link.method("GDN").error.mean;
  const double k0 = link.method("GDN-K0").error.mean;
  return {k0 - full >= 0.02, fmt("GDN-K0 %.4f vs GDN %.4f (gap %.4f)", k0, full, k0 - full)};
}

Verdict prior_ordering() {
  ExperimentConfig c = desk(EnsembleKind::SBM);
  c.baselines.threshold = c.baselines.nd = c.baselines.glasso = c.baselines.lsopt = false;
  const BenchmarkReport r = run_prior_ablation(c, 3);
  const double learned = r.method("prior-learned").error.mean;
  const double block = r.method("prior-block").error.mean;
  const double zeros = r.method("prior-zeros").error.mean;
  const double slack = 0.01;
  return {learned <= block + slack && block <= zeros + slack,
          fmt("learned %.4f, block %.4f, zeros %.4f (slack %.2f)", learned, block, zeros, slack)};
}

Verdict size_generalization() {
  ExperimentConfig c = desk(EnsembleKind::RG);
  c.model.shared = true;
  c.run_gdn = false;
  const SizeGenReport s = run_size_generalization(c, {20, 40, 60});
  const double e20 = s.points[0].report.error.mean, e40 = s.points[1].report.error.mean;
  const double e60 = s.points[2].report.error.mean;
  return {e60 <= e20 + 0.05, fmt("n=20 %.4f, n=40 %.4f, n=60 %.4f", e20, e40, e60)};
}

Verdict model_invariants() {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> tau(0.0, 0.5);
  double asym = 0;
  bool diag_ok = true, range_ok = true;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 3 + t % 8, c_in = 1 + t % 3, c_out = 1 + (t / 3) % 3;
    LayerParams p = LayerParams::zeros(c_out, c_in);
    for (Matrix* m : {&p.alpha, &p.beta, &p.gamma})
      for (double& v : m->values()) v = nd(rng);
    for (double& v : p.tau) v = tau(rng);
    ChannelTensor in;
    for (std::size_t k = 0; k < c_in; ++k) in.slices.push_back(fdcheck::random_prior(n, rng));
    for (const Matrix& s : layer_forward(in, fdcheck::random_observation(n, rng), p).output.slices)
      for (std::size_t i = 0; i < n; ++i) {
        diag_ok = diag_ok && s(i, i) == 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          asym = std::max(asym, std::abs(s(i, j) - s(j, i)));
          range_ok = range_ok && s(i, j) >= 0.0 && s(i, j) <= 1.0;
        }
      }
  }

  double equi = 0;
  bool shared_ok = true;
  for (int t = 0; t < 20; ++t) {
    Rng r(t);
    const Matrix prior = fdcheck::random_prior(10, rng);
    GdnParams p = init_params(Architecture{4, 3, false, PriorMode::fixed}, r, prior);
    const SymMatrix a_o = fdcheck::random_observation(10, rng);
    const Matrix perm = random_permutation(10, rng);
    GdnParams q = p;
    q.prior = conj(perm, prior);
    const Matrix lhs = predict(SymMatrix(conj(perm, a_o.matrix())), q).weights();
    equi = std::max(equi, max_abs(lhs - conj(perm, predict(a_o, p).weights())));

    const GdnParams shared = init_params(Architecture{5, 3, true}, r);
    GdnParams copied = shared;
    copied.shared = false;
    copied.layers.assign(5, shared.layers[0]);
    shared_ok = shared_ok && forward(a_o, shared).prediction == forward(a_o, copied).prediction;
  }
  return {asym <= 1e-12 && diag_ok && range_ok && equi <= 1e-10 && shared_ok,
          fmt("asym %.2g, equivariance %.2g", asym, equi) + (diag_ok ? ", diag 0" : ", diag NONZERO") +
              (range_ok ? ", range [0,1]" : ", OUT OF RANGE") + (shared_ok ? ", shared==copied" : ", shared!=copied")};
}

Verdict scaling_identity() {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> nd;
  double worst = 0;
  for (double c : {0.5, 2.0, 10.0})
    for (int t = 0; t < 20; ++t) {
      const SymMatrix a = random_sym(6, rng);
      std::vector<double> h{nd(rng), nd(rng), nd(rng)}, hs(h);
      for (std::size_t k = 0; k < hs.size(); ++k) hs[k] /= std::pow(c, static_cast<double>(k));
      worst = std::max(worst, max_abs(mat_poly(SymMatrix(a.matrix() * c), hs).matrix() - mat_poly(a, h).matrix()));
    }
  return {worst <= 1e-10, fmt("max abs diff %.3g over 60 instances", worst)};
}

Verdict glasso_sanity() {
  const GlassoResult id = glasso(SymMatrix::identity(5), 0.1);
  bool off_zero = true;
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j)
      if (i != j) off_zero = off_zero && id.precision(i, j) == 0.0;

  std::mt19937_64 rng(6);
  double inv_err = 0;
  bool monotone = true;
  for (int t = 0; t < 20; ++t) {
    const SymMatrix s = random_pd(2, rng);
    const double det = s(0, 0) * s(1, 1) - s(0, 1) * s(0, 1);
    const Matrix inv = Matrix::from_rows({{s(1, 1) / det, -s(0, 1) / det}, {-s(0, 1) / det, s(0, 0) / det}});
    inv_err = std::max(inv_err, max_abs(glasso(s, 0.0).precision.matrix() - inv));

    const GlassoResult r = glasso(covariance_to_correlation(random_pd(6, rng)), 0.05);
    for (std::size_t k = 1; k < r.objective.size(); ++k) monotone = monotone && r.objective[k] >= r.objective[k - 1];
  }
  return {off_zero && inv_err <= 1e-6 && monotone,
          std::string(off_zero ? "identity off-diagonals 0" : "identity off-diagonals nonzero") +
              fmt(", 2x2 inverse err %.3g", inv_err) + (monotone ? ", objective monotone" : ", objective NOT monotone")};
}

Verdict persistence() {
  DatasetRecipe rec;
  rec.ensemble.kind = EnsembleKind::ER;
  rec.ensemble.n = 9;
  rec.ensemble.p = 0.4;
  rec.train = 4;
  rec.val = 2;
  rec.test = 2;
  rec.seed = 99;
  const GraphPairDataset ds = build_dataset(rec);
  const auto bytes = encode_dataset(ds);
  const GraphPairDataset back = decode_dataset(bytes);
  const bool ds_ok = back == ds && encode_dataset(back) == bytes;

  std::mt19937_64 rng(17);
  Rng r(4);
  const GdnParams p = init_params(Architecture{3, 4, false, PriorMode::learned}, r, fdcheck::random_prior(9, rng));
  const Checkpoint ck{p, 0.3141592653589793, Task::link, {1.25}};
  const std::string text = encode_checkpoint(ck);
  const Checkpoint ck_back = decode_checkpoint(text);
  const bool ck_ok = ck_back.params == p && ck_back.threshold == ck.threshold && encode_checkpoint(ck_back) == text;

  std::uniform_int_distribution<std::size_t> pos(0, bytes.size() - 1);
  std::uniform_int_distribution<int> flip(1, 255);
  int caught = 0;
  for (int t = 0; t < 100; ++t) {
    auto bad = bytes;
    bad[pos(rng)] ^= static_cast<std::uint8_t>(flip(rng));
    try {
      decode_dataset(bad);
    } catch (const IoError&) {
      ++caught;
    }
  }
  return {ds_ok && ck_ok && caught == 100,
          std::string(ds_ok ? "dataset bit-exact" : "dataset MISMATCH") + (ck_ok ? ", checkpoint bit-exact" : ", checkpoint MISMATCH") +
              fmt(", %.0f/100 corruptions detected", caught)};
}

}  // namespace

int main() {
  BenchmarkReport link;
  const std::vector<std::pair<int, std::function<Verdict()>>> criteria = {
      {1, gradient_correctness},
      {2, gradient_algebra},
      {3, nd_inversion},
      {4, [&] { return benchmark_ordering(link); }},
      {5, [&] { return k0_gap(link); }},
      {6, prior_ordering},
      {7, size_generalization},
      {8, model_invariants},
      {9, scaling_identity},
      {10, glasso_sanity},
      {11, persistence},
  };
  int failed = 0;
  for (const auto& [id, run] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s criterion %d: %s [%.1fs]\n", v.pass ? "PASS" : "FAIL", id, v.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !v.pass;
  }
  return failed == 0 ? 0 : 1;
}
