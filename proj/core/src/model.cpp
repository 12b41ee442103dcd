#include "gdn/model.hpp"

#include <cmath>
#include <sstream>

#include "gdn/errors.hpp"

namespace gdn {

std::string to_string(PriorMode m) {
  switch (m) {
    case PriorMode::zeros: return "zeros";
    case PriorMode::ones: return "ones";
    case PriorMode::fixed: return "fixed";
    case PriorMode::learned: return "learned";
  }
  return "?";
}

PriorMode prior_mode_from_string(const std::string& s) {
  if (s == "zeros") return PriorMode::zeros;
  if (s == "ones") return PriorMode::ones;
  if (s == "fixed") return PriorMode::fixed;
  if (s == "learned") return PriorMode::learned;
  throw Error("unknown prior mode '" + s + "'");
}

std::string to_string(Variant v) { return v == Variant::full ? "full" : "no_linear"; }

Variant variant_from_string(const std::string& s) {
  if (s == "full") return Variant::full;
  if (s == "no_linear" || s == "k0") return Variant::no_linear;
  throw Error("unknown model variant '" + s + "'");
}

LayerParams LayerParams::zeros(std::size_t c_out, std::size_t c_in) {
  return LayerParams{Matrix(c_out, c_in), Matrix(c_out, c_in), Matrix(c_out, c_in),
                     std::vector<double>(c_out, 0.0)};
}

std::size_t GdnParams::parameter_count() const {
  std::size_t c = 0;
  for (const auto& l : layers) c += l.parameter_count();
  if (prior_mode == PriorMode::learned) c += prior.size();
  return c;
}

Architecture GdnParams::architecture() const {
  std::size_t c = 0;
  for (const auto& l : layers) c = std::max(c, l.c_out());
  return Architecture{depth, c, shared, prior_mode, variant};
}

void GdnParams::validate() const {
  if (depth < 1) throw ShapeError("GdnParams: depth must be >= 1");
  if (layers.size() != (shared ? 1 : depth)) {
    std::ostringstream os;
    os << "GdnParams: expected " << (shared ? 1 : depth) << " layer records, found "
       << layers.size();
    throw ShapeError(os.str());
  }
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const LayerParams& l = layers[k];
    if (l.c_out() < 1 || l.c_in() < 1) throw ShapeError("GdnParams: empty layer");
    if (l.beta.rows() != l.c_out() || l.beta.cols() != l.c_in() || l.gamma.rows() != l.c_out() ||
        l.gamma.cols() != l.c_in() || l.tau.size() != l.c_out())
      throw ShapeError("GdnParams: inconsistent layer record shapes");
    if (k + 1 < layers.size() && layers[k + 1].c_in() != l.c_out())
      throw ShapeError("GdnParams: channel widths of consecutive layers do not chain");
    for (double t : l.tau)
      if (!(t >= 0.0)) throw InvariantError("GdnParams: tau must be nonnegative");
    if (!all_finite(l.alpha) || !all_finite(l.beta) || !all_finite(l.gamma))
      throw InvariantError("GdnParams: non-finite filter weight");
  }
  if (shared && layers[0].c_in() != layers[0].c_out())
    throw ShapeError("GdnParams: shared layer must map C -> C");
  const bool needs_prior = prior_mode == PriorMode::fixed || prior_mode == PriorMode::learned;
  if (needs_prior) {
    if (prior.empty() || !prior.square()) throw ShapeError("GdnParams: prior matrix missing");
    if (!is_symmetric(prior, 0.0)) throw InvariantError("GdnParams: prior is not symmetric");
  } else if (!prior.empty()) {
    throw ShapeError("GdnParams: prior matrix given for prior mode " + to_string(prior_mode));
  }
}

namespace {

std::vector<std::pair<std::size_t, std::size_t>> layer_widths(const Architecture& arch) {
  std::vector<std::pair<std::size_t, std::size_t>> w;  // (c_out, c_in)
  const std::size_t c = arch.channels;
  if (arch.shared) {
    w.emplace_back(c, c);
    return w;
  }
  for (std::size_t k = 0; k < arch.depth; ++k) {
    const std::size_t c_in = k == 0 ? 1 : c;
    const std::size_t c_out = k + 1 == arch.depth ? 1 : c;
    w.emplace_back(c_out, c_in);
  }
  return w;
}

GdnParams skeleton(const Architecture& arch, const Matrix& prior) {
  if (arch.depth < 1 || arch.channels < 1)
    throw ShapeError("Architecture: depth and channels must be >= 1");
  GdnParams p;
  p.depth = arch.depth;
  p.shared = arch.shared;
  p.prior_mode = arch.prior_mode;
  p.variant = arch.variant;
  if (arch.prior_mode == PriorMode::fixed || arch.prior_mode == PriorMode::learned) {
    if (prior.empty()) throw ShapeError("init_params: prior mode " + to_string(arch.prior_mode) +
                                        " needs a prior matrix");
    p.prior = prior;
  }
  for (auto [c_out, c_in] : layer_widths(arch)) p.layers.push_back(LayerParams::zeros(c_out, c_in));
  return p;
}

}  // namespace

GdnParams init_params(const Architecture& arch, Rng& rng, const Matrix& prior) {
  GdnParams p = skeleton(arch, prior);
  for (LayerParams& l : p.layers) {
    const double s = 1.0 / std::sqrt(3.0 * static_cast<double>(l.c_in()));
    std::uniform_real_distribution<double> u(-s, s);
    for (Matrix* m : {&l.alpha, &l.beta, &l.gamma})
      for (double& v : m->values()) v = u(rng);
    for (double& t : l.tau) t = 0.1;
  }
  p.validate();
  return p;
}

GdnParams zero_params(const Architecture& arch, const Matrix& prior) {
  GdnParams p = skeleton(arch, prior);
  p.validate();
  return p;
}

GdnGrads zero_grads(const GdnParams& p) {
  GdnGrads g;
  for (const auto& l : p.layers) g.layers.push_back(LayerParams::zeros(l.c_out(), l.c_in()));
  if (p.prior_mode == PriorMode::learned) g.prior = Matrix(p.prior.rows(), p.prior.cols());
  return g;
}

Matrix materialize_prior(const GdnParams& p, std::size_t n) {
  switch (p.prior_mode) {
    case PriorMode::zeros: return Matrix(n, n);
    case PriorMode::ones: {
      Matrix m(n, n, 1.0);
      m.zero_diagonal();
      return m;
    }
    case PriorMode::fixed:
    case PriorMode::learned:
      if (p.prior.rows() != n || p.prior.cols() != n) {
        std::ostringstream os;
        os << "prior is " << p.prior.rows() << 'x' << p.prior.cols() << " but observation is " << n
           << 'x' << n;
        throw ShapeError(os.str());
      }
      return p.prior;
  }
  throw Error("materialize_prior: unknown prior mode");
}

ChannelTensor ChannelTensor::replicate(const Matrix& m, std::size_t c) {
  return ChannelTensor{std::vector<Matrix>(c, m)};
}

namespace {

// Frozen alpha of the no_linear variant: output j reads input j mod c_in.
double selector(std::size_t j, std::size_t i, std::size_t c_in) { return i == j % c_in ? 1.0 : 0.0; }

double effective_alpha(const LayerParams& p, Variant v, std::size_t j, std::size_t i) {
  return v == Variant::full ? p.alpha(j, i) : selector(j, i, p.c_in());
}

}  // namespace

LayerResult layer_forward(const ChannelTensor& a_k, const SymMatrix& a_o, const LayerParams& p,
                          Variant variant) {
  const std::size_t c_in = p.c_in(), c_out = p.c_out(), n = a_o.n();
  if (a_k.channels() != c_in) {
    std::ostringstream os;
    os << "layer_forward: input has " << a_k.channels() << " channels, layer expects " << c_in;
    throw ShapeError(os.str());
  }
  for (const Matrix& s : a_k.slices)
    if (s.rows() != n || s.cols() != n) throw ShapeError("layer_forward: slice size mismatch");

  const Matrix& s = a_o.matrix();
  LayerResult r;
  LayerTape& t = r.tape;
  t.input = a_k;
  if (variant == Variant::full) {
    t.mixed.resize(c_in);
    Matrix prod;
    for (std::size_t i = 0; i < c_in; ++i) {
      matmul_into(s, a_k.slices[i], prod);
      Matrix& b = t.mixed[i];
      b = Matrix(n, n);
      // (A_O A)^T = A A_O for symmetric operands.
      for (std::size_t x = 0; x < n; ++x)
        for (std::size_t y = 0; y < n; ++y) b(x, y) = prod(x, y) + prod(y, x);
    }
  }

  t.normalized.resize(c_out);
  t.output.resize(c_out);
  t.scale.assign(c_out, 0.0);
  t.anchor.assign(c_out, 0);
  t.divided.assign(c_out, 0);
  const double inv_c = 1.0 / static_cast<double>(c_in);
  for (std::size_t j = 0; j < c_out; ++j) {
    Matrix u(n, n);
    double gsum = 0.0;
    for (std::size_t i = 0; i < c_in; ++i) {
      const double a = effective_alpha(p, variant, j, i);
      if (a != 0.0) u.add_scaled(a_k.slices[i], a);
      if (variant == Variant::full) u.add_scaled(t.mixed[i], p.beta(j, i));
      gsum += p.gamma(j, i);
    }
    u.add_scaled(s, gsum);
    u *= inv_c;
    u.zero_diagonal();

    double m = 0.0;
    std::size_t arg = 0;
    const auto vals = u.values();
    for (std::size_t k = 0; k < vals.size(); ++k) {
      const double av = std::abs(vals[k]);
      if (av > m) {
        m = av;
        arg = k;
      }
    }
    t.scale[j] = m;
    t.anchor[j] = arg;
    if (m >= kNormEpsilon) {
      t.divided[j] = 1;
      for (double& v : u.values()) v /= m;
    }

    Matrix out(n, n);
    const double tau = p.tau[j];
    const double* src = u.data();
    double* dst = out.data();
    for (std::size_t k = 0; k < u.size(); ++k) {
      const double z = src[k] - tau;
      dst[k] = z > 0.0 ? z : 0.0;
    }
    t.normalized[j] = std::move(u);
    t.output[j] = std::move(out);
  }
  r.output.slices = t.output;
  return r;
}

namespace {

ForwardResult run_forward(const SymMatrix& a_o, const GdnParams& params, Variant variant,
                          bool record) {
  params.validate();
  const std::size_t n = a_o.n();
  ChannelTensor x = ChannelTensor::replicate(materialize_prior(params, n), params.input_channels());
  Tape tape;
  tape.variant = variant;
  if (record) {
    tape.a_o = a_o;
    tape.widths.push_back(params.input_channels());
  }
  for (std::size_t k = 0; k < params.depth; ++k) {
    LayerResult lr = layer_forward(x, a_o, params.layer(k), variant);
    x = std::move(lr.output);
    if (record) {
      tape.widths.push_back(x.channels());
      tape.layers.push_back(std::move(lr.tape));
    }
  }
  return ForwardResult{Adjacency(std::move(x.slices.front())), std::move(tape)};
}

}  // namespace

ForwardResult forward(const SymMatrix& a_o, const GdnParams& params) {
  return run_forward(a_o, params, params.variant, true);
}

ForwardResult forward_k0(const SymMatrix& a_o, const GdnParams& params) {
  return run_forward(a_o, params, Variant::no_linear, true);
}

Adjacency predict(const SymMatrix& a_o, const GdnParams& params) {
  return run_forward(a_o, params, params.variant, false).prediction;
}

namespace {

// Backpropagates through one layer. Accumulates parameter gradients into
// `g` and returns the gradient w.r.t. the layer input when requested.
ChannelTensor layer_backward(const LayerTape& t, const Matrix& s, const LayerParams& p,
                             Variant variant, const ChannelTensor& d_out, LayerParams& g,
                             bool want_input_grad) {
  const std::size_t c_in = p.c_in(), c_out = p.c_out(), n = s.rows();
  const double inv_c = 1.0 / static_cast<double>(c_in);
  std::vector<Matrix> d_u(c_out);
  for (std::size_t j = 0; j < c_out; ++j) {
    const Matrix& out = t.output[j];
    const Matrix& nrm = t.normalized[j];
    Matrix dz(n, n);
    const double* dout = d_out.slices[j].data();
    const double* o = out.data();
    const double* nv = nrm.data();
    double* dzv = dz.data();
    double dtau = 0.0;
    double corr = 0.0;
    for (std::size_t k = 0; k < dz.size(); ++k) {
      const double dn = o[k] > 0.0 ? dout[k] : 0.0;
      dtau -= dn;
      corr += dn * nv[k];
      dzv[k] = dn;
    }
    g.tau[j] += dtau;
    if (t.divided[j]) {
      const double m = t.scale[j];
      const double sign = nv[t.anchor[j]] >= 0.0 ? 1.0 : -1.0;
      for (double& v : dz.values()) v /= m;
      dzv[t.anchor[j]] -= sign * corr / m;
    }
    dz.zero_diagonal();
    dz *= inv_c;

    const double dg = inner(dz, s);
    for (std::size_t i = 0; i < c_in; ++i) {
      g.gamma(j, i) += dg;
      if (variant == Variant::full) {
        g.alpha(j, i) += inner(dz, t.input.slices[i]);
        g.beta(j, i) += inner(dz, t.mixed[i]);
      }
    }
    d_u[j] = std::move(dz);
  }

  ChannelTensor d_in;
  if (!want_input_grad) return d_in;
  d_in.slices.resize(c_in);
  Matrix gb(n, n), tmp;
  for (std::size_t i = 0; i < c_in; ++i) {
    Matrix d(n, n);
    gb.fill(0.0);
    for (std::size_t j = 0; j < c_out; ++j) {
      const double a = effective_alpha(p, variant, j, i);
      if (a != 0.0) d.add_scaled(d_u[j], a);
      if (variant == Variant::full) gb.add_scaled(d_u[j], p.beta(j, i));
    }
    if (variant == Variant::full) {
      matmul_into(s, gb, tmp);
      d += tmp;
      matmul_into(gb, s, tmp);
      d += tmp;
    }
    d_in.slices[i] = std::move(d);
  }
  return d_in;
}

}  // namespace

GdnGrads backward(const Tape& tape, const GdnParams& params, const Matrix& d_pred) {
  if (tape.layers.size() != params.depth)
    throw ShapeError("backward: tape depth does not match parameters");
  if (tape.widths.empty() || tape.widths.front() != params.input_channels())
    throw ShapeError("backward: tape input width does not match parameters");
  for (std::size_t k = 0; k < params.depth; ++k) {
    const LayerParams& l = params.layer(k);
    if (tape.widths[k] != l.c_in() || tape.widths[k + 1] != l.c_out())
      throw ShapeError("backward: tape channel widths do not match parameters");
  }
  const std::size_t n = tape.a_o.n();
  if (d_pred.rows() != n || d_pred.cols() != n)
    throw ShapeError("backward: d_pred shape does not match the observation");

  GdnGrads g = zero_grads(params);
  const Matrix& s = tape.a_o.matrix();
  ChannelTensor d;
  d.slices.assign(tape.widths.back(), Matrix(n, n));
  d.slices[0] = d_pred;
  const bool learned = params.prior_mode == PriorMode::learned;
  for (std::size_t k = params.depth; k-- > 0;) {
    LayerParams& gl = g.layers[params.shared ? 0 : k];
    d = layer_backward(tape.layers[k], s, params.layer(k), tape.variant, d, gl, k > 0 || learned);
  }
  if (learned) {
    Matrix gp(n, n);
    for (const Matrix& sl : d.slices) gp += sl;
    g.prior = std::move(gp);
  }
  return g;
}

std::vector<double> flatten(const GdnParams& p) {
  std::vector<double> out;
  out.reserve(p.parameter_count());
  for (const auto& l : p.layers) {
    for (const Matrix* m : {&l.alpha, &l.beta, &l.gamma})
      out.insert(out.end(), m->values().begin(), m->values().end());
    out.insert(out.end(), l.tau.begin(), l.tau.end());
  }
  if (p.prior_mode == PriorMode::learned)
    out.insert(out.end(), p.prior.values().begin(), p.prior.values().end());
  return out;
}

void unflatten(std::span<const double> values, GdnParams& p) {
  if (values.size() != p.parameter_count()) {
    std::ostringstream os;
    os << "unflatten: expected " << p.parameter_count() << " values, got " << values.size();
    throw ShapeError(os.str());
  }
  std::size_t k = 0;
  for (auto& l : p.layers) {
    for (Matrix* m : {&l.alpha, &l.beta, &l.gamma})
      for (double& v : m->values()) v = values[k++];
    for (double& t : l.tau) t = values[k++];
  }
  if (p.prior_mode == PriorMode::learned)
    for (double& v : p.prior.values()) v = values[k++];
}

std::vector<double> flatten(const GdnGrads& g, const GdnParams& layout) {
  std::vector<double> out;
  out.reserve(layout.parameter_count());
  if (g.layers.size() != layout.layers.size())
    throw ShapeError("flatten: gradient layout does not match parameters");
  for (const auto& l : g.layers) {
    for (const Matrix* m : {&l.alpha, &l.beta, &l.gamma})
      out.insert(out.end(), m->values().begin(), m->values().end());
    out.insert(out.end(), l.tau.begin(), l.tau.end());
  }
  if (layout.prior_mode == PriorMode::learned) {
    if (g.prior.size() != layout.prior.size())
      throw ShapeError("flatten: missing prior gradient");
    out.insert(out.end(), g.prior.values().begin(), g.prior.values().end());
  }
  if (out.size() != layout.parameter_count())
    throw ShapeError("flatten: gradient layout does not match parameters");
  return out;
}

void project(GdnParams& p) {
  for (auto& l : p.layers)
    for (double& t : l.tau) t = std::max(t, 0.0);
  if (p.prior_mode == PriorMode::learned) {
    Matrix& a = p.prior;
    const std::size_t n = a.rows();
    for (std::size_t i = 0; i < n; ++i) {
      a(i, i) = 0.0;
      for (std::size_t j = i + 1; j < n; ++j) {
        const double v = std::max(0.5 * (a(i, j) + a(j, i)), 0.0);
        a(i, j) = a(j, i) = v;
      }
    }
  }
}

}  // namespace gdn
