#include "fdmgdl/helmholtz_fd.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

namespace fdmgdl {

void ProblemSpec::validate() const {
  grid.validate();
  if (!kappa || !source || !boundary) throw std::invalid_argument("ProblemSpec: kappa, f and g are required");
  if (channels != 1 && channels != 2) throw std::invalid_argument("ProblemSpec: channels must be 1 or 2");
}

namespace {

struct StencilTerm {
  std::size_t closure;
  double coeff;
};

// Second-difference terms (without the kappa^2 term) for interior node j.
void stencil_terms(const Grid& g, const MultiIndex& j, StencilOrder order, std::vector<StencilTerm>& out) {
  out.clear();
  const int d = g.dim();
  const int m = g.m();
  const double ih2 = 1.0 / (g.h() * g.h());
  const std::size_t c = g.closure_flat(j);
  double center = 0.0;
  std::size_t stride = 1;
  for (int i = d - 1; i >= 0; --i) {
    const bool five = order == StencilOrder::Fourth && j[i] >= 2 && j[i] <= m - 1;
    if (five) {
      const double s = ih2 / 12.0;
      out.push_back({c - 2 * stride, -s});
      out.push_back({c - stride, 16.0 * s});
      out.push_back({c + stride, 16.0 * s});
      out.push_back({c + 2 * stride, -s});
      center += -30.0 * s;
    } else {
      out.push_back({c - stride, ih2});
      out.push_back({c + stride, ih2});
      center += -2.0 * ih2;
    }
    stride *= static_cast<std::size_t>(g.closure_n());
  }
  out.push_back({c, center});
}

void check_order(const Grid& g, StencilOrder order) {
  if (order == StencilOrder::Fourth && g.m() < 3)
    throw std::invalid_argument("fourth-order stencil requires m >= 3");
}

}  // namespace

Complex lifted_eval(const ModelEval& model, const ProblemSpec& spec, const Grid& grid, const Point& x) {
  MultiIndex j{0, 0, 0};
  const double h = grid.h();
  for (int i = 0; i < grid.dim(); ++i) {
    const double s = (x[i] - grid.spec().a) / h;
    const double r = std::round(s);
    if (std::abs(s - r) > 1e-9 || r < 0 || r > grid.m() + 1)
      throw std::invalid_argument("lifted_eval: point is not a lattice node");
    j[i] = static_cast<int>(r);
  }
  const Point node = grid.node(j);
  if (grid.on_boundary(j)) return spec.boundary(node);
  return model(node);
}

NodeField lift(const InteriorField& interior, const ProblemSpec& spec, const Grid& grid) {
  if (interior.size() != static_cast<long>(grid.interior_count()))
    throw std::invalid_argument("lift: interior field has wrong length");
  NodeField v(static_cast<long>(grid.closure_count()));
  for (std::size_t k = 0; k < grid.closure_count(); ++k) {
    const MultiIndex j = grid.closure_multi(k);
    if (grid.on_boundary(j))
      v[static_cast<long>(k)] = spec.boundary(grid.node(j));
    else
      v[static_cast<long>(k)] = interior[static_cast<long>(grid.flat_index(j))];
  }
  return v;
}

InteriorField apply_discrete_operator(const NodeField& v, const ProblemSpec& spec, const Grid& grid,
                                      StencilOrder order) {
  check_order(grid, order);
  if (v.size() != static_cast<long>(grid.closure_count()))
    throw std::invalid_argument("apply_discrete_operator: field must cover the closure lattice");
  InteriorField out(static_cast<long>(grid.interior_count()));
  std::vector<StencilTerm> terms;
  for (std::size_t k = 0; k < grid.interior_count(); ++k) {
    const MultiIndex j = grid.multi_index(k);
    stencil_terms(grid, j, order, terms);
    Complex acc = 0.0;
    for (const auto& t : terms) acc += t.coeff * v[static_cast<long>(t.closure)];
    const double kap = spec.kappa(grid.interior_points()[k]);
    acc += kap * kap * v[static_cast<long>(grid.closure_flat(j))];
    out[static_cast<long>(k)] = acc;
  }
  return out;
}

InteriorField residual(const ModelEval& model, const ProblemSpec& spec, const Grid& grid,
                       StencilOrder order) {
  InteriorField y(static_cast<long>(grid.interior_count()));
  for (std::size_t k = 0; k < grid.interior_count(); ++k) {
    const Complex val = model(grid.interior_points()[k]);
    if (!std::isfinite(val.real()) || !std::isfinite(val.imag()))
      throw std::domain_error("residual: non-finite model output");
    y[static_cast<long>(k)] = val;
  }
  const InteriorField Av = apply_discrete_operator(lift(y, spec, grid), spec, grid, order);
  InteriorField r(Av.size());
  for (long k = 0; k < r.size(); ++k) r[k] = spec.source(grid.interior_points()[k]) - Av[k];
  return r;
}

double loss(const ModelEval& model, const ProblemSpec& spec, const Grid& grid, StencilOrder order) {
  const double s = seminorm(residual(model, spec, grid, order));
  return s * s;
}

double seminorm(const InteriorField& v) {
  if (v.size() == 0) throw std::invalid_argument("seminorm: empty field");
  return std::sqrt(v.squaredNorm() / static_cast<double>(v.size()));
}

double seminorm(const Vector& v) {
  if (v.size() == 0) throw std::invalid_argument("seminorm: empty field");
  return std::sqrt(v.squaredNorm() / static_cast<double>(v.size()));
}

FdSystem assemble_system(const ProblemSpec& spec, const Grid& grid, StencilOrder order) {
  spec.validate();
  check_order(grid, order);
  const long n = static_cast<long>(grid.interior_count());
  FdSystem sys;
  sys.channels = spec.channels;
  sys.rhs.resize(n);
  std::vector<Eigen::Triplet<Complex>> trips;
  trips.reserve(static_cast<std::size_t>(n) * (order == StencilOrder::Fourth ? 4 * grid.dim() + 1 : 2 * grid.dim() + 1));
  std::vector<StencilTerm> terms;
  for (long k = 0; k < n; ++k) {
    const MultiIndex j = grid.multi_index(static_cast<std::size_t>(k));
    const Point& x = grid.interior_points()[static_cast<std::size_t>(k)];
    stencil_terms(grid, j, order, terms);
    Complex rhs = spec.source(x);
    const double kap = spec.kappa(x);
    for (const auto& t : terms) {
      const long col = grid.interior_of_closure(t.closure);
      if (col < 0) {
        rhs -= t.coeff * spec.boundary(grid.node(grid.closure_multi(t.closure)));
      } else {
        const double coeff = col == k ? t.coeff + kap * kap : t.coeff;
        trips.emplace_back(k, col, Complex(coeff, 0.0));
      }
    }
    sys.rhs[k] = rhs;
  }
  sys.A.resize(n, n);
  sys.A.setFromTriplets(trips.begin(), trips.end());
  sys.A.makeCompressed();
  return sys;
}

Matrix normalized_inputs(const std::vector<Point>& points, const GridSpec& g) {
  Matrix x(g.d, static_cast<long>(points.size()));
  const double L = g.b - g.a;
  for (std::size_t k = 0; k < points.size(); ++k)
    for (int i = 0; i < g.d; ++i) x(i, static_cast<long>(k)) = (points[k][i] - g.a) / L;
  return x;
}

InteriorField outputs_to_field(const Matrix& y) {
  InteriorField v(y.cols());
  if (y.rows() == 1) {
    for (long k = 0; k < y.cols(); ++k) v[k] = Complex(y(0, k), 0.0);
  } else if (y.rows() == 2) {
    for (long k = 0; k < y.cols(); ++k) v[k] = Complex(y(0, k), y(1, k));
  } else {
    throw std::invalid_argument("outputs_to_field: network must have 1 or 2 outputs");
  }
  return v;
}

Matrix field_to_outputs(const InteriorField& v, int channels) {
  Matrix y(channels, v.size());
  for (long k = 0; k < v.size(); ++k) {
    y(0, k) = v[k].real();
    if (channels == 2) y(1, k) = v[k].imag();
  }
  return y;
}

FdObjective::FdObjective(const FdSystem& sys) : sys_(&sys), AH_(sys.A.adjoint()) {}

InteriorField FdObjective::apply(const Matrix& y) const {
  if (y.rows() != sys_->channels || y.cols() != sys_->size())
    throw std::invalid_argument("FdObjective: output shape does not match the system");
  return sys_->A * outputs_to_field(y);
}

InteriorField FdObjective::residual(const Matrix& y, const InteriorField& target) const {
  return target - apply(y);
}

double FdObjective::loss(const Matrix& y, const InteriorField& target) const {
  const InteriorField r = residual(y, target);
  return r.squaredNorm() / static_cast<double>(r.size());
}

Matrix FdObjective::cotangent(const InteriorField& r) const {
  const InteriorField w = AH_ * r;
  const double s = -2.0 / static_cast<double>(r.size());
  Matrix g(sys_->channels, r.size());
  for (long k = 0; k < r.size(); ++k) {
    g(0, k) = s * w[k].real();
    if (sys_->channels == 2) g(1, k) = s * w[k].imag();
  }
  return g;
}

double network_loss_and_grad(const Mlp& net, const Matrix& inputs, const FdObjective& obj,
                             const InteriorField& target, std::span<double> grad,
                             TrainingWorkspace* ws) {
  TrainingWorkspace local;
  TrainingWorkspace& w = ws ? *ws : local;
  w.y = net.forward(inputs, &w.cache);
  const FdSystem& sys = obj.system();
  if (w.y.rows() != sys.channels || w.y.cols() != sys.size())
    throw std::invalid_argument("network_loss_and_grad: output shape does not match the system");
  const long n = sys.size();
  w.field.resize(n);
  if (sys.channels == 1)
    for (long k = 0; k < n; ++k) w.field[k] = Complex(w.y(0, k), 0.0);
  else
    for (long k = 0; k < n; ++k) w.field[k] = Complex(w.y(0, k), w.y(1, k));
  w.r.noalias() = sys.A * w.field;
  w.r = target - w.r;
  const double L = w.r.squaredNorm() / static_cast<double>(n);
  if (!std::isfinite(L)) return L;
  w.w.noalias() = obj.adjoint() * w.r;
  const double s = -2.0 / static_cast<double>(n);
  w.cot.resize(sys.channels, n);
  for (long k = 0; k < n; ++k) {
    w.cot(0, k) = s * w.w[k].real();
    if (sys.channels == 2) w.cot(1, k) = s * w.w[k].imag();
  }
  net.backward(w.cache, w.cot, grad);
  return L;
}

std::vector<double> loss_gradient(const Mlp& net, const ProblemSpec& spec, const Grid& grid,
                                  StencilOrder order) {
  if (net.output_dim() != spec.channels)
    throw std::invalid_argument("loss_gradient: network outputs do not match the problem channels");
  const FdSystem sys = assemble_system(spec, grid, order);
  const FdObjective obj(sys);
  const Matrix x = normalized_inputs(grid.interior_points(), spec.grid);
  std::vector<double> grad(net.param_count(), 0.0);
  const double L = network_loss_and_grad(net, x, obj, sys.rhs, grad);
  if (!std::isfinite(L)) throw std::domain_error("loss_gradient: non-finite loss");
  return grad;
}

std::string to_string(PolishResult::Choice c) {
  switch (c) {
    case PolishResult::Choice::LeastSquares: return "least_squares";
    case PolishResult::Choice::Current: return "current";
    case PolishResult::Choice::Zero: return "zero";
  }
  return "unknown";
}

PolishResult polish_output_layer(Mlp& net, const Matrix& features, const FdObjective& obj,
                                 const InteriorField& target, double ridge) {
  const int out = net.depth() - 1;
  const int q = net.feature_dim();
  const int c = net.output_dim();
  if (features.rows() != q || features.cols() != obj.size())
    throw std::invalid_argument("polish_output_layer: feature matrix shape mismatch");
  if (c != obj.system().channels)
    throw std::invalid_argument("polish_output_layer: channel mismatch");
  const long n = obj.size();

  PolishResult res;
  res.loss_before = obj.loss(net.output_from_features(features), target);
  res.loss_zero = target.squaredNorm() / static_cast<double>(n);

  // Design G = A [H; 1]^T, one column per output-layer weight of a channel.
  Eigen::MatrixXcd Ht(n, q + 1);
  Ht.leftCols(q) = features.transpose().cast<Complex>();
  Ht.col(q).setConstant(Complex(1.0, 0.0));
  const Eigen::MatrixXcd G = obj.system().A * Ht;
  Ht.resize(0, 0);

  const long cols = static_cast<long>(c) * (q + 1);
  const long rows = static_cast<long>(c) * n;
  Matrix B(rows, cols);
  Vector rhs(rows);
  if (c == 1) {
    B = G.real();
    rhs = target.real();
  } else {
    B.topLeftCorner(n, q + 1) = G.real();
    B.topRightCorner(n, q + 1) = -G.imag();
    B.bottomLeftCorner(n, q + 1) = G.imag();
    B.bottomRightCorner(n, q + 1) = G.real();
    rhs.head(n) = target.real();
    rhs.tail(n) = target.imag();
  }

  Vector sol;
  bool ok = true;
  if (rows * cols <= 40'000'000L) {
    Eigen::ColPivHouseholderQR<Matrix> qr(B);
    sol = qr.solve(rhs);
  } else {
    Matrix N = B.transpose() * B;
    const Vector Bt = B.transpose() * rhs;
    const double scale = N.diagonal().maxCoeff();
    N.diagonal().array() += ridge * (scale > 0.0 ? scale : 1.0);
    Eigen::LDLT<Matrix> ldlt(N);
    if (ldlt.info() != Eigen::Success) ok = false;
    else sol = ldlt.solve(Bt);
  }
  if (ok && !sol.allFinite()) ok = false;
  res.solve_failed = !ok;

  auto W = net.weight(out);
  auto b = net.bias(out);
  const Matrix W0 = W;
  const Vector b0 = b;
  double ls_loss = std::numeric_limits<double>::infinity();
  if (ok) {
    for (int ch = 0; ch < c; ++ch) {
      const auto seg = sol.segment(static_cast<long>(ch) * (q + 1), q + 1);
      W.row(ch) = seg.head(q).transpose();
      b(ch) = seg(q);
    }
    ls_loss = obj.loss(net.output_from_features(features), target);
    if (!std::isfinite(ls_loss)) ls_loss = std::numeric_limits<double>::infinity();
  }

  if (ls_loss <= res.loss_before && ls_loss <= res.loss_zero) {
    res.choice = PolishResult::Choice::LeastSquares;
    res.loss_after = ls_loss;
  } else if (res.loss_before <= res.loss_zero) {
    W = W0;
    b = b0;
    res.choice = PolishResult::Choice::Current;
    res.loss_after = res.loss_before;
  } else {
    W.setZero();
    b.setZero();
    res.choice = PolishResult::Choice::Zero;
    res.loss_after = res.loss_zero;
  }
  return res;
}

}  // namespace fdmgdl
