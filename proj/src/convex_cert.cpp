#include "fdmgdl/convex_cert.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <random>
#include <stdexcept>

#include "fdmgdl/mgdl.hpp"
#include "fdmgdl/nnls.hpp"
#include "fdmgdl/simplex.hpp"

namespace fdmgdl {

void TrainingSlice::validate() const {
  if (X.rows() < 1 || X.cols() < 1) throw std::invalid_argument("slice: empty feature matrix");
  if (e.size() != X.rows()) throw std::invalid_argument("slice: target length differs from node count");
  if (A.rows() != X.rows() || A.cols() != X.rows()) throw std::invalid_argument("slice: operator must be n x n");
  if (!X.allFinite() || !e.allFinite() || !A.allFinite()) throw std::invalid_argument("slice: non-finite entries");
}

TrainingSlice make_slice(const Matrix& features, const InteriorField& target, const FdSystem& sys) {
  if (sys.channels != 1) throw std::invalid_argument("make_slice: only real-valued systems are supported");
  TrainingSlice s;
  s.X = features.transpose();
  s.e = target.real();
  s.A = Eigen::MatrixXcd(sys.A).real();
  s.validate();
  return s;
}

long pattern_bound(int n, int p) {
  long total = 0;
  for (int j = 0; j < p; ++j) {
    long c = 1;
    for (int k = 0; k < j; ++k) c = c * (n - 1 - k) / (k + 1);
    if (j <= n - 1) total += c;
  }
  return 2 * total;
}

namespace {

void check_desk_scale(const Matrix& X) {
  if (X.rows() > kMaxCertifierRows || X.cols() > kMaxCertifierCols)
    throw std::invalid_argument("certifier limited to n <= 12 and p <= 4");
}

// Solves for w with X_k.w >= lo_k on D=1 rows and X_k.w <= -1 on D=0 rows.
std::optional<Vector> pattern_witness(const Matrix& X, const Eigen::VectorXi& D, double one_side) {
  const long n = X.rows(), p = X.cols();
  Matrix A = Matrix::Zero(n, 2 * p + n);
  Vector b(n);
  for (long k = 0; k < n; ++k) {
    const double s = D(k) ? 1.0 : -1.0;
    A.row(k).head(p) = s * X.row(k);
    A.row(k).segment(p, p) = -s * X.row(k);
    A(k, 2 * p + k) = -1.0;
    b(k) = D(k) ? one_side : 1.0;
  }
  const auto x = find_feasible_point(A, b);
  if (!x) return std::nullopt;
  return Vector(x->head(p) - x->segment(p, p));
}

bool matches(const Matrix& X, const Vector& w, const Eigen::VectorXi& D) {
  const Vector z = X * w;
  for (long k = 0; k < z.size(); ++k)
    if ((z(k) >= 0.0) != (D(k) == 1)) return false;
  return true;
}

}  // namespace

PatternSet enumerate_patterns(const Matrix& X, double margin) {
  check_desk_scale(X);
  if (X.rows() < 1 || X.cols() < 1) throw std::invalid_argument("enumerate_patterns: empty matrix");
  const long n = X.rows();
  PatternSet out;
  for (long mask = 0; mask < (1L << n); ++mask) {
    Eigen::VectorXi D(n);
    for (long k = 0; k < n; ++k) D(k) = static_cast<int>((mask >> (n - 1 - k)) & 1);
    if (D.sum() == n) {
      out.patterns.push_back(D);
      out.witnesses.push_back(Vector::Zero(X.cols()));
      continue;
    }
    // Interior witness first; boundary patterns fall back to X_k.w >= 0.
    std::optional<Vector> w = pattern_witness(X, D, 1.0);
    if (!w || !matches(X, *w, D)) w = pattern_witness(X, D, 0.0);
    if (!w) continue;
    Vector z = X * *w;
    bool ok = true;
    for (long k = 0; k < n; ++k) {
      if (D(k) == 0 && z(k) > -margin) ok = false;
      if (D(k) == 1 && z(k) < -margin) ok = false;
    }
    if (!ok) continue;
    out.patterns.push_back(D);
    out.witnesses.push_back(*w);
  }
  return out;
}

namespace {

// Extreme rays of the pointed cone {c : G c >= 0}.
std::vector<Vector> cone_rays(const Matrix& G) {
  const long n = G.rows(), r = G.cols();
  std::vector<Vector> rays;
  const double tol = 1e-10 * std::max(1.0, G.cwiseAbs().maxCoeff());
  auto consider = [&](Vector c) {
    if (c.norm() == 0.0) return;
    c /= c.norm();
    for (double sgn : {1.0, -1.0}) {
      const Vector d = sgn * c;
      if ((G * d).minCoeff() < -tol) continue;
      bool dup = false;
      for (const Vector& q : rays)
        if ((q - d).norm() < 1e-9) dup = true;
      if (!dup) rays.push_back(d);
    }
  };
  if (r == 1) {
    consider(Vector::Ones(1));
    return rays;
  }
  std::vector<int> idx(static_cast<std::size_t>(r - 1));
  for (long k = 0; k < r - 1; ++k) idx[static_cast<std::size_t>(k)] = static_cast<int>(k);
  while (true) {
    Matrix M(r - 1, r);
    for (long k = 0; k < r - 1; ++k) M.row(k) = G.row(idx[static_cast<std::size_t>(k)]);
    Eigen::FullPivLU<Matrix> lu(M);
    lu.setThreshold(1e-12);
    const Matrix K = lu.kernel();
    if (K.cols() == 1) consider(K.col(0));
    long pos = r - 2;
    while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == n - (r - 1) + pos) --pos;
    if (pos < 0) break;
    ++idx[static_cast<std::size_t>(pos)];
    for (long k = pos + 1; k < r - 1; ++k) idx[static_cast<std::size_t>(k)] = idx[static_cast<std::size_t>(k - 1)] + 1;
  }
  return rays;
}

Matrix design_block(const TrainingSlice& s, const Eigen::VectorXi& D) {
  return s.A * (D.cast<double>().asDiagonal() * s.X);
}

double feasibility_violation(const TrainingSlice& s, const PatternSet& P, const ConvexSolution& sol) {
  double worst = 0.0;
  for (std::size_t i = 0; i < P.size(); ++i) {
    const Vector sgn = 2.0 * P.patterns[i].cast<double>().array() - 1.0;
    for (const Vector* x : {&sol.v[i], &sol.u[i]}) {
      const Vector c = sgn.cwiseProduct(s.X * *x);
      worst = std::max(worst, -std::min(0.0, c.minCoeff()));
    }
  }
  return worst;
}

ConvexSolution solve_by_rays(const TrainingSlice& s, const PatternSet& P) {
  const long p = s.X.cols();
  ConvexSolution sol;
  sol.v.assign(P.size(), Vector::Zero(p));
  sol.u.assign(P.size(), Vector::Zero(p));

  Eigen::JacobiSVD<Matrix> svd(s.X, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  long r = 0;
  for (long k = 0; k < sv.size(); ++k)
    if (sv(k) > 1e-12 * std::max(1.0, sv(0))) ++r;
  if (r == 0) {
    sol.objective = s.e.squaredNorm();
    sol.converged = true;
    return sol;
  }
  const Matrix U = svd.matrixU().leftCols(r);
  const Matrix back = svd.matrixV().leftCols(r) * sv.head(r).cwiseInverse().asDiagonal();

  struct Column {
    std::size_t pattern;
    bool negative;
    Vector c;
  };
  std::vector<Column> cols;
  std::vector<Vector> colvals;
  for (std::size_t i = 0; i < P.size(); ++i) {
    const Vector sgn = 2.0 * P.patterns[i].cast<double>().array() - 1.0;
    const Matrix G = sgn.asDiagonal() * U;
    const Matrix AD = s.A * P.patterns[i].cast<double>().asDiagonal();
    for (const Vector& c : cone_rays(G)) {
      const Vector col = AD * (U * c);
      cols.push_back({i, false, c});
      colvals.push_back(col);
      cols.push_back({i, true, c});
      colvals.push_back(-col);
    }
  }
  if (cols.empty()) {
    sol.objective = s.e.squaredNorm();
    sol.converged = true;
    return sol;
  }
  Matrix B(s.X.rows(), static_cast<long>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) B.col(static_cast<long>(k)) = colvals[k];
  const NnlsResult nn = nnls(B, s.e);
  std::vector<Vector> cv(P.size(), Vector::Zero(r)), cu(P.size(), Vector::Zero(r));
  for (std::size_t k = 0; k < cols.size(); ++k) {
    const double lam = nn.x(static_cast<long>(k));
    if (lam == 0.0) continue;
    (cols[k].negative ? cu : cv)[cols[k].pattern] += lam * cols[k].c;
  }
  for (std::size_t i = 0; i < P.size(); ++i) {
    sol.v[i] = back * cv[i];
    sol.u[i] = back * cu[i];
  }
  sol.converged = nn.converged;
  if (!nn.converged) sol.diagnostic = "nnls iteration limit reached";
  sol.objective = convex_objective(s, P, sol);
  sol.feasibility_violation = feasibility_violation(s, P, sol);
  return sol;
}

ConvexSolution solve_by_penalty(const TrainingSlice& s, const PatternSet& P) {
  const long n = s.X.rows(), p = s.X.cols();
  const long blocks = static_cast<long>(P.size());
  const long nv = 2 * blocks * p;
  Matrix B(n, nv);
  Matrix C = Matrix::Zero(2 * blocks * n, nv);
  for (long i = 0; i < blocks; ++i) {
    const Matrix Bi = design_block(s, P.patterns[static_cast<std::size_t>(i)]);
    B.middleCols(i * p, p) = Bi;
    B.middleCols((blocks + i) * p, p) = -Bi;
    const Vector sgn = 2.0 * P.patterns[static_cast<std::size_t>(i)].cast<double>().array() - 1.0;
    const Matrix Ci = sgn.asDiagonal() * s.X;
    C.block(i * n, i * p, n, p) = Ci;
    C.block((blocks + i) * n, (blocks + i) * p, n, p) = Ci;
  }

  auto penalty_value = [&](const Vector& z, double rho) {
    return (B * z - s.e).squaredNorm() + rho * (C * z).cwiseMin(0.0).squaredNorm();
  };
  // Semismooth Newton on the penalized objective with Armijo backtracking.
  Vector x = Vector::Zero(nv);
  double rho = 1.0;
  for (int stage = 0; stage <= 8; ++stage, rho *= 10.0) {
    for (int it = 0; it < 200; ++it) {
      const Vector cx = C * x;
      std::vector<long> act;
      for (long k = 0; k < cx.size(); ++k)
        if (cx(k) < 0.0) act.push_back(k);
      Matrix M(n + static_cast<long>(act.size()), nv);
      Vector rhs = Vector::Zero(M.rows());
      M.topRows(n) = B;
      rhs.head(n) = s.e;
      for (std::size_t k = 0; k < act.size(); ++k) M.row(n + static_cast<long>(k)) = std::sqrt(rho) * C.row(act[k]);
      const Vector grad = 2.0 * M.transpose() * (M * x - rhs);
      const Vector d = M.completeOrthogonalDecomposition().solve(rhs) - x;
      const double slope = grad.dot(d);
      if (!(slope < 0.0) || d.norm() <= 1e-15 * std::max(1.0, x.norm())) break;
      const double f0 = penalty_value(x, rho);
      double t = 1.0;
      while (t > 1e-12 && penalty_value(x + t * d, rho) > f0 + 1e-4 * t * slope) t *= 0.5;
      x += t * d;
    }
  }

  // Cleanup: hold the near-active rows at equality and refit, staying as close to x as possible.
  const Vector cx = C * x;
  const double act_tol = 1e-6 * std::max(1.0, x.norm());
  std::vector<long> act;
  for (long k = 0; k < cx.size(); ++k)
    if (cx(k) < act_tol) act.push_back(k);
  Matrix N = Matrix::Identity(nv, nv);
  if (!act.empty()) {
    Matrix CS(static_cast<long>(act.size()), nv);
    for (std::size_t k = 0; k < act.size(); ++k) CS.row(static_cast<long>(k)) = C.row(act[k]);
    Eigen::JacobiSVD<Matrix> svd(CS, Eigen::ComputeFullV);
    const double tol = 1e-12 * std::max(1.0, svd.singularValues().size() ? svd.singularValues()(0) : 0.0);
    long rank = 0;
    for (long k = 0; k < svd.singularValues().size(); ++k)
      if (svd.singularValues()(k) > tol) ++rank;
    N = svd.matrixV().rightCols(nv - rank);
  }
  Vector clean = Vector::Zero(nv);
  if (N.cols() > 0) {
    const Matrix BN = B * N;
    const Vector y0 = N.transpose() * x;
    const Vector y = y0 + BN.completeOrthogonalDecomposition().solve(Vector(s.e - BN * y0));
    clean = N * y;
  }
  const double cleaned_violation = -std::min(0.0, (C * clean).minCoeff());
  if (cleaned_violation <= 1e-10 * std::max(1.0, clean.norm()) &&
      (B * clean - s.e).squaredNorm() <= (B * x - s.e).squaredNorm() + 1e-6 * std::max(1.0, s.e.squaredNorm()))
    x = clean;

  ConvexSolution sol;
  sol.v.resize(P.size());
  sol.u.resize(P.size());
  for (long i = 0; i < blocks; ++i) {
    sol.v[static_cast<std::size_t>(i)] = x.segment(i * p, p);
    sol.u[static_cast<std::size_t>(i)] = x.segment((blocks + i) * p, p);
  }
  sol.objective = convex_objective(s, P, sol);
  sol.feasibility_violation = feasibility_violation(s, P, sol);

  // KKT residual: the gradient must be a nonnegative combination of active rows.
  const Vector g = -2.0 * B.transpose() * (s.e - B * x);
  const Vector cxf = C * x;
  std::vector<long> tight;
  for (long k = 0; k < cxf.size(); ++k)
    if (cxf(k) <= 1e-9 * std::max(1.0, x.norm())) tight.push_back(k);
  double stat = g.norm();
  if (!tight.empty()) {
    Matrix CT(nv, static_cast<long>(tight.size()));
    for (std::size_t k = 0; k < tight.size(); ++k) CT.col(static_cast<long>(k)) = C.row(tight[k]).transpose();
    const NnlsResult mu = nnls(CT, g);
    stat = std::sqrt(mu.residual_sq);
  }
  sol.stationarity = stat;
  sol.converged = sol.feasibility_violation <= 1e-8 && stat <= 1e-7 * std::max(1.0, s.e.squaredNorm());
  if (!sol.converged) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "penalty homotopy: feasibility %.3e, stationarity %.3e",
                  sol.feasibility_violation, stat);
    sol.diagnostic = buf;
  }
  return sol;
}

}  // namespace

double convex_objective(const TrainingSlice& s, const PatternSet& P, const ConvexSolution& sol) {
  Vector y = Vector::Zero(s.X.rows());
  for (std::size_t i = 0; i < P.size(); ++i)
    y += P.patterns[i].cast<double>().cwiseProduct(s.X * (sol.v[i] - sol.u[i]));
  return (s.e - s.A * y).squaredNorm();
}

ConvexSolution solve_convex_program(const TrainingSlice& slice, const PatternSet& patterns, ConvexMethod method) {
  slice.validate();
  check_desk_scale(slice.X);
  if (patterns.size() == 0) throw std::invalid_argument("solve_convex_program: empty pattern set");
  ConvexSolution sol =
      method == ConvexMethod::ConeRays ? solve_by_rays(slice, patterns) : solve_by_penalty(slice, patterns);
  if (sol.feasibility_violation > 1e-8) {
    sol.converged = false;
    if (sol.diagnostic.empty()) sol.diagnostic = "feasibility tolerance not reached";
  }
  return sol;
}

int m_star(const ConvexSolution& sol, double zero_tol) {
  int count = 0;
  for (std::size_t i = 0; i < sol.v.size(); ++i) {
    if (sol.v[i].norm() > zero_tol) ++count;
    if (sol.u[i].norm() > zero_tol) ++count;
  }
  return count;
}

TwoLayerRelu reconstruct_weights(const ConvexSolution& sol, int width) {
  const int need = m_star(sol);
  if (width < need)
    throw std::invalid_argument("reconstruct_weights: width " + std::to_string(width) + " below m* = " +
                                std::to_string(need));
  const long p = sol.v.empty() ? 0 : sol.v.front().size();
  TwoLayerRelu net;
  net.W = Matrix::Zero(p, width);
  net.alpha = Vector::Zero(width);
  int j = 0;
  for (std::size_t i = 0; i < sol.v.size(); ++i) {
    if (const double nv = sol.v[i].norm(); nv > 0.0) {
      net.W.col(j) = sol.v[i] / nv;
      net.alpha(j++) = nv;
    }
    if (const double nu = sol.u[i].norm(); nu > 0.0) {
      net.W.col(j) = sol.u[i] / nu;
      net.alpha(j++) = -nu;
    }
  }
  return net;
}

double nonconvex_objective(const TrainingSlice& s, const TwoLayerRelu& net) {
  if (net.width() == 0) return s.e.squaredNorm();
  const Vector y = (s.X * net.W).cwiseMax(0.0) * net.alpha;
  return (s.e - s.A * y).squaredNorm();
}

double nonconvex_loss_and_grad(const TrainingSlice& s, const TwoLayerRelu& net, std::span<double> grad) {
  const long p = s.X.cols(), m = net.width();
  if (static_cast<long>(grad.size()) != p * m + m) throw std::invalid_argument("nonconvex gradient: size mismatch");
  const Matrix Z = s.X * net.W;
  const Matrix H = Z.cwiseMax(0.0);
  const Vector r = s.e - s.A * (H * net.alpha);
  const Vector g = -2.0 * s.A.transpose() * r;
  Eigen::Map<Matrix> dW(grad.data(), p, m);
  Eigen::Map<Vector> da(grad.data() + p * m, m);
  da = H.transpose() * g;
  Matrix dZ = g * net.alpha.transpose();
  for (long j = 0; j < m; ++j)
    for (long k = 0; k < Z.rows(); ++k)
      if (!(Z(k, j) > 0.0)) dZ(k, j) = 0.0;
  dW = s.X.transpose() * dZ;
  return r.squaredNorm();
}

NonconvexResult solve_nonconvex_multistart(const TrainingSlice& slice, int width, const NonconvexOptions& opts) {
  slice.validate();
  if (width < 0) throw std::invalid_argument("solve_nonconvex_multistart: negative width");
  const long p = slice.X.cols();
  NonconvexResult out;
  // The zero network is always available and is optimal when the target vanishes.
  out.best_net = TwoLayerRelu{Matrix::Zero(p, width), Vector::Zero(width)};
  out.best = slice.e.squaredNorm();
  if (width == 0) return out;

  std::vector<TwoLayerRelu> starts = opts.extra_starts;
  for (int k = 0; k < opts.restarts; ++k) {
    std::mt19937_64 rng(derive_seed(opts.seed, static_cast<std::uint64_t>(k)));
    const double bw = std::sqrt(6.0 / static_cast<double>(p + width));
    const double ba = std::sqrt(6.0 / static_cast<double>(width + 1));
    std::uniform_real_distribution<double> uw(-bw, bw), ua(-ba, ba);
    TwoLayerRelu net{Matrix(p, width), Vector(width)};
    for (long j = 0; j < width; ++j)
      for (long i = 0; i < p; ++i) net.W(i, j) = uw(rng);
    for (long j = 0; j < width; ++j) net.alpha(j) = ua(rng);
    starts.push_back(std::move(net));
  }

  for (TwoLayerRelu net : starts) {
    if (net.width() != width || net.W.rows() != p)
      throw std::invalid_argument("solve_nonconvex_multistart: extra start has the wrong shape");
    std::vector<double> params(static_cast<std::size_t>(p * width + width));
    auto load = [&](std::span<const double> th) {
      net.W = Eigen::Map<const Matrix>(th.data(), p, width);
      net.alpha = Eigen::Map<const Vector>(th.data() + p * width, width);
    };
    Eigen::Map<Matrix>(params.data(), p, width) = net.W;
    Eigen::Map<Vector>(params.data() + p * width, width) = net.alpha;
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> best_params = params;
    auto f = [&](std::span<const double> th, std::span<double> g) {
      load(th);
      const double L = nonconvex_loss_and_grad(slice, net, g);
      if (L < best) {
        best = L;
        best_params.assign(th.begin(), th.end());
      }
      return L;
    };
    try {
      train(params, f, opts.schedule, StoppingRule{});
      std::vector<double> g(params.size());
      f(params, g);
    } catch (const std::exception&) {
      ++out.discarded;
      continue;
    }
    out.restart_values.push_back(best);
    if (best < out.best) {
      out.best = best;
      load(best_params);
      out.best_net = net;
    }
  }
  return out;
}

std::string slice_hash(const TrainingSlice& s) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](const double* data, long count) {
    for (long k = 0; k < count; ++k) {
      std::uint64_t bits;
      std::memcpy(&bits, data + k, sizeof bits);
      for (int b = 0; b < 8; ++b) {
        h ^= (bits >> (8 * b)) & 0xff;
        h *= 1099511628211ULL;
      }
    }
  };
  mix(s.X.data(), s.X.size());
  mix(s.e.data(), s.e.size());
  mix(s.A.data(), s.A.size());
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

DualityReport certify(const TrainingSlice& slice, int width, const NonconvexOptions& opts) {
  slice.validate();
  DualityReport rep;
  rep.instance_hash = slice_hash(slice);
  const PatternSet P = enumerate_patterns(slice.X);
  rep.pattern_count = P.size();
  const ConvexSolution sol = solve_convex_program(slice, P);
  if (!sol.converged) throw std::runtime_error("certify: convex solve failed: " + sol.diagnostic);
  rep.p_c = sol.objective;
  rep.m_star = m_star(sol);
  for (std::size_t i = 0; i < P.size(); ++i) {
    rep.v_norms.push_back(sol.v[i].norm());
    rep.u_norms.push_back(sol.u[i].norm());
  }

  if (width < 0) width = rep.m_star;
  rep.width = width;
  NonconvexOptions nopts = opts;
  rep.width_sufficient = width >= rep.m_star;
  if (rep.width_sufficient) {
    const TwoLayerRelu rec = reconstruct_weights(sol, width);
    rep.reconstruction_objective = nonconvex_objective(slice, rec);
    rep.reconstruction_ok = std::abs(rep.reconstruction_objective - rep.p_c) <= 1e-8;
    nopts.extra_starts.push_back(rec);
  } else {
    rep.diagnostic = "width below m*; reconstruction skipped";
  }
  const NonconvexResult nc = solve_nonconvex_multistart(slice, width, nopts);
  rep.p_nc = nc.best;
  rep.gap = rep.p_nc - rep.p_c;
  rep.lower_bound_holds = rep.p_nc >= rep.p_c - 1e-8;
  return rep;
}

}  // namespace fdmgdl
