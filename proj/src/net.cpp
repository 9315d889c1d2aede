#include "fdmgdl/net.hpp"

#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "fdmgdl/kernels.hpp"

namespace fdmgdl {

std::string to_string(ActivationKind a) {
  switch (a) {
    case ActivationKind::Sine: return "sine";
    case ActivationKind::Relu: return "relu";
    case ActivationKind::Identity: return "identity";
  }
  return "unknown";
}

ActivationKind activation_from_string(const std::string& s) {
  if (s == "sine" || s == "sin") return ActivationKind::Sine;
  if (s == "relu") return ActivationKind::Relu;
  if (s == "identity") return ActivationKind::Identity;
  throw std::invalid_argument("unknown activation '" + s + "'");
}

Mlp::Mlp(std::vector<int> widths, std::vector<ActivationKind> hidden)
    : widths_(std::move(widths)), hidden_(std::move(hidden)) {
  if (widths_.size() < 2) throw std::invalid_argument("Mlp: shape chain needs at least two entries");
  for (int w : widths_)
    if (w <= 0) throw std::invalid_argument("Mlp: widths must be positive");
  if (hidden_.size() != widths_.size() - 2)
    throw std::invalid_argument("Mlp: need one activation per hidden layer");
  for (ActivationKind a : hidden_)
    if (a == ActivationKind::Identity)
      throw std::invalid_argument("Mlp: identity activation is reserved for the output layer");
  std::size_t off = 0;
  for (int l = 0; l < depth(); ++l) {
    offsets_.push_back(off);
    off += static_cast<std::size_t>(widths_[l + 1]) * (widths_[l] + 1);
  }
  params_.assign(off, 0.0);
}

Eigen::Map<Matrix> Mlp::weight(int l) {
  return {params_.data() + offsets_[l], widths_[l + 1], widths_[l]};
}
Eigen::Map<const Matrix> Mlp::weight(int l) const {
  return {params_.data() + offsets_[l], widths_[l + 1], widths_[l]};
}
Eigen::Map<Vector> Mlp::bias(int l) {
  return {params_.data() + offsets_[l] + static_cast<std::size_t>(widths_[l + 1]) * widths_[l],
          widths_[l + 1]};
}
Eigen::Map<const Vector> Mlp::bias(int l) const {
  return {params_.data() + offsets_[l] + static_cast<std::size_t>(widths_[l + 1]) * widths_[l],
          widths_[l + 1]};
}

namespace {

void affine(const Mlp& net, int l, const Matrix& in, Matrix& out) {
  const int q = net.widths()[l + 1];
  const int p = net.widths()[l];
  out.resize(q, in.cols());
  if (in.cols() == 0) return;
  kernels::gemm(q, p, static_cast<int>(in.cols()), net.weight(l).data(), q, in.data(), p,
                net.bias(l).data(), out.data(), q);
}

void activate(ActivationKind kind, const Matrix& z, Matrix& a, Matrix* dz) {
  a.resize(z.rows(), z.cols());
  const long n = z.size();
  if (kind == ActivationKind::Sine) {
    if (dz) {
      dz->resize(z.rows(), z.cols());
      kernels::sincos_array(n, z.data(), a.data(), dz->data());
    } else {
      kernels::sin_array(n, z.data(), a.data());
    }
  } else {
    const double* zp = z.data();
    double* ap = a.data();
    for (long i = 0; i < n; ++i) ap[i] = zp[i] > 0.0 ? zp[i] : 0.0;
    if (dz) {
      dz->resize(z.rows(), z.cols());
      double* dp = dz->data();
      for (long i = 0; i < n; ++i) dp[i] = zp[i] > 0.0 ? 1.0 : 0.0;
    }
  }
}

}  // namespace

Matrix Mlp::forward(const Matrix& x, ForwardCache* cache) const {
  if (x.rows() != input_dim())
    throw std::invalid_argument("Mlp::forward: input dimension " + std::to_string(x.rows()) +
                                " != " + std::to_string(input_dim()));
  const int D = depth();
  if (cache) {
    cache->z.resize(D - 1);
    cache->a.resize(D - 1);
    cache->dz.resize(D - 1);
    cache->input = &x;
    cache->points = x.cols();
  }
  const Matrix* cur = &x;
  Matrix z, a;
  for (int l = 0; l < D - 1; ++l) {
    if (cache) {
      affine(*this, l, *cur, cache->z[l]);
      activate(hidden_[l], cache->z[l], cache->a[l], &cache->dz[l]);
      cur = &cache->a[l];
    } else {
      affine(*this, l, *cur, z);
      activate(hidden_[l], z, a, nullptr);
      cur = &a;
    }
  }
  Matrix out;
  affine(*this, D - 1, *cur, out);
  return out;
}

Vector Mlp::forward_point(const Vector& x) const {
  Matrix xm = x;
  return forward(xm).col(0);
}

Matrix Mlp::feature(const Matrix& x) const {
  if (depth() < 2) throw std::invalid_argument("Mlp::feature: depth must be at least 2");
  if (x.rows() != input_dim()) throw std::invalid_argument("Mlp::feature: input dimension mismatch");
  Matrix cur = x, z;
  for (int l = 0; l < depth() - 1; ++l) {
    affine(*this, l, cur, z);
    activate(hidden_[l], z, cur, nullptr);
  }
  return cur;
}

Matrix Mlp::output_from_features(const Matrix& features) const {
  if (features.rows() != feature_dim())
    throw std::invalid_argument("Mlp::output_from_features: feature dimension mismatch");
  Matrix out;
  affine(*this, depth() - 1, features, out);
  return out;
}

void Mlp::backward(const ForwardCache& cache, const Matrix& cotangent, std::span<double> grad) const {
  const int D = depth();
  if (grad.size() != params_.size()) throw std::invalid_argument("Mlp::backward: gradient size mismatch");
  if (cache.input == nullptr || static_cast<int>(cache.z.size()) != D - 1)
    throw std::invalid_argument("Mlp::backward: cache does not belong to this network");
  if (cotangent.rows() != output_dim() || cotangent.cols() != cache.points)
    throw std::invalid_argument("Mlp::backward: cotangent shape mismatch");
  const int n = static_cast<int>(cache.points);
  Matrix& delta = cache.delta;
  Matrix& next = cache.next;
  Matrix& wt = cache.wt;
  Matrix& dw = cache.dw;
  delta = cotangent;
  for (int l = D - 1; l >= 0; --l) {
    const int q = widths_[l + 1];
    const int p = widths_[l];
    const Matrix& prev = l == 0 ? *cache.input : cache.a[l - 1];
    dw.resize(q, p);
    kernels::gemm_nt(q, n, p, delta.data(), q, prev.data(), p, nullptr, dw.data(), q);
    double* gw = grad.data() + offsets_[l];
    const double* dwp = dw.data();
    for (long i = 0; i < static_cast<long>(q) * p; ++i) gw[i] += dwp[i];
    double* gb = gw + static_cast<long>(q) * p;
    for (int k = 0; k < n; ++k) {
      const double* col = delta.data() + static_cast<long>(k) * q;
      for (int i = 0; i < q; ++i) gb[i] += col[i];
    }
    if (l == 0) break;
    wt.resize(p, q);
    kernels::transpose(q, p, weight(l).data(), q, wt.data(), p);
    next.resize(p, n);
    kernels::gemm(p, q, n, wt.data(), p, delta.data(), q, nullptr, next.data(), p);
    next.array() *= cache.dz[l - 1].array();
    delta.swap(next);
  }
}

std::uint64_t Mlp::checksum() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (double v : params_) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof(double));
    for (unsigned char c : bytes) {
      h ^= c;
      h *= 1099511628211ULL;
    }
  }
  return h;
}

void Mlp::save(std::ostream& os) const {
  const auto old = os.precision(std::numeric_limits<double>::max_digits10);
  os << "widths";
  for (int w : widths_) os << ',' << w;
  os << "\nactivations";
  for (ActivationKind a : hidden_) os << ',' << to_string(a);
  os << '\n';
  for (int l = 0; l < depth(); ++l) {
    const auto W = weight(l);
    for (int i = 0; i < W.rows(); ++i) {
      os << "W" << l;
      for (int j = 0; j < W.cols(); ++j) os << ',' << W(i, j);
      os << '\n';
    }
    os << "b" << l;
    for (int i = 0; i < W.rows(); ++i) os << ',' << bias(l)(i);
    os << '\n';
  }
  os.precision(old);
}

Mlp Mlp::load(std::istream& is) {
  auto fields = [](const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(item);
    return out;
  };
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("Mlp::load: missing widths line");
  auto wf = fields(line);
  if (wf.empty() || wf[0] != "widths") throw std::runtime_error("Mlp::load: malformed widths line");
  std::vector<int> widths;
  for (std::size_t i = 1; i < wf.size(); ++i) widths.push_back(std::stoi(wf[i]));
  if (!std::getline(is, line)) throw std::runtime_error("Mlp::load: missing activations line");
  auto af = fields(line);
  std::vector<ActivationKind> acts;
  for (std::size_t i = 1; i < af.size(); ++i) acts.push_back(activation_from_string(af[i]));
  Mlp net(widths, acts);
  for (int l = 0; l < net.depth(); ++l) {
    auto W = net.weight(l);
    for (int i = 0; i < W.rows(); ++i) {
      if (!std::getline(is, line)) throw std::runtime_error("Mlp::load: truncated weights");
      auto f = fields(line);
      if (static_cast<int>(f.size()) != W.cols() + 1) throw std::runtime_error("Mlp::load: bad weight row");
      for (int j = 0; j < W.cols(); ++j) W(i, j) = std::stod(f[j + 1]);
    }
    if (!std::getline(is, line)) throw std::runtime_error("Mlp::load: truncated biases");
    auto f = fields(line);
    if (static_cast<int>(f.size()) != W.rows() + 1) throw std::runtime_error("Mlp::load: bad bias row");
    for (int i = 0; i < W.rows(); ++i) net.bias(l)(i) = std::stod(f[i + 1]);
  }
  return net;
}

Mlp xavier_init(const std::vector<int>& widths, const std::vector<ActivationKind>& hidden,
                std::uint64_t seed, double first_layer_scale) {
  if (widths.empty()) throw std::invalid_argument("xavier_init: empty shape chain");
  Mlp net(widths, hidden);
  std::mt19937_64 rng(seed);
  for (int l = 0; l < net.depth(); ++l) {
    const double bound = std::sqrt(6.0 / (widths[l] + widths[l + 1]));
    const double scale = l == 0 ? first_layer_scale : 1.0;
    std::uniform_real_distribution<double> dist(-bound, bound);
    auto W = net.weight(l);
    for (long i = 0; i < W.size(); ++i) W.data()[i] = scale * dist(rng);
  }
  return net;
}

}  // namespace fdmgdl
