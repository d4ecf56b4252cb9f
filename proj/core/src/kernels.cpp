#include "cclk/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "cclk/errors.hpp"

namespace cclk {

namespace {

constexpr double kCosineEps = 1e-12;

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

double l1_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += std::abs(a[k] - b[k]);
  return s;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

}  // namespace

std::string_view to_string(KernelKind kind) noexcept {
  switch (kind) {
    case KernelKind::Rbf: return "rbf";
    case KernelKind::Laplacian: return "laplacian";
    case KernelKind::Linear: return "linear";
    case KernelKind::Cosine: return "cosine";
    case KernelKind::Polynomial: return "polynomial";
    case KernelKind::Delta: return "delta";
  }
  return "unknown";
}

KernelKind parse_kernel_kind(std::string_view name) {
  for (KernelKind k : {KernelKind::Rbf, KernelKind::Laplacian, KernelKind::Linear,
                       KernelKind::Cosine, KernelKind::Polynomial, KernelKind::Delta}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("kernel.kind", "unknown kernel '" + std::string(name) + "'");
}

void KernelSpec::validate() const {
  switch (kind) {
    case KernelKind::Rbf:
      if (sigma2 && !(*sigma2 > 0.0)) throw ConfigError("kernel.sigma2", "must be positive");
      break;
    case KernelKind::Laplacian:
      if (!(gamma > 0.0)) throw ConfigError("kernel.gamma", "must be positive");
      break;
    case KernelKind::Polynomial:
      if (degree < 1) throw ConfigError("kernel.degree", "must be a positive integer");
      if (!std::isfinite(coef)) throw ConfigError("kernel.coef", "must be finite");
      break;
    case KernelKind::Linear:
    case KernelKind::Cosine:
    case KernelKind::Delta:
      break;
  }
}

ad::Var score_gram(ad::Var u, ad::Var v, const ScoreConfig& cfg) {
  if (!(cfg.tau > 0.0)) throw ConfigError("loss.tau", "temperature must be positive");
  if (u.cols() != v.cols() || u.rows() != v.rows()) {
    throw ShapeError("score_gram: embeddings have different shapes");
  }
  ad::Var un = ad::row_l2_normalize(u);
  ad::Var vn = ad::row_l2_normalize(v);
  ad::Var cosine = ad::matmul(un, ad::transpose(vn));
  return ad::exp(ad::scale(cosine, 1.0 / cfg.tau));
}

Matrix score_gram(const Matrix& u, const Matrix& v, const ScoreConfig& cfg) {
  ad::Tape tape;
  return score_gram(tape.constant(u), tape.constant(v), cfg).value();
}

Matrix z_gram(const Matrix& z, const KernelSpec& spec) {
  spec.validate();
  const std::size_t b = z.rows();
  if (b == 0 || z.cols() == 0) throw ContractError("z_gram: empty conditioning matrix");

  double sigma2 = 1.0;
  if (spec.kind == KernelKind::Rbf) sigma2 = spec.sigma2 ? *spec.sigma2 : (b >= 2 ? median_bandwidth(z) : 1.0);

  std::vector<double> norms;
  if (spec.kind == KernelKind::Cosine) {
    norms.resize(b);
    for (std::size_t i = 0; i < b; ++i) norms[i] = std::sqrt(dot(z.row(i), z.row(i)));
  }

  Matrix k(b, b);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = i; j < b; ++j) {
      const auto zi = z.row(i);
      const auto zj = z.row(j);
      double value = 0.0;
      switch (spec.kind) {
        case KernelKind::Rbf:
          value = std::exp(-squared_distance(zi, zj) / (2.0 * sigma2));
          break;
        case KernelKind::Laplacian:
          value = std::exp(-spec.gamma * l1_distance(zi, zj));
          break;
        case KernelKind::Linear:
          value = dot(zi, zj);
          break;
        case KernelKind::Cosine:
          // Self-similarity is exactly 1 even for the zero vector.
          value = i == j ? 1.0 : dot(zi, zj) / (norms[i] * norms[j] + kCosineEps);
          break;
        case KernelKind::Polynomial:
          value = std::pow(dot(zi, zj) + spec.coef, spec.degree);
          break;
        case KernelKind::Delta:
          value = std::equal(zi.begin(), zi.end(), zj.begin()) ? 1.0 : 0.0;
          break;
      }
      k(i, j) = value;
      k(j, i) = value;
    }
  }
  return k;
}

double median_bandwidth(const Matrix& z) {
  const std::size_t b = z.rows();
  if (b < 2) throw ContractError("median_bandwidth: need at least two points");
  std::vector<double> d2;
  d2.reserve(b * (b - 1) / 2);
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = i + 1; j < b; ++j) d2.push_back(squared_distance(z.row(i), z.row(j)));
  std::sort(d2.begin(), d2.end());
  const std::size_t n = d2.size();
  const double median = n % 2 == 1 ? d2[n / 2] : 0.5 * (d2[n / 2 - 1] + d2[n / 2]);
  return median > 0.0 ? median : 1.0;
}

}  // namespace cclk
