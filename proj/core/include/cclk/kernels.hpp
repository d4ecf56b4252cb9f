#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "cclk/autodiff.hpp"
#include "cclk/linalg.hpp"

namespace cclk {

// Temperature of the exponential cosine score exp(cos(u, v) / tau).
struct ScoreConfig {
  double tau = 0.5;
};

enum class KernelKind { Rbf, Laplacian, Linear, Cosine, Polynomial, Delta };

std::string_view to_string(KernelKind kind) noexcept;
KernelKind parse_kernel_kind(std::string_view name);

// Kernel on the conditioning variable Z.
struct KernelSpec {
  KernelKind kind = KernelKind::Rbf;
  // RBF bandwidth; unset means "median heuristic on the batch".
  std::optional<double> sigma2;
  double gamma = 1.0;  // Laplacian scale
  int degree = 3;      // polynomial
  double coef = 1.0;   // polynomial offset

  // Throws ConfigError when the parameters for `kind` are not usable.
  void validate() const;
};

// [K_XY]_ij = exp(cos(u_i, v_j) / tau), recorded on the Vars' tape.
ad::Var score_gram(ad::Var u, ad::Var v, const ScoreConfig& cfg);

// Plain-matrix evaluation of the same scores.
Matrix score_gram(const Matrix& u, const Matrix& v, const ScoreConfig& cfg);

// Conditioning Gram [K_Z]_ij = k(z_i, z_j). Symmetric by construction.
Matrix z_gram(const Matrix& z, const KernelSpec& spec);

// Median of pairwise squared Euclidean distances over i < j, or 1.0 when that
// median is zero. Requires at least two rows.
double median_bandwidth(const Matrix& z);

}  // namespace cclk
