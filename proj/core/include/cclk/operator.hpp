#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "cclk/autodiff.hpp"
#include "cclk/linalg.hpp"

// Kernel conditional embedding operator on a batch.
//
// For conditioning Gram K_Z the weights W = (K_Z + λI)⁻¹ K_Z turn the
// unconditional score Gram K_XY into conditional scores: [K_XY W]_ii is the
// estimate of exp(f(x_i, y)) for y drawn given z_i, and equals the weighted sum
// Σ_j W_ji [K_XY]_ij. W never carries gradient.
namespace cclk {

struct OperatorConfig {
  // Ridge λ. Unset selects 1e-3 · mean(diag(K_Z)) per batch. Zero is allowed
  // only when K_Z is invertible.
  std::optional<double> lambda;
  // Floor applied to conditional similarities before they reach a log.
  double clamp_eps = 1e-8;

  void validate() const;
  double resolve_lambda(const Matrix& kz) const;
};

struct ConditionalWeights {
  Matrix w;  // entry (j, i) is the weight of y_j for anchor i
  double lambda = 0.0;
};

struct ConditionalSimilarity {
  std::vector<double> diag;
};

// Solves (K_Z + λI) W = K_Z. Throws SingularityError when λ = 0 and K_Z is
// singular.
ConditionalWeights conditional_weights(const Matrix& kz, const OperatorConfig& cfg);

// diag_i = max([K_XY W]_ii, clamp_eps) as a b×1 Var; gradient flows through
// K_XY only.
ad::Var conditional_similarity(ad::Var kxy, const ConditionalWeights& w, const OperatorConfig& cfg);

ConditionalSimilarity conditional_similarity(const Matrix& kxy, const ConditionalWeights& w,
                                             const OperatorConfig& cfg);

// (minmax_normalize(W), minmax_normalize(K_Z)) for side-by-side inspection.
std::pair<Matrix, Matrix> inspect_smoothing(const Matrix& kz, const OperatorConfig& cfg);

}  // namespace cclk
