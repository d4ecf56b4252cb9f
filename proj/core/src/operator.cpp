#include "cclk/operator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cclk/errors.hpp"

namespace cclk {

namespace {

constexpr double kDefaultLambdaScale = 1e-3;
constexpr double kRelativeJitter = 1e-12;

}  // namespace

void OperatorConfig::validate() const {
  if (lambda && (!(*lambda >= 0.0) || !std::isfinite(*lambda))) {
    throw ConfigError("operator.lambda", "must be a finite non-negative number");
  }
  if (!(clamp_eps > 0.0) || clamp_eps > 1e-3) {
    throw ConfigError("operator.clamp_eps", "must lie in (0, 1e-3]");
  }
}

double OperatorConfig::resolve_lambda(const Matrix& kz) const {
  if (lambda) return *lambda;
  double mean_diag = 0.0;
  for (std::size_t i = 0; i < kz.rows(); ++i) mean_diag += kz(i, i);
  mean_diag /= static_cast<double>(std::max<std::size_t>(kz.rows(), 1));
  return mean_diag > 0.0 ? kDefaultLambdaScale * mean_diag : kDefaultLambdaScale;
}

ConditionalWeights conditional_weights(const Matrix& kz, const OperatorConfig& cfg) {
  cfg.validate();
  if (kz.rows() != kz.cols()) throw ShapeError("conditional_weights: K_Z must be square");
  if (!is_symmetric(kz)) throw ContractError("conditional_weights: K_Z is not symmetric");

  const double lambda = cfg.resolve_lambda(kz);
  Matrix system = kz;
  double diag_scale = 0.0;
  for (std::size_t i = 0; i < kz.rows(); ++i) {
    system(i, i) += lambda;
    diag_scale = std::max(diag_scale, std::abs(system(i, i)));
  }
  const double jitter = lambda > 0.0 ? kRelativeJitter * diag_scale : 0.0;
  try {
    return ConditionalWeights{solve_spd(system, kz, jitter), lambda};
  } catch (const SingularityError&) {
    if (lambda == 0.0) {
      throw SingularityError(
          "conditional_weights: K_Z is singular at lambda = 0; use operator.lambda > 0");
    }
    throw;
  }
}

ad::Var conditional_similarity(ad::Var kxy, const ConditionalWeights& w, const OperatorConfig& cfg) {
  if (kxy.rows() != kxy.cols() || !kxy.value().same_shape(w.w)) {
    throw ShapeError("conditional_similarity: K_XY and W must both be b x b");
  }
  ad::Var weights = ad::stop_gradient(kxy.tape().constant(w.w));
  return ad::clamp_min(ad::diag(ad::matmul(kxy, weights)), cfg.clamp_eps);
}

ConditionalSimilarity conditional_similarity(const Matrix& kxy, const ConditionalWeights& w,
                                             const OperatorConfig& cfg) {
  ad::Tape tape;
  const Matrix c = conditional_similarity(tape.constant(kxy), w, cfg).value();
  return ConditionalSimilarity{std::vector<double>(c.data().begin(), c.data().end())};
}

std::pair<Matrix, Matrix> inspect_smoothing(const Matrix& kz, const OperatorConfig& cfg) {
  ConditionalWeights w = conditional_weights(kz, cfg);
  return {minmax_normalize(w.w), minmax_normalize(kz)};
}

}  // namespace cclk
