#include "cclk/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "cclk/kernels.hpp"
#include "cclk/losses.hpp"
#include "cclk/model.hpp"
#include "cclk/operator.hpp"

namespace cclk {

namespace {

Matrix gaussian(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (double& x : m.data()) x = n(rng);
  return m;
}

Matrix unit_rows(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  Matrix m = gaussian(rows, cols, rng);
  for (std::size_t i = 0; i < rows; ++i) {
    double norm = 0.0;
    for (double x : m.row(i)) norm += x * x;
    norm = std::sqrt(norm);
    for (double& x : m.row(i)) x /= norm;
  }
  return m;
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(3);
  ss << std::scientific << v;
  return ss.str();
}

PropertyResult make(std::string name, double measured, double tolerance, std::string detail = {}) {
  return PropertyResult{std::move(name), measured <= tolerance, measured, tolerance, std::move(detail)};
}

PropertyResult operator_identity(const VerifyOptions& opt, std::mt19937_64& rng) {
  OperatorConfig cfg;
  cfg.clamp_eps = 1e-300;
  ScoreConfig score;
  KernelSpec kernel;
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t b = 2 + static_cast<std::size_t>(trial) % 15;
    const Matrix kxy = score_gram(unit_rows(b, 4, rng), unit_rows(b, 4, rng), score);
    const ConditionalWeights w = conditional_weights(z_gram(gaussian(b, 3, rng), kernel), cfg);
    ConditionalWeights route = w;
    if (opt.flip_w_sign) route.w *= -1.0;
    const auto diag = conditional_similarity(kxy, route, cfg).diag;
    for (std::size_t i = 0; i < b; ++i) {
      double weighted = 0.0;
      for (std::size_t j = 0; j < b; ++j) weighted += w.w(j, i) * kxy(i, j);
      worst = std::max(worst, std::abs(diag[i] - std::max(weighted, cfg.clamp_eps)));
    }
  }
  return make("operator_identity", worst, 1e-10, "200 batches, b in [2, 16]");
}

PropertyResult delta_oracle(std::mt19937_64& rng) {
  ScoreConfig score;
  KernelSpec delta;
  delta.kind = KernelKind::Delta;
  double worst = 0.0;
  for (double lambda : {1e-6, 0.1, 1.0}) {
    OperatorConfig cfg;
    cfg.lambda = lambda;
    cfg.clamp_eps = 1e-300;
    // One batch holding a group of every size 1..8.
    std::vector<double> labels;
    for (std::size_t m = 1; m <= 8; ++m) labels.insert(labels.end(), m, static_cast<double>(m));
    std::shuffle(labels.begin(), labels.end(), rng);
    const std::size_t b = labels.size();
    const Matrix z = Matrix::column(labels);
    const Matrix kxy = score_gram(unit_rows(b, 4, rng), unit_rows(b, 4, rng), score);
    const auto diag = conditional_similarity(kxy, conditional_weights(z_gram(z, delta), cfg), cfg).diag;
    for (std::size_t i = 0; i < b; ++i) {
      double sum = 0.0;
      double m = 0.0;
      for (std::size_t j = 0; j < b; ++j) {
        if (labels[j] == labels[i]) {
          sum += kxy(i, j);
          m += 1.0;
        }
      }
      const double oracle = m / (m + lambda) * (sum / m);
      worst = std::max(worst, std::abs(diag[i] - oracle) / std::abs(oracle));
    }
  }
  return make("delta_kernel_oracle", worst, 1e-8, "group sizes 1..8, lambda in {1e-6, 0.1, 1}");
}

std::pair<PropertyResult, PropertyResult> reductions(std::mt19937_64& rng) {
  LossConfig cfg;
  cfg.op.lambda = 0.0;
  double worst_weaksup = 0.0;
  double worst_fair = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t b = 2 + static_cast<std::size_t>(trial) % 15;
    ad::Tape tape;
    const ad::Var u = tape.constant(gaussian(b, 4, rng));
    const ad::Var v = tape.constant(gaussian(b, 4, rng));
    const Matrix z = gaussian(b, 4, rng);
    const double base = infonce(u, v, cfg.score).objective;
    worst_weaksup = std::max(worst_weaksup, std::abs(weaksup_cclk(u, v, z, cfg).objective - base));
    worst_fair = std::max(worst_fair,
                          std::abs(fair_cclk(u, v, z, cfg).objective + std::log(static_cast<double>(b))));
  }
  return {make("lambda0_weaksup_equals_infonce", worst_weaksup, 1e-8, "100 instances, rbf K_Z"),
          make("lambda0_fair_equals_minus_log_b", worst_fair, 1e-10, "100 instances, rbf K_Z")};
}

PropertyResult gradient(LossKind kind, std::mt19937_64& rng) {
  const EncoderParams params = init_encoder({4, 8, 4}, rng(), /*shared=*/false);
  const Matrix x = gaussian(6, 4, rng);
  const Matrix y = gaussian(6, 4, rng);
  Matrix z(6, 3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (double& e : z.data()) e = unit(rng);
  LossConfig cfg;
  cfg.kernel.kind = KernelKind::Rbf;

  const std::size_t per_encoder = 2 * params.x_layers.size();
  const ad::ScalarFn fn = [&](ad::Tape& tape, std::span<const ad::Var> vars) {
    const ad::Var u = forward(vars.subspan(0, per_encoder), params.activation, tape.constant(x));
    const ad::Var v = forward(vars.subspan(per_encoder), params.activation, tape.constant(y));
    return evaluate_loss(kind, u, v, z, cfg).loss;
  };
  ad::GradCheckOptions options;
  options.freeze_stop_gradients = kind == LossKind::HardNegCclk;
  const std::vector<Matrix> flat = params.flatten();
  const ad::GradCheckResult r = ad::grad_check(fn, flat, options);
  return make("grad_check_" + std::string(to_string(kind)), r.max_rel_error, 1e-4,
              "MLP [4,8,4], b=6, h=1e-5");
}

PropertyResult smoothing() {
  Matrix z(16, 1);
  for (std::size_t i = 0; i < 16; ++i) z(i, 0) = static_cast<double>(i) / 15.0;
  const Matrix kz = z_gram(z, KernelSpec{});
  OperatorConfig cfg;
  cfg.lambda = 1e6;
  const auto [w_norm, kz_norm] = inspect_smoothing(kz, cfg);

  bool monotone = true;
  for (const Matrix* m : {&w_norm, &kz_norm}) {
    for (std::size_t i = 0; i < 16; ++i) {
      for (std::size_t j = i + 1; j < 16; ++j) monotone &= (*m)(i, j) <= (*m)(i, j - 1);
      for (std::size_t j = i; j-- > 0;) monotone &= (*m)(i, j) <= (*m)(i, j + 1);
    }
  }
  PropertyResult r = make("smoothing_limit", max_abs_diff(w_norm, kz_norm), 1e-3,
                          "16-point grid, rbf, lambda = 1e6");
  if (!monotone) {
    r.passed = false;
    r.detail += "; rows not monotone away from the diagonal";
  }
  return r;
}

}  // namespace

std::vector<PropertyResult> run_verification(const VerifyOptions& options) {
  std::mt19937_64 rng(options.seed);
  std::vector<PropertyResult> out;
  auto guarded = [&](const std::string& name, const std::function<void()>& body) {
    try {
      body();
    } catch (const std::exception& e) {
      out.push_back(PropertyResult{name, false, std::nan(""), 0.0, e.what()});
    }
  };
  guarded("operator_identity", [&] { out.push_back(operator_identity(options, rng)); });
  guarded("delta_kernel_oracle", [&] { out.push_back(delta_oracle(rng)); });
  guarded("lambda0_reductions", [&] {
    auto [a, b] = reductions(rng);
    out.push_back(a);
    out.push_back(b);
  });
  for (LossKind kind : {LossKind::InfoNce, LossKind::WeakSupCclk, LossKind::FairCclk,
                        LossKind::HardNegCclk, LossKind::HardNegInfoNce}) {
    guarded("grad_check_" + std::string(to_string(kind)), [&] { out.push_back(gradient(kind, rng)); });
  }
  guarded("smoothing_limit", [&] { out.push_back(smoothing()); });
  for (PropertyResult& r : out) {
    if (!r.detail.empty()) r.detail += "; ";
    r.detail += "measured " + fmt(r.measured) + ", tolerance " + fmt(r.tolerance);
  }
  return out;
}

}  // namespace cclk
