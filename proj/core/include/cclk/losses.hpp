#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "cclk/autodiff.hpp"
#include "cclk/kernels.hpp"
#include "cclk/linalg.hpp"
#include "cclk/operator.hpp"

// Contrastive objectives. Every loss returns the per-sample log-ratio terms,
// their mean (the objective, to be maximized) and the Var loss = -objective
// for the optimizer. Embeddings u = g_X(x), v = g_Y(y) are b×e Vars; z is the
// b×k conditioning matrix aligned with them.
namespace cclk {

enum class LossKind {
  InfoNce,
  WeakSupCclk,
  FairCclk,
  HardNegCclk,
  WeakSupInfoNce,  // discrete conditional-sampling baseline
  FairInfoNce,     // discrete conditional-sampling baseline
  HardNegInfoNce,  // importance-weighted hard negatives
};

std::string_view to_string(LossKind kind) noexcept;
LossKind parse_loss_kind(std::string_view name);
// The discrete baselines need every conditioning outcome to appear at least
// twice in a batch.
bool needs_group_partners(LossKind kind) noexcept;

struct LossConfig {
  ScoreConfig score;
  KernelSpec kernel;
  OperatorConfig op;
  double beta = 1.0;         // hard-negative concentration
  std::uint64_t seed = 0;    // positive selection in the discrete weak-supervision baseline
};

struct LossValue {
  ad::Var loss;
  double objective = 0.0;
  std::vector<double> terms;
};

// Exact-match grouping of the rows of z, ids in order of first appearance.
struct Groups {
  std::vector<std::size_t> group_of;
  std::vector<std::vector<std::size_t>> members;
};
Groups group_rows(const Matrix& z);

// Gram-level forms. `kxy` is the b×b score Gram, `cond` the b×1 conditional
// similarity diagonal.
LossValue infonce_from_gram(ad::Var kxy);
LossValue weaksup_from_gram(ad::Var kxy, ad::Var cond);
LossValue fair_from_gram(ad::Var kxy, ad::Var cond);

LossValue infonce(ad::Var u, ad::Var v, const ScoreConfig& cfg);
LossValue weaksup_cclk(ad::Var u, ad::Var v, const Matrix& z, const LossConfig& cfg);
LossValue fair_cclk(ad::Var u, ad::Var v, const Matrix& z, const LossConfig& cfg);
// Conditions on z = stop_gradient(u).
LossValue hardneg_cclk(ad::Var u, ad::Var v, const LossConfig& cfg);

LossValue weaksup_infonce_discrete(ad::Var u, ad::Var v, const Matrix& z, const LossConfig& cfg);
LossValue fair_infonce_discrete(ad::Var u, ad::Var v, const Matrix& z, const LossConfig& cfg);
LossValue hardneg_infonce_weighted(ad::Var u, ad::Var v, const LossConfig& cfg);

LossValue evaluate_loss(LossKind kind, ad::Var u, ad::Var v, const Matrix& z, const LossConfig& cfg);

}  // namespace cclk
