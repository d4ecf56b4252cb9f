#include "cclk/losses.hpp"

#include <map>
#include <random>
#include <string>

#include "cclk/errors.hpp"

namespace cclk {

namespace {

void require_batch(ad::Var u, ad::Var v, const char* op) {
  if (u.rows() != v.rows() || u.cols() != v.cols()) {
    throw ShapeError(std::string(op) + ": u and v must have the same shape");
  }
  if (u.rows() < 2) throw ContractError(std::string(op) + ": batch size must be at least 2");
}

void require_z(ad::Var u, const Matrix& z, const char* op) {
  if (z.rows() != u.rows()) throw ShapeError(std::string(op) + ": z is not aligned with the batch");
}

// terms (b×1) -> LossValue with loss = -mean(terms).
LossValue finish(ad::Var terms) {
  LossValue out;
  const Matrix& t = terms.value();
  out.terms.assign(t.data().begin(), t.data().end());
  out.loss = ad::scale(ad::mean(terms), -1.0);
  out.objective = -out.loss.scalar();
  return out;
}

// Row sums of a b×b Var as b×1.
ad::Var row_sums(ad::Var a) {
  return ad::matmul(a, a.tape().constant(Matrix::ones(a.cols(), 1)));
}

std::string describe_groups(const std::vector<std::size_t>& groups) {
  std::string s;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(groups[i]);
  }
  return s;
}

}  // namespace

InsufficientSamplesError::InsufficientSamplesError(std::vector<std::size_t> groups)
    : Error("insufficient samples: conditioning outcome(s) with a single member in the batch "
            "(group ids " + describe_groups(groups) + "); conditional sampling needs at least 2"),
      groups_(std::move(groups)) {}

std::string_view to_string(LossKind kind) noexcept {
  switch (kind) {
    case LossKind::InfoNce: return "infonce";
    case LossKind::WeakSupCclk: return "weaksup_cclk";
    case LossKind::FairCclk: return "fair_cclk";
    case LossKind::HardNegCclk: return "hardneg_cclk";
    case LossKind::WeakSupInfoNce: return "weaksup_infonce";
    case LossKind::FairInfoNce: return "fair_infonce";
    case LossKind::HardNegInfoNce: return "hardneg_infonce";
  }
  return "unknown";
}

LossKind parse_loss_kind(std::string_view name) {
  for (LossKind k : {LossKind::InfoNce, LossKind::WeakSupCclk, LossKind::FairCclk,
                     LossKind::HardNegCclk, LossKind::WeakSupInfoNce, LossKind::FairInfoNce,
                     LossKind::HardNegInfoNce}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("loss.kind", "unknown loss '" + std::string(name) + "'");
}

bool needs_group_partners(LossKind kind) noexcept {
  return kind == LossKind::WeakSupInfoNce || kind == LossKind::FairInfoNce;
}

Groups group_rows(const Matrix& z) {
  Groups g;
  g.group_of.resize(z.rows());
  std::map<std::vector<double>, std::size_t> ids;
  for (std::size_t i = 0; i < z.rows(); ++i) {
    std::vector<double> key(z.row(i).begin(), z.row(i).end());
    auto [it, inserted] = ids.emplace(std::move(key), g.members.size());
    if (inserted) g.members.emplace_back();
    g.group_of[i] = it->second;
    g.members[it->second].push_back(i);
  }
  return g;
}

LossValue infonce_from_gram(ad::Var kxy) {
  ad::Var positive = ad::diag(kxy);
  ad::Var denominator = ad::add(positive, ad::offdiag_row_sums(kxy));
  return finish(ad::sub(ad::log(positive), ad::log(denominator)));
}

LossValue weaksup_from_gram(ad::Var kxy, ad::Var cond) {
  ad::Var denominator = ad::add(cond, ad::offdiag_row_sums(kxy));
  return finish(ad::sub(ad::log(cond), ad::log(denominator)));
}

LossValue fair_from_gram(ad::Var kxy, ad::Var cond) {
  const double negatives = static_cast<double>(kxy.rows() - 1);
  ad::Var positive = ad::diag(kxy);
  ad::Var denominator = ad::add(positive, ad::scale(cond, negatives));
  return finish(ad::sub(ad::log(positive), ad::log(denominator)));
}

LossValue infonce(ad::Var u, ad::Var v, const ScoreConfig& cfg) {
  require_batch(u, v, "infonce");
  return infonce_from_gram(score_gram(u, v, cfg));
}

LossValue weaksup_cclk(ad::Var u, ad::Var v, const Matrix& z, const LossConfig& cfg) {
  require_batch(u, v, "weaksup_cclk");
  require_z(u, z, "weaksup_cclk");
  ad::Var kxy = score_gram(u, v, cfg.score);
  ConditionalWeights w = conditional_weights(z_gram(z, cfg.kernel), cfg.op);
  return weaksup_from_gram(kxy, conditional_similarity(kxy, w, cfg.op));
}

LossValue fair_cclk(ad::Var u, ad::Var v, const Matrix& z, const LossConfig& cfg) {
  require_batch(u, v, "fair_cclk");
  require_z(u, z, "fair_cclk");
  ad::Var kxy = score_gram(u, v, cfg.score);
  ConditionalWeights w = conditional_weights(z_gram(z, cfg.kernel), cfg.op);
  return fair_from_gram(kxy, conditional_similarity(kxy, w, cfg.op));
}

LossValue hardneg_cclk(ad::Var u, ad::Var v, const LossConfig& cfg) {
  require_batch(u, v, "hardneg_cclk");
  const Matrix z = ad::stop_gradient(u).value();
  return fair_cclk(u, v, z, cfg);
}

LossValue weaksup_infonce_discrete(ad::Var u, ad::Var v, const Matrix& z, const LossConfig& cfg) {
  require_batch(u, v, "weaksup_infonce_discrete");
  require_z(u, z, "weaksup_infonce_discrete");
  const std::size_t b = u.rows();
  const Groups groups = group_rows(z);

  std::vector<std::size_t> singletons;
  for (std::size_t g = 0; g < groups.members.size(); ++g)
    if (groups.members[g].size() < 2) singletons.push_back(g);
  if (!singletons.empty()) throw InsufficientSamplesError(std::move(singletons));

  std::mt19937_64 rng(cfg.seed);
  Matrix positive_mask(b, b);
  for (std::size_t i = 0; i < b; ++i) {
    const auto& members = groups.members[groups.group_of[i]];
    std::uniform_int_distribution<std::size_t> pick(0, members.size() - 2);
    std::size_t k = pick(rng);
    // Skip the anchor itself.
    if (members[k] == i) k = members.size() - 1;
    positive_mask(i, members[k]) = 1.0;
  }

  ad::Var kxy = score_gram(u, v, cfg.score);
  ad::Var positive = row_sums(ad::mul(kxy, kxy.tape().constant(positive_mask)));
  // Positive plus every y_k with k != i, k != p: all off-diagonal entries.
  ad::Var denominator = ad::offdiag_row_sums(kxy);
  return finish(ad::sub(ad::log(positive), ad::log(denominator)));
}

LossValue fair_infonce_discrete(ad::Var u, ad::Var v, const Matrix& z, const LossConfig& cfg) {
  require_batch(u, v, "fair_infonce_discrete");
  require_z(u, z, "fair_infonce_discrete");
  const std::size_t b = u.rows();
  const Groups groups = group_rows(z);

  std::vector<std::size_t> singletons;
  for (std::size_t g = 0; g < groups.members.size(); ++g)
    if (groups.members[g].size() < 2) singletons.push_back(g);
  if (!singletons.empty()) throw InsufficientSamplesError(std::move(singletons));

  Matrix same_group(b, b);
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j : groups.members[groups.group_of[i]]) same_group(i, j) = 1.0;

  ad::Var kxy = score_gram(u, v, cfg.score);
  ad::Var positive = ad::diag(kxy);
  ad::Var denominator = row_sums(ad::mul(kxy, kxy.tape().constant(same_group)));
  return finish(ad::sub(ad::log(positive), ad::log(denominator)));
}

LossValue hardneg_infonce_weighted(ad::Var u, ad::Var v, const LossConfig& cfg) {
  require_batch(u, v, "hardneg_infonce_weighted");
  if (!(cfg.score.tau > 0.0)) throw ConfigError("loss.tau", "temperature must be positive");
  const double negatives = static_cast<double>(u.rows() - 1);

  ad::Var cosine = ad::matmul(ad::row_l2_normalize(u), ad::transpose(ad::row_l2_normalize(v)));
  ad::Var kxy = ad::exp(ad::scale(cosine, 1.0 / cfg.score.tau));
  ad::Var importance = ad::exp(ad::scale(cosine, cfg.beta));

  // (b-1) · Σ_{j≠i} w_ij K_ij / Σ_{j≠i} w_ij
  ad::Var weighted = ad::offdiag_row_sums(ad::mul(importance, kxy));
  ad::Var normalizer = ad::offdiag_row_sums(importance);
  ad::Var reweighted =
      ad::scale(ad::exp(ad::sub(ad::log(weighted), ad::log(normalizer))), negatives);

  ad::Var positive = ad::diag(kxy);
  ad::Var denominator = ad::add(positive, reweighted);
  return finish(ad::sub(ad::log(positive), ad::log(denominator)));
}

LossValue evaluate_loss(LossKind kind, ad::Var u, ad::Var v, const Matrix& z, const LossConfig& cfg) {
  switch (kind) {
    case LossKind::InfoNce: return infonce(u, v, cfg.score);
    case LossKind::WeakSupCclk: return weaksup_cclk(u, v, z, cfg);
    case LossKind::FairCclk: return fair_cclk(u, v, z, cfg);
    case LossKind::HardNegCclk: return hardneg_cclk(u, v, cfg);
    case LossKind::WeakSupInfoNce: return weaksup_infonce_discrete(u, v, z, cfg);
    case LossKind::FairInfoNce: return fair_infonce_discrete(u, v, z, cfg);
    case LossKind::HardNegInfoNce: return hardneg_infonce_weighted(u, v, cfg);
  }
  throw ContractError("evaluate_loss: unknown loss kind");
}

}  // namespace cclk
