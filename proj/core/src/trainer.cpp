#include "cclk/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

#include <json.hpp>

#include "cclk/errors.hpp"

namespace cclk {

namespace {

constexpr double kDefaultRidgeScale = 1e-3;
constexpr double kTrainFraction = 0.7;

// splitmix64 finalizer, used to derive independent stream seeds.
std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a + 0x9E3779B97F4A7C15ULL * (b + 1);
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

enum Stream : std::uint64_t { kInit = 1, kEpoch = 2, kViews = 3, kLoss = 4 };

void append_number(std::string& out, double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  out += ss.str();
}

}  // namespace

void TrainConfig::validate() const {
  if (steps < 1) throw ConfigError("train.steps", "must be at least 1");
  if (batch_size < 2) throw ConfigError("train.batch_size", "must be at least 2");
  if (!(learning_rate > 0.0)) throw ConfigError("train.learning_rate", "must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("train.momentum", "must lie in [0, 1)");
  if (eval_every < 1) throw ConfigError("train.eval_every", "must be at least 1");
  if (!(loss_config.score.tau > 0.0)) throw ConfigError("loss.tau", "must be positive");
  if (model.embed_dim < 1) throw ConfigError("model.embed_dim", "must be positive");
  loss_config.kernel.validate();
  loss_config.op.validate();
  views.validate();
  if (!(probe.ridge_scale > 0.0)) throw ConfigError("eval.ridge_scale", "must be positive");
}

void sgd_step(std::vector<Matrix>& params, const std::vector<Matrix>& grads, SgdState& state,
              double learning_rate, double momentum) {
  if (grads.size() != params.size()) throw ShapeError("sgd_step: gradient count mismatch");
  if (state.velocity.empty()) {
    for (const Matrix& p : params) state.velocity.emplace_back(p.rows(), p.cols());
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (!grads[k].same_shape(params[k]) || !state.velocity[k].same_shape(params[k])) {
      throw ShapeError("sgd_step: shape mismatch for parameter " + std::to_string(k));
    }
    auto vel = state.velocity[k].data();
    auto g = grads[k].data();
    auto p = params[k].data();
    for (std::size_t i = 0; i < p.size(); ++i) {
      vel[i] = momentum * vel[i] + g[i];
      p[i] -= learning_rate * vel[i];
    }
  }
}

TrainResult train(const Dataset& ds, const TrainConfig& cfg,
                  std::map<std::string, std::string> config_echo) {
  cfg.validate();
  ds.validate();
  if (ds.size() < 2) throw ContractError("train: dataset has fewer than 2 rows");
  const auto started = std::chrono::steady_clock::now();

  std::vector<std::size_t> sizes{ds.features.cols()};
  sizes.insert(sizes.end(), cfg.model.hidden.begin(), cfg.model.hidden.end());
  sizes.push_back(cfg.model.embed_dim);

  TrainResult result;
  result.params = init_encoder(sizes, mix(cfg.seed, kInit), cfg.model.shared, cfg.model.activation);
  result.report.config = std::move(config_echo);

  std::vector<Matrix> flat = result.params.flatten();
  SgdState state;

  const bool paired = needs_group_partners(cfg.loss);
  std::vector<std::vector<std::size_t>> epoch_batches;
  std::size_t cursor = 0;
  std::uint64_t epoch = 0;

  for (std::size_t step = 1; step <= cfg.steps; ++step) {
    if (cursor == epoch_batches.size()) {
      const std::uint64_t epoch_seed = mix(mix(cfg.seed, kEpoch), epoch++);
      epoch_batches = paired ? paired_batch_indices(ds, cfg.batch_size, epoch_seed)
                             : batch_indices(ds.size(), cfg.batch_size, epoch_seed);
      cursor = 0;
      if (epoch_batches.empty()) throw ContractError("train: no batch of size >= 2 could be formed");
    }
    const Batch batch =
        make_batch(ds, epoch_batches[cursor++], cfg.views, mix(mix(cfg.seed, kViews), step));

    ad::Tape tape;
    const TapeEncoder enc = register_params(tape, result.params);
    ad::Var u = forward(enc.x, result.params.activation, tape.constant(batch.x));
    ad::Var v = forward(enc.y, result.params.activation, tape.constant(batch.y));

    LossConfig loss_cfg = cfg.loss_config;
    loss_cfg.seed = mix(mix(cfg.seed, kLoss), step);
    const LossValue lv = evaluate_loss(cfg.loss, u, v, batch.z, loss_cfg);
    const double loss = lv.loss.scalar();
    if (!std::isfinite(loss)) {
      throw NumericError("non-finite loss at step " + std::to_string(step) + " (loss.kind=" +
                         std::string(to_string(cfg.loss)) + ")");
    }
    tape.backward(lv.loss);
    std::vector<Matrix> grads;
    grads.reserve(enc.flat.size());
    for (const ad::Var& p : enc.flat) grads.push_back(tape.grad(p));
    for (const Matrix& g : grads) {
      if (!all_finite(g)) {
        throw NumericError("non-finite gradient at step " + std::to_string(step) + " (loss.kind=" +
                           std::string(to_string(cfg.loss)) + ")");
      }
    }

    result.report.loss_curve.emplace_back(step, loss);
    sgd_step(flat, grads, state, cfg.learning_rate, cfg.momentum);
    result.params.assign(flat);

    if (step % cfg.eval_every == 0 && step != cfg.steps) {
      const ProbeMetrics m = evaluate_probes(result.params, ds, cfg.probe);
      result.report.evals.push_back(EvalPoint{step, m.probe_accuracy, m.nuisance_mse});
    }
  }

  const ProbeMetrics final_metrics = evaluate_probes(result.params, ds, cfg.probe);
  result.report.evals.push_back(
      EvalPoint{cfg.steps, final_metrics.probe_accuracy, final_metrics.nuisance_mse});
  result.report.probe_accuracy = final_metrics.probe_accuracy;
  result.report.nuisance_mse = final_metrics.nuisance_mse;
  result.report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

Split stratified_split(const std::vector<int>& labels, std::size_t num_classes, std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> by_class(num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes) {
      throw ContractError("stratified_split: label out of range");
    }
    by_class[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  std::mt19937_64 rng(seed);
  Split split;
  for (auto& members : by_class) {
    if (members.empty()) continue;
    std::shuffle(members.begin(), members.end(), rng);
    const auto n = members.size();
    std::size_t n_train = static_cast<std::size_t>(std::llround(kTrainFraction * static_cast<double>(n)));
    n_train = std::clamp<std::size_t>(n_train, 1, n > 1 ? n - 1 : 1);
    split.train.insert(split.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.test.insert(split.test.end(), members.begin() + static_cast<std::ptrdiff_t>(n_train), members.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

Split random_split(std::size_t n, std::uint64_t seed) {
  if (n < 2) throw ContractError("random_split: need at least 2 rows");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t n_train = static_cast<std::size_t>(std::llround(kTrainFraction * static_cast<double>(n)));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
  Split split;
  split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

Matrix RidgeFit::predict(const Matrix& e) const {
  Matrix centered = e;
  for (std::size_t i = 0; i < centered.rows(); ++i)
    for (std::size_t j = 0; j < centered.cols(); ++j) centered(i, j) -= x_mean[j];
  Matrix out = matmul(centered, weights);
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += y_mean[j];
  return out;
}

RidgeFit fit_ridge(const Matrix& e, const Matrix& y, double ridge) {
  if (e.rows() != y.rows()) throw ShapeError("fit_ridge: row counts differ");
  if (e.rows() == 0) throw ContractError("fit_ridge: no training rows");
  if (!(ridge > 0.0)) throw ContractError("fit_ridge: ridge must be positive");
  const double n = static_cast<double>(e.rows());

  RidgeFit fit;
  fit.x_mean.assign(e.cols(), 0.0);
  fit.y_mean.assign(y.cols(), 0.0);
  for (std::size_t i = 0; i < e.rows(); ++i) {
    for (std::size_t j = 0; j < e.cols(); ++j) fit.x_mean[j] += e(i, j) / n;
    for (std::size_t j = 0; j < y.cols(); ++j) fit.y_mean[j] += y(i, j) / n;
  }
  Matrix ec = e;
  Matrix yc = y;
  for (std::size_t i = 0; i < e.rows(); ++i) {
    for (std::size_t j = 0; j < e.cols(); ++j) ec(i, j) -= fit.x_mean[j];
    for (std::size_t j = 0; j < y.cols(); ++j) yc(i, j) -= fit.y_mean[j];
  }
  const Matrix et = transpose(ec);
  Matrix gram = matmul(et, ec);
  for (std::size_t j = 0; j < gram.rows(); ++j) gram(j, j) += ridge;
  // EᵀE is symmetric in exact arithmetic; force it bitwise.
  for (std::size_t i = 0; i < gram.rows(); ++i)
    for (std::size_t j = i + 1; j < gram.cols(); ++j) gram(j, i) = gram(i, j);
  fit.weights = solve_spd(gram, matmul(et, yc), 1e-12 * ridge);
  return fit;
}

double linear_probe(const Matrix& embeddings, const std::vector<int>& labels,
                    std::size_t num_classes, std::optional<double> ridge, std::uint64_t split_seed) {
  if (embeddings.rows() != labels.size()) throw ShapeError("linear_probe: labels not aligned");
  const Split split = stratified_split(labels, num_classes, split_seed);
  std::vector<bool> present(num_classes, false);
  for (std::size_t i : split.train) present[static_cast<std::size_t>(labels[i])] = true;
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (!present[c]) {
      throw ContractError("linear_probe: class " + std::to_string(c) + " absent from the train split");
    }
  }
  if (split.test.empty()) throw ContractError("linear_probe: empty held-out split");

  Matrix targets(split.train.size(), num_classes);
  for (std::size_t r = 0; r < split.train.size(); ++r)
    targets(r, static_cast<std::size_t>(labels[split.train[r]])) = 1.0;
  const double lambda =
      ridge ? *ridge : kDefaultRidgeScale * static_cast<double>(split.train.size());
  const RidgeFit fit = fit_ridge(embeddings.gather_rows(split.train), targets, lambda);

  const Matrix scores = fit.predict(embeddings.gather_rows(split.test));
  std::size_t correct = 0;
  for (std::size_t r = 0; r < split.test.size(); ++r) {
    const auto row = scores.row(r);
    const auto best = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    if (best == static_cast<std::size_t>(labels[split.test[r]])) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(split.test.size());
}

double nuisance_mse(const Matrix& embeddings, const Matrix& z, std::optional<double> ridge,
                    std::uint64_t split_seed) {
  if (embeddings.rows() != z.rows()) throw ShapeError("nuisance_mse: z not aligned");
  if (z.cols() == 0) throw ContractError("nuisance_mse: z has no columns");
  const Split split = random_split(embeddings.rows(), split_seed);
  const double lambda =
      ridge ? *ridge : kDefaultRidgeScale * static_cast<double>(split.train.size());
  const RidgeFit fit = fit_ridge(embeddings.gather_rows(split.train), z.gather_rows(split.train), lambda);
  const Matrix pred = fit.predict(embeddings.gather_rows(split.test));
  const Matrix truth = z.gather_rows(split.test);
  double sse = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred.data()[i] - truth.data()[i];
    sse += d * d;
  }
  return sse / static_cast<double>(pred.size());
}

ProbeMetrics evaluate_probes(const EncoderParams& params, const Dataset& ds, const ProbeConfig& cfg) {
  const Matrix emb = embed(params, ds.features);
  const Split labelled = stratified_split(ds.labels, ds.num_classes, cfg.split_seed);
  const Split plain = random_split(ds.size(), cfg.split_seed);
  ProbeMetrics m;
  m.probe_accuracy = linear_probe(emb, ds.labels, ds.num_classes,
                                  cfg.ridge_scale * static_cast<double>(labelled.train.size()),
                                  cfg.split_seed);
  m.nuisance_mse = nuisance_mse(emb, ds.z, cfg.ridge_scale * static_cast<double>(plain.train.size()),
                                cfg.split_seed);
  return m;
}

std::string report_to_json(const Report& report) {
  nlohmann::ordered_json doc;
  doc["probe_accuracy"] = report.probe_accuracy;
  doc["nuisance_mse"] = report.nuisance_mse;
  doc["config"] = report.config;
  nlohmann::ordered_json evals = nlohmann::ordered_json::array();
  for (const EvalPoint& e : report.evals) {
    evals.push_back({{"step", e.step}, {"probe_accuracy", e.probe_accuracy}, {"nuisance_mse", e.nuisance_mse}});
  }
  doc["evals"] = evals;
  nlohmann::ordered_json curve = nlohmann::ordered_json::array();
  for (const auto& [step, loss] : report.loss_curve) curve.push_back({step, loss});
  doc["loss_curve"] = curve;
  return doc.dump(1) + "\n";
}

std::string loss_curve_csv(const Report& report) {
  std::string out = "step,loss\n";
  for (const auto& [step, loss] : report.loss_curve) {
    out += std::to_string(step);
    out += ',';
    append_number(out, loss);
    out += '\n';
  }
  return out;
}

}  // namespace cclk
