#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cclk/data.hpp"
#include "cclk/linalg.hpp"
#include "cclk/losses.hpp"
#include "cclk/model.hpp"

namespace cclk {

struct ModelConfig {
  std::vector<std::size_t> hidden = {32};
  std::size_t embed_dim = 16;
  bool shared = true;
  Activation activation = Activation::Tanh;
};

struct ProbeConfig {
  // Ridge strength per training row: ridge = ridge_scale · N_train.
  double ridge_scale = 1e-3;
  std::uint64_t split_seed = 0;
};

struct TrainConfig {
  LossKind loss = LossKind::InfoNce;
  std::size_t steps = 500;
  std::size_t batch_size = 32;
  double learning_rate = 0.05;
  double momentum = 0.9;
  std::uint64_t seed = 0;
  std::size_t eval_every = 100;
  LossConfig loss_config;
  ViewConfig views;
  ModelConfig model;
  ProbeConfig probe;

  void validate() const;
};

struct EvalPoint {
  std::size_t step = 0;
  double probe_accuracy = 0.0;
  double nuisance_mse = 0.0;
};

struct Report {
  std::vector<std::pair<std::size_t, double>> loss_curve;
  std::vector<EvalPoint> evals;
  double probe_accuracy = 0.0;
  double nuisance_mse = 0.0;
  std::map<std::string, std::string> config;
  // Not serialized; the CLI prints it so output files stay reproducible.
  double wall_time_seconds = 0.0;
};

struct SgdState {
  std::vector<Matrix> velocity;
};

// velocity ← momentum·velocity + grad; param ← param − lr·velocity.
void sgd_step(std::vector<Matrix>& params, const std::vector<Matrix>& grads, SgdState& state,
              double learning_rate, double momentum);

struct TrainResult {
  EncoderParams params;
  Report report;
};

// Minibatch training: views → encoder → loss → backward → SGD. Every random
// draw derives from cfg.seed, so identical inputs give identical results.
// Throws NumericError naming the step and loss when a loss is not finite.
TrainResult train(const Dataset& ds, const TrainConfig& cfg,
                  std::map<std::string, std::string> config_echo = {});

// 70/30 split stratified by label: per class, a seeded permutation with
// round(0.7·n_c) rows (at least one, at most n_c − 1) for training.
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};
Split stratified_split(const std::vector<int>& labels, std::size_t num_classes, std::uint64_t seed);
Split random_split(std::size_t n, std::uint64_t seed);

// Centered ridge regression: solves (EᵀE + ridge·I) W = EᵀY on the training
// rows (E, Y centered by their training means).
struct RidgeFit {
  Matrix weights;
  std::vector<double> x_mean;
  std::vector<double> y_mean;
  Matrix predict(const Matrix& e) const;
};
RidgeFit fit_ridge(const Matrix& e, const Matrix& y, double ridge);

// One-vs-all ridge classifier on frozen embeddings; held-out accuracy.
// `ridge` unset means ridge_scale 1e-3 · N_train.
double linear_probe(const Matrix& embeddings, const std::vector<int>& labels,
                    std::size_t num_classes, std::optional<double> ridge, std::uint64_t split_seed);

// Held-out MSE of a ridge readout embeddings → z (higher means the embedding
// keeps less of z).
double nuisance_mse(const Matrix& embeddings, const Matrix& z, std::optional<double> ridge,
                    std::uint64_t split_seed);

struct ProbeMetrics {
  double probe_accuracy = 0.0;
  double nuisance_mse = 0.0;
};
ProbeMetrics evaluate_probes(const EncoderParams& params, const Dataset& ds, const ProbeConfig& cfg);

std::string report_to_json(const Report& report);
std::string loss_curve_csv(const Report& report);

}  // namespace cclk
