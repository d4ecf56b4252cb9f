// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cclk/config.hpp"
#include "cclk/errors.hpp"
#include "cclk/kernels.hpp"
#include "cclk/losses.hpp"
#include "cclk/model.hpp"
#include "cclk/operator.hpp"
#include "cclk/trainer.hpp"

namespace fs = std::filesystem;
namespace ad = cclk::ad;
using cclk::Matrix;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

Matrix gaussian(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(r, c);
  for (double& v : m.data()) v = g(rng);
  return m;
}

Matrix unit_rows(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  Matrix m = gaussian(r, c, rng);
  for (std::size_t i = 0; i < r; ++i) {
    double n = 0.0;
    for (double v : m.row(i)) n += v * v;
    for (double& v : m.row(i)) v /= std::sqrt(n);
  }
  return m;
}

// exp(cos(u_i, v_j) / τ) with plain loops.
Matrix oracle_gram(const Matrix& u, const Matrix& v, double tau) {
  Matrix k(u.rows(), v.rows());
  for (std::size_t i = 0; i < u.rows(); ++i) {
    for (std::size_t j = 0; j < v.rows(); ++j) {
      double dot = 0.0, nu = 0.0, nv = 0.0;
      for (std::size_t c = 0; c < u.cols(); ++c) {
        dot += u(i, c) * v(j, c);
        nu += u(i, c) * u(i, c);
        nv += v(j, c) * v(j, c);
      }
      k(i, j) = std::exp(dot / (std::sqrt(nu) * std::sqrt(nv)) / tau);
    }
  }
  return k;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// --- 1 ---------------------------------------------------------------------
Outcome operator_identity() {
  std::mt19937_64 rng(101);
  cclk::OperatorConfig op;
  op.clamp_eps = 1e-300;
  double worst = 0.0;
  for (int batch = 0; batch < 200; ++batch) {
    const std::size_t b = 2 + static_cast<std::size_t>(batch % 15);
    const Matrix kxy = cclk::score_gram(unit_rows(b, 8, rng), unit_rows(b, 8, rng), cclk::ScoreConfig{});
    const auto w = cclk::conditional_weights(cclk::z_gram(gaussian(b, 3, rng), cclk::KernelSpec{}), op);
    const auto c = cclk::conditional_similarity(kxy, w, op);
    for (std::size_t i = 0; i < b; ++i) {
      double weighted = 0.0;
      for (std::size_t j = 0; j < b; ++j) weighted += w.w(j, i) * kxy(i, j);
      worst = std::max(worst, std::abs(c.diag[i] - weighted));
    }
  }
  return {worst <= 1e-10, "max abs deviation " + fmt(worst) + " (tolerance 1e-10)"};
}

// --- 2 ---------------------------------------------------------------------
Outcome delta_oracle() {
  std::mt19937_64 rng(202);
  std::vector<double> labels;
  for (int m = 1; m <= 8; ++m) labels.insert(labels.end(), static_cast<std::size_t>(m), static_cast<double>(m));
  std::shuffle(labels.begin(), labels.end(), rng);
  const std::size_t b = labels.size();
  const Matrix z = Matrix::column(labels);
  cclk::KernelSpec delta;
  delta.kind = cclk::KernelKind::Delta;
  const Matrix u = gaussian(b, 6, rng);
  const Matrix v = gaussian(b, 6, rng);
  const Matrix k_oracle = oracle_gram(u, v, 0.5);
  const Matrix kxy = cclk::score_gram(u, v, cclk::ScoreConfig{});
  double worst = 0.0;
  for (double lambda : {1e-6, 0.1, 1.0}) {
    cclk::OperatorConfig op;
    op.lambda = lambda;
    const auto c = cclk::conditional_similarity(kxy, cclk::conditional_weights(cclk::z_gram(z, delta), op), op);
    for (std::size_t i = 0; i < b; ++i) {
      double sum = 0.0;
      double m = 0.0;
      for (std::size_t j = 0; j < b; ++j) {
        if (labels[j] == labels[i]) {
          sum += k_oracle(i, j);
          m += 1.0;
        }
      }
      const double expected = m / (m + lambda) * (sum / m);
      worst = std::max(worst, std::abs(c.diag[i] - expected) / expected);
    }
  }
  return {worst <= 1e-8, "max relative error " + fmt(worst) + " (tolerance 1e-8)"};
}

// --- 3 ---------------------------------------------------------------------
Outcome reductions() {
  std::mt19937_64 rng(303);
  cclk::LossConfig cfg;
  cfg.op.lambda = 0.0;
  double worst_weak = 0.0;
  double worst_fair = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t b = 2 + rng() % 15;
    ad::Tape t;
    const Matrix um = unit_rows(b, 8, rng);
    const Matrix vm = unit_rows(b, 8, rng);
    const Matrix z = gaussian(b, 3, rng);
    const ad::Var u = t.constant(um);
    const ad::Var v = t.constant(vm);
    // InfoNCE by plain loops.
    const Matrix k = oracle_gram(um, vm, cfg.score.tau);
    double infonce = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < b; ++j) row += k(i, j);
      infonce += std::log(k(i, i) / row) / static_cast<double>(b);
    }
    worst_weak = std::max(worst_weak, std::abs(cclk::weaksup_cclk(u, v, z, cfg).objective - infonce));
    worst_fair = std::max(worst_fair, std::abs(cclk::fair_cclk(u, v, z, cfg).objective + std::log(static_cast<double>(b))));
  }
  return {worst_weak <= 1e-8 && worst_fair <= 1e-10,
          "weaksup vs infonce " + fmt(worst_weak) + " (tolerance 1e-8), fair vs -log b " + fmt(worst_fair) +
              " (tolerance 1e-10)"};
}

// --- 4 ---------------------------------------------------------------------
Outcome gradients() {
  std::mt19937_64 rng(404);
  const cclk::EncoderParams init = cclk::init_encoder({4, 8, 4}, 17, false);
  const Matrix x = gaussian(6, 4, rng);
  const Matrix y = gaussian(6, 4, rng);
  const Matrix z = gaussian(6, 2, rng);
  double worst = 0.0;
  std::string per_loss;
  for (cclk::LossKind kind : {cclk::LossKind::InfoNce, cclk::LossKind::WeakSupCclk, cclk::LossKind::FairCclk,
                              cclk::LossKind::HardNegCclk, cclk::LossKind::HardNegInfoNce}) {
    const ad::ScalarFn f = [&](ad::Tape& tape, std::span<const ad::Var> p) {
      const std::size_t half = p.size() / 2;
      const ad::Var u = cclk::forward(p.subspan(0, half), init.activation, tape.constant(x));
      const ad::Var v = cclk::forward(p.subspan(half), init.activation, tape.constant(y));
      return cclk::evaluate_loss(kind, u, v, z, cclk::LossConfig{}).loss;
    };
    ad::GradCheckOptions opt;
    opt.h = 1e-5;
    opt.freeze_stop_gradients = true;
    const double err = ad::grad_check(f, init.flatten(), opt).max_rel_error;
    worst = std::max(worst, err);
    per_loss += std::string(per_loss.empty() ? "" : ", ") + std::string(cclk::to_string(kind)) + " " + fmt(err);
  }
  return {worst <= 1e-4, "max relative error " + fmt(worst) + " (tolerance 1e-4): " + per_loss};
}

// --- training criteria ------------------------------------------------------
cclk::TrainConfig base_train(cclk::LossKind kind, std::uint64_t seed) {
  cclk::TrainConfig cfg;
  cfg.loss = kind;
  cfg.steps = 1000;
  cfg.batch_size = 64;
  cfg.seed = seed;
  cfg.eval_every = 1000;
  cfg.loss_config.kernel.kind = cclk::KernelKind::Cosine;
  cfg.loss_config.op.lambda = 1.0;
  return cfg;
}

struct Metrics {
  std::vector<double> accuracy;
  std::vector<double> mse;
};

Metrics run_seeds(const cclk::Dataset& ds, const std::function<cclk::TrainConfig(std::uint64_t)>& make) {
  Metrics m;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto report = cclk::train(ds, make(seed)).report;
    m.accuracy.push_back(report.probe_accuracy);
    m.mse.push_back(report.nuisance_mse);
  }
  return m;
}

cclk::AttrBlobsParams attr_params() {
  cclk::AttrBlobsParams p;
  p.num_classes = 8;
  p.per_class = 100;
  p.dim = 16;
  p.num_attrs = 32;
  p.attr_noise = 0.1;
  p.cluster_std = 1.0;
  p.separation = 3.0;
  return p;
}

// --- 5 ---------------------------------------------------------------------
Outcome fairness() {
  cclk::ColorBlobsParams p;
  p.num_classes = 4;
  p.per_class = 500;
  p.dim = 2;
  p.nuisance_dim = 3;
  p.corr = 0.9;
  const cclk::Dataset ds = cclk::gen_colorblobs(p);
  const Metrics base = run_seeds(ds, [](std::uint64_t s) { return base_train(cclk::LossKind::InfoNce, s); });
  const Metrics fair = run_seeds(ds, [](std::uint64_t s) {
    cclk::TrainConfig cfg = base_train(cclk::LossKind::FairCclk, s);
    cfg.loss_config.op.lambda = 3000.0;
    return cfg;
  });
  const double ratio = mean(fair.mse) / mean(base.mse);
  const double gap = mean(base.accuracy) - mean(fair.accuracy);
  return {ratio >= 1.2 && gap <= 0.02,
          "nuisance_mse fair_cclk " + fmt(mean(fair.mse)) + " vs infonce " + fmt(mean(base.mse)) + " (ratio " +
              fmt(ratio) + ", need >= 1.2); accuracy " + fmt(mean(fair.accuracy)) + " vs " +
              fmt(mean(base.accuracy)) + " (gap " + fmt(gap) + ", need <= 0.02)"};
}

// --- 6 and 8 ---------------------------------------------------------------
Metrics weaksup_with(const cclk::Dataset& ds, cclk::KernelKind kernel) {
  return run_seeds(ds, [kernel](std::uint64_t s) {
    cclk::TrainConfig cfg = base_train(cclk::LossKind::WeakSupCclk, s);
    cfg.loss_config.kernel.kind = kernel;
    if (kernel == cclk::KernelKind::Laplacian) cfg.loss_config.kernel.gamma = 0.1;
    return cfg;
  });
}

Outcome weak_supervision() {
  const cclk::Dataset ds = cclk::gen_attrblobs(attr_params());
  const double cclk_acc = mean(weaksup_with(ds, cclk::KernelKind::Cosine).accuracy);
  const double base =
      mean(run_seeds(ds, [](std::uint64_t s) { return base_train(cclk::LossKind::InfoNce, s); }).accuracy);
  return {cclk_acc - base >= 0.03, "weaksup_cclk " + fmt(cclk_acc) + " vs infonce " + fmt(base) + " (margin " +
                                       fmt(cclk_acc - base) + ", need >= 0.03)"};
}

Outcome kernel_ablation() {
  const cclk::Dataset ds = cclk::gen_attrblobs(attr_params());
  std::vector<double> acc;
  std::string detail;
  for (auto [kind, name] : {std::pair{cclk::KernelKind::Rbf, "rbf"}, std::pair{cclk::KernelKind::Laplacian, "laplacian"},
                            std::pair{cclk::KernelKind::Cosine, "cosine"}}) {
    acc.push_back(mean(weaksup_with(ds, kind).accuracy));
    detail += std::string(name) + " " + fmt(acc.back()) + ", ";
  }
  const double band = *std::max_element(acc.begin(), acc.end()) - *std::min_element(acc.begin(), acc.end());
  return {band <= 0.05, detail + "band " + fmt(band) + " (need <= 0.05)"};
}

// --- 7 ---------------------------------------------------------------------
Outcome insufficient_samples() {
  const std::vector<std::size_t> sweep{1, 2, 4, 8, 16};
  std::vector<double> cclk_acc;
  std::vector<std::pair<std::size_t, double>> baseline;
  bool singleton_errors = true;
  std::string detail;
  for (std::size_t g : sweep) {
    cclk::AttrBlobsParams p = attr_params();
    p.group_size = g;
    const cclk::Dataset ds = cclk::gen_attrblobs(p);
    const auto stats = cclk::configuration_stats(ds.z);
    cclk_acc.push_back(mean(weaksup_with(ds, cclk::KernelKind::Cosine).accuracy));
    detail += "samples/config " + fmt(stats.mean_samples) + ": cclk " + fmt(cclk_acc.back());
    try {
      const double acc = mean(run_seeds(ds, [](std::uint64_t s) {
                                return base_train(cclk::LossKind::WeakSupInfoNce, s);
                              }).accuracy);
      baseline.emplace_back(g, acc);
      detail += ", baseline " + fmt(acc) + "; ";
      if (stats.singletons > 0) singleton_errors = false;
    } catch (const cclk::InsufficientSamplesError&) {
      detail += ", baseline insufficient samples; ";
      if (stats.singletons == 0) singleton_errors = false;
    }
  }
  const double cclk_range =
      *std::max_element(cclk_acc.begin(), cclk_acc.end()) - *std::min_element(cclk_acc.begin(), cclk_acc.end());
  const bool enough_points = baseline.size() >= 2;
  const double drop = enough_points ? baseline.back().second - baseline.front().second : 0.0;
  detail += "baseline drop " + fmt(drop) + " (need >= 0.05), cclk range " + fmt(cclk_range) + " (need <= 0.03)";
  return {enough_points && drop >= 0.05 && cclk_range <= 0.03 && singleton_errors, detail};
}

// --- 9 ---------------------------------------------------------------------
Outcome smoothing() {
  Matrix z(16, 1);
  for (std::size_t i = 0; i < 16; ++i) z(i, 0) = static_cast<double>(i) / 15.0;
  const Matrix kz = cclk::z_gram(z, cclk::KernelSpec{});
  bool monotone = true;
  double diff = 0.0;
  for (double lambda : {1.0, 1e2, 1e4, 1e6}) {
    cclk::OperatorConfig op;
    op.lambda = lambda;
    const auto [w, k] = cclk::inspect_smoothing(kz, op);
    if (lambda == 1e6) {
      diff = cclk::max_abs_diff(w, k);
      for (const Matrix* m : {&w, &k}) {
        for (std::size_t i = 0; i < 16; ++i) {
          for (std::size_t j = i + 1; j < 16; ++j) monotone = monotone && (*m)(i, j) <= (*m)(i, j - 1);
          for (std::size_t j = 0; j < i; ++j) monotone = monotone && (*m)(i, j) <= (*m)(i, j + 1);
        }
      }
    }
  }
  return {monotone && diff <= 1e-3,
          std::string("rows monotone: ") + (monotone ? "yes" : "no") + ", max |W - K_Z| at lambda=1e6 " + fmt(diff) +
              " (tolerance 1e-3)"};
}

// --- 10 --------------------------------------------------------------------
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd =
      std::string("\"") + CCLK_CLI_PATH + "\" " + args + " >\"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome determinism() {
  const fs::path root = fs::current_path() / "acceptance_work";
  fs::remove_all(root);
  fs::create_directories(root);
  {
    std::ofstream(root / "run.cfg") << "data.generator = attrblobs\ndata.per_class = 20\n"
                                       "loss.kind = weaksup_cclk\nkernel.kind = cosine\noperator.lambda = 1\n"
                                       "train.steps = 60\ntrain.eval_every = 20\n";
  }
  const std::string cfg = (root / "run.cfg").string();
  std::vector<std::string> mismatched;
  std::size_t compared = 0;
  for (const char* rep : {"a", "b"}) {
    const fs::path dir = root / rep;
    fs::create_directories(dir);
    const std::string d = dir.string();
    const fs::path log = dir / "log.txt";
    if (run_cli("gen-data --config " + cfg + " --out " + d + "/data.csv", log) != 0 ||
        run_cli("train --config " + cfg + " --data " + d + "/data.csv --out-dir " + d + "/run", log) != 0 ||
        run_cli("eval --checkpoint " + d + "/run/checkpoint.json --data " + d + "/data.csv", dir / "eval.txt") != 0 ||
        run_cli("inspect --data " + d + "/data.csv --config " + cfg + " --out " + d + "/inspect", log) != 0 ||
        run_cli("verify", dir / "verify.txt") != 0) {
      return {false, "a CLI command failed; see " + log.string()};
    }
  }
  for (const char* f : {"data.csv", "run/checkpoint.json", "run/report.json", "run/loss_curve.csv", "eval.txt",
                        "inspect/w_normalized.csv", "inspect/kz_normalized.csv", "verify.txt"}) {
    ++compared;
    if (slurp(root / "a" / f) != slurp(root / "b" / f)) mismatched.push_back(f);
  }
  std::string detail = std::to_string(compared) + " output files compared";
  for (const auto& m : mismatched) detail += ", differs: " + m;
  return {mismatched.empty(), detail};
}

}  // namespace

int main() {
  struct Criterion {
    std::string name;
    std::function<Outcome()> run;
    double budget_seconds;
  };
  const std::vector<Criterion> criteria{
      {"1 operator identity", operator_identity, 5},
      {"2 delta-kernel oracle", delta_oracle, 5},
      {"3 reduction laws", reductions, 5},
      {"4 gradient correctness", gradients, 30},
      {"5 fairness direction", fairness, 300},
      {"6 weak-supervision direction", weak_supervision, 300},
      {"7 insufficient-samples sweep", insufficient_samples, 600},
      {"8 kernel-ablation stability", kernel_ablation, 600},
      {"9 smoothing inspection", smoothing, 1},
      {"10 determinism", determinism, 60},
  };
  int failures = 0;
  for (const auto& [name, fn, budget] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > budget) {
      o.passed = false;
      o.detail += "; over the " + fmt(budget) + " s budget";
    }
    std::cout << (o.passed ? "PASS" : "FAIL") << " criterion " << name << ": " << o.detail << " [" << fmt(secs)
              << " s of " << fmt(budget) << " s]" << std::endl;
    if (!o.passed) ++failures;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failures)) << "/" << criteria.size()
            << " criteria passed" << std::endl;
  return failures == 0 ? 0 : 1;
}
