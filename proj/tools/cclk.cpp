// cclk: generate datasets, train encoders, evaluate checkpoints, inspect the
// conditional weights and run the self-check suite.
//
// Exit codes: 0 success, 1 verification failure, 2 config/contract error,
// 3 numeric abort, 4 I/O error.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cclk/config.hpp"
#include "cclk/errors.hpp"
#include "cclk/kernels.hpp"
#include "cclk/model.hpp"
#include "cclk/operator.hpp"
#include "cclk/trainer.hpp"
#include "cclk/verify.hpp"

namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kVerifyFailed = 1, kContract = 2, kNumeric = 3, kIo = 4 };

std::string number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw cclk::IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw cclk::IoError("failed writing " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw cclk::IoError("cannot create directory " + dir.string());
}

std::string matrix_csv(const cclk::Matrix& m) {
  std::string out;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += number(m(i, j));
    }
    out += '\n';
  }
  return out;
}

int gen_data(const std::string& config_path, const std::string& out_path) {
  const cclk::Config config = cclk::Config::load(config_path);
  const cclk::Dataset ds = cclk::generate_dataset(config);
  cclk::save_csv(ds, out_path);
  std::cout << "rows=" << ds.size() << " feature_cols=" << ds.features.cols()
            << " z_cols=" << ds.z.cols() << " seed=" << config.get("data.seed") << "\n";
  return kOk;
}

int train(const std::string& config_path, const std::string& data_path, const fs::path& out_dir) {
  const cclk::Config config = cclk::Config::load(config_path);
  const cclk::TrainConfig cfg = cclk::train_config(config);
  const cclk::Dataset ds = cclk::load_csv(data_path);
  ensure_dir(out_dir);

  const cclk::TrainResult result = cclk::train(ds, cfg, config.values());

  cclk::Checkpoint checkpoint{result.params, {}};
  checkpoint.metadata["loss.kind"] = config.get("loss.kind");
  checkpoint.metadata["train.seed"] = config.get("train.seed");
  checkpoint.metadata["eval.ridge_scale"] = config.get("eval.ridge_scale");
  checkpoint.metadata["eval.split_seed"] = config.get("eval.split_seed");
  cclk::save_checkpoint(checkpoint, (out_dir / "checkpoint.json").string());
  write_file(out_dir / "report.json", cclk::report_to_json(result.report));
  write_file(out_dir / "loss_curve.csv", cclk::loss_curve_csv(result.report));

  std::cout << "probe_accuracy=" << number(result.report.probe_accuracy) << "\n"
            << "nuisance_mse=" << number(result.report.nuisance_mse) << "\n"
            << "wall_time_seconds=" << number(result.report.wall_time_seconds) << "\n";
  return kOk;
}

int eval(const std::string& checkpoint_path, const std::string& data_path) {
  const cclk::Checkpoint checkpoint = cclk::load_checkpoint(checkpoint_path);
  const cclk::Dataset ds = cclk::load_csv(data_path);
  if (ds.features.cols() != checkpoint.params.input_dim()) {
    throw cclk::ContractError("checkpoint expects " + std::to_string(checkpoint.params.input_dim()) +
                              " feature columns, data has " + std::to_string(ds.features.cols()));
  }
  // Probe settings travel with the checkpoint so the metrics match training.
  cclk::Config probe_config;
  for (const char* key : {"eval.ridge_scale", "eval.split_seed"}) {
    if (const auto it = checkpoint.metadata.find(key); it != checkpoint.metadata.end()) {
      probe_config.set(key, it->second);
    }
  }
  cclk::ProbeConfig probe;
  probe.ridge_scale = probe_config.get_double("eval.ridge_scale");
  probe.split_seed = probe_config.get_u64("eval.split_seed");
  const cclk::ProbeMetrics m = cclk::evaluate_probes(checkpoint.params, ds, probe);
  std::cout << "probe_accuracy=" << number(m.probe_accuracy) << "\n"
            << "nuisance_mse=" << number(m.nuisance_mse) << "\n";
  return kOk;
}

int inspect(const std::string& data_path, const std::string& config_path, const fs::path& out_dir) {
  const cclk::Config config = cclk::Config::load(config_path);
  const cclk::KernelSpec kernel = cclk::kernel_spec(config);
  const cclk::OperatorConfig op = cclk::operator_config(config);
  const std::size_t b = config.get_size("train.batch_size");
  const cclk::Dataset ds = cclk::load_csv(data_path);
  const std::size_t rows = std::min(b, ds.size());
  if (rows < 2) throw cclk::ContractError("inspect: need at least 2 rows");

  const cclk::Matrix kz = cclk::z_gram(ds.z.slice_rows(0, rows), kernel);
  const auto [w_norm, kz_norm] = cclk::inspect_smoothing(kz, op);
  ensure_dir(out_dir);
  write_file(out_dir / "w_normalized.csv", matrix_csv(w_norm));
  write_file(out_dir / "kz_normalized.csv", matrix_csv(kz_norm));
  std::cout << "rows=" << rows << " lambda=" << number(op.resolve_lambda(kz)) << "\n";
  return kOk;
}

int verify(bool inject_fault) {
  cclk::VerifyOptions options;
  options.flip_w_sign = inject_fault;
  const auto results = cclk::run_verification(options);
  std::string failed;
  for (const cclk::PropertyResult& r : results) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << " (" << r.detail << ")\n";
    if (!r.passed) failed += (failed.empty() ? "" : ", ") + r.name;
  }
  if (!failed.empty()) {
    std::cerr << "failed properties: " << failed << "\n";
    return kVerifyFailed;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conditional contrastive learning with kernel operators"};
  app.require_subcommand(1);

  std::string config_path, out_path, data_path, out_dir, checkpoint_path;
  bool inject_fault = false;

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset CSV");
  gen->add_option("--config", config_path, "Config file")->required();
  gen->add_option("--out", out_path, "Output CSV")->required();

  auto* tr = app.add_subcommand("train", "Train an encoder");
  tr->add_option("--config", config_path, "Config file")->required();
  tr->add_option("--data", data_path, "Dataset CSV")->required();
  tr->add_option("--out-dir", out_dir, "Directory for checkpoint, report and loss curve")->required();

  auto* ev = app.add_subcommand("eval", "Probe a checkpoint on a dataset");
  ev->add_option("--checkpoint", checkpoint_path, "Checkpoint JSON")->required();
  ev->add_option("--data", data_path, "Dataset CSV")->required();

  auto* in = app.add_subcommand("inspect", "Export normalized W and K_Z for the first batch");
  in->add_option("--data", data_path, "Dataset CSV")->required();
  in->add_option("--config", config_path, "Config file")->required();
  in->add_option("--out", out_dir, "Output directory")->required();

  auto* ver = app.add_subcommand("verify", "Run the property suite");
  ver->add_flag("--inject-fault", inject_fault)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kContract;
  }

  try {
    if (*gen) return gen_data(config_path, out_path);
    if (*tr) return train(config_path, data_path, out_dir);
    if (*ev) return eval(checkpoint_path, data_path);
    if (*in) return inspect(data_path, config_path, out_dir);
    if (*ver) return verify(inject_fault);
  } catch (const cclk::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const cclk::NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumeric;
  } catch (const cclk::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kContract;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kContract;
  }
  return kContract;
}
