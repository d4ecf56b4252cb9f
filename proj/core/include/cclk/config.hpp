#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "cclk/data.hpp"
#include "cclk/trainer.hpp"

// Flat key=value experiment configuration.
//
//   # comment
//   data.generator = colorblobs
//   loss.kind = fair_cclk
//
// Keys are grouped by dotted prefix (data.*, kernel.*, loss.*, operator.*,
// train.*, model.*, eval.*). Unknown and repeated keys are rejected; every key
// has a default (see Config::documented_defaults()).
namespace cclk {

struct ConfigKey {
  std::string name;
  std::string default_value;
  std::string help;
};

class Config {
 public:
  // All defaults applied.
  Config();

  static const std::vector<ConfigKey>& documented_defaults();

  // Throws ParseError (with line number) on malformed lines and ConfigError
  // (naming the key) on unknown or repeated keys.
  static Config parse(std::string_view text);
  static Config load(const std::string& path);

  void set(const std::string& key, std::string value);
  const std::string& get(const std::string& key) const;
  bool is_explicit(const std::string& key) const { return explicit_.count(key) != 0; }

  // Typed accessors; malformed values raise ConfigError naming the key.
  double get_double(const std::string& key) const;
  std::size_t get_size(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  int get_int(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  // Every key with its effective value, in key order.
  const std::map<std::string, std::string>& values() const noexcept { return values_; }

 private:
  std::map<std::string, std::string> values_;
  std::map<std::string, bool> explicit_;
};

KernelSpec kernel_spec(const Config& c);
OperatorConfig operator_config(const Config& c);
LossConfig loss_config(const Config& c);
ViewConfig view_config(const Config& c);
TrainConfig train_config(const Config& c);
ColorBlobsParams colorblobs_params(const Config& c);
AttrBlobsParams attrblobs_params(const Config& c);

// Runs the generator named by data.generator (colorblobs or attrblobs).
Dataset generate_dataset(const Config& c);

}  // namespace cclk
