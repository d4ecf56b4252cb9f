#include "cclk/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cclk/errors.hpp"

namespace cclk {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool is_auto(const std::string& v) { return v == "auto" || v == "median"; }

std::map<std::string, std::string> default_map() {
  std::map<std::string, std::string> m;
  for (const ConfigKey& k : Config::documented_defaults()) m[k.name] = k.default_value;
  return m;
}

}  // namespace

const std::vector<ConfigKey>& Config::documented_defaults() {
  static const std::vector<ConfigKey> keys = {
      {"data.generator", "", "colorblobs or attrblobs (required by gen-data)"},
      {"data.seed", "0", "generator seed"},
      {"data.num_classes", "4", "number of classes"},
      {"data.per_class", "200", "samples per class"},
      {"data.dim", "2", "cluster dimension"},
      {"data.separation", "3.0", "distance between neighbouring class means"},
      {"data.cluster_std", "0.5", "within-class standard deviation"},
      {"data.nuisance_dim", "3", "colorblobs: nuisance (colour) channels"},
      {"data.corr", "0.9", "colorblobs: class/colour correlation in [0, 1)"},
      {"data.color_jitter", "0.3", "colorblobs: colour spread around the class anchor"},
      {"data.num_attrs", "32", "attrblobs: attribute count"},
      {"data.attr_noise", "0.1", "attrblobs: per-bit flip probability"},
      {"data.group_size", "1", "attrblobs: samples sharing one flip pattern"},
      {"data.view_noise", "0.1", "view augmentation: Gaussian noise sigma"},
      {"data.mask_prob", "0.0", "view augmentation: coordinate mask probability"},
      {"kernel.kind", "rbf", "rbf, laplacian, linear, cosine, polynomial or delta"},
      {"kernel.sigma2", "median", "rbf bandwidth, or median for the batch median heuristic"},
      {"kernel.gamma", "1.0", "laplacian scale"},
      {"kernel.degree", "3", "polynomial degree"},
      {"kernel.coef", "1.0", "polynomial offset"},
      {"loss.kind", "infonce", "objective"},
      {"loss.tau", "0.5", "score temperature"},
      {"loss.beta", "1.0", "hardneg_infonce concentration"},
      {"operator.lambda", "auto", "ridge, or auto for 1e-3 * mean(diag K_Z)"},
      {"operator.clamp_eps", "1e-8", "floor on conditional similarities"},
      {"train.steps", "500", "optimizer steps"},
      {"train.batch_size", "32", "batch size"},
      {"train.learning_rate", "0.05", "SGD learning rate"},
      {"train.momentum", "0.9", "SGD momentum"},
      {"train.seed", "0", "initialization, batching and augmentation seed"},
      {"train.eval_every", "100", "probe interval in steps"},
      {"model.hidden", "32", "comma-separated hidden widths (empty for none)"},
      {"model.embed_dim", "16", "embedding width"},
      {"model.shared", "true", "share the X and Y encoders"},
      {"model.activation", "tanh", "tanh or relu"},
      {"eval.ridge_scale", "1e-3", "probe ridge per training row"},
      {"eval.split_seed", "0", "probe train/test split seed"},
  };
  return keys;
}

Config::Config() : values_(default_map()) {}

Config Config::parse(std::string_view text) {
  Config c;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;

    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, "expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty()) throw ParseError(line_no, "missing key before '='");
    if (c.explicit_.count(key)) throw ConfigError(key, "set more than once");
    c.set(key, std::string(trim(line.substr(eq + 1))));
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void Config::set(const std::string& key, std::string value) {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError(key, "unknown configuration key");
  it->second = std::move(value);
  explicit_[key] = true;
}

const std::string& Config::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError(key, "unknown configuration key");
  return it->second;
}

double Config::get_double(const std::string& key) const {
  const std::string& v = get(key);
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || !std::isfinite(out)) {
    throw ConfigError(key, "expected a finite number, got '" + v + "'");
  }
  return out;
}

std::uint64_t Config::get_u64(const std::string& key) const {
  const std::string& v = get(key);
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty()) {
    throw ConfigError(key, "expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

std::size_t Config::get_size(const std::string& key) const {
  return static_cast<std::size_t>(get_u64(key));
}

int Config::get_int(const std::string& key) const {
  const std::string& v = get(key);
  int out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty()) {
    throw ConfigError(key, "expected an integer, got '" + v + "'");
  }
  return out;
}

bool Config::get_bool(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key, "expected true or false, got '" + v + "'");
}

KernelSpec kernel_spec(const Config& c) {
  KernelSpec k;
  k.kind = parse_kernel_kind(c.get("kernel.kind"));
  if (!is_auto(c.get("kernel.sigma2"))) k.sigma2 = c.get_double("kernel.sigma2");
  k.gamma = c.get_double("kernel.gamma");
  k.degree = c.get_int("kernel.degree");
  k.coef = c.get_double("kernel.coef");
  k.validate();
  return k;
}

OperatorConfig operator_config(const Config& c) {
  OperatorConfig op;
  if (!is_auto(c.get("operator.lambda"))) op.lambda = c.get_double("operator.lambda");
  op.clamp_eps = c.get_double("operator.clamp_eps");
  op.validate();
  return op;
}

LossConfig loss_config(const Config& c) {
  LossConfig l;
  l.score.tau = c.get_double("loss.tau");
  if (!(l.score.tau > 0.0)) throw ConfigError("loss.tau", "must be positive");
  l.kernel = kernel_spec(c);
  l.op = operator_config(c);
  l.beta = c.get_double("loss.beta");
  return l;
}

ViewConfig view_config(const Config& c) {
  ViewConfig v;
  v.noise_sigma = c.get_double("data.view_noise");
  v.mask_prob = c.get_double("data.mask_prob");
  v.validate();
  return v;
}

TrainConfig train_config(const Config& c) {
  TrainConfig t;
  t.loss = parse_loss_kind(c.get("loss.kind"));
  t.steps = c.get_size("train.steps");
  t.batch_size = c.get_size("train.batch_size");
  t.learning_rate = c.get_double("train.learning_rate");
  t.momentum = c.get_double("train.momentum");
  t.seed = c.get_u64("train.seed");
  t.eval_every = c.get_size("train.eval_every");
  t.loss_config = loss_config(c);
  t.views = view_config(c);

  t.model.hidden.clear();
  std::string_view hidden = c.get("model.hidden");
  while (!hidden.empty()) {
    const auto comma = hidden.find(',');
    const std::string item(trim(hidden.substr(0, comma)));
    hidden = comma == std::string_view::npos ? std::string_view{} : hidden.substr(comma + 1);
    std::size_t width = 0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), width);
    if (ec != std::errc{} || ptr != item.data() + item.size() || width == 0) {
      throw ConfigError("model.hidden", "expected comma-separated positive widths");
    }
    t.model.hidden.push_back(width);
  }
  t.model.embed_dim = c.get_size("model.embed_dim");
  t.model.shared = c.get_bool("model.shared");
  t.model.activation = parse_activation(c.get("model.activation"));
  t.probe.ridge_scale = c.get_double("eval.ridge_scale");
  t.probe.split_seed = c.get_u64("eval.split_seed");
  t.validate();
  return t;
}

ColorBlobsParams colorblobs_params(const Config& c) {
  ColorBlobsParams p;
  p.num_classes = c.get_size("data.num_classes");
  p.per_class = c.get_size("data.per_class");
  p.dim = c.get_size("data.dim");
  p.nuisance_dim = c.get_size("data.nuisance_dim");
  p.corr = c.get_double("data.corr");
  p.separation = c.get_double("data.separation");
  p.cluster_std = c.get_double("data.cluster_std");
  p.color_jitter = c.get_double("data.color_jitter");
  p.seed = c.get_u64("data.seed");
  return p;
}

AttrBlobsParams attrblobs_params(const Config& c) {
  AttrBlobsParams p;
  p.num_classes = c.get_size("data.num_classes");
  p.per_class = c.get_size("data.per_class");
  p.dim = c.get_size("data.dim");
  p.num_attrs = c.get_size("data.num_attrs");
  p.attr_noise = c.get_double("data.attr_noise");
  p.group_size = c.get_size("data.group_size");
  p.separation = c.get_double("data.separation");
  p.cluster_std = c.get_double("data.cluster_std");
  p.seed = c.get_u64("data.seed");
  return p;
}

Dataset generate_dataset(const Config& c) {
  const std::string& g = c.get("data.generator");
  if (g == "colorblobs") return gen_colorblobs(colorblobs_params(c));
  if (g == "attrblobs") return gen_attrblobs(attrblobs_params(c));
  if (g.empty()) throw ConfigError("data.generator", "required (colorblobs or attrblobs)");
  throw ConfigError("data.generator", "unknown generator '" + g + "'");
}

}  // namespace cclk
