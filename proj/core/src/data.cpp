#include "cclk/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string_view>

#include "cclk/errors.hpp"

namespace cclk {

namespace {

void append_number(std::string& out, double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  return s;
}

// Parses "<prefix><index>" and returns index, or -1.
long column_index(std::string_view name, std::string_view prefix) {
  if (name.substr(0, prefix.size()) != prefix) return -1;
  long idx = -1;
  const auto digits = name.substr(prefix.size());
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), idx);
  if (ec != std::errc{} || ptr != digits.data() + digits.size() || digits.empty()) return -1;
  return idx;
}

// Anchor colours: corners of the unit cube spread across the available corners.
Matrix color_anchors(std::size_t num_classes, std::size_t k) {
  Matrix anchors(num_classes, k);
  const std::size_t corners = k >= 63 ? ~std::size_t{0} : (std::size_t{1} << k);
  for (std::size_t c = 0; c < num_classes; ++c) {
    std::size_t code = c % corners;
    if (num_classes > 1 && num_classes <= corners) {
      code = static_cast<std::size_t>(std::llround(static_cast<double>(c) * static_cast<double>(corners - 1) /
                                                   static_cast<double>(num_classes - 1)));
    }
    for (std::size_t j = 0; j < k; ++j) anchors(c, j) = (j < 63 && ((code >> j) & 1U)) ? 1.0 : 0.0;
  }
  return anchors;
}

Matrix gaussian_clusters(std::size_t num_classes, std::size_t per_class, std::size_t dim,
                         double separation, double std_dev, std::mt19937_64& rng,
                         std::vector<int>& labels) {
  const Matrix means = class_means(num_classes, dim, separation);
  std::normal_distribution<double> noise(0.0, std_dev);
  Matrix x(num_classes * per_class, dim);
  labels.assign(num_classes * per_class, 0);
  for (std::size_t c = 0; c < num_classes; ++c) {
    for (std::size_t s = 0; s < per_class; ++s) {
      const std::size_t i = c * per_class + s;
      labels[i] = static_cast<int>(c);
      for (std::size_t j = 0; j < dim; ++j) x(i, j) = means(c, j) + noise(rng);
    }
  }
  return x;
}

}  // namespace

void Dataset::validate() const {
  if (features.rows() != labels.size() || z.rows() != labels.size()) {
    throw ContractError("dataset: features, z and labels have different lengths");
  }
  for (int l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= num_classes) {
      throw ContractError("dataset: label " + std::to_string(l) + " outside [0, num_classes)");
    }
  }
}

Matrix class_means(std::size_t num_classes, std::size_t dim, double separation) {
  Matrix means(num_classes, dim);
  if (num_classes < 2 || dim == 0) return means;
  if (dim >= num_classes) {
    for (std::size_t c = 0; c < num_classes; ++c) means(c, c) = separation / std::numbers::sqrt2;
  } else if (dim == 1) {
    for (std::size_t c = 0; c < num_classes; ++c) means(c, 0) = separation * static_cast<double>(c);
  } else {
    const double step = 2.0 * std::numbers::pi / static_cast<double>(num_classes);
    const double radius = separation / (2.0 * std::sin(step / 2.0));
    for (std::size_t c = 0; c < num_classes; ++c) {
      means(c, 0) = radius * std::cos(step * static_cast<double>(c));
      means(c, 1) = radius * std::sin(step * static_cast<double>(c));
    }
  }
  return means;
}

Dataset gen_colorblobs(const ColorBlobsParams& p) {
  if (!(p.corr >= 0.0 && p.corr < 1.0)) throw ConfigError("data.corr", "must lie in [0, 1)");
  if (p.per_class < 2) throw ConfigError("data.per_class", "need at least 2 samples per class");
  if (p.num_classes < 1 || p.dim < 1 || p.nuisance_dim < 1) {
    throw ConfigError("data", "num_classes, dim and nuisance_dim must be positive");
  }
  if (!(p.cluster_std >= 0.0) || !(p.color_jitter >= 0.0)) {
    throw ConfigError("data.cluster_std", "spreads must be non-negative");
  }

  std::mt19937_64 rng(p.seed);
  Dataset ds;
  ds.num_classes = p.num_classes;
  const Matrix blobs =
      gaussian_clusters(p.num_classes, p.per_class, p.dim, p.separation, p.cluster_std, rng, ds.labels);

  const Matrix anchors = color_anchors(p.num_classes, p.nuisance_dim);
  std::normal_distribution<double> jitter(0.0, p.color_jitter);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  ds.z = Matrix(ds.labels.size(), p.nuisance_dim);
  for (std::size_t i = 0; i < ds.labels.size(); ++i) {
    const auto c = static_cast<std::size_t>(ds.labels[i]);
    for (std::size_t j = 0; j < p.nuisance_dim; ++j) {
      const double color = std::clamp(anchors(c, j) + jitter(rng), 0.0, 1.0);
      ds.z(i, j) = p.corr * color + (1.0 - p.corr) * uniform(rng);
    }
  }
  ds.features = hconcat(blobs, ds.z);
  ds.meta = {{"generator", "colorblobs"},
             {"num_classes", std::to_string(p.num_classes)},
             {"per_class", std::to_string(p.per_class)},
             {"dim", std::to_string(p.dim)},
             {"nuisance_dim", std::to_string(p.nuisance_dim)},
             {"seed", std::to_string(p.seed)}};
  return ds;
}

Dataset gen_attrblobs(const AttrBlobsParams& p) {
  if (p.num_attrs < 1) throw ConfigError("data.num_attrs", "need at least one attribute");
  if (p.per_class < 2) throw ConfigError("data.per_class", "need at least 2 samples per class");
  if (!(p.attr_noise >= 0.0 && p.attr_noise <= 1.0)) {
    throw ConfigError("data.attr_noise", "must lie in [0, 1]");
  }
  if (p.group_size < 1) throw ConfigError("data.group_size", "must be at least 1");
  if (p.num_classes < 1 || p.dim < 1) throw ConfigError("data", "num_classes and dim must be positive");

  std::mt19937_64 rng(p.seed);
  Dataset ds;
  ds.num_classes = p.num_classes;
  ds.features =
      gaussian_clusters(p.num_classes, p.per_class, p.dim, p.separation, p.cluster_std, rng, ds.labels);

  std::bernoulli_distribution coin(0.5);
  Matrix prototypes(p.num_classes, p.num_attrs);
  for (double& bit : prototypes.data()) bit = coin(rng) ? 1.0 : 0.0;

  std::bernoulli_distribution flip(p.attr_noise);
  ds.z = Matrix(ds.labels.size(), p.num_attrs);
  std::vector<bool> pattern(p.num_attrs);
  for (std::size_t c = 0; c < p.num_classes; ++c) {
    for (std::size_t s = 0; s < p.per_class; ++s) {
      if (s % p.group_size == 0) {
        for (std::size_t j = 0; j < p.num_attrs; ++j) pattern[j] = flip(rng);
      }
      const std::size_t i = c * p.per_class + s;
      for (std::size_t j = 0; j < p.num_attrs; ++j) {
        const double bit = prototypes(c, j);
        ds.z(i, j) = pattern[j] ? 1.0 - bit : bit;
      }
    }
  }
  ds.meta = {{"generator", "attrblobs"},
             {"num_classes", std::to_string(p.num_classes)},
             {"per_class", std::to_string(p.per_class)},
             {"dim", std::to_string(p.dim)},
             {"num_attrs", std::to_string(p.num_attrs)},
             {"seed", std::to_string(p.seed)}};
  return ds;
}

void ViewConfig::validate() const {
  if (!(noise_sigma >= 0.0)) throw ConfigError("data.view_noise", "must be non-negative");
  if (!(mask_prob >= 0.0 && mask_prob < 1.0)) throw ConfigError("data.mask_prob", "must lie in [0, 1)");
}

std::pair<Matrix, Matrix> make_views(const Matrix& features, const ViewConfig& cfg,
                                     std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto corrupt = [&](Matrix view) {
    for (double& v : view.data()) {
      if (cfg.noise_sigma > 0.0) v += cfg.noise_sigma * noise(rng);
      if (cfg.mask_prob > 0.0 && unit(rng) < cfg.mask_prob) v = 0.0;
    }
    return view;
  };
  Matrix x = corrupt(features);
  Matrix y = corrupt(features);
  return {std::move(x), std::move(y)};
}

std::vector<std::vector<std::size_t>> batch_indices(std::size_t n, std::size_t batch_size,
                                                    std::uint64_t epoch_seed) {
  if (batch_size < 2) throw ContractError("batches: batch_size must be at least 2");
  if (n < 2) throw ContractError("batches: dataset has fewer than 2 rows");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(epoch_seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t len = std::min(batch_size, n - start);
    if (len < 2) break;
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                     order.begin() + static_cast<std::ptrdiff_t>(start + len));
  }
  return out;
}

std::vector<std::vector<std::size_t>> paired_batch_indices(const Dataset& ds,
                                                           std::size_t batch_size,
                                                           std::uint64_t epoch_seed) {
  if (batch_size < 2) throw ContractError("batches: batch_size must be at least 2");
  const std::size_t n = ds.size();
  if (n < 2) throw ContractError("batches: dataset has fewer than 2 rows");

  std::map<std::vector<double>, std::vector<std::size_t>> by_config;
  std::vector<const std::vector<std::size_t>*> group_of(n);
  for (std::size_t i = 0; i < n; ++i) {
    by_config[std::vector<double>(ds.z.row(i).begin(), ds.z.row(i).end())].push_back(i);
  }
  for (const auto& [config, members] : by_config)
    for (std::size_t i : members) group_of[i] = &members;

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(epoch_seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> current;
  std::set<std::size_t> in_batch;
  auto close = [&] {
    if (current.size() >= 2) out.push_back(current);
    current.clear();
    in_batch.clear();
  };
  for (std::size_t anchor : order) {
    if (in_batch.count(anchor)) continue;
    if (batch_size - current.size() < 2) close();
    current.push_back(anchor);
    in_batch.insert(anchor);

    std::vector<std::size_t> candidates;
    for (std::size_t m : *group_of[anchor])
      if (!in_batch.count(m)) candidates.push_back(m);
    if (!candidates.empty()) {
      std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
      const std::size_t partner = candidates[pick(rng)];
      current.push_back(partner);
      in_batch.insert(partner);
    }
    if (current.size() == batch_size) close();
  }
  close();
  return out;
}

Batch make_batch(const Dataset& ds, std::vector<std::size_t> indices, const ViewConfig& views,
                 std::uint64_t view_seed) {
  Batch b;
  const Matrix rows = ds.features.gather_rows(indices);
  auto [x, y] = make_views(rows, views, view_seed);
  b.x = std::move(x);
  b.y = std::move(y);
  b.z = ds.z.gather_rows(indices);
  b.indices = std::move(indices);
  return b;
}

std::vector<Batch> batches(const Dataset& ds, std::size_t batch_size, std::uint64_t epoch_seed,
                           const ViewConfig& views) {
  std::vector<Batch> out;
  std::uint64_t view_seed = epoch_seed * 0x9E3779B97F4A7C15ULL + 1;
  for (auto& idx : batch_indices(ds.size(), batch_size, epoch_seed)) {
    out.push_back(make_batch(ds, std::move(idx), views, view_seed++));
  }
  return out;
}

void write_csv(const Dataset& ds, std::ostream& out) {
  ds.validate();
  std::string line;
  for (std::size_t j = 0; j < ds.features.cols(); ++j) line += "x_" + std::to_string(j) + ",";
  for (std::size_t j = 0; j < ds.z.cols(); ++j) line += "z_" + std::to_string(j) + ",";
  line += "label\n";
  out << line;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    line.clear();
    for (double v : ds.features.row(i)) {
      append_number(line, v);
      line += ',';
    }
    for (double v : ds.z.row(i)) {
      append_number(line, v);
      line += ',';
    }
    line += std::to_string(ds.labels[i]);
    line += '\n';
    out << line;
  }
}

Dataset read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) throw ParseError(1, "empty file: missing header");

  const auto header = split_commas(trim(line));
  std::size_t dx = 0;
  std::size_t dz = 0;
  bool has_label = false;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto name = trim(header[c]);
    if (has_label) throw ParseError(1, "column after 'label'");
    if (column_index(name, "x_") == static_cast<long>(dx) && dz == 0) {
      ++dx;
    } else if (column_index(name, "z_") == static_cast<long>(dz)) {
      ++dz;
    } else if (name == "label") {
      has_label = true;
    } else {
      throw ParseError(1, "unexpected column '" + std::string(name) + "'");
    }
  }
  if (!has_label) throw ParseError(1, "missing 'label' column");
  if (dx == 0) throw ParseError(1, "no x_ columns");

  std::vector<double> xs;
  std::vector<double> zs;
  std::vector<int> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto row = trim(line);
    if (row.empty()) continue;
    const auto fields = split_commas(row);
    if (fields.size() != dx + dz + 1) {
      throw ParseError(line_no, "expected " + std::to_string(dx + dz + 1) + " fields, got " +
                                    std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < dx + dz; ++c) {
      const auto f = trim(fields[c]);
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc{} || ptr != f.data() + f.size() || !std::isfinite(v)) {
        throw ParseError(line_no, "bad number '" + std::string(f) + "'");
      }
      (c < dx ? xs : zs).push_back(v);
    }
    const auto lf = trim(fields.back());
    int label = -1;
    auto [ptr, ec] = std::from_chars(lf.data(), lf.data() + lf.size(), label);
    if (ec != std::errc{} || ptr != lf.data() + lf.size() || label < 0) {
      throw ParseError(line_no, "bad label '" + std::string(lf) + "'");
    }
    labels.push_back(label);
  }
  if (labels.empty()) throw ParseError(line_no, "no data rows");

  Dataset ds;
  const std::size_t n = labels.size();
  ds.features = Matrix(n, dx, std::move(xs));
  ds.z = dz == 0 ? Matrix(n, 0) : Matrix(n, dz, std::move(zs));
  ds.num_classes = static_cast<std::size_t>(*std::max_element(labels.begin(), labels.end())) + 1;
  ds.labels = std::move(labels);
  return ds;
}

void save_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  write_csv(ds, out);
  if (!out) throw IoError("failed writing " + path);
}

Dataset load_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return read_csv(in);
}

ConfigurationStats configuration_stats(const Matrix& z) {
  std::map<std::vector<double>, std::size_t> counts;
  for (std::size_t i = 0; i < z.rows(); ++i) ++counts[std::vector<double>(z.row(i).begin(), z.row(i).end())];
  ConfigurationStats s;
  s.distinct = counts.size();
  for (const auto& [config, count] : counts)
    if (count == 1) ++s.singletons;
  s.mean_samples = s.distinct ? static_cast<double>(z.rows()) / static_cast<double>(s.distinct) : 0.0;
  return s;
}

}  // namespace cclk
