#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cclk/linalg.hpp"

namespace cclk {

struct Dataset {
  Matrix features;          // N × d, the encoder input
  std::vector<int> labels;  // N class ids in [0, num_classes)
  Matrix z;                 // N × k conditioning outcomes
  std::size_t num_classes = 0;
  std::map<std::string, std::string> meta;

  std::size_t size() const noexcept { return labels.size(); }
  // Throws ContractError when lengths disagree or a label is out of range.
  void validate() const;
};

// Gaussian class clusters plus a colour-like nuisance that is correlated with
// the class. The nuisance is appended to the features so an encoder can pick
// it up.
struct ColorBlobsParams {
  std::size_t num_classes = 4;
  std::size_t per_class = 200;
  std::size_t dim = 2;
  std::size_t nuisance_dim = 3;
  double corr = 0.9;          // in [0, 1)
  double separation = 3.0;    // distance between neighbouring class means
  double cluster_std = 0.5;
  double color_jitter = 0.3;   // spread of a sample's colour around its class anchor
  std::uint64_t seed = 0;
};
Dataset gen_colorblobs(const ColorBlobsParams& p);

// Gaussian class clusters with noisy binary attribute annotations as z. Each
// class owns a random attribute vector; every bit of a sample's copy flips with
// probability attr_noise. With group_size > 1 consecutive samples of a class
// share one flip pattern, so every realized configuration is owned by (at
// least) group_size samples.
struct AttrBlobsParams {
  std::size_t num_classes = 8;
  std::size_t per_class = 100;
  std::size_t dim = 16;
  std::size_t num_attrs = 32;
  double attr_noise = 0.1;
  std::size_t group_size = 1;
  double separation = 3.0;
  double cluster_std = 0.5;
  std::uint64_t seed = 0;
};
Dataset gen_attrblobs(const AttrBlobsParams& p);

// Deterministic class centres: one-hot axes when dim >= num_classes, else a
// circle in the first two coordinates (a line for dim == 1), with neighbouring
// centres `separation` apart.
Matrix class_means(std::size_t num_classes, std::size_t dim, double separation);

struct ViewConfig {
  double noise_sigma = 0.1;
  double mask_prob = 0.0;  // in [0, 1)

  void validate() const;
};

// Two independent corruptions (Gaussian noise, then coordinate masking) of
// every row. Row i of both views derives from row i of `features`.
std::pair<Matrix, Matrix> make_views(const Matrix& features, const ViewConfig& cfg,
                                     std::uint64_t seed);

struct Batch {
  Matrix x;
  Matrix y;
  Matrix z;
  std::vector<std::size_t> indices;

  std::size_t size() const noexcept { return indices.size(); }
};

// Seeded shuffle cut into batches; a trailing batch smaller than 2 is dropped.
std::vector<std::vector<std::size_t>> batch_indices(std::size_t n, std::size_t batch_size,
                                                    std::uint64_t epoch_seed);

// Batches for the discrete conditional-sampling baselines: every anchor (taken
// in shuffled order) is followed by a random dataset member sharing its exact z
// when one exists. Anchors whose outcome is unique in the dataset enter alone,
// so the loss sees the singleton and reports it.
std::vector<std::vector<std::size_t>> paired_batch_indices(const Dataset& ds,
                                                           std::size_t batch_size,
                                                           std::uint64_t epoch_seed);

Batch make_batch(const Dataset& ds, std::vector<std::size_t> indices, const ViewConfig& views,
                 std::uint64_t view_seed);

std::vector<Batch> batches(const Dataset& ds, std::size_t batch_size, std::uint64_t epoch_seed,
                           const ViewConfig& views = {});

// CSV with header x_0..x_{d-1},z_0..z_{k-1},label and round-trip decimal
// precision. Parse failures raise ParseError carrying the line number.
void write_csv(const Dataset& ds, std::ostream& out);
Dataset read_csv(std::istream& in);
void save_csv(const Dataset& ds, const std::string& path);
Dataset load_csv(const std::string& path);

// Exact-match configurations of z over the whole dataset.
struct ConfigurationStats {
  std::size_t distinct = 0;
  std::size_t singletons = 0;
  double mean_samples = 0.0;  // N / distinct
};
ConfigurationStats configuration_stats(const Matrix& z);

}  // namespace cclk
