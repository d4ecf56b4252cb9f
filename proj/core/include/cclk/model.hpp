#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cclk/autodiff.hpp"
#include "cclk/linalg.hpp"

namespace cclk {

enum class Activation { Tanh, Relu };

std::string_view to_string(Activation a) noexcept;
Activation parse_activation(std::string_view name);

struct Layer {
  Matrix weight;  // fan_in × fan_out
  Matrix bias;    // 1 × fan_out
};

// MLP encoder parameters. With `shared` the Y encoder is the X encoder and
// `y_layers` stays empty.
struct EncoderParams {
  std::vector<std::size_t> sizes;
  Activation activation = Activation::Tanh;
  bool shared = true;
  std::vector<Layer> x_layers;
  std::vector<Layer> y_layers;

  std::size_t input_dim() const { return sizes.front(); }
  std::size_t embed_dim() const { return sizes.back(); }
  const std::vector<Layer>& layers_for_y() const { return shared ? x_layers : y_layers; }

  // Flattened parameter list (weights and biases, X then Y) and its inverse.
  std::vector<Matrix> flatten() const;
  void assign(const std::vector<Matrix>& flat);
};

// Glorot-uniform weights, zero biases. `sizes` lists every layer width,
// input first; it needs at least two entries.
EncoderParams init_encoder(const std::vector<std::size_t>& sizes, std::uint64_t seed,
                           bool shared = true, Activation activation = Activation::Tanh);

double glorot_bound(std::size_t fan_in, std::size_t fan_out);

// Parameters registered on a tape. For a shared encoder `y` holds the same
// Vars (same node ids) as `x`.
struct TapeEncoder {
  std::vector<ad::Var> flat;
  std::vector<ad::Var> x;  // weight, bias, weight, bias, ...
  std::vector<ad::Var> y;
};
TapeEncoder register_params(ad::Tape& tape, const EncoderParams& params);

// affine + activation for every hidden layer, final affine, then row-L2
// normalization.
ad::Var forward(std::span<const ad::Var> layer_vars, Activation activation, ad::Var input);
Matrix embed(const EncoderParams& params, const Matrix& input);

// Checkpoint: JSON document with sizes, flags, free-form string metadata and
// row-major weights written with round-trip precision.
struct Checkpoint {
  EncoderParams params;
  std::map<std::string, std::string> metadata;
};

std::string checkpoint_to_json(const Checkpoint& checkpoint);
// Throws ParseError on malformed or inconsistent documents.
Checkpoint checkpoint_from_json(const std::string& text);
void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace cclk
