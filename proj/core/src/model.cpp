#include "cclk/model.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "cclk/errors.hpp"

namespace cclk {

namespace {

using nlohmann::json;

json matrix_to_json(const Matrix& m) {
  return json{{"rows", m.rows()},
              {"cols", m.cols()},
              {"data", std::vector<double>(m.data().begin(), m.data().end())}};
}

Matrix matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<std::size_t>();
  const auto cols = j.at("cols").get<std::size_t>();
  auto data = j.at("data").get<std::vector<double>>();
  if (data.size() != rows * cols) throw ParseError(0, "checkpoint: matrix data length mismatch");
  return Matrix(rows, cols, std::move(data));
}

json layers_to_json(const std::vector<Layer>& layers) {
  json arr = json::array();
  for (const Layer& l : layers)
    arr.push_back(json{{"weight", matrix_to_json(l.weight)}, {"bias", matrix_to_json(l.bias)}});
  return arr;
}

std::vector<Layer> layers_from_json(const json& arr, const std::vector<std::size_t>& sizes) {
  if (!arr.is_array() || arr.size() + 1 != sizes.size()) {
    throw ParseError(0, "checkpoint: layer count does not match sizes");
  }
  std::vector<Layer> layers;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    Layer l{matrix_from_json(arr[i].at("weight")), matrix_from_json(arr[i].at("bias"))};
    if (l.weight.rows() != sizes[i] || l.weight.cols() != sizes[i + 1] || l.bias.rows() != 1 ||
        l.bias.cols() != sizes[i + 1]) {
      throw ParseError(0, "checkpoint: layer " + std::to_string(i) + " has the wrong shape");
    }
    layers.push_back(std::move(l));
  }
  return layers;
}

std::vector<Layer> init_layers(const std::vector<std::size_t>& sizes, std::mt19937_64& rng) {
  std::vector<Layer> layers;
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    const double bound = glorot_bound(sizes[i], sizes[i + 1]);
    std::uniform_real_distribution<double> dist(-bound, bound);
    Layer l{Matrix(sizes[i], sizes[i + 1]), Matrix(1, sizes[i + 1])};
    for (double& w : l.weight.data()) w = dist(rng);
    layers.push_back(std::move(l));
  }
  return layers;
}

}  // namespace

std::string_view to_string(Activation a) noexcept {
  return a == Activation::Tanh ? "tanh" : "relu";
}

Activation parse_activation(std::string_view name) {
  if (name == "tanh") return Activation::Tanh;
  if (name == "relu") return Activation::Relu;
  throw ConfigError("model.activation", "expected tanh or relu, got '" + std::string(name) + "'");
}

std::vector<Matrix> EncoderParams::flatten() const {
  std::vector<Matrix> flat;
  for (const Layer& l : x_layers) {
    flat.push_back(l.weight);
    flat.push_back(l.bias);
  }
  if (!shared) {
    for (const Layer& l : y_layers) {
      flat.push_back(l.weight);
      flat.push_back(l.bias);
    }
  }
  return flat;
}

void EncoderParams::assign(const std::vector<Matrix>& flat) {
  const std::size_t per_encoder = 2 * x_layers.size();
  if (flat.size() != per_encoder * (shared ? 1 : 2)) {
    throw ShapeError("EncoderParams::assign: wrong number of parameter matrices");
  }
  auto load = [&](std::vector<Layer>& layers, std::size_t offset) {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      if (!flat[offset + 2 * i].same_shape(layers[i].weight) ||
          !flat[offset + 2 * i + 1].same_shape(layers[i].bias)) {
        throw ShapeError("EncoderParams::assign: parameter shape changed");
      }
      layers[i].weight = flat[offset + 2 * i];
      layers[i].bias = flat[offset + 2 * i + 1];
    }
  };
  load(x_layers, 0);
  if (!shared) load(y_layers, per_encoder);
}

double glorot_bound(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

EncoderParams init_encoder(const std::vector<std::size_t>& sizes, std::uint64_t seed, bool shared,
                           Activation activation) {
  if (sizes.size() < 2) throw ConfigError("model.sizes", "need an input width and at least one layer");
  for (std::size_t s : sizes)
    if (s == 0) throw ConfigError("model.sizes", "layer widths must be positive");

  EncoderParams params;
  params.sizes = sizes;
  params.activation = activation;
  params.shared = shared;
  std::mt19937_64 rng(seed);
  params.x_layers = init_layers(sizes, rng);
  if (!shared) params.y_layers = init_layers(sizes, rng);
  return params;
}

TapeEncoder register_params(ad::Tape& tape, const EncoderParams& params) {
  TapeEncoder enc;
  for (const Matrix& m : params.flatten()) enc.flat.push_back(tape.param(m));
  const std::size_t per_encoder = 2 * params.x_layers.size();
  enc.x.assign(enc.flat.begin(), enc.flat.begin() + static_cast<std::ptrdiff_t>(per_encoder));
  if (params.shared) {
    enc.y = enc.x;
  } else {
    enc.y.assign(enc.flat.begin() + static_cast<std::ptrdiff_t>(per_encoder), enc.flat.end());
  }
  return enc;
}

ad::Var forward(std::span<const ad::Var> layer_vars, Activation activation, ad::Var input) {
  if (layer_vars.empty() || layer_vars.size() % 2 != 0) {
    throw ShapeError("forward: expected weight/bias pairs");
  }
  if (input.cols() != layer_vars[0].rows()) {
    throw ShapeError("forward: input has " + std::to_string(input.cols()) +
                     " columns, encoder expects " + std::to_string(layer_vars[0].rows()));
  }
  ad::Var h = input;
  const std::size_t layers = layer_vars.size() / 2;
  for (std::size_t i = 0; i < layers; ++i) {
    h = ad::add(ad::matmul(h, layer_vars[2 * i]), layer_vars[2 * i + 1]);
    if (i + 1 < layers) h = activation == Activation::Tanh ? ad::tanh(h) : ad::relu(h);
  }
  return ad::row_l2_normalize(h);
}

Matrix embed(const EncoderParams& params, const Matrix& input) {
  ad::Tape tape;
  std::vector<ad::Var> vars;
  for (const Layer& l : params.x_layers) {
    vars.push_back(tape.constant(l.weight));
    vars.push_back(tape.constant(l.bias));
  }
  return forward(vars, params.activation, tape.constant(input)).value();
}

std::string checkpoint_to_json(const Checkpoint& checkpoint) {
  const EncoderParams& p = checkpoint.params;
  json doc;
  doc["format"] = "cclk-encoder";
  doc["version"] = 1;
  doc["sizes"] = p.sizes;
  doc["activation"] = std::string(to_string(p.activation));
  doc["shared"] = p.shared;
  doc["metadata"] = checkpoint.metadata;
  doc["x_layers"] = layers_to_json(p.x_layers);
  if (!p.shared) doc["y_layers"] = layers_to_json(p.y_layers);
  return doc.dump(1) + "\n";
}

Checkpoint checkpoint_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(0, std::string("checkpoint: ") + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != "cclk-encoder") {
      throw ParseError(0, "checkpoint: unexpected format tag");
    }
    Checkpoint c;
    c.params.sizes = doc.at("sizes").get<std::vector<std::size_t>>();
    if (c.params.sizes.size() < 2) throw ParseError(0, "checkpoint: need at least one layer");
    c.params.activation = parse_activation(doc.at("activation").get<std::string>());
    c.params.shared = doc.at("shared").get<bool>();
    c.metadata = doc.value("metadata", std::map<std::string, std::string>{});
    c.params.x_layers = layers_from_json(doc.at("x_layers"), c.params.sizes);
    if (!c.params.shared) c.params.y_layers = layers_from_json(doc.at("y_layers"), c.params.sizes);
    return c;
  } catch (const json::exception& e) {
    throw ParseError(0, std::string("checkpoint: ") + e.what());
  } catch (const ConfigError& e) {
    throw ParseError(0, std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << checkpoint_to_json(checkpoint);
  if (!out) throw IoError("failed writing " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_json(ss.str());
}

}  // namespace cclk
