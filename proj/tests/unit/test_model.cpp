#include <doctest.h>

#include <cmath>
#include <random>

#include "cclk/errors.hpp"
#include "cclk/model.hpp"

using cclk::EncoderParams;
using cclk::Matrix;
namespace ad = cclk::ad;

namespace {

Matrix gaussian(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(r, c);
  for (double& v : m.data()) v = g(rng);
  return m;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("init is deterministic per seed") {
  const EncoderParams a = cclk::init_encoder({3, 8, 4}, 11);
  const EncoderParams b = cclk::init_encoder({3, 8, 4}, 11);
  const EncoderParams c = cclk::init_encoder({3, 8, 4}, 12);
  CHECK(a.flatten() == b.flatten());
  CHECK(a.flatten() != c.flatten());
}

TEST_CASE("init shapes and bounds") {
  const EncoderParams p = cclk::init_encoder({2, 8, 4}, 0);
  REQUIRE(p.x_layers.size() == 2);
  CHECK(p.x_layers[0].weight.rows() == 2);
  CHECK(p.x_layers[0].weight.cols() == 8);
  CHECK(p.x_layers[1].weight.rows() == 8);
  CHECK(p.x_layers[1].weight.cols() == 4);
  CHECK(p.x_layers[0].bias == Matrix(1, 8));
  CHECK(p.y_layers.empty());
  CHECK(cclk::glorot_bound(2, 8) == doctest::Approx(0.774597).epsilon(1e-6));
  for (double w : p.x_layers[0].weight.data()) CHECK(std::abs(w) <= cclk::glorot_bound(2, 8));
  for (double w : p.x_layers[1].weight.data()) CHECK(std::abs(w) <= cclk::glorot_bound(8, 4));
}

TEST_CASE("init rejects degenerate sizes") {
  CHECK_THROWS_AS(cclk::init_encoder({}, 0), cclk::ConfigError);
  CHECK_THROWS_AS(cclk::init_encoder({4}, 0), cclk::ConfigError);
  CHECK_THROWS_AS(cclk::init_encoder({4, 0, 2}, 0), cclk::ConfigError);
}

TEST_CASE("separate encoders get their own parameters") {
  const EncoderParams p = cclk::init_encoder({3, 5, 2}, 4, false);
  REQUIRE(p.y_layers.size() == 2);
  CHECK(p.y_layers[0].weight != p.x_layers[0].weight);
  CHECK(p.flatten().size() == 8);
}

TEST_CASE("forward examples") {
  EncoderParams p = cclk::init_encoder({2, 2}, 0);
  p.x_layers[0].weight = Matrix::identity(2);
  const Matrix out = cclk::embed(p, Matrix{{3, 4}});
  CHECK(out(0, 0) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(out(0, 1) == doctest::Approx(0.8).epsilon(1e-12));

  const Matrix zero = cclk::embed(cclk::init_encoder({3, 4, 2}, 1), Matrix(2, 3));
  CHECK(cclk::all_finite(zero));
  CHECK(zero == Matrix(2, 2));
}

TEST_CASE("forward rows have unit norm") {
  std::mt19937_64 rng(2);
  for (cclk::Activation act : {cclk::Activation::Tanh, cclk::Activation::Relu}) {
    const EncoderParams p = cclk::init_encoder({5, 16, 8}, 3, true, act);
    const Matrix out = cclk::embed(p, gaussian(50, 5, rng));
    for (std::size_t i = 0; i < out.rows(); ++i) {
      double n = 0.0;
      for (double v : out.row(i)) n += v * v;
      CHECK(std::abs(std::sqrt(n) - 1.0) <= 1e-9);
    }
  }
}

TEST_CASE("forward is deterministic and checks the input width") {
  std::mt19937_64 rng(5);
  const EncoderParams p = cclk::init_encoder({4, 6, 3}, 9);
  const Matrix x = gaussian(7, 4, rng);
  CHECK(cclk::embed(p, x) == cclk::embed(p, x));
  CHECK_THROWS_AS(cclk::embed(p, Matrix(2, 5)), cclk::ShapeError);
}

TEST_CASE("shared encoders reuse the same tape parameters") {
  ad::Tape tape;
  const auto shared = cclk::register_params(tape, cclk::init_encoder({3, 4, 2}, 0));
  REQUIRE(shared.x.size() == shared.y.size());
  for (std::size_t i = 0; i < shared.x.size(); ++i) CHECK(shared.x[i].id() == shared.y[i].id());

  const auto split = cclk::register_params(tape, cclk::init_encoder({3, 4, 2}, 0, false));
  CHECK(split.flat.size() == 8);
  CHECK(split.x[0].id() != split.y[0].id());
}

TEST_CASE("flatten and assign round-trip") {
  EncoderParams p = cclk::init_encoder({3, 4, 2}, 0, false);
  std::vector<Matrix> flat = p.flatten();
  for (Matrix& m : flat)
    for (double& v : m.data()) v += 1.0;
  p.assign(flat);
  CHECK(p.flatten() == flat);
  flat.pop_back();
  CHECK_THROWS_AS(p.assign(flat), cclk::ShapeError);
}

TEST_CASE("checkpoint round-trip is exact") {
  for (bool shared : {true, false}) {
    cclk::Checkpoint ck{cclk::init_encoder({3, 7, 5}, 21, shared, cclk::Activation::Relu), {{"loss.kind", "fair_cclk"}}};
    const cclk::Checkpoint back = cclk::checkpoint_from_json(cclk::checkpoint_to_json(ck));
    CHECK(back.params.sizes == ck.params.sizes);
    CHECK(back.params.shared == shared);
    CHECK(back.params.activation == cclk::Activation::Relu);
    CHECK(back.params.flatten() == ck.params.flatten());
    CHECK(back.metadata == ck.metadata);
    CHECK(cclk::checkpoint_to_json(back) == cclk::checkpoint_to_json(ck));
  }
}

TEST_CASE("malformed checkpoints raise ParseError") {
  CHECK_THROWS_AS(cclk::checkpoint_from_json("{not json"), cclk::ParseError);
  CHECK_THROWS_AS(cclk::checkpoint_from_json("{}"), cclk::ParseError);
  CHECK_THROWS_AS(cclk::checkpoint_from_json(R"({"format":"other"})"), cclk::ParseError);
  std::string text = cclk::checkpoint_to_json({cclk::init_encoder({2, 3}, 0), {}});
  const auto pos = text.find("\"sizes\"");
  REQUIRE(pos != std::string::npos);
  text.replace(text.find('3', pos), 1, "4");
  CHECK_THROWS_AS(cclk::checkpoint_from_json(text), cclk::ParseError);
  CHECK_THROWS_AS(cclk::load_checkpoint("/nonexistent/ck.json"), cclk::IoError);
}

TEST_CASE("activation names") {
  CHECK(cclk::parse_activation("relu") == cclk::Activation::Relu);
  CHECK(cclk::to_string(cclk::Activation::Tanh) == "tanh");
  CHECK_THROWS_AS(cclk::parse_activation("gelu"), cclk::ConfigError);
}

}  // TEST_SUITE
