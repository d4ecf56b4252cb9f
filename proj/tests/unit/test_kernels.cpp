#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "cclk/errors.hpp"
#include "cclk/kernels.hpp"

using cclk::KernelKind;
using cclk::KernelSpec;
using cclk::Matrix;

namespace {

Matrix gaussian(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(r, c);
  for (double& v : m.data()) v = g(rng);
  return m;
}

KernelSpec spec(KernelKind kind) {
  KernelSpec s;
  s.kind = kind;
  return s;
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("score_gram examples") {
  const cclk::ScoreConfig tau1{1.0};
  const Matrix u{{1, 0}, {0, 1}};
  const Matrix k = cclk::score_gram(u, u, tau1);
  CHECK(k(0, 0) == doctest::Approx(std::exp(1.0)).epsilon(1e-12));
  CHECK(k(1, 1) == doctest::Approx(2.718281828).epsilon(1e-9));
  CHECK(k(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
  const Matrix opposite = cclk::score_gram(Matrix{{1, 0}}, Matrix{{-1, 0}}, cclk::ScoreConfig{0.5});
  CHECK(opposite(0, 0) == doctest::Approx(0.135335283).epsilon(1e-8));
}

TEST_CASE("score_gram normalizes rows itself") {
  const Matrix a = cclk::score_gram(Matrix{{3, 4}}, Matrix{{6, 8}}, cclk::ScoreConfig{1.0});
  CHECK(a(0, 0) == doctest::Approx(std::exp(1.0)).epsilon(1e-12));
}

TEST_CASE("score_gram(u, u) has a strictly maximal diagonal for distinct unit rows") {
  std::mt19937_64 rng(2);
  const Matrix u = gaussian(10, 5, rng);
  const Matrix k = cclk::score_gram(u, u, cclk::ScoreConfig{});
  for (std::size_t i = 0; i < 10; ++i)
    for (std::size_t j = 0; j < 10; ++j)
      if (i != j) CHECK(k(i, i) > k(i, j));
}

TEST_CASE("score_gram rejects a non-positive temperature") {
  CHECK_THROWS_AS(cclk::score_gram(Matrix{{1}}, Matrix{{1}}, cclk::ScoreConfig{0.0}), cclk::ConfigError);
}

TEST_CASE("rbf examples") {
  KernelSpec s = spec(KernelKind::Rbf);
  s.sigma2 = 0.5;
  // distance² = 1 = 2σ²
  const Matrix k = cclk::z_gram(Matrix{{0.0}, {1.0}, {0.0}}, s);
  CHECK(k(0, 2) == 1.0);
  CHECK(k(0, 1) == doctest::Approx(0.367879441).epsilon(1e-9));
}

TEST_CASE("delta kernel equality pattern") {
  const Matrix k = cclk::z_gram(Matrix{{0}, {0}, {1}}, spec(KernelKind::Delta));
  CHECK(k == Matrix{{1, 1, 0}, {1, 1, 0}, {0, 0, 1}});
}

TEST_CASE("kernels match their closed forms entrywise") {
  std::mt19937_64 rng(9);
  const Matrix z = gaussian(7, 3, rng);
  auto at = [&](std::size_t i, std::size_t j, auto&& fn) {
    double acc = 0.0;
    for (std::size_t c = 0; c < 3; ++c) acc += fn(z(i, c), z(j, c));
    return acc;
  };
  KernelSpec lap = spec(KernelKind::Laplacian);
  lap.gamma = 0.7;
  KernelSpec poly = spec(KernelKind::Polynomial);
  poly.degree = 2;
  poly.coef = 0.5;
  const Matrix k_lap = cclk::z_gram(z, lap);
  const Matrix k_lin = cclk::z_gram(z, spec(KernelKind::Linear));
  const Matrix k_cos = cclk::z_gram(z, spec(KernelKind::Cosine));
  const Matrix k_poly = cclk::z_gram(z, poly);
  const Matrix k_rbf = cclk::z_gram(z, spec(KernelKind::Rbf));
  const double s2 = cclk::median_bandwidth(z);
  for (std::size_t i = 0; i < 7; ++i) {
    for (std::size_t j = 0; j < 7; ++j) {
      const double l1 = at(i, j, [](double a, double b) { return std::abs(a - b); });
      const double d2 = at(i, j, [](double a, double b) { return (a - b) * (a - b); });
      const double dot = at(i, j, [](double a, double b) { return a * b; });
      const double ni = std::sqrt(at(i, i, [](double a, double b) { return a * b; }));
      const double nj = std::sqrt(at(j, j, [](double a, double b) { return a * b; }));
      CHECK(k_lap(i, j) == doctest::Approx(std::exp(-0.7 * l1)).epsilon(1e-12));
      CHECK(k_lin(i, j) == doctest::Approx(dot).epsilon(1e-12));
      CHECK(k_poly(i, j) == doctest::Approx(std::pow(dot + 0.5, 2)).epsilon(1e-12));
      CHECK(k_rbf(i, j) == doctest::Approx(std::exp(-d2 / (2 * s2))).epsilon(1e-12));
      if (i == j) {
        CHECK(k_cos(i, j) == 1.0);
      } else {
        CHECK(k_cos(i, j) == doctest::Approx(dot / (ni * nj)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("every kernel Gram is symmetric") {
  std::mt19937_64 rng(4);
  const Matrix z = gaussian(9, 4, rng);
  for (KernelKind kind : {KernelKind::Rbf, KernelKind::Laplacian, KernelKind::Linear, KernelKind::Cosine,
                          KernelKind::Polynomial, KernelKind::Delta}) {
    const Matrix k = cclk::z_gram(z, spec(kind));
    for (std::size_t i = 0; i < 9; ++i)
      for (std::size_t j = 0; j < 9; ++j) CHECK(k(i, j) == k(j, i));
  }
}

TEST_CASE("cosine kernel survives a zero row") {
  const Matrix k = cclk::z_gram(Matrix{{0, 0}, {1, 0}}, spec(KernelKind::Cosine));
  CHECK(cclk::all_finite(k));
  CHECK(k(0, 0) == 1.0);
  CHECK(k(0, 1) == 0.0);
}

TEST_CASE("median_bandwidth examples") {
  CHECK(cclk::median_bandwidth(Matrix{{0, 0}, {2, 0}}) == 4.0);
  CHECK(cclk::median_bandwidth(Matrix{{1, 1}, {1, 1}, {1, 1}}) == 1.0);
  CHECK(cclk::median_bandwidth(Matrix{{0}, {1}, {3}}) == 4.0);
  // Even count of pairs: {1, 4, 9, 1, 4, 1} → sorted 1,1,1,4,4,9 → (1 + 4) / 2
  CHECK(cclk::median_bandwidth(Matrix{{0}, {1}, {2}, {3}}) == 2.5);
  CHECK_THROWS_AS(cclk::median_bandwidth(Matrix{{1}}), cclk::ContractError);
}

TEST_CASE("kernel spec validation") {
  KernelSpec s = spec(KernelKind::Rbf);
  s.sigma2 = -1.0;
  CHECK_THROWS_AS(s.validate(), cclk::ConfigError);
  KernelSpec lap = spec(KernelKind::Laplacian);
  lap.gamma = 0.0;
  CHECK_THROWS_AS(lap.validate(), cclk::ConfigError);
  KernelSpec poly = spec(KernelKind::Polynomial);
  poly.degree = 0;
  CHECK_THROWS_AS(poly.validate(), cclk::ConfigError);
  CHECK_THROWS_AS(cclk::parse_kernel_kind("gaussian"), cclk::ConfigError);
  for (KernelKind kind : {KernelKind::Rbf, KernelKind::Laplacian, KernelKind::Linear, KernelKind::Cosine,
                          KernelKind::Polynomial, KernelKind::Delta}) {
    CHECK(cclk::parse_kernel_kind(cclk::to_string(kind)) == kind);
  }
}

}  // TEST_SUITE
