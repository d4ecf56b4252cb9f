#include <doctest.h>

#include <algorithm>

#include "cclk/verify.hpp"

TEST_SUITE("verify") {

TEST_CASE("every property passes on a correct build") {
  const auto results = cclk::run_verification();
  CHECK(results.size() >= 10);
  for (const auto& r : results) {
    CAPTURE(r.name);
    CAPTURE(r.detail);
    CHECK(r.passed);
    CHECK(r.measured <= r.tolerance);
  }
}

TEST_CASE("a sign flip in W breaks the operator identity") {
  cclk::VerifyOptions opt;
  opt.flip_w_sign = true;
  const auto results = cclk::run_verification(opt);
  const auto it = std::find_if(results.begin(), results.end(),
                               [](const cclk::PropertyResult& r) { return r.name == "operator_identity"; });
  REQUIRE(it != results.end());
  CHECK_FALSE(it->passed);
}

TEST_CASE("lambda = 0 reductions report their measured deviation") {
  for (const auto& r : cclk::run_verification()) {
    if (r.name.rfind("lambda0_", 0) != 0) continue;
    CHECK(r.tolerance > 0.0);
    CHECK(r.detail.find("measured") != std::string::npos);
  }
}

}  // TEST_SUITE
