#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "adprompt/mmse_proxy.hpp"

using namespace adprompt;

// Oracle decimals below were computed by inverting the anchor conditions with
// 30-digit arithmetic: T = 4/ln(p/(1-p)) and sigma evaluated independently.

TEST_CASE("derived temperatures match the closed-form inverses", "[mmse_proxy]") {
  auto params = derive_temperatures();
  CHECK(params.t_ad == Catch::Approx(9.86521384950573).epsilon(1e-12));
  CHECK(params.t_hc == Catch::Approx(1.82047845325367).epsilon(1e-12));
  CHECK(params.t_ad == Catch::Approx(4.0 / std::log(1.5)).margin(1e-12));
  CHECK(params.t_hc == Catch::Approx(4.0 / std::log(9.0)).margin(1e-12));
  // the anchors themselves round-trip
  CHECK(std::abs(sigmoid(4.0 / params.t_ad) - 0.60) < 1e-12);
  CHECK(std::abs(sigmoid(4.0 / params.t_hc) - 0.90) < 1e-12);
}

TEST_CASE("proxy probability anchor values", "[mmse_proxy]") {
  CHECK(std::abs(proxy_probability(ClassLabel::AD, 26) - 0.60) < 1e-12);
  CHECK(std::abs(proxy_probability(ClassLabel::HC, 26) - 0.40) < 1e-12);
  CHECK(proxy_probability(ClassLabel::AD, 30) == Catch::Approx(0.5).margin(1e-15));
  CHECK(proxy_probability(ClassLabel::HC, 30) == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("proxy probability spot values against the high-precision oracle", "[mmse_proxy]") {
  CHECK(proxy_probability(ClassLabel::AD, 0) ==
        Catch::Approx(0.954391867762967).margin(1e-12));
  // impaired HC sits just under the decision threshold, not near zero
  CHECK(proxy_probability(ClassLabel::HC, 10) ==
        Catch::Approx(0.499983065198984).margin(1e-12));
  CHECK(proxy_probability(ClassLabel::HC, 20) ==
        Catch::Approx(0.495901639344262).margin(1e-12));
  CHECK(proxy_probability(ClassLabel::AD, 14) ==
        Catch::Approx(0.835051546391753).margin(1e-12));
}

TEST_CASE("proxy probability is strictly decreasing in MMSE", "[mmse_proxy]") {
  for (const auto label : {ClassLabel::AD, ClassLabel::HC}) {
    for (int m = 0; m < 30; ++m) {
      INFO(to_string(label) << " m=" << m);
      CHECK(proxy_probability(label, m) > proxy_probability(label, m + 1));
    }
  }
}

TEST_CASE("AD dominates HC at every score and ranges hold", "[mmse_proxy]") {
  for (int m = 0; m <= 30; ++m) {
    const double ad = proxy_probability(ClassLabel::AD, m);
    const double hc = proxy_probability(ClassLabel::HC, m);
    INFO("m=" << m);
    CHECK(ad > hc);
    CHECK(ad >= 0.5);
    CHECK(ad < 1.0);
    CHECK(hc >= 0.0);
    CHECK(hc < 0.5);
  }
}

TEST_CASE("proxy probability is deterministic", "[mmse_proxy]") {
  for (int m = 0; m <= 30; ++m) {
    CHECK(proxy_probability(ClassLabel::AD, m) == proxy_probability(ClassLabel::AD, m));
    CHECK(proxy_probability(ClassLabel::HC, m) == proxy_probability(ClassLabel::HC, m));
  }
}

TEST_CASE("MMSE bands partition 0..30 as published", "[mmse_proxy]") {
  CHECK(mmse_band(30) == MmseBand::NoImpairment);
  CHECK(mmse_band(29) == MmseBand::Questionable);
  CHECK(mmse_band(26) == MmseBand::Questionable);
  CHECK(mmse_band(25) == MmseBand::Mild);
  CHECK(mmse_band(21) == MmseBand::Mild);
  CHECK(mmse_band(20) == MmseBand::Moderate);
  CHECK(mmse_band(11) == MmseBand::Moderate);
  CHECK(mmse_band(10) == MmseBand::Severe);
  CHECK(mmse_band(0) == MmseBand::Severe);
  for (int m = 0; m <= 30; ++m) {
    const MmseBand expected = m == 30   ? MmseBand::NoImpairment
                              : m >= 26 ? MmseBand::Questionable
                              : m >= 21 ? MmseBand::Mild
                              : m >= 11 ? MmseBand::Moderate
                                        : MmseBand::Severe;
    CHECK(mmse_band(m) == expected);
  }
}

TEST_CASE("out-of-range MMSE scores are domain errors", "[mmse_proxy]") {
  CHECK_THROWS_AS(proxy_probability(ClassLabel::AD, -1), DomainError);
  CHECK_THROWS_AS(proxy_probability(ClassLabel::HC, 31), DomainError);
  CHECK_THROWS_AS(mmse_band(-1), DomainError);
  CHECK_THROWS_AS(mmse_band(31), DomainError);
}

TEST_CASE("two-decimal rendering never crosses the 0.50 boundary", "[mmse_proxy]") {
  CHECK(format_proxy_probability(proxy_probability(ClassLabel::AD, 26), ClassLabel::AD) ==
        "0.60");
  CHECK(format_proxy_probability(proxy_probability(ClassLabel::HC, 26), ClassLabel::HC) ==
        "0.40");
  CHECK(format_proxy_probability(proxy_probability(ClassLabel::AD, 30), ClassLabel::AD) ==
        "0.50");
  CHECK(format_proxy_probability(proxy_probability(ClassLabel::HC, 30), ClassLabel::HC) ==
        "0.00");
  // 0.4959… would round to "0.50"; the clamp keeps HC strictly below 0.5
  CHECK(format_proxy_probability(proxy_probability(ClassLabel::HC, 20), ClassLabel::HC) ==
        "0.49");
  for (int m = 0; m <= 30; ++m) {
    CHECK(std::stod(format_proxy_probability(proxy_probability(ClassLabel::HC, m),
                                             ClassLabel::HC)) < 0.5);
    CHECK(std::stod(format_proxy_probability(proxy_probability(ClassLabel::AD, m),
                                             ClassLabel::AD)) >= 0.5);
  }
}
