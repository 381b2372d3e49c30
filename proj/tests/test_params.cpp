#include "qrepeater/params.hpp"

#include <gtest/gtest.h>

#include <stdexcept>

namespace qrepeater {
namespace {

TEST(RepeaterParamsTest, defaults_are_valid_and_derive_correctly) {
  const RepeaterParams p = validate(RepeaterParams{});
  EXPECT_DOUBLE_EQ(p.beta2(), 0.8);
  EXPECT_DOUBLE_EQ(p.eta(), 0.81);
  EXPECT_EQ(p.link_count(), 16);
  EXPECT_DOUBLE_EQ(p.link_km(), 62.5);
  EXPECT_NEAR(p.eta_t(), 0.2416042, 1e-6);
  EXPECT_DOUBLE_EQ(p.herald_s(), 3.125e-4);
}

TEST(RepeaterParamsTest, link_halving_is_exact_in_binary) {
  RepeaterParams p;
  p.L_km = 1000.0;
  p.n = 3;
  EXPECT_DOUBLE_EQ(p.link_km(), 125.0);
  p.n = 0;
  EXPECT_DOUBLE_EQ(p.link_km(), 1000.0);
}

TEST(RepeaterParamsTest, rejects_out_of_range_fields) {
  auto expect_reject = [](auto mutate, const std::string& field) {
    RepeaterParams p;
    mutate(p);
    try {
      validate(p);
      FAIL() << "expected rejection for " << field;
    } catch (const std::invalid_argument& e) {
      EXPECT_NE(std::string(e.what()).find(field), std::string::npos)
          << "message should name " << field << ", got: " << e.what();
    }
  };
  expect_reject([](RepeaterParams& p) { p.alpha2 = 0.0; }, "alpha2");
  expect_reject([](RepeaterParams& p) { p.alpha2 = 1.0; }, "alpha2");
  expect_reject([](RepeaterParams& p) { p.alpha2 = -0.1; }, "alpha2");
  expect_reject([](RepeaterParams& p) { p.eta_m = 1.5; }, "eta_m");
  expect_reject([](RepeaterParams& p) { p.eta_d = -0.1; }, "eta_d");
  expect_reject([](RepeaterParams& p) { p.p = 0.0; }, "p");
  expect_reject([](RepeaterParams& p) { p.p = 1.0; }, "p");
  expect_reject([](RepeaterParams& p) { p.r_hz = 0.0; }, "r_hz");
  expect_reject([](RepeaterParams& p) { p.L_km = 0.0; }, "L_km");
  expect_reject([](RepeaterParams& p) { p.L_km = -5.0; }, "L_km");
  expect_reject([](RepeaterParams& p) { p.n = -1; }, "n");
  expect_reject([](RepeaterParams& p) { p.n = 31; }, "n");
  expect_reject([](RepeaterParams& p) { p.L_att_km = 0.0; }, "L_att_km");
  expect_reject([](RepeaterParams& p) { p.c_fiber_mps = 0.0; }, "c_fiber_mps");
  expect_reject([](RepeaterParams& p) { p.L_km = std::nan(""); }, "L_km");
}

TEST(RepeaterParamsTest, rejects_alpha2_eta_product_near_one) {
  RepeaterParams p;
  p.alpha2 = 0.999;
  p.eta_m = 1.0;
  p.eta_d = 1.0;
  EXPECT_THROW(validate(p), std::invalid_argument);
  p.alpha2 = 0.99;
  EXPECT_NO_THROW(validate(p));
}

TEST(RepeaterParamsTest, zero_efficiency_is_constructible) {
  // eta = 0 only becomes an error once a rate is requested from it.
  RepeaterParams p;
  p.eta_m = 0.0;
  EXPECT_NO_THROW(validate(p));
}

TEST(StateWeightsTest, normalized_factory_scales_and_rejects) {
  const StateWeights w = StateWeights::normalized(2.0, 0.25, 1.0);
  EXPECT_DOUBLE_EQ(w.sum(), 1.0);
  EXPECT_DOUBLE_EQ(w.c2, 0.5);
  EXPECT_DOUBLE_EQ(w.c1, 0.0625);
  EXPECT_DOUBLE_EQ(w.c0, 0.25);
  EXPECT_FALSE(w.source_derived);
  EXPECT_THROW(StateWeights::normalized(-1.0, 0.0, 0.0), std::invalid_argument);
  EXPECT_THROW(StateWeights::normalized(0.0, 0.0, 0.0), std::invalid_argument);
}

TEST(StateWeightsTest, check_enforces_normalization_and_stationarity) {
  StateWeights w{0.5, 0.0625, 0.25, false};
  EXPECT_NO_THROW(check(w));
  w.c0 = 0.3;
  EXPECT_THROW(check(w), std::invalid_argument);

  // (0.5, 0.0625, 0.25) is normalized but not stationary:
  // c0 c2 = 0.125 while 4 c1^2 = 0.015625.  Without the source-derived flag
  // that is acceptable; with it, check must reject.
  const StateWeights flagged{0.5, 0.0625, 0.25, true};
  EXPECT_NEAR(flagged.stationarity_error(), 0.109375, 1e-12);
  EXPECT_THROW(check(flagged), std::invalid_argument);
}

TEST(StateWeightsTest, stationary_decomposition_passes_flagged_check) {
  // c2 = 4/9, c1 = 1/9, c0 = 1/9: sum = 4/9 + 4/9 + 1/9 = 1 and
  // c0 c2 = 4/81 = 4 c1^2.
  const StateWeights w{4.0 / 9.0, 1.0 / 9.0, 1.0 / 9.0, true};
  EXPECT_NO_THROW(check(w));
}

}  // namespace
}  // namespace qrepeater
