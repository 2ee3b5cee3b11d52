// Copyright 2026 The cavsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <string>

#include "cavsim/config.hpp"

namespace cavsim {
namespace {

std::string error_of(const std::string& text)
{
  try {
    parse_scenario(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(Config, SeedOnlyGetsEveryDefaultAndRoundTrips)
{
  const auto c = parse_scenario(R"({"seed": 5})");
  EXPECT_EQ(c.seed, 5u);
  EXPECT_EQ(c.geometry.approach_length, 300.0);
  EXPECT_EQ(c.geometry.rescheduling_length, 219.0);
  EXPECT_EQ(c.ts, 0.05);
  EXPECT_EQ(c.trust.p[0], 1000.0);
  EXPECT_EQ(c.scheme, Scheme::Fifo);
  const auto text = to_json(c);
  const auto again = parse_scenario(text);
  EXPECT_EQ(to_json(again), text);
}

TEST(Config, FullFileRoundTrips)
{
  const auto c = load_scenario(std::string(CAVSIM_SCENARIO_DIR) + "/fig1_mitigation.json");
  EXPECT_TRUE(c.mitigation);
  EXPECT_EQ(c.attacker.model, AttackerModel::Strategic);
  EXPECT_EQ(c.arrivals.explicit_arrivals.size(), 6u);
  EXPECT_EQ(to_json(parse_scenario(to_json(c))), to_json(c));
}

TEST(Config, ReferenceParameterBlockIsAccepted)
{
  const auto c = load_scenario(std::string(CAVSIM_SCENARIO_DIR) + "/reference_params.json");
  EXPECT_NEAR(c.geometry.half_width * 2.0, std::sqrt(30.0), 1e-12);
  EXPECT_NEAR(c.reschedule_margin(), 30.0 * 30.0 / (2.0 * 5.886) + 3.78, 1e-9);
  EXPECT_EQ(c.gains.phi, 1.8);
  EXPECT_EQ(c.coordinator.safe_delta, 3.78);
}

TEST(Config, ShortReschedulingMarginIsRejectedWithTheBound)
{
  const auto msg = error_of(R"({"geometry": {"rescheduling_length": 280},
                                "scheduling": {"scheme": "trust"}})");
  EXPECT_NE(msg.find("geometry.rescheduling_length"), std::string::npos) << msg;
  EXPECT_NE(msg.find("80.23"), std::string::npos) << msg;
  // Mitigation reorders too, so it needs the same margin.
  EXPECT_FALSE(error_of(R"({"geometry": {"rescheduling_length": 280},
                            "scheduling": {"mitigation": true}})")
                   .empty());
  // Plain FIFO never reorders.
  EXPECT_TRUE(error_of(R"({"geometry": {"rescheduling_length": 280}})").empty());
}

TEST(Config, ErrorsNameTheField)
{
  EXPECT_NE(error_of(R"({"geometry": {"foo": 1}})").find("geometry.foo"), std::string::npos);
  EXPECT_NE(error_of(R"({"dynamics": {"ts": "x"}})").find("dynamics.ts"), std::string::npos);
  EXPECT_NE(error_of(R"({"dynamics": {"ts": -1}})").find("ts"), std::string::npos);
  EXPECT_NE(error_of(R"({"scheduling": {"scheme": "random"}})").find("scheduling.scheme"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"trust": {"r": [1, 2]}})").find("trust.r"), std::string::npos);
  EXPECT_NE(error_of(R"({"arrivals": {"explicit": [{"lane": 2, "movement": "left"}]}})")
                .find("arrivals.explicit[0].movement"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"bogus": 1})").find("bogus"), std::string::npos);
  EXPECT_FALSE(error_of("{not json").empty());
}

TEST(Config, AreaSetsTheHalfWidth)
{
  const auto c = parse_scenario(R"({"geometry": {"area": 900}})");
  EXPECT_DOUBLE_EQ(c.geometry.half_width, 15.0);
}

TEST(Config, SchemeNames)
{
  EXPECT_EQ(scheme_from_string("trust_aware"), Scheme::Trust);
  EXPECT_EQ(scheme_from_string("lane_priority"), Scheme::Lane);
  EXPECT_EQ(scheme_from_string("both"), Scheme::Both);
  EXPECT_THROW(scheme_from_string("x"), ConfigError);
}

TEST(Config, MissingFileIsAConfigError)
{
  EXPECT_THROW(load_scenario("/nonexistent/scenario.json"), ConfigError);
}

}  // namespace
}  // namespace cavsim
