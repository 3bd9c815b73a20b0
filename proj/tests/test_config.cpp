#include "usfwi/experiment.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

using namespace usfwi;

namespace {

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, PresetsRoundTrip) {
  for (const auto& name : preset_names()) {
    const ExperimentConfig c = preset(name);
    const Json j = to_json(c);
    EXPECT_EQ(to_json(config_from_json(j)), j) << name;
    EXPECT_EQ(config_hash(config_from_json(Json::parse(canonical_text(c)))), config_hash(c)) << name;
  }
}

TEST(Config, ShippedPresetFilesMatchBuiltins) {
  for (const auto& name : preset_names()) {
    std::ifstream in(std::string(USFWI_PRESET_DIR) + "/" + name + ".json");
    ASSERT_TRUE(in) << name;
    std::stringstream ss;
    ss << in.rdbuf();
    EXPECT_EQ(ss.str(), canonical_text(preset(name))) << name;
  }
}

TEST(Config, FullScalePresetShapes) {
  const ExperimentConfig c = preset("simple_cyst");
  const auto s = usfwi::Setup<2>::from(c);
  EXPECT_EQ(s.geom.num_transmits(), 60);
  EXPECT_EQ(s.geom.num_receivers(), 64);
  EXPECT_EQ(s.freqs.size(), 15u);
  EXPECT_GT(c.data_refinement, c.inversion_refinement);
  EXPECT_EQ(c.admm.outer_iters, 20);

  const auto s3 = usfwi::Setup<3>::from(preset("sphere_pair_3d"));
  EXPECT_EQ(s3.geom.num_transmits(), 64);
  EXPECT_EQ(s3.freqs.size(), 10u);
}

TEST(Config, ErrorsCarryFieldPaths) {
  Json j = to_json(preset("desk_simple_cyst"));
  j["admm"]["lamda"] = 1.0;
  EXPECT_NE(error_of([&] { config_from_json(j); }).find("admm.lamda: unknown field"), std::string::npos);

  j = to_json(preset("desk_simple_cyst"));
  j["noise"]["level"] = "high";
  EXPECT_NE(error_of([&] { config_from_json(j); }).find("noise.level: wrong type"), std::string::npos);

  j = to_json(preset("desk_simple_cyst"));
  j["scenario"]["inclusions"] = Json::array({Json{{"radius", 1e-3}, {"colour", 1}}});
  EXPECT_NE(error_of([&] { config_from_json(j); }).find("scenario.inclusions[0].colour"), std::string::npos);

  j = to_json(preset("desk_simple_cyst"));
  j["data_refinement"] = 0;
  EXPECT_NE(error_of([&] { config_from_json(j); }).find("data_refinement"), std::string::npos);
}

TEST(Config, RangeShorthand) {
  Json j = to_json(preset("desk_simple_cyst"));
  j["frequencies_hz"] = Json{{"min", 0.2e6}, {"max", 1.5e6}, {"count", 8}};
  j["array"]["angles_deg"] = Json{{"min", -60.0}, {"max", 60.0}, {"count", 11}};
  const ExperimentConfig c = config_from_json(j);
  EXPECT_EQ(config_hash(c), config_hash(preset("desk_simple_cyst")));
}

TEST(Config, BasicMethodForcesZeroLambda) {
  ExperimentConfig c = preset("desk_solid_cyst");
  c.method = "basic_fwi";
  c.admm.lambda = 1.0;
  EXPECT_EQ(*c.admm_config().lambda, 0.0);
  EXPECT_EQ(c.method_label(), "basic FWI");
}

TEST(Config, InverseCrimeGuard) {
  const ExperimentConfig c = preset("desk_simple_cyst");
  EXPECT_NO_THROW(check_inverse_crime(c, c.inversion_refinement + 1, false));
  EXPECT_THROW(check_inverse_crime(c, c.inversion_refinement, false), Error);
  EXPECT_NO_THROW(check_inverse_crime(c, c.inversion_refinement, true));
}
