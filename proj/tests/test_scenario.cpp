#include <catch_amalgamated.hpp>

#include <functional>
#include <random>
#include <string>

#include "slicebench/scenario.hpp"

using namespace slicebench;
using Catch::Matchers::ContainsSubstring;

namespace {

std::string error_of(const std::string& text) {
  try {
    load_scenario(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

std::string mutate(const ScenarioConfig& s, const std::function<void(nlohmann::json&)>& edit) {
  nlohmann::json j = to_json(s);
  edit(j);
  return j.dump(2);
}

}  // namespace

TEST_CASE("canonical double slit geometry") {
  const auto s = canonical_double_slit();
  REQUIRE(s.size() == 2);
  CHECK(s.sources[0].position == Point3{10.0, 0.0, -800.0});
  CHECK(s.sources[1].position == Point3{-10.0, 0.0, -800.0});
  CHECK(s.sources[0].amplitude == 1e5);
  CHECK(s.input_plane_z == -720.0);
  CHECK(s.output_plane_z == 800.0);
  CHECK(s.slits[0].width_x == 4.0);
  CHECK(s.detectors[0].patch == PatchIndex{2, 0, -2});
  CHECK(s.detectors[1].patch == PatchIndex{-3, 0, -2});
  CHECK(s.barrier.reaches(0, 0));
  CHECK_FALSE(s.barrier.reaches(0, 1));
  CHECK_NOTHROW(s.validate());
}

TEST_CASE("canonical double slit is mirror symmetric") {
  const auto s = canonical_double_slit();
  auto mirror = [](Point3 p) { return Point3{-p.x, p.y, p.z}; };
  CHECK(mirror(s.sources[0].position) == s.sources[1].position);
  CHECK(mirror(s.slits[0].center) == s.slits[1].center);
  CHECK(mirror(s.detectors[0].aperture.center) == s.detectors[1].aperture.center);
  const Rect a = s.detectors[0].patch.rect(), b = s.detectors[1].patch.rect();
  CHECK(a.x0 == -b.x1);
  CHECK(a.x1 == -b.x0);
  CHECK(a.y0 == b.y0);
  CHECK(a.y1 == b.y1);
}

TEST_CASE("canonical triple slit geometry") {
  const auto s = canonical_triple_slit();
  REQUIRE(s.size() == 3);
  CHECK(s.sources[2].position == Point3{-30.0, 0.0, -800.0});
  CHECK(s.detectors[2].patch == PatchIndex{-8, 0, -2});
  CHECK(s.detectors[2].patch.rect().x0 == -32.0);
  CHECK_NOTHROW(s.validate());
}

TEST_CASE("serialized canonical scenarios load back unchanged") {
  for (const auto& s : {canonical_double_slit(), canonical_triple_slit()}) {
    const auto loaded = load_scenario(serialize_scenario(s));
    CHECK(loaded == s);
    CHECK(scenario_hash(loaded) == scenario_hash(s));
  }
}

TEST_CASE("round trip holds for randomized valid scenarios") {
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> jitter(-3.0, 3.0), phase(-3.0, 3.0), amp(0.5, 2e5);
  std::uniform_real_distribution<double> width(0.5, 8.0);
  for (int t = 0; t < 50; ++t) {
    ScenarioConfig s = t % 2 ? canonical_triple_slit() : canonical_double_slit();
    for (auto& src : s.sources) {
      src.position.x += jitter(rng);
      src.position.y += jitter(rng);
      src.position.z += jitter(rng);
      src.amplitude = amp(rng);
      src.phase = phase(rng);
      src.polarization = phase(rng);
    }
    for (auto& a : s.slits) {
      a.center.x += jitter(rng);
      a.width_x = width(rng);
      a.width_y = width(rng);
    }
    s.input_plane_z += jitter(rng);
    s.barrier.allowed[0].push_back(1);
    REQUIRE_NOTHROW(s.validate());
    const auto back = load_scenario(serialize_scenario(s));
    CHECK(back == s);
    CHECK(serialize_scenario(back) == serialize_scenario(s));
  }
}

TEST_CASE("scenario hash tracks content") {
  auto a = canonical_double_slit();
  auto b = a;
  CHECK(scenario_hash(a) == scenario_hash(b));
  b.sources[1].phase = 0.1;
  CHECK(scenario_hash(a) != scenario_hash(b));
}

TEST_CASE("validation errors name the violated invariant") {
  const auto s = canonical_double_slit();
  CHECK_THAT(error_of(mutate(s, [](auto& j) { j["slits"][0]["width_x"] = 0.0; })),
             ContainsSubstring("aperture width must be positive"));
  CHECK_THAT(error_of(mutate(s, [](auto& j) { j["planes"]["output_z"] = -1.0; })),
             ContainsSubstring("plane ordering"));
  CHECK_THAT(error_of(mutate(s, [](auto& j) { j["planes"]["input_z"] = -900.0; })),
             ContainsSubstring("plane ordering"));
  CHECK_THAT(error_of(mutate(s, [](auto& j) { j["barrier"][1] = nlohmann::json::array({5}); })),
             ContainsSubstring("barrier"));
  CHECK_THAT(error_of(mutate(s, [](auto& j) { j["detectors"][0]["patch"]["k"] = 3; })),
             ContainsSubstring("patch"));
  CHECK_THAT(error_of(mutate(s, [](auto& j) { j["sources"][0]["amplitude"] = 0.0; })),
             ContainsSubstring("amplitude must be positive"));
  CHECK_THAT(error_of(mutate(s, [](auto& j) { j["sources"].erase(1); })), ContainsSubstring("number of slits"));
}

TEST_CASE("malformed configs report line or field") {
  const std::string broken = "{\n  \"sources\": [\n    {\"position\": [1, 2, 3],,}\n  ]\n}\n";
  CHECK_THAT(error_of(broken), ContainsSubstring("line 3"));
  const auto s = canonical_double_slit();
  CHECK_THAT(error_of(mutate(s, [](auto& j) { j["sources"][0]["amplitude"] = "big"; })),
             ContainsSubstring("sources[0].amplitude: expected a number"));
  CHECK_THAT(error_of(mutate(s, [](auto& j) { j["detectors"][1]["patch"].erase("j0"); })),
             ContainsSubstring("detectors[1].patch.j0: missing field"));
  CHECK_THAT(error_of(mutate(s, [](auto& j) { j["slits"][0]["center"] = nlohmann::json::array({1, 2}); })),
             ContainsSubstring("slits[0].center"));
  CHECK_THAT(error_of(mutate(s, [](auto& j) { j.erase("planes"); })), ContainsSubstring("planes"));
}
