#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <string>

#include "shadow/layout_io.hpp"
#include "shadow/streams.hpp"

namespace {

TEST(LayoutIo, RoundTripsBuiltInLayouts) {
  for (const auto& L : {shadow::build_rarity_tapster(0.123456789012345, -2.5),
                        shadow::build_mach_zehnder(1.0 / 3.0),
                        shadow::build_rarity_tapster(0.0, 0.0).with_extra_phase("b", 0.3)}) {
    auto text = shadow::serialize_layout(L);
    EXPECT_TRUE(shadow::parse_layout(text) == L);
    EXPECT_EQ(shadow::serialize_layout(shadow::parse_layout(text)), text);
  }
}

TEST(LayoutIo, SaveAndLoad) {
  auto dir = std::filesystem::temp_directory_path() / "shadow_layout_io_test";
  std::filesystem::create_directories(dir);
  auto file = (dir / "rt.json").string();
  auto L = shadow::build_rarity_tapster(0.5, 1.5);
  shadow::save_layout(L, file);
  EXPECT_TRUE(shadow::load_layout(file) == L);
  std::filesystem::remove_all(dir);
  EXPECT_THROW(shadow::load_layout(file), shadow::IoError);
  EXPECT_THROW(shadow::save_layout(L, "/nonexistent-dir/x.json"), shadow::IoError);
}

nlohmann::json base() { return shadow::layout_to_json(shadow::build_rarity_tapster(0.0, 0.0)); }

std::string validation_message(const nlohmann::json& doc) {
  try {
    shadow::layout_from_json(doc);
  } catch (const shadow::ValidationError& e) {
    return e.what();
  }
  return "";
}

TEST(LayoutIo, UnknownElementKindNamesTheField) {
  auto doc = base();
  doc["elements"][3]["type"] = "prism";
  auto msg = validation_message(doc);
  EXPECT_NE(msg.find("elements[3].type"), std::string::npos) << msg;
  EXPECT_NE(msg.find("prism"), std::string::npos) << msg;
}

TEST(LayoutIo, UnbalancedSplitterRejected) {
  auto doc = base();
  for (auto& e : doc["elements"]) {
    if (e["type"] == "beam_splitter") {
      e["split"] = 0.3;
      break;
    }
  }
  auto msg = validation_message(doc);
  EXPECT_NE(msg.find(".split"), std::string::npos) << msg;
}

TEST(LayoutIo, MissingFieldNamesThePath) {
  auto doc = base();
  doc["paths"][1]["route"][0].erase("element");
  auto msg = validation_message(doc);
  EXPECT_NE(msg.find("paths[1].route[0]"), std::string::npos) << msg;
  EXPECT_NE(msg.find("element"), std::string::npos) << msg;

  auto d2 = base();
  d2.erase("paths");
  EXPECT_NE(validation_message(d2).find("paths"), std::string::npos);

  auto d3 = base();
  d3["pairs"][0] = "a";
  EXPECT_NE(validation_message(d3).find("pairs[0]"), std::string::npos);
}

TEST(LayoutIo, StructuralErrorsAreValidationErrors) {
  auto doc = base();
  doc["paths"][0]["terminal"] = "u";
  EXPECT_THROW(shadow::layout_from_json(doc), shadow::ValidationError);
  auto d2 = base();
  d2["paths"][0]["route"][1]["element"] = "nowhere";
  EXPECT_THROW(shadow::layout_from_json(d2), shadow::ValidationError);
  EXPECT_THROW(shadow::layout_from_json(nlohmann::json::array()), shadow::ValidationError);
}

TEST(LayoutIo, SyntaxErrorReportsLine) {
  std::string text = shadow::serialize_layout(shadow::build_mach_zehnder(0.0));
  // Break the document on a known line: drop the colon after the 5th key.
  std::size_t line = 1, pos = 0;
  int colons = 0;
  for (; pos < text.size(); ++pos) {
    if (text[pos] == '\n') ++line;
    if (text[pos] == ':' && ++colons == 5) break;
  }
  ASSERT_LT(pos, text.size());
  text[pos] = ' ';
  try {
    shadow::parse_layout(text);
    FAIL() << "expected ParseError";
  } catch (const shadow::ParseError& e) {
    EXPECT_EQ(e.line(), line);
    EXPECT_NE(std::string(e.what()).find("line " + std::to_string(line)), std::string::npos);
  }
}

TEST(LayoutIo, PhaseOnBLoadsAndBreaksCongruence) {
  auto doc = base();
  doc["elements"].push_back({{"id", "delta"}, {"type", "phase_shifter"}, {"wing", "left"}, {"setting", 0.3}});
  for (auto& p : doc["paths"]) {
    if (p["label"] == "b") p["route"].push_back({{"element", "delta"}, {"port", "pass"}});
  }
  auto L = shadow::parse_layout(doc.dump());
  auto rep = shadow::verify_congruence_identities(L);
  EXPECT_FALSE(rep.passed);
  for (const auto& c : rep.identities) {
    EXPECT_NEAR(c.defect, std::abs(1.0 - std::polar(1.0, 0.3)) / std::sqrt(2.0), 1e-15);
  }
}

}  // namespace
