#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <regex>
#include <set>
#include <string>

#include "surfmimo/config.hpp"
#include "surfmimo/results.hpp"

using namespace surfmimo;

namespace {

const std::filesystem::path kScenarios = SURFMIMO_SCENARIO_DIR;

const char* kMinimal = R"(surface:
  width_m: 2.0
  height_m: 0.5
  material: spraypaint
nodes:
  - id: a
    role: transmitter
    contacts: [[0.1, 0.25]]
  - id: b
    role: receiver
    contacts: [[1.0, 0.25]]
)";

// Runs the parser and reports the issues it raised, or none.
std::vector<ConfigIssue> issues_of(const std::string& text) {
  try {
    parse_config(text, "test.yaml");
  } catch (const ConfigParseError& e) {
    return e.issues();
  }
  return {};
}

bool has_issue(const std::vector<ConfigIssue>& v, const std::string& needle, int line = 0) {
  for (const auto& i : v) {
    if (i.message.find(needle) != std::string::npos && (line == 0 || i.line == line)) return true;
  }
  return false;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("surfmimo_test_" + name);
}

ResultSet sample_results() {
  ResultMetadata meta;
  meta.kind = "sample";
  meta.config_hash = "0123456789abcdef";
  meta.seed = 42;
  meta.extra = {{"band", "2437/40"}, {"grid", "1024"}};
  ResultSet rs(meta, {{"index", ColumnType::integer}, {"value", ColumnType::real}, {"label", ColumnType::text}});
  rs.add_row({std::int64_t{-3}, 0.1, std::string("plain")});
  rs.add_row({std::int64_t{7}, 1.0 / 3.0, std::string("with, comma")});
  rs.add_row({std::int64_t{0}, -2.5e-300, std::string("quote \" and\nnewline")});
  return rs;
}

}  // namespace

TEST(ParseConfig, MinimalConfigGetsDefaults) {
  const auto cfg = parse_config(kMinimal);
  EXPECT_EQ(cfg.seed, kDefaultSeed);
  EXPECT_EQ(cfg.model.scene.nodes.size(), 2u);
  EXPECT_EQ(cfg.model.scene.surface.material.name(), "spraypaint");
  EXPECT_EQ(cfg.model.grid, kAutoGrid);
  EXPECT_EQ(cfg.subcarriers, 114);
  EXPECT_DOUBLE_EQ(cfg.band.center_hz(), 2.437e9);
  EXPECT_EQ(cfg.mcs_table_ref, kDefaultMcsTable);
  EXPECT_FALSE(cfg.mcs.rows().empty());
  EXPECT_GT(cfg.model.coupling.c1, 0.0);  // from the material preset
  EXPECT_EQ(cfg.sweep.distances_m.size(), 16u);
  EXPECT_NEAR(cfg.sweep.distances_m.back(), feet(16.0), 1e-12);
  EXPECT_FALSE(cfg.material_preset_version.empty());
}

TEST(ParseConfig, ShippedScenariosLoad) {
  for (const auto& e : std::filesystem::directory_iterator(kScenarios)) {
    if (e.path().extension() != ".yaml") continue;
    EXPECT_NO_THROW(load_config(e.path())) << e.path();
  }
}

TEST(ParseConfig, ContactOutsideSurfaceNamesNodeAndBound) {
  std::string text = kMinimal;
  text.replace(text.find("[[1.0, 0.25]]"), 13, "[[2.5, 0.25]]");
  const auto v = issues_of(text);
  ASSERT_FALSE(v.empty());
  EXPECT_TRUE(has_issue(v, "node 'b'"));
  EXPECT_TRUE(has_issue(v, "outside surface [0, 2] x [0, 0.5]"));
  EXPECT_GT(v.front().line, 0);
}

TEST(ParseConfig, DuplicateNodeId) {
  std::string text = kMinimal;
  text.replace(text.find("id: b"), 5, "id: a");
  EXPECT_TRUE(has_issue(issues_of(text), "duplicate node id"));
}

TEST(ParseConfig, UnknownKeyHasPosition) {
  std::string text = kMinimal;
  text += "analysis:\n  grid: 64\n  gird: 128\n";
  const auto v = issues_of(text);
  ASSERT_TRUE(has_issue(v, "gird", 14));
  for (const auto& i : v) {
    if (i.message.find("gird") != std::string::npos) {
      EXPECT_EQ(i.column, 3);
      EXPECT_NE(i.str().find("test.yaml:14:3"), std::string::npos);
    }
  }
}

TEST(ParseConfig, CollectsEveryError) {
  std::string text = kMinimal;
  text += "band:\n  center_hz: -5\n  bandwidth_hz: 40e6\nanalysis:\n  subcarriers: zero\n  mac_efficiency: 2\n";
  const auto v = issues_of(text);
  EXPECT_GE(v.size(), 3u);
}

TEST(ParseConfig, SyntaxErrorHasPosition) {
  const auto v = issues_of("surface: [1, 2\nnodes: {");
  ASSERT_FALSE(v.empty());
  EXPECT_GT(v.front().line, 0);
}

TEST(ParseConfig, EmptyAndNonMap) {
  EXPECT_THROW(parse_config(""), ConfigError);
  EXPECT_THROW(parse_config("- 1\n- 2\n"), ConfigError);
  EXPECT_THROW(parse_config("just a string"), ConfigError);
}

TEST(ParseConfig, UnknownMaterial) {
  std::string text = kMinimal;
  text.replace(text.find("spraypaint"), 10, "velvet");
  EXPECT_TRUE(has_issue(issues_of(text), "unknown material 'velvet'"));
}

TEST(ParseConfig, InlineMaterialAndConductor) {
  std::string text = kMinimal;
  text.replace(text.find("material: spraypaint"), 20,
               "material:\n    d0_m: 0.01\n    refl_coeff: 0.5\n    conductivity_s_per_m: 1.0e4\n"
               "    permeability_h_per_m: 1.25663706212e-6\n    frequencies_hz: [2.0e9, 3.0e9]");
  const auto cfg = parse_config(text);
  EXPECT_EQ(cfg.material_ref, "<inline>");
  EXPECT_NEAR(cfg.model.scene.surface.material.alpha(2e9), std::sqrt(kPi * 2e9 * 1.25663706212e-6 * 1e4), 1e-9);
}

TEST(ParseConfig, DistancesInFeetOrMetersNotBoth) {
  std::string text = kMinimal;
  EXPECT_NO_THROW(parse_config(text + "sweep:\n  distances_m: [0.5, 1.0]\n"));
  EXPECT_THROW(parse_config(text + "sweep:\n  distances_m: [0.5]\n  distances_ft: [1]\n"), ConfigError);
}

// Parsing never fails with anything but a ConfigError, whatever the input.
TEST(ParseConfig, TotalOnRandomBytes) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> byte(0, 255);
  std::uniform_int_distribution<int> len(0, 200);
  for (int k = 0; k < 1500; ++k) {
    std::string s(static_cast<std::size_t>(len(rng)), '\0');
    for (auto& c : s) c = static_cast<char>(byte(rng));
    try {
      parse_config(s);
    } catch (const ConfigError&) {
    }
  }
}

TEST(ParseConfig, TotalOnMutatedConfigs) {
  const std::string base = read_text_file(kScenarios / "sweep.yaml");
  std::mt19937_64 rng(123);
  std::uniform_int_distribution<std::size_t> pos(0, base.size() - 1);
  std::uniform_int_distribution<int> op(0, 3);
  const std::string alphabet = "-:[]{},#\n 0123456789.eE'\"abcxyz&*!|>";
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  int parsed = 0;
  for (int k = 0; k < 800; ++k) {
    std::string s = base;
    const int edits = 1 + k % 4;
    for (int e = 0; e < edits && !s.empty(); ++e) {
      const std::size_t p = pos(rng) % s.size();
      switch (op(rng)) {
        case 0: s.erase(p, 1); break;
        case 1: s.insert(p, 1, alphabet[pick(rng)]); break;
        case 2: s[p] = alphabet[pick(rng)]; break;
        default: s.erase(p, std::min<std::size_t>(10, s.size() - p)); break;
      }
    }
    try {
      parse_config(s);
      ++parsed;
    } catch (const ConfigError&) {
    }
  }
  EXPECT_GT(parsed, 0);
}

TEST(ConfigHash, StableAndSensitiveToEveryNumber) {
  const std::string base = read_text_file(kScenarios / "sweep.yaml");
  const std::string h0 = config_hash(parse_config(base));
  EXPECT_EQ(h0, config_hash(parse_config(base)));
  EXPECT_EQ(h0.size(), 16u);

  const std::regex number(R"([-+]?\d+(\.\d+)?([eE][-+]?\d+)?)");
  int perturbed = 0;
  for (auto it = std::sregex_iterator(base.begin(), base.end(), number); it != std::sregex_iterator(); ++it) {
    const auto m = *it;
    // skip numbers inside comments and identifiers such as "2x2" or "80211n"
    const auto line_start = base.rfind('\n', m.position()) + 1;
    if (base.find('#', line_start) < static_cast<std::size_t>(m.position())) continue;
    const char before = m.position() > 0 ? base[m.position() - 1] : ' ';
    const char after = base[m.position() + m.length()];
    if (std::isalpha(static_cast<unsigned char>(before)) || std::isalpha(static_cast<unsigned char>(after)) ||
        before == '_') {
      continue;
    }
    const double v = std::stod(m.str());
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v == 0.0 ? 1e-3 : v * (1.0 + 1e-6));
    std::string text = base;
    text.replace(m.position(), m.length(), buf);
    try {
      EXPECT_NE(config_hash(parse_config(text)), h0) << "changing " << m.str() << " at " << m.position();
      ++perturbed;
    } catch (const ConfigError&) {
      // some perturbations break validation (integer fields); those cannot run anyway
    }
  }
  EXPECT_GT(perturbed, 20);
}

TEST(ConfigHash, SeedAndPresetSelectionMatter) {
  const std::string base = kMinimal;
  const auto h = config_hash(parse_config(base));
  EXPECT_NE(config_hash(parse_config(base + "seed: 7\n")), h);
  EXPECT_NE(config_hash(parse_config(base + "analysis:\n  mcs_table: mcs_80211ac.yaml\n")), h);
}

TEST(Fnv1a, KnownVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(hash_hex(0xabcull), "0000000000000abc");
}

TEST(Presets, LoadByNameAndPath) {
  const auto [m, c] = load_material("cloth");
  EXPECT_EQ(m.name(), "cloth");
  ASSERT_TRUE(c.has_value());
  EXPECT_NO_THROW(load_material("materials.yaml#spraypaint"));
  EXPECT_THROW(load_material("nope.yaml#cloth"), ConfigError);
  EXPECT_THROW(load_mcs_table("missing_table.yaml"), ConfigError);
  EXPECT_NE(preset_version(preset_dir() / "materials.yaml"), "unknown");
}

TEST(Results, EmptySetIsHeaderOnly) {
  ResultMetadata meta;
  meta.kind = "empty";
  const ResultSet rs(meta, {{"a", ColumnType::real}, {"b", ColumnType::text}});
  const std::string text = to_csv(rs);
  EXPECT_EQ(text.substr(text.rfind("# types:")), "# types: real,text\na,b\n");
  const auto back = parse_results(text);
  EXPECT_TRUE(back.rows().empty());
  EXPECT_EQ(back, rs);
}

TEST(Results, WriteReadRoundTrip) {
  const auto rs = sample_results();
  const auto path = temp_path("roundtrip.csv");
  write_results(rs, path);
  EXPECT_EQ(read_results(path), rs);
  std::filesystem::remove(path);
}

TEST(Results, SerializationIsByteDeterministic) {
  EXPECT_EQ(to_csv(sample_results()), to_csv(sample_results()));
  const auto text = to_csv(sample_results());
  EXPECT_EQ(to_csv(parse_results(text)), text);
}

TEST(Results, RowTypeChecks) {
  ResultSet rs({}, {{"a", ColumnType::integer}});
  EXPECT_THROW(rs.add_row({1.5}), ModelError);
  EXPECT_THROW(rs.add_row({std::int64_t{1}, std::int64_t{2}}), ModelError);
}

TEST(Results, IoErrorsCarryPath) {
  try {
    write_results(sample_results(), "/nonexistent-dir/out.csv");
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent-dir/out.csv"), std::string::npos);
  }
  try {
    read_results("/nonexistent-dir/in.csv");
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent-dir/in.csv"), std::string::npos);
  }
}

TEST(Results, MalformedInput) {
  EXPECT_THROW(parse_results("# types: int\nx\nabc\n"), IoError);
  EXPECT_THROW(parse_results("# types: int,real\nx\n"), IoError);
  EXPECT_THROW(parse_results("# types: blob\nx\n"), IoError);
  EXPECT_THROW(parse_results(""), IoError);
  EXPECT_THROW(parse_results("a\n\"open\n"), IoError);
}
