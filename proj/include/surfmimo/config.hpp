#pragma once

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <initializer_list>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "surfmimo/channel.hpp"
#include "surfmimo/constants.hpp"
#include "surfmimo/error.hpp"
#include "surfmimo/experiments.hpp"
#include "surfmimo/geometry.hpp"
#include "surfmimo/mimo_analysis.hpp"
#include "surfmimo/propagation.hpp"

#ifndef SURFMIMO_PRESET_DIR
#define SURFMIMO_PRESET_DIR "presets"
#endif

namespace surfmimo {

inline constexpr std::uint64_t kDefaultSeed = 20131;
inline constexpr const char* kDefaultMaterialPresets = "materials.yaml";
inline constexpr const char* kDefaultMcsTable = "mcs_80211n.yaml";
inline constexpr const char* kDefaultAggregationMcsTable = "mcs_80211ac.yaml";

/// One problem found while reading a config. Line and column are 1-based;
/// 0 means the position is unknown.
struct ConfigIssue {
  std::string origin;
  int line = 0;
  int column = 0;
  std::string message;

  std::string str() const {
    std::ostringstream os;
    os << origin;
    if (line > 0) os << ':' << line << ':' << column;
    os << ": " << message;
    return os.str();
  }
};

class ConfigParseError : public ConfigError {
 public:
  explicit ConfigParseError(std::vector<ConfigIssue> issues) : ConfigError(join(issues)), issues_(std::move(issues)) {}
  const std::vector<ConfigIssue>& issues() const { return issues_; }

 private:
  static std::string join(const std::vector<ConfigIssue>& issues) {
    std::string s;
    for (const auto& i : issues) {
      if (!s.empty()) s += '\n';
      s += i.str();
    }
    return s;
  }
  std::vector<ConfigIssue> issues_;
};

inline std::filesystem::path preset_dir() { return SURFMIMO_PRESET_DIR; }

/// Relative preset paths are looked up next to the referring file first,
/// then in the installed preset directory.
inline std::filesystem::path resolve_preset_path(const std::string& ref, const std::filesystem::path& base_dir) {
  std::filesystem::path p(ref);
  if (p.is_absolute()) return p;
  std::vector<std::filesystem::path> tried;
  for (const auto& dir : {base_dir, preset_dir()}) {
    auto cand = dir / p;
    std::error_code ec;
    if (std::filesystem::is_regular_file(cand, ec)) return cand;
    tried.push_back(cand);
  }
  std::string msg = "preset '" + ref + "' not found (tried";
  for (const auto& t : tried) msg += " " + t.string();
  throw IoError(msg + ")");
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream os;
  os << in.rdbuf();
  if (in.bad()) throw IoError("error while reading '" + path.string() + "'");
  return os.str();
}

// ---------------------------------------------------------------------------
// Settings of the individual experiments.

struct SweepSettings {
  std::vector<double> distances_m;
  std::vector<LinkMode> modes{LinkMode::siso, LinkMode::air_mimo, LinkMode::surface_2x2, LinkMode::surface_3x3};
  std::vector<double> separations_m{0.01, 0.03, 0.06};
  LinkMode separation_mode = LinkMode::surface_2x2;
  std::vector<double> air_spacings_m{0.0625, 0.03, 0.015, 0.0075};
  int air_realizations = 8;
};

struct AggregationSettings {
  std::string plan = "scenario-1";
  bool no_dfs = false;
  std::vector<double> distances_m;
  int max_subcarriers = 16;
  std::string mcs_table_ref = kDefaultAggregationMcsTable;
  McsTable mcs;
};

struct PulseSettings {
  std::string tx_port = "tx:c0";
  std::string rx_port = "rx:c0";
  PulseOptions waveform;
  ImpulseOptions impulse;
};

struct SharingSettings {
  SharingConfig config;
  std::uint64_t slots = 100000;
};

struct RadiationSettings {
  RadiationProfile profile;
  std::vector<Vec3> positions;
  double tx_power_dbm = 0.0;
  double frequency_hz = 2.437e9;
};

/// Everything a run needs, fully resolved: presets are loaded and defaults
/// filled in.
struct ScenarioConfig {
  std::string origin = "<config>";
  std::string material_ref;
  std::string material_preset_version;
  ChannelModel model;
  FrequencyBand band{2.437e9, 40e6};
  int subcarriers = 114;
  LinkBudget budget;
  std::string mcs_table_ref = kDefaultMcsTable;
  McsTable mcs;
  LinkTemplate link;
  SweepSettings sweep;
  AggregationSettings aggregation;
  PulseSettings pulse;
  SharingSettings sharing;
  RadiationSettings radiation;
  std::uint64_t seed = kDefaultSeed;

  /// Link-experiment setup at the configured band, with the MCS rows of
  /// that band's width.
  ExperimentSetup experiment_setup() const {
    ExperimentSetup s{model};
    s.band = band;
    s.subcarriers = subcarriers;
    s.budget = budget;
    s.budget.bandwidth_hz = band.bandwidth_hz();
    s.mcs = mcs.for_bandwidth(band.bandwidth_hz());
    s.link = link;
    return s;
  }
};

namespace detail {

using KeyList = std::initializer_list<std::string_view>;

/// Schema walker that records every problem instead of stopping at the first.
class ConfigReader {
 public:
  ConfigReader(std::string origin, std::filesystem::path base_dir)
      : origin_(std::move(origin)), base_dir_(std::move(base_dir)) {}

  const std::string& origin() const { return origin_; }
  const std::filesystem::path& base_dir() const { return base_dir_; }
  std::vector<ConfigIssue>& issues() { return issues_; }

  void error(const YAML::Node& at, const std::string& msg) {
    int line = 0;
    int col = 0;
    if (at.IsDefined()) {
      const auto m = at.Mark();
      if (m.line >= 0) {
        line = m.line + 1;
        col = m.column + 1;
      }
    }
    issues_.push_back({origin_, line, col, msg});
  }

  bool expect_map(const YAML::Node& n, const std::string& what) {
    if (n.IsMap()) return true;
    error(n, what + " must be a mapping");
    return false;
  }

  bool expect_seq(const YAML::Node& n, const std::string& what) {
    if (n.IsSequence()) return true;
    error(n, what + " must be a list");
    return false;
  }

  void check_keys(const YAML::Node& map, KeyList allowed, const std::string& what) {
    std::set<std::string> seen;
    for (const auto& kv : map) {
      if (!kv.first.IsScalar()) {
        error(kv.first, what + ": keys must be plain strings");
        continue;
      }
      const auto key = kv.first.Scalar();
      bool ok = false;
      for (auto a : allowed) ok = ok || a == key;
      if (!ok) {
        std::string list;
        for (auto a : allowed) list += (list.empty() ? "" : ", ") + std::string(a);
        error(kv.first, what + ": unknown key '" + key + "' (allowed: " + list + ")");
      }
      if (!seen.insert(key).second) error(kv.first, what + ": duplicate key '" + key + "'");
    }
  }

  template <typename T>
  bool scalar(const YAML::Node& n, T& out, const std::string& what) {
    if (!n.IsScalar()) {
      error(n, what + " must be a scalar");
      return false;
    }
    try {
      T v = n.as<T>();
      if constexpr (std::is_floating_point_v<T>) {
        if (!std::isfinite(v)) {
          error(n, what + " must be finite");
          return false;
        }
      }
      out = v;
      return true;
    } catch (const YAML::Exception&) {
      error(n, what + ": cannot read '" + n.Scalar() + "' as " + type_name<T>());
      return false;
    }
  }

  /// Reads map[key] into `out` when present. `check` returns an error text
  /// for invalid values, or nullptr.
  template <typename T>
  bool get(const YAML::Node& map, const char* key, T& out, const std::string& what,
           std::function<const char*(const T&)> check = {}) {
    const YAML::Node n = map[key];
    if (!n) return false;
    T v{};
    if (!scalar(n, v, what + "." + key)) return false;
    if (check) {
      if (const char* msg = check(v)) {
        error(n, what + "." + key + " " + msg);
        return false;
      }
    }
    out = v;
    return true;
  }

  bool number_list(const YAML::Node& n, std::vector<double>& out, const std::string& what, std::size_t arity = 0) {
    if (!expect_seq(n, what)) return false;
    if (arity != 0 && n.size() != arity) {
      error(n, what + " must have exactly " + std::to_string(arity) + " numbers");
      return false;
    }
    std::vector<double> v;
    bool ok = true;
    for (std::size_t i = 0; i < n.size(); ++i) {
      double x = 0.0;
      ok = scalar(n[i], x, what + "[" + std::to_string(i) + "]") && ok;
      v.push_back(x);
    }
    if (ok) out = std::move(v);
    return ok;
  }

 private:
  template <typename T>
  static const char* type_name() {
    if constexpr (std::is_same_v<T, bool>) return "a boolean";
    else if constexpr (std::is_floating_point_v<T>) return "a number";
    else if constexpr (std::is_integral_v<T>) return "an integer";
    else return "a string";
  }

  std::string origin_;
  std::filesystem::path base_dir_;
  std::vector<ConfigIssue> issues_;
};

inline const char* positive(const double& v) { return v > 0.0 ? nullptr : "must be > 0"; }
inline const char* nonnegative(const double& v) { return v >= 0.0 ? nullptr : "must be >= 0"; }
inline const char* unit_interval(const double& v) { return v >= 0.0 && v <= 1.0 ? nullptr : "must lie in [0, 1]"; }
inline const char* positive_int(const int& v) { return v > 0 ? nullptr : "must be > 0"; }
inline const char* nonnegative_int(const int& v) { return v >= 0 ? nullptr : "must be >= 0"; }

inline YAML::Node load_yaml(const std::string& text, ConfigReader& r) {
  try {
    return YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    r.issues().push_back({r.origin(), e.mark.line + 1, e.mark.column + 1, "syntax error: " + e.msg});
  } catch (const std::exception& e) {
    r.issues().push_back({r.origin(), 0, 0, std::string("unreadable input: ") + e.what()});
  }
  return YAML::Node(YAML::NodeType::Undefined);
}

inline void throw_if_issues(std::vector<ConfigIssue> issues) {
  if (!issues.empty()) throw ConfigParseError(std::move(issues));
}

struct MaterialEntry {
  std::optional<MaterialParams> params;
  std::optional<CouplingConstants> coupling;
};

inline void read_coupling(ConfigReader& r, const YAML::Node& n, CouplingConstants& c, const std::string& what) {
  if (!r.expect_map(n, what)) return;
  r.check_keys(n, {"c1", "c2", "c3", "near_field", "near_field_radius_m"}, what);
  r.get<double>(n, "c1", c.c1, what, nonnegative);
  r.get<double>(n, "c2", c.c2, what, nonnegative);
  r.get<double>(n, "c3", c.c3, what, nonnegative);
  r.get<double>(n, "near_field", c.near_field_coupling, what, nonnegative);
  r.get<double>(n, "near_field_radius_m", c.near_field_radius_m, what, positive);
}

/// A material given either by its propagation table or by conductor
/// properties (good-conductor approximation).
inline MaterialEntry read_material(ConfigReader& r, const YAML::Node& n, const std::string& name,
                                   const std::string& what) {
  MaterialEntry out;
  if (!r.expect_map(n, what)) return out;
  r.check_keys(n,
               {"name", "description", "d0_m", "refl_coeff", "table", "conductivity_s_per_m", "permeability_h_per_m",
                "frequencies_hz", "coupling"},
               what);
  std::string label = name;
  r.get<std::string>(n, "name", label, what);
  double d0 = 0.0;
  double refl = 0.0;
  bool ok = true;
  if (!n["d0_m"]) {
    r.error(n, what + ": missing d0_m");
    ok = false;
  }
  if (!n["refl_coeff"]) {
    r.error(n, what + ": missing refl_coeff");
    ok = false;
  }
  ok = r.get<double>(n, "d0_m", d0, what, positive) && ok;
  ok = r.get<double>(n, "refl_coeff", refl, what, unit_interval) && ok;
  if (n["coupling"]) {
    CouplingConstants c;
    const auto before = r.issues().size();
    read_coupling(r, n["coupling"], c, what + ".coupling");
    if (r.issues().size() == before) out.coupling = c;
  }

  const bool has_table = static_cast<bool>(n["table"]);
  const bool has_conductor = static_cast<bool>(n["conductivity_s_per_m"]);
  if (has_table == has_conductor) {
    r.error(n, what + ": give exactly one of 'table' or 'conductivity_s_per_m'");
    return out;
  }
  try {
    if (has_table) {
      const YAML::Node t = n["table"];
      if (!r.expect_seq(t, what + ".table")) return out;
      std::vector<MaterialBandPoint> rows;
      for (std::size_t i = 0; i < t.size(); ++i) {
        const std::string w = what + ".table[" + std::to_string(i) + "]";
        if (!r.expect_map(t[i], w)) {
          ok = false;
          continue;
        }
        r.check_keys(t[i], {"frequency_hz", "alpha_np_per_m", "beta_rad_per_m"}, w);
        MaterialBandPoint p{};
        for (const char* k : {"frequency_hz", "alpha_np_per_m", "beta_rad_per_m"}) {
          if (!t[i][k]) {
            r.error(t[i], w + ": missing " + k);
            ok = false;
          }
        }
        ok = r.get<double>(t[i], "frequency_hz", p.frequency_hz, w, positive) && ok;
        ok = r.get<double>(t[i], "alpha_np_per_m", p.alpha_np_per_m, w, positive) && ok;
        ok = r.get<double>(t[i], "beta_rad_per_m", p.beta_rad_per_m, w, positive) && ok;
        rows.push_back(p);
      }
      if (ok) out.params = MaterialParams(label, std::move(rows), d0, refl);
    } else {
      double sigma = 0.0;
      double mu = kVacuumPermeability;
      std::vector<double> freqs;
      ok = r.get<double>(n, "conductivity_s_per_m", sigma, what, positive) && ok;
      r.get<double>(n, "permeability_h_per_m", mu, what, positive);
      if (!n["frequencies_hz"]) {
        r.error(n, what + ": conductor materials need frequencies_hz");
        ok = false;
      } else {
        ok = r.number_list(n["frequencies_hz"], freqs, what + ".frequencies_hz") && ok;
      }
      if (ok) out.params = MaterialParams::from_conductor(label, sigma, mu, freqs, d0, refl);
    }
  } catch (const Error& e) {
    r.error(n, what + ": " + e.what());
  }
  return out;
}

struct PresetFile {
  std::string version;
  std::map<std::string, YAML::Node> materials;
};

inline std::optional<PresetFile> read_material_presets(ConfigReader& r, const std::filesystem::path& path,
                                                       const YAML::Node& referrer) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const IoError& e) {
    r.error(referrer, e.what());
    return std::nullopt;
  }
  ConfigReader sub(path.string(), path.parent_path());
  const YAML::Node root = load_yaml(text, sub);
  PresetFile out;
  if (root.IsDefined() && sub.expect_map(root, "material presets")) {
    sub.check_keys(root, {"version", "materials"}, "material presets");
    sub.get<std::string>(root, "version", out.version, "material presets");
    const YAML::Node m = root["materials"];
    if (!m) {
      sub.error(root, "material presets: missing 'materials'");
    } else if (sub.expect_map(m, "materials")) {
      for (const auto& kv : m) out.materials.emplace(kv.first.Scalar(), kv.second);
    }
  }
  for (auto& i : sub.issues()) r.issues().push_back(std::move(i));
  return out;
}

struct ResolvedMaterial {
  MaterialEntry entry;
  std::string preset_version;
};

/// `ref` is a preset name, a preset file holding one material, or
/// "file.yaml#name".
inline std::optional<ResolvedMaterial> lookup_material(ConfigReader& r, const std::string& ref,
                                                       const std::string& presets_ref, const YAML::Node& mark) {
  std::string file = presets_ref;
  std::string name = ref;
  const auto hash = ref.find('#');
  const bool is_path = ref.find(".yaml") != std::string::npos || ref.find(".yml") != std::string::npos;
  if (hash != std::string::npos) {
    file = ref.substr(0, hash);
    name = ref.substr(hash + 1);
  } else if (is_path) {
    file = ref;
    name.clear();
  }
  std::optional<PresetFile> presets;
  try {
    presets = read_material_presets(r, resolve_preset_path(file, r.base_dir()), mark);
  } catch (const IoError& e) {
    r.error(mark, e.what());
  }
  if (!presets) return std::nullopt;
  if (name.empty() && presets->materials.size() == 1) name = presets->materials.begin()->first;
  auto it = presets->materials.find(name);
  if (it == presets->materials.end()) {
    std::string known;
    for (const auto& [k, v] : presets->materials) known += (known.empty() ? "" : ", ") + k;
    r.error(mark, "unknown material '" + name + "' (known: " + known + ")");
    return std::nullopt;
  }
  ConfigReader sub(file, r.base_dir());
  ResolvedMaterial out{read_material(sub, it->second, name, "materials." + name), presets->version};
  for (auto& i : sub.issues()) r.issues().push_back(i);
  if (!out.entry.params) return std::nullopt;
  return out;
}

/// MCS table file: a name and a list of rows.
inline McsTable read_mcs_table(ConfigReader& r, const std::string& ref, const YAML::Node& referrer) {
  std::filesystem::path path;
  std::string text;
  try {
    path = resolve_preset_path(ref, r.base_dir());
    text = read_text_file(path);
  } catch (const IoError& e) {
    r.error(referrer, e.what());
    return {};
  }
  ConfigReader sub(path.string(), path.parent_path());
  const YAML::Node root = load_yaml(text, sub);
  McsTable table;
  if (root.IsDefined() && sub.expect_map(root, "MCS table")) {
    sub.check_keys(root, {"version", "name", "rows"}, "MCS table");
    std::string name = path.stem().string();
    std::string version;
    sub.get<std::string>(root, "name", name, "MCS table");
    sub.get<std::string>(root, "version", version, "MCS table");
    const YAML::Node rows = root["rows"];
    std::vector<McsRow> out;
    bool ok = true;
    if (!rows) {
      sub.error(root, "MCS table: missing 'rows'");
      ok = false;
    } else if (sub.expect_seq(rows, "MCS table rows")) {
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::string w = "rows[" + std::to_string(i) + "]";
        const YAML::Node row = rows[i];
        if (!sub.expect_map(row, w)) {
          ok = false;
          continue;
        }
        sub.check_keys(row,
                       {"mcs", "modulation", "coding_rate", "bandwidth_hz", "guard_interval_ns", "phy_rate_bps",
                        "min_snr_db"},
                       w);
        for (const char* k : {"mcs", "bandwidth_hz", "phy_rate_bps", "min_snr_db"}) {
          if (!row[k]) {
            sub.error(row, w + ": missing " + k);
            ok = false;
          }
        }
        McsRow m;
        ok = sub.get<int>(row, "mcs", m.mcs_index, w, nonnegative_int) && ok;
        sub.get<std::string>(row, "modulation", m.modulation, w);
        sub.get<std::string>(row, "coding_rate", m.coding_rate, w);
        ok = sub.get<double>(row, "bandwidth_hz", m.bandwidth_hz, w, positive) && ok;
        sub.get<double>(row, "guard_interval_ns", m.guard_interval_ns, w, nonnegative);
        ok = sub.get<double>(row, "phy_rate_bps", m.phy_rate_bps, w, positive) && ok;
        ok = sub.get<double>(row, "min_snr_db", m.min_snr_db, w) && ok;
        out.push_back(m);
      }
    } else {
      ok = false;
    }
    if (ok && sub.issues().empty()) {
      try {
        table = McsTable(version.empty() ? name : name + " v" + version, std::move(out));
      } catch (const Error& e) {
        sub.error(rows, e.what());
      }
    }
  }
  for (auto& i : sub.issues()) r.issues().push_back(std::move(i));
  return table;
}

inline void read_distances(ConfigReader& r, const YAML::Node& n, std::vector<double>& out, const std::string& what) {
  const bool ft = static_cast<bool>(n["distances_ft"]);
  const bool m = static_cast<bool>(n["distances_m"]);
  if (ft && m) {
    r.error(n, what + ": give distances_ft or distances_m, not both");
    return;
  }
  std::vector<double> v;
  if (ft && r.number_list(n["distances_ft"], v, what + ".distances_ft")) {
    for (auto& d : v) d = feet(d);
    out = v;
  } else if (m && r.number_list(n["distances_m"], v, what + ".distances_m")) {
    out = v;
  }
  for (double d : out) {
    if (!(d > 0.0)) {
      r.error(n, what + ": distances must be > 0");
      break;
    }
  }
}

inline void read_modes(ConfigReader& r, const YAML::Node& n, std::vector<LinkMode>& out, const std::string& what) {
  if (!r.expect_seq(n, what)) return;
  std::vector<LinkMode> v;
  for (std::size_t i = 0; i < n.size(); ++i) {
    std::string s;
    if (!r.scalar(n[i], s, what)) return;
    try {
      v.push_back(parse_link_mode(s));
    } catch (const ConfigError& e) {
      r.error(n[i], e.what());
      return;
    }
  }
  out = v;
}

inline MaterialParams placeholder_material() {
  return MaterialParams("placeholder", {{1e9, 1.0, 1e3}}, 0.01, 0.0);
}

inline std::vector<double> feet_range(int from, int to) {
  std::vector<double> v;
  for (int k = from; k <= to; ++k) v.push_back(feet(k));
  return v;
}

}  // namespace detail

/// Parses a scenario config. Relative preset paths resolve against
/// `base_dir`. Throws ConfigParseError listing every problem found, each with
/// its position.
inline ScenarioConfig parse_config(const std::string& text, const std::string& origin = "<config>",
                                   const std::filesystem::path& base_dir = ".") {
  using namespace detail;
  ConfigReader r(origin, base_dir);
  const YAML::Node root = load_yaml(text, r);
  throw_if_issues(r.issues());
  if (!root.IsDefined() || root.IsNull()) {
    throw ConfigParseError({{origin, 0, 0, "empty config"}});
  }
  if (!r.expect_map(root, "config")) throw_if_issues(r.issues());
  r.check_keys(root,
               {"seed", "presets", "surface", "nodes", "obstacles", "band", "analysis", "air", "noise", "coupling",
                "air_multipath", "link", "sweep", "aggregation", "pulse", "sharing", "radiation"},
               "config");

  // The placeholder scene is replaced below; parsing only succeeds once a
  // real surface and material have been read.
  ScenarioConfig cfg{.model = ChannelModel{Scene{SurfaceSpec{1.0, 1.0, detail::placeholder_material()}, {}, {}}}};
  cfg.origin = origin;
  r.get<std::uint64_t>(root, "seed", cfg.seed, "seed");

  // Material presets.
  std::string presets_ref = kDefaultMaterialPresets;
  if (const YAML::Node p = root["presets"]; p && r.expect_map(p, "presets")) {
    r.check_keys(p, {"materials"}, "presets");
    r.get<std::string>(p, "materials", presets_ref, "presets");
  }

  // Surface.
  std::optional<MaterialParams> material;
  std::optional<CouplingConstants> material_coupling;
  double width = 0.0;
  double height = 0.0;
  const YAML::Node surface = root["surface"];
  if (!surface) {
    r.error(root, "missing 'surface' section");
  } else if (r.expect_map(surface, "surface")) {
    r.check_keys(surface, {"width_m", "height_m", "material"}, "surface");
    for (const char* k : {"width_m", "height_m", "material"}) {
      if (!surface[k]) r.error(surface, std::string("surface: missing ") + k);
    }
    r.get<double>(surface, "width_m", width, "surface", positive);
    r.get<double>(surface, "height_m", height, "surface", positive);
    const YAML::Node mat = surface["material"];
    if (mat && mat.IsMap()) {
      cfg.material_ref = "<inline>";
      auto e = read_material(r, mat, "custom", "surface.material");
      material = e.params;
      material_coupling = e.coupling;
    } else if (mat) {
      std::string ref;
      if (r.scalar(mat, ref, "surface.material")) {
        cfg.material_ref = ref;
        if (auto found = lookup_material(r, ref, presets_ref, mat)) {
          cfg.material_preset_version = found->preset_version;
          material = found->entry.params;
          material_coupling = found->entry.coupling;
        }
      }
    }
  }

  // Nodes.
  std::vector<Node> nodes;
  std::vector<YAML::Node> node_marks;
  const YAML::Node nodes_n = root["nodes"];
  if (!nodes_n) {
    r.error(root, "missing 'nodes' section");
  } else if (r.expect_seq(nodes_n, "nodes")) {
    for (std::size_t i = 0; i < nodes_n.size(); ++i) {
      const YAML::Node n = nodes_n[i];
      const std::string w = "nodes[" + std::to_string(i) + "]";
      node_marks.push_back(n);
      Node node;
      if (!r.expect_map(n, w)) continue;
      r.check_keys(n, {"id", "role", "contacts", "antennas"}, w);
      r.get<std::string>(n, "id", node.id, w);
      std::string role;
      if (!n["role"]) {
        r.error(n, w + ": missing role");
      } else if (r.get<std::string>(n, "role", role, w)) {
        if (role == "transmitter" || role == "tx") node.role = Role::transmitter;
        else if (role == "receiver" || role == "rx") node.role = Role::receiver;
        else r.error(n["role"], w + ".role must be 'transmitter' or 'receiver'");
      }
      if (const YAML::Node c = n["contacts"]; c && r.expect_seq(c, w + ".contacts")) {
        for (std::size_t k = 0; k < c.size(); ++k) {
          std::vector<double> xy;
          if (r.number_list(c[k], xy, w + ".contacts[" + std::to_string(k) + "]", 2)) node.contacts.push_back({xy[0], xy[1]});
        }
      }
      if (const YAML::Node a = n["antennas"]; a && r.expect_seq(a, w + ".antennas")) {
        for (std::size_t k = 0; k < a.size(); ++k) {
          std::vector<double> xyz;
          if (r.number_list(a[k], xyz, w + ".antennas[" + std::to_string(k) + "]", 3)) {
            node.antennas.push_back({xyz[0], xyz[1], xyz[2]});
          }
        }
      }
      nodes.push_back(std::move(node));
    }
  }

  // Obstacles.
  std::vector<Obstacle> obstacles;
  std::vector<YAML::Node> obstacle_marks;
  if (const YAML::Node obs = root["obstacles"]; obs && r.expect_seq(obs, "obstacles")) {
    for (std::size_t i = 0; i < obs.size(); ++i) {
      const YAML::Node o = obs[i];
      const std::string w = "obstacles[" + std::to_string(i) + "]";
      obstacle_marks.push_back(o);
      if (!r.expect_map(o, w)) continue;
      r.check_keys(o, {"kind", "footprint", "perturbation_db"}, w);
      Obstacle ob;
      std::string kind = "metal";
      if (r.get<std::string>(o, "kind", kind, w)) {
        if (kind == "metal") ob.kind = ObstacleKind::metal;
        else if (kind == "plastic") ob.kind = ObstacleKind::plastic;
        else if (kind == "wood") ob.kind = ObstacleKind::wood;
        else r.error(o["kind"], w + ".kind must be metal, plastic or wood");
      }
      std::vector<double> fp;
      if (!o["footprint"]) {
        r.error(o, w + ": missing footprint");
      } else if (r.number_list(o["footprint"], fp, w + ".footprint", 4)) {
        ob.footprint = {fp[0], fp[1], fp[2], fp[3]};
      }
      r.get<double>(o, "perturbation_db", ob.perturbation_db, w);
      obstacles.push_back(ob);
    }
  }

  // Band.
  if (const YAML::Node b = root["band"]; b && r.expect_map(b, "band")) {
    r.check_keys(b, {"center_hz", "bandwidth_hz"}, "band");
    double fc = cfg.band.center_hz();
    double bw = cfg.band.bandwidth_hz();
    r.get<double>(b, "center_hz", fc, "band");
    r.get<double>(b, "bandwidth_hz", bw, "band");
    try {
      cfg.band = FrequencyBand(fc, bw);
    } catch (const Error& e) {
      r.error(b, std::string("band: ") + e.what());
    }
  }

  // Analysis parameters.
  ChannelModel& model = cfg.model;
  YAML::Node mcs_mark;
  mcs_mark.reset(root);
  if (const YAML::Node a = root["analysis"]; a && r.expect_map(a, "analysis")) {
    r.check_keys(a,
                 {"grid", "subcarriers", "max_reflection_order", "tx_power_dbm", "mcs_table", "mac_efficiency",
                  "esm_beta", "extra_loss_db", "surface_paths", "air_paths"},
                 "analysis");
    if (const YAML::Node g = a["grid"]) {
      if (g.IsScalar() && g.Scalar() == "auto") {
        model.grid = kAutoGrid;
      } else {
        r.get<int>(a, "grid", model.grid, "analysis",
                   [](const int& v) -> const char* { return v == 0 || v >= 2 ? nullptr : "must be 'auto', 0 or >= 2"; });
      }
    }
    r.get<int>(a, "subcarriers", cfg.subcarriers, "analysis", positive_int);
    r.get<int>(a, "max_reflection_order", model.max_reflection_order, "analysis", nonnegative_int);
    r.get<double>(a, "tx_power_dbm", cfg.budget.tx_power_dbm, "analysis");
    if (a["mcs_table"]) mcs_mark.reset(a["mcs_table"]);
    r.get<std::string>(a, "mcs_table", cfg.mcs_table_ref, "analysis");
    r.get<double>(a, "mac_efficiency", cfg.budget.mac_efficiency, "analysis",
                  [](const double& v) -> const char* { return v > 0.0 && v <= 1.0 ? nullptr : "must lie in (0, 1]"; });
    r.get<double>(a, "esm_beta", cfg.budget.esm_beta, "analysis", positive);
    r.get<double>(a, "extra_loss_db", cfg.budget.extra_loss_db, "analysis", nonnegative);
    r.get<bool>(a, "surface_paths", model.surface_paths, "analysis");
    r.get<bool>(a, "air_paths", model.air_paths, "analysis");
  }
  if (const YAML::Node a = root["air"]; a && r.expect_map(a, "air")) {
    r.check_keys(a, {"d0_m", "exponent"}, "air");
    r.get<double>(a, "d0_m", model.air.d0_m, "air", positive);
    r.get<double>(a, "exponent", model.air.exponent, "air", positive);
  }
  if (const YAML::Node n = root["noise"]; n && r.expect_map(n, "noise")) {
    r.check_keys(n, {"floor_dbm_per_hz", "noise_figure_db"}, "noise");
    r.get<double>(n, "floor_dbm_per_hz", cfg.budget.noise.noise_floor_dbm_per_hz, "noise");
    r.get<double>(n, "noise_figure_db", cfg.budget.noise.noise_figure_db, "noise", nonnegative);
  }
  if (material_coupling) model.coupling = *material_coupling;
  if (const YAML::Node c = root["coupling"]) read_coupling(r, c, model.coupling, "coupling");
  if (const YAML::Node m = root["air_multipath"]; m && r.expect_map(m, "air_multipath")) {
    r.check_keys(m, {"enabled", "k_factor_db"}, "air_multipath");
    r.get<bool>(m, "enabled", model.air_multipath.enabled, "air_multipath");
    r.get<double>(m, "k_factor_db", model.air_multipath.k_factor_db, "air_multipath");
  }
  model.air_multipath.seed = cfg.seed;

  // Link template.
  if (const YAML::Node l = root["link"]; l && r.expect_map(l, "link")) {
    r.check_keys(l,
                 {"tx_origin", "antenna_height_m", "separation_m", "siso_antenna_offset_m", "second_contact_offset_m",
                  "air_antenna_spacing_m"},
                 "link");
    std::vector<double> o;
    if (l["tx_origin"] && r.number_list(l["tx_origin"], o, "link.tx_origin", 2)) cfg.link.tx_origin = {o[0], o[1]};
    r.get<double>(l, "antenna_height_m", cfg.link.antenna_height_m, "link", nonnegative);
    r.get<double>(l, "separation_m", cfg.link.separation_m, "link", nonnegative);
    r.get<double>(l, "siso_antenna_offset_m", cfg.link.siso_antenna_offset_m, "link", nonnegative);
    r.get<double>(l, "second_contact_offset_m", cfg.link.second_contact_offset_m, "link", positive);
    r.get<double>(l, "air_antenna_spacing_m", cfg.link.air_antenna_spacing_m, "link", positive);
  }

  // Experiments.
  cfg.sweep.distances_m = detail::feet_range(1, 16);
  if (const YAML::Node s = root["sweep"]; s && r.expect_map(s, "sweep")) {
    r.check_keys(s,
                 {"distances_ft", "distances_m", "modes", "separations_m", "separation_mode", "air_spacings_m",
                  "air_realizations"},
                 "sweep");
    read_distances(r, s, cfg.sweep.distances_m, "sweep");
    if (s["modes"]) read_modes(r, s["modes"], cfg.sweep.modes, "sweep.modes");
    if (s["separations_m"]) r.number_list(s["separations_m"], cfg.sweep.separations_m, "sweep.separations_m");
    std::string sm;
    if (r.get<std::string>(s, "separation_mode", sm, "sweep")) {
      try {
        cfg.sweep.separation_mode = parse_link_mode(sm);
      } catch (const ConfigError& e) {
        r.error(s["separation_mode"], e.what());
      }
    }
    if (s["air_spacings_m"]) r.number_list(s["air_spacings_m"], cfg.sweep.air_spacings_m, "sweep.air_spacings_m");
    r.get<int>(s, "air_realizations", cfg.sweep.air_realizations, "sweep", positive_int);
  }

  cfg.aggregation.distances_m = detail::feet_range(1, 9);
  YAML::Node agg_mcs_mark = root;
  if (const YAML::Node g = root["aggregation"]; g && r.expect_map(g, "aggregation")) {
    r.check_keys(g, {"plan", "no_dfs", "distances_ft", "distances_m", "max_subcarriers", "mcs_table"}, "aggregation");
    if (r.get<std::string>(g, "plan", cfg.aggregation.plan, "aggregation")) {
      if (cfg.aggregation.plan != "scenario-1" && cfg.aggregation.plan != "scenario-2") {
        r.error(g["plan"], "aggregation.plan must be scenario-1 or scenario-2");
      }
    }
    r.get<bool>(g, "no_dfs", cfg.aggregation.no_dfs, "aggregation");
    read_distances(r, g, cfg.aggregation.distances_m, "aggregation");
    r.get<int>(g, "max_subcarriers", cfg.aggregation.max_subcarriers, "aggregation", positive_int);
    if (g["mcs_table"]) agg_mcs_mark.reset(g["mcs_table"]);
    r.get<std::string>(g, "mcs_table", cfg.aggregation.mcs_table_ref, "aggregation");
  }

  if (const YAML::Node p = root["pulse"]; p && r.expect_map(p, "pulse")) {
    r.check_keys(p,
                 {"tx_port", "rx_port", "width_s", "sample_rate_hz", "tail_s", "center_hz", "bandwidth_hz",
                  "integral_grid"},
                 "pulse");
    auto& ps = cfg.pulse;
    r.get<std::string>(p, "tx_port", ps.tx_port, "pulse");
    r.get<std::string>(p, "rx_port", ps.rx_port, "pulse");
    r.get<double>(p, "width_s", ps.waveform.width_s, "pulse", positive);
    r.get<double>(p, "sample_rate_hz", ps.waveform.sample_rate_hz, "pulse", [](const double& v) -> const char* {
      return v >= 1e9 ? nullptr : "must be at least 1e9 (1 Gsps)";
    });
    r.get<double>(p, "tail_s", ps.waveform.tail_s, "pulse", nonnegative);
    r.get<double>(p, "center_hz", ps.impulse.center_hz, "pulse", positive);
    r.get<double>(p, "bandwidth_hz", ps.impulse.bandwidth_hz, "pulse", positive);
    r.get<int>(p, "integral_grid", ps.impulse.integral_grid, "pulse",
               [](const int& v) -> const char* { return v >= 2 ? nullptr : "must be >= 2"; });
  }

  if (const YAML::Node s = root["sharing"]; s && r.expect_map(s, "sharing")) {
    r.check_keys(s, {"ambient_busy_fraction", "slots", "pairs"}, "sharing");
    auto& sc = cfg.sharing;
    r.get<double>(s, "ambient_busy_fraction", sc.config.ambient_busy_fraction, "sharing", unit_interval);
    r.get<std::uint64_t>(s, "slots", sc.slots, "sharing",
                         [](const std::uint64_t& v) -> const char* { return v > 0 ? nullptr : "must be > 0"; });
    if (const YAML::Node pairs = s["pairs"]; pairs && r.expect_seq(pairs, "sharing.pairs")) {
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        const std::string w = "sharing.pairs[" + std::to_string(i) + "]";
        if (!r.expect_map(pairs[i], w)) continue;
        r.check_keys(pairs[i], {"id", "channel", "solo_rate_bps"}, w);
        SharingPair pr;
        pr.id = "pair" + std::to_string(i);
        r.get<std::string>(pairs[i], "id", pr.id, w);
        r.get<int>(pairs[i], "channel", pr.channel, w);
        if (!pairs[i]["solo_rate_bps"]) r.error(pairs[i], w + ": missing solo_rate_bps");
        r.get<double>(pairs[i], "solo_rate_bps", pr.solo_rate_bps, w, nonnegative);
        sc.config.pairs.push_back(pr);
      }
    }
  }

  for (double x : {0.5, 1.0, 2.0, 4.0}) {
    cfg.radiation.positions.push_back({0.0, 0.0, x});
    cfg.radiation.positions.push_back({0.0, 0.0, -x});
  }
  if (const YAML::Node s = root["radiation"]; s && r.expect_map(s, "radiation")) {
    r.check_keys(s, {"front_offset_db", "back_offset_db", "positions", "tx_power_dbm", "frequency_hz"}, "radiation");
    auto& rs = cfg.radiation;
    r.get<double>(s, "front_offset_db", rs.profile.front_offset_db, "radiation", nonnegative);
    r.get<double>(s, "back_offset_db", rs.profile.back_offset_db, "radiation", nonnegative);
    r.get<double>(s, "tx_power_dbm", rs.tx_power_dbm, "radiation");
    r.get<double>(s, "frequency_hz", rs.frequency_hz, "radiation", positive);
    if (const YAML::Node p = s["positions"]; p && r.expect_seq(p, "radiation.positions")) {
      std::vector<Vec3> pos;
      for (std::size_t i = 0; i < p.size(); ++i) {
        std::vector<double> v;
        if (r.number_list(p[i], v, "radiation.positions[" + std::to_string(i) + "]", 3)) pos.push_back({v[0], v[1], v[2]});
      }
      rs.positions = pos;
    }
  }

  // Presets referenced by path.
  cfg.mcs = read_mcs_table(r, cfg.mcs_table_ref, mcs_mark);
  cfg.aggregation.mcs = read_mcs_table(r, cfg.aggregation.mcs_table_ref, agg_mcs_mark);

  // Scene-level validation, reported at the offending node.
  if (material && width > 0.0 && height > 0.0) {
    model.scene = Scene{SurfaceSpec{width, height, *material}, nodes, obstacles};
    for (const auto& msg : validate_scene(model.scene)) {
      YAML::Node at;
      at.reset(nodes_n ? nodes_n : root);
      if (msg.rfind("node '", 0) == 0) {
        const auto end = msg.find('\'', 6);
        const auto id = msg.substr(6, end - 6);
        for (std::size_t i = 0; i < nodes.size(); ++i) {
          if (nodes[i].id == id) {
            at.reset(node_marks[i]);
            break;
          }
        }
      } else if (msg.rfind("node #", 0) == 0) {
        const auto k = static_cast<std::size_t>(std::stoul(msg.substr(6)));
        if (k < node_marks.size()) at.reset(node_marks[k]);
      } else if (msg.rfind("obstacle ", 0) == 0) {
        const auto k = static_cast<std::size_t>(std::stoul(msg.substr(9)));
        if (k < obstacle_marks.size()) at.reset(obstacle_marks[k]);
      } else if (msg.rfind("surface", 0) == 0) {
        at.reset(surface);
      }
      r.error(at, msg);
    }
    try {
      model.coupling.validate();
    } catch (const Error& e) {
      r.error(root["coupling"] ? root["coupling"] : root, e.what());
    }
  }
  if (r.issues().empty() && root["sharing"]) {
    try {
      cfg.sharing.config.validate();
    } catch (const Error& e) {
      r.error(root["sharing"], e.what());
    }
  }
  throw_if_issues(r.issues());
  return cfg;
}

inline ScenarioConfig load_config(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  auto dir = path.parent_path();
  if (dir.empty()) dir = ".";
  return parse_config(text, path.string(), dir);
}

/// Loads one MCS table file outside a scenario config.
inline McsTable load_mcs_table(const std::string& ref, const std::filesystem::path& base_dir = ".") {
  detail::ConfigReader r(ref, base_dir);
  McsTable t = detail::read_mcs_table(r, ref, YAML::Node());
  detail::throw_if_issues(r.issues());
  return t;
}

/// Material by preset name or file, as accepted by `surface.material`.
inline std::pair<MaterialParams, std::optional<CouplingConstants>> load_material(
    const std::string& ref, const std::filesystem::path& base_dir = ".") {
  detail::ConfigReader r(ref, base_dir);
  auto found = detail::lookup_material(r, ref, kDefaultMaterialPresets, YAML::Node());
  detail::throw_if_issues(r.issues());
  if (!found) throw ConfigParseError({{ref, 0, 0, "material not found"}});
  return {*found->entry.params, found->entry.coupling};
}

/// The `version` field of a preset file, or "unknown".
inline std::string preset_version(const std::filesystem::path& path) {
  try {
    const YAML::Node root = YAML::LoadFile(path.string());
    if (root.IsMap() && root["version"] && root["version"].IsScalar()) return root["version"].Scalar();
  } catch (const std::exception&) {
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Canonical form and hash.

namespace detail {

class Canon {
 public:
  void put(const std::string& key, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os_ << key << '=' << buf << '\n';
  }
  void put(const std::string& key, const std::string& v) { os_ << key << "=\"" << v << "\"\n"; }
  void put(const std::string& key, const char* v) { put(key, std::string(v)); }
  void put(const std::string& key, std::uint64_t v) { os_ << key << '=' << v << '\n'; }
  void put(const std::string& key, int v) { os_ << key << '=' << v << '\n'; }
  void put(const std::string& key, bool v) { os_ << key << '=' << (v ? "true" : "false") << '\n'; }
  void put(const std::string& key, Vec2 v) {
    put(key + ".x", v.x);
    put(key + ".y", v.y);
  }
  void put(const std::string& key, Vec3 v) {
    put(key + ".x", v.x);
    put(key + ".y", v.y);
    put(key + ".z", v.z);
  }
  std::string str() const { return os_.str(); }

 private:
  std::ostringstream os_;
};

inline void canon_mcs(Canon& c, const std::string& p, const McsTable& t) {
  c.put(p + ".name", t.name());
  for (std::size_t i = 0; i < t.rows().size(); ++i) {
    const auto& r = t.rows()[i];
    const auto k = p + "[" + std::to_string(i) + "]";
    c.put(k + ".mcs", r.mcs_index);
    c.put(k + ".bandwidth_hz", r.bandwidth_hz);
    c.put(k + ".phy_rate_bps", r.phy_rate_bps);
    c.put(k + ".min_snr_db", r.min_snr_db);
  }
}

}  // namespace detail

/// Every resolved input that can affect a result, one `key=value` per line
/// with doubles in round-trip precision.
inline std::string canonical_text(const ScenarioConfig& cfg) {
  detail::Canon c;
  const auto& m = cfg.model;
  const auto& s = m.scene.surface;
  c.put("seed", cfg.seed);
  c.put("surface.width_m", s.width_m);
  c.put("surface.height_m", s.height_m);
  c.put("material.name", s.material.name());
  c.put("material.d0_m", s.material.d0());
  c.put("material.refl_coeff", s.material.refl_coeff());
  for (std::size_t i = 0; i < s.material.table().size(); ++i) {
    const auto& p = s.material.table()[i];
    const auto k = "material.table[" + std::to_string(i) + "]";
    c.put(k + ".frequency_hz", p.frequency_hz);
    c.put(k + ".alpha", p.alpha_np_per_m);
    c.put(k + ".beta", p.beta_rad_per_m);
  }
  for (std::size_t i = 0; i < m.scene.nodes.size(); ++i) {
    const auto& n = m.scene.nodes[i];
    const auto k = "node[" + std::to_string(i) + "]";
    c.put(k + ".id", n.id);
    c.put(k + ".role", n.role == Role::transmitter ? "transmitter" : "receiver");
    for (std::size_t j = 0; j < n.contacts.size(); ++j) c.put(k + ".contact[" + std::to_string(j) + "]", n.contacts[j]);
    for (std::size_t j = 0; j < n.antennas.size(); ++j) c.put(k + ".antenna[" + std::to_string(j) + "]", n.antennas[j]);
  }
  for (std::size_t i = 0; i < m.scene.obstacles.size(); ++i) {
    const auto& o = m.scene.obstacles[i];
    const auto k = "obstacle[" + std::to_string(i) + "]";
    c.put(k + ".kind", static_cast<int>(o.kind));
    c.put(k + ".footprint", Vec2{o.footprint.x0, o.footprint.y0});
    c.put(k + ".footprint1", Vec2{o.footprint.x1, o.footprint.y1});
    c.put(k + ".perturbation_db", o.perturbation_db);
  }
  c.put("band.center_hz", cfg.band.center_hz());
  c.put("band.bandwidth_hz", cfg.band.bandwidth_hz());
  c.put("grid", m.grid);
  c.put("subcarriers", cfg.subcarriers);
  c.put("max_reflection_order", m.max_reflection_order);
  c.put("surface_paths", m.surface_paths);
  c.put("air_paths", m.air_paths);
  c.put("air.d0_m", m.air.d0_m);
  c.put("air.exponent", m.air.exponent);
  c.put("coupling.c1", m.coupling.c1);
  c.put("coupling.c2", m.coupling.c2);
  c.put("coupling.c3", m.coupling.c3);
  c.put("coupling.near_field", m.coupling.near_field_coupling);
  c.put("coupling.near_field_radius_m", m.coupling.near_field_radius_m);
  c.put("air_multipath.enabled", m.air_multipath.enabled);
  c.put("air_multipath.k_factor_db", m.air_multipath.k_factor_db);
  c.put("air_multipath.seed", m.air_multipath.seed);
  c.put("budget.tx_power_dbm", cfg.budget.tx_power_dbm);
  c.put("budget.noise_floor", cfg.budget.noise.noise_floor_dbm_per_hz);
  c.put("budget.noise_figure", cfg.budget.noise.noise_figure_db);
  c.put("budget.esm_beta", cfg.budget.esm_beta);
  c.put("budget.mac_efficiency", cfg.budget.mac_efficiency);
  c.put("budget.extra_loss_db", cfg.budget.extra_loss_db);
  detail::canon_mcs(c, "mcs", cfg.mcs);
  const auto& l = cfg.link;
  c.put("link.tx_origin", l.tx_origin);
  c.put("link.antenna_height_m", l.antenna_height_m);
  c.put("link.separation_m", l.separation_m);
  c.put("link.siso_antenna_offset_m", l.siso_antenna_offset_m);
  c.put("link.second_contact_offset_m", l.second_contact_offset_m);
  c.put("link.air_antenna_spacing_m", l.air_antenna_spacing_m);
  for (std::size_t i = 0; i < cfg.sweep.distances_m.size(); ++i) {
    c.put("sweep.distance[" + std::to_string(i) + "]", cfg.sweep.distances_m[i]);
  }
  for (std::size_t i = 0; i < cfg.sweep.modes.size(); ++i) {
    c.put("sweep.mode[" + std::to_string(i) + "]", to_string(cfg.sweep.modes[i]));
  }
  for (std::size_t i = 0; i < cfg.sweep.separations_m.size(); ++i) {
    c.put("sweep.separation[" + std::to_string(i) + "]", cfg.sweep.separations_m[i]);
  }
  c.put("sweep.separation_mode", to_string(cfg.sweep.separation_mode));
  for (std::size_t i = 0; i < cfg.sweep.air_spacings_m.size(); ++i) {
    c.put("sweep.air_spacing[" + std::to_string(i) + "]", cfg.sweep.air_spacings_m[i]);
  }
  c.put("sweep.air_realizations", cfg.sweep.air_realizations);
  const auto& g = cfg.aggregation;
  c.put("aggregation.plan", g.plan);
  c.put("aggregation.no_dfs", g.no_dfs);
  c.put("aggregation.max_subcarriers", g.max_subcarriers);
  for (std::size_t i = 0; i < g.distances_m.size(); ++i) {
    c.put("aggregation.distance[" + std::to_string(i) + "]", g.distances_m[i]);
  }
  detail::canon_mcs(c, "aggregation.mcs", g.mcs);
  const auto& p = cfg.pulse;
  c.put("pulse.tx_port", p.tx_port);
  c.put("pulse.rx_port", p.rx_port);
  c.put("pulse.width_s", p.waveform.width_s);
  c.put("pulse.sample_rate_hz", p.waveform.sample_rate_hz);
  c.put("pulse.tail_s", p.waveform.tail_s);
  c.put("pulse.center_hz", p.impulse.center_hz);
  c.put("pulse.bandwidth_hz", p.impulse.bandwidth_hz);
  c.put("pulse.integral_grid", p.impulse.integral_grid);
  const auto& sh = cfg.sharing;
  c.put("sharing.ambient_busy_fraction", sh.config.ambient_busy_fraction);
  c.put("sharing.slots", sh.slots);
  for (std::size_t i = 0; i < sh.config.pairs.size(); ++i) {
    const auto k = "sharing.pair[" + std::to_string(i) + "]";
    c.put(k + ".id", sh.config.pairs[i].id);
    c.put(k + ".channel", sh.config.pairs[i].channel);
    c.put(k + ".solo_rate_bps", sh.config.pairs[i].solo_rate_bps);
  }
  const auto& rd = cfg.radiation;
  c.put("radiation.front_offset_db", rd.profile.front_offset_db);
  c.put("radiation.back_offset_db", rd.profile.back_offset_db);
  c.put("radiation.tx_power_dbm", rd.tx_power_dbm);
  c.put("radiation.frequency_hz", rd.frequency_hz);
  for (std::size_t i = 0; i < rd.positions.size(); ++i) {
    c.put("radiation.position[" + std::to_string(i) + "]", rd.positions[i]);
  }
  return c.str();
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string config_hash(const ScenarioConfig& cfg) { return hash_hex(fnv1a64(canonical_text(cfg))); }

}  // namespace surfmimo
