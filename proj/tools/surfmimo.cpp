// surfmimo: command-line front end for the surface MIMO simulator.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "surfmimo/surfmimo.hpp"

namespace fs = std::filesystem;
using namespace surfmimo;

namespace {

struct Common {
  std::string scene;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string plot;
};

void add_common(CLI::App* app, Common& c, bool needs_scene = true) {
  auto* s = app->add_option("--scene", c.scene, "Scenario config (YAML)");
  if (needs_scene) s->required();
  s->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "Override the config seed");
  app->add_option("--out", c.out, "Output CSV (default: stdout)");
  app->add_option("--plot", c.plot, "Also write a matplotlib script plotting the output");
}

ScenarioConfig load(const Common& c) {
  ScenarioConfig cfg = load_config(c.scene);
  if (c.seed) {
    cfg.seed = *c.seed;
    cfg.model.air_multipath.seed = *c.seed;
  }
  return cfg;
}

ResultMetadata metadata(const std::string& kind, const ScenarioConfig& cfg) {
  ResultMetadata m;
  m.kind = kind;
  m.config_hash = config_hash(cfg);
  m.seed = cfg.seed;
  m.extra.emplace_back("scene", cfg.origin);
  m.extra.emplace_back("material", cfg.model.scene.surface.material.name());
  if (!cfg.material_preset_version.empty()) m.extra.emplace_back("material_presets", cfg.material_preset_version);
  return m;
}

void emit(const ResultSet& rs, const Common& c) {
  if (c.out.empty()) {
    std::cout << to_csv(rs);
  } else {
    write_results(rs, c.out);
  }
}

void write_plot(const Common& c, const std::string& body) {
  if (c.plot.empty()) return;
  if (c.out.empty()) throw ConfigError("--plot needs --out so the script has a CSV to read");
  std::ofstream f(c.plot);
  if (!f) throw IoError("cannot open '" + c.plot + "' for writing");
  f << "import matplotlib.pyplot as plt\n"
       "import pandas as pd\n\n"
    << "df = pd.read_csv(" << std::quoted(fs::absolute(c.out).string()) << ", comment='#')\n"
    << body << "plt.tight_layout()\nplt.show()\n";
  if (!f) throw IoError("error while writing '" + c.plot + "'");
}

std::string fmt(double v, const char* pattern = "%.4g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

/// "915mhz", "2.4ghz", "5ghz", or "<center MHz>/<bandwidth MHz>".
FrequencyBand parse_band(const std::string& id) {
  if (id == "915mhz" || id == "915") return {915e6, 20e6};
  if (id == "2.4ghz" || id == "2.4") return {2437e6, 40e6};
  if (id == "5ghz" || id == "5") return {5190e6, 40e6};
  const auto slash = id.find('/');
  try {
    std::size_t used = 0;
    const double fc = std::stod(id.substr(0, slash), &used);
    double bw = 40.0;
    if (slash != std::string::npos) bw = std::stod(id.substr(slash + 1));
    else if (used != id.size()) throw std::invalid_argument(id);
    return {fc * 1e6, bw * 1e6};
  } catch (const std::logic_error&) {
    throw ConfigError("unknown band '" + id + "' (use 915mhz, 2.4ghz, 5ghz or <center MHz>/<bandwidth MHz>)");
  }
}

int parse_grid(const std::string& g) {
  if (g == "auto") return kAutoGrid;
  try {
    std::size_t used = 0;
    const int n = std::stoi(g, &used);
    if (used == g.size() && (n == 0 || n >= 2)) return n;
  } catch (const std::logic_error&) {
  }
  throw ConfigError("--grid must be 'auto', 0 or an integer >= 2");
}

const Port& find_port(const std::vector<Port>& ps, const std::string& label) {
  for (const auto& p : ps) {
    if (p.label() == label) return p;
  }
  std::string known;
  for (const auto& p : ps) known += (known.empty() ? "" : ", ") + p.label();
  throw ConfigError("no port '" + label + "' in the scene (ports: " + known + ")");
}

// ---------------------------------------------------------------------------

int run_channel(const Common& c, const std::optional<std::string>& band, std::optional<int> subcarriers,
                const std::optional<std::string>& grid, const std::optional<std::string>& material) {
  ScenarioConfig cfg = load(c);
  if (band) cfg.band = parse_band(*band);
  if (subcarriers) cfg.subcarriers = *subcarriers;
  if (grid) cfg.model.grid = parse_grid(*grid);
  if (material) {
    auto [m, coupling] = load_material(*material, fs::path(c.scene).parent_path());
    cfg.model.scene.surface.material = m;
    if (coupling) cfg.model.coupling = *coupling;
    cfg.material_ref = *material;
  }
  const auto mats = csi(cfg.model, cfg.band, cfg.subcarriers);
  const int grid_used = effective_grid(cfg.model, cfg.band.high_edge_hz());

  ResultSet rs(metadata("channel", cfg), {{"subcarrier_index", ColumnType::integer},
                                          {"rx_port", ColumnType::text},
                                          {"tx_port", ColumnType::text},
                                          {"re", ColumnType::real},
                                          {"im", ColumnType::real},
                                          {"mag_db", ColumnType::real},
                                          {"phase_rad", ColumnType::real}});
  rs.metadata().extra.emplace_back("band", fmt(cfg.band.center_hz() / 1e6, "%.6g") + " MHz / " +
                                               fmt(cfg.band.bandwidth_hz() / 1e6, "%.6g") + " MHz");
  rs.metadata().extra.emplace_back("grid", std::to_string(grid_used));
  std::vector<std::string> warnings;
  for (const auto& m : mats) {
    const auto idx = static_cast<std::int64_t>(std::lround((m.frequency_hz - cfg.band.center_hz()) / kSubcarrierSpacingHz));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        const Complex h = m.h(i, j);
        rs.add_row({idx, m.rx_labels[static_cast<std::size_t>(i)], m.tx_labels[static_cast<std::size_t>(j)], h.real(),
                    h.imag(), amplitude_db(std::abs(h)), std::arg(h)});
      }
    }
    for (const auto& w : m.warnings) detail::warn_once(&warnings, w);
  }
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  emit(rs, c);
  write_plot(c,
             "fig, ax = plt.subplots(2, 1, sharex=True)\n"
             "for (rx, tx), g in df.groupby(['rx_port', 'tx_port']):\n"
             "    ax[0].plot(g.subcarrier_index, g.mag_db, label=f'{rx} <- {tx}')\n"
             "    ax[1].plot(g.subcarrier_index, g.phase_rad)\n"
             "ax[0].set_ylabel('|h| (dB)')\nax[1].set_ylabel('phase (rad)')\n"
             "ax[1].set_xlabel('subcarrier index')\nax[0].legend(fontsize='small')\n");
  return 0;
}

// CSI written by `channel`, grouped back into one matrix per subcarrier.
std::vector<ChannelMatrix> read_csi(const std::string& path) {
  const ResultSet rs = read_results(path);
  std::map<std::string, int> col;
  for (std::size_t i = 0; i < rs.columns().size(); ++i) col[rs.columns()[i].name] = static_cast<int>(i);
  for (const char* k : {"subcarrier_index", "rx_port", "tx_port", "re", "im"}) {
    if (!col.count(k)) throw IoError(path + ": missing column '" + k + "'");
  }
  struct Entry {
    std::string rx, tx;
    Complex h;
  };
  std::map<std::int64_t, std::vector<Entry>> by_sc;
  auto num = [](const Cell& c) {
    if (const auto* d = std::get_if<double>(&c)) return *d;
    if (const auto* i = std::get_if<std::int64_t>(&c)) return static_cast<double>(*i);
    return std::stod(std::get<std::string>(c));
  };
  for (const auto& row : rs.rows()) {
    const auto sc = static_cast<std::int64_t>(num(row[static_cast<std::size_t>(col["subcarrier_index"])]));
    auto text = [&](const char* k) {
      const auto& c = row[static_cast<std::size_t>(col[k])];
      return std::holds_alternative<std::string>(c) ? std::get<std::string>(c) : detail::format_cell(c);
    };
    by_sc[sc].push_back({text("rx_port"), text("tx_port"),
                         {num(row[static_cast<std::size_t>(col["re"])]), num(row[static_cast<std::size_t>(col["im"])])}});
  }
  if (by_sc.empty()) throw IoError(path + ": no CSI rows");
  std::vector<ChannelMatrix> out;
  for (const auto& [sc, entries] : by_sc) {
    std::vector<std::string> rx, tx;
    for (const auto& e : entries) {
      if (std::find(rx.begin(), rx.end(), e.rx) == rx.end()) rx.push_back(e.rx);
      if (std::find(tx.begin(), tx.end(), e.tx) == tx.end()) tx.push_back(e.tx);
    }
    ChannelMatrix m;
    m.h = Eigen::MatrixXcd::Constant(static_cast<Eigen::Index>(rx.size()), static_cast<Eigen::Index>(tx.size()),
                                     Complex(std::nan(""), 0.0));
    for (const auto& e : entries) {
      const auto i = std::find(rx.begin(), rx.end(), e.rx) - rx.begin();
      const auto j = std::find(tx.begin(), tx.end(), e.tx) - tx.begin();
      m.h(i, j) = e.h;
    }
    if (!m.h.allFinite()) throw IoError(path + ": subcarrier " + std::to_string(sc) + " has missing entries");
    m.rx_labels = rx;
    m.tx_labels = tx;
    m.frequency_hz = static_cast<double>(sc) * kSubcarrierSpacingHz;
    out.push_back(std::move(m));
  }
  for (const auto& m : out) {
    if (m.rows() != out.front().rows() || m.cols() != out.front().cols() || m.rx_labels != out.front().rx_labels ||
        m.tx_labels != out.front().tx_labels) {
      throw IoError(path + ": subcarriers disagree on the port set");
    }
  }
  return out;
}

int run_analyze(const Common& c, const std::string& csi_path, double snr_db, const std::string& mcs_ref,
                double bandwidth_mhz, double mac_efficiency, double esm_beta) {
  const auto mats = read_csi(csi_path);
  const McsTable table = load_mcs_table(mcs_ref).for_bandwidth(bandwidth_mhz * 1e6);
  LinkBudget budget;
  budget.bandwidth_hz = bandwidth_mhz * 1e6;
  budget.mac_efficiency = mac_efficiency;
  budget.esm_beta = esm_beta;
  const LinkResult r = analyze_link(mats, db_to_linear(snr_db), budget, table);

  std::ostringstream key;
  key << read_text_file(csi_path) << '\n' << detail::format_real(snr_db) << '\n' << table.name() << '\n'
      << detail::format_real(bandwidth_mhz) << '\n' << detail::format_real(mac_efficiency) << '\n'
      << detail::format_real(esm_beta) << '\n';
  for (const auto& row : table.rows()) {
    key << detail::format_real(row.phy_rate_bps) << ',' << detail::format_real(row.min_snr_db) << '\n';
  }
  ResultMetadata meta;
  meta.kind = "analyze";
  meta.config_hash = hash_hex(fnv1a64(key.str()));
  meta.extra.emplace_back("csi", csi_path);
  meta.extra.emplace_back("mcs_table", table.name());
  ResultSet rs(meta, {{"mode", ColumnType::text},
                      {"snr_db", ColumnType::real},
                      {"subcarriers", ColumnType::integer},
                      {"streams", ColumnType::integer},
                      {"tx_ports", ColumnType::text},
                      {"capacity_bps", ColumnType::real},
                      {"condition_number", ColumnType::real},
                      {"stream_snrs_db", ColumnType::text},
                      {"effective_snr_db", ColumnType::real},
                      {"phy_rate_bps", ColumnType::real},
                      {"mac_throughput_bps", ColumnType::real}});
  std::string ports, snrs;
  for (int k : r.tx_ports_used) ports += (ports.empty() ? "" : ";") + mats.front().tx_labels[static_cast<std::size_t>(k)];
  for (double s : r.stream_snrs_db) snrs += (snrs.empty() ? "" : ";") + fmt(s, "%.6g");
  rs.add_row({r.mode, snr_db, static_cast<std::int64_t>(mats.size()), static_cast<std::int64_t>(r.streams), ports,
              r.capacity_bps, r.condition_number, snrs, r.effective_snr_db, r.phy_rate_bps, r.mac_throughput_bps});
  emit(rs, c);
  return 0;
}

std::vector<Column> link_columns() {
  return {{"distance_m", ColumnType::real},       {"distance_ft", ColumnType::real},
          {"separation_m", ColumnType::real},     {"mode", ColumnType::text},
          {"streams", ColumnType::integer},       {"capacity_bps", ColumnType::real},
          {"condition_number", ColumnType::real}, {"effective_snr_db", ColumnType::real},
          {"phy_rate_bps", ColumnType::real},     {"mac_throughput_bps", ColumnType::real}};
}

void add_link_row(ResultSet& rs, const SweepPoint& p) {
  const auto& r = p.result;
  rs.add_row({p.distance_m, p.distance_m / kMetersPerFoot, p.separation_m, std::string(to_string(p.mode)),
              static_cast<std::int64_t>(r.streams), r.capacity_bps, r.condition_number, r.effective_snr_db,
              r.phy_rate_bps, r.mac_throughput_bps});
}

int run_sweep(const Common& c) {
  const ScenarioConfig cfg = load(c);
  const auto setup = cfg.experiment_setup();
  const auto pts = throughput_sweep(setup, cfg.sweep.distances_m, cfg.sweep.modes);
  ResultSet rs(metadata("sweep", cfg), link_columns());
  rs.metadata().extra.emplace_back("grid", std::to_string(effective_grid(cfg.model, cfg.band.high_edge_hz())));
  for (const auto& p : pts) add_link_row(rs, p);
  emit(rs, c);

  const bool has_siso = std::count(cfg.sweep.modes.begin(), cfg.sweep.modes.end(), LinkMode::siso) > 0;
  const double siso = has_siso ? mean_rate(pts, LinkMode::siso) : 0.0;
  for (auto mode : cfg.sweep.modes) {
    const double m = mean_rate(pts, mode);
    std::cerr << to_string(mode) << ": mean PHY rate " << fmt(m / 1e6) << " Mbps";
    if (siso > 0.0) std::cerr << " (" << fmt(m / siso, "%.3f") << "x SISO)";
    std::cerr << '\n';
  }
  write_plot(c,
             "for mode, g in df.groupby('mode', sort=False):\n"
             "    plt.plot(g.distance_ft, g.phy_rate_bps / 1e6, marker='o', label=mode)\n"
             "plt.xlabel('distance (ft)')\nplt.ylabel('PHY rate (Mbps)')\nplt.legend()\n");
  return 0;
}

int run_separation(const Common& c) {
  const ScenarioConfig cfg = load(c);
  const auto pts = separation_sweep(cfg.experiment_setup(), cfg.sweep.separations_m, cfg.sweep.distances_m,
                                    cfg.sweep.separation_mode);
  ResultSet rs(metadata("separation", cfg), link_columns());
  for (const auto& p : pts) add_link_row(rs, p);
  emit(rs, c);
  for (double s : cfg.sweep.separations_m) {
    std::cerr << "separation " << fmt(s * 100.0) << " cm: mean PHY rate "
              << fmt(mean_rate(pts, cfg.sweep.separation_mode, s) / 1e6) << " Mbps\n";
  }
  write_plot(c,
             "for sep, g in df.groupby('separation_m'):\n"
             "    plt.plot(g.distance_ft, g.phy_rate_bps / 1e6, marker='o', label=f'{sep * 100:g} cm')\n"
             "plt.xlabel('distance (ft)')\nplt.ylabel('PHY rate (Mbps)')\nplt.legend(title='separation')\n");
  return 0;
}

int run_air_spacing(const Common& c, int realizations) {
  ScenarioConfig cfg = load(c);
  if (realizations > 0) cfg.sweep.air_realizations = realizations;
  const auto rates = air_mimo_spacing_sweep(cfg.experiment_setup(), cfg.sweep.air_spacings_m, cfg.sweep.distances_m,
                                            cfg.sweep.air_realizations, cfg.seed);
  ResultSet rs(metadata("air-spacing", cfg),
               {{"spacing_m", ColumnType::real}, {"spacing_wavelengths", ColumnType::real},
                {"mean_phy_rate_bps", ColumnType::real}});
  const double lambda = kSpeedOfLight / cfg.band.center_hz();
  for (std::size_t i = 0; i < rates.size(); ++i) {
    rs.add_row({cfg.sweep.air_spacings_m[i], cfg.sweep.air_spacings_m[i] / lambda, rates[i]});
  }
  emit(rs, c);
  write_plot(c,
             "plt.plot(df.spacing_wavelengths, df.mean_phy_rate_bps / 1e6, marker='o')\n"
             "plt.xlabel('antenna spacing (wavelengths)')\nplt.ylabel('mean air-MIMO rate (Mbps)')\n");
  return 0;
}

int run_pulse(const Common& c, const std::string& taps_out) {
  const ScenarioConfig cfg = load(c);
  const auto& p = cfg.pulse;
  const auto txs = ports(cfg.model.scene, Role::transmitter);
  const auto rxs = ports(cfg.model.scene, Role::receiver);
  const ImpulseResponse ir = impulse_response(find_port(txs, p.tx_port), find_port(rxs, p.rx_port), cfg.model, p.impulse);
  const Waveform w = pulse_profile(ir, p.waveform);
  const PulseMetrics m = pulse_metrics(ir, w);

  ResultSet rs(metadata("pulse", cfg), {{"sample", ColumnType::integer},
                                        {"time_s", ColumnType::real},
                                        {"re", ColumnType::real},
                                        {"im", ColumnType::real},
                                        {"magnitude", ColumnType::real}});
  for (std::size_t k = 0; k < w.samples.size(); ++k) {
    const Complex s = w.samples[k];
    rs.add_row({static_cast<std::int64_t>(k), w.time(k), s.real(), s.imag(), std::abs(s)});
  }
  emit(rs, c);
  if (!taps_out.empty()) {
    ResultSet ts(metadata("pulse-taps", cfg), {{"delay_s", ColumnType::real},
                                               {"re", ColumnType::real},
                                               {"im", ColumnType::real},
                                               {"kind", ColumnType::text}});
    for (const auto& t : ir.taps()) ts.add_row({t.delay_s, t.amplitude.real(), t.amplitude.imag(), std::string(to_string(t.kind))});
    write_results(ts, taps_out);
  }
  std::cerr << "taps: " << ir.taps().size() << "\nfirst arrival: " << fmt(m.first_arrival_s * 1e9) << " ns\n"
            << "peak: " << fmt(m.peak_amplitude) << " at " << fmt(m.peak_time_s * 1e9) << " ns\n"
            << "rms delay spread: " << fmt(m.rms_delay_spread_s * 1e9) << " ns\n"
            << "energy after " << fmt(kPulseHorizonS * 1e9) << " ns: " << fmt(m.residual_ratio * 100.0)
            << "% of peak\n";
  write_plot(c,
             "plt.plot(df.time_s * 1e9, df.magnitude)\n"
             "plt.xlabel('time (ns)')\nplt.ylabel('|received pulse|')\n");
  return 0;
}

int run_aggregate(const Common& c, bool no_dfs, std::optional<int> max_subcarriers) {
  ScenarioConfig cfg = load(c);
  if (no_dfs) cfg.aggregation.no_dfs = true;
  if (max_subcarriers) cfg.aggregation.max_subcarriers = *max_subcarriers;
  const auto plan = AggregationPlan::by_name(cfg.aggregation.plan, cfg.aggregation.no_dfs);
  const auto& table = cfg.aggregation.mcs;
  const auto results = aggregation_sweep(plan, cfg.aggregation.distances_m, cfg.experiment_setup(), table,
                                         cfg.aggregation.max_subcarriers);
  ResultSet rs(metadata("aggregate", cfg), {{"distance_m", ColumnType::real},
                                            {"distance_ft", ColumnType::real},
                                            {"chain", ColumnType::integer},
                                            {"center_hz", ColumnType::real},
                                            {"bandwidth_hz", ColumnType::real},
                                            {"conversion_loss_db", ColumnType::real},
                                            {"effective_snr_db", ColumnType::real},
                                            {"phy_rate_bps", ColumnType::real},
                                            {"total_bps", ColumnType::real}});
  rs.metadata().extra.emplace_back("plan", plan.name);
  rs.metadata().extra.emplace_back("total_bandwidth_hz", detail::format_real(plan.total_bandwidth_hz()));
  rs.metadata().extra.emplace_back("peak_rate_bps", detail::format_real(peak_rate(plan, table)));
  for (const auto& r : results) {
    for (std::size_t k = 0; k < r.chains.size(); ++k) {
      const auto& ch = r.chains[k];
      rs.add_row({r.distance_m, r.distance_m / kMetersPerFoot, static_cast<std::int64_t>(k), ch.chain.band.center_hz(),
                  ch.chain.band.bandwidth_hz(), ch.chain.conversion_loss_db, ch.effective_snr_db, ch.phy_rate_bps,
                  r.total_bps});
    }
  }
  emit(rs, c);
  std::cerr << plan.name << ": " << fmt(plan.total_bandwidth_hz() / 1e6) << " MHz, peak "
            << fmt(peak_rate(plan, table) / 1e6, "%.1f") << " Mbps\n";
  for (const auto& r : results) {
    std::cerr << "  " << fmt(r.distance_m / kMetersPerFoot) << " ft: " << fmt(r.total_bps / 1e6, "%.1f") << " Mbps\n";
  }
  write_plot(c,
             "tot = df.groupby('distance_ft').total_bps.first() / 1e9\n"
             "plt.plot(tot.index, tot.values, marker='o')\n"
             "plt.xlabel('distance (ft)')\nplt.ylabel('aggregate PHY rate (Gbps)')\n");
  return 0;
}

int run_radiation(const Common& c) {
  const ScenarioConfig cfg = load(c);
  const auto& rd = cfg.radiation;
  const auto pts = radiation_benchmark(rd.profile, rd.positions, rd.tx_power_dbm, rd.frequency_hz, cfg.model.air);
  ResultSet rs(metadata("radiation", cfg), {{"x_m", ColumnType::real},
                                            {"y_m", ColumnType::real},
                                            {"z_m", ColumnType::real},
                                            {"side", ColumnType::text},
                                            {"reference_dbm", ColumnType::real},
                                            {"surface_fed_dbm", ColumnType::real},
                                            {"relative_db", ColumnType::real}});
  for (const auto& p : pts) {
    rs.add_row({p.position.x, p.position.y, p.position.z, std::string(p.front ? "front" : "back"), p.reference_dbm,
                p.surface_fed_dbm, p.surface_fed_dbm - p.reference_dbm});
  }
  emit(rs, c);
  write_plot(c,
             "for side, g in df.groupby('side'):\n"
             "    plt.scatter(g.z_m, g.reference_dbm, marker='o', label=f'antenna ({side})')\n"
             "    plt.scatter(g.z_m, g.surface_fed_dbm, marker='x', label=f'surface-fed ({side})')\n"
             "plt.xlabel('z (m)')\nplt.ylabel('received power (dBm)')\nplt.legend()\n");
  return 0;
}

int run_share(const Common& c, std::optional<std::uint64_t> slots) {
  ScenarioConfig cfg = load(c);
  if (slots) cfg.sharing.slots = *slots;
  const auto res = share_sim(cfg.sharing.config, cfg.sharing.slots, cfg.seed);
  ResultSet rs(metadata("share", cfg), {{"id", ColumnType::text},
                                        {"channel", ColumnType::integer},
                                        {"solo_rate_bps", ColumnType::real},
                                        {"airtime_fraction", ColumnType::real},
                                        {"throughput_bps", ColumnType::real}});
  for (std::size_t i = 0; i < res.size(); ++i) {
    rs.add_row({res[i].id, static_cast<std::int64_t>(res[i].channel), cfg.sharing.config.pairs[i].solo_rate_bps,
                res[i].airtime_fraction, res[i].throughput_bps});
  }
  emit(rs, c);
  write_plot(c,
             "plt.bar(df.id, df.throughput_bps / 1e6)\n"
             "plt.ylabel('throughput (Mbps)')\n");
  return 0;
}

int run_calibrate(const Common& c, const std::string& samples_path, double tx_power_dbm) {
  const ResultSet in = read_results(samples_path);
  int di = -1;
  int pi = -1;
  for (std::size_t i = 0; i < in.columns().size(); ++i) {
    if (in.columns()[i].name == "distance_m") di = static_cast<int>(i);
    if (in.columns()[i].name == "power_dbm") pi = static_cast<int>(i);
  }
  if (di < 0 || pi < 0) throw IoError(samples_path + ": needs columns distance_m and power_dbm");
  std::vector<AttenuationSample> samples;
  for (const auto& row : in.rows()) {
    auto num = [](const Cell& cell) {
      if (const auto* d = std::get_if<double>(&cell)) return *d;
      if (const auto* i = std::get_if<std::int64_t>(&cell)) return static_cast<double>(*i);
      const auto& s = std::get<std::string>(cell);
      char* end = nullptr;
      const double v = std::strtod(s.c_str(), &end);
      if (s.empty() || *end != '\0') throw IoError("bad number '" + s + "'");
      return v;
    };
    samples.push_back({num(row[static_cast<std::size_t>(di)]), num(row[static_cast<std::size_t>(pi)])});
  }
  const CalibrationResult r = calibrate(samples, tx_power_dbm);
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
  ResultMetadata meta;
  meta.kind = "calibrate";
  meta.config_hash = hash_hex(fnv1a64(read_text_file(samples_path) + "\n" + detail::format_real(tx_power_dbm)));
  meta.extra.emplace_back("samples", samples_path);
  ResultSet rs(meta, {{"alpha_np_per_m", ColumnType::real},
                      {"d0_m", ColumnType::real},
                      {"residual_rms_db", ColumnType::real},
                      {"alpha_clamped", ColumnType::integer},
                      {"samples", ColumnType::integer}});
  rs.add_row({r.alpha_np_per_m, r.d0_m, r.residual_rms_db, static_cast<std::int64_t>(r.alpha_clamped),
              static_cast<std::int64_t>(samples.size())});
  emit(rs, c);
  return 0;
}

std::string version_text() {
  std::ostringstream os;
  const auto dir = preset_dir();
  os << "surfmimo " << kToolVersion << '\n'
     << "presets: " << dir.string() << '\n'
     << "  materials.yaml " << preset_version(dir / "materials.yaml") << '\n'
     << "  mcs_80211n.yaml " << preset_version(dir / "mcs_80211n.yaml") << '\n'
     << "  mcs_80211ac.yaml " << preset_version(dir / "mcs_80211ac.yaml") << '\n';
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Surface MIMO channel simulator"};
  app.require_subcommand(1);
  bool show_version = false;
  app.add_flag("--version", show_version, "Print tool and preset versions");

  Common common;
  std::optional<std::string> band, grid, material;
  std::optional<int> subcarriers, max_subcarriers;
  auto* channel = app.add_subcommand("channel", "Per-subcarrier channel matrices of a scene");
  add_common(channel, common);
  channel->add_option("--band", band, "915mhz, 2.4ghz, 5ghz or <center MHz>/<bandwidth MHz>");
  channel->add_option("--subcarriers", subcarriers, "Number of subcarriers")->check(CLI::PositiveNumber);
  channel->add_option("--grid", grid, "Integration grid: auto or cells along the long side");
  channel->add_option("--material", material, "Material preset name or preset file");

  std::string csi_path, mcs_ref = kDefaultMcsTable;
  double snr_db = 20.0, bandwidth_mhz = 40.0, mac_eff = 0.65, esm_beta = kDefaultEsmBeta;
  auto* analyze = app.add_subcommand("analyze", "Capacity, conditioning and MCS rate of saved CSI");
  add_common(analyze, common, false);
  analyze->add_option("--csi", csi_path, "CSI file written by 'channel'")->required()->check(CLI::ExistingFile);
  analyze->add_option("--snr", snr_db, "Total transmit SNR (dB)")->required();
  analyze->add_option("--mcs", mcs_ref, "MCS table file");
  analyze->add_option("--bandwidth", bandwidth_mhz, "Channel bandwidth (MHz)");
  analyze->add_option("--mac-efficiency", mac_eff, "MAC efficiency");
  analyze->add_option("--esm-beta", esm_beta, "Effective SNR mapping parameter");

  auto* sweep = app.add_subcommand("sweep", "Throughput against distance for each link mode");
  add_common(sweep, common);
  auto* separation = app.add_subcommand("separation", "Throughput against antenna-contact separation");
  add_common(separation, common);
  int realizations = 0;
  auto* air = app.add_subcommand("air-spacing", "Air-MIMO rate against antenna spacing with air multipath");
  add_common(air, common);
  air->add_option("--realizations", realizations, "Multipath realizations per spacing")->check(CLI::PositiveNumber);

  std::string taps_out;
  auto* pulse = app.add_subcommand("pulse", "Received one-nanosecond pulse");
  add_common(pulse, common);
  pulse->add_option("--taps", taps_out, "Also write the impulse-response taps");

  bool no_dfs = false;
  auto* aggregate = app.add_subcommand("aggregate", "Multi-band aggregate rate against distance");
  add_common(aggregate, common);
  aggregate->add_flag("--no-dfs", no_dfs, "Avoid DFS channels (use the scenario-2 plan)");
  aggregate->add_option("--max-subcarriers", max_subcarriers, "Subcarriers per chain")->check(CLI::PositiveNumber);

  auto* radiation = app.add_subcommand("radiation", "Surface-fed emission relative to an antenna");
  add_common(radiation, common);

  std::optional<std::uint64_t> slots;
  auto* share = app.add_subcommand("share", "Carrier-sense sharing of the surface");
  add_common(share, common);
  share->add_option("--slots", slots, "Simulated slots")->check(CLI::PositiveNumber);

  std::string samples_path;
  double tx_power = 0.0;
  auto* calib = app.add_subcommand("calibrate", "Fit attenuation constant and reference distance");
  add_common(calib, common, false);
  calib->add_option("--samples", samples_path, "CSV with distance_m, power_dbm")->required()->check(CLI::ExistingFile);
  calib->add_option("--tx-power", tx_power, "Transmit power (dBm)")->required();

  // --version works without a subcommand.
  for (int i = 1; i < argc; ++i) {
    if (std::string(argv[i]) == "--version") {
      std::cout << version_text();
      return 0;
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ErrorCategory::config);
  }

  try {
    if (*channel) return run_channel(common, band, subcarriers, grid, material);
    if (*analyze) return run_analyze(common, csi_path, snr_db, mcs_ref, bandwidth_mhz, mac_eff, esm_beta);
    if (*sweep) return run_sweep(common);
    if (*separation) return run_separation(common);
    if (*air) return run_air_spacing(common, realizations);
    if (*pulse) return run_pulse(common, taps_out);
    if (*aggregate) return run_aggregate(common, no_dfs, max_subcarriers);
    if (*radiation) return run_radiation(common);
    if (*share) return run_share(common, slots);
    if (*calib) return run_calibrate(common, samples_path, tx_power);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
