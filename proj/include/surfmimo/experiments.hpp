#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "surfmimo/channel.hpp"
#include "surfmimo/constants.hpp"
#include "surfmimo/error.hpp"
#include "surfmimo/geometry.hpp"
#include "surfmimo/mimo_analysis.hpp"
#include "surfmimo/propagation.hpp"

namespace surfmimo {

// ---------------------------------------------------------------------------
// Link templates: two devices facing each other along +x on the surface.

enum class LinkMode { siso, air_mimo, surface_2x2, surface_3x3 };

inline const char* to_string(LinkMode m) {
  switch (m) {
    case LinkMode::siso: return "siso";
    case LinkMode::air_mimo: return "air-mimo";
    case LinkMode::surface_2x2: return "surface-2x2";
    case LinkMode::surface_3x3: return "surface-3x3";
  }
  return "?";
}

inline LinkMode parse_link_mode(const std::string& s) {
  if (s == "siso") return LinkMode::siso;
  if (s == "air-mimo") return LinkMode::air_mimo;
  if (s == "surface-2x2") return LinkMode::surface_2x2;
  if (s == "surface-3x3") return LinkMode::surface_3x3;
  throw ConfigError("unknown link mode '" + s + "' (expected siso, air-mimo, surface-2x2 or surface-3x3)");
}

/// Device layout relative to the device origin. The SISO baseline uses the
/// device's Wi-Fi antenna alone; surface modes add one or two contacts next
/// to it; the air baseline uses two antennas at the usual Wi-Fi spacing.
struct LinkTemplate {
  Vec2 tx_origin{0.05, 0.305};
  double antenna_height_m = 0.005;
  double separation_m = 0.01;          // contact to antenna offset along y
  double siso_antenna_offset_m = 0.01;
  double second_contact_offset_m = 0.01;
  double air_antenna_spacing_m = 0.0625;
};

inline Node link_device(const LinkTemplate& t, LinkMode mode, Vec2 origin, Role role, std::string id,
                        std::optional<double> separation = std::nullopt) {
  const double s = separation.value_or(t.separation_m);
  const double z = t.antenna_height_m;
  Node n;
  n.id = std::move(id);
  n.role = role;
  switch (mode) {
    case LinkMode::siso:
      n.antennas = {{origin.x, origin.y + t.siso_antenna_offset_m, z}};
      break;
    case LinkMode::air_mimo:
      n.antennas = {{origin.x, origin.y, z}, {origin.x, origin.y + t.air_antenna_spacing_m, z}};
      break;
    case LinkMode::surface_2x2:
      n.contacts = {origin};
      n.antennas = {{origin.x, origin.y + s, z}};
      break;
    case LinkMode::surface_3x3:
      n.contacts = {origin, {origin.x, origin.y - t.second_contact_offset_m}};
      n.antennas = {{origin.x, origin.y + s, z}};
      break;
  }
  return n;
}

/// Scene with a transmitter at the template origin and a receiver `distance`
/// further along x.
inline Scene link_scene(const Scene& base, const LinkTemplate& t, LinkMode mode, double distance,
                        std::optional<double> separation = std::nullopt) {
  Scene s = base;
  s.nodes = {link_device(t, mode, t.tx_origin, Role::transmitter, "tx", separation),
             link_device(t, mode, {t.tx_origin.x + distance, t.tx_origin.y}, Role::receiver, "rx", separation)};
  return s;
}

/// Shared inputs of the link experiments.
struct ExperimentSetup {
  ChannelModel model;  // scene nodes are replaced by each experiment
  FrequencyBand band{2.437e9, 40e6};
  int subcarriers = 114;
  LinkBudget budget;
  McsTable mcs;  // single-bandwidth table matching `band`
  LinkTemplate link;
};

/// CSI of many node layouts on one surface, sharing each subcarrier's
/// integration caches across layouts.
inline std::vector<std::vector<ChannelMatrix>> batch_csi(const std::vector<ChannelModel>& models,
                                                         const FrequencyBand& band, int n_subcarriers) {
  std::vector<std::vector<ChannelMatrix>> out(models.size());
  if (models.empty()) return out;
  const auto& ref = models.front();
  check_coverage(band, ref.scene.surface.material);
  const bool integrals = ref.coupling.c1 != 0.0 || ref.coupling.c2 != 0.0 || ref.coupling.c3 != 0.0;
  const int grid = effective_grid(ref, band.high_edge_hz());
  for (double f : subcarrier_frequencies(band, n_subcarriers)) {
    std::optional<detail::SurfaceIntegrator> integ;
    if (integrals) integ.emplace(ref.scene.surface, ref.scene.obstacles, ref.air, grid, f);
    for (std::size_t k = 0; k < models.size(); ++k) {
      out[k].push_back(build_mimo(models[k], f, integ ? &*integ : nullptr));
    }
  }
  return out;
}

struct SweepPoint {
  double distance_m = 0.0;
  double separation_m = 0.0;
  LinkMode mode = LinkMode::siso;
  LinkResult result;
};

namespace detail {

inline void check_distance(const SurfaceSpec& s, const LinkTemplate& t, double d) {
  if (!(d > 0.0) || t.tx_origin.x + d > s.width_m) {
    throw DomainError("link distance " + std::to_string(d) + " m does not fit on the surface");
  }
}

struct LinkJob {
  double distance;
  double separation;
  LinkMode mode;
};

inline std::vector<SweepPoint> run_link_jobs(const ExperimentSetup& setup, const std::vector<LinkJob>& jobs) {
  std::vector<ChannelModel> models;
  for (const auto& j : jobs) {
    check_distance(setup.model.scene.surface, setup.link, j.distance);
    ChannelModel m = setup.model;
    m.scene = link_scene(setup.model.scene, setup.link, j.mode, j.distance, j.separation);
    models.push_back(std::move(m));
  }
  const auto all = batch_csi(models, setup.band, setup.subcarriers);
  LinkBudget budget = setup.budget;
  budget.bandwidth_hz = setup.band.bandwidth_hz();
  std::vector<SweepPoint> out;
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    out.push_back({jobs[k].distance, jobs[k].separation, jobs[k].mode, analyze_link(all[k], budget, setup.mcs)});
  }
  return out;
}

}  // namespace detail

/// Rate versus distance for each mode.
inline std::vector<SweepPoint> throughput_sweep(const ExperimentSetup& setup, std::span<const double> distances_m,
                                                std::span<const LinkMode> modes) {
  std::vector<detail::LinkJob> jobs;
  for (double d : distances_m) {
    for (auto m : modes) jobs.push_back({d, setup.link.separation_m, m});
  }
  return detail::run_link_jobs(setup, jobs);
}

/// Rate versus antenna-to-contact separation, at every distance.
inline std::vector<SweepPoint> separation_sweep(const ExperimentSetup& setup, std::span<const double> separations_m,
                                                std::span<const double> distances_m, LinkMode mode) {
  std::vector<detail::LinkJob> jobs;
  for (double s : separations_m) {
    if (!(s > 0.0)) throw DomainError("separation must be positive");
    for (double d : distances_m) jobs.push_back({d, s, mode});
  }
  return detail::run_link_jobs(setup, jobs);
}

/// Mean PHY rate of the points matching a mode (and separation, if given).
inline double mean_rate(std::span<const SweepPoint> pts, LinkMode mode, std::optional<double> separation = std::nullopt) {
  double sum = 0.0;
  int n = 0;
  for (const auto& p : pts) {
    if (p.mode != mode || (separation && p.separation_m != *separation)) continue;
    sum += p.result.phy_rate_bps;
    ++n;
  }
  if (n == 0) throw DomainError("mean_rate: no matching sweep points");
  return sum / n;
}

/// Mean air-MIMO rate per antenna spacing, averaged over air multipath
/// realizations (seeds seed, seed + 1, ...) and distances.
inline std::vector<double> air_mimo_spacing_sweep(const ExperimentSetup& setup, std::span<const double> spacings_m,
                                                  std::span<const double> distances_m, int realizations,
                                                  std::uint64_t seed) {
  if (realizations < 1) throw ConfigError("air multipath needs at least one realization");
  std::vector<double> out;
  for (double sp : spacings_m) {
    ExperimentSetup s = setup;
    s.link.air_antenna_spacing_m = sp;
    s.model.air_multipath.enabled = true;
    double sum = 0.0;
    int n = 0;
    for (int r = 0; r < realizations; ++r) {
      s.model.air_multipath.seed = seed + static_cast<std::uint64_t>(r);
      const LinkMode mode = LinkMode::air_mimo;
      for (const auto& p : throughput_sweep(s, distances_m, std::span(&mode, 1))) {
        sum += p.result.phy_rate_bps;
        ++n;
      }
    }
    out.push_back(sum / n);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pulse profiles.

struct PulseOptions {
  double width_s = 1e-9;
  double sample_rate_hz = 5e9;
  double tail_s = 400e-9;
};

/// Complex baseband envelope sampled from t = 0.
struct Waveform {
  double dt = 0.0;
  std::vector<Complex> samples;

  double time(std::size_t k) const { return static_cast<double>(k) * dt; }
};

/// The tapped delay line driven by a rectangular pulse.
inline Waveform pulse_profile(const ImpulseResponse& ir, const PulseOptions& opt = {}) {
  if (!(opt.sample_rate_hz >= 1e9)) throw ConfigError("pulse sample rate must be at least 1 Gsps");
  if (!(opt.width_s > 0.0) || !(opt.tail_s >= 0.0)) throw ConfigError("pulse width must be positive");
  Waveform w;
  w.dt = 1.0 / opt.sample_rate_hz;
  const double end = ir.taps().back().delay_s + opt.width_s + opt.tail_s;
  w.samples.assign(static_cast<std::size_t>(std::ceil(end / w.dt)) + 1, Complex(0.0));
  for (const auto& t : ir.taps()) {
    auto k0 = static_cast<std::size_t>(std::ceil(t.delay_s / w.dt - 1e-9));
    for (std::size_t k = k0; k < w.samples.size() && w.time(k) < t.delay_s + opt.width_s; ++k) {
      w.samples[k] += t.amplitude;
    }
  }
  return w;
}

struct PulseMetrics {
  double first_arrival_s = 0.0;
  double peak_amplitude = 0.0;
  double peak_time_s = 0.0;
  double residual_ratio = 0.0;  // max power after the horizon over peak power
  double rms_delay_spread_s = 0.0;
};

inline constexpr double kPulseHorizonS = 300e-9;

inline PulseMetrics pulse_metrics(const ImpulseResponse& ir, const Waveform& w, double horizon_s = kPulseHorizonS) {
  PulseMetrics m;
  m.first_arrival_s = ir.taps().front().delay_s;
  m.rms_delay_spread_s = ir.rms_delay_spread();
  double tail = 0.0;
  for (std::size_t k = 0; k < w.samples.size(); ++k) {
    const double a = std::abs(w.samples[k]);
    if (a > m.peak_amplitude) {
      m.peak_amplitude = a;
      m.peak_time_s = w.time(k);
    }
    if (w.time(k) > m.first_arrival_s + horizon_s) tail = std::max(tail, a * a);
  }
  m.residual_ratio = m.peak_amplitude > 0.0 ? tail / (m.peak_amplitude * m.peak_amplitude) : 0.0;
  return m;
}

// ---------------------------------------------------------------------------
// Multi-band aggregation.

struct AggregationChain {
  FrequencyBand band;
  double conversion_loss_db = 0.0;
};

struct AggregationPlan {
  std::string name;
  std::vector<AggregationChain> chains;

  double total_bandwidth_hz() const {
    double b = 0.0;
    for (const auto& c : chains) b += c.band.bandwidth_hz();
    return b;
  }

  void validate() const {
    if (chains.empty()) throw ConfigError("aggregation plan '" + name + "' has no chains");
    for (const auto& c : chains) {
      if (!(c.conversion_loss_db >= 0.0)) throw ConfigError("conversion loss must be nonnegative");
    }
  }

  /// Six 40 MHz chains across UNII-1, UNII-2 (DFS) and UNII-3 plus one 20 MHz chain.
  static AggregationPlan scenario_1() {
    return {"scenario-1",
            {{{5190e6, 40e6}, 0.0},
             {{5230e6, 40e6}, 0.0},
             {{5270e6, 40e6}, 0.0},
             {{5310e6, 40e6}, 0.0},
             {{5755e6, 40e6}, 0.0},
             {{5795e6, 40e6}, 0.0},
             {{5825e6, 20e6}, 0.0}}};
  }

  /// No DFS channels: four 40 MHz chains at 5 GHz, two at 2.4 GHz, and a
  /// 915 MHz chain behind a frequency converter.
  static AggregationPlan scenario_2() {
    return {"scenario-2",
            {{{5190e6, 40e6}, 0.0},
             {{5230e6, 40e6}, 0.0},
             {{5755e6, 40e6}, 0.0},
             {{5795e6, 40e6}, 0.0},
             {{2422e6, 40e6}, 0.0},
             {{2462e6, 20e6}, 0.0},
             {{915e6, 20e6}, 6.0}}};
  }

  static AggregationPlan by_name(const std::string& n, bool no_dfs = false) {
    if (n == "scenario-1") return no_dfs ? scenario_2() : scenario_1();
    if (n == "scenario-2") return scenario_2();
    throw ConfigError("unknown aggregation plan '" + n + "' (expected scenario-1 or scenario-2)");
  }
};

/// Sum of the top single-stream rate of every chain's bandwidth class.
inline double peak_rate(const AggregationPlan& plan, const McsTable& table) {
  double total = 0.0;
  for (const auto& c : plan.chains) total += table.for_bandwidth(c.band.bandwidth_hz()).max_rate_bps();
  return total;
}

struct ChainResult {
  AggregationChain chain;
  double effective_snr_db = 0.0;
  double phy_rate_bps = 0.0;
};

struct AggregationResult {
  double distance_m = 0.0;
  double total_bps = 0.0;
  std::vector<ChainResult> chains;
};

/// Chain rate from an effective SNR; exposed for the additivity checks.
inline double chain_rate(const AggregationChain& chain, double esnr_db, const McsTable& table) {
  return map_rate(esnr_db, table.for_bandwidth(chain.band.bandwidth_hz()), 1);
}

/// Every chain runs its own single-stream surface link between one contact
/// per device; chain rates add. Distances are evaluated together so each
/// subcarrier's integration caches are shared.
inline std::vector<AggregationResult> aggregation_sweep(const AggregationPlan& plan, std::span<const double> distances_m,
                                                        const ExperimentSetup& setup, const McsTable& table,
                                                        int max_subcarriers = 114) {
  plan.validate();
  std::vector<ChannelModel> models;
  const Vec2 a = setup.link.tx_origin;
  for (double d : distances_m) {
    detail::check_distance(setup.model.scene.surface, setup.link, d);
    ChannelModel m = setup.model;
    m.scene.nodes = {{"tx", Role::transmitter, {a}, {}}, {"rx", Role::receiver, {{a.x + d, a.y}}, {}}};
    models.push_back(std::move(m));
  }
  std::vector<AggregationResult> out(distances_m.size());
  for (std::size_t k = 0; k < distances_m.size(); ++k) out[k].distance_m = distances_m[k];
  for (const auto& chain : plan.chains) {
    const int n = std::min(max_subcarriers, default_subcarrier_count(chain.band.bandwidth_hz()));
    const auto all = batch_csi(models, chain.band, n);
    LinkBudget b = setup.budget;
    b.bandwidth_hz = chain.band.bandwidth_hz();
    b.extra_loss_db += chain.conversion_loss_db;
    const double rho = b.snr_linear();
    for (std::size_t k = 0; k < models.size(); ++k) {
      std::vector<double> snrs;
      for (const auto& m : all[k]) snrs.push_back(rho * std::norm(m.h(0, 0)));
      const double esnr_db = detail::to_db(effective_snr(snrs, b.esm_beta));
      const double rate = chain_rate(chain, esnr_db, table);
      out[k].chains.push_back({chain, esnr_db, rate});
      out[k].total_bps += rate;
    }
  }
  return out;
}

inline AggregationResult aggregate_capacity(const AggregationPlan& plan, double distance_m,
                                            const ExperimentSetup& setup, const McsTable& table,
                                            int max_subcarriers = 114) {
  return aggregation_sweep(plan, std::span(&distance_m, 1), setup, table, max_subcarriers).front();
}

// ---------------------------------------------------------------------------
// Radiation benchmark.

struct RadiationProfile {
  double front_offset_db = 13.0;
  double back_offset_db = 25.0;

  void validate() const {
    if (!(front_offset_db >= 0.0) || !(back_offset_db >= 0.0)) {
      throw ConfigError("radiation offsets must be nonnegative");
    }
  }
};

struct RadiationPoint {
  Vec3 position;
  bool front = true;  // z >= 0: the side the device is mounted on
  double reference_dbm = 0.0;
  double surface_fed_dbm = 0.0;
};

/// Received power around a source at the origin, for a plain antenna and for
/// the same emission fed through the surface. Offsets are applied after the
/// distance attenuation.
inline std::vector<RadiationPoint> radiation_benchmark(const RadiationProfile& profile,
                                                       std::span<const Vec3> positions, double tx_power_dbm,
                                                       double f_hz, const AirModel& air) {
  profile.validate();
  std::vector<RadiationPoint> out;
  for (const auto& p : positions) {
    const double d = std::max(distance(p, Vec3{}), air.d0_m);
    RadiationPoint r;
    r.position = p;
    r.front = p.z >= 0.0;
    r.reference_dbm = tx_power_dbm + amplitude_db(std::abs(air_gain(d, f_hz, air)));
    r.surface_fed_dbm = r.reference_dbm - (r.front ? profile.front_offset_db : profile.back_offset_db);
    out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Carrier-sense sharing.

struct SharingPair {
  std::string id;
  int channel = 1;
  double solo_rate_bps = 0.0;
};

struct SharingConfig {
  std::vector<SharingPair> pairs;
  double ambient_busy_fraction = 0.0;

  void validate() const {
    if (pairs.empty()) throw ConfigError("sharing: at least one pair is required");
    if (!(ambient_busy_fraction >= 0.0 && ambient_busy_fraction <= 1.0)) {
      throw ConfigError("sharing: ambient busy fraction must lie in [0, 1]");
    }
    for (const auto& p : pairs) {
      if (!(p.solo_rate_bps >= 0.0)) throw ConfigError("sharing: solo rate must be nonnegative");
    }
  }
};

struct SharingResult {
  std::string id;
  int channel = 0;
  double airtime_fraction = 0.0;
  double throughput_bps = 0.0;
};

/// Slotted carrier sense. In each slot and on each channel, the environment
/// occupies the slot with probability `ambient_busy_fraction`; otherwise one
/// contender on that channel, chosen uniformly, transmits. Every channel draws
/// from its own stream seeded by (seed, channel), so channels never influence
/// each other.
inline std::vector<SharingResult> share_sim(const SharingConfig& cfg, std::uint64_t slots, std::uint64_t seed) {
  cfg.validate();
  if (slots == 0) throw ConfigError("sharing: duration must be positive");
  std::map<int, std::vector<std::size_t>> by_channel;
  for (std::size_t i = 0; i < cfg.pairs.size(); ++i) by_channel[cfg.pairs[i].channel].push_back(i);
  std::vector<std::uint64_t> won(cfg.pairs.size(), 0);
  for (const auto& [channel, members] : by_channel) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(channel), 0x5eedu};
    std::mt19937_64 rng(seq);
    std::bernoulli_distribution busy(cfg.ambient_busy_fraction);
    std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
    for (std::uint64_t s = 0; s < slots; ++s) {
      if (busy(rng)) continue;
      ++won[members[pick(rng)]];
    }
  }
  std::vector<SharingResult> out;
  for (std::size_t i = 0; i < cfg.pairs.size(); ++i) {
    const double frac = static_cast<double>(won[i]) / static_cast<double>(slots);
    out.push_back({cfg.pairs[i].id, cfg.pairs[i].channel, frac, frac * cfg.pairs[i].solo_rate_bps});
  }
  return out;
}

}  // namespace surfmimo
