#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "surfmimo/constants.hpp"
#include "surfmimo/detail/surface_integrator.hpp"
#include "surfmimo/error.hpp"
#include "surfmimo/geometry.hpp"
#include "surfmimo/propagation.hpp"

namespace surfmimo {

inline constexpr int kAutoGrid = 0;
inline constexpr int kDefaultImpulseGrid = 64;
inline constexpr double kCellsPerSurfaceWavelength = 12.0;
inline constexpr int kGridQuantum = 64;

/// Integration grid (cells along the longer side) that resolves the shortest
/// surface wavelength up to f_max with the given number of cells, rounded up
/// to a multiple of 64.
inline int resolve_grid(const SurfaceSpec& s, double f_max_hz, double cells_per_wavelength = kCellsPerSurfaceWavelength) {
  const double lambda = kTwoPi / s.material.beta(f_max_hz);
  const double cells = std::max(s.width_m, s.height_m) / (lambda / cells_per_wavelength);
  const int n = static_cast<int>(std::ceil(cells / kGridQuantum)) * kGridQuantum;
  return std::max(n, kGridQuantum);
}

/// Scalars in front of the composite integrals, plus the contact-to-antenna
/// coupling between a device's own contacts and antennas.
struct CouplingConstants {
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;
  double near_field_coupling = 0.0;
  double near_field_radius_m = 0.15;

  void validate() const {
    if (!(c1 >= 0.0 && c2 >= 0.0 && c3 >= 0.0 && near_field_coupling >= 0.0)) {
      throw ConfigError("coupling constants must be nonnegative");
    }
    if (!(near_field_radius_m >= 0.0)) throw ConfigError("near-field radius must be nonnegative");
  }
};

struct NoiseModel {
  double noise_floor_dbm_per_hz = -174.0;
  double noise_figure_db = 7.0;

  double noise_power_dbm(double bandwidth_hz) const {
    return noise_floor_dbm_per_hz + 10.0 * std::log10(bandwidth_hz) + noise_figure_db;
  }
};

/// Rician-K air multipath for antenna-to-antenna links: the line-of-sight
/// matrix plus a scattered part with Kronecker spatial correlation from the
/// Clarke model J0(2 pi s / lambda). One realization is drawn per seed and held
/// fixed across subcarriers.
struct AirMultipath {
  bool enabled = false;
  double k_factor_db = 3.0;
  std::uint64_t seed = 1;
};

/// Everything needed to synthesize channels for a scene.
struct ChannelModel {
  Scene scene;
  AirModel air;
  CouplingConstants coupling;
  int grid = kAutoGrid;  // cells along the longer side; kAutoGrid picks one from the wavelength
  int max_reflection_order = kDefaultMaxReflectionOrder;
  AirMultipath air_multipath;
  // Switches for degenerate configurations: the direct and reflected surface
  // paths, and the antenna-to-antenna air path.
  bool surface_paths = true;
  bool air_paths = true;
};

inline int effective_grid(const ChannelModel& m, double f_max_hz) {
  return m.grid == kAutoGrid ? resolve_grid(m.scene.surface, f_max_hz) : m.grid;
}

enum class PortKind { surface_contact, air_antenna };

inline const char* to_string(PortKind k) { return k == PortKind::surface_contact ? "surface-contact" : "air-antenna"; }

struct Port {
  PortKind kind = PortKind::surface_contact;
  const Node* node = nullptr;
  std::size_t index = 0;  // into node->contacts or node->antennas

  Vec2 contact() const { return node->contacts[index]; }
  Vec3 antenna() const { return node->antennas[index]; }
  std::string label() const {
    return node->id + (kind == PortKind::surface_contact ? ":c" : ":a") + std::to_string(index);
  }
};

/// Ports of every node with the given role, in scene order, contacts first.
inline std::vector<Port> ports(const Scene& scene, Role role) {
  std::vector<Port> out;
  for (const auto& n : scene.nodes) {
    if (n.role != role) continue;
    for (std::size_t k = 0; k < n.contacts.size(); ++k) out.push_back({PortKind::surface_contact, &n, k});
    for (std::size_t k = 0; k < n.antennas.size(); ++k) out.push_back({PortKind::air_antenna, &n, k});
  }
  return out;
}

struct ChannelMatrix {
  Eigen::MatrixXcd h;  // rows: RX ports, columns: TX ports
  double frequency_hz = 0.0;
  std::vector<PortKind> rx_kinds;
  std::vector<PortKind> tx_kinds;
  std::vector<std::string> rx_labels;
  std::vector<std::string> tx_labels;
  std::vector<std::string> warnings;

  Eigen::Index rows() const { return h.rows(); }
  Eigen::Index cols() const { return h.cols(); }
};

namespace detail {

inline void warn_once(std::vector<std::string>* warnings, const std::string& msg) {
  if (warnings != nullptr && std::find(warnings->begin(), warnings->end(), msg) == warnings->end()) {
    warnings->push_back(msg);
  }
}

inline double db_amplitude_factor(double loss_db) { return loss_db > 0.0 ? std::pow(10.0, -loss_db / 20.0) : 1.0; }

// A_S at d, clamping to d0 with a warning instead of failing.
inline Complex clamped_surface_gain(double d, double f_hz, const MaterialParams& m, std::vector<std::string>* warnings) {
  if (d < m.d0()) {
    std::ostringstream os;
    os << "surface path of " << d << " m is shorter than d0 = " << m.d0() << " m; clamped to d0";
    warn_once(warnings, os.str());
    d = m.d0();
  }
  return surface_gain_unchecked(d, f_hz, m);
}

// Contact-to-antenna coupling on one device, tapering to zero at the radius.
inline double near_field_taper(double s, double radius) {
  if (!(s < radius)) return 0.0;
  const double r = s / radius;
  return 1.0 - r * r;
}

}  // namespace detail

/// Direct surface path plus edge reflections up to the model's order.
inline Complex h_ss_paths(Vec2 tx, Vec2 rx, const ChannelModel& model, double f_hz,
                          std::vector<std::string>* warnings = nullptr) {
  if (!model.surface_paths) return 0.0;
  const auto& s = model.scene.surface;
  const auto& m = s.material;
  Complex acc = 0.0;
  for (const auto& img : image_sources(tx, model.max_reflection_order, s)) {
    if (img.reflections > 0 && m.refl_coeff() == 0.0) continue;
    const double weight = std::pow(m.refl_coeff(), img.reflections) *
                          detail::db_amplitude_factor(obstacle_loss_db(img, rx, s, model.scene.obstacles));
    acc += weight * detail::clamped_surface_gain(distance(img.position, rx), f_hz, m, warnings);
  }
  return acc;
}

/// Surface-surface gain: C1 times the surface -> air -> surface integral, plus
/// the direct and reflected surface paths.
inline Complex h_ss(Vec2 tx, Vec2 rx, const ChannelModel& model, double f_hz,
                    detail::SurfaceIntegrator* integrator = nullptr, std::vector<std::string>* warnings = nullptr) {
  Complex g = h_ss_paths(tx, rx, model, f_hz, warnings);
  if (model.coupling.c1 != 0.0) {
    std::optional<detail::SurfaceIntegrator> local;
    if (integrator == nullptr) {
      local.emplace(model.scene.surface, model.scene.obstacles, model.air, effective_grid(model, f_hz), f_hz);
      integrator = &*local;
    }
    g += model.coupling.c1 * integrator->surface_air_surface(tx, rx);
  }
  return g;
}

/// Near-field part of a contact -> antenna entry: the surface path from the
/// contact to each contact of the antenna's own device, coupled into the
/// antenna when it sits within the near-field radius.
inline Complex near_field_term(Vec2 far_contact, Vec3 antenna, std::span<const Vec2> device_contacts,
                               const ChannelModel& model, double f_hz, std::vector<std::string>* warnings = nullptr) {
  const auto& cpl = model.coupling;
  if (cpl.near_field_coupling == 0.0) return 0.0;
  Complex acc = 0.0;
  for (const auto& c : device_contacts) {
    const double s = distance(c, antenna);
    const double taper = detail::near_field_taper(s, cpl.near_field_radius_m);
    if (taper == 0.0) continue;
    const double loss = obstacle_loss_db(far_contact, c, model.scene.obstacles);
    acc += taper * detail::db_amplitude_factor(loss) *
           detail::clamped_surface_gain(distance(far_contact, c), f_hz, model.scene.surface.material, warnings) *
           std::polar(1.0, -kTwoPi * f_hz * s / kSpeedOfLight);
  }
  return cpl.near_field_coupling * acc;
}

/// Surface-air gain from a TX contact to an RX antenna. `rx_device_contacts`
/// are the contacts of the node owning the antenna.
inline Complex h_sa(Vec2 tx_contact, Vec3 rx_antenna, std::span<const Vec2> rx_device_contacts,
                    const ChannelModel& model, double f_hz, detail::SurfaceIntegrator* integrator = nullptr,
                    std::vector<std::string>* warnings = nullptr) {
  Complex g = near_field_term(tx_contact, rx_antenna, rx_device_contacts, model, f_hz, warnings);
  if (model.coupling.c2 != 0.0) {
    std::optional<detail::SurfaceIntegrator> local;
    if (integrator == nullptr) {
      local.emplace(model.scene.surface, model.scene.obstacles, model.air, effective_grid(model, f_hz), f_hz);
      integrator = &*local;
    }
    g += model.coupling.c2 * integrator->surface_air(tx_contact, rx_antenna);
  }
  return g;
}

/// Air-surface gain from a TX antenna to an RX contact; mirror of h_sa.
inline Complex h_as(Vec3 tx_antenna, std::span<const Vec2> tx_device_contacts, Vec2 rx_contact,
                    const ChannelModel& model, double f_hz, detail::SurfaceIntegrator* integrator = nullptr,
                    std::vector<std::string>* warnings = nullptr) {
  Complex g = near_field_term(rx_contact, tx_antenna, tx_device_contacts, model, f_hz, warnings);
  if (model.coupling.c3 != 0.0) {
    std::optional<detail::SurfaceIntegrator> local;
    if (integrator == nullptr) {
      local.emplace(model.scene.surface, model.scene.obstacles, model.air, effective_grid(model, f_hz), f_hz);
      integrator = &*local;
    }
    g += model.coupling.c3 * integrator->surface_air(rx_contact, tx_antenna);
  }
  return g;
}

/// Direct air path between two antennas.
inline Complex h_aa(Vec3 tx_antenna, Vec3 rx_antenna, const AirModel& air, double f_hz) {
  const double d = distance(tx_antenna, rx_antenna);
  if (d == 0.0) throw NearFieldError("h_aa: coincident antennas");
  return air_gain(d, f_hz, air);
}

/// Clarke spatial correlation J0(2 pi s / lambda) between antennas.
inline Eigen::MatrixXd clarke_correlation(std::span<const Vec3> antennas, double f_hz) {
  const auto n = static_cast<Eigen::Index>(antennas.size());
  const double k = kTwoPi * f_hz / kSpeedOfLight;
  Eigen::MatrixXd r(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      r(i, j) = std::cyl_bessel_j(0.0, k * distance(antennas[i], antennas[j]));
    }
  }
  return r;
}

namespace detail {

inline Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& r) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r);
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

// Replace the antenna-antenna block with its Rician-faded counterpart.
inline void apply_air_multipath(ChannelMatrix& cm, const std::vector<Port>& rx, const std::vector<Port>& tx,
                                const AirMultipath& mp, double f_hz) {
  std::vector<Eigen::Index> ri, ti;
  std::vector<Vec3> ra, ta;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    if (rx[i].kind == PortKind::air_antenna) {
      ri.push_back(static_cast<Eigen::Index>(i));
      ra.push_back(rx[i].antenna());
    }
  }
  for (std::size_t j = 0; j < tx.size(); ++j) {
    if (tx[j].kind == PortKind::air_antenna) {
      ti.push_back(static_cast<Eigen::Index>(j));
      ta.push_back(tx[j].antenna());
    }
  }
  if (ri.empty() || ti.empty()) return;
  const auto nr = static_cast<Eigen::Index>(ri.size());
  const auto nt = static_cast<Eigen::Index>(ti.size());
  Eigen::MatrixXcd los(nr, nt);
  for (Eigen::Index i = 0; i < nr; ++i) {
    for (Eigen::Index j = 0; j < nt; ++j) los(i, j) = cm.h(ri[i], ti[j]);
  }
  const double sigma = std::sqrt(los.cwiseAbs2().mean());
  std::mt19937_64 rng(mp.seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  Eigen::MatrixXcd g(nr, nt);
  for (Eigen::Index i = 0; i < nr; ++i) {
    for (Eigen::Index j = 0; j < nt; ++j) {
      const double re = normal(rng);
      const double im = normal(rng);
      g(i, j) = Complex(re, im);
    }
  }
  const Eigen::MatrixXcd rr = psd_sqrt(clarke_correlation(ra, f_hz)).cast<Complex>();
  const Eigen::MatrixXcd rt = psd_sqrt(clarke_correlation(ta, f_hz)).cast<Complex>();
  const double k = db_to_linear(mp.k_factor_db);
  const Eigen::MatrixXcd faded = std::sqrt(k / (k + 1.0)) * los + std::sqrt(1.0 / (k + 1.0)) * sigma * (rr * g * rt);
  for (Eigen::Index i = 0; i < nr; ++i) {
    for (Eigen::Index j = 0; j < nt; ++j) cm.h(ri[i], ti[j]) = faded(i, j);
  }
}

}  // namespace detail

/// Full channel matrix at one frequency: entry (i, j) is the gain from TX port
/// j to RX port i, dispatched on the two port kinds. Pass an integrator built
/// for the same surface, air model, grid and frequency to share its caches.
inline ChannelMatrix build_mimo(const ChannelModel& model, double f_hz,
                                detail::SurfaceIntegrator* integrator = nullptr) {
  model.coupling.validate();
  if (auto v = validate_scene(model.scene); !v.empty()) {
    std::string msg = "invalid scene:";
    for (const auto& s : v) msg += "\n  " + s;
    throw ConfigError(msg);
  }
  const auto rx = ports(model.scene, Role::receiver);
  const auto tx = ports(model.scene, Role::transmitter);
  ChannelMatrix cm;
  cm.frequency_hz = f_hz;
  cm.h.resize(static_cast<Eigen::Index>(rx.size()), static_cast<Eigen::Index>(tx.size()));
  for (const auto& p : rx) {
    cm.rx_kinds.push_back(p.kind);
    cm.rx_labels.push_back(p.label());
  }
  for (const auto& p : tx) {
    cm.tx_kinds.push_back(p.kind);
    cm.tx_labels.push_back(p.label());
  }

  const auto& cpl = model.coupling;
  std::optional<detail::SurfaceIntegrator> local;
  if (integrator == nullptr && (cpl.c1 != 0.0 || cpl.c2 != 0.0 || cpl.c3 != 0.0)) {
    local.emplace(model.scene.surface, model.scene.obstacles, model.air, effective_grid(model, f_hz), f_hz);
    integrator = &*local;
  }

  for (std::size_t i = 0; i < rx.size(); ++i) {
    for (std::size_t j = 0; j < tx.size(); ++j) {
      const auto& r = rx[i];
      const auto& t = tx[j];
      Complex g;
      if (t.kind == PortKind::surface_contact && r.kind == PortKind::surface_contact) {
        g = h_ss(t.contact(), r.contact(), model, f_hz, integrator, &cm.warnings);
      } else if (t.kind == PortKind::surface_contact) {
        g = h_sa(t.contact(), r.antenna(), r.node->contacts, model, f_hz, integrator, &cm.warnings);
      } else if (r.kind == PortKind::surface_contact) {
        g = h_as(t.antenna(), t.node->contacts, r.contact(), model, f_hz, integrator, &cm.warnings);
      } else {
        g = model.air_paths ? h_aa(t.antenna(), r.antenna(), model.air, f_hz) : Complex(0.0);
      }
      cm.h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = g;
    }
  }
  if (model.air_multipath.enabled) detail::apply_air_multipath(cm, rx, tx, model.air_multipath, f_hz);
  if (!cm.h.allFinite()) throw ModelError("build_mimo: non-finite channel entry");
  return cm;
}

inline constexpr double kSubcarrierSpacingHz = 312.5e3;

/// Occupied tone indices (data plus pilots) of a 20 or 40 MHz HT channel.
inline std::vector<int> subcarrier_indices(double bandwidth_hz) {
  std::vector<int> idx;
  const int lo = bandwidth_hz == 40e6 ? 2 : 1;
  const int hi = bandwidth_hz == 40e6 ? 58 : 28;
  for (int k = -hi; k <= -lo; ++k) idx.push_back(k);
  for (int k = lo; k <= hi; ++k) idx.push_back(k);
  return idx;
}

inline int default_subcarrier_count(double bandwidth_hz) {
  return static_cast<int>(subcarrier_indices(bandwidth_hz).size());
}

/// Absolute frequencies of n subcarriers. n = 1 is the center frequency; other
/// counts pick n tones evenly across the occupied set.
inline std::vector<double> subcarrier_frequencies(const FrequencyBand& band, int n) {
  const auto idx = subcarrier_indices(band.bandwidth_hz());
  const int total = static_cast<int>(idx.size());
  if (n < 1 || n > total) {
    throw ConfigError("subcarrier count must lie in [1, " + std::to_string(total) + "] for this bandwidth");
  }
  if (n == 1) return {band.center_hz()};
  std::vector<double> f;
  f.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const auto pick = static_cast<std::size_t>(std::lround(static_cast<double>(k) * (total - 1) / (n - 1)));
    f.push_back(band.center_hz() + idx[pick] * kSubcarrierSpacingHz);
  }
  return f;
}

inline void check_coverage(const FrequencyBand& band, const MaterialParams& m) {
  if (!m.covers(band.low_edge_hz()) || !m.covers(band.high_edge_hz())) {
    std::ostringstream os;
    os << "band " << band.center_hz() / 1e6 << " MHz / " << band.bandwidth_hz() / 1e6
       << " MHz is not covered by material '" << m.name() << "'";
    throw CoverageError(os.str());
  }
}

/// Per-subcarrier channel matrices across the band.
inline std::vector<ChannelMatrix> csi(const ChannelModel& model, const FrequencyBand& band, int n_subcarriers) {
  check_coverage(band, model.scene.surface.material);
  ChannelModel m = model;
  m.grid = effective_grid(model, band.high_edge_hz());
  std::vector<ChannelMatrix> out;
  for (double f : subcarrier_frequencies(band, n_subcarriers)) out.push_back(build_mimo(m, f));
  return out;
}

// ---------------------------------------------------------------------------
// Monte Carlo estimators of the composite integrals (uniform sampling).

struct MonteCarloEstimate {
  Complex value;
  double std_error = 0.0;  // of |value|, per component combined
};

namespace detail {

template <typename Sample>
MonteCarloEstimate monte_carlo_mean(std::size_t samples, Sample&& draw) {
  if (samples < 2) throw ConfigError("Monte Carlo estimator needs at least 2 samples");
  Complex sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t k = 0; k < samples; ++k) {
    const Complex v = draw();
    sum += v;
    sum_sq += std::norm(v);
  }
  const double n = static_cast<double>(samples);
  const Complex mean = sum / n;
  const double var = std::max(0.0, (sum_sq / n - std::norm(mean)) * n / (n - 1.0));
  return {mean, std::sqrt(var / n)};
}

}  // namespace detail

/// Unbiased estimate of  integral A_S(|c - p|) A_air(|p - a|) dp  over the surface.
inline MonteCarloEstimate monte_carlo_surface_air(Vec2 contact, Vec3 antenna, const SurfaceSpec& s,
                                                  const AirModel& air, double f_hz, std::size_t samples,
                                                  std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(0.0, s.width_m), uy(0.0, s.height_m);
  const double area = s.width_m * s.height_m;
  auto est = detail::monte_carlo_mean(samples, [&] {
    const Vec2 p{ux(rng), uy(rng)};
    const double d1 = std::max(distance(contact, p), s.material.d0());
    const double d2 = std::max(distance(p, antenna), air.d0_m);
    return area * detail::surface_gain_unchecked(d1, f_hz, s.material) * detail::air_gain_unchecked(d2, f_hz, air);
  });
  return est;
}

/// Unbiased estimate of  double integral A_S(|t - p1|) A_air(|p1 - p2|) A_S(|p2 - r|).
inline MonteCarloEstimate monte_carlo_surface_air_surface(Vec2 tx, Vec2 rx, const SurfaceSpec& s,
                                                          const AirModel& air, double f_hz, std::size_t samples,
                                                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(0.0, s.width_m), uy(0.0, s.height_m);
  const double area = s.width_m * s.height_m;
  const double d0 = s.material.d0();
  return detail::monte_carlo_mean(samples, [&] {
    const Vec2 p1{ux(rng), uy(rng)};
    const Vec2 p2{ux(rng), uy(rng)};
    return area * area * detail::surface_gain_unchecked(std::max(distance(tx, p1), d0), f_hz, s.material) *
           detail::air_gain_unchecked(std::max(distance(p1, p2), air.d0_m), f_hz, air) *
           detail::surface_gain_unchecked(std::max(distance(p2, rx), d0), f_hz, s.material);
  });
}

// ---------------------------------------------------------------------------
// Impulse responses.

enum class TapKind { direct_surface, image_surface, near_field, integral_cluster, air };

inline const char* to_string(TapKind k) {
  switch (k) {
    case TapKind::direct_surface: return "direct-surface";
    case TapKind::image_surface: return "image-surface";
    case TapKind::near_field: return "near-field";
    case TapKind::integral_cluster: return "integral-cluster";
    case TapKind::air: return "air";
  }
  return "?";
}

struct Tap {
  double delay_s;
  Complex amplitude;
  TapKind kind;
};

class ImpulseResponse {
 public:
  /// Sorts the taps, merges exactly equal delays and checks the invariants.
  ImpulseResponse(std::vector<Tap> taps, double reference_bandwidth_hz) : bandwidth_(reference_bandwidth_hz) {
    std::stable_sort(taps.begin(), taps.end(), [](const Tap& a, const Tap& b) { return a.delay_s < b.delay_s; });
    for (const auto& t : taps) {
      if (!taps_.empty() && taps_.back().delay_s == t.delay_s) {
        taps_.back().amplitude += t.amplitude;
        if (t.kind == TapKind::direct_surface || t.kind == TapKind::image_surface) taps_.back().kind = t.kind;
      } else {
        taps_.push_back(t);
      }
    }
    if (taps_.empty()) throw ModelError("impulse response: no propagation path between the ports");
    if (!(taps_.front().delay_s > 0.0)) throw ModelError("impulse response: first tap delay must be positive");
  }

  const std::vector<Tap>& taps() const { return taps_; }
  double reference_bandwidth_hz() const { return bandwidth_; }

  /// Delay of the earliest direct or reflected surface tap, if any.
  std::optional<double> first_surface_arrival() const {
    for (const auto& t : taps_) {
      if (t.kind == TapKind::direct_surface || t.kind == TapKind::image_surface) return t.delay_s;
    }
    return std::nullopt;
  }

  double total_power() const {
    double p = 0.0;
    for (const auto& t : taps_) p += std::norm(t.amplitude);
    return p;
  }

  double mean_delay() const {
    double p = 0.0, m = 0.0;
    for (const auto& t : taps_) {
      p += std::norm(t.amplitude);
      m += std::norm(t.amplitude) * t.delay_s;
    }
    return p > 0.0 ? m / p : 0.0;
  }

  /// Power-weighted RMS delay spread.
  double rms_delay_spread() const {
    const double mu = mean_delay();
    double p = 0.0, v = 0.0;
    for (const auto& t : taps_) {
      p += std::norm(t.amplitude);
      v += std::norm(t.amplitude) * (t.delay_s - mu) * (t.delay_s - mu);
    }
    return p > 0.0 ? std::sqrt(v / p) : 0.0;
  }

 private:
  std::vector<Tap> taps_;
  double bandwidth_;
};

struct ImpulseOptions {
  double center_hz = 2.437e9;
  double bandwidth_hz = 1e9;  // integral clusters are binned at 1 / bandwidth
  int integral_grid = kDefaultImpulseGrid;
};

namespace detail {

class DelayBins {
 public:
  explicit DelayBins(double width) : width_(width) {}
  void add(double delay, Complex a) { bins_[static_cast<long long>(std::floor(delay / width_))] += a; }
  void flush(std::vector<Tap>& taps) const {
    for (const auto& [k, a] : bins_) {
      if (a != Complex(0.0)) taps.push_back({(static_cast<double>(k) + 0.5) * width_, a, TapKind::integral_cluster});
    }
  }

 private:
  double width_;
  std::map<long long, Complex> bins_;
};

struct CoarseCell {
  Vec2 p;
  double area;
};

inline std::vector<CoarseCell> coarse_cells(const SurfaceSpec& s, int n) {
  const auto g = make_grid(s, n);
  std::vector<CoarseCell> cells;
  for (int i = 0; i < g.nx; ++i) {
    for (int j = 0; j < g.ny; ++j) cells.push_back({g.center(i, j), g.cell_area()});
  }
  return cells;
}

}  // namespace detail

/// Tapped-delay-line response between one TX port and one RX port. Surface
/// segments travel at the phase velocity, air segments at c. Integral terms
/// are evaluated on a coarse grid and grouped into delay bins.
inline ImpulseResponse impulse_response(const Port& tx, const Port& rx, const ChannelModel& model,
                                        const ImpulseOptions& opt = {}) {
  const auto& s = model.scene.surface;
  const auto& m = s.material;
  const double f = opt.center_hz;
  const double v = phase_velocity(f, m);
  const auto& cpl = model.coupling;
  std::vector<Tap> taps;
  detail::DelayBins bins(1.0 / opt.bandwidth_hz);

  auto surface_amp = [&](Vec2 a, Vec2 b) {
    return detail::db_amplitude_factor(obstacle_loss_db(a, b, model.scene.obstacles)) *
           detail::surface_gain_unchecked(std::max(distance(a, b), m.d0()), f, m);
  };
  auto air_amp = [&](double d) { return detail::air_gain_unchecked(std::max(d, model.air.d0_m), f, model.air); };

  auto near_field_taps = [&](Vec2 far, Vec3 antenna, const std::vector<Vec2>& device_contacts) {
    if (cpl.near_field_coupling == 0.0) return;
    for (const auto& c : device_contacts) {
      const double sd = distance(c, antenna);
      const double taper = detail::near_field_taper(sd, cpl.near_field_radius_m);
      if (taper == 0.0) continue;
      taps.push_back({distance(far, c) / v + sd / kSpeedOfLight,
                      cpl.near_field_coupling * taper * surface_amp(far, c) *
                          std::polar(1.0, -kTwoPi * f * sd / kSpeedOfLight),
                      TapKind::near_field});
    }
  };
  auto surface_air_taps = [&](Vec2 contact, Vec3 antenna, double c) {
    if (c == 0.0) return;
    for (const auto& cell : detail::coarse_cells(s, opt.integral_grid)) {
      const double d1 = distance(contact, cell.p);
      const double d2 = distance(cell.p, antenna);
      bins.add(d1 / v + d2 / kSpeedOfLight, c * cell.area * surface_amp(contact, cell.p) * air_amp(d2));
    }
  };

  if (tx.kind == PortKind::surface_contact && rx.kind == PortKind::surface_contact) {
    const Vec2 a = tx.contact();
    const Vec2 b = rx.contact();
    for (const auto& img : image_sources(a, model.max_reflection_order, s)) {
      if (img.reflections > 0 && m.refl_coeff() == 0.0) continue;
      const double L = std::max(distance(img.position, b), m.d0());
      const double w = std::pow(m.refl_coeff(), img.reflections) *
                       detail::db_amplitude_factor(obstacle_loss_db(img, b, s, model.scene.obstacles));
      taps.push_back({L / v, w * detail::surface_gain_unchecked(L, f, m),
                      img.reflections == 0 ? TapKind::direct_surface : TapKind::image_surface});
    }
    if (cpl.c1 != 0.0) {
      const auto cells = detail::coarse_cells(s, opt.integral_grid);
      std::vector<Complex> ua, ub;
      for (const auto& cell : cells) {
        ua.push_back(cell.area * surface_amp(a, cell.p));
        ub.push_back(cell.area * surface_amp(cell.p, b));
      }
      for (std::size_t i = 0; i < cells.size(); ++i) {
        const double t1 = distance(a, cells[i].p) / v;
        for (std::size_t j = 0; j < cells.size(); ++j) {
          const double d2 = distance(cells[i].p, cells[j].p);
          bins.add(t1 + d2 / kSpeedOfLight + distance(cells[j].p, b) / v, cpl.c1 * ua[i] * air_amp(d2) * ub[j]);
        }
      }
    }
  } else if (tx.kind == PortKind::surface_contact) {
    near_field_taps(tx.contact(), rx.antenna(), rx.node->contacts);
    surface_air_taps(tx.contact(), rx.antenna(), cpl.c2);
  } else if (rx.kind == PortKind::surface_contact) {
    near_field_taps(rx.contact(), tx.antenna(), tx.node->contacts);
    surface_air_taps(rx.contact(), tx.antenna(), cpl.c3);
  } else {
    const double d = distance(tx.antenna(), rx.antenna());
    taps.push_back({d / kSpeedOfLight, air_gain(d, f, model.air), TapKind::air});
  }
  bins.flush(taps);
  return ImpulseResponse(std::move(taps), opt.bandwidth_hz);
}

}  // namespace surfmimo
