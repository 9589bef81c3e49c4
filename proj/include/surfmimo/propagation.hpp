#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "surfmimo/constants.hpp"
#include "surfmimo/error.hpp"

namespace surfmimo {

using Complex = std::complex<double>;

enum class IsmBand { ism_915mhz, ism_2_4ghz, ism_5ghz };

inline const char* to_string(IsmBand band) {
  switch (band) {
    case IsmBand::ism_915mhz: return "915MHz";
    case IsmBand::ism_2_4ghz: return "2.4GHz";
    case IsmBand::ism_5ghz: return "5GHz";
  }
  return "?";
}

/// A Wi-Fi style channel: center frequency plus a 20 or 40 MHz bandwidth that
/// must fit inside one of the unlicensed bands used by the hardware.
class FrequencyBand {
 public:
  FrequencyBand(double center_hz, double bandwidth_hz) : center_hz_(center_hz), bandwidth_hz_(bandwidth_hz) {
    if (!(center_hz > 0.0) || !std::isfinite(center_hz)) {
      throw ConfigError("frequency band: center frequency must be positive");
    }
    if (bandwidth_hz != 20e6 && bandwidth_hz != 40e6) {
      throw ConfigError("frequency band: bandwidth must be 20 MHz or 40 MHz");
    }
    const double lo = center_hz - bandwidth_hz / 2.0;
    const double hi = center_hz + bandwidth_hz / 2.0;
    struct Range {
      IsmBand id;
      double lo, hi;
    };
    static constexpr Range kRanges[] = {
        {IsmBand::ism_915mhz, 902e6, 928e6},
        {IsmBand::ism_2_4ghz, 2400e6, 2483.5e6},
        {IsmBand::ism_5ghz, 5150e6, 5850e6},
    };
    for (const auto& r : kRanges) {
      if (lo >= r.lo && hi <= r.hi) {
        band_id_ = r.id;
        return;
      }
    }
    std::ostringstream os;
    os << "frequency band: " << center_hz / 1e6 << " MHz +/- " << bandwidth_hz / 2e6
       << " MHz is not inside the 915 MHz, 2.4 GHz or 5 GHz ISM bands";
    throw ConfigError(os.str());
  }

  double center_hz() const { return center_hz_; }
  double bandwidth_hz() const { return bandwidth_hz_; }
  IsmBand band_id() const { return band_id_; }
  double angular_frequency() const { return kTwoPi * center_hz_; }
  double low_edge_hz() const { return center_hz_ - bandwidth_hz_ / 2.0; }
  double high_edge_hz() const { return center_hz_ + bandwidth_hz_ / 2.0; }

  friend bool operator==(const FrequencyBand&, const FrequencyBand&) = default;

 private:
  double center_hz_;
  double bandwidth_hz_;
  IsmBand band_id_{};
};

struct MaterialBandPoint {
  double frequency_hz;
  double alpha_np_per_m;
  double beta_rad_per_m;
};

/// Transmission-line constants of a conductive surface. alpha(f) and beta(f)
/// are tabulated per frequency and linearly interpolated in between; queries
/// outside the table are a coverage error rather than an extrapolation.
class MaterialParams {
 public:
  MaterialParams(std::string name, std::vector<MaterialBandPoint> table, double d0_m, double refl_coeff)
      : name_(std::move(name)), table_(std::move(table)), d0_m_(d0_m), refl_coeff_(refl_coeff) {
    if (table_.empty()) throw ConfigError("material '" + name_ + "': empty frequency table");
    std::sort(table_.begin(), table_.end(),
              [](const auto& a, const auto& b) { return a.frequency_hz < b.frequency_hz; });
    if (!(d0_m_ > 0.0)) throw ConfigError("material '" + name_ + "': d0 must be positive");
    if (!(refl_coeff_ >= 0.0 && refl_coeff_ <= 1.0)) {
      throw ConfigError("material '" + name_ + "': reflection coefficient must lie in [0, 1]");
    }
    for (std::size_t i = 0; i < table_.size(); ++i) {
      const auto& p = table_[i];
      if (!(p.frequency_hz > 0.0)) throw ConfigError("material '" + name_ + "': frequency must be positive");
      if (!(p.alpha_np_per_m > 0.0)) throw ConfigError("material '" + name_ + "': alpha must be positive");
      if (!(p.beta_rad_per_m > 0.0)) throw ConfigError("material '" + name_ + "': beta must be positive");
      // v = omega / beta must stay below c at every tabulated point; linear
      // interpolation then keeps it below c everywhere in between.
      if (p.beta_rad_per_m <= kTwoPi * p.frequency_hz / kSpeedOfLight) {
        throw DegenerateMaterialError("material '" + name_ + "': phase velocity is not below the speed of light");
      }
      if (i > 0) {
        const auto& q = table_[i - 1];
        if (p.frequency_hz == q.frequency_hz) {
          throw ConfigError("material '" + name_ + "': duplicate frequency in table");
        }
        if (p.alpha_np_per_m < q.alpha_np_per_m || p.beta_rad_per_m < q.beta_rad_per_m) {
          throw ConfigError("material '" + name_ + "': alpha and beta must be nondecreasing in frequency");
        }
      }
    }
  }

  /// Good-conductor approximation alpha = beta = sqrt(pi f mu sigma), tabulated
  /// at the requested frequencies.
  static MaterialParams from_conductor(std::string name, double conductivity_s_per_m, double permeability_h_per_m,
                                       std::span<const double> frequencies_hz, double d0_m, double refl_coeff) {
    if (!(conductivity_s_per_m > 0.0) || !(permeability_h_per_m > 0.0)) {
      throw ConfigError("conductor material: conductivity and permeability must be positive");
    }
    std::vector<MaterialBandPoint> table;
    for (double f : frequencies_hz) {
      const double k = std::sqrt(kPi * f * permeability_h_per_m * conductivity_s_per_m);
      table.push_back({f, k, k});
    }
    return MaterialParams(std::move(name), std::move(table), d0_m, refl_coeff);
  }

  const std::string& name() const { return name_; }
  const std::vector<MaterialBandPoint>& table() const { return table_; }
  double d0() const { return d0_m_; }
  double refl_coeff() const { return refl_coeff_; }

  double min_frequency() const { return table_.front().frequency_hz; }
  double max_frequency() const { return table_.back().frequency_hz; }
  bool covers(double f_hz) const { return f_hz >= min_frequency() && f_hz <= max_frequency(); }

  double alpha(double f_hz) const { return interpolate(f_hz, &MaterialBandPoint::alpha_np_per_m); }
  double beta(double f_hz) const { return interpolate(f_hz, &MaterialBandPoint::beta_rad_per_m); }

  MaterialParams with_refl_coeff(double refl) const {
    return MaterialParams(name_, table_, d0_m_, refl);
  }

 private:
  double interpolate(double f_hz, double MaterialBandPoint::*field) const {
    if (!covers(f_hz)) {
      std::ostringstream os;
      os << "material '" << name_ << "': " << f_hz / 1e6 << " MHz is outside the tabulated range ["
         << min_frequency() / 1e6 << ", " << max_frequency() / 1e6 << "] MHz";
      throw CoverageError(os.str());
    }
    auto hi = std::lower_bound(table_.begin(), table_.end(), f_hz,
                               [](const MaterialBandPoint& p, double f) { return p.frequency_hz < f; });
    if (hi->frequency_hz == f_hz || hi == table_.begin()) return (*hi).*field;
    auto lo = std::prev(hi);
    const double t = (f_hz - lo->frequency_hz) / (hi->frequency_hz - lo->frequency_hz);
    return (*lo).*field + t * ((*hi).*field - (*lo).*field);
  }

  std::string name_;
  std::vector<MaterialBandPoint> table_;
  double d0_m_;
  double refl_coeff_;
};

/// Over-the-air amplitude law (d0/d)^exponent. exponent 2 follows the surface
/// model's literal d0^2/d^2 form; exponent 1 is the usual Friis amplitude.
struct AirModel {
  double d0_m = 0.05;
  double exponent = 2.0;
};

namespace detail {

inline Complex surface_gain_unchecked(double d, double f_hz, const MaterialParams& m) {
  const double a = m.alpha(f_hz);
  const double b = m.beta(f_hz);
  return std::polar(std::exp(-a * d) * (m.d0() / d), -b * d);
}

inline Complex air_gain_unchecked(double d, double f_hz, const AirModel& air) {
  const double mag = air.exponent == 2.0 ? (air.d0_m / d) * (air.d0_m / d) : std::pow(air.d0_m / d, air.exponent);
  return std::polar(mag, -kTwoPi * f_hz * d / kSpeedOfLight);
}

}  // namespace detail

/// Complex amplitude gain of the surface path over distance d:
/// exp(-alpha d) exp(-j beta d) d0/d.
inline Complex surface_gain(double d, double f_hz, const MaterialParams& m) {
  if (!(d > 0.0) || !std::isfinite(d)) throw DomainError("surface_gain: distance must be positive and finite");
  if (d < m.d0()) {
    std::ostringstream os;
    os << "surface_gain: distance " << d << " m is below the reference distance d0 = " << m.d0() << " m";
    throw NearFieldError(os.str());
  }
  return detail::surface_gain_unchecked(d, f_hz, m);
}

inline Complex surface_gain(double d, const FrequencyBand& band, const MaterialParams& m) {
  return surface_gain(d, band.center_hz(), m);
}

/// Complex amplitude gain over air: exp(-j omega d / c) (d0/d)^p.
inline Complex air_gain(double d, double f_hz, const AirModel& air = {}) {
  if (!(d > 0.0) || !std::isfinite(d)) throw DomainError("air_gain: distance must be positive and finite");
  if (d < air.d0_m) {
    std::ostringstream os;
    os << "air_gain: distance " << d << " m is below the air reference distance " << air.d0_m << " m";
    throw NearFieldError(os.str());
  }
  return detail::air_gain_unchecked(d, f_hz, air);
}

inline Complex air_gain(double d, const FrequencyBand& band, const AirModel& air = {}) {
  return air_gain(d, band.center_hz(), air);
}

/// omega / beta(f). Surface materials must propagate slower than light.
inline double phase_velocity(double f_hz, const MaterialParams& m) {
  const double b = m.beta(f_hz);
  if (!(b > 0.0)) throw DegenerateMaterialError("phase_velocity: beta is zero");
  const double v = kTwoPi * f_hz / b;
  if (!(v < kSpeedOfLight)) {
    throw DegenerateMaterialError("phase_velocity: surface phase velocity is not below the speed of light");
  }
  return v;
}

inline double phase_velocity(const FrequencyBand& band, const MaterialParams& m) {
  return phase_velocity(band.center_hz(), m);
}

struct AttenuationSample {
  double distance_m;
  double power_dbm;
};

struct CalibrationResult {
  double alpha_np_per_m = 0.0;
  double d0_m = 0.0;
  double residual_rms_db = 0.0;
  bool alpha_clamped = false;
  std::vector<std::string> warnings;
};

inline constexpr double kMinFittedAlpha = 1e-9;

/// Least-squares fit of (alpha, d0) to received-power samples. In dB the
/// surface model is linear in distance once the spreading term is moved to the
/// left:  P + 20 log10(d) - P_tx = 20 log10(d0) - (20 / ln 10) alpha d.
inline CalibrationResult calibrate(std::span<const AttenuationSample> samples, double tx_power_dbm) {
  if (samples.size() < 3) throw FitError("calibrate: at least three samples are required");
  const double n = static_cast<double>(samples.size());
  double mean_d = 0.0;
  double mean_y = 0.0;
  std::vector<double> y;
  y.reserve(samples.size());
  for (const auto& s : samples) {
    if (!(s.distance_m > 0.0) || !std::isfinite(s.distance_m) || !std::isfinite(s.power_dbm)) {
      throw FitError("calibrate: distances must be positive and powers finite");
    }
    y.push_back(s.power_dbm + 20.0 * std::log10(s.distance_m) - tx_power_dbm);
    mean_d += s.distance_m;
    mean_y += y.back();
  }
  mean_d /= n;
  mean_y /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double dx = samples[i].distance_m - mean_d;
    sxx += dx * dx;
    sxy += dx * (y[i] - mean_y);
  }
  if (!(sxx > 1e-12 * (1.0 + mean_d * mean_d))) {
    throw FitError("calibrate: samples do not span more than one distance");
  }
  constexpr double kDbPerNeper = 20.0 / std::numbers::ln10;
  const double slope = sxy / sxx;
  CalibrationResult r;
  double intercept = mean_y - slope * mean_d;
  r.alpha_np_per_m = -slope / kDbPerNeper;
  if (r.alpha_np_per_m < kMinFittedAlpha) {
    std::ostringstream os;
    os << "calibrate: fitted alpha " << r.alpha_np_per_m << " Np/m is not positive; clamped to " << kMinFittedAlpha
       << " and d0 refitted";
    r.warnings.push_back(os.str());
    r.alpha_clamped = true;
    r.alpha_np_per_m = kMinFittedAlpha;
    intercept = mean_y + kDbPerNeper * r.alpha_np_per_m * mean_d;
  }
  r.d0_m = std::pow(10.0, intercept / 20.0);
  double ss = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double e = y[i] - (intercept - kDbPerNeper * r.alpha_np_per_m * samples[i].distance_m);
    ss += e * e;
  }
  r.residual_rms_db = std::sqrt(ss / n);
  return r;
}

/// Forward model used by calibration: received power in dBm at distance d.
inline double received_power_dbm(double tx_power_dbm, double d, double f_hz, const MaterialParams& m) {
  return tx_power_dbm + amplitude_db(std::abs(surface_gain(d, f_hz, m)));
}

}  // namespace surfmimo
