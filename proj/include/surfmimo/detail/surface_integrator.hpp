#pragma once

#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <tuple>
#include <utility>
#include <vector>

#include "surfmimo/detail/fft.hpp"
#include "surfmimo/error.hpp"
#include "surfmimo/geometry.hpp"
#include "surfmimo/propagation.hpp"

namespace surfmimo {

/// Uniform cell-midpoint grid over the surface. `n` cells go along the longer
/// side; the shorter side gets the count that keeps cells closest to square.
struct SurfaceGrid {
  int nx = 0;
  int ny = 0;
  double dx = 0.0;
  double dy = 0.0;

  double cell_area() const { return dx * dy; }
  std::size_t cells() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  Vec2 center(int i, int j) const { return {(i + 0.5) * dx, (j + 0.5) * dy}; }
};

inline SurfaceGrid make_grid(const SurfaceSpec& s, int n) {
  if (n < 2) throw ConfigError("integration grid needs at least 2 points per dimension");
  const double longer = std::max(s.width_m, s.height_m);
  const double shorter = std::min(s.width_m, s.height_m);
  const int m = std::max(2, static_cast<int>(std::lround(n * shorter / longer)));
  SurfaceGrid g;
  g.nx = s.width_m >= s.height_m ? n : m;
  g.ny = s.width_m >= s.height_m ? m : n;
  g.dx = s.width_m / g.nx;
  g.dy = s.height_m / g.ny;
  return g;
}

namespace detail {

/// Riemann sums of the composite surface/air integrals at one frequency.
///
/// The double surface integral  sum_{p1,p2} u(p1) K(p1 - p2) w(p2)  has a
/// kernel that depends only on the cell offset, so it is evaluated as an FFT
/// convolution of K with w followed by a dot product with u. Per-contact
/// fields and convolutions are cached, so one integrator serves every entry
/// of every matrix built at this frequency. Not thread-safe; use one per
/// thread.
class SurfaceIntegrator {
 public:
  SurfaceIntegrator(const SurfaceSpec& surface, const std::vector<Obstacle>& obstacles, const AirModel& air, int grid,
                    double f_hz)
      : surface_(surface), obstacles_(obstacles), air_(air), grid_(make_grid(surface, grid)), f_hz_(f_hz),
        alpha_(surface.material.alpha(f_hz)), beta_(surface.material.beta(f_hz)) {}

  const SurfaceGrid& grid() const { return grid_; }
  double frequency_hz() const { return f_hz_; }

  /// A_S from a contact to every cell center, distances clamped to d0 and
  /// obstacle losses applied per straight segment.
  const std::vector<Complex>& surface_field(Vec2 contact) {
    auto key = std::make_pair(contact.x, contact.y);
    auto it = surface_fields_.find(key);
    if (it != surface_fields_.end()) return it->second;
    const double d0 = surface_.material.d0();
    std::vector<Complex> u(grid_.cells());
    for (int i = 0; i < grid_.nx; ++i) {
      for (int j = 0; j < grid_.ny; ++j) {
        const Vec2 p = grid_.center(i, j);
        const double d = std::max(distance(contact, p), d0);
        double mag = std::exp(-alpha_ * d) * d0 / d;
        if (!obstacles_.empty()) {
          const double loss = obstacle_loss_db(contact, p, obstacles_);
          if (loss > 0.0) mag *= std::pow(10.0, -loss / 20.0);
        }
        u[index(i, j)] = std::polar(mag, -beta_ * d);
      }
    }
    return surface_fields_.emplace(key, std::move(u)).first->second;
  }

  /// A_air from every cell center up to an antenna, distances clamped to d0_air.
  const std::vector<Complex>& air_field(Vec3 antenna) {
    auto key = std::make_tuple(antenna.x, antenna.y, antenna.z);
    auto it = air_fields_.find(key);
    if (it != air_fields_.end()) return it->second;
    std::vector<Complex> a(grid_.cells());
    for (int i = 0; i < grid_.nx; ++i) {
      for (int j = 0; j < grid_.ny; ++j) {
        const double d = std::max(distance(grid_.center(i, j), antenna), air_.d0_m);
        a[index(i, j)] = air_gain_unchecked(d, f_hz_, air_);
      }
    }
    return air_fields_.emplace(key, std::move(a)).first->second;
  }

  /// sum_p A_S(|c - p|) A_air(|p - a|) dA
  Complex surface_air(Vec2 contact, Vec3 antenna) {
    const auto& u = surface_field(contact);
    const auto& a = air_field(antenna);
    Complex acc = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) acc += u[k] * a[k];
    return acc * grid_.cell_area();
  }

  /// sum_{p1,p2} A_S(|t - p1|) A_air(|p1 - p2|) A_S(|p2 - r|) dA^2
  Complex surface_air_surface(Vec2 tx, Vec2 rx) {
    const auto& conv = convolved_field(tx);
    const auto& u = surface_field(rx);
    Complex acc = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) acc += u[k] * conv[k];
    const double da = grid_.cell_area();
    return acc * (da * da);
  }

 private:
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(i) * grid_.ny + j; }

  // (K * w)(p) at every cell for w = surface_field(c). Sweeps keep the
  // transmitter fixed, so the convolution is taken on that side.
  const std::vector<Complex>& convolved_field(Vec2 c) {
    auto key = std::make_pair(c.x, c.y);
    auto it = convolutions_.find(key);
    if (it != convolutions_.end()) return it->second;
    ensure_kernel();
    const auto& w = surface_field(c);
    const int py = fft_->cols();
    auto buf = fft_->make_buffer();
    for (int i = 0; i < grid_.nx; ++i) {
      for (int j = 0; j < grid_.ny; ++j) {
        buf[static_cast<std::size_t>(i) * py + j] = w[index(i, j)];
      }
    }
    fft_->forward(buf.get());
    const std::size_t total = fft_->size();
    for (std::size_t k = 0; k < total; ++k) buf[k] *= kernel_spectrum_[k];
    fft_->backward(buf.get());
    const double norm = 1.0 / static_cast<double>(total);
    std::vector<Complex> out(grid_.cells());
    for (int i = 0; i < grid_.nx; ++i) {
      for (int j = 0; j < grid_.ny; ++j) {
        out[index(i, j)] = buf[static_cast<std::size_t>(i) * py + j] * norm;
      }
    }
    return convolutions_.emplace(key, std::move(out)).first->second;
  }

  // Circular embedding of the offset kernel in a (2 nx) x (2 ny) array; with
  // that padding the circular convolution equals the linear one on the grid.
  void ensure_kernel() {
    if (fft_) return;
    const int px = 2 * grid_.nx;
    const int py = 2 * grid_.ny;
    fft_ = std::make_unique<Fft2d>(px, py);
    kernel_spectrum_ = fft_->make_buffer();
    for (int ox = 0; ox < grid_.nx; ++ox) {
      for (int oy = 0; oy < grid_.ny; ++oy) {
        const double d = std::max(std::hypot(ox * grid_.dx, oy * grid_.dy), air_.d0_m);
        const Complex k = air_gain_unchecked(d, f_hz_, air_);
        const int xs[2] = {ox, ox == 0 ? 0 : px - ox};
        const int ys[2] = {oy, oy == 0 ? 0 : py - oy};
        for (int a : xs) {
          for (int b : ys) kernel_spectrum_[static_cast<std::size_t>(a) * py + b] = k;
        }
      }
    }
    fft_->forward(kernel_spectrum_.get());
  }

  SurfaceSpec surface_;
  std::vector<Obstacle> obstacles_;
  AirModel air_;
  SurfaceGrid grid_;
  double f_hz_;
  double alpha_;
  double beta_;
  std::unique_ptr<Fft2d> fft_;
  FftwBuffer kernel_spectrum_;
  std::map<std::pair<double, double>, std::vector<Complex>> surface_fields_;
  std::map<std::tuple<double, double, double>, std::vector<Complex>> air_fields_;
  std::map<std::pair<double, double>, std::vector<Complex>> convolutions_;
};

}  // namespace detail
}  // namespace surfmimo
