#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "surfmimo/error.hpp"
#include "surfmimo/propagation.hpp"

namespace surfmimo {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

inline double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }
inline double distance(Vec3 a, Vec3 b) { return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) + (a.z - b.z) * (a.z - b.z)); }
inline double distance(Vec2 a, Vec3 b) { return distance(Vec3{a.x, a.y, 0.0}, b); }
inline double distance(Vec3 a, Vec2 b) { return distance(b, a); }

inline constexpr int kDefaultMaxReflectionOrder = 3;

/// Rectangular conductive sheet lying in the z = 0 plane, spanning
/// [0, width] x [0, height]. Thickness is not modeled.
struct SurfaceSpec {
  double width_m;
  double height_m;
  MaterialParams material;

  bool contains(Vec2 p) const { return p.x >= 0.0 && p.x <= width_m && p.y >= 0.0 && p.y <= height_m; }
};

enum class Role { transmitter, receiver };

inline const char* to_string(Role r) { return r == Role::transmitter ? "transmitter" : "receiver"; }

/// A device: its surface contacts (points on the sheet) and its air antennas.
struct Node {
  std::string id;
  Role role = Role::transmitter;
  std::vector<Vec2> contacts;
  std::vector<Vec3> antennas;

  std::size_t port_count() const { return contacts.size() + antennas.size(); }
};

enum class ObstacleKind { metal, plastic, wood };

inline const char* to_string(ObstacleKind k) {
  switch (k) {
    case ObstacleKind::metal: return "metal";
    case ObstacleKind::plastic: return "plastic";
    case ObstacleKind::wood: return "wood";
  }
  return "?";
}

struct Rect {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;
};

inline constexpr double kDefaultObstacleLossDb = 3.0;

/// An object resting on the surface. Surface paths whose straight line
/// crosses the footprint pick up perturbation_db of extra loss.
struct Obstacle {
  ObstacleKind kind = ObstacleKind::metal;
  Rect footprint;
  double perturbation_db = kDefaultObstacleLossDb;
};

struct Scene {
  SurfaceSpec surface;
  std::vector<Node> nodes;
  std::vector<Obstacle> obstacles;

  std::vector<const Node*> nodes_with_role(Role r) const {
    std::vector<const Node*> out;
    for (const auto& n : nodes) {
      if (n.role == r) out.push_back(&n);
    }
    return out;
  }
};

struct ImageSource {
  Vec2 position;
  int reflections = 0;
  int cell_x = 0;  // index of the mirrored copy of the surface holding this image
  int cell_y = 0;
};

namespace detail {

// Coordinate of point u in copy i of the interval [0, L] tiled by reflection.
inline double mirror_coord(double u, double length, int i) {
  return i * length + ((i % 2 != 0) ? length - u : u);
}

}  // namespace detail

/// Mirror images of p across the four edges, ring by ring. Image (i, j) lies
/// in copy (i, j) of the tiled plane and reaches an interior point after
/// |i| + |j| edge bounces, so corner images of the first ring count two.
/// Order k returns the (2k + 1)^2 images of rings 0..k.
inline std::vector<ImageSource> image_sources(Vec2 p, int order, const SurfaceSpec& s) {
  if (order < 0) throw DomainError("image_sources: reflection order must be nonnegative");
  if (!s.contains(p)) {
    std::ostringstream os;
    os << "image_sources: point (" << p.x << ", " << p.y << ") is outside the surface";
    throw DomainError(os.str());
  }
  std::vector<ImageSource> out;
  out.reserve(static_cast<std::size_t>((2 * order + 1) * (2 * order + 1)));
  for (int ring = 0; ring <= order; ++ring) {
    for (int i = -ring; i <= ring; ++i) {
      for (int j = -ring; j <= ring; ++j) {
        if (std::max(std::abs(i), std::abs(j)) != ring) continue;
        out.push_back({{detail::mirror_coord(p.x, s.width_m, i), detail::mirror_coord(p.y, s.height_m, j)},
                       std::abs(i) + std::abs(j),
                       i,
                       j});
      }
    }
  }
  return out;
}

namespace detail {

// Liang-Barsky: does the open segment a-b pass through the rectangle?
inline bool segment_crosses(Vec2 a, Vec2 b, const Rect& r) {
  double t0 = 0.0;
  double t1 = 1.0;
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double p[4] = {-dx, dx, -dy, dy};
  const double q[4] = {a.x - r.x0, r.x1 - a.x, a.y - r.y0, r.y1 - a.y};
  for (int k = 0; k < 4; ++k) {
    if (p[k] == 0.0) {
      if (q[k] < 0.0) return false;
    } else {
      const double t = q[k] / p[k];
      if (p[k] < 0.0) {
        t0 = std::max(t0, t);
      } else {
        t1 = std::min(t1, t);
      }
      if (t0 > t1) return false;
    }
  }
  return t1 > t0;
}

inline Rect mirror_rect(const Rect& r, const SurfaceSpec& s, int i, int j) {
  const double xa = mirror_coord(r.x0, s.width_m, i);
  const double xb = mirror_coord(r.x1, s.width_m, i);
  const double ya = mirror_coord(r.y0, s.height_m, j);
  const double yb = mirror_coord(r.y1, s.height_m, j);
  return {std::min(xa, xb), std::min(ya, yb), std::max(xa, xb), std::max(ya, yb)};
}

}  // namespace detail

/// Extra loss (dB) of the straight surface path a -> b.
inline double obstacle_loss_db(Vec2 a, Vec2 b, const std::vector<Obstacle>& obstacles) {
  double loss = 0.0;
  for (const auto& o : obstacles) {
    if (o.perturbation_db > 0.0 && detail::segment_crosses(a, b, o.footprint)) loss += o.perturbation_db;
  }
  return loss;
}

/// Extra loss (dB) of a reflected path, evaluated as the straight line from
/// the image to the receiver through the mirrored copies of each footprint.
inline double obstacle_loss_db(const ImageSource& img, Vec2 rx, const SurfaceSpec& s,
                               const std::vector<Obstacle>& obstacles) {
  if (img.cell_x == 0 && img.cell_y == 0) return obstacle_loss_db(img.position, rx, obstacles);
  double loss = 0.0;
  for (const auto& o : obstacles) {
    if (!(o.perturbation_db > 0.0)) continue;
    for (int i = std::min(img.cell_x, 0); i <= std::max(img.cell_x, 0); ++i) {
      for (int j = std::min(img.cell_y, 0); j <= std::max(img.cell_y, 0); ++j) {
        if (detail::segment_crosses(img.position, rx, detail::mirror_rect(o.footprint, s, i, j))) {
          loss += o.perturbation_db;
        }
      }
    }
  }
  return loss;
}

/// Every invariant violation in the scene. Never throws.
inline std::vector<std::string> validate_scene(const Scene& scene) {
  std::vector<std::string> v;
  const auto& s = scene.surface;
  const bool surface_ok = std::isfinite(s.width_m) && std::isfinite(s.height_m) && s.width_m > 0.0 && s.height_m > 0.0;
  if (!surface_ok) v.push_back("surface: width and height must be positive and finite");

  auto fmt = [](auto... parts) {
    std::ostringstream os;
    (os << ... << parts);
    return os.str();
  };

  bool has_tx = false;
  bool has_rx = false;
  std::set<std::string> seen;
  for (std::size_t n = 0; n < scene.nodes.size(); ++n) {
    const auto& node = scene.nodes[n];
    const std::string name = node.id.empty() ? fmt("node #", n) : fmt("node '", node.id, "'");
    if (node.id.empty()) v.push_back(fmt(name, ": missing id"));
    if (!node.id.empty() && !seen.insert(node.id).second) v.push_back(fmt(name, ": duplicate node id"));
    has_tx = has_tx || node.role == Role::transmitter;
    has_rx = has_rx || node.role == Role::receiver;
    if (node.port_count() == 0) v.push_back(fmt(name, ": needs at least one contact or antenna"));
    for (std::size_t k = 0; k < node.contacts.size(); ++k) {
      const auto c = node.contacts[k];
      const bool finite = std::isfinite(c.x) && std::isfinite(c.y);
      if (!finite || (surface_ok && !s.contains(c))) {
        v.push_back(fmt(name, ": contact ", k, " at (", c.x, ", ", c.y, ") outside surface [0, ", s.width_m, "] x [0, ",
                        s.height_m, "]"));
      }
    }
    for (std::size_t k = 0; k < node.antennas.size(); ++k) {
      const auto a = node.antennas[k];
      if (!(std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z))) {
        v.push_back(fmt(name, ": antenna ", k, " has a non-finite coordinate"));
      } else if (a.z < 0.0) {
        v.push_back(fmt(name, ": antenna ", k, " below the surface (z = ", a.z, " < 0)"));
      }
    }
  }
  if (!has_tx) v.push_back("no transmitter");
  if (!has_rx) v.push_back("no receiver");

  for (std::size_t k = 0; k < scene.obstacles.size(); ++k) {
    const auto& o = scene.obstacles[k];
    const auto& r = o.footprint;
    const bool finite = std::isfinite(r.x0) && std::isfinite(r.y0) && std::isfinite(r.x1) && std::isfinite(r.y1);
    if (!finite || !(r.x0 < r.x1) || !(r.y0 < r.y1)) {
      v.push_back(fmt("obstacle ", k, ": footprint must satisfy x0 < x1 and y0 < y1"));
    } else if (surface_ok && !(s.contains({r.x0, r.y0}) && s.contains({r.x1, r.y1}))) {
      v.push_back(fmt("obstacle ", k, ": footprint outside surface"));
    }
    if (!(o.perturbation_db >= 0.0) || !std::isfinite(o.perturbation_db)) {
      v.push_back(fmt("obstacle ", k, ": perturbation_db must be a finite value >= 0"));
    }
  }
  return v;
}

}  // namespace surfmimo
