#include "cpd/geometry.hpp"

#include "cpd/delaunay.hpp"
#include "cpd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace cpd {

void DomainSpec::validate() const {
  if (!(width > 0)) throw ConfigError("width", "must be positive");
  if (!(height > 0)) throw ConfigError("height", "must be positive");
  if (!(target_spacing > 0)) throw ConfigError("target_spacing", "must be positive");
  if (target_spacing > 0.5 * std::min(width, height))
    throw ConfigError("target_spacing", "larger than half the domain");
  if (!(hole_radius >= 0)) throw ConfigError("hole_radius", "must be non-negative");
  if (has_hole()) {
    const double clearance = std::min({hole_center.x(), width - hole_center.x(), hole_center.y(),
                                       height - hole_center.y()});
    if (!(clearance > hole_radius))
      throw ConfigError("hole_radius", "hole must lie strictly inside the rectangle");
    if (2.0 * hole_radius / target_spacing < 6.0)
      throw ConfigError("target_spacing", "fewer than 6 particles across the hole diameter");
  }
  if (!(notch_tip_x >= 0) || notch_tip_x >= width)
    throw ConfigError("notch_tip_x", "must satisfy 0 <= a < width");
  if (has_notch()) {
    const double y = notch_y();
    if (!(y > 0 && y < height)) throw ConfigError("notch_height", "notch line lies outside the rectangle");
  }
}

std::size_t Triangulation::alive_count() const {
  return static_cast<std::size_t>(std::count(alive.begin(), alive.end(), std::uint8_t{1}));
}

double signed_area(const Vec2& a, const Vec2& b, const Vec2& c) {
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

Vec2 circumcenter(const Vec2& a, const Vec2& b, const Vec2& c) {
  const Vec2 ab = b - a, ac = c - a;
  const double d = 2.0 * (ab.x() * ac.y() - ab.y() * ac.x());
  const double ab2 = ab.squaredNorm(), ac2 = ac.squaredNorm();
  return a + Vec2((ac.y() * ab2 - ab.y() * ac2) / d, (ab.x() * ac2 - ac.x() * ab2) / d);
}

bool crosses_notch(const Vec2& p, const Vec2& q, double notch_y, double tip_x) {
  const bool p_above = p.y() >= notch_y;
  const bool q_above = q.y() >= notch_y;
  if (p_above == q_above) return false;
  const double t = (notch_y - p.y()) / (q.y() - p.y());
  const double x = p.x() + t * (q.x() - p.x());
  return x <= tip_x;
}

namespace {

// Uniform double in [0, 1) from the top 53 bits; independent of the standard library's
// distribution implementations so seeds reproduce across toolchains.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

double grid_pitch(const DomainSpec& spec) {
  const long nx = std::max(1L, std::lround(spec.width / spec.target_spacing));
  const long ny = std::max(1L, std::lround(spec.height / spec.target_spacing));
  return std::min(spec.width / nx, spec.height / ny);
}

ParticleSystem seed_particles(const DomainSpec& spec) {
  spec.validate();
  const int nx = std::max(1, static_cast<int>(std::lround(spec.width / spec.target_spacing)));
  const int ny = std::max(1, static_cast<int>(std::lround(spec.height / spec.target_spacing)));
  const double px = spec.width / nx;
  const double py = spec.height / ny;
  const double pitch = std::min(px, py);
  std::mt19937_64 rng(spec.seed);

  ParticleSystem sys;
  auto add = [&](const Vec2& p) {
    sys.ref_positions.push_back(p);
    sys.masses.push_back(px * py);
  };

  const double exclusion = spec.hole_radius + 0.5 * pitch;
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      Vec2 p(i == nx ? spec.width : i * px, j == ny ? spec.height : j * py);
      const bool edge = i == 0 || j == 0 || i == nx || j == ny;
      if (!edge) {
        const double jx = (unit(rng) - 0.5) * 0.6 * px;
        const double jy = (unit(rng) - 0.5) * 0.6 * py;
        p += Vec2(jx, jy);
      }
      if (spec.has_hole() && (p - spec.hole_center).norm() < exclusion) continue;
      add(p);
    }
  }
  if (spec.has_hole()) {
    const double circumference = 2.0 * std::numbers::pi * spec.hole_radius;
    const int n_ring = std::max(6, static_cast<int>(std::lround(circumference / pitch)));
    for (int k = 0; k < n_ring; ++k) {
      const double theta = 2.0 * std::numbers::pi * k / n_ring;
      add(spec.hole_center + spec.hole_radius * Vec2(std::cos(theta), std::sin(theta)));
    }
  }

  const std::size_t n = sys.ref_positions.size();
  sys.cur_positions = sys.ref_positions;
  sys.velocities.assign(n, Vec2::Zero());
  sys.tags.resize(n, BoundaryTag::interior);
  for (std::size_t k = 0; k < n; ++k) {
    const Vec2& p = sys.ref_positions[k];
    auto& tag = sys.tags[k];
    if (p.y() == 0.0) tag = BoundaryTag::bottom;
    else if (p.y() == spec.height) tag = BoundaryTag::top;
    else if (p.x() == 0.0) tag = BoundaryTag::left;
    else if (p.x() == spec.width) tag = BoundaryTag::right;
    else if (spec.has_notch() && p.x() <= spec.notch_tip_x + 0.5 * pitch &&
             std::abs(p.y() - spec.notch_y()) < pitch)
      tag = BoundaryTag::notch_face;
  }
  return sys;
}

Triangulation triangulate(const ParticleSystem& system, const DomainSpec& spec) {
  const auto& x = system.ref_positions;
  auto raw = delaunay(x);
  const double pitch = grid_pitch(spec);

  Triangulation mesh;
  mesh.triangles.reserve(raw.size());
  for (const auto& t : raw) {
    const Vec2 &a = x[t[0]], &b = x[t[1]], &c = x[t[2]];
    const double area = signed_area(a, b, c);
    if (area <= kAreaEpsilon) continue;
    if (spec.has_hole()) {
      const Vec2 g = (a + b + c) / 3.0;
      if ((g - spec.hole_center).norm() < spec.hole_radius) continue;
      // Rim particles sit exactly on the circle, so only circumcenters well inside the
      // disk mark a triangle that bridges the hole.
      if ((circumcenter(a, b, c) - spec.hole_center).norm() < spec.hole_radius - pitch) continue;
    }
    if (spec.has_notch()) {
      const double yn = spec.notch_y(), xa = spec.notch_tip_x;
      if (crosses_notch(a, b, yn, xa) || crosses_notch(b, c, yn, xa) || crosses_notch(c, a, yn, xa))
        continue;
    }
    mesh.triangles.push_back(t);
    mesh.ref_area.push_back(area);
  }
  if (mesh.triangles.empty()) throw TopologyError("no triangle survives the hole and notch cuts");
  mesh.alive.assign(mesh.triangles.size(), 1);
  return mesh;
}

Box region_of_interest(const DomainSpec& spec) {
  const double r = spec.has_hole() ? spec.hole_radius : 1.0;
  const Vec2 c = spec.has_hole() ? spec.hole_center : Vec2(spec.notch_tip_x + 1.0, spec.notch_y());
  double x_lo = c.x() - 2.0 * r, x_hi = c.x() + 2.0 * r;
  double y_lo = c.y() - 2.0 * r, y_hi = c.y() + 2.0 * r;
  if (spec.has_notch()) {
    x_lo = std::min(x_lo, spec.notch_tip_x - 0.5 * r);
    y_hi = std::max(y_hi, spec.notch_y() + r);
    y_lo = std::min(y_lo, spec.notch_y() - r);
  }
  Box box{Vec2(std::max(0.0, x_lo), std::max(0.0, y_lo)),
          Vec2(std::min(spec.width, x_hi), std::min(spec.height, y_hi))};
  return box;
}

void lump_masses(ParticleSystem& system, const Triangulation& mesh, double density, double pitch) {
  std::vector<double> m(system.size(), 0.0);
  for (std::size_t t = 0; t < mesh.size(); ++t)
    for (auto v : mesh.triangles[t]) m[v] += mesh.ref_area[t] / 3.0;
  for (std::size_t i = 0; i < m.size(); ++i)
    system.masses[i] = m[i] > 0 ? density * m[i] : density * pitch * pitch / 2.0;
}

}  // namespace cpd
