#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <vector>

namespace cpd {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Rectangular specimen [0, width] x [0, height] with an optional circular hole and an
/// optional horizontal edge notch running from the left edge to x = notch_tip_x.
/// All lengths in cm. hole_radius == 0 disables the hole, notch_tip_x == 0 the notch.
struct DomainSpec {
  double width = 10.0;
  double height = 10.0;
  Vec2 hole_center{5.0, 4.0};
  double hole_radius = 1.0;
  double notch_tip_x = 1.0;
  double notch_height = 1.0;  // h: vertical offset of the notch line above the hole top
  double target_spacing = 0.08;
  std::uint64_t seed = 1;

  bool has_hole() const { return hole_radius > 0.0; }
  bool has_notch() const { return notch_tip_x > 0.0; }
  double notch_y() const { return hole_center.y() + hole_radius + notch_height; }

  /// Throws ConfigError naming the first violated parameter.
  void validate() const;
};

enum class BoundaryTag : std::uint8_t { interior, top, bottom, left, right, notch_face };

struct ParticleSystem {
  std::vector<Vec2> ref_positions;
  std::vector<Vec2> cur_positions;
  std::vector<Vec2> velocities;
  std::vector<double> masses;
  double damping = 0.0;
  std::vector<BoundaryTag> tags;

  std::size_t size() const { return ref_positions.size(); }
};

struct Triangulation {
  std::vector<std::array<std::uint32_t, 3>> triangles;  // counter-clockwise in the reference frame
  std::vector<double> ref_area;
  std::vector<std::uint8_t> alive;

  std::size_t size() const { return triangles.size(); }
  std::size_t alive_count() const;
};

struct Box {
  Vec2 lo;
  Vec2 hi;
  bool contains(const Vec2& p) const {
    return p.x() >= lo.x() && p.x() <= hi.x() && p.y() >= lo.y() && p.y() <= hi.y();
  }
};

inline constexpr double kAreaEpsilon = 1e-12;  // cm^2

/// Actual grid pitch used by seed_particles (target spacing snapped to divide the edges).
double grid_pitch(const DomainSpec& spec);

/// Jittered-grid seeding (interior particles jittered by up to 30% of the pitch, edge rows
/// exact), with the hole interior carved out and a ring of particles placed on the hole rim.
/// Masses are set to the grid cell area; lump_masses() replaces them once the mesh exists.
ParticleSystem seed_particles(const DomainSpec& spec);

/// Delaunay triangulation of the reference positions restricted to the material: triangles
/// inside the hole and triangles crossed by the notch segment are dropped.
Triangulation triangulate(const ParticleSystem& system, const DomainSpec& spec);

/// Crop window around the hole / notch-tip interaction zone, clipped to the domain.
Box region_of_interest(const DomainSpec& spec);

/// m_i = density * (1/3) * sum of incident reference areas.
/// Particles without incident triangles get density * pitch^2 / 2 so that masses stay positive.
void lump_masses(ParticleSystem& system, const Triangulation& mesh, double density, double pitch);

double signed_area(const Vec2& a, const Vec2& b, const Vec2& c);

/// Circumcenter of a non-degenerate triangle.
Vec2 circumcenter(const Vec2& a, const Vec2& b, const Vec2& c);

/// True when segment pq crosses the notch line at some x in [0, tip_x]. Points with
/// y >= notch_y count as above the line, so an endpoint lying on it joins the upper face.
bool crosses_notch(const Vec2& p, const Vec2& q, double notch_y, double tip_x);

}  // namespace cpd
