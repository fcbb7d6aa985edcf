#pragma once

#include "cpd/geometry.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace cpd {

inline constexpr int kSnapshotCount = 101;  // tau = 0..100

struct Frame {
  std::vector<Vec2> positions;
  std::vector<std::uint8_t> alive;  // one flag per triangle
};

/// Recorded history of one geometry sample. Frame 0 is the reference configuration.
/// A single-frame trajectory is a bare mesh export.
struct Trajectory {
  std::uint32_t sample_id = 0;
  std::uint8_t case_tag = 0;  // 0 = unspecified, 1..3 = case families
  double geometry_param = 0.0;
  DomainSpec domain;
  std::vector<std::array<std::uint32_t, 3>> triangles;
  std::vector<Frame> frames;

  std::size_t particle_count() const { return frames.empty() ? 0 : frames.front().positions.size(); }
  const std::vector<Vec2>& ref_positions() const { return frames.front().positions; }

  /// First tau whose frame contains a dead triangle, or -1.
  int first_failure_tau() const;

  /// Throws FormatError if the frame layout or the dead-set monotonicity is violated.
  void check_invariants() const;

  bool operator==(const Trajectory&) const;
};

}  // namespace cpd
