#include "cpd/trajectory.hpp"

#include "cpd/errors.hpp"

namespace cpd {

int Trajectory::first_failure_tau() const {
  for (std::size_t tau = 0; tau < frames.size(); ++tau)
    for (auto a : frames[tau].alive)
      if (!a) return static_cast<int>(tau);
  return -1;
}

void Trajectory::check_invariants() const {
  if (frames.size() != 1 && frames.size() != static_cast<std::size_t>(kSnapshotCount))
    throw FormatError("trajectory must hold 1 (mesh only) or " + std::to_string(kSnapshotCount) + " frames");
  const std::size_t n = frames.front().positions.size();
  if (n == 0) throw FormatError("trajectory has no particles");
  for (std::size_t tau = 0; tau < frames.size(); ++tau) {
    const auto& f = frames[tau];
    if (f.positions.size() != n || f.alive.size() != triangles.size())
      throw FormatError("frame " + std::to_string(tau) + " has inconsistent sizes");
    if (tau == 0) continue;
    const auto& prev = frames[tau - 1].alive;
    for (std::size_t t = 0; t < f.alive.size(); ++t)
      if (f.alive[t] && !prev[t]) throw FormatError("triangle " + std::to_string(t) + " revived at tau " + std::to_string(tau));
  }
}

bool Trajectory::operator==(const Trajectory& o) const {
  if (sample_id != o.sample_id || case_tag != o.case_tag || geometry_param != o.geometry_param ||
      triangles != o.triangles || frames.size() != o.frames.size())
    return false;
  const auto& a = domain;
  const auto& b = o.domain;
  if (a.width != b.width || a.height != b.height || a.hole_center != b.hole_center ||
      a.hole_radius != b.hole_radius || a.notch_tip_x != b.notch_tip_x || a.notch_height != b.notch_height ||
      a.target_spacing != b.target_spacing || a.seed != b.seed)
    return false;
  for (std::size_t k = 0; k < frames.size(); ++k)
    if (frames[k].positions != o.frames[k].positions || frames[k].alive != o.frames[k].alive) return false;
  return true;
}

}  // namespace cpd
