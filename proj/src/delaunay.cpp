#include "cpd/delaunay.hpp"

#include "cpd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

namespace cpd {

long double orient(const Vec2& a, const Vec2& b, const Vec2& c) {
  const long double abx = static_cast<long double>(b.x()) - a.x();
  const long double aby = static_cast<long double>(b.y()) - a.y();
  const long double acx = static_cast<long double>(c.x()) - a.x();
  const long double acy = static_cast<long double>(c.y()) - a.y();
  return abx * acy - aby * acx;
}

long double incircle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const long double adx = static_cast<long double>(a.x()) - d.x();
  const long double ady = static_cast<long double>(a.y()) - d.y();
  const long double bdx = static_cast<long double>(b.x()) - d.x();
  const long double bdy = static_cast<long double>(b.y()) - d.y();
  const long double cdx = static_cast<long double>(c.x()) - d.x();
  const long double cdy = static_cast<long double>(c.y()) - d.y();
  const long double ad = adx * adx + ady * ady;
  const long double bd = bdx * bdx + bdy * bdy;
  const long double cd = cdx * cdx + cdy * cdy;
  return adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx);
}

namespace {

constexpr int kNone = -1;

struct Cell {
  std::array<int, 3> v;
  std::array<int, 3> nbr;  // nbr[i] is across the edge opposite v[i]
  bool alive = true;
};

class BowyerWatson {
 public:
  explicit BowyerWatson(std::span<const Vec2> input) : n_input_(input.size()) {
    pts_.assign(input.begin(), input.end());
    Vec2 lo = pts_.front(), hi = pts_.front();
    for (const auto& p : pts_) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    const Vec2 c = 0.5 * (lo + hi);
    const double m = std::max({hi.x() - lo.x(), hi.y() - lo.y(), 1e-9});
    pts_.emplace_back(c.x() - 4 * m, c.y() - 3 * m);
    pts_.emplace_back(c.x() + 4 * m, c.y() - 3 * m);
    pts_.emplace_back(c.x(), c.y() + 4 * m);
    const int s = static_cast<int>(n_input_);
    cells_.push_back({{s, s + 1, s + 2}, {kNone, kNone, kNone}, true});
  }

  void insert(int p) {
    const int start = locate(pts_[p]);
    cavity_.clear();
    stack_.clear();
    mark_.resize(cells_.size(), 0);
    ++epoch_;
    stack_.push_back(start);
    mark_[start] = epoch_;
    while (!stack_.empty()) {
      const int t = stack_.back();
      stack_.pop_back();
      cavity_.push_back(t);
      for (int nb : cells_[t].nbr) {
        if (nb == kNone || mark_[nb] == epoch_) continue;
        const auto& v = cells_[nb].v;
        if (incircle(pts_[v[0]], pts_[v[1]], pts_[v[2]], pts_[p]) > 0) {
          mark_[nb] = epoch_;
          stack_.push_back(nb);
        }
      }
    }

    // Boundary edges of the cavity, each becomes a new triangle fanned around p.
    edges_.clear();
    for (int t : cavity_) {
      for (int i = 0; i < 3; ++i) {
        const int nb = cells_[t].nbr[i];
        if (nb != kNone && mark_[nb] == epoch_) continue;
        edges_.push_back({cells_[t].v[(i + 1) % 3], cells_[t].v[(i + 2) % 3], nb});
      }
    }
    for (int t : cavity_) {
      cells_[t].alive = false;
      free_.push_back(t);
    }

    std::unordered_map<int, int> by_start;  // edge start vertex -> new cell
    by_start.reserve(edges_.size() * 2);
    created_.clear();
    for (const auto& e : edges_) {
      const int id = allocate();
      cells_[id] = Cell{{p, e.a, e.b}, {e.outside, kNone, kNone}, true};
      if (e.outside != kNone) {
        auto& out = cells_[e.outside];
        for (int i = 0; i < 3; ++i) {
          const int a = out.v[(i + 1) % 3], b = out.v[(i + 2) % 3];
          if (a == e.b && b == e.a) out.nbr[i] = id;
        }
      }
      by_start[e.a] = id;
      created_.push_back(id);
    }
    // Cell (p, a, b): edge (b, p) is opposite a, edge (p, a) is opposite b.
    for (int id : created_) {
      auto& c = cells_[id];
      c.nbr[1] = by_start.at(c.v[2]);
      auto& next = cells_[c.nbr[1]];
      next.nbr[2] = id;
    }
    last_ = created_.back();
  }

  std::vector<std::array<std::uint32_t, 3>> finish() const {
    std::vector<std::array<std::uint32_t, 3>> out;
    const int n = static_cast<int>(n_input_);
    for (const auto& c : cells_) {
      if (!c.alive) continue;
      if (c.v[0] >= n || c.v[1] >= n || c.v[2] >= n) continue;
      out.push_back({static_cast<std::uint32_t>(c.v[0]), static_cast<std::uint32_t>(c.v[1]),
                     static_cast<std::uint32_t>(c.v[2])});
    }
    return out;
  }

 private:
  int allocate() {
    if (!free_.empty()) {
      const int id = free_.back();
      free_.pop_back();
      return id;
    }
    cells_.emplace_back();
    return static_cast<int>(cells_.size() - 1);
  }

  int locate(const Vec2& p) {
    int t = (last_ != kNone && cells_[last_].alive) ? last_ : first_alive();
    const std::size_t limit = 4 * cells_.size() + 16;
    for (std::size_t step = 0; step < limit; ++step) {
      const auto& c = cells_[t];
      int next = kNone;
      for (int i = 0; i < 3; ++i) {
        const int k = (i + static_cast<int>(step)) % 3;
        if (orient(pts_[c.v[(k + 1) % 3]], pts_[c.v[(k + 2) % 3]], p) < 0) {
          next = c.nbr[k];
          break;
        }
      }
      if (next == kNone) return t;
      t = next;
    }
    // Walk failed to settle (round-off); fall back to a scan.
    for (std::size_t i = 0; i < cells_.size(); ++i) {
      const auto& c = cells_[i];
      if (!c.alive) continue;
      if (orient(pts_[c.v[0]], pts_[c.v[1]], p) >= 0 && orient(pts_[c.v[1]], pts_[c.v[2]], p) >= 0 &&
          orient(pts_[c.v[2]], pts_[c.v[0]], p) >= 0)
        return static_cast<int>(i);
    }
    throw TriangulationError("point location failed");
  }

  int first_alive() const {
    for (std::size_t i = 0; i < cells_.size(); ++i)
      if (cells_[i].alive) return static_cast<int>(i);
    throw TriangulationError("empty triangulation");
  }

  std::size_t n_input_;
  std::vector<Vec2> pts_;
  std::vector<Cell> cells_;
  std::vector<int> free_;
  std::vector<int> cavity_, stack_, created_;
  std::vector<std::uint32_t> mark_;
  std::uint32_t epoch_ = 0;
  int last_ = kNone;

  struct PendingEdge {
    int a, b, outside;
  };
  std::vector<PendingEdge> edges_;
};

}  // namespace

std::vector<std::array<std::uint32_t, 3>> delaunay(std::span<const Vec2> points) {
  if (points.size() < 3) throw TriangulationError("need at least three points");

  bool independent = false;
  for (std::size_t i = 2; i < points.size() && !independent; ++i)
    independent = std::abs(orient(points[0], points[1], points[i])) > 0;
  if (!independent) throw TriangulationError("point set is collinear");

  BowyerWatson bw(points);
  std::unordered_map<std::uint64_t, std::vector<int>> buckets;  // duplicate detection
  Vec2 lo = points[0], hi = points[0];
  for (const auto& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double cell = std::max((hi - lo).maxCoeff() / std::sqrt(double(points.size())), 1e-9);
  auto key = [&](long ix, long iy) { return (static_cast<std::uint64_t>(ix) << 32) ^ static_cast<std::uint64_t>(iy); };
  for (std::size_t i = 0; i < points.size(); ++i) {
    const long ix = static_cast<long>((points[i].x() - lo.x()) / cell);
    const long iy = static_cast<long>((points[i].y() - lo.y()) / cell);
    for (long dx = -1; dx <= 1; ++dx)
      for (long dy = -1; dy <= 1; ++dy) {
        auto it = buckets.find(key(ix + dx, iy + dy));
        if (it == buckets.end()) continue;
        for (int j : it->second)
          if ((points[j] - points[i]).norm() < 1e-12)
            throw TriangulationError("duplicate points " + std::to_string(j) + " and " + std::to_string(i));
      }
    buckets[key(ix, iy)].push_back(static_cast<int>(i));
    bw.insert(static_cast<int>(i));
  }
  auto tris = bw.finish();
  if (tris.empty()) throw TriangulationError("no triangles produced");
  return tris;
}

}  // namespace cpd
