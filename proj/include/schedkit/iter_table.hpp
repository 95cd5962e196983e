#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "schedkit/types.hpp"

namespace schedkit {

/* Per-iteration time of one model as a function of (gpu_count, placement).
 * Gaps between profiled gpu_counts are linearly interpolated on 1/gpu_count;
 * requests outside the profiled range are an error rather than extrapolated. */
class IterTable {
 public:
  void set(int gpu_count, PlacementKind kind, double iter_time_s) {
    entries_[key(kind)][gpu_count] = iter_time_s;
  }

  bool has(int gpu_count, PlacementKind kind) const {
    auto& m = entries_[key(kind)];
    return m.count(gpu_count) > 0;
  }

  bool empty() const { return entries_[0].empty() && entries_[1].empty(); }

  /* Seconds per iteration at the given gpu_count. Falls back to the other
   * placement kind when one kind was never profiled. */
  double iter_time(int gpu_count, PlacementKind kind) const {
    const auto* m = &entries_[key(kind)];
    if (m->empty()) m = &entries_[1 - key(kind)];
    if (m->empty()) throw ProfileError("iteration-time table is empty");
    auto exact = m->find(gpu_count);
    if (exact != m->end()) return exact->second;

    auto hi = m->lower_bound(gpu_count);
    if (hi == m->begin() || hi == m->end()) {
      throw ProfileError("no profile row for gpu_count " + std::to_string(gpu_count) +
                         " and interpolation out of range");
    }
    auto lo = std::prev(hi);
    const double x = 1.0 / gpu_count;
    const double x_lo = 1.0 / lo->first;
    const double x_hi = 1.0 / hi->first;
    const double w = (x_lo - x) / (x_lo - x_hi);
    return lo->second + (hi->second - lo->second) * w;
  }

  std::vector<int> gpu_counts(PlacementKind kind) const {
    std::vector<int> out;
    for (auto& [g, t] : entries_[key(kind)]) out.push_back(g);
    return out;
  }

  bool operator==(const IterTable&) const = default;

 private:
  static int key(PlacementKind k) { return k == PlacementKind::Consolidated ? 0 : 1; }
  std::map<int, double> entries_[2];
};

}  // namespace schedkit
