#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "schedkit/iter_table.hpp"
#include "schedkit/types.hpp"

namespace schedkit {

struct ModelProfile {
  std::string model_name;
  IterTable entries;
  Seconds restart_overhead = 30;
  bool placement_sensitive = false;  // skew-style static flag
  std::optional<std::vector<std::pair<std::int64_t, double>>> loss_curve;

  double iter_time(int gpu_count, PlacementKind kind) const {
    return entries.iter_time(gpu_count, kind);
  }

  /* Measured consolidation benefit: does spreading cost more than `threshold`
   * relative slowdown at any profiled multi-GPU count? */
  bool consolidation_benefit(double threshold = 0.10) const {
    for (int g : entries.gpu_counts(PlacementKind::Consolidated)) {
      if (g < 2) continue;
      if (!entries.has(g, PlacementKind::Spread)) continue;
      double c = entries.iter_time(g, PlacementKind::Consolidated);
      double s = entries.iter_time(g, PlacementKind::Spread);
      if (s > c * (1.0 + threshold)) return true;
    }
    return false;
  }

  void validate() const {
    for (auto kind : {PlacementKind::Consolidated, PlacementKind::Spread}) {
      double prev = 1e300;
      for (int g : entries.gpu_counts(kind)) {
        double t = entries.iter_time(g, kind);
        if (t <= 0) throw ProfileError(model_name + ": iter_time must be > 0");
        if (t > prev)
          throw ProfileError(model_name + ": iter_time must be non-increasing in gpu_count");
        prev = t;
      }
    }
    for (int g : entries.gpu_counts(PlacementKind::Consolidated)) {
      if (!entries.has(g, PlacementKind::Spread)) continue;
      if (entries.iter_time(g, PlacementKind::Consolidated) >
          entries.iter_time(g, PlacementKind::Spread) + 1e-12)
        throw ProfileError(model_name + ": consolidated iter_time exceeds spread at g=" +
                           std::to_string(g));
    }
  }
};

using ProfileSet = std::map<std::string, ModelProfile>;

namespace detail {
inline ModelProfile make_profile(const std::string& name, double iter1, double scale_exp,
                                 double spread_penalty, Seconds overhead, bool sensitive) {
  ModelProfile p;
  p.model_name = name;
  p.restart_overhead = overhead;
  p.placement_sensitive = sensitive;
  for (int g : {1, 2, 4, 8}) {
    double c = iter1 / std::pow(g, scale_exp);
    p.entries.set(g, PlacementKind::Consolidated, c);
    p.entries.set(g, PlacementKind::Spread, g == 1 ? c : c * spread_penalty);
  }
  p.validate();
  return p;
}
}  // namespace detail

/* Synthetic per-model profiles for the stock DNN mix. Iteration times and
 * overheads are representative, not measurements; loaded profiles via
 * parse_profile_csv override these. Note lstm: its static sensitivity flag is
 * off while its measured spread penalty is real, so heuristic-driven and
 * profile-driven placement diverge on it (as does recoder in the opposite
 * direction: flagged but cheap to spread). */
inline ProfileSet builtin_profiles() {
  ProfileSet set;
  auto add = [&](ModelProfile p) { set[p.model_name] = std::move(p); };
  add(detail::make_profile("resnet18", 0.045, 0.92, 1.04, 20, false));
  add(detail::make_profile("cyclegan", 0.700, 0.90, 1.45, 40, true));
  add(detail::make_profile("resnet50", 0.210, 0.93, 1.30, 30, true));
  add(detail::make_profile("lstm", 0.060, 0.82, 1.18, 25, false));
  add(detail::make_profile("recoder", 0.090, 0.88, 1.06, 25, true));
  add(detail::make_profile("transformer", 0.300, 0.91, 1.50, 35, true));
  add(detail::make_profile("a3c", 0.025, 0.70, 1.02, 15, false));
  return set;
}

inline std::map<std::string, bool> skew_flags(const ProfileSet& profiles) {
  std::map<std::string, bool> out;
  for (auto& [name, p] : profiles) out[name] = p.placement_sensitive;
  return out;
}

inline std::map<std::string, bool> benefit_flags(const ProfileSet& profiles,
                                                 double threshold = 0.10) {
  std::map<std::string, bool> out;
  for (auto& [name, p] : profiles) out[name] = p.consolidation_benefit(threshold);
  return out;
}

/* Profile CSV:
 *   model,gpu_count,placement,iter_time_s,restart_overhead_s,placement_sensitive
 * placement is "consolidated" or "spread". */
inline ProfileSet parse_profile_csv(std::istream& in) {
  ProfileSet set;
  std::string line;
  int lineno = 0;
  if (!std::getline(in, line)) throw ParseError("profile csv: empty file");
  ++lineno;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string model, gpus, placement, iter, overhead, sensitive;
    if (!std::getline(row, model, ',') || !std::getline(row, gpus, ',') ||
        !std::getline(row, placement, ',') || !std::getline(row, iter, ',') ||
        !std::getline(row, overhead, ',') || !std::getline(row, sensitive))
      throw ParseError("profile csv line " + std::to_string(lineno) + ": expected 6 fields");
    try {
      ModelProfile& p = set[model];
      p.model_name = model;
      int g = std::stoi(gpus);
      double t = std::stod(iter);
      if (g < 1 || t <= 0)
        throw ParseError("profile csv line " + std::to_string(lineno) + ": bad gpu_count/iter_time");
      PlacementKind kind;
      if (placement == "consolidated")
        kind = PlacementKind::Consolidated;
      else if (placement == "spread")
        kind = PlacementKind::Spread;
      else
        throw ParseError("profile csv line " + std::to_string(lineno) + ": bad placement '" +
                         placement + "'");
      p.entries.set(g, kind, t);
      p.restart_overhead = std::stod(overhead);
      p.placement_sensitive = sensitive == "1" || sensitive == "true";
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception&) {
      throw ParseError("profile csv line " + std::to_string(lineno) + ": malformed number");
    }
  }
  for (auto& [name, p] : set) p.validate();
  return set;
}

inline ProfileSet load_profiles(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open profile csv: " + path);
  return parse_profile_csv(f);
}

}  // namespace schedkit
