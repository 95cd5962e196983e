#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "schedkit/core_state.hpp"
#include "schedkit/types.hpp"

namespace schedkit {

enum class SchedulerKind { Fifo, Srtf, Las, DiscreteLas, OptimusLike };

inline const char* to_string(SchedulerKind k) {
  switch (k) {
    case SchedulerKind::Fifo: return "fifo";
    case SchedulerKind::Srtf: return "srtf";
    case SchedulerKind::Las: return "las";
    case SchedulerKind::DiscreteLas: return "dlas";
    case SchedulerKind::OptimusLike: return "optimus";
  }
  return "?";
}

struct SchedulerConfig {
  SchedulerKind kind = SchedulerKind::Fifo;
  std::vector<double> dlas_thresholds = {3600, 36000};  // GPU-second queue bounds
  bool loss_termination = false;
  double loss_threshold = 0.002;  // relative threshold (metric mode)

  void validate() const {
    if (kind == SchedulerKind::DiscreteLas) {
      if (dlas_thresholds.empty()) throw ConfigError("sched.dlas_thresholds", "must be non-empty");
      double prev = 0;
      for (double t : dlas_thresholds) {
        if (t <= prev) throw ConfigError("sched.dlas_thresholds", "must be strictly ascending and positive");
        prev = t;
      }
    }
  }
};

struct PrioritizedJob {
  JobId job_id = -1;
  int granted_gpus = 1;
  bool operator==(const PrioritizedJob&) const = default;
};
using PrioritizedJobs = std::vector<PrioritizedJob>;

namespace detail {
inline std::vector<const JobRecord*> collect(const std::vector<JobRecord>& jobs) {
  std::vector<const JobRecord*> out;
  out.reserve(jobs.size());
  for (const auto& j : jobs) out.push_back(&j);
  return out;
}

template <typename Key>
PrioritizedJobs rank_by(const std::vector<JobRecord>& jobs, Key key) {
  auto ptrs = collect(jobs);
  std::sort(ptrs.begin(), ptrs.end(), [&](const JobRecord* a, const JobRecord* b) {
    auto ka = key(*a), kb = key(*b);
    if (ka != kb) return ka < kb;
    if (a->arrival_time != b->arrival_time) return a->arrival_time < b->arrival_time;
    return a->job_id < b->job_id;
  });
  PrioritizedJobs out;
  out.reserve(ptrs.size());
  for (auto* p : ptrs) out.push_back({p->job_id, p->gpu_demand});
  return out;
}
}  // namespace detail

inline PrioritizedJobs rank_fifo(const std::vector<JobRecord>& jobs) {
  return detail::rank_by(jobs, [](const JobRecord& j) { return j.arrival_time; });
}

// Remaining work = remaining iterations at the consolidated rate for the
// job's full demand.
inline double remaining_time(const JobRecord& j) {
  return static_cast<double>(j.remaining_iterations()) *
         j.iter_time_profile.iter_time(j.gpu_demand, PlacementKind::Consolidated);
}

inline PrioritizedJobs rank_srtf(const std::vector<JobRecord>& jobs) {
  return detail::rank_by(jobs, [](const JobRecord& j) { return remaining_time(j); });
}

inline PrioritizedJobs rank_las(const std::vector<JobRecord>& jobs) {
  return detail::rank_by(jobs, [](const JobRecord& j) { return j.attained_service; });
}

/* Tiresias-style discretized LAS: the queue index (first threshold the job's
 * attained service has not reached) is the primary key, FIFO inside a queue. */
inline PrioritizedJobs rank_discrete_las(const std::vector<JobRecord>& jobs,
                                         const std::vector<double>& thresholds) {
  auto bucket = [&](const JobRecord& j) {
    std::size_t q = 0;
    while (q < thresholds.size() && j.attained_service >= thresholds[q]) ++q;
    return q;
  };
  return detail::rank_by(jobs, bucket);
}

/* Optimus-like two-phase allocation. Phase 1 hands one GPU to each job in
 * ascending estimated time-to-convergence (remaining iterations at the
 * single-GPU rate). Phase 2 repeatedly gives one more GPU to the job with the
 * largest marginal speedup
 *     gain(j, g) = remaining_iters * (iter_time(g) - iter_time(g+1))
 * until GPUs run out, no gain is positive, or every job holds its demand. */
inline PrioritizedJobs rank_optimus_like(const std::vector<JobRecord>& jobs, int free_gpu_count) {
  struct Item {
    const JobRecord* j;
    double convergence;
    int granted = 0;
  };
  std::vector<Item> items;
  for (const auto& j : jobs) {
    double t1 = j.iter_time_profile.iter_time(1, PlacementKind::Consolidated);
    items.push_back({&j, static_cast<double>(j.remaining_iterations()) * t1, 0});
  }
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
    if (a.convergence != b.convergence) return a.convergence < b.convergence;
    if (a.j->arrival_time != b.j->arrival_time) return a.j->arrival_time < b.j->arrival_time;
    return a.j->job_id < b.j->job_id;
  });

  int remaining = free_gpu_count;
  for (auto& it : items) {
    if (remaining <= 0) break;
    it.granted = 1;
    --remaining;
  }
  auto gain = [](const Item& it) {
    const JobRecord& j = *it.j;
    if (it.granted < 1 || it.granted >= j.gpu_demand) return -1.0;
    double cur = j.iter_time_profile.iter_time(it.granted, PlacementKind::Consolidated);
    double nxt = j.iter_time_profile.iter_time(it.granted + 1, PlacementKind::Consolidated);
    return static_cast<double>(j.remaining_iterations()) * (cur - nxt);
  };
  while (remaining > 0) {
    double best = 0;
    Item* best_item = nullptr;
    for (auto& it : items) {
      double g = gain(it);
      if (g > best || (g == best && g > 0 && best_item && it.j->job_id < best_item->j->job_id)) {
        best = g;
        best_item = &it;
      }
    }
    if (!best_item || best <= 0) break;
    best_item->granted += 1;
    --remaining;
  }

  PrioritizedJobs out;
  for (const auto& it : items)
    if (it.granted > 0) out.push_back({it.j->job_id, it.granted});
  return out;
}

/* Loss-based termination. Simulation mode: a job carrying
 * converge_at_fraction f is done once it has completed ceil(f * total)
 * iterations. Metric mode: the latest pushed "loss" value fell to
 * target_loss. Returns the ids to terminate; callers flag them Terminated
 * and they count as completions. */
inline std::vector<JobId> check_loss_termination(const std::vector<JobRecord>& jobs,
                                                 const SchedulerConfig& cfg) {
  std::vector<JobId> out;
  if (!cfg.loss_termination) return out;
  for (const auto& j : jobs) {
    if (j.converge_at_fraction) {
      const auto target = static_cast<std::int64_t>(
          std::ceil(*j.converge_at_fraction * static_cast<double>(j.total_iterations) - 1e-9));
      if (j.completed_iterations >= target) out.push_back(j.job_id);
      continue;
    }
    if (j.target_loss) {
      auto it = j.metrics.find("loss");
      if (it != j.metrics.end() && !it->second.empty() && it->second.back() <= *j.target_loss)
        out.push_back(j.job_id);
    }
  }
  return out;
}

}  // namespace schedkit
