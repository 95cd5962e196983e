#pragma once

#include <deque>
#include <vector>

#include "schedkit/core_state.hpp"
#include "schedkit/types.hpp"

namespace schedkit {

enum class AdmissionKind { AcceptAll, ThresholdFifo };

struct AdmissionConfig {
  AdmissionKind kind = AdmissionKind::AcceptAll;
  double factor = 1.5;  // cap = factor * total GPUs (ThresholdFifo)

  void validate() const {
    if (kind == AdmissionKind::ThresholdFifo && factor <= 0)
      throw ConfigError("admission.factor", "must be > 0");
  }
};

// GPU demand currently admitted and not yet finished.
inline int admitted_demand(const JobState& jobs) {
  int d = 0;
  for (const auto& [id, j] : jobs.active)
    if (j.schedulable()) d += j.gpu_demand;
  return d;
}

/* Gate newly arrived jobs. AcceptAll drains the hold queue and accepts
 * everything. ThresholdFifo releases jobs strictly in arrival order (hold
 * queue first) while admitted demand stays within factor * capacity; the
 * first job that does not fit blocks everything behind it — no backfilling.
 * The hold queue is the policy's persistent state across rounds. */
inline std::vector<JobRecord> admit(std::vector<JobRecord> new_jobs, const JobState& jobs,
                                    const ClusterState& cluster, const AdmissionConfig& cfg,
                                    std::deque<JobRecord>& hold_queue) {
  cfg.validate();
  std::vector<JobRecord> accepted;
  if (cfg.kind == AdmissionKind::AcceptAll) {
    while (!hold_queue.empty()) {
      accepted.push_back(hold_queue.front());
      hold_queue.pop_front();
    }
    for (auto& j : new_jobs) accepted.push_back(std::move(j));
    return accepted;
  }

  const double cap = cfg.factor * cluster.total_gpus();
  double demand = admitted_demand(jobs);
  for (auto& j : new_jobs) hold_queue.push_back(std::move(j));
  while (!hold_queue.empty()) {
    const JobRecord& head = hold_queue.front();
    if (demand + head.gpu_demand > cap) break;
    demand += head.gpu_demand;
    accepted.push_back(head);
    hold_queue.pop_front();
  }
  return accepted;
}

}  // namespace schedkit
