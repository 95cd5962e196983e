#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "schedkit/iter_table.hpp"
#include "schedkit/types.hpp"

namespace schedkit {

/* One submitted-but-unfinished job. Everything the policies read lives here;
 * the engine owns the mutable bookkeeping fields at the bottom. */
struct JobRecord {
  JobId job_id = -1;
  Seconds arrival_time = 0;
  int gpu_demand = 1;
  std::int64_t total_iterations = 0;
  IterTable iter_time_profile;
  std::int64_t completed_iterations = 0;
  double attained_service = 0;  // GPU-seconds
  Phase phase = Phase::Waiting;
  std::optional<Seconds> first_scheduled_time;
  std::optional<Seconds> finish_time;
  Seconds restart_overhead = 30;
  bool placement_sensitive = false;
  std::map<std::string, std::vector<double>> metrics;  // generic key -> series
  std::optional<double> converge_at_fraction;
  std::optional<double> target_loss;
  std::string model_name;

  // Engine bookkeeping.
  std::vector<GpuId> alloc;       // GPUs currently held (Running only)
  std::vector<GpuId> prev_alloc;  // allocation before the last launch
  Seconds overhead_left = 0;      // restart overhead still to be consumed
  std::int64_t carry_us = 0;      // fractional-iteration remainder, microseconds
  int preemption_count = 0;

  void transition(Phase to) {
    if (!phase_transition_ok(phase, to)) {
      throw InvalidTransitionError("job " + std::to_string(job_id) + ": illegal transition " +
                                   std::string(to_string(phase)) + " -> " + to_string(to));
    }
    phase = to;
  }

  bool schedulable() const {
    return phase == Phase::Admitted || phase == Phase::Running || phase == Phase::Suspended;
  }

  std::int64_t remaining_iterations() const { return total_iterations - completed_iterations; }
};

struct NodeSpec {
  NodeId node_id = 0;
  int gpu_count = 0;
  std::string gpu_type = "v100";
  std::vector<std::vector<double>> intra_node_bw;  // Gbps, symmetric, zero diagonal
  double inter_node_bw = 10.0;                     // Gbps

  /* Default matrix for a 4-GPU node: GPUs i and (n-1-i) form a double-rate
   * pair, every other link runs at the base rate. */
  static std::vector<std::vector<double>> paired_bw_matrix(int n, double base = 50.0) {
    std::vector<std::vector<double>> bw(n, std::vector<double>(n, base));
    for (int i = 0; i < n; ++i) {
      bw[i][i] = 0;
      int j = n - 1 - i;
      if (j != i) bw[i][j] = bw[j][i] = 2 * base;
    }
    return bw;
  }

  void validate() const {
    if (static_cast<int>(intra_node_bw.size()) != gpu_count)
      throw SchedError("node " + std::to_string(node_id) + ": bandwidth matrix size mismatch");
    for (int i = 0; i < gpu_count; ++i) {
      if (static_cast<int>(intra_node_bw[i].size()) != gpu_count)
        throw SchedError("node " + std::to_string(node_id) + ": bandwidth matrix not square");
      if (intra_node_bw[i][i] != 0)
        throw SchedError("node " + std::to_string(node_id) + ": bandwidth diagonal must be zero");
      for (int j = 0; j < gpu_count; ++j) {
        if (intra_node_bw[i][j] != intra_node_bw[j][i])
          throw SchedError("node " + std::to_string(node_id) + ": bandwidth matrix not symmetric");
        if (i != j && intra_node_bw[i][j] <= 0)
          throw SchedError("node " + std::to_string(node_id) + ": off-diagonal bandwidth must be > 0");
      }
    }
  }
};

/* One row per GPU. free_memory_mb and sharing are carried for schema
 * completeness; no in-scope policy reads them. */
struct GpuRow {
  NodeId node_id = 0;
  GpuId global_gpu_id = 0;
  int local_gpu_id = 0;
  std::string gpu_type = "v100";
  std::optional<JobId> occupant;  // empty = Free
  std::optional<double> free_memory_mb;
  std::optional<std::vector<JobId>> sharing;
};

struct ClusterState {
  std::vector<GpuRow> rows;  // indexed by global_gpu_id, contiguous from 0
  std::map<NodeId, NodeSpec> nodes;

  static ClusterState uniform(int node_count, int gpus_per_node, const std::string& gpu_type = "v100",
                              double base_bw = 50.0, double inter_node_bw = 10.0) {
    ClusterState c;
    GpuId next = 0;
    for (NodeId n = 0; n < node_count; ++n) {
      NodeSpec spec;
      spec.node_id = n;
      spec.gpu_count = gpus_per_node;
      spec.gpu_type = gpu_type;
      spec.intra_node_bw = NodeSpec::paired_bw_matrix(gpus_per_node, base_bw);
      spec.inter_node_bw = inter_node_bw;
      c.nodes[n] = spec;
      for (int l = 0; l < gpus_per_node; ++l) {
        GpuRow row;
        row.node_id = n;
        row.global_gpu_id = next++;
        row.local_gpu_id = l;
        row.gpu_type = gpu_type;
        c.rows.push_back(row);
      }
    }
    return c;
  }

  int total_gpus() const { return static_cast<int>(rows.size()); }

  int free_count() const {
    int n = 0;
    for (const auto& r : rows) n += !r.occupant.has_value();
    return n;
  }

  void release_job(JobId id) {
    for (auto& r : rows)
      if (r.occupant == id) r.occupant.reset();
  }

  std::vector<GpuId> gpus_of(JobId id) const {
    std::vector<GpuId> out;
    for (const auto& r : rows)
      if (r.occupant == id) out.push_back(r.global_gpu_id);
    return out;
  }

  // True when every GPU of the given set sits on one node.
  bool single_node(const std::vector<GpuId>& gpus) const {
    if (gpus.empty()) return true;
    NodeId n = rows[gpus.front()].node_id;
    return std::all_of(gpus.begin(), gpus.end(),
                       [&](GpuId g) { return rows[g].node_id == n; });
  }

  int span_nodes(const std::vector<GpuId>& gpus) const {
    std::set<NodeId> ns;
    for (GpuId g : gpus) ns.insert(rows[g].node_id);
    return static_cast<int>(ns.size());
  }
};

inline std::vector<GpuId> free_gpus(const ClusterState& cluster) {
  std::vector<GpuId> out;
  for (const auto& r : cluster.rows)
    if (!r.occupant.has_value()) out.push_back(r.global_gpu_id);
  return out;  // rows are stored in global id order
}

struct FinishedEntry {
  JobId job_id = -1;
  Seconds arrival_time = 0;
  std::optional<Seconds> first_scheduled_time;
  Seconds finish_time = 0;
  int gpu_demand = 1;
  int preemptions = 0;
  double gpu_seconds = 0;
  bool terminated_early = false;
};

struct JobState {
  std::map<JobId, JobRecord> active;
  std::vector<FinishedEntry> finished_log;  // append-only, sorted by finish_time
};

/* Move every completed or Terminated active job to the finished log. A finish
 * instant recorded during progress crediting is kept; jobs without one (loss
 * terminations) finish at `now`. Returns the moved ids. */
inline std::vector<JobId> prune_finished(JobState& jobs, Seconds now) {
  std::vector<JobId> moved;
  for (auto& [id, j] : jobs.active) {
    const bool done = j.completed_iterations >= j.total_iterations && j.total_iterations > 0;
    const bool terminated = j.phase == Phase::Terminated;
    if (done || terminated) {
      if (done && j.phase != Phase::Terminated) j.transition(Phase::Finished);
      if (!j.finish_time) j.finish_time = now;
      moved.push_back(id);
    }
  }
  std::vector<FinishedEntry> batch;
  for (JobId id : moved) {
    const JobRecord& j = jobs.active.at(id);
    FinishedEntry e;
    e.job_id = id;
    e.arrival_time = j.arrival_time;
    e.first_scheduled_time = j.first_scheduled_time;
    e.finish_time = *j.finish_time;
    e.gpu_demand = j.gpu_demand;
    e.preemptions = j.preemption_count;
    e.gpu_seconds = j.attained_service;
    e.terminated_early = j.phase == Phase::Terminated;
    batch.push_back(e);
  }
  std::sort(batch.begin(), batch.end(), [](const FinishedEntry& a, const FinishedEntry& b) {
    return a.finish_time != b.finish_time ? a.finish_time < b.finish_time : a.job_id < b.job_id;
  });
  for (auto& e : batch) jobs.finished_log.push_back(e);
  for (JobId id : moved) jobs.active.erase(id);
  return moved;
}

/* Output of one scheduling round. `to_launch` lists may be shorter than
 * gpu_demand when the scheduling policy granted fewer GPUs (Optimus-like);
 * they are never longer. */
struct RoundDecision {
  std::map<JobId, std::vector<GpuId>> to_launch;
  std::vector<JobId> to_suspend;
  std::vector<JobId> renewals;

  bool empty() const { return to_launch.empty() && to_suspend.empty() && renewals.empty(); }
};

inline void validate_decision(const RoundDecision& d, const ClusterState& cluster,
                              const JobState& jobs) {
  std::set<JobId> suspends(d.to_suspend.begin(), d.to_suspend.end());
  std::set<GpuId> claimed;
  for (const auto& [id, gpus] : d.to_launch) {
    auto it = jobs.active.find(id);
    if (it == jobs.active.end())
      throw UnknownJobError("launch of unknown job " + std::to_string(id));
    if (suspends.count(id))
      throw ConflictError("job " + std::to_string(id) + " both launched and suspended");
    if (gpus.empty() || static_cast<int>(gpus.size()) > it->second.gpu_demand)
      throw ConflictError("job " + std::to_string(id) + ": launch list size " +
                          std::to_string(gpus.size()) + " outside [1, demand=" +
                          std::to_string(it->second.gpu_demand) + "]");
    for (GpuId g : gpus) {
      if (g < 0 || g >= cluster.total_gpus())
        throw ConflictError("launch references unknown gpu " + std::to_string(g));
      if (!claimed.insert(g).second)
        throw ConflictError("gpu " + std::to_string(g) + " appears in two launch lists");
    }
  }
  for (JobId id : d.to_suspend) {
    auto it = jobs.active.find(id);
    if (it == jobs.active.end())
      throw UnknownJobError("suspend of unknown job " + std::to_string(id));
    if (it->second.phase != Phase::Running)
      throw ConflictError("suspend of non-running job " + std::to_string(id));
  }
}

/* Apply a round decision: suspensions first, then launches. A launched job
 * that is still Running moves: its old GPUs are released before any launch
 * claims targets. A launch whose allocation differs from the job's previous
 * one is charged restart_overhead, consumed by the next progress credit. */
inline void apply_decision(ClusterState& cluster, JobState& jobs, const RoundDecision& d,
                           Seconds now) {
  validate_decision(d, cluster, jobs);

  // Dry-run the occupancy check so a bad decision leaves the state untouched:
  // a launch target must be free once suspensions and moves have released GPUs.
  std::set<JobId> releasing(d.to_suspend.begin(), d.to_suspend.end());
  for (const auto& [id, gpus] : d.to_launch)
    if (jobs.active.at(id).phase == Phase::Running) releasing.insert(id);
  for (const auto& [id, gpus] : d.to_launch) {
    for (GpuId g : gpus) {
      const auto& occ = cluster.rows[g].occupant;
      if (occ.has_value() && !releasing.count(*occ))
        throw ConflictError("launch of job " + std::to_string(id) + " targets occupied gpu " +
                            std::to_string(g));
    }
  }

  for (JobId id : d.to_suspend) {
    JobRecord& j = jobs.active.at(id);
    j.transition(Phase::Suspended);
    j.prev_alloc = j.alloc;
    j.alloc.clear();
    j.preemption_count += 1;
    cluster.release_job(id);
  }
  for (const auto& [id, gpus] : d.to_launch) {
    JobRecord& j = jobs.active.at(id);
    if (j.phase == Phase::Running) {
      j.prev_alloc = j.alloc;
      j.alloc.clear();
      j.preemption_count += 1;
      cluster.release_job(id);
    }
  }
  for (const auto& [id, gpus] : d.to_launch) {
    JobRecord& j = jobs.active.at(id);
    std::vector<GpuId> sorted = gpus;
    std::sort(sorted.begin(), sorted.end());
    for (GpuId g : sorted) cluster.rows[g].occupant = id;
    if (j.phase != Phase::Running) j.transition(Phase::Running);
    if (!j.first_scheduled_time) j.first_scheduled_time = now;
    if (sorted != j.prev_alloc) j.overhead_left = j.restart_overhead;
    j.alloc = sorted;
  }
}

}  // namespace schedkit
