#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "schedkit/core_state.hpp"
#include "schedkit/rng.hpp"
#include "schedkit/scheduling.hpp"
#include "schedkit/types.hpp"

namespace schedkit {

enum class PlacementPolicyKind { FirstFree, Consolidated, TiresiasSkew, ProfileGuided };

inline const char* to_string(PlacementPolicyKind k) {
  switch (k) {
    case PlacementPolicyKind::FirstFree: return "first_free";
    case PlacementPolicyKind::Consolidated: return "consolidated";
    case PlacementPolicyKind::TiresiasSkew: return "tiresias";
    case PlacementPolicyKind::ProfileGuided: return "profile_guided";
  }
  return "?";
}

// How local GPUs are picked once a single-node allocation is decided.
enum class IntraNodeMode { Lowest, Random, BandwidthAware };

struct PlacementConfig {
  PlacementPolicyKind kind = PlacementPolicyKind::Consolidated;
  IntraNodeMode intra_node = IntraNodeMode::Lowest;
  std::map<std::string, bool> skew_flags;            // TiresiasSkew input
  std::map<std::string, bool> consolidation_benefit;  // ProfileGuided input

  void validate() const {
    if (kind == PlacementPolicyKind::TiresiasSkew && skew_flags.empty())
      throw ConfigError("placement.skew_flags", "required for tiresias placement");
    if (kind == PlacementPolicyKind::ProfileGuided && consolidation_benefit.empty())
      throw ConfigError("placement.consolidation_benefit", "required for profile_guided placement");
  }
};

// One intra-node multi-GPU launch, with the bandwidth a random local
// assignment from the same free set would have seen.
struct PlacementEvent {
  JobId job_id = -1;
  NodeId node_id = 0;
  int gpu_count = 0;
  double bandwidth_gbps = 0;
  double random_baseline_gbps = 0;
};

namespace placement_detail {

// GPUs available to this round's launches, grouped per node, ascending ids.
struct Pool {
  std::map<NodeId, std::vector<GpuId>> per_node;
  int total = 0;

  void add(const ClusterState& c, GpuId g) {
    per_node[c.rows[g].node_id].push_back(g);
    ++total;
  }
  void finalize() {
    for (auto& [n, v] : per_node) std::sort(v.begin(), v.end());
  }
  void remove(const ClusterState& c, const std::vector<GpuId>& gpus) {
    for (GpuId g : gpus) {
      auto& v = per_node[c.rows[g].node_id];
      v.erase(std::remove(v.begin(), v.end(), g), v.end());
      --total;
    }
  }
  int avail(NodeId n) const {
    auto it = per_node.find(n);
    return it == per_node.end() ? 0 : static_cast<int>(it->second.size());
  }
};

inline double mean_pair_bandwidth(const NodeSpec& node, const std::vector<int>& locals) {
  if (locals.size() < 2) return 0;
  double sum = 0;
  int pairs = 0;
  for (std::size_t i = 0; i < locals.size(); ++i)
    for (std::size_t j = i + 1; j < locals.size(); ++j) {
      sum += node.intra_node_bw[locals[i]][locals[j]];
      ++pairs;
    }
  return sum / pairs;
}

inline std::vector<int> k_subset_sample(std::mt19937_64& rng, std::vector<int> pool, int k) {
  std::vector<int> out;
  for (int i = 0; i < k; ++i) {
    auto idx = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(pool.size()) - 1));
    out.push_back(pool[idx]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(idx));
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace placement_detail

/* Among free subsets of `size` local GPUs on one node, the subset with the
 * maximum aggregate pairwise bandwidth; ties go to the lexicographically
 * smallest id set. Node sizes are small, so the search is exhaustive. */
inline std::vector<int> refine_intra_node(int size, const std::vector<int>& free_locals,
                                          const NodeSpec& node) {
  if (size >= static_cast<int>(free_locals.size()))
    return free_locals;  // no choice to make
  std::vector<int> pick(static_cast<std::size_t>(size));
  std::vector<int> best;
  double best_sum = -1;
  // enumerate combinations of indices into free_locals
  std::vector<int> idx(static_cast<std::size_t>(size));
  for (int i = 0; i < size; ++i) idx[static_cast<std::size_t>(i)] = i;
  const int n = static_cast<int>(free_locals.size());
  while (true) {
    double sum = 0;
    for (int i = 0; i < size; ++i)
      for (int j = i + 1; j < size; ++j)
        sum += node.intra_node_bw[free_locals[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])]]
                                 [free_locals[static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])]];
    if (sum > best_sum + 1e-12) {
      best_sum = sum;
      best.clear();
      for (int i = 0; i < size; ++i) best.push_back(free_locals[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])]);
    }
    // next combination (free_locals ascending makes first hit lexicographically
    // smallest, so strict improvement keeps the tie rule)
    int i = size - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - size + i) --i;
    if (i < 0) break;
    ++idx[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < size; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
  return best;
}

/* Node set for a consolidated placement: fewest nodes spanned, then fewest
 * leftover free GPUs on the touched nodes, then lowest node ids. Returns
 * nullopt when demand exceeds the pool. */
inline std::optional<std::vector<NodeId>> choose_nodes_consolidated(
    int demand, const std::vector<std::pair<NodeId, int>>& avail) {
  int total = 0;
  for (auto& [n, a] : avail) total += a;
  if (demand > total || demand < 1) return std::nullopt;

  // single-node fast path: least leftover, lowest id
  std::optional<NodeId> best_single;
  int best_leftover = 1 << 30;
  for (auto& [n, a] : avail) {
    if (a >= demand && a - demand < best_leftover) {
      best_leftover = a - demand;
      best_single = n;
    }
  }
  if (best_single) return std::vector<NodeId>{*best_single};

  // minimal span k from the descending-availability prefix
  std::vector<int> counts;
  for (auto& [n, a] : avail)
    if (a > 0) counts.push_back(a);
  std::sort(counts.rbegin(), counts.rend());
  int k = 0, acc = 0;
  while (acc < demand) acc += counts[static_cast<std::size_t>(k++)];

  // exact search for the size-k node set: min total availability (= min
  // leftover), then lexicographically smallest id sequence
  std::vector<std::pair<NodeId, int>> nodes;
  for (auto& [n, a] : avail)
    if (a > 0) nodes.push_back({n, a});
  std::vector<int> suffix_top(nodes.size() + 1, 0);  // best achievable sum of j picks from i..
  std::vector<NodeId> best_set;
  int best_sum = 1 << 30;
  std::vector<NodeId> cur;
  auto dfs = [&](auto&& self, std::size_t i, int chosen, int sum) -> void {
    if (chosen == k) {
      if (sum >= demand && sum < best_sum) {
        best_sum = sum;
        best_set = cur;
      }
      return;
    }
    if (i >= nodes.size()) return;
    if (static_cast<int>(nodes.size() - i) < k - chosen) return;
    if (sum >= best_sum) return;  // can only grow
    // upper bound on remaining sum: take the largest k-chosen from the suffix
    std::vector<int> rest;
    for (std::size_t j = i; j < nodes.size(); ++j) rest.push_back(nodes[j].second);
    std::sort(rest.rbegin(), rest.rend());
    int ub = sum;
    for (int j = 0; j < k - chosen; ++j) ub += rest[static_cast<std::size_t>(j)];
    if (ub < demand) return;

    cur.push_back(nodes[i].first);
    self(self, i + 1, chosen + 1, sum + nodes[i].second);
    cur.pop_back();
    self(self, i + 1, chosen, sum);
  };
  dfs(dfs, 0, 0, 0);
  if (best_set.empty()) return std::nullopt;
  return best_set;
}

/* Consolidated GPU choice over an explicit free set (exposed for direct use
 * and testing; `place` uses the same logic against its working pool). */
inline std::optional<std::vector<GpuId>> choose_gpus_consolidated(int demand,
                                                                  const ClusterState& cluster) {

  placement_detail::Pool pool;
  for (GpuId g : free_gpus(cluster)) pool.add(cluster, g);
  pool.finalize();
  std::vector<std::pair<NodeId, int>> avail;
  for (auto& [n, v] : pool.per_node) avail.push_back({n, static_cast<int>(v.size())});
  auto nodes = choose_nodes_consolidated(demand, avail);
  if (!nodes) return std::nullopt;
  std::vector<GpuId> out;
  int left = demand;
  for (NodeId n : *nodes) {
    const auto& v = pool.per_node[n];
    int take = std::min(left, static_cast<int>(v.size()));
    out.insert(out.end(), v.begin(), v.begin() + take);
    left -= take;
  }
  return out;
}

/* Best-fit fragment filling: consume the smallest free fragments first so the
 * large holes stay intact for placement-sensitive jobs. */
inline std::optional<std::vector<GpuId>> choose_gpus_best_fit(int demand,
                                                              const ClusterState& cluster) {
  placement_detail::Pool pool;
  for (GpuId g : free_gpus(cluster)) pool.add(cluster, g);
  pool.finalize();
  if (demand > pool.total || demand < 1) return std::nullopt;
  std::vector<std::pair<NodeId, int>> frags;
  for (auto& [n, v] : pool.per_node)
    if (!v.empty()) frags.push_back({n, static_cast<int>(v.size())});
  std::sort(frags.begin(), frags.end(), [](auto& a, auto& b) {
    return a.second != b.second ? a.second < b.second : a.first < b.first;
  });
  std::vector<GpuId> out;
  int left = demand;
  for (auto& [n, sz] : frags) {
    if (left <= 0) break;
    const auto& v = pool.per_node[n];
    int take = std::min(left, sz);
    out.insert(out.end(), v.begin(), v.begin() + take);
    left -= take;
  }
  return out;
}

inline std::optional<std::vector<GpuId>> choose_gpus_tiresias(
    const JobRecord& job, const ClusterState& cluster, const std::map<std::string, bool>& skew) {
  auto it = skew.find(job.model_name);
  const bool consolidate = it != skew.end() && it->second;
  return consolidate ? choose_gpus_consolidated(job.gpu_demand, cluster)
                     : choose_gpus_best_fit(job.gpu_demand, cluster);
}

// Same dispatch as the skew heuristic, keyed on measured benefit instead.
inline std::optional<std::vector<GpuId>> choose_gpus_profile_guided(
    const JobRecord& job, const ClusterState& cluster,
    const std::map<std::string, bool>& benefit) {
  auto it = benefit.find(job.model_name);
  const bool consolidate = it != benefit.end() && it->second;
  return consolidate ? choose_gpus_consolidated(job.gpu_demand, cluster)
                     : choose_gpus_best_fit(job.gpu_demand, cluster);
}

/* Map a round's priority list onto concrete GPUs.
 *
 * Stage 1 walks the ranked list and keeps every job whose grant still fits
 * into the remaining GPU budget (count-based, so lower-ranked small jobs may
 * backfill around a skipped large one). Stage 2 suspends the running jobs
 * that were not kept; kept running jobs whose grant is unchanged renew their
 * exact GPU set and never move. Stage 3 assigns GPUs to the rest, in rank
 * order, from the pool of free plus victim GPUs according to the policy
 * kind, refining local GPU choice per the intra-node mode.
 *
 * `rng` feeds the random / bandwidth-baseline local choices; `events`
 * collects intra-node multi-GPU launches. Both may be null. */
inline RoundDecision place(const PrioritizedJobs& ranked, const ClusterState& cluster,
                           const JobState& jobs, const PlacementConfig& cfg,
                           std::mt19937_64* rng = nullptr,
                           std::vector<PlacementEvent>* events = nullptr) {
  cfg.validate();
  RoundDecision d;

  // Stage 1: count-based selection of the ranked prefix (with backfill).
  int budget = cluster.total_gpus();
  std::map<JobId, int> grant;  // selected job -> gpus this round
  std::vector<JobId> selected_order;
  for (const auto& pj : ranked) {
    const JobRecord& j = jobs.active.at(pj.job_id);
    if (!j.schedulable()) continue;
    const int g = std::min(pj.granted_gpus, j.gpu_demand);
    if (g < 1 || g > budget) continue;
    budget -= g;
    grant[pj.job_id] = g;
    selected_order.push_back(pj.job_id);
  }

  // Stage 2: victims and renewals.
  placement_detail::Pool pool;
  for (GpuId g : free_gpus(cluster)) pool.add(cluster, g);
  for (const auto& [id, j] : jobs.active) {
    if (j.phase != Phase::Running) continue;
    auto it = grant.find(id);
    if (it == grant.end()) {
      d.to_suspend.push_back(id);
      for (GpuId g : j.alloc) pool.add(cluster, g);
    } else if (it->second != static_cast<int>(j.alloc.size())) {
      for (GpuId g : j.alloc) pool.add(cluster, g);  // resized: relaunch below
    } else {
      d.renewals.push_back(id);
    }
  }
  pool.finalize();

  // Stage 3: concrete GPUs for everything that launches this round.
  for (JobId id : selected_order) {
    const JobRecord& j = jobs.active.at(id);
    const int need = grant.at(id);
    if (j.phase == Phase::Running && need == static_cast<int>(j.alloc.size())) continue;

    std::vector<std::pair<NodeId, int>> avail;
    for (auto& [n, v] : pool.per_node)
      if (!v.empty()) avail.push_back({n, static_cast<int>(v.size())});

    bool consolidate;
    switch (cfg.kind) {
      case PlacementPolicyKind::FirstFree: consolidate = false; break;
      case PlacementPolicyKind::Consolidated: consolidate = true; break;
      case PlacementPolicyKind::TiresiasSkew: {
        auto it = cfg.skew_flags.find(j.model_name);
        consolidate = it != cfg.skew_flags.end() && it->second;
        break;
      }
      case PlacementPolicyKind::ProfileGuided: {
        auto it = cfg.consolidation_benefit.find(j.model_name);
        consolidate = it != cfg.consolidation_benefit.end() && it->second;
        break;
      }
    }

    std::vector<std::pair<NodeId, int>> takes;  // (node, how many)
    if (cfg.kind == PlacementPolicyKind::FirstFree) {
      // lowest global ids across the pool
      std::vector<GpuId> all;
      for (auto& [n, v] : pool.per_node) all.insert(all.end(), v.begin(), v.end());
      std::sort(all.begin(), all.end());
      std::map<NodeId, int> per_node;
      for (int i = 0; i < need; ++i) per_node[cluster.rows[all[static_cast<std::size_t>(i)]].node_id]++;
      for (auto& [n, c] : per_node) takes.push_back({n, c});
    } else if (consolidate) {
      auto nodes = choose_nodes_consolidated(need, avail);
      int left = need;
      for (NodeId n : *nodes) {
        int take = std::min(left, pool.avail(n));
        takes.push_back({n, take});
        left -= take;
      }
    } else {
      std::sort(avail.begin(), avail.end(), [](auto& a, auto& b) {
        return a.second != b.second ? a.second < b.second : a.first < b.first;
      });
      int left = need;
      for (auto& [n, sz] : avail) {
        if (left <= 0) break;
        int take = std::min(left, sz);
        takes.push_back({n, take});
        left -= take;
      }
    }

    std::vector<GpuId> chosen;
    for (auto& [n, count] : takes) {
      const auto& node_pool = pool.per_node[n];
      std::vector<int> locals;
      for (GpuId g : node_pool) locals.push_back(cluster.rows[g].local_gpu_id);
      std::vector<int> picked_locals;
      const bool whole_alloc_on_node = takes.size() == 1;
      if (whole_alloc_on_node && count >= 2 && cfg.intra_node != IntraNodeMode::Lowest && rng) {
        if (cfg.intra_node == IntraNodeMode::BandwidthAware) {
          picked_locals = refine_intra_node(count, locals, cluster.nodes.at(n));
        } else {
          picked_locals = placement_detail::k_subset_sample(*rng, locals, count);
        }
      } else {
        picked_locals.assign(locals.begin(), locals.begin() + count);
      }
      if (events && whole_alloc_on_node && count >= 2) {
        PlacementEvent ev;
        ev.job_id = id;
        ev.node_id = n;
        ev.gpu_count = count;
        ev.bandwidth_gbps = placement_detail::mean_pair_bandwidth(cluster.nodes.at(n), picked_locals);
        ev.random_baseline_gbps =
            (cfg.intra_node == IntraNodeMode::BandwidthAware && rng)
                ? placement_detail::mean_pair_bandwidth(
                      cluster.nodes.at(n), placement_detail::k_subset_sample(*rng, locals, count))
                : ev.bandwidth_gbps;
        events->push_back(ev);
      }
      // map locals back to global ids on this node
      for (int l : picked_locals) {
        for (GpuId g : node_pool) {
          if (cluster.rows[g].local_gpu_id == l) {
            chosen.push_back(g);
            break;
          }
        }
      }
    }
    pool.remove(cluster, chosen);
    std::sort(chosen.begin(), chosen.end());
    d.to_launch[id] = chosen;
  }
  return d;
}

}  // namespace schedkit
