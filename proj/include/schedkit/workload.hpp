#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "schedkit/core_state.hpp"
#include "schedkit/profiles.hpp"
#include "schedkit/rng.hpp"
#include "schedkit/types.hpp"

namespace schedkit {

struct TraceEntry {
  JobId job_id = -1;
  std::optional<Seconds> submit_time;
  int gpu_demand = 1;
  Seconds duration_isolated = 0;  // runtime when run alone to completion
  std::optional<std::string> model_name;
};

struct SpikeConfig {
  int extra_jobs = 16;        // injected per window
  double window_start_h = 9;  // offset of the window inside each period
  double window_len_h = 1;
  double period_h = 24;
};

struct BurstyConfig {
  double multiplier = 2;  // burst arrival rate = multiplier * lambda
  double on_h = 2;        // burst length
  double period_h = 4;    // a burst starts after every period
  Seconds short_job_min = 600;
  Seconds short_job_max = 3600;
  int short_job_gpus = 1;
};

struct ArrivalConfig {
  double lambda_jobs_per_hour = 4;
  std::uint64_t seed = 1;
  int count = 0;
  std::optional<SpikeConfig> spike;
  std::optional<BurstyConfig> bursty;

  void validate() const {
    if (lambda_jobs_per_hour <= 0)
      throw ConfigError("workload.lambda_jobs_per_hour", "must be > 0");
    if (spike && spike->window_len_h >= spike->period_h)
      throw ConfigError("workload.spike", "window must be shorter than period");
    if (bursty && bursty->on_h >= bursty->period_h)
      throw ConfigError("workload.bursty", "on-window must be shorter than period");
  }
};

/* Trace CSV: header `job_id,submit_time_s,gpu_demand,duration_s,model`.
 * submit_time_s and model may be empty; missing job_ids are assigned densely
 * from 0 in file order. */
inline std::vector<TraceEntry> parse_trace(std::istream& in) {
  std::vector<TraceEntry> out;
  std::string line;
  int lineno = 0;
  if (!std::getline(in, line)) throw ParseError("trace csv: empty file");
  ++lineno;
  bool any_explicit_id = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string id, submit, demand, duration, model;
    std::getline(row, id, ',');
    std::getline(row, submit, ',');
    std::getline(row, demand, ',');
    if (!std::getline(row, duration, ','))
      throw ParseError("trace csv line " + std::to_string(lineno) + ": expected 5 fields");
    std::getline(row, model);
    TraceEntry e;
    try {
      e.job_id = id.empty() ? static_cast<JobId>(out.size()) : std::stoi(id);
      if (!submit.empty()) e.submit_time = std::stod(submit);
      e.gpu_demand = std::stoi(demand);
      e.duration_isolated = std::stod(duration);
    } catch (const std::exception&) {
      throw ParseError("trace csv line " + std::to_string(lineno) + ": malformed number");
    }
    if (!id.empty()) any_explicit_id = true;
    if (e.gpu_demand < 1)
      throw ParseError("trace csv line " + std::to_string(lineno) + ": gpu_demand must be >= 1");
    if (e.duration_isolated <= 0)
      throw ParseError("trace csv line " + std::to_string(lineno) + ": duration_s must be > 0");
    if (e.submit_time && *e.submit_time < 0)
      throw ParseError("trace csv line " + std::to_string(lineno) + ": submit_time_s must be >= 0");
    if (!model.empty()) e.model_name = model;
    out.push_back(e);
  }
  (void)any_explicit_id;
  return out;
}

inline std::vector<TraceEntry> load_trace(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open trace csv: " + path);
  return parse_trace(f);
}

/* Import shim for Philly-derived trace schemas as published with prior
 * scheduler artifacts. Recognized header names: jobid/job_id,
 * submitted_time/submit_time, num_gpus/gpus/gpu_demand, run_time/duration,
 * model (optional). Values are mapped onto the native TraceEntry schema. */
inline std::vector<TraceEntry> parse_philly_trace(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw ParseError("philly csv: empty file");
  if (!header.empty() && header.back() == '\r') header.pop_back();
  std::vector<std::string> cols;
  {
    std::stringstream h(header);
    std::string c;
    while (std::getline(h, c, ',')) cols.push_back(c);
  }
  auto find_col = [&](std::initializer_list<const char*> names) -> int {
    for (std::size_t i = 0; i < cols.size(); ++i)
      for (const char* n : names)
        if (cols[i] == n) return static_cast<int>(i);
    return -1;
  };
  const int c_id = find_col({"jobid", "job_id"});
  const int c_submit = find_col({"submitted_time", "submit_time", "submit_time_s"});
  const int c_gpus = find_col({"num_gpus", "gpus", "gpu_demand"});
  const int c_dur = find_col({"run_time", "duration", "duration_s"});
  const int c_model = find_col({"model", "model_name"});
  if (c_gpus < 0 || c_dur < 0)
    throw ParseError("philly csv: need num_gpus and run_time columns");

  std::vector<TraceEntry> out;
  std::string line;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream row(line);
    std::string v;
    while (std::getline(row, v, ',')) f.push_back(v);
    auto field = [&](int idx) -> std::string {
      return idx >= 0 && idx < static_cast<int>(f.size()) ? f[idx] : "";
    };
    TraceEntry e;
    try {
      std::string id = field(c_id);
      e.job_id = id.empty() ? static_cast<JobId>(out.size()) : std::stoi(id);
      std::string submit = field(c_submit);
      if (!submit.empty()) e.submit_time = std::stod(submit);
      e.gpu_demand = std::stoi(field(c_gpus));
      e.duration_isolated = std::stod(field(c_dur));
    } catch (const std::exception&) {
      throw ParseError("philly csv line " + std::to_string(lineno) + ": malformed number");
    }
    if (e.gpu_demand < 1 || e.duration_isolated <= 0)
      throw ParseError("philly csv line " + std::to_string(lineno) + ": bad demand/duration");
    std::string model = field(c_model);
    if (!model.empty()) e.model_name = model;
    out.push_back(e);
  }
  return out;
}

/* Poisson arrival process: `count` timestamps with exponential inter-arrival
 * gaps of mean 3600/lambda seconds. Pure function of the config. */
inline std::vector<Seconds> generate_arrivals(const ArrivalConfig& cfg) {
  cfg.validate();
  std::vector<Seconds> out;
  out.reserve(cfg.count);
  auto rng = make_rng(cfg.seed, "arrivals");
  const double mean_gap = 3600.0 / cfg.lambda_jobs_per_hour;
  Seconds t = 0;
  for (int i = 0; i < cfg.count; ++i) {
    t += exponential(rng, mean_gap);
    out.push_back(t);
  }
  return out;
}

/* Drop `extra_jobs` extra arrivals uniformly into the spike window of every
 * period that starts inside the base trace's span. */
inline std::vector<Seconds> inject_spike(std::vector<Seconds> arrivals, const ArrivalConfig& cfg) {
  if (!cfg.spike) throw ConfigError("workload.spike", "spike config missing");
  const SpikeConfig& s = *cfg.spike;
  if (s.extra_jobs <= 0) return arrivals;
  const Seconds span = arrivals.empty() ? 0 : arrivals.back();
  auto rng = make_rng(cfg.seed, "spike");
  for (Seconds period_start = 0; period_start < span; period_start += s.period_h * 3600.0) {
    const Seconds lo = period_start + s.window_start_h * 3600.0;
    const Seconds hi = lo + s.window_len_h * 3600.0;
    for (int i = 0; i < s.extra_jobs; ++i) arrivals.push_back(uniform_in(rng, lo, hi));
  }
  std::sort(arrivals.begin(), arrivals.end());
  return arrivals;
}

/* Short-job bursts: inside each on-window a Poisson stream at
 * multiplier * lambda adds jobs with uniform duration in
 * [short_job_min, short_job_max]. Windows start after every full period. */
inline std::vector<TraceEntry> inject_bursty(const std::vector<Seconds>& arrivals,
                                             const ArrivalConfig& cfg) {
  if (!cfg.bursty) throw ConfigError("workload.bursty", "bursty config missing");
  const BurstyConfig& b = *cfg.bursty;
  std::vector<TraceEntry> out;
  if (b.multiplier <= 0 || arrivals.empty()) return out;
  const Seconds span = arrivals.back();
  auto rng = make_rng(cfg.seed, "bursty");
  const double rate_per_s = b.multiplier * cfg.lambda_jobs_per_hour / 3600.0;
  for (Seconds start = b.period_h * 3600.0; start < span;
       start += (b.period_h + b.on_h) * 3600.0) {
    const Seconds end = start + b.on_h * 3600.0;
    Seconds t = start + exponential(rng, 1.0 / rate_per_s);
    while (t < end) {
      TraceEntry e;
      e.submit_time = t;
      e.gpu_demand = b.short_job_gpus;
      e.duration_isolated = uniform_in(rng, b.short_job_min, b.short_job_max);
      out.push_back(e);
      t += exponential(rng, 1.0 / rate_per_s);
    }
  }
  return out;
}

/* Assign a model (uniformly at random) to every entry and materialize
 * JobRecords: total_iterations is the isolated duration divided by the
 * consolidated iteration time at the job's demand, rounded up. */
inline std::vector<JobRecord> assign_models(const std::vector<TraceEntry>& entries,
                                            const ProfileSet& profiles, std::uint64_t seed) {
  if (profiles.empty()) throw ProfileError("assign_models: no profiles");
  std::vector<const ModelProfile*> pool;
  for (auto& [name, p] : profiles) pool.push_back(&p);
  auto rng = make_rng(seed, "models");

  std::vector<JobRecord> out;
  out.reserve(entries.size());
  for (const TraceEntry& e : entries) {
    const ModelProfile* p;
    if (e.model_name) {
      auto it = profiles.find(*e.model_name);
      if (it == profiles.end()) throw ProfileError("no profile for model " + *e.model_name);
      p = &it->second;
    } else {
      p = pool[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(pool.size()) - 1))];
    }
    JobRecord j;
    j.job_id = e.job_id;
    j.arrival_time = e.submit_time.value_or(0);
    j.gpu_demand = e.gpu_demand;
    j.model_name = p->model_name;
    j.iter_time_profile = p->entries;
    j.restart_overhead = p->restart_overhead;
    j.placement_sensitive = p->placement_sensitive;
    const double it_s = p->iter_time(e.gpu_demand, PlacementKind::Consolidated);
    j.total_iterations = static_cast<std::int64_t>(std::ceil(e.duration_isolated / it_s - 1e-9));
    if (j.total_iterations < 1) j.total_iterations = 1;
    out.push_back(std::move(j));
  }
  return out;
}

/* Synthetic heavy-tailed trace in the style of enterprise GPU-cluster logs:
 * Poisson arrivals, weighted small GPU demands, log-normal durations. */
struct SyntheticTraceConfig {
  int count = 600;
  double lambda_jobs_per_hour = 8;
  std::uint64_t seed = 1;
  std::vector<int> demand_choices = {1, 2, 4, 8};
  std::vector<double> demand_weights = {0.50, 0.25, 0.15, 0.10};
  double duration_median_h = 3.0;
  double duration_sigma = 1.1;  // sigma of log(duration)
  Seconds duration_min = 360;
  Seconds duration_max = 48 * 3600.0;
};

inline std::vector<TraceEntry> synthesize_trace(const SyntheticTraceConfig& cfg) {
  ArrivalConfig ac;
  ac.lambda_jobs_per_hour = cfg.lambda_jobs_per_hour;
  ac.seed = cfg.seed;
  ac.count = cfg.count;
  std::vector<Seconds> arrivals = generate_arrivals(ac);

  auto rng = make_rng(cfg.seed, "durations");
  std::vector<TraceEntry> out;
  out.reserve(cfg.count);
  for (int i = 0; i < cfg.count; ++i) {
    TraceEntry e;
    e.job_id = i;
    e.submit_time = arrivals[i];
    e.gpu_demand = cfg.demand_choices[weighted_pick(rng, cfg.demand_weights)];
    // Box-Muller; one normal draw per job keeps the stream seed-stable.
    const double u1 = uniform01(rng), u2 = uniform01(rng);
    const double z = std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(2.0 * M_PI * u2);
    Seconds dur = cfg.duration_median_h * 3600.0 * std::exp(cfg.duration_sigma * z);
    e.duration_isolated = std::clamp(dur, cfg.duration_min, cfg.duration_max);
    out.push_back(e);
  }
  return out;
}

/* Renumber ids densely by submit time; merged traces (bursty injections) get
 * ids after sorting so ranges of ids stay contiguous in time. */
inline void finalize_job_ids(std::vector<TraceEntry>& entries) {
  std::stable_sort(entries.begin(), entries.end(), [](const TraceEntry& a, const TraceEntry& b) {
    return a.submit_time.value_or(0) < b.submit_time.value_or(0);
  });
  for (std::size_t i = 0; i < entries.size(); ++i) entries[i].job_id = static_cast<JobId>(i);
}

}  // namespace schedkit
