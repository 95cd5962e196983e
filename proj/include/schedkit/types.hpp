#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace schedkit {

using JobId = int;
using NodeId = int;
using GpuId = int;
using Seconds = double;

/* Lifecycle of a job. Legal transitions:
 *   Waiting -> Admitted -> Running <-> Suspended
 *   Running | Suspended -> Finished | Terminated
 */
enum class Phase { Waiting, Admitted, Running, Suspended, Finished, Terminated };

enum class PlacementKind { Consolidated, Spread };

inline const char* to_string(Phase p) {
  switch (p) {
    case Phase::Waiting: return "waiting";
    case Phase::Admitted: return "admitted";
    case Phase::Running: return "running";
    case Phase::Suspended: return "suspended";
    case Phase::Finished: return "finished";
    case Phase::Terminated: return "terminated";
  }
  return "?";
}

inline const char* to_string(PlacementKind k) {
  return k == PlacementKind::Consolidated ? "consolidated" : "spread";
}

inline bool phase_transition_ok(Phase from, Phase to) {
  switch (from) {
    case Phase::Waiting: return to == Phase::Admitted;
    case Phase::Admitted: return to == Phase::Running;
    case Phase::Running:
      return to == Phase::Suspended || to == Phase::Finished || to == Phase::Terminated;
    case Phase::Suspended:
      return to == Phase::Running || to == Phase::Finished || to == Phase::Terminated;
    case Phase::Finished:
    case Phase::Terminated: return false;
  }
  return false;
}

struct SchedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A launch targeted a GPU that is still occupied.
struct ConflictError : SchedError {
  using SchedError::SchedError;
};

struct UnknownJobError : SchedError {
  using SchedError::SchedError;
};

struct InvalidTransitionError : SchedError {
  using SchedError::SchedError;
};

// Malformed input file; message carries the line number.
struct ParseError : SchedError {
  using SchedError::SchedError;
};

// Bad or missing configuration; message names the offending key.
struct ConfigError : SchedError {
  explicit ConfigError(const std::string& key, const std::string& what)
      : SchedError("config key '" + key + "': " + what), key(key) {}
  std::string key;
};

// No profile row usable for a requested (model, gpu_count).
struct ProfileError : SchedError {
  using SchedError::SchedError;
};

struct IncompleteWindowError : SchedError {
  using SchedError::SchedError;
};

// Simulation made no progress for a very long time.
struct StallError : SchedError {
  using SchedError::SchedError;
};

// Lease harness ran out of deliverable events before all workers exited.
struct HarnessDeadlockError : SchedError {
  using SchedError::SchedError;
};

}  // namespace schedkit
