#pragma once

// Drives one scenario end to end: topology, controller, distribution,
// connection and traffic replay, change events, the analytic report, and the
// cross-checks between analytic and concrete counts.

#include "acila/entrymodel.hpp"
#include "acila/fabric.hpp"
#include "acila/scenario.hpp"

#include <optional>
#include <string>
#include <vector>

namespace acila::cli {

inline constexpr int kExitPass = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitCrossCheck = 2;

struct RunOptions {
  std::optional<double> scale; // overrides / requests the assumption generator
  std::uint64_t seed = 1;
  std::optional<FilterMode> filter_mode; // falls back to the file, then gateway
  bool strict_crosscheck = true;
  // Adds one to every concrete count measured on this device.
  std::optional<std::string> inject_fault;
};

struct CrossCheck {
  std::string device;
  std::string metric;
  entry::Count analytic = 0;
  entry::Count concrete = 0;
  bool upper_bound = false; // concrete <= analytic is the requirement
  bool ok = true;
};

struct FlowSummary {
  std::string client;
  std::string server;
  Direction direction = Direction::forward;
  bool delivered = false;
  std::size_t priority_hops = 0;
  Trace trace;
};

struct ChangeSummary {
  std::string description;
  entry::Count esu = 0;          // analytic, proposed
  entry::Count plan_diff = 0;    // measured on a spine
  entry::Count elu = 0;          // analytic, conventional
  entry::Count elu_measured = 0; // conventional entry-set diff
};

struct RunReport {
  entry::EntryReport entries;
  std::vector<FlowSummary> flows;
  std::vector<ChangeSummary> changes;
  std::vector<CrossCheck> checks;

  bool passed() const;
  std::vector<CrossCheck> failures() const;
};

// Expands `generate assumption` (with opts.scale overriding alpha) into
// explicit declarations. Declarations already in the file are appended.
ScenarioFile expand(const ScenarioFile& sf, const RunOptions& opts);

// Throws ScenarioError (line-anchored) on validation failures.
RunReport run(const ScenarioFile& sf, const RunOptions& opts);

enum class Format : std::uint8_t { csv, human, trace_lines };

// Deterministic serialization of a report.
std::string emit(const RunReport& report, Format format);

// Writes emit() to `path`; returns the number of bytes written. Throws
// std::runtime_error when the file cannot be written.
std::size_t emit_to(const RunReport& report, Format format, const std::string& path);

} // namespace acila::cli
