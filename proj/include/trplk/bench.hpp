// Copyright (c) 2026 The trplk contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "trplk/pl1.hpp"
#include "trplk/solver.hpp"

namespace trplk {

/// Bad run configuration (exit code 1 in the CLI).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct RunConfig {
  /// Exactly one of matrix_path and generate is set.
  std::string matrix_path;
  std::string matrix_b_path;
  /// kind:n[:param]; param is the cluster decay for diag_clustered.
  std::string generate;
  /// trplk, trlan, lobpcg, pl1 or lanczos.
  std::string solver = "trplk";
  SolverConfig solver_cfg;
  /// PL+1 inner steps m.
  std::size_t inner_steps = 1;
  bool lobpcg_search_directions = false;
  /// PL+1 start at this angle from the reference eigenvector.
  std::optional<double> theta0;
  bool trace_quasiopt = false;
  std::size_t repetitions = 1;

  /// Throws ConfigError on inconsistent settings.
  void validate() const;
};

struct RunReport {
  std::string solver;
  RunConfig config;
  std::size_t n = 0;
  std::size_t nnz = 0;
  SolveStatus status = SolveStatus::max_cycles;
  Vector eigenvalues;
  Vector residual_norms;
  MatvecCounter counters;
  std::size_t cycles = 0;
  std::size_t reseeds = 0;
  double a_norm_f = 0.0;
  /// Fastest of the repetitions.
  double wall_seconds = 0.0;
  std::size_t duplicate_entries = 0;
  std::vector<CycleRecord> history;
  std::optional<QuasiOptTrace> trace;
};

RunReport run_benchmark(const RunConfig& cfg);

enum class SweepAxis { max_basis, plus_k, theta0 };
SweepAxis parse_sweep_axis(std::string_view name);
std::string_view to_string(SweepAxis axis);

struct SweepEntry {
  double value = 0.0;
  std::optional<RunReport> report;
  /// Set when the run threw.
  std::string error;
};

/// One run per value with the shared seed. A max_basis value that leaves no
/// room for inner steps shrinks the restart size to max(nev, (q - l) / 2).
/// Errors are recorded per entry.
std::vector<SweepEntry> run_sweep(const RunConfig& base, SweepAxis axis, const std::vector<double>& values);

nlohmann::ordered_json to_json(const RunReport& report);
nlohmann::ordered_json to_json(const std::vector<SweepEntry>& sweep, SweepAxis axis);

/// cycle,matvecs,precond_applies,target_index,rho,resid_norm
void write_history_csv(std::ostream& out, const std::vector<CycleRecord>& history);

/// <axis>,matvecs,precond_applies,seconds,status
void write_sweep_csv(std::ostream& out, const std::vector<SweepEntry>& sweep, SweepAxis axis);

/// CLI exit code for a status: 0 converged, 2 max_cycles, 3 breakdown.
int exit_code(SolveStatus status);

}  // namespace trplk
