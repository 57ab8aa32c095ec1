// Copyright (c) 2026 The trplk contributors
// SPDX-License-Identifier: Apache-2.0

#include "trplk/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <sstream>

#include "trplk/baselines.hpp"
#include "trplk/trplk.hpp"

namespace trplk {

namespace {

struct LoadedProblem {
  SparseSymMatrix a;
  std::optional<SparseSymMatrix> b;
  std::size_t duplicates = 0;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

SparseSymMatrix generate_from_spec(const std::string& spec) {
  const auto parts = split(spec, ':');
  if (parts.size() < 2 || parts.size() > 3) throw ConfigError("--generate expects kind:n[:param], got '" + spec + "'");
  MatrixKind kind;
  try {
    kind = parse_matrix_kind(parts[0]);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  std::size_t n = 0;
  try {
    std::size_t used = 0;
    const long long v = std::stoll(parts[1], &used);
    if (used != parts[1].size() || v < 2) throw std::invalid_argument("n");
    n = static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw ConfigError("--generate: invalid dimension '" + parts[1] + "'");
  }
  GeneratorParams params;
  if (parts.size() == 3) {
    if (kind != MatrixKind::diag_clustered) throw ConfigError("--generate: only diag_clustered takes a parameter");
    try {
      params.cluster_decay = std::stod(parts[2]);
    } catch (const std::exception&) {
      throw ConfigError("--generate: invalid parameter '" + parts[2] + "'");
    }
  }
  try {
    return generate_test_matrix(kind, n, params);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

LoadedProblem load(const RunConfig& cfg) {
  LoadedProblem p{SparseSymMatrix::identity(1), std::nullopt, 0};
  if (!cfg.matrix_path.empty()) {
    ParsedMatrix parsed = read_matrix_market(cfg.matrix_path);
    p.a = std::move(parsed.matrix);
    p.duplicates = parsed.duplicate_entries;
  } else {
    p.a = generate_from_spec(cfg.generate);
  }
  if (!cfg.matrix_b_path.empty()) {
    ParsedMatrix parsed = read_matrix_market(cfg.matrix_b_path);
    if (parsed.matrix.n() != p.a.n()) throw ConfigError("--matrix-b dimension does not match the matrix");
    p.b = std::move(parsed.matrix);
    p.duplicates += parsed.duplicate_entries;
  }
  return p;
}

struct SingleRun {
  SolverReport report;
  std::optional<QuasiOptTrace> trace;
};

SingleRun solve_once(const RunConfig& cfg, const LoadedProblem& prob) {
  const SparseSymMatrix& a = prob.a;
  const SparseSymMatrix* b = prob.b ? &*prob.b : nullptr;
  const SolverConfig& sc = cfg.solver_cfg;
  BaselineOptions opts;
  opts.lobpcg_search_directions = cfg.lobpcg_search_directions;
  SingleRun out;
  if (cfg.solver == "trplk") {
    out.report = trplk_solve(a, b, sc);
  } else if (cfg.solver == "trlan") {
    out.report = trlan_solve(a, sc, opts);
  } else if (cfg.solver == "lanczos") {
    out.report = unrestarted_lanczos_solve(a, sc, opts);
  } else if (cfg.solver == "lobpcg") {
    out.report = lobpcg_solve(a, b, sc, nullptr, opts);
  } else {
    Pl1Config pc;
    pc.inner_steps = cfg.inner_steps;
    pc.tol = sc.tol;
    pc.max_cycles = sc.max_cycles;
    pc.seed = sc.seed;
    pc.trace = cfg.trace_quasiopt;
    std::optional<Vector> x0;
    if (cfg.theta0 || cfg.trace_quasiopt) {
      LowestPair ref = reference_lowest_pair(a, b);
      if (cfg.theta0) x0 = controlled_start(b, ref.v1, *cfg.theta0, sc.seed);
      pc.lambda1_ref = ref.lambda1;
      pc.v1_ref = std::move(ref.v1);
    }
    const LinearOperator m = build_preconditioner(sc.precond, a, b, sc.precond.shift);
    Pl1Result r = pl1_solve(a, b, m, pc, x0 ? &*x0 : nullptr);
    out.report = std::move(r.report);
    out.trace = std::move(r.trace);
  }
  return out;
}

nlohmann::ordered_json config_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["matrix"] = c.matrix_path;
  j["matrix_b"] = c.matrix_b_path;
  j["generate"] = c.generate;
  j["solver"] = c.solver;
  j["nev"] = c.solver_cfg.nev;
  j["max_basis"] = c.solver_cfg.max_basis;
  j["restart_size"] = c.solver_cfg.restart_size;
  j["plus_k"] = c.solver_cfg.plus_k;
  j["inner_steps"] = c.inner_steps;
  j["tol"] = c.solver_cfg.tol;
  j["precond"] = std::string(to_string(c.solver_cfg.precond.kind));
  j["precond_shift"] = c.solver_cfg.precond.shift;
  j["seed"] = c.solver_cfg.seed;
  j["max_cycles"] = c.solver_cfg.max_cycles;
  j["theta0"] = c.theta0 ? nlohmann::ordered_json(*c.theta0) : nlohmann::ordered_json(nullptr);
  j["trace_quasiopt"] = c.trace_quasiopt;
  j["lobpcg_search_directions"] = c.lobpcg_search_directions;
  j["repetitions"] = c.repetitions;
  return j;
}

/// Non-finite doubles become null so the output stays valid JSON.
nlohmann::ordered_json number(double v) {
  return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

void RunConfig::validate() const {
  if (matrix_path.empty() == generate.empty()) throw ConfigError("give exactly one of --matrix and --generate");
  static const std::vector<std::string> solvers{"trplk", "trlan", "lobpcg", "pl1", "lanczos"};
  if (std::find(solvers.begin(), solvers.end(), solver) == solvers.end())
    throw ConfigError("unknown solver '" + solver + "' (trplk, trlan, lobpcg, pl1, lanczos)");
  if (repetitions < 1) throw ConfigError("repetitions must be at least 1");
  if (!matrix_b_path.empty() && (solver == "trlan" || solver == "lanczos"))
    throw ConfigError(solver + " solves standard problems only; drop --matrix-b");
  if (solver == "pl1") {
    if (solver_cfg.nev != 1) throw ConfigError("pl1 computes one eigenpair; use --nev 1");
    if (inner_steps < 1) throw ConfigError("--inner-steps must be at least 1");
  } else if (theta0 || trace_quasiopt) {
    throw ConfigError("--theta0 and --trace-quasiopt apply to the pl1 solver");
  }
  if (solver == "trplk") {
    try {
      solver_cfg.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  if (!(solver_cfg.tol > 0.0)) throw ConfigError("--tol must be positive");
  if (solver_cfg.max_cycles < 1) throw ConfigError("--max-cycles must be at least 1");
}

RunReport run_benchmark(const RunConfig& cfg) {
  cfg.validate();
  const LoadedProblem prob = load(cfg);
  RunReport rep;
  rep.solver = cfg.solver;
  rep.config = cfg;
  rep.n = prob.a.n();
  rep.nnz = prob.a.nnz();
  rep.duplicate_entries = prob.duplicates;
  double best = 0.0;
  for (std::size_t r = 0; r < cfg.repetitions; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    SingleRun run = solve_once(cfg, prob);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (r == 0 || secs < best) best = secs;
    if (r == 0) {
      rep.status = run.report.status;
      rep.eigenvalues = run.report.eigenvalues;
      rep.residual_norms = run.report.residual_norms;
      rep.counters = run.report.counters;
      rep.cycles = run.report.cycles;
      rep.reseeds = run.report.reseeds;
      rep.a_norm_f = run.report.a_norm_f;
      rep.history = std::move(run.report.history);
      rep.trace = std::move(run.trace);
    }
  }
  rep.wall_seconds = best;
  return rep;
}

SweepAxis parse_sweep_axis(std::string_view name) {
  if (name == "max_basis") return SweepAxis::max_basis;
  if (name == "plus_k") return SweepAxis::plus_k;
  if (name == "theta0") return SweepAxis::theta0;
  throw ConfigError("unknown sweep axis '" + std::string(name) + "' (max_basis, plus_k, theta0)");
}

std::string_view to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::max_basis: return "max_basis";
    case SweepAxis::plus_k: return "plus_k";
    case SweepAxis::theta0: return "theta0";
  }
  return "unknown";
}

std::vector<SweepEntry> run_sweep(const RunConfig& base, SweepAxis axis, const std::vector<double>& values) {
  if (axis == SweepAxis::theta0 && base.solver != "pl1") throw ConfigError("a theta0 sweep needs the pl1 solver");
  std::vector<SweepEntry> out;
  for (double v : values) {
    SweepEntry e;
    e.value = v;
    RunConfig cfg = base;
    SolverConfig& sc = cfg.solver_cfg;
    try {
      switch (axis) {
        case SweepAxis::max_basis:
          if (v < 2 || v != std::floor(v)) throw ConfigError("max_basis values must be integers >= 2");
          sc.max_basis = static_cast<std::size_t>(v);
          if (sc.restart_size + sc.plus_k >= sc.max_basis)
            sc.restart_size = std::max(sc.nev, (sc.max_basis - std::min(sc.plus_k, sc.max_basis)) / 2);
          break;
        case SweepAxis::plus_k:
          if (v < 0 || v != std::floor(v)) throw ConfigError("plus_k values must be non-negative integers");
          sc.plus_k = static_cast<std::size_t>(v);
          break;
        case SweepAxis::theta0:
          cfg.theta0 = v;
          break;
      }
      e.report = run_benchmark(cfg);
    } catch (const std::exception& ex) {
      e.error = ex.what();
    }
    out.push_back(std::move(e));
  }
  return out;
}

nlohmann::ordered_json to_json(const RunReport& r) {
  nlohmann::ordered_json j;
  j["solver"] = r.solver;
  j["status"] = std::string(to_string(r.status));
  j["config"] = config_json(r.config);
  j["n"] = r.n;
  j["nnz"] = r.nnz;
  j["duplicate_entries"] = r.duplicate_entries;
  j["a_norm_f"] = r.a_norm_f;
  nlohmann::ordered_json pairs = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < r.eigenvalues.size(); ++i)
    pairs.push_back({{"value", number(r.eigenvalues[i])}, {"residual", number(r.residual_norms[i])}});
  j["eigenpairs"] = std::move(pairs);
  j["matvecs"] = r.counters.matvec_count;
  j["precond_applies"] = r.counters.precond_count;
  j["b_applies"] = r.counters.bmatvec_count;
  j["cycles"] = r.cycles;
  j["reseeds"] = r.reseeds;
  j["history_records"] = r.history.size();
  if (r.trace) {
    nlohmann::ordered_json t = nlohmann::ordered_json::array();
    for (const QuasiOptRecord& q : r.trace->records)
      t.push_back({{"k", q.k},
                   {"rho_xk", number(q.rho_xk)},
                   {"rho_ystar", number(q.rho_ystar)},
                   {"lambda1_ref", number(q.lambda1_ref)},
                   {"ratio", number(q.ratio)},
                   {"resid_norm", number(q.resid_norm)}});
    j["quasiopt_trace"] = std::move(t);
  }
  j["wall_seconds"] = r.wall_seconds;
  return j;
}

nlohmann::ordered_json to_json(const std::vector<SweepEntry>& sweep, SweepAxis axis) {
  nlohmann::ordered_json j;
  j["axis"] = std::string(to_string(axis));
  nlohmann::ordered_json runs = nlohmann::ordered_json::array();
  for (const SweepEntry& e : sweep) {
    nlohmann::ordered_json item;
    item["value"] = e.value;
    if (e.report)
      item["report"] = to_json(*e.report);
    else
      item["error"] = e.error;
    runs.push_back(std::move(item));
  }
  j["runs"] = std::move(runs);
  return j;
}

void write_history_csv(std::ostream& out, const std::vector<CycleRecord>& history) {
  const auto old = out.precision(17);
  out << "cycle,matvecs,precond_applies,target_index,rho,resid_norm\n";
  for (const CycleRecord& r : history)
    out << r.cycle << ',' << r.matvecs << ',' << r.precond_applies << ',' << r.target_index << ',' << r.rho << ','
        << r.resid_norm << '\n';
  out.precision(old);
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepEntry>& sweep, SweepAxis axis) {
  const auto old = out.precision(17);
  out << to_string(axis) << ",matvecs,precond_applies,seconds,status\n";
  for (const SweepEntry& e : sweep) {
    out << e.value << ',';
    if (e.report)
      out << e.report->counters.matvec_count << ',' << e.report->counters.precond_count << ','
          << e.report->wall_seconds << ',' << to_string(e.report->status) << '\n';
    else
      out << ",,,error\n";
  }
  out.precision(old);
}

int exit_code(SolveStatus status) {
  switch (status) {
    case SolveStatus::converged: return 0;
    case SolveStatus::max_cycles: return 2;
    case SolveStatus::breakdown: return 3;
  }
  return 1;
}

}  // namespace trplk
