// Acceptance checks: one PASS/FAIL line per criterion.
//
//   acceptance --group core      criteria 1, 4, 7, 8, 9, 10, 11
//   acceptance --group 1138bus   criteria 2, 3, 5, 6 (needs 1138_bus.mtx)
//
// The 1138bus group exits with 77 when the matrix is not available so that
// ctest reports it as skipped rather than passed.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "oracles.hpp"
#include "trplk/baselines.hpp"
#include "trplk/bench.hpp"
#include "trplk/pl1.hpp"
#include "trplk/trplk.hpp"

using namespace trplk;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("criterion %2d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

void guarded(int id, const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    report(id, false, std::string("exception: ") + e.what());
  }
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

SparseSymMatrix diag_b(std::size_t n) {
  Vector d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = 1.0 + static_cast<double>(i) / static_cast<double>(n);
  return SparseSymMatrix::diagonal(d);
}

double max_rel_error(const Vector& got, std::size_t count, std::size_t n) {
  double worst = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const double ref = oracle::laplacian1d_eigenvalue(i + 1, n);
    worst = std::max(worst, std::abs(got[i] - ref) / ref);
  }
  return worst;
}

// 1: analytic spectrum of Laplacian1D(1000), five smallest pairs.
void criterion_1() {
  const SparseSymMatrix a = generate_test_matrix(MatrixKind::laplacian1d, 1000);
  SolverConfig cfg;
  cfg.nev = 5;
  const auto t0 = std::chrono::steady_clock::now();
  const SolverReport tr = trplk_solve(a, nullptr, cfg);
  const double secs = seconds_since(t0);
  const SolverReport tl = trlan_solve(a, cfg);
  const SolverReport lo = lobpcg_solve(a, nullptr, cfg);
  const double e1 = max_rel_error(tr.eigenvalues, 5, 1000), e2 = max_rel_error(tl.eigenvalues, 5, 1000),
               e3 = max_rel_error(lo.eigenvalues, 5, 1000);
  const bool pass = tr.status == SolveStatus::converged && e1 <= 1e-10 && secs < 10.0 &&
                    tl.status == SolveStatus::converged && e2 <= 1e-9 && lo.status == SolveStatus::converged &&
                    e3 <= 1e-9;
  report(1, pass,
         "trplk rel " + fmt("%.2e", e1) + " in " + fmt("%.2f", secs) + " s; trlan rel " + fmt("%.2e", e2) +
             "; lobpcg rel " + fmt("%.2e", e3));
}

// 4: with M = I, l = 0, p = p_hat = 1 the per-cycle target Ritz values
// coincide with thick-restart Lanczos.
void criterion_4() {
  const SparseSymMatrix a = generate_test_matrix(MatrixKind::laplacian2d, 400);
  SolverConfig cfg;
  cfg.nev = 1;
  cfg.restart_size = 1;
  cfg.plus_k = 0;
  cfg.max_cycles = 10;
  const Block x0 = random_block(400, 1, cfg.seed);
  const SolverReport r1 = trplk_solve(a, nullptr, cfg, nullptr, &x0);
  const SolverReport r2 = trlan_solve(a, cfg, {}, &x0);
  bool pass = r1.history.size() >= 10 && r2.history.size() >= 10;
  double worst = 0.0;
  for (std::size_t i = 0; pass && i < 10; ++i)
    worst = std::max(worst, std::abs(r1.history[i].rho - r2.history[i].rho) / std::abs(r2.history[i].rho));
  pass = pass && worst <= 1e-8;
  report(4, pass, "max rel diff over 10 cycles " + fmt("%.2e", worst));
}

// 7: optimal step against a 10^6-point grid and the 2 x 2 closed form.
void criterion_7() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const SparseSymMatrix a = oracle::random_dense_sym(50, 50.0, 5000 + seed);
    const SparseSymMatrix b = oracle::random_sparse(50, 0.2, 25.0, 9000 + seed);
    // Start near the lowest eigenvector so a perturbed descent direction has rho(p) > rho(x).
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(oracle::dense(a), oracle::dense(b));
    Rng rng(seed);
    Eigen::VectorXd v = es.eigenvectors().col(0);
    v = v / v.norm() + 0.3 * oracle::vec(random_vector(50, rng)) / std::sqrt(50.0);
    const Vector x = oracle::to_vector(v);
    Vector p = rayleigh_gradient(a, &b, x);
    scale(-1.0, p);
    const Vector noise = random_vector(50, rng);
    axpy(0.3 * norm2(p) / norm2(noise), noise, p);
    const StepResult s = optimal_step(x, p, a, &b);
    const double grid =
        oracle::grid_step(oracle::dense(a), oracle::dense(b), oracle::vec(x), oracle::vec(p), 4.0 * s.alpha, 1000000);
    worst = std::max(worst, std::abs(grid - s.alpha) / s.alpha);
  }
  const double th = 0.3;
  const StepResult s2 =
      optimal_step(Vector{std::cos(th), std::sin(th)}, Vector{0, -1}, SparseSymMatrix::diagonal(Vector{1, 2}), nullptr);
  const double e2 = std::abs(s2.alpha - std::sin(th));
  report(7, worst <= 1e-4 && e2 <= 1e-12,
         "grid max rel " + fmt("%.2e", worst) + " over 100 pencils; 2x2 |alpha - sin(theta)| " + fmt("%.1e", e2));
}

// 8: exact step-7 conjugacy on every run, shifted defect decreasing in theta0.
void criterion_8() {
  const std::size_t n = 200;
  const SparseSymMatrix a = generate_test_matrix(MatrixKind::laplacian1d, n);
  const SparseSymMatrix b = diag_b(n);
  const LowestPair ref = reference_lowest_pair(a, &b);
  double worst_exact = 0.0;
  std::vector<double> shifted;
  auto track = [&](const Pl1Result& r) {
    for (const Pl1Step& s : r.steps)
      if (!std::isnan(s.conjugacy_exact)) worst_exact = std::max(worst_exact, s.conjugacy_exact);
  };
  for (double th : {1e-1, 1e-2, 1e-3}) {
    Pl1Config cfg;
    cfg.max_cycles = 30;
    const Vector x0 = controlled_start(&b, ref.v1, th, 12);
    const Pl1Result r = pl1_solve(a, &b, LinearOperator::identity(n), cfg, &x0);
    track(r);
    shifted.push_back(r.steps.size() > 1 ? r.steps[1].conjugacy_shifted : std::numeric_limits<double>::quiet_NaN());
  }
  // Further runs: preconditioned, several inner steps, standard problem.
  for (std::size_t m : {2u, 4u, 8u}) {
    Pl1Config cfg;
    cfg.inner_steps = m;
    cfg.tol = 1e-12;
    track(pl1_solve(a, &b, build_jacobi(a, &b, 0.0, 1e-8), cfg));
    track(pl1_solve(a, nullptr, build_ic0(a, nullptr, 0.0), cfg));
  }
  const bool mono = shifted[0] > shifted[1] && shifted[1] > shifted[2];
  report(8, worst_exact <= 1e-10 && mono,
         "max exact defect " + fmt("%.2e", worst_exact) + "; shifted defects " + fmt("%.2e", shifted[0]) + ", " +
             fmt("%.2e", shifted[1]) + ", " + fmt("%.2e", shifted[2]));
}

// 9: gradient vs central differences and the angle identity.
void criterion_9() {
  double worst_grad = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const SparseSymMatrix a = oracle::random_dense_sym(30, 0.0, 300 + seed);
    const SparseSymMatrix b = oracle::random_sparse(30, 0.2, 15.0, 600 + seed);
    Rng rng(seed);
    const Vector x = random_vector(30, rng);
    const Vector g = rayleigh_gradient(a, &b, x);
    for (int d = 0; d < 10; ++d) {
      Vector dir = random_vector(30, rng);
      scale(1.0 / norm2(dir), dir);
      const double h = 1e-5 * norm2(x);
      Vector xp = x, xm = x;
      axpy(h, dir, xp);
      axpy(-h, dir, xm);
      const double fd = (rayleigh_quotient(a, &b, xp) - rayleigh_quotient(a, &b, xm)) / (4.0 * h);
      worst_grad = std::max(worst_grad, std::abs(fd - dot(g, dir)) / norm2(g));
    }
  }
  double worst_id = 0.0;
  const SparseSymMatrix a = generate_test_matrix(MatrixKind::laplacian2d, 100);
  const SparseSymMatrix b = diag_b(100);
  const LowestPair ref = reference_lowest_pair(a, &b);
  // Eigenvalue consistent with the computed v1 to second order.
  const double lambda1 = rayleigh_quotient(a, &b, ref.v1);
  for (std::uint64_t seed = 0; seed < 5; ++seed)
    for (double th : {0.7, 1e-1, 1e-2, 1e-3}) {
      Vector f;
      const Vector x = controlled_start(&b, ref.v1, th, seed, &f);
      const double lhs = rayleigh_quotient(a, &b, x) - lambda1;
      const double rhs = std::sin(th) * std::sin(th) * (rayleigh_quotient(a, &b, f) - lambda1);
      worst_id = std::max(worst_id, std::abs(lhs - rhs) / std::abs(rhs));
    }
  report(9, worst_grad <= 1e-6 && worst_id <= 1e-10,
         "gradient max rel " + fmt("%.2e", worst_grad) + "; angle identity max rel " + fmt("%.2e", worst_id));
}

// 10: incremental T vs recomputation, exact per-cycle product counts.
void criterion_10() {
  const SparseSymMatrix a = generate_test_matrix(MatrixKind::laplacian1d, 1000);
  SolverConfig cfg;
  cfg.nev = 5;
  cfg.max_cycles = 5;
  cfg.debug_checks = true;
  const SolverReport r = trplk_solve(a, nullptr, cfg);
  bool pass = r.history.size() == 5;
  double worst = 0.0;
  std::string counts;
  std::size_t prev = cfg.nev;
  for (std::size_t c = 0; pass && c < 5; ++c) {
    const CycleRecord& rec = r.history[c];
    worst = std::max(worst, rec.projection_error);
    pass = pass && rec.projection_error <= 1e-8;
    const std::size_t used = rec.matvecs - prev;
    // First cycle fills the basis from |X| = p; afterwards m + l.
    const std::size_t budget = c == 0 ? cfg.max_basis - cfg.nev : cfg.inner_steps() + cfg.plus_k;
    pass = pass && used == budget;
    counts += (c ? "," : "") + std::to_string(used);
    prev = rec.matvecs;
  }
  report(10, pass, "max |U^T A U - T| / ||A||_F " + fmt("%.2e", worst) + "; products per cycle " + counts);
}

std::string strip_timing(const std::string& text) {
  std::istringstream in(text);
  std::string line, out;
  while (std::getline(in, line))
    if (line.find("\"wall_seconds\"") == std::string::npos) out += line + "\n";
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// 11: identical invocations give identical reports apart from timing.
void criterion_11(const std::string& cli) {
  const fs::path dir = fs::temp_directory_path() / "trplk_acceptance_11";
  fs::create_directories(dir);
  bool pass = true;
  std::string detail;
  const std::vector<std::string> configs = {
      "--generate laplacian1d:1000 --solver trplk --nev 5 --precond ic0",
      "--generate laplacian2d:400 --solver lobpcg --nev 3 --precond jacobi",
      "--generate diag_clustered:300 --solver trlan --nev 2",
      "--generate laplacian1d:300 --solver pl1 --trace-quasiopt --theta0 1e-2 --max-cycles 40",
  };
  for (std::size_t i = 0; i < configs.size(); ++i) {
    std::string text[2], hist[2];
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path out = dir / ("r" + std::to_string(rep) + ".json"), h = dir / ("h" + std::to_string(rep) + ".csv");
      const std::string cmd = cli + " " + configs[i] + " --out " + out.string() + " --history " + h.string() + " > /dev/null";
      const int rc = std::system(cmd.c_str());
      if (!WIFEXITED(rc) || (WEXITSTATUS(rc) != 0 && WEXITSTATUS(rc) != 2)) pass = false;
      text[rep] = strip_timing(slurp(out));
      hist[rep] = slurp(h);
    }
    const bool same = !text[0].empty() && text[0] == text[1] && hist[0] == hist[1];
    pass = pass && same;
    detail += (i ? ", " : "") + std::string(same ? "identical" : "DIFFERENT");
  }
  fs::remove_all(dir);
  report(11, pass, std::to_string(configs.size()) + " configurations: " + detail);
}

// ---- 1138bus group ----

std::size_t trplk_mv(const SparseSymMatrix& a, SolverConfig cfg, SolveStatus* st = nullptr) {
  const SolverReport r = trplk_solve(a, nullptr, cfg);
  if (st) *st = r.status;
  return r.counters.matvec_count;
}

void criterion_2(const SparseSymMatrix& a) {
  SolverConfig cfg;
  SolveStatus s1, s2 = SolveStatus::max_cycles;
  const std::size_t mv = trplk_mv(a, cfg, &s1);
  const SolverReport tl = trlan_solve(a, cfg);
  s2 = tl.status;
  const double ratio = static_cast<double>(tl.counters.matvec_count) / static_cast<double>(mv);
  report(2, s1 == SolveStatus::converged && s2 == SolveStatus::converged && mv >= 2400 && mv <= 9600 && ratio >= 5.0,
         "trplk " + std::to_string(mv) + " MV, trlan " + std::to_string(tl.counters.matvec_count) + " MV, ratio " +
             fmt("%.2f", ratio));
}

void criterion_3(const SparseSymMatrix& a) {
  SolverConfig cfg;
  const std::size_t base = trplk_mv(a, cfg);
  cfg.precond.kind = PrecondKind::ic0;
  SolveStatus s;
  const std::size_t ic = trplk_mv(a, cfg, &s);
  cfg.precond.kind = PrecondKind::jacobi;
  SolveStatus sj;
  const std::size_t jac = trplk_mv(a, cfg, &sj);
  const bool pass = s == SolveStatus::converged && ic < 1500 && static_cast<double>(ic) < 0.25 * static_cast<double>(base);
  report(3, pass,
         "ic0 " + std::to_string(ic) + " MV vs unpreconditioned " + std::to_string(base) + " (jacobi " +
             std::to_string(jac) + (sj == SolveStatus::converged ? "" : " not converged") + ")");
}

void criterion_5(const SparseSymMatrix& a) {
  SolverConfig cfg;
  cfg.nev = 5;
  std::size_t mv[3];
  bool conv = true;
  for (std::size_t l = 0; l < 3; ++l) {
    cfg.plus_k = l;
    SolveStatus s;
    mv[l] = trplk_mv(a, cfg, &s);
    conv = conv && s == SolveStatus::converged;
  }
  report(5, conv && mv[1] < mv[0] && static_cast<double>(mv[2]) <= 1.3 * static_cast<double>(mv[1]),
         "MV(l=0,1,2) = " + std::to_string(mv[0]) + ", " + std::to_string(mv[1]) + ", " + std::to_string(mv[2]));
}

void criterion_6(const SparseSymMatrix& a) {
  const LowestPair ref = reference_lowest_pair(a, nullptr);
  std::vector<double> at50;
  double worst_early = 0.0;
  for (double th : {1e-1, 1e-2, 1e-3, 1e-4}) {
    Pl1Config cfg;
    cfg.max_cycles = 50;
    cfg.tol = std::numeric_limits<double>::min();
    cfg.trace = true;
    cfg.lambda1_ref = ref.lambda1;
    cfg.v1_ref = ref.v1;
    const Vector x0 = controlled_start(nullptr, ref.v1, th, 12);
    const Pl1Result r = pl1_solve(a, nullptr, LinearOperator::identity(a.n()), cfg, &x0);
    for (std::size_t k = 0; k <= 2; ++k) worst_early = std::max(worst_early, std::abs(quasi_opt_ratio(*r.trace, k)));
    at50.push_back(quasi_opt_ratio(*r.trace, 50));
  }
  bool mono = true;
  for (std::size_t i = 1; i < at50.size(); ++i) mono = mono && at50[i] < at50[i - 1];
  std::string vals;
  for (std::size_t i = 0; i < at50.size(); ++i) vals += (i ? ", " : "") + fmt("%.2e", at50[i]);
  report(6, mono && worst_early <= 1e-10, "ratio(k=50) " + vals + "; max |ratio(k<=2)| " + fmt("%.1e", worst_early));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::string group = "core";
  std::string cli = TRPLK_BENCH_PATH;
  std::string matrix;
  app.add_option("--group", group, "core or 1138bus")->check(CLI::IsMember({"core", "1138bus"}));
  app.add_option("--cli", cli, "Path to trplk_bench");
  app.add_option("--matrix", matrix, "Path to 1138_bus.mtx (default: $TRPLK_1138BUS or data/1138_bus.mtx)");
  CLI11_PARSE(app, argc, argv);

  if (group == "core") {
    guarded(1, criterion_1);
    guarded(4, criterion_4);
    guarded(7, criterion_7);
    guarded(8, criterion_8);
    guarded(9, criterion_9);
    guarded(10, criterion_10);
    guarded(11, [&] { criterion_11(cli); });
    return failures == 0 ? 0 : 1;
  }

  if (matrix.empty()) {
    const char* env = std::getenv("TRPLK_1138BUS");
    matrix = env ? env : std::string(TRPLK_DATA_DIR) + "/1138_bus.mtx";
  }
  if (!fs::exists(matrix)) {
    for (int id : {2, 3, 5, 6}) std::printf("criterion %2d: SKIP  %s not found\n", id, matrix.c_str());
    return 77;
  }
  const SparseSymMatrix a = read_matrix_market(matrix).matrix;
  guarded(2, [&] { criterion_2(a); });
  guarded(3, [&] { criterion_3(a); });
  guarded(5, [&] { criterion_5(a); });
  guarded(6, [&] { criterion_6(a); });
  return failures == 0 ? 0 : 1;
}
