// Acceptance battery. Runs nine checks against pinned tolerances, prints one
// "criterion N: PASS/FAIL (...)" line per check, and exits nonzero if any
// fails. Criteria 1-8 write their measured numbers (fixed 9-significant-digit
// formatting, no timings) into a run directory; criterion 9 repeats the
// battery into a second directory and compares every file byte for byte.
#include "dgl/bvp.hpp"
#include "dgl/delaunay.hpp"
#include "dgl/geometry.hpp"
#include "dgl/graph.hpp"
#include "dgl/jacobi.hpp"
#include "dgl/matching.hpp"
#include "dgl/numerics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

using namespace dgl;
namespace fs = std::filesystem;

namespace {

// ---------- pinned tolerances and runtime budgets ----------
constexpr double kC1Defect = 1e-9;      // first-integral defect
constexpr double kC1SecondsEach = 1.0;  // per necksize
constexpr double kC2DelaunayH = 1e-6;   // |H-1| on the 200x64 grid
constexpr double kC2ExactH = 1e-10;     // closed-form reference patches
constexpr double kC2Seconds = 5.0;
constexpr double kC3GapVar = 0.1;       // successive-decade drift of S + 4 log tau
constexpr double kC3AxialConst = 10.0;  // |T - 4 - 2 eps log(1/eps)| / eps
constexpr double kC3Seconds = 5.0;
constexpr double kC4Residual = 1e-6;    // closed-form field residual
constexpr double kC4ResidualZM = 1e-4;  // the (0,-) field uses numeric tau-derivatives
constexpr double kC4Seconds = 10.0;
constexpr double kC5Gamma = 1e-7;       // cylinder growth rates
constexpr double kC5Det = 1e-9;         // monodromy determinant
constexpr double kC5Floor = 1.9;        // gamma_2 on the decade scan
constexpr double kC5Seconds = 10.0;
constexpr double kC6Residual = 1e-7;    // substituted mode residual
constexpr double kC6Doubling = 1e-6;    // far-cut doubling stability
constexpr double kC6Closed = 1e-8;      // cylinder closed form
constexpr double kC6ScaledDev = 50.0;   // rate-scaled extension deviation
constexpr double kC6Seconds = 30.0;
constexpr int kC7Iters = 15;
constexpr double kC7Ratio = 0.5;        // geometric contraction of the updates
constexpr double kC7SupH = 1e-5;
constexpr double kC7Scaled = 100.0;     // rate-scaled low-mode output
constexpr double kC7Seconds = 120.0;
constexpr double kC8Mismatch = 1e-6;    // per-mode interface value mismatch
constexpr double kC8Seconds = 300.0;

struct Criterion {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string g3(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

void write_lines(const fs::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary);
  for (const auto& l : lines) out << l << "\n";
}

std::vector<EndConfig> two_opposite_ends() {
  EndConfig a, b;
  a.index = 0;
  a.axis = {0, 0, 1};
  b.index = 1;
  b.axis = {0, 0, -1};
  return {a, b};
}

// ---------- criterion 1: profile first integral ----------
Criterion run_c1(const fs::path& dir) {
  Criterion c;
  c.pass = true;
  std::vector<std::string> art;
  double worst = 0, slowest = 0;
  for (double eps : {0.9, 0.5, 0.1, 0.01}) {
    const auto t0 = Clock::now();
    const NeckParams p = neck_params(eps);
    const double S = period_S(p);
    const DelaunayProfile prof = solve_profile(p, 2.0 * S);
    double sup = prof.max_invariant_drift;
    const int n = 4001;
    for (int i = 0; i < n; ++i) {
      const double s = -2.0 * S + 4.0 * S * i / (n - 1);
      const double ss = prof.sigma_s_at(s);
      const double ch = std::cosh(prof.sigma_at(s));
      sup = std::max(sup, std::abs(ss * ss + p.tau * p.tau * ch * ch - 1.0));
    }
    const double dt = seconds_since(t0);
    slowest = std::max(slowest, dt);
    worst = std::max(worst, sup);
    if (sup > kC1Defect || dt >= kC1SecondsEach) c.pass = false;
    art.push_back("epsilon=" + fmt9(eps) + " sup_first_integral_defect=" + fmt9(sup));
  }
  write_lines(dir / "c1_first_integral.txt", art);
  c.detail = "sup defect " + g3(worst) + ", slowest " + g3(slowest) + " s";
  return c;
}

// ---------- criterion 2: mean curvature of the closed-form patches ----------
double patch_sup_dev(const ParamPatch& patch, double target, int n1, int n2) {
  double sup = 0;
  for (int i = 0; i < n1; ++i) {
    const double u1 = patch.u1a + (patch.u1b - patch.u1a) * i / (n1 - 1);
    for (int m = 0; m < n2; ++m) {
      const double u2 = patch.u2a + (patch.u2b - patch.u2a) * m / n2;
      sup = std::max(sup, std::abs(mean_curvature(patch, u1, u2) - target));
    }
  }
  return sup;
}

Criterion run_c2(const fs::path& dir) {
  Criterion c;
  c.pass = true;
  std::vector<std::string> art;
  double worst_delaunay = 0;
  for (double eps : {0.9, 0.5, 0.1}) {
    const NeckParams p = neck_params(eps);
    const double S = period_S(p);
    const DelaunayProfile prof = solve_profile(p, S + 0.25);
    const DelaunayPatch patch(prof, -S, S);
    const double sup = patch_sup_dev(patch, 1.0, 200, 64);
    worst_delaunay = std::max(worst_delaunay, sup);
    if (sup > kC2DelaunayH) c.pass = false;
    art.push_back("delaunay epsilon=" + fmt9(eps) + " sup_h_dev=" + fmt9(sup));
  }
  const SpherePatch sphere(2.0, Vec3{0.3, -0.2, 0.5});
  const CylinderPatch cyl(1.0);
  const CatenoidPatch cat1(1.0), cat2(0.25);
  const double ds = patch_sup_dev(sphere, 1.0, 41, 40);
  const double dc = patch_sup_dev(cyl, 1.0, 41, 40);
  const double dk1 = patch_sup_dev(cat1, 0.0, 41, 40);
  const double dk2 = patch_sup_dev(cat2, 0.0, 41, 40);
  if (ds > kC2ExactH || dc > kC2ExactH || dk1 > kC2ExactH || dk2 > kC2ExactH)
    c.pass = false;
  art.push_back("sphere_radius_2 sup_h_dev=" + fmt9(ds));
  art.push_back("unit_cylinder sup_h_dev=" + fmt9(dc));
  art.push_back("catenoid_1 sup_h=" + fmt9(dk1));
  art.push_back("catenoid_quarter sup_h=" + fmt9(dk2));
  write_lines(dir / "c2_mean_curvature.txt", art);
  c.detail = "delaunay sup " + g3(worst_delaunay) + ", exact patches sup " +
             g3(std::max({ds, dc, dk1, dk2}));
  return c;
}

// ---------- criterion 3: period asymptotics over the decades ----------
Criterion run_c3(const fs::path& dir) {
  Criterion c;
  c.pass = true;
  std::vector<std::string> art;
  std::vector<double> gaps, axial;
  for (double eps : {1e-2, 1e-3, 1e-4}) {
    const NeckParams p = neck_params(eps);
    const double S = period_S(p);
    const DelaunayProfile prof = solve_profile(p, S + 0.1);
    const double T = period_T(prof);
    const double gap = S + 4.0 * std::log(p.tau);
    const double ax = std::abs(T - 4.0 - 2.0 * eps * std::log(1.0 / eps)) / eps;
    gaps.push_back(gap);
    axial.push_back(ax);
    art.push_back("epsilon=" + fmt9(eps) + " S=" + fmt9(S) + " gap=" + fmt9(gap) +
                  " T=" + fmt9(T) + " axial_const=" + fmt9(ax));
  }
  double var = 0, axmax = 0;
  for (size_t i = 1; i < gaps.size(); ++i)
    var = std::max(var, std::abs(gaps[i] - gaps[i - 1]));
  for (double a : axial) axmax = std::max(axmax, a);
  if (var >= kC3GapVar || axmax > kC3AxialConst) c.pass = false;
  write_lines(dir / "c3_periods.txt", art);
  c.detail = "gap variation " + g3(var) + ", axial constant " + g3(axmax);
  return c;
}

// ---------- criterion 4: closed-form fields and their limits ----------
Criterion run_c4(const fs::path& dir) {
  Criterion c;
  c.pass = true;
  std::vector<std::string> art;
  double worst = 0;
  const int combos[6][2] = {{0, +1}, {0, -1}, {1, +1}, {1, -1}, {-1, +1}, {-1, -1}};
  for (double eps : {0.5, 0.1}) {
    const DelaunayProfile prof = solve_profile(neck_params(eps), 5.0);
    for (const auto& jc : combos) {
      const JacobiField f = explicit_jacobi(prof, jc[0], jc[1]);
      const double r = jacobi_residual(f, prof);
      const double tol = (jc[0] == 0 && jc[1] < 0) ? kC4ResidualZM : kC4Residual;
      if (r > tol) c.pass = false;
      worst = std::max(worst, r);
      art.push_back("epsilon=" + fmt9(eps) + " j=" + std::to_string(jc[0]) +
                    " sign=" + std::to_string(jc[1]) + " residual=" + fmt9(r));
    }
  }
  const std::vector<double> decades = {1e-2, 1e-3, 1e-4};
  for (const auto& jc : {std::pair<int, int>{0, +1}, {0, -1}, {1, +1}, {1, -1}}) {
    try {
      const auto rep = jacobi_limits_report(decades, jc.first, jc.second);
      for (size_t i = 1; i < rep.size(); ++i)
        if (rep[i].deviation >= rep[i - 1].deviation) c.pass = false;
      for (const auto& d : rep)
        art.push_back("limit j=" + std::to_string(jc.first) +
                      " sign=" + std::to_string(jc.second) +
                      " epsilon=" + fmt9(d.epsilon) +
                      " deviation=" + fmt9(d.deviation));
    } catch (const std::exception&) {
      c.pass = false;
      art.push_back("limit j=" + std::to_string(jc.first) +
                    " sign=" + std::to_string(jc.second) + " FAILED");
    }
  }
  write_lines(dir / "c4_jacobi_fields.txt", art);
  c.detail = "worst residual " + g3(worst);
  return c;
}

// ---------- criterion 5: growth rates from the monodromy ----------
Criterion run_c5(const fs::path& dir) {
  Criterion c;
  c.pass = true;
  std::vector<std::string> art;
  const DelaunayProfile cyl = solve_profile(neck_params(1.0), 3.5);
  double det2 = 0, det3 = 0;
  const double g2 = floquet_exponent(cyl, 2, &det2);
  const double g3c = floquet_exponent(cyl, 3, &det3);
  const double e2 = std::abs(g2 - std::sqrt(3.0));
  const double e3 = std::abs(g3c - std::sqrt(8.0));
  if (e2 > kC5Gamma || e3 > kC5Gamma) c.pass = false;
  if (std::abs(det2 - 1.0) > kC5Det || std::abs(det3 - 1.0) > kC5Det) c.pass = false;
  art.push_back("cylinder gamma2=" + fmt9(g2) + " det=" + fmt9(det2));
  art.push_back("cylinder gamma3=" + fmt9(g3c) + " det=" + fmt9(det3));
  double prev = 0;
  bool first = true;
  for (double eps : {1e-2, 1e-3, 1e-4}) {
    const NeckParams p = neck_params(eps);
    const double S = period_S(p);
    const DelaunayProfile prof = solve_profile(p, 0.5 * S + 0.5);
    double det = 0;
    const double g = floquet_exponent(prof, 2, &det);
    if (g < kC5Floor || g > 2.0 + 1e-9) c.pass = false;
    if (!first && g <= prev) c.pass = false;
    if (std::abs(det - 1.0) > kC5Det) c.pass = false;
    art.push_back("epsilon=" + fmt9(eps) + " gamma2=" + fmt9(g) + " det=" + fmt9(det));
    prev = g;
    first = false;
  }
  write_lines(dir / "c5_growth_rates.txt", art);
  c.detail = "cylinder errors " + g3(e2) + "/" + g3(e3);
  return c;
}

// ---------- criterion 6: linear extension operators ----------
Criterion run_c6(const fs::path& dir) {
  Criterion c;
  c.pass = true;
  std::vector<std::string> art;
  const double mu = 1.5;

  // residual substitution and far-cut doubling at a moderate necksize
  {
    const double eps = 0.5;
    const NeckParams p = neck_params(eps);
    const double S = period_S(p);
    const double s0 = S / 8.0;
    const double span = std::max(4.0 * S, 40.0);
    const DelaunayProfile prof = solve_profile(p, s0 + 2.0 * span + 0.5);
    const SGrid grid = half_cylinder_grid(prof, s0);
    std::vector<ModeSolution> forcing;
    for (int j : {2, 5}) {
      ModeSolution f;
      f.j = j;
      f.w.resize(grid.n);
      for (int i = 0; i < grid.n; ++i)
        f.w[i] = std::exp(-1.5 * (grid.s(i) - s0));
      forcing.push_back(std::move(f));
    }
    const CylSolution green = green_apply(prof, grid, forcing, mu);
    double worst = 0;
    for (size_t m = 0; m < green.modes.size(); ++m) {
      const double r = mode_residual(prof, grid, green.modes[m], forcing[m].w);
      worst = std::max(worst, r);
      art.push_back("green j=" + std::to_string(green.modes[m].j) +
                    " residual=" + fmt9(r));
    }
    BoundaryData phi;
    phi.set(2, 0.02);
    phi.set(3, -0.01);
    const CylSolution pois = poisson_apply(prof, grid, phi, mu);
    const std::vector<double> zero(grid.n, 0.0);
    for (const auto& m : pois.modes) {
      const double r = mode_residual(prof, grid, m, zero);
      worst = std::max(worst, r);
      art.push_back("poisson j=" + std::to_string(m.j) + " residual=" + fmt9(r));
    }
    if (worst > kC6Residual) c.pass = false;

    const SGrid grid2 = half_cylinder_grid(prof, s0, 2.0 * span);
    const CylSolution pois2 = poisson_apply(prof, grid2, phi, mu);
    double dd = 0;
    for (int j : {2, 3}) {
      const auto* wa = pois.mode(j);
      const auto* wb = pois2.mode(j);
      for (int i = 0; i < grid.n && grid.s(i) <= s0 + 2.0 * S; ++i)
        dd = std::max(dd, std::abs((*wa)[i] - (*wb)[i]));
    }
    if (dd > kC6Doubling) c.pass = false;
    art.push_back("far_cut_doubling sup_diff=" + fmt9(dd));
    c.detail = "residual " + g3(worst) + ", doubling " + g3(dd);
  }

  // cylinder closed form e^{-sqrt(3) s}
  {
    const DelaunayProfile cyl = solve_profile(neck_params(1.0), 45.0);
    const SGrid grid = half_cylinder_grid(cyl, 0.0);
    BoundaryData phi;
    phi.set(2, 1.0);
    const CylSolution sol = poisson_apply(cyl, grid, phi, mu);
    const auto* w = sol.mode(2);
    double dev = 0;
    for (int i = 0; i < grid.n && grid.s(i) <= 8.0; ++i)
      dev = std::max(dev, std::abs((*w)[i] - std::exp(-std::sqrt(3.0) * grid.s(i))));
    if (dev > kC6Closed) c.pass = false;
    art.push_back("cylinder_closed_form sup_dev=" + fmt9(dev));
    c.detail += ", closed form " + g3(dev);
  }

  // rate-scaled deviation from the flat extension over the decades
  {
    double scaled_max = 0;
    for (double eps : {1e-2, 1e-3, 1e-4}) {
      BoundaryData phi;
      phi.set(2, 0.01);
      const double dev = poisson_deviation(eps, mu, phi);
      const double scaled = dev * std::pow(eps, mu / 4.0);
      scaled_max = std::max(scaled_max, scaled);
      art.push_back("epsilon=" + fmt9(eps) + " extension_deviation=" + fmt9(dev) +
                    " scaled=" + fmt9(scaled));
    }
    if (scaled_max > kC6ScaledDev) c.pass = false;
    c.detail += ", scaled deviation " + g3(scaled_max);
  }

  write_lines(dir / "c6_linear_bvp.txt", art);
  return c;
}

// ---------- criterion 7: nonlinear graph solver ----------
Criterion run_c7(const fs::path& dir) {
  Criterion c;
  c.pass = true;
  std::vector<std::string> art;
  const double mu = 1.5;
  double scaled_max = 0;
  for (double eps : {0.1, 0.05, 0.02}) {
    const NeckParams p = neck_params(eps);
    const double S = period_S(p);
    const double s0 = S / 8.0;
    const double span = std::max(4.0 * S, 40.0);
    const DelaunayProfile prof = solve_profile(p, s0 + span + 0.5);
    BoundaryData phi;
    phi.set(2, 0.3 * std::pow(eps, 0.75));
    const GraphSolution sol = solve_graph(prof, s0, phi, mu);
    if (eps == 0.1) {
      if (sol.iterations > kC7Iters) c.pass = false;
      double ratio = 0;
      for (size_t i = 1; i + 1 < sol.updates.size(); ++i) {
        if (sol.updates[i] > 1e-13)
          ratio = std::max(ratio, sol.updates[i + 1] / sol.updates[i]);
      }
      if (ratio > kC7Ratio) c.pass = false;
      if (sol.h_residual > kC7SupH) c.pass = false;
      art.push_back("epsilon=" + fmt9(eps) +
                    " iterations=" + std::to_string(sol.iterations) +
                    " contraction=" + fmt9(ratio) +
                    " sup_h_dev=" + fmt9(sol.h_residual));
      c.detail = std::to_string(sol.iterations) + " iterations, ratio " + g3(ratio) +
                 ", sup dev " + g3(sol.h_residual);
    }
    const CauchyData cd = cauchy_data(sol);
    const double rate = std::pow(eps, -0.75) * phi.norm() * phi.norm();
    const double scaled = cd.low_norm() / rate;
    scaled_max = std::max(scaled_max, scaled);
    art.push_back("epsilon=" + fmt9(eps) + " low_mode_norm=" + fmt9(cd.low_norm()) +
                  " scaled=" + fmt9(scaled));
  }
  if (scaled_max > kC7Scaled) c.pass = false;
  c.detail += ", scaled low-mode output " + g3(scaled_max);
  write_lines(dir / "c7_graph_solver.txt", art);
  return c;
}

// ---------- criterion 8: end-to-end construction ----------
Criterion run_c8(const fs::path& dir) {
  Criterion c;
  c.pass = true;
  std::vector<std::string> art;
  const std::vector<EndConfig> ends = two_opposite_ends();
  double prev_sup = std::numeric_limits<double>::infinity();
  double prev_fit = std::numeric_limits<double>::infinity();
  double worst_mismatch = 0;
  for (double eps : {0.2, 0.1, 0.05}) {
    GluedSurface g;
    try {
      g = assemble_glued(eps, ends, 1.5, 1.25, 96);
    } catch (const std::exception& ex) {
      c.pass = false;
      art.push_back("epsilon=" + fmt9(eps) + " FAILED");
      c.detail = std::string("assembly failed at eps ") + g3(eps) + ": " + ex.what();
      continue;
    }
    double mism = 0;
    for (const auto& e : g.ends)
      for (const auto& m : e.mismatch) mism = std::max(mism, std::abs(m.value));
    worst_mismatch = std::max(worst_mismatch, mism);
    if (mism > kC8Mismatch) c.pass = false;
    if (!(g.assembled_sup_h < prev_sup)) c.pass = false;
    if (!(g.best_fit_rms < prev_fit)) c.pass = false;
    prev_sup = g.assembled_sup_h;
    prev_fit = g.best_fit_rms;
    art.push_back("epsilon=" + fmt9(eps) + " necksize0=" + fmt9(g.ends[0].necksize) +
                  " necksize1=" + fmt9(g.ends[1].necksize) +
                  " value_mismatch=" + fmt9(mism) +
                  " assembled_sup_h_dev=" + fmt9(g.assembled_sup_h) +
                  " seam_gap=" + fmt9(g.ends[0].seam_gap) +
                  " seam_kink=" + fmt9(g.ends[0].seam_kink) +
                  " best_fit_rms=" + fmt9(g.best_fit_rms) +
                  " best_fit_max=" + fmt9(g.best_fit_max) +
                  " best_fit_necksize=" + fmt9(g.best_fit_necksize));
    if (eps == 0.2)
      export_mesh(g.interior_mesh, MeshFormat::Obj,
                  (dir / "c8_interior_02.obj").string());
  }
  write_lines(dir / "c8_glued.txt", art);
  if (c.detail.empty())
    c.detail = "mismatch " + g3(worst_mismatch) + ", sup dev and fit decreasing";
  return c;
}

bool dirs_identical(const fs::path& a, const fs::path& b, int* files_out) {
  std::map<std::string, fs::path> fa, fb;
  for (const auto& e : fs::recursive_directory_iterator(a))
    if (e.is_regular_file()) fa[fs::relative(e.path(), a).string()] = e.path();
  for (const auto& e : fs::recursive_directory_iterator(b))
    if (e.is_regular_file()) fb[fs::relative(e.path(), b).string()] = e.path();
  *files_out = static_cast<int>(fa.size());
  if (fa.size() != fb.size()) return false;
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  for (const auto& [rel, pa] : fa) {
    const auto it = fb.find(rel);
    if (it == fb.end()) return false;
    if (slurp(pa) != slurp(it->second)) return false;
  }
  return true;
}

} // namespace

int main() {
  const fs::path run_a = "acceptance_runA";
  const fs::path run_b = "acceptance_runB";
  fs::remove_all(run_a);
  fs::remove_all(run_b);
  fs::create_directories(run_a);
  fs::create_directories(run_b);

  struct Entry {
    int id;
    Criterion (*fn)(const fs::path&);
    double budget; // seconds; 0 = handled inside the criterion
  };
  const Entry entries[] = {
      {1, run_c1, 0.0},         {2, run_c2, kC2Seconds}, {3, run_c3, kC3Seconds},
      {4, run_c4, kC4Seconds},  {5, run_c5, kC5Seconds}, {6, run_c6, kC6Seconds},
      {7, run_c7, kC7Seconds},  {8, run_c8, kC8Seconds},
  };

  std::vector<Criterion> results;
  for (const auto& e : entries) {
    Criterion c;
    const auto t0 = Clock::now();
    try {
      c = e.fn(run_a);
    } catch (const std::exception& ex) {
      c.pass = false;
      c.detail = std::string("exception: ") + ex.what();
    }
    const double dt = seconds_since(t0);
    if (e.budget > 0 && dt >= e.budget) {
      c.pass = false;
      c.detail += " [over budget]";
    }
    c.detail += ", " + g3(dt) + " s";
    results.push_back(std::move(c));
  }

  // second battery for the determinism check
  for (const auto& e : entries) {
    try {
      e.fn(run_b);
    } catch (const std::exception&) {
      // identical failure on both runs still compares equal below
    }
  }
  int files = 0;
  const bool identical = dirs_identical(run_a, run_b, &files);
  Criterion c9;
  c9.pass = identical;
  c9.detail = std::to_string(files) + " files byte-compared";
  results.push_back(std::move(c9));

  bool all = true;
  for (size_t i = 0; i < results.size(); ++i) {
    std::printf("criterion %zu: %s (%s)\n", i + 1,
                results[i].pass ? "PASS" : "FAIL", results[i].detail.c_str());
    all = all && results[i].pass;
  }
  return all ? 0 : 1;
}
