// Command-line front end: every library experiment as a subcommand with JSON
// config input and CSV/JSON/OBJ outputs. Exit codes: 0 success, 1 unknown or
// missing subcommand, 2 precondition violation, 3 numerical failure.

#include "dgl/bvp.hpp"
#include "dgl/delaunay.hpp"
#include "dgl/geometry.hpp"
#include "dgl/graph.hpp"
#include "dgl/jacobi.hpp"
#include "dgl/log.hpp"
#include "dgl/matching.hpp"
#include "dgl/numerics.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#ifndef DGL_VERSION
#define DGL_VERSION "0.1.0+unknown"
#endif

namespace {

using dgl::fmt9;
using dgl::round9;
using ordered_json = nlohmann::ordered_json;

ordered_json jnum(double x) { return round9(x); }

// Values shared by every subcommand. JSON config supplies defaults; command
// line flags win.
struct Options {
  std::optional<double> epsilon, mu, kappa, tolerance;
  std::optional<int> j;
  std::string config_path, out, out_dir;
  int threads = 1;
  long long seed = 0;
  ordered_json config_file; // parsed --config content, if any
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config_path, "JSON config file (flags override it)");
  cmd->add_option("--threads", o.threads, "worker cap for mesh sampling")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o.seed, "seed echoed into the summary");
}

void load_config(const CLI::App* cmd, Options& o) {
  if (o.config_path.empty()) return;
  std::ifstream in(o.config_path);
  if (!in) throw std::invalid_argument("cannot open config file: " + o.config_path);
  ordered_json j = ordered_json::parse(in, nullptr, true, true);
  o.config_file = j;
  auto take_d = [&](const char* key, std::optional<double>& slot, const char* flag) {
    if (j.contains(key) && (!cmd->get_option_no_throw(flag) ||
                            cmd->get_option_no_throw(flag)->count() == 0))
      slot = j.at(key).get<double>();
  };
  take_d("epsilon", o.epsilon, "--epsilon");
  take_d("mu", o.mu, "--mu");
  take_d("kappa", o.kappa, "--kappa");
  take_d("tolerance", o.tolerance, "--tolerance");
  if (j.contains("j") && (!cmd->get_option_no_throw("--j") ||
                          cmd->get_option_no_throw("--j")->count() == 0))
    o.j = j.at("j").get<int>();
}

double need_epsilon(const Options& o) {
  if (!o.epsilon) throw std::invalid_argument("--epsilon is required");
  return *o.epsilon;
}

void write_text(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot open output file: " + path);
  out << body;
}

void write_json(const std::string& path, const ordered_json& j) {
  write_text(path, j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------

ordered_json run_profile(const Options& o) {
  const double eps = need_epsilon(o);
  const dgl::NeckParams par = dgl::neck_params(eps);
  const bool cylinder = eps >= 1.0;
  const double span = cylinder ? 4.0 * std::acos(-1.0) : 2.0 * dgl::period_S(par);
  const dgl::DelaunayProfile profile = dgl::solve_profile(par, span);

  double sup_drift = 0;
  std::string csv = "s,sigma,sigma_s,k,rho,invariant_drift\n";
  for (int i = 0; i < profile.size(); ++i) {
    const double sg = profile.sigma[i];
    const double sgs = profile.sigma_s[i];
    const double ch = std::cosh(sg);
    const double drift =
        std::abs(sgs * sgs + par.tau * par.tau * ch * ch - 1.0);
    sup_drift = std::max(sup_drift, drift);
    csv += fmt9(profile.s[i]) + "," + fmt9(sg) + "," + fmt9(sgs) + "," +
           fmt9(profile.k[i]) + "," + fmt9(profile.rho_at(profile.s[i])) + "," +
           fmt9(drift) + "\n";
  }
  if (!o.out.empty()) write_text(o.out, csv);

  ordered_json r;
  r["epsilon"] = jnum(eps);
  r["tau"] = jnum(par.tau);
  r["s_max"] = jnum(profile.s_max);
  r["step"] = jnum(profile.step);
  r["period_s"] = jnum(profile.period_s);
  r["rows"] = profile.size();
  r["sup_invariant_drift"] = jnum(sup_drift);
  r["max_integrator_drift"] = jnum(profile.max_invariant_drift);
  if (!o.out.empty()) r["csv"] = o.out;
  return r;
}

ordered_json run_periods(const Options& o) {
  const double eps = need_epsilon(o);
  const dgl::NeckParams par = dgl::neck_params(eps);
  const double S = dgl::period_S(par);
  const dgl::DelaunayProfile profile = dgl::solve_profile(par, S + 1.0);
  const double T = dgl::period_T(profile);
  ordered_json r;
  r["epsilon"] = jnum(eps);
  r["tau"] = jnum(par.tau);
  r["S"] = jnum(S);
  r["T"] = jnum(T);
  r["S_plus_4_log_tau"] = jnum(S + 4.0 * std::log(par.tau));
  r["T_defect_over_eps"] = jnum((T - 4.0 - 2.0 * eps * std::log(1.0 / eps)) / eps);
  return r;
}

ordered_json run_estimates(const Options& o) {
  const double eps = need_epsilon(o);
  const dgl::NeckParams par = dgl::neck_params(eps);
  const double span =
      eps >= 1.0 ? 4.0 * std::acos(-1.0) : 2.0 * dgl::period_S(par);
  const dgl::DelaunayProfile profile = dgl::solve_profile(par, span);
  const dgl::EstimateReport rep = dgl::check_profile_estimates(profile);
  ordered_json r;
  r["epsilon"] = jnum(rep.epsilon);
  r["asymptotic"] = rep.asymptotic;
  r["checks"] = ordered_json::array();
  for (const auto& c : rep.checks) {
    ordered_json jc;
    jc["name"] = c.name;
    jc["measured"] = jnum(c.measured);
    if (std::isfinite(c.bound))
      jc["bound"] = jnum(c.bound);
    else
      jc["bound"] = nullptr;
    jc["pass"] = c.pass;
    jc["skipped"] = c.skipped;
    r["checks"].push_back(jc);
  }
  return r;
}

ordered_json run_jacobi(const Options& o) {
  const double eps = need_epsilon(o);
  const dgl::DelaunayProfile profile =
      dgl::solve_profile(dgl::neck_params(eps), 8.0);
  ordered_json fields = ordered_json::array();
  for (int j : {0, 1, -1}) {
    for (int sign : {+1, -1}) {
      const dgl::JacobiField f = dgl::explicit_jacobi(profile, j, sign);
      ordered_json jf;
      jf["j"] = j;
      jf["sign"] = sign;
      jf["residual"] = jnum(dgl::jacobi_residual(f, profile));
      fields.push_back(jf);
    }
  }
  ordered_json r;
  r["epsilon"] = jnum(eps);
  r["fields"] = fields;
  return r;
}

ordered_json run_floquet(const Options& o) {
  const double eps = need_epsilon(o);
  const int j = o.j.value_or(2);
  const dgl::NeckParams par = dgl::neck_params(eps);
  const double span =
      eps >= 1.0 ? 2.0 * std::acos(-1.0) : dgl::period_S(par) + 1.0;
  const dgl::DelaunayProfile profile = dgl::solve_profile(par, span);
  double det = 0;
  const double gamma = dgl::floquet_exponent(profile, j, &det);
  std::cout << "gamma = " << fmt9(gamma) << "\n";
  ordered_json r;
  r["epsilon"] = jnum(eps);
  r["j"] = j;
  r["gamma"] = jnum(gamma);
  r["monodromy_det"] = jnum(det);
  return r;
}

ordered_json run_bvp(const Options& o) {
  const double eps = need_epsilon(o);
  const double mu = o.mu.value_or(1.5);
  const int j = o.j.value_or(2);
  if (std::abs(j) < 2)
    throw std::invalid_argument("bvp: --j must satisfy |j| >= 2");
  dgl::BoundaryData phi;
  phi.set(j, 1.0);
  const double dev = dgl::poisson_deviation(eps, mu, phi);

  const dgl::NeckParams par = dgl::neck_params(eps);
  const dgl::DelaunayProfile profile = dgl::solve_profile(
      par, dgl::period_S(par) / 8.0 + std::max(4.0 * dgl::period_S(par), 40.0) + 1.0);
  const dgl::SGrid grid =
      dgl::half_cylinder_grid(profile, dgl::period_S(par) / 8.0);
  const dgl::CylSolution sol = dgl::poisson_apply(profile, grid, phi, mu);
  const std::vector<double> zero(grid.n, 0.0);
  double residual = 0;
  for (const auto& m : sol.modes)
    residual = std::max(residual, dgl::mode_residual(profile, grid, m, zero));

  ordered_json r;
  r["epsilon"] = jnum(eps);
  r["mu"] = jnum(mu);
  r["j"] = j;
  r["deviation"] = jnum(dev);
  r["bound_constant"] = jnum(sol.bound_constant);
  r["residual"] = jnum(residual);
  if (o.tolerance) {
    r["tolerance"] = jnum(*o.tolerance);
    r["within_tolerance"] = residual <= *o.tolerance;
  }
  return r;
}

ordered_json run_graph(const Options& o) {
  const double eps = need_epsilon(o);
  const double mu = o.mu.value_or(1.5);
  const int j = o.j.value_or(2);
  if (std::abs(j) < 2)
    throw std::invalid_argument("graph: --j must satisfy |j| >= 2");
  const dgl::NeckParams par = dgl::neck_params(eps);
  const double S = dgl::period_S(par);
  const dgl::DelaunayProfile profile =
      dgl::solve_profile(par, S / 8.0 + std::max(4.0 * S, 40.0) + 1.0);
  dgl::BoundaryData phi;
  phi.set(j, 0.3 * std::pow(eps, 0.75));
  const dgl::GraphSolution sol = dgl::solve_graph(profile, S / 8.0, phi, mu);
  const dgl::CauchyData cd = dgl::cauchy_data(sol);

  ordered_json r;
  r["epsilon"] = jnum(eps);
  r["mu"] = jnum(mu);
  r["j"] = j;
  r["phi_norm"] = jnum(phi.norm());
  r["iterations"] = sol.iterations;
  r["final_update"] = jnum(sol.final_update);
  r["sup_h_dev"] = jnum(sol.h_residual);
  r["alias_energy"] = jnum(sol.alias_energy);
  r["cauchy_low_norm"] = jnum(cd.low_norm());
  r["cauchy_high_norm"] = jnum(cd.high_norm());
  if (o.tolerance) {
    r["tolerance"] = jnum(*o.tolerance);
    r["within_tolerance"] = sol.h_residual <= *o.tolerance;
  }
  return r;
}

std::vector<dgl::EndConfig> parse_ends(const ordered_json& cfg) {
  std::vector<dgl::EndConfig> ends;
  if (cfg.contains("ends")) {
    int idx = 0;
    for (const auto& je : cfg.at("ends")) {
      dgl::EndConfig e;
      e.index = idx++;
      if (je.contains("a")) e.weight = je.at("a").get<double>();
      if (je.contains("axis")) {
        const auto& ax = je.at("axis");
        e.axis = {ax.at(0).get<double>(), ax.at(1).get<double>(),
                  ax.at(2).get<double>()};
      }
      if (je.contains("base")) {
        const auto& b = je.at("base");
        e.base = {b.at(0).get<double>(), b.at(1).get<double>(),
                  b.at(2).get<double>()};
      }
      if (je.contains("cut")) e.cut = je.at("cut").get<double>();
      ends.push_back(e);
    }
  }
  if (ends.empty()) {
    dgl::EndConfig a, b;
    a.index = 0;
    b.index = 1;
    b.axis = {0, 0, -1};
    ends = {a, b};
  }
  return ends;
}

ordered_json glue_report(const dgl::GluedSurface& g,
                         const std::vector<std::string>& files) {
  ordered_json r;
  r["epsilon"] = jnum(g.epsilon);
  r["mu"] = jnum(g.mu);
  r["kappa"] = jnum(g.kappa);
  r["sweeps"] = g.sweeps;
  r["final_sweep_update"] = jnum(g.final_sweep_update);
  r["interior_sup_h"] = jnum(g.interior_sup_h);
  r["interior_sup_h_bulk"] = jnum(g.interior_sup_h_bulk);
  r["assembled_sup_h"] = jnum(g.assembled_sup_h);
  ordered_json fit;
  fit["necksize"] = jnum(g.best_fit_necksize);
  fit["shift"] = jnum(g.best_fit_shift);
  fit["rms"] = jnum(g.best_fit_rms);
  fit["max"] = jnum(g.best_fit_max);
  r["best_fit"] = fit;
  r["params"] = ordered_json::array();
  for (const auto& p : g.params.ends) {
    ordered_json jp;
    jp["t1"] = jnum(p.t1);
    jp["t2"] = jnum(p.t2);
    jp["r1"] = jnum(p.r1);
    jp["r2"] = jnum(p.r2);
    jp["d"] = jnum(p.d);
    jp["delta"] = jnum(p.delta);
    r["params"].push_back(jp);
  }
  r["phi"] = ordered_json::array();
  for (size_t l = 0; l < g.phi.size(); ++l)
    for (int j = -dgl::kMaxMode; j <= dgl::kMaxMode; ++j)
      if (g.phi[l].at(j) != 0.0) {
        ordered_json jp;
        jp["end"] = int(l);
        jp["j"] = j;
        jp["value"] = jnum(g.phi[l].at(j));
        r["phi"].push_back(jp);
      }
  r["ends"] = ordered_json::array();
  for (const auto& e : g.ends) {
    ordered_json je;
    je["index"] = e.index;
    je["necksize"] = jnum(e.necksize);
    je["sup_h_bulk"] = jnum(e.sup_h_bulk);
    je["sup_h_collar"] = jnum(e.sup_h_collar);
    je["seam_gap"] = jnum(e.seam_gap);
    je["seam_kink"] = jnum(e.seam_kink);
    double worst_value = 0, worst_slope = 0;
    ordered_json jm = ordered_json::array();
    for (const auto& m : e.mismatch) {
      worst_value = std::max(worst_value, std::abs(m.value));
      worst_slope = std::max(worst_slope, std::abs(m.slope));
      ordered_json one;
      one["j"] = m.j;
      one["value"] = jnum(m.value);
      one["slope"] = jnum(m.slope);
      jm.push_back(one);
    }
    je["max_value_mismatch"] = jnum(worst_value);
    je["max_slope_mismatch"] = jnum(worst_slope);
    je["mismatch"] = jm;
    r["ends"].push_back(je);
  }
  if (!files.empty()) {
    r["files"] = ordered_json::array();
    for (const auto& f : files) r["files"].push_back(f);
  }
  return r;
}

ordered_json run_glue(const Options& o) {
  const ordered_json& cfg = o.config_file;
  const double eps = o.epsilon.value_or(0.1);
  const double mu = o.mu.value_or(1.5);
  const double kappa = o.kappa.value_or(1.25);
  const std::vector<dgl::EndConfig> ends = parse_ends(cfg);

  const dgl::GluedSurface g = dgl::assemble_glued(eps, ends, mu, kappa);

  std::vector<std::string> files;
  if (!o.out_dir.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(o.out_dir);
    const std::string interior = (fs::path(o.out_dir) / "interior.obj").string();
    dgl::export_mesh(g.interior_mesh, dgl::MeshFormat::Obj, interior);
    files.push_back(interior);
    for (size_t l = 0; l < g.end_meshes.size(); ++l) {
      const std::string path =
          (fs::path(o.out_dir) / ("end_" + std::to_string(l) + ".obj")).string();
      dgl::export_mesh(g.end_meshes[l], dgl::MeshFormat::Obj, path);
      files.push_back(path);
    }
    const std::string rpath = (fs::path(o.out_dir) / "residuals.json").string();
    write_json(rpath, glue_report(g, {}));
    files.push_back(rpath);
  }
  return glue_report(g, files);
}

ordered_json run_mesh(const Options& o, const std::string& kind, int res1,
                      int res2) {
  const double eps = o.epsilon.value_or(0.5);
  dgl::SurfaceMesh mesh;
  if (kind == "delaunay" || kind == "cylindrical") {
    const dgl::NeckParams par = dgl::neck_params(eps);
    const double span =
        eps >= 1.0 ? 2.0 * std::acos(-1.0) : dgl::period_S(par);
    const dgl::DelaunayProfile profile = dgl::solve_profile(par, span + 0.5);
    if (kind == "delaunay") {
      const dgl::DelaunayPatch patch(profile, -span, span);
      mesh = dgl::sample_mesh(patch, res1, res2, o.threads);
    } else {
      const double t_hi = profile.k_at(span);
      const dgl::DelaunayCylPatch patch(profile, -t_hi, t_hi);
      mesh = dgl::sample_mesh(patch, res1, res2, o.threads);
    }
  } else if (kind == "sphere") {
    const dgl::SpherePatch patch(2.0, {0, 0, 0});
    mesh = dgl::sample_mesh(patch, res1, res2, o.threads);
  } else if (kind == "cylinder") {
    const dgl::CylinderPatch patch(1.0);
    mesh = dgl::sample_mesh(patch, res1, res2, o.threads);
  } else if (kind == "catenoid") {
    const dgl::CatenoidPatch patch(eps);
    mesh = dgl::sample_mesh(patch, res1, res2, o.threads);
  } else {
    throw std::invalid_argument("mesh: unknown --kind " + kind);
  }
  if (o.out.empty()) throw std::invalid_argument("mesh: --out is required");
  const dgl::MeshFormat format =
      o.out.size() >= 4 && o.out.substr(o.out.size() - 4) == ".ply"
          ? dgl::MeshFormat::Ply
          : dgl::MeshFormat::Obj;
  dgl::export_mesh(mesh, format, o.out);

  double sup_dev = 0;
  const double target = kind == "catenoid" ? 0.0 : 1.0;
  for (double h : mesh.mean_curv) sup_dev = std::max(sup_dev, std::abs(h - target));
  ordered_json r;
  r["kind"] = kind;
  r["epsilon"] = jnum(eps);
  r["vertices"] = int(mesh.vertex.size());
  r["quads"] = int(mesh.quads.size());
  r["sup_h_deviation"] = jnum(sup_dev);
  r["out"] = o.out;
  return r;
}

ordered_json echo_config(const std::string& sub, const Options& o) {
  ordered_json c;
  c["subcommand"] = sub;
  if (o.epsilon) c["epsilon"] = jnum(*o.epsilon);
  if (o.mu) c["mu"] = jnum(*o.mu);
  if (o.kappa) c["kappa"] = jnum(*o.kappa);
  if (o.j) c["j"] = *o.j;
  if (o.tolerance) c["tolerance"] = jnum(*o.tolerance);
  if (!o.config_path.empty()) c["config"] = o.config_path;
  if (!o.out.empty()) c["out"] = o.out;
  if (!o.out_dir.empty()) c["out_dir"] = o.out_dir;
  c["threads"] = o.threads;
  c["seed"] = o.seed;
  return c;
}

const char* kSubcommands[] = {"profile", "periods", "estimates", "jacobi", "floquet",
                              "bvp",     "graph",   "glue",      "mesh"};

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Delaunay-end gluing toolkit"};
  app.set_version_flag("--version", DGL_VERSION);

  if (argc < 2) {
    std::cerr << app.help() << std::flush;
    return 1;
  }
  const std::string first = argv[1];
  if (first != "-h" && first != "--help" && first != "--version") {
    bool known = false;
    for (const char* s : kSubcommands) known = known || first == s;
    if (!known) {
      std::cerr << "unknown subcommand: " << first << "\n" << app.help() << std::flush;
      return 1;
    }
  }

  struct Sub {
    CLI::App* cmd = nullptr;
    Options opts;
    std::string kind = "delaunay";
    int res1 = 200, res2 = 64;
  };
  std::vector<Sub> subs(9);
  for (int i = 0; i < 9; ++i) {
    Sub& s = subs[i];
    const std::string name = kSubcommands[i];
    s.cmd = app.add_subcommand(name, "");
    add_common(s.cmd, s.opts);
    s.cmd->add_option("--epsilon", s.opts.epsilon, "necksize in (0, 1]");
    if (name == "bvp" || name == "graph" || name == "glue")
      s.cmd->add_option("--mu", s.opts.mu, "exponential weight in (1, 2)");
    if (name == "glue")
      s.cmd->add_option("--kappa", s.opts.kappa, "deformation exponent in (1, 3/2)");
    if (name == "floquet" || name == "bvp" || name == "graph")
      s.cmd->add_option("--j", s.opts.j, "angular mode");
    if (name == "bvp" || name == "graph")
      s.cmd->add_option("--tolerance", s.opts.tolerance, "report threshold");
    if (name == "profile" || name == "mesh")
      s.cmd->add_option("--out", s.opts.out, "output file path");
    if (name == "glue")
      s.cmd->add_option("--out-dir", s.opts.out_dir, "output directory");
    if (name == "mesh") {
      s.cmd->add_option("--kind", s.kind,
                        "delaunay|cylindrical|sphere|cylinder|catenoid");
      s.cmd->add_option("--res1", s.res1, "axial resolution");
      s.cmd->add_option("--res2", s.res2, "angular resolution");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const auto t0 = std::chrono::steady_clock::now();
  int code = 0;
  ordered_json summary;
  summary["version"] = DGL_VERSION;

  try {
    for (int i = 0; i < 9; ++i) {
      Sub& s = subs[i];
      if (!s.cmd->parsed()) continue;
      load_config(s.cmd, s.opts);
      const std::string name = kSubcommands[i];
      summary["config"] = echo_config(name, s.opts);
      if (name == "profile") summary["result"] = run_profile(s.opts);
      else if (name == "periods") summary["result"] = run_periods(s.opts);
      else if (name == "estimates") summary["result"] = run_estimates(s.opts);
      else if (name == "jacobi") summary["result"] = run_jacobi(s.opts);
      else if (name == "floquet") summary["result"] = run_floquet(s.opts);
      else if (name == "bvp") summary["result"] = run_bvp(s.opts);
      else if (name == "graph") summary["result"] = run_graph(s.opts);
      else if (name == "glue") summary["result"] = run_glue(s.opts);
      else summary["result"] = run_mesh(s.opts, s.kind, s.res1, s.res2);
    }
  } catch (const dgl::numerical_error& e) {
    summary["error"] = e.what();
    code = 3;
  } catch (const std::invalid_argument& e) {
    summary["error"] = e.what();
    code = 2;
  } catch (const std::out_of_range& e) {
    summary["error"] = e.what();
    code = 2;
  } catch (const std::domain_error& e) {
    summary["error"] = e.what();
    code = 2;
  }

  const auto t1 = std::chrono::steady_clock::now();
  summary["wall_time_s"] =
      jnum(std::chrono::duration<double>(t1 - t0).count());
  std::cout << summary.dump(2) << std::endl;
  return code;
}
