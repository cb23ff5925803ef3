#include "dgl/graph.hpp"

#include "dgl/jacobi.hpp"
#include "dgl/log.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dgl {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct ThetaTables {
  std::array<double, kThetaSamples> cos_t{}, sin_t{};
  std::array<std::array<double, kThetaSamples>, 2 * kMaxMode + 1> chi{}, dchi{};
};

const ThetaTables& theta_tables() {
  static const ThetaTables tables = [] {
    ThetaTables t;
    for (int m = 0; m < kThetaSamples; ++m) {
      const double th = 2.0 * kPi * m / kThetaSamples;
      t.cos_t[m] = std::cos(th);
      t.sin_t[m] = std::sin(th);
      for (int j = -kMaxMode; j <= kMaxMode; ++j) {
        t.chi[j + kMaxMode][m] = mode_angular(j, th);
        double d = 0;
        if (j > 0)
          d = -j * std::sin(j * th) / std::sqrt(kPi);
        else if (j < 0)
          d = -j * std::cos(j * th) / std::sqrt(kPi);
        t.dchi[j + kMaxMode][m] = d;
      }
    }
    return t;
  }();
  return tables;
}

} // namespace

FrameRow DelaunayFrame::row(double s) const {
  const double tau = profile_.neck.tau;
  const double sg = profile_.sigma_at(s);
  const double sgs = profile_.sigma_s_at(s);
  const double sgss = profile_.sigma_ss_at(s);
  const double k = profile_.k_at(s);
  const double es = std::exp(sg);
  const double ch = std::cosh(sg);
  const double sh = std::sinh(sg);
  const double tau2 = tau * tau;
  FrameRow r;
  r.rho = tau * es;
  r.rho_s = r.rho * sgs;
  r.rho_ss = r.rho * (sgs * sgs + sgss);
  r.z = k;
  r.z_s = tau2 * es * ch;
  r.z_ss = tau2 * es * es * sgs;
  r.A = tau * ch;
  r.A_s = tau * sh * sgs;
  r.A_ss = tau * (ch * sgs * sgs + sh * sgss);
  r.B = sgs;
  r.B_s = sgss;
  r.B_ss = -tau2 * std::cosh(2.0 * sg) * sgs;
  r.lambda2 = r.rho * r.rho;
  r.potential = tau2 * std::cosh(2.0 * sg);
  r.base_h = 1.0;
  return r;
}

FrameRow CatenoidFrame::row(double s) const {
  const double ch = std::cosh(s);
  const double sh = std::sinh(s);
  const double sech = 1.0 / ch;
  const double th = sh / ch;
  FrameRow r;
  r.rho = scale_ * ch;
  r.rho_s = scale_ * sh;
  r.rho_ss = scale_ * ch;
  r.z = scale_ * s;
  r.z_s = scale_;
  r.z_ss = 0;
  r.A = sech;
  r.A_s = -sech * th;
  r.A_ss = sech * (th * th - sech * sech);
  r.B = th;
  r.B_s = sech * sech;
  r.B_ss = -2.0 * sech * sech * th;
  r.lambda2 = scale_ * scale_ * ch * ch;
  r.potential = 2.0 * sech * sech;
  r.base_h = 0.0;
  return r;
}

FrameData frame_at(const FrameRow& r, double c, double s) {
  FrameData f;
  f.x = {r.rho * c, r.rho * s, r.z};
  f.xs = {r.rho_s * c, r.rho_s * s, r.z_s};
  f.xt = {-r.rho * s, r.rho * c, 0};
  f.xss = {r.rho_ss * c, r.rho_ss * s, r.z_ss};
  f.xst = {-r.rho_s * s, r.rho_s * c, 0};
  f.xtt = {-r.rho * c, -r.rho * s, 0};
  f.nu = {-r.A * c, -r.A * s, r.B};
  f.nus = {-r.A_s * c, -r.A_s * s, r.B_s};
  f.nut = {r.A * s, -r.A * c, 0};
  f.nuss = {-r.A_ss * c, -r.A_ss * s, r.B_ss};
  f.nust = {r.A_s * s, -r.A_s * c, 0};
  f.nutt = {r.A * c, r.A * s, 0};
  return f;
}

double graph_mean_curvature(const FrameData& fr, const std::array<double, 6>& jet) {
  const double w = jet[0], ws = jet[1], wt = jet[2];
  const double wss = jet[3], wst = jet[4], wtt = jet[5];
  const Vec3 Xs = fr.xs + ws * fr.nu + w * fr.nus;
  const Vec3 Xt = fr.xt + wt * fr.nu + w * fr.nut;
  const Vec3 Xss = fr.xss + wss * fr.nu + 2.0 * ws * fr.nus + w * fr.nuss;
  const Vec3 Xst = fr.xst + wst * fr.nu + ws * fr.nut + wt * fr.nus + w * fr.nust;
  const Vec3 Xtt = fr.xtt + wtt * fr.nu + 2.0 * wt * fr.nut + w * fr.nutt;
  const double E = dot(Xs, Xs), F = dot(Xs, Xt), G = dot(Xt, Xt);
  const double det = E * G - F * F;
  if (!(det > 0) || !std::isfinite(det))
    throw numerical_error("graph_mean_curvature: degenerate immersion");
  const Vec3 n = normalized(cross(Xs, Xt));
  const double e = dot(n, Xss), f = dot(n, Xst), g = dot(n, Xtt);
  return (e * G - 2.0 * f * F + g * E) / det;
}

std::vector<ModeSolution> zero_band(const SGrid& grid) {
  std::vector<ModeSolution> band(2 * kMaxMode + 1);
  for (int j = -kMaxMode; j <= kMaxMode; ++j) {
    band[j + kMaxMode].j = j;
    band[j + kMaxMode].w.assign(grid.n, 0.0);
  }
  return band;
}

std::vector<ModeSolution> apply_mode_operator(const BaseFrame& frame, const SGrid& grid,
                                              const std::vector<ModeSolution>& w) {
  const int n = grid.n;
  const double h = grid.h, h2 = h * h;
  std::vector<double> pot(n);
  for (int i = 0; i < n; ++i) pot[i] = frame.row(grid.s(i)).potential;
  std::vector<ModeSolution> out;
  out.reserve(w.size());
  for (const auto& m : w) {
    if (int(m.w.size()) != n)
      throw std::invalid_argument("apply_mode_operator: mode not on the grid");
    const double jj = double(m.j) * double(m.j);
    std::vector<double> q(n);
    for (int i = 0; i < n; ++i) q[i] = jj - pot[i];
    // Recover the forcing f with w'' = q w + f in the same discrete sense the
    // three-point solvers use: their interior rows couple (f_{i-1} + 10 f_i +
    // f_{i+1}) / 12, so undo that coupling by a tridiagonal solve. Edge rows
    // pin f to its one-sided finite-difference value.
    const std::vector<double> d2 = deriv2_fd4(m.w, h);
    std::vector<double> lower(n, 1.0 / 12.0), diag(n, 10.0 / 12.0),
        upper(n, 1.0 / 12.0), rhs(n);
    diag[0] = 1.0;
    upper[0] = 0.0;
    rhs[0] = d2[0] - q[0] * m.w[0];
    for (int i = 1; i < n - 1; ++i)
      rhs[i] = ((1.0 - h2 * q[i - 1] / 12.0) * m.w[i - 1] -
                (2.0 + 10.0 * h2 * q[i] / 12.0) * m.w[i] +
                (1.0 - h2 * q[i + 1] / 12.0) * m.w[i + 1]) /
               h2;
    lower[n - 1] = 0.0;
    diag[n - 1] = 1.0;
    rhs[n - 1] = d2[n - 1] - q[n - 1] * m.w[n - 1];
    ModeSolution o;
    o.j = m.j;
    o.w = solve_tridiag(std::move(lower), std::move(diag), std::move(upper),
                        std::move(rhs));
    out.push_back(std::move(o));
  }
  return out;
}

namespace {

// Second derivatives of the active modes: 4th-order finite differences of
// the field, or, when the exact discrete forcing f with
// w'' = (j^2 - potential) w + f is supplied, the operator-consistent values.
// The latter match the marching schemes at every node, including the first
// and last rows where finite differences would need one-sided stencils.
void band_second_derivatives(const BaseFrame& frame, const SGrid& grid,
                             const std::vector<ModeSolution>& w,
                             const std::vector<int>& active,
                             const std::vector<ModeSolution>* forcing,
                             std::vector<std::vector<double>>& d2) {
  const int n = grid.n;
  if (!forcing) {
    for (int b : active) d2[b] = deriv2_fd4(w[b].w, grid.h);
    return;
  }
  if (forcing->size() != w.size())
    throw std::invalid_argument("band_second_derivatives: forcing band mismatch");
  std::vector<double> pot(n);
  for (int i = 0; i < n; ++i) pot[i] = frame.row(grid.s(i)).potential;
  for (int b : active) {
    const std::vector<double>& f = (*forcing)[b].w;
    if (int(f.size()) != n)
      throw std::invalid_argument("band_second_derivatives: forcing not on the grid");
    const double jj = double(w[b].j) * double(w[b].j);
    d2[b].resize(n);
    for (int i = 0; i < n; ++i) d2[b][i] = (jj - pot[i]) * w[b].w[i] + f[i];
  }
}

}  // namespace

CurvatureProjection project_scaled_curvature(const BaseFrame& frame, const SGrid& grid,
                                             const std::vector<ModeSolution>& w,
                                             double h_target, double sup_limit,
                                             bool skip_negligible_rows,
                                             const std::vector<ModeSolution>* forcing) {
  const int n = grid.n;
  const int nb = int(w.size());
  const ThetaTables& tab = theta_tables();

  // Modes carrying nothing but rounding junk are left out of the pointwise
  // sums; everything below 1e-15 of the largest mode cannot move any of the
  // tracked tolerances.
  if (nb != 2 * kMaxMode + 1)
    throw std::invalid_argument("project_scaled_curvature: expected the full band");
  double global_sup = 0;
  std::vector<double> mode_sup(nb, 0.0);
  for (int b = 0; b < nb; ++b) {
    if (int(w[b].w.size()) != n || w[b].j != b - kMaxMode)
      throw std::invalid_argument("project_scaled_curvature: band out of order");
    for (double v : w[b].w) mode_sup[b] = std::max(mode_sup[b], std::abs(v));
    global_sup = std::max(global_sup, mode_sup[b]);
  }
  std::vector<int> active;
  for (int b = 0; b < nb; ++b)
    if (mode_sup[b] > 1e-15 * global_sup && mode_sup[b] > 0) active.push_back(b);

  std::vector<std::vector<double>> d1(nb), d2(nb);
  band_second_derivatives(frame, grid, w, active, forcing, d2);
  for (int b : active) d1[b] = deriv1_fd4(w[b].w, grid.h);

  const bool skip_ok = skip_negligible_rows && frame.row(grid.s0).base_h == h_target;

  CurvatureProjection out;
  out.modes = zero_band(grid);

  const double weight = 2.0 * kPi / kThetaSamples;
  std::array<double, kThetaSamples> fval{};
  for (int i = 0; i < n; ++i) {
    bool negligible = true;
    for (int b : active)
      if (std::abs(w[b].w[i]) >= 1e-12) { negligible = false; break; }
    if (skip_ok && negligible) continue;

    const FrameRow row = frame.row(grid.s(i));
    const bool in_sup = grid.s(i) <= sup_limit;
    for (int m = 0; m < kThetaSamples; ++m) {
      double wv = 0, wsv = 0, wtv = 0, wssv = 0, wstv = 0, wttv = 0;
      for (int b : active) {
        const double chi = tab.chi[b][m];
        const double dchi = tab.dchi[b][m];
        const double jj = double(w[b].j) * double(w[b].j);
        wv += w[b].w[i] * chi;
        wsv += d1[b][i] * chi;
        wtv += w[b].w[i] * dchi;
        wssv += d2[b][i] * chi;
        wstv += d1[b][i] * dchi;
        wttv -= jj * w[b].w[i] * chi;
      }
      const FrameData fd = frame_at(row, tab.cos_t[m], tab.sin_t[m]);
      const double H = graph_mean_curvature(fd, {wv, wsv, wtv, wssv, wstv, wttv});
      if (in_sup) out.sup_h_dev = std::max(out.sup_h_dev, std::abs(H - h_target));
      fval[m] = row.lambda2 * (H - h_target);
    }
    double parseval = 0;
    double kept = 0;
    for (int m = 0; m < kThetaSamples; ++m) parseval += fval[m] * fval[m];
    parseval *= weight;
    for (int b = 0; b < nb; ++b) {
      double c = 0;
      for (int m = 0; m < kThetaSamples; ++m) c += fval[m] * tab.chi[b][m];
      c *= weight;
      out.modes[b].w[i] = c;
      kept += c * c;
    }
    out.alias_energy += std::max(0.0, parseval - kept) * grid.h;
  }
  return out;
}

CylSolution nonlinear_defect(const DelaunayProfile& profile, const CylSolution& w) {
  if (int(w.modes.size()) != 2 * kMaxMode + 1)
    throw std::invalid_argument("nonlinear_defect: expected the full mode band");
  const DelaunayFrame frame(profile);
  CurvatureProjection proj = project_scaled_curvature(frame, w.grid, w.modes, 1.0,
                                                      w.grid.s_end(), true);
  std::vector<ModeSolution> lw = apply_mode_operator(frame, w.grid, w.modes);
  CylSolution out;
  out.grid = w.grid;
  out.modes = std::move(lw);
  for (size_t b = 0; b < out.modes.size(); ++b)
    for (int i = 0; i < w.grid.n; ++i) out.modes[b].w[i] -= proj.modes[b].w[i];
  out.bound_constant = proj.alias_energy;
  return out;
}

double sup_h_window(const BaseFrame& frame, const SGrid& grid,
                    const std::vector<ModeSolution>& w, double h_target,
                    double s_lo, double s_hi,
                    const std::vector<ModeSolution>* forcing) {
  const int n = grid.n;
  const int nb = int(w.size());
  const ThetaTables& tab = theta_tables();
  if (nb != 2 * kMaxMode + 1)
    throw std::invalid_argument("sup_h_window: expected the full band");
  double global_sup = 0;
  std::vector<double> mode_sup(nb, 0.0);
  for (int b = 0; b < nb; ++b) {
    if (int(w[b].w.size()) != n || w[b].j != b - kMaxMode)
      throw std::invalid_argument("sup_h_window: band out of order");
    for (double v : w[b].w) mode_sup[b] = std::max(mode_sup[b], std::abs(v));
    global_sup = std::max(global_sup, mode_sup[b]);
  }
  std::vector<int> active;
  for (int b = 0; b < nb; ++b)
    if (mode_sup[b] > 1e-15 * global_sup && mode_sup[b] > 0) active.push_back(b);

  std::vector<std::vector<double>> d1(nb), d2(nb);
  band_second_derivatives(frame, grid, w, active, forcing, d2);
  for (int b : active) d1[b] = deriv1_fd4(w[b].w, grid.h);

  double sup = 0;
  for (int i = 0; i < n; ++i) {
    const double s = grid.s(i);
    if (s < s_lo || s > s_hi) continue;
    const FrameRow row = frame.row(s);
    for (int m = 0; m < kThetaSamples; ++m) {
      double wv = 0, wsv = 0, wtv = 0, wssv = 0, wstv = 0, wttv = 0;
      for (int b : active) {
        const double chi = tab.chi[b][m];
        const double dchi = tab.dchi[b][m];
        const double jj = double(w[b].j) * double(w[b].j);
        wv += w[b].w[i] * chi;
        wsv += d1[b][i] * chi;
        wtv += w[b].w[i] * dchi;
        wssv += d2[b][i] * chi;
        wstv += d1[b][i] * dchi;
        wttv -= jj * w[b].w[i] * chi;
      }
      const FrameData fd = frame_at(row, tab.cos_t[m], tab.sin_t[m]);
      const double H = graph_mean_curvature(fd, {wv, wsv, wtv, wssv, wstv, wttv});
      sup = std::max(sup, std::abs(H - h_target));
    }
  }
  return sup;
}

GraphPoint graph_point(const FrameRow& row, double cos_th, double sin_th,
                       const std::array<double, 6>& jet) {
  const FrameData fr = frame_at(row, cos_th, sin_th);
  const double w = jet[0], ws = jet[1], wt = jet[2];
  GraphPoint p;
  p.position = fr.x + w * fr.nu;
  const Vec3 Xs = fr.xs + ws * fr.nu + w * fr.nus;
  const Vec3 Xt = fr.xt + wt * fr.nu + w * fr.nut;
  p.normal = normalized(cross(Xs, Xt));
  p.mean_h = graph_mean_curvature(fr, jet);
  return p;
}

GraphSolution solve_graph(const DelaunayProfile& profile, double s0,
                          const BoundaryData& phi, double mu,
                          const std::vector<ModeSolution>* warm_start,
                          const SGrid* grid_override) {
  if (!phi.high_mode_only())
    throw std::invalid_argument("solve_graph: trace data must vanish on modes |j| <= 1");
  const double eps = profile.neck.epsilon;
  const double ball = 0.3 * std::pow(eps, 0.75);
  if (phi.norm() > ball * (1.0 + 1e-12))
    throw std::invalid_argument("solve_graph: trace data outside the solvable ball");

  SGrid grid;
  if (grid_override) {
    grid = *grid_override;
    if (std::abs(grid.s0 - s0) > 1e-12)
      throw std::invalid_argument("solve_graph: grid override must start at s0");
    if (grid.n < 8 || grid.s_end() > profile.s_max + 1e-9)
      throw std::invalid_argument("solve_graph: grid override outside the profile");
  } else {
    grid = half_cylinder_grid(profile, s0);
  }
  GraphSolution out;
  out.epsilon = eps;
  out.s0 = s0;
  out.grid = grid;
  out.phi = phi;

  std::vector<ModeSolution> base = zero_band(grid);
  {
    const CylSolution we = poisson_apply(profile, grid, phi, mu);
    for (const auto& m : we.modes) base[m.j + kMaxMode].w = m.w;
  }
  if (phi.norm() == 0 && !warm_start) {
    out.correction = zero_band(grid);
    out.w_forcing = zero_band(grid);
    out.w = std::move(base);
    return out;
  }

  std::vector<ModeSolution> v = warm_start ? *warm_start : zero_band(grid);
  if (int(v.size()) != 2 * kMaxMode + 1)
    throw std::invalid_argument("solve_graph: warm start must carry the full band");
  for (const auto& m : v)
    if (int(m.w.size()) != grid.n)
      throw std::invalid_argument("solve_graph: warm start not on the grid");

  const DelaunayFrame frame(profile);
  const double sup_limit = s0 + 2.0 * profile.period_s;
  std::vector<ModeSolution> w = zero_band(grid);
  // Forcing that produced the current correction: the base solve is
  // homogeneous and each iterate comes out of the solvers with a known
  // right-hand side, so the operator applied to base + v is available
  // exactly, without numerical differentiation. A warm start arrives
  // without its forcing, so recover it once discretely.
  std::vector<ModeSolution> lv =
      warm_start ? apply_mode_operator(frame, grid, v) : zero_band(grid);
  // Convergence is controlled on the pointwise curvature defect, which keeps
  // contracting through the tracked forcing even once the field correction
  // itself sits below evaluation noise: a defect spike near the boundary
  // moves the field by only O(h^2) but the forcing absorbs it at full
  // weight. Stop once the defect has dropped six orders below its initial
  // size (or below an absolute floor for warm starts that begin small).
  double d0 = 0;
  double prev = std::numeric_limits<double>::infinity();
  bool converged = false;
  for (int it = 1; it <= 50; ++it) {
    for (int b = 0; b < 2 * kMaxMode + 1; ++b)
      for (int i = 0; i < grid.n; ++i) w[b].w[i] = base[b].w[i] + v[b].w[i];
    const CurvatureProjection proj =
        project_scaled_curvature(frame, grid, w, 1.0, sup_limit, true, &lv);
    const double d = proj.sup_h_dev;
    if (it == 1) d0 = d;
    log_debug("graph it=%d defect=%.3e", it, d);
    out.iterations = it - 1;
    out.final_update = d;
    out.updates.push_back(d);
    out.h_residual = d;
    out.alias_energy = proj.alias_energy;
    if (d <= std::max(1e-6 * d0, 1e-6)) {
      converged = true;
      break;
    }
    if (d >= 0.9 * prev) {
      // stalled at the evaluation floor of the defect; accept the iterate if
      // the floor is small enough to be meaningful, otherwise report failure
      if (d <= 1e-4) {
        converged = true;
        break;
      }
      throw numerical_error("solve_graph: defect stopped improving above tolerance");
    }
    prev = d;

    std::vector<ModeSolution> defect = lv;
    for (int b = 0; b < 2 * kMaxMode + 1; ++b)
      for (int i = 0; i < grid.n; ++i) defect[b].w[i] -= proj.modes[b].w[i];
    const CylSolution next = green_apply(profile, grid, defect, mu);
    v = next.modes;
    lv = std::move(defect);
  }
  if (!converged)
    throw numerical_error("solve_graph: no convergence within 50 iterations");

  out.correction = std::move(v);
  out.w_forcing = std::move(lv);
  out.w = std::move(w);
  return out;
}

void CauchyData::set(int j, double val, double slo) {
  if (j < -kMaxMode || j > kMaxMode)
    throw std::invalid_argument("CauchyData: mode outside the stored band");
  value[j + kMaxMode] = val;
  slope[j + kMaxMode] = slo;
}

double CauchyData::low_norm() const {
  double sum = 0;
  for (int j = -1; j <= 1; ++j) sum += v(j) * v(j) + sl(j) * sl(j);
  return std::sqrt(sum);
}

double CauchyData::high_norm() const {
  double sum = 0;
  for (int j = -kMaxMode; j <= kMaxMode; ++j) {
    if (j >= -1 && j <= 1) continue;
    sum += v(j) * v(j) + sl(j) * sl(j);
  }
  return std::sqrt(sum);
}

CauchyData cauchy_data(const GraphSolution& solution) {
  CauchyData data;
  const double h = solution.grid.h;
  for (const auto& m : solution.w) {
    if (m.w.size() < 5) throw std::invalid_argument("cauchy_data: grid too small");
    const double slope =
        (-25.0 * m.w[0] + 48.0 * m.w[1] - 36.0 * m.w[2] + 16.0 * m.w[3] - 3.0 * m.w[4]) /
        (12.0 * h);
    data.set(m.j, m.w[0], slope);
  }
  return data;
}

} // namespace dgl
