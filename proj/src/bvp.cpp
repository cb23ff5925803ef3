#include "dgl/bvp.hpp"

#include "dgl/jacobi.hpp"
#include "dgl/log.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>

namespace dgl {

void BoundaryData::set(int j, double v) {
  if (j < -kMaxMode || j > kMaxMode)
    throw std::invalid_argument("BoundaryData: mode outside the stored band");
  coeff[j + kMaxMode] = v;
}

double BoundaryData::norm() const {
  double sum = 0;
  for (double c : coeff) sum += c * c;
  return std::sqrt(sum);
}

bool BoundaryData::high_mode_only() const {
  return at(-1) == 0 && at(0) == 0 && at(1) == 0;
}

double BoundaryData::evaluate(double theta) const {
  double v = 0;
  for (int j = -kMaxMode; j <= kMaxMode; ++j)
    if (at(j) != 0) v += at(j) * mode_angular(j, theta);
  return v;
}

const std::vector<double>* CylSolution::mode(int j) const {
  for (const auto& m : modes)
    if (m.j == j) return &m.w;
  return nullptr;
}

double CylSolution::value(int node, double theta) const {
  double v = 0;
  for (const auto& m : modes) v += m.w[node] * mode_angular(m.j, theta);
  return v;
}

SGrid half_cylinder_grid(const DelaunayProfile& profile, double s0, double span) {
  if (span <= 0) span = std::max(4.0 * profile.period_s, 40.0);
  const double step = std::min(0.01, profile.period_s / 4000.0);
  const int m = std::max(8, int(std::ceil(span / step)));
  SGrid grid{s0, span / m, m + 1};
  if (s0 < profile.s_min - 1e-9 || grid.s_end() > profile.s_max + 1e-9)
    throw std::invalid_argument("half_cylinder_grid: profile does not cover the grid");
  return grid;
}

namespace {

std::vector<double> build_potential(const DelaunayProfile& profile, const SGrid& grid) {
  std::vector<double> pot(grid.n);
  for (int i = 0; i < grid.n; ++i) pot[i] = profile.potential_at(grid.s(i));
  return pot;
}

std::vector<double> mode_q(const std::vector<double>& pot, int j) {
  std::vector<double> q(pot.size());
  for (size_t i = 0; i < pot.size(); ++i) q[i] = double(j) * double(j) - pot[i];
  return q;
}

// Far-boundary decay rates are reused heavily by the nonlinear iterations;
// cache them per (tau, |j|).
double robin_rate(const DelaunayProfile& profile, int j) {
  static std::mutex lock;
  static std::map<std::pair<long long, int>, double> cache;
  long long bits = 0;
  std::memcpy(&bits, &profile.neck.tau, sizeof bits);
  const std::pair<long long, int> key{bits, std::abs(j)};
  {
    std::lock_guard<std::mutex> guard(lock);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  const double gamma = floquet_exponent(profile, std::abs(j));
  std::lock_guard<std::mutex> guard(lock);
  cache.emplace(key, gamma);
  return gamma;
}

void check_mu(double mu) {
  if (!(mu > 1.0 && mu < 2.0))
    throw std::invalid_argument("weight exponent mu must lie in (1, 2)");
}

} // namespace

std::vector<double> solve_mode_bvp(const std::vector<double>& q,
                                   const std::vector<double>& f, double h,
                                   double dirichlet, double robin_gamma) {
  const int n = int(q.size());
  if (n < 8 || f.size() != q.size())
    throw std::invalid_argument("solve_mode_bvp: bad sizes");
  const double h2 = h * h;
  std::vector<double> lower(n), diag(n), upper(n), rhs(n);
  diag[0] = 1;
  upper[0] = 0;
  rhs[0] = dirichlet;
  for (int i = 1; i < n - 1; ++i) {
    lower[i] = 1.0 - h2 * q[i - 1] / 12.0;
    diag[i] = -2.0 - 10.0 * h2 * q[i] / 12.0;
    upper[i] = 1.0 - h2 * q[i + 1] / 12.0;
    rhs[i] = h2 / 12.0 * (f[i - 1] + 10.0 * f[i] + f[i + 1]);
  }
  // Ghost node beyond the far cut eliminated with w' = -gamma w there;
  // w_{N+1} = w_{N-1} + 2h w'_N + (h^3/3)(q'w + q w' + f')_N keeps the row
  // at the scheme's order.
  const int N = n - 1;
  const double qg = 3.0 * q[N] - 3.0 * q[N - 1] + q[N - 2];
  const double fg = 3.0 * f[N] - 3.0 * f[N - 1] + f[N - 2];
  const double a = 1.0 - h2 * q[N - 1] / 12.0;
  const double b = -2.0 - 10.0 * h2 * q[N] / 12.0;
  const double c = 1.0 - h2 * qg / 12.0;
  const double r = h2 / 12.0 * (f[N - 1] + 10.0 * f[N] + fg);
  const double qp =
      (25.0 * q[N] - 48.0 * q[N - 1] + 36.0 * q[N - 2] - 16.0 * q[N - 3] + 3.0 * q[N - 4]) /
      (12.0 * h);
  const double fp =
      (25.0 * f[N] - 48.0 * f[N - 1] + 36.0 * f[N - 2] - 16.0 * f[N - 3] + 3.0 * f[N - 4]) /
      (12.0 * h);
  const double g1 = -2.0 * h * robin_gamma + (h * h2 / 3.0) * (qp - q[N] * robin_gamma);
  lower[N] = a + c;
  diag[N] = b + c * g1;
  rhs[N] = r - c * (h * h2 / 3.0) * fp;
  return solve_tridiag(std::move(lower), std::move(diag), std::move(upper), std::move(rhs));
}

std::vector<double> solve_mode_dirichlet(const std::vector<double>& q,
                                         const std::vector<double>& f, double h,
                                         double left, double right) {
  const int n = int(q.size());
  if (n < 8 || f.size() != q.size())
    throw std::invalid_argument("solve_mode_dirichlet: bad sizes");
  const double h2 = h * h;
  std::vector<double> lower(n), diag(n), upper(n), rhs(n);
  diag[0] = 1;
  upper[0] = 0;
  rhs[0] = left;
  for (int i = 1; i < n - 1; ++i) {
    lower[i] = 1.0 - h2 * q[i - 1] / 12.0;
    diag[i] = -2.0 - 10.0 * h2 * q[i] / 12.0;
    upper[i] = 1.0 - h2 * q[i + 1] / 12.0;
    rhs[i] = h2 / 12.0 * (f[i - 1] + 10.0 * f[i] + f[i + 1]);
  }
  lower[n - 1] = 0;
  diag[n - 1] = 1;
  rhs[n - 1] = right;
  return solve_tridiag(std::move(lower), std::move(diag), std::move(upper), std::move(rhs));
}

std::vector<double> solve_mode_backward(const std::vector<double>& q,
                                        const std::vector<double>& f, double h) {
  const int n = int(q.size());
  if (n < 8 || f.size() != q.size())
    throw std::invalid_argument("solve_mode_backward: bad sizes");
  const int N = n - 1;
  const double h2 = h * h;
  std::vector<double> w(n, 0.0);
  // Taylor start one node in from the zero-Cauchy far end.
  const double fp =
      (25.0 * f[N] - 48.0 * f[N - 1] + 36.0 * f[N - 2] - 16.0 * f[N - 3] + 3.0 * f[N - 4]) /
      (12.0 * h);
  const double fpp = (45.0 * f[N] - 154.0 * f[N - 1] + 214.0 * f[N - 2] - 156.0 * f[N - 3] +
                      61.0 * f[N - 4] - 10.0 * f[N - 5]) /
                     (12.0 * h2);
  w[N] = 0;
  w[N - 1] = h2 * f[N] / 2.0 - h * h2 * fp / 6.0 + h2 * h2 * (q[N] * f[N] + fpp) / 24.0;
  for (int i = N - 1; i >= 1; --i) {
    const double rhs = h2 / 12.0 * (f[i - 1] + 10.0 * f[i] + f[i + 1]);
    const double bi = -2.0 - 10.0 * h2 * q[i] / 12.0;
    const double ci = 1.0 - h2 * q[i + 1] / 12.0;
    const double ai = 1.0 - h2 * q[i - 1] / 12.0;
    w[i - 1] = (rhs - bi * w[i] - ci * w[i + 1]) / ai;
  }
  return w;
}

std::vector<double> solve_mode_cauchy(const std::vector<double>& q,
                                      const std::vector<double>& f, double h, int i0) {
  const int n = int(q.size());
  if (n < 8 || f.size() != q.size() || i0 < 3 || i0 > n - 4)
    throw std::invalid_argument("solve_mode_cauchy: bad sizes or start node");
  const double h2 = h * h;
  std::vector<double> w(n, 0.0);
  const double fp = (f[i0 - 2] - 8.0 * f[i0 - 1] + 8.0 * f[i0 + 1] - f[i0 + 2]) / (12.0 * h);
  const double fpp =
      (-f[i0 - 2] + 16.0 * f[i0 - 1] - 30.0 * f[i0] + 16.0 * f[i0 + 1] - f[i0 + 2]) /
      (12.0 * h2);
  const double quart = h2 * h2 * (q[i0] * f[i0] + fpp) / 24.0;
  w[i0] = 0;
  w[i0 + 1] = h2 * f[i0] / 2.0 + h * h2 * fp / 6.0 + quart;
  w[i0 - 1] = h2 * f[i0] / 2.0 - h * h2 * fp / 6.0 + quart;
  for (int i = i0 + 1; i < n - 1; ++i) {
    const double rhs = h2 / 12.0 * (f[i - 1] + 10.0 * f[i] + f[i + 1]);
    const double ai = 1.0 - h2 * q[i - 1] / 12.0;
    const double bi = -2.0 - 10.0 * h2 * q[i] / 12.0;
    w[i + 1] = (rhs - bi * w[i] - ai * w[i - 1]) / (1.0 - h2 * q[i + 1] / 12.0);
  }
  for (int i = i0 - 1; i >= 1; --i) {
    const double rhs = h2 / 12.0 * (f[i - 1] + 10.0 * f[i] + f[i + 1]);
    const double bi = -2.0 - 10.0 * h2 * q[i] / 12.0;
    const double ci = 1.0 - h2 * q[i + 1] / 12.0;
    w[i - 1] = (rhs - bi * w[i] - ci * w[i + 1]) / (1.0 - h2 * q[i - 1] / 12.0);
  }
  return w;
}

CylSolution green_apply(const DelaunayProfile& profile, const SGrid& grid,
                        const std::vector<ModeSolution>& forcing, double mu) {
  check_mu(mu);
  if (grid.n < 8) throw std::invalid_argument("green_apply: grid too small");
  CylSolution out;
  out.grid = grid;
  const std::vector<double> pot = build_potential(profile, grid);
  for (const auto& fm : forcing) {
    if (std::abs(fm.j) > kMaxMode)
      throw std::invalid_argument("green_apply: mode outside the stored band");
    if (int(fm.w.size()) != grid.n)
      throw std::invalid_argument("green_apply: forcing not sampled on the grid");
    if (out.mode(fm.j)) throw std::invalid_argument("green_apply: duplicate mode");
    const std::vector<double> q = mode_q(pot, fm.j);
    ModeSolution sol;
    sol.j = fm.j;
    if (std::abs(fm.j) >= 2)
      sol.w = solve_mode_bvp(q, fm.w, grid.h, 0.0, robin_rate(profile, fm.j));
    else
      sol.w = solve_mode_backward(q, fm.w, grid.h);
    out.modes.push_back(std::move(sol));
  }
  std::sort(out.modes.begin(), out.modes.end(),
            [](const ModeSolution& a, const ModeSolution& b) { return a.j < b.j; });
  const double fn = weighted_mode_norm(grid, forcing, {mu, grid.s0, 0});
  const double wn = weighted_mode_norm(grid, out.modes, {mu, grid.s0, 2});
  out.bound_constant = fn > 0 ? wn / fn : 0.0;
  return out;
}

CylSolution poisson_apply(const DelaunayProfile& profile, const SGrid& grid,
                          const BoundaryData& phi, double mu) {
  check_mu(mu);
  if (!phi.high_mode_only())
    throw std::invalid_argument("poisson_apply: data must vanish on modes |j| <= 1");
  CylSolution out;
  out.grid = grid;
  const std::vector<double> pot = build_potential(profile, grid);
  const std::vector<double> zero(grid.n, 0.0);
  for (int j = -kMaxMode; j <= kMaxMode; ++j) {
    if (phi.at(j) == 0) continue;
    const std::vector<double> q = mode_q(pot, j);
    ModeSolution sol;
    sol.j = j;
    sol.w = solve_mode_bvp(q, zero, grid.h, phi.at(j), robin_rate(profile, j));
    out.modes.push_back(std::move(sol));
  }
  const double pn = phi.norm();
  if (pn > 0) {
    const double wn = weighted_mode_norm(grid, out.modes, {mu, grid.s0, 2});
    out.bound_constant = wn * std::pow(profile.neck.epsilon, mu / 4.0) / pn;
  }
  return out;
}

CylSolution flat_poisson(const SGrid& grid, const BoundaryData& phi) {
  if (!phi.high_mode_only())
    throw std::invalid_argument("flat_poisson: data must vanish on modes |j| <= 1");
  CylSolution out;
  out.grid = grid;
  for (int j = -kMaxMode; j <= kMaxMode; ++j) {
    if (phi.at(j) == 0) continue;
    ModeSolution sol;
    sol.j = j;
    sol.w.resize(grid.n);
    for (int i = 0; i < grid.n; ++i)
      sol.w[i] = phi.at(j) * std::exp(-std::abs(j) * (grid.s(i) - grid.s0));
    out.modes.push_back(std::move(sol));
  }
  return out;
}

double weighted_mode_norm(const SGrid& grid, const std::vector<ModeSolution>& modes,
                          const WeightedNorm& norm) {
  check_mu(norm.mu);
  if (norm.order < 0 || norm.order > 2)
    throw std::invalid_argument("weighted_mode_norm: order must be 0, 1 or 2");
  const int n = grid.n;
  std::vector<double> sum0(n, 0.0), sum1(n, 0.0), sum2(n, 0.0);
  for (const auto& m : modes) {
    if (int(m.w.size()) != n)
      throw std::invalid_argument("weighted_mode_norm: mode not on the grid");
    for (int i = 0; i < n; ++i) sum0[i] += m.w[i] * m.w[i];
    if (norm.order >= 1) {
      const std::vector<double> d1 = deriv1_fd4(m.w, grid.h);
      for (int i = 0; i < n; ++i) sum1[i] += d1[i] * d1[i];
    }
    if (norm.order >= 2) {
      const std::vector<double> d2 = deriv2_fd4(m.w, grid.h);
      for (int i = 0; i < n; ++i) sum2[i] += d2[i] * d2[i];
    }
  }
  double sup = 0;
  for (int i = 0; i < n; ++i) {
    const double size = std::sqrt(sum0[i]) + std::sqrt(sum1[i]) + std::sqrt(sum2[i]);
    sup = std::max(sup, std::exp(norm.mu * (grid.s(i) - norm.s0)) * size);
  }
  return sup;
}

double mode_residual(const DelaunayProfile& profile, const SGrid& grid,
                     const ModeSolution& mode, const std::vector<double>& f) {
  if (int(mode.w.size()) != grid.n || f.size() != mode.w.size() || grid.n < 8)
    throw std::invalid_argument("mode_residual: bad sizes");
  const std::vector<double> pot = build_potential(profile, grid);
  const std::vector<double> q = mode_q(pot, mode.j);
  const std::vector<double> wss = deriv2_fd4(mode.w, grid.h);
  double sup = 0;
  for (int i = 2; i < grid.n - 2; ++i)
    sup = std::max(sup, std::abs(wss[i] - q[i] * mode.w[i] - f[i]));
  return sup;
}

double poisson_deviation(double epsilon, double mu, const BoundaryData& phi) {
  check_mu(mu);
  if (epsilon > 0.1)
    throw std::invalid_argument("poisson_deviation: epsilon must be <= 0.1");
  if (!phi.high_mode_only())
    throw std::invalid_argument("poisson_deviation: data must vanish on modes |j| <= 1");
  const double pn = phi.norm();
  if (pn == 0) return 0;
  const NeckParams params = neck_params(epsilon);
  const double period = period_S(params);
  const double s0 = period / 8.0;
  const double span = std::max(4.0 * period, 40.0);
  const DelaunayProfile profile = solve_profile(params, s0 + span);
  const SGrid grid = half_cylinder_grid(profile, s0);
  const CylSolution curved = poisson_apply(profile, grid, phi, mu);
  const CylSolution flat = flat_poisson(grid, phi);
  std::vector<ModeSolution> diff = curved.modes;
  for (auto& m : diff) {
    const std::vector<double>* fm = flat.mode(m.j);
    if (!fm) throw numerical_error("poisson_deviation: mode sets disagree");
    for (int i = 0; i < grid.n; ++i) m.w[i] -= (*fm)[i];
  }
  return weighted_mode_norm(grid, diff, {mu, s0, 2}) / pn;
}

} // namespace dgl
