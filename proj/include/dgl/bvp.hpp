#pragma once

#include "dgl/delaunay.hpp"
#include "dgl/numerics.hpp"

#include <array>
#include <vector>

namespace dgl {

inline constexpr int kMaxMode = 16;

// Trace data on the circle, as coefficients against the orthonormal angular
// basis, |j| <= kMaxMode. norm() is the l2 norm of the coefficients, which
// equals the L2 norm of the function on the circle.
struct BoundaryData {
  std::array<double, 2 * kMaxMode + 1> coeff{};

  double at(int j) const { return coeff[j + kMaxMode]; }
  void set(int j, double v);
  double norm() const;
  bool high_mode_only() const; // coefficients for |j| <= 1 all vanish
  double evaluate(double theta) const;
};

// Discrete weighted C^k norm: sup over the grid of e^{mu (s - s0)} times the
// sum of the per-node l2-over-modes sizes of w and its first `order`
// s-derivatives (4th-order finite differences).
struct WeightedNorm {
  double mu = 1.5;
  double s0 = 0;
  int order = 2;
};

struct ModeSolution {
  int j = 0;
  std::vector<double> w;
};

// Mode-resolved field on a half-cylinder grid starting at s0 = grid.s(0).
struct CylSolution {
  SGrid grid;
  std::vector<ModeSolution> modes;   // ascending j
  double bound_constant = 0;         // recorded norm ratio, op-specific

  const std::vector<double>* mode(int j) const;
  double value(int node, double theta) const;
};

// Grid from s0 out to s0 + span with step min(0.01, period/4000); span
// defaults to max(4 * period, 40). The far cut is where decay conditions
// are imposed; the default makes truncation effects negligible.
SGrid half_cylinder_grid(const DelaunayProfile& profile, double s0, double span = 0);

// Mode-wise linear solve of w'' = Q_j w + f_j on the grid.
//   |j| >= 2 : w(s0) = 0, far closure w' + gamma_j w = 0 with the computed
//              growth rate gamma_j.
//   |j| <= 1 : particular solution with zero value and slope at the far end,
//              marched backward; nothing is imposed at s0.
// bound_constant = weighted solution norm / weighted forcing norm.
CylSolution green_apply(const DelaunayProfile& profile, const SGrid& grid,
                        const std::vector<ModeSolution>& forcing, double mu);

// Homogeneous extension of high-mode Dirichlet data: w(s0) = phi_j,
// far closure as above. Requires phi.high_mode_only().
// bound_constant = weighted solution norm * eps^{mu/4} / phi.norm().
CylSolution poisson_apply(const DelaunayProfile& profile, const SGrid& grid,
                          const BoundaryData& phi, double mu);

// Flat-cylinder reference extension w_j(s) = phi_j e^{-|j|(s - s0)}.
CylSolution flat_poisson(const SGrid& grid, const BoundaryData& phi);

double weighted_mode_norm(const SGrid& grid, const std::vector<ModeSolution>& modes,
                          const WeightedNorm& norm);

// Sup over the grid interior of |w'' - Q_j w - f| with w'' by 4th-order
// finite differences.
double mode_residual(const DelaunayProfile& profile, const SGrid& grid,
                     const ModeSolution& mode, const std::vector<double>& f);

// Weighted C^2 distance between the Delaunay half-cylinder extension and the
// flat one for the same data, divided by the data norm. Boundary point
// s0 = period_S / 8.
double poisson_deviation(double epsilon, double mu, const BoundaryData& phi);

// Low-level single-mode solvers, exposed for reuse and tests. All solve
// w'' = q w + f on a uniform grid of step h with q.size() == f.size() nodes.
std::vector<double> solve_mode_bvp(const std::vector<double>& q,
                                   const std::vector<double>& f, double h,
                                   double dirichlet, double robin_gamma);
std::vector<double> solve_mode_dirichlet(const std::vector<double>& q,
                                         const std::vector<double>& f, double h,
                                         double left, double right);
std::vector<double> solve_mode_backward(const std::vector<double>& q,
                                        const std::vector<double>& f, double h);
std::vector<double> solve_mode_cauchy(const std::vector<double>& q,
                                      const std::vector<double>& f, double h, int i0);

} // namespace dgl
