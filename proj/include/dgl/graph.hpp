#pragma once

#include "dgl/bvp.hpp"
#include "dgl/delaunay.hpp"
#include "dgl/numerics.hpp"

#include <array>
#include <vector>

namespace dgl {

// Surface-of-revolution data at fixed s for an immersion in conformal
// coordinates: x = (rho cos th, rho sin th, z), unit normal
// nu = (-A cos th, -A sin th, B).
struct FrameRow {
  double rho = 0, rho_s = 0, rho_ss = 0;
  double z = 0, z_s = 0, z_ss = 0;
  double A = 0, A_s = 0, A_ss = 0;
  double B = 0, B_s = 0, B_ss = 0;
  double lambda2 = 0;   // conformal factor squared
  double potential = 0; // zeroth-order coefficient of the stability operator
  double base_h = 0;    // mean curvature of the undeformed surface
};

class BaseFrame {
 public:
  virtual ~BaseFrame() = default;
  virtual FrameRow row(double s) const = 0;
};

class DelaunayFrame : public BaseFrame {
 public:
  explicit DelaunayFrame(const DelaunayProfile& profile) : profile_(profile) {}
  FrameRow row(double s) const override;

 private:
  const DelaunayProfile& profile_;
};

// x = scale (cosh s cos th, cosh s sin th, s); minimal, base_h = 0.
class CatenoidFrame : public BaseFrame {
 public:
  explicit CatenoidFrame(double scale) : scale_(scale) {}
  FrameRow row(double s) const override;

 private:
  double scale_;
};

// Full first/second-derivative frame of the revolution immersion at (s, th).
struct FrameData {
  Vec3 x, xs, xt, xss, xst, xtt;
  Vec3 nu, nus, nut, nuss, nust, nutt;
};
FrameData frame_at(const FrameRow& row, double cos_th, double sin_th);

// Mean curvature (sum of principal curvatures) of x + w nu at one point,
// given the graph jet (w, w_s, w_t, w_ss, w_st, w_tt). Throws on a
// degenerate induced metric.
double graph_mean_curvature(const FrameData& frame, const std::array<double, 6>& jet);

// Number of angular samples used by all nonlinear curvature evaluations.
inline constexpr int kThetaSamples = 64;

std::vector<ModeSolution> zero_band(const SGrid& grid);

// Mode-wise stability operator w'' - j^2 w + potential * w, evaluated as the
// exact discrete forcing the three-point marching schemes associate with w:
// the interior rows invert the scheme's neighbour coupling, so feeding the
// result back through the solvers reproduces w without leaving a grid-scale
// boundary layer. The first and last rows fall back to one-sided 4th-order
// differences.
std::vector<ModeSolution> apply_mode_operator(const BaseFrame& frame, const SGrid& grid,
                                              const std::vector<ModeSolution>& w);

// lambda^2 (H(x + w nu) - h_target) evaluated on the s x theta grid and
// projected back onto the angular band. Coefficients beyond the band are
// discarded; their energy is accumulated in alias_energy. Rows where every
// mode is below 1e-12 in absolute value can be skipped (exact for a CMC base
// with h_target equal to its mean curvature). When the exact discrete
// forcing f with w'' = (j^2 - potential) w + f is known (the solvers hand it
// out alongside the field), passing it replaces the finite-difference second
// derivatives with operator-consistent values, which avoids the one-sided
// edge stencils entirely.
struct CurvatureProjection {
  std::vector<ModeSolution> modes;
  double sup_h_dev = 0;     // sup |H - h_target| over rows with s <= sup_limit
  double alias_energy = 0;
};
CurvatureProjection project_scaled_curvature(const BaseFrame& frame, const SGrid& grid,
                                             const std::vector<ModeSolution>& w,
                                             double h_target, double sup_limit,
                                             bool skip_negligible_rows,
                                             const std::vector<ModeSolution>* forcing = nullptr);

// Defect of the curvature equation for a graph over the Delaunay surface:
// (stability operator applied to w) - lambda^2 (H(x_w) - 1). Vanishes
// quadratically at w = 0.
CylSolution nonlinear_defect(const DelaunayProfile& profile, const CylSolution& w);

// sup |H(x + w nu) - h_target| over grid rows with s_lo <= s <= s_hi.
// forcing, when given, supplies operator-consistent second derivatives as in
// project_scaled_curvature.
double sup_h_window(const BaseFrame& frame, const SGrid& grid,
                    const std::vector<ModeSolution>& w, double h_target,
                    double s_lo, double s_hi,
                    const std::vector<ModeSolution>* forcing = nullptr);

// Pointwise surface sample of the graph x + w nu.
struct GraphPoint {
  Vec3 position;
  Vec3 normal;
  double mean_h = 0;
};
GraphPoint graph_point(const FrameRow& row, double cos_th, double sin_th,
                       const std::array<double, 6>& jet);

struct GraphSolution {
  double epsilon = 0;
  double s0 = 0;
  SGrid grid;
  std::vector<ModeSolution> w;          // full band, ascending j
  std::vector<ModeSolution> w_forcing;  // operator applied to w, tracked through the solve
  std::vector<ModeSolution> correction; // w minus the linear extension part
  BoundaryData phi;                     // prescribed high-mode trace at s0
  int iterations = 0;          // correction passes applied
  double final_update = 0;     // curvature defect sup after the last pass
  std::vector<double> updates; // defect sup per pass, starting at the seed
  double h_residual = 0;       // sup |H - 1| for s <= s0 + 2 periods
  double alias_energy = 0;
};

// Nonlinear solve for a mean-curvature-1 graph over the half Delaunay
// surface [s0, s_far) with prescribed high-mode trace phi at s0. Data must
// satisfy |phi| <= 0.3 eps^{3/4}. warm_start, when given, seeds the
// correction iterate (same grid required). grid_override, when given, must
// start at s0 and lie inside the profile's range; it pins the discretization
// independently of the profile's own period.
GraphSolution solve_graph(const DelaunayProfile& profile, double s0,
                          const BoundaryData& phi, double mu,
                          const std::vector<ModeSolution>* warm_start = nullptr,
                          const SGrid* grid_override = nullptr);

struct CauchyData {
  std::array<double, 2 * kMaxMode + 1> value{};
  std::array<double, 2 * kMaxMode + 1> slope{};

  double v(int j) const { return value[j + kMaxMode]; }
  double sl(int j) const { return slope[j + kMaxMode]; }
  void set(int j, double val, double slo);
  double low_norm() const;  // l2 over |j| <= 1 of values and slopes
  double high_norm() const; // l2 over |j| >= 2
};

// Per-mode trace value and slope of the solution at s0 (slope one-sided,
// 4th order).
CauchyData cauchy_data(const GraphSolution& solution);

} // namespace dgl
