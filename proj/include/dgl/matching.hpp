#pragma once

#include "dgl/geometry.hpp"
#include "dgl/graph.hpp"

#include <optional>
#include <vector>

namespace dgl {

// One catenoidal end of the configuration. The scaled necksize is
// weight * epsilon; the interface circle sits at one eighth of the
// corresponding Delaunay period.
struct EndConfig {
  int index = 0;
  double weight = 1.0;       // catenoid dilation of this end
  Vec3 base{0, 0, 0};        // world position of the neck center
  Vec3 axis{0, 0, 1};        // outward axis direction
  std::optional<double> cut; // inner truncation; default keeps a 2-unit collar
};

// Per-end deformation parameters: transverse translations, rotations about
// the transverse axes, axial translation, necksize change.
struct EndParams {
  double t1 = 0, t2 = 0;
  double r1 = 0, r2 = 0;
  double d = 0;
  double delta = 0;
};

struct DeformationSet {
  std::vector<EndParams> ends;

  // eps^{1/4} |t| + eps^{3/4} |r| + |d| + log(1/eps) |delta|, each group an
  // l2 norm over all ends.
  double weighted_norm(double epsilon) const;
};

// Derived per-end quantities shared by the matching routines.
struct EndGeometry {
  double eps_l = 0;      // scaled necksize weight * epsilon
  double period = 0;     // Delaunay period of the conformal coordinate
  double interface_s = 0; // period / 8, the data-exchange circle
  double cut = 0;        // inner truncation actually in force
};
EndGeometry end_geometry(const EndConfig& end, double epsilon);

// Leading-order graph of the interior surface over the deformed Delaunay
// model of one end: -(t1 cos + t2 sin)/cosh s - (r1 cos + r2 sin) eps_l
// cosh s + d + delta s. Only defined on the collar
// [interface_s - 2, interface_s].
double deformation_graph(const EndConfig& end, const DeformationSet& P, double epsilon,
                         double s, double theta, double kappa = 1.25);

// Interior solve: the truncated catenoid piece carrying prescribed
// high-mode traces, together with per-end Cauchy data in outward end
// coordinates. The data includes the deformation-graph contribution of P.
struct InteriorSolution {
  double epsilon = 0;
  double mu = 0;
  bool nonlinear = false;
  double scale = 0;                 // catenoid dilation eps_l of the solve
  SGrid grid;                       // symmetric band between the interfaces
  std::vector<ModeSolution> w;      // solved graph field, full band
  std::vector<ModeSolution> w_forcing; // operator applied to w, tracked through the solve
  std::vector<ModeSolution> correction; // w minus the trace extension part
  int iterations = 0;
  double final_update = 0;
  double h_residual = 0;            // sup |H - 1| over the solved graph
  double alias_energy = 0;
  double solution_norm = 0;         // weighted C2 norm of w
  std::vector<CauchyData> end_data; // per end, at its interface circle
};

// nonlinear = true requires the symmetric two-ended configuration (equal
// weights, opposite axes) and solves the curvature equation on the scaled
// catenoid. nonlinear = false is the flat half-cylinder model, valid for any
// number of ends: per high mode the trace decays inward, slope +|j| value.
InteriorSolution interior_solve(const std::vector<EndConfig>& config,
                                const DeformationSet& P,
                                const std::vector<BoundaryData>& phi,
                                double epsilon, double mu, bool nonlinear = true,
                                const std::vector<ModeSolution>* warm = nullptr);

// Reusable solver state: cached profiles, pinned grids, and warm-start
// fields, so repeated evaluations during matching stay cheap.
struct MatchState {
  struct EndState {
    double necksize = -1; // necksize the cached profile was solved at
    DelaunayProfile profile;
    SGrid grid;
    bool has_grid = false;
    std::vector<ModeSolution> warm;
    bool has_warm = false;
    GraphSolution last;
    bool has_last = false;
  };
  std::vector<EndState> ends;
  std::vector<ModeSolution> interior_warm;
  bool has_interior_warm = false;
  InteriorSolution interior_last;
  bool has_interior_last = false;
};

// Cauchy data of both sides of the matching problem, per end: the
// half-Delaunay graph side (solved at necksize eps_l + delta_l) and the
// interior side (including the deformation-graph terms).
struct DtnData {
  std::vector<CauchyData> delaunay;
  std::vector<CauchyData> interior;
};
DtnData dtn_maps(double epsilon, const std::vector<EndConfig>& config,
                 const DeformationSet& P, const std::vector<BoundaryData>& phi,
                 double mu, bool interior_nonlinear = true,
                 MatchState* state = nullptr);

// High-mode fixed point: adjusts the shared traces until the slopes of both
// sides agree on every mode |j| >= 2, preconditioned by the flat-model
// factor 2|j| per mode.
std::vector<BoundaryData> match_high_modes(double epsilon,
                                           const std::vector<EndConfig>& config,
                                           const DeformationSet& P, double mu,
                                           MatchState* state = nullptr,
                                           const std::vector<BoundaryData>* init = nullptr);

// Low-mode solve: damped Newton on the per-end 6x6 system (three low modes
// times value and slope) for (t1, t2, r1, r2, d, delta), using the explicit
// deformation-graph profiles as the model Jacobian.
DeformationSet match_low_modes(double epsilon, const std::vector<EndConfig>& config,
                               const std::vector<BoundaryData>& phi, double mu = 1.5,
                               double kappa = 1.25, MatchState* state = nullptr,
                               const DeformationSet* init = nullptr);

struct InterfaceMismatch {
  int j = 0;
  double value = 0;
  double slope = 0;
};

struct GluedEndReport {
  int index = 0;
  double necksize = 0; // eps_l + delta_l actually realized
  std::vector<InterfaceMismatch> mismatch;
  double sup_h_bulk = 0;   // away from a 1-unit collar of the interface
  double sup_h_collar = 0; // within the collar window
  double seam_gap = 0;     // largest pointwise gap across the interface
  double seam_kink = 0;    // largest angle between the two unit normals
};

struct GluedSurface {
  double epsilon = 0;
  double mu = 0;
  double kappa = 0;
  DeformationSet params;
  std::vector<BoundaryData> phi;
  SurfaceMesh interior_mesh;
  std::vector<SurfaceMesh> end_meshes;
  std::vector<GluedEndReport> ends;
  double interior_sup_h = 0;       // whole interior graph
  double interior_sup_h_bulk = 0;  // away from 1-unit interface collars
  double assembled_sup_h = 0;      // max of piece sups and seam estimates
  double best_fit_necksize = 0;    // nearest exact Delaunay surface
  double best_fit_shift = 0;
  double best_fit_rms = 0;
  double best_fit_max = 0;
  int sweeps = 0;
  double final_sweep_update = 0;
};

// End-to-end construction for the two-ended configuration: alternate the
// high-mode fixed point and the low-mode Newton solve to joint convergence,
// then assemble the interior and end meshes and the residual report.
GluedSurface assemble_glued(double epsilon, const std::vector<EndConfig>& config,
                            double mu = 1.5, double kappa = 1.25, int mesh_rows = 96);

} // namespace dgl
