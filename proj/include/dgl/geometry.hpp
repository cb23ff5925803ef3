#pragma once

#include "dgl/delaunay.hpp"
#include "dgl/numerics.hpp"

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace dgl {

struct FundamentalForms {
  double E = 0, F = 0, G = 0;  // first form
  double L = 0, M = 0, N = 0;  // second form w.r.t. the oriented unit normal
};

// Immersed parametrized patch. Derivatives default to 4th-order central
// differences of at() with step 1e-4 * (parameter extent); built-in patches
// override them with closed forms.
struct ParamPatch {
  double u1a = 0, u1b = 1, u2a = 0, u2b = 1;
  int orientation = 1;  // -1 flips the normal (and the sign of H)

  virtual Vec3 at(double u1, double u2) const = 0;
  virtual bool analytic() const { return false; }
  virtual Vec3 d1(double u1, double u2) const;
  virtual Vec3 d2(double u1, double u2) const;
  virtual Vec3 d11(double u1, double u2) const;
  virtual Vec3 d12(double u1, double u2) const;
  virtual Vec3 d22(double u1, double u2) const;
  virtual ~ParamPatch() = default;

  double fd_step1() const { return 1e-4 * (u1b - u1a); }
  double fd_step2() const { return 1e-4 * (u2b - u2a); }
};

// Forces the finite-difference derivative path of an existing patch; used to
// compare graph patches against their base through identical arithmetic.
struct FdView : ParamPatch {
  explicit FdView(const ParamPatch& base) : base_(base) {
    u1a = base.u1a;
    u1b = base.u1b;
    u2a = base.u2a;
    u2b = base.u2b;
    orientation = base.orientation;
  }
  Vec3 at(double u1, double u2) const override { return base_.at(u1, u2); }

 private:
  const ParamPatch& base_;
};

Vec3 patch_normal(const ParamPatch& patch, double u1, double u2);
FundamentalForms fundamental_forms(const ParamPatch& patch, double u1, double u2);

// H = (LG - 2MF + NE)/(EG - F^2); sum-of-principal-curvatures convention, so
// the unit sphere of radius 2 and the unit cylinder both give H = 1.
double mean_curvature(const ParamPatch& patch, double u1, double u2);

// Sup over the grid interior of |sigma_ss + (tau^2/2) sinh(2 sigma)| with
// sigma_ss from finite differences of the stored samples.
double gauss_equation_residual(const DelaunayProfile& profile);

// Delaunay surface in isothermal coordinates (s, theta):
//   x = (tau e^sigma cos, tau e^sigma sin, k),  g = tau^2 e^{2 sigma}(ds^2+dth^2),
// normal (-tau cosh sigma cos, -tau cosh sigma sin, sigma_s), H = +1.
struct DelaunayPatch : ParamPatch {
  DelaunayPatch(const DelaunayProfile& profile, double s_lo, double s_hi);
  Vec3 at(double s, double th) const override;
  bool analytic() const override { return true; }
  Vec3 d1(double s, double th) const override;
  Vec3 d2(double s, double th) const override;
  Vec3 d11(double s, double th) const override;
  Vec3 d12(double s, double th) const override;
  Vec3 d22(double s, double th) const override;

  const DelaunayProfile& profile;
};

// The same surface in cylindrical coordinates (t, theta): x = (rho cos, rho sin, t),
// g = (1 + rho_t^2) dt^2 + rho^2 dth^2. Axial evaluation inverts t = k(s).
struct DelaunayCylPatch : ParamPatch {
  DelaunayCylPatch(const DelaunayProfile& profile, double t_lo, double t_hi);
  Vec3 at(double t, double th) const override;
  bool analytic() const override { return true; }
  Vec3 d1(double t, double th) const override;
  Vec3 d2(double t, double th) const override;
  Vec3 d11(double t, double th) const override;
  Vec3 d12(double t, double th) const override;
  Vec3 d22(double t, double th) const override;

  double s_of_t(double t) const;

  const DelaunayProfile& profile;
};

struct SpherePatch : ParamPatch {
  SpherePatch(double radius, Vec3 center);
  Vec3 at(double phi, double th) const override;
  bool analytic() const override { return true; }
  Vec3 d1(double phi, double th) const override;
  Vec3 d2(double phi, double th) const override;
  Vec3 d11(double phi, double th) const override;
  Vec3 d12(double phi, double th) const override;
  Vec3 d22(double phi, double th) const override;

  double radius;
  Vec3 center;
};

struct CylinderPatch : ParamPatch {
  explicit CylinderPatch(double radius);
  Vec3 at(double t, double th) const override;
  bool analytic() const override { return true; }
  Vec3 d1(double t, double th) const override;
  Vec3 d2(double t, double th) const override;
  Vec3 d11(double t, double th) const override;
  Vec3 d12(double t, double th) const override;
  Vec3 d22(double t, double th) const override;

  double radius;
};

// x = a (cosh s cos, cosh s sin, s); minimal (H = 0) for every dilation a.
struct CatenoidPatch : ParamPatch {
  explicit CatenoidPatch(double a);
  Vec3 at(double s, double th) const override;
  bool analytic() const override { return true; }
  Vec3 d1(double s, double th) const override;
  Vec3 d2(double s, double th) const override;
  Vec3 d11(double s, double th) const override;
  Vec3 d12(double s, double th) const override;
  Vec3 d22(double s, double th) const override;

  double a;
};

// Normal graph u -> base(u) + w(u) * field(u). Derivatives always go through
// finite differences of the composed map; field defaults to the base's
// oriented unit normal.
std::unique_ptr<ParamPatch> normal_graph_patch(
    const ParamPatch& base, std::function<double(double, double)> w,
    std::function<Vec3(double, double)> field = {});

struct SurfaceMesh {
  std::vector<Vec3> vertex;
  std::vector<Vec3> normal;
  std::vector<double> mean_curv;
  std::vector<std::array<int, 4>> quads;
};

// res1 x res2 vertices on the parameter rectangle (endpoints included).
SurfaceMesh sample_mesh(const ParamPatch& patch, int res1, int res2, int threads = 1);

enum class MeshFormat { Obj, Ply };

void export_mesh(const SurfaceMesh& mesh, MeshFormat format, const std::string& path);

} // namespace dgl
