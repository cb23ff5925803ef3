#include "dgl/geometry.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <utility>

namespace dgl {

namespace {

template <class F>
Vec3 fd1(const F& f, double u, double h) {
  return (1.0 / (12.0 * h)) *
         (f(u - 2 * h) - 8.0 * f(u - h) + 8.0 * f(u + h) - f(u + 2 * h));
}

template <class F>
Vec3 fd2(const F& f, double u, double h) {
  return (1.0 / (12.0 * h * h)) *
         (-1.0 * f(u - 2 * h) + 16.0 * f(u - h) - 30.0 * f(u) + 16.0 * f(u + h) -
          f(u + 2 * h));
}

} // namespace

Vec3 ParamPatch::d1(double u1, double u2) const {
  return fd1([&](double u) { return at(u, u2); }, u1, fd_step1());
}

Vec3 ParamPatch::d2(double u1, double u2) const {
  return fd1([&](double u) { return at(u1, u); }, u2, fd_step2());
}

Vec3 ParamPatch::d11(double u1, double u2) const {
  return fd2([&](double u) { return at(u, u2); }, u1, fd_step1());
}

Vec3 ParamPatch::d22(double u1, double u2) const {
  return fd2([&](double u) { return at(u1, u); }, u2, fd_step2());
}

Vec3 ParamPatch::d12(double u1, double u2) const {
  return fd1([&](double v) { return fd1([&](double u) { return at(u, v); }, u1, fd_step1()); },
             u2, fd_step2());
}

Vec3 patch_normal(const ParamPatch& patch, double u1, double u2) {
  Vec3 n = cross(patch.d1(u1, u2), patch.d2(u1, u2));
  double len = norm(n);
  if (!(len > 0)) throw numerical_error("degenerate immersion: vanishing normal");
  return (patch.orientation / len) * n;
}

FundamentalForms fundamental_forms(const ParamPatch& patch, double u1, double u2) {
  Vec3 xu = patch.d1(u1, u2), xv = patch.d2(u1, u2);
  FundamentalForms f;
  f.E = dot(xu, xu);
  f.F = dot(xu, xv);
  f.G = dot(xv, xv);
  double det = f.E * f.G - f.F * f.F;
  if (!(det > 0)) throw numerical_error("degenerate immersion: EG - F^2 <= 0");
  Vec3 n = (patch.orientation / std::sqrt(det)) * cross(xu, xv);
  f.L = dot(patch.d11(u1, u2), n);
  f.M = dot(patch.d12(u1, u2), n);
  f.N = dot(patch.d22(u1, u2), n);
  return f;
}

double mean_curvature(const ParamPatch& patch, double u1, double u2) {
  FundamentalForms f = fundamental_forms(patch, u1, u2);
  return (f.L * f.G - 2.0 * f.M * f.F + f.N * f.E) / (f.E * f.G - f.F * f.F);
}

double gauss_equation_residual(const DelaunayProfile& profile) {
  const double tau = profile.neck.tau;
  std::vector<double> dd = deriv2_fd4(profile.sigma, profile.step);
  double sup = 0;
  for (int i = 2; i < profile.size() - 2; ++i)
    sup = std::max(sup,
                   std::abs(dd[i] + 0.5 * tau * tau * std::sinh(2.0 * profile.sigma[i])));
  return sup;
}

// ---------------------------------------------------------------------------
// Delaunay patch, isothermal coordinates

DelaunayPatch::DelaunayPatch(const DelaunayProfile& prof, double s_lo, double s_hi)
    : profile(prof) {
  if (s_lo < prof.s_min || s_hi > prof.s_max)
    throw std::invalid_argument("patch range exceeds profile range");
  u1a = s_lo;
  u1b = s_hi;
  u2a = 0;
  u2b = 2.0 * M_PI;
}

Vec3 DelaunayPatch::at(double s, double th) const {
  double r = profile.rho_at(s);
  return {r * std::cos(th), r * std::sin(th), profile.k_at(s)};
}

Vec3 DelaunayPatch::d1(double s, double th) const {
  double r = profile.rho_at(s), sgs = profile.sigma_s_at(s);
  return {r * sgs * std::cos(th), r * sgs * std::sin(th), profile.k_s_at(s)};
}

Vec3 DelaunayPatch::d2(double s, double th) const {
  double r = profile.rho_at(s);
  return {-r * std::sin(th), r * std::cos(th), 0};
}

Vec3 DelaunayPatch::d11(double s, double th) const {
  double tau = profile.neck.tau;
  double sg = profile.sigma_at(s), sgs = profile.sigma_s_at(s);
  double r = tau * std::exp(sg);
  double sgss = -0.5 * tau * tau * std::sinh(2.0 * sg);
  double c = r * (sgss + sgs * sgs);
  double kss = tau * tau * std::exp(2.0 * sg) * sgs;
  return {c * std::cos(th), c * std::sin(th), kss};
}

Vec3 DelaunayPatch::d12(double s, double th) const {
  double r = profile.rho_at(s), sgs = profile.sigma_s_at(s);
  return {-r * sgs * std::sin(th), r * sgs * std::cos(th), 0};
}

Vec3 DelaunayPatch::d22(double s, double th) const {
  double r = profile.rho_at(s);
  return {-r * std::cos(th), -r * std::sin(th), 0};
}

// ---------------------------------------------------------------------------
// Delaunay patch, cylindrical coordinates

DelaunayCylPatch::DelaunayCylPatch(const DelaunayProfile& prof, double t_lo, double t_hi)
    : profile(prof) {
  if (t_lo < profile.k_at(profile.s_min) || t_hi > profile.k_at(profile.s_max))
    throw std::invalid_argument("axial range exceeds profile range");
  u1a = t_lo;
  u1b = t_hi;
  u2a = 0;
  u2b = 2.0 * M_PI;
}

double DelaunayCylPatch::s_of_t(double t) const {
  // k is strictly increasing; bisection then Newton polish
  double lo = profile.s_min, hi = profile.s_max;
  for (int i = 0; i < 40; ++i) {
    double mid = 0.5 * (lo + hi);
    (profile.k_at(mid) < t ? lo : hi) = mid;
  }
  double s = 0.5 * (lo + hi);
  for (int i = 0; i < 4; ++i) s -= (profile.k_at(s) - t) / profile.k_s_at(s);
  return s;
}

Vec3 DelaunayCylPatch::at(double t, double th) const {
  double r = profile.rho_at(s_of_t(t));
  return {r * std::cos(th), r * std::sin(th), t};
}

namespace {

struct CylState {
  double rho, rho_t, rho_tt;
};

CylState cyl_state(const DelaunayProfile& p, double s) {
  double tau = p.neck.tau;
  double sg = p.sigma_at(s), sgs = p.sigma_s_at(s);
  double ch = std::cosh(sg), sh = std::sinh(sg);
  double sgss = -0.5 * tau * tau * std::sinh(2.0 * sg);
  double ks = 0.5 * tau * tau * (std::exp(2.0 * sg) + 1.0);
  CylState c;
  c.rho = tau * std::exp(sg);
  c.rho_t = sgs / (tau * ch);
  c.rho_tt = (sgss * ch - sgs * sgs * sh) / (tau * ch * ch) / ks;
  return c;
}

} // namespace

Vec3 DelaunayCylPatch::d1(double t, double th) const {
  CylState c = cyl_state(profile, s_of_t(t));
  return {c.rho_t * std::cos(th), c.rho_t * std::sin(th), 1};
}

Vec3 DelaunayCylPatch::d2(double t, double th) const {
  CylState c = cyl_state(profile, s_of_t(t));
  return {-c.rho * std::sin(th), c.rho * std::cos(th), 0};
}

Vec3 DelaunayCylPatch::d11(double t, double th) const {
  CylState c = cyl_state(profile, s_of_t(t));
  return {c.rho_tt * std::cos(th), c.rho_tt * std::sin(th), 0};
}

Vec3 DelaunayCylPatch::d12(double t, double th) const {
  CylState c = cyl_state(profile, s_of_t(t));
  return {-c.rho_t * std::sin(th), c.rho_t * std::cos(th), 0};
}

Vec3 DelaunayCylPatch::d22(double t, double th) const {
  CylState c = cyl_state(profile, s_of_t(t));
  return {-c.rho * std::cos(th), -c.rho * std::sin(th), 0};
}

// ---------------------------------------------------------------------------
// Sphere, cylinder, catenoid

SpherePatch::SpherePatch(double r, Vec3 c) : radius(r), center(c) {
  u1a = 0.3;
  u1b = M_PI - 0.3;
  u2a = 0;
  u2b = 2.0 * M_PI;
  orientation = -1;  // inward normal so that H = 2/radius > 0
}

Vec3 SpherePatch::at(double phi, double th) const {
  return center + radius * Vec3{std::sin(phi) * std::cos(th),
                                std::sin(phi) * std::sin(th), std::cos(phi)};
}

Vec3 SpherePatch::d1(double phi, double th) const {
  return radius * Vec3{std::cos(phi) * std::cos(th), std::cos(phi) * std::sin(th),
                       -std::sin(phi)};
}

Vec3 SpherePatch::d2(double phi, double th) const {
  return radius * Vec3{-std::sin(phi) * std::sin(th), std::sin(phi) * std::cos(th), 0};
}

Vec3 SpherePatch::d11(double phi, double th) const {
  return radius * Vec3{-std::sin(phi) * std::cos(th), -std::sin(phi) * std::sin(th),
                       -std::cos(phi)};
}

Vec3 SpherePatch::d12(double phi, double th) const {
  return radius * Vec3{-std::cos(phi) * std::sin(th), std::cos(phi) * std::cos(th), 0};
}

Vec3 SpherePatch::d22(double phi, double th) const {
  return radius * Vec3{-std::sin(phi) * std::cos(th), -std::sin(phi) * std::sin(th), 0};
}

CylinderPatch::CylinderPatch(double r) : radius(r) {
  u1a = -2;
  u1b = 2;
  u2a = 0;
  u2b = 2.0 * M_PI;
}

Vec3 CylinderPatch::at(double t, double th) const {
  return {radius * std::cos(th), radius * std::sin(th), t};
}

Vec3 CylinderPatch::d1(double, double) const { return {0, 0, 1}; }

Vec3 CylinderPatch::d2(double, double th) const {
  return {-radius * std::sin(th), radius * std::cos(th), 0};
}

Vec3 CylinderPatch::d11(double, double) const { return {0, 0, 0}; }

Vec3 CylinderPatch::d12(double, double) const { return {0, 0, 0}; }

Vec3 CylinderPatch::d22(double, double th) const {
  return {-radius * std::cos(th), -radius * std::sin(th), 0};
}

CatenoidPatch::CatenoidPatch(double a_) : a(a_) {
  u1a = -2;
  u1b = 2;
  u2a = 0;
  u2b = 2.0 * M_PI;
}

Vec3 CatenoidPatch::at(double s, double th) const {
  return a * Vec3{std::cosh(s) * std::cos(th), std::cosh(s) * std::sin(th), s};
}

Vec3 CatenoidPatch::d1(double s, double th) const {
  return a * Vec3{std::sinh(s) * std::cos(th), std::sinh(s) * std::sin(th), 1};
}

Vec3 CatenoidPatch::d2(double s, double th) const {
  return a * Vec3{-std::cosh(s) * std::sin(th), std::cosh(s) * std::cos(th), 0};
}

Vec3 CatenoidPatch::d11(double s, double th) const {
  return a * Vec3{std::cosh(s) * std::cos(th), std::cosh(s) * std::sin(th), 0};
}

Vec3 CatenoidPatch::d12(double s, double th) const {
  return a * Vec3{-std::sinh(s) * std::sin(th), std::sinh(s) * std::cos(th), 0};
}

Vec3 CatenoidPatch::d22(double s, double th) const {
  return a * Vec3{-std::cosh(s) * std::cos(th), -std::cosh(s) * std::sin(th), 0};
}

// ---------------------------------------------------------------------------
// Normal graphs and meshes

namespace {

struct GraphPatch : ParamPatch {
  GraphPatch(const ParamPatch& base, std::function<double(double, double)> w,
             std::function<Vec3(double, double)> field)
      : base_(base), w_(std::move(w)), field_(std::move(field)) {
    u1a = base.u1a;
    u1b = base.u1b;
    u2a = base.u2a;
    u2b = base.u2b;
    orientation = base.orientation;
  }

  Vec3 at(double u1, double u2) const override {
    Vec3 dir = field_ ? field_(u1, u2) : patch_normal(base_, u1, u2);
    return base_.at(u1, u2) + w_(u1, u2) * dir;
  }

 private:
  const ParamPatch& base_;
  std::function<double(double, double)> w_;
  std::function<Vec3(double, double)> field_;
};

} // namespace

std::unique_ptr<ParamPatch> normal_graph_patch(const ParamPatch& base,
                                               std::function<double(double, double)> w,
                                               std::function<Vec3(double, double)> field) {
  return std::make_unique<GraphPatch>(base, std::move(w), std::move(field));
}

SurfaceMesh sample_mesh(const ParamPatch& patch, int res1, int res2, int threads) {
  if (res1 < 4 || res2 < 4) throw std::invalid_argument("mesh resolution must be >= 4");
  SurfaceMesh mesh;
  mesh.vertex.resize(res1 * res2);
  mesh.normal.resize(res1 * res2);
  mesh.mean_curv.resize(res1 * res2);
  const double du1 = (patch.u1b - patch.u1a) / (res1 - 1);
  const double du2 = (patch.u2b - patch.u2a) / (res2 - 1);

  parallel_for(res1, threads, [&](int i) {
    double u1 = patch.u1a + du1 * i;
    for (int jj = 0; jj < res2; ++jj) {
      double u2 = patch.u2a + du2 * jj;
      int idx = i * res2 + jj;
      mesh.vertex[idx] = patch.at(u1, u2);
      mesh.normal[idx] = patch_normal(patch, u1, u2);
      mesh.mean_curv[idx] = mean_curvature(patch, u1, u2);
    }
  });

  for (int i = 0; i + 1 < res1; ++i) {
    for (int jj = 0; jj + 1 < res2; ++jj) {
      std::array<int, 4> q = {i * res2 + jj, (i + 1) * res2 + jj,
                              (i + 1) * res2 + jj + 1, i * res2 + jj + 1};
      Vec3 a = mesh.vertex[q[0]], b = mesh.vertex[q[1]], c = mesh.vertex[q[2]],
           d = mesh.vertex[q[3]];
      double area = 0.5 * (norm(cross(b - a, c - a)) + norm(cross(c - a, d - a)));
      if (area > 0) mesh.quads.push_back(q);
    }
  }
  return mesh;
}

void export_mesh(const SurfaceMesh& mesh, MeshFormat format, const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "w");
  if (!fp) throw std::runtime_error("cannot open " + path + " for writing");

  if (format == MeshFormat::Obj) {
    for (std::size_t i = 0; i < mesh.vertex.size(); ++i) {
      const Vec3& v = mesh.vertex[i];
      std::fprintf(fp, "v %s %s %s\n", fmt9(v.x).c_str(), fmt9(v.y).c_str(),
                   fmt9(v.z).c_str());
    }
    for (const Vec3& n : mesh.normal)
      std::fprintf(fp, "vn %s %s %s\n", fmt9(n.x).c_str(), fmt9(n.y).c_str(),
                   fmt9(n.z).c_str());
    for (const auto& q : mesh.quads)
      std::fprintf(fp, "f %d//%d %d//%d %d//%d %d//%d\n", q[0] + 1, q[0] + 1, q[1] + 1,
                   q[1] + 1, q[2] + 1, q[2] + 1, q[3] + 1, q[3] + 1);
  } else {
    std::fprintf(fp,
                 "ply\nformat ascii 1.0\nelement vertex %zu\n"
                 "property double x\nproperty double y\nproperty double z\n"
                 "property double nx\nproperty double ny\nproperty double nz\n"
                 "property double quality\n"
                 "element face %zu\nproperty list uchar int vertex_indices\nend_header\n",
                 mesh.vertex.size(), mesh.quads.size());
    for (std::size_t i = 0; i < mesh.vertex.size(); ++i) {
      const Vec3& v = mesh.vertex[i];
      const Vec3& n = mesh.normal[i];
      std::fprintf(fp, "%s %s %s %s %s %s %s\n", fmt9(v.x).c_str(), fmt9(v.y).c_str(),
                   fmt9(v.z).c_str(), fmt9(n.x).c_str(), fmt9(n.y).c_str(),
                   fmt9(n.z).c_str(), fmt9(mesh.mean_curv[i]).c_str());
    }
    for (const auto& q : mesh.quads)
      std::fprintf(fp, "4 %d %d %d %d\n", q[0], q[1], q[2], q[3]);
  }
  if (std::fclose(fp) != 0) throw std::runtime_error("write failed for " + path);
}

} // namespace dgl
