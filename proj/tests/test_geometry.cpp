#include "dgl/geometry.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

using namespace dgl;

namespace {

double sup_h_dev(const ParamPatch& patch, double target, int n1, int n2) {
  double sup = 0;
  for (int i = 0; i <= n1; ++i) {
    const double u = patch.u1a + (patch.u1b - patch.u1a) * i / n1;
    for (int j = 0; j <= n2; ++j) {
      const double v = patch.u2a + (patch.u2b - patch.u2a) * j / n2;
      sup = std::max(sup, std::abs(mean_curvature(patch, u, v) - target));
    }
  }
  return sup;
}

// Rigid motion wrapper with a fixed rotation+translation.
struct MovedPatch : ParamPatch {
  const ParamPatch& base;
  double R[3][3];
  Vec3 t;

  MovedPatch(const ParamPatch& b, unsigned seed) : base(b) {
    u1a = b.u1a;
    u1b = b.u1b;
    u2a = b.u2a;
    u2b = b.u2b;
    orientation = b.orientation;
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    // rotation from a normalized quaternion
    double q[4];
    double n2 = 0;
    do {
      n2 = 0;
      for (double& c : q) {
        c = dist(rng);
        n2 += c * c;
      }
    } while (n2 < 1e-3);
    const double n = std::sqrt(n2);
    for (double& c : q) c /= n;
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    R[0][0] = 1 - 2 * (y * y + z * z);
    R[0][1] = 2 * (x * y - w * z);
    R[0][2] = 2 * (x * z + w * y);
    R[1][0] = 2 * (x * y + w * z);
    R[1][1] = 1 - 2 * (x * x + z * z);
    R[1][2] = 2 * (y * z - w * x);
    R[2][0] = 2 * (x * z - w * y);
    R[2][1] = 2 * (y * z + w * x);
    R[2][2] = 1 - 2 * (x * x + y * y);
    t = {dist(rng) * 3.0, dist(rng) * 3.0, dist(rng) * 3.0};
  }

  Vec3 rot(Vec3 p) const {
    return {R[0][0] * p.x + R[0][1] * p.y + R[0][2] * p.z,
            R[1][0] * p.x + R[1][1] * p.y + R[1][2] * p.z,
            R[2][0] * p.x + R[2][1] * p.y + R[2][2] * p.z};
  }

  Vec3 at(double u, double v) const override { return rot(base.at(u, v)) + t; }
  bool analytic() const override { return base.analytic(); }
  Vec3 d1(double u, double v) const override { return rot(base.d1(u, v)); }
  Vec3 d2(double u, double v) const override { return rot(base.d2(u, v)); }
  Vec3 d11(double u, double v) const override { return rot(base.d11(u, v)); }
  Vec3 d12(double u, double v) const override { return rot(base.d12(u, v)); }
  Vec3 d22(double u, double v) const override { return rot(base.d22(u, v)); }
};

struct ScaledPatch : ParamPatch {
  const ParamPatch& base;
  double lambda;
  ScaledPatch(const ParamPatch& b, double l) : base(b), lambda(l) {
    u1a = b.u1a;
    u1b = b.u1b;
    u2a = b.u2a;
    u2b = b.u2b;
    orientation = b.orientation;
  }
  Vec3 at(double u, double v) const override { return lambda * base.at(u, v); }
};

} // namespace

TEST_CASE("round surfaces carry unit mean curvature in the sum convention") {
  SpherePatch sphere(2.0, {0.3, -0.2, 1.0});
  sphere.u1a = 0.4;
  sphere.u1b = 2.6;
  sphere.u2a = 0.0;
  sphere.u2b = 6.0;
  CHECK(sup_h_dev(sphere, 1.0, 24, 24) <= 1e-10);

  CylinderPatch cyl(1.0);
  cyl.u1a = -2.0;
  cyl.u1b = 2.0;
  cyl.u2a = 0.0;
  cyl.u2b = 6.0;
  CHECK(sup_h_dev(cyl, 1.0, 24, 24) <= 1e-10);
}

TEST_CASE("catenoids are minimal for every dilation") {
  for (double a : {1.0, 0.25, 0.05}) {
    CatenoidPatch cat(a);
    cat.u1a = -2.0;
    cat.u1b = 2.0;
    cat.u2a = 0.0;
    cat.u2b = 6.2;
    CHECK(sup_h_dev(cat, 0.0, 24, 24) <= 1e-10);
  }
}

TEST_CASE("Delaunay patches have unit mean curvature on the acceptance grid") {
  for (double eps : {0.9, 0.5, 0.1}) {
    const NeckParams par = neck_params(eps);
    const double S = eps >= 1.0 ? 2.0 * std::acos(-1.0) : period_S(par);
    const DelaunayProfile profile = solve_profile(par, S + 0.5);
    DelaunayPatch patch(profile, -S, S);
    CHECK(sup_h_dev(patch, 1.0, 199, 63) <= 1e-6);
  }
}

TEST_CASE("cylindrical chart agrees with the isothermal chart") {
  const DelaunayProfile profile = solve_profile(neck_params(0.4), 4.0);
  const double t_hi = profile.k_at(3.0);
  DelaunayCylPatch cpatch(profile, -t_hi, t_hi);
  DelaunayPatch ipatch(profile, -3.0, 3.0);
  for (double t : {0.2, 0.9, 1.6}) {
    const double s = cpatch.s_of_t(t);
    CHECK(profile.k_at(s) == doctest::Approx(t).epsilon(1e-10));
    const Vec3 a = cpatch.at(t, 1.3);
    const Vec3 b = ipatch.at(s, 1.3);
    CHECK(norm(a - b) <= 1e-9);
    CHECK(std::abs(mean_curvature(cpatch, t, 1.3) - 1.0) <= 1e-6);
  }
}

TEST_CASE("finite-difference derivatives validate the analytic ones") {
  const DelaunayProfile profile = solve_profile(neck_params(0.5), 3.0);
  DelaunayPatch dela(profile, -2.0, 2.0);
  SpherePatch sph(2.0, {0, 0, 0});
  sph.u1a = 0.5;
  sph.u1b = 2.5;
  sph.u2a = 0.0;
  sph.u2b = 6.0;
  CatenoidPatch cat(0.7);
  cat.u1a = -1.5;
  cat.u1b = 1.5;
  cat.u2a = 0.0;
  cat.u2b = 6.2;
  const ParamPatch* patches[] = {&dela, &sph, &cat};
  for (const ParamPatch* p : patches) {
    const FdView fd(*p);
    for (double fu : {0.15, 0.5, 0.85}) {
      for (double fv : {0.2, 0.7}) {
        const double u = p->u1a + (p->u1b - p->u1a) * fu;
        const double v = p->u2a + (p->u2b - p->u2a) * fv;
        const Vec3 da = p->d1(u, v), db = fd.d1(u, v);
        const Vec3 ea = p->d2(u, v), eb = fd.d2(u, v);
        CHECK(norm(da - db) <= 1e-6 * (1.0 + norm(da)));
        CHECK(norm(ea - eb) <= 1e-6 * (1.0 + norm(ea)));
        CHECK(std::abs(mean_curvature(*p, u, v) - mean_curvature(fd, u, v)) <=
              1e-6);
      }
    }
  }
}

TEST_CASE("mean curvature is invariant under rigid motions") {
  const DelaunayProfile profile = solve_profile(neck_params(0.3), 3.0);
  DelaunayPatch base(profile, -2.0, 2.0);
  const MovedPatch moved(base, 12345u);
  for (double s : {-1.2, 0.3, 1.7}) {
    for (double th : {0.4, 2.9}) {
      CHECK(std::abs(mean_curvature(moved, s, th) - mean_curvature(base, s, th)) <=
            1e-9);
    }
  }
}

TEST_CASE("mean curvature scales inversely under dilation") {
  SpherePatch sph(2.0, {0, 0, 0});
  sph.u1a = 0.5;
  sph.u1b = 2.5;
  sph.u2a = 0.0;
  sph.u2b = 6.0;
  const ScaledPatch big(sph, 3.0);
  CHECK(std::abs(mean_curvature(big, 1.0, 1.0) - 1.0 / 3.0) <= 1e-9);

  CatenoidPatch c1(1.0), c3(3.0);
  c1.u1a = c3.u1a = -1.0;
  c1.u1b = c3.u1b = 1.0;
  c1.u2a = c3.u2a = 0.0;
  c1.u2b = c3.u2b = 6.2;
  const ScaledPatch c1x3(c1, 3.0);
  CHECK(norm(c1x3.at(0.5, 1.0) - c3.at(0.5, 1.0)) <= 1e-12);
}

TEST_CASE("orientation flip negates mean curvature") {
  SpherePatch sph(2.0, {0, 0, 0});
  sph.u1a = 0.5;
  sph.u1b = 2.5;
  sph.u2a = 0.0;
  sph.u2b = 6.0;
  const double h0 = mean_curvature(sph, 1.2, 0.8);
  sph.orientation = -sph.orientation;
  CHECK(mean_curvature(sph, 1.2, 0.8) == doctest::Approx(-h0).epsilon(1e-12));
}

TEST_CASE("normal graphs reproduce offset spheres") {
  SpherePatch sph(2.0, {0, 0, 0});
  sph.u1a = 0.6;
  sph.u1b = 2.4;
  sph.u2a = 0.2;
  sph.u2b = 6.0;
  const auto zero = normal_graph_patch(sph, [](double, double) { return 0.0; });
  CHECK(std::abs(mean_curvature(*zero, 1.3, 1.1) - 1.0) <= 1e-6);

  // offset by +0.5 along the normal: sphere of radius 2.5 or 1.5
  const auto offset = normal_graph_patch(sph, [](double, double) { return 0.5; });
  const double h = mean_curvature(*offset, 1.3, 1.1);
  const bool outward = std::abs(h - 2.0 / 2.5) <= 1e-6;
  const bool inward = std::abs(h - 2.0 / 1.5) <= 1e-6;
  CHECK((outward || inward));
}

TEST_CASE("library curvature agrees with the oracle finite-difference form") {
  const DelaunayProfile profile = solve_profile(neck_params(0.5), 3.0);
  DelaunayPatch patch(profile, -2.0, 2.0);
  oracle::Immersion X = [&](double s, double th) {
    const Vec3 p = patch.at(s, th);
    return std::array<double, 3>{p.x, p.y, p.z};
  };
  for (double s : {-1.0, 0.2, 1.4}) {
    const double h_lib = mean_curvature(patch, s, 0.9);
    const double h_orc = oracle::mean_curvature(X, s, 0.9, 1e-4);
    CHECK(std::abs(std::abs(h_orc) - std::abs(h_lib)) <= 1e-5);
  }
}

TEST_CASE("profile satisfies the second-order equation on its grid") {
  const DelaunayProfile profile = solve_profile(neck_params(0.5), 4.0);
  CHECK(gauss_equation_residual(profile) <= 1e-6);
}

TEST_CASE("mesh sampling and export are deterministic") {
  SpherePatch sph(2.0, {0, 0, 0});
  sph.u1a = 0.5;
  sph.u1b = 2.5;
  sph.u2a = 0.0;
  sph.u2b = 6.0;
  const SurfaceMesh m1 = sample_mesh(sph, 17, 9, 1);
  const SurfaceMesh m4 = sample_mesh(sph, 17, 9, 4);
  REQUIRE(m1.vertex.size() == size_t(17 * 9));
  REQUIRE(m1.normal.size() == m1.vertex.size());
  REQUIRE(m1.mean_curv.size() == m1.vertex.size());
  CHECK(!m1.quads.empty());
  for (const auto& q : m1.quads)
    for (int idx : q) {
      CHECK(idx >= 0);
      CHECK(idx < int(m1.vertex.size()));
    }
  REQUIRE(m4.vertex.size() == m1.vertex.size());
  for (size_t i = 0; i < m1.vertex.size(); ++i)
    CHECK(norm(m1.vertex[i] - m4.vertex[i]) == 0.0);

  export_mesh(m1, MeshFormat::Obj, "mesh_a.obj");
  export_mesh(m1, MeshFormat::Obj, "mesh_b.obj");
  std::ifstream fa("mesh_a.obj"), fb("mesh_b.obj");
  std::stringstream sa, sb;
  sa << fa.rdbuf();
  sb << fb.rdbuf();
  CHECK(sa.str() == sb.str());
  CHECK(sa.str().find("v ") != std::string::npos);
  export_mesh(m1, MeshFormat::Ply, "mesh_a.ply");
  std::ifstream fp("mesh_a.ply");
  std::string first;
  std::getline(fp, first);
  CHECK(first == "ply");
  std::remove("mesh_a.obj");
  std::remove("mesh_b.obj");
  std::remove("mesh_a.ply");
}
