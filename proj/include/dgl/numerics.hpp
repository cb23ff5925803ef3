#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dgl {

// Thrown when an iteration or quadrature fails to reach its tolerance;
// the CLI maps it to exit code 3.
class numerical_error : public std::runtime_error {
 public:
  explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

struct Vec3 {
  double x = 0, y = 0, z = 0;
};

inline Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator*(double c, Vec3 a) { return {c * a.x, c * a.y, c * a.z}; }
inline Vec3 operator*(Vec3 a, double c) { return c * a; }
inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(Vec3 a, Vec3 b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }
inline Vec3 normalized(Vec3 a) {
  double n = norm(a);
  return {a.x / n, a.y / n, a.z / n};
}

// Nine-significant-digit float formatting shared by every serializer.
std::string fmt9(double x);
// Round-trips through fmt9 so JSON numbers and CSV cells agree byte for byte.
double round9(double x);

// Uniform grid s_i = s0 + i*h, i = 0..n-1.
struct SGrid {
  double s0 = 0;
  double h = 0;
  int n = 0;
  double s(int i) const { return s0 + h * i; }
  double s_end() const { return s0 + h * (n - 1); }
};

// One fixed step of the 3-stage Gauss-Legendre implicit Runge-Kutta method
// (order 6, symmetric). Stages solved by fixed-point iteration; requires
// h * (Lipschitz constant) < 1.
template <std::size_t N, class F>
void irk_gl3_step(F&& f, std::array<double, N>& y, double h) {
  static const double r15 = std::sqrt(15.0);
  static const double A[3][3] = {
      {5.0 / 36.0, 2.0 / 9.0 - r15 / 15.0, 5.0 / 36.0 - r15 / 30.0},
      {5.0 / 36.0 + r15 / 24.0, 2.0 / 9.0, 5.0 / 36.0 - r15 / 24.0},
      {5.0 / 36.0 + r15 / 30.0, 2.0 / 9.0 + r15 / 15.0, 5.0 / 36.0}};
  static const double B[3] = {5.0 / 18.0, 4.0 / 9.0, 5.0 / 18.0};

  std::array<double, N> k[3], yk, knew;
  f(y, k[0]);
  k[1] = k[0];
  k[2] = k[0];
  for (int iter = 0; iter < 100; ++iter) {
    double delta = 0, scale = 0;
    for (int i = 0; i < 3; ++i) {
      for (std::size_t m = 0; m < N; ++m)
        yk[m] = y[m] + h * (A[i][0] * k[0][m] + A[i][1] * k[1][m] + A[i][2] * k[2][m]);
      f(yk, knew);
      for (std::size_t m = 0; m < N; ++m) {
        delta = std::max(delta, std::abs(knew[m] - k[i][m]));
        scale = std::max(scale, std::abs(knew[m]));
        k[i][m] = knew[m];
      }
    }
    if (delta <= 1e-15 * (1.0 + scale)) break;
  }
  for (std::size_t m = 0; m < N; ++m)
    y[m] += h * (B[0] * k[0][m] + B[1] * k[1][m] + B[2] * k[2][m]);
}

// Adaptive Gauss-Kronrod (7,15) quadrature. Throws numerical_error if the
// local error cannot be brought under tol before the depth cap.
double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double tol);

// Thomas algorithm for a tridiagonal system; diag/lower/upper/rhs are
// overwritten. lower[0] and upper[n-1] are unused.
std::vector<double> solve_tridiag(std::vector<double> lower, std::vector<double> diag,
                                  std::vector<double> upper, std::vector<double> rhs);

// Fourth-order first and second derivatives on a uniform grid, one-sided
// stencils at the edges. Require n >= 6.
std::vector<double> deriv1_fd4(const std::vector<double>& w, double h);
std::vector<double> deriv2_fd4(const std::vector<double>& w, double h);

// Quintic Hermite evaluation on [0, h] from endpoint values and first two
// derivatives; x is the offset from the left node.
double hermite5(double f0, double d0, double dd0, double f1, double d1, double dd1,
                double h, double x);
double hermite5_deriv(double f0, double d0, double dd0, double f1, double d1, double dd1,
                      double h, double x);

// C^2 step: 0 for x <= 0, 1 for x >= 1.
inline double smoothstep_quintic(double x) {
  if (x <= 0) return 0;
  if (x >= 1) return 1;
  return x * x * x * (10.0 + x * (-15.0 + 6.0 * x));
}

// Deterministic parallel map: fn(i) for i in [0, n). Results must be written
// to per-index slots by the caller; chunk order never affects output.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

} // namespace dgl
