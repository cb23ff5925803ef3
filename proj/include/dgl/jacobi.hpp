#pragma once

#include "dgl/delaunay.hpp"

#include <vector>

namespace dgl {

// Angular eigenfunctions, L2-orthonormal on the circle: cos(j th)/sqrt(pi) for
// j > 0, sin(|j| th)/sqrt(pi) for j < 0, 1/sqrt(2 pi) for j = 0.
double mode_angular(int j, double theta);
double mode_angular_d2(int j, double theta);

struct ModeFunction {
  int j = 0;
  std::vector<double> s;
  std::vector<double> w;
};

// Hill-operator potential Q_j = j^2 - tau^2 cosh(2 sigma) on the profile grid;
// the mode equation reads w'' = Q_j w.
ModeFunction mode_potential(const DelaunayProfile& profile, int j);

struct JacobiField {
  int j = 0;
  int sign = +1;  // +: first solution family, -: second
  ModeFunction f;
};

// Closed-form solutions of w'' + (tau^2 cosh(2 sigma) - j^2) w = 0 for
// j in {-1, 0, 1}:
//   (0,+)  sigma_s
//   (0,-)  (sqrt(1-tau^2)/tau) sigma_s dk/dtau
//            - sqrt(1-tau^2) e^sigma cosh(sigma) (1 + tau dsigma/dtau)
//   (1,+)  -tau cosh(sigma)            (same for j = -1)
//   (1,-)  -tau (k cosh(sigma) + sigma_s e^sigma)
// The tau-derivatives are centered differences of profiles at tau(1 +- h),
// h = 1e-5, with one Richardson refinement.
JacobiField explicit_jacobi(const DelaunayProfile& profile, int j, int sign);

// Sup of |w'' + (tau^2 cosh(2 sigma) - j^2) w| over the grid interior, with
// w'' from 4th-order finite differences.
double jacobi_residual(const JacobiField& field, const DelaunayProfile& profile);

struct LimitDeviation {
  double epsilon = 0;
  double deviation = 0;  // sup over |s| <= 3 against the small-necksize limit
};

// Small-necksize limits on |s| <= 3: tanh s; -(1 - s tanh s); -1/cosh s;
// -(s/cosh s + sinh s) after dividing the (1,-) field by eps. Requires every
// epsilon <= 0.01 and the scan ordered decreasing; throws numerical_error if
// the deviations fail to decrease along it.
std::vector<LimitDeviation> jacobi_limits_report(const std::vector<double>& epsilons,
                                                 int j, int sign);

// Growth rate gamma_j = acosh(|tr|/2) / P of the mode equation over one
// potential period P = period_s / 2, from the monodromy matrix. Requires
// |j| >= 2. det_out, when given, receives the monodromy determinant.
double floquet_exponent(const DelaunayProfile& profile, int j,
                        double* det_out = nullptr);

} // namespace dgl
