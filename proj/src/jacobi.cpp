#include "dgl/jacobi.hpp"

#include "dgl/numerics.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace dgl {

namespace {

constexpr double kPi = 3.14159265358979323846;

} // namespace

double mode_angular(int j, double theta) {
  if (j == 0) return 1.0 / std::sqrt(2.0 * kPi);
  const double scale = 1.0 / std::sqrt(kPi);
  if (j > 0) return scale * std::cos(j * theta);
  return scale * std::sin(-j * theta);
}

double mode_angular_d2(int j, double theta) {
  return -double(j) * double(j) * mode_angular(j, theta);
}

ModeFunction mode_potential(const DelaunayProfile& profile, int j) {
  const double tau2 = profile.neck.tau * profile.neck.tau;
  ModeFunction q;
  q.j = j;
  q.s = profile.s;
  q.w.resize(profile.size());
  for (int i = 0; i < profile.size(); ++i)
    q.w[i] = double(j) * double(j) - tau2 * std::cosh(2.0 * profile.sigma[i]);
  return q;
}

namespace {

// d/dtau of sigma and k at fixed s, by centered differences of profiles
// solved at tau (1 +- h) on the same grid, with one Richardson pass.
struct TauDerivatives {
  std::vector<double> dsigma;
  std::vector<double> dk;
};

NeckParams params_from_tau(double tau) {
  const double eps = 1.0 - std::sqrt(std::max(0.0, 1.0 - tau * tau));
  NeckParams p = neck_params(eps);
  p.tau = tau; // keep the perturbed tau exactly; eps is consistent to rounding
  p.epsilon = eps;
  return p;
}

TauDerivatives tau_derivatives(const DelaunayProfile& profile) {
  const double tau = profile.neck.tau;
  const double h = 1e-5;
  std::array<DelaunayProfile, 4> aux = {
      solve_profile(params_from_tau(tau * (1.0 + h)), profile.s_max, profile.step),
      solve_profile(params_from_tau(tau * (1.0 - h)), profile.s_max, profile.step),
      solve_profile(params_from_tau(tau * (1.0 + 2.0 * h)), profile.s_max, profile.step),
      solve_profile(params_from_tau(tau * (1.0 - 2.0 * h)), profile.s_max, profile.step)};
  const int n = profile.size();
  for (const auto& a : aux)
    if (a.size() != n) throw numerical_error("tau-derivative grids do not line up");
  TauDerivatives d;
  d.dsigma.resize(n);
  d.dk.resize(n);
  const double d1 = 2.0 * tau * h, d2 = 4.0 * tau * h;
  for (int i = 0; i < n; ++i) {
    const double s1 = (aux[0].sigma[i] - aux[1].sigma[i]) / d1;
    const double s2 = (aux[2].sigma[i] - aux[3].sigma[i]) / d2;
    d.dsigma[i] = (4.0 * s1 - s2) / 3.0;
    const double k1 = (aux[0].k[i] - aux[1].k[i]) / d1;
    const double k2 = (aux[2].k[i] - aux[3].k[i]) / d2;
    d.dk[i] = (4.0 * k1 - k2) / 3.0;
  }
  return d;
}

} // namespace

JacobiField explicit_jacobi(const DelaunayProfile& profile, int j, int sign) {
  if (j < -1 || j > 1)
    throw std::invalid_argument("explicit_jacobi: j must be in {-1, 0, 1}");
  if (sign != 1 && sign != -1)
    throw std::invalid_argument("explicit_jacobi: sign must be +1 or -1");
  const double tau = profile.neck.tau;
  const int n = profile.size();

  JacobiField field;
  field.j = j;
  field.sign = sign;
  field.f.j = j;
  field.f.s = profile.s;
  field.f.w.resize(n);

  if (j == 0 && sign == 1) {
    field.f.w = profile.sigma_s;
    return field;
  }
  if (j != 0 && sign == 1) {
    for (int i = 0; i < n; ++i)
      field.f.w[i] = -tau * std::cosh(profile.sigma[i]);
    return field;
  }
  if (j != 0) { // sign == -1
    for (int i = 0; i < n; ++i) {
      const double ch = std::cosh(profile.sigma[i]);
      const double es = std::exp(profile.sigma[i]);
      field.f.w[i] = -tau * (profile.k[i] * ch + profile.sigma_s[i] * es);
    }
    return field;
  }

  // (0,-): needs tau-derivatives, so the spherical limit is out of range.
  if (tau * (1.0 + 2e-5) >= 1.0)
    throw std::invalid_argument("explicit_jacobi: (0,-) needs tau bounded away from 1");
  const double root = std::sqrt(1.0 - tau * tau);
  const TauDerivatives d = tau_derivatives(profile);
  for (int i = 0; i < n; ++i) {
    const double es = std::exp(profile.sigma[i]);
    const double ch = std::cosh(profile.sigma[i]);
    field.f.w[i] = (root / tau) * profile.sigma_s[i] * d.dk[i]
                 - root * es * ch * (1.0 + tau * d.dsigma[i]);
  }
  return field;
}

double jacobi_residual(const JacobiField& field, const DelaunayProfile& profile) {
  const int n = field.f.s.size();
  if (n != profile.size() || n < 7)
    throw std::invalid_argument("jacobi_residual: field grid does not match profile");
  const double tau2 = profile.neck.tau * profile.neck.tau;
  const std::vector<double> wss = deriv2_fd4(field.f.w, profile.step);
  double worst = 0;
  for (int i = 2; i < n - 2; ++i) {
    const double pot = tau2 * std::cosh(2.0 * profile.sigma[i]);
    const double r = wss[i] + (pot - double(field.j) * double(field.j)) * field.f.w[i];
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

std::vector<LimitDeviation> jacobi_limits_report(const std::vector<double>& epsilons,
                                                 int j, int sign) {
  if (epsilons.empty())
    throw std::invalid_argument("jacobi_limits_report: empty scan");
  for (size_t m = 0; m < epsilons.size(); ++m) {
    if (epsilons[m] > 0.01)
      throw std::invalid_argument("jacobi_limits_report: scan requires epsilon <= 0.01");
    if (m > 0 && epsilons[m] >= epsilons[m - 1])
      throw std::invalid_argument("jacobi_limits_report: scan must be strictly decreasing");
  }
  std::vector<LimitDeviation> out;
  for (double eps : epsilons) {
    const DelaunayProfile profile = solve_profile(neck_params(eps), 3.0);
    const JacobiField field = explicit_jacobi(profile, j, sign);
    double dev = 0;
    for (int i = 0; i < profile.size(); ++i) {
      const double s = profile.s[i];
      double limit = 0, value = field.f.w[i];
      if (j == 0 && sign == 1) {
        limit = std::tanh(s);
      } else if (j == 0 && sign == -1) {
        limit = -(1.0 - s * std::tanh(s));
      } else if (sign == 1) {
        limit = -1.0 / std::cosh(s);
      } else {
        limit = -(s / std::cosh(s) + std::sinh(s));
        value /= eps;
      }
      dev = std::max(dev, std::abs(value - limit));
    }
    out.push_back({eps, dev});
  }
  for (size_t m = 1; m < out.size(); ++m)
    if (!(out[m].deviation < out[m - 1].deviation))
      throw numerical_error("jacobi_limits_report: deviations did not decrease");
  return out;
}

double floquet_exponent(const DelaunayProfile& profile, int j, double* det_out) {
  if (j >= -1 && j <= 1)
    throw std::invalid_argument("floquet_exponent requires |j| >= 2");
  const double period = profile.period_s;
  if (profile.s_max < 0.5 * period - 1e-12)
    throw std::invalid_argument("floquet_exponent: profile shorter than half a period");
  const double tau = profile.neck.tau;
  const double tau2 = tau * tau;
  const double jj = double(j) * double(j);
  const double half = 0.5 * period;

  // Growth per unit length is about |j|, so chunk the interval to keep each
  // fundamental matrix near unit scale; renormalize the running product.
  const int chunks = std::max(1, int(std::ceil(half * std::abs(j) / 2.0)));
  const double chunk_len = half / chunks;
  const double h_target = std::min({0.01, period / 4000.0, 0.5 / jj});
  const int steps = std::max(4, int(std::ceil(chunk_len / h_target)));
  const double h = chunk_len / steps;

  auto rhs = [&](const std::array<double, 6>& y, std::array<double, 6>& dy) {
    const double q = jj - tau2 * std::cosh(2.0 * y[0]);
    dy[0] = y[1];
    dy[1] = -(tau2 / 2.0) * std::sinh(2.0 * y[0]);
    dy[2] = y[3];
    dy[3] = q * y[2];
    dy[4] = y[5];
    dy[5] = q * y[4];
  };

  std::array<double, 6> y = {std::log(profile.neck.epsilon / tau), 0, 1, 0, 0, 1};
  double t00 = 1, t01 = 0, t10 = 0, t11 = 1; // running monodromy, rescaled
  double logc = 0;
  double det = 1;
  for (int c = 0; c < chunks; ++c) {
    y[2] = 1; y[3] = 0; y[4] = 0; y[5] = 1;
    for (int m = 0; m < steps; ++m) irk_gl3_step(rhs, y, h);
    const double m00 = y[2], m10 = y[3], m01 = y[4], m11 = y[5];
    det *= m00 * m11 - m10 * m01;
    const double n00 = m00 * t00 + m01 * t10;
    const double n01 = m00 * t01 + m01 * t11;
    const double n10 = m10 * t00 + m11 * t10;
    const double n11 = m10 * t01 + m11 * t11;
    t00 = n00; t01 = n01; t10 = n10; t11 = n11;
    const double big = std::max({std::abs(t00), std::abs(t01), std::abs(t10), std::abs(t11)});
    if (big > 1e6) {
      t00 /= big; t01 /= big; t10 /= big; t11 /= big;
      logc += std::log(big);
    }
  }
  if (det_out) *det_out = det;

  const double tr_hat = t00 + t11;
  if (!(tr_hat > 0))
    throw numerical_error("floquet_exponent: monodromy trace not positive");
  const double log_x = logc + std::log(0.5 * tr_hat); // log of |trace|/2
  if (!(log_x > 0))
    throw numerical_error("floquet_exponent: elliptic regime, |trace| <= 2");
  double gamma;
  if (log_x > 20.0)
    gamma = (log_x + std::log(2.0)) / half; // acosh(x) ~ log(2x) for large x
  else
    gamma = std::acosh(std::exp(log_x)) / half;
  return gamma;
}

} // namespace dgl
