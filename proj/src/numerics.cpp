#include "dgl/numerics.hpp"

#include <cstdio>
#include <cstdlib>
#include <thread>

namespace dgl {

std::string fmt9(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

double round9(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return std::strtod(buf, nullptr);
}

namespace {

// Kronrod 15 abscissae on [0,1]-half of [-1,1]; even positions are the
// embedded Gauss 7 nodes.
const double kron_x[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.0};
const double kron_w[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
const double gauss_w[4] = {0.129484966168870, 0.279705391489277, 0.381830050505119,
                           0.417959183673469};

struct GkResult {
  double k15;
  double err;
};

GkResult gk15(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b), hw = 0.5 * (b - a);
  double k15 = 0, g7 = 0;
  for (int i = 0; i < 8; ++i) {
    double fv;
    if (i == 7) {
      fv = f(c);
      k15 += kron_w[i] * fv;
      g7 += gauss_w[3] * fv;
    } else {
      double f1 = f(c - hw * kron_x[i]);
      double f2 = f(c + hw * kron_x[i]);
      k15 += kron_w[i] * (f1 + f2);
      if (i % 2 == 1) g7 += gauss_w[i / 2] * (f1 + f2);
    }
  }
  k15 *= hw;
  g7 *= hw;
  double err = std::pow(200.0 * std::abs(k15 - g7), 1.5);
  return {k15, err};
}

double adapt(const std::function<double(double)>& f, double a, double b, double tol,
             int depth) {
  GkResult r = gk15(f, a, b);
  if (r.err <= tol || r.err <= 1e-16 * std::abs(r.k15)) return r.k15;
  if (depth > 60) throw numerical_error("quadrature failed to converge");
  double c = 0.5 * (a + b);
  return adapt(f, a, c, 0.5 * tol, depth + 1) + adapt(f, c, b, 0.5 * tol, depth + 1);
}

} // namespace

double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double tol) {
  if (a == b) return 0;
  return adapt(f, a, b, tol, 0);
}

std::vector<double> solve_tridiag(std::vector<double> lower, std::vector<double> diag,
                                  std::vector<double> upper, std::vector<double> rhs) {
  const std::size_t n = diag.size();
  for (std::size_t i = 1; i < n; ++i) {
    double m = lower[i] / diag[i - 1];
    diag[i] -= m * upper[i - 1];
    rhs[i] -= m * rhs[i - 1];
  }
  std::vector<double> w(n);
  w[n - 1] = rhs[n - 1] / diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) w[i] = (rhs[i] - upper[i] * w[i + 1]) / diag[i];
  return w;
}

std::vector<double> deriv1_fd4(const std::vector<double>& w, double h) {
  const int n = static_cast<int>(w.size());
  std::vector<double> d(n);
  auto fwd = [&](int i, int dir) {
    return dir *
           (-25.0 * w[i] + 48.0 * w[i + dir] - 36.0 * w[i + 2 * dir] +
            16.0 * w[i + 3 * dir] - 3.0 * w[i + 4 * dir]) /
           (12.0 * h);
  };
  for (int i = 0; i < n; ++i) {
    if (i >= 2 && i < n - 2)
      d[i] = (w[i - 2] - 8.0 * w[i - 1] + 8.0 * w[i + 1] - w[i + 2]) / (12.0 * h);
    else if (i < 2)
      d[i] = fwd(i, +1);
    else
      d[i] = fwd(i, -1);
  }
  return d;
}

std::vector<double> deriv2_fd4(const std::vector<double>& w, double h) {
  const int n = static_cast<int>(w.size());
  std::vector<double> d(n);
  const double h2 = h * h;
  auto fwd = [&](int i, int dir) {
    return (45.0 * w[i] - 154.0 * w[i + dir] + 214.0 * w[i + 2 * dir] -
            156.0 * w[i + 3 * dir] + 61.0 * w[i + 4 * dir] - 10.0 * w[i + 5 * dir]) /
           (12.0 * h2);
  };
  for (int i = 0; i < n; ++i) {
    if (i >= 2 && i < n - 2)
      d[i] = (-w[i - 2] + 16.0 * w[i - 1] - 30.0 * w[i] + 16.0 * w[i + 1] - w[i + 2]) /
             (12.0 * h2);
    else if (i < 2)
      d[i] = fwd(i, +1);
    else
      d[i] = fwd(i, -1);
  }
  return d;
}

double hermite5(double f0, double d0, double dd0, double f1, double d1, double dd1,
                double h, double x) {
  double t = x / h;
  double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
  double h00 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
  double h10 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
  double h20 = 0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5;
  double h01 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
  double h11 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
  double h21 = 0.5 * t3 - t4 + 0.5 * t5;
  return f0 * h00 + h * d0 * h10 + h * h * dd0 * h20 + f1 * h01 + h * d1 * h11 +
         h * h * dd1 * h21;
}

double hermite5_deriv(double f0, double d0, double dd0, double f1, double d1, double dd1,
                      double h, double x) {
  double t = x / h;
  double t2 = t * t, t3 = t2 * t, t4 = t3 * t;
  double g00 = (-30.0 * t2 + 60.0 * t3 - 30.0 * t4) / h;
  double g10 = 1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4;
  double g20 = (t - 4.5 * t2 + 6.0 * t3 - 2.5 * t4) * h;
  double g01 = (30.0 * t2 - 60.0 * t3 + 30.0 * t4) / h;
  double g11 = -12.0 * t2 + 28.0 * t3 - 15.0 * t4;
  double g21 = (1.5 * t2 - 4.0 * t3 + 2.5 * t4) * h;
  return f0 * g00 + d0 * g10 + dd0 * g20 + f1 * g01 + d1 * g11 + dd1 * g21;
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  threads = std::min(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (int i = t; i < n; i += threads) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

} // namespace dgl
