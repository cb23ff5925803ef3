#include "dgl/matching.hpp"

#include "dgl/jacobi.hpp"
#include "dgl/log.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>

namespace dgl {

namespace {

constexpr double kPi = 3.14159265358979323846;

double cached_period(double eps) {
  static std::mutex mtx;
  static std::map<long long, double> cache;
  long long key = 0;
  std::memcpy(&key, &eps, sizeof key);
  {
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  const double val = period_S(neck_params(eps));
  std::lock_guard<std::mutex> lock(mtx);
  cache.emplace(key, val);
  return val;
}

void check_mu_range(double mu) {
  if (!(mu > 1.0) || !(mu < 2.0))
    throw std::invalid_argument("matching: weight exponent must lie in (1, 2)");
}

// Trace coefficients transform between interior coordinates and the outward
// coordinates of the far end through (s, theta) -> (-s, -theta): odd angular
// modes flip sign, slopes flip direction.
double mode_parity(int j) { return j < 0 ? -1.0 : 1.0; }

// Cauchy contribution of the deformation parameters at the interface,
// expressed in the orthonormal angular basis (factor sqrt(pi) for the cos/sin
// modes, sqrt(2 pi) for the constant mode).
void add_deformation_blocks(CauchyData& data, const EndParams& p, double eps_l,
                            double sbar) {
  const double ch = std::cosh(sbar);
  const double sh = std::sinh(sbar);
  const double rp = std::sqrt(kPi);
  const double r2p = std::sqrt(2.0 * kPi);
  data.set(1, data.v(1) + rp * (-p.t1 / ch - p.r1 * eps_l * ch),
           data.sl(1) + rp * (p.t1 * sh / (ch * ch) - p.r1 * eps_l * sh));
  data.set(-1, data.v(-1) + rp * (-p.t2 / ch - p.r2 * eps_l * ch),
           data.sl(-1) + rp * (p.t2 * sh / (ch * ch) - p.r2 * eps_l * sh));
  data.set(0, data.v(0) + r2p * (p.d + p.delta * sbar), data.sl(0) + r2p * p.delta);
}

double edge_slope_right(const std::vector<double>& w, double h) {
  const size_t n = w.size();
  return (25.0 * w[n - 1] - 48.0 * w[n - 2] + 36.0 * w[n - 3] - 16.0 * w[n - 4] +
          3.0 * w[n - 5]) /
         (12.0 * h);
}

double edge_slope_left(const std::vector<double>& w, double h) {
  return (-25.0 * w[0] + 48.0 * w[1] - 36.0 * w[2] + 16.0 * w[3] - 3.0 * w[4]) /
         (12.0 * h);
}

struct Mat3 {
  Vec3 r0{1, 0, 0}, r1{0, 1, 0}, r2{0, 0, 1};
  Vec3 apply(const Vec3& v) const { return {dot(r0, v), dot(r1, v), dot(r2, v)}; }
};

Mat3 mat_mul(const Mat3& a, const Mat3& b) {
  const Vec3 c0{b.r0.x, b.r1.x, b.r2.x};
  const Vec3 c1{b.r0.y, b.r1.y, b.r2.y};
  const Vec3 c2{b.r0.z, b.r1.z, b.r2.z};
  Mat3 m;
  m.r0 = {dot(a.r0, c0), dot(a.r0, c1), dot(a.r0, c2)};
  m.r1 = {dot(a.r1, c0), dot(a.r1, c1), dot(a.r1, c2)};
  m.r2 = {dot(a.r2, c0), dot(a.r2, c1), dot(a.r2, c2)};
  return m;
}

Mat3 rot_about_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  return {{1, 0, 0}, {0, c, -s}, {0, s, c}};
}

Mat3 rot_about_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  return {{c, 0, s}, {0, 1, 0}, {-s, 0, c}};
}

// z -> -z, theta -> -theta: the orientation-preserving map between interior
// coordinates and the far end's outward frame.
Mat3 flip_axis() { return {{1, 0, 0}, {0, -1, 0}, {0, 0, -1}}; }

// Rotation carrying e3 to the given direction (Rodrigues; straight flip for
// the antipodal case).
Mat3 rotation_to(const Vec3& axis) {
  const Vec3 a = normalized(axis);
  const double c = a.z;
  if (c > 1.0 - 1e-12) return Mat3{};
  if (c < -1.0 + 1e-12) return flip_axis();
  const Vec3 k = normalized(cross(Vec3{0, 0, 1}, a));
  const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
  const double t = 1.0 - c;
  Mat3 m;
  m.r0 = {t * k.x * k.x + c, t * k.x * k.y - s * k.z, t * k.x * k.z + s * k.y};
  m.r1 = {t * k.x * k.y + s * k.z, t * k.y * k.y + c, t * k.y * k.z - s * k.x};
  m.r2 = {t * k.x * k.z - s * k.y, t * k.y * k.z + s * k.x, t * k.z * k.z + c};
  return m;
}

void validate_sizes(const std::vector<EndConfig>& config, const DeformationSet& P,
                    const std::vector<BoundaryData>& phi) {
  if (config.empty()) throw std::invalid_argument("matching: empty end configuration");
  if (P.ends.size() != config.size())
    throw std::invalid_argument("matching: deformation set does not match the ends");
  if (phi.size() != config.size())
    throw std::invalid_argument("matching: trace data does not match the ends");
  for (const auto& p : phi)
    if (!p.high_mode_only())
      throw std::invalid_argument("matching: trace data must vanish on modes |j| <= 1");
}

} // namespace

double DeformationSet::weighted_norm(double epsilon) const {
  if (!(epsilon > 0) || !(epsilon <= 1))
    throw std::invalid_argument("DeformationSet: necksize outside (0, 1]");
  double t = 0, r = 0, d = 0, del = 0;
  for (const auto& e : ends) {
    t += e.t1 * e.t1 + e.t2 * e.t2;
    r += e.r1 * e.r1 + e.r2 * e.r2;
    d += e.d * e.d;
    del += e.delta * e.delta;
  }
  return std::pow(epsilon, 0.25) * std::sqrt(t) + std::pow(epsilon, 0.75) * std::sqrt(r) +
         std::sqrt(d) + std::log(1.0 / epsilon) * std::sqrt(del);
}

EndGeometry end_geometry(const EndConfig& end, double epsilon) {
  if (!(end.weight > 0)) throw std::invalid_argument("end_geometry: weight must be positive");
  if (!(epsilon > 0)) throw std::invalid_argument("end_geometry: necksize must be positive");
  EndGeometry g;
  g.eps_l = end.weight * epsilon;
  if (!(g.eps_l < 1.0))
    throw std::invalid_argument("end_geometry: scaled necksize must stay below 1");
  g.period = cached_period(g.eps_l);
  g.interface_s = g.period / 8.0;
  g.cut = end.cut.value_or(g.interface_s - 2.5);
  if (!(g.interface_s > g.cut + 2.0))
    throw std::invalid_argument("end_geometry: truncation leaves no room for the collar");
  return g;
}

double deformation_graph(const EndConfig& end, const DeformationSet& P, double epsilon,
                         double s, double theta, double kappa) {
  const EndGeometry g = end_geometry(end, epsilon);
  if (end.index < 0 || end.index >= int(P.ends.size()))
    throw std::invalid_argument("deformation_graph: end index outside the deformation set");
  if (P.weighted_norm(epsilon) > std::pow(epsilon, kappa) * (1.0 + 1e-9))
    throw std::invalid_argument("deformation_graph: deformation outside the admissible ball");
  if (s < g.interface_s - 2.0 - 1e-9 || s > g.interface_s + 1e-9)
    throw std::out_of_range("deformation_graph: coordinate outside the collar");
  const EndParams& p = P.ends[end.index];
  const double c = std::cos(theta), sn = std::sin(theta);
  return -(p.t1 * c + p.t2 * sn) / std::cosh(s) -
         (p.r1 * c + p.r2 * sn) * g.eps_l * std::cosh(s) + p.d + p.delta * s;
}

InteriorSolution interior_solve(const std::vector<EndConfig>& config,
                                const DeformationSet& P,
                                const std::vector<BoundaryData>& phi, double epsilon,
                                double mu, bool nonlinear,
                                const std::vector<ModeSolution>* warm) {
  validate_sizes(config, P, phi);
  check_mu_range(mu);

  InteriorSolution out;
  out.epsilon = epsilon;
  out.mu = mu;
  out.nonlinear = nonlinear;

  std::vector<EndGeometry> geo;
  geo.reserve(config.size());
  for (const auto& e : config) geo.push_back(end_geometry(e, epsilon));

  if (!nonlinear) {
    for (size_t l = 0; l < config.size(); ++l) {
      CauchyData cd;
      for (int j = -kMaxMode; j <= kMaxMode; ++j) {
        if (j >= -1 && j <= 1) continue;
        const double v = phi[l].at(j);
        cd.set(j, v, std::abs(double(j)) * v);
      }
      add_deformation_blocks(cd, P.ends[l], geo[l].eps_l, geo[l].interface_s);
      out.end_data.push_back(cd);
    }
    return out;
  }

  if (config.size() != 2)
    throw std::invalid_argument("interior_solve: nonlinear path needs exactly two ends");
  if (std::abs(config[0].weight - config[1].weight) >
      1e-12 * std::max(config[0].weight, config[1].weight))
    throw std::invalid_argument("interior_solve: nonlinear path needs equal end weights");
  if (dot(normalized(config[0].axis), normalized(config[1].axis)) > -1.0 + 1e-9)
    throw std::invalid_argument("interior_solve: nonlinear path needs opposite end axes");

  const double eps_a = geo[0].eps_l;
  const double sbar = geo[0].interface_s;
  const double step = std::min(0.01, geo[0].period / 4000.0);
  const int n_half = std::max(8, int(std::ceil(sbar / step)));
  const double h = sbar / n_half;
  const int n = 2 * n_half + 1;
  const SGrid grid{-sbar, h, n};
  out.grid = grid;
  out.scale = eps_a;

  const CatenoidFrame frame(eps_a);
  std::vector<double> pot(n);
  for (int i = 0; i < n; ++i) pot[i] = frame.row(grid.s(i)).potential;
  auto mode_q = [&](int j) {
    std::vector<double> q(n);
    const double jj = double(j) * double(j);
    for (int i = 0; i < n; ++i) q[i] = jj - pot[i];
    return q;
  };
  const std::vector<double> zero_f(n, 0.0);

  std::vector<ModeSolution> base = zero_band(grid);
  for (int j = -kMaxMode; j <= kMaxMode; ++j) {
    if (j >= -1 && j <= 1) continue;
    const double right = phi[0].at(j);
    const double left = mode_parity(j) * phi[1].at(j);
    if (right == 0.0 && left == 0.0) continue;
    base[j + kMaxMode].w = solve_mode_dirichlet(mode_q(j), zero_f, h, left, right);
  }

  std::vector<ModeSolution> v = warm ? *warm : zero_band(grid);
  if (int(v.size()) != 2 * kMaxMode + 1)
    throw std::invalid_argument("interior_solve: warm start must carry the full band");
  for (const auto& m : v)
    if (int(m.w.size()) != n)
      throw std::invalid_argument("interior_solve: warm start not on the grid");

  std::vector<ModeSolution> w = zero_band(grid);
  // Forcing that produced the current correction: the trace extension is
  // solved homogeneously and every iterate leaves the mode solvers with a
  // known right-hand side, so the operator applied to base + v is available
  // exactly. A warm start arrives without its forcing; recover it once.
  std::vector<ModeSolution> lv =
      warm ? apply_mode_operator(frame, grid, v) : zero_band(grid);
  // Same defect-controlled iteration as solve_graph: the pointwise curvature
  // defect keeps contracting through the tracked forcing even after the
  // field correction drops below evaluation noise.
  double d0 = 0;
  double prev = std::numeric_limits<double>::infinity();
  bool converged = false;
  for (int it = 1; it <= 60; ++it) {
    for (int b = 0; b < 2 * kMaxMode + 1; ++b)
      for (int i = 0; i < n; ++i) w[b].w[i] = base[b].w[i] + v[b].w[i];
    const CurvatureProjection proj =
        project_scaled_curvature(frame, grid, w, 1.0, grid.s_end(), false, &lv);
    const double d = proj.sup_h_dev;
    if (it == 1) d0 = d;
    log_debug("interior it=%d defect=%.3e", it, d);
    out.iterations = it - 1;
    out.final_update = d;
    out.h_residual = d;
    out.alias_energy = proj.alias_energy;
    if (d <= std::max(1e-6 * d0, 1e-6)) {
      converged = true;
      break;
    }
    if (d >= 0.9 * prev) {
      if (d <= 1e-4) {
        converged = true;
        break;
      }
      throw numerical_error("interior_solve: defect stopped improving above tolerance");
    }
    prev = d;

    std::vector<ModeSolution> defect = lv;
    for (int b = 0; b < 2 * kMaxMode + 1; ++b)
      for (int i = 0; i < n; ++i) defect[b].w[i] -= proj.modes[b].w[i];

    std::vector<ModeSolution> next = zero_band(grid);
    for (int j = -kMaxMode; j <= kMaxMode; ++j) {
      const int b = j + kMaxMode;
      if (j >= -1 && j <= 1)
        next[b].w = solve_mode_cauchy(mode_q(j), defect[b].w, h, n_half);
      else
        next[b].w = solve_mode_dirichlet(mode_q(j), defect[b].w, h, 0.0, 0.0);
    }
    v = std::move(next);
    lv = std::move(defect);
  }
  if (!converged)
    throw numerical_error("interior_solve: no convergence within 60 iterations");

  out.solution_norm = weighted_mode_norm(grid, w, {mu, grid.s0, 2});

  for (int l = 0; l < 2; ++l) {
    CauchyData cd;
    for (int j = -kMaxMode; j <= kMaxMode; ++j) {
      const auto& m = w[j + kMaxMode].w;
      if (l == 0) {
        cd.set(j, m[n - 1], edge_slope_right(m, h));
      } else {
        const double par = mode_parity(j);
        cd.set(j, par * m[0], -par * edge_slope_left(m, h));
      }
    }
    add_deformation_blocks(cd, P.ends[l], geo[l].eps_l, geo[l].interface_s);
    out.end_data.push_back(cd);
  }
  out.correction = std::move(v);
  out.w_forcing = std::move(lv);
  out.w = std::move(w);
  return out;
}

DtnData dtn_maps(double epsilon, const std::vector<EndConfig>& config,
                 const DeformationSet& P, const std::vector<BoundaryData>& phi,
                 double mu, bool interior_nonlinear, MatchState* state) {
  validate_sizes(config, P, phi);
  check_mu_range(mu);
  MatchState local;
  if (!state) state = &local;
  state->ends.resize(config.size());

  DtnData out;
  for (size_t l = 0; l < config.size(); ++l) {
    const EndGeometry g = end_geometry(config[l], epsilon);
    const double necksize = g.eps_l + P.ends[l].delta;
    if (!(necksize > 0) || !(necksize < 1))
      throw numerical_error("dtn_maps: deformed necksize left the embedded family");
    MatchState::EndState& es = state->ends[l];
    if (!es.has_grid) {
      const double step = std::min(0.01, g.period / 4000.0);
      const double span = std::max(4.0 * g.period, 40.0);
      const int m = std::max(8, int(std::ceil(span / step)));
      es.grid = SGrid{g.interface_s, span / m, m + 1};
      es.has_grid = true;
    }
    if (es.necksize != necksize) {
      es.profile = solve_profile(neck_params(necksize), es.grid.s_end() + 1e-6);
      es.necksize = necksize;
    }
    GraphSolution sol =
        solve_graph(es.profile, g.interface_s, phi[l], mu,
                    es.has_warm ? &es.warm : nullptr, &es.grid);
    out.delaunay.push_back(cauchy_data(sol));
    es.warm = sol.correction;
    es.has_warm = true;
    es.last = std::move(sol);
    es.has_last = true;
  }

  InteriorSolution isol =
      interior_solve(config, P, phi, epsilon, mu, interior_nonlinear,
                     state->has_interior_warm ? &state->interior_warm : nullptr);
  out.interior = isol.end_data;
  if (interior_nonlinear) {
    state->interior_warm = isol.correction;
    state->has_interior_warm = true;
  }
  state->interior_last = std::move(isol);
  state->has_interior_last = true;
  return out;
}

std::vector<BoundaryData> match_high_modes(double epsilon,
                                           const std::vector<EndConfig>& config,
                                           const DeformationSet& P, double mu,
                                           MatchState* state,
                                           const std::vector<BoundaryData>* init) {
  MatchState local;
  if (!state) state = &local;
  const size_t k = config.size();
  std::vector<BoundaryData> phi(k);
  if (init) {
    if (init->size() != k)
      throw std::invalid_argument("match_high_modes: seed data does not match the ends");
    phi = *init;
  }

  double prev = std::numeric_limits<double>::infinity();
  int grew = 0;
  for (int it = 1; it <= 50; ++it) {
    const DtnData dtn = dtn_maps(epsilon, config, P, phi, mu, true, state);
    double sq = 0;
    for (size_t l = 0; l < k; ++l) {
      for (int j = -kMaxMode; j <= kMaxMode; ++j) {
        if (j >= -1 && j <= 1) continue;
        const double g = dtn.delaunay[l].sl(j) - dtn.interior[l].sl(j);
        const double dphi = g / (2.0 * std::abs(double(j)));
        phi[l].set(j, phi[l].at(j) + dphi);
        sq += dphi * dphi;
      }
    }
    const double update = std::sqrt(sq);
    log_debug("match_high it=%d update=%.3e", it, update);
    if (update <= 1e-10) return phi;
    if (update > prev && ++grew >= 2)
      throw numerical_error("match_high_modes: fixed point diverging");
    prev = update;
  }
  throw numerical_error("match_high_modes: no convergence within 50 iterations");
}

namespace {

using Vector6 = Eigen::Matrix<double, 6, 1>;
using Matrix6 = Eigen::Matrix<double, 6, 6>;

Vector6 end_mismatch(const CauchyData& s_side, const CauchyData& t_side) {
  Vector6 m;
  m << s_side.v(0) - t_side.v(0), s_side.sl(0) - t_side.sl(0),
      s_side.v(1) - t_side.v(1), s_side.sl(1) - t_side.sl(1),
      s_side.v(-1) - t_side.v(-1), s_side.sl(-1) - t_side.sl(-1);
  return m;
}

// Derivative of the mismatch with respect to (t1, t2, r1, r2, d, delta):
// minus the deformation blocks; the remaining dependence through the
// Delaunay-side solve is higher order and absorbed by the damping.
Matrix6 end_jacobian(double eps_l, double sbar) {
  const double ch = std::cosh(sbar);
  const double sh = std::sinh(sbar);
  const double rp = std::sqrt(kPi);
  const double r2p = std::sqrt(2.0 * kPi);
  Matrix6 J = Matrix6::Zero();
  J(0, 4) = -r2p;
  J(0, 5) = -r2p * sbar;
  J(1, 5) = -r2p;
  J(2, 0) = rp / ch;
  J(2, 2) = rp * eps_l * ch;
  J(3, 0) = -rp * sh / (ch * ch);
  J(3, 2) = rp * eps_l * sh;
  J(4, 1) = rp / ch;
  J(4, 3) = rp * eps_l * ch;
  J(5, 1) = -rp * sh / (ch * ch);
  J(5, 3) = rp * eps_l * sh;
  return J;
}

} // namespace

DeformationSet match_low_modes(double epsilon, const std::vector<EndConfig>& config,
                               const std::vector<BoundaryData>& phi, double mu,
                               double kappa, MatchState* state,
                               const DeformationSet* init) {
  if (!(kappa > 1.0) || !(kappa < 1.5))
    throw std::invalid_argument("match_low_modes: deformation exponent must lie in (1, 3/2)");
  MatchState local;
  if (!state) state = &local;
  const size_t k = config.size();

  DeformationSet P;
  P.ends.assign(k, EndParams{});
  if (init) {
    if (init->ends.size() != k)
      throw std::invalid_argument("match_low_modes: seed does not match the ends");
    P = *init;
  }

  std::vector<EndGeometry> geo;
  geo.reserve(k);
  for (const auto& e : config) geo.push_back(end_geometry(e, epsilon));

  std::vector<Eigen::PartialPivLU<Matrix6>> lu;
  lu.reserve(k);
  for (size_t l = 0; l < k; ++l)
    lu.emplace_back(end_jacobian(geo[l].eps_l, geo[l].interface_s));

  auto evaluate = [&](const DeformationSet& cand, std::vector<Vector6>& m) {
    const DtnData dtn = dtn_maps(epsilon, config, cand, phi, mu, true, state);
    double sq = 0;
    m.resize(k);
    for (size_t l = 0; l < k; ++l) {
      m[l] = end_mismatch(dtn.delaunay[l], dtn.interior[l]);
      sq += m[l].squaredNorm();
    }
    return std::sqrt(sq);
  };

  std::vector<Vector6> m;
  double norm = evaluate(P, m);
  for (int it = 1; it <= 40 && norm > 1e-9; ++it) {
    std::vector<Vector6> delta(k);
    for (size_t l = 0; l < k; ++l) delta[l] = lu[l].solve(-m[l]);

    double lambda = 1.0;
    bool accepted = false;
    for (int half = 0; half <= 6 && !accepted; ++half, lambda *= 0.5) {
      DeformationSet cand = P;
      for (size_t l = 0; l < k; ++l) {
        cand.ends[l].t1 += lambda * delta[l](0);
        cand.ends[l].t2 += lambda * delta[l](1);
        cand.ends[l].r1 += lambda * delta[l](2);
        cand.ends[l].r2 += lambda * delta[l](3);
        cand.ends[l].d += lambda * delta[l](4);
        cand.ends[l].delta += lambda * delta[l](5);
      }
      bool feasible = true;
      for (size_t l = 0; l < k; ++l) {
        const double neck = geo[l].eps_l + cand.ends[l].delta;
        if (!(neck > 0) || !(neck < 1)) feasible = false;
      }
      if (!feasible) continue;
      std::vector<Vector6> m_cand;
      double norm_cand;
      try {
        norm_cand = evaluate(cand, m_cand);
      } catch (const numerical_error&) {
        continue;
      }
      if (norm_cand <= norm * (1.0 - 0.25 * lambda) || norm_cand <= 1e-9) {
        P = std::move(cand);
        m = std::move(m_cand);
        norm = norm_cand;
        accepted = true;
      }
    }
    if (!accepted) throw numerical_error("match_low_modes: Newton stagnation");
    log_debug("match_low it=%d |m|=%.3e", it, norm);
  }
  if (norm > 1e-9)
    throw numerical_error("match_low_modes: no convergence within 40 iterations");
  if (P.weighted_norm(epsilon) > std::pow(epsilon, kappa))
    throw numerical_error("match_low_modes: configuration not glueable at this necksize");
  return P;
}

namespace {

// Sampled rows of a mode band with 4th-order derivative tables, for mesh and
// seam evaluation.
struct BandJets {
  const std::vector<ModeSolution>* w = nullptr;
  std::vector<std::vector<double>> d1, d2;
  std::vector<int> active;

  BandJets(const SGrid& grid, const std::vector<ModeSolution>& modes) : w(&modes) {
    const int nb = int(modes.size());
    double global_sup = 0;
    std::vector<double> mode_sup(nb, 0.0);
    for (int b = 0; b < nb; ++b) {
      for (double v : modes[b].w) mode_sup[b] = std::max(mode_sup[b], std::abs(v));
      global_sup = std::max(global_sup, mode_sup[b]);
    }
    d1.resize(nb);
    d2.resize(nb);
    for (int b = 0; b < nb; ++b) {
      if (!(mode_sup[b] > 1e-15 * global_sup) || mode_sup[b] == 0) continue;
      active.push_back(b);
      d1[b] = deriv1_fd4(modes[b].w, grid.h);
      d2[b] = deriv2_fd4(modes[b].w, grid.h);
    }
  }

  std::array<double, 6> jet(int i, int b_theta, const double* chi, const double* dchi,
                            int stride) const {
    std::array<double, 6> out{};
    for (int b : active) {
      const auto& mode = (*w)[b];
      const double c = chi[b * stride + b_theta];
      const double dc = dchi[b * stride + b_theta];
      const double jj = double(mode.j) * double(mode.j);
      out[0] += mode.w[i] * c;
      out[1] += d1[b][i] * c;
      out[2] += mode.w[i] * dc;
      out[3] += d2[b][i] * c;
      out[4] += d1[b][i] * dc;
      out[5] -= jj * mode.w[i] * c;
    }
    return out;
  }
};

struct ThetaRing {
  std::array<double, kThetaSamples> cos_t{}, sin_t{};
  // chi[b][m] and its theta derivative for the full band.
  std::vector<double> chi, dchi;

  ThetaRing() {
    const int nb = 2 * kMaxMode + 1;
    chi.assign(size_t(nb) * kThetaSamples, 0.0);
    dchi.assign(size_t(nb) * kThetaSamples, 0.0);
    for (int m = 0; m < kThetaSamples; ++m) {
      const double th = 2.0 * kPi * m / kThetaSamples;
      cos_t[m] = std::cos(th);
      sin_t[m] = std::sin(th);
      for (int j = -kMaxMode; j <= kMaxMode; ++j) {
        const int b = j + kMaxMode;
        chi[size_t(b) * kThetaSamples + m] = mode_angular(j, th);
        double d = 0;
        if (j > 0)
          d = -j * std::sin(j * th) / std::sqrt(kPi);
        else if (j < 0)
          d = -j * std::cos(j * th) / std::sqrt(kPi);
        dchi[size_t(b) * kThetaSamples + m] = d;
      }
    }
  }
};

const ThetaRing& theta_ring() {
  static const ThetaRing ring;
  return ring;
}

std::vector<int> sampled_rows(int first, int last, int target_rows) {
  std::vector<int> rows;
  const int span = last - first;
  const int stride = std::max(1, span / std::max(1, target_rows - 1));
  for (int i = first; i <= last; i += stride) rows.push_back(i);
  if (rows.back() != last) rows.push_back(last);
  return rows;
}

void append_ring_quads(SurfaceMesh& mesh, int ring0, int ring1) {
  for (int m = 0; m < kThetaSamples; ++m) {
    const int m1 = (m + 1) % kThetaSamples;
    mesh.quads.push_back(
        {ring0 + m, ring0 + m1, ring1 + m1, ring1 + m});
  }
}

struct FitSample {
  double z = 0;
  double r = 0;
};

// Best least-squares Delaunay surface (necksize and axial shift) through the
// sampled points, by nested golden-section search. Distances are measured as
// normalized radial residuals against the candidate profile.
struct DelaunayFit {
  double necksize = 0, shift = 0, rms = 0, max = 0;
};

double golden_minimize(double lo, double hi, int iters,
                       const std::function<double(double)>& f, double* best_x) {
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < iters; ++i) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = f(x2);
    }
  }
  *best_x = f1 <= f2 ? x1 : x2;
  return std::min(f1, f2);
}

DelaunayFit fit_delaunay(const std::vector<FitSample>& samples, double eps_center) {
  if (samples.empty()) throw std::invalid_argument("fit_delaunay: no samples");
  double z_max = 0;
  for (const auto& s : samples) z_max = std::max(z_max, std::abs(s.z));

  struct Candidate {
    DelaunayProfile profile;
    double rms = 0, max = 0, shift = 0;
  };

  auto assess = [&](double eps_hat) {
    Candidate c;
    const NeckParams par = neck_params(eps_hat);
    DelaunayProfile head = solve_profile(par, period_S(par) + 1.0);
    const double t_period = period_T(head);
    const double s_need =
        head.period_s * ((z_max + 1.5) / std::max(1e-6, t_period) + 1.5);
    c.profile = solve_profile(par, s_need);

    auto objective = [&](double shift) {
      double sq = 0;
      double worst = 0;
      for (const auto& s : samples) {
        const double t = std::abs(s.z - shift);
        // invert t = k(s) by bisection; k is strictly increasing
        double lo = 0, hi = c.profile.s_max;
        for (int it = 0; it < 60; ++it) {
          const double mid = 0.5 * (lo + hi);
          if (c.profile.k_at(mid) < t)
            lo = mid;
          else
            hi = mid;
        }
        const double ss = 0.5 * (lo + hi);
        const double rho = c.profile.rho_at(ss);
        const double sig_s = c.profile.sigma_s_at(ss);
        const double denom = std::max(1e-12, std::sqrt(1.0 - sig_s * sig_s));
        const double rho_t = sig_s / denom;
        const double dist = std::abs(s.r - rho) / std::sqrt(1.0 + rho_t * rho_t);
        sq += dist * dist;
        worst = std::max(worst, dist);
      }
      return std::sqrt(sq / double(samples.size()));
    };
    c.rms = golden_minimize(-1.0, 1.0, 24, objective, &c.shift);
    // recompute the sup at the chosen shift
    {
      double worst = 0;
      for (const auto& s : samples) {
        const double t = std::abs(s.z - c.shift);
        double lo = 0, hi = c.profile.s_max;
        for (int it = 0; it < 60; ++it) {
          const double mid = 0.5 * (lo + hi);
          if (c.profile.k_at(mid) < t)
            lo = mid;
          else
            hi = mid;
        }
        const double ss = 0.5 * (lo + hi);
        const double rho = c.profile.rho_at(ss);
        const double sig_s = c.profile.sigma_s_at(ss);
        const double denom = std::max(1e-12, std::sqrt(1.0 - sig_s * sig_s));
        const double rho_t = sig_s / denom;
        worst = std::max(worst, std::abs(s.r - rho) / std::sqrt(1.0 + rho_t * rho_t));
      }
      c.max = worst;
    }
    return c;
  };

  const double lo = std::max(1e-4, 0.55 * eps_center);
  const double hi = std::min(0.995, 1.6 * eps_center);
  double best_eps = eps_center;
  golden_minimize(lo, hi, 20, [&](double e) { return assess(e).rms; }, &best_eps);
  Candidate best = assess(best_eps);
  DelaunayFit fit;
  fit.necksize = best_eps;
  fit.shift = best.shift;
  fit.rms = best.rms;
  fit.max = best.max;
  return fit;
}

} // namespace

GluedSurface assemble_glued(double epsilon, const std::vector<EndConfig>& config,
                            double mu, double kappa, int mesh_rows) {
  if (mesh_rows < 8) throw std::invalid_argument("assemble_glued: mesh too coarse");
  GluedSurface out;
  out.epsilon = epsilon;
  out.mu = mu;
  out.kappa = kappa;

  MatchState st;
  const size_t k = config.size();
  std::vector<BoundaryData> phi(k);
  DeformationSet P;
  P.ends.assign(k, EndParams{});

  double change = std::numeric_limits<double>::infinity();
  int sweep = 0;
  for (sweep = 1; sweep <= 12; ++sweep) {
    const std::vector<BoundaryData> phi_new =
        match_high_modes(epsilon, config, P, mu, &st, &phi);
    double dphi_sq = 0;
    for (size_t l = 0; l < k; ++l)
      for (int j = -kMaxMode; j <= kMaxMode; ++j) {
        const double d = phi_new[l].at(j) - phi[l].at(j);
        dphi_sq += d * d;
      }
    const DeformationSet P_new =
        match_low_modes(epsilon, config, phi_new, mu, kappa, &st, &P);
    DeformationSet diff;
    diff.ends.resize(k);
    for (size_t l = 0; l < k; ++l) {
      diff.ends[l].t1 = P_new.ends[l].t1 - P.ends[l].t1;
      diff.ends[l].t2 = P_new.ends[l].t2 - P.ends[l].t2;
      diff.ends[l].r1 = P_new.ends[l].r1 - P.ends[l].r1;
      diff.ends[l].r2 = P_new.ends[l].r2 - P.ends[l].r2;
      diff.ends[l].d = P_new.ends[l].d - P.ends[l].d;
      diff.ends[l].delta = P_new.ends[l].delta - P.ends[l].delta;
    }
    change = std::max(std::sqrt(dphi_sq), diff.weighted_norm(epsilon));
    phi = phi_new;
    P = P_new;
    log_info("glue sweep=%d change=%.3e", sweep, change);
    if (change <= 1e-9) break;
  }
  if (change > 1e-9)
    throw numerical_error("assemble_glued: alternating sweeps did not settle");
  out.sweeps = std::min(sweep, 12);
  out.final_sweep_update = change;
  out.params = P;
  out.phi = phi;

  // Final data for the mismatch report.
  const DtnData dtn = dtn_maps(epsilon, config, P, phi, mu, true, &st);

  const ThetaRing& ring = theta_ring();
  const Mat3 world = rotation_to(config[0].axis);
  const Vec3 base = config[0].base;

  // Interior piece.
  const InteriorSolution& isol = st.interior_last;
  const CatenoidFrame cat(isol.scale);
  const SGrid& gi = isol.grid;
  std::vector<Vec3> interior_boundary[2];
  std::vector<Vec3> interior_boundary_normal[2];
  std::vector<FitSample> samples;
  {
    BandJets jets(gi, isol.w);
    const std::vector<int> rows = sampled_rows(0, gi.n - 1, mesh_rows);
    SurfaceMesh mesh;
    for (size_t ri = 0; ri < rows.size(); ++ri) {
      const int i = rows[ri];
      const FrameRow row = cat.row(gi.s(i));
      for (int m = 0; m < kThetaSamples; ++m) {
        const GraphPoint p = graph_point(row, ring.cos_t[m], ring.sin_t[m],
                                         jets.jet(i, m, ring.chi.data(),
                                                  ring.dchi.data(), kThetaSamples));
        if (ri % 2 == 0 && m % 4 == 0)
          samples.push_back({p.position.z, std::hypot(p.position.x, p.position.y)});
        if (i == gi.n - 1) {
          interior_boundary[0].push_back(p.position);
          interior_boundary_normal[0].push_back(p.normal);
        }
        if (i == 0) {
          interior_boundary[1].push_back(p.position);
          interior_boundary_normal[1].push_back(p.normal);
        }
        mesh.vertex.push_back(world.apply(p.position) + base);
        mesh.normal.push_back(world.apply(p.normal));
        mesh.mean_curv.push_back(p.mean_h);
      }
      if (ri > 0)
        append_ring_quads(mesh, int(kThetaSamples * (ri - 1)), int(kThetaSamples * ri));
    }
    out.interior_mesh = std::move(mesh);
  }
  out.interior_sup_h = isol.h_residual;
  {
    const double sbar = -gi.s0;
    const std::vector<ModeSolution>* f =
        isol.w_forcing.empty() ? nullptr : &isol.w_forcing;
    out.interior_sup_h_bulk =
        sup_h_window(cat, gi, isol.w, 1.0, -sbar + 1.0, sbar - 1.0, f);
  }

  double assembled = std::max(out.interior_sup_h, out.interior_sup_h_bulk);

  // End pieces.
  for (size_t l = 0; l < k; ++l) {
    const EndGeometry g = end_geometry(config[l], epsilon);
    const MatchState::EndState& es = st.ends[l];
    const EndParams& p = P.ends[l];
    const DelaunayFrame dframe(es.profile);
    const SGrid& ge = es.grid;

    GluedEndReport rep;
    rep.index = config[l].index;
    rep.necksize = es.necksize;
    for (int j = -kMaxMode; j <= kMaxMode; ++j)
      rep.mismatch.push_back({j, dtn.delaunay[l].v(j) - dtn.interior[l].v(j),
                              dtn.delaunay[l].sl(j) - dtn.interior[l].sl(j)});

    const double s_hi = g.interface_s + 2.0 * g.period;
    const std::vector<ModeSolution>* fe =
        es.last.w_forcing.empty() ? nullptr : &es.last.w_forcing;
    rep.sup_h_bulk =
        sup_h_window(dframe, ge, es.last.w, 1.0, g.interface_s + 1.0, s_hi, fe);
    rep.sup_h_collar =
        sup_h_window(dframe, ge, es.last.w, 1.0, g.interface_s,
                     std::min(g.interface_s + 1.0, ge.s_end()), fe);

    // Deformed model placement: rotations by (-r1, +r2) about the transverse
    // axes, then the translation that realigns the undeformed interface
    // circles, minus the axial and transverse offsets of the deformation.
    const Mat3 rot = mat_mul(rot_about_x(p.r2), rot_about_y(-p.r1));
    const double c0 = isol.scale * g.interface_s - es.profile.k_at(g.interface_s);
    const Vec3 shift{-p.t1, -p.t2, c0 - p.d};
    const Mat3 to_interior = l == 0 ? Mat3{} : flip_axis();

    BandJets jets(ge, es.last.w);
    const int i_hi = std::min(ge.n - 1, int(std::floor((s_hi - ge.s0) / ge.h)));
    const std::vector<int> rows = sampled_rows(0, i_hi, 2 * mesh_rows);
    SurfaceMesh mesh;
    double gap = 0, kink = 0;
    for (size_t ri = 0; ri < rows.size(); ++ri) {
      const int i = rows[ri];
      const FrameRow row = dframe.row(ge.s(i));
      for (int m = 0; m < kThetaSamples; ++m) {
        const GraphPoint gp = graph_point(row, ring.cos_t[m], ring.sin_t[m],
                                          jets.jet(i, m, ring.chi.data(),
                                                   ring.dchi.data(), kThetaSamples));
        const Vec3 pos_end = rot.apply(gp.position) + shift;
        const Vec3 nrm_end = rot.apply(gp.normal);
        const Vec3 pos_int = to_interior.apply(pos_end);
        const Vec3 nrm_int = to_interior.apply(nrm_end);
        if (ri % 2 == 0 && m % 4 == 0)
          samples.push_back({pos_int.z, std::hypot(pos_int.x, pos_int.y)});
        if (i == 0) {
          // Seam comparison against the interior boundary ring. The interior
          // ring at this end, viewed in end coordinates, reverses theta.
          const int mi = l == 0 ? m : (kThetaSamples - m) % kThetaSamples;
          const Vec3 pb = interior_boundary[l][mi];
          const Vec3 nb = interior_boundary_normal[l][mi];
          gap = std::max(gap, norm(pos_int - pb));
          const double c = std::clamp(dot(nrm_int, nb), -1.0, 1.0);
          kink = std::max(kink, std::acos(c));
        }
        mesh.vertex.push_back(world.apply(pos_int) + base);
        mesh.normal.push_back(world.apply(nrm_int));
        mesh.mean_curv.push_back(gp.mean_h);
      }
      if (ri > 0)
        append_ring_quads(mesh, int(kThetaSamples * (ri - 1)), int(kThetaSamples * ri));
    }
    rep.seam_gap = gap;
    rep.seam_kink = kink;
    assembled = std::max({assembled, rep.sup_h_bulk, rep.sup_h_collar, kink});
    out.end_meshes.push_back(std::move(mesh));
    out.ends.push_back(std::move(rep));
  }
  out.assembled_sup_h = assembled;

  // Closest exact Delaunay surface through all sampled points.
  double eps_center = 0;
  for (size_t l = 0; l < k; ++l) eps_center += st.ends[l].necksize;
  eps_center /= double(k);
  const DelaunayFit fit = fit_delaunay(samples, eps_center);
  out.best_fit_necksize = fit.necksize;
  out.best_fit_shift = fit.shift;
  out.best_fit_rms = fit.rms;
  out.best_fit_max = fit.max;
  return out;
}

} // namespace dgl
