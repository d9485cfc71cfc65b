#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "perc/lattice.hpp"
#include "perc/montecarlo.hpp"

namespace perc {

enum class DrivingMode { Chordal, Radial };

/// Driving function sampled at increasing capacities. Chordal values are W_t,
/// radial values are angles with zeta_t = exp(i theta_t).
struct DrivingSample {
  DrivingMode mode = DrivingMode::Chordal;
  std::vector<double> times;
  std::vector<double> values;

  std::size_t size() const { return times.size(); }
};

inline void check_driving(const DrivingSample& d) {
  if (d.times.size() != d.values.size()) throw std::invalid_argument("driving times and values differ in length");
  if (d.times.empty() || d.times.front() != 0.0) throw std::invalid_argument("driving must start at t = 0");
  for (std::size_t k = 1; k < d.times.size(); ++k)
    if (!(d.times[k] > d.times[k - 1])) throw std::invalid_argument("driving times must be strictly increasing");
}

/// sqrt(kappa) times a Brownian motion on the grid k*dt up to T.
inline DrivingSample sample_bm_driving(double kappa, double dt, double T, std::uint64_t seed,
                                       DrivingMode mode = DrivingMode::Chordal) {
  if (!(kappa >= 0)) throw std::invalid_argument("kappa must be nonnegative");
  if (!(dt > 0)) throw std::invalid_argument("dt must be positive");
  if (!(T >= 0)) throw std::invalid_argument("T must be nonnegative");
  DrivingSample d;
  d.mode = mode;
  const auto n = static_cast<std::size_t>(std::llround(T / dt));
  d.times.reserve(n + 1);
  d.values.reserve(n + 1);
  d.times.push_back(0);
  d.values.push_back(0);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  const double scale = std::sqrt(kappa * dt);
  for (std::size_t k = 1; k <= n; ++k) {
    d.times.push_back(static_cast<double>(k) * dt);
    d.values.push_back(d.values.back() + scale * gauss(rng));
  }
  return d;
}

namespace detail {

/// Square root of x with nonnegative imaginary part. On the real axis the sign
/// of the real part follows `side`.
inline cplx sqrt_upper(cplx x, double side) {
  const double a = x.real(), b = x.imag();
  if (b == 0) {
    if (a >= 0) return {std::copysign(std::sqrt(a), side), 0.0};
    return {0.0, std::sqrt(-a)};
  }
  const double r = std::hypot(a, b);
  const double m = std::sqrt(0.5 * (r + std::abs(a)));
  cplx s = a >= 0 ? cplx{m, b / (2 * m)} : cplx{std::abs(b) / (2 * m), std::copysign(m, b)};
  return b < 0 ? -s : s;
}

}  // namespace detail

/// Conformal map from H minus the vertical slit [w, w + 2i sqrt(dt)] onto H,
/// normalized at infinity; its half-plane capacity is dt.
inline cplx slit_map(cplx z, double w, double dt) {
  cplx x = z - w;
  return w + detail::sqrt_upper(x * x + 4 * dt, x.real());
}

inline cplx slit_map_inverse(cplx z, double w, double dt) {
  cplx x = z - w;
  return w + detail::sqrt_upper(x * x - 4 * dt, x.real());
}

/// gamma(t_k) = f_1(f_2(...f_k(W_k))), with f_j the inverse slit map at
/// (W_j, t_j - t_{j-1}).
inline std::vector<cplx> chordal_trace(const DrivingSample& d) {
  if (d.mode != DrivingMode::Chordal) throw std::invalid_argument("chordal_trace needs a chordal driving");
  check_driving(d);
  std::vector<cplx> out(d.size());
  out[0] = d.values[0];
  for (std::size_t k = 1; k < d.size(); ++k) {
    cplx z = d.values[k];
    for (std::size_t j = k; j >= 1; --j) z = slit_map_inverse(z, d.values[j], d.times[j] - d.times[j - 1]);
    out[k] = z;
  }
  return out;
}

/// Incremental zipper: each pushed point is mapped by the composition of the
/// slit maps found so far, and its image defines the next slit.
class DrivingExtractor {
 public:
  explicit DrivingExtractor(cplx start) {
    if (start.imag() != 0) throw std::invalid_argument("curve must start on the real line");
    d_.mode = DrivingMode::Chordal;
    d_.times.push_back(0);
    d_.values.push_back(start.real());
  }

  void push(cplx z) {
    const std::size_t k = d_.size();
    if (!(z.imag() > 0)) throw std::domain_error("curve point " + std::to_string(k) + " is not in the upper half-plane");
    for (std::size_t j = 1; j < k; ++j) z = slit_map(z, d_.values[j], d_.times[j] - d_.times[j - 1]);
    if (!(z.imag() > 0))
      throw std::domain_error("curve point " + std::to_string(k) + " maps below the real line");
    d_.values.push_back(z.real());
    d_.times.push_back(d_.times.back() + 0.25 * z.imag() * z.imag());
  }

  const DrivingSample& driving() const { return d_; }
  double capacity() const { return d_.times.back(); }

 private:
  DrivingSample d_;
};

inline DrivingSample extract_driving(const std::vector<cplx>& curve) {
  if (curve.empty()) throw std::invalid_argument("empty curve");
  DrivingExtractor ex(curve[0]);
  for (std::size_t k = 1; k < curve.size(); ++k) ex.push(curve[k]);
  return ex.driving();
}

// Radial Loewner chain.

struct RadialOptions {
  double tolerance = 1e-11;
  double eta = 1e-6;       // tips start at zeta_t (1 - eta)
  double hit_radius = 1e-7;  // |g - zeta| below which a point counts as swallowed
  int cauchy_points = 64;
  std::vector<cplx> grid;  // interior points tested for hull membership
};

struct RadialChainState {
  double t = 0;
  std::vector<double> times;
  std::vector<cplx> tips;        // gamma(t_k)
  std::vector<double> distances;  // d(0, K_{t_k}) from the sampled tips
  double d = 1;
  cplx g_prime_zero{1, 0};
  std::vector<char> in_hull;
};

namespace detail {

inline cplx radial_rhs(cplx g, cplx zeta) { return -g * (g + zeta) / (g - zeta); }

/// Adaptive RK4 with step doubling for dz/ds = radial_rhs(z, zeta(s)) on one
/// driving segment where theta is linear. Integrates from s0 to s1 (either
/// direction). Returns false when `stop(z)` fires.
template <class Stop>
bool rk4_segment(cplx& z, double s0, double s1, double th0, double th1, double& h, double tol, Stop&& stop) {
  const double len = s1 - s0;
  if (len == 0) return true;
  const double dir = len > 0 ? 1.0 : -1.0;
  auto zeta = [&](double s) {
    double f = (s - s0) / len;
    double th = th0 + f * (th1 - th0);
    return cplx{std::cos(th), std::sin(th)};
  };
  auto step = [&](cplx y, double s, double dh) {
    cplx k1 = radial_rhs(y, zeta(s));
    cplx k2 = radial_rhs(y + 0.5 * dh * k1, zeta(s + 0.5 * dh));
    cplx k3 = radial_rhs(y + 0.5 * dh * k2, zeta(s + 0.5 * dh));
    cplx k4 = radial_rhs(y + dh * k3, zeta(s + dh));
    return y + dh / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  };
  double s = s0;
  h = std::min(std::abs(h), std::abs(len));
  while (dir * (s1 - s) > 0) {
    double dh = dir * std::min(h, std::abs(s1 - s));
    cplx full = step(z, s, dh);
    cplx half = step(step(z, s, 0.5 * dh), s + 0.5 * dh, 0.5 * dh);
    double err = std::abs(full - half) / 15.0;
    double scale = tol * std::max(1.0, std::abs(half));
    if (err <= scale || std::abs(dh) < 1e-300) {
      z = half + (half - full) / 15.0;
      s += dh;
      if (stop(z, s)) return false;
      double grow = err == 0 ? 4.0 : std::min(4.0, 0.9 * std::pow(scale / err, 0.2));
      h = std::abs(dh) * std::max(grow, 0.2);
    } else {
      h = std::abs(dh) * std::max(0.1, 0.9 * std::pow(scale / err, 0.2));
      if (h < 1e-16 * std::max(1.0, std::abs(s))) throw std::runtime_error("radial ODE step size underflow");
    }
  }
  return true;
}

/// g_T^{-1}(w): flows w backward from capacity t_k to 0.
inline cplx radial_backward(const DrivingSample& d, std::size_t k, cplx w, double tol) {
  double h = 1e-14;
  for (std::size_t j = k; j >= 1; --j) {
    rk4_segment(w, d.times[j], d.times[j - 1], d.values[j], d.values[j - 1], h, tol,
                [](cplx, double) { return false; });
  }
  return w;
}

}  // namespace detail

/// Tip gamma(t_k), extrapolated in sqrt(eta) from starts zeta (1 - eta) and zeta (1 - 4 eta).
inline cplx radial_tip(const DrivingSample& d, std::size_t k, const RadialOptions& opt = {}) {
  if (k == 0) return {std::cos(d.values[0]), std::sin(d.values[0])};
  cplx zeta{std::cos(d.values[k]), std::sin(d.values[k])};
  cplx a = detail::radial_backward(d, k, zeta * (1 - opt.eta), opt.tolerance);
  cplx b = detail::radial_backward(d, k, zeta * (1 - 4 * opt.eta), opt.tolerance);
  return 2.0 * a - b;
}

/// Forward flow of z up to index k; empty once z is swallowed.
inline std::optional<cplx> radial_forward(const DrivingSample& d, std::size_t k, cplx z, const RadialOptions& opt = {}) {
  double h = 1e-3;
  bool alive = true;
  for (std::size_t j = 1; j <= k && alive; ++j) {
    const double th0 = d.values[j - 1], th1 = d.values[j];
    const double s0 = d.times[j - 1], len = d.times[j] - s0;
    alive = detail::rk4_segment(z, s0, d.times[j], th0, th1, h, opt.tolerance, [&](cplx g, double s) {
      double th = th0 + (s - s0) / len * (th1 - th0);
      return std::abs(g - cplx{std::cos(th), std::sin(th)}) < opt.hit_radius;
    });
  }
  if (!alive) return std::nullopt;
  return z;
}

/// Integrates the radial chain up to capacity T: tips, hull distances with the
/// Koebe check at every step, g_T'(0) by a Cauchy mean, and grid membership.
inline RadialChainState solve_radial_chain(const DrivingSample& d, double T, const RadialOptions& opt = {}) {
  if (d.mode != DrivingMode::Radial) throw std::invalid_argument("solve_radial_chain needs a radial driving");
  check_driving(d);
  std::size_t last = 0;
  while (last + 1 < d.size() && d.times[last + 1] <= T * (1 + 1e-12)) ++last;
  RadialChainState st;
  st.t = d.times[last];
  double dmin = 1;
  for (std::size_t k = 0; k <= last; ++k) {
    cplx tip = radial_tip(d, k, opt);
    dmin = std::min(dmin, std::abs(tip));
    const double t = d.times[k];
    const double lo = std::exp(-t) / 4, hi = std::exp(-t);
    if (dmin < lo * (1 - 1e-9) || dmin > hi * (1 + 1e-9))
      throw std::logic_error("Koebe bounds violated at t = " + std::to_string(t));
    st.times.push_back(t);
    st.tips.push_back(tip);
    st.distances.push_back(dmin);
  }
  st.d = dmin;

  // Points of modulus e^{-T}/8 lie well inside the hull's complement by Koebe.
  const double rho = std::exp(-st.t) / 8;
  cplx acc = 0;
  for (int m = 0; m < opt.cauchy_points; ++m) {
    double phi = 2 * std::numbers::pi * m / opt.cauchy_points;
    cplx e{std::cos(phi), std::sin(phi)};
    auto g = radial_forward(d, last, rho * e, opt);
    if (!g) throw std::logic_error("Koebe disc point swallowed");
    acc += *g / (rho * e);
  }
  st.g_prime_zero = acc / static_cast<double>(opt.cauchy_points);

  st.in_hull.reserve(opt.grid.size());
  for (auto z : opt.grid) {
    if (std::abs(z) >= 1) throw std::invalid_argument("grid point outside the unit disc");
    st.in_hull.push_back(!radial_forward(d, last, z, opt).has_value());
  }
  return st;
}

/// Slit [r, 1] has capacity log((1 + r)^2 / (4 r)); inverted for r.
inline double radial_slit_distance(double T) {
  double c = std::exp(-T);  // 4 r / (1 + r)^2
  double b = 2 - 4 / c;     // r^2 + b r + 1 = 0
  return (-b - std::sqrt(b * b - 4)) / 2;
}

// Diffusion on (0, 2 pi).

enum class BoundaryRule { Absorb, Reflect };

struct DiffusionRun {
  double x0 = std::numbers::pi;
  double b = 0;
  double dt = 1e-3;
  double T = 1;
  BoundaryRule rule = BoundaryRule::Absorb;
  double substep_floor = 1e-4;
  bool record_path = false;

  std::vector<double> path_t;
  std::vector<double> path_y;
  std::optional<double> tau;
  double t_end = 0;
  double y_final = 0;
  double functional = 0;  // integral of ds / sin^2(Y/2)
};

/// Euler-Maruyama for dY = sqrt(6) dB + cot(Y/2) dt with steps dt min(1, g^2),
/// g the distance to the boundary of (0, 2 pi), floored at dt substep_floor.
/// Within 0.1 of an absorbing end g behaves like sqrt(6) times a Bessel(5/3)
/// process, whose hitting time of 0 is g^2 / (12 G) with G ~ Gamma(1/6); each
/// sub-step draws that time and otherwise advances g^2, which has bounded drift.
inline DiffusionRun simulate_Y(DiffusionRun run, std::uint64_t seed) {
  constexpr double two_pi = 2 * std::numbers::pi;
  constexpr double kNear = 0.1;
  const bool reflect = run.rule == BoundaryRule::Reflect;
  if (reflect ? !(run.x0 >= 0 && run.x0 < two_pi) : !(run.x0 > 0 && run.x0 < two_pi))
    throw std::invalid_argument("invalid x0 for the boundary rule");
  if (!(run.dt > 0) || !(run.T >= 0)) throw std::invalid_argument("dt must be positive and T nonnegative");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::gamma_distribution<double> hit_gamma(1.0 / 6.0, 1.0);
  double y = run.x0;
  double t = 0;
  run.functional = 0;
  run.tau.reset();
  run.path_t.clear();
  run.path_y.clear();
  auto record = [&] {
    if (run.record_path) {
      run.path_t.push_back(t);
      run.path_y.push_back(y);
    }
  };
  record();
  while (t < run.T) {
    const bool lower = y < std::numbers::pi;
    const double gap = lower ? y : two_pi - y;
    const double factor = std::clamp(gap * gap, run.substep_floor, 1.0);
    double h = std::min(run.dt * factor, run.T - t);
    const double s = std::sin(0.5 * y);
    if (gap < kNear) {
      const bool absorbing = !lower || !reflect;
      if (absorbing) {
        double hit = gap * gap / (12 * hit_gamma(rng));
        if (hit <= h) {
          t += hit;
          run.functional += s > 0 ? hit / (s * s) : 0.0;
          run.tau = t;
          y = lower ? 0.0 : two_pi;
          record();
          break;
        }
      }
      // d(g^2) = (2 g cot(g/2) + 6) ds + 2 g sqrt(6) dB, with limit 10 ds at g = 0.
      const double drift = gap > 0 ? 2 * gap * std::cos(0.5 * gap) / std::sin(0.5 * gap) + 6 : 10.0;
      double x = gap * gap + drift * h + 2 * gap * std::sqrt(6 * h) * gauss(rng);
      double g = std::sqrt(std::abs(x));
      run.functional += s > 0 ? h / (s * s) : 0.0;
      t += h;
      y = lower ? g : two_pi - g;
      record();
      continue;
    }
    run.functional += h / (s * s);
    double next = y + std::cos(0.5 * y) / s * h + std::sqrt(6 * h) * gauss(rng);
    t += h;
    if (next >= two_pi || (!reflect && next <= 0)) {
      run.tau = t;
      y = next >= two_pi ? two_pi : 0.0;
      record();
      break;
    }
    y = reflect ? std::abs(next) : next;
    record();
  }
  run.t_end = t;
  run.y_final = y;
  return run;
}

struct ExponentPair {
  double b = 0;
  double q = 0;
  double lambda = 0;
};

inline ExponentPair q_lambda(double b) {
  if (!(b >= 0)) throw std::invalid_argument("b must be nonnegative");
  double r = std::sqrt(1 + 24 * b);
  return {b, (1 + r) / 6, (4 * b + 1 + r) / 8};
}

/// E[1{tau > t} exp(-(b/2) integral) sin(Y_t/2)^q] for the absorbed diffusion,
/// which equals exp(-lambda t) sin(x0/2)^q.
inline Estimate martingale_estimate(double x0, double b, double t, double dt, std::size_t n_samples,
                                    std::uint64_t seed, int workers = 1) {
  const ExponentPair e = q_lambda(b);
  return mc_estimate(
      seed, n_samples,
      [&](std::uint64_t s) {
        DiffusionRun run;
        run.x0 = x0;
        run.b = b;
        run.dt = dt;
        run.T = t;
        run = simulate_Y(run, s);
        if (run.tau) return 0.0;
        double phi = std::exp(-0.5 * b * run.functional);
        return phi * std::pow(std::sin(0.5 * run.y_final), e.q);
      },
      workers);
}

/// P(reflected diffusion from 0 has not reached 2 pi by t) on a grid of times,
/// every time evaluated on the same paths.
inline std::vector<Estimate> estimate_Jt(const std::vector<double>& ts, std::size_t n_samples, double dt,
                                         std::uint64_t seed, int workers = 1) {
  if (ts.empty()) return {};
  for (double t : ts)
    if (!(t >= 0)) throw std::invalid_argument("t must be nonnegative");
  const double horizon = *std::max_element(ts.begin(), ts.end());
  return mc_estimate_multi(
      seed, n_samples, ts.size(),
      [&](std::uint64_t s, double* out) {
        DiffusionRun run;
        run.x0 = 0;
        run.dt = dt;
        run.T = horizon;
        run.rule = BoundaryRule::Reflect;
        run = simulate_Y(run, s);
        for (std::size_t i = 0; i < ts.size(); ++i) out[i] = (!run.tau || *run.tau > ts[i]) ? 1.0 : 0.0;
      },
      workers);
}

inline Estimate estimate_Jt(double t, std::size_t n_samples, double dt, std::uint64_t seed, int workers = 1) {
  return estimate_Jt(std::vector<double>{t}, n_samples, dt, seed, workers).front();
}

/// Value with first and second derivative, for applying differential operators.
struct Jet2 {
  double v = 0, d1 = 0, d2 = 0;

  static Jet2 variable(double x) { return {x, 1, 0}; }
  static Jet2 constant(double c) { return {c, 0, 0}; }
};

inline Jet2 operator+(Jet2 a, Jet2 b) { return {a.v + b.v, a.d1 + b.d1, a.d2 + b.d2}; }
inline Jet2 operator-(Jet2 a, Jet2 b) { return {a.v - b.v, a.d1 - b.d1, a.d2 - b.d2}; }
inline Jet2 operator*(Jet2 a, Jet2 b) { return {a.v * b.v, a.d1 * b.v + a.v * b.d1, a.d2 * b.v + 2 * a.d1 * b.d1 + a.v * b.d2}; }
inline Jet2 operator*(double c, Jet2 a) { return {c * a.v, c * a.d1, c * a.d2}; }

/// f(a) for a scalar function with derivatives f0, f1, f2 at a.v.
inline Jet2 chain(Jet2 a, double f0, double f1, double f2) {
  return {f0, f1 * a.d1, f2 * a.d1 * a.d1 + f1 * a.d2};
}
inline Jet2 sin(Jet2 a) { return chain(a, std::sin(a.v), std::cos(a.v), -std::sin(a.v)); }
inline Jet2 cos(Jet2 a) { return chain(a, std::cos(a.v), -std::sin(a.v), -std::cos(a.v)); }
inline Jet2 pow(Jet2 a, double q) {
  return chain(a, std::pow(a.v, q), q * std::pow(a.v, q - 1), q * (q - 1) * std::pow(a.v, q - 2));
}

/// (3 d^2 + cot(x/2) d - (b/2) / sin^2(x/2)) f + lambda f at x.
template <class F>
double generator_residual(F&& f, double x, double b, double lambda) {
  Jet2 h = f(Jet2::variable(x));
  double s = std::sin(0.5 * x);
  return 3 * h.d2 + std::cos(0.5 * x) / s * h.d1 - 0.5 * b / (s * s) * h.v + lambda * h.v;
}

}  // namespace perc
