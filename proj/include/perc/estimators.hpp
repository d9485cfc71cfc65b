#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "perc/connectivity.hpp"
#include "perc/exploration.hpp"
#include "perc/lattice.hpp"
#include "perc/loewner.hpp"
#include "perc/montecarlo.hpp"
#include "perc/sampling.hpp"

namespace perc {

// Fits.

struct FitPoint {
  double scale = 0;
  double estimate = 0;
  double std_err = 0;
};

/// log(estimate) = intercept - slope * log(scale); `slope` is the decay exponent.
struct ExponentFit {
  std::vector<FitPoint> points;
  double slope = 0;
  double intercept = 0;
  double slope_stderr = 0;
};

struct LinearFit {
  double slope = 0;
  double intercept = 0;
  double slope_stderr = 0;
};

/// Weighted least squares of y on x. With `known_variance` the weights are
/// inverse variances and the slope error comes from the design alone; otherwise
/// it is scaled by the residual variance.
inline LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y,
                            const std::vector<double>& w = {}, bool known_variance = false) {
  const std::size_t n = x.size();
  if (n != y.size() || (!w.empty() && w.size() != n)) throw std::invalid_argument("fit inputs differ in length");
  if (n < 2) throw std::invalid_argument("fit needs at least two points");
  auto wt = [&](std::size_t i) { return w.empty() ? 1.0 : w[i]; };
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sw += wt(i);
    sx += wt(i) * x[i];
    sy += wt(i) * y[i];
  }
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += wt(i) * (x[i] - mx) * (x[i] - mx);
    sxy += wt(i) * (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0) throw std::invalid_argument("fit needs at least two distinct abscissae");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (known_variance) {
    f.slope_stderr = std::sqrt(1.0 / sxx);
  } else if (n > 2) {
    double rss = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double r = y[i] - f.intercept - f.slope * x[i];
      rss += wt(i) * r * r;
    }
    f.slope_stderr = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
  }
  return f;
}

/// Log-log fit over points with scale >= min_scale, weighted by the inverse
/// variance of log(estimate). Equal weights are used when some error is zero.
inline ExponentFit exponent_fit(const std::vector<FitPoint>& points, double min_scale = 0) {
  ExponentFit out;
  for (const auto& p : points) {
    if (!(p.estimate > 0)) throw std::invalid_argument("exponent fit needs positive estimates");
    if (!(p.scale > 0)) throw std::invalid_argument("exponent fit needs positive scales");
    if (p.scale >= min_scale) out.points.push_back(p);
  }
  if (out.points.size() < 3) throw std::invalid_argument("exponent fit needs at least 3 points");
  std::vector<double> x, y, w;
  bool weighted = true;
  for (const auto& p : out.points) {
    x.push_back(std::log(p.scale));
    y.push_back(std::log(p.estimate));
    double s = p.std_err / p.estimate;
    if (!(s > 0)) weighted = false;
    w.push_back(s > 0 ? 1.0 / (s * s) : 1.0);
  }
  if (!weighted) w.assign(w.size(), 1.0);
  LinearFit f = linear_fit(x, y, w, weighted);
  out.slope = -f.slope;
  out.intercept = f.intercept;
  out.slope_stderr = f.slope_stderr;
  return out;
}

/// One-sided Wilson score lower bound for a proportion.
inline double wilson_lower(double phat, std::size_t n, double z = 2.326) {
  if (n == 0) return 0;
  const double nn = static_cast<double>(n), z2 = z * z;
  double centre = phat + z2 / (2 * nn);
  double half = z * std::sqrt(phat * (1 - phat) / nn + z2 / (4 * nn * nn));
  return (centre - half) / (1 + z2 / nn);
}

// Lazy crossing kernels on Parallelogram(a, b).

namespace kernels {

class GridScratch {
 public:
  void reset(int a, int b) {
    if (a != a_ || b != b_) {
      a_ = a;
      b_ = b;
      stamp_.assign(static_cast<std::size_t>(a + 1) * (b + 1), 0);
      cur_ = 0;
    }
    if (++cur_ == 0) {
      std::fill(stamp_.begin(), stamp_.end(), 0);
      cur_ = 1;
    }
    queue.clear();
  }
  bool visit(Site s) {
    auto& m = stamp_[static_cast<std::size_t>(s.v) * (a_ + 1) + s.u];
    if (m == cur_) return false;
    m = cur_;
    return true;
  }
  std::vector<Site> queue;

 private:
  int a_ = -1, b_ = -1;
  std::uint32_t cur_ = 0;
  std::vector<std::uint32_t> stamp_;
};

/// Path of colour `want` from the side u = 0 to u = a (`horizontal`) or from
/// v = b to v = 0 inside Parallelogram(a, b).
template <class Black>
bool parallelogram_crossing(int a, int b, bool horizontal, bool want, Black&& black, GridScratch& sc) {
  sc.reset(a, b);
  auto inside = [&](Site s) { return s.u >= 0 && s.u <= a && s.v >= 0 && s.v <= b; };
  auto target = [&](Site s) { return horizontal ? s.u == a : s.v == 0; };
  const int len = horizontal ? b : a;
  for (int i = 0; i <= len; ++i) {
    Site s = horizontal ? Site{0, i} : Site{i, b};
    if (black(s) != want) continue;
    if (target(s)) return true;
    sc.visit(s);
    sc.queue.push_back(s);
  }
  for (std::size_t h = 0; h < sc.queue.size(); ++h) {
    for (auto t : neighbors(sc.queue[h])) {
      if (!inside(t) || black(t) != want || !sc.visit(t)) continue;
      if (target(t)) return true;
      sc.queue.push_back(t);
    }
  }
  return false;
}

/// Black left-right crossing of Parallelogram(a, b); searched through its
/// complement (a white top-bottom crossing) when p >= 1/2.
template <class Black>
bool black_horizontal_crossing(int a, int b, double p, Black&& black, GridScratch& sc) {
  if (p >= 0.5) return !parallelogram_crossing(a, b, false, false, black, sc);
  return parallelogram_crossing(a, b, true, true, black, sc);
}

}  // namespace kernels

inline kernels::GridScratch& grid_scratch() {
  thread_local kernels::GridScratch sc;
  return sc;
}

inline kernels::Scratch& hex_scratch() {
  thread_local kernels::Scratch sc;
  return sc;
}

inline void check_samples(std::size_t n) {
  if (n == 0) throw std::invalid_argument("n_samples must be positive");
}

/// P(black left-right crossing of Parallelogram(a, b)).
inline Estimate crossing_probability(int a, int b, double p, std::size_t n_samples, std::uint64_t seed,
                                     int workers = 1) {
  check_probability(p);
  check_samples(n_samples);
  if (a < 0 || b < 0) throw std::invalid_argument("parallelogram sides must be nonnegative");
  return mc_estimate(
      seed, n_samples,
      [&](std::uint64_t s) {
        auto black = [&](Site q) { return site_color(s, p, q) == Color::Black; };
        return kernels::black_horizontal_crossing(a, b, p, black, grid_scratch()) ? 1.0 : 0.0;
      },
      workers);
}

/// h_p(n): crossing of Parallelogram(2n, n).
inline Estimate h_crossing(int n, double p, std::size_t n_samples, std::uint64_t seed, int workers = 1) {
  return crossing_probability(2 * n, n, p, n_samples, seed, workers);
}

// Arm events.

enum class ArmEvent {
  OneArm,         // black path from the origin to distance n
  FourArm,        // four alternating arms from the origin's neighbours to distance n
  TwoArm,         // two arms of different colours from the neighbours to distance n
  HalfPlaneTwo,   // w_n
  HalfPlaneThree, // v_n
  FiveArm,        // u_m
};

inline const char* arm_event_name(ArmEvent e) {
  switch (e) {
    case ArmEvent::OneArm: return "one_arm";
    case ArmEvent::FourArm: return "four_arm";
    case ArmEvent::TwoArm: return "two_arm";
    case ArmEvent::HalfPlaneTwo: return "half_plane_two_arm";
    case ArmEvent::HalfPlaneThree: return "half_plane_three_arm";
    case ArmEvent::FiveArm: return "five_arm";
  }
  return "?";
}

inline ArmEvent parse_arm_event(const std::string& s) {
  for (auto e : {ArmEvent::OneArm, ArmEvent::FourArm, ArmEvent::TwoArm, ArmEvent::HalfPlaneTwo,
                 ArmEvent::HalfPlaneThree, ArmEvent::FiveArm})
    if (s == arm_event_name(e)) return e;
  throw std::invalid_argument("unknown arm event: " + s);
}

/// Indicator of an arm event around the origin for one colouring.
template <class Black>
bool arm_event_holds(ArmEvent e, int n, Black&& black) {
  const Site o{0, 0};
  switch (e) {
    case ArmEvent::OneArm: return kernels::one_arm(o, n, black, hex_scratch());
    case ArmEvent::FourArm: return kernels::annulus_interfaces(o, 1, n, black) >= 4;
    case ArmEvent::TwoArm: return kernels::annulus_interfaces(o, 1, n, black) >= 2;
    case ArmEvent::HalfPlaneTwo: return kernels::n_good(o, n, black, hex_scratch());
    case ArmEvent::HalfPlaneThree: return kernels::n_Good(o, n, black, hex_scratch());
    case ArmEvent::FiveArm: return kernels::five_arm(o, n, black);
  }
  return false;
}

inline void check_arm_scale(ArmEvent e, int n) {
  int min = (e == ArmEvent::OneArm || e == ArmEvent::HalfPlaneTwo || e == ArmEvent::HalfPlaneThree) ? 0 : 2;
  if (n < min) throw std::invalid_argument(std::string(arm_event_name(e)) + " needs a larger scale");
}

inline Estimate arm_probability(ArmEvent e, int n, double p, std::size_t n_samples, std::uint64_t seed,
                                int workers = 1) {
  check_probability(p);
  check_samples(n_samples);
  check_arm_scale(e, n);
  return mc_estimate(
      seed, n_samples,
      [&](std::uint64_t s) {
        auto black = [&](Site q) { return site_color(s, p, q) == Color::Black; };
        return arm_event_holds(e, n, black) ? 1.0 : 0.0;
      },
      workers);
}

/// P(path of the given colour joining the rings at distances r1 and r2 around the origin).
inline Estimate annulus_arm_probability(int r1, int r2, bool black_arm, double p, std::size_t n_samples,
                                        std::uint64_t seed, int workers = 1) {
  check_probability(p);
  check_samples(n_samples);
  if (r1 < 0 || r2 < r1) throw std::invalid_argument("annulus radii must satisfy 0 <= r1 <= r2");
  return mc_estimate(
      seed, n_samples,
      [&](std::uint64_t s) {
        auto black = [&](Site q) { return site_color(s, p, q) == Color::Black; };
        return kernels::annulus_arm(Site{0, 0}, r1, r2, black_arm, black, hex_scratch()) ? 1.0 : 0.0;
      },
      workers);
}

/// P(at least j interfaces cross the annulus {n1 <= d <= n2} around the origin).
inline Estimate interface_arm_probability(int n1, int n2, int j, double p, std::size_t n_samples,
                                          std::uint64_t seed, int workers = 1) {
  check_probability(p);
  check_samples(n_samples);
  if (n1 < 1 || n2 < n1) throw std::invalid_argument("annulus radii must satisfy 1 <= n1 <= n2");
  return mc_estimate(
      seed, n_samples,
      [&](std::uint64_t s) {
        auto black = [&](Site q) { return site_color(s, p, q) == Color::Black; };
        return kernels::annulus_interfaces(Site{0, 0}, n1, n2, black) >= j ? 1.0 : 0.0;
      },
      workers);
}

inline std::vector<FitPoint> arm_curve(ArmEvent e, const std::vector<int>& sizes, double p,
                                       const std::vector<std::size_t>& samples, std::uint64_t seed,
                                       int workers = 1) {
  if (samples.size() != sizes.size() && samples.size() != 1)
    throw std::invalid_argument("sample counts must match sizes");
  std::vector<FitPoint> pts;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    std::size_t ns = samples.size() == 1 ? samples[0] : samples[i];
    Estimate est = arm_probability(e, sizes[i], p, ns, hash_combine(seed, static_cast<std::uint64_t>(sizes[i])), workers);
    pts.push_back({static_cast<double>(sizes[i]), est.mean, est.std_err});
  }
  return pts;
}

// Near-critical pipeline.

struct NearCriticalResult {
  double p = 0;
  double eps = 0;
  int L = 0;
  Estimate h_at_L;
  Estimate one_arm_at_L;  // at p = 1/2
  std::vector<std::pair<int, Estimate>> tested;
};

/// Smallest n whose 99% lower confidence bound of h_p(n) reaches 1 - eps, by
/// doubling from n = 1 and then bisection. Every n uses the same sample seeds.
inline NearCriticalResult correlation_length(double p, double eps, std::uint64_t seed, int budget,
                                             std::size_t n_samples = 2000, std::size_t one_arm_samples = 2000,
                                             int workers = 1) {
  if (!(p > 0.5 && p <= 1)) throw std::invalid_argument("correlation_length needs p in (1/2, 1]");
  if (!(eps > 0 && eps < 0.5)) throw std::invalid_argument("eps must lie in (0, 1/2)");
  if (budget < 1) throw std::invalid_argument("budget must be positive");
  NearCriticalResult r;
  r.p = p;
  r.eps = eps;
  std::vector<std::pair<int, Estimate>> cache;
  auto eval = [&](int n) {
    for (auto& [m, e] : cache)
      if (m == n) return e;
    Estimate e = h_crossing(n, p, n_samples, seed, workers);
    cache.push_back({n, e});
    r.tested.push_back({n, e});
    return e;
  };
  auto pass = [&](int n) { return wilson_lower(eval(n).mean, n_samples) >= 1 - eps; };
  int lo = 0, hi = 1;
  while (!pass(hi)) {
    lo = hi;
    if (hi >= budget) throw std::runtime_error("correlation_length budget exhausted before bracketing");
    hi = std::min(2 * hi, budget);
  }
  while (hi - lo > 1) {
    int mid = lo + (hi - lo) / 2;
    if (pass(mid)) hi = mid;
    else lo = mid;
  }
  r.L = hi;
  r.h_at_L = eval(hi);
  r.one_arm_at_L = arm_probability(ArmEvent::OneArm, hi, 0.5, one_arm_samples, hash_combine(seed, 0x1a5f), workers);
  return r;
}

namespace kernels {

/// Reusable state for density_to_boundary.
struct DensityScratch {
  std::vector<int> owner;
  std::vector<std::size_t> touched;
  std::vector<std::vector<Site>> buckets;
  int radius = -1;
};

/// Fraction of Lambda_N sites joined to the ring at distance M by a black path
/// inside Lambda_M. Each search pops the farthest site first, so a successful
/// search stops after a thin exploration; sites keep the index of the search
/// that reached them, and a finished search that failed has exhausted its cluster.
template <class Black>
double density_to_boundary(int N, int M, Black&& black, DensityScratch& ds) {
  const int side = 2 * M + 1;
  if (ds.radius != M) {
    ds.radius = M;
    ds.owner.assign(static_cast<std::size_t>(side) * side, -1);
    ds.touched.clear();
  }
  for (auto k : ds.touched) ds.owner[k] = -1;
  ds.touched.clear();
  ds.buckets.resize(static_cast<std::size_t>(M) + 1);
  auto key = [&](Site s) { return static_cast<std::size_t>(s.v + M) * side + (s.u + M); };
  auto claim = [&](Site s, int id) {
    std::size_t k = key(s);
    ds.owner[k] = id;
    ds.touched.push_back(k);
  };
  std::vector<char> result;
  std::size_t hits = 0, total = 0;
  for (int r = 0; r <= N; ++r)
    for (auto x : hexagon_ring(r)) {
      ++total;
      if (!black(x)) continue;
      int prior = ds.owner[key(x)];
      if (prior >= 0) {
        hits += result[prior];
        continue;
      }
      const int id = static_cast<int>(result.size());
      for (auto& b : ds.buckets) b.clear();
      claim(x, id);
      int top = r;
      ds.buckets[top].push_back(x);
      bool ok = false;
      while (top >= 0 && !ok) {
        if (ds.buckets[top].empty()) {
          --top;
          continue;
        }
        Site s = ds.buckets[top].back();
        ds.buckets[top].pop_back();
        if (top == M) {
          ok = true;
          break;
        }
        for (auto t : neighbors(s)) {
          int d = graph_norm(t);
          if (d > M || !black(t)) continue;
          int ow = ds.owner[key(t)];
          if (ow == id) continue;
          if (ow >= 0) {
            ok = true;  // an earlier search reached here, so it succeeded
            break;
          }
          claim(t, id);
          ds.buckets[d].push_back(t);
          top = std::max(top, d);
        }
      }
      result.push_back(ok ? 1 : 0);
      hits += ok ? 1 : 0;
    }
  return static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace kernels

/// theta(p) proxy: expected fraction of Lambda_N joined to the ring at distance M.
inline Estimate theta_density(double p, int N, int M, std::size_t n_samples, std::uint64_t seed, int workers = 1) {
  check_probability(p);
  check_samples(n_samples);
  if (N < 0 || M < 4 * N || M < 1) throw std::invalid_argument("theta_density needs M >= 4N");
  return mc_estimate(
      seed, n_samples,
      [&](std::uint64_t s) {
        thread_local kernels::DensityScratch ds;
        auto black = [&](Site q) { return site_color(s, p, q) == Color::Black; };
        return kernels::density_to_boundary(N, M, black, ds);
      },
      workers);
}

inline std::vector<Color> parallelogram_colors(const RealizedRegion& rr, double p, std::uint64_t seed) {
  std::vector<Color> c(rr.size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = site_color(seed, p, rr.sites[i]);
  return c;
}

/// Expected number of pivotal sites for h_p(n).
inline Estimate russo_derivative(int n, double p, std::size_t n_samples, std::uint64_t seed, int workers = 1) {
  check_probability(p);
  check_samples(n_samples);
  if (n < 2) throw std::invalid_argument("russo_derivative needs n >= 2");
  auto rr = std::make_shared<const RealizedRegion>(realize(Region::parallelogram(2 * n, n)));
  return mc_estimate(
      seed, n_samples,
      [&](std::uint64_t s) {
        auto piv = crossing_pivotals(*rr, parallelogram_colors(*rr, p, s));
        return static_cast<double>(std::count(piv.begin(), piv.end(), 1));
      },
      workers);
}

/// (h_{p+delta}(n) - h_{p-delta}(n)) / (2 delta) on coupled samples.
inline Estimate finite_difference_crossing(int n, double p, double delta, std::size_t n_samples, std::uint64_t seed,
                                           int workers = 1) {
  check_probability(p - delta);
  check_probability(p + delta);
  check_samples(n_samples);
  if (!(delta > 0)) throw std::invalid_argument("delta must be positive");
  return mc_estimate(
      seed, n_samples,
      [&](std::uint64_t s) {
        auto& sc = grid_scratch();
        auto hi = [&](Site q) { return site_color(s, p + delta, q) == Color::Black; };
        auto lo = [&](Site q) { return site_color(s, p - delta, q) == Color::Black; };
        double up = kernels::parallelogram_crossing(2 * n, n, true, true, hi, sc) ? 1.0 : 0.0;
        double down = kernels::parallelogram_crossing(2 * n, n, true, true, lo, sc) ? 1.0 : 0.0;
        return (up - down) / (2 * delta);
      },
      workers);
}

// Driving function of the exploration interface.

struct SleSignature {
  int n = 0;
  double T = 0;
  std::size_t n_paths = 0;
  std::vector<double> grid_t;
  std::vector<Estimate> mean_w;   // E[W(t_i)]
  std::vector<double> var_w;      // sample variance of W(t_i)
  double var_slope = 0;           // least squares slope of Var(W_t) on t, with intercept
  double var_intercept = 0;
  double var_slope_stderr = 0;
  Estimate w_T;
  double drift_z = 0;             // mean(W_T) / stderr
  Estimate qv;                    // realized sum of (Delta W)^2 up to T, divided by T
  Estimate steps;                 // exploration steps used
};

/// Zipper driving of interface points scaled by 1/n, started at the midpoint of
/// the bottom edge between (n-1, 0) white and (n, 0) black in Parallelogram(2n, n),
/// stopped at half-plane capacity T.
inline void interface_driving(const Configuration& c, int n, double T, DrivingExtractor& ex, std::size_t& steps) {
  const Site bs{n, 0}, ws{n - 1, 0};
  const cplx origin = 0.5 * (to_plane(bs) + to_plane(ws));
  const double scale = 1.0 / n;
  std::size_t pushed = 0;
  auto path = chordal_exploration(c, bs, ws, "", [&](const ExplorationPath& p) {
    for (; pushed + 1 < p.vertices.size(); ++pushed) ex.push((face_point(p.vertices[pushed + 1]) - origin) * scale);
    return ex.capacity() >= T;
  });
  steps = path.length();
  if (ex.capacity() < T) throw std::runtime_error("interface left the domain before reaching capacity T");
}

inline SleSignature sle_signature(int n, std::size_t n_paths, double T, std::uint64_t seed, int grid = 10,
                                  int workers = 1) {
  if (n < 2 || !(T > 0) || grid < 2) throw std::invalid_argument("sle_signature needs n >= 2, T > 0, grid >= 2");
  check_samples(n_paths);
  auto base = realize(Region::parallelogram(2 * n, n));
  auto split = std::make_shared<const RealizedRegion>(base.split(Site{n, 0}, Site{0, n}));
  SleSignature out;
  out.n = n;
  out.T = T;
  out.n_paths = n_paths;
  for (int i = 1; i <= grid; ++i) out.grid_t.push_back(T * i / grid);
  const std::size_t k = out.grid_t.size();
  auto est = mc_estimate_multi(
      seed, n_paths, 2 * k + 2,
      [&](std::uint64_t s, double* o) {
        Configuration c =
            Configuration(split, 0.5, s).with_boundary({{"black", Color::Black}, {"white", Color::White}});
        DrivingExtractor ex(0.0);
        std::size_t steps = 0;
        interface_driving(c, n, T, ex, steps);
        const auto& d = ex.driving();
        std::size_t j = 0;
        double qv = 0;
        for (std::size_t m = 1; m < d.size() && d.times[m - 1] < T; ++m) qv += (d.values[m] - d.values[m - 1]) * (d.values[m] - d.values[m - 1]);
        for (std::size_t i = 0; i < k; ++i) {
          while (d.times[j] < out.grid_t[i]) ++j;
          o[i] = d.values[j];
          o[k + i] = d.values[j] * d.values[j];
        }
        o[2 * k] = qv / T;
        o[2 * k + 1] = static_cast<double>(steps);
      },
      workers);
  const double nn = static_cast<double>(n_paths);
  for (std::size_t i = 0; i < k; ++i) {
    out.mean_w.push_back(est[i]);
    double m = est[i].mean;
    out.var_w.push_back(n_paths > 1 ? (est[k + i].mean - m * m) * nn / (nn - 1) : 0.0);
  }
  LinearFit f = linear_fit(out.grid_t, out.var_w);
  out.var_slope = f.slope;
  out.var_intercept = f.intercept;
  out.var_slope_stderr = f.slope_stderr;
  out.w_T = est[k - 1];
  out.drift_z = out.w_T.std_err > 0 ? out.w_T.mean / out.w_T.std_err : 0.0;
  out.qv = est[2 * k];
  out.steps = est[2 * k + 1];
  return out;
}

}  // namespace perc
