#pragma once

#include <Eigen/Eigenvalues>

#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "perc/connectivity.hpp"
#include "perc/exploration.hpp"
#include "perc/lattice.hpp"
#include "perc/montecarlo.hpp"
#include "perc/sampling.hpp"

namespace perc {

/// Corners of the unit equilateral triangle A = 0, B = 1, C = e^{i pi/3},
/// labelled 1, tau, tau^2.
enum class Corner { A = 0, B = 1, C = 2 };

inline const cplx kCornerA{0.0, 0.0};
inline const cplx kCornerB{1.0, 0.0};
inline const cplx kCornerC{0.5, 0.5 * kSqrt3};

inline double dist_AB(cplx z) { return z.imag(); }
inline double dist_BC(cplx z) { return 0.5 * kSqrt3 * (1.0 - z.real()) - 0.5 * z.imag(); }
inline double dist_CA(cplx z) { return 0.5 * kSqrt3 * z.real() - 0.5 * z.imag(); }

inline bool in_closed_triangle(cplx z, double tol = 1e-12) {
  return dist_AB(z) >= -tol && dist_BC(z) >= -tol && dist_CA(z) >= -tol;
}

/// Continuum limit of H_j: 2/sqrt(3) times the distance to the side opposite A_j.
inline double cardy_predict(cplx z, Corner j) {
  if (!in_closed_triangle(z)) throw std::invalid_argument("cardy_predict: point outside the triangle");
  double d = j == Corner::A ? dist_BC(z) : j == Corner::B ? dist_CA(z) : dist_AB(z);
  return std::clamp(2.0 * d / kSqrt3, 0.0, 1.0);
}

/// Closed sides of the lattice triangle, by index: 0 = AB, 1 = BC, 2 = CA.
inline bool on_triangle_side(int n, Site s, int side) {
  switch (side) {
    case 0: return s.v == 0;
    case 1: return s.u + s.v == n;
    default: return s.u == 0;
  }
}

/// Sides adjacent to a corner, then the opposite side.
inline std::array<int, 3> corner_sides(Corner j) {
  switch (j) {
    case Corner::A: return {0, 2, 1};
    case Corner::B: return {0, 1, 2};
    default: return {1, 2, 0};
  }
}

inline bool triangle_face(int n, Site sum) {
  Region t = Region::triangle(n);
  for (auto q : face_corners(sum))
    if (!t.contains(q)) return false;
  return true;
}

inline Site up_face(int u, int v) { return {3 * u + 1, 3 * v + 1}; }
inline Site down_face(int u, int v) { return {3 * u + 2, 3 * v + 2}; }

struct SnappedFace {
  Site face;
  double distance = 0;  // in units of the unit triangle
};

/// Nearest face of the side-n triangle to a point of the unit triangle.
inline SnappedFace snap_to_face(cplx z, int n) {
  if (!in_closed_triangle(z, 1e-9)) throw std::invalid_argument("point outside the triangle");
  SnappedFace best{{0, 0}, 1e300};
  for (int v = 0; v < n; ++v)
    for (int u = 0; u + v < n; ++u)
      for (Site f : {up_face(u, v), down_face(u, v)}) {
        if (!triangle_face(n, f)) continue;
        double d = std::abs(face_point(f) / static_cast<double>(n) - z);
        if (d < best.distance) best = {f, d};
      }
  return best;
}

/// Evaluates the events E_j(z) on one colouring of the side-n triangle.
///
/// A black path separates z when z cannot reach the opposite side through faces
/// without crossing one of its edges. The union of these regions over all simple
/// black paths between the sides adjacent to A_j is cut off by the black runs on
/// the interface traced along a collar that is white beyond the opposite side and
/// black elsewhere. Runs belonging to clusters touching both adjacent sides are
/// loop-erased and their edges blocked; E_j(z) holds iff z is then cut off.
class EjDetector {
 public:
  explicit EjDetector(int n) : n_(n), rr_(std::make_shared<const RealizedRegion>(realize(Region::triangle(n)))) {
    const int g = 3 * n + 3;
    for (auto& r : reach_) r.assign(static_cast<std::size_t>(g) * g, 0);
    blocked_.assign(rr_->size(), 0);
    pos_.assign(rr_->size(), -1);
  }

  int n() const { return n_; }
  const std::shared_ptr<const RealizedRegion>& region() const { return rr_; }

  void set_colors(const std::vector<Color>& colors) {
    colors_ = colors;
    labels_ = detail::label_clusters(*rr_, colors_, Color::Black);
    for (int k = 0; k < 3; ++k) {
      touch_[k].assign(labels_.clusters.size(), 0);
      for (std::size_t i = 0; i < rr_->size(); ++i)
        if (labels_.label[i] >= 0 && on_triangle_side(n_, rr_->sites[i], k)) touch_[k][labels_.label[i]] = 1;
    }
    for (int j = 0; j < 3; ++j) cut_off(j);
  }

  bool holds(Site z, Corner j) const {
    if (!triangle_face(n_, z)) throw std::invalid_argument("detect_Ej: z is not a face of the triangle");
    return !reach_[static_cast<int>(j)][key(z)];
  }

 private:
  std::size_t key(Site f) const { return static_cast<std::size_t>(f.v) * (3 * n_ + 3) + f.u; }
  bool real(Site s) const { return s.u >= 0 && s.v >= 0 && s.u + s.v <= n_; }
  bool in_collar(Site s) const { return s.u >= -1 && s.v >= -1 && s.u + s.v <= n_ + 1; }
  bool edge_blocked(Site a, Site b) const {
    return (blocked_[rr_->index(a)] >> direction_index(a, b)) & 1;
  }

  void cut_off(int j) {
    const auto sides = corner_sides(static_cast<Corner>(j));
    auto beyond_opposite = [&](Site s) {
      return sides[2] == 0 ? s.v == -1 : sides[2] == 1 ? s.u + s.v == n_ + 1 : s.u == -1;
    };
    auto black = [&](Site s) {
      return real(s) ? colors_[rr_->index(s)] == Color::Black : !beyond_opposite(s);
    };

    // Start edge on the outer rim of the collar with black on the right.
    Site s{}, t{}, prev{};
    bool found = false;
    for (int v = -1; v <= n_ + 2 && !found; ++v)
      for (int u = -1; u <= n_ + 2 && !found; ++u) {
        Site a{u, v};
        if (!in_collar(a) || real(a) || !black(a)) continue;
        for (int k = 0; k < 6 && !found; ++k) {
          Site b = a + kDirections[k];
          if (!in_collar(b) || black(b)) continue;
          for (int m = 0; m < 6 && !found; ++m) {
            Site o = a + kDirections[m];
            if (in_collar(o) || !adjacent(o, b)) continue;
            cplx p0 = face_point(face_key(a, b, o)), p1 = face_point(face_key(a, b, a + b - o));
            if (detail::cross(p1 - p0, to_plane(a) - p0) < 0) {
              s = a;
              t = b;
              prev = o;
              found = true;
            }
          }
        }
      }
    if (!found) throw std::logic_error("EjDetector: no collar start edge");

    std::vector<Site> right{s};
    const std::size_t limit = 8 * (rr_->size() + 3 * n_ + 9);
    for (std::size_t step = 0;; ++step) {
      if (step > limit) throw std::logic_error("EjDetector: interface did not terminate");
      Site w = s + t - prev;
      if (!in_collar(w)) break;
      if (black(w)) {
        prev = s;
        s = w;
        right.push_back(s);
      } else {
        prev = t;
        t = w;
      }
    }

    std::fill(blocked_.begin(), blocked_.end(), 0);
    std::vector<Site> path;
    auto flush = [&]() {
      for (std::size_t k = 0; k + 1 < path.size(); ++k) {
        int a = rr_->index(path[k]), b = rr_->index(path[k + 1]);
        int d = direction_index(path[k], path[k + 1]);
        blocked_[a] |= 1u << d;
        blocked_[b] |= 1u << ((d + 3) % 6);
      }
      for (auto q : path) pos_[rr_->index(q)] = -1;
      path.clear();
    };
    bool keep = false;
    for (std::size_t k = 0; k < right.size(); ++k) {
      Site q = right[k];
      if (!real(q)) {
        flush();
        keep = false;
        continue;
      }
      int i = rr_->index(q);
      if (path.empty()) {
        int l = labels_.label[i];
        keep = l >= 0 && touch_[sides[0]][l] && touch_[sides[1]][l];
      }
      if (!keep) continue;
      if (pos_[i] >= 0) {
        while (static_cast<int>(path.size()) > pos_[i] + 1) {
          pos_[rr_->index(path.back())] = -1;
          path.pop_back();
        }
      } else {
        pos_[i] = static_cast<int>(path.size());
        path.push_back(q);
      }
    }
    flush();

    // Faces reachable from open edges of the opposite side.
    auto& reach = reach_[j];
    std::fill(reach.begin(), reach.end(), 0);
    std::vector<Site> queue;
    auto visit = [&](Site f) {
      if (!triangle_face(n_, f) || reach[key(f)]) return;
      reach[key(f)] = 1;
      queue.push_back(f);
    };
    for (auto a : rr_->sites) {
      if (!on_triangle_side(n_, a, sides[2])) continue;
      for (int k = 0; k < 6; ++k) {
        Site b = a + kDirections[k];
        if (!real(b) || !on_triangle_side(n_, b, sides[2]) || edge_blocked(a, b)) continue;
        visit(face_key(a, b, a + kDirections[(k + 1) % 6]));
        visit(face_key(a, b, a + kDirections[(k + 5) % 6]));
      }
    }
    for (std::size_t h = 0; h < queue.size(); ++h) {
      auto cs = face_corners(queue[h]);
      for (int e = 0; e < 3; ++e) {
        Site a = cs[e], b = cs[(e + 1) % 3], o = cs[(e + 2) % 3];
        if (!edge_blocked(a, b)) visit(face_key(a, b, a + b - o));
      }
    }
  }

  int n_;
  std::shared_ptr<const RealizedRegion> rr_;
  std::vector<Color> colors_;
  ClusterLabeling labels_;
  std::array<std::vector<char>, 3> touch_;
  std::array<std::vector<char>, 3> reach_;
  std::vector<std::uint8_t> blocked_;
  std::vector<int> pos_;
};

inline bool detect_Ej(const Configuration& c, Site z, Corner j) {
  const auto& reg = c.region().region;
  if (reg.kind != RegionKind::Triangle) throw std::invalid_argument("detect_Ej needs a triangle");
  EjDetector det(reg.a);
  if (c.region().size() != det.region()->size()) throw std::invalid_argument("triangle mismatch");
  det.set_colors(c.materialize());
  return det.holds(z, j);
}

/// Image of a site under the rotation A -> B -> C -> A of the side-n triangle.
inline Site rotate_triangle(int n, Site s) { return {n - s.u - s.v, s.u}; }

inline Site rotate_face(int n, Site f) {
  auto cs = face_corners(f);
  return face_key(rotate_triangle(n, cs[0]), rotate_triangle(n, cs[1]), rotate_triangle(n, cs[2]));
}

inline Corner rotate_corner(Corner j) { return static_cast<Corner>((static_cast<int>(j) + 1) % 3); }

/// Colours of a configuration indexed by the triangle's site order.
inline std::vector<Color> triangle_colors(const RealizedRegion& rr, double p, std::uint64_t seed) {
  std::vector<Color> colors(rr.size());
  for (std::size_t i = 0; i < rr.size(); ++i) colors[i] = site_color(seed, p, rr.sites[i]);
  return colors;
}

struct HjEstimate {
  Estimate estimate;
  Site face;
  double snap_distance = 0;
};

inline HjEstimate estimate_Hj(cplx z, Corner j, int n, double p, std::size_t n_samples, std::uint64_t seed,
                              int workers = 1) {
  check_probability(p);
  auto snap = snap_to_face(z, n);
  auto rr = realize(Region::triangle(n));
  auto est = mc_estimate(
      seed, n_samples,
      [&](std::uint64_t s) {
        thread_local std::unique_ptr<EjDetector> det;
        if (!det || det->n() != n) det = std::make_unique<EjDetector>(n);
        det->set_colors(triangle_colors(rr, p, s));
        return det->holds(snap.face, j) ? 1.0 : 0.0;
      },
      workers);
  return {est, snap.face, snap.distance};
}

/// The down-face z with its neighbours z_1, z_2, z_3 (towards A, B, C) and the
/// opposite corners s_1, s_2, s_3.
struct ColorSwitchFaces {
  Site z;
  std::array<Site, 3> zj;
  std::array<Site, 3> sj;
};

inline ColorSwitchFaces color_switch_faces(int n, Site z) {
  if (!triangle_face(n, z)) throw std::invalid_argument("z is not a face of the triangle");
  if (((z.u % 3) + 3) % 3 != 2) throw std::invalid_argument("color switching needs a down-face");
  auto cs = face_corners(z);  // bottom, top left, top right
  ColorSwitchFaces out;
  out.z = z;
  out.sj = {cs[2], cs[1], cs[0]};
  for (int k = 0; k < 3; ++k) {
    // z_k lies across the edge of z opposite to s_k.
    std::array<Site, 2> e{};
    int m = 0;
    for (auto q : cs)
      if (!(q == out.sj[k])) e[m++] = q;
    out.zj[k] = face_key(e[0], e[1], e[0] + e[1] - out.sj[k]);
    if (!triangle_face(n, out.zj[k])) throw std::invalid_argument("z too close to the boundary");
  }
  return out;
}

/// Indicators of E_j(z_j) \ E_j(z) for the three corners on one colouring.
inline std::array<bool, 3> color_switch_events(EjDetector& det, const ColorSwitchFaces& f) {
  std::array<bool, 3> out{};
  for (int k = 0; k < 3; ++k) {
    Corner j = static_cast<Corner>(k);
    out[k] = det.holds(f.zj[k], j) && !det.holds(f.z, j);
  }
  return out;
}

/// Exact counts of the three events over all 2^|sites| colourings of a small triangle.
inline std::array<std::uint64_t, 3> color_switch_exact(int n, Site z) {
  EjDetector det(n);
  auto f = color_switch_faces(n, z);
  const std::size_t m = det.region()->size();
  if (m > 24) throw std::invalid_argument("triangle too large for enumeration");
  std::array<std::uint64_t, 3> counts{};
  std::vector<Color> colors(m);
  for (std::uint64_t bits = 0; bits < (1ULL << m); ++bits) {
    for (std::size_t i = 0; i < m; ++i) colors[i] = (bits >> i) & 1 ? Color::Black : Color::White;
    det.set_colors(colors);
    auto ev = color_switch_events(det, f);
    for (int k = 0; k < 3; ++k) counts[k] += ev[k];
  }
  return counts;
}

inline std::array<Estimate, 3> color_switch_check(Site z, int n, std::size_t n_samples, std::uint64_t seed,
                                                  int workers = 1, double p = 0.5) {
  auto f = color_switch_faces(n, z);
  auto rr = realize(Region::triangle(n));
  auto est = mc_estimate_multi(
      seed, n_samples, 3,
      [&](std::uint64_t s, double* out) {
        thread_local std::unique_ptr<EjDetector> det;
        if (!det || det->n() != n) det = std::make_unique<EjDetector>(n);
        det->set_colors(triangle_colors(rr, p, s));
        auto ev = color_switch_events(*det, f);
        for (int k = 0; k < 3; ++k) out[k] = ev[k];
      },
      workers);
  return {est[0], est[1], est[2]};
}

/// Black crossing from AB to the part [C, X] of CA, for X at CX = f CA. One search
/// per sample serves every fraction.
inline std::vector<Estimate> cardy_crossing(const std::vector<double>& fractions, int n, double p,
                                            std::size_t n_samples, std::uint64_t seed, int workers = 1) {
  for (double f : fractions)
    if (!(f >= 0 && f <= 1)) throw std::invalid_argument("fraction must lie in [0,1]");
  auto rr = realize(Region::triangle(n));
  return mc_estimate_multi(
      seed, n_samples, fractions.size(),
      [&](std::uint64_t s, double* out) {
        // Highest site of CA reached by a black path from AB.
        std::vector<char> seen(rr.size(), 0);
        std::vector<int> queue;
        for (int u = 0; u <= n; ++u) {
          int i = rr.index({u, 0});
          if (site_color(s, p, {u, 0}) == Color::Black) {
            seen[i] = 1;
            queue.push_back(i);
          }
        }
        int top = -1;
        for (std::size_t h = 0; h < queue.size(); ++h) {
          Site q = rr.sites[queue[h]];
          if (q.u == 0) top = std::max(top, q.v);
          for (auto t : neighbors(q)) {
            int j = rr.index(t);
            if (j >= 0 && !seen[j] && site_color(s, p, t) == Color::Black) {
              seen[j] = 1;
              queue.push_back(j);
            }
          }
        }
        for (std::size_t k = 0; k < fractions.size(); ++k) {
          int vx = n - static_cast<int>(std::lround(fractions[k] * n));
          out[k] = top >= vx ? 1.0 : 0.0;
        }
      },
      workers);
}

struct GaussRule {
  std::vector<double> x;
  std::vector<double> w;
};

/// Gauss-Jacobi rule for the weight (1-x)^alpha (1+x)^beta on [-1,1], by Golub-Welsch.
inline GaussRule gauss_jacobi(int n, double alpha, double beta) {
  Eigen::VectorXd diag(n), sub(std::max(n - 1, 1));
  const double ab = alpha + beta;
  for (int k = 0; k < n; ++k) {
    double d = 2.0 * k + ab;
    diag(k) = k == 0 ? (beta - alpha) / (ab + 2) : (beta * beta - alpha * alpha) / (d * (d + 2));
  }
  for (int k = 1; k < n; ++k) {
    double d = 2.0 * k + ab;
    // (k + ab) / (d - 1) is 1 at k = 1; written out to survive alpha + beta = -1.
    double ratio = k == 1 ? 1.0 : (k + ab) / (d - 1);
    sub(k - 1) = std::sqrt(4.0 * k * (k + alpha) * (k + beta) * ratio / (d * d * (d + 1)));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
  eig.computeFromTridiagonal(diag, sub.head(n - 1), Eigen::ComputeEigenvectors);
  const double mu0 = std::exp((ab + 1) * std::log(2.0) + std::lgamma(alpha + 1) + std::lgamma(beta + 1) -
                              std::lgamma(ab + 2));
  GaussRule r;
  for (int i = 0; i < n; ++i) {
    r.x.push_back(eig.eigenvalues()(i));
    double v = eig.eigenvectors()(0, i);
    r.w.push_back(mu0 * v * v);
  }
  return r;
}

namespace detail {

// Integral of y^{-2/3} (1-y)^{-2/3} over [0, x] for x <= 1/2, after y = x s.
inline double sc_partial(double x) {
  static const GaussRule rule = gauss_jacobi(48, 0.0, -2.0 / 3.0);
  if (x <= 0) return 0;
  double acc = 0;
  for (std::size_t i = 0; i < rule.x.size(); ++i) {
    double s = 0.5 * (1 + rule.x[i]);
    acc += rule.w[i] * std::pow(1 - x * s, -2.0 / 3.0);
  }
  return std::cbrt(x) * std::pow(2.0, -1.0 / 3.0) * acc;
}

}  // namespace detail

/// 1 / integral of y^{-2/3} (1-y)^{-2/3} over [0,1].
inline double schwarz_christoffel_constant() { return 1.0 / (2.0 * detail::sc_partial(0.5)); }

/// Schwarz-Christoffel map of the upper half-plane onto the triangle, on the real
/// segment [0,1], which it sends to AB.
inline cplx schwarz_christoffel(double x) {
  if (!(x >= 0 && x <= 1)) throw std::invalid_argument("schwarz_christoffel: x outside [0,1]");
  const double c = schwarz_christoffel_constant();
  double v = x <= 0.5 ? c * detail::sc_partial(x) : 1.0 - c * detail::sc_partial(1.0 - x);
  return {v, 0.0};
}

}  // namespace perc
