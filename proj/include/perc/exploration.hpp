#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "perc/lattice.hpp"
#include "perc/sampling.hpp"

namespace perc {

/// Honeycomb vertices are triangular faces; a face is stored as the sum of its
/// three corner sites, which is three times its centre.
inline cplx face_point(Site corner_sum) { return to_plane(corner_sum) / 3.0; }

inline Site face_key(Site a, Site b, Site c) { return a + b + c; }

/// Corners of the face with the given corner sum.
inline std::array<Site, 3> face_corners(Site sum) {
  auto fdiv = [](int x) { return x >= 0 ? x / 3 : -((-x + 2) / 3); };
  int u = fdiv(sum.u), v = fdiv(sum.v);
  if (sum.u - 3 * u == 1) return {Site{u, v}, Site{u + 1, v}, Site{u, v + 1}};
  return {Site{u + 1, v}, Site{u, v + 1}, Site{u + 1, v + 1}};
}

inline int direction_index(Site a, Site b) {
  Site d = b - a;
  for (int k = 0; k < 6; ++k)
    if (kDirections[k] == d) return k;
  return -1;
}

struct LoopEvent {
  std::size_t step = 0;
  int winding_sign = 0;  // +1 counterclockwise around the origin
  Color color = Color::White;
  std::size_t domain_size = 0;  // sites left to explore inside the loop
};

/// Interface path. Transition k runs from vertices[k] to vertices[k+1]; for an
/// ordinary step it crosses the lattice edge steps[k] = (black right, white left).
struct ExplorationPath {
  std::vector<Site> vertices;
  std::vector<std::pair<Site, Site>> steps;
  std::vector<char> jumps;
  std::vector<Site> right_cells;
  std::vector<Site> left_cells;
  std::vector<LoopEvent> loop_events;
  std::optional<Site> hit;
  bool reached_end = false;

  std::size_t length() const { return steps.size(); }
  cplx point(std::size_t k) const { return face_point(vertices.at(k)); }
  std::vector<cplx> points() const {
    std::vector<cplx> out;
    out.reserve(vertices.size());
    for (auto v : vertices) out.push_back(face_point(v));
    return out;
  }
};

namespace detail {

inline void add_unique(std::vector<Site>& v, std::vector<char>& seen, const RealizedRegion& rr, Site s) {
  int i = rr.index(s);
  if (i < 0 || seen[i]) return;
  seen[i] = 1;
  v.push_back(s);
}

inline double cross(cplx a, cplx b) { return a.real() * b.imag() - a.imag() * b.real(); }

}  // namespace detail

/// Checks the chirality of every ordinary step: the black cell lies to the right.
inline bool path_sides_consistent(const ExplorationPath& p) {
  for (std::size_t k = 0; k < p.steps.size(); ++k) {
    if (p.jumps[k]) continue;
    cplx a = p.point(k), d = p.point(k + 1) - a;
    if (detail::cross(d, to_plane(p.steps[k].first) - a) >= 0) return false;
    if (detail::cross(d, to_plane(p.steps[k].second) - a) <= 0) return false;
  }
  return true;
}

/// Interface started on the edge between two adjacent boundary cells, the black
/// one on the right. It stops when the next face leaves the region, when a cell
/// of `stop_arc` is first revealed, or when `on_step` returns true.
inline ExplorationPath chordal_exploration(const Configuration& c, Site black_start, Site white_start,
                                           const std::string& stop_arc = "",
                                           const std::function<bool(const ExplorationPath&)>& on_step = {}) {
  const auto& rr = c.region();
  if (!rr.contains(black_start) || !rr.contains(white_start) || !adjacent(black_start, white_start))
    throw std::invalid_argument("chordal start must be two adjacent region sites");
  if (c.color(black_start) != Color::Black || c.color(white_start) != Color::White)
    throw std::invalid_argument("inconsistent boundary override at the start edge");
  std::vector<char> stop(rr.size(), 0);
  if (!stop_arc.empty())
    for (auto q : rr.side(stop_arc).sites) stop[rr.index(q)] = 1;

  // The face behind the start edge must lie outside, with the black cell on the right.
  Site prev{};
  bool found = false;
  for (int k = 0; k < 6 && !found; ++k) {
    Site o = black_start + kDirections[k];
    if (!adjacent(o, white_start) || rr.contains(o)) continue;
    cplx a = face_point(face_key(black_start, white_start, o));
    cplx b = face_point(face_key(black_start, white_start, black_start + white_start - o));
    if (detail::cross(b - a, to_plane(black_start) - a) < 0) {
      prev = o;
      found = true;
    }
  }
  if (!found) throw std::invalid_argument("start edge does not face the outside of the region");

  ExplorationPath path;
  std::vector<char> seen_r(rr.size(), 0), seen_l(rr.size(), 0);
  Site s = black_start, t = white_start;
  path.vertices.push_back(face_key(s, t, prev));
  const std::size_t limit = 4 * rr.size() + 64;
  while (path.steps.size() <= limit) {
    Site w = s + t - prev;
    path.vertices.push_back(face_key(s, t, w));
    path.steps.push_back({s, t});
    path.jumps.push_back(0);
    detail::add_unique(path.right_cells, seen_r, rr, s);
    detail::add_unique(path.left_cells, seen_l, rr, t);
    int wi = rr.index(w);
    if (wi < 0) {
      path.reached_end = true;
      return path;
    }
    if (on_step && on_step(path)) return path;
    if (c.color_at(wi) == Color::Black) {
      prev = s;
      s = w;
    } else {
      prev = t;
      t = w;
    }
    if (stop[wi]) {
      path.hit = w;
      return path;
    }
  }
  throw std::logic_error("chordal exploration did not terminate");
}

/// Chordal exploration between the two transitions of a boundary split: from
/// (white, black) at `black_first` to (black, white) at `white_first`.
inline ExplorationPath chordal_exploration(const Configuration& c) {
  const auto& rr = c.region();
  const Arc* b = rr.find_arc("black");
  const Arc* w = rr.find_arc("white");
  if (!b || !w || b->sites.empty() || w->sites.empty())
    throw std::invalid_argument("chordal exploration needs black and white arcs");
  return chordal_exploration(c, b->sites.front(), w->sites.back());
}

/// Configuration on a copy of `rr` split into a black and a white boundary arc,
/// both overridden.
inline Configuration chordal_configuration(const RealizedRegion& rr, Site black_first, Site white_first,
                                           double p, std::uint64_t seed) {
  auto split = std::make_shared<const RealizedRegion>(rr.split(black_first, white_first));
  return Configuration(split, p, seed).with_boundary({{"black", Color::Black}, {"white", Color::White}});
}

/// Sum of signed turning angles at vertices from..to-1. A closed path wraps at its
/// last vertex; an open one contributes no turn there.
inline double winding_angle(const ExplorationPath& p, std::size_t from, std::size_t to) {
  const std::size_t n = p.length();
  if (from > to || to > n) throw std::out_of_range("winding_angle: index out of range");
  const bool closed = n > 0 && p.vertices.front() == p.vertices.back();
  auto dir = [&](std::size_t k) { return p.point(k + 1) - p.point(k); };
  double total = 0;
  for (std::size_t k = from; k < to; ++k) {
    std::size_t next = k + 1;
    if (next == n) {
      if (!closed) continue;
      next = 0;
    }
    cplx a = dir(k), b = dir(next);
    total += std::atan2(detail::cross(a, b), a.real() * b.real() + a.imag() * b.imag());
  }
  return total;
}

/// First step after which z is cut from the end of a chordal path, where the
/// unexplored domain is the set of cells not yet adjacent to the path together
/// with the boundary cells. Empty when z stays connected.
inline std::optional<std::size_t> disconnection_time(const ExplorationPath& p, const RealizedRegion& rr,
                                                     Site z) {
  if (!rr.contains(z)) throw std::out_of_range("disconnection_time: site outside region");
  if (p.steps.empty()) return std::nullopt;
  const std::size_t inf = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> reveal(rr.size(), inf);
  for (std::size_t k = 0; k < p.steps.size(); ++k)
    for (Site q : {p.steps[k].first, p.steps[k].second}) {
      int i = rr.index(q);
      if (i >= 0 && reveal[i] == inf) reveal[i] = k;
    }
  std::vector<char> boundary(rr.size(), 0);
  for (std::size_t i = 0; i < rr.size(); ++i) boundary[i] = rr.is_boundary(rr.sites[i]);
  const int e1 = rr.index(p.steps.back().first), e2 = rr.index(p.steps.back().second);
  std::vector<int> queue;
  std::vector<char> seen(rr.size());
  auto cut = [&](std::size_t k) {
    auto open = [&](int i) { return boundary[i] || reveal[i] >= k; };
    int zi = rr.index(z);
    if (!open(zi)) return true;
    std::fill(seen.begin(), seen.end(), 0);
    queue.assign(1, zi);
    seen[zi] = 1;
    for (std::size_t h = 0; h < queue.size(); ++h) {
      int i = queue[h];
      if (i == e1 || i == e2) return false;
      for (auto q : neighbors(rr.sites[i])) {
        int j = rr.index(q);
        if (j >= 0 && !seen[j] && open(j)) {
          seen[j] = 1;
          queue.push_back(j);
        }
      }
    }
    return true;
  };
  std::size_t hi = p.steps.size();
  if (!cut(hi)) return std::nullopt;
  std::size_t lo = 0;  // cut(lo) is false: before the first step everything is connected
  while (hi - lo > 1) {
    std::size_t mid = lo + (hi - lo) / 2;
    (cut(mid) ? hi : lo) = mid;
  }
  return hi;
}

/// Radial exploration of a disc towards the origin. Cells outside the current
/// domain get their colour on demand so that the walker turns towards the origin;
/// when a loop closes around the origin the event is recorded, the domain shrinks
/// to the unexplored part inside it, and the walker jumps to the nearest face
/// with one corner in that domain.
inline ExplorationPath radial_exploration(const Configuration& c, Site start) {
  const auto& rr = c.region();
  if (rr.region.kind != RegionKind::Disc) throw std::invalid_argument("radial exploration needs a disc");
  if (rr.region.r1 < 2) throw std::invalid_argument("radial exploration needs radius at least 2");
  const Site origin{0, 0};
  const int oi = rr.index(origin);
  if (oi < 0) throw std::invalid_argument("origin not in region");
  if (!rr.is_boundary(start)) throw std::invalid_argument("radial start must be a boundary site");

  const std::size_t n = rr.size();
  std::vector<char> in_d(n, 1), revealed(n, 0), comp(n, 0);
  std::vector<std::uint8_t> blocked(n, 0);
  std::vector<std::size_t> run_steps;
  std::vector<int> queue;
  auto in_domain = [&](Site q) {
    int i = rr.index(q);
    return i >= 0 && in_d[i];
  };
  auto block = [&](Site a, Site b) {
    int k = direction_index(a, b);
    if (int i = rr.index(a); i >= 0) blocked[i] |= 1u << k;
    if (int j = rr.index(b); j >= 0) blocked[j] |= 1u << ((k + 3) % 6);
  };
  // Component of the origin in the slit domain; returns whether it still reaches outside.
  auto origin_component = [&]() {
    std::fill(comp.begin(), comp.end(), 0);
    queue.assign(1, oi);
    comp[oi] = 1;
    bool access = false;
    for (std::size_t h = 0; h < queue.size(); ++h) {
      int i = queue[h];
      for (int k = 0; k < 6; ++k) {
        if ((blocked[i] >> k) & 1) continue;
        Site q = rr.sites[i] + kDirections[k];
        int j = rr.index(q);
        if (j < 0 || !in_d[j]) {
          access = true;
          continue;
        }
        if (!comp[j]) {
          comp[j] = 1;
          queue.push_back(j);
        }
      }
    }
    return access;
  };

  ExplorationPath path;
  std::vector<char> seen_r(n, 0), seen_l(n, 0);
  Site s, t, prev;
  auto begin_run = [&](Site b) -> bool {
    for (int k = 0; k < 6; ++k) {
      Site l = b + kDirections[k], r = b + kDirections[(k + 1) % 6];
      if (!in_domain(l) && !in_domain(r)) {
        t = l;
        s = r;
        prev = s + t - b;
        return true;
      }
    }
    return false;
  };
  if (!begin_run(start)) throw std::invalid_argument("radial start has no outside face");
  path.vertices.push_back(face_key(s, t, prev));

  bool pending_jump = false;
  const std::size_t limit = 40 * n + 256;
  while (path.steps.size() <= limit) {
    Site w = s + t - prev;
    path.vertices.push_back(face_key(s, t, w));
    path.steps.push_back({s, t});
    path.jumps.push_back(pending_jump ? 1 : 0);
    pending_jump = false;
    run_steps.push_back(path.steps.size() - 1);
    block(s, t);
    if (in_domain(s)) detail::add_unique(path.right_cells, seen_r, rr, s);
    if (in_domain(t)) detail::add_unique(path.left_cells, seen_l, rr, t);
    if (w == origin) {
      path.reached_end = true;
      return path;
    }
    const int wi = rr.index(w);
    const bool w_in = in_domain(w);
    Color cw;
    if (!w_in || revealed[wi]) {
      if (!origin_component()) {
        // The walk closed a loop around the origin.
        double turn = 0;
        for (std::size_t k : run_steps) {
          auto [a, b] = path.steps[k];
          int ia = rr.index(a), ib = rr.index(b);
          if ((ia >= 0 && comp[ia]) || (ib >= 0 && comp[ib])) {
            cplx p0 = path.point(k), p1 = path.point(k + 1);
            turn += std::arg(p1 / p0);
          }
        }
        LoopEvent ev;
        ev.step = path.steps.size() - 1;
        ev.winding_sign = turn > 0 ? 1 : -1;
        ev.color = turn > 0 ? Color::White : Color::Black;
        // New domain: unexplored sites connected to the origin.
        std::vector<char> next(n, 0);
        queue.assign(1, oi);
        next[oi] = 1;
        for (std::size_t h = 0; h < queue.size(); ++h)
          for (auto q : neighbors(rr.sites[queue[h]])) {
            int j = rr.index(q);
            if (j >= 0 && in_d[j] && !revealed[j] && !next[j]) {
              next[j] = 1;
              queue.push_back(j);
            }
          }
        ev.domain_size = queue.size();
        path.loop_events.push_back(ev);
        in_d = next;
        std::fill(revealed.begin(), revealed.end(), 0);
        std::fill(blocked.begin(), blocked.end(), 0);
        run_steps.clear();

        // Nearest face with exactly one corner in the new domain.
        Site tip = face_key(s, t, w);
        cplx heading = path.point(path.length()) - path.point(path.length() - 1);
        std::vector<Site> frontier{tip}, seen_faces{tip};
        std::optional<Site> target;
        while (!target && !frontier.empty()) {
          double best = 1e300;
          for (auto f : frontier) {
            int inside = 0;
            for (auto q : face_corners(f)) inside += in_domain(q);
            if (inside != 1) continue;
            double ang = std::arg((face_point(f) - face_point(tip)) / heading);
            if (ang < 0) ang += 2 * std::numbers::pi;
            if (f == tip) ang = -1;
            if (ang < best) {
              best = ang;
              target = f;
            }
          }
          if (target) break;
          std::vector<Site> next_frontier;
          for (auto f : frontier) {
            auto cs = face_corners(f);
            for (int e = 0; e < 3; ++e) {
              Site a = cs[e], b = cs[(e + 1) % 3], o = cs[(e + 2) % 3];
              Site g = face_key(a, b, a + b - o);
              if (std::find(seen_faces.begin(), seen_faces.end(), g) != seen_faces.end()) continue;
              bool near = false;
              for (auto q : face_corners(g)) near = near || rr.contains(q);
              if (!near) continue;
              seen_faces.push_back(g);
              next_frontier.push_back(g);
            }
          }
          frontier = std::move(next_frontier);
        }
        if (!target) throw std::logic_error("radial exploration found no face to restart from");
        Site b{};
        for (auto q : face_corners(*target))
          if (in_domain(q)) b = q;
        if (!begin_run(b)) throw std::logic_error("radial restart face is inconsistent");
        pending_jump = true;
        continue;
      }
      if (!w_in) {
        int is = rr.index(s), it = rr.index(t);
        if (it >= 0 && in_d[it] && comp[it]) cw = Color::Black;
        else if (is >= 0 && in_d[is] && comp[is]) cw = Color::White;
        else throw std::logic_error("radial exploration lost the origin");
      } else {
        cw = c.color_at(wi);
      }
    } else {
      cw = c.color_at(wi);
      revealed[wi] = 1;
    }
    if (cw == Color::Black) {
      prev = s;
      s = w;
    } else {
      prev = t;
      t = w;
    }
  }
  throw std::logic_error("radial exploration did not terminate");
}

}  // namespace perc
