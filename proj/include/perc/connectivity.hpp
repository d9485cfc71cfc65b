#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "perc/lattice.hpp"
#include "perc/sampling.hpp"

namespace perc {

struct ClusterInfo {
  int size = 0;
  std::uint64_t arc_mask = 0;   // bit k: touches region.arcs[k]
  std::uint64_t side_mask = 0;  // bit k: touches region.sides[k]
  int min_height = std::numeric_limits<int>::max();
  int lowest_count = 0;  // number of sites attaining min_height
  Site lowest{};
};

/// Monochromatic clusters of one colour; label is -1 on sites of the other colour.
struct ClusterLabeling {
  Color color = Color::Black;
  std::vector<int> label;
  std::vector<ClusterInfo> clusters;

  bool touches(const RealizedRegion& rr, int id, const std::string& name) const {
    for (std::size_t k = 0; k < rr.sides.size(); ++k)
      if (rr.sides[k].name == name) return (clusters[id].side_mask >> k) & 1;
    for (std::size_t k = 0; k < rr.arcs.size(); ++k)
      if (rr.arcs[k].name == name) return (clusters[id].arc_mask >> k) & 1;
    throw std::invalid_argument("unknown arc: " + name);
  }
};

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n), rank_(n, 0) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }
  int find(int x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
    return true;
  }

 private:
  std::vector<int> parent_;
  std::vector<int> rank_;
};

namespace detail {

inline ClusterLabeling label_clusters(const RealizedRegion& rr, const std::vector<Color>& colors,
                                      Color color) {
  const int n = static_cast<int>(rr.size());
  UnionFind uf(n);
  for (int i = 0; i < n; ++i) {
    if (colors[i] != color) continue;
    for (auto t : neighbors(rr.sites[i])) {
      int j = rr.index(t);
      if (j > i && colors[j] == color) uf.unite(i, j);
    }
  }
  ClusterLabeling out;
  out.color = color;
  out.label.assign(n, -1);
  std::vector<int> root_id(n, -1);
  for (int i = 0; i < n; ++i) {
    if (colors[i] != color) continue;
    int r = uf.find(i);
    if (root_id[r] < 0) {
      root_id[r] = static_cast<int>(out.clusters.size());
      out.clusters.emplace_back();
    }
    int id = root_id[r];
    out.label[i] = id;
    auto& info = out.clusters[id];
    ++info.size;
    Site s = rr.sites[i];
    if (s.v < info.min_height) {
      info.min_height = s.v;
      info.lowest_count = 1;
      info.lowest = s;
    } else if (s.v == info.min_height) {
      ++info.lowest_count;
    }
  }
  for (std::size_t k = 0; k < rr.arcs.size() && k < 64; ++k)
    for (auto s : rr.arcs[k].sites) {
      int l = out.label[rr.index(s)];
      if (l >= 0) out.clusters[l].arc_mask |= 1ULL << k;
    }
  for (std::size_t k = 0; k < rr.sides.size() && k < 64; ++k)
    for (auto s : rr.sides[k].sites) {
      int l = out.label[rr.index(s)];
      if (l >= 0) out.clusters[l].side_mask |= 1ULL << k;
    }
  return out;
}

// Breadth-first search over `color` sites from `from`; true once a site marked in `target` is hit.
inline bool reaches(const RealizedRegion& rr, const std::vector<Color>& colors, const Arc& from,
                    const Arc& to, Color color) {
  std::vector<char> target(rr.size(), 0), seen(rr.size(), 0);
  for (auto s : to.sites) target[rr.index(s)] = 1;
  std::vector<int> queue;
  for (auto s : from.sites) {
    int i = rr.index(s);
    if (colors[i] == color && !seen[i]) {
      seen[i] = 1;
      queue.push_back(i);
    }
  }
  for (std::size_t h = 0; h < queue.size(); ++h) {
    int i = queue[h];
    if (target[i]) return true;
    for (auto t : neighbors(rr.sites[i])) {
      int j = rr.index(t);
      if (j >= 0 && !seen[j] && colors[j] == color) {
        seen[j] = 1;
        queue.push_back(j);
      }
    }
  }
  return false;
}

// Unit-capacity max flow on a directed graph (Dinic).
class UnitFlow {
 public:
  explicit UnitFlow(int n) : head_(n, -1), level_(n), it_(n) {}

  void add_edge(int a, int b, int cap = 1) {
    edges_.push_back({b, head_[a], cap});
    head_[a] = static_cast<int>(edges_.size()) - 1;
    edges_.push_back({a, head_[b], 0});
    head_[b] = static_cast<int>(edges_.size()) - 1;
  }

  int max_flow(int s, int t) {
    int flow = 0;
    while (bfs(s, t)) {
      it_ = head_;
      while (int f = dfs(s, t, std::numeric_limits<int>::max())) flow += f;
    }
    return flow;
  }

 private:
  struct Edge {
    int to, next, cap;
  };
  std::vector<Edge> edges_;
  std::vector<int> head_, level_, it_;

  bool bfs(int s, int t) {
    std::fill(level_.begin(), level_.end(), -1);
    std::vector<int> q{s};
    level_[s] = 0;
    for (std::size_t h = 0; h < q.size(); ++h)
      for (int e = head_[q[h]]; e >= 0; e = edges_[e].next)
        if (edges_[e].cap > 0 && level_[edges_[e].to] < 0) {
          level_[edges_[e].to] = level_[q[h]] + 1;
          q.push_back(edges_[e].to);
        }
    return level_[t] >= 0;
  }

  int dfs(int v, int t, int f) {
    if (v == t) return f;
    for (int& e = it_[v]; e >= 0; e = edges_[e].next) {
      auto& ed = edges_[e];
      if (ed.cap > 0 && level_[ed.to] == level_[v] + 1) {
        int d = dfs(ed.to, t, std::min(f, ed.cap));
        if (d > 0) {
          ed.cap -= d;
          edges_[e ^ 1].cap += d;
          return d;
        }
      }
    }
    return 0;
  }
};

}  // namespace detail

inline ClusterLabeling clusters(const Configuration& c, Color color) {
  return detail::label_clusters(c.region(), c.materialize(), color);
}

inline bool has_crossing(const Configuration& c, const std::string& from, const std::string& to,
                         Color color) {
  const auto& rr = c.region();
  return detail::reaches(rr, c.materialize(), rr.side(from), rr.side(to), color);
}

/// A circuit of `color` around the hole exists iff no opposite-colour path joins the rings.
inline bool has_circuit(const Configuration& c, Color color) {
  if (!c.region().region.is_annular()) throw std::invalid_argument("has_circuit needs an annular region");
  return !has_crossing(c, "inner", "outer", opposite(color));
}

/// Maximum number of vertex-disjoint `color` paths between two sides.
inline int count_disjoint_crossings(const Configuration& c, const std::string& from,
                                    const std::string& to, Color color) {
  const auto& rr = c.region();
  auto colors = c.materialize();
  const Arc& a = rr.side(from);
  const Arc& b = rr.side(to);
  const int n = static_cast<int>(rr.size());
  const int src = 2 * n, snk = 2 * n + 1;
  detail::UnitFlow g(2 * n + 2);
  for (int i = 0; i < n; ++i) {
    if (colors[i] != color) continue;
    g.add_edge(2 * i, 2 * i + 1);
    for (auto t : neighbors(rr.sites[i])) {
      int j = rr.index(t);
      if (j >= 0 && colors[j] == color) g.add_edge(2 * i + 1, 2 * j);
    }
  }
  for (auto s : a.sites) {
    int i = rr.index(s);
    if (colors[i] == color) g.add_edge(src, 2 * i);
  }
  for (auto s : b.sites) {
    int i = rr.index(s);
    if (colors[i] == color) g.add_edge(2 * i + 1, snk);
  }
  return g.max_flow(src, snk);
}

struct CrossingEvent {
  std::string from;
  std::string to;
  Color color = Color::Black;
};

inline bool event_holds(const Configuration& c, const CrossingEvent& e) {
  return has_crossing(c, e.from, e.to, e.color);
}

/// Flip-and-recompute pivotality.
inline bool is_pivotal(const Configuration& c, Site s, const CrossingEvent& e) {
  if (!c.region().contains(s)) throw std::out_of_range("site outside region");
  return event_holds(c.with_site(s, Color::Black), e) != event_holds(c.with_site(s, Color::White), e);
}

/// All pivotal sites for the Black left-right crossing of a parallelogram in one
/// pass, using the duality between that event and the White top-bottom crossing:
/// a site is pivotal iff, viewed as Black, it joins Black clusters touching both
/// vertical sides while the rest fails to cross, and symmetrically for White.
inline std::vector<char> crossing_pivotals(const RealizedRegion& rr, const std::vector<Color>& colors) {
  if (rr.region.kind != RegionKind::Parallelogram)
    throw std::invalid_argument("crossing_pivotals needs a parallelogram");
  auto black = detail::label_clusters(rr, colors, Color::Black);
  auto white = detail::label_clusters(rr, colors, Color::White);
  auto side_bit = [&](const char* name) {
    for (std::size_t k = 0; k < rr.sides.size(); ++k)
      if (rr.sides[k].name == name) return 1ULL << k;
    return 0ULL;
  };
  const std::uint64_t L = side_bit("left"), R = side_bit("right"), B = side_bit("bottom"), T = side_bit("top");
  bool crossing = false;
  for (auto& cl : black.clusters)
    if ((cl.side_mask & L) && (cl.side_mask & R)) crossing = true;
  std::vector<std::uint64_t> own(rr.size(), 0);
  for (std::size_t k = 0; k < rr.sides.size(); ++k)
    for (auto s : rr.sides[k].sites) own[rr.index(s)] |= 1ULL << k;
  std::vector<char> piv(rr.size(), 0);
  for (std::size_t i = 0; i < rr.size(); ++i) {
    const bool is_black = colors[i] == Color::Black;
    // A Black site can only be pivotal when the crossing exists, a White one when it does not.
    if (is_black != crossing) continue;
    const auto& lab = is_black ? white : black;
    std::uint64_t need_a = is_black ? B : L, need_b = is_black ? T : R;
    std::uint64_t mask = own[i];
    for (auto t : neighbors(rr.sites[i])) {
      int j = rr.index(t);
      if (j >= 0 && lab.label[j] >= 0) mask |= lab.clusters[lab.label[j]].side_mask;
    }
    piv[i] = (mask & need_a) && (mask & need_b);
  }
  return piv;
}

namespace kernels {

/// Visited marks on the hexagon of radius R around a centre, cleared in O(1).
class Scratch {
 public:
  void reset(Site center, int radius) {
    center_ = center;
    if (radius != radius_) {
      radius_ = radius;
      side_ = 2 * radius + 1;
      stamp_.assign(static_cast<std::size_t>(side_) * side_, 0);
      cur_ = 0;
    }
    if (++cur_ == 0) {
      std::fill(stamp_.begin(), stamp_.end(), 0);
      cur_ = 1;
    }
    queue.clear();
  }
  bool visit(Site s) {
    Site d = s - center_;
    auto& m = stamp_[static_cast<std::size_t>(d.v + radius_) * side_ + (d.u + radius_)];
    if (m == cur_) return false;
    m = cur_;
    return true;
  }
  bool seen(Site s) const {
    Site d = s - center_;
    return stamp_[static_cast<std::size_t>(d.v + radius_) * side_ + (d.u + radius_)] == cur_;
  }
  std::vector<Site> queue;

 private:
  Site center_{};
  int radius_ = -1;
  int side_ = 0;
  std::uint32_t cur_ = 0;
  std::vector<std::uint32_t> stamp_;
};

/// Follows an interface across faces, entering the face beyond edge (a,b) from the
/// face whose third corner is `prev`, until the next corner falls outside.
/// Returns that outside corner.
template <class Inside, class Black>
Site trace_interface(Site a, Site b, Site prev, Inside&& inside, Black&& black) {
  bool ca = black(a);
  for (;;) {
    Site w = a + b - prev;
    if (!inside(w)) return w;
    if (black(w) == ca) {
      prev = a;
      a = w;
    } else {
      prev = b;
      b = w;
    }
  }
}

/// Number of interfaces running from the hole to the outside of the annulus
/// {n1 <= d(center, .) <= n2}.
template <class Black>
int annulus_interfaces(Site center, int n1, int n2, Black&& black) {
  auto inside = [&](Site s) {
    int d = graph_distance(center, s);
    return d >= n1 && d <= n2;
  };
  int count = 0;
  for (auto o : hexagon_ring(n1 - 1)) {
    o = o + center;
    for (int k = 0; k < 6; ++k) {
      Site a = o + kDirections[k], b = o + kDirections[(k + 1) % 6];
      if (!inside(a) || !inside(b)) continue;
      if (black(a) == black(b)) continue;
      Site end = trace_interface(a, b, o, inside, black);
      if (graph_distance(center, end) > n2) ++count;
    }
  }
  return count;
}

/// Black path from `center` to the ring at distance n, inside the hexagon of radius n.
template <class Black>
bool one_arm(Site center, int n, Black&& black, Scratch& sc) {
  if (!black(center)) return false;
  if (n == 0) return true;
  sc.reset(center, n);
  sc.visit(center);
  sc.queue.push_back(center);
  for (std::size_t h = 0; h < sc.queue.size(); ++h) {
    Site s = sc.queue[h];
    for (auto t : neighbors(s)) {
      int d = graph_distance(center, t);
      if (d > n || sc.seen(t) || !black(t)) continue;
      if (d == n) return true;
      sc.visit(t);
      sc.queue.push_back(t);
    }
  }
  return false;
}

/// Path of colour `want` joining the rings at distances r1 and r2 around the centre.
template <class Black>
bool annulus_arm(Site center, int r1, int r2, bool want, Black&& black, Scratch& sc) {
  sc.reset(center, r2);
  for (auto s : hexagon_ring(r1)) {
    s = s + center;
    if (black(s) == want) {
      sc.visit(s);
      sc.queue.push_back(s);
    }
  }
  for (std::size_t h = 0; h < sc.queue.size(); ++h) {
    Site s = sc.queue[h];
    if (graph_distance(center, s) == r2) return true;
    for (auto t : neighbors(s)) {
      int d = graph_distance(center, t);
      if (d < r1 || d > r2 || sc.seen(t) || black(t) != want) continue;
      sc.visit(t);
      sc.queue.push_back(t);
    }
  }
  return r1 == r2 && !sc.queue.empty();
}

/// Arm of colour `want` from `start` to the arc of x + H_n, staying in x + H_n.
template <class Black>
bool half_plane_arm(Site x, int n, Site start, bool want, Black&& black, Scratch& sc) {
  if (black(start) != want) return false;
  auto inside = [&](Site s) { return s.v >= x.v && graph_distance(x, s) <= n; };
  sc.reset(x, n);
  sc.visit(start);
  sc.queue.push_back(start);
  for (std::size_t h = 0; h < sc.queue.size(); ++h) {
    Site s = sc.queue[h];
    if (graph_distance(x, s) == n) return true;
    for (auto t : neighbors(s)) {
      if (!inside(t) || sc.seen(t) || black(t) != want) continue;
      sc.visit(t);
      sc.queue.push_back(t);
    }
  }
  return false;
}

/// Open arm from x and closed arm from x+1 to the arc of x + H_n.
template <class Black>
bool n_good(Site x, int n, Black&& black, Scratch& sc) {
  return half_plane_arm(x, n, x, true, black, sc) &&
         half_plane_arm(x, n, x + Site{1, 0}, false, black, sc);
}

/// x is the unique lowest site of its open cluster in x + H_n, and that cluster
/// reaches the arc of x + H_n.
template <class Black>
bool n_Good(Site x, int n, Black&& black, Scratch& sc) {
  if (!black(x)) return false;
  if (black(x + kDirections[0]) || black(x + kDirections[3])) return false;
  if (n == 0) return true;
  sc.reset(x, n);
  sc.visit(x);
  sc.queue.push_back(x);
  bool reached = false;
  for (std::size_t h = 0; h < sc.queue.size(); ++h) {
    Site s = sc.queue[h];
    for (auto t : neighbors(s)) {
      int d = graph_distance(x, t);
      if (t.v < x.v || d > n || sc.seen(t) || !black(t)) continue;
      if (t.v == x.v) return false;
      if (d == n) reached = true;
      sc.visit(t);
      sc.queue.push_back(t);
    }
  }
  return reached;
}

/// Maximum number of disjoint arms of colour `want` from the ring at distance 1
/// to the ring at distance m around x.
template <class Black>
int disjoint_arms(Site x, int m, bool want, Black&& black) {
  std::vector<Site> local;
  for (int v = -m; v <= m; ++v)
    for (int u = -m; u <= m; ++u) {
      Site s = x + Site{u, v};
      int d = graph_distance(x, s);
      if (d >= 1 && d <= m && black(s) == want) local.push_back(s);
    }
  const int side = 2 * m + 1;
  std::vector<int> id(static_cast<std::size_t>(side) * side, -1);
  auto key = [&](Site s) { return static_cast<std::size_t>(s.v - x.v + m) * side + (s.u - x.u + m); };
  for (std::size_t i = 0; i < local.size(); ++i) id[key(local[i])] = static_cast<int>(i);
  const int n = static_cast<int>(local.size());
  detail::UnitFlow g(2 * n + 2);
  const int src = 2 * n, snk = 2 * n + 1;
  for (int i = 0; i < n; ++i) {
    Site s = local[i];
    g.add_edge(2 * i, 2 * i + 1);
    int d = graph_distance(x, s);
    if (d == 1) g.add_edge(src, 2 * i);
    if (d == m) g.add_edge(2 * i + 1, snk);
    for (auto t : neighbors(s)) {
      int dt = graph_distance(x, t);
      if (dt < 1 || dt > m) continue;
      int j = id[key(t)];
      if (j >= 0) g.add_edge(2 * i + 1, 2 * j);
    }
  }
  return g.max_flow(src, snk);
}

/// x closed with five disjoint arms (closed, open, closed, open, closed in cyclic
/// order) from its neighbours to distance m. The interfaces split the annulus into
/// alternating sectors; five such arms need six sectors, or four sectors with one
/// closed sector holding two disjoint closed arms.
template <class Black>
bool five_arm(Site x, int m, Black&& black) {
  if (black(x)) return false;
  int ic = annulus_interfaces(x, 1, m, black);
  if (ic >= 6) return true;
  if (ic < 4) return false;
  return disjoint_arms(x, m, false, black) >= 3;
}

}  // namespace kernels

/// Interfaces joining inner and outer rings of an annular region.
inline int count_crossing_interfaces(const Configuration& c) {
  const auto& rr = c.region();
  const auto& reg = rr.region;
  if (!reg.is_annular()) throw std::invalid_argument("count_crossing_interfaces needs an annular region");
  auto colors = c.materialize();
  auto inside = [&](Site s) { return rr.contains(s); };
  auto black = [&](Site s) { return colors[rr.index(s)] == Color::Black; };
  auto in_hole = [&](Site s) {
    if (reg.kind == RegionKind::Annulus) return graph_norm(s) < reg.a;
    return std::abs(to_plane(s)) <= reg.r1;
  };
  int count = 0;
  for (auto a : rr.find_arc("inner")->sites) {
    for (int k = 0; k < 6; ++k) {
      // Faces with one corner in the hole and two region corners are interface endpoints.
      Site o = a + kDirections[k];
      Site b = a + kDirections[(k + 1) % 6];
      if (!in_hole(o) || !inside(b)) continue;
      if (black(a) == black(b)) continue;
      Site end = kernels::trace_interface(a, b, o, inside, black);
      if (!in_hole(end)) ++count;
    }
  }
  return count;
}

struct HalfPlaneEvents {
  bool n_good = false;
  bool n_Good = false;
  bool U_event = false;
  bool U_available = false;  // x + Lambda_n fits in the region
};

inline HalfPlaneEvents half_plane_events(const Configuration& c, int n, Site x) {
  const auto& rr = c.region();
  bool full = true;
  for (int v = -n; v <= n; ++v)
    for (int u = -n; u <= n; ++u) {
      Site s = x + Site{u, v};
      if (graph_distance(x, s) > n || rr.contains(s)) continue;
      if (s.v >= x.v) throw std::invalid_argument("region too small for half-plane events");
      full = false;
    }
  if (!rr.contains(x + Site{1, 0})) throw std::invalid_argument("region too small for half-plane events");
  auto black = [&](Site s) { return c.black(s); };
  kernels::Scratch sc;
  HalfPlaneEvents ev;
  ev.n_good = kernels::n_good(x, n, black, sc);
  ev.n_Good = kernels::n_Good(x, n, black, sc);
  ev.U_available = full && n >= 2;
  if (ev.U_available) ev.U_event = kernels::five_arm(x, n, black);
  return ev;
}

}  // namespace perc
