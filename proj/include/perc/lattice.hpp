#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace perc {

using cplx = std::complex<double>;

inline constexpr double kSqrt3 = 1.7320508075688772935;

/// Axial coordinates on the triangular lattice: the site sits at u + v e^{i pi/3}.
struct Site {
  int u = 0;
  int v = 0;

  constexpr Site operator+(Site o) const { return {u + o.u, v + o.v}; }
  constexpr Site operator-(Site o) const { return {u - o.u, v - o.v}; }
  constexpr Site operator-() const { return {-u, -v}; }
  constexpr bool operator==(const Site&) const = default;
  constexpr auto operator<=>(const Site&) const = default;
};

struct SiteHash {
  std::size_t operator()(Site s) const noexcept {
    auto x = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(s.u)) << 32) |
             static_cast<std::uint32_t>(s.v);
    x ^= x >> 33;
    x *= 0xff51afd7ed558ccdULL;
    x ^= x >> 33;
    return static_cast<std::size_t>(x);
  }
};

/// The six unit directions in counterclockwise order starting from the positive real axis.
inline constexpr std::array<Site, 6> kDirections = {
    Site{1, 0}, Site{0, 1}, Site{-1, 1}, Site{-1, 0}, Site{0, -1}, Site{1, -1}};

inline constexpr std::array<Site, 6> neighbors(Site s) {
  std::array<Site, 6> out{};
  for (int k = 0; k < 6; ++k) out[k] = s + kDirections[k];
  return out;
}

inline constexpr bool adjacent(Site a, Site b) {
  Site d = b - a;
  for (auto k : kDirections)
    if (d == k) return true;
  return false;
}

inline cplx to_plane(Site s) {
  return {s.u + 0.5 * s.v, 0.5 * kSqrt3 * s.v};
}

/// Twice the imaginary part divided by sqrt(3); an exact integer proxy for height.
inline constexpr int height_key(Site s) { return s.v; }

/// Graph distance to the origin.
inline constexpr int graph_norm(Site s) {
  int a = s.u < 0 ? -s.u : s.u;
  int b = s.v < 0 ? -s.v : s.v;
  int c = s.u + s.v < 0 ? -(s.u + s.v) : s.u + s.v;
  return std::max({a, b, c});
}

inline constexpr int graph_distance(Site a, Site b) { return graph_norm(b - a); }

/// Hexagonal cell of a site; vertices run counterclockwise starting at angle pi/6.
struct HexCell {
  Site center;
  std::array<cplx, 6> vertices;
};

inline HexCell hex_cell(Site s) {
  HexCell h{s, {}};
  const cplx c = to_plane(s);
  const double r = 1.0 / kSqrt3;
  for (int k = 0; k < 6; ++k) {
    double a = std::numbers::pi / 6 + k * std::numbers::pi / 3;
    h.vertices[k] = c + std::polar(r, a);
  }
  return h;
}

enum class RegionKind { Parallelogram, Hexagon, HalfHexagon, Disc, Annulus, DiscAnnulus, Triangle };

/// A named finite region. Integer parameters live in a/b, real radii in r1/r2.
struct Region {
  RegionKind kind = RegionKind::Hexagon;
  int a = 0;
  int b = 0;
  double r1 = 0;
  double r2 = 0;

  static Region parallelogram(int a, int b) { return {RegionKind::Parallelogram, a, b}; }
  static Region hexagon(int n) { return {RegionKind::Hexagon, n, 0}; }
  static Region half_hexagon(int n) { return {RegionKind::HalfHexagon, n, 0}; }
  static Region disc(double r) { return {RegionKind::Disc, 0, 0, r, 0}; }
  static Region annulus(int n1, int n2) { return {RegionKind::Annulus, n1, n2}; }
  static Region disc_annulus(double r1, double r2) {
    return {RegionKind::DiscAnnulus, 0, 0, r1, r2};
  }
  static Region triangle(int n) { return {RegionKind::Triangle, n, 0}; }

  bool contains(Site s) const {
    switch (kind) {
      case RegionKind::Parallelogram:
        return s.u >= 0 && s.u <= a && s.v >= 0 && s.v <= b;
      case RegionKind::Hexagon:
        return graph_norm(s) <= a;
      case RegionKind::HalfHexagon:
        return s.v >= 0 && graph_norm(s) <= a;
      case RegionKind::Disc:
        return std::abs(to_plane(s)) <= r1;
      case RegionKind::Annulus: {
        int d = graph_norm(s);
        return d >= a && d <= b;
      }
      case RegionKind::DiscAnnulus: {
        double m = std::abs(to_plane(s));
        return m > r1 && m <= r2;
      }
      case RegionKind::Triangle:
        return s.u >= 0 && s.v >= 0 && s.u + s.v <= a;
    }
    return false;
  }

  bool is_annular() const {
    return kind == RegionKind::Annulus || kind == RegionKind::DiscAnnulus;
  }

  std::string describe() const {
    auto fmt = [](double x) {
      std::string s = std::to_string(x);
      while (!s.empty() && s.back() == '0') s.pop_back();
      if (!s.empty() && s.back() == '.') s.pop_back();
      return s;
    };
    switch (kind) {
      case RegionKind::Parallelogram:
        return "parallelogram(" + std::to_string(a) + "," + std::to_string(b) + ")";
      case RegionKind::Hexagon: return "hexagon(" + std::to_string(a) + ")";
      case RegionKind::HalfHexagon: return "half_hexagon(" + std::to_string(a) + ")";
      case RegionKind::Disc: return "disc(" + fmt(r1) + ")";
      case RegionKind::Annulus:
        return "annulus(" + std::to_string(a) + "," + std::to_string(b) + ")";
      case RegionKind::DiscAnnulus: return "disc_annulus(" + fmt(r1) + "," + fmt(r2) + ")";
      case RegionKind::Triangle: return "triangle(" + std::to_string(a) + ")";
    }
    return "?";
  }
};

/// Parses strings such as "parallelogram(32,16)", "disc(5.5)" or "triangle(64)".
inline Region parse_region(const std::string& text) {
  auto open = text.find('(');
  auto close = text.rfind(')');
  if (open == std::string::npos || close == std::string::npos || close < open)
    throw std::invalid_argument("region: expected name(args): " + text);
  std::string name = text.substr(0, open);
  std::vector<double> args;
  std::string body = text.substr(open + 1, close - open - 1);
  std::size_t pos = 0;
  while (pos <= body.size()) {
    auto comma = body.find(',', pos);
    std::string item = body.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (!item.empty()) {
      std::size_t used = 0;
      double x = std::stod(item, &used);
      while (used < item.size() && item[used] == ' ') ++used;
      if (used != item.size()) throw std::invalid_argument("region: bad number " + item);
      args.push_back(x);
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  auto need = [&](std::size_t k) {
    if (args.size() != k)
      throw std::invalid_argument("region " + name + " takes " + std::to_string(k) + " arguments");
  };
  auto integer = [&](double x) {
    if (x != std::floor(x)) throw std::invalid_argument("region: integer expected in " + text);
    return static_cast<int>(x);
  };
  if (name == "parallelogram") { need(2); return Region::parallelogram(integer(args[0]), integer(args[1])); }
  if (name == "hexagon") { need(1); return Region::hexagon(integer(args[0])); }
  if (name == "half_hexagon") { need(1); return Region::half_hexagon(integer(args[0])); }
  if (name == "disc") { need(1); return Region::disc(args[0]); }
  if (name == "annulus") { need(2); return Region::annulus(integer(args[0]), integer(args[1])); }
  if (name == "disc_annulus") { need(2); return Region::disc_annulus(args[0], args[1]); }
  if (name == "triangle") { need(1); return Region::triangle(integer(args[0])); }
  throw std::invalid_argument("unknown region kind: " + name);
}

struct Arc {
  std::string name;
  std::vector<Site> sites;
};

/// Materialized region: sites, a dense index, boundary arcs and closed sides.
///
/// `arcs` partition the boundary counterclockwise (corners belong to the arc that
/// follows them). `sides` are the closed geometric sides, so corners appear in
/// two of them; crossing events are phrased in terms of sides when present.
class RealizedRegion {
 public:
  Region region;
  std::vector<Site> sites;
  std::vector<Arc> arcs;
  std::vector<Arc> sides;
  std::vector<Site> boundary_cycle;

  int umin = 0, umax = -1, vmin = 0, vmax = -1;

  bool contains(Site s) const { return index(s) >= 0; }

  int index(Site s) const {
    if (s.u < umin || s.u > umax || s.v < vmin || s.v > vmax) return -1;
    return grid_[static_cast<std::size_t>(s.v - vmin) * width() + (s.u - umin)];
  }

  std::size_t size() const { return sites.size(); }
  int width() const { return umax - umin + 1; }

  bool is_boundary(Site s) const {
    if (!contains(s)) return false;
    for (auto t : neighbors(s))
      if (!contains(t)) return true;
    return false;
  }

  const Arc* find_arc(const std::string& name) const {
    for (auto& a : arcs)
      if (a.name == name) return &a;
    return nullptr;
  }

  /// Side lookup falls back to arcs for kinds without separate sides.
  const Arc* find_side(const std::string& name) const {
    for (auto& a : sides)
      if (a.name == name) return &a;
    return find_arc(name);
  }

  const Arc& side(const std::string& name) const {
    auto* a = find_side(name);
    if (!a) throw std::invalid_argument("unknown arc: " + name);
    return *a;
  }

  void build_index() {
    if (sites.empty()) throw std::invalid_argument("degenerate region: " + region.describe());
    umin = vmin = std::numeric_limits<int>::max();
    umax = vmax = std::numeric_limits<int>::min();
    for (auto s : sites) {
      umin = std::min(umin, s.u);
      umax = std::max(umax, s.u);
      vmin = std::min(vmin, s.v);
      vmax = std::max(vmax, s.v);
    }
    grid_.assign(static_cast<std::size_t>(width()) * (vmax - vmin + 1), -1);
    for (std::size_t i = 0; i < sites.size(); ++i) {
      auto s = sites[i];
      grid_[static_cast<std::size_t>(s.v - vmin) * width() + (s.u - umin)] = static_cast<int>(i);
    }
  }

  /// Copy whose arcs are the two pieces of the boundary cycle split at the given
  /// positions: "black" runs counterclockwise from `black_first` up to, not
  /// including, `white_first`; "white" is the rest.
  RealizedRegion split(Site black_first, Site white_first) const {
    if (boundary_cycle.empty()) throw std::invalid_argument("region has no boundary cycle");
    auto pos = [&](Site s) {
      auto it = std::find(boundary_cycle.begin(), boundary_cycle.end(), s);
      if (it == boundary_cycle.end()) throw std::invalid_argument("split point is not on the boundary");
      return static_cast<std::size_t>(it - boundary_cycle.begin());
    };
    std::size_t i = pos(black_first), j = pos(white_first);
    if (i == j) throw std::invalid_argument("split points coincide");
    RealizedRegion out = *this;
    out.arcs.clear();
    out.sides.clear();
    Arc black{"black", {}}, white{"white", {}};
    std::size_t m = boundary_cycle.size();
    for (std::size_t k = i; k != j; k = (k + 1) % m) black.sites.push_back(boundary_cycle[k]);
    for (std::size_t k = j; k != i; k = (k + 1) % m) white.sites.push_back(boundary_cycle[k]);
    out.arcs = {black, white};
    return out;
  }

 private:
  std::vector<int> grid_;
};

namespace detail {

inline void push_if(std::vector<Site>& v, const Region& r, Site s) {
  if (r.contains(s)) v.push_back(s);
}

// Walks straight segments between consecutive corners, leaving out the endpoint
// of each segment so that every corner appears once.
inline std::vector<Site> polygon_cycle(const std::vector<Site>& corners) {
  std::vector<Site> out;
  for (std::size_t k = 0; k < corners.size(); ++k) {
    Site a = corners[k], b = corners[(k + 1) % corners.size()];
    Site d = b - a;
    int len = graph_norm(d);
    if (len == 0) continue;
    Site step{d.u / len, d.v / len};
    for (int i = 0; i < len; ++i) out.push_back(a + Site{step.u * i, step.v * i});
  }
  if (out.empty() && !corners.empty()) out.push_back(corners[0]);
  // Degenerate polygons walk back over themselves; keep first visits only.
  std::vector<Site> unique;
  for (auto s : out)
    if (std::find(unique.begin(), unique.end(), s) == unique.end()) unique.push_back(s);
  return unique;
}

inline std::vector<Site> boundary_by_angle(const RealizedRegion& rr, const std::vector<Site>& ring) {
  std::vector<std::pair<double, Site>> tagged;
  for (auto s : ring) {
    cplx z = to_plane(s);
    double a = std::atan2(z.imag(), z.real());
    if (a < 0) a += 2 * std::numbers::pi;
    tagged.push_back({a, s});
  }
  std::sort(tagged.begin(), tagged.end(), [](auto& x, auto& y) {
    if (x.first != y.first) return x.first < y.first;
    return std::abs(to_plane(x.second)) < std::abs(to_plane(y.second));
  });
  (void)rr;
  std::vector<Site> out;
  for (auto& t : tagged) out.push_back(t.second);
  return out;
}

}  // namespace detail

inline RealizedRegion realize(const Region& r) {
  RealizedRegion rr;
  rr.region = r;
  int span = 0;
  switch (r.kind) {
    case RegionKind::Parallelogram:
      if (r.a < 0 || r.b < 0) throw std::invalid_argument("parallelogram sides must be nonnegative");
      for (int v = 0; v <= r.b; ++v)
        for (int u = 0; u <= r.a; ++u) rr.sites.push_back({u, v});
      break;
    case RegionKind::Triangle:
      if (r.a < 1) throw std::invalid_argument("triangle side must be positive");
      for (int v = 0; v <= r.a; ++v)
        for (int u = 0; u + v <= r.a; ++u) rr.sites.push_back({u, v});
      break;
    case RegionKind::Hexagon:
    case RegionKind::HalfHexagon:
    case RegionKind::Annulus:
      span = r.kind == RegionKind::Annulus ? r.b : r.a;
      if (span < 0) throw std::invalid_argument("negative radius");
      if (r.kind == RegionKind::Annulus && (r.a < 1 || r.b <= r.a))
        throw std::invalid_argument("annulus needs 1 <= n1 < n2");
      if (r.kind == RegionKind::HalfHexagon && r.a < 1)
        throw std::invalid_argument("half hexagon needs n >= 1");
      for (int v = -span; v <= span; ++v)
        for (int u = -span; u <= span; ++u) detail::push_if(rr.sites, r, {u, v});
      break;
    case RegionKind::Disc:
    case RegionKind::DiscAnnulus: {
      double R = r.kind == RegionKind::Disc ? r.r1 : r.r2;
      if (!(R >= 0)) throw std::invalid_argument("negative radius");
      if (r.kind == RegionKind::DiscAnnulus && !(r.r1 >= 0 && r.r2 > r.r1))
        throw std::invalid_argument("disc annulus needs 0 <= r1 < r2");
      int m = static_cast<int>(std::ceil(2 * R / kSqrt3)) + 2;
      for (int v = -m; v <= m; ++v)
        for (int u = -2 * m; u <= 2 * m; ++u) detail::push_if(rr.sites, r, {u, v});
      break;
    }
  }
  rr.build_index();

  auto collect = [&](auto pred) {
    std::vector<Site> out;
    for (auto s : rr.sites)
      if (pred(s)) out.push_back(s);
    return out;
  };
  auto order_along = [](std::vector<Site> v, const std::vector<Site>& cycle) {
    std::vector<Site> out;
    for (auto s : cycle)
      if (std::find(v.begin(), v.end(), s) != v.end()) out.push_back(s);
    return out;
  };

  switch (r.kind) {
    case RegionKind::Parallelogram: {
      int a = r.a, b = r.b;
      rr.boundary_cycle = detail::polygon_cycle({{0, 0}, {a, 0}, {a, b}, {0, b}});
      auto& cyc = rr.boundary_cycle;
      // Counterclockwise: bottom, right, top, left; a corner opens the side after it.
      Arc bottom{"bottom", {}}, right{"right", {}}, top{"top", {}}, left{"left", {}};
      for (auto s : cyc) {
        if (s.v == 0 && s.u < a) bottom.sites.push_back(s);
        else if (s.u == a && s.v < b) right.sites.push_back(s);
        else if (s.v == b && s.u > 0) top.sites.push_back(s);
        else left.sites.push_back(s);
      }
      for (auto* arc : {&bottom, &right, &top, &left})
        if (!arc->sites.empty()) rr.arcs.push_back(*arc);
      std::vector<Site> rev_top = collect([&](Site s) { return s.v == b; });
      std::reverse(rev_top.begin(), rev_top.end());
      std::vector<Site> rev_left = collect([&](Site s) { return s.u == 0; });
      std::reverse(rev_left.begin(), rev_left.end());
      rr.sides = {{"bottom", collect([&](Site s) { return s.v == 0; })},
                  {"right", collect([&](Site s) { return s.u == a; })},
                  {"top", rev_top},
                  {"left", rev_left}};
      break;
    }
    case RegionKind::Triangle: {
      int n = r.a;
      rr.boundary_cycle = detail::polygon_cycle({{0, 0}, {n, 0}, {0, n}});
      Arc ab{"AB", {}}, bc{"BC", {}}, ca{"CA", {}};
      for (auto s : rr.boundary_cycle) {
        if (s.v == 0 && s.u < n) ab.sites.push_back(s);
        else if (s.u + s.v == n && s.v < n) bc.sites.push_back(s);
        else ca.sites.push_back(s);
      }
      rr.arcs = {ab, bc, ca};
      std::vector<Site> sab, sbc, sca;
      for (int u = 0; u <= n; ++u) sab.push_back({u, 0});
      for (int v = 0; v <= n; ++v) sbc.push_back({n - v, v});
      for (int v = n; v >= 0; --v) sca.push_back({0, v});
      rr.sides = {{"AB", sab}, {"BC", sbc}, {"CA", sca}};
      break;
    }
    case RegionKind::Hexagon: {
      int n = r.a;
      if (n == 0) {
        rr.boundary_cycle = {{0, 0}};
      } else {
        std::vector<Site> corners;
        for (int k = 0; k < 6; ++k) corners.push_back({kDirections[k].u * n, kDirections[k].v * n});
        rr.boundary_cycle = detail::polygon_cycle(corners);
      }
      rr.arcs = {{"boundary", rr.boundary_cycle}};
      break;
    }
    case RegionKind::HalfHexagon: {
      int n = r.a;
      rr.boundary_cycle = detail::polygon_cycle({{-n, 0}, {n, 0}, {0, n}, {-n, n}});
      Arc base{"base", {}}, arc{"arc", {}};
      for (auto s : rr.boundary_cycle) {
        if (s.v == 0 && s.u < n) base.sites.push_back(s);
        else arc.sites.push_back(s);
      }
      rr.arcs = {base, arc};
      rr.sides = {{"base", collect([&](Site s) { return s.v == 0; })},
                  {"arc", order_along(collect([&](Site s) { return graph_norm(s) == n; }),
                                      rr.boundary_cycle)}};
      break;
    }
    case RegionKind::Annulus: {
      auto inner = collect([&](Site s) { return graph_norm(s) == r.a; });
      auto outer = collect([&](Site s) { return graph_norm(s) == r.b; });
      rr.arcs = {{"inner", detail::boundary_by_angle(rr, inner)},
                 {"outer", detail::boundary_by_angle(rr, outer)}};
      break;
    }
    case RegionKind::Disc: {
      auto ring = collect([&](Site s) { return rr.is_boundary(s); });
      rr.boundary_cycle = detail::boundary_by_angle(rr, ring);
      rr.arcs = {{"boundary", rr.boundary_cycle}};
      break;
    }
    case RegionKind::DiscAnnulus: {
      // Inner arc: sites outside the small disc with a neighbour inside it.
      auto inner = collect([&](Site s) {
        for (auto t : neighbors(s))
          if (std::abs(to_plane(t)) <= r.r1) return true;
        return false;
      });
      auto outer = collect([&](Site s) {
        for (auto t : neighbors(s))
          if (std::abs(to_plane(t)) > r.r2) return true;
        return false;
      });
      for (auto s : inner)
        if (std::find(outer.begin(), outer.end(), s) != outer.end())
          throw std::invalid_argument("disc annulus too thin: rings overlap");
      if (inner.empty()) throw std::invalid_argument("disc annulus has an empty inner ring");
      rr.arcs = {{"inner", detail::boundary_by_angle(rr, inner)},
                 {"outer", detail::boundary_by_angle(rr, outer)}};
      break;
    }
  }
  return rr;
}

/// Sites at graph distance exactly n from the origin.
inline std::vector<Site> hexagon_ring(int n) {
  std::vector<Site> out;
  if (n == 0) return {{0, 0}};
  for (int k = 0; k < 6; ++k) {
    Site start{kDirections[k].u * n, kDirections[k].v * n};
    Site step = kDirections[(k + 2) % 6];
    for (int i = 0; i < n; ++i) out.push_back(start + Site{step.u * i, step.v * i});
  }
  return out;
}

}  // namespace perc
