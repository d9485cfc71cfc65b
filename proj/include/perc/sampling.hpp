#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "perc/lattice.hpp"

namespace perc {

enum class Color : std::uint8_t { White = 0, Black = 1 };

inline constexpr Color opposite(Color c) { return c == Color::Black ? Color::White : Color::Black; }

inline const char* color_name(Color c) { return c == Color::Black ? "black" : "white"; }

/// splitmix64 finalizer.
inline constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t x) {
  return mix64(seed ^ mix64(x + 0x632be59bd9b4e019ULL));
}

/// One uniform variate in [0,1) per (seed, site); every p is thresholded against it.
inline double site_uniform(std::uint64_t seed, Site s) {
  std::uint64_t key = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(s.u)) << 32) |
                      static_cast<std::uint32_t>(s.v);
  std::uint64_t h = hash_combine(seed, key);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

inline Color site_color(std::uint64_t seed, double p, Site s) {
  return site_uniform(seed, s) < p ? Color::Black : Color::White;
}

inline void check_probability(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p must lie in [0,1]");
}

/// Site colouring of a realized region. Colours are looked up lazily from the
/// site hash unless an explicit colouring was supplied; boundary overrides win.
class Configuration {
 public:
  Configuration(std::shared_ptr<const RealizedRegion> region, double p, std::uint64_t seed)
      : region_(std::move(region)), p_(p), seed_(seed) {
    check_probability(p);
  }

  static Configuration from_colors(std::shared_ptr<const RealizedRegion> region,
                                   std::vector<Color> colors) {
    if (colors.size() != region->size()) throw std::invalid_argument("colour vector size mismatch");
    Configuration c(std::move(region), 0.5, 0);
    c.explicit_ = std::make_shared<const std::vector<Color>>(std::move(colors));
    return c;
  }

  /// Colouring from the low bits of `bits`, site i taking bit i (1 = Black).
  static Configuration from_bits(std::shared_ptr<const RealizedRegion> region, std::uint64_t bits) {
    std::vector<Color> colors(region->size());
    for (std::size_t i = 0; i < colors.size(); ++i)
      colors[i] = (bits >> i) & 1 ? Color::Black : Color::White;
    return from_colors(std::move(region), std::move(colors));
  }

  const RealizedRegion& region() const { return *region_; }
  std::shared_ptr<const RealizedRegion> region_ptr() const { return region_; }
  double p() const { return p_; }
  std::uint64_t seed() const { return seed_; }
  const std::map<std::string, Color>& overrides() const { return override_names_; }

  Color color_at(int idx) const {
    if (!point_.empty() && point_[idx] >= 0) return static_cast<Color>(point_[idx]);
    if (!override_.empty() && override_[idx] >= 0) return static_cast<Color>(override_[idx]);
    if (explicit_) return (*explicit_)[idx];
    return site_color(seed_, p_, region_->sites[idx]);
  }

  /// Sites outside the region fall back to the hash (explicit colourings have none).
  Color color(Site s) const {
    int idx = region_->index(s);
    if (idx >= 0) return color_at(idx);
    if (explicit_) throw std::out_of_range("site outside an explicitly coloured region");
    return site_color(seed_, p_, s);
  }

  bool black(Site s) const { return color(s) == Color::Black; }

  /// True when the site's colour is forced by a boundary override.
  bool overridden(Site s) const {
    int idx = region_->index(s);
    return idx >= 0 && !override_.empty() && override_[idx] >= 0;
  }

  std::vector<Color> materialize() const {
    std::vector<Color> out(region_->size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = color_at(static_cast<int>(i));
    return out;
  }

  Configuration with_boundary(const std::map<std::string, Color>& overrides) const {
    Configuration c = *this;
    if (overrides.empty()) return c;
    if (c.override_.empty()) c.override_.assign(region_->size(), -1);
    for (auto& [name, color] : overrides) {
      const Arc* arc = region_->find_arc(name);
      if (!arc) throw std::invalid_argument("unknown arc: " + name);
      for (auto s : arc->sites) c.override_[region_->index(s)] = static_cast<std::int8_t>(color);
      c.override_names_[name] = color;
    }
    return c;
  }

  /// Copy with one site's colour forced; used for flip-and-recompute.
  Configuration with_site(Site s, Color color) const {
    int idx = region_->index(s);
    if (idx < 0) throw std::out_of_range("site outside region");
    Configuration c = *this;
    if (c.point_.empty()) c.point_.assign(region_->size(), -1);
    c.point_[idx] = static_cast<std::int8_t>(color);
    return c;
  }

 private:
  std::shared_ptr<const RealizedRegion> region_;
  double p_ = 0.5;
  std::uint64_t seed_ = 0;
  std::shared_ptr<const std::vector<Color>> explicit_;
  std::vector<std::int8_t> override_;
  std::vector<std::int8_t> point_;
  std::map<std::string, Color> override_names_;
};

inline Configuration sample_config(const Region& region, double p, std::uint64_t seed) {
  return Configuration(std::make_shared<const RealizedRegion>(realize(region)), p, seed);
}

inline Configuration sample_config(std::shared_ptr<const RealizedRegion> region, double p,
                                   std::uint64_t seed) {
  return Configuration(std::move(region), p, seed);
}

inline Configuration with_boundary(const Configuration& c, const std::map<std::string, Color>& overrides) {
  return c.with_boundary(overrides);
}

}  // namespace perc
