#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "perc/sampling.hpp"

using namespace perc;

namespace {

std::shared_ptr<const RealizedRegion> make(const Region& r) { return std::make_shared<const RealizedRegion>(realize(r)); }

}  // namespace

TEST(Color, ComplementIsAnInvolution) {
  EXPECT_EQ(opposite(Color::Black), Color::White);
  EXPECT_EQ(opposite(Color::White), Color::Black);
  for (auto c : {Color::Black, Color::White}) EXPECT_EQ(opposite(opposite(c)), c);
}

TEST(SiteColor, ExtremeProbabilities) {
  for (int u = -10; u <= 10; ++u)
    for (int v = -10; v <= 10; ++v) {
      EXPECT_EQ(site_color(7, 1.0, {u, v}), Color::Black);
      EXPECT_EQ(site_color(7, 0.0, {u, v}), Color::White);
    }
}

TEST(SiteColor, Deterministic) {
  for (std::uint64_t seed : {0ULL, 1ULL, 0xdeadbeefULL})
    for (int u = -5; u <= 5; ++u) {
      Site s{u, 3 - u};
      EXPECT_EQ(site_color(seed, 0.5, s), site_color(seed, 0.5, s));
      EXPECT_EQ(site_uniform(seed, s), site_uniform(seed, s));
    }
}

TEST(SiteColor, UniformsLieInTheUnitInterval) {
  for (int u = -50; u <= 50; ++u)
    for (int v = -50; v <= 50; ++v) {
      double x = site_uniform(3, {u, v});
      EXPECT_GE(x, 0.0);
      EXPECT_LT(x, 1.0);
    }
}

TEST(SampleConfig, BlackFrequencyAtHalf) {
  auto rr = make(Region::parallelogram(32, 32));
  std::size_t black = 0, total = 0;
  for (std::uint64_t seed = 0; total < 100000; ++seed) {
    Configuration c(rr, 0.5, seed);
    for (auto col : c.materialize()) black += col == Color::Black;
    total += rr->size();
  }
  double f = double(black) / double(total);
  double se = std::sqrt(0.25 / double(total));
  EXPECT_LT(std::abs(f - 0.5), 4 * se);
}

TEST(SampleConfig, SameSeedSameConfiguration) {
  auto a = sample_config(Region::hexagon(6), 0.4, 99);
  auto b = sample_config(Region::hexagon(6), 0.4, 99);
  EXPECT_EQ(a.materialize(), b.materialize());
  auto c = sample_config(Region::hexagon(6), 0.4, 100);
  EXPECT_NE(a.materialize(), c.materialize());
}

TEST(SampleConfig, ColoursAreSiteKeyed) {
  auto a = sample_config(Region::hexagon(6), 0.5, 5);
  auto b = sample_config(Region::parallelogram(10, 10), 0.5, 5);
  int shared = 0;
  for (auto s : a.region().sites)
    if (b.region().contains(s)) {
      ++shared;
      EXPECT_EQ(a.color(s), b.color(s));
    }
  EXPECT_GT(shared, 20);
}

TEST(SampleConfig, InvalidProbability) {
  auto rr = make(Region::hexagon(2));
  EXPECT_THROW(Configuration(rr, 1.5, 0), std::invalid_argument);
  EXPECT_THROW(Configuration(rr, -0.1, 0), std::invalid_argument);
}

TEST(SampleConfig, MonotoneCouplingAcrossP) {
  auto rr = make(Region::parallelogram(20, 20));
  for (std::uint64_t seed = 0; seed < 20; ++seed)
    for (double p : {0.1, 0.3, 0.5, 0.7}) {
      Configuration lo(rr, p, seed), hi(rr, p + 0.15, seed);
      for (std::size_t i = 0; i < rr->size(); ++i)
        if (lo.color_at(int(i)) == Color::Black) {
          EXPECT_EQ(hi.color_at(int(i)), Color::Black);
        }
    }
}

// Correlation of +-1 spins over 10^6 neighbour pairs, per lattice direction.
TEST(SampleConfig, NeighbourPairsUncorrelated) {
  const int side = 1000;
  for (int k = 0; k < 3; ++k) {
    Site d = kDirections[k];
    double acc = 0;
    for (int v = 0; v < side; ++v)
      for (int u = 0; u < side; ++u) {
        Site s{u, v};
        double a = site_color(11, 0.5, s) == Color::Black ? 1 : -1;
        double b = site_color(11, 0.5, s + d) == Color::Black ? 1 : -1;
        acc += a * b;
      }
    double n = double(side) * side;
    EXPECT_LT(std::abs(acc / n), 4 / std::sqrt(n)) << "direction " << k;
  }
}

TEST(WithBoundary, OverridesArcsOnly) {
  auto rr = make(Region::parallelogram(6, 4));
  auto split = std::make_shared<const RealizedRegion>(rr->split({3, 0}, {3, 4}));
  Configuration c(split, 0.5, 17);
  auto o = c.with_boundary({{"black", Color::Black}, {"white", Color::White}});
  for (auto s : split->find_arc("black")->sites) EXPECT_EQ(o.color(s), Color::Black);
  for (auto s : split->find_arc("white")->sites) EXPECT_EQ(o.color(s), Color::White);
  for (auto s : split->sites)
    if (!split->is_boundary(s)) {
      EXPECT_EQ(o.color(s), c.color(s));
    }
}

TEST(WithBoundary, EmptyOverrideIsIdentity) {
  auto c = sample_config(Region::hexagon(5), 0.5, 3);
  EXPECT_EQ(c.with_boundary({}).materialize(), c.materialize());
}

TEST(WithBoundary, UnknownArcIsAnError) {
  auto c = sample_config(Region::hexagon(5), 0.5, 3);
  EXPECT_THROW(c.with_boundary({{"left", Color::Black}}), std::invalid_argument);
}

TEST(Configuration, FromBitsAndWithSite) {
  auto rr = make(Region::parallelogram(2, 1));
  auto c = Configuration::from_bits(rr, 0b101101);
  for (std::size_t i = 0; i < rr->size(); ++i)
    EXPECT_EQ(c.color_at(int(i)), (0b101101 >> i) & 1 ? Color::Black : Color::White);
  auto d = c.with_site(rr->sites[1], Color::Black);
  EXPECT_EQ(d.color_at(1), Color::Black);
  EXPECT_EQ(c.color_at(1), Color::White);
  EXPECT_THROW(c.with_site({9, 9}, Color::Black), std::out_of_range);
}
