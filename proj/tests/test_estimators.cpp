#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <queue>
#include <random>
#include <set>

#include "perc/connectivity.hpp"
#include "perc/estimators.hpp"

using namespace perc;

namespace {

std::shared_ptr<const RealizedRegion> make(const Region& r) { return std::make_shared<const RealizedRegion>(realize(r)); }

// Black path from s to the ring at distance M inside Lambda_M, by plain BFS.
bool reaches_ring(std::uint64_t seed, double p, Site s, int M) {
  auto black = [&](Site q) { return site_color(seed, p, q) == Color::Black; };
  if (!black(s)) return false;
  std::set<std::pair<int, int>> seen{{s.u, s.v}};
  std::queue<Site> q;
  q.push(s);
  while (!q.empty()) {
    Site x = q.front();
    q.pop();
    if (graph_norm(x) == M) return true;
    for (auto t : neighbors(x))
      if (graph_norm(t) <= M && black(t) && seen.insert({t.u, t.v}).second) q.push(t);
  }
  return false;
}

}  // namespace

TEST(MonteCarlo, DeterministicAndWorkerIndependent) {
  auto a = crossing_probability(12, 6, 0.5, 500, 42);
  auto b = crossing_probability(12, 6, 0.5, 500, 42);
  auto c = crossing_probability(12, 6, 0.5, 500, 42, 3);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.std_err, b.std_err);
  EXPECT_EQ(a.mean, c.mean);
  EXPECT_EQ(a.std_err, c.std_err);
  EXPECT_EQ(a.n_samples, 500u);
  EXPECT_EQ(a.seed, 42u);
}

TEST(MonteCarlo, CertainEvents) {
  auto one = h_crossing(8, 1.0, 50, 1);
  EXPECT_EQ(one.mean, 1.0);
  EXPECT_EQ(one.std_err, 0.0);
  auto zero = h_crossing(8, 0.0, 50, 1);
  EXPECT_EQ(zero.mean, 0.0);
  EXPECT_THROW(h_crossing(8, 0.5, 0, 1), std::invalid_argument);
  EXPECT_THROW(h_crossing(8, 1.5, 10, 1), std::invalid_argument);
}

TEST(MonteCarlo, SummaryStatistics) {
  std::vector<double> v{1, 2, 3, 4};
  auto e = summarize(v, 7);
  EXPECT_DOUBLE_EQ(e.mean, 2.5);
  EXPECT_DOUBLE_EQ(e.std_err, std::sqrt((2.25 * 2 + 0.25 * 2) / 3 / 4));
  std::vector<double> big(1000);
  for (std::size_t i = 0; i < big.size(); ++i) big[i] = 0.1 * static_cast<double>(i % 7);
  double naive = 0;
  for (double x : big) naive += x;
  EXPECT_NEAR(pairwise_sum(big.data(), big.size()), naive, 1e-9);
}

TEST(Crossing, MatchesClusterSearchPerSample) {
  for (double p : {0.3, 0.5, 0.7}) {
    const int a = 9, b = 5;
    const std::uint64_t seed = 11;
    auto rr = make(Region::parallelogram(a, b));
    double hits = 0;
    const std::size_t n = 300;
    for (std::size_t i = 0; i < n; ++i) {
      Configuration c(rr, p, sample_seed(seed, i));
      hits += has_crossing(c, "left", "right", Color::Black);
    }
    EXPECT_DOUBLE_EQ(crossing_probability(a, b, p, n, seed).mean, hits / n) << "p=" << p;
  }
}

TEST(Arms, OneArmMatchesClusterLabelling) {
  const int n = 6;
  const std::uint64_t seed = 3;
  auto rr = make(Region::hexagon(n));
  double hits = 0;
  const std::size_t ns = 400;
  for (std::size_t i = 0; i < ns; ++i) hits += reaches_ring(sample_seed(seed, i), 0.5, {0, 0}, n);
  EXPECT_DOUBLE_EQ(arm_probability(ArmEvent::OneArm, n, 0.5, ns, seed).mean, hits / ns);
}

TEST(Arms, CoupledOneArmDecreases) {
  double prev = 1;
  for (int n : {2, 4, 8, 16, 32}) {
    double e = arm_probability(ArmEvent::OneArm, n, 0.5, 2000, 9).mean;
    EXPECT_LE(e, prev) << "n=" << n;
    prev = e;
  }
}

TEST(Arms, NamesRoundTripAndScaleChecks) {
  for (auto e : {ArmEvent::OneArm, ArmEvent::FourArm, ArmEvent::TwoArm, ArmEvent::HalfPlaneTwo,
                 ArmEvent::HalfPlaneThree, ArmEvent::FiveArm})
    EXPECT_EQ(parse_arm_event(arm_event_name(e)), e);
  EXPECT_THROW(parse_arm_event("six_arm"), std::invalid_argument);
  EXPECT_THROW(arm_probability(ArmEvent::FourArm, 1, 0.5, 10, 0), std::invalid_argument);
  EXPECT_THROW(annulus_arm_probability(5, 4, true, 0.5, 10, 0), std::invalid_argument);
  EXPECT_THROW(interface_arm_probability(0, 4, 2, 0.5, 10, 0), std::invalid_argument);
}

TEST(Arms, Submultiplicativity) {
  const std::size_t ns = 20000;
  auto a = annulus_arm_probability(4, 16, true, 0.5, ns, 100);
  auto b = annulus_arm_probability(16, 64, true, 0.5, ns, 200);
  auto c = annulus_arm_probability(4, 64, true, 0.5, ns, 300);
  double prod = a.mean * b.mean;
  double se = std::sqrt(std::pow(a.std_err * b.mean, 2) + std::pow(b.std_err * a.mean, 2) + c.std_err * c.std_err);
  EXPECT_LE(c.mean, prod + 4 * se);
  EXPECT_GT(c.mean / prod, 0.1);
}

TEST(Arms, TwoArmExponent) {
  auto pts = arm_curve(ArmEvent::TwoArm, {8, 16, 32, 64}, 0.5, {4000}, 21);
  auto f = exponent_fit(pts);
  EXPECT_GE(f.slope, 0.15);
  EXPECT_LE(f.slope, 0.35);
}

TEST(ExponentFit, ExactPowerLaw) {
  std::vector<FitPoint> pts;
  for (double n : {8.0, 16.0, 32.0, 64.0}) pts.push_back({n, 3 * std::pow(n, -1.25), 0});
  auto f = exponent_fit(pts);
  EXPECT_NEAR(f.slope, 1.25, 1e-12);
  EXPECT_NEAR(f.intercept, std::log(3.0), 1e-12);
  std::vector<FitPoint> flat;
  for (double n : {8.0, 16.0, 32.0}) flat.push_back({n, 0.4, 0.01});
  EXPECT_NEAR(exponent_fit(flat).slope, 0, 1e-12);
}

TEST(ExponentFit, FiltersSmallScalesAndRejectsBadInput) {
  std::vector<FitPoint> pts{{2, 1, 0}, {8, std::pow(8.0, -0.5), 0}, {16, 0.25, 0}, {32, std::pow(32.0, -0.5), 0}};
  EXPECT_NEAR(exponent_fit(pts, 8).slope, 0.5, 1e-12);
  EXPECT_EQ(exponent_fit(pts, 8).points.size(), 3u);
  EXPECT_THROW(exponent_fit({{8, 0.1, 0}, {16, 0.05, 0}}), std::invalid_argument);
  EXPECT_THROW(exponent_fit({{8, 0.1, 0}, {16, 0, 0}, {32, 0.01, 0}}), std::invalid_argument);
  EXPECT_THROW(linear_fit({1, 1, 1}, {1, 2, 3}), std::invalid_argument);
  EXPECT_THROW(linear_fit({1, 2}, {1}), std::invalid_argument);
}

// The fitted slope error is calibrated if the truth lies within two of them
// about 95% of the time.
TEST(ExponentFit, StderrCalibration) {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> g;
  int covered = 0;
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<FitPoint> pts;
    for (double n : {8.0, 16.0, 32.0, 64.0, 128.0}) {
      double truth = 0.7 * std::pow(n, -0.6);
      double se = 0.05 * truth;
      pts.push_back({n, truth + se * g(rng), se});
    }
    auto f = exponent_fit(pts);
    covered += std::abs(f.slope - 0.6) < 2 * f.slope_stderr;
  }
  EXPECT_GE(covered, 90);
}

TEST(Wilson, LowerBoundSolvesTheScoreEquation) {
  for (double ph : {0.0, 0.1, 0.5, 0.98, 1.0})
    for (std::size_t n : {10u, 200u, 5000u}) {
      const double z = 2.326, nn = static_cast<double>(n);
      // (ph - x)^2 = z^2 x (1 - x) / n, smaller root.
      double A = 1 + z * z / nn, B = -(2 * ph + z * z / nn), C = ph * ph;
      double root = (-B - std::sqrt(B * B - 4 * A * C)) / (2 * A);
      EXPECT_NEAR(wilson_lower(ph, n), root, 1e-12);
      EXPECT_LE(wilson_lower(ph, n), ph + 1e-15);
    }
  EXPECT_EQ(wilson_lower(0.5, 0), 0.0);
}

// With 2000 samples the Wilson bound of a perfect record is 0.9973.
TEST(CorrelationLength, CertainCrossing) {
  auto r = correlation_length(1.0, 0.02, 5, 64, 2000, 50);
  EXPECT_EQ(r.L, 1);
  EXPECT_EQ(r.h_at_L.mean, 1.0);
  ASSERT_FALSE(r.tested.empty());
}

TEST(CorrelationLength, MinimalAmongTested) {
  auto r = correlation_length(0.6, 0.02, 5, 1 << 12, 1000, 100);
  for (auto& [n, e] : r.tested) {
    bool pass = wilson_lower(e.mean, 1000) >= 0.98;
    if (n < r.L) {
      EXPECT_FALSE(pass) << "n=" << n;
    }
    if (n == r.L) {
      EXPECT_TRUE(pass);
    }
  }
  bool below = false;
  for (auto& [n, e] : r.tested) below |= n == r.L - 1;
  EXPECT_TRUE(below || r.L == 1);
}

TEST(CorrelationLength, NonincreasingInP) {
  int prev = 1 << 30;
  for (double p : {0.55, 0.6, 0.7}) {
    int L = correlation_length(p, 0.02, 13, 1 << 12, 1000, 100).L;
    EXPECT_LE(L, prev) << "p=" << p;
    prev = L;
  }
}

TEST(CorrelationLength, Errors) {
  EXPECT_THROW(correlation_length(0.5, 0.02, 0, 10), std::invalid_argument);
  EXPECT_THROW(correlation_length(0.6, 0.6, 0, 10), std::invalid_argument);
  EXPECT_THROW(correlation_length(0.6, 0.02, 0, 0), std::invalid_argument);
  EXPECT_THROW(correlation_length(0.51, 0.02, 0, 4, 200, 10), std::runtime_error);
}

TEST(Theta, ExtremesAndErrors) {
  EXPECT_EQ(theta_density(1.0, 3, 12, 5, 0).mean, 1.0);
  EXPECT_EQ(theta_density(0.0, 3, 12, 5, 0).mean, 0.0);
  EXPECT_THROW(theta_density(0.6, 4, 15, 5, 0), std::invalid_argument);
}

TEST(Theta, MatchesBreadthFirstSearch) {
  const int N = 3, M = 12;
  for (double p : {0.5, 0.6}) {
    const std::uint64_t seed = 17;
    const std::size_t ns = 30;
    double acc = 0;
    int total = 0;
    for (std::size_t i = 0; i < ns; ++i) {
      int hits = 0;
      total = 0;
      for (int r = 0; r <= N; ++r)
        for (auto s : hexagon_ring(r)) {
          ++total;
          hits += reaches_ring(sample_seed(seed, i), p, s, M);
        }
      acc += double(hits) / total;
    }
    EXPECT_NEAR(theta_density(p, N, M, ns, seed).mean, acc / ns, 1e-12) << "p=" << p;
  }
}

// Coupled in M, so the decrease is exact per sample; the drop over a factor 8
// should be near 8^{-5/48} = 0.81.
TEST(Theta, CriticalDensityDecaysWithM) {
  double prev = 1;
  std::vector<Estimate> est;
  for (int M : {8, 16, 32, 64}) {
    est.push_back(theta_density(0.5, 2, M, 2000, 23));
    EXPECT_LE(est.back().mean, prev) << "M=" << M;
    prev = est.back().mean;
  }
  double ratio = est.back().mean / est.front().mean;
  EXPECT_GT(ratio, 0.6);
  EXPECT_LT(ratio, 0.9);
}

TEST(Russo, NoPivotalsWhenCertain) {
  EXPECT_EQ(russo_derivative(6, 1.0, 20, 0).mean, 0.0);
  EXPECT_EQ(russo_derivative(6, 0.0, 20, 0).mean, 0.0);
  EXPECT_THROW(russo_derivative(1, 0.5, 20, 0), std::invalid_argument);
}

TEST(Russo, MatchesCoupledFiniteDifference) {
  const int n = 8;
  auto r = russo_derivative(n, 0.5, 4000, 31);
  auto fd = finite_difference_crossing(n, 0.5, 0.02, 40000, 37);
  double se = std::hypot(r.std_err, fd.std_err);
  EXPECT_LT(std::abs(r.mean - fd.mean), 4 * se) << r.mean << " vs " << fd.mean;
}

TEST(Russo, FiniteDifferenceOfCertainCrossing) {
  EXPECT_THROW(finite_difference_crossing(8, 0.99, 0.02, 10, 0), std::invalid_argument);
  EXPECT_THROW(finite_difference_crossing(8, 0.5, 0, 10, 0), std::invalid_argument);
}

TEST(SleSignature, ShapeAndDeterminism) {
  auto a = sle_signature(16, 40, 0.05, 3, 5);
  auto b = sle_signature(16, 40, 0.05, 3, 5, 2);
  ASSERT_EQ(a.grid_t.size(), 5u);
  EXPECT_EQ(a.mean_w.size(), 5u);
  EXPECT_EQ(a.var_w.size(), 5u);
  EXPECT_DOUBLE_EQ(a.grid_t.back(), 0.05);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(a.mean_w[i].mean, b.mean_w[i].mean);
    EXPECT_GE(a.var_w[i], 0);
  }
  EXPECT_EQ(a.var_slope, b.var_slope);
  EXPECT_GT(a.steps.mean, 0);
  EXPECT_GT(a.qv.mean, 0);
  EXPECT_THROW(sle_signature(1, 10, 0.05, 0), std::invalid_argument);
}

TEST(SleSignature, DrivingCapacityIsIncreasing) {
  auto base = realize(Region::parallelogram(32, 16));
  auto split = std::make_shared<const RealizedRegion>(base.split(Site{16, 0}, Site{0, 16}));
  auto c = Configuration(split, 0.5, 8).with_boundary({{"black", Color::Black}, {"white", Color::White}});
  DrivingExtractor ex(0.0);
  std::size_t steps = 0;
  interface_driving(c, 16, 0.05, ex, steps);
  const auto& d = ex.driving();
  EXPECT_GE(d.times.back(), 0.05);
  EXPECT_NO_THROW(check_driving(d));
  EXPECT_GE(steps + 1, d.size() - 1);
}
