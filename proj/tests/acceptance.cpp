// Runs the acceptance criteria; prints one PASS/FAIL line per criterion.
// Arguments, when given, select criteria by number.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "perc/perc.hpp"

using namespace perc;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [failed]");
  }
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

std::string fmt(const char* f, double a, double b, double c) {
  char buf[200];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

double combined(const Estimate& a, const Estimate& b) { return std::hypot(a.std_err, b.std_err); }

// 1. Exact duality by enumeration on rhombi with up to 4 sites per side.
Outcome exact_duality() {
  Outcome o;
  for (int k = 0; k <= 3; ++k) {
    auto rr = std::make_shared<const RealizedRegion>(realize(Region::parallelogram(k, k)));
    const std::size_t m = rr->size();
    std::uint64_t black = 0;
    bool xor_law = true;
    for (std::uint64_t bits = 0; bits < (1ULL << m); ++bits) {
      auto c = Configuration::from_bits(rr, bits);
      bool b = has_crossing(c, "left", "right", Color::Black);
      bool w = has_crossing(c, "top", "bottom", Color::White);
      black += b;
      xor_law = xor_law && (b != w);
    }
    o.check(2 * black == (1ULL << m) && xor_law,
            "k=" + std::to_string(k) + " " + std::to_string(black) + "/" + std::to_string(1ULL << m) +
                (xor_law ? " xor ok" : " xor broken"));
  }
  return o;
}

// 2. Monte Carlo duality on rhombi.
Outcome mc_duality() {
  Outcome o;
  for (int n : {16, 32, 64}) {
    auto e = crossing_probability(n, n, 0.5, 100000, 2000 + n);
    o.check(std::abs(e.mean - 0.5) < 4 * e.std_err, fmt("n=%.0f h=%.5f+-%.5f", n, e.mean, e.std_err));
  }
  return o;
}

// 3. Cardy's formula on the side-64 triangle.
Outcome cardy() {
  Outcome o;
  const int n = 64;
  const std::vector<double> fr{0.25, 0.5, 0.75};
  auto est = cardy_crossing(fr, n, 0.5, 20000, 3003);
  for (std::size_t k = 0; k < fr.size(); ++k)
    o.check(std::abs(est[k].mean - fr[k]) < 4 * est[k].std_err + 0.03,
            fmt("X=%.2f %.4f+-%.4f", fr[k], est[k].mean, est[k].std_err));
  cplx centroid = (kCornerA + kCornerB + kCornerC) / 3.0;
  auto h = estimate_Hj(centroid, Corner::C, n, 0.5, 20000, 3004);
  o.check(std::abs(h.estimate.mean - 1.0 / 3) < 4 * h.estimate.std_err + 0.03,
          fmt("centroid %.4f+-%.4f", h.estimate.mean, h.estimate.std_err));
  return o;
}

// 4. Colour switching: exact on side 3, Monte Carlo at n = 32.
Outcome color_switching() {
  Outcome o;
  const int n = 3;
  for (int v = 0; v + 2 <= n; ++v)
    for (int u = 0; u + v + 2 <= n; ++u) {
      auto c = color_switch_exact(n, down_face(u, v));
      o.check(c[0] == c[1] && c[1] == c[2] && c[0] > 0,
              "face(" + std::to_string(u) + "," + std::to_string(v) + ") " + std::to_string(c[0]) + "/" +
                  std::to_string(c[1]) + "/" + std::to_string(c[2]));
    }
  auto est = color_switch_check(down_face(10, 10), 32, 20000, 4004);
  bool ok = true;
  for (int a = 0; a < 3; ++a)
    for (int b = a + 1; b < 3; ++b) ok = ok && std::abs(est[a].mean - est[b].mean) < 4 * combined(est[a], est[b]);
  o.check(ok, fmt("n=32 %.4f %.4f %.4f", est[0].mean, est[1].mean, est[2].mean));
  return o;
}

Outcome slope_gate(const std::string& name, const std::vector<FitPoint>& pts, double lo, double hi) {
  Outcome o;
  auto f = exponent_fit(pts);
  o.check(f.slope >= lo && f.slope <= hi, name + fmt(" slope %.4f+-%.4f", f.slope, f.slope_stderr));
  return o;
}

void merge(Outcome& into, const Outcome& o) {
  into.pass = into.pass && o.pass;
  into.detail += (into.detail.empty() ? "" : "; ") + o.detail;
}

// 5. One-arm exponent.
Outcome one_arm() {
  auto pts = arm_curve(ArmEvent::OneArm, {8, 16, 32, 64, 128, 256}, 0.5, {20000}, 5005);
  return slope_gate("one-arm", pts, 0.07, 0.14);
}

// 6. Four-arm exponent.
Outcome four_arm() {
  auto pts = arm_curve(ArmEvent::FourArm, {8, 16, 32, 64, 128}, 0.5, {20000}, 6006);
  return slope_gate("four-arm", pts, 1.0, 1.5);
}

// 7. Five-arm, half-plane two- and three-arm exponents.
Outcome five_arm() {
  Outcome o;
  merge(o, slope_gate("u_m", arm_curve(ArmEvent::FiveArm, {8, 16, 32, 64}, 0.5, {40000}, 7007), 1.7, 2.3));
  merge(o, slope_gate("w_n", arm_curve(ArmEvent::HalfPlaneTwo, {8, 16, 32, 64}, 0.5, {20000}, 7008), 0.8, 1.2));
  merge(o, slope_gate("v_n", arm_curve(ArmEvent::HalfPlaneThree, {8, 16, 32, 64}, 0.5, {40000}, 7009), 1.7, 2.3));
  return o;
}

// 8. SLE(6) signature of the exploration interface.
Outcome sle() {
  Outcome o;
  auto sig = sle_signature(128, 500, 0.02, 8008);
  o.check(std::abs(sig.drift_z) < 4, fmt("drift z %.3f", sig.drift_z));
  o.check(sig.var_slope >= 4.5 && sig.var_slope <= 7.5, fmt("variance slope %.3f+-%.3f", sig.var_slope, sig.var_slope_stderr));
  return o;
}

// 9. Driving extraction round trip.
Outcome round_trip() {
  Outcome o;
  double worst = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto d = sample_bm_driving(6, 1e-4, 1, 9000 + s);
    auto back = extract_driving(chordal_trace(d));
    if (back.size() != d.size()) {
      worst = INFINITY;
      break;
    }
    for (std::size_t k = 0; k < d.size(); ++k) {
      worst = std::max(worst, std::abs(back.values[k] - d.values[k]));
      worst = std::max(worst, std::abs(back.times[k] - d.times[k]));
    }
  }
  o.check(worst < 1e-3, fmt("sup error %.3g", worst));
  return o;
}

// 10. Radial Loewner numerics.
Outcome radial() {
  Outcome o;
  int violations = 0;
  std::size_t steps = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    auto d = sample_bm_driving(6, 0.02, 1, 10000 + s, DrivingMode::Radial);
    try {
      auto st = solve_radial_chain(d, 1);
      for (std::size_t k = 0; k < st.times.size(); ++k) {
        double t = st.times[k], dist = st.distances[k];
        violations += !(dist >= std::exp(-t) / 4 * (1 - 1e-9) && dist <= std::exp(-t) * (1 + 1e-9));
        ++steps;
      }
    } catch (const std::logic_error&) {
      ++violations;
    }
  }
  o.check(violations == 0, std::to_string(violations) + " Koebe violations in " + std::to_string(steps) + " steps");
  const double T = std::log(4.0);
  auto c = sample_bm_driving(0, T / 40, T, 0, DrivingMode::Radial);
  double dist = solve_radial_chain(c, T).d, exact = radial_slit_distance(T);
  o.check(std::abs(dist - exact) < 1e-4, fmt("slit %.7f vs %.7f", dist, exact));
  return o;
}

// 11. Diffusion martingale identities and the J_t exponent.
Outcome diffusion() {
  Outcome o;
  struct Case {
    double b, t, exact;
  } cases[] = {{0, 1, std::exp(-0.25)}, {1, 0.5, std::exp(-0.625)}};
  for (auto c : cases) {
    auto coarse = martingale_estimate(std::numbers::pi, c.b, c.t, 1e-3, 20000, 11011);
    auto fine = martingale_estimate(std::numbers::pi, c.b, c.t, 5e-4, 20000, 11011);
    double bias = std::abs(fine.mean - coarse.mean);
    o.check(std::abs(fine.mean - c.exact) < 3 * fine.std_err + bias,
            fmt("b=%.0f %.5f vs %.5f", c.b, fine.mean, c.exact) + fmt(" (3se+bias %.5f)", 3 * fine.std_err + bias));
  }
  std::vector<double> ts;
  for (int t = 4; t <= 12; ++t) ts.push_back(t);
  auto j = estimate_Jt(ts, 10000, 2e-3, 11012);
  std::vector<double> y;
  for (auto& e : j) y.push_back(-std::log(e.mean));
  auto f = linear_fit(ts, y);
  o.check(f.slope >= 0.07 && f.slope <= 0.14, fmt("J_t slope %.4f+-%.4f", f.slope, f.slope_stderr));
  return o;
}

// 12. Exponent algebra and generator residuals.
Outcome exponent_algebra() {
  Outcome o;
  auto e0 = q_lambda(0), e1 = q_lambda(1);
  o.check(e0.q == 1.0 / 3 && e0.lambda == 0.25 && e1.q == 1.0 && e1.lambda == 1.25, "q, lambda at b = 0, 1");
  double worst = 0;
  for (double b : {0.0, 1.0, 0.5, 2.0, 7.0}) {
    auto e = q_lambda(b);
    for (int k = 1; k < 200; ++k) {
      double x = 2 * std::numbers::pi * k / 200;
      worst = std::max(worst, std::abs(generator_residual([&](Jet2 v) { return pow(sin(0.5 * v), e.q); }, x, b, e.lambda)));
    }
  }
  double neumann = 0;
  for (double x = 0.01; x < 2 * std::numbers::pi - 0.1; x += 0.01)
    neumann = std::max(neumann, std::abs(generator_residual([](Jet2 v) { return pow(cos(0.25 * v), 1.0 / 3); }, x, 0, 5.0 / 48)));
  o.check(worst < 1e-8, fmt("sin^q residual %.2g", worst));
  o.check(neumann < 1e-8, fmt("Neumann residual %.2g", neumann));
  return o;
}

// 13. Near-critical scaling.
Outcome near_critical() {
  Outcome o;
  std::vector<double> lx, ly;
  std::string ls;
  for (double p : {0.52, 0.54, 0.56, 0.58}) {
    auto r = correlation_length(p, 0.02, 13013, 1 << 14, 2000, 2000);
    lx.push_back(std::log(p - 0.5));
    ly.push_back(std::log(double(r.L)));
    ls += (ls.empty() ? "" : ",") + std::to_string(r.L);
  }
  auto f = linear_fit(lx, ly);
  o.check(f.slope >= -1.73 && f.slope <= -0.93, "L=" + ls + fmt(" slope %.3f", f.slope));
  for (double p : {0.54, 0.56, 0.6}) {
    auto r = correlation_length(p, 0.02, 13013, 1 << 14, 2000, 20000);
    const int N = 4, M = std::max(4 * N, 2 * r.L);
    auto th = theta_density(p, N, M, 2000, 13014);
    double ratio = th.mean / r.one_arm_at_L.mean;
    o.check(ratio >= 0.05 && ratio <= 20, fmt("p=%.2f theta/pi(L) %.3f", p, ratio));
  }
  for (int n : {8, 16, 32}) {
    auto rd = russo_derivative(n, 0.5, 2000, 13015 + n);
    auto p4 = arm_probability(ArmEvent::FourArm, n, 0.5, 20000, 13016 + n);
    double ratio = rd.mean / (double(n) * n * p4.mean);
    o.check(ratio >= 0.02 && ratio <= 50, fmt("n=%.0f Russo ratio %.3f", n, ratio));
  }
  auto rd = russo_derivative(16, 0.5, 4000, 13020);
  auto fd = finite_difference_crossing(16, 0.5, 0.02, 40000, 13021);
  o.check(std::abs(rd.mean - fd.mean) < 4 * combined(rd, fd), fmt("n=16 Russo %.3f vs FD %.3f", rd.mean, fd.mean));
  return o;
}

// 14. Bit-exact reruns at several worker counts.
Outcome determinism() {
  Outcome o;
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / ("perc_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const std::vector<std::string> configs = {
      "command = crossing\nregion = parallelogram(32,16)\nn_samples = 2000\nseed = 5\n",
      "command = arms\nevent = four_arm\nsizes = 8,16,32\nn_samples = 1000\nseed = 6\n",
      "command = cardy\nn = 32\nx = 0.25\nn_samples = 1000\nseed = 7\nformat = jsonl\n",
      "command = sle\nn = 32\nn_samples = 40\nt = 0.02\nseed = 8\n",
      "command = diffusion\nmode = reflect\nt = 2\nn_samples = 500\nseed = 9\n",
      "command = nearcritical\np_values = 0.6,0.7\nn_samples = 500\nseed = 10\n",
      "command = explore\nregion = hexagon(12)\nseed = 11\nsvg = " + (dir / "explore.svg").string() + "\n",
  };
  auto slurp = [](const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
  };
  int identical = 0;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const std::string text = configs[i] + "output = " + (dir / "out.txt").string() + "\n";
    std::vector<std::string> files;
    for (int workers : {1, 4, 1, 3}) {
      auto cfg = parse_config(text, "case" + std::to_string(i) + ".cfg");
      cfg.set("workers", std::to_string(workers));
      RunOptions opt;
      if (run_experiment(cfg, opt).status != 0) o.check(false, "config " + std::to_string(i) + " status nonzero");
      std::string all = slurp(dir / "out.txt");
      if (fs::exists(dir / "explore.svg")) all += slurp(dir / "explore.svg");
      files.push_back(all);
      fs::remove(dir / "out.txt");
      fs::remove(dir / "explore.svg");
    }
    bool same = files[0] == files[1] && files[0] == files[2] && files[0] == files[3] && !files[0].empty();
    identical += same;
    if (!same) o.check(false, "config " + std::to_string(i) + " differs");
  }
  fs::remove_all(dir);
  o.check(identical == static_cast<int>(configs.size()),
          std::to_string(identical) + "/" + std::to_string(configs.size()) + " experiments bit-identical over workers 1,4,1,3");
  return o;
}

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;  // 0 when no runtime bound applies
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "exact duality", 1, exact_duality},
      {2, "Monte Carlo duality", 60, mc_duality},
      {3, "Cardy formula", 300, cardy},
      {4, "colour switching", 0, color_switching},
      {5, "one-arm exponent", 900, one_arm},
      {6, "four-arm exponent", 900, four_arm},
      {7, "five-arm and half-plane exponents", 600, five_arm},
      {8, "SLE(6) driving signature", 600, sle},
      {9, "Loewner round trip", 0, round_trip},
      {10, "radial numerics", 0, radial},
      {11, "diffusion identities", 600, diffusion},
      {12, "exponent algebra", 0, exponent_algebra},
      {13, "near-critical scaling", 1800, near_critical},
      {14, "determinism", 0, determinism},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failures = 0;
  for (const auto& c : all) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.limit_seconds > 0 && secs >= c.limit_seconds) o.check(false, fmt("runtime %.1f s over %.0f s", secs, c.limit_seconds));
    failures += !o.pass;
    std::printf("%s criterion %d (%s): %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
