#pragma once

#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "perc/cardy.hpp"
#include "perc/config.hpp"
#include "perc/estimators.hpp"
#include "perc/exploration.hpp"
#include "perc/loewner.hpp"
#include "perc/output.hpp"

namespace perc {

struct RunOptions {
  bool assert_gates = false;
  std::ostream* diagnostics = &std::cerr;
  std::ostream* stdout_stream = &std::cout;
};

struct RunResult {
  int status = 0;  // 0 ok, 2 gate failure
  std::vector<std::string> artifacts;
  std::vector<std::string> gate_failures;
};

namespace detail {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Runner {
  const ExperimentConfig& cfg;
  const RunOptions& opt;
  RunResult result;

  std::string optional_string(const std::string& key) const { return cfg.present(key) ? cfg.get_string(key) : ""; }
  std::uint64_t seed() const { return cfg.get_u64("seed"); }
  int workers() const { return static_cast<int>(cfg.get_int("workers")); }
  std::size_t samples() const { return static_cast<std::size_t>(cfg.get_int("n_samples")); }
  int n() const { return static_cast<int>(cfg.get_int("n")); }
  double p() const { return cfg.get_double("p"); }

  void emit(const Table& t) {
    std::ostringstream buf;
    write_table(buf, cfg, t);
    std::string path = optional_string("output");
    if (path.empty()) {
      *opt.stdout_stream << buf.str();
    } else {
      write_file(path, buf.str());
      result.artifacts.push_back(path);
    }
  }

  void emit_svg(const std::string& doc) {
    std::string path = optional_string("svg");
    if (path.empty()) return;
    write_file(path, doc);
    result.artifacts.push_back(path);
  }

  void gate(bool ok, const std::string& what) {
    if (!opt.assert_gates || ok) return;
    result.gate_failures.push_back(what);
    *opt.diagnostics << "gate failed: " << what << "\n";
    result.status = 2;
  }

  /// |mean - expect| <= 4 sigma + tolerance, when a target is known.
  void gate_estimate(const Estimate& e, std::optional<double> expect, const std::string& name) {
    if (!expect) return;
    double tol = 4 * e.std_err + cfg.get_double("tolerance");
    gate(std::abs(e.mean - *expect) <= tol, name + ": |" + format_17g(e.mean) + " - " + format_17g(*expect) +
                                                "| > " + format_17g(tol));
  }

  void gate_slope(double slope, const std::string& name) {
    if (cfg.present("slope_min"))
      gate(slope >= cfg.get_double("slope_min"), name + " slope " + format_17g(slope) + " below slope_min");
    if (cfg.present("slope_max"))
      gate(slope <= cfg.get_double("slope_max"), name + " slope " + format_17g(slope) + " above slope_max");
  }

  std::optional<double> expect() const {
    if (cfg.present("expect")) return cfg.get_double("expect");
    return std::nullopt;
  }

  std::shared_ptr<const RealizedRegion> region() const {
    return std::make_shared<const RealizedRegion>(realize(parse_region(cfg.get_string("region"))));
  }

  void sample() {
    auto c = sample_config(region(), p(), seed());
    Table t{{"u", "v", "x", "y", "color"}, {}};
    const auto& rr = c.region();
    for (std::size_t i = 0; i < rr.size(); ++i) {
      Site s = rr.sites[i];
      cplx z = to_plane(s);
      t.add({static_cast<long long>(s.u), static_cast<long long>(s.v), z.real(), z.imag(),
             std::string(color_name(c.color_at(static_cast<int>(i))))});
    }
    emit(t);
    emit_svg(render_svg(c, &cfg));
  }

  void crossing() {
    Region r = parse_region(cfg.get_string("region"));
    if (r.kind != RegionKind::Parallelogram) throw ConfigError("crossing needs a parallelogram region");
    Estimate e = crossing_probability(r.a, r.b, p(), samples(), seed(), workers());
    Table t{{"quantity", "a", "b", "p", "mean", "stderr", "n_samples", "seed"}, {}};
    t.add({std::string("crossing"), static_cast<long long>(r.a), static_cast<long long>(r.b), p(), e.mean, e.std_err,
           static_cast<long long>(e.n_samples), e.seed});
    emit(t);
    gate_estimate(e, expect(), "crossing");
  }

  void arms() {
    ArmEvent ev = parse_arm_event(cfg.get_string("event"));
    auto sizes = cfg.get_ints("sizes");
    auto pts = arm_curve(ev, sizes, p(), {samples()}, seed(), workers());
    Table t{{"quantity", "n", "p", "mean", "stderr", "n_samples", "seed"}, {}};
    for (std::size_t i = 0; i < pts.size(); ++i)
      t.add({std::string(arm_event_name(ev)), static_cast<long long>(sizes[i]), p(), pts[i].estimate, pts[i].std_err,
             static_cast<long long>(samples()), hash_combine(seed(), static_cast<std::uint64_t>(sizes[i]))});
    fit_rows(t, pts, std::string(arm_event_name(ev)), [&](const std::string& q, double min, const ExponentFit& f) {
      t.add({q, static_cast<long long>(min), p(), f.slope, f.slope_stderr, static_cast<long long>(f.points.size()),
             seed()});
    });
    emit(t);
  }

  /// Raw fit and the fit without scales below 8; the gate uses the filtered fit
  /// when it has enough points.
  template <class Add>
  void fit_rows(Table&, const std::vector<FitPoint>& pts, const std::string& name, Add&& add) {
    if (pts.size() < 3) return;
    bool positive = true;
    for (auto& q : pts) positive = positive && q.estimate > 0;
    if (!positive) {
      gate(false, name + ": zero estimate, no fit");
      return;
    }
    ExponentFit raw = exponent_fit(pts);
    add(name + "_exponent_raw", 0, raw);
    std::size_t large = 0;
    for (auto& q : pts) large += q.scale >= 8;
    const ExponentFit* used = &raw;
    ExponentFit filtered;
    if (large >= 3) {
      filtered = exponent_fit(pts, 8);
      add(name + "_exponent", 8, filtered);
      used = &filtered;
    }
    gate_slope(used->slope, name);
  }

  void cardy() {
    double x = cfg.get_double("x");
    auto est = cardy_crossing({x}, n(), p(), samples(), seed(), workers());
    Table t{{"quantity", "n", "x", "p", "mean", "stderr", "n_samples", "seed", "prediction"}, {}};
    t.add({std::string("cardy_crossing"), static_cast<long long>(n()), x, p(), est[0].mean, est[0].std_err,
           static_cast<long long>(est[0].n_samples), est[0].seed, x});
    emit(t);
    gate_estimate(est[0], cfg.present("expect") ? cfg.get_double("expect") : x, "cardy");
  }

  void explore() {
    auto rr = region();
    std::string mode = cfg.get_string("mode");
    ExplorationPath path;
    std::optional<Configuration> conf;
    if (mode == "chordal") {
      const auto& cyc = rr->boundary_cycle;
      if (cyc.size() < 2) throw ConfigError("region boundary too small for a chordal exploration");
      conf = chordal_configuration(*rr, cyc[0], cyc[cyc.size() / 2], p(), seed());
      path = chordal_exploration(*conf);
    } else if (mode == "radial") {
      conf = sample_config(rr, p(), seed());
      path = radial_exploration(*conf, rr->boundary_cycle.at(0));
    } else {
      throw ConfigError("explore mode must be chordal or radial");
    }
    Table t{{"k", "face_u", "face_v", "x", "y", "jump"}, {}};
    for (std::size_t k = 0; k < path.vertices.size(); ++k) {
      cplx z = path.point(k);
      long long jump = k > 0 && path.jumps[k - 1] ? 1 : 0;
      t.add({static_cast<long long>(k), static_cast<long long>(path.vertices[k].u),
             static_cast<long long>(path.vertices[k].v), z.real(), z.imag(), jump});
    }
    emit(t);
    emit_svg(render_svg(path, &*conf, &cfg));
  }

  void driving() {
    std::string mode = cfg.get_string("mode");
    if (mode != "chordal" && mode != "radial") throw ConfigError("driving mode must be chordal or radial");
    auto dm = mode == "chordal" ? DrivingMode::Chordal : DrivingMode::Radial;
    auto d = sample_bm_driving(cfg.get_double("kappa"), cfg.get_double("dt"), cfg.get_double("t"), seed(), dm);
    std::vector<cplx> trace;
    if (dm == DrivingMode::Chordal) {
      trace = chordal_trace(d);
    } else {
      for (std::size_t k = 0; k < d.size(); ++k) trace.push_back(radial_tip(d, k));
    }
    Table t{{"t", "value", "x", "y"}, {}};
    for (std::size_t k = 0; k < d.size(); ++k) t.add({d.times[k], d.values[k], trace[k].real(), trace[k].imag()});
    emit(t);
    emit_svg(render_svg(trace, &cfg));
  }

  void sle() {
    auto sig = sle_signature(n(), samples(), cfg.get_double("t"), seed(), 10, workers());
    Table t{{"quantity", "t", "value", "stderr", "n_samples", "seed"}, {}};
    auto ns = static_cast<long long>(sig.n_paths);
    for (std::size_t i = 0; i < sig.grid_t.size(); ++i) {
      t.add({std::string("mean_w"), sig.grid_t[i], sig.mean_w[i].mean, sig.mean_w[i].std_err, ns, seed()});
      t.add({std::string("var_w"), sig.grid_t[i], sig.var_w[i], kNaN, ns, seed()});
    }
    t.add({std::string("var_slope"), sig.T, sig.var_slope, sig.var_slope_stderr, ns, seed()});
    t.add({std::string("drift_z"), sig.T, sig.drift_z, kNaN, ns, seed()});
    t.add({std::string("quadratic_variation_rate"), sig.T, sig.qv.mean, sig.qv.std_err, ns, seed()});
    t.add({std::string("steps"), sig.T, sig.steps.mean, sig.steps.std_err, ns, seed()});
    emit(t);
    gate(std::abs(sig.drift_z) < 4, "sle drift z-score " + format_17g(sig.drift_z));
    gate_slope(sig.var_slope, "sle variance");
  }

  void diffusion() {
    std::string mode = cfg.get_string("mode");
    double tt = cfg.get_double("t"), dt = cfg.get_double("dt");
    Table t{{"quantity", "x0", "b", "t", "dt", "mean", "stderr", "n_samples", "seed", "exact"}, {}};
    if (mode == "absorb") {
      double x0 = cfg.get_double("x0"), b = cfg.get_double("b");
      Estimate e = martingale_estimate(x0, b, tt, dt, samples(), seed(), workers());
      auto qa = q_lambda(b);
      double exact = std::exp(-qa.lambda * tt) * std::pow(std::sin(0.5 * x0), qa.q);
      t.add({std::string("martingale"), x0, b, tt, dt, e.mean, e.std_err, static_cast<long long>(e.n_samples), e.seed,
             exact});
      emit(t);
      gate_estimate(e, cfg.present("expect") ? cfg.get_double("expect") : exact, "martingale");
    } else if (mode == "reflect") {
      Estimate e = estimate_Jt(tt, samples(), dt, seed(), workers());
      t.add({std::string("J_t"), 0.0, 0.0, tt, dt, e.mean, e.std_err, static_cast<long long>(e.n_samples), e.seed,
             kNaN});
      emit(t);
      gate_estimate(e, expect(), "J_t");
    } else {
      throw ConfigError("diffusion mode must be absorb or reflect");
    }
  }

  void nearcritical() {
    auto ps = cfg.get_doubles("p_values");
    double eps = cfg.get_double("eps");
    int budget = static_cast<int>(cfg.get_int("budget"));
    Table t{{"quantity", "p", "eps", "L", "mean", "stderr", "n_samples", "seed"}, {}};
    std::vector<double> lx, ly;
    for (double pv : ps) {
      auto r = correlation_length(pv, eps, seed(), budget, samples(), samples(), workers());
      t.add({std::string("h_at_L"), pv, eps, static_cast<long long>(r.L), r.h_at_L.mean, r.h_at_L.std_err,
             static_cast<long long>(r.h_at_L.n_samples), r.h_at_L.seed});
      t.add({std::string("one_arm_at_L"), pv, eps, static_cast<long long>(r.L), r.one_arm_at_L.mean,
             r.one_arm_at_L.std_err, static_cast<long long>(r.one_arm_at_L.n_samples), r.one_arm_at_L.seed});
      lx.push_back(std::log(pv - 0.5));
      ly.push_back(std::log(static_cast<double>(r.L)));
    }
    if (ps.size() >= 2) {
      LinearFit f = linear_fit(lx, ly);
      t.add({std::string("log_L_slope"), kNaN, eps, 0LL, f.slope, f.slope_stderr, static_cast<long long>(samples()),
             seed()});
      gate_slope(f.slope, "log L");
    }
    emit(t);
  }

  void fit() {
    std::string in = optional_string("input");
    if (in.empty()) throw ConfigError("fit needs an input file");
    std::ifstream f(in);
    if (!f) throw std::runtime_error("cannot read " + in);
    std::vector<FitPoint> pts;
    std::string line;
    bool header = false;
    while (std::getline(f, line)) {
      if (line.empty() || line[0] == '#') continue;
      if (!header) {
        header = true;
        if (line.find_first_of("abcdefghijklmnopqrstuvwxyz") != std::string::npos) continue;
      }
      auto items = split_list(line);
      if (items.size() < 2) throw std::runtime_error("fit input rows need scale,estimate[,stderr]");
      pts.push_back({std::stod(items[0]), std::stod(items[1]), items.size() > 2 ? std::stod(items[2]) : 0.0});
    }
    if (pts.size() < 3) throw std::runtime_error("fit needs at least 3 points");
    Table t{{"quantity", "min_scale", "slope", "slope_stderr", "intercept", "n_points"}, {}};
    fit_rows(t, pts, "fit", [&](const std::string& q, double min, const ExponentFit& e) {
      t.add({q, min, e.slope, e.slope_stderr, e.intercept, static_cast<long long>(e.points.size())});
    });
    emit(t);
  }

  void render() {
    std::string object = cfg.get_string("object");
    auto rr = region();
    std::string doc;
    if (object == "config") {
      doc = render_svg(sample_config(rr, p(), seed()), &cfg);
    } else if (object == "path") {
      const auto& cyc = rr->boundary_cycle;
      auto c = chordal_configuration(*rr, cyc.at(0), cyc.at(cyc.size() / 2), p(), seed());
      doc = render_svg(chordal_exploration(c), &c, &cfg);
    } else {
      throw ConfigError("render object must be config or path");
    }
    std::string path = cfg.present("svg") ? cfg.get_string("svg") : optional_string("output");
    if (path.empty()) {
      *opt.stdout_stream << doc;
    } else {
      write_file(path, doc);
      result.artifacts.push_back(path);
    }
  }
};

}  // namespace detail

/// Runs the configured command and writes its outputs. Throws on invalid input
/// or I/O failure; gate failures under assert_gates give status 2.
inline RunResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
  detail::Runner r{cfg, opt, {}};
  const std::string cmd = cfg.command();
  if (cmd == "sample") r.sample();
  else if (cmd == "crossing") r.crossing();
  else if (cmd == "arms") r.arms();
  else if (cmd == "cardy") r.cardy();
  else if (cmd == "explore") r.explore();
  else if (cmd == "driving") r.driving();
  else if (cmd == "sle") r.sle();
  else if (cmd == "diffusion") r.diffusion();
  else if (cmd == "nearcritical") r.nearcritical();
  else if (cmd == "fit") r.fit();
  else if (cmd == "render") r.render();
  else throw ConfigError("no command given");
  return r.result;
}

}  // namespace perc
