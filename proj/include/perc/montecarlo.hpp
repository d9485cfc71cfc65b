#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

#include "perc/sampling.hpp"

namespace perc {

struct Estimate {
  double mean = 0;
  double std_err = 0;
  std::size_t n_samples = 0;
  std::uint64_t seed = 0;
};

inline std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t index) { return hash_combine(seed, index); }

/// Fixed-shape pairwise summation; the result depends only on the input order.
inline double pairwise_sum(const double* x, std::size_t n) {
  if (n <= 8) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  std::size_t h = n / 2;
  return pairwise_sum(x, h) + pairwise_sum(x + h, n - h);
}

inline Estimate summarize(const std::vector<double>& v, std::uint64_t seed) {
  Estimate e;
  e.n_samples = v.size();
  e.seed = seed;
  if (v.empty()) return e;
  e.mean = pairwise_sum(v.data(), v.size()) / static_cast<double>(v.size());
  if (v.size() > 1) {
    std::vector<double> dev(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) dev[i] = (v[i] - e.mean) * (v[i] - e.mean);
    double var = pairwise_sum(dev.data(), dev.size()) / static_cast<double>(v.size() - 1);
    e.std_err = std::sqrt(var / static_cast<double>(v.size()));
  }
  return e;
}

inline int resolve_workers(int workers) {
  if (workers > 0) return workers;
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

/// Runs body(i) for i in [0, n) over contiguous index chunks.
template <class Body>
void parallel_for(std::size_t n, int workers, Body&& body) {
  workers = std::max(1, std::min<int>(resolve_workers(workers), static_cast<int>(std::max<std::size_t>(n, 1))));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    std::size_t lo = n * w / workers, hi = n * (w + 1) / workers;
    pool.emplace_back([&, lo, hi] {
      try {
        for (std::size_t i = lo; i < hi; ++i) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

/// Mean and standard error of f(sample_seed(seed, i)) over n samples. The per
/// sample values are stored and reduced in index order, so the result does not
/// depend on the number of workers.
template <class F>
Estimate mc_estimate(std::uint64_t seed, std::size_t n, F&& f, int workers = 1) {
  if (n == 0) throw std::invalid_argument("n_samples must be positive");
  std::vector<double> values(n);
  parallel_for(n, workers, [&](std::size_t i) { values[i] = static_cast<double>(f(sample_seed(seed, i))); });
  return summarize(values, seed);
}

/// Several quantities per sample: f(sample_seed, out) fills out[0..k).
template <class F>
std::vector<Estimate> mc_estimate_multi(std::uint64_t seed, std::size_t n, std::size_t k, F&& f,
                                        int workers = 1) {
  if (n == 0) throw std::invalid_argument("n_samples must be positive");
  std::vector<double> values(n * k);
  parallel_for(n, workers, [&](std::size_t i) { f(sample_seed(seed, i), values.data() + i * k); });
  std::vector<Estimate> out;
  std::vector<double> col(n);
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t i = 0; i < n; ++i) col[i] = values[i * k + j];
    out.push_back(summarize(col, seed));
  }
  return out;
}

}  // namespace perc
