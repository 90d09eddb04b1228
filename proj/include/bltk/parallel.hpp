#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

namespace bltk {

// Pool size: BLTK_THREADS if set, otherwise the hardware concurrency.
inline int thread_count() {
  if (const char* s = std::getenv("BLTK_THREADS")) {
    const int n = std::atoi(s);
    if (n > 0) return n;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

namespace detail {
inline thread_local bool in_worker = false;
}

// Evaluates f(i) for i in [0, n). Results land in slot i, so the output never
// depends on scheduling. The exception from the lowest failing index wins.
// Calls made from inside a worker run serially.
template <class F>
auto parallel_map(std::size_t n, F&& f) -> std::vector<std::invoke_result_t<F&, std::size_t>> {
  using R = std::invoke_result_t<F&, std::size_t>;
  std::vector<R> out(n);
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(thread_count()), n);
  if (workers <= 1 || detail::in_worker) {
    for (std::size_t i = 0; i < n; ++i) out[i] = f(i);
    return out;
  }
  std::vector<std::exception_ptr> errors(n);
  auto run = [&](std::size_t w) {
    const bool outer = detail::in_worker;
    detail::in_worker = true;
    for (std::size_t i = w; i < n; i += workers) {
      try {
        out[i] = f(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
    detail::in_worker = outer;
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run, w);
  run(0);
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

// Pairwise summation with a fixed tree shape.
inline double pairwise_sum(const double* x, std::size_t n) {
  if (n == 0) return 0.0;
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_sum(x, h) + pairwise_sum(x + h, n - h);
}

inline double pairwise_sum(const std::vector<double>& x) { return pairwise_sum(x.data(), x.size()); }

struct MeanStderr {
  double mean = 0.0;
  double std_err = 0.0;
};

inline MeanStderr mean_stderr(const std::vector<double>& x) {
  MeanStderr r;
  const std::size_t n = x.size();
  if (n == 0) return r;
  r.mean = pairwise_sum(x) / static_cast<double>(n);
  if (n < 2) return r;
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) sq[i] = (x[i] - r.mean) * (x[i] - r.mean);
  const double var = pairwise_sum(sq) / static_cast<double>(n - 1);
  r.std_err = std::sqrt(var / static_cast<double>(n));
  return r;
}

}  // namespace bltk
