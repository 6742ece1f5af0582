#pragma once

// Compensated summation and a deterministic chunked reducer.  Results are
// byte-identical for any thread count: terms are summed per fixed-size chunk
// in index order, and chunk partials are combined in chunk order.

#include <cstdint>
#include <thread>
#include <vector>

namespace traceform {

// Neumaier variant of Kahan summation.
class KahanAccumulator {
 public:
  void add(double x) {
    double t = sum_ + x;
    if ((sum_ >= 0 ? sum_ : -sum_) >= (x >= 0 ? x : -x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Sum of term(i) for i in [0, n), chunked.  term must be safe to call
// concurrently for distinct i.
template <class TermFn>
double chunked_sum(std::uint64_t n, unsigned threads, std::uint64_t chunk, TermFn&& term) {
  if (n == 0) return 0.0;
  if (chunk == 0) chunk = 1;
  std::uint64_t n_chunks = (n + chunk - 1) / chunk;
  std::vector<double> partial(n_chunks, 0.0);

  auto run_chunk = [&](std::uint64_t ci) {
    KahanAccumulator acc;
    std::uint64_t lo = ci * chunk;
    std::uint64_t hi = lo + chunk < n ? lo + chunk : n;
    for (std::uint64_t i = lo; i < hi; ++i) acc.add(term(i));
    partial[ci] = acc.value();
  };

  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  unsigned t = threads == 0 ? 1 : threads;
  if (t > hw) t = hw;
  if (static_cast<std::uint64_t>(t) > n_chunks) t = static_cast<unsigned>(n_chunks);

  if (t <= 1) {
    for (std::uint64_t ci = 0; ci < n_chunks; ++ci) run_chunk(ci);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(t);
    for (unsigned w = 0; w < t; ++w) {
      pool.emplace_back([&, w] {
        for (std::uint64_t ci = w; ci < n_chunks; ci += t) run_chunk(ci);
      });
    }
    for (auto& th : pool) th.join();
  }

  KahanAccumulator total;
  for (std::uint64_t ci = 0; ci < n_chunks; ++ci) total.add(partial[ci]);
  return total.value();
}

}  // namespace traceform
