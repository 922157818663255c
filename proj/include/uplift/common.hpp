#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace uplift {

using Index = Eigen::Index;
using Rng = std::mt19937_64;

// A row of the feature matrix, or any contiguous/strided row vector.
using FeatureRow = Eigen::Ref<const Eigen::RowVectorXd, 0, Eigen::InnerStride<>>;

// Malformed or inconsistent input data (CSV, schema, model files).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parameter outside its documented range.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// splitmix64 finalizer over (seed, stream). Used to derive independent
// per-tree / per-replicate seeds from one master seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  return Rng(mix_seed(seed, stream));
}

// Index of the largest entry; ties resolve to the smallest index.
inline int argmax_arm(const Eigen::Ref<const Eigen::VectorXd>& values) {
  int best = 0;
  for (Index t = 1; t < values.size(); ++t) {
    if (values[t] > values[best]) best = static_cast<int>(t);
  }
  return best;
}

inline int resolve_threads(int threads) {
  if (threads > 0) return threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(i) for i in [0, n) on up to `threads` workers. Work items are
// claimed dynamically; callers write results into slot i so the outcome
// does not depend on scheduling. The first exception is rethrown.
template <typename Fn>
void parallel_for(Index n, int threads, Fn&& fn) {
  const int workers =
      static_cast<int>(std::min<Index>(resolve_threads(threads), n));
  if (workers <= 1) {
    for (Index i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<Index> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    for (;;) {
      const Index i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (int w = 1; w < workers; ++w) pool.emplace_back(body);
  body();
  pool.clear();
  if (error) std::rethrow_exception(error);
}

}  // namespace uplift
