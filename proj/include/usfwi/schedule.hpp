#pragma once

/// \file usfwi/schedule.hpp
/// \brief Source-based work partitioning: contiguous near-equal shards, one
///        std::thread per shard, reductions in ascending worker order.

#include "usfwi/core.hpp"

#include <exception>
#include <thread>
#include <vector>

namespace usfwi {

struct Shard {
  std::ptrdiff_t begin = 0;
  std::ptrdiff_t end = 0;
  std::ptrdiff_t size() const { return end - begin; }
};

/// Splits [0, count) into `workers` contiguous shards whose sizes differ by at
/// most one; earlier shards take the remainder. Empty shards are kept so the
/// shard index always equals the worker index.
inline std::vector<Shard> schedule(int workers, std::ptrdiff_t count) {
  if (workers < 1) throw Error("worker count must be >= 1");
  if (count < 0) throw Error("item count must be >= 0");
  std::vector<Shard> shards(static_cast<std::size_t>(workers));
  const std::ptrdiff_t base = count / workers, extra = count % workers;
  std::ptrdiff_t at = 0;
  for (int w = 0; w < workers; ++w) {
    const std::ptrdiff_t n = base + (w < extra ? 1 : 0);
    shards[w] = {at, at + n};
    at += n;
  }
  return shards;
}

/// Runs fn(worker, shard) for every non-empty shard. Worker 0 runs on the
/// calling thread. The first exception by worker index is rethrown after all
/// workers have joined.
template <class Fn>
void run_sharded(const std::vector<Shard>& shards, Fn&& fn) {
  std::vector<std::exception_ptr> errors(shards.size());
  auto body = [&](std::size_t w) {
    try {
      if (shards[w].size() > 0) fn(static_cast<int>(w), shards[w]);
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  std::vector<std::thread> threads;
  for (std::size_t w = 1; w < shards.size(); ++w)
    if (shards[w].size() > 0) threads.emplace_back(body, w);
  if (!shards.empty()) body(0);
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace usfwi
