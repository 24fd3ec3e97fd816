/*
* organloc - regression forest organ localization and atlas segmentation.
*
* Copyright 2026 The organloc Authors
*
* Licensed under the Apache License, Version 2.0 (the "License");
* you may not use this file except in compliance with the License.
* You may obtain a copy of the License at
*
*     http://www.apache.org/licenses/LICENSE-2.0
*
* Unless required by applicable law or agreed to in writing, software
* distributed under the License is distributed on an "AS IS" BASIS,
* WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
* See the License for the specific language governing permissions and
* limitations under the License.
*/

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace organloc {

namespace detail {
inline std::atomic<unsigned>& thread_limit()
{
  static std::atomic<unsigned> limit{0};
  return limit;
}
} // namespace detail

/// Caps worker threads used by parallel_for. 0 means hardware concurrency.
inline void set_thread_count(unsigned n) { detail::thread_limit() = n; }

inline unsigned thread_count()
{
  const unsigned n = detail::thread_limit();
  if (n > 0)
    return n;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(i) for i in [0, n). Work items must write to disjoint outputs;
/// callers do any reduction afterwards in index order.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn)
{
  const std::size_t workers = std::min<std::size_t>(thread_count(), n);
  if (workers <= 1)
  {
    for (std::size_t i = 0; i < n; ++i)
      fn(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&]() {
    for (;;)
    {
      const std::size_t i = next.fetch_add(1);
      if (i >= n)
        return;
      try
      {
        fn(i);
      }
      catch (...)
      {
        std::lock_guard lock(error_mutex);
        if (!error)
          error = std::current_exception();
        next = n;
        return;
      }
    }
  };

  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t t = 0; t < workers; ++t)
    pool.emplace_back(worker);
  pool.clear();
  if (error)
    std::rethrow_exception(error);
}

} // namespace organloc
