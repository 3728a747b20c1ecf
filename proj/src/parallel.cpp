#include "quasr/parallel.hpp"

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace quasr {

int resolve_threads(int requested) {
  if (requested <= 1) return 1;
  return requested;
}

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
  if (count <= 0) return;
  threads = std::min(resolve_threads(threads), count);
  if (threads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }

  std::vector<std::thread> workers;
  workers.reserve(threads);
  std::vector<std::exception_ptr> errors(threads);
  const int base = count / threads;
  const int extra = count % threads;
  int begin = 0;
  for (int w = 0; w < threads; ++w) {
    const int len = base + (w < extra ? 1 : 0);
    const int end = begin + len;
    workers.emplace_back([&fn, &errors, w, begin, end] {
      try {
        for (int i = begin; i < end; ++i) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
    begin = end;
  }
  for (auto& t : workers) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace quasr
