#include "bfd/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "bfd/error.hpp"

namespace bfd {

namespace {

std::atomic<int> g_threads{0};

int threads_from_env() {
  if (const char* env = std::getenv("BFD_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Singularity: return "singularity";
    case ErrorKind::Divergence: return "divergence";
    case ErrorKind::HolderExponent: return "hoelder-exponent";
    case ErrorKind::Size: return "size";
    case ErrorKind::ZeroField: return "zero-field";
    case ErrorKind::Saturation: return "saturation";
    case ErrorKind::NonConvergence: return "non-convergence";
    case ErrorKind::Threshold: return "threshold";
    case ErrorKind::Geometry: return "geometry";
    case ErrorKind::PauliViolation: return "pauli-violation";
    case ErrorKind::GridMismatch: return "grid-mismatch";
    case ErrorKind::Stagnation: return "stagnation";
    case ErrorKind::BoundViolation: return "bound-violation";
    case ErrorKind::Schema: return "schema";
    case ErrorKind::InsufficientData: return "insufficient-data";
    case ErrorKind::NonPositive: return "nonpositive";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

int thread_count() {
  int n = g_threads.load();
  if (n <= 0) {
    n = threads_from_env();
    g_threads.store(n);
  }
  return n;
}

void set_thread_count(int n) { g_threads.store(n > 0 ? n : threads_from_env()); }

void run_workers(int workers, const std::function<void(int)>& body) {
  if (workers <= 1) {
    body(0);
    return;
  }
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        body(w);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

double pairwise_sum(std::span<const double> xs) {
  constexpr std::size_t kBlock = 64;
  if (xs.size() <= kBlock) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

}  // namespace bfd
