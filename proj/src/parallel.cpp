#include "bte/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "bte/error.hpp"

namespace bte {

namespace {

int initial_threads() {
  if (const char* env = std::getenv("BTE_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

std::atomic<int>& threads_setting() {
  static std::atomic<int> n{initial_threads()};
  return n;
}

}  // namespace

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NotInterior: return "NotInterior";
    case ErrorKind::BadDirection: return "BadDirection";
    case ErrorKind::TangentFace: return "TangentFace";
    case ErrorKind::NotOnBoundary: return "NotOnBoundary";
    case ErrorKind::EmptyGrid: return "EmptyGrid";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::NegativeData: return "NegativeData";
    case ErrorKind::NonPositiveLambda: return "NonPositiveLambda";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::AsymmetricGrid: return "AsymmetricGrid";
    case ErrorKind::SeriesDivergence: return "SeriesDivergence";
    case ErrorKind::HasKernel: return "HasKernel";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::BadExponent: return "BadExponent";
    case ErrorKind::LineSearchStall: return "LineSearchStall";
    case ErrorKind::SubCriticalViolation: return "SubCriticalViolation";
    case ErrorKind::ZeroSource: return "ZeroSource";
    case ErrorKind::WrongConfiguration: return "WrongConfiguration";
    case ErrorKind::MemoryLimit: return "MemoryLimit";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Error";
}

int thread_count() { return threads_setting().load(); }

void set_thread_count(int n) { threads_setting().store(std::max(1, n)); }

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) {
  if (n == 0) return;
  std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(thread_count()), n);
  if (workers <= 1) {
    body(0, n);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    std::size_t b = w * chunk, e = std::min(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&, b, e] {
      try {
        body(b, e);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace bte
