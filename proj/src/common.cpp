#include "svpfp/common.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

namespace svpfp {

namespace {

int default_threads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

std::atomic<int>& thread_cap() {
  static std::atomic<int> cap{default_threads()};
  return cap;
}

// Nested regions run serially on the calling worker.
thread_local bool in_parallel_region = false;

}  // namespace

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::UnsupportedDimension: return "unsupported-dimension";
    case ErrorKind::Unsupported: return "unsupported";
    case ErrorKind::InvalidColoring: return "invalid-coloring";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::NanInput: return "nan-input";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::ShiftTooLarge: return "shift-too-large";
    case ErrorKind::IllPosedKernel: return "ill-posed-kernel";
    case ErrorKind::Config: return "config";
    case ErrorKind::NegativeDensity: return "negative-density";
    case ErrorKind::EmptySummary: return "empty-summary";
    case ErrorKind::LogDomain: return "log-domain";
    case ErrorKind::NumericAbort: return "numeric-abort";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

bool has_warning(const Warnings& warnings, const std::string& code) {
  return std::any_of(warnings.begin(), warnings.end(),
                     [&](const Warning& w) { return w.code == code; });
}

void set_num_threads(int threads) { thread_cap().store(threads < 1 ? default_threads() : threads); }

int num_threads() { return thread_cap().load(); }

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn) {
  if (n == 0) return;
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(num_threads()), n);
  if (workers <= 1 || in_parallel_region) {
    fn(0, n);
    return;
  }
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  std::exception_ptr first_error;
  std::mutex error_mutex;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end] {
      in_parallel_region = true;
      try {
        fn(begin, end);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace svpfp
