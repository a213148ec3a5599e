#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace svpfp {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

enum class ErrorKind {
  UnsupportedDimension,
  Unsupported,
  InvalidColoring,
  Shape,
  NanInput,
  Domain,
  ShiftTooLarge,
  IllPosedKernel,
  Config,
  NegativeDensity,
  EmptySummary,
  LogDomain,
  NumericAbort,
  Io,
};

const char* to_string(ErrorKind kind);

/// Every failure raised by the library carries a kind so callers (and the CLI
/// exit-code mapping) can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

/// Non-fatal condition attached to a result.
struct Warning {
  std::string code;
  std::string message;
};

using Warnings = std::vector<Warning>;

bool has_warning(const Warnings& warnings, const std::string& code);

// Thread cap for internal parallel loops. Results never depend on it.
void set_num_threads(int threads);
int num_threads();

/// Runs fn(begin, end) over contiguous chunks of [0, n). Work items must be
/// independent; reductions belong to the caller in a fixed order.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace svpfp
