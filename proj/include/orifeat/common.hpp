#pragma once

#include <cstddef>
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace orifeat {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed binary or text input. Carries the byte offset where decoding failed
/// (or the 1-based line number for text formats).
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : Error(what + " (at offset " + std::to_string(offset) + ")"), offset_(offset) {}
  std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

/// Inconsistent topology (residue count, atom ordering, chain layout).
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// PDB-subset parse failures (missing backbone atoms etc).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Violated precondition on an argument value.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Collinear / coincident geometry where a frame or fit is undefined.
class DegenerateGeometryError : public Error {
 public:
  using Error::Error;
};

/// Linear-algebra failure (eigensolver did not converge etc).
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Warnings go through a process-wide sink so tests and the CLI can capture them.
using WarningHandler = std::function<void(const std::string&)>;

void warn(const std::string& message);
WarningHandler set_warning_handler(WarningHandler handler);

/// Captures warnings for the lifetime of the object.
class ScopedWarningCapture {
 public:
  ScopedWarningCapture();
  ~ScopedWarningCapture();
  ScopedWarningCapture(const ScopedWarningCapture&) = delete;
  ScopedWarningCapture& operator=(const ScopedWarningCapture&) = delete;

  const std::vector<std::string>& messages() const { return messages_; }
  bool contains(const std::string& fragment) const;

 private:
  std::vector<std::string> messages_;
  WarningHandler previous_;
};

/// Number of worker threads used by frame-parallel loops. Honors ORIFEAT_THREADS.
int thread_count();

/// OpenMP loop over [0, n) that forwards the first exception thrown by `fn`.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) num_threads(thread_count())
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    if (failed.load(std::memory_order_relaxed)) continue;
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(orifeat_parallel_for)
      {
        if (!error) error = std::current_exception();
      }
      failed.store(true, std::memory_order_relaxed);
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace orifeat
