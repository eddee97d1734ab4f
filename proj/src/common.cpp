#include "orifeat/common.hpp"

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <vector>

#include <omp.h>

namespace orifeat {

namespace {

std::mutex& handler_mutex() {
  static std::mutex m;
  return m;
}

WarningHandler& handler_slot() {
  static WarningHandler h = [](const std::string& msg) { std::cerr << "warning: " << msg << '\n'; };
  return h;
}

}  // namespace

void warn(const std::string& message) {
  std::lock_guard<std::mutex> lock(handler_mutex());
  if (handler_slot()) handler_slot()(message);
}

WarningHandler set_warning_handler(WarningHandler handler) {
  std::lock_guard<std::mutex> lock(handler_mutex());
  WarningHandler previous = std::move(handler_slot());
  handler_slot() = std::move(handler);
  return previous;
}

ScopedWarningCapture::ScopedWarningCapture() {
  previous_ = set_warning_handler([this](const std::string& msg) { messages_.push_back(msg); });
}

ScopedWarningCapture::~ScopedWarningCapture() { set_warning_handler(std::move(previous_)); }

bool ScopedWarningCapture::contains(const std::string& fragment) const {
  for (const auto& m : messages_)
    if (m.find(fragment) != std::string::npos) return true;
  return false;
}

int thread_count() {
  if (const char* env = std::getenv("ORIFEAT_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return omp_get_max_threads();
}

}  // namespace orifeat
