#pragma once

#include <chrono>
#include <stop_token>

namespace iadet {

enum class ClockMode { kVirtual, kReal };

/// Seconds since the start of a run.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual double now() const = 0;
  /// Returns early, with the time unchanged, when stop is requested.
  virtual void sleep_until(double t, std::stop_token stop) = 0;
};

/// Discrete-event time: sleeping jumps straight to the target.
class VirtualClock final : public Clock {
 public:
  double now() const override { return now_; }
  void sleep_until(double t, std::stop_token) override { advance_to(t); }
  /// Never moves backwards.
  void advance_to(double t) noexcept {
    if (t > now_) now_ = t;
  }

 private:
  double now_ = 0.0;
};

class SteadyClock final : public Clock {
 public:
  SteadyClock() : start_(std::chrono::steady_clock::now()) {}
  double now() const override;
  void sleep_until(double t, std::stop_token stop) override;

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace iadet
