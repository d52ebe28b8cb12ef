#include "iadet/clock.hpp"

#include <condition_variable>
#include <mutex>

namespace iadet {

double SteadyClock::now() const {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
}

void SteadyClock::sleep_until(double t, std::stop_token stop) {
  const auto deadline =
      start_ + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                   std::chrono::duration<double>(t));
  std::mutex m;
  std::condition_variable_any cv;
  std::unique_lock lock(m);
  cv.wait_until(lock, stop, deadline, [] { return false; });
}

}  // namespace iadet
