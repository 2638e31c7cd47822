#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>

namespace meetflow {

// Millisecond timestamps. Scenarios run on a virtual clock starting at zero;
// the server uses wall time. Both serialize as integer milliseconds.
using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;
using Millis = std::chrono::milliseconds;

inline std::int64_t to_millis(Timestamp t) noexcept { return t.time_since_epoch().count(); }
inline Timestamp from_millis(std::int64_t ms) noexcept { return Timestamp{Millis{ms}}; }

class Clock {
public:
  virtual ~Clock() = default;
  virtual Timestamp now() const = 0;
};

class SystemClock final : public Clock {
public:
  Timestamp now() const override {
    return std::chrono::time_point_cast<Millis>(std::chrono::system_clock::now());
  }
};

class ManualClock final : public Clock {
public:
  explicit ManualClock(Timestamp start = Timestamp{}) : now_ms_(to_millis(start)) {}

  Timestamp now() const override { return from_millis(now_ms_.load()); }
  void set(Timestamp t) { now_ms_.store(to_millis(t)); }
  void advance(Millis d) { now_ms_.fetch_add(d.count()); }

private:
  std::atomic<std::int64_t> now_ms_;
};

}  // namespace meetflow
