#pragma once

#include "ehc/vital.hpp"

#include <atomic>
#include <chrono>

namespace ehc {

class Clock {
public:
    virtual ~Clock() = default;
    virtual TimestampMs now_ms() const = 0;
};

class SystemClock final : public Clock {
public:
    TimestampMs now_ms() const override {
        return static_cast<TimestampMs>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                            std::chrono::system_clock::now().time_since_epoch())
                                            .count());
    }
};

/// Manually driven clock for simulations and tests.
class SimulatedClock final : public Clock {
public:
    explicit SimulatedClock(TimestampMs start = 0) : now_(start) {}

    TimestampMs now_ms() const override { return now_.load(std::memory_order_acquire); }
    void set(TimestampMs t) { now_.store(t, std::memory_order_release); }
    void advance(TimestampMs delta) { now_.fetch_add(delta, std::memory_order_acq_rel); }

private:
    std::atomic<TimestampMs> now_;
};

/// Runs `speed` times faster than the wall clock, starting at `origin`.
class ScaledClock final : public Clock {
public:
    ScaledClock(TimestampMs origin, double speed)
        : origin_(origin), speed_(speed), start_(std::chrono::steady_clock::now()) {}

    TimestampMs now_ms() const override {
        const auto elapsed = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_);
        return origin_ + static_cast<TimestampMs>(elapsed.count() * speed_);
    }

private:
    TimestampMs origin_;
    double speed_;
    std::chrono::steady_clock::time_point start_;
};

}  // namespace ehc
