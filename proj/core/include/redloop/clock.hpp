#pragma once

#include <cstdint>
#include <string>

namespace redloop {

/// Time source for the whole engine. All timestamps, timeouts and durations
/// flow through this interface so tests can pin time with a virtual clock.
class Clock {
public:
    virtual ~Clock() = default;

    /// Milliseconds since the Unix epoch, UTC.
    virtual std::int64_t now_ms() = 0;

    /// Advance time by `ms`. The system clock genuinely sleeps; the virtual
    /// clock just moves its counter.
    virtual void advance_ms(std::int64_t ms) = 0;

    /// True when advance_ms is instantaneous (no real waiting).
    virtual bool is_virtual() const = 0;
};

class SystemClock final : public Clock {
public:
    std::int64_t now_ms() override;
    void advance_ms(std::int64_t ms) override;
    bool is_virtual() const override { return false; }
};

class VirtualClock final : public Clock {
public:
    /// Defaults to 2025-02-13T22:01:52Z so fixture timestamps are stable.
    explicit VirtualClock(std::int64_t start_ms = kDefaultEpochMs) : now_(start_ms) {}

    std::int64_t now_ms() override { return now_; }
    void advance_ms(std::int64_t ms) override { now_ += ms; }
    bool is_virtual() const override { return true; }

    static constexpr std::int64_t kDefaultEpochMs = 1739484112000LL;

private:
    std::int64_t now_;
};

/// Formats epoch milliseconds as RFC-3339 UTC with "Z", second resolution.
std::string format_rfc3339(std::int64_t epoch_ms);

/// Parses an RFC-3339 UTC timestamp ("...Z"). Throws InvariantError on
/// malformed input.
std::int64_t parse_rfc3339(const std::string& text);

}  // namespace redloop
