#include "redloop/clock.hpp"

#include <chrono>
#include <cstdio>
#include <thread>

#include "redloop/errors.hpp"

namespace redloop {

std::int64_t SystemClock::now_ms() {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

void SystemClock::advance_ms(std::int64_t ms) {
    std::this_thread::sleep_for(std::chrono::milliseconds(ms));
}

std::string format_rfc3339(std::int64_t epoch_ms) {
    using namespace std::chrono;
    const sys_seconds tp{seconds{epoch_ms / 1000}};
    const auto dp = floor<days>(tp);
    const year_month_day ymd{dp};
    const hh_mm_ss hms{tp - dp};
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02dZ",
                  static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()), static_cast<int>(hms.hours().count()),
                  static_cast<int>(hms.minutes().count()),
                  static_cast<int>(hms.seconds().count()));
    return buf;
}

std::int64_t parse_rfc3339(const std::string& text) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
    char z = 0;
    if (std::sscanf(text.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%c", &y, &mo, &d, &h, &mi, &s, &z) != 7 ||
        z != 'Z' || text.size() != 20) {
        throw InvariantError("bad RFC-3339 UTC timestamp: \"" + text + "\"");
    }
    using namespace std::chrono;
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || s > 60) {
        throw InvariantError("timestamp field out of range: \"" + text + "\"");
    }
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                             day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) {
        throw InvariantError("invalid calendar date: \"" + text + "\"");
    }
    const sys_days dp{ymd};
    const auto tp = dp + hours{h} + minutes{mi} + seconds{s};
    return duration_cast<milliseconds>(tp.time_since_epoch()).count();
}

}  // namespace redloop
