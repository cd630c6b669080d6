#include "taskforge/time.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>

namespace taskforge {

namespace {

// Reads exactly `width` digits starting at `pos`.
bool read_fixed(std::string_view s, std::size_t pos, std::size_t width, int& out) {
  if (pos + width > s.size()) return false;
  int value = 0;
  for (std::size_t i = pos; i < pos + width; ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    value = value * 10 + (s[i] - '0');
  }
  out = value;
  return true;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

std::optional<Instant> parse_instant(std::string_view text) {
  using namespace std::chrono;
  const std::string_view s = trim(text);
  int y = 0, mo = 0, d = 0;
  if (!read_fixed(s, 0, 4, y) || s.size() < 10 || s[4] != '-' || !read_fixed(s, 5, 2, mo) ||
      s[7] != '-' || !read_fixed(s, 8, 2, d)) {
    return std::nullopt;
  }
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  Instant result{sys_days{ymd}};
  if (s.size() == 10) return result;

  if (s[10] != 'T' && s[10] != ' ') return std::nullopt;
  int hh = 0, mm = 0, ss = 0;
  if (!read_fixed(s, 11, 2, hh) || s.size() < 16 || s[13] != ':' || !read_fixed(s, 14, 2, mm)) {
    return std::nullopt;
  }
  std::size_t pos = 16;
  if (pos < s.size() && s[pos] == ':') {
    if (!read_fixed(s, pos + 1, 2, ss)) return std::nullopt;
    pos += 3;
  }
  if (hh > 23 || mm > 59 || ss > 60) return std::nullopt;
  result += hours{hh} + minutes{mm} + seconds{ss};

  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    const std::size_t digits_start = pos;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos == digits_start) return std::nullopt;
  }
  if (pos == s.size()) return result;
  if (s[pos] == 'Z' && pos + 1 == s.size()) return result;
  if ((s[pos] == '+' || s[pos] == '-') && s.size() == pos + 6 && s[pos + 3] == ':') {
    int oh = 0, om = 0;
    if (!read_fixed(s, pos + 1, 2, oh) || !read_fixed(s, pos + 4, 2, om)) return std::nullopt;
    const seconds offset = hours{oh} + minutes{om};
    // Local time = UTC + offset.
    return s[pos] == '+' ? result - offset : result + offset;
  }
  return std::nullopt;
}

std::string format_instant(Instant t) {
  using namespace std::chrono;
  const sys_days day_point = floor<days>(t);
  const year_month_day ymd{day_point};
  const hh_mm_ss<seconds> tod{t - day_point};
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02ld:%02ld:%02ldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long>(tod.hours().count()), static_cast<long>(tod.minutes().count()),
                static_cast<long>(tod.seconds().count()));
  return buf;
}

std::optional<Duration> parse_duration(std::string_view text) {
  const std::string_view s = trim(text);
  long long count = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), count);
  if (ec != std::errc{} || count <= 0) return std::nullopt;
  const std::string_view unit = s.substr(static_cast<std::size_t>(ptr - s.data()));
  long long scale = 0;
  if (unit.empty() || unit == "s") {
    scale = 1;
  } else if (unit == "m") {
    scale = 60;
  } else if (unit == "h") {
    scale = 3600;
  } else if (unit == "d") {
    scale = 86400;
  } else if (unit == "w") {
    scale = 7 * 86400;
  } else {
    return std::nullopt;
  }
  return Duration{count * scale};
}

std::string format_duration(Duration d) {
  struct Unit {
    long long seconds;
    const char* name;
  };
  static constexpr Unit kUnits[] = {{86400, "day"}, {3600, "hour"}, {60, "minute"}, {1, "second"}};
  const long long total = d.count();
  for (const auto& unit : kUnits) {
    if (total != 0 && total % unit.seconds == 0) {
      const long long n = total / unit.seconds;
      return std::to_string(n) + " " + unit.name + (n == 1 ? "" : "s");
    }
  }
  return std::to_string(total) + " seconds";
}

}  // namespace taskforge
