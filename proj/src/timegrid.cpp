#include <charconv>
#include <cstdio>

#include "smanon/model.hpp"

namespace smanon {

namespace {

constexpr std::int64_t kSecondsPerDay = 86400;

int parse_int(std::string_view s, std::string_view whole) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw Error("bad timestamp '" + std::string(whole) + "'");
  return v;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

TimeGrid::TimeGrid(std::vector<Instant> timestamps) : timestamps_(std::move(timestamps)) {
  if (timestamps_.empty()) throw Error("time grid must contain at least one timestamp");
  if (timestamps_.size() == 1) {
    step_ = 900;
    return;
  }
  step_ = (timestamps_[1] - timestamps_[0]).count();
  if (step_ <= 0) throw Error("timestamps must be strictly increasing");
  for (std::size_t i = 1; i < timestamps_.size(); ++i) {
    auto d = (timestamps_[i] - timestamps_[i - 1]).count();
    if (d <= 0) throw Error("timestamps must be strictly increasing");
    if (d != step_)
      throw Error("non-uniform time step at " + format_iso8601(timestamps_[i]));
  }
}

TimeGrid TimeGrid::uniform(Instant start, std::int64_t step_seconds, std::size_t n) {
  if (step_seconds <= 0) throw Error("step must be positive");
  if (n == 0) throw Error("time grid must contain at least one timestamp");
  std::vector<Instant> ts(n);
  for (std::size_t i = 0; i < n; ++i)
    ts[i] = start + std::chrono::seconds(step_seconds * static_cast<std::int64_t>(i));
  TimeGrid g(std::move(ts));
  g.step_ = step_seconds;
  return g;
}

int TimeGrid::second_of_day(std::size_t i) const {
  auto s = timestamps_[i].time_since_epoch().count();
  return static_cast<int>(s - floor_div(s, kSecondsPerDay) * kSecondsPerDay);
}

int TimeGrid::weekday(std::size_t i) const {
  auto days = std::chrono::floor<std::chrono::days>(timestamps_[i]);
  // iso_encoding: Monday = 1 ... Sunday = 7
  return static_cast<int>(std::chrono::weekday(days).iso_encoding()) - 1;
}

int TimeGrid::day_of_year(std::size_t i) const {
  auto days = std::chrono::floor<std::chrono::days>(timestamps_[i]);
  std::chrono::year_month_day ymd(days);
  auto jan1 = std::chrono::sys_days(ymd.year() / std::chrono::January / 1);
  return static_cast<int>((days - jan1).count());
}

Instant parse_iso8601(std::string_view text) {
  std::string_view s = text;
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  if (!s.empty() && s.back() == 'Z') s.remove_suffix(1);
  if (s.size() >= 6 && (s.substr(s.size() - 6) == "+00:00")) s.remove_suffix(6);
  if (s.size() != 16 && s.size() != 19) throw Error("bad timestamp '" + std::string(text) + "'");
  if (s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') || s[13] != ':' ||
      (s.size() == 19 && s[16] != ':'))
    throw Error("bad timestamp '" + std::string(text) + "'");
  int y = parse_int(s.substr(0, 4), text);
  int mo = parse_int(s.substr(5, 2), text);
  int d = parse_int(s.substr(8, 2), text);
  int h = parse_int(s.substr(11, 2), text);
  int mi = parse_int(s.substr(14, 2), text);
  int se = s.size() == 19 ? parse_int(s.substr(17, 2), text) : 0;
  std::chrono::year_month_day ymd{std::chrono::year(y), std::chrono::month(static_cast<unsigned>(mo)),
                                  std::chrono::day(static_cast<unsigned>(d))};
  if (!ymd.ok() || h > 23 || mi > 59 || se > 59)
    throw Error("bad timestamp '" + std::string(text) + "'");
  return std::chrono::sys_days(ymd) + std::chrono::hours(h) + std::chrono::minutes(mi) +
         std::chrono::seconds(se);
}

std::string format_iso8601(Instant t) {
  auto days = std::chrono::floor<std::chrono::days>(t);
  std::chrono::year_month_day ymd(days);
  auto secs = (t - days).count();
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long long>(secs / 3600), static_cast<long long>((secs / 60) % 60),
                static_cast<long long>(secs % 60));
  return buf;
}

}  // namespace smanon
