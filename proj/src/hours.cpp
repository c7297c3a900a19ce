#include "gridsettle/hours.hpp"

#include <charconv>

namespace gridsettle {
namespace {

bool read_int(std::string_view text, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > text.size()) return false;
  auto first = text.data() + pos;
  auto [ptr, ec] = std::from_chars(first, first + len, out);
  return ec == std::errc() && ptr == first + len;
}

}  // namespace

std::optional<TimePoint> parse_timestamp(std::string_view text) {
  using namespace std::chrono;
  if (!text.empty() && text.back() == 'Z') text.remove_suffix(1);
  int y = 0, mo = 0, d = 0, hh = 0, mi = 0, ss = 0;
  if (text.size() != 16 && text.size() != 19) return std::nullopt;
  if (text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != ' ') || text[13] != ':')
    return std::nullopt;
  if (!read_int(text, 0, 4, y) || !read_int(text, 5, 2, mo) || !read_int(text, 8, 2, d) ||
      !read_int(text, 11, 2, hh) || !read_int(text, 14, 2, mi))
    return std::nullopt;
  if (text.size() == 19 && (text[16] != ':' || !read_int(text, 17, 2, ss))) return std::nullopt;
  year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || hh > 23 || mi > 59 || ss > 59) return std::nullopt;
  return TimePoint{sys_days{ymd}} + hours{hh} + minutes{mi} + seconds{ss};
}

HourIndex::HourIndex(std::vector<std::string> labels, std::vector<TimePoint> times)
    : labels_(std::move(labels)), times_(std::move(times)) {}

std::optional<std::size_t> HourIndex::find(TimePoint t) const {
  // Hourly clocks are the common case: try direct offset first.
  if (!times_.empty() && t >= times_.front()) {
    auto offset = std::chrono::duration_cast<std::chrono::hours>(t - times_.front()).count();
    if (offset >= 0 && static_cast<std::size_t>(offset) < times_.size() &&
        times_[static_cast<std::size_t>(offset)] == t)
      return static_cast<std::size_t>(offset);
  }
  for (std::size_t i = 0; i < times_.size(); ++i) {
    if (times_[i] == t) return i;
  }
  return std::nullopt;
}

bool HourIndex::hourly() const {
  for (std::size_t i = 1; i < times_.size(); ++i) {
    if (times_[i] - times_[i - 1] != std::chrono::hours{1}) return false;
  }
  return true;
}

}  // namespace gridsettle
