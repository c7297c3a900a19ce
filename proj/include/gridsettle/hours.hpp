#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gridsettle {

using TimePoint = std::chrono::sys_seconds;

/// Parses "YYYY-MM-DDTHH:MM[:SS][Z]" (a space may replace the T).
std::optional<TimePoint> parse_timestamp(std::string_view text);

/// Ordered hourly clock shared by loads, scenarios and results. Labels keep
/// the exact text read from input so outputs echo it unchanged.
class HourIndex {
 public:
  HourIndex() = default;
  HourIndex(std::vector<std::string> labels, std::vector<TimePoint> times);

  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }
  const std::string& label(std::size_t h) const { return labels_.at(h); }
  TimePoint time(std::size_t h) const { return times_.at(h); }
  const std::vector<std::string>& labels() const { return labels_; }

  /// Position of a timestamp, matched by instant rather than by text.
  std::optional<std::size_t> find(TimePoint t) const;

  /// True when the instants are strictly increasing in 1 h steps.
  bool hourly() const;

  /// Whole 24 h days covered; a trailing partial day is not counted.
  std::size_t days() const { return size() / 24; }

  bool operator==(const HourIndex& other) const { return times_ == other.times_; }

 private:
  std::vector<std::string> labels_;
  std::vector<TimePoint> times_;
};

}  // namespace gridsettle
