#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "smanon/error.hpp"

namespace smanon {

using Instant = std::chrono::sys_seconds;

inline constexpr double kJoulePerKwh = 3.6e6;

/// Uniformly spaced, strictly increasing sequence of UTC instants.
class TimeGrid {
 public:
  TimeGrid() = default;
  explicit TimeGrid(std::vector<Instant> timestamps);

  static TimeGrid uniform(Instant start, std::int64_t step_seconds, std::size_t n);

  std::size_t size() const { return timestamps_.size(); }
  double step_seconds() const { return static_cast<double>(step_); }
  std::int64_t step() const { return step_; }
  const std::vector<Instant>& timestamps() const { return timestamps_; }
  const Instant& operator[](std::size_t i) const { return timestamps_[i]; }

  /// Seconds since midnight (UTC) of sample i.
  int second_of_day(std::size_t i) const;
  /// 0 = Monday ... 6 = Sunday.
  int weekday(std::size_t i) const;
  /// 0-based day of year.
  int day_of_year(std::size_t i) const;

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

 private:
  std::vector<Instant> timestamps_;
  std::int64_t step_ = 0;
};

/// Parses `YYYY-MM-DDTHH:MM[:SS][Z]` (a space may replace `T`).
Instant parse_iso8601(std::string_view text);
std::string format_iso8601(Instant t);

enum class LoadCategory { Apartment, House, NonResidential };

inline constexpr LoadCategory kAllCategories[] = {LoadCategory::Apartment, LoadCategory::House,
                                                  LoadCategory::NonResidential};

std::string_view to_string(LoadCategory c);
LoadCategory parse_category(std::string_view text);

struct LoadProfile {
  std::string meter_id;
  LoadCategory category = LoadCategory::House;
  Eigen::VectorXd power_w;
  int customer_count = 1;
};

struct Bus {
  std::string id;
  double v_base_v = 400.0;
};

struct Line {
  std::string from_bus;
  std::string to_bus;
  double r_ohm = 0.0;
  double x_ohm = 0.0;
  double ampacity_a = 0.0;
};

/// A load location whose profile is not metered: only its energy over the study horizon and
/// its category are known.
struct UnknownLoad {
  std::string bus;
  double energy_j = 0.0;
  LoadCategory category = LoadCategory::House;
};

/// Radial low-voltage network. Known loads reference metered profiles by meter id; the series
/// themselves live in a profile file.
struct Network {
  std::string name;
  std::vector<Bus> buses;
  std::vector<Line> lines;
  std::string transformer_bus;
  std::map<std::string, std::string> known_loads;  // bus -> meter id
  std::vector<UnknownLoad> unknown_loads;

  /// Throws Error unless the network is a tree rooted at the transformer with consistent loads.
  void validate() const;
  std::optional<std::size_t> bus_index(std::string_view id) const;
};

struct LoadDatabase {
  std::vector<LoadProfile> entries;
};

enum class GridPolicy { Strict, Infer };

struct ProfileTable {
  TimeGrid grid;
  std::vector<LoadProfile> profiles;

  const LoadProfile* find(std::string_view meter_id) const;
};

/// Reads `timestamp,<meter_id>,...` with one watt value per meter per row. Under Infer, gaps of
/// at most four consecutive missing cells are linearly interpolated.
ProfileTable read_profiles_csv(const std::filesystem::path& path,
                               GridPolicy policy = GridPolicy::Strict);
ProfileTable parse_profiles_csv(std::string_view text, GridPolicy policy = GridPolicy::Strict);
void write_profiles_csv(const std::filesystem::path& path, const TimeGrid& grid,
                        std::span<const LoadProfile> profiles);

/// Per-meter metadata sidecar: `meter_id,category,customers`.
struct MeterInfo {
  LoadCategory category = LoadCategory::House;
  int customers = 1;
};
std::map<std::string, MeterInfo> read_meter_metadata_csv(const std::filesystem::path& path);
void write_meter_metadata_csv(const std::filesystem::path& path,
                              std::span<const LoadProfile> profiles);
/// Applies category and customer count to each profile; throws if a profile has no entry.
void apply_metadata(std::vector<LoadProfile>& profiles,
                    const std::map<std::string, MeterInfo>& meta);

Network read_network_json(const std::filesystem::path& path);
Network parse_network_json(std::string_view text);
std::string network_to_json(const Network& net);
void write_network_json(const std::filesystem::path& path, const Network& net);

struct AggregationSplit {
  std::vector<LoadProfile> fixed;
  std::vector<LoadProfile> anonymisable;
};

/// Meters aggregating at least `threshold` customers keep their location; the rest are
/// candidates for anonymisation.
AggregationSplit aggregate_multicustomer(std::span<const LoadProfile> profiles, int threshold);

/// Shared helper: `%.17g` formatting so text files round-trip bit-exact.
std::string format_double(double v);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace smanon
