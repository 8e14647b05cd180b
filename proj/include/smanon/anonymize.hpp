#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "smanon/features.hpp"
#include "smanon/model.hpp"
#include "smanon/partition.hpp"
#include "smanon/powerflow.hpp"

namespace smanon {

struct ExchangeGroup {
  std::string id;
  std::vector<std::string> meters;  // sorted
  std::vector<std::string> buses;   // shuffled, carries no pairing with `meters`
};

/// Everything the planner receives: group <-> bus-list associations and the locations of
/// multi-customer meters.
struct GroupExchange {
  std::vector<ExchangeGroup> groups;
  std::map<std::string, std::string> fixed;  // meter -> bus

  void validate() const;
};

std::string exchange_to_json(const GroupExchange& x);
GroupExchange parse_exchange_json(std::string_view text);
GroupExchange read_exchange_json(const std::filesystem::path& path);
void write_exchange_json(const std::filesystem::path& path, const GroupExchange& x);

struct GroupingOptions {
  ScenarioSpec scenario;
  int k = 3;
  int threshold = 3;
  double affinity_cap = 1e9;
  double ip_time_limit_s = 10.0;
  std::uint64_t seed = 0;  // bus-list shuffling only
};

struct GroupingDetail {
  FeatureMatrix features;           // normalised features of the anonymisable meters
  std::optional<Partition> partition;
  std::vector<std::string> warnings;
};

/// Metering-service side: splits off multi-customer meters, groups the rest by similarity and
/// attaches each group's bus list. `meter_bus` is the private meter -> bus map.
GroupExchange build_groups(std::span<const LoadProfile> profiles, const TimeGrid& grid,
                           const std::map<std::string, std::string>& meter_bus,
                           const GroupingOptions& opts, GroupingDetail* detail = nullptr);

struct AssignmentSample {
  std::uint64_t seed = 0;
  std::map<std::string, std::string> mapping;  // meter -> bus
};

/// Independent uniform permutation of every group's bus list; fixed meters keep their bus.
AssignmentSample sample_assignment(const GroupExchange& x, std::uint64_t seed);

struct MonteCarloRun {
  AssignmentSample sample;
  PowerFlowResult flow;
};

/// Iteration i uses seed base_seed + i. Calls `fn(i, sample, flow)` in iteration order.
void monte_carlo_each(const GroupExchange& x, const Network& network, const ProfileTable& profiles,
                      int n_iter, std::uint64_t base_seed, const PowerFlowOptions& opts,
                      const std::function<void(int, const AssignmentSample&, const PowerFlowResult&)>& fn);

std::vector<MonteCarloRun> monte_carlo(const GroupExchange& x, const Network& network,
                                       const ProfileTable& profiles, int n_iter,
                                       std::uint64_t base_seed, const PowerFlowOptions& opts = {});

/// Load assignment realised by a sample: each meter's series placed on its bus. Buses sharing
/// several meters receive their sum.
LoadAssignment realise(const AssignmentSample& sample, const ProfileTable& profiles);

struct GroupAudit {
  std::string id;
  int size = 0;
  double max_distance = 0.0;
  double mean_distance = 0.0;
  bool flagged = false;
};

struct AuditReport {
  double percentile = 0.95;
  double threshold = 0.0;  // percentile of all pairwise distances between grouped meters
  std::vector<GroupAudit> groups;
};

/// Linear-interpolation percentile (q in [0, 1]) of the given values.
double percentile(std::vector<double> values, double q);

/// Flags groups whose largest internal distance exceeds the `q` percentile of all pairwise
/// distances among grouped meters.
AuditReport anonymity_audit(const GroupExchange& x, const FeatureMatrix& features, double q = 0.95);

}  // namespace smanon
