#pragma once

// Synthetic labeled datasets over a percolation configuration. Occupied
// sites are the examples. Every cluster of two or more sites gets its own
// keyed labeling function; isolated sites get independent memorized labels.

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "percolab/cluster_analysis.hpp"
#include "percolab/lattice.hpp"
#include "percolab/percolation.hpp"

namespace percolab {

struct DatasetSpec {
  LatticeGeometry geometry = LatticeGeometry::cube(2, 32, Boundary::free);
  double p = 0.5;
  std::int64_t label_space = 2;  // |Y|
  std::uint64_t seed = 0;
  Site min_cluster_size = 1;  // s_min for the feature inventory

  void validate() const;
};

inline constexpr std::int64_t kIsolated = -1;

struct LabeledExample {
  Site site = 0;
  Coords coords;
  std::int64_t label = 0;
  /// Smallest site index in the cluster, or kIsolated.
  std::int64_t cluster_id = kIsolated;
  bool in_distribution = false;
};

struct ClusterFunctionAssignment {
  std::string family = "mix64-coords";
  std::map<std::int64_t, std::uint64_t> keys;  // cluster_id -> function key
};

struct Dataset {
  DatasetSpec spec;
  std::vector<LabeledExample> examples;  // increasing site index
  ClusterFunctionAssignment functions;
};

/// Function key of the cluster whose canonical id is `cluster_id`.
std::uint64_t function_key(std::uint64_t seed, std::int64_t cluster_id);

/// F(key, coords) in [0, label_space).
std::int64_t cluster_function(std::uint64_t key, std::span<const std::int64_t> coords, std::int64_t label_space);

/// Label of an isolated site.
std::int64_t memorized_label(std::uint64_t seed, Site site, std::int64_t label_space);

Dataset generate_dataset(const DatasetSpec& spec);

enum class Regime { subcritical, near_critical, extreme_supercritical };

std::string_view to_string(Regime regime);

inline constexpr double kDefaultRegimeBand = 3.0;

Regime classify_regime(double p, double pc_hat, double band = kDefaultRegimeBand);

struct RegimeReport {
  Regime regime = Regime::subcritical;
  std::size_t context_feature_count = 0;
  int component_dim_per_cluster = 4;
  /// Largest cluster over occupied sites when it spans, else 0.
  double spanning_fraction = 0.0;
};

RegimeReport feature_inventory(const ClusterCensus& census, Regime regime, Site s_min);

enum class DatasetFormat { csv, jsonl };

DatasetFormat parse_dataset_format(std::string_view text);

std::string render_dataset(const Dataset& dataset, DatasetFormat format);

/// Writes render_dataset() to `path` atomically.
void export_dataset(const Dataset& dataset, DatasetFormat format, const std::string& path);

}  // namespace percolab
