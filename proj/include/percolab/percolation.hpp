#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "percolab/lattice.hpp"

namespace percolab {

/// Fixed-size bit set backing occupancy arrays.
class Bitset {
 public:
  Bitset() = default;
  explicit Bitset(std::size_t size) : size_(size), words_((size + 63) / 64, 0) {}

  std::size_t size() const noexcept { return size_; }
  bool test(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1U; }
  void set(std::size_t i) { words_[i >> 6] |= std::uint64_t{1} << (i & 63); }
  void reset(std::size_t i) { words_[i >> 6] &= ~(std::uint64_t{1} << (i & 63)); }
  std::size_t count() const;

  bool operator==(const Bitset&) const = default;

 private:
  std::size_t size_ = 0;
  std::vector<std::uint64_t> words_;
};

/// One occupancy realization.
struct Configuration {
  LatticeGeometry geometry;
  Bitset occupied;
  double p = 0.0;
  std::uint64_t seed = 0;
  Site occupied_count = 0;

  bool is_occupied(Site site) const { return occupied.test(static_cast<std::size_t>(site)); }
};

/// Occupies each site independently with probability p. Identical
/// (geometry, p, seed) give identical configurations on every platform.
Configuration sample_configuration(const LatticeGeometry& geometry, double p, std::uint64_t seed);

/// Configuration with exactly the listed sites occupied.
Configuration make_configuration(const LatticeGeometry& geometry, std::span<const Site> occupied_sites);

/// Union-find over lattice sites: union by size, path compression.
///
/// Under periodic boundaries each site also carries its unwrapped
/// displacement to its parent, so a bond that closes a loop with non-zero
/// winding marks the cluster as wrapping along that axis. Under free
/// boundaries each root carries the set of faces its cluster touches.
class ClusterForest {
 public:
  static constexpr Site kEmpty = -1;

  explicit ClusterForest(const LatticeGeometry& geometry);

  const LatticeGeometry& geometry() const noexcept { return geometry_; }

  void add(Site site);
  bool contains(Site site) const { return parent_[static_cast<std::size_t>(site)] != kEmpty; }

  /// Adds `site` and joins it with every occupied neighbor.
  void occupy(Site site);

  /// Joins the clusters of neighbors a and b, where b = a + direction * e_axis
  /// in unwrapped coordinates.
  void join(Site a, Site b, int axis, int direction);

  Site find(Site site);
  Site find(Site site) const;

  Site cluster_size(Site root) const { return size_[static_cast<std::size_t>(root)]; }

  /// Axes along which the cluster rooted at `root` wraps (periodic) or
  /// touches both opposite faces (free). Bit a is axis a. Axes of length 1
  /// never count.
  std::uint64_t spanning_axes(Site root) const;

  /// Unwrapped position of `site` relative to its root. Valid after find().
  /// Only available under periodic boundaries.
  std::span<const std::int32_t> offset(Site site) const {
    return {offsets_.data() + static_cast<std::size_t>(site) * dims_, dims_};
  }

  Site cluster_count() const noexcept { return clusters_; }
  Site occupied_count() const noexcept { return occupied_; }
  Site largest() const noexcept { return largest_; }
  /// Sum of squared cluster sizes over all clusters.
  std::int64_t sum_squared_sizes() const noexcept { return sum_sq_; }
  /// True once any cluster spans/wraps along any axis.
  bool any_spanning() const noexcept { return any_spanning_; }
  /// Root of the most recently detected spanning cluster, if any.
  std::optional<Site> spanning_root() const;

 private:
  Site compress(Site site);
  void note_spanning(Site root);

  LatticeGeometry geometry_;
  std::size_t dims_;
  bool periodic_;
  std::vector<Site> parent_;
  std::vector<Site> size_;
  std::vector<std::int32_t> offsets_;     // periodic only, dims_ per site
  std::vector<std::uint64_t> mask_low_;   // free: touches low face; periodic: wraps
  std::vector<std::uint64_t> mask_high_;  // free: touches high face
  std::vector<Site> path_;
  std::vector<std::int32_t> scratch_;
  std::uint64_t live_axes_ = 0;
  Site clusters_ = 0;
  Site occupied_ = 0;
  Site largest_ = 0;
  std::int64_t sum_sq_ = 0;
  bool any_spanning_ = false;
  Site spanning_root_ = kEmpty;
};

/// Fully compressed cluster partition of one configuration.
class ClusterLabeling {
 public:
  explicit ClusterLabeling(const Configuration& config);

  const LatticeGeometry& geometry() const noexcept { return forest_.geometry(); }
  Site cluster_count() const noexcept { return forest_.cluster_count(); }
  Site occupied_count() const noexcept { return forest_.occupied_count(); }
  bool occupied(Site site) const { return forest_.contains(site); }

  /// Root of the cluster containing an occupied site.
  Site root(Site site) const { return forest_.find(site); }
  Site cluster_size(Site root) const { return forest_.cluster_size(root); }
  std::uint64_t spanning_axes(Site root) const { return forest_.spanning_axes(root); }
  bool any_spanning() const noexcept { return forest_.any_spanning(); }
  Site largest() const noexcept { return forest_.largest(); }

  /// Roots of all clusters in increasing site order.
  std::vector<Site> roots() const;

  /// Unwrapped position of `site` relative to its cluster root.
  void relative_position(Site site, std::span<std::int64_t> out) const;

 private:
  ClusterForest forest_;
  std::vector<Site> roots_;
};

ClusterLabeling label_clusters(const Configuration& config);

// ---------------------------------------------------------------------------
// Newman-Ziff single-sweep measurement

enum class Observable { largest_cluster, spanning, mean_finite_size, cluster_count };

std::string_view to_string(Observable observable);
Observable parse_observable(std::string_view text);

/// Ensemble mean of an observable after n occupied sites, n = 0..N.
struct MicrocanonicalCurve {
  Observable observable;
  std::vector<double> mean;
  std::vector<double> stderr_of_mean;
  std::size_t realizations = 0;
};

struct SweepOptions {
  std::size_t realizations = 1;
  int workers = 1;
};

/// Adds sites in a seeded random order, one at a time, recording each
/// observable after every addition; averages over `realizations`
/// permutations seeded by realization_seed(master_seed, i).
std::vector<MicrocanonicalCurve> newman_ziff_sweep(const LatticeGeometry& geometry, std::uint64_t master_seed,
                                                   std::span<const Observable> observables,
                                                   const SweepOptions& options = {});

/// Site order used by realization with the given seed.
std::vector<Site> sweep_order(const LatticeGeometry& geometry, std::uint64_t seed);

/// Number of added sites after which the first spanning (free) or wrapping
/// (periodic) cluster appears, or N + 1 if none ever does.
Site first_spanning_step(const LatticeGeometry& geometry, std::uint64_t seed);

/// Binomial weights B(N, n, p) over the window of n where they are not
/// negligible, built by a ratio recurrence outward from the mode.
class BinomialWeights {
 public:
  BinomialWeights(Site trials, double p);

  Site first() const noexcept { return first_; }
  Site last() const noexcept { return first_ + static_cast<Site>(weights_.size()) - 1; }
  double weight(Site n) const;
  /// P(X >= n).
  double upper_tail(Site n) const;

 private:
  Site first_ = 0;
  std::vector<double> weights_;
  std::vector<double> upper_;
};

/// Canonical value Q(p) = sum_n B(N, n, p) Q_n of a microcanonical curve.
double canonical_convolve(std::span<const double> curve, double p);
inline double canonical_convolve(const MicrocanonicalCurve& curve, double p) {
  return canonical_convolve(curve.mean, p);
}

struct ThresholdEstimate {
  double p_c_hat = 0.0;
  double stderr_of_estimate = 0.0;
  std::size_t realizations = 0;
  std::size_t bootstrap_samples = 0;
};

struct ThresholdOptions {
  std::size_t realizations = 100;
  std::size_t bootstrap = 200;
  int workers = 1;
};

/// p at which the canonical spanning/wrapping probability crosses 1/2,
/// by bisection; standard error by bootstrap over realizations.
ThresholdEstimate estimate_threshold(const LatticeGeometry& geometry, std::uint64_t master_seed,
                                     const ThresholdOptions& options = {});

/// Canonical spanning probability implied by a set of first-spanning steps.
double spanning_probability(std::span<const Site> first_steps, Site site_count, double p);

/// Bisection for spanning_probability(first_steps, N, p) = 1/2.
double crossing_point(std::span<const Site> first_steps, Site site_count);

}  // namespace percolab
