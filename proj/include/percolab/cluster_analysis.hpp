#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "percolab/lattice.hpp"
#include "percolab/percolation.hpp"

namespace percolab {

using SizeHistogram = std::map<Site, Site>;  // cluster size s -> number of clusters

/// Geometry of one cluster. radius2 is R_s^2 about the center of mass,
/// computed from unwrapped positions; it is meaningless when `wraps`.
struct ClusterGeometry {
  Site size = 0;
  double radius2 = 0.0;
  bool wraps = false;
  bool spans = false;
};

struct ClusterCensus {
  SizeHistogram histogram;
  Site site_count = 0;
  Site occupied = 0;
  Site largest = 0;
  bool spanning = false;
  /// True when the largest cluster is a spanning (free) or wrapping
  /// (periodic) one.
  bool largest_spans = false;
  int dimension = 0;
  /// Per-cluster geometry, filled only when requested.
  std::vector<ClusterGeometry> clusters;

  /// n_s: clusters of size s per lattice site.
  double cluster_number(Site s) const;
};

struct CensusOptions {
  bool with_geometry = false;
  /// Clusters smaller than this are left out of `clusters`.
  Site geometry_min_size = 1;
};

ClusterCensus census(const ClusterLabeling& labeling, const CensusOptions& options = {});

/// Census of a hypothetical configuration holding clusters of the given sizes.
ClusterCensus census_from_sizes(std::span<const Site> sizes, Site site_count = 0);

/// Adds `other`'s histogram and cluster list into `total`.
void accumulate(ClusterCensus& total, const ClusterCensus& other);

/// S = sum s^2 n_s / sum s n_s; with `exclude_largest` one copy of the
/// largest cluster is dropped from both sums.
double mean_cluster_size(const ClusterCensus& census, bool exclude_largest);

/// Largest cluster size over occupied count.
double percolation_strength(const ClusterCensus& census);

// ---------------------------------------------------------------------------
// Correlation functions

struct CorrelationEstimate {
  enum class Kind { chemical, euclidean };
  Kind kind = Kind::chemical;
  std::map<std::int64_t, double> values;  // distance -> mean same-cluster count
  std::map<std::int64_t, double> stderrs;
  std::size_t samples = 0;
};

/// g(l) from breadth-first searches over occupied neighbors, started at
/// `origins` occupied sites drawn uniformly (size-biased) with the given seed.
CorrelationEstimate chemical_correlation(const Configuration& config, const ClusterLabeling& labeling,
                                         std::size_t origins, int l_max, std::uint64_t seed);

double correlation_length_chemical_squared(const CorrelationEstimate& estimate);
double correlation_length_chemical(const CorrelationEstimate& estimate);

using Point = std::vector<double>;

/// R^2 = (1/s) sum |r_i - r_0|^2.
double gyration_radius_squared(std::span<const Point> points);
/// R^2 = (1/2s^2) sum_ij |r_i - r_j|^2.
double gyration_radius_squared_pairwise(std::span<const Point> points);

struct GyrationResult {
  double radius2 = 0.0;
  bool wraps = false;  // cluster winds around a periodic axis; radius2 unset
  double radius() const;
};

/// Radius of gyration of a connected set of sites. Positions are unwrapped
/// by walking the cluster; under periodic boundaries a cluster that winds
/// around the torus is flagged instead.
GyrationResult radius_of_gyration(std::span<const Site> cluster_sites, const LatticeGeometry& geometry);

/// xi_r^2 = 2 sum R_s^2 s^2 n_s / sum s^2 n_s over the measured clusters,
/// skipping wrapping clusters (and the largest one when it spans).
double euclidean_correlation_length_squared(const ClusterCensus& census);

// ---------------------------------------------------------------------------
// Fitters

struct PowerLawFit {
  double tau_hat = 0.0;
  double stderr_of_tau = 0.0;
  Site s_min = 1;
  std::size_t samples = 0;
};

/// Hurwitz zeta sum_{k>=0} (q + k)^{-s}, s > 1, q > 0.
double hurwitz_zeta(double s, double q);

/// Discrete maximum-likelihood exponent of a power law over s >= s_min.
PowerLawFit fit_power_law(std::span<const Site> samples, Site s_min);
PowerLawFit fit_power_law(const SizeHistogram& histogram, Site s_min);

struct SizeRadius {
  double size = 0.0;
  double radius = 0.0;
};

struct FractalFit {
  double d_hat = 0.0;
  double stderr_of_d = 0.0;
  double s_lo = 0.0;
  double s_hi = 0.0;
  std::size_t pairs = 0;
};

/// Least-squares slope of log R_s against log s over s in [s_lo, s_hi];
/// D = 1 / slope.
FractalFit fit_fractal_dimension(std::span<const SizeRadius> pairs, double s_lo, double s_hi);

enum class PairMode {
  per_size,     // one pair per distinct s, R_s^2 averaged over its clusters
  per_cluster,  // one pair per cluster
};

/// (s, R_s) pairs from a census, skipping wrapping/spanning clusters.
std::vector<SizeRadius> size_radius_pairs(const ClusterCensus& census, PairMode mode = PairMode::per_size);

struct CutoffFit {
  double c_hat = 0.0;
  double stderr_of_c = 0.0;
  Site s_lo = 0;
  Site s_hi = 0;
};

/// Exponential cutoff c in n_s(p) / n_s(p_c) ~ exp(-c s), over s in
/// [s_lo, s_hi]. Fitted by maximum likelihood: given the pooled count at each
/// s, the count from `at_p` is binomial with log-odds linear in s.
CutoffFit fit_exponential_cutoff(const SizeHistogram& at_p, const SizeHistogram& at_pc, Site s_lo, Site s_hi);

// ---------------------------------------------------------------------------
// Exact enumeration

struct ExactEnumeration {
  Site site_count = 0;
  double p = 0.0;
  /// Index s: expected number of size-s clusters in the lattice.
  std::vector<double> expected_counts;
  std::vector<double> count_variance;
  /// Index s: n_s = expected_counts[s] / N.
  std::vector<double> cluster_numbers;
  /// S = sum s^2 n_s / sum s n_s.
  double mean_cluster_size = 0.0;
  double spanning_probability = 0.0;
  /// Moments of A = sum over clusters of s^2 and B = occupied count, for
  /// error bars on ratio estimators.
  double mean_a = 0.0, mean_b = 0.0, var_a = 0.0, var_b = 0.0, cov_ab = 0.0;
};

inline constexpr Site kMaxEnumerationSites = 20;

/// Exact expectations over all 2^N configurations, weighted p^k (1-p)^(N-k).
/// Labels clusters with its own flood fill, independent of ClusterForest.
ExactEnumeration exact_enumeration_oracle(const LatticeGeometry& geometry, double p);

}  // namespace percolab
