#pragma once

// Percolation on the Bethe lattice (infinite tree of uniform degree z):
// closed forms for the threshold, correlation function, correlation length,
// mean cluster size and cutoff, plus a growth sampler for the cluster of an
// occupied origin that the closed forms are checked against.

#include <cstdint>
#include <optional>
#include <vector>

#include "percolab/cluster_analysis.hpp"

namespace percolab::bethe {

struct Params {
  int z = 3;
  double p = 0.0;

  void validate() const;
};

double critical_probability(int z);

/// g(l) = z (z - 1)^(l - 1) p^l, l >= 1.
double correlation(int z, double p, int l);

/// xi_l^2 = p_c (p + p_c) / (p_c - p)^2, p < p_c.
double xi_l_squared(int z, double p);
double xi_l(int z, double p);

/// S = p_c (1 + p) / (p_c - p), p < p_c.
double mean_size(int z, double p);

struct Cutoff {
  double a = 0.0;
  double sigma = 0.5;
  double c = 0.0;
};

/// a = 1 / (2 p_c^2 (1 - p_c)), sigma = 1/2, c = -ln(1 - a (p_c - p)^2).
Cutoff cutoff(int z, double p);

/// Exact per-size decay rate of n_s(p) / n_s(p_c),
/// -ln[(p / p_c) ((1 - p) / (1 - p_c))^(z - 2)]. Equals cutoff().c for z = 3.
double ratio_decay_rate(int z, double p);

struct Exponents {
  double tau = 2.5;
  double sigma = 0.5;
  double nu = 0.5;
  double fractal_dimension = 4.0;
};

/// Mean-field exponents; D is computed as 1 / (sigma nu) and tau from
/// (3 - tau) / sigma = 1.
Exponents exponents();

struct MomentScaling {
  double moment = 0.0;
  double predicted_exponent = 0.0;  // M_k ~ |p_c - p|^-(predicted_exponent)
  std::size_t terms = 0;
};

/// M_k = sum_{s>=1} s^(k - tau) exp(-c s), summed until a term falls below
/// 1e-15 of the partial sum.
MomentScaling moment_scaling(int z, double p, double k);

/// Every closed form at (z, p). Quantities that diverge at p >= p_c are empty.
struct Exact {
  double p_c = 0.0;
  std::optional<double> xi_l_squared;
  std::optional<double> mean_size;
  std::optional<Cutoff> cutoff;
  Exponents exponents;
};

Exact evaluate(const Params& params);

// ---------------------------------------------------------------------------
// Growth sampler

inline constexpr Site kDefaultGrowthCap = 1'000'000;

struct ClusterRealization {
  Site size = 1;
  Site perimeter = 0;
  /// shells[l] = occupied sites at chemical distance l; shells[0] = 1.
  std::vector<Site> shells;
  bool truncated = false;
};

/// Grows the cluster containing an occupied origin: z slots at the origin,
/// z - 1 at every later site, each occupied with probability p. Stops at
/// extinction or when the size reaches `cap`.
ClusterRealization grow_cluster(int z, double p, std::uint64_t seed, Site cap = kDefaultGrowthCap);

struct GrowthEnsemble {
  int z = 3;
  double p = 0.0;
  std::size_t realizations = 0;
  std::size_t truncated = 0;
  /// Finished realizations violating t = (z - 2) s + 2; expected 0.
  std::size_t perimeter_violations = 0;
  double mean_size = 0.0;
  double mean_size_stderr = 0.0;
  /// Index l = 1..l_max: mean occupied count at shell l and its stderr.
  std::vector<double> shell_mean;
  std::vector<double> shell_stderr;
  /// Sizes of finished realizations.
  SizeHistogram sizes;
};

struct GrowthOptions {
  std::size_t realizations = 100'000;
  Site cap = kDefaultGrowthCap;
  int l_max = 8;
  int workers = 1;
};

/// Realization i uses realization_seed(master_seed, i). Averages are over
/// finished (non-truncated) realizations.
GrowthEnsemble grow_ensemble(int z, double p, std::uint64_t master_seed, const GrowthOptions& options = {});

}  // namespace percolab::bethe
