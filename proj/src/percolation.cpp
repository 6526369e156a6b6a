#include "percolab/percolation.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "percolab/ensemble.hpp"
#include "percolab/error.hpp"
#include "percolab/rng.hpp"

namespace percolab {

std::size_t Bitset::count() const {
  std::size_t total = 0;
  for (const auto w : words_) total += static_cast<std::size_t>(std::popcount(w));
  return total;
}

namespace {

void require_probability(double p) {
  require(std::isfinite(p) && p >= 0.0 && p <= 1.0, "occupation probability must lie in [0, 1]");
}

}  // namespace

Configuration sample_configuration(const LatticeGeometry& geometry, double p, std::uint64_t seed) {
  require_probability(p);
  const auto n = static_cast<std::size_t>(geometry.site_count());
  Configuration config{geometry, Bitset(n), p, seed, 0};
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    if (rng.uniform() < p) {
      config.occupied.set(i);
      ++config.occupied_count;
    }
  }
  return config;
}

Configuration make_configuration(const LatticeGeometry& geometry, std::span<const Site> occupied_sites) {
  const auto n = static_cast<std::size_t>(geometry.site_count());
  Configuration config{geometry, Bitset(n), 0.0, 0, 0};
  for (const auto site : occupied_sites) {
    require(site >= 0 && site < geometry.site_count(), "occupied site index out of range");
    config.occupied.set(static_cast<std::size_t>(site));
  }
  config.occupied_count = static_cast<Site>(config.occupied.count());
  config.p = n == 0 ? 0.0 : static_cast<double>(config.occupied_count) / static_cast<double>(n);
  return config;
}

// ---------------------------------------------------------------------------
// ClusterForest

ClusterForest::ClusterForest(const LatticeGeometry& geometry)
    : geometry_(geometry),
      dims_(static_cast<std::size_t>(geometry.dimension())),
      periodic_(geometry.periodic()) {
  const auto n = static_cast<std::size_t>(geometry.site_count());
  parent_.assign(n, kEmpty);
  size_.assign(n, 0);
  mask_low_.assign(n, 0);
  if (periodic_) {
    offsets_.assign(n * dims_, 0);
  } else {
    mask_high_.assign(n, 0);
  }
  scratch_.resize(dims_);
  for (int axis = 0; axis < geometry.dimension(); ++axis) {
    if (geometry.side(axis) >= 2) live_axes_ |= std::uint64_t{1} << axis;
  }
}

void ClusterForest::add(Site site) {
  const auto s = static_cast<std::size_t>(site);
  if (parent_[s] != kEmpty) return;
  parent_[s] = site;
  size_[s] = 1;
  if (!periodic_) {
    Site rest = site;
    for (int axis = geometry_.dimension() - 1; axis >= 0; --axis) {
      const auto len = geometry_.side(axis);
      const auto c = rest % len;
      rest /= len;
      if (len < 2) continue;
      if (c == 0) mask_low_[s] |= std::uint64_t{1} << axis;
      if (c == len - 1) mask_high_[s] |= std::uint64_t{1} << axis;
    }
  }
  ++clusters_;
  ++occupied_;
  sum_sq_ += 1;
  largest_ = std::max<Site>(largest_, 1);
}

void ClusterForest::occupy(Site site) {
  add(site);
  geometry_.for_each_neighbor(site, [&](Site j, int axis, int direction) {
    if (contains(j)) join(site, j, axis, direction);
  });
}

Site ClusterForest::compress(Site site) {
  Site x = site;
  while (parent_[static_cast<std::size_t>(x)] != x) {
    path_.push_back(x);
    x = parent_[static_cast<std::size_t>(x)];
  }
  const Site root = x;
  for (auto it = path_.rbegin(); it != path_.rend(); ++it) {
    const auto node = static_cast<std::size_t>(*it);
    const Site up = parent_[node];
    if (up != root && periodic_) {
      const auto u = static_cast<std::size_t>(up);
      for (std::size_t k = 0; k < dims_; ++k) offsets_[node * dims_ + k] += offsets_[u * dims_ + k];
    }
    parent_[node] = root;
  }
  path_.clear();
  return root;
}

Site ClusterForest::find(Site site) {
  require(contains(site), "find() on an unoccupied site");
  return compress(site);
}

Site ClusterForest::find(Site site) const {
  require(contains(site), "find() on an unoccupied site");
  Site x = site;
  while (parent_[static_cast<std::size_t>(x)] != x) x = parent_[static_cast<std::size_t>(x)];
  return x;
}

void ClusterForest::join(Site a, Site b, int axis, int direction) {
  const Site ra = compress(a);
  const Site rb = compress(b);
  const auto ua = static_cast<std::size_t>(a);
  const auto ub = static_cast<std::size_t>(b);
  const auto k_axis = static_cast<std::size_t>(axis);

  if (ra == rb) {
    if (!periodic_) return;
    // Loop closed: pos(b) - pos(a) disagrees with the lattice step only if
    // the loop winds around the torus.
    std::uint64_t winding = 0;
    for (std::size_t k = 0; k < dims_; ++k) {
      const std::int32_t da = a == ra ? 0 : offsets_[ua * dims_ + k];
      const std::int32_t db = b == rb ? 0 : offsets_[ub * dims_ + k];
      const std::int32_t step = k == k_axis ? direction : 0;
      if (da + step - db != 0) winding |= std::uint64_t{1} << k;
    }
    if (winding != 0) {
      mask_low_[static_cast<std::size_t>(ra)] |= winding;
      note_spanning(ra);
    }
    return;
  }

  const auto sa = size_[static_cast<std::size_t>(ra)];
  const auto sb = size_[static_cast<std::size_t>(rb)];
  const bool keep_a = sa >= sb;
  const Site big = keep_a ? ra : rb;
  const Site small = keep_a ? rb : ra;
  const auto ubig = static_cast<std::size_t>(big);
  const auto usmall = static_cast<std::size_t>(small);

  if (periodic_) {
    for (std::size_t k = 0; k < dims_; ++k) {
      const std::int32_t da = a == ra ? 0 : offsets_[ua * dims_ + k];
      const std::int32_t db = b == rb ? 0 : offsets_[ub * dims_ + k];
      const std::int32_t step = k == k_axis ? direction : 0;
      // pos(rb) - pos(ra) = da + step - db
      const std::int32_t rel = da + step - db;
      offsets_[usmall * dims_ + k] = keep_a ? rel : -rel;
    }
  }
  parent_[usmall] = big;
  size_[ubig] = sa + sb;
  mask_low_[ubig] |= mask_low_[usmall];
  if (!periodic_) mask_high_[ubig] |= mask_high_[usmall];
  --clusters_;
  sum_sq_ += 2 * sa * sb;
  largest_ = std::max(largest_, sa + sb);
  if (spanning_axes(big) != 0) note_spanning(big);
}

std::uint64_t ClusterForest::spanning_axes(Site root) const {
  const auto r = static_cast<std::size_t>(root);
  if (periodic_) return mask_low_[r];
  return mask_low_[r] & mask_high_[r] & live_axes_;
}

void ClusterForest::note_spanning(Site root) {
  any_spanning_ = true;
  spanning_root_ = root;
}

std::optional<Site> ClusterForest::spanning_root() const {
  if (!any_spanning_) return std::nullopt;
  return find(spanning_root_);
}

// ---------------------------------------------------------------------------
// ClusterLabeling

ClusterLabeling::ClusterLabeling(const Configuration& config) : forest_(config.geometry) {
  const Site n = config.geometry.site_count();
  require(config.occupied.size() == static_cast<std::size_t>(n), "occupancy array length differs from site count");
  for (Site i = 0; i < n; ++i) {
    if (config.is_occupied(i)) forest_.add(i);
  }
  const auto& geometry = forest_.geometry();
  for (Site i = 0; i < n; ++i) {
    if (!forest_.contains(i)) continue;
    geometry.for_each_neighbor(i, [&](Site j, int axis, int direction) {
      if (direction > 0 && forest_.contains(j)) forest_.join(i, j, axis, direction);
    });
  }
  for (Site i = 0; i < n; ++i) {
    if (!forest_.contains(i)) continue;
    if (forest_.find(i) == i) roots_.push_back(i);
  }
}

std::vector<Site> ClusterLabeling::roots() const { return roots_; }

void ClusterLabeling::relative_position(Site site, std::span<std::int64_t> out) const {
  const auto& geometry = forest_.geometry();
  const Site r = root(site);
  if (geometry.periodic()) {
    const auto off = forest_.offset(site);
    for (std::size_t k = 0; k < off.size(); ++k) out[k] = site == r ? 0 : off[k];
    return;
  }
  const auto dims = static_cast<std::size_t>(geometry.dimension());
  std::vector<std::int64_t> root_coords(dims);
  geometry.coords_into(r, root_coords);
  geometry.coords_into(site, out);
  for (std::size_t k = 0; k < dims; ++k) out[k] -= root_coords[k];
}

ClusterLabeling label_clusters(const Configuration& config) { return ClusterLabeling(config); }

// ---------------------------------------------------------------------------
// Newman-Ziff sweep

std::string_view to_string(Observable observable) {
  switch (observable) {
    case Observable::largest_cluster: return "largest_cluster";
    case Observable::spanning: return "spanning";
    case Observable::mean_finite_size: return "mean_finite_size";
    case Observable::cluster_count: return "cluster_count";
  }
  return "unknown";
}

Observable parse_observable(std::string_view text) {
  for (const auto o : {Observable::largest_cluster, Observable::spanning, Observable::mean_finite_size,
                       Observable::cluster_count}) {
    if (text == to_string(o)) return o;
  }
  fail(ErrorKind::validation, "unknown observable '" + std::string(text) + "'");
}

std::vector<Site> sweep_order(const LatticeGeometry& geometry, std::uint64_t seed) {
  std::vector<Site> order(static_cast<std::size_t>(geometry.site_count()));
  std::iota(order.begin(), order.end(), Site{0});
  Rng rng(seed);
  rng.shuffle(std::span<Site>(order));
  return order;
}

namespace {

double observe(const ClusterForest& forest, Observable observable) {
  switch (observable) {
    case Observable::largest_cluster: return static_cast<double>(forest.largest());
    case Observable::spanning: return forest.any_spanning() ? 1.0 : 0.0;
    case Observable::cluster_count: return static_cast<double>(forest.cluster_count());
    case Observable::mean_finite_size: {
      auto second = static_cast<double>(forest.sum_squared_sizes());
      auto first = static_cast<double>(forest.occupied_count());
      if (forest.any_spanning()) {
        const auto largest = static_cast<double>(forest.largest());
        second -= largest * largest;
        first -= largest;
      }
      return first > 0 ? second / first : 0.0;
    }
  }
  return 0.0;
}

}  // namespace

std::vector<MicrocanonicalCurve> newman_ziff_sweep(const LatticeGeometry& geometry, std::uint64_t master_seed,
                                                   std::span<const Observable> observables,
                                                   const SweepOptions& options) {
  require(options.realizations >= 1, "realization count must be at least 1");
  require(!observables.empty(), "at least one observable is required");
  const auto n = static_cast<std::size_t>(geometry.site_count());
  const std::size_t k = observables.size();

  std::vector<std::vector<double>> sum(k, std::vector<double>(n + 1, 0.0));
  std::vector<std::vector<double>> sum_sq(k, std::vector<double>(n + 1, 0.0));

  auto produce = [&](std::size_t r) {
    ClusterForest forest(geometry);
    const auto order = sweep_order(geometry, realization_seed(master_seed, r));
    std::vector<std::vector<double>> trace(k, std::vector<double>(n + 1, 0.0));
    for (std::size_t j = 0; j < k; ++j) trace[j][0] = observe(forest, observables[j]);
    for (std::size_t step = 1; step <= n; ++step) {
      forest.occupy(order[step - 1]);
      for (std::size_t j = 0; j < k; ++j) trace[j][step] = observe(forest, observables[j]);
    }
    return trace;
  };
  auto consume = [&](std::size_t, std::vector<std::vector<double>>&& trace) {
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t step = 0; step <= n; ++step) {
        const double v = trace[j][step];
        sum[j][step] += v;
        sum_sq[j][step] += v * v;
      }
    }
  };
  const std::size_t grain = std::clamp<std::size_t>(65536 / (n + 1), 1, 256);
  parallel_fold(options.realizations, options.workers, produce, consume, grain);

  const auto count = static_cast<double>(options.realizations);
  std::vector<MicrocanonicalCurve> curves;
  for (std::size_t j = 0; j < k; ++j) {
    MicrocanonicalCurve curve{observables[j], std::vector<double>(n + 1), std::vector<double>(n + 1, 0.0),
                              options.realizations};
    for (std::size_t step = 0; step <= n; ++step) {
      const double mean = sum[j][step] / count;
      curve.mean[step] = mean;
      if (options.realizations > 1) {
        const double var = std::max(0.0, (sum_sq[j][step] - count * mean * mean) / (count - 1.0));
        curve.stderr_of_mean[step] = std::sqrt(var / count);
      }
    }
    curves.push_back(std::move(curve));
  }
  return curves;
}

Site first_spanning_step(const LatticeGeometry& geometry, std::uint64_t seed) {
  ClusterForest forest(geometry);
  const auto order = sweep_order(geometry, seed);
  for (std::size_t step = 0; step < order.size(); ++step) {
    forest.occupy(order[step]);
    if (forest.any_spanning()) return static_cast<Site>(step + 1);
  }
  return geometry.site_count() + 1;
}

// ---------------------------------------------------------------------------
// Canonical convolution

BinomialWeights::BinomialWeights(Site trials, double p) {
  require(trials >= 0, "trial count must be non-negative");
  require_probability(p);
  if (p == 0.0 || p == 1.0 || trials == 0) {
    first_ = p == 1.0 ? trials : 0;
    weights_ = {1.0};
    upper_ = {1.0};
    return;
  }
  const auto nd = static_cast<double>(trials);
  const Site mode = std::min<Site>(trials, static_cast<Site>(std::floor((nd + 1.0) * p)));
  const auto md = static_cast<double>(mode);
  const double log_mode = std::lgamma(nd + 1.0) - std::lgamma(md + 1.0) - std::lgamma(nd - md + 1.0) +
                          md * std::log(p) + (nd - md) * std::log1p(-p);
  const double w_mode = std::exp(log_mode);
  constexpr double kCutoff = 1e-18;
  const double odds = p / (1.0 - p);

  std::vector<double> below;  // mode-1, mode-2, ...
  double w = w_mode;
  for (Site j = mode; j > 0; --j) {
    w *= static_cast<double>(j) / static_cast<double>(trials - j + 1) / odds;
    if (w < kCutoff * w_mode) break;
    below.push_back(w);
  }
  std::vector<double> above;  // mode+1, mode+2, ...
  w = w_mode;
  for (Site j = mode; j < trials; ++j) {
    w *= static_cast<double>(trials - j) / static_cast<double>(j + 1) * odds;
    if (w < kCutoff * w_mode) break;
    above.push_back(w);
  }
  first_ = mode - static_cast<Site>(below.size());
  weights_.assign(below.rbegin(), below.rend());
  weights_.push_back(w_mode);
  weights_.insert(weights_.end(), above.begin(), above.end());

  const double total = std::accumulate(weights_.begin(), weights_.end(), 0.0);
  for (auto& x : weights_) x /= total;
  upper_.assign(weights_.size(), 0.0);
  double acc = 0.0;
  for (std::size_t i = weights_.size(); i-- > 0;) {
    acc += weights_[i];
    upper_[i] = acc;
  }
}

double BinomialWeights::weight(Site n) const {
  if (n < first_ || n > last()) return 0.0;
  return weights_[static_cast<std::size_t>(n - first_)];
}

double BinomialWeights::upper_tail(Site n) const {
  if (n <= first_) return 1.0;
  if (n > last()) return 0.0;
  return upper_[static_cast<std::size_t>(n - first_)];
}

double canonical_convolve(std::span<const double> curve, double p) {
  require(!curve.empty(), "microcanonical curve is empty");
  require_probability(p);
  const auto trials = static_cast<Site>(curve.size()) - 1;
  const BinomialWeights weights(trials, p);
  double value = 0.0;
  for (Site n = weights.first(); n <= weights.last(); ++n) {
    value += weights.weight(n) * curve[static_cast<std::size_t>(n)];
  }
  return value;
}

double spanning_probability(std::span<const Site> first_steps, Site site_count, double p) {
  require(!first_steps.empty(), "no realizations");
  const BinomialWeights weights(site_count, p);
  double total = 0.0;
  for (const auto step : first_steps) total += weights.upper_tail(step);
  return total / static_cast<double>(first_steps.size());
}

double crossing_point(std::span<const Site> first_steps, Site site_count) {
  if (spanning_probability(first_steps, site_count, 1.0) < 0.5) {
    fail(ErrorKind::no_crossing, "spanning probability never reaches 1/2 on this geometry");
  }
  double lo = 0.0;
  double hi = 1.0;
  for (int iter = 0; iter < 200 && hi - lo > 1e-12; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (spanning_probability(first_steps, site_count, mid) < 0.5) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

ThresholdEstimate estimate_threshold(const LatticeGeometry& geometry, std::uint64_t master_seed,
                                     const ThresholdOptions& options) {
  require(options.realizations >= 1, "realization count must be at least 1");
  const auto steps = parallel_map(options.realizations, options.workers, [&](std::size_t r) {
    return first_spanning_step(geometry, realization_seed(master_seed, r));
  });
  ThresholdEstimate estimate;
  estimate.realizations = options.realizations;
  estimate.p_c_hat = crossing_point(steps, geometry.site_count());

  Rng rng(hash_combine(master_seed, 0xb0075742ULL));
  std::vector<double> boot;
  std::vector<Site> resample(steps.size());
  for (std::size_t b = 0; b < options.bootstrap; ++b) {
    for (auto& s : resample) s = steps[static_cast<std::size_t>(rng.below(steps.size()))];
    try {
      boot.push_back(crossing_point(resample, geometry.site_count()));
    } catch (const Error&) {
      // resample without a crossing contributes nothing
    }
  }
  estimate.bootstrap_samples = boot.size();
  if (boot.size() >= 2) {
    const double mean = std::accumulate(boot.begin(), boot.end(), 0.0) / static_cast<double>(boot.size());
    double ss = 0.0;
    for (const auto x : boot) ss += (x - mean) * (x - mean);
    estimate.stderr_of_estimate = std::sqrt(ss / static_cast<double>(boot.size() - 1));
  }
  return estimate;
}

}  // namespace percolab
