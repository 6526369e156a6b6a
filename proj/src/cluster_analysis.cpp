#include "percolab/cluster_analysis.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <unordered_map>

#include <boost/math/tools/minima.hpp>

#include "percolab/error.hpp"
#include "percolab/rng.hpp"

namespace percolab {

// ---------------------------------------------------------------------------
// Census

double ClusterCensus::cluster_number(Site s) const {
  require(site_count > 0, "census has no lattice size");
  const auto it = histogram.find(s);
  return it == histogram.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(site_count);
}

ClusterCensus census(const ClusterLabeling& labeling, const CensusOptions& options) {
  const auto& geometry = labeling.geometry();
  ClusterCensus out;
  out.site_count = geometry.site_count();
  out.occupied = labeling.occupied_count();
  out.dimension = geometry.dimension();
  const auto roots = labeling.roots();
  for (const auto r : roots) {
    const Site s = labeling.cluster_size(r);
    ++out.histogram[s];
    out.largest = std::max(out.largest, s);
    if (labeling.spanning_axes(r) != 0) out.spanning = true;
  }
  for (const auto r : roots) {
    if (labeling.cluster_size(r) == out.largest && labeling.spanning_axes(r) != 0) out.largest_spans = true;
  }
  if (!options.with_geometry) return out;

  const auto dims = static_cast<std::size_t>(geometry.dimension());
  const auto n = static_cast<std::size_t>(geometry.site_count());
  std::vector<std::int32_t> slot(n, -1);
  std::vector<Site> kept;
  for (const auto r : roots) {
    if (labeling.cluster_size(r) >= options.geometry_min_size) {
      slot[static_cast<std::size_t>(r)] = static_cast<std::int32_t>(kept.size());
      kept.push_back(r);
    }
  }
  std::vector<std::int64_t> first(kept.size() * dims, 0);
  std::vector<std::int64_t> second(kept.size(), 0);
  std::vector<std::int64_t> pos(dims);
  for (std::size_t i = 0; i < n; ++i) {
    const auto site = static_cast<Site>(i);
    if (!labeling.occupied(site)) continue;
    const auto k = slot[static_cast<std::size_t>(labeling.root(site))];
    if (k < 0) continue;
    if (geometry.periodic()) {
      labeling.relative_position(site, pos);
    } else {
      geometry.coords_into(site, pos);
    }
    const auto uk = static_cast<std::size_t>(k);
    for (std::size_t a = 0; a < dims; ++a) {
      first[uk * dims + a] += pos[a];
      second[uk] += pos[a] * pos[a];
    }
  }
  out.clusters.reserve(kept.size());
  for (std::size_t k = 0; k < kept.size(); ++k) {
    const Site r = kept[k];
    const Site s = labeling.cluster_size(r);
    __extension__ typedef __int128 wide;
    wide sq = 0;
    for (std::size_t a = 0; a < dims; ++a) {
      const wide f = first[k * dims + a];
      sq += f * f;
    }
    const wide numerator = static_cast<wide>(s) * second[k] - sq;
    const auto sd = static_cast<long double>(s);
    ClusterGeometry g;
    g.size = s;
    g.spans = labeling.spanning_axes(r) != 0;
    g.wraps = geometry.periodic() && g.spans;
    g.radius2 = g.wraps ? 0.0 : static_cast<double>(static_cast<long double>(numerator) / (sd * sd));
    out.clusters.push_back(g);
  }
  return out;
}

ClusterCensus census_from_sizes(std::span<const Site> sizes, Site site_count) {
  ClusterCensus out;
  for (const auto s : sizes) {
    require(s >= 1, "cluster sizes must be positive");
    ++out.histogram[s];
    out.occupied += s;
    out.largest = std::max(out.largest, s);
  }
  out.site_count = site_count > 0 ? site_count : out.occupied;
  return out;
}

void accumulate(ClusterCensus& total, const ClusterCensus& other) {
  for (const auto& [s, count] : other.histogram) total.histogram[s] += count;
  total.site_count += other.site_count;
  total.occupied += other.occupied;
  total.largest = std::max(total.largest, other.largest);
  total.spanning = total.spanning || other.spanning;
  total.largest_spans = total.largest_spans || other.largest_spans;
  total.dimension = other.dimension;
  total.clusters.insert(total.clusters.end(), other.clusters.begin(), other.clusters.end());
}

double mean_cluster_size(const ClusterCensus& census, bool exclude_largest) {
  if (census.occupied == 0) fail(ErrorKind::undefined, "mean cluster size is undefined without occupied sites");
  long double second = 0.0L;
  long double first = 0.0L;
  for (const auto& [s, count] : census.histogram) {
    const auto sd = static_cast<long double>(s);
    second += sd * sd * static_cast<long double>(count);
    first += sd * static_cast<long double>(count);
  }
  if (exclude_largest) {
    const auto big = static_cast<long double>(census.largest);
    second -= big * big;
    first -= big;
  }
  if (first <= 0.0L) fail(ErrorKind::undefined, "mean cluster size is undefined: no clusters left after exclusion");
  return static_cast<double>(second / first);
}

double percolation_strength(const ClusterCensus& census) {
  if (census.occupied == 0) fail(ErrorKind::undefined, "percolation strength is undefined without occupied sites");
  return static_cast<double>(census.largest) / static_cast<double>(census.occupied);
}

// ---------------------------------------------------------------------------
// Correlations

CorrelationEstimate chemical_correlation(const Configuration& config, const ClusterLabeling& labeling,
                                         std::size_t origins, int l_max, std::uint64_t seed) {
  require(l_max >= 1, "l_max must be at least 1");
  require(origins >= 1, "origin sample size must be at least 1");
  if (config.occupied_count == 0) fail(ErrorKind::undefined, "no occupied sites to start from");
  const auto& geometry = config.geometry;
  const auto n = static_cast<std::size_t>(geometry.site_count());

  std::vector<Site> occupied;
  occupied.reserve(static_cast<std::size_t>(config.occupied_count));
  for (std::size_t i = 0; i < n; ++i) {
    if (config.occupied.test(i)) occupied.push_back(static_cast<Site>(i));
  }

  const auto levels = static_cast<std::size_t>(l_max);
  std::vector<double> sum(levels + 1, 0.0);
  std::vector<double> sum_sq(levels + 1, 0.0);
  std::vector<std::uint32_t> stamp(n, 0);
  std::vector<Site> frontier;
  std::vector<Site> next;
  std::vector<double> counts(levels + 1);
  Rng rng(seed);

  for (std::size_t o = 0; o < origins; ++o) {
    const Site origin = occupied[static_cast<std::size_t>(rng.below(occupied.size()))];
    std::fill(counts.begin(), counts.end(), 0.0);
    if (labeling.cluster_size(labeling.root(origin)) > 1) {
      const auto mark = static_cast<std::uint32_t>(o + 1);
      stamp[static_cast<std::size_t>(origin)] = mark;
      frontier.assign(1, origin);
      for (std::size_t l = 1; l <= levels && !frontier.empty(); ++l) {
        next.clear();
        for (const auto site : frontier) {
          geometry.for_each_neighbor(site, [&](Site j, int, int) {
            const auto uj = static_cast<std::size_t>(j);
            if (stamp[uj] != mark && config.occupied.test(uj)) {
              stamp[uj] = mark;
              next.push_back(j);
            }
          });
        }
        counts[l] = static_cast<double>(next.size());
        frontier.swap(next);
      }
    }
    for (std::size_t l = 1; l <= levels; ++l) {
      sum[l] += counts[l];
      sum_sq[l] += counts[l] * counts[l];
    }
  }

  CorrelationEstimate estimate;
  estimate.kind = CorrelationEstimate::Kind::chemical;
  estimate.samples = origins;
  const auto m = static_cast<double>(origins);
  for (std::size_t l = 1; l <= levels; ++l) {
    const double mean = sum[l] / m;
    const double var = origins > 1 ? std::max(0.0, (sum_sq[l] - m * mean * mean) / (m - 1.0)) : 0.0;
    estimate.values[static_cast<std::int64_t>(l)] = mean;
    estimate.stderrs[static_cast<std::int64_t>(l)] = std::sqrt(var / m);
  }
  return estimate;
}

double correlation_length_chemical_squared(const CorrelationEstimate& estimate) {
  double weighted = 0.0;
  double total = 0.0;
  for (const auto& [l, g] : estimate.values) {
    const auto ld = static_cast<double>(l);
    weighted += ld * ld * g;
    total += g;
  }
  if (!(total > 0.0)) fail(ErrorKind::undefined, "correlation function is identically zero");
  return weighted / total;
}

double correlation_length_chemical(const CorrelationEstimate& estimate) {
  return std::sqrt(correlation_length_chemical_squared(estimate));
}

// ---------------------------------------------------------------------------
// Radius of gyration

namespace {

std::size_t check_points(std::span<const Point> points) {
  require(!points.empty(), "radius of gyration needs at least one site");
  const auto dims = points.front().size();
  for (const auto& p : points) require(p.size() == dims, "points have inconsistent dimension");
  return dims;
}

}  // namespace

double gyration_radius_squared(std::span<const Point> points) {
  const auto dims = check_points(points);
  const auto s = static_cast<long double>(points.size());
  std::vector<long double> center(dims, 0.0L);
  for (const auto& p : points) {
    for (std::size_t a = 0; a < dims; ++a) center[a] += p[a];
  }
  for (auto& c : center) c /= s;
  long double total = 0.0L;
  for (const auto& p : points) {
    for (std::size_t a = 0; a < dims; ++a) {
      const long double delta = p[a] - center[a];
      total += delta * delta;
    }
  }
  return static_cast<double>(total / s);
}

double gyration_radius_squared_pairwise(std::span<const Point> points) {
  const auto dims = check_points(points);
  const auto s = static_cast<long double>(points.size());
  long double total = 0.0L;
  for (const auto& pi : points) {
    for (const auto& pj : points) {
      for (std::size_t a = 0; a < dims; ++a) {
        const long double delta = pi[a] - pj[a];
        total += delta * delta;
      }
    }
  }
  return static_cast<double>(total / (2.0L * s * s));
}

double GyrationResult::radius() const { return std::sqrt(radius2); }

GyrationResult radius_of_gyration(std::span<const Site> cluster_sites, const LatticeGeometry& geometry) {
  require(!cluster_sites.empty(), "radius of gyration needs at least one site");
  const auto dims = static_cast<std::size_t>(geometry.dimension());
  std::unordered_map<Site, std::size_t> index;
  for (std::size_t k = 0; k < cluster_sites.size(); ++k) {
    require(cluster_sites[k] >= 0 && cluster_sites[k] < geometry.site_count(), "cluster site out of range");
    index.emplace(cluster_sites[k], k);
  }
  require(index.size() == cluster_sites.size(), "cluster site list has duplicates");

  std::vector<Point> position(cluster_sites.size());
  std::vector<bool> placed(cluster_sites.size(), false);
  const auto origin = geometry.coords(cluster_sites.front());
  position[0].assign(origin.begin(), origin.end());
  placed[0] = true;
  std::vector<std::size_t> stack{0};
  GyrationResult result;
  std::size_t reached = 1;
  while (!stack.empty()) {
    const auto k = stack.back();
    stack.pop_back();
    geometry.for_each_neighbor(cluster_sites[k], [&](Site j, int axis, int direction) {
      const auto it = index.find(j);
      if (it == index.end()) return;
      Point candidate = position[k];
      candidate[static_cast<std::size_t>(axis)] += direction;
      if (!placed[it->second]) {
        placed[it->second] = true;
        position[it->second] = std::move(candidate);
        stack.push_back(it->second);
        ++reached;
      } else if (position[it->second] != candidate) {
        result.wraps = true;
      }
    });
  }
  require(reached == cluster_sites.size(), "cluster sites are not connected");
  (void)dims;
  if (result.wraps) return result;
  result.radius2 = gyration_radius_squared(position);
  return result;
}

double euclidean_correlation_length_squared(const ClusterCensus& census) {
  if (census.clusters.empty()) fail(ErrorKind::undefined, "census carries no per-cluster radii");
  long double numerator = 0.0L;
  long double denominator = 0.0L;
  for (const auto& c : census.clusters) {
    if (c.wraps || c.spans) continue;
    const auto s2 = static_cast<long double>(c.size) * static_cast<long double>(c.size);
    numerator += c.radius2 * s2;
    denominator += s2;
  }
  if (!(denominator > 0.0L)) fail(ErrorKind::undefined, "no finite clusters with radii in census");
  return static_cast<double>(2.0L * numerator / denominator);
}

// ---------------------------------------------------------------------------
// Power-law MLE

double hurwitz_zeta(double s, double q) {
  require(s > 1.0, "hurwitz_zeta needs s > 1");
  require(q > 0.0, "hurwitz_zeta needs q > 0");
  // Euler-Maclaurin with the direct sum carried to q + M >= 20.
  const int m = std::max(0, static_cast<int>(std::ceil(20.0 - q)));
  long double sum = 0.0L;
  for (int k = 0; k < m; ++k) sum += std::pow(static_cast<long double>(q + k), -static_cast<long double>(s));
  const long double x = q + m;
  sum += std::pow(x, 1.0L - s) / (s - 1.0L) + 0.5L * std::pow(x, -static_cast<long double>(s));
  static constexpr std::array<long double, 6> kBernoulli{1.0L / 6, -1.0L / 30, 1.0L / 42,
                                                          -1.0L / 30, 5.0L / 66, -691.0L / 2730};
  long double rising = s;  // s (s+1) ... (s + 2j - 2)
  long double factorial = 2.0L;
  long double power = std::pow(x, -static_cast<long double>(s) - 1.0L);
  for (std::size_t j = 1; j <= kBernoulli.size(); ++j) {
    sum += kBernoulli[j - 1] / factorial * rising * power;
    const auto jj = static_cast<long double>(j);
    rising *= (s + 2.0L * jj - 1.0L) * (s + 2.0L * jj);
    factorial *= (2.0L * jj + 1.0L) * (2.0L * jj + 2.0L);
    power /= x * x;
  }
  return static_cast<double>(sum);
}

PowerLawFit fit_power_law(const SizeHistogram& histogram, Site s_min) {
  require(s_min >= 1, "s_min must be at least 1");
  std::size_t n = 0;
  long double log_sum = 0.0L;
  std::size_t distinct = 0;
  for (const auto& [s, count] : histogram) {
    if (s < s_min || count <= 0) continue;
    n += static_cast<std::size_t>(count);
    log_sum += static_cast<long double>(count) * std::log(static_cast<long double>(s));
    ++distinct;
  }
  if (n < 100) {
    fail(ErrorKind::degenerate_fit,
         "power-law fit needs at least 100 samples >= s_min, got " + std::to_string(n));
  }
  if (distinct < 2) fail(ErrorKind::degenerate_fit, "power-law fit is degenerate: all samples equal");
  const double mean_log = static_cast<double>(log_sum / static_cast<long double>(n));
  const auto q = static_cast<double>(s_min);
  auto objective = [&](double tau) { return std::log(hurwitz_zeta(tau, q)) + tau * mean_log; };
  const auto [tau, value] = boost::math::tools::brent_find_minima(objective, 1.0 + 1e-9, 30.0, 52);
  (void)value;
  PowerLawFit fit;
  fit.tau_hat = tau;
  fit.s_min = s_min;
  fit.samples = n;
  fit.stderr_of_tau = (tau - 1.0) / std::sqrt(static_cast<double>(n));
  return fit;
}

PowerLawFit fit_power_law(std::span<const Site> samples, Site s_min) {
  SizeHistogram histogram;
  for (const auto s : samples) {
    require(s >= 1, "power-law samples must be positive");
    ++histogram[s];
  }
  return fit_power_law(histogram, s_min);
}

// ---------------------------------------------------------------------------
// Fractal dimension

FractalFit fit_fractal_dimension(std::span<const SizeRadius> pairs, double s_lo, double s_hi) {
  require(s_lo > 0.0 && s_hi >= s_lo, "fit range must satisfy 0 < s_lo <= s_hi");
  long double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  std::size_t n = 0;
  for (const auto& pr : pairs) {
    if (pr.size < s_lo || pr.size > s_hi || !(pr.radius > 0.0)) continue;
    const long double x = std::log(static_cast<long double>(pr.size));
    const long double y = std::log(static_cast<long double>(pr.radius));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
    ++n;
  }
  if (n < 10) {
    fail(ErrorKind::degenerate_fit, "fractal fit needs at least 10 pairs in range, got " + std::to_string(n));
  }
  const auto nd = static_cast<long double>(n);
  const long double cxx = sxx - sx * sx / nd;
  const long double cxy = sxy - sx * sy / nd;
  const long double cyy = syy - sy * sy / nd;
  if (!(cxx > 0.0L)) fail(ErrorKind::degenerate_fit, "fractal fit needs more than one distinct size");
  const long double slope = cxy / cxx;
  if (!(slope > 0.0L)) fail(ErrorKind::degenerate_fit, "radius does not grow with size");
  const long double sse = std::max(0.0L, cyy - slope * cxy);
  const long double slope_se = n > 2 ? std::sqrt(sse / (nd - 2.0L) / cxx) : 0.0L;
  FractalFit fit;
  fit.d_hat = static_cast<double>(1.0L / slope);
  fit.stderr_of_d = static_cast<double>(slope_se / (slope * slope));
  fit.s_lo = s_lo;
  fit.s_hi = s_hi;
  fit.pairs = n;
  return fit;
}

std::vector<SizeRadius> size_radius_pairs(const ClusterCensus& census, PairMode mode) {
  std::vector<SizeRadius> out;
  if (mode == PairMode::per_cluster) {
    for (const auto& c : census.clusters) {
      if (c.wraps || c.spans) continue;
      out.push_back({static_cast<double>(c.size), std::sqrt(c.radius2)});
    }
    return out;
  }
  std::map<Site, std::pair<long double, std::size_t>> by_size;
  for (const auto& c : census.clusters) {
    if (c.wraps || c.spans) continue;
    auto& slot = by_size[c.size];
    slot.first += c.radius2;
    ++slot.second;
  }
  for (const auto& [s, acc] : by_size) {
    const auto mean = acc.first / static_cast<long double>(acc.second);
    out.push_back({static_cast<double>(s), static_cast<double>(std::sqrt(mean))});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Exponential cutoff

CutoffFit fit_exponential_cutoff(const SizeHistogram& at_p, const SizeHistogram& at_pc, Site s_lo, Site s_hi) {
  require(s_lo >= 1 && s_hi >= s_lo, "cutoff fit range must satisfy 1 <= s_lo <= s_hi");
  struct Row {
    double s, a, k;
  };
  std::vector<Row> rows;
  double total_a = 0.0, total_b = 0.0, weighted_s = 0.0;
  auto count_at = [](const SizeHistogram& h, Site s) {
    const auto it = h.find(s);
    return it == h.end() ? 0.0 : static_cast<double>(it->second);
  };
  std::vector<Site> sizes;
  for (const auto& [s, c] : at_p) {
    if (s >= s_lo && s <= s_hi && c > 0) sizes.push_back(s);
  }
  for (const auto& [s, c] : at_pc) {
    if (s >= s_lo && s <= s_hi && c > 0) sizes.push_back(s);
  }
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
  for (const auto s : sizes) {
    const double a = count_at(at_p, s);
    const double b = count_at(at_pc, s);
    rows.push_back({static_cast<double>(s), a, a + b});
    total_a += a;
    total_b += b;
    weighted_s += (a + b) * static_cast<double>(s);
  }
  if (total_a <= 0.0 || total_b <= 0.0) {
    fail(ErrorKind::degenerate_fit, "cutoff fit needs clusters from both censuses in the size range");
  }
  if (rows.size() < 2) fail(ErrorKind::degenerate_fit, "cutoff fit needs at least two distinct sizes in range");
  const double center = weighted_s / (total_a + total_b);

  double alpha = std::log(total_a / total_b);
  double beta = 0.0;
  double h00 = 0, h01 = 0, h11 = 0;
  bool converged = false;
  for (int iter = 0; iter < 200; ++iter) {
    double g0 = 0, g1 = 0;
    h00 = h01 = h11 = 0;
    for (const auto& r : rows) {
      const double x = r.s - center;
      const double eta = alpha + beta * x;
      const double prob = 1.0 / (1.0 + std::exp(-eta));
      const double resid = r.a - r.k * prob;
      const double w = r.k * prob * (1.0 - prob);
      g0 += resid;
      g1 += resid * x;
      h00 += w;
      h01 += w * x;
      h11 += w * x * x;
    }
    const double det = h00 * h11 - h01 * h01;
    if (!(det > 0.0) || !std::isfinite(det)) break;
    const double d_alpha = (h11 * g0 - h01 * g1) / det;
    const double d_beta = (h00 * g1 - h01 * g0) / det;
    alpha += d_alpha;
    beta += d_beta;
    if (!std::isfinite(alpha) || !std::isfinite(beta)) break;
    if (std::abs(d_beta) <= 1e-14 * (1.0 + std::abs(beta)) && std::abs(d_alpha) <= 1e-12 * (1.0 + std::abs(alpha))) {
      converged = true;
      break;
    }
  }
  const double det = h00 * h11 - h01 * h01;
  if (!converged || !(det > 0.0)) fail(ErrorKind::degenerate_fit, "cutoff fit did not converge");
  CutoffFit fit;
  fit.c_hat = beta == 0.0 ? 0.0 : -beta;
  fit.stderr_of_c = std::sqrt(h00 / det);
  fit.s_lo = s_lo;
  fit.s_hi = s_hi;
  return fit;
}

// ---------------------------------------------------------------------------
// Exact enumeration

ExactEnumeration exact_enumeration_oracle(const LatticeGeometry& geometry, double p) {
  const Site n = geometry.site_count();
  require(n <= kMaxEnumerationSites, "exact enumeration is limited to N <= 20 sites");
  require(std::isfinite(p) && p >= 0.0 && p <= 1.0, "occupation probability must lie in [0, 1]");
  const auto un = static_cast<std::size_t>(n);
  const auto dims = static_cast<std::size_t>(geometry.dimension());

  struct Link {
    std::size_t to;
    std::size_t axis;
    int direction;
  };
  std::vector<std::vector<Link>> links(un);
  std::vector<std::vector<std::int64_t>> coords(un);
  for (std::size_t i = 0; i < un; ++i) {
    coords[i] = geometry.coords(static_cast<Site>(i));
    geometry.for_each_neighbor(static_cast<Site>(i), [&](Site j, int axis, int direction) {
      links[i].push_back({static_cast<std::size_t>(j), static_cast<std::size_t>(axis), direction});
    });
  }

  std::vector<long double> pw(un + 1), qw(un + 1);
  pw[0] = qw[0] = 1.0L;
  for (std::size_t k = 1; k <= un; ++k) {
    pw[k] = pw[k - 1] * p;
    qw[k] = qw[k - 1] * (1.0L - p);
  }

  std::vector<long double> e_count(un + 1, 0.0L), e_count_sq(un + 1, 0.0L);
  long double e_span = 0, e_a = 0, e_b = 0, e_aa = 0, e_bb = 0, e_ab = 0;
  std::vector<std::int64_t> per_size(un + 1);
  std::vector<std::vector<std::int64_t>> unwrapped(un, std::vector<std::int64_t>(dims));
  std::vector<std::size_t> stack;

  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << un); ++mask) {
    const auto k = static_cast<std::size_t>(std::popcount(mask));
    const long double w = pw[k] * qw[un - k];
    if (w == 0.0L) continue;
    std::fill(per_size.begin(), per_size.end(), 0);
    std::uint64_t seen = 0;
    bool spans = false;
    std::int64_t a_sum = 0;
    for (std::size_t start = 0; start < un; ++start) {
      if (!((mask >> start) & 1U) || ((seen >> start) & 1U)) continue;
      seen |= std::uint64_t{1} << start;
      unwrapped[start] = coords[start];
      stack.assign(1, start);
      std::int64_t size = 0;
      std::vector<std::int64_t> lo = coords[start], hi = coords[start];
      bool wraps = false;
      while (!stack.empty()) {
        const auto i = stack.back();
        stack.pop_back();
        ++size;
        for (std::size_t a = 0; a < dims; ++a) {
          lo[a] = std::min(lo[a], coords[i][a]);
          hi[a] = std::max(hi[a], coords[i][a]);
        }
        for (const auto& link : links[i]) {
          if (!((mask >> link.to) & 1U)) continue;
          auto candidate = unwrapped[i];
          candidate[link.axis] += link.direction;
          if (!((seen >> link.to) & 1U)) {
            seen |= std::uint64_t{1} << link.to;
            unwrapped[link.to] = candidate;
            stack.push_back(link.to);
          } else if (unwrapped[link.to] != candidate) {
            wraps = true;
          }
        }
      }
      if (geometry.periodic()) {
        spans = spans || wraps;
      } else {
        for (std::size_t a = 0; a < dims; ++a) {
          const auto len = geometry.side(static_cast<int>(a));
          if (len >= 2 && lo[a] == 0 && hi[a] == len - 1) spans = true;
        }
      }
      ++per_size[static_cast<std::size_t>(size)];
      a_sum += size * size;
    }
    for (std::size_t s = 1; s <= un; ++s) {
      const auto c = static_cast<long double>(per_size[s]);
      e_count[s] += w * c;
      e_count_sq[s] += w * c * c;
    }
    const auto a = static_cast<long double>(a_sum);
    const auto b = static_cast<long double>(k);
    e_a += w * a;
    e_b += w * b;
    e_aa += w * a * a;
    e_bb += w * b * b;
    e_ab += w * a * b;
    if (spans) e_span += w;
  }

  ExactEnumeration out;
  out.site_count = n;
  out.p = p;
  out.expected_counts.assign(un + 1, 0.0);
  out.count_variance.assign(un + 1, 0.0);
  out.cluster_numbers.assign(un + 1, 0.0);
  for (std::size_t s = 1; s <= un; ++s) {
    out.expected_counts[s] = static_cast<double>(e_count[s]);
    out.count_variance[s] = static_cast<double>(std::max(0.0L, e_count_sq[s] - e_count[s] * e_count[s]));
    out.cluster_numbers[s] = static_cast<double>(e_count[s] / static_cast<long double>(n));
  }
  out.mean_a = static_cast<double>(e_a);
  out.mean_b = static_cast<double>(e_b);
  out.var_a = static_cast<double>(e_aa - e_a * e_a);
  out.var_b = static_cast<double>(e_bb - e_b * e_b);
  out.cov_ab = static_cast<double>(e_ab - e_a * e_b);
  out.mean_cluster_size = e_b > 0.0L ? static_cast<double>(e_a / e_b) : std::numeric_limits<double>::quiet_NaN();
  out.spanning_probability = static_cast<double>(e_span);
  return out;
}

}  // namespace percolab
