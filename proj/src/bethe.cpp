#include "percolab/bethe.hpp"

#include <cmath>
#include <string>

#include "percolab/ensemble.hpp"
#include "percolab/error.hpp"
#include "percolab/rng.hpp"

namespace percolab::bethe {

namespace {

void check_z(int z) {
  require(z >= 2, "coordination number z must be >= 2, got " + std::to_string(z));
}

void check_p(double p) {
  require(std::isfinite(p) && p >= 0.0 && p <= 1.0, "occupation probability must lie in [0, 1]");
}

void check_subcritical(int z, double p, const char* what) {
  check_z(z);
  check_p(p);
  if (p >= critical_probability(z)) {
    fail(ErrorKind::divergence, std::string(what) + " diverges for p >= p_c");
  }
}

}  // namespace

void Params::validate() const {
  check_z(z);
  check_p(p);
}

double critical_probability(int z) {
  check_z(z);
  return 1.0 / static_cast<double>(z - 1);
}

double correlation(int z, double p, int l) {
  check_z(z);
  check_p(p);
  require(l >= 1, "chemical distance l must be >= 1");
  return static_cast<double>(z) * std::pow(static_cast<double>(z - 1), l - 1) * std::pow(p, l);
}

double xi_l_squared(int z, double p) {
  check_subcritical(z, p, "correlation length");
  const double pc = critical_probability(z);
  const double gap = pc - p;
  return pc * (p + pc) / (gap * gap);
}

double xi_l(int z, double p) { return std::sqrt(xi_l_squared(z, p)); }

double mean_size(int z, double p) {
  check_subcritical(z, p, "mean cluster size");
  const double pc = critical_probability(z);
  return pc * (1.0 + p) / (pc - p);
}

Cutoff cutoff(int z, double p) {
  check_z(z);
  check_p(p);
  if (z == 2) fail(ErrorKind::undefined, "cutoff amplitude is infinite for z = 2");
  const double pc = critical_probability(z);
  Cutoff out;
  out.a = 1.0 / (2.0 * pc * pc * (1.0 - pc));
  out.sigma = 0.5;
  const double gap = pc - p;
  const double arg = 1.0 - out.a * gap * gap;
  if (!(arg > 0.0)) fail(ErrorKind::undefined, "cutoff log argument is non-positive; p is too far from p_c");
  out.c = arg == 1.0 ? 0.0 : -std::log(arg);
  return out;
}

double ratio_decay_rate(int z, double p) {
  check_z(z);
  check_p(p);
  require(p > 0.0 && p < 1.0, "ratio decay rate needs 0 < p < 1");
  const double pc = critical_probability(z);
  if (z == 2) fail(ErrorKind::undefined, "ratio decay rate needs z >= 3");
  return -(std::log(p / pc) + (z - 2) * std::log((1.0 - p) / (1.0 - pc)));
}

Exponents exponents() {
  Exponents e;
  e.sigma = 0.5;
  e.nu = 0.5;
  e.tau = 3.0 - e.sigma;
  e.fractal_dimension = 1.0 / (e.sigma * e.nu);
  return e;
}

MomentScaling moment_scaling(int z, double p, double k) {
  check_subcritical(z, p, "moment sum");
  require(std::isfinite(k), "moment order must be finite");
  const Exponents e = exponents();
  const double c = cutoff(z, p).c;
  if (!(c > 0.0)) fail(ErrorKind::divergence, "moment sum does not converge without a positive cutoff");

  constexpr double kRelTol = 1e-15;
  constexpr std::size_t kMaxTerms = 2'000'000'000;
  const double power = k - e.tau;
  const double peak = power > 0.0 ? power / c : 1.0;

  MomentScaling out;
  out.predicted_exponent = (k + 1.0 - e.tau) / e.sigma;
  double sum = 0.0;
  double compensation = 0.0;
  for (std::size_t s = 1;; ++s) {
    const auto ds = static_cast<double>(s);
    const double term = std::exp(power * std::log(ds) - c * ds);
    const double y = term - compensation;
    const double t = sum + y;
    compensation = (t - sum) - y;
    sum = t;
    if (ds > peak && term < kRelTol * sum) {
      out.terms = s;
      break;
    }
    if (s >= kMaxTerms) fail(ErrorKind::divergence, "moment sum did not converge");
  }
  out.moment = sum;
  return out;
}

Exact evaluate(const Params& params) {
  params.validate();
  Exact out;
  out.p_c = critical_probability(params.z);
  out.exponents = exponents();
  if (params.p < out.p_c) {
    out.xi_l_squared = xi_l_squared(params.z, params.p);
    out.mean_size = mean_size(params.z, params.p);
  }
  if (params.z > 2) {
    try {
      out.cutoff = cutoff(params.z, params.p);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::undefined) throw;
    }
  }
  return out;
}

ClusterRealization grow_cluster(int z, double p, std::uint64_t seed, Site cap) {
  check_z(z);
  check_p(p);
  require(cap >= 1, "growth cap must be >= 1");

  Rng rng(seed);
  ClusterRealization out;
  out.shells.push_back(1);
  if (cap == 1) {
    out.truncated = true;
    return out;
  }
  Site frontier = 1;
  Site slots_per_site = z;
  while (frontier > 0) {
    Site next = 0;
    for (Site site = 0; site < frontier; ++site) {
      for (Site slot = 0; slot < slots_per_site; ++slot) {
        if (rng.bernoulli(p)) {
          ++next;
          ++out.size;
          if (out.size >= cap) {
            out.shells.push_back(next);
            out.truncated = true;
            return out;
          }
        } else {
          ++out.perimeter;
        }
      }
    }
    if (next > 0) out.shells.push_back(next);
    frontier = next;
    slots_per_site = z - 1;
  }
  return out;
}

GrowthEnsemble grow_ensemble(int z, double p, std::uint64_t master_seed, const GrowthOptions& options) {
  check_z(z);
  check_p(p);
  require(options.realizations >= 1, "need at least one realization");
  require(options.l_max >= 1, "l_max must be >= 1");

  GrowthEnsemble out;
  out.z = z;
  out.p = p;
  out.realizations = options.realizations;
  const auto l_max = static_cast<std::size_t>(options.l_max);
  std::vector<double> shell_sum(l_max + 1, 0.0), shell_sq(l_max + 1, 0.0);
  double size_sum = 0.0, size_sq = 0.0;
  std::size_t finished = 0;
  const double perimeter_slope = static_cast<double>(z - 2);

  parallel_fold(
      options.realizations, options.workers,
      [&](std::size_t i) { return grow_cluster(z, p, realization_seed(master_seed, i), options.cap); },
      [&](std::size_t, ClusterRealization&& r) {
        if (r.truncated) {
          ++out.truncated;
          return;
        }
        ++finished;
        if (static_cast<double>(r.perimeter) != perimeter_slope * static_cast<double>(r.size) + 2.0) {
          ++out.perimeter_violations;
        }
        const auto s = static_cast<double>(r.size);
        size_sum += s;
        size_sq += s * s;
        ++out.sizes[r.size];
        for (std::size_t l = 1; l <= l_max; ++l) {
          const double n = l < r.shells.size() ? static_cast<double>(r.shells[l]) : 0.0;
          shell_sum[l] += n;
          shell_sq[l] += n * n;
        }
      },
      4096);

  out.shell_mean.assign(l_max + 1, 0.0);
  out.shell_stderr.assign(l_max + 1, 0.0);
  if (finished == 0) return out;
  const auto n = static_cast<double>(finished);
  auto stderr_of = [n](double sum, double sq) {
    if (n < 2) return 0.0;
    const double mean = sum / n;
    const double var = std::max(0.0, (sq - n * mean * mean) / (n - 1));
    return std::sqrt(var / n);
  };
  out.mean_size = size_sum / n;
  out.mean_size_stderr = stderr_of(size_sum, size_sq);
  for (std::size_t l = 1; l <= l_max; ++l) {
    out.shell_mean[l] = shell_sum[l] / n;
    out.shell_stderr[l] = stderr_of(shell_sum[l], shell_sq[l]);
  }
  return out;
}

}  // namespace percolab::bethe
