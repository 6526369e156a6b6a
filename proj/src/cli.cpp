#include "percolab/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "percolab/bethe.hpp"
#include "percolab/cluster_analysis.hpp"
#include "percolab/datagen.hpp"
#include "percolab/ensemble.hpp"
#include "percolab/error.hpp"
#include "percolab/io.hpp"
#include "percolab/render.hpp"
#include "percolab/rng.hpp"

namespace percolab::cli {

namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr std::uint64_t kThresholdTag = 0x7468726573686fULL;

struct Artifact {
  std::string name;
  std::string content;
};

struct RunResult {
  std::vector<Artifact> artifacts;
  Json summary = Json::object();
  std::string report;  // echoed to stdout when non-empty
};

struct Common {
  std::uint64_t seed = 1;
  int workers = 1;
  std::string out;
  std::string config;

  void add(CLI::App* app) {
    app->add_option("--seed", seed, "master seed; all randomness derives from it");
    app->add_option("--workers", workers, "ensemble worker threads (0 = hardware)");
    app->add_option("--out", out, "output directory (else $PERCOLAB_OUT, else .)");
    app->add_option("--config", config, "flat key = value file; flags override it");
  }

  void validate() const { require(workers >= 0, "--workers must be >= 0"); }
};

struct GeometryArgs {
  std::string sides;
  int dim = 0;
  std::int64_t side = 0;
  std::string boundary;

  void add(CLI::App* app, const char* default_boundary) {
    boundary = default_boundary;
    app->add_option("--sides", sides, "comma-separated side lengths, e.g. 8,8,8");
    app->add_option("--dim", dim, "dimension of a hypercube (with --side)");
    app->add_option("-L,--side", side, "side length of a hypercube (with --dim)");
    app->add_option("--boundary", boundary, "free or periodic");
  }

  LatticeGeometry build() const {
    const Boundary b = parse_boundary(boundary);
    if (!sides.empty()) {
      require(dim == 0 && side == 0, "give either --sides or --dim/--side, not both");
      return LatticeGeometry(parse_sides(sides), b);
    }
    require(dim > 0 && side > 0, "lattice geometry needs --sides or both --dim and --side");
    return LatticeGeometry::cube(dim, side, b);
  }
};

void check_probability(double p, const char* name) {
  require(std::isfinite(p) && p >= 0.0 && p <= 1.0, std::string(name) + " must lie in [0, 1]");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string& text, const char* what) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  require(used == text.size() && used > 0, std::string("cannot parse ") + what + " '" + text + "'");
  return value;
}

std::string fmt(double x) { return io::format_double(x); }

Json threshold_json(const ThresholdEstimate& est) {
  Json j;
  j["p_c_hat"] = est.p_c_hat;
  j["stderr"] = est.stderr_of_estimate;
  j["realizations"] = est.realizations;
  j["bootstrap_samples"] = est.bootstrap_samples;
  return j;
}

Json error_json(const Error& e) {
  Json j;
  j["error"] = std::string(to_string(e.kind())) + ": " + e.what();
  return j;
}

Json power_law_json(const PowerLawFit& f) {
  Json j;
  j["tau_hat"] = f.tau_hat;
  j["stderr"] = f.stderr_of_tau;
  j["s_min"] = f.s_min;
  j["samples"] = f.samples;
  return j;
}

Json fractal_json(const FractalFit& f) {
  Json j;
  j["d_hat"] = f.d_hat;
  j["stderr"] = f.stderr_of_d;
  j["s_lo"] = f.s_lo;
  j["s_hi"] = f.s_hi;
  j["pairs"] = f.pairs;
  return j;
}

Json cutoff_json(const CutoffFit& f) {
  Json j;
  j["c_hat"] = f.c_hat;
  j["stderr"] = f.stderr_of_c;
  j["s_lo"] = f.s_lo;
  j["s_hi"] = f.s_hi;
  return j;
}

template <typename Fit, typename ToJson>
Json try_fit(Fit&& fit, ToJson&& to_json) {
  try {
    return to_json(fit());
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::degenerate_fit && e.kind() != ErrorKind::undefined) throw;
    return error_json(e);
  }
}

std::string histogram_csv(const SizeHistogram& histogram) {
  std::string out = "s,count\n";
  for (const auto& [s, count] : histogram) out += std::to_string(s) + ',' + std::to_string(count) + '\n';
  return out;
}

std::vector<std::vector<std::string>> read_csv(const std::string& path, std::size_t columns) {
  std::istringstream in(io::read_file(path));
  std::string line;
  std::vector<std::vector<std::string>> rows;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<std::string> row;
    std::string cell;
    std::istringstream cells(line);
    while (std::getline(cells, cell, ',')) row.push_back(cell);
    if (row.size() < columns) fail(ErrorKind::io, path + ": malformed row '" + line + "'");
    rows.push_back(std::move(row));
  }
  return rows;
}

SizeHistogram read_histogram(const std::string& path) {
  SizeHistogram h;
  for (const auto& row : read_csv(path, 2)) {
    const auto s = static_cast<Site>(parse_double(row[0], "cluster size"));
    const auto count = static_cast<Site>(parse_double(row[1], "cluster count"));
    require(s >= 1 && count >= 0, path + ": sizes must be positive and counts non-negative");
    if (count > 0) h[s] += count;
  }
  return h;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepArgs {
  GeometryArgs geometry;
  std::size_t realizations = 100;
  std::string observables = "largest_cluster,spanning,mean_finite_size,cluster_count";
  std::string p_grid;
  bool threshold = false;
  std::size_t bootstrap = 200;

  void add(CLI::App* app) {
    geometry.add(app, "periodic");
    app->add_option("--realizations", realizations, "number of sweeps");
    app->add_option("--observables", observables, "comma-separated observables");
    app->add_option("--p-grid", p_grid, "comma-separated p values for canonical.csv");
    app->add_flag("--threshold", threshold, "also estimate the threshold (threshold.json)");
    app->add_option("--bootstrap", bootstrap, "bootstrap resamples for the threshold error");
  }
};

RunResult run_sweep(const SweepArgs& a, const Common& c) {
  const LatticeGeometry geom = a.geometry.build();
  require(a.realizations >= 1, "--realizations must be >= 1");
  std::vector<Observable> observables;
  for (const auto& name : split_list(a.observables)) observables.push_back(parse_observable(name));
  require(!observables.empty(), "--observables is empty");
  std::vector<double> grid;
  for (const auto& item : split_list(a.p_grid)) {
    grid.push_back(parse_double(item, "p"));
    check_probability(grid.back(), "--p-grid values");
  }
  if (a.threshold) require(a.bootstrap >= 1, "--bootstrap must be >= 1");

  const auto curves = newman_ziff_sweep(geom, c.seed, observables, {a.realizations, c.workers});
  RunResult r;
  std::string csv = "n,observable,mean,stderr\n";
  for (const auto& curve : curves) {
    const std::string name(to_string(curve.observable));
    for (std::size_t n = 0; n < curve.mean.size(); ++n) {
      csv += std::to_string(n) + ',' + name + ',' + fmt(curve.mean[n]) + ',' + fmt(curve.stderr_of_mean[n]) + '\n';
    }
  }
  r.artifacts.push_back({"curves.csv", std::move(csv)});
  if (!grid.empty()) {
    std::string canon = "p,observable,value\n";
    for (const double p : grid) {
      for (const auto& curve : curves) {
        canon += fmt(p) + ',' + std::string(to_string(curve.observable)) + ',' + fmt(canonical_convolve(curve, p)) + '\n';
      }
    }
    r.artifacts.push_back({"canonical.csv", std::move(canon)});
  }
  r.summary["site_count"] = geom.site_count();
  if (a.threshold) {
    const auto est = estimate_threshold(geom, c.seed, {a.realizations, a.bootstrap, c.workers});
    const Json j = threshold_json(est);
    r.artifacts.push_back({"threshold.json", j.dump(2) + '\n'});
    r.summary["threshold"] = j;
  }
  return r;
}

// ---------------------------------------------------------------------------
// sample

struct SampleArgs {
  GeometryArgs geometry;
  double p = -1.0;
  bool p_auto = false;
  std::size_t threshold_realizations = 50;
  std::size_t realizations = 50;
  Site s_min = 10;
  double fractal_lo = 100.0;
  double fractal_hi = 10000.0;
  Site geometry_min_size = 10;
  bool skip_geometry = false;

  void add(CLI::App* app) {
    geometry.add(app, "periodic");
    app->add_option("--p", p, "occupation probability");
    app->add_flag("--p-auto", p_auto, "use the self-estimated threshold as p");
    app->add_option("--threshold-realizations", threshold_realizations, "realizations for --p-auto");
    app->add_option("--realizations", realizations, "independent configurations");
    app->add_option("--s-min", s_min, "lower size cutoff of the tau fit");
    app->add_option("--fractal-lo", fractal_lo, "lower size of the fractal fit");
    app->add_option("--fractal-hi", fractal_hi, "upper size of the fractal fit");
    app->add_option("--geometry-min-size", geometry_min_size, "smallest cluster whose radius is measured");
    app->add_flag("--skip-geometry", skip_geometry, "do not measure radii of gyration");
  }
};

RunResult run_sample(const SampleArgs& a, const Common& c) {
  const LatticeGeometry geom = a.geometry.build();
  require(a.realizations >= 1, "--realizations must be >= 1");
  require(a.s_min >= 1, "--s-min must be >= 1");
  require(a.fractal_lo > 0 && a.fractal_hi > a.fractal_lo, "fractal range must satisfy 0 < lo < hi");
  require(a.geometry_min_size >= 1, "--geometry-min-size must be >= 1");
  if (a.p_auto) {
    require(a.p < 0, "give either --p or --p-auto, not both");
    require(a.threshold_realizations >= 1, "--threshold-realizations must be >= 1");
  } else {
    check_probability(a.p, "--p");
  }

  RunResult r;
  double p = a.p;
  Json threshold = nullptr;
  if (a.p_auto) {
    const auto est =
        estimate_threshold(geom, hash_combine(c.seed, kThresholdTag), {a.threshold_realizations, 200, c.workers});
    p = est.p_c_hat;
    threshold = threshold_json(est);
  }

  const CensusOptions options{!a.skip_geometry, a.geometry_min_size};
  ClusterCensus total;
  SizeHistogram finite;
  double largest_sum = 0.0, occupied_sum = 0.0;
  std::size_t spanning = 0;
  parallel_fold(
      a.realizations, c.workers,
      [&](std::size_t i) {
        const Configuration config = sample_configuration(geom, p, realization_seed(c.seed, i));
        return census(ClusterLabeling(config), options);
      },
      [&](std::size_t, ClusterCensus&& one) {
        largest_sum += static_cast<double>(one.largest);
        occupied_sum += static_cast<double>(one.occupied);
        for (const auto& [s, count] : one.histogram) finite[s] += count;
        if (one.largest_spans) {
          ++spanning;
          if (--finite[one.largest] == 0) finite.erase(one.largest);
        }
        accumulate(total, one);
      });

  const auto n_sites = static_cast<double>(geom.site_count()) * static_cast<double>(a.realizations);
  Json fits;
  fits["p"] = p;
  fits["p_source"] = a.p_auto ? "estimated" : "given";
  fits["threshold"] = threshold;
  fits["realizations"] = a.realizations;
  fits["occupied_fraction"] = occupied_sum / n_sites;
  fits["largest_fraction"] = largest_sum / n_sites;
  fits["spanning_fraction"] = static_cast<double>(spanning) / static_cast<double>(a.realizations);
  fits["power_law"] = try_fit([&] { return fit_power_law(finite, a.s_min); }, power_law_json);
  r.artifacts.push_back({"census.csv", histogram_csv(finite)});
  if (!a.skip_geometry) {
    const auto pairs = size_radius_pairs(total, PairMode::per_size);
    std::string radii = "s,radius\n";
    for (const auto& pr : pairs) radii += fmt(pr.size) + ',' + fmt(pr.radius) + '\n';
    r.artifacts.push_back({"radii.csv", std::move(radii)});
    fits["fractal"] =
        try_fit([&] { return fit_fractal_dimension(pairs, a.fractal_lo, a.fractal_hi); }, fractal_json);
  } else {
    fits["fractal"] = nullptr;
  }
  r.artifacts.push_back({"fits.json", fits.dump(2) + '\n'});
  r.summary = fits;
  return r;
}

// ---------------------------------------------------------------------------
// bethe

struct BetheArgs {
  int z = 3;
  double p = -1.0;
  std::size_t realizations = 0;
  Site cap = bethe::kDefaultGrowthCap;
  int l_max = 8;

  void add(CLI::App* app) {
    app->add_option("--z", z, "coordination number");
    app->add_option("--p", p, "occupation probability")->required();
    app->add_option("--realizations", realizations, "growth realizations for the comparison table (0 = none)");
    app->add_option("--cap", cap, "growth cap in sites");
    app->add_option("--l-max", l_max, "largest chemical distance tabulated");
  }
};

RunResult run_bethe(const BetheArgs& a, const Common& c) {
  const bethe::Params params{a.z, a.p};
  params.validate();
  require(a.cap >= 1, "--cap must be >= 1");
  require(a.l_max >= 1, "--l-max must be >= 1");

  const bethe::Exact exact = bethe::evaluate(params);
  Json j;
  j["z"] = a.z;
  j["p"] = a.p;
  j["p_c"] = exact.p_c;
  Json g = Json::array();
  for (int l = 1; l <= a.l_max; ++l) g.push_back({{"l", l}, {"g", bethe::correlation(a.z, a.p, l)}});
  j["g"] = g;
  j["xi_l_squared"] = exact.xi_l_squared ? Json(*exact.xi_l_squared) : Json(nullptr);
  j["S"] = exact.mean_size ? Json(*exact.mean_size) : Json(nullptr);
  if (exact.cutoff) {
    j["cutoff"] = {{"a", exact.cutoff->a}, {"sigma", exact.cutoff->sigma}, {"c", exact.cutoff->c}};
  } else {
    j["cutoff"] = nullptr;
  }
  j["exponents"] = {{"tau", exact.exponents.tau},
                    {"sigma", exact.exponents.sigma},
                    {"nu", exact.exponents.nu},
                    {"D", exact.exponents.fractal_dimension}};

  RunResult r;
  if (a.realizations > 0) {
    const auto mc = bethe::grow_ensemble(a.z, a.p, c.seed, {a.realizations, a.cap, a.l_max, c.workers});
    j["monte_carlo"] = {{"realizations", mc.realizations},
                        {"truncated", mc.truncated},
                        {"perimeter_violations", mc.perimeter_violations},
                        {"mean_size", mc.mean_size},
                        {"mean_size_stderr", mc.mean_size_stderr}};
    std::string csv = "quantity,l,exact,mc_mean,mc_stderr\n";
    for (int l = 1; l <= a.l_max; ++l) {
      const auto ul = static_cast<std::size_t>(l);
      csv += "g," + std::to_string(l) + ',' + fmt(bethe::correlation(a.z, a.p, l)) + ',' + fmt(mc.shell_mean[ul]) +
             ',' + fmt(mc.shell_stderr[ul]) + '\n';
    }
    csv += "S,," + (exact.mean_size ? fmt(*exact.mean_size) : std::string("inf")) + ',' + fmt(mc.mean_size) + ',' +
           fmt(mc.mean_size_stderr) + '\n';
    r.artifacts.push_back({"mc.csv", std::move(csv)});
    r.artifacts.push_back({"sizes.csv", histogram_csv(mc.sizes)});
  }
  r.report = j.dump(2) + '\n';
  r.artifacts.insert(r.artifacts.begin(), {"bethe.json", r.report});
  r.summary = {{"p_c", exact.p_c}};
  return r;
}

// ---------------------------------------------------------------------------
// datagen

struct DatagenArgs {
  GeometryArgs geometry;
  double p = -1.0;
  std::int64_t labels = 2;
  Site s_min = 1;
  std::string format = "csv";
  double pc_hat = 0.0;
  double band = kDefaultRegimeBand;
  std::size_t threshold_realizations = 50;

  void add(CLI::App* app) {
    geometry.add(app, "free");
    app->add_option("--p", p, "occupation probability")->required();
    app->add_option("--labels", labels, "label space size |Y|");
    app->add_option("--s-min", s_min, "smallest cluster counted as a context feature");
    app->add_option("--format", format, "csv or jsonl");
    app->add_option("--pc-hat", pc_hat, "threshold used for the regime (0 = estimate it)");
    app->add_option("--band", band, "regime band multiplier");
    app->add_option("--threshold-realizations", threshold_realizations, "realizations when estimating the threshold");
  }
};

RunResult run_datagen(const DatagenArgs& a, const Common& c) {
  DatasetSpec spec{a.geometry.build(), a.p, a.labels, c.seed, a.s_min};
  spec.validate();
  const DatasetFormat format = parse_dataset_format(a.format);
  require(std::isfinite(a.pc_hat) && a.pc_hat >= 0.0, "--pc-hat must be >= 0");
  require(std::isfinite(a.band) && a.band > 1.0, "--band must exceed 1");
  if (a.pc_hat == 0.0) require(a.threshold_realizations >= 1, "--threshold-realizations must be >= 1");

  double pc_hat = a.pc_hat;
  std::string pc_source = "given";
  if (pc_hat == 0.0) {
    pc_hat = estimate_threshold(spec.geometry, hash_combine(c.seed, kThresholdTag),
                                {a.threshold_realizations, 200, c.workers})
                 .p_c_hat;
    pc_source = "estimated";
  }
  const Regime regime = classify_regime(spec.p, pc_hat, a.band);
  const Dataset dataset = generate_dataset(spec);
  const Configuration config = sample_configuration(spec.geometry, spec.p, spec.seed);
  const RegimeReport report = feature_inventory(census(ClusterLabeling(config)), regime, spec.min_cluster_size);

  std::size_t isolated = 0;
  for (const auto& ex : dataset.examples) isolated += ex.in_distribution ? 0 : 1;

  Json j;
  j["p_c_hat"] = pc_hat;
  j["p_c_source"] = pc_source;
  j["regime"] = std::string(to_string(regime));
  j["context_feature_count"] = report.context_feature_count;
  j["component_dim_per_cluster"] = report.component_dim_per_cluster;
  j["spanning_fraction"] = report.spanning_fraction;
  j["examples"] = dataset.examples.size();
  j["clusters_with_functions"] = dataset.functions.keys.size();
  j["isolated"] = isolated;

  RunResult r;
  r.artifacts.push_back({format == DatasetFormat::csv ? "dataset.csv" : "dataset.jsonl", render_dataset(dataset, format)});
  r.artifacts.push_back({"regime.json", j.dump(2) + '\n'});
  r.summary = j;
  return r;
}

// ---------------------------------------------------------------------------
// fit

struct FitArgs {
  std::string kind;
  std::string census_path;
  std::string census_pc_path;
  std::string radii_path;
  Site s_min = 10;
  double s_lo = 0.0;
  double s_hi = 0.0;

  void add(CLI::App* app) {
    app->add_option("--kind", kind, "tau, fractal or cutoff")->required();
    app->add_option("--census", census_path, "census CSV (s,count); for cutoff, the one at p");
    app->add_option("--census-pc", census_pc_path, "census CSV at the threshold (cutoff)");
    app->add_option("--radii", radii_path, "radii CSV (s,radius)");
    app->add_option("--s-min", s_min, "lower size cutoff (tau)");
    app->add_option("--s-lo", s_lo, "lower size of the fit range (fractal, cutoff)");
    app->add_option("--s-hi", s_hi, "upper size of the fit range (fractal, cutoff)");
  }
};

RunResult run_fit(const FitArgs& a, const Common&) {
  Json j;
  j["kind"] = a.kind;
  if (a.kind == "tau") {
    require(!a.census_path.empty(), "fit --kind tau needs --census");
    require(a.s_min >= 1, "--s-min must be >= 1");
    j["fit"] = power_law_json(fit_power_law(read_histogram(a.census_path), a.s_min));
  } else if (a.kind == "fractal") {
    require(!a.radii_path.empty(), "fit --kind fractal needs --radii");
    require(a.s_lo > 0 && a.s_hi > a.s_lo, "fractal range must satisfy 0 < s-lo < s-hi");
    std::vector<SizeRadius> pairs;
    for (const auto& row : read_csv(a.radii_path, 2)) {
      pairs.push_back({parse_double(row[0], "size"), parse_double(row[1], "radius")});
    }
    j["fit"] = fractal_json(fit_fractal_dimension(pairs, a.s_lo, a.s_hi));
  } else if (a.kind == "cutoff") {
    require(!a.census_path.empty() && !a.census_pc_path.empty(), "fit --kind cutoff needs --census and --census-pc");
    require(a.s_lo >= 1 && a.s_hi >= a.s_lo, "cutoff range must satisfy 1 <= s-lo <= s-hi");
    j["fit"] = cutoff_json(fit_exponential_cutoff(read_histogram(a.census_path), read_histogram(a.census_pc_path),
                                                  static_cast<Site>(a.s_lo), static_cast<Site>(a.s_hi)));
  } else {
    fail(ErrorKind::validation, "unknown fit kind '" + a.kind + "' (expected tau, fractal or cutoff)");
  }
  RunResult r;
  r.report = j.dump(2) + '\n';
  r.artifacts.push_back({"fits.json", r.report});
  r.summary = j;
  return r;
}

// ---------------------------------------------------------------------------
// oracle

struct OracleArgs {
  GeometryArgs geometry;
  double p = -1.0;

  void add(CLI::App* app) {
    geometry.add(app, "free");
    app->add_option("--p", p, "occupation probability")->required();
  }
};

RunResult run_oracle(const OracleArgs& a, const Common&) {
  const LatticeGeometry geom = a.geometry.build();
  check_probability(a.p, "--p");
  const auto exact = exact_enumeration_oracle(geom, a.p);
  Json j;
  j["sides"] = std::vector<std::int64_t>(geom.sides().begin(), geom.sides().end());
  j["boundary"] = std::string(to_string(geom.boundary()));
  j["site_count"] = exact.site_count;
  j["p"] = exact.p;
  j["S"] = std::isnan(exact.mean_cluster_size) ? Json(nullptr) : Json(exact.mean_cluster_size);
  j["spanning_probability"] = exact.spanning_probability;
  Json ns = Json::array();
  for (std::size_t s = 1; s < exact.cluster_numbers.size(); ++s) {
    ns.push_back({{"s", s}, {"n_s", exact.cluster_numbers[s]}});
  }
  j["cluster_numbers"] = ns;
  RunResult r;
  r.report = j.dump(2) + '\n';
  r.artifacts.push_back({"oracle.json", r.report});
  r.summary = {{"S", j["S"]}, {"spanning_probability", exact.spanning_probability}};
  return r;
}

// ---------------------------------------------------------------------------
// render

struct RenderArgs {
  GeometryArgs geometry;
  double p = -1.0;
  std::string highlight = "largest";

  void add(CLI::App* app) {
    geometry.add(app, "free");
    app->add_option("--p", p, "occupation probability")->required();
    app->add_option("--highlight", highlight, "largest or all");
  }
};

RunResult run_render(const RenderArgs& a, const Common& c) {
  const LatticeGeometry geom = a.geometry.build();
  check_probability(a.p, "--p");
  const Highlight highlight = parse_highlight(a.highlight);
  const Configuration config = sample_configuration(geom, a.p, c.seed);
  const ClusterLabeling labeling(config);
  RunResult r;
  r.artifacts.push_back({"lattice.svg", render_lattice_svg(config, labeling, highlight)});
  r.summary = {{"occupied", config.occupied_count}, {"largest", labeling.largest()}};
  return r;
}

// ---------------------------------------------------------------------------
// outputs

Json capture_config(const CLI::App* sub) {
  Json j = Json::object();
  for (const CLI::Option* opt : sub->get_options()) {
    const std::string name = opt->get_single_name();
    if (name == "help" || name == "config" || name == "out") continue;
    if (opt->get_expected_min() == 0) {
      j[name] = opt->count() > 0 && opt->as<bool>();
    } else if (opt->count() > 0) {
      j[name] = opt->results().back();
    } else {
      j[name] = opt->get_default_str();
    }
  }
  return j;
}

void write_outputs(const RunResult& result, const CLI::App* sub, const Common& common, double seconds,
                   std::ostream& out) {
  const fs::path dir(resolve_output_dir(common.out));
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::io, "cannot create output directory " + dir.string() + ": " + ec.message());

  Json artifacts = Json::array();
  for (const auto& a : result.artifacts) {
    io::write_atomic((dir / a.name).string(), a.content);
    artifacts.push_back(a.name);
  }
  Json manifest;
  manifest["tool"] = "percolab";
  manifest["version"] = PERCOLAB_VERSION;
  manifest["subcommand"] = sub->get_name();
  manifest["config"] = capture_config(sub);
  manifest["seeds"] = {{"master", common.seed}};
  manifest["artifacts"] = artifacts;
  manifest["summary"] = result.summary;
  manifest["wall_time_seconds"] = seconds;
  io::write_atomic((dir / "manifest.json").string(), manifest.dump(2) + '\n');

  if (!result.report.empty()) {
    out << result.report;
  } else {
    for (const auto& a : result.artifacts) out << (dir / a.name).string() << '\n';
    out << (dir / "manifest.json").string() << '\n';
  }
}

std::vector<std::string> replay_args(const std::string& manifest_path, const std::string& out_dir) {
  Json manifest;
  try {
    manifest = Json::parse(io::read_file(manifest_path));
  } catch (const Json::exception& e) {
    fail(ErrorKind::io, manifest_path + ": not a manifest: " + e.what());
  }
  if (!manifest.contains("subcommand") || !manifest.contains("config") || !manifest["config"].is_object()) {
    fail(ErrorKind::io, manifest_path + ": manifest lacks subcommand or config");
  }
  std::vector<std::string> args{manifest["subcommand"].get<std::string>()};
  for (const auto& [key, value] : manifest["config"].items()) {
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back("--" + key);
    } else if (value.is_string()) {
      if (!value.get<std::string>().empty()) args.push_back("--" + key + "=" + value.get<std::string>());
    } else {
      fail(ErrorKind::io, manifest_path + ": unexpected config value for " + key);
    }
  }
  args.push_back("--out=" + resolve_output_dir(out_dir));
  return args;
}

void report_error(std::ostream& err, std::string_view kind, const std::string& message) {
  std::string line = message;
  std::replace(line.begin(), line.end(), '\n', ' ');
  err << "percolab: error kind=" << kind << ": " << line << '\n';
}

// Lines of `key = value`; blank lines and '#' comments are skipped.
std::vector<std::string> config_args(const std::string& path) {
  std::istringstream in(io::read_file(path));
  std::vector<std::string> out;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line.erase(0, line.find_first_not_of(" \t\r"));
    line.erase(line.find_last_not_of(" \t\r") + 1);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorKind::validation, path + ":" + std::to_string(number) + ": expected key = value");
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    key.erase(key.find_last_not_of(" \t") + 1);
    value.erase(0, value.find_first_not_of(" \t"));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (key.empty() || key == "config") {
      fail(ErrorKind::validation, path + ":" + std::to_string(number) + ": invalid key '" + key + "'");
    }
    out.push_back("--" + key + "=" + value);
  }
  return out;
}

// Splices the contents of a --config file in right after the subcommand, so
// later command-line flags take precedence.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  const auto sub = std::find_if(args.begin(), args.end(), [](const std::string& a) { return a.empty() || a[0] != '-'; });
  if (sub == args.end()) return args;
  std::vector<std::string> out(args.begin(), sub + 1);
  for (auto& a : config_args(path)) out.push_back(std::move(a));
  out.insert(out.end(), sub + 1, args.end());
  return out;
}

}  // namespace

std::string resolve_output_dir(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("PERCOLAB_OUT"); env != nullptr && *env != '\0') return env;
  return ".";
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"percolab: site percolation, Bethe-lattice theory and synthetic datasets", "percolab"};
  app.option_defaults()->always_capture_default()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.set_version_flag("--version", std::string(PERCOLAB_VERSION));
  app.require_subcommand(1);

  Common common;
  SweepArgs sweep;
  SampleArgs sample;
  BetheArgs bethe_args;
  DatagenArgs datagen;
  FitArgs fit;
  OracleArgs oracle;
  RenderArgs render;
  std::string manifest_path;

  auto* sweep_cmd = app.add_subcommand("sweep", "Newman-Ziff sweep: curves.csv, canonical.csv, threshold.json");
  auto* sample_cmd = app.add_subcommand("sample", "fixed-p ensemble: census.csv, radii.csv, fits.json");
  auto* bethe_cmd = app.add_subcommand("bethe", "Bethe-lattice closed forms and growth comparison");
  auto* datagen_cmd = app.add_subcommand("datagen", "synthetic labeled dataset and regime report");
  auto* fit_cmd = app.add_subcommand("fit", "fit tau, D or the cutoff from CSV artifacts");
  auto* oracle_cmd = app.add_subcommand("oracle", "exact enumeration on a small lattice");
  auto* render_cmd = app.add_subcommand("render", "SVG of one two-dimensional configuration");
  auto* replay_cmd = app.add_subcommand("replay", "rerun the configuration recorded in a manifest");

  for (auto* sub : {sweep_cmd, sample_cmd, bethe_cmd, datagen_cmd, fit_cmd, oracle_cmd, render_cmd}) common.add(sub);
  sweep.add(sweep_cmd);
  sample.add(sample_cmd);
  bethe_args.add(bethe_cmd);
  datagen.add(datagen_cmd);
  fit.add(fit_cmd);
  oracle.add(oracle_cmd);
  render.add(render_cmd);
  replay_cmd->add_option("--manifest", manifest_path, "manifest.json to replay")->required();
  replay_cmd->add_option("--out", common.out, "output directory (else $PERCOLAB_OUT, else .)");

  std::vector<std::string> expanded;
  try {
    expanded = expand_config(args);
  } catch (const Error& e) {
    report_error(err, to_string(e.kind()), e.what());
    return 2;
  }
  try {
    std::vector<std::string> reversed(expanded.rbegin(), expanded.rend());
    app.parse(reversed);
  } catch (const CLI::CallForVersion&) {
    out << PERCOLAB_VERSION << '\n';
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::Success&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    report_error(err, "usage", e.what());
    err << app.help();
    return 2;
  }

  try {
    if (replay_cmd->parsed()) return dispatch(replay_args(manifest_path, common.out), out, err);

    common.validate();
    const auto start = std::chrono::steady_clock::now();
    RunResult result;
    CLI::App* sub = nullptr;
    if (sweep_cmd->parsed()) {
      sub = sweep_cmd;
      result = run_sweep(sweep, common);
    } else if (sample_cmd->parsed()) {
      sub = sample_cmd;
      result = run_sample(sample, common);
    } else if (bethe_cmd->parsed()) {
      sub = bethe_cmd;
      result = run_bethe(bethe_args, common);
    } else if (datagen_cmd->parsed()) {
      sub = datagen_cmd;
      result = run_datagen(datagen, common);
    } else if (fit_cmd->parsed()) {
      sub = fit_cmd;
      result = run_fit(fit, common);
    } else if (oracle_cmd->parsed()) {
      sub = oracle_cmd;
      result = run_oracle(oracle, common);
    } else {
      sub = render_cmd;
      result = run_render(render, common);
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_outputs(result, sub, common, seconds, out);
    return 0;
  } catch (const Error& e) {
    report_error(err, to_string(e.kind()), e.what());
    return e.kind() == ErrorKind::validation ? 2 : 1;
  } catch (const std::exception& e) {
    report_error(err, "runtime", e.what());
    return 1;
  }
}

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return dispatch(args, out, err);
}

}  // namespace percolab::cli
