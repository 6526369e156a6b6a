#include "percolab/datagen.hpp"

#include <cmath>
#include <sstream>

#include "json.hpp"

#include "percolab/error.hpp"
#include "percolab/io.hpp"
#include "percolab/rng.hpp"

namespace percolab {

namespace {

constexpr std::uint64_t kKeyTag = 0x636c7573746572ULL;     // function keys
constexpr std::uint64_t kMemoryTag = 0x6d656d6f72697aULL;  // memorized labels

std::int64_t reduce(std::uint64_t h, std::int64_t label_space) {
  return static_cast<std::int64_t>(h % static_cast<std::uint64_t>(label_space));
}

}  // namespace

void DatasetSpec::validate() const {
  require(std::isfinite(p) && p >= 0.0 && p <= 1.0, "occupation probability must lie in [0, 1]");
  require(label_space >= 2, "label space size must be >= 2");
  require(min_cluster_size >= 1, "min cluster size must be >= 1");
}

std::uint64_t function_key(std::uint64_t seed, std::int64_t cluster_id) {
  return hash_combine(hash_combine(seed, kKeyTag), static_cast<std::uint64_t>(cluster_id));
}

std::int64_t cluster_function(std::uint64_t key, std::span<const std::int64_t> coords, std::int64_t label_space) {
  std::uint64_t h = key;
  for (const auto c : coords) h = hash_combine(h, static_cast<std::uint64_t>(c));
  return reduce(h, label_space);
}

std::int64_t memorized_label(std::uint64_t seed, Site site, std::int64_t label_space) {
  return reduce(hash_combine(hash_combine(seed, kMemoryTag), static_cast<std::uint64_t>(site)), label_space);
}

Dataset generate_dataset(const DatasetSpec& spec) {
  spec.validate();
  Dataset out;
  out.spec = spec;
  const Configuration config = sample_configuration(spec.geometry, spec.p, spec.seed);
  const ClusterLabeling labeling(config);
  const Site n = spec.geometry.site_count();

  std::vector<Site> canonical(static_cast<std::size_t>(n), -1);  // root -> smallest member
  out.examples.reserve(static_cast<std::size_t>(config.occupied_count));
  for (Site site = 0; site < n; ++site) {
    if (!config.is_occupied(site)) continue;
    const Site root = labeling.root(site);
    auto& id = canonical[static_cast<std::size_t>(root)];
    if (id < 0) id = site;

    LabeledExample ex;
    ex.site = site;
    ex.coords = spec.geometry.coords(site);
    if (labeling.cluster_size(root) >= 2) {
      ex.cluster_id = id;
      ex.in_distribution = true;
      auto [it, inserted] = out.functions.keys.try_emplace(id, 0);
      if (inserted) it->second = function_key(spec.seed, id);
      ex.label = cluster_function(it->second, ex.coords, spec.label_space);
    } else {
      ex.label = memorized_label(spec.seed, site, spec.label_space);
    }
    out.examples.push_back(std::move(ex));
  }
  return out;
}

std::string_view to_string(Regime regime) {
  switch (regime) {
    case Regime::subcritical: return "subcritical";
    case Regime::near_critical: return "near_critical";
    case Regime::extreme_supercritical: return "extreme_supercritical";
  }
  return "?";
}

Regime classify_regime(double p, double pc_hat, double band) {
  require(std::isfinite(pc_hat) && pc_hat > 0.0, "threshold estimate must be positive");
  require(std::isfinite(band) && band > 1.0, "regime band multiplier must exceed 1");
  require(std::isfinite(p), "occupation probability must be finite");
  if (p < pc_hat) return Regime::subcritical;
  if (p < band * pc_hat) return Regime::near_critical;
  return Regime::extreme_supercritical;
}

RegimeReport feature_inventory(const ClusterCensus& census, Regime regime, Site s_min) {
  RegimeReport out;
  out.regime = regime;
  std::size_t count = 0;
  for (auto it = census.histogram.lower_bound(std::max<Site>(1, s_min)); it != census.histogram.end(); ++it) {
    count += static_cast<std::size_t>(it->second);
  }
  if (census.largest_spans && census.largest >= s_min && count > 0) --count;
  out.context_feature_count = count;
  out.component_dim_per_cluster =
      regime == Regime::extreme_supercritical && census.largest_spans ? census.dimension : 4;
  if (census.largest_spans && census.occupied > 0) {
    out.spanning_fraction = static_cast<double>(census.largest) / static_cast<double>(census.occupied);
  }
  return out;
}

DatasetFormat parse_dataset_format(std::string_view text) {
  if (text == "csv") return DatasetFormat::csv;
  if (text == "jsonl") return DatasetFormat::jsonl;
  fail(ErrorKind::validation, "unknown dataset format '" + std::string(text) + "' (expected csv or jsonl)");
}

namespace {

nlohmann::ordered_json spec_json(const DatasetSpec& spec) {
  nlohmann::ordered_json j;
  j["sides"] = std::vector<std::int64_t>(spec.geometry.sides().begin(), spec.geometry.sides().end());
  j["boundary"] = std::string(to_string(spec.geometry.boundary()));
  j["p"] = spec.p;
  j["label_space"] = spec.label_space;
  j["seed"] = spec.seed;
  j["min_cluster_size"] = spec.min_cluster_size;
  return j;
}

}  // namespace

std::string render_dataset(const Dataset& dataset, DatasetFormat format) {
  const int d = dataset.spec.geometry.dimension();
  std::ostringstream out;
  if (format == DatasetFormat::csv) {
    out << "site_index";
    for (int a = 0; a < d; ++a) out << ",coord_" << a;
    out << ",y,cluster_id,in_distribution\n";
    for (const auto& ex : dataset.examples) {
      out << ex.site;
      for (const auto c : ex.coords) out << ',' << c;
      out << ',' << ex.label << ',' << ex.cluster_id << ',' << (ex.in_distribution ? 1 : 0) << '\n';
    }
    return out.str();
  }
  nlohmann::ordered_json header;
  header["spec"] = spec_json(dataset.spec);
  header["function_family"] = dataset.functions.family;
  out << header.dump() << '\n';
  for (const auto& ex : dataset.examples) {
    nlohmann::ordered_json j;
    j["site_index"] = ex.site;
    for (int a = 0; a < d; ++a) j["coord_" + std::to_string(a)] = ex.coords[static_cast<std::size_t>(a)];
    j["y"] = ex.label;
    j["cluster_id"] = ex.cluster_id;
    j["in_distribution"] = ex.in_distribution;
    out << j.dump() << '\n';
  }
  return out.str();
}

void export_dataset(const Dataset& dataset, DatasetFormat format, const std::string& path) {
  io::write_atomic(path, render_dataset(dataset, format));
}

}  // namespace percolab
