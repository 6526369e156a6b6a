#include "percolab/render.hpp"

#include <array>
#include <sstream>
#include <vector>

#include "percolab/error.hpp"
#include "percolab/rng.hpp"

namespace percolab {

Highlight parse_highlight(std::string_view text) {
  if (text == "largest") return Highlight::largest;
  if (text == "all") return Highlight::all;
  fail(ErrorKind::validation, "unknown highlight '" + std::string(text) + "' (expected largest or all)");
}

namespace {

constexpr std::array<std::string_view, 10> kPalette = {
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
};

}  // namespace

std::string render_lattice_svg(const Configuration& config, const ClusterLabeling& labeling, Highlight highlight) {
  const auto& geometry = config.geometry;
  if (geometry.dimension() != 2) {
    fail(ErrorKind::validation,
         "SVG rendering supports d = 2 only, got d = " + std::to_string(geometry.dimension()));
  }
  const std::int64_t rows = geometry.side(0);
  const std::int64_t cols = geometry.side(1);
  const Site n = geometry.site_count();

  std::vector<Site> canonical(static_cast<std::size_t>(n), -1);
  Site largest_id = -1;
  Site largest_size = 0;
  for (Site site = 0; site < n; ++site) {
    if (!config.is_occupied(site)) continue;
    const Site root = labeling.root(site);
    auto& id = canonical[static_cast<std::size_t>(root)];
    if (id >= 0) continue;
    id = site;
    if (labeling.cluster_size(root) > largest_size) {
      largest_size = labeling.cluster_size(root);
      largest_id = site;
    }
  }

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << cols << ' ' << rows << "\" width=\""
      << cols * 4 << "\" height=\"" << rows * 4 << "\" shape-rendering=\"crispEdges\">\n";
  svg << "<rect width=\"" << cols << "\" height=\"" << rows << "\" fill=\"#ffffff\"/>\n";
  for (Site site = 0; site < n; ++site) {
    if (!config.is_occupied(site)) continue;
    const Site id = canonical[static_cast<std::size_t>(labeling.root(site))];
    std::string_view fill;
    if (highlight == Highlight::largest) {
      fill = id == largest_id ? "#000000" : "#b0b0b0";
    } else {
      fill = kPalette[mix64(static_cast<std::uint64_t>(id)) % kPalette.size()];
    }
    svg << "<rect x=\"" << site % cols << "\" y=\"" << site / cols << "\" width=\"1\" height=\"1\" fill=\"" << fill
        << "\"/>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace percolab
