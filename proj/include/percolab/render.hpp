#pragma once

#include <string>
#include <string_view>

#include "percolab/percolation.hpp"

namespace percolab {

enum class Highlight { largest, all };

Highlight parse_highlight(std::string_view text);

/// SVG of a two-dimensional configuration: one unit square per occupied
/// site, axis 1 horizontal and axis 0 vertical. With Highlight::largest the
/// largest cluster (lowest canonical id on ties) is black and the rest gray;
/// with Highlight::all each cluster gets a palette color keyed by its
/// smallest site index.
std::string render_lattice_svg(const Configuration& config, const ClusterLabeling& labeling,
                               Highlight highlight = Highlight::largest);

}  // namespace percolab
