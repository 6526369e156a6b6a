#pragma once

// Independent reference code for the tests: a coordinate-level flood fill
// and small statistics helpers. Nothing here calls the union-find.

#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "percolab/lattice.hpp"
#include "percolab/percolation.hpp"

namespace testing {

using percolab::Coords;
using percolab::LatticeGeometry;
using percolab::Site;

inline Site flat(const LatticeGeometry& g, const Coords& c) {
  Site i = 0;
  for (int a = 0; a < g.dimension(); ++a) i = i * g.side(a) + c[static_cast<std::size_t>(a)];
  return i;
}

inline Coords unflat(const LatticeGeometry& g, Site i) {
  Coords c(static_cast<std::size_t>(g.dimension()));
  for (int a = g.dimension() - 1; a >= 0; --a) {
    c[static_cast<std::size_t>(a)] = i % g.side(a);
    i /= g.side(a);
  }
  return c;
}

inline std::vector<Site> reference_neighbors(const LatticeGeometry& g, Site i) {
  std::vector<Site> out;
  const Coords c = unflat(g, i);
  for (int a = 0; a < g.dimension(); ++a) {
    for (int step : {-1, 1}) {
      Coords n = c;
      auto& x = n[static_cast<std::size_t>(a)];
      x += step;
      if (x < 0 || x >= g.side(a)) {
        if (!g.periodic()) continue;
        x = (x + g.side(a)) % g.side(a);
      }
      out.push_back(flat(g, n));
    }
  }
  return out;
}

/// Component label per site (-1 when empty) by depth-first flood fill.
struct Flood {
  std::vector<Site> label;
  std::vector<Site> sizes;  // per label
};

inline Flood flood_fill(const LatticeGeometry& g, const std::vector<bool>& occupied) {
  const Site n = g.site_count();
  Flood f;
  f.label.assign(static_cast<std::size_t>(n), -1);
  std::vector<Site> stack;
  for (Site s = 0; s < n; ++s) {
    if (!occupied[static_cast<std::size_t>(s)] || f.label[static_cast<std::size_t>(s)] >= 0) continue;
    const auto id = static_cast<Site>(f.sizes.size());
    f.sizes.push_back(0);
    stack.assign(1, s);
    f.label[static_cast<std::size_t>(s)] = id;
    while (!stack.empty()) {
      const Site cur = stack.back();
      stack.pop_back();
      ++f.sizes.back();
      for (const Site j : reference_neighbors(g, cur)) {
        if (occupied[static_cast<std::size_t>(j)] && f.label[static_cast<std::size_t>(j)] < 0) {
          f.label[static_cast<std::size_t>(j)] = id;
          stack.push_back(j);
        }
      }
    }
  }
  return f;
}

inline std::vector<bool> occupancy(const percolab::Configuration& config) {
  std::vector<bool> out(static_cast<std::size_t>(config.geometry.site_count()));
  for (Site s = 0; s < config.geometry.site_count(); ++s) out[static_cast<std::size_t>(s)] = config.is_occupied(s);
  return out;
}

struct Moments {
  double n = 0, sum = 0, sq = 0;
  void add(double x) {
    n += 1;
    sum += x;
    sq += x * x;
  }
  double mean() const { return sum / n; }
  double variance() const { return (sq - n * mean() * mean()) / (n - 1); }
  double stderr_of_mean() const { return std::sqrt(variance() / n); }
};

}  // namespace testing
