#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace percolab {

using Site = std::int64_t;
using Coords = std::vector<std::int64_t>;

enum class Boundary { free, periodic };

std::string_view to_string(Boundary boundary);
Boundary parse_boundary(std::string_view text);

/// d-dimensional hypercubic lattice with row-major site numbering (the last
/// axis varies fastest). Immutable after construction.
///
/// Periodic lattices need every side >= 3 so that the 2d neighbor slots of
/// a site are distinct.
class LatticeGeometry {
 public:
  LatticeGeometry(std::vector<std::int64_t> sides, Boundary boundary);

  /// Hypercube with `dimension` sides of length `side`.
  static LatticeGeometry cube(int dimension, std::int64_t side, Boundary boundary);

  int dimension() const noexcept { return static_cast<int>(sides_.size()); }
  std::span<const std::int64_t> sides() const noexcept { return sides_; }
  std::int64_t side(int axis) const { return sides_[static_cast<std::size_t>(axis)]; }
  std::int64_t stride(int axis) const { return strides_[static_cast<std::size_t>(axis)]; }
  Boundary boundary() const noexcept { return boundary_; }
  bool periodic() const noexcept { return boundary_ == Boundary::periodic; }
  Site site_count() const noexcept { return site_count_; }
  int coordination() const noexcept { return 2 * dimension(); }

  Coords coords(Site site) const;
  void coords_into(Site site, std::span<std::int64_t> out) const;
  Site index(std::span<const std::int64_t> coords) const;

  /// Calls f(neighbor, axis, direction) for every neighbor of `site`;
  /// direction is -1 or +1 and gives the unwrapped step along `axis`.
  template <typename F>
  void for_each_neighbor(Site site, F&& f) const {
    Site rest = site;
    for (int axis = dimension() - 1; axis >= 0; --axis) {
      const auto a = static_cast<std::size_t>(axis);
      const std::int64_t len = sides_[a];
      const std::int64_t c = rest % len;
      rest /= len;
      const std::int64_t s = strides_[a];
      if (c > 0) {
        f(site - s, axis, -1);
      } else if (boundary_ == Boundary::periodic) {
        f(site + (len - 1) * s, axis, -1);
      }
      if (c + 1 < len) {
        f(site + s, axis, +1);
      } else if (boundary_ == Boundary::periodic) {
        f(site - (len - 1) * s, axis, +1);
      }
    }
  }

  std::vector<Site> neighbors(Site site) const;

  /// Displacement b - a; under periodic boundaries each component is
  /// reduced to the minimum image.
  std::vector<std::int64_t> displacement(std::span<const std::int64_t> a,
                                         std::span<const std::int64_t> b) const;

  bool operator==(const LatticeGeometry&) const = default;

  std::string describe() const;

 private:
  std::vector<std::int64_t> sides_;
  std::vector<std::int64_t> strides_;
  Boundary boundary_;
  Site site_count_ = 0;
};

inline Site site_count(const LatticeGeometry& geometry) { return geometry.site_count(); }

inline Coords index_to_coords(const LatticeGeometry& geometry, Site site) {
  return geometry.coords(site);
}

inline Site coords_to_index(const LatticeGeometry& geometry, std::span<const std::int64_t> coords) {
  return geometry.index(coords);
}

inline std::vector<Site> neighbors(const LatticeGeometry& geometry, Site site) {
  return geometry.neighbors(site);
}

/// Parses "8,8,8" into side lengths.
std::vector<std::int64_t> parse_sides(std::string_view text);

}  // namespace percolab
