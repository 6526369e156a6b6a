#include "percolab/lattice.hpp"

#include <limits>
#include <sstream>

#include "percolab/error.hpp"

namespace percolab {

std::string_view to_string(Boundary boundary) {
  return boundary == Boundary::periodic ? "periodic" : "free";
}

Boundary parse_boundary(std::string_view text) {
  if (text == "free") return Boundary::free;
  if (text == "periodic") return Boundary::periodic;
  fail(ErrorKind::validation, "unknown boundary '" + std::string(text) + "' (expected free|periodic)");
}

LatticeGeometry::LatticeGeometry(std::vector<std::int64_t> sides, Boundary boundary)
    : sides_(std::move(sides)), boundary_(boundary) {
  require(!sides_.empty(), "lattice dimension must be positive");
  require(sides_.size() <= 64, "lattice dimension must be at most 64");
  Site total = 1;
  for (const auto len : sides_) {
    require(len >= 1, "side lengths must be positive");
    if (boundary_ == Boundary::periodic) {
      require(len >= 3, "periodic boundaries require every side >= 3");
    }
    require(total <= std::numeric_limits<Site>::max() / len, "site count overflows the index range");
    total *= len;
  }
  site_count_ = total;
  strides_.assign(sides_.size(), 1);
  for (std::size_t axis = sides_.size() - 1; axis > 0; --axis) {
    strides_[axis - 1] = strides_[axis] * sides_[axis];
  }
}

LatticeGeometry LatticeGeometry::cube(int dimension, std::int64_t side, Boundary boundary) {
  require(dimension >= 1, "lattice dimension must be positive");
  return LatticeGeometry(std::vector<std::int64_t>(static_cast<std::size_t>(dimension), side), boundary);
}

Coords LatticeGeometry::coords(Site site) const {
  Coords out(sides_.size());
  coords_into(site, out);
  return out;
}

void LatticeGeometry::coords_into(Site site, std::span<std::int64_t> out) const {
  require(site >= 0 && site < site_count_, "site index out of range");
  require(out.size() == sides_.size(), "coordinate buffer has wrong dimension");
  for (std::size_t axis = sides_.size(); axis-- > 0;) {
    out[axis] = site % sides_[axis];
    site /= sides_[axis];
  }
}

Site LatticeGeometry::index(std::span<const std::int64_t> coords) const {
  require(coords.size() == sides_.size(), "coordinate tuple has wrong dimension");
  Site site = 0;
  for (std::size_t axis = 0; axis < sides_.size(); ++axis) {
    require(coords[axis] >= 0 && coords[axis] < sides_[axis], "coordinate out of range");
    site += coords[axis] * strides_[axis];
  }
  return site;
}

std::vector<Site> LatticeGeometry::neighbors(Site site) const {
  require(site >= 0 && site < site_count_, "site index out of range");
  std::vector<Site> out;
  out.reserve(2 * sides_.size());
  for_each_neighbor(site, [&](Site j, int, int) { out.push_back(j); });
  return out;
}

std::vector<std::int64_t> LatticeGeometry::displacement(std::span<const std::int64_t> a,
                                                        std::span<const std::int64_t> b) const {
  require(a.size() == sides_.size() && b.size() == sides_.size(), "coordinate tuple has wrong dimension");
  std::vector<std::int64_t> out(sides_.size());
  for (std::size_t axis = 0; axis < sides_.size(); ++axis) {
    std::int64_t delta = b[axis] - a[axis];
    if (boundary_ == Boundary::periodic) {
      const std::int64_t len = sides_[axis];
      delta %= len;
      if (delta > len / 2) delta -= len;
      if (delta < -(len - 1) / 2) delta += len;
    }
    out[axis] = delta;
  }
  return out;
}

std::string LatticeGeometry::describe() const {
  std::ostringstream os;
  for (std::size_t axis = 0; axis < sides_.size(); ++axis) {
    if (axis) os << 'x';
    os << sides_[axis];
  }
  os << ' ' << to_string(boundary_);
  return os.str();
}

std::vector<std::int64_t> parse_sides(std::string_view text) {
  std::vector<std::int64_t> sides;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = text.find(',', pos);
    const auto token = text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    require(!token.empty(), "empty side length in '" + std::string(text) + "'");
    std::int64_t value = 0;
    for (const char ch : token) {
      require(ch >= '0' && ch <= '9', "side lengths must be positive integers: '" + std::string(text) + "'");
      require(value <= (std::numeric_limits<std::int64_t>::max() - 9) / 10, "side length too large");
      value = value * 10 + (ch - '0');
    }
    sides.push_back(value);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return sides;
}

}  // namespace percolab
