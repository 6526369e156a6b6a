#include <algorithm>
#include <map>
#include <numeric>

#include "doctest.h"
#include "percolab/error.hpp"
#include "percolab/percolation.hpp"
#include "percolab/rng.hpp"
#include "support.hpp"

using namespace percolab;

namespace {

Configuration from_coords(const LatticeGeometry& g, std::initializer_list<Coords> sites) {
  std::vector<Site> flat;
  for (const auto& c : sites) flat.push_back(g.index(c));
  return make_configuration(g, flat);
}

// Labels agree with the reference flood fill up to renaming.
void check_partition(const Configuration& config) {
  const ClusterLabeling lab(config);
  const auto flood = testing::flood_fill(config.geometry, testing::occupancy(config));
  std::map<Site, Site> root_to_label, label_to_root;
  Site total = 0;
  for (Site s = 0; s < config.geometry.site_count(); ++s) {
    const Site expected = flood.label[static_cast<std::size_t>(s)];
    REQUIRE(lab.occupied(s) == (expected >= 0));
    if (expected < 0) continue;
    const Site root = lab.root(s);
    CHECK(lab.occupied(root));
    CHECK(lab.root(root) == root);
    auto [a, fresh_a] = root_to_label.try_emplace(root, expected);
    auto [b, fresh_b] = label_to_root.try_emplace(expected, root);
    CHECK(a->second == expected);
    CHECK(b->second == root);
    if (fresh_a) {
      CHECK(lab.cluster_size(root) == flood.sizes[static_cast<std::size_t>(expected)]);
      total += lab.cluster_size(root);
    }
  }
  CHECK(total == config.occupied_count);
  CHECK(lab.cluster_count() == static_cast<Site>(flood.sizes.size()));
}

}  // namespace

TEST_CASE("sample_configuration edge cases and determinism") {
  const LatticeGeometry g({16, 16}, Boundary::free);
  CHECK(sample_configuration(g, 0.0, 1).occupied_count == 0);
  CHECK(sample_configuration(g, 1.0, 1).occupied_count == 256);
  CHECK_THROWS_AS(sample_configuration(g, -0.1, 1), Error);
  CHECK_THROWS_AS(sample_configuration(g, 1.5, 1), Error);
  const auto a = sample_configuration(g, 0.4, 77);
  const auto b = sample_configuration(g, 0.4, 77);
  CHECK(a.occupied == b.occupied);
  CHECK(a.occupied_count == static_cast<Site>(a.occupied.count()));
  CHECK_FALSE(a.occupied == sample_configuration(g, 0.4, 78).occupied);
}

TEST_CASE("mean occupied count on 3x3 at p = 0.5") {
  const LatticeGeometry g({3, 3}, Boundary::free);
  testing::Moments m;
  for (std::uint64_t seed = 0; seed < 10'000; ++seed) {
    m.add(static_cast<double>(sample_configuration(g, 0.5, seed).occupied_count));
  }
  CHECK(std::abs(m.mean() - 4.5) <= 0.07);
}

TEST_CASE("label_clusters examples") {
  const LatticeGeometry g({3, 3}, Boundary::free);
  const auto full = label_clusters(sample_configuration(g, 1.0, 0));
  CHECK(full.cluster_count() == 1);
  CHECK(full.largest() == 9);

  const auto diag = label_clusters(from_coords(g, {{0, 0}, {1, 1}}));
  CHECK(diag.cluster_count() == 2);
  CHECK(diag.largest() == 1);

  const LatticeGeometry ring({5}, Boundary::periodic);
  const auto r = label_clusters(sample_configuration(ring, 1.0, 0));
  CHECK(r.cluster_count() == 1);
  CHECK(r.largest() == 5);

  const auto empty = label_clusters(sample_configuration(g, 0.0, 0));
  CHECK(empty.cluster_count() == 0);
  CHECK(empty.roots().empty());
}

TEST_CASE("labeling matches a flood fill on random configurations") {
  Rng rng(99);
  const std::vector<LatticeGeometry> geometries = {
      LatticeGeometry({40, 40}, Boundary::free),      LatticeGeometry({40, 40}, Boundary::periodic),
      LatticeGeometry({3, 17}, Boundary::periodic),   LatticeGeometry({6, 6, 6}, Boundary::periodic),
      LatticeGeometry({5, 4, 3, 3}, Boundary::free),  LatticeGeometry({100}, Boundary::periodic),
      LatticeGeometry::cube(6, 3, Boundary::periodic)};
  for (const auto& g : geometries) {
    for (const double p : {0.1, 0.3, 0.5, 0.6, 0.9}) check_partition(sample_configuration(g, p, rng.next()));
  }
}

TEST_CASE("labeling does not depend on the order sites are added") {
  const LatticeGeometry g({20, 20}, Boundary::periodic);
  const auto config = sample_configuration(g, 0.55, 5);
  const ClusterLabeling lab(config);
  std::vector<Site> sites;
  for (Site s = 0; s < g.site_count(); ++s) {
    if (config.is_occupied(s)) sites.push_back(s);
  }
  Rng rng(6);
  for (int trial = 0; trial < 5; ++trial) {
    rng.shuffle(std::span<Site>(sites));
    ClusterForest forest(g);
    for (const Site s : sites) forest.occupy(s);
    for (const Site a : sites) {
      const Site b = sites[static_cast<std::size_t>(rng.below(sites.size()))];
      CHECK((forest.find(a) == forest.find(b)) == (lab.root(a) == lab.root(b)));
    }
    CHECK(forest.cluster_count() == lab.cluster_count());
    CHECK(forest.largest() == lab.largest());
    CHECK(forest.any_spanning() == lab.any_spanning());
  }
}

TEST_CASE("wrapping and spanning detection") {
  const LatticeGeometry torus({4, 4}, Boundary::periodic);
  const auto row = label_clusters(from_coords(torus, {{1, 0}, {1, 1}, {1, 2}, {1, 3}}));
  CHECK(row.any_spanning());
  CHECK(row.spanning_axes(row.root(torus.index(Coords{1, 0}))) == 0b10);
  const auto open = label_clusters(from_coords(torus, {{1, 0}, {1, 1}, {1, 2}}));
  CHECK_FALSE(open.any_spanning());

  const LatticeGeometry box({3, 3}, Boundary::free);
  const auto column = label_clusters(from_coords(box, {{0, 2}, {1, 2}, {2, 2}}));
  CHECK(column.any_spanning());
  CHECK(column.spanning_axes(column.root(box.index(Coords{0, 2}))) == 0b01);

  const LatticeGeometry line({1, 4}, Boundary::free);
  const auto single = label_clusters(from_coords(line, {{0, 1}}));
  CHECK_FALSE(single.any_spanning());
}

TEST_CASE("Newman-Ziff sweep endpoints and the 2x2 pair average") {
  const LatticeGeometry g({2, 2}, Boundary::free);
  const Observable obs[] = {Observable::largest_cluster, Observable::cluster_count};
  const auto curves = newman_ziff_sweep(g, 3, obs, {40'000, 1});
  const auto& largest = curves[0];
  CHECK(largest.mean[0] == 0.0);
  CHECK(largest.mean[1] == 1.0);
  CHECK(largest.mean[4] == 4.0);
  // Of the 6 site pairs, 4 are adjacent (largest 2) and 2 diagonal (largest 1).
  const double exact = (4.0 * 2 + 2.0 * 1) / 6.0;
  CHECK(std::abs(largest.mean[2] - exact) <= 3 * largest.stderr_of_mean[2] + 1e-12);
  CHECK(curves[1].mean[4] == 1.0);
}

TEST_CASE("sweep states equal labelings of the same prefix") {
  const LatticeGeometry g({12, 12}, Boundary::periodic);
  const Observable obs[] = {Observable::largest_cluster, Observable::cluster_count, Observable::spanning,
                            Observable::mean_finite_size};
  const std::uint64_t master = 11;
  const auto curves = newman_ziff_sweep(g, master, obs, {1, 1});
  const auto order = sweep_order(g, realization_seed(master, 0));
  for (const std::size_t n : {1UL, 17UL, 60UL, 86UL, 100UL, 144UL}) {
    const auto lab = label_clusters(make_configuration(g, std::span<const Site>(order.data(), n)));
    CHECK(curves[0].mean[n] == static_cast<double>(lab.largest()));
    CHECK(curves[1].mean[n] == static_cast<double>(lab.cluster_count()));
    CHECK(curves[2].mean[n] == (lab.any_spanning() ? 1.0 : 0.0));
    double second = 0, first = 0;
    bool dropped = false;
    for (const Site r : lab.roots()) {
      const auto s = static_cast<double>(lab.cluster_size(r));
      if (lab.any_spanning() && !dropped && lab.cluster_size(r) == lab.largest()) {
        dropped = true;
        continue;
      }
      second += s * s;
      first += s;
    }
    CHECK(curves[3].mean[n] == doctest::Approx(first > 0 ? second / first : 0.0).epsilon(1e-12));
  }
  for (std::size_t n = 1; n < curves[0].mean.size(); ++n) CHECK(curves[0].mean[n] >= curves[0].mean[n - 1]);
}

TEST_CASE("sweep is independent of the worker count") {
  const LatticeGeometry g({10, 10}, Boundary::periodic);
  const Observable obs[] = {Observable::largest_cluster, Observable::mean_finite_size};
  const auto one = newman_ziff_sweep(g, 5, obs, {37, 1});
  const auto many = newman_ziff_sweep(g, 5, obs, {37, 8});
  for (std::size_t j = 0; j < one.size(); ++j) {
    CHECK(one[j].mean == many[j].mean);
    CHECK(one[j].stderr_of_mean == many[j].stderr_of_mean);
  }
}

TEST_CASE("observable names") {
  CHECK(parse_observable("largest_cluster") == Observable::largest_cluster);
  CHECK(parse_observable("spanning") == Observable::spanning);
  CHECK(parse_observable("mean_finite_size") == Observable::mean_finite_size);
  CHECK(parse_observable("cluster_count") == Observable::cluster_count);
  CHECK_THROWS_AS(parse_observable("perimeter"), Error);
}

TEST_CASE("canonical_convolve examples") {
  const std::vector<double> constant(51, 3.25);
  for (const double p : {0.0, 0.13, 0.5, 0.99, 1.0}) CHECK(canonical_convolve(constant, p) == doctest::Approx(3.25));
  std::vector<double> ramp(21);
  std::iota(ramp.begin(), ramp.end(), 0.0);
  CHECK(canonical_convolve(ramp, 1.0) == 20.0);
  CHECK(canonical_convolve(ramp, 0.0) == 0.0);
  CHECK(canonical_convolve(ramp, 0.3) == doctest::Approx(6.0));  // binomial mean N p
  const std::vector<double> q{0.0, 0.0, 1.0};
  CHECK(canonical_convolve(q, 0.5) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK_THROWS_AS(canonical_convolve(q, 1.1), Error);
}

TEST_CASE("binomial weights are normalized for large N") {
  for (const Site n : {Site{1}, Site{10}, Site{1000}, Site{2'097'152}}) {
    for (const double p : {0.001, 0.0889, 0.5, 0.97}) {
      const BinomialWeights w(n, p);
      double total = 0.0;
      for (Site k = w.first(); k <= w.last(); ++k) total += w.weight(k);
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(w.upper_tail(w.first()) == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("threshold estimation on small lattices") {
  const auto one_d = estimate_threshold(LatticeGeometry({64}, Boundary::periodic), 1, {100, 50, 1});
  CHECK(one_d.p_c_hat > 0.9);

  const auto square = estimate_threshold(LatticeGeometry::cube(2, 32, Boundary::periodic), 2, {100, 50, 1});
  CHECK(square.p_c_hat > 0.55);
  CHECK(square.p_c_hat < 0.63);
  CHECK(square.stderr_of_estimate > 0.0);

  try {
    estimate_threshold(LatticeGeometry({1, 1}, Boundary::free), 1, {5, 5, 1});
    FAIL("no error for a geometry that never spans");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::no_crossing);
  }
}

TEST_CASE("spanning probability from first steps") {
  const std::vector<Site> steps{4, 4};
  CHECK(spanning_probability(steps, 4, 1.0) == doctest::Approx(1.0));
  CHECK(spanning_probability(steps, 4, 0.5) == doctest::Approx(0.0625));
  CHECK(crossing_point(steps, 4) == doctest::Approx(std::pow(0.5, 0.25)).epsilon(1e-9));
}
