#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <vector>

#include "icsm/rng.hpp"
#include "icsm/weights.hpp"

using namespace icsm;

namespace {

// Points on the equator so arc length is exactly R * delta_lon.
GeoPoint equator_point_at_km(double arc_km) {
  return {arc_km / 6371.0 * 180.0 / std::numbers::pi, 0.0};
}

int neighbor_count(const WeightMatrix& w, int i) {
  int count = 0;
  for (int j = 0; j < w.size(); ++j) {
    if (w.coeff(i, j) != 0.0) ++count;
  }
  return count;
}

}  // namespace

TEST_SUITE("weights") {

TEST_CASE("rook adjacency") {
  const WeightMatrix w12 = rook(1, 2);
  CHECK(w12.size() == 2);
  CHECK(w12.coeff(0, 1) == 1.0);
  CHECK(w12.coeff(1, 0) == 1.0);
  CHECK(w12.coeff(0, 0) == 0.0);

  const WeightMatrix w22 = rook(2, 2);
  for (int i = 0; i < 4; ++i) CHECK(neighbor_count(w22, i) == 2);

  const WeightMatrix w = rook(10, 12);
  CHECK(w.size() == 120);
  // Interior cell (5, 6) -> 4 neighbors; corner -> 2.
  CHECK(neighbor_count(w, 5 * 12 + 6) == 4);
  CHECK(neighbor_count(w, 0) == 2);
  int min_deg = 4, max_deg = 0;
  for (int i = 0; i < w.size(); ++i) {
    min_deg = std::min(min_deg, neighbor_count(w, i));
    max_deg = std::max(max_deg, neighbor_count(w, i));
  }
  CHECK(min_deg == 2);
  CHECK(max_deg == 4);

  CHECK_THROWS_AS(rook(0, 5), Error);
}

TEST_CASE("rook is symmetric before normalization") {
  const WeightMatrix w = rook(4, 5);
  for (int i = 0; i < w.size(); ++i) {
    for (int j = 0; j < w.size(); ++j) CHECK(w.coeff(i, j) == w.coeff(j, i));
  }
}

TEST_CASE("block weights") {
  const WeightMatrix b = block(1, 2);
  CHECK(b.dense() == Eigen::MatrixXd({{0.0, 1.0}, {1.0, 0.0}}));
  CHECK(b.row_normalized());

  const WeightMatrix b23 = block(2, 3);
  CHECK(b23.size() == 6);
  for (int i = 0; i < 6; ++i) {
    CHECK(neighbor_count(b23, i) == 2);
    CHECK(b23.row_sums()[i] == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(b23.coeff(0, 1) == doctest::Approx(0.5));
  CHECK(b23.coeff(0, 3) == 0.0);  // across districts

  CHECK(block(20, 6).size() == 120);
  CHECK_THROWS_AS(block(3, 1), Error);
}

TEST_CASE("row normalization") {
  const WeightMatrix b = block(2, 4);
  // Already normalized: returned unchanged.
  const WeightMatrix bn = row_normalize(b);
  CHECK(bn.dense() == b.dense());

  const WeightMatrix r = row_normalize(rook(2, 2));
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      if (rook(2, 2).coeff(i, j) != 0.0) CHECK(r.coeff(i, j) == doctest::Approx(0.5));
    }
  }

  // Isolated unit keeps its zero row.
  std::vector<Eigen::Triplet<double>> trip = {{0, 1, 2.0}, {1, 0, 1.0}};
  const WeightMatrix with_isolated(3, trip, false);
  const WeightMatrix norm = row_normalize(with_isolated);
  CHECK(norm.coeff(0, 1) == 1.0);
  CHECK(norm.row_sums()[2] == 0.0);
  CHECK(norm.nonzero_rows() == 2);
}

TEST_CASE("row-normalized lag is a sup-norm contraction") {
  Rng rng(5);
  const WeightMatrix w = row_normalize(rook(5, 5));
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd z(w.size());
    for (int i = 0; i < z.size(); ++i) z[i] = rng.uniform(-3, 3);
    const double bound = z.cwiseAbs().maxCoeff();
    CHECK(w.lag(z).cwiseAbs().maxCoeff() <= bound + 1e-12);
  }
}

TEST_CASE("weight matrix validation") {
  CHECK_THROWS_AS(WeightMatrix(2, {{0, 0, 1.0}}, false), Error);   // diagonal
  CHECK_THROWS_AS(WeightMatrix(2, {{0, 1, -1.0}}, false), Error);  // negative
  CHECK_THROWS_AS(WeightMatrix(2, {{0, 5, 1.0}}, false), Error);   // out of range
  CHECK_THROWS_AS(WeightMatrix(2, {{0, 1, 0.7}}, true), Error);    // bad normalized flag
}

TEST_CASE("subset re-normalizes") {
  const WeightMatrix w = row_normalize(rook(3, 3));
  const WeightMatrix sub = w.subset({0, 1, 2, 3, 4, 5});  // top two rows of the lattice
  CHECK(sub.size() == 6);
  CHECK(sub.row_normalized());
  const Eigen::VectorXd sums = sub.row_sums();
  for (int i = 0; i < 6; ++i) CHECK(sums[i] == doctest::Approx(1.0));
  // Unit 1 (middle of the top edge) kept neighbors 0, 2, 4 with equal shares.
  CHECK(sub.coeff(1, 0) == doctest::Approx(1.0 / 3));
  CHECK(sub.coeff(1, 4) == doctest::Approx(1.0 / 3));
}

TEST_CASE("haversine distances") {
  const GeoPoint origin{0, 0};
  CHECK(haversine_km(origin, origin) == 0.0);
  // Quarter meridian: pi R / 2.
  CHECK(haversine_km(origin, {0, 90}) ==
        doctest::Approx(std::numbers::pi * 6371.0 / 2).epsilon(1e-9));
  // Antipodal: pi R.
  CHECK(haversine_km(origin, {180, 0}) ==
        doctest::Approx(std::numbers::pi * 6371.0).epsilon(1e-9));
  CHECK_THROWS_AS(haversine_km(origin, {0, 91}), Error);
}

TEST_CASE("inverse distance on collinear points") {
  const std::vector<GeoPoint> pts = {equator_point_at_km(0), equator_point_at_km(100),
                                     equator_point_at_km(300)};
  const WeightMatrix w = inverse_distance(pts, 1, 500.0);
  CHECK(w.coeff(0, 1) == doctest::Approx(1.0 / 100).epsilon(1e-9));
  CHECK(w.coeff(1, 0) == doctest::Approx(1.0 / 100).epsilon(1e-9));
  CHECK(w.coeff(2, 1) == doctest::Approx(1.0 / 200).epsilon(1e-9));
  CHECK(w.coeff(0, 2) == 0.0);
  CHECK(w.coeff(1, 2) == 0.0);  // unit 1's nearest is 0

  // Threshold below every distance: empty matrix.
  const WeightMatrix none = inverse_distance(pts, 1, 50.0);
  CHECK(none.sum() == 0.0);

  // k = n-1 and huge threshold: dense off-diagonal.
  const WeightMatrix full = inverse_distance(pts, 2, 1e9);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (i != j) CHECK(full.coeff(i, j) > 0.0);
    }
  }

  CHECK_THROWS_AS(inverse_distance({pts[0], pts[0]}, 1, 100.0), Error);
}

TEST_CASE("inverse distance respects both filters") {
  Rng rng(17);
  std::vector<GeoPoint> pts;
  for (int i = 0; i < 25; ++i) pts.push_back({rng.uniform(-40, 40), rng.uniform(-40, 40)});
  const int k = 3;
  const double d0 = 2500.0;
  const WeightMatrix w = inverse_distance(pts, k, d0);
  for (int i = 0; i < w.size(); ++i) {
    std::vector<double> dists;
    for (int j = 0; j < w.size(); ++j) {
      if (j != i) dists.push_back(haversine_km(pts[static_cast<std::size_t>(i)],
                                               pts[static_cast<std::size_t>(j)]));
    }
    std::nth_element(dists.begin(), dists.begin() + (k - 1), dists.end());
    const double dk = dists[k - 1];
    for (int j = 0; j < w.size(); ++j) {
      const double wij = w.coeff(i, j);
      if (wij == 0.0) continue;
      const double dij = haversine_km(pts[static_cast<std::size_t>(i)],
                                      pts[static_cast<std::size_t>(j)]);
      CHECK(wij == doctest::Approx(1.0 / dij));
      CHECK(dij <= d0);
      CHECK(dij <= dk + 1e-12);
    }
  }
}

TEST_CASE("morans i on the two-unit block") {
  const WeightMatrix w = block(1, 2);
  Eigen::VectorXd z(2);
  z << 1.0, -1.0;
  CHECK(morans_i(w, z) == doctest::Approx(-1.0));
}

TEST_CASE("morans i input validation") {
  const WeightMatrix w = block(1, 2);
  Eigen::VectorXd constant = Eigen::VectorXd::Ones(2);
  CHECK_THROWS_AS(morans_i(w, constant), Error);

  Eigen::VectorXd z(2);
  z << 1.0, 2.0;
  CHECK_THROWS_AS(morans_i(WeightMatrix::zero(2), z), Error);  // S0 = 0
  CHECK_THROWS_AS(morans_i(w, Eigen::VectorXd::Ones(3)), Error);
}

TEST_CASE("morans i is affine invariant") {
  Rng rng(41);
  const WeightMatrix w = row_normalize(rook(4, 6));
  Eigen::VectorXd z(w.size());
  for (int i = 0; i < z.size(); ++i) z[i] = rng.uniform(-2, 2);
  const double base = morans_i(w, z);
  for (double a : {2.5, -1.75, 0.01}) {
    for (double b : {0.0, -7.0, 3.25}) {
      const Eigen::VectorXd az = (a * z).array() + b;
      CHECK(morans_i(w, az) == doctest::Approx(base).epsilon(1e-10));
    }
  }
}

TEST_CASE("permutation-null mean of morans i is -1/(n-1)") {
  Rng rng(43);
  const WeightMatrix w = row_normalize(rook(6, 6));
  const int n = w.size();
  Eigen::VectorXd z(n);
  for (int i = 0; i < n; ++i) z[i] = rng.uniform(0, 1);
  // Monte-Carlo average over random relabelings.
  std::vector<int> perm(static_cast<std::size_t>(n));
  double acc = 0.0;
  const int reps = 4000;
  for (int r = 0; r < reps; ++r) {
    for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    rng.shuffle(perm);
    Eigen::VectorXd zp(n);
    for (int i = 0; i < n; ++i) zp[i] = z[perm[static_cast<std::size_t>(i)]];
    acc += morans_i(w, zp);
  }
  const double expected = -1.0 / static_cast<double>(n - 1);
  CHECK(acc / reps == doctest::Approx(expected).epsilon(0.15));
}

TEST_CASE("permutation test flags clustered data") {
  const WeightMatrix w = block(6, 5);
  Eigen::VectorXd z(w.size());
  Rng rng(47);
  for (int d = 0; d < 6; ++d) {
    const double level = static_cast<double>(d);
    for (int m = 0; m < 5; ++m) z[d * 5 + m] = level + 0.01 * rng.uniform(-1, 1);
  }
  const MoranResult res = morans_i_test(w, z, 999, 2024);
  CHECK(res.statistic > 0.5);
  CHECK(res.p_value <= 0.01);
  CHECK(res.n_permutations == 999);

  // Same seed twice: identical result.
  const MoranResult res2 = morans_i_test(w, z, 999, 2024);
  CHECK(res.statistic == res2.statistic);
  CHECK(res.p_value == res2.p_value);
}

TEST_CASE("permutation test p-values are roughly uniform under the null") {
  const WeightMatrix w = row_normalize(rook(5, 6));
  Rng rng(53);
  int low = 0;
  double mean_p = 0.0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    Eigen::VectorXd z(w.size());
    for (int i = 0; i < z.size(); ++i) z[i] = rng.uniform(0, 1);
    const double p =
        morans_i_test(w, z, 99, 1000 + static_cast<std::uint64_t>(t)).p_value;
    mean_p += p;
    if (p <= 0.25) ++low;
  }
  mean_p /= trials;
  CHECK(mean_p > 0.40);
  CHECK(mean_p < 0.60);
  CHECK(low > trials * 0.15);
  CHECK(low < trials * 0.35);
}

TEST_CASE("single-permutation p-value") {
  const WeightMatrix w = block(1, 2);
  Eigen::VectorXd z(2);
  z << 0.0, 1.0;
  const MoranResult res = morans_i_test(w, z, 1, 7);
  CHECK((res.p_value == 0.5 || res.p_value == 1.0));
}

TEST_CASE("two-sided permutation test") {
  const WeightMatrix w = block(1, 2);
  Eigen::VectorXd z(2);
  z << 0.0, 1.0;
  const MoranResult two = morans_i_test(w, z, 99, 7, Tail::TwoSided);
  CHECK(two.p_value <= 1.0);
  CHECK(two.p_value >= 0.0);
  const MoranResult greater = morans_i_test(w, z, 99, 7, Tail::Greater);
  const MoranResult less = morans_i_test(w, z, 99, 7, Tail::Less);
  CHECK(two.p_value == doctest::Approx(std::min(1.0, 2 * std::min(greater.p_value, less.p_value))));
}

TEST_CASE("select_k_d0 prefers within-cluster links") {
  // Two tight clusters, far apart, with strongly clustered z.
  std::vector<GeoPoint> pts;
  Eigen::VectorXd z(10);
  for (int i = 0; i < 5; ++i) {
    pts.push_back({0.0 + 0.1 * i, 0.0});
    z[i] = 10.0 + 0.1 * i;
  }
  for (int i = 0; i < 5; ++i) {
    pts.push_back({40.0 + 0.1 * i, 30.0});
    z[5 + i] = -10.0 - 0.1 * i;
  }
  const WeightChoice choice = select_k_d0(pts, z, 4);
  const double inter_cluster = haversine_km(pts[0], pts[5]);
  CHECK(choice.d0 < inter_cluster);
  CHECK(choice.moran > 0.9);
}

TEST_CASE("select_k_d0 with a single candidate k") {
  std::vector<GeoPoint> pts = {{0, 0}, {1, 0}, {0, 2}};
  Eigen::VectorXd z(3);
  z << 1.0, 2.0, -1.0;
  const WeightChoice choice = select_k_d0(pts, z, 1);
  CHECK(choice.k == 1);
  // d0 equals one of the 1-NN distances.
  std::set<double> nn;
  for (int i = 0; i < 3; ++i) {
    double best = 1e30;
    for (int j = 0; j < 3; ++j) {
      if (i != j) best = std::min(best, haversine_km(pts[static_cast<std::size_t>(i)],
                                                     pts[static_cast<std::size_t>(j)]));
    }
    nn.insert(best);
  }
  CHECK(nn.count(choice.d0) == 1);
}

TEST_CASE("block spectral radius and lag operator") {
  const WeightMatrix b = block(3, 4);
  const Eigen::VectorXcd ev = Eigen::MatrixXd(b.dense()).eigenvalues();
  double rad = 0.0;
  for (int i = 0; i < ev.size(); ++i) rad = std::max(rad, std::abs(ev[i]));
  CHECK(rad == doctest::Approx(1.0));
  // I - rho W stays invertible inside the unit interval.
  for (double rho : {-0.99, -0.5, 0.5, 0.99}) {
    const Eigen::MatrixXd a =
        Eigen::MatrixXd::Identity(b.size(), b.size()) - rho * b.dense();
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
    CHECK(lu.rcond() > 1e-12);
  }
}

}  // TEST_SUITE
