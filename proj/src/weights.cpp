#include "icsm/weights.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <string>

#include "icsm/rng.hpp"

namespace icsm {

namespace {

constexpr double kEarthRadiusKm = 6371.0;
constexpr double kRowSumTol = 1e-10;
constexpr std::uint64_t kPermTag = 0x7065726dull;  // stream tag for permutations

double moran_numerator(const Eigen::SparseMatrix<double, Eigen::RowMajor>& w,
                       const Eigen::VectorXd& zc) {
  double acc = 0.0;
  for (int i = 0; i < w.outerSize(); ++i) {
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(w, i); it; ++it) {
      acc += it.value() * zc[it.row()] * zc[it.col()];
    }
  }
  return acc;
}

}  // namespace

void validate_geo(const GeoPoint& p) {
  if (!(p.lat >= -90.0 && p.lat <= 90.0) || !(p.lon >= -180.0 && p.lon <= 180.0)) {
    raise(Errc::InvalidGeoPoint, "lon=" + std::to_string(p.lon) + " lat=" + std::to_string(p.lat));
  }
}

WeightMatrix::WeightMatrix(int n, const std::vector<Eigen::Triplet<double>>& entries,
                           bool row_normalized)
    : n_(n), row_normalized_(row_normalized) {
  if (n <= 0) raise(Errc::ZeroDimension, "weight matrix needs n >= 1");
  for (const auto& t : entries) {
    if (t.row() < 0 || t.row() >= n || t.col() < 0 || t.col() >= n) {
      raise(Errc::DimensionMismatch, "weight entry out of range");
    }
    if (t.row() == t.col() && t.value() != 0.0) {
      raise(Errc::DimensionMismatch, "diagonal weights must be zero");
    }
    if (t.value() < 0.0) {
      raise(Errc::DimensionMismatch, "weights must be nonnegative");
    }
  }
  w_.resize(n, n);
  w_.setFromTriplets(entries.begin(), entries.end());
  w_.prune(0.0);
  w_.makeCompressed();
  if (row_normalized_) {
    const Eigen::VectorXd sums = row_sums();
    for (int i = 0; i < n_; ++i) {
      if (sums[i] != 0.0 && std::abs(sums[i] - 1.0) > kRowSumTol) {
        raise(Errc::DimensionMismatch,
              "row " + std::to_string(i) + " sums to " + std::to_string(sums[i]) +
                  " but matrix is marked normalized");
      }
    }
  }
}

WeightMatrix WeightMatrix::zero(int n) { return WeightMatrix(n, {}, false); }

double WeightMatrix::sum() const {
  double s = 0.0;
  for (int i = 0; i < w_.outerSize(); ++i) {
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(w_, i); it; ++it) {
      s += it.value();
    }
  }
  return s;
}

Eigen::VectorXd WeightMatrix::row_sums() const {
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(n_);
  for (int i = 0; i < w_.outerSize(); ++i) {
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(w_, i); it; ++it) {
      sums[it.row()] += it.value();
    }
  }
  return sums;
}

int WeightMatrix::nonzero_rows() const {
  const Eigen::VectorXd sums = row_sums();
  return static_cast<int>((sums.array() != 0.0).count());
}

Eigen::VectorXd WeightMatrix::lag(const Eigen::VectorXd& z) const {
  if (z.size() != n_) {
    raise(Errc::DimensionMismatch,
          "vector of length " + std::to_string(z.size()) + " against n=" + std::to_string(n_));
  }
  return w_ * z;
}

std::vector<Eigen::Triplet<double>> WeightMatrix::triplets() const {
  std::vector<Eigen::Triplet<double>> out;
  out.reserve(static_cast<std::size_t>(w_.nonZeros()));
  for (int i = 0; i < w_.outerSize(); ++i) {
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(w_, i); it; ++it) {
      out.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    }
  }
  return out;
}

WeightMatrix WeightMatrix::subset(const std::vector<int>& idx) const {
  std::vector<int> pos(static_cast<std::size_t>(n_), -1);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const int i = idx[k];
    if (i < 0 || i >= n_) raise(Errc::DimensionMismatch, "subset index out of range");
    if (pos[static_cast<std::size_t>(i)] != -1) {
      raise(Errc::DimensionMismatch, "duplicate subset index");
    }
    pos[static_cast<std::size_t>(i)] = static_cast<int>(k);
  }
  std::vector<Eigen::Triplet<double>> kept;
  for (int i = 0; i < w_.outerSize(); ++i) {
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(w_, i); it; ++it) {
      const int ri = pos[static_cast<std::size_t>(it.row())];
      const int ci = pos[static_cast<std::size_t>(it.col())];
      if (ri >= 0 && ci >= 0) kept.emplace_back(ri, ci, it.value());
    }
  }
  WeightMatrix sub(static_cast<int>(idx.size()), kept, false);
  return row_normalized_ ? row_normalize(sub) : sub;
}

WeightMatrix rook(int rows, int cols) {
  if (rows < 1 || cols < 1) raise(Errc::ZeroDimension, "rook lattice needs rows, cols >= 1");
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(4) * static_cast<std::size_t>(rows) *
               static_cast<std::size_t>(cols));
  auto at = [cols](int r, int c) { return r * cols + c; };
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const int i = at(r, c);
      if (r + 1 < rows) {
        trip.emplace_back(i, at(r + 1, c), 1.0);
        trip.emplace_back(at(r + 1, c), i, 1.0);
      }
      if (c + 1 < cols) {
        trip.emplace_back(i, at(r, c + 1), 1.0);
        trip.emplace_back(at(r, c + 1), i, 1.0);
      }
    }
  }
  return WeightMatrix(rows * cols, trip, false);
}

WeightMatrix block(int districts, int members) {
  if (districts < 1) raise(Errc::ZeroDimension, "block matrix needs districts >= 1");
  if (members < 2) raise(Errc::DegenerateBlock, "block matrix needs members >= 2");
  const double w = 1.0 / static_cast<double>(members - 1);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(districts) * static_cast<std::size_t>(members) *
               static_cast<std::size_t>(members - 1));
  for (int d = 0; d < districts; ++d) {
    const int base = d * members;
    for (int i = 0; i < members; ++i) {
      for (int j = 0; j < members; ++j) {
        if (i != j) trip.emplace_back(base + i, base + j, w);
      }
    }
  }
  return WeightMatrix(districts * members, trip, true);
}

WeightMatrix row_normalize(const WeightMatrix& w) {
  if (w.row_normalized()) return w;
  const Eigen::VectorXd sums = w.row_sums();
  std::vector<Eigen::Triplet<double>> trip = w.triplets();
  for (auto& t : trip) {
    t = Eigen::Triplet<double>(t.row(), t.col(), t.value() / sums[t.row()]);
  }
  return WeightMatrix(w.size(), trip, true);
}

double haversine_km(const GeoPoint& a, const GeoPoint& b) {
  validate_geo(a);
  validate_geo(b);
  const double rad = std::numbers::pi / 180.0;
  const double phi1 = a.lat * rad;
  const double phi2 = b.lat * rad;
  const double dphi = (b.lat - a.lat) * rad;
  const double dlam = (b.lon - a.lon) * rad;
  const double s = std::sin(dphi / 2.0);
  const double t = std::sin(dlam / 2.0);
  const double h = s * s + std::cos(phi1) * std::cos(phi2) * t * t;
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

namespace {

Eigen::MatrixXd pairwise_distances(const std::vector<GeoPoint>& coords) {
  const int n = static_cast<int>(coords.size());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double dist = haversine_km(coords[static_cast<std::size_t>(i)],
                                       coords[static_cast<std::size_t>(j)]);
      if (dist == 0.0) {
        raise(Errc::DuplicateCoordinates,
              "units " + std::to_string(i) + " and " + std::to_string(j) +
                  " share a location");
      }
      d(i, j) = dist;
      d(j, i) = dist;
    }
  }
  return d;
}

// k-th smallest distance from unit i to the others (ties share the rank).
double kth_neighbor_distance(const Eigen::MatrixXd& d, int i, int k) {
  std::vector<double> row;
  row.reserve(static_cast<std::size_t>(d.rows()) - 1);
  for (int j = 0; j < d.rows(); ++j) {
    if (j != i) row.push_back(d(i, j));
  }
  std::nth_element(row.begin(), row.begin() + (k - 1), row.end());
  return row[static_cast<std::size_t>(k - 1)];
}

WeightMatrix inverse_distance_from(const Eigen::MatrixXd& d, int k, double d0) {
  const int n = static_cast<int>(d.rows());
  std::vector<Eigen::Triplet<double>> trip;
  for (int i = 0; i < n; ++i) {
    const double dk = kth_neighbor_distance(d, i, k);
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      if (d(i, j) <= dk && d(i, j) <= d0) trip.emplace_back(i, j, 1.0 / d(i, j));
    }
  }
  return WeightMatrix(n, trip, false);
}

}  // namespace

WeightMatrix inverse_distance(const std::vector<GeoPoint>& coords, int k, double d0) {
  const int n = static_cast<int>(coords.size());
  if (n < 2) raise(Errc::DimensionMismatch, "inverse-distance weights need n >= 2");
  if (k < 1) raise(Errc::DimensionMismatch, "neighbor count k must be >= 1");
  if (!(d0 > 0.0)) raise(Errc::DimensionMismatch, "threshold d0 must be positive");
  const Eigen::MatrixXd d = pairwise_distances(coords);
  return inverse_distance_from(d, std::min(k, n - 1), d0);
}

double morans_i(const WeightMatrix& w, const Eigen::VectorXd& z) {
  if (z.size() != w.size()) {
    raise(Errc::DimensionMismatch, "z length " + std::to_string(z.size()) +
                                       " does not match n=" + std::to_string(w.size()));
  }
  if (z.maxCoeff() == z.minCoeff()) {
    raise(Errc::ConstantVector, "Moran's I is undefined for a constant vector");
  }
  const double s0 = w.sum();
  if (s0 <= 0.0) raise(Errc::EmptyWeights, "weight matrix has no nonzero entries");
  const Eigen::VectorXd zc = z.array() - z.mean();
  const double denom = zc.squaredNorm();
  return (static_cast<double>(w.size()) / s0) * moran_numerator(w.matrix(), zc) / denom;
}

MoranResult morans_i_test(const WeightMatrix& w, const Eigen::VectorXd& z, int n_perm,
                          std::uint64_t seed, Tail tail) {
  if (n_perm < 1) raise(Errc::DimensionMismatch, "n_perm must be >= 1");
  const double observed = morans_i(w, z);

  const int n = w.size();
  const Eigen::VectorXd zc = z.array() - z.mean();
  const double scale = (static_cast<double>(n) / w.sum()) / zc.squaredNorm();

  std::vector<int> perm(static_cast<std::size_t>(n));
  Eigen::VectorXd zp(n);
  int count_ge = 0;
  int count_le = 0;
  for (int p = 0; p < n_perm; ++p) {
    for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    Rng rng = Rng::derive(seed, {kPermTag, static_cast<std::uint64_t>(p)});
    rng.shuffle(perm);
    for (int i = 0; i < n; ++i) zp[i] = zc[perm[static_cast<std::size_t>(i)]];
    const double stat = scale * moran_numerator(w.matrix(), zp);
    if (stat >= observed) ++count_ge;
    if (stat <= observed) ++count_le;
  }

  const double denom = 1.0 + static_cast<double>(n_perm);
  const double p_greater = (1.0 + count_ge) / denom;
  const double p_less = (1.0 + count_le) / denom;
  double p = p_greater;
  if (tail == Tail::Less) p = p_less;
  if (tail == Tail::TwoSided) p = std::min(1.0, 2.0 * std::min(p_greater, p_less));
  return {observed, p, n_perm};
}

WeightChoice select_k_d0(const std::vector<GeoPoint>& coords, const Eigen::VectorXd& z,
                         int k_max) {
  const int n = static_cast<int>(coords.size());
  if (n < 3) raise(Errc::DimensionMismatch, "selection needs n >= 3");
  if (k_max < 1) raise(Errc::DimensionMismatch, "k_max must be >= 1");
  const Eigen::MatrixXd d = pairwise_distances(coords);

  bool found = false;
  WeightChoice best;
  for (int k = 1; k <= std::min(k_max, n - 1); ++k) {
    std::set<double> candidates;
    for (int i = 0; i < n; ++i) candidates.insert(kth_neighbor_distance(d, i, k));
    for (double d0 : candidates) {
      const WeightMatrix w = row_normalize(inverse_distance_from(d, k, d0));
      const double stat = morans_i(w, z);
      // Scanning k then d0 in ascending order makes strict improvement
      // implement the (smaller k, smaller d0) tie-break.
      if (!found || stat > best.moran) {
        best = {k, d0, stat};
        found = true;
      }
    }
  }
  if (!found) raise(Errc::EmptyWeights, "no candidate weight matrix");
  return best;
}

}  // namespace icsm
