#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "icsm/errors.hpp"

namespace icsm {

struct GeoPoint {
  double lon = 0.0;  // degrees
  double lat = 0.0;  // degrees
};

void validate_geo(const GeoPoint& p);

// n x n nonnegative spatial weights with zero diagonal. Immutable once built.
class WeightMatrix {
 public:
  WeightMatrix(int n, const std::vector<Eigen::Triplet<double>>& entries,
               bool row_normalized = false);

  static WeightMatrix zero(int n);

  int size() const { return n_; }
  bool row_normalized() const { return row_normalized_; }
  const Eigen::SparseMatrix<double, Eigen::RowMajor>& matrix() const { return w_; }

  double coeff(int i, int j) const { return w_.coeff(i, j); }
  double sum() const;               // S0
  int nonzero_rows() const;
  Eigen::VectorXd row_sums() const;
  Eigen::VectorXd lag(const Eigen::VectorXd& z) const;  // W z
  Eigen::MatrixXd dense() const { return Eigen::MatrixXd(w_); }
  std::vector<Eigen::Triplet<double>> triplets() const;

  // Principal submatrix on idx, re-normalized when this matrix is normalized.
  WeightMatrix subset(const std::vector<int>& idx) const;

 private:
  WeightMatrix() = default;

  int n_ = 0;
  bool row_normalized_ = false;
  Eigen::SparseMatrix<double, Eigen::RowMajor> w_;
};

// Lattice contiguity: rows x cols cells in row-major order, weight 1 for
// edge-sharing neighbors. Not normalized.
WeightMatrix rook(int rows, int cols);

// districts x members units; within-district weights 1/(members-1), so rows
// already sum to one.
WeightMatrix block(int districts, int members);

WeightMatrix row_normalize(const WeightMatrix& w);

double haversine_km(const GeoPoint& a, const GeoPoint& b);

// w_ij = 1/d_ij for the k nearest neighbors of i within distance d0 (both
// filters apply; distance ties at the k-th neighbor are all kept). Possibly
// asymmetric; not normalized.
WeightMatrix inverse_distance(const std::vector<GeoPoint>& coords, int k, double d0);

// I = (n/S0) * (z~' W z~) / (z~' z~) with z~ = z - mean(z).
double morans_i(const WeightMatrix& w, const Eigen::VectorXd& z);

enum class Tail { Greater, Less, TwoSided };

struct MoranResult {
  double statistic = 0.0;
  double p_value = 1.0;
  int n_permutations = 0;
};

// Permutation test, deterministic for a fixed seed (each permutation uses a
// counter-derived stream).
MoranResult morans_i_test(const WeightMatrix& w, const Eigen::VectorXd& z, int n_perm,
                          std::uint64_t seed, Tail tail = Tail::Greater);

struct WeightChoice {
  int k = 0;
  double d0 = 0.0;
  double moran = 0.0;
};

// For each k in 1..k_max, scan the distinct k-th nearest-neighbor distances as
// d0 candidates and keep the (k, d0) maximizing Moran's I of z on the
// row-normalized inverse-distance matrix. Ties prefer smaller k, then d0.
WeightChoice select_k_d0(const std::vector<GeoPoint>& coords, const Eigen::VectorXd& z,
                         int k_max);

}  // namespace icsm
