#pragma once

#include <vector>

#include <Eigen/Dense>

#include "icsm/interval.hpp"
#include "icsm/qp.hpp"
#include "icsm/weights.hpp"

namespace icsm {

// Search grid for the spatial lag parameter. Points are generated as integer
// multiples of `step` so that values like 0 and -0.5 land exactly.
struct RhoGrid {
  double lo = -1.0;
  double hi = 1.0;
  double step = 0.01;

  std::vector<double> points() const;
  static RhoGrid single(double rho) { return {rho, rho, 1.0}; }
};

enum class ModelKind { Icsm, Icm, Ism };

const char* model_name(ModelKind kind);
ModelKind model_from_name(const std::string& name);

struct GridPoint {
  double rho = 0.0;
  double objective = 0.0;
  bool skipped = false;  // (I - rho W) numerically singular
};

// The matrices of one grid-point subproblem:
//   X = [1 xc xr],  Z = blkdiag(X, X),  Y = [A yc; yr],
//   G = [[-A^-1 X, -X], [A^-1 X, -X], [0, -X]],  h = [yr - yc; yc + yr; 0].
struct DesignBlocks {
  Eigen::MatrixXd A;
  Eigen::MatrixXd Ainv;
  Eigen::MatrixXd X;
  Eigen::MatrixXd Z;
  Eigen::VectorXd Y;
  Eigen::MatrixXd G;
  Eigen::VectorXd h;
};

DesignBlocks assemble(const IntervalSample& sample, const WeightMatrix& w, double rho);

struct FitResult {
  ModelKind model = ModelKind::Icm;
  double rho = 0.0;
  Eigen::Vector3d beta_c = Eigen::Vector3d::Zero();  // (intercept, xc, xr)
  Eigen::Vector3d beta_r = Eigen::Vector3d::Zero();
  double objective = 0.0;
  double sigma2_c = 0.0;
  double sigma2_r = 0.0;
  Eigen::VectorXd residuals_c;  // A yc - X beta_c
  Eigen::VectorXd residuals_r;  // yr - X beta_r
  std::vector<GridPoint> grid_profile;
};

// Grid search over rho with the constrained least-squares subproblem at each
// point; ties prefer smaller |rho|, then smaller rho.
FitResult fit_icsm(const IntervalSample& sample, const WeightMatrix& w,
                   const RhoGrid& grid = {});

// The rho = 0 special case; no weight matrix enters.
FitResult fit_icm(const IntervalSample& sample);

// Same grid search with unconstrained least squares at each point.
FitResult fit_ism(const IntervalSample& sample, const WeightMatrix& w,
                  const RhoGrid& grid = {});

struct FittedIntervals {
  Eigen::VectorXd centers;        // A^-1 X beta_c
  Eigen::VectorXd radii;          // X beta_r, possibly negative under ISM
  std::vector<Interval> intervals;  // assembled with radii clamped at zero
  std::vector<bool> clamped;
};

FittedIntervals fitted_intervals(const FitResult& fit, const IntervalSample& sample,
                                 const WeightMatrix& w);

// [1 xc xr] design used by all three models.
Eigen::MatrixXd design_matrix(const IntervalSample& sample);
Eigen::MatrixXd design_matrix(const Eigen::VectorXd& xc, const Eigen::VectorXd& xr);

}  // namespace icsm
