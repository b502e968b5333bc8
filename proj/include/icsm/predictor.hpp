#pragma once

#include <vector>

#include <Eigen/Dense>

#include "icsm/estimators.hpp"
#include "icsm/interval.hpp"
#include "icsm/weights.hpp"

namespace icsm {

// Train/test split of n units together with the weight matrix on all of them;
// out-of-sample prediction must see the full spatial structure.
struct SamplePartition {
  std::vector<int> train_idx;
  std::vector<int> test_idx;
  WeightMatrix w_full;
};

// Validates that train/test are disjoint and cover 0..n-1.
SamplePartition make_partition(std::vector<int> train_idx, std::vector<int> test_idx,
                               WeightMatrix w_full);

enum class PredictMethod { Tc, Bp };

const char* method_name(PredictMethod m);

struct PredictionResult {
  Eigen::VectorXd yc_hat;           // test units
  Eigen::VectorXd yr_hat;           // raw X beta_r, may be negative
  std::vector<Interval> intervals;  // radii clamped at zero
  std::vector<bool> clamped;
  PredictMethod method = PredictMethod::Tc;
};

// Reduced-form trend (I - rho W)^-1 X beta_c over all n units.
Eigen::VectorXd predict_tc(const FitResult& fit, const Eigen::MatrixXd& x_all,
                           const WeightMatrix& w_full);

// Best-linear conditional predictor on the test units:
//   Y_o = Y_o^TC - Q_o^-1 Q_os (Y_s - Y_s^TC),
//   Q = (1/sigma2) (I - rho (W' + W) + rho^2 W'W).
Eigen::VectorXd predict_bp(const FitResult& fit, const SamplePartition& part,
                           const Eigen::VectorXd& y_train_c, const Eigen::MatrixXd& x_all);

// Centers via TC or BP, radii via X beta_r, intervals assembled with negative
// radii clamped to zero and flagged.
PredictionResult predict_intervals(const FitResult& fit, const SamplePartition& part,
                                   const IntervalSample& full_sample, PredictMethod method);

struct PredictionMetrics {
  double rmse_l = 0.0;
  double rmse_u = 0.0;
  double ar = 0.0;
  int n_d = 0;
};

PredictionMetrics evaluate(const PredictionResult& pred, const std::vector<Interval>& truth);

}  // namespace icsm
