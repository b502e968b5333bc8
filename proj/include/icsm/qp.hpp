#pragma once

#include <vector>

#include <Eigen/Dense>

#include "icsm/errors.hpp"

namespace icsm::qp {

// min ||Y - Z beta||^2  subject to  G beta <= h.
// Z must have full column rank; the feasible region may be empty (reported).
struct Problem {
  Eigen::MatrixXd Z;
  Eigen::VectorXd Y;
  Eigen::MatrixXd G;  // may have zero rows
  Eigen::VectorXd h;
};

struct Options {
  double feasibility_tol = 1e-8;
  double stationarity_tol = 1e-6;  // relative
  int max_iteration_factor = 100;  // cap = factor * (p + #constraints)
  // Constraint indices whose activity is likely (e.g. the active set of a
  // neighboring grid point); they are checked first when picking the next
  // violated constraint.
  std::vector<int> warm_active;
};

struct Solution {
  Eigen::VectorXd beta;
  double objective = 0.0;
  std::vector<int> active_set;     // ascending constraint indices
  Eigen::VectorXd multipliers;     // length = #constraints, zero off the active set
  int iterations = 0;
};

// Dual active-set solve. Starts from the unconstrained minimizer and adds
// violated constraints one at a time, so no feasible start is needed; the
// returned multipliers certify the KKT conditions.
Solution solve(const Problem& p, const Options& opt = {});

struct KktReport {
  double primal_violation = 0.0;    // max(G beta - h), negative when interior
  double stationarity = 0.0;        // ||2Z'(Z beta - Y) + G' lambda||_inf, relative
  double complementarity = 0.0;     // max lambda_i * (h - G beta)_i
};

KktReport check_kkt(const Problem& p, const Solution& s);

}  // namespace icsm::qp
