#include "icsm/predictor.hpp"

#include <algorithm>
#include <string>

namespace icsm {

namespace {

Eigen::VectorXd gather(const Eigen::VectorXd& v, const std::vector<int>& idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out[static_cast<Eigen::Index>(k)] = v[idx[k]];
  return out;
}

Eigen::MatrixXd gather_block(const Eigen::MatrixXd& q, const std::vector<int>& rows,
                             const std::vector<int>& cols) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = q(rows[i], cols[j]);
    }
  }
  return out;
}

}  // namespace

SamplePartition make_partition(std::vector<int> train_idx, std::vector<int> test_idx,
                               WeightMatrix w_full) {
  const int n = w_full.size();
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  auto mark = [&](const std::vector<int>& idx) {
    for (int i : idx) {
      if (i < 0 || i >= n) raise(Errc::DimensionMismatch, "partition index out of range");
      if (seen[static_cast<std::size_t>(i)]) {
        raise(Errc::DimensionMismatch, "partition indices overlap or repeat");
      }
      seen[static_cast<std::size_t>(i)] = 1;
    }
  };
  mark(train_idx);
  mark(test_idx);
  if (static_cast<int>(train_idx.size() + test_idx.size()) != n) {
    raise(Errc::DimensionMismatch, "partition must cover every unit exactly once");
  }
  if (train_idx.empty() || test_idx.empty()) {
    raise(Errc::DimensionMismatch, "both partition sides must be nonempty");
  }
  return {std::move(train_idx), std::move(test_idx), std::move(w_full)};
}

const char* method_name(PredictMethod m) {
  return m == PredictMethod::Tc ? "tc" : "bp";
}

Eigen::VectorXd predict_tc(const FitResult& fit, const Eigen::MatrixXd& x_all,
                           const WeightMatrix& w_full) {
  const int n = w_full.size();
  if (x_all.rows() != n || x_all.cols() != 3) {
    raise(Errc::ShapeMismatch, "covariate matrix must be n x 3 with intercept column");
  }
  const Eigen::MatrixXd A =
      Eigen::MatrixXd::Identity(n, n) - fit.rho * w_full.dense();
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  if (!(lu.rcond() > 1e-12)) {
    raise(Errc::SingularA, "I - rho W is singular at rho=" + std::to_string(fit.rho));
  }
  const Eigen::VectorXd mean = x_all * fit.beta_c;
  const Eigen::VectorXd trend = lu.solve(mean);
  const double scale = std::max(1.0, mean.cwiseAbs().maxCoeff());
  if (!trend.allFinite() || (A * trend - mean).cwiseAbs().maxCoeff() > 1e-6 * scale) {
    raise(Errc::SingularA, "reduced-form solve failed at rho=" + std::to_string(fit.rho));
  }
  return trend;
}

Eigen::VectorXd predict_bp(const FitResult& fit, const SamplePartition& part,
                           const Eigen::VectorXd& y_train_c, const Eigen::MatrixXd& x_all) {
  if (!(fit.sigma2_c > 0.0)) {
    raise(Errc::NonPositiveSigma2, "sigma2=" + std::to_string(fit.sigma2_c));
  }
  if (y_train_c.size() != static_cast<Eigen::Index>(part.train_idx.size())) {
    raise(Errc::ShapeMismatch, "training centers do not match the partition");
  }
  const Eigen::VectorXd trend = predict_tc(fit, x_all, part.w_full);

  const int n = part.w_full.size();
  const Eigen::MatrixXd wd = part.w_full.dense();
  const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n) - fit.rho * wd;
  const Eigen::MatrixXd Q = (A.transpose() * A) / fit.sigma2_c;

  const Eigen::MatrixXd q_o = gather_block(Q, part.test_idx, part.test_idx);
  const Eigen::MatrixXd q_os = gather_block(Q, part.test_idx, part.train_idx);
  const Eigen::VectorXd resid_s = y_train_c - gather(trend, part.train_idx);

  Eigen::LLT<Eigen::MatrixXd> llt(q_o);
  if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-14)) {
    raise(Errc::SingularQo, "test-block precision matrix is not positive definite");
  }
  return gather(trend, part.test_idx) - llt.solve(q_os * resid_s);
}

PredictionResult predict_intervals(const FitResult& fit, const SamplePartition& part,
                                   const IntervalSample& full_sample, PredictMethod method) {
  if (full_sample.size() != part.w_full.size()) {
    raise(Errc::ShapeMismatch, "sample and partition weight matrix disagree on n");
  }
  const Eigen::MatrixXd x_all = design_matrix(full_sample);

  PredictionResult out;
  out.method = method;
  if (method == PredictMethod::Bp) {
    const Eigen::VectorXd y_train_c = gather(full_sample.yc(), part.train_idx);
    out.yc_hat = predict_bp(fit, part, y_train_c, x_all);
  } else {
    out.yc_hat = gather(predict_tc(fit, x_all, part.w_full), part.test_idx);
  }

  const Eigen::VectorXd radii_all = x_all * fit.beta_r;
  out.yr_hat = gather(radii_all, part.test_idx);
  const auto n_test = static_cast<std::size_t>(part.test_idx.size());
  out.intervals.reserve(n_test);
  out.clamped.resize(n_test, false);
  for (std::size_t i = 0; i < n_test; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    double r = out.yr_hat[k];
    if (r < 0.0) {
      out.clamped[i] = true;
      r = 0.0;
    }
    out.intervals.emplace_back(out.yc_hat[k] - r, out.yc_hat[k] + r);
  }
  return out;
}

PredictionMetrics evaluate(const PredictionResult& pred, const std::vector<Interval>& truth) {
  const BoundsRmse rmse = rmse_bounds(truth, pred.intervals);
  return {rmse.lower, rmse.upper, accuracy_rate(truth, pred.intervals),
          count_disjoint(truth, pred.intervals)};
}

}  // namespace icsm
