#include "icsm/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace icsm {

namespace {

constexpr double kRcondGate = 1e-12;  // cond(A) > 1e12 counts as singular

struct LagFactor {
  Eigen::MatrixXd A;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu;
};

LagFactor factor_lag(const IntervalSample& sample, const WeightMatrix& w, double rho) {
  if (w.size() != sample.size()) {
    raise(Errc::ShapeMismatch, "weight matrix n=" + std::to_string(w.size()) +
                                   " does not match sample n=" + std::to_string(sample.size()));
  }
  LagFactor f;
  f.A = Eigen::MatrixXd::Identity(sample.size(), sample.size()) - rho * w.dense();
  f.lu.compute(f.A);
  if (!(f.lu.rcond() > kRcondGate)) {
    raise(Errc::SingularA, "I - rho W is singular at rho=" + std::to_string(rho));
  }
  return f;
}

// Builds the subproblem pieces shared by the public assemble() and the grid
// loop, without materializing the full inverse.
struct LeanBlocks {
  Eigen::MatrixXd M;  // A^-1 X
  Eigen::VectorXd Ayc;
  Eigen::MatrixXd G;
  Eigen::VectorXd h;
};

// rcond estimates can miss exactly singular matrices whose LU keeps a
// denormal pivot, so solves are verified by residual as well.
void require_accurate_solve(const Eigen::MatrixXd& A, const Eigen::MatrixXd& rhs,
                            const Eigen::MatrixXd& sol) {
  const double scale = std::max(1.0, rhs.cwiseAbs().maxCoeff());
  if (!sol.allFinite() || (A * sol - rhs).cwiseAbs().maxCoeff() > 1e-6 * scale) {
    raise(Errc::SingularA, "linear solve against I - rho W failed");
  }
}

LeanBlocks lean_blocks(const IntervalSample& sample, const Eigen::MatrixXd& X,
                       const LagFactor& f) {
  const int n = sample.size();
  LeanBlocks b;
  b.M = f.lu.solve(X);
  require_accurate_solve(f.A, X, b.M);
  b.Ayc = f.A * sample.yc();
  b.G = Eigen::MatrixXd::Zero(3 * n, 6);
  b.G.block(0, 0, n, 3) = -b.M;
  b.G.block(0, 3, n, 3) = -X;
  b.G.block(n, 0, n, 3) = b.M;
  b.G.block(n, 3, n, 3) = -X;
  b.G.block(2 * n, 3, n, 3) = -X;
  b.h.resize(3 * n);
  b.h.head(n) = sample.yr() - sample.yc();
  b.h.segment(n, n) = sample.yc() + sample.yr();
  b.h.tail(n).setZero();
  return b;
}

Eigen::MatrixXd stacked_design(const Eigen::MatrixXd& X) {
  const int n = static_cast<int>(X.rows());
  Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(2 * n, 6);
  Z.block(0, 0, n, 3) = X;
  Z.block(n, 3, n, 3) = X;
  return Z;
}

FitResult finalize(ModelKind model, const IntervalSample& sample, const Eigen::MatrixXd& X,
                   double rho, const Eigen::VectorXd& beta, double objective,
                   const Eigen::VectorXd& Ayc, std::vector<GridPoint> profile) {
  FitResult fit;
  fit.model = model;
  fit.rho = rho;
  fit.beta_c = beta.head(3);
  fit.beta_r = beta.tail(3);
  fit.objective = objective;
  fit.residuals_c = Ayc - X * fit.beta_c;
  fit.residuals_r = sample.yr() - X * fit.beta_r;
  const double n = static_cast<double>(sample.size());
  fit.sigma2_c = fit.residuals_c.squaredNorm() / n;
  fit.sigma2_r = fit.residuals_r.squaredNorm() / n;
  fit.grid_profile = std::move(profile);
  return fit;
}

bool better_point(double obj, double rho, double best_obj, double best_rho) {
  if (obj < best_obj) return true;
  if (obj > best_obj) return false;
  const double a = std::abs(rho);
  const double b = std::abs(best_rho);
  if (a != b) return a < b;
  return rho < best_rho;
}

FitResult fit_grid(ModelKind model, const IntervalSample& sample, const WeightMatrix& w,
                   const RhoGrid& grid, bool constrained) {
  const Eigen::MatrixXd X = design_matrix(sample);
  const Eigen::MatrixXd Z = stacked_design(X);
  const std::vector<double> rhos = grid.points();

  std::vector<GridPoint> profile;
  profile.reserve(rhos.size());

  bool have_best = false;
  double best_obj = 0.0;
  double best_rho = 0.0;
  Eigen::VectorXd best_beta;
  Eigen::VectorXd best_Ayc;

  // Unconstrained subproblems share the range-side regression.
  Eigen::LLT<Eigen::MatrixXd> xtx_llt;
  Eigen::Vector3d beta_r_ols = Eigen::Vector3d::Zero();
  double obj_r = 0.0;
  if (!constrained) {
    xtx_llt.compute(X.transpose() * X);
    if (xtx_llt.info() != Eigen::Success || xtx_llt.rcond() < 1e-10) {
      raise(Errc::RankDeficient, "X'X is singular: collinear covariates");
    }
    beta_r_ols = xtx_llt.solve(X.transpose() * sample.yr());
    obj_r = (sample.yr() - X * beta_r_ols).squaredNorm();
  }

  qp::Options qp_opt;
  for (double rho : rhos) {
    LagFactor f;
    try {
      f = factor_lag(sample, w, rho);
    } catch (const Error& e) {
      if (e.code() != Errc::SingularA) throw;
      profile.push_back({rho, std::numeric_limits<double>::quiet_NaN(), true});
      continue;
    }

    double obj = 0.0;
    Eigen::VectorXd beta(6);
    Eigen::VectorXd Ayc;
    if (constrained) {
      LeanBlocks b;
      try {
        b = lean_blocks(sample, X, f);
      } catch (const Error& e) {
        if (e.code() != Errc::SingularA) throw;
        profile.push_back({rho, std::numeric_limits<double>::quiet_NaN(), true});
        continue;
      }
      Ayc = b.Ayc;
      qp::Problem prob;
      prob.Z = Z;
      prob.Y.resize(2 * sample.size());
      prob.Y.head(sample.size()) = b.Ayc;
      prob.Y.tail(sample.size()) = sample.yr();
      prob.G = b.G;
      prob.h = b.h;
      const qp::Solution s = qp::solve(prob, qp_opt);
      qp_opt.warm_active = s.active_set;  // seed the neighboring grid point
      beta = s.beta;
      obj = s.objective;
    } else {
      Ayc = f.A * sample.yc();
      const Eigen::Vector3d beta_c = xtx_llt.solve(X.transpose() * Ayc);
      beta.head(3) = beta_c;
      beta.tail(3) = beta_r_ols;
      obj = (Ayc - X * beta_c).squaredNorm() + obj_r;
    }

    profile.push_back({rho, obj, false});
    if (!have_best || better_point(obj, rho, best_obj, best_rho)) {
      have_best = true;
      best_obj = obj;
      best_rho = rho;
      best_beta = beta;
      best_Ayc = Ayc;
    }
  }

  if (!have_best) {
    raise(Errc::NoFeasibleGridPoint, "every grid point was skipped");
  }
  return finalize(model, sample, X, best_rho, best_beta, best_obj, best_Ayc,
                  std::move(profile));
}

}  // namespace

std::vector<double> RhoGrid::points() const {
  if (!(step > 0.0) || !(hi >= lo)) {
    raise(Errc::DimensionMismatch, "grid needs step > 0 and hi >= lo");
  }
  const auto k_lo = static_cast<long long>(std::llround(lo / step));
  const auto k_hi = static_cast<long long>(std::llround(hi / step));
  std::vector<double> out;
  if (std::abs(k_lo * step - lo) < 1e-9 && std::abs(k_hi * step - hi) < 1e-9) {
    out.reserve(static_cast<std::size_t>(k_hi - k_lo + 1));
    for (long long k = k_lo; k <= k_hi; ++k) out.push_back(static_cast<double>(k) * step);
  } else {
    for (double v = lo; v <= hi + step * 1e-9; v += step) out.push_back(std::min(v, hi));
  }
  if (out.empty()) out.push_back(lo);
  return out;
}

const char* model_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::Icsm: return "icsm";
    case ModelKind::Icm: return "icm";
    case ModelKind::Ism: return "ism";
  }
  return "unknown";
}

ModelKind model_from_name(const std::string& name) {
  if (name == "icsm") return ModelKind::Icsm;
  if (name == "icm") return ModelKind::Icm;
  if (name == "ism") return ModelKind::Ism;
  raise(Errc::ParseError, "unknown model '" + name + "'");
}

Eigen::MatrixXd design_matrix(const Eigen::VectorXd& xc, const Eigen::VectorXd& xr) {
  Eigen::MatrixXd X(xc.size(), 3);
  X.col(0).setOnes();
  X.col(1) = xc;
  X.col(2) = xr;
  return X;
}

Eigen::MatrixXd design_matrix(const IntervalSample& sample) {
  return design_matrix(sample.xc(), sample.xr());
}

DesignBlocks assemble(const IntervalSample& sample, const WeightMatrix& w, double rho) {
  const LagFactor f = factor_lag(sample, w, rho);
  const Eigen::MatrixXd X = design_matrix(sample);
  const LeanBlocks b = lean_blocks(sample, X, f);

  DesignBlocks blocks;
  blocks.A = f.A;
  blocks.Ainv = f.lu.inverse();
  require_accurate_solve(f.A, Eigen::MatrixXd::Identity(sample.size(), sample.size()),
                         blocks.Ainv);
  blocks.X = X;
  blocks.Z = stacked_design(X);
  blocks.Y.resize(2 * sample.size());
  blocks.Y.head(sample.size()) = b.Ayc;
  blocks.Y.tail(sample.size()) = sample.yr();
  blocks.G = b.G;
  blocks.h = b.h;
  return blocks;
}

FitResult fit_icsm(const IntervalSample& sample, const WeightMatrix& w, const RhoGrid& grid) {
  return fit_grid(ModelKind::Icsm, sample, w, grid, true);
}

FitResult fit_icm(const IntervalSample& sample) {
  return fit_grid(ModelKind::Icm, sample, WeightMatrix::zero(sample.size()),
                  RhoGrid::single(0.0), true);
}

FitResult fit_ism(const IntervalSample& sample, const WeightMatrix& w, const RhoGrid& grid) {
  return fit_grid(ModelKind::Ism, sample, w, grid, false);
}

FittedIntervals fitted_intervals(const FitResult& fit, const IntervalSample& sample,
                                 const WeightMatrix& w) {
  const LagFactor f = factor_lag(sample, w, fit.rho);
  const Eigen::MatrixXd X = design_matrix(sample);

  FittedIntervals out;
  const Eigen::VectorXd mean_c = X * fit.beta_c;
  out.centers = f.lu.solve(mean_c);
  require_accurate_solve(f.A, mean_c, out.centers);
  out.radii = X * fit.beta_r;
  out.intervals.reserve(static_cast<std::size_t>(sample.size()));
  out.clamped.resize(static_cast<std::size_t>(sample.size()), false);
  for (int i = 0; i < sample.size(); ++i) {
    double r = out.radii[i];
    if (r < 0.0) {
      out.clamped[static_cast<std::size_t>(i)] = true;
      r = 0.0;
    }
    out.intervals.emplace_back(out.centers[i] - r, out.centers[i] + r);
  }
  return out;
}

}  // namespace icsm
