#include "icsm/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace icsm::qp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void validate(const Problem& p) {
  if (p.Z.rows() != p.Y.size()) {
    raise(Errc::DimensionMismatch, "Z has " + std::to_string(p.Z.rows()) + " rows, Y has " +
                                       std::to_string(p.Y.size()));
  }
  if (p.G.rows() != p.h.size()) {
    raise(Errc::DimensionMismatch, "G has " + std::to_string(p.G.rows()) + " rows, h has " +
                                       std::to_string(p.h.size()));
  }
  if (p.G.rows() > 0 && p.G.cols() != p.Z.cols()) {
    raise(Errc::DimensionMismatch, "G has " + std::to_string(p.G.cols()) + " columns, Z has " +
                                       std::to_string(p.Z.cols()));
  }
  if (p.Z.rows() < p.Z.cols() || p.Z.cols() == 0) {
    raise(Errc::RankDeficient, "Z must be tall with at least one column");
  }
}

}  // namespace

Solution solve(const Problem& p, const Options& opt) {
  validate(p);
  const int dim = static_cast<int>(p.Z.cols());
  const int m = static_cast<int>(p.G.rows());

  // H = 2 Z'Z, grad f(beta) = H beta - 2 Z'Y.
  const Eigen::MatrixXd hess = 2.0 * (p.Z.transpose() * p.Z);
  const Eigen::LLT<Eigen::MatrixXd> hess_llt(hess);
  if (hess_llt.info() != Eigen::Success || hess_llt.rcond() < 1e-10) {
    raise(Errc::RankDeficient, "Z'Z has reciprocal condition below 1e-10");
  }
  const Eigen::MatrixXd hess_inv =
      hess_llt.solve(Eigen::MatrixXd::Identity(dim, dim));

  Solution sol;
  sol.beta = hess_llt.solve(2.0 * (p.Z.transpose() * p.Y));
  sol.multipliers = Eigen::VectorXd::Zero(m);

  std::vector<int> active;               // insertion order
  Eigen::VectorXd lambda_active(dim);    // parallel to `active`
  const int max_iter = opt.max_iteration_factor * (dim + m);

  Eigen::VectorXd slack(m);
  const double zero_dir_tol =
      1e-13 * std::max(1.0, hess_inv.cwiseAbs().maxCoeff());

  auto pick_violated = [&](double& violation) {
    // Prefer warm-start candidates; otherwise take the most violated row.
    int chosen = -1;
    violation = 0.0;
    for (int idx : opt.warm_active) {
      if (idx < 0 || idx >= m) continue;
      if (std::find(active.begin(), active.end(), idx) != active.end()) continue;
      if (slack[idx] > opt.feasibility_tol && slack[idx] > violation) {
        violation = slack[idx];
        chosen = idx;
      }
    }
    if (chosen >= 0) return chosen;
    for (int i = 0; i < m; ++i) {
      if (std::find(active.begin(), active.end(), i) != active.end()) continue;
      if (slack[i] > opt.feasibility_tol && slack[i] > violation) {
        violation = slack[i];
        chosen = i;
      }
    }
    return chosen;
  };

  int iter = 0;
  while (true) {
    if (m > 0) slack = p.G * sol.beta - p.h;
    double violation = 0.0;
    const int incoming = (m > 0) ? pick_violated(violation) : -1;
    if (incoming < 0) break;  // primal feasible: done

    const Eigen::VectorXd normal = p.G.row(incoming).transpose();
    double lambda_plus = 0.0;
    double s = violation;

    while (true) {
      if (++iter > max_iter) {
        raise(Errc::MaxIterations, "active-set iteration cap " + std::to_string(max_iter) +
                                       " exceeded");
      }

      const int na = static_cast<int>(active.size());
      Eigen::VectorXd step_dual(na);
      Eigen::VectorXd step_primal;
      if (na == 0) {
        step_primal = hess_inv * normal;
      } else {
        Eigen::MatrixXd nmat(dim, na);
        for (int a = 0; a < na; ++a) nmat.col(a) = p.G.row(active[static_cast<std::size_t>(a)]).transpose();
        const Eigen::MatrixXd binv = hess_inv * nmat;                 // H^-1 N
        const Eigen::MatrixXd smat = nmat.transpose() * binv;         // N' H^-1 N
        const Eigen::VectorXd u = hess_inv * normal;
        step_dual = smat.ldlt().solve(nmat.transpose() * u);
        step_primal = u - binv * step_dual;
      }

      const double curvature = normal.dot(step_primal);  // = step' H step >= 0

      // Full step: drives the incoming constraint to equality.
      double t_full = kInf;
      if (curvature > zero_dir_tol * std::max(1.0, normal.squaredNorm())) {
        t_full = s / curvature;
      }

      // Partial step: first active multiplier driven to zero.
      double t_partial = kInf;
      int blocking = -1;
      for (int a = 0; a < na; ++a) {
        if (step_dual[a] > 0.0) {
          const double t = lambda_active[a] / step_dual[a];
          if (t < t_partial) {
            t_partial = t;
            blocking = a;
          }
        }
      }

      if (t_full == kInf && t_partial == kInf) {
        raise(Errc::Infeasible, "constraint " + std::to_string(incoming) +
                                    " cannot be satisfied (dual unbounded)");
      }

      const double t = std::min(t_full, t_partial);
      if (t_full < kInf) {
        sol.beta -= t * step_primal;
        s -= t * curvature;
      }
      for (int a = 0; a < na; ++a) lambda_active[a] -= t * step_dual[a];
      lambda_plus += t;

      if (t == t_full) {
        active.push_back(incoming);
        lambda_active[static_cast<int>(active.size()) - 1] = lambda_plus;
        break;
      }
      // Drop the blocking constraint and retry with the same incoming row.
      active.erase(active.begin() + blocking);
      for (int a = blocking; a + 1 < na; ++a) lambda_active[a] = lambda_active[a + 1];
    }
  }

  for (std::size_t a = 0; a < active.size(); ++a) {
    sol.multipliers[active[a]] = std::max(0.0, lambda_active[static_cast<int>(a)]);
  }
  sol.active_set = active;
  std::sort(sol.active_set.begin(), sol.active_set.end());
  sol.objective = (p.Y - p.Z * sol.beta).squaredNorm();
  sol.iterations = iter;
  return sol;
}

KktReport check_kkt(const Problem& p, const Solution& s) {
  validate(p);
  if (s.beta.size() != p.Z.cols() || s.multipliers.size() != p.G.rows()) {
    raise(Errc::DimensionMismatch, "solution shapes do not match the problem");
  }
  KktReport rep;
  Eigen::VectorXd grad = 2.0 * (p.Z.transpose() * (p.Z * s.beta - p.Y));
  if (p.G.rows() > 0) {
    const Eigen::VectorXd slack = p.h - p.G * s.beta;
    rep.primal_violation = (-slack).maxCoeff();
    rep.complementarity = (s.multipliers.array() * slack.array()).maxCoeff();
    grad += p.G.transpose() * s.multipliers;
  } else {
    rep.primal_violation = 0.0;
    rep.complementarity = 0.0;
  }
  const double scale = 1.0 + (2.0 * (p.Z.transpose() * p.Y)).cwiseAbs().maxCoeff();
  rep.stationarity = grad.cwiseAbs().maxCoeff() / scale;
  return rep;
}

}  // namespace icsm::qp
