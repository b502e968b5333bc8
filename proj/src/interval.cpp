#include "icsm/interval.hpp"

#include <algorithm>
#include <cmath>

namespace icsm {

namespace {

void require_same_length(const std::vector<Interval>& truth,
                         const std::vector<Interval>& pred) {
  if (truth.size() != pred.size()) {
    raise(Errc::LengthMismatch,
          "truth has " + std::to_string(truth.size()) + " intervals, prediction has " +
              std::to_string(pred.size()));
  }
  if (truth.empty()) {
    raise(Errc::LengthMismatch, "metrics need at least one interval pair");
  }
}

}  // namespace

CenterRange to_center_range(const Interval& iv) {
  return {(iv.lower() + iv.upper()) / 2.0, (iv.upper() - iv.lower()) / 2.0};
}

Interval from_center_range(const CenterRange& cr) {
  if (cr.radius < 0.0) {
    raise(Errc::NegativeRadius, "radius " + std::to_string(cr.radius) + " is negative");
  }
  return {cr.center - cr.radius, cr.center + cr.radius};
}

OverlapMeasure overlap_measure(const Interval& a, const Interval& b) {
  const double inter =
      std::max(0.0, std::min(a.upper(), b.upper()) - std::max(a.lower(), b.lower()));
  return {inter, a.width() + b.width() - inter};
}

double accuracy_rate(const std::vector<Interval>& truth, const std::vector<Interval>& pred) {
  require_same_length(truth, pred);
  double sum = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const OverlapMeasure m = overlap_measure(truth[i], pred[i]);
    if (m.unification > 0.0) {
      sum += m.intersection / m.unification;
    } else if (truth[i] == pred[i]) {
      sum += 1.0;  // both degenerate at the same point: perfect prediction
    }
  }
  return sum / static_cast<double>(truth.size());
}

BoundsRmse rmse_bounds(const std::vector<Interval>& truth, const std::vector<Interval>& pred) {
  require_same_length(truth, pred);
  double sl = 0.0;
  double su = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double dl = truth[i].lower() - pred[i].lower();
    const double du = truth[i].upper() - pred[i].upper();
    sl += dl * dl;
    su += du * du;
  }
  const double n = static_cast<double>(truth.size());
  return {std::sqrt(sl / n), std::sqrt(su / n)};
}

int count_disjoint(const std::vector<Interval>& truth, const std::vector<Interval>& pred) {
  require_same_length(truth, pred);
  int n_d = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (overlap_measure(truth[i], pred[i]).intersection == 0.0) ++n_d;
  }
  return n_d;
}

IntervalSample::IntervalSample(std::vector<Interval> y, std::vector<Interval> x)
    : y_(std::move(y)), x_(std::move(x)) {
  if (y_.size() != x_.size()) {
    raise(Errc::LengthMismatch, "y has " + std::to_string(y_.size()) + " intervals, x has " +
                                    std::to_string(x_.size()));
  }
  if (y_.empty()) {
    raise(Errc::LengthMismatch, "sample must contain at least one observation");
  }
  const int n = static_cast<int>(y_.size());
  yc_.resize(n);
  yr_.resize(n);
  xc_.resize(n);
  xr_.resize(n);
  for (int i = 0; i < n; ++i) {
    const CenterRange cy = to_center_range(y_[i]);
    const CenterRange cx = to_center_range(x_[i]);
    yc_[i] = cy.center;
    yr_[i] = cy.radius;
    xc_[i] = cx.center;
    xr_[i] = cx.radius;
  }
}

IntervalSample IntervalSample::subset(const std::vector<int>& idx) const {
  std::vector<Interval> ys;
  std::vector<Interval> xs;
  ys.reserve(idx.size());
  xs.reserve(idx.size());
  for (int i : idx) {
    if (i < 0 || i >= size()) {
      raise(Errc::DimensionMismatch, "subset index " + std::to_string(i) + " out of range");
    }
    ys.push_back(y_[static_cast<std::size_t>(i)]);
    xs.push_back(x_[static_cast<std::size_t>(i)]);
  }
  return IntervalSample(std::move(ys), std::move(xs));
}

}  // namespace icsm
