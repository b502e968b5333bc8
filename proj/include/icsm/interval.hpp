#pragma once

#include <vector>

#include <Eigen/Dense>

#include "icsm/errors.hpp"

namespace icsm {

// Closed real interval [lower, upper]. Construction rejects lower > upper
// instead of swapping; silent swaps hide upstream sign bugs.
class Interval {
 public:
  Interval(double lower, double upper) : lower_(lower), upper_(upper) {
    if (!(lower <= upper)) {
      raise(Errc::InvalidInterval, "lower bound exceeds upper bound");
    }
  }

  double lower() const { return lower_; }
  double upper() const { return upper_; }
  double width() const { return upper_ - lower_; }

  bool operator==(const Interval& other) const = default;

 private:
  double lower_;
  double upper_;
};

// Midpoint/semi-length view of an interval.
struct CenterRange {
  double center = 0.0;
  double radius = 0.0;
};

CenterRange to_center_range(const Interval& iv);

// Throws NegativeRadius; callers decide whether to clamp first.
Interval from_center_range(const CenterRange& cr);

struct OverlapMeasure {
  double intersection = 0.0;
  double unification = 0.0;  // |a| + |b| - intersection
};

OverlapMeasure overlap_measure(const Interval& a, const Interval& b);

// Mean intersection/union ratio. A pair of identical degenerate intervals
// scores 1; degenerate intervals at different points score 0.
double accuracy_rate(const std::vector<Interval>& truth, const std::vector<Interval>& pred);

struct BoundsRmse {
  double lower = 0.0;
  double upper = 0.0;
};

BoundsRmse rmse_bounds(const std::vector<Interval>& truth, const std::vector<Interval>& pred);

// Pairs with zero-measure intersection; touching endpoints count.
int count_disjoint(const std::vector<Interval>& truth, const std::vector<Interval>& pred);

// Paired (y, x) interval observations with cached center/range vectors.
class IntervalSample {
 public:
  IntervalSample(std::vector<Interval> y, std::vector<Interval> x);

  int size() const { return static_cast<int>(y_.size()); }

  const std::vector<Interval>& y() const { return y_; }
  const std::vector<Interval>& x() const { return x_; }

  const Eigen::VectorXd& yc() const { return yc_; }
  const Eigen::VectorXd& yr() const { return yr_; }
  const Eigen::VectorXd& xc() const { return xc_; }
  const Eigen::VectorXd& xr() const { return xr_; }

  IntervalSample subset(const std::vector<int>& idx) const;

 private:
  std::vector<Interval> y_;
  std::vector<Interval> x_;
  Eigen::VectorXd yc_, yr_, xc_, xr_;
};

}  // namespace icsm
