#include <doctest.h>

#include <cmath>
#include <vector>

#include "icsm/interval.hpp"
#include "icsm/rng.hpp"

using namespace icsm;

TEST_SUITE("interval") {

TEST_CASE("center-range conversion") {
  auto cr = to_center_range(Interval(2, 6));
  CHECK(cr.center == 4.0);
  CHECK(cr.radius == 2.0);

  cr = to_center_range(Interval(5, 5));
  CHECK(cr.center == 5.0);
  CHECK(cr.radius == 0.0);

  cr = to_center_range(Interval(-3, 1));
  CHECK(cr.center == -1.0);
  CHECK(cr.radius == 2.0);

  CHECK(from_center_range({4, 2}) == Interval(2, 6));
  CHECK(from_center_range({0, 0}) == Interval(0, 0));
  CHECK(from_center_range({-1, 2}) == Interval(-3, 1));
}

TEST_CASE("invalid construction") {
  CHECK_THROWS_AS(Interval(1.0, 0.0), Error);
  CHECK_THROWS_AS(from_center_range({0.0, -0.1}), Error);
  try {
    from_center_range({0.0, -0.1});
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NegativeRadius);
  }
}

TEST_CASE("round trip within tolerance") {
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    const double lo = rng.uniform(-1e3, 1e3);
    const double hi = lo + rng.uniform(0.0, 1e3);
    const Interval iv(lo, hi);
    const Interval back = from_center_range(to_center_range(iv));
    const double scale = std::max({1.0, std::abs(lo), std::abs(hi)});
    CHECK(std::abs(back.lower() - iv.lower()) <= 1e-12 * scale);
    CHECK(std::abs(back.upper() - iv.upper()) <= 1e-12 * scale);
  }
}

TEST_CASE("overlap measure") {
  auto m = overlap_measure(Interval(0, 4), Interval(2, 6));
  CHECK(m.intersection == 2.0);
  CHECK(m.unification == 6.0);

  m = overlap_measure(Interval(0, 1), Interval(2, 3));
  CHECK(m.intersection == 0.0);
  CHECK(m.unification == 2.0);

  m = overlap_measure(Interval(1, 3), Interval(1, 3));
  CHECK(m.intersection == 2.0);
  CHECK(m.unification == 2.0);
}

TEST_CASE("overlap identities on random pairs") {
  Rng rng(11);
  for (int i = 0; i < 500; ++i) {
    const double a0 = rng.uniform(-10, 10);
    const Interval a(a0, a0 + rng.uniform(0, 5));
    const double b0 = rng.uniform(-10, 10);
    const Interval b(b0, b0 + rng.uniform(0, 5));
    const auto m = overlap_measure(a, b);
    CHECK(m.intersection <= std::min(a.width(), b.width()) + 1e-12);
    CHECK(m.unification >= std::max(a.width(), b.width()) - 1e-12);
    CHECK(m.intersection + m.unification == doctest::Approx(a.width() + b.width()));
  }
}

TEST_CASE("accuracy rate") {
  const std::vector<Interval> t1 = {{0, 4}, {1, 2}};
  CHECK(accuracy_rate(t1, t1) == 1.0);

  CHECK(accuracy_rate({Interval(0, 4)}, {Interval(2, 6)}) == doctest::Approx(2.0 / 6.0));

  const std::vector<Interval> t2 = {{0, 1}, {0, 2}};
  const std::vector<Interval> p2 = {{2, 3}, {0, 2}};
  CHECK(accuracy_rate(t2, p2) == doctest::Approx(0.5));
}

TEST_CASE("accuracy rate degenerate pairs") {
  CHECK(accuracy_rate({Interval(3, 3)}, {Interval(3, 3)}) == 1.0);
  CHECK(accuracy_rate({Interval(3, 3)}, {Interval(4, 4)}) == 0.0);
}

TEST_CASE("rmse of bounds") {
  const std::vector<Interval> t = {{0, 2}};
  auto r = rmse_bounds(t, t);
  CHECK(r.lower == 0.0);
  CHECK(r.upper == 0.0);

  r = rmse_bounds({Interval(0, 2)}, {Interval(1, 4)});
  CHECK(r.lower == doctest::Approx(1.0));
  CHECK(r.upper == doctest::Approx(2.0));

  r = rmse_bounds({Interval(0, 2), Interval(0, 2)}, {Interval(3, 2 + 3), Interval(-3, 2 - 3)});
  CHECK(r.lower == doctest::Approx(3.0));
  CHECK(r.upper == doctest::Approx(3.0));
}

TEST_CASE("rmse with symmetric errors") {
  // Lower bounds off by -3 and +3: the signed mean cancels, the RMSE does not.
  const auto r = rmse_bounds({Interval(0, 2), Interval(0, 2)},
                             {Interval(-3, 2), Interval(3, 4)});
  CHECK(r.lower == doctest::Approx(3.0));
  CHECK(r.upper == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("count disjoint") {
  const std::vector<Interval> t = {{0, 1}, {0, 1}};
  CHECK(count_disjoint(t, t) == 0);
  CHECK(count_disjoint(t, {Interval(2, 3), Interval(0.5, 2)}) == 1);
  CHECK(count_disjoint({Interval(0, 1)}, {Interval(1, 2)}) == 1);  // touching endpoints
}

TEST_CASE("metric length mismatch") {
  CHECK_THROWS_AS(accuracy_rate({Interval(0, 1)}, {}), Error);
  CHECK_THROWS_AS(rmse_bounds({Interval(0, 1)}, {Interval(0, 1), Interval(0, 1)}), Error);
  CHECK_THROWS_AS(count_disjoint({}, {}), Error);
}

TEST_CASE("metrics are permutation equivariant") {
  Rng rng(23);
  std::vector<Interval> truth, pred;
  for (int i = 0; i < 40; ++i) {
    const double tc = rng.uniform(-5, 5);
    truth.emplace_back(tc, tc + rng.uniform(0, 3));
    const double pc = rng.uniform(-5, 5);
    pred.emplace_back(pc, pc + rng.uniform(0, 3));
  }
  std::vector<int> perm(truth.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
  rng.shuffle(perm);
  std::vector<Interval> truth_p, pred_p;
  for (int i : perm) {
    truth_p.push_back(truth[static_cast<std::size_t>(i)]);
    pred_p.push_back(pred[static_cast<std::size_t>(i)]);
  }
  CHECK(accuracy_rate(truth, pred) == doctest::Approx(accuracy_rate(truth_p, pred_p)));
  CHECK(rmse_bounds(truth, pred).lower ==
        doctest::Approx(rmse_bounds(truth_p, pred_p).lower));
  CHECK(rmse_bounds(truth, pred).upper ==
        doctest::Approx(rmse_bounds(truth_p, pred_p).upper));
  CHECK(count_disjoint(truth, pred) == count_disjoint(truth_p, pred_p));
}

TEST_CASE("no disjoint pairs implies positive AR terms") {
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Interval> truth, pred;
    for (int i = 0; i < 10; ++i) {
      const double tc = rng.uniform(-5, 5);
      truth.emplace_back(tc, tc + rng.uniform(0.1, 3));
      const double pc = rng.uniform(-5, 5);
      pred.emplace_back(pc, pc + rng.uniform(0.1, 3));
    }
    if (count_disjoint(truth, pred) == 0) {
      for (std::size_t i = 0; i < truth.size(); ++i) {
        CHECK(overlap_measure(truth[i], pred[i]).intersection > 0.0);
      }
    }
  }
}

TEST_CASE("sample caches center-range vectors") {
  IntervalSample s({Interval(0, 2), Interval(-1, 3)}, {Interval(1, 5), Interval(2, 2)});
  CHECK(s.size() == 2);
  CHECK(s.yc()[0] == 1.0);
  CHECK(s.yr()[0] == 1.0);
  CHECK(s.yc()[1] == 1.0);
  CHECK(s.yr()[1] == 2.0);
  CHECK(s.xc()[0] == 3.0);
  CHECK(s.xr()[0] == 2.0);
  CHECK(s.xr()[1] == 0.0);

  const IntervalSample sub = s.subset({1});
  CHECK(sub.size() == 1);
  CHECK(sub.yc()[0] == 1.0);
  CHECK(sub.xr()[0] == 0.0);

  CHECK_THROWS_AS(IntervalSample({Interval(0, 1)}, {}), Error);
}

}  // TEST_SUITE
