#include <doctest.h>

#include <cmath>
#include <set>

#include "icsm/io.hpp"
#include "icsm/simulation.hpp"

using namespace icsm;

namespace {

ScenarioConfig small_config() {
  ScenarioConfig cfg;
  cfg.name = "unit";
  cfg.lattice = {LatticeSpec::Kind::Block, 5, 4};
  cfg.rho_true = 0.4;
  cfg.n_reps = 6;
  cfg.seed = 99;
  cfg.grid = {-0.9, 0.9, 0.1};
  return cfg;
}

}  // namespace

TEST_SUITE("simulation") {

TEST_CASE("generation is deterministic and respects the reduced form") {
  ScenarioConfig cfg = small_config();
  cfg.rho_true = 0.0;
  const GeneratedSample a = generate(cfg, 2);
  const GeneratedSample b = generate(cfg, 2);
  CHECK(a.sample.yc() == b.sample.yc());
  CHECK(a.sample.xr() == b.sample.xr());
  CHECK(a.truth.b1c == b.truth.b1c);

  // rho = 0: y_c is exactly the linear mean (A = I).
  const GeneratedSample c = [&] {
    ScenarioConfig z = cfg;
    z.noise_c = DistSpec::constant(0.0);
    z.noise_r = DistSpec::constant(0.0);
    return generate(z, 0);
  }();
  const Eigen::VectorXd mean =
      c.sample.xc() * c.truth.b1c + c.sample.xr() * c.truth.b2c;
  CHECK((c.sample.yc() - mean).cwiseAbs().maxCoeff() < 1e-9);

  // Different reps differ.
  const GeneratedSample d = generate(cfg, 3);
  CHECK(a.sample.yc() != d.sample.yc());
}

TEST_CASE("generated draws respect the configured ranges") {
  // The published generator constants, spelled out explicitly.
  ScenarioConfig cfg = small_config();
  cfg.x_c_dist = DistSpec::uniform(0.0, 150.0);
  cfg.beta.b1r = DistSpec::constant(0.1);
  cfg.beta.b2r = DistSpec::uniform(2.5, 5.0);
  cfg.noise_r = DistSpec::normal(0.0, 5.0);
  for (int rep = 0; rep < 5; ++rep) {
    const GeneratedSample g = generate(cfg, rep);
    CHECK((g.sample.xc().array() >= 0.0).all());
    CHECK((g.sample.xc().array() <= 150.0).all());
    CHECK((g.sample.xr().array() >= 5.0).all());
    CHECK((g.sample.xr().array() <= 8.0).all());
    CHECK((g.sample.yr().array() > 0.0).all());
    CHECK(g.truth.b1c >= -2.5);
    CHECK(g.truth.b1c <= -2.0);
    CHECK(g.truth.b2c == 1.0);
    CHECK(g.truth.b1r == 0.1);
    CHECK(g.truth.b2r >= 2.5);
    CHECK(g.truth.b2r <= 5.0);
  }

  // Calibrated defaults stay inside their own stated family.
  const ScenarioConfig defaults = small_config();
  const GeneratedSample g = generate(defaults, 0);
  CHECK((g.sample.xc().array() <= 36.0).all());
  CHECK(g.truth.b1r == 0.05);
  CHECK(g.truth.b2r >= 1.25);
  CHECK(g.truth.b2r <= 2.5);
}

TEST_CASE("rejection loop keeps ranges positive") {
  ScenarioConfig cfg = small_config();
  // A noise spec that frequently produces negative draws.
  cfg.noise_r = DistSpec::normal(0.0, 400.0);
  int accepted = 0;
  for (int rep = 0; rep < 10; ++rep) {
    const GeneratedSample g = generate(cfg, rep);
    CHECK((g.sample.yr().array() > 0.0).all());
    ++accepted;
  }
  CHECK(accepted == 10);
}

TEST_CASE("impossible range constraint raises TooManyRejections") {
  ScenarioConfig cfg = small_config();
  cfg.beta.b2r = DistSpec::constant(0.0);
  cfg.beta.b1r = DistSpec::constant(0.0);
  cfg.noise_r = DistSpec::constant(-1.0);  // y_r = -1 always
  CHECK_THROWS_AS(generate(cfg, 0), Error);
  try {
    generate(cfg, 0);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::TooManyRejections);
  }
}

TEST_CASE("run_scenario aggregates and stays reproducible") {
  const ScenarioConfig cfg = small_config();
  const ExperimentReport rep1 = run_scenario(cfg, 1);
  CHECK(rep1.icsm.reps.size() == 6);
  CHECK(rep1.icsm.n_failed == 0);
  CHECK(rep1.icm.n_failed == 0);
  CHECK(rep1.ism.n_failed == 0);

  // Report means equal the arithmetic mean of retained per-rep values.
  double mean_ar = 0.0;
  for (const RepMetrics& r : rep1.icsm.reps) mean_ar += r.ar;
  mean_ar /= static_cast<double>(rep1.icsm.reps.size());
  CHECK(rep1.icsm.ar.mean == doctest::Approx(mean_ar).epsilon(1e-15));

  // sd uses denominator n-1.
  double acc = 0.0;
  for (const RepMetrics& r : rep1.icsm.reps) {
    acc += (r.ar - mean_ar) * (r.ar - mean_ar);
  }
  CHECK(rep1.icsm.ar.sd == doctest::Approx(std::sqrt(acc / 5.0)).epsilon(1e-12));

  // Identical runs, and identical under parallel scheduling.
  const ExperimentReport rep2 = run_scenario(cfg, 1);
  const ExperimentReport rep4 = run_scenario(cfg, 4);
  CHECK(io::report_csv(rep1) == io::report_csv(rep2));
  CHECK(io::report_csv(rep1) == io::report_csv(rep4));
  CHECK(io::report_reps_csv(rep1) == io::report_reps_csv(rep4));
}

TEST_CASE("rho estimates concentrate near zero under rho = 0") {
  ScenarioConfig cfg = small_config();
  cfg.rho_true = 0.0;
  cfg.lattice = {LatticeSpec::Kind::Rook, 6, 5};
  cfg.n_reps = 30;
  cfg.grid = {-0.9, 0.9, 0.1};
  const ExperimentReport rep = run_scenario(cfg, 1);
  CHECK(std::abs(rep.icsm.rho_hat.mean) <= 0.1);
}

TEST_CASE("strong spatial signal separates icsm from icm") {
  ScenarioConfig cfg = small_config();
  cfg.rho_true = 0.8;
  cfg.lattice = {LatticeSpec::Kind::Block, 6, 5};
  cfg.n_reps = 8;
  cfg.grid = {-0.95, 0.95, 0.05};
  const ExperimentReport rep = run_scenario(cfg, 1);
  CHECK(rep.icsm.mse_l.mean < rep.icm.mse_l.mean);
  CHECK(rep.icsm.ar.mean > rep.icm.ar.mean);
  CHECK(rep.icsm.rho_hat.mean > 0.5);
}

TEST_CASE("failed replications are excluded and counted") {
  ScenarioConfig cfg = small_config();
  // Constant covariate centers make X'X singular for every rep.
  cfg.x_c_dist = DistSpec::constant(3.0);
  // Keep x radii varying so the sample itself is valid.
  const ExperimentReport rep = run_scenario(cfg, 1);
  CHECK(rep.icsm.n_failed == cfg.n_reps);
  CHECK(rep.icm.n_failed == cfg.n_reps);
  CHECK(rep.ism.n_failed == cfg.n_reps);
  CHECK(rep.icsm.reps[0].error == std::string("RankDeficient"));
}

TEST_CASE("paper scenario matrix shape") {
  const auto matrix = paper_scenario_matrix();
  CHECK(matrix.size() == 36);
  CHECK(matrix.front().lattice.units() == 120);
  int blocks = 0;
  for (const auto& cfg : matrix) {
    if (cfg.lattice.kind == LatticeSpec::Kind::Block) {
      ++blocks;
      CHECK(cfg.lattice.b >= 6);
    }
    CHECK((cfg.noise_c.b == 11.0 || cfg.noise_c.b == 18.0));
    CHECK(cfg.n_reps == 75);
    CHECK(cfg.train_fraction == 0.9);
  }
  CHECK(blocks == 18);
  // Names are unique.
  std::set<std::string> names;
  for (const auto& cfg : matrix) names.insert(cfg.name);
  CHECK(names.size() == 36);
}

TEST_CASE("train fraction controls the split size") {
  ScenarioConfig cfg = small_config();
  cfg.n_reps = 1;
  const ExperimentReport rep = run_scenario(cfg, 1);
  (void)rep;
  // 9/10 of 20 units -> 18 train, 2 test; metrics computed on 2 units.
  CHECK(rep.icsm.reps[0].ok);
}

}  // TEST_SUITE
