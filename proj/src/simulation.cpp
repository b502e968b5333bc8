#include "icsm/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <sstream>
#include <thread>

namespace icsm {

namespace {

// Stream tags so each random purpose gets an independent substream.
constexpr std::uint64_t kTagX = 1;
constexpr std::uint64_t kTagBeta = 2;
constexpr std::uint64_t kTagNoiseC = 3;
constexpr std::uint64_t kTagNoiseR = 4;
constexpr std::uint64_t kTagSplit = 5;

constexpr int kMaxRedraws = 1000;

std::vector<int> draw_train_indices(int n, double fraction, Rng rng) {
  const int n_train = std::clamp(static_cast<int>(std::llround(fraction * n)), 1, n - 1);
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  rng.shuffle(idx);
  idx.resize(static_cast<std::size_t>(n_train));
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<int> complement(const std::vector<int>& sorted_idx, int n) {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(n) - sorted_idx.size());
  std::size_t k = 0;
  for (int i = 0; i < n; ++i) {
    if (k < sorted_idx.size() && sorted_idx[k] == i) {
      ++k;
    } else {
      out.push_back(i);
    }
  }
  return out;
}

struct RepOutcome {
  RepMetrics icsm, icm, ism;
};

MetricStats stats(const std::vector<double>& values) {
  MetricStats s;
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double acc = 0.0;
    for (double v : values) acc += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(acc / static_cast<double>(values.size() - 1));
  }
  return s;
}

ModelReport aggregate(std::vector<RepMetrics> reps) {
  ModelReport rep;
  std::vector<double> mse_l, mse_u, ar, n_d, rho;
  bool first = true;
  for (const RepMetrics& r : reps) {
    if (!r.ok) {
      ++rep.n_failed;
      continue;
    }
    mse_l.push_back(r.mse_l);
    mse_u.push_back(r.mse_u);
    ar.push_back(r.ar);
    n_d.push_back(r.n_d);
    rho.push_back(r.rho_hat);
    if (first) {
      rep.min_train_overlap = r.min_train_overlap;
      rep.min_train_radius = r.min_train_radius;
      first = false;
    } else {
      rep.min_train_overlap = std::min(rep.min_train_overlap, r.min_train_overlap);
      rep.min_train_radius = std::min(rep.min_train_radius, r.min_train_radius);
    }
  }
  rep.mse_l = stats(mse_l);
  rep.mse_u = stats(mse_u);
  rep.ar = stats(ar);
  rep.n_d = stats(n_d);
  rep.rho_hat = stats(rho);
  rep.reps = std::move(reps);
  return rep;
}

RepMetrics evaluate_model(const FitResult& fit, const IntervalSample& full,
                          const IntervalSample& train, const WeightMatrix& w_train,
                          const SamplePartition& part,
                          const std::vector<Interval>& truth_test) {
  RepMetrics m;
  const PredictionResult pred = predict_intervals(fit, part, full, PredictMethod::Bp);
  const PredictionMetrics metrics = evaluate(pred, truth_test);
  m.mse_l = metrics.rmse_l * metrics.rmse_l;
  m.mse_u = metrics.rmse_u * metrics.rmse_u;
  m.ar = metrics.ar;
  m.n_d = static_cast<double>(metrics.n_d);
  m.rho_hat = fit.rho;

  const FittedIntervals fitted = fitted_intervals(fit, train, w_train);
  double min_overlap = 0.0;
  double min_radius = 0.0;
  for (int i = 0; i < train.size(); ++i) {
    const Interval& obs = train.y()[static_cast<std::size_t>(i)];
    const double lo = std::max(obs.lower(), fitted.centers[i] - fitted.radii[i]);
    const double hi = std::min(obs.upper(), fitted.centers[i] + fitted.radii[i]);
    const double gap = hi - lo;  // signed; negative means no overlap
    if (i == 0 || gap < min_overlap) min_overlap = gap;
    if (i == 0 || fitted.radii[i] < min_radius) min_radius = fitted.radii[i];
  }
  m.min_train_overlap = min_overlap;
  m.min_train_radius = min_radius;
  m.ok = true;
  return m;
}

RepOutcome run_rep(const ScenarioConfig& config, int rep) {
  const GeneratedSample gen = generate(config, rep);
  const int n = gen.sample.size();

  const std::vector<int> train_idx = draw_train_indices(
      n, config.train_fraction,
      Rng::derive(config.seed, {kTagSplit, static_cast<std::uint64_t>(rep)}));
  const std::vector<int> test_idx = complement(train_idx, n);

  const IntervalSample train = gen.sample.subset(train_idx);
  const WeightMatrix w_train = gen.weights.subset(train_idx);
  const SamplePartition part = make_partition(train_idx, test_idx, gen.weights);

  std::vector<Interval> truth_test;
  truth_test.reserve(test_idx.size());
  for (int i : test_idx) truth_test.push_back(gen.sample.y()[static_cast<std::size_t>(i)]);

  RepOutcome out;
  auto run_one = [&](ModelKind kind) {
    RepMetrics m;
    try {
      FitResult fit;
      switch (kind) {
        case ModelKind::Icsm: fit = fit_icsm(train, w_train, config.grid); break;
        case ModelKind::Icm: fit = fit_icm(train); break;
        case ModelKind::Ism: fit = fit_ism(train, w_train, config.grid); break;
      }
      m = evaluate_model(fit, gen.sample, train, w_train, part, truth_test);
    } catch (const Error& e) {
      m.ok = false;
      m.error = e.name();
    }
    return m;
  };
  out.icsm = run_one(ModelKind::Icsm);
  out.icm = run_one(ModelKind::Icm);
  out.ism = run_one(ModelKind::Ism);
  return out;
}

}  // namespace

double DistSpec::sample(Rng& rng) const {
  switch (kind) {
    case Kind::Normal: return rng.normal(a, std::sqrt(b));
    case Kind::Uniform: return rng.uniform(a, b);
    case Kind::Constant: return a;
  }
  return a;
}

WeightMatrix LatticeSpec::build_normalized() const {
  if (kind == Kind::Rook) return row_normalize(rook(a, b));
  return block(a, b);
}

std::string LatticeSpec::label() const {
  std::ostringstream os;
  os << (kind == Kind::Rook ? "rook" : "block") << '_' << a << 'x' << b;
  return os.str();
}

GeneratedSample generate(const ScenarioConfig& config, int rep) {
  const int n = config.lattice.units();
  WeightMatrix w = config.lattice.build_normalized();

  const auto urep = static_cast<std::uint64_t>(rep);
  Rng rng_x = Rng::derive(config.seed, {kTagX, urep});
  Eigen::VectorXd xc(n), xr(n);
  for (int i = 0; i < n; ++i) xc[i] = config.x_c_dist.sample(rng_x);
  for (int i = 0; i < n; ++i) xr[i] = config.x_r_dist.sample(rng_x);

  Rng rng_beta = Rng::derive(config.seed, {kTagBeta, urep});
  TrueParams truth;
  truth.rho = config.rho_true;
  truth.b1c = config.beta.b1c.sample(rng_beta);
  truth.b2c = config.beta.b2c.sample(rng_beta);
  truth.b1r = config.beta.b1r.sample(rng_beta);
  truth.b2r = config.beta.b2r.sample(rng_beta);

  Rng rng_eps_c = Rng::derive(config.seed, {kTagNoiseC, urep});
  Eigen::VectorXd eps_c(n);
  for (int i = 0; i < n; ++i) eps_c[i] = config.noise_c.sample(rng_eps_c);

  Eigen::VectorXd yr(n);
  bool accepted = false;
  for (int attempt = 0; attempt <= kMaxRedraws; ++attempt) {
    Rng rng_eps_r = Rng::derive(
        config.seed, {kTagNoiseR, urep, static_cast<std::uint64_t>(attempt)});
    for (int i = 0; i < n; ++i) {
      yr[i] = xc[i] * truth.b1r + xr[i] * truth.b2r + config.noise_r.sample(rng_eps_r);
    }
    if ((yr.array() > 0.0).all()) {
      accepted = true;
      break;
    }
  }
  if (!accepted) {
    raise(Errc::TooManyRejections,
          "no positive-range noise draw after " + std::to_string(kMaxRedraws) + " attempts");
  }

  const Eigen::VectorXd mean_c = xc * truth.b1c + xr * truth.b2c + eps_c;
  Eigen::VectorXd yc;
  if (config.rho_true == 0.0) {
    yc = mean_c;
  } else {
    const Eigen::MatrixXd A =
        Eigen::MatrixXd::Identity(n, n) - config.rho_true * w.dense();
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
    if (!(lu.rcond() > 1e-12)) {
      raise(Errc::SingularA, "generating model has singular I - rho W");
    }
    yc = lu.solve(mean_c);
    if (!yc.allFinite()) {
      raise(Errc::SingularA, "generating model has singular I - rho W");
    }
  }

  std::vector<Interval> y_iv, x_iv;
  y_iv.reserve(static_cast<std::size_t>(n));
  x_iv.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    y_iv.emplace_back(yc[i] - yr[i], yc[i] + yr[i]);
    x_iv.emplace_back(xc[i] - xr[i], xc[i] + xr[i]);
  }
  return {IntervalSample(std::move(y_iv), std::move(x_iv)), std::move(w), truth};
}

const ModelReport& ExperimentReport::for_model(ModelKind kind) const {
  switch (kind) {
    case ModelKind::Icsm: return icsm;
    case ModelKind::Icm: return icm;
    case ModelKind::Ism: return ism;
  }
  return icsm;
}

ExperimentReport run_scenario(const ScenarioConfig& config, int jobs) {
  if (config.n_reps < 1) raise(Errc::DimensionMismatch, "n_reps must be >= 1");
  if (!(config.train_fraction > 0.0 && config.train_fraction < 1.0)) {
    raise(Errc::DimensionMismatch, "train_fraction must lie in (0, 1)");
  }

  std::vector<RepOutcome> outcomes(static_cast<std::size_t>(config.n_reps));
  const int workers = std::max(1, std::min(jobs, config.n_reps));
  if (workers == 1) {
    for (int rep = 0; rep < config.n_reps; ++rep) {
      outcomes[static_cast<std::size_t>(rep)] = run_rep(config, rep);
    }
  } else {
    // Each replication writes its own slot, so the aggregate is independent
    // of scheduling.
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&]() {
      while (true) {
        const int rep = next.fetch_add(1);
        if (rep >= config.n_reps) break;
        try {
          outcomes[static_cast<std::size_t>(rep)] = run_rep(config, rep);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  ExperimentReport report;
  report.config = config;
  report.n_units = config.lattice.units();
  std::vector<RepMetrics> icsm_reps, icm_reps, ism_reps;
  for (const RepOutcome& o : outcomes) {
    icsm_reps.push_back(o.icsm);
    icm_reps.push_back(o.icm);
    ism_reps.push_back(o.ism);
  }
  report.icsm = aggregate(std::move(icsm_reps));
  report.icm = aggregate(std::move(icm_reps));
  report.ism = aggregate(std::move(ism_reps));
  return report;
}

std::vector<ScenarioConfig> paper_scenario_matrix() {
  const std::vector<LatticeSpec> rooks = {
      {LatticeSpec::Kind::Rook, 10, 12},
      {LatticeSpec::Kind::Rook, 12, 20},
      {LatticeSpec::Kind::Rook, 20, 25},
  };
  const std::vector<LatticeSpec> blocks = {
      {LatticeSpec::Kind::Block, 20, 6},
      {LatticeSpec::Kind::Block, 20, 12},
      {LatticeSpec::Kind::Block, 25, 20},
  };
  const std::vector<double> rhos = {0.0, 0.4, 0.8};
  const std::vector<double> variances = {11.0, 18.0};

  std::vector<ScenarioConfig> out;
  out.reserve(36);
  for (std::size_t size_idx = 0; size_idx < rooks.size(); ++size_idx) {
    for (const bool use_block : {false, true}) {
      const LatticeSpec lattice = use_block ? blocks[size_idx] : rooks[size_idx];
      for (double rho : rhos) {
        for (double var : variances) {
          ScenarioConfig cfg;
          cfg.lattice = lattice;
          cfg.rho_true = rho;
          cfg.noise_c = DistSpec::normal(0.0, var);
          std::ostringstream name;
          name << lattice.label() << "_rho" << rho << "_var" << var;
          cfg.name = name.str();
          out.push_back(cfg);
        }
      }
    }
  }
  return out;
}

}  // namespace icsm
