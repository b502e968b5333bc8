// interval-sar: fit and evaluate spatial autoregressive models for
// interval-valued data from the command line.
//
// Subcommands: weights, moran, fit, predict, simulate, version.
// Results go to stdout, logs to stderr. Every failure exits nonzero with a
// single machine-parsable line "<ErrorName>: message" on stderr.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "icsm/estimators.hpp"
#include "icsm/io.hpp"
#include "icsm/predictor.hpp"
#include "icsm/simulation.hpp"
#include "icsm/weights.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr std::uint64_t kDefaultSeed = 20240501;

std::uint64_t seed_from_env() {
  if (const char* env = std::getenv("INTERVAL_SAR_SEED")) {
    try {
      return std::stoull(env);
    } catch (...) {
      throw icsm::Error(icsm::Errc::ParseError,
                        std::string("INTERVAL_SAR_SEED='") + env + "' is not an integer");
    }
  }
  return kDefaultSeed;
}

Eigen::VectorXd dataset_column(const icsm::io::Dataset& ds, const std::string& which) {
  const icsm::IntervalSample s = ds.to_sample();
  if (which == "yc") return s.yc();
  if (which == "yr") return s.yr();
  if (which == "xc") return s.xc();
  if (which == "xr") return s.xr();
  throw icsm::Error(icsm::Errc::ParseError, "column must be yc, yr, xc or xr");
}

Eigen::VectorXd csv_column(const std::string& path, const std::string& name) {
  const icsm::io::Csv csv = icsm::io::read_csv(path);
  const int idx = csv.require_column(name);
  Eigen::VectorXd out(static_cast<Eigen::Index>(csv.rows.size()));
  for (std::size_t i = 0; i < csv.rows.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] =
        std::stod(csv.rows[i][static_cast<std::size_t>(idx)]);
  }
  return out;
}

int cmd_weights(const std::string& subtype, int rows, int cols, int districts, int members,
                const std::string& coords_path, const std::string& data_path, int k,
                double d0, bool select, int k_max, const std::string& column,
                bool normalize, const std::string& out_path) {
  icsm::WeightMatrix w = icsm::WeightMatrix::zero(1);
  nlohmann::json info;
  if (subtype == "rook") {
    w = icsm::rook(rows, cols);
  } else if (subtype == "block") {
    w = icsm::block(districts, members);
  } else {
    const std::vector<icsm::GeoPoint> pts = coords_path.empty()
        ? icsm::io::read_dataset(data_path).coords()
        : icsm::io::read_coords(coords_path);
    if (select) {
      if (data_path.empty()) {
        throw icsm::Error(icsm::Errc::ParseError, "--select needs --data for the Moran variable");
      }
      const Eigen::VectorXd z = dataset_column(icsm::io::read_dataset(data_path), column);
      const icsm::WeightChoice choice = icsm::select_k_d0(pts, z, k_max);
      info["k"] = choice.k;
      info["d0"] = choice.d0;
      info["moran"] = choice.moran;
      w = icsm::inverse_distance(pts, choice.k, choice.d0);
    } else {
      w = icsm::inverse_distance(pts, k, d0);
    }
  }
  if (normalize) w = icsm::row_normalize(w);
  icsm::io::write_weights(out_path, w);
  info["n"] = w.size();
  info["normalized"] = w.row_normalized();
  info["path"] = out_path;
  std::cout << info.dump() << '\n';
  return 0;
}

int cmd_moran(const std::string& data_path, const std::string& weights_path,
              const std::string& on, const std::string& column, int n_perm,
              std::uint64_t seed, bool two_sided) {
  const icsm::WeightMatrix w = icsm::io::read_weights(weights_path);
  Eigen::VectorXd z;
  if (!column.empty()) {
    z = csv_column(data_path, column);
  } else {
    z = dataset_column(icsm::io::read_dataset(data_path), on);
  }
  const icsm::MoranResult res = icsm::morans_i_test(
      w, z, n_perm, seed, two_sided ? icsm::Tail::TwoSided : icsm::Tail::Greater);
  nlohmann::json j;
  j["statistic"] = res.statistic;
  j["p_value"] = res.p_value;
  j["n_permutations"] = res.n_permutations;
  j["alternative"] = two_sided ? "two-sided" : "greater";
  std::cout << j.dump() << '\n';
  return 0;
}

icsm::RhoGrid grid_from_flags(double lo, double hi, double step) {
  icsm::RhoGrid g;
  g.lo = lo;
  g.hi = hi;
  g.step = step;
  return g;
}

int cmd_fit(const std::string& data_path, const std::string& weights_path,
            const std::string& model, double grid_lo, double grid_hi, double grid_step,
            const std::string& out_path) {
  const icsm::io::Dataset ds = icsm::io::read_dataset(data_path);
  const std::vector<int> train_idx = ds.train_indices();
  const icsm::IntervalSample train = ds.to_sample(train_idx);

  icsm::WeightMatrix w_train = icsm::WeightMatrix::zero(train.size());
  if (model != "icm") {
    if (weights_path.empty()) {
      throw icsm::Error(icsm::Errc::ParseError, "--weights is required unless --model icm");
    }
    const icsm::WeightMatrix w_full = icsm::io::read_weights(weights_path);
    if (w_full.size() != ds.size()) {
      throw icsm::Error(icsm::Errc::DimensionMismatch,
                        "weight matrix n=" + std::to_string(w_full.size()) +
                            " does not match dataset n=" + std::to_string(ds.size()));
    }
    w_train = w_full.subset(train_idx);
  }

  const icsm::RhoGrid grid = grid_from_flags(grid_lo, grid_hi, grid_step);
  icsm::FitResult fit;
  if (model == "icsm") {
    fit = icsm::fit_icsm(train, w_train, grid);
  } else if (model == "ism") {
    fit = icsm::fit_ism(train, w_train, grid);
  } else {
    fit = icsm::fit_icm(train);
  }

  icsm::io::ModelFile file;
  file.fit = fit;
  // The hash binds the model to the training rows and the full weight file
  // context so predict can verify it sees the same data.
  const icsm::WeightMatrix hash_w = model == "icm"
      ? icsm::WeightMatrix::zero(train.size())
      : icsm::io::read_weights(weights_path);
  file.data_hash = icsm::io::fit_hash(train, hash_w);
  icsm::io::write_model(out_path, file);

  nlohmann::json j;
  j["model"] = icsm::model_name(fit.model);
  j["rho"] = fit.rho;
  j["beta_c"] = {fit.beta_c[0], fit.beta_c[1], fit.beta_c[2]};
  j["beta_r"] = {fit.beta_r[0], fit.beta_r[1], fit.beta_r[2]};
  j["sigma2_c"] = fit.sigma2_c;
  j["sigma2_r"] = fit.sigma2_r;
  j["objective"] = fit.objective;
  j["n_train"] = train.size();
  j["path"] = out_path;
  std::cout << j.dump() << '\n';
  return 0;
}

int cmd_predict(const std::string& model_path, const std::string& data_path,
                const std::string& weights_path, const std::string& method, bool force,
                const std::string& out_path) {
  const icsm::io::ModelFile model = icsm::io::read_model(model_path);
  const icsm::io::Dataset ds = icsm::io::read_dataset(data_path);
  if (!ds.has_split) {
    throw icsm::Error(icsm::Errc::ParseError,
                      "predict needs a dataset with a split column (train|test)");
  }
  const std::vector<int> train_idx = ds.train_indices();
  const std::vector<int> test_idx = ds.test_indices();
  const icsm::WeightMatrix w_full = icsm::io::read_weights(weights_path);
  if (w_full.size() != ds.size()) {
    throw icsm::Error(icsm::Errc::DimensionMismatch,
                      "weight matrix does not match the dataset");
  }

  const icsm::IntervalSample train = ds.to_sample(train_idx);
  const icsm::WeightMatrix hash_w = model.fit.model == icsm::ModelKind::Icm
      ? icsm::WeightMatrix::zero(train.size())
      : w_full;
  const std::string expected = icsm::io::fit_hash(train, hash_w);
  if (!model.data_hash.empty() && model.data_hash != expected && !force) {
    throw icsm::Error(icsm::Errc::HashMismatch,
                      "model was fit on different training data (rerun with --force to override)");
  }

  const icsm::SamplePartition part =
      icsm::make_partition(train_idx, test_idx, w_full);
  const icsm::IntervalSample full = ds.to_sample();
  const icsm::PredictMethod m =
      method == "tc" ? icsm::PredictMethod::Tc : icsm::PredictMethod::Bp;
  const icsm::PredictionResult pred = icsm::predict_intervals(model.fit, part, full, m);

  std::ostringstream os;
  os << "id,yc_hat,yr_hat,y_lower_hat,y_upper_hat,clamped\n";
  for (std::size_t i = 0; i < part.test_idx.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    os << ds.rows[static_cast<std::size_t>(part.test_idx[i])].id << ','
       << icsm::io::format_double(pred.yc_hat[k]) << ','
       << icsm::io::format_double(pred.yr_hat[k]) << ','
       << icsm::io::format_double(pred.intervals[i].lower()) << ','
       << icsm::io::format_double(pred.intervals[i].upper()) << ','
       << (pred.clamped[i] ? 1 : 0) << '\n';
  }
  icsm::io::write_file(out_path, os.str());

  // Test rows carry observed intervals, so report the four metrics.
  std::vector<icsm::Interval> truth;
  truth.reserve(part.test_idx.size());
  for (int i : part.test_idx) truth.push_back(ds.rows[static_cast<std::size_t>(i)].y);
  const icsm::PredictionMetrics metrics = icsm::evaluate(pred, truth);
  nlohmann::json j;
  j["method"] = method;
  j["n_test"] = part.test_idx.size();
  j["rmse_l"] = metrics.rmse_l;
  j["rmse_u"] = metrics.rmse_u;
  j["mse_l"] = metrics.rmse_l * metrics.rmse_l;
  j["mse_u"] = metrics.rmse_u * metrics.rmse_u;
  j["ar"] = metrics.ar;
  j["n_d"] = metrics.n_d;
  j["path"] = out_path;
  std::cout << j.dump() << '\n';
  return 0;
}

int cmd_simulate(const std::vector<std::string>& scenario_paths, bool paper_matrix,
                 const std::string& out_dir, int reps_override,
                 std::optional<std::uint64_t> seed_override, int jobs) {
  std::vector<icsm::ScenarioConfig> configs;
  if (paper_matrix) {
    configs = icsm::paper_scenario_matrix();
  }
  for (const std::string& path : scenario_paths) {
    configs.push_back(icsm::io::read_scenario(path));
  }
  if (configs.empty()) {
    throw icsm::Error(icsm::Errc::ParseError,
                      "provide scenario files or --paper-matrix");
  }
  std::filesystem::create_directories(out_dir);

  for (icsm::ScenarioConfig& cfg : configs) {
    if (reps_override > 0) cfg.n_reps = reps_override;
    if (seed_override) cfg.seed = *seed_override;
    if (cfg.name.empty()) cfg.name = cfg.lattice.label();
    std::cerr << "running scenario " << cfg.name << " (n=" << cfg.lattice.units()
              << ", reps=" << cfg.n_reps << ")\n";
    const icsm::ExperimentReport report = icsm::run_scenario(cfg, jobs);
    const std::filesystem::path base = std::filesystem::path(out_dir) / cfg.name;
    icsm::io::write_file(base.string() + "_report.csv", icsm::io::report_csv(report));
    icsm::io::write_file(base.string() + "_reps.csv", icsm::io::report_reps_csv(report));
    icsm::io::write_file(base.string() + "_table.txt", icsm::io::report_table(report));
    std::cout << base.string() + "_report.csv" << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatial autoregressive models for interval-valued data"};
  app.require_subcommand(1);

  // weights
  auto* weights = app.add_subcommand("weights", "Build a spatial weight matrix file");
  weights->require_subcommand(1);
  std::string w_out;
  bool w_normalize = false;

  auto* w_rook = weights->add_subcommand("rook", "Lattice edge-contiguity weights");
  int rook_rows = 1, rook_cols = 1;
  w_rook->add_option("--rows", rook_rows, "Lattice rows")->required();
  w_rook->add_option("--cols", rook_cols, "Lattice columns")->required();

  auto* w_block = weights->add_subcommand("block", "District-block equal weights");
  int block_d = 1, block_m = 2;
  w_block->add_option("--districts", block_d, "Number of districts")->required();
  w_block->add_option("--members", block_m, "Members per district")->required();

  auto* w_inv = weights->add_subcommand("invdist", "Inverse-distance k-NN weights");
  std::string inv_coords, inv_data, inv_column = "yc";
  int inv_k = 1, inv_kmax = 9;
  double inv_d0 = 0.0;
  bool inv_select = false;
  w_inv->add_option("--coords", inv_coords, "CSV with id,lon,lat columns");
  w_inv->add_option("--data", inv_data, "Dataset CSV with lon/lat columns");
  w_inv->add_option("--k", inv_k, "Neighbors per unit");
  w_inv->add_option("--d0", inv_d0, "Distance threshold in km");
  w_inv->add_flag("--select", inv_select, "Search (k, d0) maximizing Moran's I of --on");
  w_inv->add_option("--k-max", inv_kmax, "Largest k to scan with --select");
  w_inv->add_option("--on", inv_column, "Column driving the --select search (yc|yr|xc|xr)");

  for (auto* sub : {w_rook, w_block, w_inv}) {
    sub->add_flag("--normalize", w_normalize, "Row-normalize the matrix");
    sub->add_option("-o,--out", w_out, "Output weight file")->required();
  }

  // moran
  auto* moran = app.add_subcommand("moran", "Moran's I with a permutation test");
  std::string m_data, m_weights, m_on = "yc", m_column;
  int m_perm = 999;
  std::uint64_t m_seed = 0;
  bool m_two_sided = false;
  moran->add_option("--data", m_data, "Dataset CSV")->required();
  moran->add_option("--weights", m_weights, "Weight matrix file")->required();
  moran->add_option("--on", m_on, "Variable to test (yc|yr|xc|xr)");
  moran->add_option("--column", m_column, "Raw CSV column to test instead of --on");
  moran->add_option("--permutations", m_perm, "Number of permutations");
  moran->add_option("--seed", m_seed, "Permutation seed");
  moran->add_flag("--two-sided", m_two_sided, "Two-sided p-value");

  // fit
  auto* fit = app.add_subcommand("fit", "Fit icsm, icm or ism to a dataset");
  std::string f_data, f_weights, f_model = "icsm", f_out;
  double f_lo = -1.0, f_hi = 1.0, f_step = 0.01;
  fit->add_option("--data", f_data, "Dataset CSV (train rows when a split column exists)")
      ->required();
  fit->add_option("--weights", f_weights, "Weight matrix on all dataset rows");
  fit->add_option("--model", f_model, "icsm|icm|ism")
      ->check(CLI::IsMember({"icsm", "icm", "ism"}));
  fit->add_option("--grid-min", f_lo, "Grid lower endpoint");
  fit->add_option("--grid-max", f_hi, "Grid upper endpoint");
  fit->add_option("--grid-step", f_step, "Grid step");
  fit->add_option("-o,--out", f_out, "Output model JSON")->required();

  // predict
  auto* predict = app.add_subcommand("predict", "Predict the test rows of a dataset");
  std::string p_model, p_data, p_weights, p_method = "bp", p_out;
  bool p_force = false;
  predict->add_option("--model", p_model, "Model JSON from fit")->required();
  predict->add_option("--data", p_data, "Dataset CSV with split column")->required();
  predict->add_option("--weights", p_weights, "Weight matrix on all dataset rows")->required();
  predict->add_option("--method", p_method, "tc|bp")->check(CLI::IsMember({"tc", "bp"}));
  predict->add_flag("--force", p_force, "Skip the training-data hash check");
  predict->add_option("-o,--out", p_out, "Output prediction CSV")->required();

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Run Monte-Carlo scenarios");
  std::vector<std::string> s_scenarios;
  bool s_paper = false;
  std::string s_out = "reports";
  int s_reps = 0, s_jobs = 0;
  std::uint64_t s_seed = 0;
  simulate->add_option("--scenario", s_scenarios, "Scenario JSON file(s)");
  simulate->add_flag("--paper-matrix", s_paper, "Run the built-in 36-scenario matrix");
  simulate->add_option("--out", s_out, "Output directory")->required();
  simulate->add_option("--reps", s_reps, "Override replication count");
  simulate->add_option("--seed", s_seed, "Override scenario seeds");
  simulate->add_option("--jobs,--threads", s_jobs, "Worker threads (default: cores)");

  // version
  auto* version = app.add_subcommand("version", "Print the version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (version->parsed()) {
      std::cout << "interval-sar " << kVersion << '\n';
      return 0;
    }
    if (weights->parsed()) {
      std::string subtype = "rook";
      if (w_block->parsed()) subtype = "block";
      if (w_inv->parsed()) subtype = "invdist";
      if (subtype == "invdist" && inv_coords.empty() && inv_data.empty()) {
        throw icsm::Error(icsm::Errc::ParseError, "invdist needs --coords or --data");
      }
      if (subtype == "invdist" && !inv_select && !(inv_d0 > 0.0)) {
        throw icsm::Error(icsm::Errc::ParseError, "invdist needs --d0 > 0 (or --select)");
      }
      return cmd_weights(subtype, rook_rows, rook_cols, block_d, block_m, inv_coords,
                         inv_data, inv_k, inv_d0, inv_select, inv_kmax, inv_column,
                         w_normalize, w_out);
    }
    if (moran->parsed()) {
      if (moran->count("--seed") == 0) m_seed = seed_from_env();
      return cmd_moran(m_data, m_weights, m_on, m_column, m_perm, m_seed, m_two_sided);
    }
    if (fit->parsed()) {
      return cmd_fit(f_data, f_weights, f_model, f_lo, f_hi, f_step, f_out);
    }
    if (predict->parsed()) {
      return cmd_predict(p_model, p_data, p_weights, p_method, p_force, p_out);
    }
    if (simulate->parsed()) {
      const int jobs = s_jobs > 0
          ? s_jobs
          : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
      std::optional<std::uint64_t> seed_override;
      if (simulate->count("--seed") > 0) seed_override = s_seed;
      return cmd_simulate(s_scenarios, s_paper, s_out, s_reps, seed_override, jobs);
    }
  } catch (const icsm::Error& e) {
    std::cerr << e.what() << '\n';
    switch (e.code()) {
      case icsm::Errc::Infeasible:
      case icsm::Errc::RankDeficient:
      case icsm::Errc::MaxIterations:
      case icsm::Errc::SingularA:
      case icsm::Errc::NoFeasibleGridPoint:
      case icsm::Errc::SingularQo:
      case icsm::Errc::NonPositiveSigma2:
      case icsm::Errc::TooManyRejections:
        return 3;  // estimation/prediction failures
      default:
        return 2;  // bad inputs
    }
  } catch (const std::exception& e) {
    std::cerr << "InternalError: " << e.what() << '\n';
    return 4;
  }
  return 0;
}
