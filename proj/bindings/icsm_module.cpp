#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "icsm/estimators.hpp"
#include "icsm/interval.hpp"
#include "icsm/io.hpp"
#include "icsm/predictor.hpp"
#include "icsm/qp.hpp"
#include "icsm/simulation.hpp"
#include "icsm/weights.hpp"

namespace py = pybind11;
using namespace icsm;

namespace {

std::vector<Interval> intervals_from_array(const Eigen::MatrixXd& bounds) {
  if (bounds.cols() != 2) {
    throw Error(Errc::ShapeMismatch, "interval array must have two columns");
  }
  std::vector<Interval> out;
  out.reserve(static_cast<std::size_t>(bounds.rows()));
  for (Eigen::Index i = 0; i < bounds.rows(); ++i) {
    out.emplace_back(bounds(i, 0), bounds(i, 1));
  }
  return out;
}

Eigen::MatrixXd intervals_to_array(const std::vector<Interval>& ivs) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(ivs.size()), 2);
  for (std::size_t i = 0; i < ivs.size(); ++i) {
    out(static_cast<Eigen::Index>(i), 0) = ivs[i].lower();
    out(static_cast<Eigen::Index>(i), 1) = ivs[i].upper();
  }
  return out;
}

IntervalSample sample_from_arrays(const Eigen::MatrixXd& y, const Eigen::MatrixXd& x) {
  return {intervals_from_array(y), intervals_from_array(x)};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Constrained spatial autoregressive models for interval-valued data";

  py::register_exception<Error>(m, "IcsmError");

  py::class_<Interval>(m, "Interval")
      .def(py::init<double, double>(), py::arg("lower"), py::arg("upper"))
      .def_property_readonly("lower", &Interval::lower)
      .def_property_readonly("upper", &Interval::upper)
      .def_property_readonly("width", &Interval::width)
      .def("__repr__", [](const Interval& iv) {
        return "Interval(" + std::to_string(iv.lower()) + ", " + std::to_string(iv.upper()) + ")";
      });

  m.def("to_center_range", [](const Interval& iv) {
    const CenterRange cr = to_center_range(iv);
    return py::make_tuple(cr.center, cr.radius);
  });
  m.def("from_center_range",
        [](double center, double radius) { return from_center_range({center, radius}); },
        py::arg("center"), py::arg("radius"));

  m.def("accuracy_rate",
        [](const Eigen::MatrixXd& truth, const Eigen::MatrixXd& pred) {
          return accuracy_rate(intervals_from_array(truth), intervals_from_array(pred));
        },
        py::arg("truth"), py::arg("pred"),
        "Mean intersection/union ratio of two (n, 2) interval arrays");
  m.def("rmse_bounds", [](const Eigen::MatrixXd& truth, const Eigen::MatrixXd& pred) {
    const BoundsRmse r = rmse_bounds(intervals_from_array(truth), intervals_from_array(pred));
    return py::make_tuple(r.lower, r.upper);
  });
  m.def("count_disjoint", [](const Eigen::MatrixXd& truth, const Eigen::MatrixXd& pred) {
    return count_disjoint(intervals_from_array(truth), intervals_from_array(pred));
  });

  py::class_<IntervalSample>(m, "IntervalSample")
      .def(py::init(&sample_from_arrays), py::arg("y"), py::arg("x"),
           "Build a sample from (n, 2) arrays of y and x interval bounds")
      .def_property_readonly("n", &IntervalSample::size)
      .def_property_readonly("yc", &IntervalSample::yc)
      .def_property_readonly("yr", &IntervalSample::yr)
      .def_property_readonly("xc", &IntervalSample::xc)
      .def_property_readonly("xr", &IntervalSample::xr)
      .def("y", [](const IntervalSample& s) { return intervals_to_array(s.y()); })
      .def("x", [](const IntervalSample& s) { return intervals_to_array(s.x()); })
      .def("subset", &IntervalSample::subset);

  py::class_<GeoPoint>(m, "GeoPoint")
      .def(py::init<double, double>(), py::arg("lon"), py::arg("lat"))
      .def_readwrite("lon", &GeoPoint::lon)
      .def_readwrite("lat", &GeoPoint::lat);

  py::class_<WeightMatrix>(m, "WeightMatrix")
      .def_property_readonly("n", &WeightMatrix::size)
      .def_property_readonly("row_normalized", &WeightMatrix::row_normalized)
      .def("dense", &WeightMatrix::dense)
      .def("sum", &WeightMatrix::sum)
      .def("row_sums", &WeightMatrix::row_sums)
      .def("lag", &WeightMatrix::lag, py::arg("z"))
      .def("subset", &WeightMatrix::subset, py::arg("idx"));

  m.def("rook", &rook, py::arg("rows"), py::arg("cols"));
  m.def("block", &block, py::arg("districts"), py::arg("members"));
  m.def("row_normalize", &row_normalize, py::arg("w"));
  m.def("haversine_km", &haversine_km, py::arg("a"), py::arg("b"));
  m.def("inverse_distance", &inverse_distance, py::arg("coords"), py::arg("k"), py::arg("d0"));
  m.def("morans_i", &morans_i, py::arg("w"), py::arg("z"));

  py::class_<MoranResult>(m, "MoranResult")
      .def_readonly("statistic", &MoranResult::statistic)
      .def_readonly("p_value", &MoranResult::p_value)
      .def_readonly("n_permutations", &MoranResult::n_permutations);

  m.def("morans_i_test",
        [](const WeightMatrix& w, const Eigen::VectorXd& z, int n_perm, std::uint64_t seed,
           const std::string& alternative) {
          Tail tail = Tail::Greater;
          if (alternative == "less") tail = Tail::Less;
          if (alternative == "two-sided") tail = Tail::TwoSided;
          return morans_i_test(w, z, n_perm, seed, tail);
        },
        py::arg("w"), py::arg("z"), py::arg("n_perm") = 999, py::arg("seed") = 20240501,
        py::arg("alternative") = "greater");

  m.def("select_k_d0",
        [](const std::vector<GeoPoint>& coords, const Eigen::VectorXd& z, int k_max) {
          const WeightChoice c = select_k_d0(coords, z, k_max);
          return py::make_tuple(c.k, c.d0, c.moran);
        },
        py::arg("coords"), py::arg("z"), py::arg("k_max") = 9);

  py::class_<RhoGrid>(m, "RhoGrid")
      .def(py::init([](double lo, double hi, double step) {
             return RhoGrid{lo, hi, step};
           }),
           py::arg("lo") = -1.0, py::arg("hi") = 1.0, py::arg("step") = 0.01)
      .def_readwrite("lo", &RhoGrid::lo)
      .def_readwrite("hi", &RhoGrid::hi)
      .def_readwrite("step", &RhoGrid::step)
      .def("points", &RhoGrid::points);

  py::class_<GridPoint>(m, "GridPoint")
      .def_readonly("rho", &GridPoint::rho)
      .def_readonly("objective", &GridPoint::objective)
      .def_readonly("skipped", &GridPoint::skipped);

  py::class_<FitResult>(m, "FitResult")
      .def_property_readonly("model",
                             [](const FitResult& f) { return std::string(model_name(f.model)); })
      .def_readonly("rho", &FitResult::rho)
      .def_property_readonly("beta_c",
                             [](const FitResult& f) { return Eigen::VectorXd(f.beta_c); })
      .def_property_readonly("beta_r",
                             [](const FitResult& f) { return Eigen::VectorXd(f.beta_r); })
      .def_readonly("objective", &FitResult::objective)
      .def_readonly("sigma2_c", &FitResult::sigma2_c)
      .def_readonly("sigma2_r", &FitResult::sigma2_r)
      .def_readonly("residuals_c", &FitResult::residuals_c)
      .def_readonly("residuals_r", &FitResult::residuals_r)
      .def_readonly("grid_profile", &FitResult::grid_profile);

  m.def("fit_icsm", &fit_icsm, py::arg("sample"), py::arg("w"), py::arg("grid") = RhoGrid{},
        "Grid search over rho with constrained least squares at each point");
  m.def("fit_icm", &fit_icm, py::arg("sample"));
  m.def("fit_ism", &fit_ism, py::arg("sample"), py::arg("w"), py::arg("grid") = RhoGrid{});

  py::class_<FittedIntervals>(m, "FittedIntervals")
      .def_readonly("centers", &FittedIntervals::centers)
      .def_readonly("radii", &FittedIntervals::radii)
      .def_property_readonly("intervals", [](const FittedIntervals& f) {
        return intervals_to_array(f.intervals);
      })
      .def_readonly("clamped", &FittedIntervals::clamped);

  m.def("fitted_intervals", &fitted_intervals, py::arg("fit"), py::arg("sample"), py::arg("w"));

  py::class_<SamplePartition>(m, "SamplePartition")
      .def(py::init(&make_partition), py::arg("train_idx"), py::arg("test_idx"),
           py::arg("w_full"))
      .def_readonly("train_idx", &SamplePartition::train_idx)
      .def_readonly("test_idx", &SamplePartition::test_idx);

  py::class_<PredictionResult>(m, "PredictionResult")
      .def_readonly("yc_hat", &PredictionResult::yc_hat)
      .def_readonly("yr_hat", &PredictionResult::yr_hat)
      .def_property_readonly("intervals", [](const PredictionResult& p) {
        return intervals_to_array(p.intervals);
      })
      .def_readonly("clamped", &PredictionResult::clamped)
      .def_property_readonly("method", [](const PredictionResult& p) {
        return std::string(method_name(p.method));
      });

  m.def("predict_tc", &predict_tc, py::arg("fit"), py::arg("x_all"), py::arg("w_full"));
  m.def("predict_bp", &predict_bp, py::arg("fit"), py::arg("part"), py::arg("y_train_c"),
        py::arg("x_all"));
  m.def("predict_intervals",
        [](const FitResult& fit, const SamplePartition& part, const IntervalSample& sample,
           const std::string& method) {
          return predict_intervals(fit, part, sample,
                                   method == "tc" ? PredictMethod::Tc : PredictMethod::Bp);
        },
        py::arg("fit"), py::arg("part"), py::arg("sample"), py::arg("method") = "bp");
  m.def("evaluate",
        [](const PredictionResult& pred, const Eigen::MatrixXd& truth) {
          const PredictionMetrics m2 = evaluate(pred, intervals_from_array(truth));
          py::dict d;
          d["rmse_l"] = m2.rmse_l;
          d["rmse_u"] = m2.rmse_u;
          d["mse_l"] = m2.rmse_l * m2.rmse_l;
          d["mse_u"] = m2.rmse_u * m2.rmse_u;
          d["ar"] = m2.ar;
          d["n_d"] = m2.n_d;
          return d;
        },
        py::arg("pred"), py::arg("truth"));

  // Monte-Carlo study
  py::class_<ScenarioConfig>(m, "ScenarioConfig")
      .def(py::init([](const std::string& json) { return io::scenario_from_json(json); }),
           py::arg("json"), "Parse a scenario from its JSON form")
      .def_property_readonly("name", [](const ScenarioConfig& c) { return c.name; })
      .def_property_readonly("n_units",
                             [](const ScenarioConfig& c) { return c.lattice.units(); })
      .def_readwrite("n_reps", &ScenarioConfig::n_reps)
      .def_readwrite("seed", &ScenarioConfig::seed)
      .def("to_json", [](const ScenarioConfig& c) { return io::scenario_to_json(c); });

  py::class_<MetricStats>(m, "MetricStats")
      .def_readonly("mean", &MetricStats::mean)
      .def_readonly("sd", &MetricStats::sd);

  py::class_<ModelReport>(m, "ModelReport")
      .def_readonly("mse_l", &ModelReport::mse_l)
      .def_readonly("mse_u", &ModelReport::mse_u)
      .def_readonly("ar", &ModelReport::ar)
      .def_readonly("n_d", &ModelReport::n_d)
      .def_readonly("rho_hat", &ModelReport::rho_hat)
      .def_readonly("n_failed", &ModelReport::n_failed);

  py::class_<ExperimentReport>(m, "ExperimentReport")
      .def_readonly("icsm", &ExperimentReport::icsm)
      .def_readonly("icm", &ExperimentReport::icm)
      .def_readonly("ism", &ExperimentReport::ism)
      .def_readonly("n_units", &ExperimentReport::n_units)
      .def("csv", [](const ExperimentReport& r) { return io::report_csv(r); })
      .def("table", [](const ExperimentReport& r) { return io::report_table(r); });

  m.def("run_scenario", &run_scenario, py::arg("config"), py::arg("jobs") = 1,
        py::call_guard<py::gil_scoped_release>());
  m.def("paper_scenario_matrix", &paper_scenario_matrix);

  m.attr("__version__") = "0.1.0";
}
