#include "icsm/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace icsm::io {

namespace {

using nlohmann::json;

double parse_double(const std::string& s, const std::string& context) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = begin + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end) {
    raise(Errc::ParseError, "bad number '" + s + "' in " + context);
  }
  return v;
}

long parse_long(const std::string& s, const std::string& context) {
  long v = 0;
  const char* begin = s.data();
  const char* end = begin + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end) {
    raise(Errc::ParseError, "bad integer '" + s + "' in " + context);
  }
  return v;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      out.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  out.push_back(field);
  return out;
}

json dist_to_json(const DistSpec& d) {
  switch (d.kind) {
    case DistSpec::Kind::Normal:
      return {{"type", "normal"}, {"mean", d.a}, {"variance", d.b}};
    case DistSpec::Kind::Uniform:
      return {{"type", "uniform"}, {"lo", d.a}, {"hi", d.b}};
    case DistSpec::Kind::Constant:
      return {{"type", "constant"}, {"value", d.a}};
  }
  return {};
}

DistSpec dist_from_json(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "normal") return DistSpec::normal(j.at("mean"), j.at("variance"));
  if (type == "uniform") return DistSpec::uniform(j.at("lo"), j.at("hi"));
  if (type == "constant") return DistSpec::constant(j.at("value"));
  raise(Errc::ParseError, "unknown distribution type '" + type + "'");
}

void append_stats(std::ostringstream& os, const std::string& scenario,
                  const std::string& model, const std::string& metric,
                  const MetricStats& s, int n_failed) {
  os << scenario << ',' << model << ',' << metric << ',' << format_double(s.mean) << ','
     << format_double(s.sd) << ',' << n_failed << '\n';
}

std::string stat_cell(const MetricStats& s) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << s.mean << " (" << s.sd << ")";
  return os.str();
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

int Csv::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

int Csv::require_column(const std::string& name) const {
  const int idx = column(name);
  if (idx < 0) raise(Errc::ParseError, "missing column '" + name + "'");
  return idx;
}

Csv read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::IoError, "cannot open " + path);
  Csv csv;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_line(line);
    if (first) {
      csv.header = std::move(fields);
      first = false;
    } else {
      if (fields.size() != csv.header.size()) {
        raise(Errc::ParseError, "row with " + std::to_string(fields.size()) +
                                    " fields, expected " + std::to_string(csv.header.size()) +
                                    " in " + path);
      }
      csv.rows.push_back(std::move(fields));
    }
  }
  if (first) raise(Errc::ParseError, "no header in " + path);
  return csv;
}

IntervalSample Dataset::to_sample() const {
  std::vector<int> idx(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) idx[i] = static_cast<int>(i);
  return to_sample(idx);
}

IntervalSample Dataset::to_sample(const std::vector<int>& idx) const {
  std::vector<Interval> y, x;
  y.reserve(idx.size());
  x.reserve(idx.size());
  for (int i : idx) {
    if (i < 0 || i >= size()) raise(Errc::DimensionMismatch, "dataset index out of range");
    y.push_back(rows[static_cast<std::size_t>(i)].y);
    x.push_back(rows[static_cast<std::size_t>(i)].x);
  }
  return {std::move(y), std::move(x)};
}

std::vector<int> Dataset::train_indices() const {
  std::vector<int> out;
  for (int i = 0; i < size(); ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    if (!has_split || !(r.is_test.has_value() && *r.is_test)) out.push_back(i);
  }
  return out;
}

std::vector<int> Dataset::test_indices() const {
  std::vector<int> out;
  for (int i = 0; i < size(); ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    if (has_split && r.is_test.has_value() && *r.is_test) out.push_back(i);
  }
  return out;
}

std::vector<GeoPoint> Dataset::coords() const {
  if (!has_coords) raise(Errc::ParseError, "dataset has no lon/lat columns");
  std::vector<GeoPoint> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(*r.coord);
  return out;
}

Dataset read_dataset(const std::string& path) {
  const Csv csv = read_csv(path);
  const int c_id = csv.require_column("id");
  const int c_xl = csv.require_column("x_lower");
  const int c_xu = csv.require_column("x_upper");
  const int c_yl = csv.require_column("y_lower");
  const int c_yu = csv.require_column("y_upper");
  const int c_lon = csv.column("lon");
  const int c_lat = csv.column("lat");
  const int c_split = csv.column("split");
  if ((c_lon >= 0) != (c_lat >= 0)) {
    raise(Errc::ParseError, "lon and lat columns must appear together");
  }

  Dataset ds;
  ds.has_coords = c_lon >= 0;
  ds.has_split = c_split >= 0;
  std::vector<std::string> ids;
  for (const auto& row : csv.rows) {
    DatasetRow r;
    r.id = row[static_cast<std::size_t>(c_id)];
    const double xl = parse_double(row[static_cast<std::size_t>(c_xl)], path);
    const double xu = parse_double(row[static_cast<std::size_t>(c_xu)], path);
    const double yl = parse_double(row[static_cast<std::size_t>(c_yl)], path);
    const double yu = parse_double(row[static_cast<std::size_t>(c_yu)], path);
    if (xl > xu || yl > yu) {
      raise(Errc::ParseError, "row id=" + r.id + " has inverted interval bounds");
    }
    r.x = Interval(xl, xu);
    r.y = Interval(yl, yu);
    if (ds.has_coords) {
      GeoPoint p{parse_double(row[static_cast<std::size_t>(c_lon)], path),
                 parse_double(row[static_cast<std::size_t>(c_lat)], path)};
      validate_geo(p);
      r.coord = p;
    }
    if (ds.has_split) {
      const std::string& s = row[static_cast<std::size_t>(c_split)];
      if (s == "train") {
        r.is_test = false;
      } else if (s == "test") {
        r.is_test = true;
      } else {
        raise(Errc::ParseError, "split value '" + s + "' must be train or test");
      }
    }
    ids.push_back(r.id);
    ds.rows.push_back(std::move(r));
  }
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    raise(Errc::ParseError, "dataset ids are not unique");
  }
  if (ds.rows.empty()) raise(Errc::ParseError, "dataset " + path + " has no rows");
  return ds;
}

void write_weights(const std::string& path, const WeightMatrix& w) {
  std::ostringstream os;
  os << "# n=" << w.size() << " normalized=" << (w.row_normalized() ? 1 : 0) << '\n';
  os << "i,j,w\n";
  for (const auto& t : w.triplets()) {
    os << t.row() << ',' << t.col() << ',' << format_double(t.value()) << '\n';
  }
  write_file(path, os.str());
}

WeightMatrix read_weights(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::IoError, "cannot open " + path);
  std::string line;
  int n = -1;
  int normalized = 0;
  bool saw_header = false;
  std::vector<Eigen::Triplet<double>> trip;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (std::sscanf(line.c_str(), "# n=%d normalized=%d", &n, &normalized) != 2) {
        raise(Errc::ParseError, "bad weight header '" + line + "'");
      }
      continue;
    }
    const auto fields = split_line(line);
    if (fields.size() != 3) raise(Errc::ParseError, "weight rows need i,j,w");
    if (!saw_header && fields[0] == "i") {
      saw_header = true;
      continue;
    }
    trip.emplace_back(static_cast<int>(parse_long(fields[0], path)),
                      static_cast<int>(parse_long(fields[1], path)),
                      parse_double(fields[2], path));
  }
  if (n <= 0) raise(Errc::ParseError, "weight file " + path + " is missing the n= header");
  return WeightMatrix(n, trip, normalized != 0);
}

std::vector<GeoPoint> read_coords(const std::string& path) {
  const Csv csv = read_csv(path);
  const int c_lon = csv.require_column("lon");
  const int c_lat = csv.require_column("lat");
  std::vector<GeoPoint> out;
  out.reserve(csv.rows.size());
  for (const auto& row : csv.rows) {
    GeoPoint p{parse_double(row[static_cast<std::size_t>(c_lon)], path),
               parse_double(row[static_cast<std::size_t>(c_lat)], path)};
    validate_geo(p);
    out.push_back(p);
  }
  return out;
}

std::string fit_hash(const IntervalSample& training, const WeightMatrix& w) {
  std::ostringstream os;
  os << "n=" << training.size() << ";";
  for (int i = 0; i < training.size(); ++i) {
    const auto& y = training.y()[static_cast<std::size_t>(i)];
    const auto& x = training.x()[static_cast<std::size_t>(i)];
    os << format_double(x.lower()) << ',' << format_double(x.upper()) << ','
       << format_double(y.lower()) << ',' << format_double(y.upper()) << ';';
  }
  os << "w=" << w.size() << ',' << w.row_normalized() << ';';
  for (const auto& t : w.triplets()) {
    os << t.row() << ',' << t.col() << ',' << format_double(t.value()) << ';';
  }
  const std::string bytes = os.str();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[19];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string model_to_json(const ModelFile& model) {
  json j;
  j["model"] = model_name(model.fit.model);
  j["rho"] = model.fit.rho;
  j["beta_c"] = {model.fit.beta_c[0], model.fit.beta_c[1], model.fit.beta_c[2]};
  j["beta_r"] = {model.fit.beta_r[0], model.fit.beta_r[1], model.fit.beta_r[2]};
  j["objective"] = model.fit.objective;
  j["sigma2_c"] = model.fit.sigma2_c;
  j["sigma2_r"] = model.fit.sigma2_r;
  json profile = json::array();
  for (const auto& g : model.fit.grid_profile) {
    json p;
    p["rho"] = g.rho;
    if (g.skipped) {
      p["skipped"] = true;
    } else {
      p["objective"] = g.objective;
    }
    profile.push_back(std::move(p));
  }
  j["grid_profile"] = std::move(profile);
  j["data_hash"] = model.data_hash;
  return j.dump(2) + "\n";
}

ModelFile model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    raise(Errc::ParseError, std::string("model JSON: ") + e.what());
  }
  try {
    ModelFile m;
    m.fit.model = model_from_name(j.at("model").get<std::string>());
    m.fit.rho = j.at("rho").get<double>();
    for (int i = 0; i < 3; ++i) {
      m.fit.beta_c[i] = j.at("beta_c").at(static_cast<std::size_t>(i)).get<double>();
      m.fit.beta_r[i] = j.at("beta_r").at(static_cast<std::size_t>(i)).get<double>();
    }
    m.fit.objective = j.at("objective").get<double>();
    m.fit.sigma2_c = j.at("sigma2_c").get<double>();
    m.fit.sigma2_r = j.at("sigma2_r").get<double>();
    for (const auto& p : j.at("grid_profile")) {
      GridPoint g;
      g.rho = p.at("rho").get<double>();
      g.skipped = p.value("skipped", false);
      g.objective = g.skipped ? std::numeric_limits<double>::quiet_NaN()
                              : p.at("objective").get<double>();
      m.fit.grid_profile.push_back(g);
    }
    m.data_hash = j.value("data_hash", "");
    return m;
  } catch (const json::exception& e) {
    raise(Errc::ParseError, std::string("model JSON: ") + e.what());
  }
}

void write_model(const std::string& path, const ModelFile& model) {
  write_file(path, model_to_json(model));
}

ModelFile read_model(const std::string& path) { return model_from_json(read_file(path)); }

std::string scenario_to_json(const ScenarioConfig& config) {
  json j;
  j["name"] = config.name;
  j["lattice"] = {{"type", config.lattice.kind == LatticeSpec::Kind::Rook ? "rook" : "block"},
                  {"a", config.lattice.a},
                  {"b", config.lattice.b}};
  j["rho"] = config.rho_true;
  j["noise_c"] = dist_to_json(config.noise_c);
  j["noise_r"] = dist_to_json(config.noise_r);
  j["x_c"] = dist_to_json(config.x_c_dist);
  j["x_r"] = dist_to_json(config.x_r_dist);
  j["beta"] = {{"b1c", dist_to_json(config.beta.b1c)},
               {"b2c", dist_to_json(config.beta.b2c)},
               {"b1r", dist_to_json(config.beta.b1r)},
               {"b2r", dist_to_json(config.beta.b2r)}};
  j["n_reps"] = config.n_reps;
  j["train_fraction"] = config.train_fraction;
  j["seed"] = config.seed;
  j["grid"] = {{"lo", config.grid.lo}, {"hi", config.grid.hi}, {"step", config.grid.step}};
  return j.dump(2) + "\n";
}

ScenarioConfig scenario_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    raise(Errc::ParseError, std::string("scenario JSON: ") + e.what());
  }
  try {
    ScenarioConfig c;
    c.name = j.value("name", "scenario");
    const json& lat = j.at("lattice");
    const std::string type = lat.at("type").get<std::string>();
    if (type == "rook") {
      c.lattice.kind = LatticeSpec::Kind::Rook;
    } else if (type == "block") {
      c.lattice.kind = LatticeSpec::Kind::Block;
    } else {
      raise(Errc::ParseError, "lattice type must be rook or block");
    }
    c.lattice.a = lat.at("a").get<int>();
    c.lattice.b = lat.at("b").get<int>();
    c.rho_true = j.at("rho").get<double>();
    if (j.contains("noise_c")) c.noise_c = dist_from_json(j["noise_c"]);
    if (j.contains("noise_r")) c.noise_r = dist_from_json(j["noise_r"]);
    if (j.contains("x_c")) c.x_c_dist = dist_from_json(j["x_c"]);
    if (j.contains("x_r")) c.x_r_dist = dist_from_json(j["x_r"]);
    if (j.contains("beta")) {
      const json& b = j["beta"];
      if (b.contains("b1c")) c.beta.b1c = dist_from_json(b["b1c"]);
      if (b.contains("b2c")) c.beta.b2c = dist_from_json(b["b2c"]);
      if (b.contains("b1r")) c.beta.b1r = dist_from_json(b["b1r"]);
      if (b.contains("b2r")) c.beta.b2r = dist_from_json(b["b2r"]);
    }
    c.n_reps = j.value("n_reps", c.n_reps);
    c.train_fraction = j.value("train_fraction", c.train_fraction);
    c.seed = j.value("seed", c.seed);
    if (j.contains("grid")) {
      c.grid.lo = j["grid"].value("lo", c.grid.lo);
      c.grid.hi = j["grid"].value("hi", c.grid.hi);
      c.grid.step = j["grid"].value("step", c.grid.step);
    }
    return c;
  } catch (const json::exception& e) {
    raise(Errc::ParseError, std::string("scenario JSON: ") + e.what());
  }
}

ScenarioConfig read_scenario(const std::string& path) {
  return scenario_from_json(read_file(path));
}

std::string report_csv(const ExperimentReport& report) {
  std::ostringstream os;
  os << "# scenario=" << report.config.name << " n=" << report.n_units
     << " reps=" << report.config.n_reps << " seed=" << report.config.seed << '\n';
  os << "scenario,model,metric,mean,sd,n_failed\n";
  const std::pair<const char*, const ModelReport*> models[] = {
      {"icsm", &report.icsm}, {"icm", &report.icm}, {"ism", &report.ism}};
  for (const auto& [name, m] : models) {
    append_stats(os, report.config.name, name, "mse_l", m->mse_l, m->n_failed);
    append_stats(os, report.config.name, name, "mse_u", m->mse_u, m->n_failed);
    append_stats(os, report.config.name, name, "ar", m->ar, m->n_failed);
    append_stats(os, report.config.name, name, "n_d", m->n_d, m->n_failed);
    append_stats(os, report.config.name, name, "rho_hat", m->rho_hat, m->n_failed);
  }
  return os.str();
}

std::string report_reps_csv(const ExperimentReport& report) {
  std::ostringstream os;
  os << "scenario,model,rep,ok,error,mse_l,mse_u,ar,n_d,rho_hat\n";
  const std::pair<const char*, const ModelReport*> models[] = {
      {"icsm", &report.icsm}, {"icm", &report.icm}, {"ism", &report.ism}};
  for (const auto& [name, m] : models) {
    for (std::size_t r = 0; r < m->reps.size(); ++r) {
      const RepMetrics& rm = m->reps[r];
      os << report.config.name << ',' << name << ',' << r << ',' << (rm.ok ? 1 : 0) << ','
         << rm.error << ',' << format_double(rm.mse_l) << ',' << format_double(rm.mse_u)
         << ',' << format_double(rm.ar) << ',' << format_double(rm.n_d) << ','
         << format_double(rm.rho_hat) << '\n';
    }
  }
  return os.str();
}

std::string report_table(const ExperimentReport& report) {
  std::ostringstream os;
  os << "scenario " << report.config.name << "  (n=" << report.n_units
     << ", reps=" << report.config.n_reps << ", mean (sd) over replications)\n";
  os << std::left << std::setw(8) << "metric" << std::setw(20) << "ICSM" << std::setw(20)
     << "ICM" << std::setw(20) << "ISM" << '\n';
  const auto line = [&](const char* metric, const MetricStats& a, const MetricStats& b,
                        const MetricStats& c) {
    os << std::left << std::setw(8) << metric << std::setw(20) << stat_cell(a)
       << std::setw(20) << stat_cell(b) << std::setw(20) << stat_cell(c) << '\n';
  };
  line("MSE_l", report.icsm.mse_l, report.icm.mse_l, report.ism.mse_l);
  line("MSE_u", report.icsm.mse_u, report.icm.mse_u, report.ism.mse_u);
  line("AR", report.icsm.ar, report.icm.ar, report.ism.ar);
  line("N_d", report.icsm.n_d, report.icm.n_d, report.ism.n_d);
  os << "failed reps: icsm=" << report.icsm.n_failed << " icm=" << report.icm.n_failed
     << " ism=" << report.ism.n_failed << '\n';
  return os.str();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::IoError, "cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(Errc::IoError, "cannot write " + path);
  out << content;
  if (!out) raise(Errc::IoError, "failed writing " + path);
}

}  // namespace icsm::io
