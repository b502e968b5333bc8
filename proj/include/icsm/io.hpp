#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "icsm/estimators.hpp"
#include "icsm/interval.hpp"
#include "icsm/simulation.hpp"
#include "icsm/weights.hpp"

namespace icsm::io {

// Doubles are serialized with 17 significant digits so every file format
// round-trips bit-exactly.
std::string format_double(double v);

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;               // -1 when absent
  int require_column(const std::string& name) const;       // ParseError when absent
};

Csv read_csv(const std::string& path);

struct DatasetRow {
  std::string id;
  Interval x{0.0, 0.0};
  Interval y{0.0, 0.0};
  std::optional<GeoPoint> coord;
  std::optional<bool> is_test;  // from the optional `split` column
};

// CSV with header id,x_lower,x_upper,y_lower,y_upper plus optional lon,lat
// and split (train|test) columns.
struct Dataset {
  std::vector<DatasetRow> rows;
  bool has_coords = false;
  bool has_split = false;

  int size() const { return static_cast<int>(rows.size()); }
  IntervalSample to_sample() const;
  IntervalSample to_sample(const std::vector<int>& idx) const;
  std::vector<int> train_indices() const;  // all rows when there is no split
  std::vector<int> test_indices() const;
  std::vector<GeoPoint> coords() const;
};

Dataset read_dataset(const std::string& path);

// Weight files: `# n=<n> normalized=<0|1>` then `i,j,w` triplets.
void write_weights(const std::string& path, const WeightMatrix& w);
WeightMatrix read_weights(const std::string& path);

// Coordinate files: header id,lon,lat.
std::vector<GeoPoint> read_coords(const std::string& path);

// Content hash (FNV-1a over a canonical rendering) binding a model file to
// the training rows and weight matrix it was fit on.
std::string fit_hash(const IntervalSample& training, const WeightMatrix& w);

struct ModelFile {
  FitResult fit;
  std::string data_hash;
};

std::string model_to_json(const ModelFile& model);
ModelFile model_from_json(const std::string& text);
void write_model(const std::string& path, const ModelFile& model);
ModelFile read_model(const std::string& path);

std::string scenario_to_json(const ScenarioConfig& config);
ScenarioConfig scenario_from_json(const std::string& text);
ScenarioConfig read_scenario(const std::string& path);

std::string report_csv(const ExperimentReport& report);
std::string report_reps_csv(const ExperimentReport& report);
std::string report_table(const ExperimentReport& report);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace icsm::io
