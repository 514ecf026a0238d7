#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "spdcmap/analysis.hpp"
#include "spdcmap/simulate.hpp"
#include "spdcmap/spectral_model.hpp"
#include "spdcmap/vfilter.hpp"

namespace spdcmap::io {

/// 9 significant digits, '.' separator, independent of the global locale.
/// NaN prints as "nan".
std::string format_number(double value);
double parse_number(std::string_view text);

nlohmann::json to_json(const GaussianJointModel& model);
GaussianJointModel model_from_json(const nlohmann::json& j);
nlohmann::json to_json(const WavelengthGrid& grid);
WavelengthGrid grid_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GaussianFitReport& report);
nlohmann::json to_json(const VisibilityFit& fit);
nlohmann::json to_json(const FilterProfile& filter);
FilterProfile filter_from_json(const nlohmann::json& j);

/// CSV body with header `lambda1_nm,lambda2_nm,value`, one row per pixel,
/// lambda1 outer.
std::string map_csv(const SpectralMap& map);
/// Sidecar metadata: kind, units, grid, analyzer angles, integration time.
nlohmann::json map_metadata_json(const SpectralMap& map);
SpectralMap map_from_text(std::string_view csv, const nlohmann::json& metadata);

/// `foo.csv` -> `foo.json`
std::filesystem::path sidecar_path(const std::filesystem::path& csv_path);

void write_map(const SpectralMap& map, const std::filesystem::path& csv_path);
SpectralMap read_map(const std::filesystem::path& csv_path);

/// CSV `lambda1_nm,lambda2_nm,alpha2_deg,counts` plus a JSON sidecar with
/// grid, alpha1_deg, alpha2_deg list and integration_s.
std::string cube_csv(const ScanCube& cube);
nlohmann::json cube_metadata_json(const ScanCube& cube);
ScanCube cube_from_text(std::string_view csv, const nlohmann::json& metadata);
ScanCube read_cube(const std::filesystem::path& csv_path);

/// CSV `fwhm_nm,visibility,normalized_rate`.
std::string tradeoff_csv(const TradeoffCurve& curve);
TradeoffCurve tradeoff_from_csv(std::string_view csv);

/// Two-column CSV `wavelength_nm,transmission`.
FilterProfile filter_from_csv(std::string_view csv);

std::string read_text(const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);

/// Collects file contents and writes them all-or-nothing: every file goes to a
/// temporary sibling first and is renamed into place only once all writes
/// succeeded.
class OutputBatch {
public:
  void add(std::filesystem::path path, std::string content);
  void add_map(const std::filesystem::path& csv_path, const SpectralMap& map);
  void add_json(std::filesystem::path path, const nlohmann::json& j);
  void commit();
  const std::vector<std::pair<std::filesystem::path, std::string>>& files() const { return files_; }

private:
  std::vector<std::pair<std::filesystem::path, std::string>> files_;
};

void write_atomic(const std::filesystem::path& path, std::string_view content);

} // namespace spdcmap::io
