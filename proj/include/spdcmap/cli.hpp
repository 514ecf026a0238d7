#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "spdcmap/simulate.hpp"
#include "spdcmap/vfilter.hpp"

namespace spdcmap::cli {

enum ExitCode : int { kSuccess = 0, kRuntimeError = 1, kValidationError = 2 };

struct ScanSpec {
  std::vector<double> alpha2_deg;
  double integration_s = 60.0;
  double max_visibility_sigma = 0.11;
};

struct VFilterSpec {
  std::optional<double> center_nm; // defaults to the model's degeneracy wavelength
  std::vector<double> fwhm_nm;
  FigureOfMerit merit = RateTimesVisibilityPower{1.0};
  bool noiseless = true;
  std::optional<std::filesystem::path> cube_file;
};

/// Everything one invocation needs, parsed and validated up front.
struct RunConfig {
  SourceConfig source;
  WavelengthGrid grid;
  std::vector<AnalyzerSetting> settings;
  double integration_s = 22.5;
  ScanSpec scan;
  double entropy_mask_threshold = 0.0;
  VFilterSpec vfilter;
  std::uint64_t seed = 0;
};

/// Parses a JSON run configuration. Relative file references are resolved
/// against base_dir. Throws ValidationError on any invalid field.
RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

/// Output file stem for an analyzer setting, e.g. (45, -45) -> "45_m45".
std::string setting_tag(const AnalyzerSetting& setting);

int cmd_simulate(const RunConfig& config, const std::filesystem::path& out_dir, std::ostream& log);
int cmd_fit(const std::filesystem::path& map_file, const std::optional<std::filesystem::path>& out_dir,
            std::ostream& out, std::ostream& log);
int cmd_maps(const RunConfig& config, const std::filesystem::path& out_dir, std::ostream& log);
int cmd_vfilter(const RunConfig& config, const std::filesystem::path& out_dir, std::ostream& log);

/// Entry point shared by the executable and the tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace spdcmap::cli
