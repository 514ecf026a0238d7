#include "spdcmap/cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>

#include <CLI11.hpp>

#include "spdcmap/analysis.hpp"
#include "spdcmap/errors.hpp"
#include "spdcmap/io.hpp"

namespace spdcmap::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

double number_or(const json& j, const char* key, double fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  if (!j.at(key).is_number()) throw ValidationError(std::string("'") + key + "' must be a number");
  return j.at(key).get<double>();
}

std::vector<double> number_list(const json& j, const char* key) {
  if (!j.contains(key)) return {};
  const auto& v = j.at(key);
  if (!v.is_array()) throw ValidationError(std::string("'") + key + "' must be an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw ValidationError(std::string("'") + key + "' must be an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

FigureOfMerit merit_from_json(const json& j) {
  const auto kind = j.value("kind", std::string{});
  if (kind == "min_visibility") return MinVisibility{number_or(j, "v_min", 0.0)};
  if (kind == "rate_times_power") {
    const double k = number_or(j, "exponent", 1.0);
    if (!(k > 0.0)) throw ValidationError("figure-of-merit exponent must be positive");
    return RateTimesVisibilityPower{k};
  }
  throw ValidationError("merit.kind must be 'min_visibility' or 'rate_times_power'");
}

json merit_to_json(const FigureOfMerit& merit) {
  if (const auto* m = std::get_if<MinVisibility>(&merit)) return json{{"kind", "min_visibility"}, {"v_min", m->v_min}};
  return json{{"kind", "rate_times_power"}, {"exponent", std::get<RateTimesVisibilityPower>(merit).exponent}};
}

void warn_if_all_masked(const SpectralMap& map, const std::string& name, std::ostream& log) {
  if (map.masked_count() == map.grid().size())
    log << "warning: every pixel of " << name << " is masked\n";
}

} // namespace

RunConfig parse_run_config(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw ValidationError("configuration must be a JSON object");
  RunConfig cfg;
  std::vector<std::string> issues;

  // Source
  if (!j.contains("source")) throw ValidationError("missing 'source' section");
  const auto& src = j.at("source");
  if (src.contains("model_file")) {
    const auto path = resolve(base_dir, src.at("model_file").get<std::string>());
    if (!fs::exists(path)) throw ValidationError("model_file '" + path.string() + "' does not exist");
    cfg.source.model_hv = io::model_from_json(io::read_json(path));
  } else if (src.contains("model")) {
    cfg.source.model_hv = io::model_from_json(src.at("model"));
  } else {
    throw ValidationError("source needs 'model' or 'model_file'");
  }
  cfg.source.delta = number_or(src, "delta_rad", std::numbers::pi);
  cfg.source.background_fraction = number_or(src, "background_fraction", 0.0);

  if (!j.contains("grid")) throw ValidationError("missing 'grid' section");
  cfg.grid = io::grid_from_json(j.at("grid"));

  if (j.contains("settings")) {
    for (const auto& s : j.at("settings"))
      cfg.settings.push_back({number_or(s, "alpha1_deg", 0.0), number_or(s, "alpha2_deg", 0.0)});
  }
  cfg.integration_s = number_or(j, "integration_s", cfg.integration_s);
  if (!(cfg.integration_s > 0.0)) issues.emplace_back("integration_s must be positive");

  if (j.contains("scan")) {
    const auto& s = j.at("scan");
    cfg.scan.alpha2_deg = number_list(s, "alpha2_deg");
    cfg.scan.integration_s = number_or(s, "integration_s", cfg.scan.integration_s);
    cfg.scan.max_visibility_sigma = number_or(s, "max_visibility_sigma", cfg.scan.max_visibility_sigma);
    if (!(cfg.scan.integration_s > 0.0)) issues.emplace_back("scan.integration_s must be positive");
  }
  if (j.contains("entropy")) cfg.entropy_mask_threshold = number_or(j.at("entropy"), "mask_threshold", 0.0);

  if (j.contains("vfilter")) {
    const auto& v = j.at("vfilter");
    if (v.contains("center_nm") && !v.at("center_nm").is_null()) cfg.vfilter.center_nm = v.at("center_nm").get<double>();
    cfg.vfilter.fwhm_nm = number_list(v, "fwhm_nm");
    for (std::size_t k = 0; k < cfg.vfilter.fwhm_nm.size(); ++k) {
      if (!(cfg.vfilter.fwhm_nm[k] > 0.0) || (k > 0 && !(cfg.vfilter.fwhm_nm[k] > cfg.vfilter.fwhm_nm[k - 1]))) {
        issues.emplace_back("vfilter.fwhm_nm must be positive and strictly increasing");
        break;
      }
    }
    if (v.contains("merit")) cfg.vfilter.merit = merit_from_json(v.at("merit"));
    cfg.vfilter.noiseless = v.value("noiseless", true);
    if (v.contains("cube_file")) {
      cfg.vfilter.cube_file = resolve(base_dir, v.at("cube_file").get<std::string>());
      if (!fs::exists(*cfg.vfilter.cube_file))
        issues.emplace_back("cube_file '" + cfg.vfilter.cube_file->string() + "' does not exist");
    }
  }
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) throw ValidationError("seed must be a non-negative integer");
    cfg.seed = j.at("seed").get<std::uint64_t>();
  }
  cfg.source.rng_seed = cfg.seed;

  try {
    cfg.source.validate();
  } catch (const ValidationError& e) {
    issues.insert(issues.end(), e.issues().begin(), e.issues().end());
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));
  return cfg;
}

RunConfig load_run_config(const fs::path& path) {
  if (!fs::exists(path)) throw ValidationError("config '" + path.string() + "' does not exist");
  return parse_run_config(io::read_json(path), path.parent_path());
}

std::string setting_tag(const AnalyzerSetting& s) {
  const auto tag = [](double deg) {
    auto t = io::format_number(deg);
    if (!t.empty() && t.front() == '-') t.replace(0, 1, "m");
    return t;
  };
  return tag(s.alpha1_deg) + "_" + tag(s.alpha2_deg);
}

int cmd_simulate(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  if (cfg.settings.empty()) throw ValidationError("simulate needs at least one analyzer setting");
  io::OutputBatch batch;
  for (std::size_t k = 0; k < cfg.settings.size(); ++k) {
    const auto& s = cfg.settings[k];
    const auto rates = rate_map(cfg.source, s, cfg.grid);
    const auto counts = sample_counts(rates, cfg.integration_s, cfg.source.background_fraction, derive_seed(cfg.seed, k));
    batch.add_map(out_dir / ("rate_" + setting_tag(s) + ".csv"), rates);
    batch.add_map(out_dir / ("counts_" + setting_tag(s) + ".csv"), counts);
  }
  batch.commit();
  log << "simulate: wrote " << 2 * cfg.settings.size() << " maps to " << out_dir.string() << "\n";
  return kSuccess;
}

int cmd_fit(const fs::path& map_file, const std::optional<fs::path>& out_dir, std::ostream& out, std::ostream& log) {
  const auto map = io::read_map(map_file);
  GaussianFitReport report;
  try {
    report = fit_gaussian2d(map);
  } catch (const FitError& e) {
    log << json{{"status", "error"}, {"message", e.what()}, {"map", map_file.string()}}.dump(2) << "\n";
    return kRuntimeError;
  }
  auto j = io::to_json(report);
  j["map"] = map_file.filename().string();
  if (out_dir) io::write_atomic(*out_dir / "fit_report.json", j.dump(2) + "\n");
  out << j.dump(2) << "\n";
  return kSuccess;
}

int cmd_maps(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  if (cfg.scan.alpha2_deg.empty()) throw ValidationError("maps needs scan.alpha2_deg");
  PolarizerScan probe{45.0, {}};
  for (double a : cfg.scan.alpha2_deg) probe.samples.push_back({a, 0.0, 1.0});
  probe.validate();

  auto scan_source = cfg.source;
  scan_source.rng_seed = derive_seed(cfg.seed, 1);
  const auto cube = sample_scan_cube(scan_source, cfg.grid, 45.0, cfg.scan.alpha2_deg, cfg.scan.integration_s);
  const auto vg = visibility_gamma_maps(cube, cfg.scan.max_visibility_sigma);

  const auto hv_rate = rate_map(cfg.source, {0.0, 0.0}, cfg.grid);
  const auto vh_rate = rate_map(cfg.source, {90.0, 90.0}, cfg.grid);
  const auto hv = sample_counts(hv_rate, cfg.integration_s, cfg.source.background_fraction, derive_seed(cfg.seed, 2));
  const auto vh = sample_counts(vh_rate, cfg.integration_s, cfg.source.background_fraction, derive_seed(cfg.seed, 3));
  const auto entropy = entropy_map(hv, vh, cfg.entropy_mask_threshold);
  const auto entropy_model = entropy_map(hv_rate, vh_rate, 0.0);

  warn_if_all_masked(vg.visibility, "visibility_45", log);
  warn_if_all_masked(vg.gamma, "gamma_45", log);
  warn_if_all_masked(entropy, "entropy", log);

  io::OutputBatch batch;
  batch.add_map(out_dir / "visibility_45.csv", vg.visibility);
  batch.add_map(out_dir / "gamma_45.csv", vg.gamma);
  batch.add_map(out_dir / "entropy.csv", entropy);
  batch.add_map(out_dir / "entropy_model.csv", entropy_model);
  batch.add_map(out_dir / "counts_0_0.csv", hv);
  batch.add_map(out_dir / "counts_90_90.csv", vh);
  batch.commit();
  log << "maps: wrote visibility, gamma and entropy maps to " << out_dir.string() << "\n";
  return kSuccess;
}

int cmd_vfilter(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  if (cfg.vfilter.fwhm_nm.empty()) throw ValidationError("vfilter needs vfilter.fwhm_nm");
  ScanCube cube;
  if (cfg.vfilter.cube_file) {
    cube = io::read_cube(*cfg.vfilter.cube_file);
  } else {
    if (cfg.scan.alpha2_deg.empty()) throw ValidationError("vfilter needs scan.alpha2_deg or vfilter.cube_file");
    auto source = cfg.source;
    source.rng_seed = derive_seed(cfg.seed, 4);
    cube = cfg.vfilter.noiseless
               ? expected_scan_cube(source, cfg.grid, 45.0, cfg.scan.alpha2_deg, cfg.scan.integration_s)
               : sample_scan_cube(source, cfg.grid, 45.0, cfg.scan.alpha2_deg, cfg.scan.integration_s);
  }
  const double center = cfg.vfilter.center_nm.value_or(degeneracy_wavelength(cfg.source.model_hv));
  const auto curve = tradeoff_curve(cube, center, cfg.vfilter.fwhm_nm);
  const auto best = optimize_filter_index(curve, cfg.vfilter.merit);

  const json optimum{{"center_nm", center},
                     {"merit", merit_to_json(cfg.vfilter.merit)},
                     {"fwhm_nm", curve[best].fwhm_nm},
                     {"visibility", curve[best].visibility},
                     {"normalized_rate", curve[best].normalized_rate},
                     {"gamma_deg", curve[best].gamma_deg}};
  io::OutputBatch batch;
  batch.add(out_dir / "tradeoff.csv", io::tradeoff_csv(curve));
  batch.add_json(out_dir / "optimum.json", optimum);
  batch.commit();
  log << "vfilter: optimum FWHM " << io::format_number(curve[best].fwhm_nm) << " nm (V45 = "
      << io::format_number(curve[best].visibility) << ")\n";
  return kSuccess;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spectrally resolved polarization-entanglement toolkit for type-II SPDC"};
  app.require_subcommand(1);

  std::string config_path, out_dir, map_path;
  std::optional<std::uint64_t> seed;
  const auto add_shared = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "run configuration (JSON)")->required();
    sub->add_option("--out", out_dir, "output directory")->required();
    sub->add_option("--seed", seed, "RNG seed (overrides the config)");
  };
  auto* simulate = app.add_subcommand("simulate", "rate and Poisson count maps per analyzer setting");
  add_shared(simulate);
  auto* fit = app.add_subcommand("fit", "fit the 2D Gaussian joint-spectrum model to a map");
  fit->add_option("--map", map_path, "map CSV (with JSON sidecar)")->required();
  fit->add_option("--out", out_dir, "directory for fit_report.json");
  auto* maps = app.add_subcommand("maps", "visibility, gamma and entropy maps");
  add_shared(maps);
  auto* vfilter = app.add_subcommand("vfilter", "virtual-filter tradeoff curve and optimum");
  add_shared(vfilter);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kValidationError;
  }

  try {
    if (fit->parsed()) {
      std::optional<fs::path> dir;
      if (!out_dir.empty()) dir = out_dir;
      return cmd_fit(map_path, dir, out, err);
    }
    auto cfg = load_run_config(config_path);
    if (seed) {
      cfg.seed = *seed;
      cfg.source.rng_seed = *seed;
    }
    if (simulate->parsed()) return cmd_simulate(cfg, out_dir, err);
    if (maps->parsed()) return cmd_maps(cfg, out_dir, err);
    return cmd_vfilter(cfg, out_dir, err);
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << "\n";
    return kValidationError;
  } catch (const nlohmann::json::exception& e) {
    err << "validation error: " << e.what() << "\n";
    return kValidationError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
}

} // namespace spdcmap::cli
