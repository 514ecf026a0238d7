#include "spdcmap/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <system_error>

#include <unistd.h>

#include "spdcmap/errors.hpp"

namespace spdcmap::io {
namespace fs = std::filesystem;
using nlohmann::json;

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 9);
  return std::string(buf, res.ptr);
}

double parse_number(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
  if (text == "nan" || text == "NaN") return std::numeric_limits<double>::quiet_NaN();
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
    throw ValidationError("malformed number '" + std::string(text) + "'");
  return value;
}

namespace {

double require_number(const json& j, const char* key) {
  if (!j.contains(key)) throw ValidationError(std::string("missing key '") + key + "'");
  const auto& v = j.at(key);
  if (!v.is_number()) throw ValidationError(std::string("key '") + key + "' must be a number");
  return v.get<double>();
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) lines.push_back(line);
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
  return lines;
}

std::vector<double> split_numbers(std::string_view line, std::size_t expected) {
  std::vector<double> out;
  while (true) {
    const auto comma = line.find(',');
    out.push_back(parse_number(line.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    line.remove_prefix(comma + 1);
  }
  if (out.size() != expected)
    throw ValidationError("CSV row has " + std::to_string(out.size()) + " fields, expected " + std::to_string(expected));
  return out;
}

void expect_header(const std::vector<std::string_view>& lines, std::string_view header) {
  if (lines.empty() || lines.front() != header)
    throw ValidationError("CSV header must be '" + std::string(header) + "'");
}

void check_coordinate(double got, double want, const char* axis) {
  if (std::abs(got - want) > 1e-5 * std::max(1.0, std::abs(want)))
    throw ValidationError(std::string("CSV ") + axis + " coordinate " + format_number(got) +
                          " does not match the grid (" + format_number(want) + ")");
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json marginal_fwhm_or_null(const GaussianJointModel& m, int arm) {
  try {
    return marginal_fwhm(m, arm);
  } catch (const std::domain_error&) {
    return nullptr;
  }
}

} // namespace

json to_json(const GaussianJointModel& m) {
  return json{{"lambda1_center_nm", m.lambda1_center}, {"lambda2_center_nm", m.lambda2_center},
              {"sigma1_nm", m.sigma1},                {"sigma2_nm", m.sigma2},
              {"sigma12_nm2", m.sigma12},             {"amplitude", m.amplitude}};
}

GaussianJointModel model_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("model must be a JSON object");
  std::vector<std::string> issues;
  GaussianJointModel m;
  const auto read = [&](const char* key, double& dst) {
    try {
      dst = require_number(j, key);
    } catch (const ValidationError& e) {
      issues.emplace_back(e.what());
    }
  };
  read("lambda1_center_nm", m.lambda1_center);
  read("lambda2_center_nm", m.lambda2_center);
  read("sigma1_nm", m.sigma1);
  read("sigma2_nm", m.sigma2);
  read("sigma12_nm2", m.sigma12);
  read("amplitude", m.amplitude);
  for (auto& issue : model_issues(m)) issues.push_back(std::move(issue));
  if (!issues.empty()) throw ValidationError(std::move(issues));
  return m;
}

json to_json(const WavelengthGrid& g) {
  return json{{"start1_nm", g.start1}, {"start2_nm", g.start2}, {"step1_nm", g.step1},
              {"step2_nm", g.step2},   {"count1", g.count1},    {"count2", g.count2}};
}

WavelengthGrid grid_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("grid must be a JSON object");
  WavelengthGrid g;
  g.start1 = require_number(j, "start1_nm");
  g.start2 = require_number(j, "start2_nm");
  g.step1 = require_number(j, "step1_nm");
  g.step2 = require_number(j, "step2_nm");
  for (const char* key : {"count1", "count2"}) {
    if (!j.contains(key) || !j.at(key).is_number_integer() || j.at(key).get<long long>() <= 0)
      throw ValidationError(std::string("grid '") + key + "' must be a positive integer");
  }
  g.count1 = j.at("count1").get<std::size_t>();
  g.count2 = j.at("count2").get<std::size_t>();
  g.validate();
  return g;
}

json to_json(const GaussianFitReport& r) {
  const auto& u = r.uncertainty;
  return json{{"status", "ok"},
              {"model", to_json(r.model)},
              {"uncertainty",
               {{"lambda1_center_nm", u.lambda1_center},
                {"lambda2_center_nm", u.lambda2_center},
                {"sigma1_nm", u.sigma1},
                {"sigma2_nm", u.sigma2},
                {"sigma12_nm2", u.sigma12},
                {"amplitude", u.amplitude}}},
              {"iterations", r.iterations},
              {"chi2", r.chi2},
              {"pixels_used", r.pixels_used},
              {"dof", r.dof},
              {"marginal_fwhm_nm", {marginal_fwhm_or_null(r.model, 1), marginal_fwhm_or_null(r.model, 2)}}};
}

json to_json(const VisibilityFit& f) {
  return json{{"offset", f.offset},
              {"offset_sigma", f.offset_sigma},
              {"visibility", f.visibility},
              {"visibility_sigma", f.visibility_sigma},
              {"gamma_deg", f.gamma_defined ? json(f.gamma_deg) : json(nullptr)},
              {"gamma_sigma_deg", f.gamma_defined ? json(f.gamma_sigma_deg) : json(nullptr)},
              {"gamma_defined", f.gamma_defined}};
}

json to_json(const FilterProfile& f) {
  switch (f.kind()) {
  case FilterProfile::Kind::lorentzian:
    return json{{"kind", "lorentzian"}, {"center_nm", f.center()}, {"fwhm_nm", f.fwhm()}};
  case FilterProfile::Kind::tabulated:
    return json{{"kind", "tabulated"}, {"wavelength_nm", f.wavelengths()}, {"transmission", f.transmissions()}};
  case FilterProfile::Kind::all_pass:
    return json{{"kind", "all_pass"}};
  }
  return json{};
}

FilterProfile filter_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string())
    throw ValidationError("filter must be an object with a 'kind'");
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "lorentzian") return FilterProfile::lorentzian(require_number(j, "center_nm"), require_number(j, "fwhm_nm"));
  if (kind == "all_pass") return FilterProfile::all_pass();
  if (kind == "tabulated") {
    if (j.contains("csv")) return filter_from_csv(read_text(j.at("csv").get<std::string>()));
    return FilterProfile::tabulated(j.at("wavelength_nm").get<std::vector<double>>(),
                                    j.at("transmission").get<std::vector<double>>());
  }
  throw ValidationError("unknown filter kind '" + kind + "'");
}

std::string map_csv(const SpectralMap& map) {
  std::string out = "lambda1_nm,lambda2_nm,value\n";
  const auto& g = map.grid();
  out.reserve(out.size() + g.size() * 36);
  for (std::size_t i = 0; i < g.count1; ++i) {
    const auto l1 = format_number(g.lambda1(i));
    for (std::size_t j = 0; j < g.count2; ++j) {
      out += l1;
      out += ',';
      out += format_number(g.lambda2(j));
      out += ',';
      out += format_number(map(i, j));
      out += '\n';
    }
  }
  return out;
}

json map_metadata_json(const SpectralMap& map) {
  const auto& md = map.metadata();
  json j{{"kind", to_string(md.kind)},
         {"units", units_of(md.kind)},
         {"grid", to_json(map.grid())},
         {"integration_s", optional_number(md.integration_s)},
         {"masked_pixels", map.masked_count()}};
  j["analyzer"] = md.analyzer ? json{{"alpha1_deg", md.analyzer->alpha1_deg}, {"alpha2_deg", md.analyzer->alpha2_deg}}
                              : json(nullptr);
  if (md.scan_alpha1_deg) {
    j["scan_alpha1_deg"] = *md.scan_alpha1_deg;
    j["scan_alpha2_deg"] = md.scan_alpha2_deg;
  }
  return j;
}

SpectralMap map_from_text(std::string_view csv, const json& meta) {
  if (!meta.is_object()) throw ValidationError("map metadata must be a JSON object");
  const auto grid = grid_from_json(meta.at("grid"));
  MapMetadata md;
  md.kind = map_kind_from_string(meta.at("kind").get<std::string>());
  if (meta.contains("integration_s") && !meta.at("integration_s").is_null())
    md.integration_s = meta.at("integration_s").get<double>();
  if (meta.contains("analyzer") && !meta.at("analyzer").is_null())
    md.analyzer = AnalyzerSetting{require_number(meta.at("analyzer"), "alpha1_deg"),
                                  require_number(meta.at("analyzer"), "alpha2_deg")};
  if (meta.contains("scan_alpha1_deg")) {
    md.scan_alpha1_deg = meta.at("scan_alpha1_deg").get<double>();
    md.scan_alpha2_deg = meta.at("scan_alpha2_deg").get<std::vector<double>>();
  }

  const auto lines = split_lines(csv);
  expect_header(lines, "lambda1_nm,lambda2_nm,value");
  if (lines.size() - 1 != grid.size())
    throw ValidationError("map CSV has " + std::to_string(lines.size() - 1) + " rows, grid has " +
                          std::to_string(grid.size()) + " pixels");
  std::vector<double> values(grid.size());
  std::size_t row = 1;
  for (std::size_t i = 0; i < grid.count1; ++i) {
    for (std::size_t j = 0; j < grid.count2; ++j, ++row) {
      const auto f = split_numbers(lines[row], 3);
      check_coordinate(f[0], grid.lambda1(i), "lambda1");
      check_coordinate(f[1], grid.lambda2(j), "lambda2");
      values[i * grid.count2 + j] = f[2];
    }
  }
  SpectralMap map(grid, md, std::move(values));
  map.validate();
  return map;
}

fs::path sidecar_path(const fs::path& csv_path) {
  auto p = csv_path;
  p.replace_extension(".json");
  return p;
}

void write_map(const SpectralMap& map, const fs::path& csv_path) {
  OutputBatch batch;
  batch.add_map(csv_path, map);
  batch.commit();
}

SpectralMap read_map(const fs::path& csv_path) {
  return map_from_text(read_text(csv_path), read_json(sidecar_path(csv_path)));
}

std::string cube_csv(const ScanCube& cube) {
  std::string out = "lambda1_nm,lambda2_nm,alpha2_deg,counts\n";
  const auto& g = cube.grid;
  for (std::size_t i = 0; i < g.count1; ++i) {
    for (std::size_t j = 0; j < g.count2; ++j) {
      for (std::size_t k = 0; k < cube.angle_count(); ++k) {
        out += format_number(g.lambda1(i)) + ',' + format_number(g.lambda2(j)) + ',' +
               format_number(cube.alpha2_deg[k]) + ',' + format_number(cube(i, j, k)) + '\n';
      }
    }
  }
  return out;
}

json cube_metadata_json(const ScanCube& cube) {
  return json{{"kind", "scan_cube"},
              {"grid", to_json(cube.grid)},
              {"alpha1_deg", cube.alpha1_deg},
              {"alpha2_deg", cube.alpha2_deg},
              {"integration_s", cube.integration_s}};
}

ScanCube cube_from_text(std::string_view csv, const json& meta) {
  ScanCube cube;
  cube.grid = grid_from_json(meta.at("grid"));
  cube.alpha1_deg = require_number(meta, "alpha1_deg");
  cube.alpha2_deg = meta.at("alpha2_deg").get<std::vector<double>>();
  cube.integration_s = require_number(meta, "integration_s");
  const auto lines = split_lines(csv);
  expect_header(lines, "lambda1_nm,lambda2_nm,alpha2_deg,counts");
  const std::size_t n = cube.grid.size() * cube.alpha2_deg.size();
  if (lines.size() - 1 != n) throw ValidationError("cube CSV row count does not match grid x angles");
  cube.values.resize(n);
  std::size_t row = 1;
  for (std::size_t i = 0; i < cube.grid.count1; ++i) {
    for (std::size_t j = 0; j < cube.grid.count2; ++j) {
      for (std::size_t k = 0; k < cube.alpha2_deg.size(); ++k, ++row) {
        const auto f = split_numbers(lines[row], 4);
        check_coordinate(f[0], cube.grid.lambda1(i), "lambda1");
        check_coordinate(f[1], cube.grid.lambda2(j), "lambda2");
        check_coordinate(f[2], cube.alpha2_deg[k], "alpha2");
        if (!(f[3] >= 0.0)) throw ValidationError("cube counts must be non-negative");
        cube(i, j, k) = f[3];
      }
    }
  }
  cube.validate();
  return cube;
}

ScanCube read_cube(const fs::path& csv_path) {
  return cube_from_text(read_text(csv_path), read_json(sidecar_path(csv_path)));
}

std::string tradeoff_csv(const TradeoffCurve& curve) {
  std::string out = "fwhm_nm,visibility,normalized_rate\n";
  for (const auto& p : curve)
    out += format_number(p.fwhm_nm) + ',' + format_number(p.visibility) + ',' + format_number(p.normalized_rate) + '\n';
  return out;
}

TradeoffCurve tradeoff_from_csv(std::string_view csv) {
  const auto lines = split_lines(csv);
  expect_header(lines, "fwhm_nm,visibility,normalized_rate");
  TradeoffCurve curve;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto f = split_numbers(lines[r], 3);
    TradeoffPoint p;
    p.fwhm_nm = f[0];
    p.visibility = f[1];
    p.normalized_rate = f[2];
    curve.push_back(p);
  }
  return curve;
}

FilterProfile filter_from_csv(std::string_view csv) {
  const auto lines = split_lines(csv);
  expect_header(lines, "wavelength_nm,transmission");
  std::vector<double> wl, tr;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto f = split_numbers(lines[r], 2);
    wl.push_back(f[0]);
    tr.push_back(f[1]);
  }
  return FilterProfile::tabulated(std::move(wl), std::move(tr));
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw ValidationError("malformed JSON in '" + path.string() + "': " + e.what());
  }
}

void OutputBatch::add(fs::path path, std::string content) { files_.emplace_back(std::move(path), std::move(content)); }

void OutputBatch::add_map(const fs::path& csv_path, const SpectralMap& map) {
  add(csv_path, map_csv(map));
  add_json(sidecar_path(csv_path), map_metadata_json(map));
}

void OutputBatch::add_json(fs::path path, const json& j) { add(std::move(path), j.dump(2) + "\n"); }

namespace {

fs::path temp_sibling(const fs::path& path) {
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  return tmp;
}

void write_file(const fs::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.close();
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

} // namespace

void OutputBatch::commit() {
  std::vector<fs::path> temps;
  try {
    for (const auto& [path, content] : files_) {
      if (path.has_parent_path()) fs::create_directories(path.parent_path());
      temps.push_back(temp_sibling(path));
      write_file(temps.back(), content);
    }
  } catch (...) {
    std::error_code ec;
    for (const auto& t : temps) fs::remove(t, ec);
    throw;
  }
  for (std::size_t k = 0; k < files_.size(); ++k) fs::rename(temps[k], files_[k].first);
  files_.clear();
}

void write_atomic(const fs::path& path, std::string_view content) {
  OutputBatch batch;
  batch.add(path, std::string(content));
  batch.commit();
}

} // namespace spdcmap::io
