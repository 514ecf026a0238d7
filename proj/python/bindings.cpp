#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "spdcmap/analysis.hpp"
#include "spdcmap/errors.hpp"
#include "spdcmap/vfilter.hpp"

namespace py = pybind11;
using namespace spdcmap;

namespace {

py::array_t<double> as_array(const SpectralMap& map) {
  py::array_t<double> out({map.grid().count1, map.grid().count2});
  std::copy(map.values().begin(), map.values().end(), out.mutable_data());
  return out;
}

SpectralMap map_from_array(py::array_t<double, py::array::c_style | py::array::forcecast> values,
                           const WavelengthGrid& grid, MapKind kind, std::optional<double> integration_s) {
  if (values.ndim() != 2 || static_cast<std::size_t>(values.shape(0)) != grid.count1 ||
      static_cast<std::size_t>(values.shape(1)) != grid.count2)
    throw ValidationError("array shape does not match the grid");
  MapMetadata meta{kind, std::nullopt, integration_s, std::nullopt, {}};
  return SpectralMap(grid, meta, std::vector<double>(values.data(), values.data() + values.size()));
}

} // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "joint-spectrum and polarization-entanglement maps";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<FitError>(m, "FitError", PyExc_RuntimeError);

  py::class_<GaussianJointModel>(m, "GaussianJointModel")
      .def(py::init<double, double, double, double, double, double>(), py::arg("lambda1_center"),
           py::arg("lambda2_center"), py::arg("sigma1"), py::arg("sigma2"), py::arg("sigma12"),
           py::arg("amplitude") = 1.0)
      .def_readwrite("lambda1_center", &GaussianJointModel::lambda1_center)
      .def_readwrite("lambda2_center", &GaussianJointModel::lambda2_center)
      .def_readwrite("sigma1", &GaussianJointModel::sigma1)
      .def_readwrite("sigma2", &GaussianJointModel::sigma2)
      .def_readwrite("sigma12", &GaussianJointModel::sigma12)
      .def_readwrite("amplitude", &GaussianJointModel::amplitude)
      .def("__eq__", [](const GaussianJointModel& a, const GaussianJointModel& b) { return a == b; })
      .def("__repr__", [](const GaussianJointModel& g) {
        return "GaussianJointModel(" + std::to_string(g.lambda1_center) + ", " + std::to_string(g.lambda2_center) +
               ", " + std::to_string(g.sigma1) + ", " + std::to_string(g.sigma2) + ", " + std::to_string(g.sigma12) +
               ", " + std::to_string(g.amplitude) + ")";
      });

  m.def("reference_hv_model", &reference_hv_model);
  m.def("validate_model", [](const GaussianJointModel& g) { validate(g); });
  m.def("model_issues", &model_issues);
  m.def(
      "gaussian_eval",
      [](const GaussianJointModel& g, py::array_t<double> l1, py::array_t<double> l2) {
        return py::vectorize([g](double x, double y) { return gaussian_eval(g, x, y); })(l1, l2);
      },
      py::arg("model"), py::arg("lambda1"), py::arg("lambda2"));
  m.def("mirror_path", &mirror_path);
  m.def("marginal_fwhm", &marginal_fwhm, py::arg("model"), py::arg("arm"));
  m.def("degeneracy_wavelength", &degeneracy_wavelength);
  m.def("path_amplitudes", &path_amplitudes, py::arg("g_hv"), py::arg("g_vh"));

  py::class_<WavelengthGrid>(m, "WavelengthGrid")
      .def(py::init<double, double, double, double, std::size_t, std::size_t>(), py::arg("start1"), py::arg("start2"),
           py::arg("step1"), py::arg("step2"), py::arg("count1"), py::arg("count2"))
      .def_static("centered", &WavelengthGrid::centered, py::arg("center"), py::arg("step"), py::arg("count"))
      .def_readwrite("start1", &WavelengthGrid::start1)
      .def_readwrite("start2", &WavelengthGrid::start2)
      .def_readwrite("step1", &WavelengthGrid::step1)
      .def_readwrite("step2", &WavelengthGrid::step2)
      .def_readwrite("count1", &WavelengthGrid::count1)
      .def_readwrite("count2", &WavelengthGrid::count2)
      .def("lambda1", [](const WavelengthGrid& g) {
        py::array_t<double> out(g.count1);
        for (std::size_t i = 0; i < g.count1; ++i) out.mutable_at(i) = g.lambda1(i);
        return out;
      })
      .def("lambda2", [](const WavelengthGrid& g) {
        py::array_t<double> out(g.count2);
        for (std::size_t j = 0; j < g.count2; ++j) out.mutable_at(j) = g.lambda2(j);
        return out;
      });

  py::class_<TwoPathState>(m, "TwoPathState")
      .def(py::init<double, double, double>(), py::arg("a"), py::arg("b"), py::arg("delta"))
      .def_static("from_a", &TwoPathState::from_a, py::arg("a"), py::arg("delta"))
      .def_readwrite("a", &TwoPathState::a)
      .def_readwrite("b", &TwoPathState::b)
      .def_readwrite("delta", &TwoPathState::delta);

  m.def("coincidence_prob", [](const TwoPathState& s, double a1, double a2) { return coincidence_prob(s, {a1, a2}); },
        py::arg("state"), py::arg("alpha1_deg"), py::arg("alpha2_deg"));
  m.def("gamma_max", &gamma_max);
  m.def("entanglement_entropy", &entanglement_entropy);
  m.def("visibility_45", &visibility_45);

  py::class_<SourceConfig>(m, "SourceConfig")
      .def(py::init([](const GaussianJointModel& model, double delta, double rho, std::uint64_t seed) {
             return SourceConfig{model, delta, rho, seed};
           }),
           py::arg("model_hv") = reference_hv_model(), py::arg("delta") = 3.141592653589793,
           py::arg("background_fraction") = 0.0, py::arg("rng_seed") = 0)
      .def_readwrite("model_hv", &SourceConfig::model_hv)
      .def_readwrite("delta", &SourceConfig::delta)
      .def_readwrite("background_fraction", &SourceConfig::background_fraction)
      .def_readwrite("rng_seed", &SourceConfig::rng_seed);

  m.def(
      "rate_map",
      [](const SourceConfig& cfg, double a1, double a2, const WavelengthGrid& grid) {
        return as_array(rate_map(cfg, {a1, a2}, grid));
      },
      py::arg("config"), py::arg("alpha1_deg"), py::arg("alpha2_deg"), py::arg("grid"));
  m.def(
      "sample_counts",
      [](py::array_t<double> rates, const WavelengthGrid& grid, double t, double rho, std::uint64_t seed) {
        return as_array(sample_counts(map_from_array(rates, grid, MapKind::rate, std::nullopt), t, rho, seed));
      },
      py::arg("rates"), py::arg("grid"), py::arg("integration_s"), py::arg("background_fraction"), py::arg("seed"));

  py::class_<VisibilityFit>(m, "VisibilityFit")
      .def_readonly("offset", &VisibilityFit::offset)
      .def_readonly("visibility", &VisibilityFit::visibility)
      .def_readonly("gamma_deg", &VisibilityFit::gamma_deg)
      .def_readonly("gamma_defined", &VisibilityFit::gamma_defined)
      .def_readonly("offset_sigma", &VisibilityFit::offset_sigma)
      .def_readonly("visibility_sigma", &VisibilityFit::visibility_sigma)
      .def_readonly("gamma_sigma_deg", &VisibilityFit::gamma_sigma_deg);

  m.def(
      "fit_sinusoid",
      [](const std::vector<double>& alpha2, const std::vector<double>& counts, double t, double alpha1) {
        if (alpha2.size() != counts.size()) throw ValidationError("angles and counts differ in length");
        PolarizerScan scan{alpha1, {}};
        for (std::size_t k = 0; k < alpha2.size(); ++k) scan.samples.push_back({alpha2[k], counts[k], t});
        return fit_sinusoid(scan);
      },
      py::arg("alpha2_deg"), py::arg("counts"), py::arg("integration_s"), py::arg("alpha1_deg") = 45.0);

  py::class_<GaussianFitReport>(m, "GaussianFitReport")
      .def_readonly("model", &GaussianFitReport::model)
      .def_readonly("iterations", &GaussianFitReport::iterations)
      .def_readonly("chi2", &GaussianFitReport::chi2)
      .def_readonly("pixels_used", &GaussianFitReport::pixels_used)
      .def_readonly("dof", &GaussianFitReport::dof)
      .def_property_readonly("uncertainty", [](const GaussianFitReport& r) {
        const auto& u = r.uncertainty;
        py::dict d;
        d["lambda1_center"] = u.lambda1_center;
        d["lambda2_center"] = u.lambda2_center;
        d["sigma1"] = u.sigma1;
        d["sigma2"] = u.sigma2;
        d["sigma12"] = u.sigma12;
        d["amplitude"] = u.amplitude;
        return d;
      });

  m.def(
      "fit_gaussian2d",
      [](py::array_t<double> values, const WavelengthGrid& grid, std::optional<double> integration_s) {
        const auto kind = integration_s ? MapKind::counts : MapKind::rate;
        return fit_gaussian2d(map_from_array(values, grid, kind, integration_s));
      },
      py::arg("values"), py::arg("grid"), py::arg("integration_s") = py::none(),
      "Counts maps when integration_s is given, rate maps otherwise.");

  m.def("correct_fourphoton", &correct_fourphoton, py::arg("v_measured"), py::arg("rho"),
        py::arg("tolerance") = 1e-9);
  m.def("mix_flat_background", &mix_flat_background, py::arg("v_two_photon"), py::arg("rho"));

  py::class_<TradeoffPoint>(m, "TradeoffPoint")
      .def_readonly("fwhm_nm", &TradeoffPoint::fwhm_nm)
      .def_readonly("visibility", &TradeoffPoint::visibility)
      .def_readonly("gamma_deg", &TradeoffPoint::gamma_deg)
      .def_readonly("mean_rate", &TradeoffPoint::mean_rate)
      .def_readonly("normalized_rate", &TradeoffPoint::normalized_rate);

  m.def(
      "tradeoff_curve",
      [](const SourceConfig& cfg, const WavelengthGrid& grid, const std::vector<double>& alpha2,
         const std::vector<double>& fwhm, std::optional<double> center_nm, double integration_s, bool noiseless) {
        const auto cube = noiseless ? expected_scan_cube(cfg, grid, 45.0, alpha2, integration_s)
                                    : sample_scan_cube(cfg, grid, 45.0, alpha2, integration_s);
        return tradeoff_curve(cube, center_nm.value_or(degeneracy_wavelength(cfg.model_hv)), fwhm);
      },
      py::arg("config"), py::arg("grid"), py::arg("alpha2_deg"), py::arg("fwhm_nm"), py::arg("center_nm") = py::none(),
      py::arg("integration_s") = 60.0, py::arg("noiseless") = true);

  m.def(
      "optimize_filter",
      [](const TradeoffCurve& curve, std::optional<double> v_min, std::optional<double> exponent) {
        if (v_min.has_value() == exponent.has_value()) throw ValidationError("give exactly one of v_min or exponent");
        if (v_min) return optimize_filter(curve, MinVisibility{*v_min});
        return optimize_filter(curve, RateTimesVisibilityPower{*exponent});
      },
      py::arg("curve"), py::arg("v_min") = py::none(), py::arg("exponent") = py::none());
}
