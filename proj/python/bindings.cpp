#include "fcml/analysis.hpp"
#include "fcml/config.hpp"
#include "fcml/engine.hpp"
#include "fcml/estimator.hpp"
#include "fcml/modulation.hpp"
#include "fcml/plant.hpp"
#include "fcml/sampling.hpp"

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace fcml;

namespace {

SwitchVector to_switches(const std::vector<int>& s) {
    SwitchVector out;
    for (int v : s) {
        require(v == 0 || v == 1, "switch states must be 0 or 1");
        out.states.push_back(static_cast<std::uint8_t>(v));
    }
    return out;
}

py::array_t<double> column(const std::vector<double>& v) {
    return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

py::array_t<double> matrix(const std::vector<Vector>& rows) {
    const auto n = static_cast<py::ssize_t>(rows.size());
    const py::ssize_t m = rows.empty() ? 0 : rows.front().size();
    py::array_t<double> out({n, m});
    auto a = out.mutable_unchecked<2>();
    for (py::ssize_t i = 0; i < n; ++i) {
        for (py::ssize_t j = 0; j < m; ++j) {
            a(i, j) = rows[static_cast<std::size_t>(i)][j];
        }
    }
    return out;
}

SamplingSchedule schedule(int levels, int ns, double fsw) { return {levels, ns, fsw}; }

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "fcml simulation and analysis core";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_RuntimeError);
    py::register_exception<InfeasibleError>(m, "InfeasibleError", PyExc_RuntimeError);

    py::class_<ConverterParams>(m, "ConverterParams")
        .def(py::init<>())
        .def_static("reference_design", &ConverterParams::reference_design)
        .def_readwrite("levels", &ConverterParams::levels)
        .def_readwrite("inductance", &ConverterParams::inductance)
        .def_readwrite("flying_capacitance", &ConverterParams::flying_capacitance)
        .def_readwrite("output_capacitance", &ConverterParams::output_capacitance)
        .def_readwrite("load_resistance", &ConverterParams::load_resistance)
        .def_readwrite("switching_frequency", &ConverterParams::switching_frequency)
        .def_readwrite("damping_resistance", &ConverterParams::damping_resistance)
        .def_readwrite("grid_vrms", &ConverterParams::grid_vrms)
        .def_readwrite("grid_frequency", &ConverterParams::grid_frequency)
        .def_readwrite("grid_phase", &ConverterParams::grid_phase)
        .def_readwrite("dc_input_voltage", &ConverterParams::dc_input_voltage)
        .def("validate", &ConverterParams::validate);

    m.def(
        "pole_voltage",
        [](const std::vector<int>& s, const Vector& vc, double vin) {
            return pole_voltage(to_switches(s), vc, vin);
        },
        py::arg("s"), py::arg("vc"), py::arg("vin"));
    m.def("switch_stress", &switch_stress, py::arg("vc"), py::arg("vin"));
    m.def("balanced_voltages", &balanced_voltages, py::arg("levels"), py::arg("vin"));

    m.def(
        "carrier_value",
        [](int levels, double fsw, int k, double t) { return CarrierBank(levels, fsw).value(k, t); },
        py::arg("levels"), py::arg("fsw"), py::arg("k"), py::arg("t"));
    m.def(
        "switch_states",
        [](const Vector& d, double fsw, double t) {
            const auto s = CarrierBank(static_cast<int>(d.size()) + 1, fsw)
                               .switch_states(DutyVector(d), t);
            return std::vector<int>(s.states.begin(), s.states.end());
        },
        py::arg("d"), py::arg("fsw"), py::arg("t"));
    m.def("dead_duty_set", &dead_duty_set, py::arg("levels"));

    m.def("n_dis", &n_dis, py::arg("levels"));
    m.def("select_ms", &select_ms, py::arg("levels"), py::arg("ns"));

    m.def("feedback_update", &feedback_update, py::arg("vhat"), py::arg("ds"), py::arg("vsw"),
          py::arg("s_top"), py::arg("vin"), py::arg("alpha"));
    m.def("feedforward_update", &feedforward_update, py::arg("il"), py::arg("prev_dduty"),
          py::arg("cf"), py::arg("taus"));
    m.def("alpha_stability_limit", &alpha_stability_limit, py::arg("levels"));

    m.def("system_matrix", &system_matrix, py::arg("ds"), py::arg("alpha"));
    m.def("system_matrix_eigenvalues", &system_matrix_eigenvalues, py::arg("ds"), py::arg("alpha"));
    m.def(
        "switching_sequence",
        [](const Vector& d, int ns, double fsw) {
            const int levels = static_cast<int>(d.size()) + 1;
            return matrix(switching_sequence(DutyVector(d), schedule(levels, ns, fsw)));
        },
        py::arg("d"), py::arg("ns") = 47, py::arg("fsw") = 120e3);
    m.def(
        "stacked_rank",
        [](const Matrix& rows) {
            std::vector<Vector> r;
            for (Eigen::Index i = 0; i < rows.rows(); ++i) {
                r.emplace_back(rows.row(i).transpose());
            }
            return stacked_rank(r);
        },
        py::arg("rows"));
    m.def(
        "beta_max",
        [](const Vector& d, double alpha, int ns, double fsw) {
            const int levels = static_cast<int>(d.size()) + 1;
            return p_fr_and_beta_max(switching_sequence(DutyVector(d), schedule(levels, ns, fsw)),
                                     alpha)
                .beta_max;
        },
        py::arg("d"), py::arg("alpha"), py::arg("ns") = 47, py::arg("fsw") = 120e3);

    py::class_<RankReport>(m, "RankReport")
        .def_readonly("levels", &RankReport::levels)
        .def_readonly("dduty_max", &RankReport::dduty_max)
        .def_readonly("grid_step", &RankReport::grid_step)
        .def_readonly("feasible", &RankReport::feasible)
        .def_readonly("evaluated_points", &RankReport::evaluated_points)
        .def_readonly("failing_points", &RankReport::failing_points)
        .def_readonly("skipped_points", &RankReport::skipped_points);
    m.def(
        "full_rank_feasibility",
        [](int levels, double dduty_max, double grid_step, double margin) {
            return full_rank_feasibility(levels, dduty_max, grid_step, margin, 0);
        },
        py::arg("levels"), py::arg("dduty_max"), py::arg("grid_step") = 0.01,
        py::arg("dead_margin") = kDefaultDeadMargin);

    m.def(
        "default_config_json", []() { return run_config_to_json(RunConfig{}); },
        "Complete default run configuration (six-level reference scenario) as JSON text.");
    m.def(
        "run_scenario",
        [](const std::string& config_json, const std::vector<std::string>& overrides) {
            const RunConfig cfg = parse_run_config(config_json, overrides);
            WaveformLog log;
            {
                py::gil_scoped_release release;
                log = run_scenario(cfg.scenario);
            }
            py::dict out;
            out["t"] = column(log.t);
            out["iL"] = column(log.il);
            out["iL_ref"] = column(log.il_ref);
            out["vout"] = column(log.vout);
            out["vin"] = column(log.vin);
            out["est_error"] = column(log.est_error);
            out["vc"] = matrix(log.vc);
            out["vhat"] = matrix(log.vhat);
            out["duty"] = matrix(log.duty);
            out["stress"] = matrix(log.stress);
            py::list segs;
            for (const auto& s : log.segments) {
                py::dict d;
                d["t_start"] = s.t_start;
                d["t_end"] = s.t_end;
                d["max_stress"] = s.max_stress;
                d["max_est_error"] = s.max_est_error;
                d["max_iL"] = s.max_il;
                d["max_iL_ref"] = s.max_il_ref;
                segs.append(d);
            }
            out["segments"] = segs;
            out["settling_time"] = log.settling_time ? py::cast(*log.settling_time) : py::none();
            out["warnings"] = log.warnings;
            return out;
        },
        py::arg("config_json") = "{}", py::arg("overrides") = std::vector<std::string>{},
        "Run a scenario described by a JSON configuration; returns sampled channels.");
}
