#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>

#include "fesram/analysis.hpp"
#include "fesram/cellbench.hpp"
#include "fesram/config.hpp"
#include "fesram/engine.hpp"
#include "fesram/error.hpp"
#include "fesram/io.hpp"
#include "fesram/netlist.hpp"

namespace py = pybind11;
using namespace fesram;
using cellbench::CellConfig;
using cellbench::Topology;

namespace {

Topology topology(const std::string& name) {
    if (name == "nvsram") return Topology::Nvsram6T;
    if (name == "baseline") return Topology::Baseline6T;
    throw DomainError("topology must be nvsram or baseline, got " + name);
}

analysis::SnmMode snm_mode(const std::string& name) {
    if (name == "hold") return analysis::SnmMode::Hold;
    if (name == "read") return analysis::SnmMode::Read;
    if (name == "write") return analysis::SnmMode::Write;
    throw DomainError("mode must be hold, read or write, got " + name);
}

config::Config load(const std::optional<std::string>& path) { return config::load(path); }

CellConfig cell(const std::optional<std::string>& cfg, const std::string& topo) {
    return CellConfig::from_config(load(cfg), topology(topo));
}

py::dict waveform_dict(const engine::Waveform& w) {
    py::dict nodes;
    for (std::size_t i = 0; i < w.node_names.size(); ++i) nodes[py::str(w.node_names[i])] = w.node_voltages[i];
    py::dict out;
    out["time"] = w.times;
    out["nodes"] = nodes;
    return out;
}

// runs every directive of a netlist, like `fesram sim` without the files
py::list simulate(const std::string& text, const std::optional<std::string>& cfg) {
    const auto nl = netlist::parse(text);
    netlist::ModelLibrary lib;
    lib.add_cards(nl.models);
    const auto el = netlist::elaborate(nl, lib);
    const auto solver = cellbench::solver_from_config(load(cfg));
    py::list results;
    using Kind = netlist::AnalysisDirective::Kind;
    for (const auto& d : el.plan) {
        auto circuit = el.circuit;
        py::dict r;
        if (d.kind == Kind::Tran) {
            auto s = solver;
            s.dtmax = d.dtmax;
            r = waveform_dict(engine::transient(circuit, d.tstop, s));
            r["kind"] = "tran";
        } else if (d.kind == Kind::Op) {
            const auto sol = engine::dc_operating_point(circuit, solver);
            py::dict nodes;
            for (int i = 0; i < circuit.node_count(); ++i) {
                nodes[py::str(circuit.node_name(i))] = sol.node_voltages[static_cast<std::size_t>(i)];
            }
            r["kind"] = "op";
            r["nodes"] = nodes;
        } else if (d.kind == Kind::Dc) {
            const auto sw = engine::dc_sweep(circuit, d.source, d.start, d.stop, d.step, solver);
            py::dict nodes;
            const auto names = circuit.node_names();
            for (std::size_t i = 0; i < names.size(); ++i) {
                std::vector<double> v;
                for (const auto& p : sw.points) v.push_back(p.node_voltages[i]);
                nodes[py::str(names[i])] = v;
            }
            r["kind"] = "dc";
            r["values"] = sw.values;
            r["nodes"] = nodes;
        } else {
            continue;
        }
        results.append(r);
    }
    return results;
}

}  // namespace

PYBIND11_MODULE(_fesram, m) {
    m.attr("__version__") = io::kVersion;

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ParseError>(m, "ParseError", base.ptr());
    py::register_exception<SolverError>(m, "SolverError", base.ptr());
    py::register_exception<DomainError>(m, "DomainError", base.ptr());
    py::register_exception<ExtractionError>(m, "ExtractionError", base.ptr());

    m.def("format_netlist", [](const std::string& text) { return netlist::unparse(netlist::parse(text)); },
          py::arg("text"), "Parse a netlist and print it back in canonical form.");
    m.def("simulate", &simulate, py::arg("text"), py::arg("config") = py::none(),
          "Run the .op/.tran/.dc directives of a netlist; one dict per directive.");

    m.def(
        "read_latency",
        [](const std::string& topo, int bit, const std::optional<std::string>& cfg) {
            const auto c = cell(cfg, topo);
            return cellbench::run_read(c, cellbench::latched_state(c, bit)).latency;
        },
        py::arg("topology") = "nvsram", py::arg("bit") = 1, py::arg("config") = py::none());

    m.def(
        "butterfly",
        [](const std::string& topo, int bit, const std::string& mode, const std::optional<std::string>& cfg) {
            const auto c = cell(cfg, topo);
            const auto r = analysis::butterfly(c, cellbench::latched_state(c, bit), snm_mode(mode));
            py::dict d;
            d["snm"] = r.snm;
            d["lobes"] = r.lobe_snm;
            d["stable_count"] = r.stable_count;
            d["monostable"] = r.monostable;
            return d;
        },
        py::arg("topology") = "nvsram", py::arg("bit") = 1, py::arg("mode") = "hold", py::arg("config") = py::none());

    m.def(
        "power_cycle",
        [](int bit, double target_vdd, const std::string& topo, const std::optional<std::string>& cfg) {
            const auto c = cell(cfg, topo);
            const auto off = cellbench::run_power_off(c, cellbench::latched_state(c, bit));
            const auto r = cellbench::run_restore_one_step(c, off.after, target_vdd);
            py::dict d;
            d["max_node_voltage"] = off.max_node_voltage;
            d["max_delta_p"] = off.max_delta_p;
            d["logic"] = cellbench::to_string(r.logic);
            d["correct"] = r.correct;
            d["q"] = r.after.q;
            d["qb"] = r.after.qb;
            return d;
        },
        py::arg("bit"), py::arg("target_vdd") = 1.0, py::arg("topology") = "nvsram", py::arg("config") = py::none(),
        "Write-latched cell, power off, one-step restore.");

    m.def(
        "monte_carlo_yield",
        [](int runs, double sigma_vth, std::uint64_t seed, const std::optional<std::string>& cfg) {
            const auto conf = load(cfg);
            const auto c = CellConfig::from_config(conf, Topology::Nvsram6T);
            py::gil_scoped_release nogil;
            return cellbench::monte_carlo_restore(c, sigma_vth, conf.number("montecarlo.sigma_mw_rel"), runs, seed).yield;
        },
        py::arg("runs"), py::arg("sigma_vth"), py::arg("seed") = 1, py::arg("config") = py::none());

    m.def(
        "halid",
        [](const std::vector<double>& amplitudes, const std::optional<std::string>& cfg) {
            const auto k = cell(cfg, "nvsram").fe_params.kinetics;
            std::vector<std::pair<double, double>> out;
            for (const auto& p : analysis::emit_halid(k, amplitudes)) out.emplace_back(p.amplitude, p.width);
            return out;
        },
        py::arg("amplitudes"), py::arg("config") = py::none(), "(amplitude, minimum width) pairs, both polarities.");

    m.def(
        "disturb_projection",
        [](double bias, double horizon, const std::optional<std::string>& cfg) {
            return analysis::disturb_projection(cell(cfg, "nvsram").fe_params.kinetics, bias, horizon);
        },
        py::arg("bias"), py::arg("horizon"), py::arg("config") = py::none());
}
