// fesram command-line front end: sim, bench, analyze, device.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fesram/analysis.hpp"
#include "fesram/cellbench.hpp"
#include "fesram/config.hpp"
#include "fesram/engine.hpp"
#include "fesram/error.hpp"
#include "fesram/io.hpp"
#include "fesram/netlist.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fesram;
using cellbench::CellConfig;
using cellbench::Logic;
using cellbench::Topology;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitSolver = 2;
constexpr int kExitAssert = 3;

const std::vector<std::string> kScenarios = {"write-read",       "power-cycle", "restore-matrix",
                                             "silicon-protocol", "disturb",     "mc-yield"};
const std::vector<std::string> kAnalyses = {"snm", "idvg", "halid", "mw"};

struct Ctx {
    config::Config cfg;
    fs::path out;
    io::RunManifest manifest;

    void csv(const std::string& name, const analysis::Table& t) {
        io::write_csv(out / name, t);
        manifest.files.push_back(name);
    }
    void json_file(const std::string& name, const json& doc) {
        io::write_json(out / name, doc);
        manifest.files.push_back(name);
    }
};

double sig(double v) { return io::round_sig(v); }

json sig_list(const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(sig(x));
    return a;
}

class Checks {
public:
    void add(const std::string& name, bool pass) {
        items_.push_back({{"name", name}, {"pass", pass}});
        if (!pass) failed_.push_back(name);
    }
    bool ok() const { return failed_.empty(); }
    json to_json() const { return items_; }
    const std::vector<std::string>& failed() const { return failed_; }

private:
    json items_ = json::array();
    std::vector<std::string> failed_;
};

int finish(Ctx& ctx, const std::string& scenario, const Checks& checks, json metrics) {
    json report = {{"scenario", scenario},
                   {"config_digest", ctx.cfg.digest()},
                   {"pass", checks.ok()},
                   {"assertions", checks.to_json()},
                   {"metrics", std::move(metrics)}};
    ctx.json_file("report.json", report);
    if (!checks.ok()) {
        std::cerr << "fesram: " << scenario << ": failed assertions:";
        for (const auto& f : checks.failed()) std::cerr << ' ' << f;
        std::cerr << '\n';
        return kExitAssert;
    }
    return kExitOk;
}

json state_json(const cellbench::CellState& s) {
    json j = {{"q", sig(s.q)}, {"qb", sig(s.qb)}, {"vdd", sig(s.vdd)}, {"logic", cellbench::to_string(s.logic())}};
    if (!s.m2.segments.empty()) {
        j["m2_mean"] = sig(s.m2.mean());
        j["m4_mean"] = sig(s.m4.mean());
    }
    return j;
}

Logic logic_of(int bit) { return bit ? Logic::One : Logic::Zero; }

std::vector<int> bits_for(const std::optional<int>& data) {
    if (data) return {*data};
    return {0, 1};
}

// --- sim ------------------------------------------------------------------------

std::string read_file(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw Error("cannot read " + p.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

int cmd_sim(Ctx& ctx, const std::string& path) {
    const auto nl = netlist::parse(read_file(path));
    netlist::ModelLibrary lib;
    lib.add_cards(nl.models);
    auto el = netlist::elaborate(nl, lib);
    for (const auto& w : el.circuit.warnings) std::cerr << "fesram: warning: " << w << '\n';
    const auto solver = cellbench::solver_from_config(ctx.cfg);

    auto plan = el.plan;
    if (plan.empty()) plan.push_back({});
    int n_op = 0, n_tran = 0, n_dc = 0;
    for (const auto& d : plan) {
        auto circuit = el.circuit;
        using Kind = netlist::AnalysisDirective::Kind;
        if (d.kind == Kind::Op) {
            const auto sol = engine::dc_operating_point(circuit, solver);
            json nodes = json::object();
            for (int i = 0; i < circuit.node_count(); ++i) {
                nodes[circuit.node_name(i)] = sig(sol.node_voltages[static_cast<std::size_t>(i)]);
            }
            ctx.json_file("op" + std::to_string(++n_op) + ".json",
                          {{"node_voltages", nodes}, {"newton_iterations", sol.newton_iterations}});
        } else if (d.kind == Kind::Tran) {
            auto s = solver;
            s.dtmax = d.dtmax;
            const auto w = engine::transient(circuit, d.tstop, s);
            ctx.csv("tran" + std::to_string(++n_tran) + ".csv", analysis::waveform_table(w));
        } else if (d.kind == Kind::Dc) {
            const auto sw = engine::dc_sweep(circuit, d.source, d.start, d.stop, d.step, solver);
            analysis::Table t;
            t.columns.push_back(d.source + "_value");
            for (const auto& n : circuit.node_names()) t.columns.push_back(n + "_volts");
            for (std::size_t k = 0; k < sw.values.size(); ++k) {
                std::vector<double> row{sw.values[k]};
                for (double v : sw.points[k].node_voltages) {
                    if (row.size() < t.columns.size()) row.push_back(v);
                }
                t.add(std::move(row));
            }
            ctx.csv("dc" + std::to_string(++n_dc) + ".csv", t);
        }
    }
    return kExitOk;
}

// --- bench ----------------------------------------------------------------------

struct Cells {
    CellConfig nv;
    CellConfig base;
    explicit Cells(const config::Config& cfg)
        : nv(CellConfig::from_config(cfg, Topology::Nvsram6T)), base(CellConfig::from_config(cfg, Topology::Baseline6T)) {}
};

int bench_write_read(Ctx& ctx, int d) {
    const Cells c(ctx.cfg);
    const auto start = cellbench::latched_state(c.nv, 1 - d);
    const auto w = cellbench::run_write(c.nv, start, d);
    const auto again = cellbench::run_write(c.nv, w.after, d);
    const auto rd = cellbench::run_read(c.nv, w.after);
    const auto brd = cellbench::run_read(c.base, cellbench::latched_state(c.base, d));
    const double lvt = d ? w.m4_mean : w.m2_mean;
    const double hvt = d ? w.m2_mean : w.m4_mean;
    const double parity = std::abs(rd.latency - brd.latency) / brd.latency;

    Checks k;
    k.add("write_lvt_saturated", lvt >= 0.95);
    k.add("write_hvt_partial", hvt < 0.0 && hvt > -1.0);
    k.add("write_logic", w.after.logic() == logic_of(d));
    k.add("rewrite_noop", again.max_delta_p < 1e-3);
    k.add("read_value", rd.value == d);
    k.add("read_non_destructive", rd.non_destructive);
    k.add("read_polarization_undisturbed", rd.max_delta_p < 1e-6);
    k.add("baseline_latency_window", brd.latency >= 50e-12 && brd.latency <= 90e-12);
    k.add("latency_parity_5pct", parity <= 0.05);

    ctx.csv("write_waveform.csv", analysis::waveform_table(w.waveform));
    ctx.csv("read_waveform.csv", analysis::waveform_table(rd.waveform));
    return finish(ctx, "write-read", k,
                  {{"data", d},
                   {"after_write", state_json(w.after)},
                   {"rewrite_max_delta_p", sig(again.max_delta_p)},
                   {"read_latency_seconds", sig(rd.latency)},
                   {"baseline_read_latency_seconds", sig(brd.latency)},
                   {"latency_mismatch", sig(parity)},
                   {"read_value", rd.value}});
}

int bench_power_cycle(Ctx& ctx, int d) {
    const Cells c(ctx.cfg);
    const auto s = cellbench::latched_state(c.nv, d);
    const auto off = cellbench::run_power_off(c.nv, s);
    const auto r1 = cellbench::run_restore_one_step(c.nv, off.after, c.nv.vdd_nominal);
    const auto r2 = cellbench::run_restore_two_phase(c.nv, off.after, c.nv.vdd_nominal);

    const auto boff = cellbench::run_power_off(c.base, cellbench::latched_state(c.base, d));
    const auto brest = cellbench::run_restore_one_step(c.base, boff.after, c.base.vdd_nominal);
    // 1 mV against the old data: decides the baseline, not the nvSRAM
    auto bn = boff.after;
    (d ? bn.qb : bn.q) = 1e-3;
    const auto bnudge = cellbench::run_restore_one_step(c.base, bn, c.base.vdd_nominal);
    auto nn = off.after;
    (d ? nn.qb : nn.q) = 1e-3;
    const auto nnudge = cellbench::run_restore_one_step(c.nv, nn, c.nv.vdd_nominal);

    Checks k;
    k.add("nodes_collapsed", off.nodes_collapsed);
    k.add("polarization_preserved", off.polarization_preserved);
    k.add("restore_one_step", r1.correct);
    k.add("restore_two_phase", r2.correct);
    k.add("restore_survives_residual", nnudge.correct);
    k.add("baseline_nodes_collapsed", boff.nodes_collapsed);
    k.add("baseline_unrecoverable", !brest.correct && bnudge.logic == logic_of(1 - d));

    ctx.csv("power_off_waveform.csv", analysis::waveform_table(off.waveform));
    ctx.csv("restore_waveform.csv", analysis::waveform_table(r1.waveform));
    return finish(ctx, "power-cycle", k,
                  {{"data", d},
                   {"power_off_max_node_volts", sig(off.max_node_voltage)},
                   {"power_off_max_delta_p", sig(off.max_delta_p)},
                   {"restore_one_step", state_json(r1.after)},
                   {"restore_two_phase", state_json(r2.after)},
                   {"baseline_restore", state_json(brest.after)},
                   {"baseline_restore_with_residual", cellbench::to_string(bnudge.logic)}});
}

int bench_restore_matrix(Ctx& ctx, const std::optional<int>& data) {
    const Cells c(ctx.cfg);
    const auto targets = ctx.cfg.list("silicon.targets");
    const int reps = static_cast<int>(ctx.cfg.integer("silicon.repetitions"));
    analysis::Table t{{"data", "target_volts", "repetition", "q_volts", "qb_volts", "correct"}, {}};
    Checks k;
    json per_bit = json::object();
    for (int d : bits_for(data)) {
        auto cur = cellbench::run_power_off(c.nv, cellbench::latched_state(c.nv, d)).after;
        int ok = 0, total = 0;
        for (double v : targets) {
            for (int rep = 0; rep < reps; ++rep) {
                const auto r = cellbench::run_restore_one_step(c.nv, cur, v);
                t.add({double(d), v, double(rep), r.after.q, r.after.qb, r.correct ? 1.0 : 0.0});
                ok += r.correct;
                ++total;
                cur = cellbench::run_power_off(c.nv, r.after).after;
            }
        }
        k.add("stored_" + std::to_string(d) + "_all_correct", ok == total);
        per_bit[std::to_string(d)] = {{"correct", ok}, {"total", total}};
    }
    ctx.csv("restore_matrix.csv", t);
    return finish(ctx, "restore-matrix", k, {{"targets", sig_list(targets)}, {"results", per_bit}});
}

int bench_silicon(Ctx& ctx, const std::optional<int>& data) {
    const Cells c(ctx.cfg);
    const auto targets = ctx.cfg.list("silicon.targets");
    const int reps = static_cast<int>(ctx.cfg.integer("silicon.repetitions"));
    const double i_bias = ctx.cfg.number("silicon.i_bias");
    Checks k;
    json per_bit = json::object();
    for (int d : bits_for(data)) {
        const auto off = cellbench::run_power_off(c.nv, cellbench::latched_state(c.nv, d)).after;
        const auto tr = cellbench::run_silicon_protocol(c.nv, off, targets, i_bias, reps);
        ctx.csv("silicon_protocol_stored" + std::to_string(d) + ".csv", analysis::protocol_table(tr));
        json reads = json::array();
        for (const auto& r : tr.reads) {
            reads.push_back({{"target", sig(r.target)},
                             {"repetition", r.repetition},
                             {"latched", cellbench::to_string(r.latched)},
                             {"bl", sig(r.bl)},
                             {"blb", sig(r.blb)},
                             {"correct", r.correct},
                             {"weak", r.weak}});
        }
        k.add("stored_" + std::to_string(d) + "_all_correct", tr.correct == tr.total);
        per_bit[std::to_string(d)] = {{"correct", tr.correct}, {"total", tr.total}, {"reads", reads}};
    }
    return finish(ctx, "silicon-protocol", k,
                  {{"targets", sig_list(targets)}, {"i_bias_amperes", sig(i_bias)}, {"results", per_bit}});
}

int bench_disturb(Ctx& ctx, int d) {
    const Cells c(ctx.cfg);
    const double horizon = ctx.cfg.number("disturb.horizon");
    const double over = ctx.cfg.number("disturb.overvoltage");
    const auto s = cellbench::latched_state(c.nv, d);
    const auto h = cellbench::run_hold_disturb(c.nv, s, horizon);
    // latch held against its polarization
    auto mismatched = s;
    std::swap(mismatched.q, mismatched.qb);
    const auto m1 = cellbench::run_hold_disturb(c.nv, mismatched, horizon, c.nv.vdd_nominal);
    const auto m2 = cellbench::run_hold_disturb(c.nv, mismatched, horizon, over);
    const auto& kin = c.nv.fe_params.kinetics;
    const double proj = analysis::disturb_projection(kin, c.nv.vdd_nominal, horizon);
    const double proj_over = analysis::disturb_projection(kin, over, horizon);

    Checks k;
    k.add("hold_opposing_below_1pct", h.max_opposing_fraction < 0.01);
    k.add("projection_nominal_below_1pct", proj < 0.01);
    k.add("mismatched_self_corrects_at_nominal", m1.after.logic() == logic_of(d) && m1.max_opposing_fraction < 0.01);
    k.add("overvoltage_cliff", m2.max_opposing_fraction > 0.5);
    return finish(ctx, "disturb", k,
                  {{"data", d},
                   {"horizon_seconds", sig(horizon)},
                   {"hold_max_delta_p", sig(h.max_delta_p)},
                   {"hold_max_reinforcing", sig(h.max_reinforcing)},
                   {"hold_max_opposing_fraction", sig(h.max_opposing_fraction)},
                   {"projection_nominal", sig(proj)},
                   {"projection_overvoltage", sig(proj_over)},
                   {"overvoltage_volts", sig(over)},
                   {"overvoltage_opposing_fraction", sig(m2.max_opposing_fraction)}});
}

int bench_mc(Ctx& ctx, int d) {
    const Cells c(ctx.cfg);
    const int runs = static_cast<int>(ctx.cfg.integer("montecarlo.runs"));
    const auto seed = static_cast<std::uint64_t>(ctx.cfg.integer("montecarlo.seed"));
    const double sv = ctx.cfg.number("montecarlo.sigma_vth");
    const double sm = ctx.cfg.number("montecarlo.sigma_mw_rel");
    const double min_yield = ctx.cfg.number("montecarlo.min_yield");
    const auto rep = cellbench::monte_carlo_restore(c.nv, sv, sm, runs, seed, d);
    analysis::Table t{{"run", "correct", "logic"}, {}};
    json seeds = json::array();
    for (const auto& r : rep.details) {
        const double lg = r.logic == Logic::One ? 1 : r.logic == Logic::Zero ? 0 : -1;
        t.add({double(r.index), r.correct ? 1.0 : 0.0, lg});
        seeds.push_back(r.seed);
    }
    ctx.csv("mc_runs.csv", t);
    Checks k;
    k.add("yield_at_least_min", rep.yield >= min_yield);
    return finish(ctx, "mc-yield", k,
                  {{"data", d},
                   {"runs", runs},
                   {"passed", rep.passed},
                   {"yield", sig(rep.yield)},
                   {"sigma_vth", sig(sv)},
                   {"sigma_mw_rel", sig(sm)},
                   {"seed", seed},
                   {"run_seeds", seeds}});
}

// --- analyze --------------------------------------------------------------------

int analyze_snm(Ctx& ctx, const std::string& mode_s, const std::string& topo_s, int state) {
    analysis::SnmMode mode;
    if (mode_s == "hold") {
        mode = analysis::SnmMode::Hold;
    } else if (mode_s == "read") {
        mode = analysis::SnmMode::Read;
    } else if (mode_s == "write") {
        mode = analysis::SnmMode::Write;
    } else {
        throw DomainError("--mode must be hold, read or write");
    }
    Topology topo;
    if (topo_s == "nvsram") {
        topo = Topology::Nvsram6T;
    } else if (topo_s == "baseline") {
        topo = Topology::Baseline6T;
    } else {
        throw DomainError("--topology must be nvsram or baseline");
    }
    const auto cfg = CellConfig::from_config(ctx.cfg, topo);
    const auto cell = cellbench::latched_state(cfg, state);
    const auto r = analysis::butterfly(cfg, cell, mode, ctx.cfg.number("analysis.sweep_step"));
    ctx.csv("butterfly.csv", analysis::butterfly_table(r));
    json pts = json::array();
    for (const auto& p : r.points) {
        pts.push_back({{"q", sig(p.q)}, {"qb", sig(p.qb)}, {"loop_gain", sig(p.loop_gain)}, {"stable", p.stable}});
    }
    ctx.json_file("snm.json", {{"mode", mode_s},
                               {"topology", topo_s},
                               {"state", state},
                               {"snm_volts", sig(r.snm)},
                               {"lobe_snm_volts", sig_list(r.lobe_snm)},
                               {"stable_count", r.stable_count},
                               {"monostable", r.monostable},
                               {"comparative_only", r.comparative_only},
                               {"points", pts}});
    return kExitOk;
}

int analyze_idvg(Ctx& ctx) {
    const auto nv = CellConfig::from_config(ctx.cfg, Topology::Nvsram6T);
    const auto ws = analysis::write_sequence(nv);
    ctx.csv("idvg_write_sequence.csv", ws.table());
    const double i_crit = ctx.cfg.number("analysis.i_crit");
    const auto n = nv.segments;
    const auto lvt = device::idvg_sweep(nv.fe_params, device::FeFetState::hvt(n), device::SweepProtocol::p_fefet(true));
    const auto hvt = device::idvg_sweep(nv.fe_params, device::FeFetState::lvt(n), device::SweepProtocol::p_fefet(false));
    analysis::Table t{{"vg_volts", "id_lvt_amperes", "id_hvt_amperes"}, {}};
    for (std::size_t k = 0; k < lvt.curve.points.size(); ++k) {
        t.add({lvt.curve.points[k].x, lvt.curve.points[k].y, hvt.curve.points[k].y});
    }
    ctx.csv("idvg_protocol.csv", t);
    ctx.json_file("idvg.json", {{"i_crit_amperes", sig(i_crit)},
                                {"memory_window_volts", sig(device::memory_window(lvt.curve, hvt.curve, i_crit))},
                                {"lvt_final_mean_p", sig(lvt.final_state.mean())},
                                {"hvt_final_mean_p", sig(hvt.final_state.mean())}});
    return kExitOk;
}

int analyze_halid(Ctx& ctx, const std::string& amplitudes) {
    const auto nv = CellConfig::from_config(ctx.cfg, Topology::Nvsram6T);
    const auto amps = amplitudes.empty() ? ctx.cfg.list("analysis.halid_amplitudes") : config::parse_list(amplitudes);
    const auto pts = analysis::emit_halid(nv.fe_params.kinetics, amps, ctx.cfg.number("analysis.halid_clamp"));
    ctx.csv("halid.csv", analysis::halid_table(pts));
    const auto& k = nv.fe_params.kinetics;
    ctx.json_file("halid.json", {{"tau0_seconds", k.tau0},
                                 {"v0_volts", k.v0},
                                 {"anchor_4v_width_seconds", device::switching_boundary_width(k, 4.0)},
                                 {"anchor_2v_width_seconds", device::switching_boundary_width(k, 2.0)}});
    return kExitOk;
}

int analyze_mw(Ctx& ctx, const std::string& scheme) {
    if (scheme != "gate" && scheme != "gate-drain" && scheme != "both") {
        throw DomainError("--scheme must be gate, gate-drain or both");
    }
    const auto nv = CellConfig::from_config(ctx.cfg, Topology::Nvsram6T);
    const auto f = analysis::scheme_windows(nv.fe_params, ctx.cfg.number("analysis.i_crit"));
    ctx.csv("mw_curves.csv", f.table());
    json j = {{"scheme", scheme}, {"mw_gate_volts", sig(f.mw_gate)}, {"mw_gate_drain_volts", sig(f.mw_gate_drain)}};
    if (scheme != "both") j["mw_volts"] = sig(scheme == "gate" ? f.mw_gate : f.mw_gate_drain);
    ctx.json_file("mw.json", j);
    return kExitOk;
}

// --- device ---------------------------------------------------------------------

int device_idvg(Ctx& ctx, const std::string& state, const std::string& polarity) {
    if (state != "lvt" && state != "hvt") throw DomainError("--state must be lvt or hvt");
    device::FeFetParams p;
    device::SweepProtocol proto;
    const bool to_lvt = state == "lvt";
    if (polarity == "p") {
        p = CellConfig::from_config(ctx.cfg, Topology::Nvsram6T).fe_params;
        proto = device::SweepProtocol::p_fefet(to_lvt);
    } else if (polarity == "n") {
        netlist::ModelLibrary lib;
        lib.add_cards({netlist::ModelCard{"nfe", "nfefet", {}, {}}});
        p = lib.fefets.at("nfe");
        proto = device::SweepProtocol::n_fefet(to_lvt);
    } else {
        throw DomainError("--polarity must be p or n");
    }
    const auto start = to_lvt ? device::FeFetState::hvt(8) : device::FeFetState::lvt(8);
    const auto r = device::idvg_sweep(p, start, proto);
    ctx.csv("idvg_" + polarity + "_" + state + ".csv", analysis::curve_table(r.curve, "vg_volts", "id_amperes"));
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"FeFET nvSRAM circuit simulator and benchmark harness"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string config_path, out_dir = "fesram_out";
    std::optional<long long> seed;
    app.add_option("--config", config_path, "INI config file (overrides defaults and FERRO_CONFIG)");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed, "Monte Carlo master seed");

    auto* sim = app.add_subcommand("sim", "run the analyses of a netlist");
    std::string netlist_path;
    sim->add_option("netlist", netlist_path)->required();

    auto* bench = app.add_subcommand("bench", "run a cell scenario");
    std::string scenario, vdd_targets, sigma_vth;
    std::optional<int> data, runs;
    bench->add_option("scenario", scenario)->required();
    bench->add_option("--vdd-targets", vdd_targets, "comma-separated restore targets");
    bench->add_option("--data", data, "stored bit")->check(CLI::Range(0, 1));
    bench->add_option("--runs", runs, "Monte Carlo runs");
    bench->add_option("--sigma-vth", sigma_vth, "threshold sigma, SI suffix allowed");

    auto* analyze = app.add_subcommand("analyze", "emit figure data");
    std::string kind, mode = "hold", topology = "nvsram", scheme = "both", amplitudes;
    int state = 1;
    analyze->add_option("kind", kind)->required();
    analyze->add_option("--mode", mode, "snm: hold, read or write");
    analyze->add_option("--topology", topology, "snm: nvsram or baseline");
    analyze->add_option("--state", state, "snm: stored bit")->check(CLI::Range(0, 1));
    analyze->add_option("--scheme", scheme, "mw: gate, gate-drain or both");
    analyze->add_option("--amplitudes", amplitudes, "halid: comma-separated pulse amplitudes");

    auto* dev = app.add_subcommand("device", "single-device shortcuts");
    std::string dev_kind, dev_state = "lvt", polarity = "p";
    dev->add_option("kind", dev_kind, "idvg or halid")->required();
    dev->add_option("--state", dev_state, "idvg: lvt or hvt");
    dev->add_option("--polarity", polarity, "idvg: p or n");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitInput;
    }

    try {
        Ctx ctx;
        ctx.cfg = config::load(config_path.empty() ? std::nullopt : std::optional<std::string>(config_path));
        if (seed) ctx.cfg.set("montecarlo.seed", std::to_string(*seed));
        if (!vdd_targets.empty()) ctx.cfg.set("silicon.targets", vdd_targets);
        if (runs) ctx.cfg.set("montecarlo.runs", std::to_string(*runs));
        if (!sigma_vth.empty()) ctx.cfg.set("montecarlo.sigma_vth", sigma_vth);
        ctx.out = out_dir;
        fs::create_directories(ctx.out);
        ctx.manifest.command.assign(argv, argv + argc);
        ctx.manifest.config_digest = ctx.cfg.digest();
        ctx.manifest.seed = static_cast<std::uint64_t>(ctx.cfg.integer("montecarlo.seed"));
        ctx.manifest.version = io::kVersion;
        ctx.json_file("config_echo.json", ctx.cfg.values());

        int code = kExitOk;
        if (sim->parsed()) {
            code = cmd_sim(ctx, netlist_path);
        } else if (bench->parsed()) {
            const int d = data.value_or(1);
            if (scenario == "write-read") {
                code = bench_write_read(ctx, d);
            } else if (scenario == "power-cycle") {
                code = bench_power_cycle(ctx, d);
            } else if (scenario == "restore-matrix") {
                code = bench_restore_matrix(ctx, data);
            } else if (scenario == "silicon-protocol") {
                code = bench_silicon(ctx, data);
            } else if (scenario == "disturb") {
                code = bench_disturb(ctx, d);
            } else if (scenario == "mc-yield") {
                code = bench_mc(ctx, d);
            } else {
                std::cerr << "fesram: unknown scenario '" << scenario << "'; valid:";
                for (const auto& s : kScenarios) std::cerr << ' ' << s;
                std::cerr << '\n';
                return kExitInput;
            }
        } else if (analyze->parsed()) {
            if (kind == "snm") {
                code = analyze_snm(ctx, mode, topology, state);
            } else if (kind == "idvg") {
                code = analyze_idvg(ctx);
            } else if (kind == "halid") {
                code = analyze_halid(ctx, amplitudes);
            } else if (kind == "mw") {
                code = analyze_mw(ctx, scheme);
            } else {
                std::cerr << "fesram: unknown analysis '" << kind << "'; valid:";
                for (const auto& s : kAnalyses) std::cerr << ' ' << s;
                std::cerr << '\n';
                return kExitInput;
            }
        } else if (dev->parsed()) {
            if (dev_kind == "idvg") {
                code = device_idvg(ctx, dev_state, polarity);
            } else if (dev_kind == "halid") {
                code = analyze_halid(ctx, amplitudes);
            } else {
                std::cerr << "fesram: unknown device command '" << dev_kind << "'; valid: idvg halid\n";
                return kExitInput;
            }
        }
        ctx.manifest.write(ctx.out);
        return code;
    } catch (const SolverError& e) {
        std::cerr << "fesram: solver error: " << e.what() << '\n';
        return kExitSolver;
    } catch (const ParseError& e) {
        std::cerr << "fesram: parse error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "fesram: error: " << e.what() << '\n';
        return kExitInput;
    }
}
