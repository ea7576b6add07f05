#include "fesram/cellbench.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

#include "fesram/analysis.hpp"
#include "fesram/error.hpp"

namespace fesram::cellbench {

using device::FeFetState;
using engine::kGround;

const char* to_string(Topology t) { return t == Topology::Baseline6T ? "baseline6t" : "nvsram6t"; }

const char* to_string(Logic l) {
    switch (l) {
        case Logic::One: return "one";
        case Logic::Zero: return "zero";
        default: return "invalid";
    }
}

void CellConfig::validate() const {
    if (!(c_bitline > 0.0 && c_node > 0.0)) throw DomainError("cell capacitances must be > 0");
    if (!(vdd_program > vdd_nominal)) throw DomainError("vdd_program must exceed vdd_nominal");
    if (!(vdd_nominal > 0.0)) throw DomainError("vdd_nominal must be > 0");
    if (!(t_program > 0.0)) throw DomainError("t_program must be > 0");
    if (!vth_offsets.empty() && vth_offsets.size() != 6) throw DomainError("vth_offsets needs 6 entries");
    pd_params.validate();
    pg_params.validate();
    if (topology == Topology::Baseline6T) {
        pu_params.validate();
    } else {
        fe_params.validate();
    }
    solver.validate();
}

engine::SolverConfig solver_from_config(const config::Config& cfg) {
    engine::SolverConfig s;
    s.reltol = cfg.number("solver.reltol");
    s.vntol = cfg.number("solver.vntol");
    s.abstol = cfg.number("solver.abstol");
    s.max_newton_iters = cfg.integer("solver.max_newton_iters");
    s.gmin = cfg.number("solver.gmin");
    s.dt_shrink_factor = cfg.number("solver.dt_shrink_factor");
    s.max_dt_retries = cfg.integer("solver.max_dt_retries");
    s.max_newton_step = cfg.number("solver.max_newton_step");
    const auto& integ = cfg.text("solver.integrator");
    if (integ == "be") {
        s.integrator = engine::Integrator::BackwardEuler;
    } else if (integ == "trap") {
        s.integrator = engine::Integrator::Trapezoidal;
    } else {
        throw Error("solver.integrator must be 'be' or 'trap'");
    }

    s.validate();
    return s;
}

CellConfig CellConfig::from_config(const config::Config& cfg, Topology topology) {
    CellConfig c;
    c.topology = topology;
    c.vdd_nominal = cfg.number("cell.vdd_nominal");
    c.vdd_program = cfg.number("cell.vdd_program");
    c.c_bitline = cfg.number("cell.c_bitline");
    c.c_node = cfg.number("cell.c_node");
    c.t_program = cfg.number("cell.t_program");
    c.program_ramp = cfg.number("cell.program_ramp");
    c.program_dtmax = cfg.number("cell.program_dtmax");
    c.logic_threshold = cfg.number("cell.logic_threshold");
    c.power_off_ramp = cfg.number("power_off.ramp");
    c.power_off_hold = cfg.number("power_off.hold");
    c.restore_ramp = cfg.number("restore.ramp");
    c.two_phase_time = cfg.number("restore.two_phase_time");
    c.read_threshold = cfg.number("read.threshold");
    c.read_wl_ramp = cfg.number("read.wl_ramp");
    c.read_window = cfg.number("read.window");
    c.read_retry_window = cfg.number("read.retry_window");
    c.read_dtmax = cfg.number("read.dtmax");
    c.silicon_vdd_step = cfg.number("silicon.vdd_step");

    c.solver = solver_from_config(cfg);

    const double v = c.vdd_nominal;
    const auto mos = [&](const std::string& sec, device::Polarity pol) {
        device::MosfetParams p;
        p.polarity = pol;
        p.vth0 = cfg.number(sec + ".vth0");
        p.n_sub = cfg.number(sec + ".n_sub");
        p.lambda = cfg.number(sec + ".lambda");
        p.vt_thermal = cfg.number(sec + ".vt_thermal");
        return p;
    };
    c.pg_params = device::calibrate_drive(cfg.number("nmos.read_current"), v, v, mos("nmos", device::Polarity::N));
    c.pd_params = c.pg_params;
    c.pd_params.kprime *= cfg.number("nmos.beta");
    {
        // the read current is what the access + pull-down stack sinks from a bitline at vdd
        double lo = 0.0, hi = v;
        for (int i = 0; i < 100; ++i) {
            const double x = 0.5 * (lo + hi);
            const double diff = device::mosfet_current(c.pg_params, v, v, x) - device::mosfet_current(c.pd_params, v, x, 0.0);
            (diff > 0.0 ? lo : hi) = x;
        }
        const double i_stack = device::mosfet_current(c.pd_params, v, lo, 0.0);
        if (!(i_stack > 0.0)) throw CalibrationError("read stack does not conduct");
        const double k = cfg.number("nmos.read_current") / i_stack;
        c.pg_params.kprime *= k;
        c.pd_params.kprime *= k;
    }
    c.pu_params = device::calibrate_drive(cfg.number("pmos.drive_current"), -v, -v, mos("pmos", device::Polarity::P));

    auto& f = c.fe_params;
    f.base = mos("pfefet", device::Polarity::P);
    f.mw = cfg.number("pfefet.mw");
    f.kinetics = device::calibrate_kinetics({cfg.number("kinetics.anchor1_amplitude"), cfg.number("kinetics.anchor1_width")},
                                            {cfg.number("kinetics.anchor2_amplitude"), cfg.number("kinetics.anchor2_width")});
    const auto& profile = cfg.text("pfefet.profile");
    if (profile == "linear") {
        f.profile.kind = device::ChannelProfile::Kind::Linear;
    } else if (profile == "junction") {
        f.profile.kind = device::ChannelProfile::Kind::Junction;
    } else {
        throw Error("pfefet.profile must be 'linear' or 'junction'");
    }
    f.profile.reach = cfg.number("pfefet.reach");
    f.profile.sharpness = cfg.number("pfefet.sharpness");
    c.segments = static_cast<std::size_t>(cfg.integer("pfefet.segments"));
    // size the FeFET on its LVT threshold
    const double target = cfg.number("pfefet.lvt_current");
    const double i_now = device::fefet_current(FeFetState::lvt(c.segments), f, -v, -v, 0.0);
    if (!(i_now > 0.0)) throw CalibrationError("LVT p-FeFET does not conduct at -vdd_nominal");
    f.base.kprime *= target / i_now;
    c.validate();
    return c;
}

Logic CellState::logic(double threshold) const {
    if (!(vdd > 0.0)) return Logic::Invalid;
    if (q - qb > threshold * vdd) return Logic::One;
    if (qb - q > threshold * vdd) return Logic::Zero;
    return Logic::Invalid;
}

void OperationSchedule::validate() const {
    if (phases.empty()) throw DomainError("schedule has no phases");
    for (const auto& p : phases) {
        if (!(p.duration > 0.0)) throw DomainError("phase '" + p.label + "' needs a positive duration");
        if (!(p.ramp >= kMinRamp * (1 - 1e-9))) throw DomainError("phase '" + p.label + "' ramps faster than 10 ps");
        if (p.ramp > p.duration) throw DomainError("phase '" + p.label + "' ramp exceeds its duration");
    }
}

double OperationSchedule::total_time() const {
    double t = 0.0;
    for (const auto& p : phases) t += p.duration;
    return t;
}

double OperationSchedule::phase_start(std::size_t i) const {
    double t = 0.0;
    for (std::size_t k = 0; k < i && k < phases.size(); ++k) t += phases[k].duration;
    return t;
}

namespace {

double terminal(const Bias& b, int which) {
    switch (which) {
        case 0: return b.vdd;
        case 1: return b.wl;
        case 2: return b.bl;
        default: return b.blb;
    }
}

}  // namespace

engine::SourceWaveform OperationSchedule::waveform(int which) const {
    validate();
    std::vector<std::pair<double, double>> pts{{0.0, terminal(initial, which)}};
    double t = 0.0;
    for (const auto& p : phases) {
        const double v = terminal(p.target, which);
        pts.emplace_back(t + p.ramp, v);
        if (p.duration > p.ramp) pts.emplace_back(t + p.duration, v);
        t += p.duration;
    }
    return engine::SourceWaveform::piecewise(std::move(pts));
}

engine::Circuit build_cell(const CellConfig& config, BitlineMode mode, double i_sink) {
    config.validate();
    engine::Circuit c;
    const auto vdd = c.add_node("vdd");
    const auto wl = c.add_node("wl");
    const auto bl = c.add_node("bl");
    const auto blb = c.add_node("blb");
    const auto q = c.add_node("q");
    const auto qb = c.add_node("qb");

    c.add(engine::VoltageSource{"vvdd", vdd, kGround, engine::SourceWaveform::constant(0.0)});
    c.add(engine::VoltageSource{"vwl", wl, kGround, engine::SourceWaveform::constant(0.0)});
    if (mode == BitlineMode::Driven) {
        c.add(engine::VoltageSource{"vbl", bl, kGround, engine::SourceWaveform::constant(0.0)});
        c.add(engine::VoltageSource{"vblb", blb, kGround, engine::SourceWaveform::constant(0.0)});
    } else if (mode == BitlineMode::Sink) {
        c.add(engine::CurrentSource{"ibl", bl, kGround, engine::SourceWaveform::constant(i_sink)});
        c.add(engine::CurrentSource{"iblb", blb, kGround, engine::SourceWaveform::constant(i_sink)});
    }

    const auto offset = [&](int k) { return config.vth_offsets.empty() ? 0.0 : config.vth_offsets[k]; };
    const auto shifted = [&](device::MosfetParams p, int k) {
        p.vth0 += offset(k);
        // keep the polarity sign convention of the threshold
        if (p.polarity == device::Polarity::N) p.vth0 = std::max(p.vth0, 0.0);
        if (p.polarity == device::Polarity::P) p.vth0 = std::min(p.vth0, 0.0);
        return p;
    };

    c.add(engine::Mosfet{"m1", qb, q, kGround, shifted(config.pd_params, 0)});
    if (config.topology == Topology::Baseline6T) {
        c.add(engine::Mosfet{"m2", q, qb, vdd, shifted(config.pu_params, 1)});
    } else {
        auto f = config.fe_params;
        f.base = shifted(f.base, 1);
        f.mw *= config.mw_scale_m2;
        c.add(engine::Fefet{"m2", q, qb, vdd, f, FeFetState::lvt(config.segments)});
    }
    c.add(engine::Mosfet{"m3", q, qb, kGround, shifted(config.pd_params, 2)});
    if (config.topology == Topology::Baseline6T) {
        c.add(engine::Mosfet{"m4", qb, q, vdd, shifted(config.pu_params, 3)});
    } else {
        auto f = config.fe_params;
        f.base = shifted(f.base, 3);
        f.mw *= config.mw_scale_m4;
        c.add(engine::Fefet{"m4", qb, q, vdd, f, FeFetState::lvt(config.segments)});
    }
    c.add(engine::Mosfet{"m5", wl, bl, q, shifted(config.pg_params, 4)});
    c.add(engine::Mosfet{"m6", wl, blb, qb, shifted(config.pg_params, 5)});

    c.add(engine::Capacitor{"cbl", bl, kGround, config.c_bitline});
    c.add(engine::Capacitor{"cblb", blb, kGround, config.c_bitline});
    c.add(engine::Capacitor{"cq", q, kGround, config.c_node});
    c.add(engine::Capacitor{"cqb", qb, kGround, config.c_node});
    return c;
}

namespace {

bool is_nv(const CellConfig& c) { return c.topology == Topology::Nvsram6T; }

void load_states(engine::Circuit& circuit, const CellConfig& config, const CellState& cell) {
    if (!is_nv(config)) return;
    auto& m2 = circuit.fefet("m2");
    auto& m4 = circuit.fefet("m4");
    if (!cell.m2.segments.empty()) m2.state = cell.m2;
    if (!cell.m4.segments.empty()) m4.state = cell.m4;
}

void store_states(const engine::Circuit& circuit, const CellConfig& config, CellState& cell) {
    if (!is_nv(config)) return;
    cell.m2 = circuit.fefet("m2").state;
    cell.m4 = circuit.fefet("m4").state;
}

}  // namespace

double max_abs_delta(const FeFetState& a, const FeFetState& b) {
    double out = 0.0;
    const std::size_t n = std::min(a.segments.size(), b.segments.size());
    for (std::size_t i = 0; i < n; ++i) out = std::max(out, std::abs(a.segments[i] - b.segments[i]));
    return out;
}

namespace {

double cell_delta(const CellState& a, const CellState& b) {
    return std::max(max_abs_delta(a.m2, b.m2), max_abs_delta(a.m4, b.m4));
}

}  // namespace

ScheduleRun run_schedule(const CellConfig& config, const CellState& start, const OperationSchedule& schedule,
                         BitlineMode mode, double dtmax) {
    schedule.validate();
    auto circuit = build_cell(config, mode);
    load_states(circuit, config, start);
    circuit.vsource("vvdd").wave = schedule.waveform(0);
    circuit.vsource("vwl").wave = schedule.waveform(1);
    if (mode == BitlineMode::Driven) {
        circuit.vsource("vbl").wave = schedule.waveform(2);
        circuit.vsource("vblb").wave = schedule.waveform(3);
    } else {
        circuit.initial_conditions["bl"] = schedule.initial.bl;
        circuit.initial_conditions["blb"] = schedule.initial.blb;
    }
    circuit.initial_conditions["q"] = start.q;
    circuit.initial_conditions["qb"] = start.qb;

    auto cfg = config.solver;
    cfg.dtmax = dtmax;
    ScheduleRun run;
    run.waveform = engine::transient(circuit, schedule.total_time(), cfg);
    run.final_state.q = run.waveform.final_voltage("q");
    run.final_state.qb = run.waveform.final_voltage("qb");
    run.final_state.vdd = schedule.phases.back().target.vdd;
    store_states(circuit, config, run.final_state);
    return run;
}

CellState blank_state(const CellConfig& config, const FeFetState& m2, const FeFetState& m4) {
    CellState s;
    if (is_nv(config)) {
        s.m2 = m2;
        s.m4 = m4;
    }
    return s;
}

CellState latched_state(const CellConfig& config, int bit) {
    CellState s;
    s.vdd = config.vdd_nominal;
    s.q = bit ? 0.0 : config.vdd_nominal;
    s.qb = bit ? config.vdd_nominal : 0.0;
    if (!is_nv(config)) {
        std::swap(s.q, s.qb);
        return s;
    }
    s.m2 = FeFetState::lvt(config.segments);
    s.m4 = FeFetState::lvt(config.segments);
    return run_write(config, s, bit).after;
}

OperationSchedule write_schedule(const CellConfig& config, int data) {
    const double vn = config.vdd_nominal;
    OperationSchedule s;
    s.initial = {vn, 0.0, vn, vn};
    if (!is_nv(config)) {
        s.phases.push_back({1e-9, config.program_ramp, {vn, vn, data ? vn : 0.0, data ? 0.0 : vn}, "write"});
        s.phases.push_back({500e-12, config.program_ramp, {vn, 0.0, data ? vn : 0.0, data ? 0.0 : vn}, "release wl"});
        s.phases.push_back({500e-12, config.program_ramp, {vn, 0.0, vn, vn}, "precharge"});
        return s;
    }
    const double vp = config.vdd_program;
    const double r = config.program_ramp;
    s.phases.push_back({r + config.t_program, r, {vp, vp, data ? vp : 0.0, data ? 0.0 : vp}, "program"});
    s.phases.push_back({1e-9, r, {vp, 0.0, data ? vp : 0.0, data ? 0.0 : vp}, "release wl"});
    s.phases.push_back({2e-9, 1e-9, {vn, 0.0, vn, vn}, "return"});
    return s;
}

WriteReport run_write(const CellConfig& config, const CellState& cell, int data) {
    if (data != 0 && data != 1) throw DomainError("data must be 0 or 1");
    WriteReport r;
    r.data = data;
    r.before = cell;
    auto run = run_schedule(config, cell, write_schedule(config, data), BitlineMode::Driven, config.program_dtmax);
    r.after = run.final_state;
    r.waveform = std::move(run.waveform);
    if (is_nv(config)) {
        r.m2_mean = r.after.m2.mean();
        r.m4_mean = r.after.m4.mean();
        r.max_delta_p = cell_delta(cell, r.after);
    }
    return r;
}

OperationSchedule power_off_schedule(const CellConfig& config, double vdd_from) {
    OperationSchedule s;
    s.initial = {vdd_from, 0.0, vdd_from, vdd_from};
    s.phases.push_back({config.power_off_ramp + config.power_off_hold, config.power_off_ramp, {0, 0, 0, 0}, "power off"});
    return s;
}

namespace {

void append_waveform(engine::Waveform& a, const engine::Waveform& b) {
    const double t0 = a.times.empty() ? 0.0 : a.times.back();
    for (std::size_t k = 1; k < b.times.size(); ++k) {
        a.times.push_back(t0 + b.times[k]);
        for (std::size_t i = 0; i < a.node_voltages.size(); ++i) a.node_voltages[i].push_back(b.node_voltages[i][k]);
        for (std::size_t i = 0; i < a.branch_currents.size(); ++i)
            a.branch_currents[i].push_back(b.branch_currents[i][k]);
        for (std::size_t i = 0; i < a.polarization.size(); ++i) a.polarization[i].push_back(b.polarization[i][k]);
    }
}

}  // namespace

PowerOffReport run_power_off(const CellConfig& config, const CellState& cell) {
    PowerOffReport r;
    r.before = cell;
    // ramp at fine resolution; the hold is a slow subthreshold discharge, stepped coarsely
    OperationSchedule ramp;
    ramp.initial = {cell.vdd, 0.0, cell.vdd, cell.vdd};
    ramp.phases.push_back({config.power_off_ramp, config.power_off_ramp, {0, 0, 0, 0}, "power off"});
    auto run = run_schedule(config, cell, ramp, BitlineMode::Driven, 10e-12);
    OperationSchedule hold;
    hold.phases.push_back({config.power_off_hold, OperationSchedule::kMinRamp, {0, 0, 0, 0}, "hold"});
    auto rest = run_schedule(config, run.final_state, hold, BitlineMode::Driven,
                             std::max(10e-12, config.power_off_hold / 2000.0));
    append_waveform(run.waveform, rest.waveform);
    run.final_state = rest.final_state;
    r.after = run.final_state;
    r.max_node_voltage = std::max(std::abs(r.after.q), std::abs(r.after.qb));
    r.max_delta_p = cell_delta(cell, r.after);
    r.nodes_collapsed = r.max_node_voltage < 50e-3;
    r.polarization_preserved = r.max_delta_p < 1e-6;
    r.waveform = std::move(run.waveform);
    return r;
}

Logic polarization_logic(const CellState& cell) {
    if (cell.m2.segments.empty() || cell.m4.segments.empty()) return Logic::Invalid;
    const double d = cell.m4.mean() - cell.m2.mean();
    if (d > 1e-3) return Logic::One;
    if (d < -1e-3) return Logic::Zero;
    return Logic::Invalid;
}

RestoreReport run_restore_one_step(const CellConfig& config, const CellState& cell, double target_vdd,
                                   std::optional<double> ramp_time) {
    if (!(target_vdd > 0.0)) throw DomainError("restore target must be > 0");
    const double ramp = ramp_time.value_or(config.restore_ramp);
    if (!(ramp >= OperationSchedule::kMinRamp)) throw DomainError("restore ramp must be >= 10 ps");
    const double dtmax = ramp / 500.0;
    OperationSchedule s;
    s.initial = {cell.vdd, 0.0, 0.0, 0.0};
    s.phases.push_back({ramp + 10 * dtmax, ramp, {target_vdd, 0.0, 0.0, 0.0}, "ramp"});
    auto run = run_schedule(config, cell, s, BitlineMode::Driven, dtmax);

    RestoreReport r;
    r.after = run.final_state;
    r.logic = r.after.logic(config.logic_threshold);
    r.expected = polarization_logic(cell);
    r.correct = r.expected != Logic::Invalid && r.logic == r.expected;
    r.waveform = std::move(run.waveform);
    return r;
}

RestoreReport run_restore_two_phase(const CellConfig& config, const CellState& cell, double target_vdd,
                                    std::optional<double> ramp_time) {
    // phase 1: bitlines at 0 V with the wordline on drain any residual charge
    OperationSchedule eq;
    eq.initial = {cell.vdd, 0.0, 0.0, 0.0};
    const double r = OperationSchedule::kMinRamp;
    eq.phases.push_back({config.two_phase_time, r, {cell.vdd, config.vdd_nominal, 0.0, 0.0}, "equalize"});
    eq.phases.push_back({100e-12, r, {cell.vdd, 0.0, 0.0, 0.0}, "release wl"});
    auto first = run_schedule(config, cell, eq, BitlineMode::Driven, 10e-12);
    first.final_state.vdd = cell.vdd;
    auto out = run_restore_one_step(config, first.final_state, target_vdd, ramp_time);
    out.expected = polarization_logic(cell);
    out.correct = out.expected != Logic::Invalid && out.logic == out.expected;
    return out;
}

std::optional<double> find_mislatch_offset(const CellConfig& config, const CellState& cell, double ramp_time,
                                           double hi, double tol) {
    const Logic want = polarization_logic(cell);
    if (want == Logic::Invalid) throw DomainError("cell carries no polarization-encoded bit");
    const auto fails = [&](double offset) {
        CellState s = cell;
        s.q = want == Logic::One ? 0.0 : offset;
        s.qb = want == Logic::One ? offset : 0.0;
        return !run_restore_one_step(config, s, config.vdd_nominal, ramp_time).correct;
    };
    if (!fails(hi)) return std::nullopt;
    double lo = 0.0;
    if (fails(lo)) return lo;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        (fails(mid) ? hi : lo) = mid;
    }
    return hi;
}

std::vector<RampPoint> restore_ramp_sweep(const CellConfig& config, const CellState& cell, double target_vdd,
                                          const std::vector<double>& ramps) {
    std::vector<RampPoint> out;
    for (double ramp : ramps) {
        const auto r = run_restore_one_step(config, cell, target_vdd, ramp);
        out.push_back({ramp, r.logic, r.correct});
    }
    return out;
}

ReadReport run_read(const CellConfig& config, const CellState& cell) {
    const double v = cell.vdd > 0.0 ? cell.vdd : config.vdd_nominal;
    ReadReport r;
    r.logic_before = cell.logic(config.logic_threshold);

    for (double window : {config.read_window, config.read_retry_window}) {
        OperationSchedule s;
        s.initial = {v, 0.0, v, v};
        s.phases.push_back({20e-12, OperationSchedule::kMinRamp, s.initial, "precharged"});
        s.phases.push_back({window, config.read_wl_ramp, {v, v, v, v}, "wl on"});
        s.phases.push_back({200e-12, config.read_wl_ramp, {v, 0.0, v, v}, "wl off"});
        auto run = run_schedule(config, cell, s, BitlineMode::Floating, config.read_dtmax);
        try {
            auto lat = analysis::read_latency(run.waveform, config.read_threshold, v);
            r.latency = lat.latency;
            r.value = lat.value;
        } catch (const ExtractionError&) {
            if (window == config.read_retry_window) {
                throw SolverError(SolverError::Kind::NonConvergence,
                                  "read failure: bitline differential never reached the threshold");
            }
            continue;
        }
        r.after = run.final_state;
        r.after.vdd = v;
        r.logic_after = r.after.logic(config.logic_threshold);
        r.non_destructive = r.logic_after == r.logic_before;
        r.max_delta_p = cell_delta(cell, r.after);
        r.waveform = std::move(run.waveform);
        break;
    }
    return r;
}

HoldDisturbReport run_hold_disturb(const CellConfig& config, const CellState& cell, double duration,
                                   std::optional<double> vdd) {
    if (!(duration >= 0.0)) throw DomainError("hold duration must be >= 0");
    const double v = vdd.value_or(cell.vdd > 0.0 ? cell.vdd : config.vdd_nominal);
    auto circuit = build_cell(config, BitlineMode::Driven);
    load_states(circuit, config, cell);
    for (const char* name : {"vvdd", "vbl", "vblb"}) circuit.vsource(name).wave = engine::SourceWaveform::constant(v);
    const double scale = cell.vdd > 0.0 ? v / cell.vdd : 1.0;
    circuit.initial_conditions["q"] = cell.q * scale;
    circuit.initial_conditions["qb"] = cell.qb * scale;
    const auto sol = engine::dc_operating_point(circuit, config.solver);

    HoldDisturbReport r;
    r.after = cell;
    r.after.vdd = v;
    r.after.q = sol.node_voltages[static_cast<std::size_t>(circuit.node("q"))];
    r.after.qb = sol.node_voltages[static_cast<std::size_t>(circuit.node("qb"))];
    if (!is_nv(config)) return r;

    const auto volt = [&](engine::NodeId n) {
        return n == kGround ? 0.0 : sol.node_voltages[static_cast<std::size_t>(n)];
    };
    for (const char* name : {"m2", "m4"}) {
        const auto& f = circuit.fefet(name);
        const auto next =
            device::step_polarization(f.state, f.params, volt(f.gate), volt(f.drain), volt(f.source), duration);
        for (std::size_t i = 0; i < next.segments.size(); ++i) {
            const double p = f.state.segments[i];
            const double d = next.segments[i] - p;
            if (d == 0.0) continue;
            r.max_delta_p = std::max(r.max_delta_p, std::abs(d));
            if (d * p > 0.0) {
                r.max_reinforcing = std::max(r.max_reinforcing, std::abs(d));
            } else {
                r.max_opposing = std::max(r.max_opposing, std::abs(d));
                const double target = d > 0.0 ? 1.0 : -1.0;
                r.max_opposing_fraction = std::max(r.max_opposing_fraction, std::abs(d) / std::abs(target - p));
            }
        }
        (std::string(name) == "m2" ? r.after.m2 : r.after.m4) = next;
    }
    return r;
}

StepTrace run_silicon_protocol(const CellConfig& config, const CellState& cell, const std::vector<double>& targets,
                               double i_bias, int repetitions) {
    if (!(i_bias >= 0.0)) throw DomainError("i_bias must be >= 0");
    auto circuit = build_cell(config, BitlineMode::Sink, i_bias);
    load_states(circuit, config, cell);
    const Logic expected = is_nv(config) ? polarization_logic(cell) : Logic::Invalid;
    const auto q = static_cast<std::size_t>(circuit.node("q"));
    const auto qb = static_cast<std::size_t>(circuit.node("qb"));
    const auto bl = static_cast<std::size_t>(circuit.node("bl"));
    const auto blb = static_cast<std::size_t>(circuit.node("blb"));

    StepTrace trace;
    std::optional<engine::Solution> prev;
    const auto step = [&](double target, int rep, const char* phase, double vdd, double wl) {
        circuit.vsource("vvdd").wave = engine::SourceWaveform::constant(vdd);
        circuit.vsource("vwl").wave = engine::SourceWaveform::constant(wl);
        StepRecord rec;
        rec.index = static_cast<int>(trace.steps.size());
        try {
            prev = engine::dc_operating_point(circuit, config.solver, prev);
        } catch (const SolverError& e) {
            throw SolverError(e.kind(), "silicon protocol step " + std::to_string(rec.index) + ": " + e.what());
        }
        rec.target = target;
        rec.repetition = rep;
        rec.phase = phase;
        rec.vdd = vdd;
        rec.wl = wl;
        rec.q = prev->node_voltages[q];
        rec.qb = prev->node_voltages[qb];
        rec.bl = prev->node_voltages[bl];
        rec.blb = prev->node_voltages[blb];
        trace.steps.push_back(rec);
        return rec;
    };

    step(0.0, 0, "off", 0.0, 0.0);
    for (double target : targets) {
        if (!(target > 0.0)) throw DomainError("protocol targets must be > 0");
        for (int rep = 0; rep < repetitions; ++rep) {
            const int n = static_cast<int>(std::ceil(target / config.silicon_vdd_step - 1e-9));
            for (int k = 1; k <= n; ++k) step(target, rep, "ramp", std::min(k * config.silicon_vdd_step, target), 0.0);
            const auto hold = step(target, rep, "hold", target, 0.0);
            const auto read = step(target, rep, "read", target, target);
            step(target, rep, "off", 0.0, 0.0);

            ProtocolRead pr;
            pr.target = target;
            pr.repetition = rep;
            pr.latched = CellState{hold.q, hold.qb, target, {}, {}}.logic(config.logic_threshold);
            pr.bl = read.bl;
            pr.blb = read.blb;
            const bool sign_ok = expected == Logic::One ? read.bl > read.blb : read.blb > read.bl;
            pr.correct = expected != Logic::Invalid && pr.latched == expected && sign_ok;
            const double high = expected == Logic::One ? read.q : read.qb;
            pr.weak = high < config.logic_threshold * target;
            trace.reads.push_back(pr);
            ++trace.total;
            trace.correct += pr.correct ? 1 : 0;
        }
    }
    return trace;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    // splitmix64 of (master, index)
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

namespace {

MonteCarloRun one_run(const CellConfig& base, double sigma_vth, double sigma_mw_rel, int index, std::uint64_t seed,
                      int data) {
    MonteCarloRun out;
    out.index = index;
    out.seed = seed;
    CellConfig cfg = base;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    cfg.vth_offsets.assign(6, 0.0);
    for (auto& v : cfg.vth_offsets) v = sigma_vth * gauss(rng);
    cfg.mw_scale_m2 = std::max(0.05, 1.0 + sigma_mw_rel * gauss(rng));
    cfg.mw_scale_m4 = std::max(0.05, 1.0 + sigma_mw_rel * gauss(rng));

    try {
        CellState s;
        s.vdd = cfg.vdd_nominal;
        s.q = data ? 0.0 : cfg.vdd_nominal;
        s.qb = data ? cfg.vdd_nominal : 0.0;
        s.m2 = FeFetState::lvt(cfg.segments);
        s.m4 = FeFetState::lvt(cfg.segments);
        auto w = run_write(cfg, s, data);
        auto off = run_power_off(cfg, w.after);
        auto rs = run_restore_one_step(cfg, off.after, cfg.vdd_nominal);
        out.logic = rs.logic;
        out.correct = rs.logic == (data ? Logic::One : Logic::Zero);
    } catch (const Error&) {
        out.correct = false;
    }
    return out;
}

}  // namespace

MonteCarloReport monte_carlo_restore(const CellConfig& config, double sigma_vth, double sigma_mw_rel, int n_runs,
                                     std::uint64_t seed, int data, unsigned threads) {
    if (n_runs <= 0) throw DomainError("n_runs must be > 0");
    if (!(sigma_vth >= 0.0 && sigma_mw_rel >= 0.0)) throw DomainError("sigmas must be >= 0");
    MonteCarloReport report;
    report.runs = n_runs;
    report.details.resize(static_cast<std::size_t>(n_runs));
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(n_runs));

    const auto work = [&](unsigned worker) {
        for (int i = static_cast<int>(worker); i < n_runs; i += static_cast<int>(threads)) {
            report.details[static_cast<std::size_t>(i)] =
                one_run(config, sigma_vth, sigma_mw_rel, i, derive_seed(seed, static_cast<std::uint64_t>(i)), data);
        }
    };
    if (threads == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned k = 0; k < threads; ++k) pool.emplace_back(work, k);
        for (auto& t : pool) t.join();
    }
    for (const auto& d : report.details) report.passed += d.correct ? 1 : 0;
    report.yield = static_cast<double>(report.passed) / n_runs;
    return report;
}

}  // namespace fesram::cellbench
