// One PASS/FAIL line per acceptance criterion. Exit status is non-zero only
// when a criterion fails that was not listed with --expect-fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fesram/analysis.hpp"
#include "fesram/cellbench.hpp"
#include "fesram/config.hpp"
#include "fesram/engine.hpp"
#include "fesram/error.hpp"
#include "fesram/netlist.hpp"

namespace fs = std::filesystem;
using namespace fesram;
using cellbench::CellConfig;
using cellbench::Logic;
using cellbench::Topology;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

const config::Config& cfg() {
    static const config::Config c = config::Config::defaults();
    return c;
}
const CellConfig& nv() {
    static const CellConfig c = CellConfig::from_config(cfg(), Topology::Nvsram6T);
    return c;
}
const CellConfig& base() {
    static const CellConfig c = CellConfig::from_config(cfg(), Topology::Baseline6T);
    return c;
}

Outcome read_latency() {
    const auto b = cellbench::run_read(base(), cellbench::latched_state(base(), 1));
    const auto n = cellbench::run_read(nv(), cellbench::latched_state(nv(), 1));
    const double mismatch = std::abs(n.latency - b.latency) / b.latency;
    const bool ok = b.latency >= 50e-12 && b.latency <= 90e-12 && mismatch <= 0.05;
    return {ok, fmt("baseline %.1f ps, nvSRAM %.1f ps, mismatch %.2f%%", b.latency * 1e12, n.latency * 1e12,
                    mismatch * 100)};
}

Outcome monostability() {
    int mono = 0;
    for (int bit : {0, 1}) {
        const auto s = cellbench::latched_state(nv(), bit);
        for (auto m : {analysis::SnmMode::Hold, analysis::SnmMode::Read}) mono += analysis::butterfly(nv(), s, m).stable_count == 1;
    }
    bool base_ok = true;
    std::string lobes;
    for (auto m : {analysis::SnmMode::Hold, analysis::SnmMode::Read}) {
        const auto r = analysis::butterfly(base(), cellbench::latched_state(base(), 1), m);
        base_ok = base_ok && r.stable_count == 2 && r.lobe_snm.size() == 2 &&
                  std::abs(r.lobe_snm[0] - r.lobe_snm[1]) < 1e-3;
        if (r.lobe_snm.size() == 2) lobes += fmt(" %s %.1f/%.1f mV", analysis::to_string(m), r.lobe_snm[0] * 1e3, r.lobe_snm[1] * 1e3);
    }
    return {mono == 4 && base_ok, fmt("nvSRAM monostable %d/4; baseline bistable%s", mono, lobes.c_str())};
}

Outcome programming_asymmetry() {
    const auto f = analysis::scheme_windows(nv().fe_params, cfg().number("analysis.i_crit"));
    const auto hvt = device::apply_program_pulse(device::FeFetState::lvt(8), nv().fe_params,
                                                 device::scheme_pulse(device::WriteScheme::GateHvt, 4.0, 1e-3));
    const double i0 = std::abs(device::fefet_current(hvt, nv().fe_params, 0.0, -0.05, 0.0));
    return {f.mw_gate_drain < f.mw_gate && i0 < 1e-9,
            fmt("MW gate %.3f V > gate-drain %.3f V; HVT |I| at Vgs=0 %.2e A", f.mw_gate, f.mw_gate_drain, i0)};
}

Outcome restore_matrix() {
    const auto targets = cfg().list("silicon.targets");
    const int reps = cfg().integer("silicon.repetitions");
    std::string d;
    bool ok = true;
    for (int bit : {1, 0}) {
        const auto off = cellbench::run_power_off(nv(), cellbench::latched_state(nv(), bit)).after;
        const auto tr = cellbench::run_silicon_protocol(nv(), off, targets, cfg().number("silicon.i_bias"), reps);
        ok = ok && tr.correct == 8 && tr.total == 8;
        d += fmt("stored %d: %d/%d  ", bit, tr.correct, tr.total);
    }
    return {ok, d};
}

Outcome same_state_write() {
    const auto zero = cellbench::latched_state(nv(), 0);
    const auto w1 = cellbench::run_write(nv(), zero, 1);
    const auto w11 = cellbench::run_write(nv(), w1.after, 1);
    const bool swapped = w1.m4_mean >= 0.95 && w1.m2_mean < 0.0 && zero.m2.mean() >= 0.95;
    return {w11.max_delta_p < 1e-3 && swapped,
            fmt("rewrite max |dp| %.2e; after swap M4 mean %.3f, M2 mean %.3f", w11.max_delta_p, w1.m4_mean, w1.m2_mean)};
}

Outcome power_off() {
    bool ok = true;
    double vmax = 0, dp = 0;
    for (int bit : {0, 1}) {
        const auto off = cellbench::run_power_off(nv(), cellbench::latched_state(nv(), bit));
        const auto r = cellbench::run_restore_one_step(nv(), off.after, nv().vdd_nominal);
        ok = ok && off.nodes_collapsed && off.polarization_preserved && r.correct;
        vmax = std::max(vmax, off.max_node_voltage);
        dp = std::max(dp, off.max_delta_p);
    }
    // baseline: no polarization to restore, and a 1 mV residual decides the latch
    bool volatile_ok = true;
    for (int bit : {0, 1}) {
        const auto off = cellbench::run_power_off(base(), cellbench::latched_state(base(), bit));
        auto nudged = off.after;
        (bit ? nudged.qb : nudged.q) = 1e-3;
        const auto r = cellbench::run_restore_one_step(base(), off.after, 1.0);
        const auto rn = cellbench::run_restore_one_step(base(), nudged, 1.0);
        volatile_ok = volatile_ok && off.nodes_collapsed && !r.correct && rn.logic == (bit ? Logic::Zero : Logic::One);
    }
    return {ok && volatile_ok, fmt("max node %.1e V, max |dp| %.1e, restores ok %d, baseline volatile %d", vmax, dp,
                                   static_cast<int>(ok), static_cast<int>(volatile_ok))};
}

Outcome kinetics() {
    const auto& k = nv().fe_params.kinetics;
    const double w4 = device::switching_boundary_width(k, 4.0);
    const double w2 = device::switching_boundary_width(k, 2.0);
    const double e4 = std::abs(w4 - 10e-9) / 10e-9, e2 = std::abs(w2 - 100.0) / 100.0;
    std::vector<double> amps;
    for (int i = 0; i <= 70; ++i) amps.push_back(1.5 + 0.05 * i);
    const auto pts = analysis::emit_halid(k, amps);
    bool mono = true;
    double prev = INFINITY;
    for (const auto& p : pts) {
        if (p.amplitude < 0) continue;
        mono = mono && p.width < prev;
        prev = p.width;
    }
    const double hold = analysis::disturb_projection(k, 1.0, 1000.0);
    return {e4 < 1e-9 && e2 < 1e-9 && mono && hold < 0.01,
            fmt("anchor errors %.1e / %.1e, monotone %d, 1000 s at 1 V switches %.1e", e4, e2, static_cast<int>(mono), hold)};
}

engine::Circuit rc() {
    engine::Circuit c;
    const auto in = c.add_node("in");
    const auto out = c.add_node("out");
    c.add(engine::VoltageSource{"vin", in, engine::kGround,
                                engine::SourceWaveform::piecewise({{0.0, 0.0}, {1e-15, 1.0}})});
    c.add(engine::Resistor{"r1", in, out, 1e3});
    c.add(engine::Capacitor{"c1", out, engine::kGround, 1e-12});
    return c;
}

double rc_error(double dt, engine::Integrator integ) {
    auto c = rc();
    engine::SolverConfig s;
    s.dtmax = dt;
    s.integrator = integ;
    const auto w = engine::transient(c, 5e-9, s);
    const auto& v = w.node("out");
    double err = 0;
    for (std::size_t k = 0; k < w.size(); ++k) {
        if (w.times[k] < 2e-15) continue;
        err = std::max(err, std::abs(v[k] - (1.0 - std::exp(-w.times[k] / 1e-9))));
    }
    return err;
}

Outcome solver() {
    using engine::Integrator;
    const double be = rc_error(1e-11, Integrator::BackwardEuler);
    const double be_half = rc_error(5e-12, Integrator::BackwardEuler);
    const double trap = rc_error(1e-11, Integrator::Trapezoidal);
    const double ratio = be / be_half;

    // divider and every accepted DC solution of a cell sweep
    engine::Circuit d;
    const auto in = d.add_node("in");
    const auto mid = d.add_node("mid");
    d.add(engine::VoltageSource{"vin", in, engine::kGround, engine::SourceWaveform::constant(1.0)});
    d.add(engine::Resistor{"r1", in, mid, 1e3});
    d.add(engine::Resistor{"r2", mid, engine::kGround, 3e3});
    const engine::SolverConfig s;
    const auto sol = engine::dc_operating_point(d, s);
    const bool divider = std::abs(sol.node_voltages[static_cast<std::size_t>(mid)] - 0.75) <= s.vntol;
    double kcl = 0;
    auto cell = cellbench::build_cell(nv());
    const auto sw = engine::dc_sweep(cell, "vvdd", 0.0, 1.0, 0.01, s);
    for (const auto& p : sw.points) {
        for (double r : engine::kcl_residual(cell, p, s.gmin)) kcl = std::max(kcl, std::abs(r));
    }
    for (double r : engine::kcl_residual(d, sol, s.gmin)) kcl = std::max(kcl, std::abs(r));

    const bool be_accurate = be < 1e-3;
    const bool ok = be_accurate && ratio >= 1.5 && ratio <= 2.5 && kcl < 1e-9 && divider;
    return {ok, fmt("BE max error %.3f%% at tau/100 (bound 0.1%%; first-order floor ~0.18%%), BE halving ratio %.2f, "
                    "trapezoidal %.4f%%, max KCL %.1e A, divider exact %d",
                    be * 100, ratio, trap * 100, kcl, static_cast<int>(divider))};
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::vector<fs::path> files_in(const fs::path& dir) {
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir)) out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

Outcome parser() {
    const fs::path golden = fs::path(FESRAM_SOURCE_DIR) / "tests/golden";
    int round = 0, round_ok = 0;
    std::vector<std::string> seeds;
    for (const auto& p : files_in(golden / "netlists")) {
        seeds.push_back(slurp(p));
        ++round;
        const auto a = netlist::parse(seeds.back());
        round_ok += netlist::parse(netlist::unparse(a)) == a;
    }
    int bad = 0, bad_ok = 0;
    for (const auto& p : files_in(golden / "malformed")) {
        ++bad;
        try {
            netlist::parse(slurp(p));
        } catch (const ParseError& e) {
            bad_ok += e.line() >= 1;
        }
    }
    const std::string alphabet = "rcvimf0123456789.+-*()=,\n \tkmunpfgeq$#v(x)";
    std::mt19937_64 rng(99);
    int crashes = 0;
    for (int i = 0; i < 10000; ++i) {
        std::string s = seeds[rng() % seeds.size()];
        for (int k = 0, n = 1 + static_cast<int>(rng() % 8); k < n && !s.empty(); ++k) {
            const std::size_t at = rng() % s.size();
            switch (rng() % 4) {
                case 0: s[at] = alphabet[rng() % alphabet.size()]; break;
                case 1: s.erase(at, 1 + rng() % 4); break;
                case 2: s.insert(at, 1, alphabet[rng() % alphabet.size()]); break;
                default: s.insert(at, s.substr(rng() % s.size(), rng() % 16)); break;
            }
        }
        try {
            const auto n = netlist::parse(s);
            try {
                netlist::elaborate(n, {});
            } catch (const Error&) {
            }
        } catch (const ParseError&) {
        } catch (...) {
            ++crashes;
        }
    }
    return {round_ok == round && bad == 10 && bad_ok == 10 && crashes == 0,
            fmt("round-trip %d/%d, malformed with line %d/%d, fuzz 10000 mutations, %d unstructured failures", round_ok,
                round, bad_ok, bad, crashes)};
}

Outcome monte_carlo() {
    const int runs = cfg().integer("montecarlo.runs");
    const auto seed = static_cast<std::uint64_t>(cfg().integer("montecarlo.seed"));
    const double sv = cfg().number("montecarlo.sigma_vth"), sm = cfg().number("montecarlo.sigma_mw_rel");
    const auto a = cellbench::monte_carlo_restore(nv(), sv, sm, runs, seed);
    const auto b = cellbench::monte_carlo_restore(nv(), sv, sm, runs, seed);
    bool same = a.passed == b.passed && a.details.size() == b.details.size();
    for (std::size_t i = 0; same && i < a.details.size(); ++i) {
        same = a.details[i].seed == b.details[i].seed && a.details[i].correct == b.details[i].correct &&
               a.details[i].logic == b.details[i].logic;
    }
    return {a.yield >= 0.99 && same,
            fmt("sigma_vth %.0f mV, %d runs, yield %.3f, repeat identical %d", sv * 1e3, runs, a.yield, static_cast<int>(same))};
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> expected_fail;
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--expect-fail") expected_fail.insert(std::atoi(argv[++i]));
    }
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"read-latency parity", read_latency},
        {"monostability", monostability},
        {"programming-scheme asymmetry", programming_asymmetry},
        {"restore matrix", restore_matrix},
        {"same-state write no-op", same_state_write},
        {"power-off persistence", power_off},
        {"kinetics calibration", kinetics},
        {"solver oracles", solver},
        {"parser robustness", parser},
        {"monte carlo regression", monte_carlo},
    };
    int unexpected = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s %2d %s: %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(), o.detail.c_str(),
                    secs);
        if (!o.pass && !expected_fail.count(id)) ++unexpected;
    }
    std::fflush(stdout);
    return unexpected == 0 ? 0 : 1;
}
