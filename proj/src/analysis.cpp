#include "fesram/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "fesram/error.hpp"

namespace fesram::analysis {

using device::Curve;
using device::CurvePoint;

void Table::add(std::vector<double> row) {
    if (row.size() != columns.size()) throw Error("table row width does not match its columns");
    rows.push_back(std::move(row));
}

LatencyReport read_latency(const engine::Waveform& w, double threshold, double wl_level) {
    if (!(threshold >= 0.0)) throw DomainError("threshold must be >= 0");
    const auto& t = w.times;
    const auto& wl = w.node("wl");
    const auto& bl = w.node("bl");
    const auto& blb = w.node("blb");
    if (t.empty()) throw ExtractionError("empty waveform");

    const double half = 0.5 * wl_level;
    std::optional<double> t_wl;
    std::size_t k0 = 0;
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (wl[k] >= half) {
            if (k == 0) {
                t_wl = t[0];
            } else {
                const double f = (half - wl[k - 1]) / (wl[k] - wl[k - 1]);
                t_wl = t[k - 1] + f * (t[k] - t[k - 1]);
            }
            k0 = k;
            break;
        }
    }
    if (!t_wl) throw ExtractionError("wordline never reaches 50%");

    LatencyReport r;
    r.threshold = threshold;
    r.t_wordline = *t_wl;
    const auto diff_at = [&](double time) { return w.voltage_at("bl", time) - w.voltage_at("blb", time); };
    const double d0 = diff_at(*t_wl);
    if (std::abs(d0) >= threshold) {
        r.t_crossing = *t_wl;
        r.value = d0 > 0.0 ? 1 : 0;
        return r;
    }
    double prev_t = *t_wl;
    double prev_d = d0;
    for (std::size_t k = k0; k < t.size(); ++k) {
        if (t[k] <= *t_wl) continue;
        const double d = bl[k] - blb[k];
        if (std::abs(d) >= threshold) {
            const double a = std::abs(prev_d), b = std::abs(d);
            const double f = b > a ? (threshold - a) / (b - a) : 1.0;
            r.t_crossing = prev_t + f * (t[k] - prev_t);
            r.latency = r.t_crossing - *t_wl;
            r.value = d > 0.0 ? 1 : 0;
            return r;
        }
        prev_t = t[k];
        prev_d = d;
    }
    throw ExtractionError("bitline differential never reaches " + std::to_string(threshold) + " V");
}

const char* to_string(SnmMode m) {
    switch (m) {
        case SnmMode::Hold: return "hold";
        case SnmMode::Read: return "read";
        default: return "write";
    }
}

namespace {

// Curve rotated by 45 degrees, sorted by u.
std::vector<CurvePoint> rotated(const Curve& c) {
    std::vector<CurvePoint> out;
    out.reserve(c.points.size());
    for (const auto& p : c.points) out.push_back({(p.x - p.y) / std::sqrt(2.0), (p.x + p.y) / std::sqrt(2.0)});
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.x < b.x; });
    return out;
}

double interp(const std::vector<CurvePoint>& pts, double u) {
    if (u <= pts.front().x) return pts.front().y;
    if (u >= pts.back().x) return pts.back().y;
    auto hi = std::lower_bound(pts.begin(), pts.end(), u, [](const auto& p, double v) { return p.x < v; });
    auto lo = hi - 1;
    if (hi->x == lo->x) return hi->y;
    const double f = (u - lo->x) / (hi->x - lo->x);
    return lo->y + f * (hi->y - lo->y);
}

// y on a curve given as points ordered along x (not necessarily monotone in x direction).
double interp_x(const Curve& c, double x) {
    const auto& p = c.points;
    const bool up = p.back().x >= p.front().x;
    if (up ? x <= p.front().x : x >= p.front().x) return p.front().y;
    if (up ? x >= p.back().x : x <= p.back().x) return p.back().y;
    for (std::size_t k = 1; k < p.size(); ++k) {
        const double a = p[k - 1].x, b = p[k].x;
        if ((x >= std::min(a, b)) && (x <= std::max(a, b))) {
            if (a == b) return p[k].y;
            return p[k - 1].y + (x - a) / (b - a) * (p[k].y - p[k - 1].y);
        }
    }
    return p.back().y;
}

double slope_x(const Curve& c, double x, double h) {
    return (interp_x(c, x + h) - interp_x(c, x - h)) / (2 * h);
}

constexpr double kLobeFloor = 1e-3;

}  // namespace

std::vector<double> lobe_snm(const Curve& a, const Curve& b) {
    if (a.points.size() < 2 || b.points.size() < 2) throw ExtractionError("butterfly curves need >= 2 points");
    const auto ra = rotated(a);
    const auto rb = rotated(b);
    const double lo = std::max(ra.front().x, rb.front().x);
    const double hi = std::min(ra.back().x, rb.back().x);
    std::vector<double> us;
    for (const auto& p : ra) {
        if (p.x >= lo && p.x <= hi) us.push_back(p.x);
    }
    for (const auto& p : rb) {
        if (p.x >= lo && p.x <= hi) us.push_back(p.x);
    }
    std::sort(us.begin(), us.end());
    us.erase(std::unique(us.begin(), us.end()), us.end());

    std::vector<double> lobes;
    double best = 0.0;
    int sign = 0;
    const auto close = [&]() {
        if (sign != 0 && best / std::sqrt(2.0) >= kLobeFloor) lobes.push_back(best / std::sqrt(2.0));
        best = 0.0;
    };
    for (double u : us) {
        const double d = interp(ra, u) - interp(rb, u);
        const int s = d > 0.0 ? 1 : (d < 0.0 ? -1 : 0);
        if (s == 0) continue;
        if (s != sign) {
            close();
            sign = s;
        }
        best = std::max(best, std::abs(d));
    }
    close();
    return lobes;
}

std::vector<StablePoint> intersections(const Curve& a, const Curve& b) {
    // a: y = f(x); b: x = g(y). Fixed points of x -> g(f(x)).
    std::vector<StablePoint> out;
    const auto& pa = a.points;
    if (pa.size() < 2 || b.points.size() < 2) return out;
    Curve b_as_fn{b.label, {}};
    for (const auto& p : b.points) b_as_fn.points.push_back({p.y, p.x});  // x = g(y)
    const auto h = [&](double x) { return interp_x(b_as_fn, interp_x(a, x)) - x; };

    const double step = std::abs(pa[1].x - pa[0].x);
    double prev_x = pa.front().x;
    double prev_h = h(prev_x);
    for (std::size_t k = 1; k < pa.size(); ++k) {
        const double x = pa[k].x;
        const double hx = h(x);
        if ((prev_h > 0.0 && hx <= 0.0) || (prev_h < 0.0 && hx >= 0.0)) {
            if (hx == 0.0 && k + 1 < pa.size()) {
                // exact zero at a grid point: handled on the next interval
            }
            // bisection on the interpolated curves
            double l = prev_x, r = x, hl = prev_h;
            for (int it = 0; it < 60; ++it) {
                const double m = 0.5 * (l + r);
                const double hm = h(m);
                if ((hl > 0.0) == (hm > 0.0)) {
                    l = m;
                    hl = hm;
                } else {
                    r = m;
                }
            }
            const double xq = 0.5 * (l + r);
            StablePoint sp;
            sp.q = xq;
            sp.qb = interp_x(a, xq);
            const double d = std::max(step, 1e-6);
            sp.loop_gain = std::abs(slope_x(a, xq, d) * slope_x(b_as_fn, sp.qb, d));
            sp.stable = sp.loop_gain < 1.0;
            out.push_back(sp);
            if (hx == 0.0) {
                // skip the zero so the following interval does not double count
                prev_x = x;
                prev_h = h(x + 0.5 * step);
                continue;
            }
        }
        prev_x = x;
        prev_h = hx;
    }
    return out;
}

ButterflyResult butterfly(const cellbench::CellConfig& config, const cellbench::CellState& cell, SnmMode mode,
                          double step) {
    using engine::kGround;
    const double v = cell.vdd > 0.0 ? cell.vdd : config.vdd_nominal;
    if (!(step > 0.0)) throw DomainError("sweep step must be > 0");

    // both inverters driven by one input: qb = f(vin) through m2/m3, q = g(vin) through m1/m4
    engine::Circuit c;
    const auto vdd = c.add_node("vdd");
    const auto wl = c.add_node("wl");
    const auto bl = c.add_node("bl");
    const auto blb = c.add_node("blb");
    const auto vin = c.add_node("vin");
    const auto q = c.add_node("q");
    const auto qb = c.add_node("qb");
    const double wl_v = mode == SnmMode::Hold ? 0.0 : v;
    const double bl_v = mode == SnmMode::Write ? 0.0 : v;
    c.add(engine::VoltageSource{"vvdd", vdd, kGround, engine::SourceWaveform::constant(v)});
    c.add(engine::VoltageSource{"vwl", wl, kGround, engine::SourceWaveform::constant(wl_v)});
    c.add(engine::VoltageSource{"vbl", bl, kGround, engine::SourceWaveform::constant(bl_v)});
    c.add(engine::VoltageSource{"vblb", blb, kGround, engine::SourceWaveform::constant(v)});
    c.add(engine::VoltageSource{"vin", vin, kGround, engine::SourceWaveform::constant(0.0)});

    const auto full = cellbench::build_cell(config);
    for (const auto& d : full.devices()) {
        const auto remap = [&](engine::NodeId n, bool is_gate) -> engine::NodeId {
            if (n == kGround) return kGround;
            if (is_gate) return vin;
            return c.node(full.node_name(n));
        };
        if (const auto* m = std::get_if<engine::Mosfet>(&d)) {
            const bool access = m->name == "m5" || m->name == "m6";
            c.add(engine::Mosfet{m->name, access ? wl : remap(m->gate, true), remap(m->drain, false),
                                 remap(m->source, false), m->params});
        } else if (const auto* f = std::get_if<engine::Fefet>(&d)) {
            auto state = f->name == "m2" ? cell.m2 : cell.m4;
            if (state.segments.empty()) state = f->state;
            c.add(engine::Fefet{f->name, vin, remap(f->drain, false), remap(f->source, false), f->params, state});
        }
    }

    auto cfg = config.solver;
    const double lo = 0.0, hi = v;
    const int n = static_cast<int>(std::llround((hi - lo) / step));
    auto sweep = engine::dc_sweep(c, "vin", lo, lo + n * step, step, cfg);

    ButterflyResult r;
    r.vtc_forward.label = "qb=f(q)";
    r.vtc_mirrored.label = "q=g(qb)";
    const auto iq = static_cast<std::size_t>(q);
    const auto iqb = static_cast<std::size_t>(qb);
    for (std::size_t k = 0; k < sweep.values.size(); ++k) {
        const double x = sweep.values[k];
        r.vtc_forward.points.push_back({x, sweep.points[k].node_voltages[iqb]});
        r.vtc_mirrored.points.push_back({sweep.points[k].node_voltages[iq], x});
    }
    r.lobe_snm = lobe_snm(r.vtc_forward, r.vtc_mirrored);
    r.snm = r.lobe_snm.size() >= 2 ? *std::min_element(r.lobe_snm.begin(), r.lobe_snm.end()) : 0.0;
    r.points = intersections(r.vtc_forward, r.vtc_mirrored);
    for (const auto& p : r.points) r.stable_count += p.stable ? 1 : 0;
    r.monostable = r.stable_count == 1;
    r.comparative_only = mode == SnmMode::Write && config.topology == cellbench::Topology::Nvsram6T;
    return r;
}

std::vector<HalidPoint> emit_halid(const device::SwitchingKinetics& kinetics, const std::vector<double>& amplitudes,
                                   double clamp) {
    std::vector<HalidPoint> out;
    for (double a : amplitudes) {
        if (a == 0.0) throw DomainError("halid amplitude must be nonzero");
        for (double sign : {1.0, -1.0}) {
            HalidPoint p;
            p.amplitude = sign * std::abs(a);
            const double w = device::switching_boundary_width(kinetics, p.amplitude);
            p.clamped = !(w <= clamp);
            p.width = p.clamped ? clamp : w;
            out.push_back(p);
        }
    }
    return out;
}

double disturb_projection(const device::SwitchingKinetics& kinetics, double bias, double horizon) {
    if (!(horizon >= 0.0)) throw DomainError("horizon must be >= 0");
    if (horizon == 0.0 || bias == 0.0) return 0.0;
    return -std::expm1(-horizon / kinetics.tau(bias));
}

namespace {

device::SweepProtocol readout_sweep() { return device::SweepProtocol::plain(1.0, -1.5, -0.05, 0.8, 0.75, 1e-3); }

}  // namespace

SchemeWindows scheme_windows(const device::FeFetParams& params, double i_crit, double amplitude, double width) {
    using device::FeFetState;
    using device::WriteScheme;
    const auto segs = std::size_t{8};
    SchemeWindows f;
    f.lvt = device::idvg_sweep(params, FeFetState::hvt(segs), device::SweepProtocol::p_fefet(true)).curve;
    f.lvt.label = "lvt";
    const auto gate = device::apply_program_pulse(FeFetState::lvt(segs), params,
                                                  device::scheme_pulse(WriteScheme::GateHvt, amplitude, width));
    const auto gd = device::apply_program_pulse(FeFetState::lvt(segs), params,
                                                device::scheme_pulse(WriteScheme::GateDrainHvt, amplitude, width));
    f.hvt_gate = device::idvg_sweep(params, gate, readout_sweep()).curve;
    f.hvt_gate.label = "hvt_gate";
    f.hvt_gate_drain = device::idvg_sweep(params, gd, readout_sweep()).curve;
    f.hvt_gate_drain.label = "hvt_gate_drain";
    f.mw_gate = device::memory_window(f.lvt, f.hvt_gate, i_crit);
    f.mw_gate_drain = device::memory_window(f.lvt, f.hvt_gate_drain, i_crit);
    return f;
}

Table SchemeWindows::table() const {
    Table t{{"vg_volts", "id_lvt_amperes", "id_hvt_gate_amperes", "id_hvt_gate_drain_amperes"}, {}};
    for (std::size_t k = 0; k < lvt.points.size(); ++k) {
        t.add({lvt.points[k].x, lvt.points[k].y, hvt_gate.points[k].y, hvt_gate_drain.points[k].y});
    }
    return t;
}

WriteSequence write_sequence(const cellbench::CellConfig& config) {
    WriteSequence f;
    auto zero = cellbench::latched_state(config, 0);
    auto one = cellbench::run_write(config, zero, 1).after;
    const auto sweep = [&](const device::FeFetState& s, const std::string& label) {
        auto c = device::idvg_sweep(config.fe_params, s, readout_sweep()).curve;
        c.label = label;
        f.labels.push_back(label);
        f.curves.push_back(std::move(c));
    };
    sweep(zero.m2, "m2_after_write0");
    sweep(zero.m4, "m4_after_write0");
    sweep(one.m2, "m2_after_write1");
    sweep(one.m4, "m4_after_write1");
    return f;
}

Table WriteSequence::table() const {
    Table t;
    t.columns.push_back("vg_volts");
    for (const auto& l : labels) t.columns.push_back("id_" + l + "_amperes");
    for (std::size_t k = 0; k < curves.front().points.size(); ++k) {
        std::vector<double> row{curves.front().points[k].x};
        for (const auto& c : curves) row.push_back(c.points[k].y);
        t.add(std::move(row));
    }
    return t;
}

Table butterfly_table(const ButterflyResult& r) {
    Table t{{"vin_volts", "qb_of_q_volts", "q_of_qb_volts"}, {}};
    for (std::size_t k = 0; k < r.vtc_forward.points.size(); ++k) {
        t.add({r.vtc_forward.points[k].x, r.vtc_forward.points[k].y, r.vtc_mirrored.points[k].x});
    }
    return t;
}

Table protocol_table(const cellbench::StepTrace& trace) {
    Table t{{"step", "target_volts", "repetition", "phase", "vdd_volts", "wl_volts", "q_volts", "qb_volts", "bl_volts",
             "blb_volts"},
            {}};
    for (const auto& s : trace.steps) {
        const double phase = s.phase == "ramp" ? 1 : s.phase == "hold" ? 2 : s.phase == "read" ? 3 : 0;
        t.add({static_cast<double>(s.index), s.target, static_cast<double>(s.repetition), phase, s.vdd, s.wl, s.q, s.qb,
               s.bl, s.blb});
    }
    return t;
}

Table halid_table(const std::vector<HalidPoint>& points) {
    Table t{{"amplitude_volts", "width_seconds", "clamped"}, {}};
    for (const auto& p : points) t.add({p.amplitude, p.width, p.clamped ? 1.0 : 0.0});
    return t;
}

Table waveform_table(const engine::Waveform& w) {
    Table t;
    t.columns.push_back("time_seconds");
    for (const auto& n : w.node_names) t.columns.push_back(n + "_volts");
    for (const auto& b : w.branch_names) t.columns.push_back(b + "_amperes");
    for (const auto& f : w.fefet_names) t.columns.push_back(f + "_polarization");
    for (std::size_t k = 0; k < w.size(); ++k) {
        std::vector<double> row{w.times[k]};
        for (const auto& v : w.node_voltages) row.push_back(v[k]);
        for (const auto& v : w.branch_currents) row.push_back(v[k]);
        for (const auto& v : w.polarization) row.push_back(v[k]);
        t.add(std::move(row));
    }
    return t;
}

Table curve_table(const Curve& curve, const std::string& x, const std::string& y) {
    Table t{{x, y}, {}};
    for (const auto& p : curve.points) t.add({p.x, p.y});
    return t;
}

}  // namespace fesram::analysis
