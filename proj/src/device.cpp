#include "fesram/device.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fesram/error.hpp"

namespace fesram::device {

namespace {

// Softplus ln(1 + e^u) without overflow.
double softplus(double u) {
    return u > 0.0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u));
}

double logistic(double u) {
    if (u >= 0.0) {
        const double e = std::exp(-u);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(u);
    return e / (1.0 + e);
}

// Charge-sheet interpolation F(x) = (A^2 / 2n) * softplus(x/A)^2 with A = 2 n vt.
// Reduces to x^2 / 2n in strong inversion and to an exponential in weak inversion.
struct Interp {
    double value;
    double slope;
};

Interp interp(double x, double n, double vt) {
    const double a = 2.0 * n * vt;
    const double u = x / a;
    const double l = softplus(u);
    return {a * a / (2.0 * n) * l * l, a / n * l * logistic(u)};
}

double sign_of(double v) { return (v > 0.0) - (v < 0.0); }

// N-type evaluation with drain -> source current.
CurrentEval n_eval(double vth, const MosfetParams& p, double vg, double vd, double vs) {
    const Interp fwd = interp(vg - vs - vth, p.n_sub, p.vt_thermal);
    const Interp rev = interp(vg - vd - vth, p.n_sub, p.vt_thermal);
    const double vds = vd - vs;
    const double clm = 1.0 + p.lambda * std::abs(vds);
    const double core = p.kprime * (fwd.value - rev.value);
    const double dclm = p.lambda * sign_of(vds);

    CurrentEval out;
    out.current = core * clm;
    out.d_vg = p.kprime * (fwd.slope - rev.slope) * clm;
    out.d_vd = p.kprime * rev.slope * clm + core * dclm;
    out.d_vs = -p.kprime * fwd.slope * clm - core * dclm;
    return out;
}

CurrentEval eval_with_vth(const MosfetParams& p, double vth, double vg, double vd, double vs) {
    if (p.polarity == Polarity::N) {
        return n_eval(vth, p, vg, vd, vs);
    }
    // P device: mirror every voltage, the mirrored N current is source -> drain.
    CurrentEval m = n_eval(-vth, p, -vg, -vd, -vs);
    m.d_vg = -m.d_vg;
    m.d_vd = -m.d_vd;
    m.d_vs = -m.d_vs;
    return m;
}

}  // namespace

void MosfetParams::validate() const {
    if (!(kprime > 0.0)) throw DomainError("kprime must be positive");
    if (!(n_sub >= 1.0)) throw DomainError("n_sub must be >= 1");
    if (!(lambda >= 0.0)) throw DomainError("lambda must be >= 0");
    if (!(vt_thermal > 0.0)) throw DomainError("vt_thermal must be positive");
    if (polarity == Polarity::P && vth0 > 0.0) throw DomainError("P device requires vth0 <= 0");
    if (polarity == Polarity::N && vth0 < 0.0) throw DomainError("N device requires vth0 >= 0");
}

void SwitchingKinetics::validate() const {
    if (!(tau0 > 0.0)) throw DomainError("tau0 must be positive");
    if (!(v0 > 0.0)) throw DomainError("v0 must be positive");
}

double SwitchingKinetics::tau(double voltage) const {
    const double a = std::abs(voltage);
    if (a == 0.0) return std::numeric_limits<double>::infinity();
    return tau0 * std::exp(v0 / a);
}

double ChannelProfile::drain_weight(double x) const {
    switch (kind) {
        case Kind::Linear:
            return x;
        case Kind::Junction:
            return logistic((x - (1.0 - reach)) / sharpness);
    }
    return x;
}

FeFetState FeFetState::uniform(double p, std::size_t segment_count) {
    return FeFetState{std::vector<double>(segment_count, p)};
}

double FeFetState::mean() const {
    if (segments.empty()) return 0.0;
    return std::accumulate(segments.begin(), segments.end(), 0.0) / static_cast<double>(segments.size());
}

void FeFetState::validate() const {
    if (segments.empty()) throw DomainError("FeFET state needs at least one segment");
    for (double p : segments) {
        if (!(p >= -1.0 && p <= 1.0)) throw DomainError("polarization outside [-1, 1]");
    }
}

void FeFetParams::validate() const {
    base.validate();
    kinetics.validate();
    if (!(mw > 0.0)) throw DomainError("memory window must be positive");
    if (profile.kind == ChannelProfile::Kind::Junction) {
        if (!(profile.reach >= 0.0 && profile.reach <= 1.0)) throw DomainError("junction reach outside [0, 1]");
        if (!(profile.sharpness > 0.0)) throw DomainError("junction sharpness must be positive");
    }
}

double mosfet_current(const MosfetParams& params, double vg, double vd, double vs) {
    return mosfet_eval(params, vg, vd, vs).current;
}

CurrentEval mosfet_eval(const MosfetParams& params, double vg, double vd, double vs) {
    return eval_with_vth(params, params.vth0, vg, vd, vs);
}

MosfetParams calibrate_drive(double target_current, double at_vgs, double at_vds,
                             const MosfetParams& params_template, double kprime_max) {
    if (!(target_current > 0.0)) throw CalibrationError("target current must be positive");
    params_template.validate();

    // The model is linear in kprime, so a single rescale is the exact root; the
    // re-evaluation below guards the 0.1% contract.
    const double at_template = mosfet_current(params_template, at_vgs, at_vds, 0.0);
    if (!(at_template > 0.0)) {
        throw CalibrationError("device conducts no forward current at the calibration bias");
    }
    MosfetParams out = params_template;
    out.kprime = params_template.kprime * target_current / at_template;
    if (!(out.kprime <= kprime_max)) {
        throw CalibrationError("target " + std::to_string(target_current) + " A unreachable at vgs = " +
                               std::to_string(at_vgs) + " V (kprime would exceed " + std::to_string(kprime_max) +
                               ")");
    }
    const double check = mosfet_current(out, at_vgs, at_vds, 0.0);
    if (std::abs(check - target_current) > 1e-3 * target_current) {
        throw CalibrationError("drive calibration did not converge");
    }
    return out;
}

double fefet_effective_vth(const FeFetState& state, const FeFetParams& params) {
    const double s = params.base.polarity == Polarity::P ? 1.0 : -1.0;
    return params.base.vth0 + s * 0.5 * params.mw * state.mean();
}

double fefet_current(const FeFetState& state, const FeFetParams& params, double vg, double vd, double vs) {
    return fefet_eval(state, params, vg, vd, vs).current;
}

CurrentEval fefet_eval(const FeFetState& state, const FeFetParams& params, double vg, double vd, double vs) {
    return eval_with_vth(params.base, fefet_effective_vth(state, params), vg, vd, vs);
}

std::vector<double> fe_voltages(const FeFetParams& params, std::size_t segment_count, double vg, double vd,
                                double vs) {
    std::vector<double> out(segment_count);
    for (std::size_t s = 0; s < segment_count; ++s) {
        const double x = (static_cast<double>(s) + 0.5) / static_cast<double>(segment_count);
        const double w = params.profile.drain_weight(x);
        out[s] = vg - ((1.0 - w) * vs + w * vd);
    }
    return out;
}

namespace {

// Positive gate-to-channel field drives a p-FeFET to HVT (p -> -1); n-FeFET mirrored.
double target_polarization(Polarity polarity, double v_fe) {
    const double s = sign_of(v_fe);
    return polarity == Polarity::P ? -s : s;
}

}  // namespace

FeFetState step_polarization(const FeFetState& state, const FeFetParams& params, double vg, double vd, double vs,
                             double dt) {
    if (!(dt >= 0.0)) throw DomainError("dt must be >= 0");
    FeFetState next = state;
    if (dt == 0.0) return next;
    const auto v_fe = fe_voltages(params, state.segment_count(), vg, vd, vs);
    for (std::size_t s = 0; s < next.segments.size(); ++s) {
        if (v_fe[s] == 0.0) continue;
        const double target = target_polarization(params.base.polarity, v_fe[s]);
        // -expm1 keeps the update exactly zero when the switching rate underflows.
        const double progress = -std::expm1(-dt / params.kinetics.tau(v_fe[s]));
        double p = state.segments[s] + (target - state.segments[s]) * progress;
        next.segments[s] = std::clamp(p, -1.0, 1.0);
    }
    return next;
}

FeFetState step_polarization_stochastic(const FeFetState& state, const FeFetParams& params, double vg, double vd,
                                        double vs, double dt, int domains, std::mt19937_64& rng) {
    if (!(dt >= 0.0)) throw DomainError("dt must be >= 0");
    if (domains <= 0) throw DomainError("domain count must be positive");
    FeFetState next = state;
    if (dt == 0.0) return next;
    const auto v_fe = fe_voltages(params, state.segment_count(), vg, vd, vs);
    for (std::size_t s = 0; s < next.segments.size(); ++s) {
        if (v_fe[s] == 0.0) continue;
        const double target = target_polarization(params.base.polarity, v_fe[s]);
        const double probability = -std::expm1(-dt / params.kinetics.tau(v_fe[s]));
        const int up = static_cast<int>(std::lround((state.segments[s] + 1.0) * 0.5 * domains));
        const int movable = target > 0.0 ? domains - up : up;
        std::binomial_distribution<int> flips(movable, std::clamp(probability, 0.0, 1.0));
        const int flipped = flips(rng);
        const int new_up = target > 0.0 ? up + flipped : up - flipped;
        next.segments[s] = 2.0 * new_up / domains - 1.0;
    }
    return next;
}

FeFetState apply_program_pulse(const FeFetState& state, const FeFetParams& params, const ProgramPulse& pulse) {
    if (!(pulse.width >= 0.0)) throw DomainError("pulse width must be >= 0");
    return step_polarization(state, params, pulse.vg, pulse.vd, pulse.vs, pulse.width);
}

double switching_boundary_width(const SwitchingKinetics& kinetics, double amplitude) {
    if (amplitude == 0.0) throw DomainError("switching boundary is infinite at zero amplitude");
    // Fraction f switched after width w: 1 - exp(-w/tau) = f  =>  w = -tau ln(1 - f).
    return -kinetics.tau(amplitude) * std::log1p(-kinetics.boundary_fraction);
}

SwitchingKinetics calibrate_kinetics(KineticsAnchor first, KineticsAnchor second) {
    const double a1 = std::abs(first.amplitude);
    const double a2 = std::abs(second.amplitude);
    if (!(a1 > 0.0 && a2 > 0.0)) throw CalibrationError("anchor amplitudes must be nonzero");
    if (!(first.width > 0.0 && second.width > 0.0)) throw CalibrationError("anchor widths must be positive");
    if (a1 == a2) throw CalibrationError("anchor amplitudes must differ");

    // ln w = ln(tau0 ln2) + v0 / |a| is linear in 1/|a|.
    SwitchingKinetics k;
    k.v0 = (std::log(first.width) - std::log(second.width)) / (1.0 / a1 - 1.0 / a2);
    if (!(k.v0 > 0.0)) {
        throw CalibrationError("anchors imply non-positive activation voltage; width must fall with amplitude");
    }
    const double ln_fraction = -std::log1p(-k.boundary_fraction);
    k.tau0 = first.width / ln_fraction * std::exp(-k.v0 / a1);
    return k;
}

void SweepProtocol::validate() const {
    if (vg_step == 0.0) throw DomainError("sweep step must be nonzero");
    if ((vg_stop - vg_start) * vg_step < 0.0) throw DomainError("sweep step direction inconsistent with start/stop");
    if (!(dwell >= 0.0)) throw DomainError("dwell must be >= 0");
}

SweepProtocol SweepProtocol::p_fefet(bool to_lvt) {
    SweepProtocol p;
    p.reset = ProgramPulse{+4.0, 0.0, 0.0, 1e-3};
    if (to_lvt) p.set = ProgramPulse{-4.5, 0.0, 0.0, 1e-3};
    return p;
}

SweepProtocol SweepProtocol::n_fefet(bool to_lvt) {
    SweepProtocol p;
    p.reset = ProgramPulse{-4.0, 0.0, 0.0, 1e-3};
    if (to_lvt) p.set = ProgramPulse{+4.5, 0.0, 0.0, 1e-3};
    p.vg_start = -0.2;
    p.vg_stop = 2.3;
    p.vg_step = 0.05;
    p.vs = 0.0;
    p.vd = 0.05;
    return p;
}

SweepProtocol SweepProtocol::plain(double start, double stop, double step, double vs, double vd, double dwell) {
    SweepProtocol p;
    p.vg_start = start;
    p.vg_stop = stop;
    p.vg_step = step;
    p.vs = vs;
    p.vd = vd;
    p.dwell = dwell;
    return p;
}

namespace {

std::vector<double> sweep_points(const SweepProtocol& protocol) {
    protocol.validate();
    std::vector<double> out;
    const double span = (protocol.vg_stop - protocol.vg_start) / protocol.vg_step;
    const auto count = static_cast<long>(std::floor(span + 1e-9));
    for (long i = 0; i <= count; ++i) out.push_back(protocol.vg_start + static_cast<double>(i) * protocol.vg_step);
    return out;
}

}  // namespace

SweepResult idvg_sweep(const FeFetParams& params, const FeFetState& initial_state, const SweepProtocol& protocol) {
    params.validate();
    initial_state.validate();
    FeFetState state = initial_state;
    if (protocol.reset) state = apply_program_pulse(state, params, *protocol.reset);
    if (protocol.set) state = apply_program_pulse(state, params, *protocol.set);
    // protocol.wait: de-trapping is not modeled.

    SweepResult out;
    if (protocol.vg_start == protocol.vg_stop && protocol.vg_step == 0.0) {
        out.final_state = state;
        return out;
    }
    for (double vg : sweep_points(protocol)) {
        out.curve.points.push_back({vg, std::abs(fefet_current(state, params, vg, protocol.vd, protocol.vs))});
        state = step_polarization(state, params, vg, protocol.vd, protocol.vs, protocol.dwell);
    }
    out.final_state = state;
    return out;
}

Curve idvg_sweep(const MosfetParams& params, const SweepProtocol& protocol) {
    params.validate();
    Curve curve;
    for (double vg : sweep_points(protocol)) {
        curve.points.push_back({vg, std::abs(mosfet_current(params, vg, protocol.vd, protocol.vs))});
    }
    return curve;
}

std::optional<double> crossing(const Curve& curve, double level) {
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        const auto& a = curve.points[i - 1];
        const auto& b = curve.points[i];
        if ((a.y - level) * (b.y - level) <= 0.0 && a.y != b.y) {
            return a.x + (level - a.y) * (b.x - a.x) / (b.y - a.y);
        }
        if (a.y == level) return a.x;
    }
    return std::nullopt;
}

double memory_window(const Curve& curve_lvt, const Curve& curve_hvt, double i_crit) {
    const auto lvt = crossing(curve_lvt, i_crit);
    if (!lvt) throw ExtractionError("LVT curve '" + curve_lvt.label + "' never crosses the reference current");
    const auto hvt = crossing(curve_hvt, i_crit);
    if (!hvt) throw ExtractionError("HVT curve '" + curve_hvt.label + "' never crosses the reference current");
    return std::abs(*lvt - *hvt);
}

ProgramPulse scheme_pulse(WriteScheme scheme, double amplitude, double width) {
    const double a = std::abs(amplitude);
    switch (scheme) {
        case WriteScheme::GateHvt:
            return {+a, 0.0, 0.0, width};
        case WriteScheme::GateLvt:
            return {-a, 0.0, 0.0, width};
        case WriteScheme::SourceDrainLvt:
            return {0.0, +a, +a, width};
        case WriteScheme::GateDrainHvt:
            return {+a, +a, 0.0, width};
    }
    return {};
}

}  // namespace fesram::device
