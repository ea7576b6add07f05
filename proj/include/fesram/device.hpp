#pragma once

// Compact models for MOSFETs and multi-segment p/n FeFETs.
//
// Sign conventions used throughout:
//   * N device current is drain -> source, P device current is source -> drain,
//     so an "on" device with the usual bias returns a positive value.
//   * Polarization p = +1 is LVT and p = -1 is HVT for both polarities.

#include <cstddef>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace fesram::device {

enum class Polarity { N, P };

struct MosfetParams {
    Polarity polarity = Polarity::N;
    double vth0 = 0.4;          ///< V, negative for P
    double kprime = 1e-4;       ///< A/V^2, W/L absorbed
    double n_sub = 1.5;         ///< subthreshold slope factor
    double lambda = 0.1;        ///< 1/V
    double vt_thermal = 0.02585;

    /// Throws DomainError if an invariant is broken.
    void validate() const;
    bool operator==(const MosfetParams&) const = default;
};

/// Current and its partial derivatives w.r.t. the terminal voltages.
struct CurrentEval {
    double current = 0.0;
    double d_vg = 0.0;
    double d_vd = 0.0;
    double d_vs = 0.0;
};

/// Merz-type switching law tau(V) = tau0 * exp(v0 / |V|).
struct SwitchingKinetics {
    double tau0 = 1.0;
    double v0 = 1.0;
    double boundary_fraction = 0.5;

    void validate() const;
    /// Characteristic time at |voltage|; +inf at zero field.
    double tau(double voltage) const;
    bool operator==(const SwitchingKinetics&) const = default;
};

/// Maps a normalized channel position x in (0,1) (0 = source, 1 = drain) to the
/// weight of the drain potential in the local channel potential.
struct ChannelProfile {
    enum class Kind { Linear, Junction };
    Kind kind = Kind::Linear;
    /// Junction: fraction of the channel, measured from the drain, that follows
    /// the drain potential when source and drain differ.
    double reach = 0.5;
    /// Junction: logistic transition width in normalized channel units.
    double sharpness = 0.01;

    double drain_weight(double x) const;
    bool operator==(const ChannelProfile&) const = default;
};

struct FeFetState {
    std::vector<double> segments;

    static FeFetState uniform(double p, std::size_t segment_count = 8);
    static FeFetState lvt(std::size_t segment_count = 8) { return uniform(+1.0, segment_count); }
    static FeFetState hvt(std::size_t segment_count = 8) { return uniform(-1.0, segment_count); }

    std::size_t segment_count() const noexcept { return segments.size(); }
    double mean() const;
    void validate() const;
    bool operator==(const FeFetState&) const = default;
};

struct FeFetParams {
    MosfetParams base;
    double mw = 1.0;  ///< full memory window, V
    SwitchingKinetics kinetics;
    ChannelProfile profile;

    void validate() const;
    bool operator==(const FeFetParams&) const = default;
};

struct ProgramPulse {
    double vg = 0.0;
    double vs = 0.0;
    double vd = 0.0;
    double width = 0.0;
};

// --- MOSFET ---------------------------------------------------------------

double mosfet_current(const MosfetParams& params, double vg, double vd, double vs);
CurrentEval mosfet_eval(const MosfetParams& params, double vg, double vd, double vs);

/// Scales kprime so that mosfet_current(at_vgs, at_vds) hits target within 0.1%.
/// Voltages are signed device voltages (negative for a P device); source is at 0.
MosfetParams calibrate_drive(double target_current, double at_vgs, double at_vds,
                             const MosfetParams& params_template, double kprime_max = 10.0);

// --- FeFET ----------------------------------------------------------------

double fefet_effective_vth(const FeFetState& state, const FeFetParams& params);
double fefet_current(const FeFetState& state, const FeFetParams& params, double vg, double vd, double vs);
CurrentEval fefet_eval(const FeFetState& state, const FeFetParams& params, double vg, double vd, double vs);

/// Local ferroelectric voltage at every segment for the given terminal biases.
std::vector<double> fe_voltages(const FeFetParams& params, std::size_t segment_count, double vg, double vd,
                                double vs);

FeFetState step_polarization(const FeFetState& state, const FeFetParams& params, double vg, double vd, double vs,
                             double dt);

/// Domain-resolved variant for Monte Carlo: each segment holds `domains` binary
/// domains, each switching independently with probability 1 - exp(-dt/tau).
FeFetState step_polarization_stochastic(const FeFetState& state, const FeFetParams& params, double vg, double vd,
                                        double vs, double dt, int domains, std::mt19937_64& rng);

FeFetState apply_program_pulse(const FeFetState& state, const FeFetParams& params, const ProgramPulse& pulse);

/// Pulse width that brings a saturated single segment to the boundary fraction.
double switching_boundary_width(const SwitchingKinetics& kinetics, double amplitude);

struct KineticsAnchor {
    double amplitude;  ///< V
    double width;      ///< s
};

SwitchingKinetics calibrate_kinetics(KineticsAnchor first, KineticsAnchor second);

// --- Id-Vg measurement ------------------------------------------------------

struct CurvePoint {
    double x;
    double y;
};

/// Sampled curve; for Id-Vg data x = gate voltage, y = |drain current|.
struct Curve {
    std::string label;
    std::vector<CurvePoint> points;

    bool empty() const noexcept { return points.empty(); }
    std::size_t size() const noexcept { return points.size(); }
};

struct SweepProtocol {
    std::optional<ProgramPulse> reset;  ///< applied first (e.g. +4 V gate for p-FeFET -> HVT)
    std::optional<ProgramPulse> set;    ///< applied after reset (e.g. -4.5 V gate -> LVT)
    double wait = 2.0;                  ///< de-trap wait, s (no-op)
    double vg_start = 1.0;
    double vg_stop = -1.5;
    double vg_step = -0.05;
    double vs = 0.8;
    double vd = 0.75;
    double dwell = 1e-3;  ///< time spent at every sweep point, s

    void validate() const;

    /// Reverse sweep protocol for a p-FeFET. `to_lvt` adds the set pulse.
    static SweepProtocol p_fefet(bool to_lvt);
    /// Forward sweep protocol for an n-FeFET.
    static SweepProtocol n_fefet(bool to_lvt);
    /// Plain sweep with no programming pulses.
    static SweepProtocol plain(double start, double stop, double step, double vs, double vd, double dwell = 0.0);
};

struct SweepResult {
    Curve curve;
    FeFetState final_state;
};

SweepResult idvg_sweep(const FeFetParams& params, const FeFetState& initial_state, const SweepProtocol& protocol);
Curve idvg_sweep(const MosfetParams& params, const SweepProtocol& protocol);

/// Gate-voltage separation of the two curves at i_crit.
double memory_window(const Curve& curve_lvt, const Curve& curve_hvt, double i_crit = 1e-7);

/// Gate voltage of the first crossing of `level` along the curve (linear interpolation).
std::optional<double> crossing(const Curve& curve, double level);

/// Named FeFET write scheme as terminal biases (p-FeFET orientation).
enum class WriteScheme { GateHvt, GateLvt, SourceDrainLvt, GateDrainHvt };

ProgramPulse scheme_pulse(WriteScheme scheme, double amplitude, double width);

}  // namespace fesram::device
