#pragma once

// Metric extraction over curves and waveforms, plus figure-ready tables.

#include <string>
#include <vector>

#include "fesram/cellbench.hpp"
#include "fesram/device.hpp"
#include "fesram/engine.hpp"

namespace fesram::analysis {

/// Column-named numeric table, the unit of CSV output.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    void add(std::vector<double> row);
};

// --- read latency -------------------------------------------------------------

struct LatencyReport {
    double latency = 0.0;
    double threshold = 0.0;
    double t_wordline = 0.0;  ///< WL 50% crossing
    double t_crossing = 0.0;  ///< |BL-BLB| reaches threshold
    int value = 0;            ///< 1 if BL > BLB at the crossing
};

/// First crossing of |BL-BLB| >= threshold after WL crosses wl_level / 2.
LatencyReport read_latency(const engine::Waveform& waveform, double threshold, double wl_level);

// --- butterfly / SNM ----------------------------------------------------------

enum class SnmMode { Hold, Read, Write };
const char* to_string(SnmMode m);

struct StablePoint {
    double q = 0.0;
    double qb = 0.0;
    double loop_gain = 0.0;  ///< |f'(q) * g'(qb)| at the intersection
    bool stable = false;
};

struct ButterflyResult {
    /// Inverter driving QB: (Q, QB) pairs, x = Q input.
    device::Curve vtc_forward;
    /// Inverter driving Q, mirrored into the same axes: (Q, QB) pairs, y = QB input.
    device::Curve vtc_mirrored;
    double snm = 0.0;               ///< smaller of the two lobes (0 when a lobe is missing)
    std::vector<double> lobe_snm;   ///< per lobe, ordered by rotated coordinate
    std::vector<StablePoint> points;
    int stable_count = 0;
    bool monostable = false;
    bool comparative_only = false;  ///< WSNM on an nvSRAM: not an operating condition
};

/// SNM of two transfer curves in the same (x, y) plane: `a` as y = f(x),
/// `b` as x = g(y) stored as (x, y) points. Returns one value per lobe.
std::vector<double> lobe_snm(const device::Curve& a, const device::Curve& b);

/// Intersections of y = f(x) (`a`) and x = g(y) (`b`) with their loop gains.
std::vector<StablePoint> intersections(const device::Curve& a, const device::Curve& b);

ButterflyResult butterfly(const cellbench::CellConfig& config, const cellbench::CellState& cell, SnmMode mode,
                          double step = 5e-3);

// --- kinetics -----------------------------------------------------------------

struct HalidPoint {
    double amplitude = 0.0;
    double width = 0.0;
    bool clamped = false;
};

std::vector<HalidPoint> emit_halid(const device::SwitchingKinetics& kinetics, const std::vector<double>& amplitudes,
                                   double clamp = 1e12);

/// Switched fraction 1 - exp(-horizon / tau(|bias|)).
double disturb_projection(const device::SwitchingKinetics& kinetics, double bias, double horizon);

// --- tabular emitters ----------------------------------------------------------

/// Full-gate vs gate-drain HVT Id-Vg curves against the LVT reference.
struct SchemeWindows {
    device::Curve lvt;
    device::Curve hvt_gate;
    device::Curve hvt_gate_drain;
    double mw_gate = 0.0;
    double mw_gate_drain = 0.0;
    Table table() const;
};
SchemeWindows scheme_windows(const device::FeFetParams& params, double i_crit, double amplitude = 4.0, double width = 1e-3);

/// Id-Vg of M2 and M4 through write 0 -> write 1 (the threshold swap).
struct WriteSequence {
    std::vector<std::string> labels;
    std::vector<device::Curve> curves;
    Table table() const;
};
WriteSequence write_sequence(const cellbench::CellConfig& config);

Table butterfly_table(const ButterflyResult& result);
Table protocol_table(const cellbench::StepTrace& trace);
Table halid_table(const std::vector<HalidPoint>& points);
Table waveform_table(const engine::Waveform& waveform);
Table curve_table(const device::Curve& curve, const std::string& x, const std::string& y);

}  // namespace fesram::analysis
