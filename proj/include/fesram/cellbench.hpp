#pragma once

// 6T SRAM / 6T nvSRAM cells and their operation schedules.
//
// Node names: vdd, wl, bl, blb, q, qb. Device names: m1/m3 pull-down,
// m2/m4 pull-up (FeFETs in the nvSRAM), m5/m6 access.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fesram/circuit.hpp"
#include "fesram/config.hpp"
#include "fesram/device.hpp"
#include "fesram/engine.hpp"

namespace fesram::cellbench {

enum class Topology { Baseline6T, Nvsram6T };
enum class Logic { One, Zero, Invalid };

const char* to_string(Topology t);
const char* to_string(Logic l);

struct CellConfig {
    Topology topology = Topology::Nvsram6T;
    device::MosfetParams pd_params;  ///< M1, M3
    device::MosfetParams pg_params;  ///< M5, M6
    device::MosfetParams pu_params;  ///< baseline M2, M4
    device::FeFetParams fe_params;   ///< nvSRAM M2, M4
    std::size_t segments = 8;
    double c_bitline = 17e-15;
    double c_node = 0.1e-15;
    double vdd_nominal = 1.0;
    double vdd_program = 4.0;
    double t_program = 200e-9;
    double program_ramp = 100e-12;
    double program_dtmax = 100e-12;
    double logic_threshold = 0.8;
    double power_off_ramp = 1e-9;
    double power_off_hold = 10e-9;
    double restore_ramp = 1e-6;
    double two_phase_time = 10e-9;
    double read_threshold = 0.1;
    double read_wl_ramp = 10e-12;
    double read_window = 2e-9;
    double read_retry_window = 10e-9;
    double read_dtmax = 1e-12;
    double silicon_vdd_step = 0.1;
    engine::SolverConfig solver;
    /// Per-device threshold offsets for m1..m6 (Monte Carlo); empty = none.
    std::vector<double> vth_offsets;
    /// Memory-window scale of m2 and m4 (Monte Carlo).
    double mw_scale_m2 = 1.0;
    double mw_scale_m4 = 1.0;

    void validate() const;
    /// Device sizing and schedule parameters from the config (drives calibrated).
    static CellConfig from_config(const config::Config& cfg, Topology topology);
};

/// Solver tolerances from the [solver] section.
engine::SolverConfig solver_from_config(const config::Config& cfg);

/// Complementary latch voltages plus the FeFET states (empty for the baseline).
struct CellState {
    double q = 0.0;
    double qb = 0.0;
    double vdd = 0.0;  ///< supply the voltages were observed at
    device::FeFetState m2;
    device::FeFetState m4;

    Logic logic(double threshold = 0.8) const;
};

/// One bias point of the four cell terminals.
struct Bias {
    double vdd = 0.0;
    double wl = 0.0;
    double bl = 0.0;
    double blb = 0.0;
};

/// Piecewise-linear bias program: each phase ramps linearly from the previous
/// bias to `target` over `ramp`, then holds until `duration` has elapsed.
struct OperationSchedule {
    struct Phase {
        double duration = 0.0;
        double ramp = 0.0;
        Bias target;
        std::string label;
    };
    Bias initial;
    std::vector<Phase> phases;

    static constexpr double kMinRamp = 10e-12;

    /// Throws DomainError on a non-positive duration or a step without a ramp.
    void validate() const;
    double total_time() const;
    /// PWL waveform for one terminal: 0 = vdd, 1 = wl, 2 = bl, 3 = blb.
    engine::SourceWaveform waveform(int terminal) const;
    /// Start time of phase i.
    double phase_start(std::size_t i) const;
};

enum class BitlineMode {
    Driven,    ///< bl/blb tied to voltage sources
    Floating,  ///< bl/blb only see their capacitors (read)
    Sink,      ///< bl/blb floating with constant current sinks
};

engine::Circuit build_cell(const CellConfig& config, BitlineMode mode = BitlineMode::Driven, double i_sink = 0.0);

/// A freshly powered-down cell with the given FeFET states.
CellState blank_state(const CellConfig& config, const device::FeFetState& m2, const device::FeFetState& m4);
/// An nvSRAM cell latched to `bit` at vdd_nominal with matching polarization
/// (as left behind by a write), or a baseline cell latched to `bit`.
CellState latched_state(const CellConfig& config, int bit);

/// Runs a schedule from `start`; FeFET states in the result are advanced.
struct ScheduleRun {
    engine::Waveform waveform;
    CellState final_state;
};
ScheduleRun run_schedule(const CellConfig& config, const CellState& start, const OperationSchedule& schedule,
                         BitlineMode mode, double dtmax);

double max_abs_delta(const device::FeFetState& a, const device::FeFetState& b);

struct WriteReport {
    int data = 0;
    CellState before;
    CellState after;
    double m2_mean = 0.0;
    double m4_mean = 0.0;
    double max_delta_p = 0.0;  ///< largest per-segment change over M2/M4
    engine::Waveform waveform;
};

OperationSchedule write_schedule(const CellConfig& config, int data);
WriteReport run_write(const CellConfig& config, const CellState& cell, int data);

struct PowerOffReport {
    CellState before;
    CellState after;
    double max_node_voltage = 0.0;
    double max_delta_p = 0.0;
    bool nodes_collapsed = false;
    bool polarization_preserved = false;
    engine::Waveform waveform;
};

OperationSchedule power_off_schedule(const CellConfig& config, double vdd_from);
PowerOffReport run_power_off(const CellConfig& config, const CellState& cell);

struct RestoreReport {
    CellState after;
    Logic logic = Logic::Invalid;
    /// Logic encoded by the polarization (M4 more LVT than M2 => One); Invalid if equal.
    Logic expected = Logic::Invalid;
    bool correct = false;
    engine::Waveform waveform;
};

Logic polarization_logic(const CellState& cell);
RestoreReport run_restore_one_step(const CellConfig& config, const CellState& cell, double target_vdd,
                                   std::optional<double> ramp_time = std::nullopt);
RestoreReport run_restore_two_phase(const CellConfig& config, const CellState& cell, double target_vdd,
                                    std::optional<double> ramp_time = std::nullopt);

/// Smallest residual on the node that should end low (QB for a stored one) that
/// makes the one-step restore mis-latch, found by bisection over [0, hi];
/// nullopt when even `hi` restores correctly.
std::optional<double> find_mislatch_offset(const CellConfig& config, const CellState& cell, double ramp_time,
                                           double hi = 1.0, double tol = 1e-3);

struct RampPoint {
    double ramp = 0.0;
    Logic logic = Logic::Invalid;
    bool correct = false;
};
/// One-step restore at each ramp time, for charting the too-fast boundary.
std::vector<RampPoint> restore_ramp_sweep(const CellConfig& config, const CellState& cell, double target_vdd,
                                          const std::vector<double>& ramps);

struct ReadReport {
    double latency = 0.0;  ///< from WL at 50% to |BL-BLB| = threshold
    int value = 0;
    Logic logic_before = Logic::Invalid;
    Logic logic_after = Logic::Invalid;
    bool non_destructive = false;
    double max_delta_p = 0.0;
    CellState after;
    engine::Waveform waveform;
};

ReadReport run_read(const CellConfig& config, const CellState& cell);

struct HoldDisturbReport {
    double max_delta_p = 0.0;        ///< largest per-segment change
    double max_opposing = 0.0;       ///< largest change away from the segment's current sign
    double max_reinforcing = 0.0;    ///< largest change toward it
    double max_opposing_fraction = 0.0;  ///< opposing change as a fraction of the distance to the target
    CellState after;
};

/// Quasi-static hold at `vdd`: one polarization update with the DC terminal voltages.
HoldDisturbReport run_hold_disturb(const CellConfig& config, const CellState& cell, double duration,
                                   std::optional<double> vdd = std::nullopt);

struct StepRecord {
    int index = 0;
    double target = 0.0;
    int repetition = 0;
    std::string phase;  ///< ramp, hold, read, off
    double vdd = 0.0;
    double wl = 0.0;
    double q = 0.0;
    double qb = 0.0;
    double bl = 0.0;
    double blb = 0.0;
};

struct ProtocolRead {
    double target = 0.0;
    int repetition = 0;
    Logic latched = Logic::Invalid;  ///< from Q/QB at the hold step
    double bl = 0.0;
    double blb = 0.0;
    bool correct = false;
    bool weak = false;  ///< the sinks drag the high storage node below 80% of the target
};

struct StepTrace {
    std::vector<StepRecord> steps;
    std::vector<ProtocolRead> reads;
    int correct = 0;
    int total = 0;
};

StepTrace run_silicon_protocol(const CellConfig& config, const CellState& cell, const std::vector<double>& targets,
                               double i_bias, int repetitions = 2);

struct MonteCarloRun {
    int index = 0;
    std::uint64_t seed = 0;
    bool correct = false;
    Logic logic = Logic::Invalid;
};

struct MonteCarloReport {
    int runs = 0;
    int passed = 0;
    double yield = 0.0;
    std::vector<MonteCarloRun> details;
};

/// Write -> power-off -> one-step restore with per-transistor vth0 and per-FeFET
/// mw variation. Runs are fanned out over `threads` workers (0 = hardware).
MonteCarloReport monte_carlo_restore(const CellConfig& config, double sigma_vth, double sigma_mw_rel, int n_runs,
                                     std::uint64_t seed, int data = 1, unsigned threads = 0);

/// Per-run seed derived from the master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

}  // namespace fesram::cellbench
