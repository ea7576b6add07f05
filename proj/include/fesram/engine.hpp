#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fesram/circuit.hpp"

namespace fesram::engine {

enum class Integrator { BackwardEuler, Trapezoidal };

struct SolverConfig {
    double reltol = 1e-3;
    double vntol = 1e-6;
    double abstol = 1e-9;
    int max_newton_iters = 100;
    double gmin = 1e-12;
    double dtmax = 1e-12;
    double dt_shrink_factor = 2.0;
    int max_dt_retries = 20;
    /// Largest node-voltage update per Newton iteration.
    double max_newton_step = 0.5;
    Integrator integrator = Integrator::BackwardEuler;

    void validate() const;
};

/// MNA solution vector: node voltages followed by voltage-source branch currents.
struct Solution {
    std::vector<double> node_voltages;
    std::vector<double> branch_currents;
    double max_kcl_residual = 0.0;
    int newton_iterations = 0;
};

struct DcOptions {
    /// Solve once with the circuit's initial conditions held, then release them
    /// and re-solve from that point. When false the held solution is returned.
    bool release_initial_conditions = true;
    /// Scale factor applied to every independent source (source stepping).
    double source_scale = 1.0;
};

Solution dc_operating_point(Circuit& circuit, const SolverConfig& config,
                            const std::optional<Solution>& initial_guess = std::nullopt,
                            const DcOptions& options = {});

struct Waveform {
    std::vector<double> times;
    std::vector<std::string> node_names;
    std::vector<std::vector<double>> node_voltages;  ///< [node][sample]
    std::vector<std::string> branch_names;
    std::vector<std::vector<double>> branch_currents;  ///< [branch][sample]
    std::vector<std::string> fefet_names;
    std::vector<std::vector<double>> polarization;  ///< mean p per FeFET, [fefet][sample]

    std::size_t size() const noexcept { return times.size(); }
    const std::vector<double>& node(const std::string& name) const;
    double final_voltage(const std::string& name) const { return node(name).back(); }
    /// Linear interpolation of a node voltage at time t.
    double voltage_at(const std::string& name, double t) const;
};

/// Backward-Euler (or trapezoidal) transient from t = 0 to tstop. FeFET states
/// in `circuit` are advanced after every accepted step.
Waveform transient(Circuit& circuit, double tstop, const SolverConfig& config,
                   const std::optional<Solution>& initial = std::nullopt);

struct DcSweep {
    std::string source;
    std::vector<double> values;
    std::vector<Solution> points;

    /// (source value, node voltage) pairs.
    device::Curve node_curve(const Circuit& circuit, const std::string& node) const;
};

/// Sweeps the DC value of a voltage or current source with continuation.
DcSweep dc_sweep(Circuit& circuit, const std::string& source_name, double start, double stop, double step,
                 const SolverConfig& config, const std::optional<Solution>& initial_guess = std::nullopt);

/// Currents leaving each node for the given solution (DC, no capacitors).
std::vector<double> kcl_residual(const Circuit& circuit, const Solution& solution, double gmin);

}  // namespace fesram::engine
