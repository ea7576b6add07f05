#include "fesram/engine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fesram/error.hpp"

namespace fesram::engine {

void SolverConfig::validate() const {
    if (!(reltol > 0 && vntol > 0 && abstol > 0 && max_newton_iters > 0 && gmin >= 0 && dtmax > 0 &&
          dt_shrink_factor > 1 && max_dt_retries > 0 && max_newton_step > 0)) {
        throw SolverError(SolverError::Kind::BadInput, "solver configuration values must be positive");
    }
}

namespace {

// Row-major dense matrix with in-place LU (partial pivoting).
class DenseSystem {
public:
    explicit DenseSystem(int n) : n_(n), a_(static_cast<std::size_t>(n * n), 0.0), b_(static_cast<std::size_t>(n), 0.0) {}

    void clear() {
        std::fill(a_.begin(), a_.end(), 0.0);
        std::fill(b_.begin(), b_.end(), 0.0);
    }
    double& at(int r, int c) { return a_[static_cast<std::size_t>(r * n_ + c)]; }
    double& rhs(int r) { return b_[static_cast<std::size_t>(r)]; }
    double rhs(int r) const { return b_[static_cast<std::size_t>(r)]; }
    int size() const { return n_; }

    /// Solves A x = b in place (b becomes x). Throws on a zero pivot.
    void solve() {
        for (int k = 0; k < n_; ++k) {
            int piv = k;
            double best = std::abs(at(k, k));
            for (int r = k + 1; r < n_; ++r) {
                if (std::abs(at(r, k)) > best) {
                    best = std::abs(at(r, k));
                    piv = r;
                }
            }
            if (!(best > 1e-30)) {
                throw SolverError(SolverError::Kind::Singular,
                                  "singular MNA matrix at unknown " + std::to_string(k) + " (floating node?)");
            }
            if (piv != k) {
                for (int c = 0; c < n_; ++c) std::swap(at(k, c), at(piv, c));
                std::swap(rhs(k), rhs(piv));
            }
            const double inv = 1.0 / at(k, k);
            for (int r = k + 1; r < n_; ++r) {
                const double f = at(r, k) * inv;
                if (f == 0.0) continue;
                for (int c = k; c < n_; ++c) at(r, c) -= f * at(k, c);
                rhs(r) -= f * rhs(k);
            }
        }
        for (int r = n_ - 1; r >= 0; --r) {
            double s = rhs(r);
            for (int c = r + 1; c < n_; ++c) s -= at(r, c) * rhs(c);
            rhs(r) = s / at(r, r);
        }
    }

private:
    int n_;
    std::vector<double> a_;
    std::vector<double> b_;
};

enum class Mode { Dc, Transient };

struct StampContext {
    Mode mode = Mode::Dc;
    double time = 0.0;
    double dt = 0.0;
    Integrator integrator = Integrator::BackwardEuler;
    double gmin = 0.0;
    double source_scale = 1.0;
    const std::vector<double>* prev_x = nullptr;         // previous accepted solution
    const std::vector<double>* prev_cap_current = nullptr;  // per capacitor (trapezoidal)
    const std::map<NodeId, double>* forced = nullptr;    // node -> held voltage
};

constexpr double kForceConductance = 1.0;

double volt(const std::vector<double>& x, NodeId n) { return n == kGround ? 0.0 : x[static_cast<std::size_t>(n)]; }

// Residual f(x) = currents leaving each node, plus voltage-source constraint rows.
class Assembler {
public:
    Assembler(const Circuit& circuit, DenseSystem& sys) : circuit_(circuit), sys_(sys) {}

    void assemble(const std::vector<double>& x, const StampContext& ctx) {
        sys_.clear();
        const int nodes = circuit_.node_count();
        std::size_t cap_index = 0;
        for (const auto& dev : circuit_.devices()) {
            std::visit([&](const auto& d) { stamp(d, x, ctx, cap_index); }, dev);
        }
        for (int i = 0; i < nodes; ++i) {
            sys_.at(i, i) += ctx.gmin;
            sys_.rhs(i) += ctx.gmin * x[static_cast<std::size_t>(i)];
        }
        if (ctx.forced) {
            for (const auto& [n, v] : *ctx.forced) {
                sys_.at(n, n) += kForceConductance;
                sys_.rhs(n) += kForceConductance * (x[static_cast<std::size_t>(n)] - v);
            }
        }
    }

private:
    void add_f(NodeId n, double i) {
        if (n != kGround) sys_.rhs(n) += i;
    }
    void add_j(NodeId r, NodeId c, double g) {
        if (r != kGround && c != kGround) sys_.at(r, c) += g;
    }
    void conductance(NodeId a, NodeId b, double g, double i) {
        add_f(a, i);
        add_f(b, -i);
        add_j(a, a, g);
        add_j(b, b, g);
        add_j(a, b, -g);
        add_j(b, a, -g);
    }

    void stamp(const Resistor& r, const std::vector<double>& x, const StampContext&, std::size_t&) {
        const double g = 1.0 / r.resistance;
        conductance(r.a, r.b, g, g * (volt(x, r.a) - volt(x, r.b)));
    }

    void stamp(const Capacitor& c, const std::vector<double>& x, const StampContext& ctx, std::size_t& cap_index) {
        const std::size_t idx = cap_index++;
        if (ctx.mode == Mode::Dc) return;
        const double v = volt(x, c.a) - volt(x, c.b);
        const double v_prev = volt(*ctx.prev_x, c.a) - volt(*ctx.prev_x, c.b);
        double g = 0.0;
        double i = 0.0;
        if (ctx.integrator == Integrator::Trapezoidal) {
            g = 2.0 * c.capacitance / ctx.dt;
            i = g * (v - v_prev) - (*ctx.prev_cap_current)[idx];
        } else {
            g = c.capacitance / ctx.dt;
            i = g * (v - v_prev);
        }
        conductance(c.a, c.b, g, i);
    }

    void stamp(const VoltageSource& v, const std::vector<double>& x, const StampContext& ctx, std::size_t&) {
        const int row = circuit_.node_count() + v.branch;
        const double ib = x[static_cast<std::size_t>(row)];
        add_f(v.pos, ib);
        add_f(v.neg, -ib);
        if (v.pos != kGround) {
            sys_.at(v.pos, row) += 1.0;
            sys_.at(row, v.pos) += 1.0;
        }
        if (v.neg != kGround) {
            sys_.at(v.neg, row) -= 1.0;
            sys_.at(row, v.neg) -= 1.0;
        }
        sys_.rhs(row) += volt(x, v.pos) - volt(x, v.neg) - ctx.source_scale * v.wave.value(ctx.time);
    }

    void stamp(const CurrentSource& s, const std::vector<double>&, const StampContext& ctx, std::size_t&) {
        const double i = ctx.source_scale * s.wave.value(ctx.time);
        add_f(s.pos, i);
        add_f(s.neg, -i);
    }

    void transistor(NodeId g, NodeId d, NodeId s, device::Polarity pol, const device::CurrentEval& e) {
        // N: current leaves the drain; P: current leaves the source.
        const NodeId out = pol == device::Polarity::N ? d : s;
        const NodeId in = pol == device::Polarity::N ? s : d;
        add_f(out, e.current);
        add_f(in, -e.current);
        for (auto [col, deriv] : {std::pair{g, e.d_vg}, std::pair{d, e.d_vd}, std::pair{s, e.d_vs}}) {
            add_j(out, col, deriv);
            add_j(in, col, -deriv);
        }
    }

    void stamp(const Mosfet& m, const std::vector<double>& x, const StampContext&, std::size_t&) {
        const auto e = device::mosfet_eval(m.params, volt(x, m.gate), volt(x, m.drain), volt(x, m.source));
        transistor(m.gate, m.drain, m.source, m.params.polarity, e);
    }

    void stamp(const Fefet& f, const std::vector<double>& x, const StampContext&, std::size_t&) {
        const auto e = device::fefet_eval(f.state, f.params, volt(x, f.gate), volt(x, f.drain), volt(x, f.source));
        transistor(f.gate, f.drain, f.source, f.params.base.polarity, e);
    }

    const Circuit& circuit_;
    DenseSystem& sys_;
};

struct NewtonOutcome {
    bool converged = false;
    std::vector<double> x;
    double residual = 0.0;
    int iterations = 0;
};

NewtonOutcome newton(const Circuit& circuit, const StampContext& ctx, std::vector<double> x, const SolverConfig& cfg) {
    const int n = circuit.unknown_count();
    const int nodes = circuit.node_count();
    DenseSystem sys(n);
    Assembler assembler(circuit, sys);
    std::vector<double> delta(static_cast<std::size_t>(n), 0.0);
    bool have_delta = false;

    for (int iter = 0; iter <= cfg.max_newton_iters; ++iter) {
        assembler.assemble(x, ctx);
        double kcl = 0.0;
        double constraint = 0.0;
        for (int i = 0; i < nodes; ++i) kcl = std::max(kcl, std::abs(sys.rhs(i)));
        for (int i = nodes; i < n; ++i) constraint = std::max(constraint, std::abs(sys.rhs(i)));
        if (!std::isfinite(kcl) || !std::isfinite(constraint)) return {false, x, kcl, iter};

        if (have_delta && kcl < cfg.abstol && constraint < cfg.vntol) {
            bool small = true;
            for (int i = 0; i < n && small; ++i) {
                const double xi = std::abs(x[static_cast<std::size_t>(i)]);
                const double tol = i < nodes ? cfg.vntol + cfg.reltol * xi : cfg.abstol + cfg.reltol * xi;
                small = std::abs(delta[static_cast<std::size_t>(i)]) <= tol;
            }
            if (small) return {true, x, kcl, iter};
        }
        if (iter == cfg.max_newton_iters) break;

        for (int i = 0; i < n; ++i) sys.rhs(i) = -sys.rhs(i);
        sys.solve();
        for (int i = 0; i < n; ++i) {
            double d = sys.rhs(i);
            if (i < nodes) d = std::clamp(d, -cfg.max_newton_step, cfg.max_newton_step);
            delta[static_cast<std::size_t>(i)] = d;
            x[static_cast<std::size_t>(i)] += d;
        }
        have_delta = true;
    }
    return {false, x, 0.0, cfg.max_newton_iters};
}

std::vector<double> pack(const Circuit& c, const std::optional<Solution>& s) {
    std::vector<double> x(static_cast<std::size_t>(c.unknown_count()), 0.0);
    if (!s) return x;
    for (std::size_t i = 0; i < s->node_voltages.size() && i < static_cast<std::size_t>(c.node_count()); ++i) {
        x[i] = s->node_voltages[i];
    }
    for (std::size_t i = 0; i < s->branch_currents.size() && i < static_cast<std::size_t>(c.vsource_count()); ++i) {
        x[static_cast<std::size_t>(c.node_count()) + i] = s->branch_currents[i];
    }
    return x;
}

Solution unpack(const Circuit& c, const NewtonOutcome& o) {
    Solution s;
    s.node_voltages.assign(o.x.begin(), o.x.begin() + c.node_count());
    s.branch_currents.assign(o.x.begin() + c.node_count(), o.x.end());
    s.max_kcl_residual = o.residual;
    s.newton_iterations = o.iterations;
    return s;
}

std::map<NodeId, double> forced_nodes(const Circuit& c) {
    std::map<NodeId, double> out;
    for (const auto& [name, v] : c.initial_conditions) {
        const NodeId id = c.node(name);
        if (id != kGround) out[id] = v;
    }
    return out;
}

// Plain Newton, then gmin stepping, then source stepping.
Solution solve_dc(const Circuit& circuit, const SolverConfig& cfg, std::vector<double> x0,
                  const std::map<NodeId, double>* forced, double source_scale) {
    StampContext ctx;
    ctx.gmin = cfg.gmin;
    ctx.forced = forced;
    ctx.source_scale = source_scale;

    auto first = newton(circuit, ctx, x0, cfg);
    if (first.converged) return unpack(circuit, first);

    std::vector<double> x = x0;
    bool ok = true;
    for (double g = std::max(cfg.gmin, 1e-12) * 1e6; ok; g /= 10.0) {
        StampContext step = ctx;
        step.gmin = std::max(g, cfg.gmin);
        auto r = newton(circuit, step, x, cfg);
        ok = r.converged;
        if (ok) x = r.x;
        if (step.gmin <= cfg.gmin) {
            if (ok) return unpack(circuit, r);
            break;
        }
    }

    x = x0;
    for (int k = 1; k <= 10; ++k) {
        StampContext step = ctx;
        step.source_scale = source_scale * k / 10.0;
        auto r = newton(circuit, step, x, cfg);
        if (!r.converged) {
            throw SolverError(SolverError::Kind::NonConvergence,
                              "DC operating point did not converge (plain, gmin and source stepping failed)");
        }
        x = r.x;
        if (k == 10) return unpack(circuit, r);
    }
    throw SolverError(SolverError::Kind::NonConvergence, "DC operating point did not converge");
}

}  // namespace

std::vector<double> kcl_residual(const Circuit& circuit, const Solution& solution, double gmin) {
    DenseSystem sys(circuit.unknown_count());
    Assembler assembler(circuit, sys);
    StampContext ctx;
    ctx.gmin = gmin;
    assembler.assemble(pack(circuit, solution), ctx);
    std::vector<double> out(static_cast<std::size_t>(circuit.node_count()));
    for (int i = 0; i < circuit.node_count(); ++i) out[static_cast<std::size_t>(i)] = sys.rhs(i);
    return out;
}

Solution dc_operating_point(Circuit& circuit, const SolverConfig& config, const std::optional<Solution>& initial_guess,
                            const DcOptions& options) {
    config.validate();
    circuit.validate();
    auto x0 = pack(circuit, initial_guess);
    const auto forced = forced_nodes(circuit);
    if (forced.empty()) return solve_dc(circuit, config, x0, nullptr, options.source_scale);

    for (const auto& [n, v] : forced) x0[static_cast<std::size_t>(n)] = v;
    Solution held = solve_dc(circuit, config, x0, &forced, options.source_scale);
    if (!options.release_initial_conditions) return held;
    return solve_dc(circuit, config, pack(circuit, held), nullptr, options.source_scale);
}

const std::vector<double>& Waveform::node(const std::string& name) const {
    for (std::size_t i = 0; i < node_names.size(); ++i) {
        if (node_names[i] == name) return node_voltages[i];
    }
    throw Error("waveform has no node '" + name + "'");
}

double Waveform::voltage_at(const std::string& name, double t) const {
    const auto& v = node(name);
    if (t <= times.front()) return v.front();
    if (t >= times.back()) return v.back();
    auto hi = std::upper_bound(times.begin(), times.end(), t);
    const auto k = static_cast<std::size_t>(hi - times.begin());
    const double f = (t - times[k - 1]) / (times[k] - times[k - 1]);
    return v[k - 1] + f * (v[k] - v[k - 1]);
}

namespace {

void record(Waveform& w, const Circuit& c, double t, const std::vector<double>& x) {
    w.times.push_back(t);
    for (int i = 0; i < c.node_count(); ++i) w.node_voltages[static_cast<std::size_t>(i)].push_back(x[static_cast<std::size_t>(i)]);
    for (int i = 0; i < c.vsource_count(); ++i) {
        w.branch_currents[static_cast<std::size_t>(i)].push_back(x[static_cast<std::size_t>(c.node_count() + i)]);
    }
    std::size_t k = 0;
    for (const auto& d : c.devices()) {
        if (const auto* f = std::get_if<Fefet>(&d)) w.polarization[k++].push_back(f->state.mean());
    }
}

std::vector<double> all_breakpoints(const Circuit& c, double tstop) {
    std::vector<double> bps;
    for (const auto& d : c.devices()) {
        if (const auto* v = std::get_if<VoltageSource>(&d)) {
            auto b = v->wave.breakpoints(tstop);
            bps.insert(bps.end(), b.begin(), b.end());
        } else if (const auto* i = std::get_if<CurrentSource>(&d)) {
            auto b = i->wave.breakpoints(tstop);
            bps.insert(bps.end(), b.begin(), b.end());
        }
    }
    bps.push_back(tstop);
    std::sort(bps.begin(), bps.end());
    bps.erase(std::unique(bps.begin(), bps.end()), bps.end());
    return bps;
}

}  // namespace

Waveform transient(Circuit& circuit, double tstop, const SolverConfig& config, const std::optional<Solution>& initial) {
    config.validate();
    circuit.validate();
    if (!(tstop >= 0.0)) throw SolverError(SolverError::Kind::BadInput, "tstop must be >= 0");

    Solution start = initial ? *initial
                             : dc_operating_point(circuit, config, std::nullopt,
                                                  DcOptions{.release_initial_conditions = false});
    std::vector<double> x = pack(circuit, start);
    for (const auto& [n, v] : forced_nodes(circuit)) x[static_cast<std::size_t>(n)] = v;

    Waveform w;
    w.node_names = circuit.node_names();
    w.node_voltages.resize(static_cast<std::size_t>(circuit.node_count()));
    w.branch_names = circuit.vsource_names();
    w.branch_currents.resize(static_cast<std::size_t>(circuit.vsource_count()));
    w.fefet_names = circuit.fefet_names();
    w.polarization.resize(w.fefet_names.size());
    record(w, circuit, 0.0, x);
    if (tstop == 0.0) return w;

    std::size_t cap_count = 0;
    for (const auto& d : circuit.devices()) cap_count += std::holds_alternative<Capacitor>(d) ? 1 : 0;
    std::vector<double> cap_current(cap_count, 0.0);

    const auto bps = all_breakpoints(circuit, tstop);
    std::size_t next_bp = 0;
    double t = 0.0;
    double dt_next = config.dtmax;
    const double t_eps = 1e-9 * config.dtmax;

    while (t < tstop - t_eps) {
        while (next_bp < bps.size() && bps[next_bp] <= t + t_eps) ++next_bp;
        const double bp = next_bp < bps.size() ? bps[next_bp] : tstop;
        double dt = std::min(dt_next, config.dtmax);
        if (t + dt > bp - t_eps) dt = bp - t;

        NewtonOutcome out;
        for (int retry = 0;; ++retry) {
            StampContext ctx;
            ctx.mode = Mode::Transient;
            ctx.time = t + dt;
            ctx.dt = dt;
            ctx.integrator = config.integrator;
            ctx.gmin = config.gmin;
            ctx.prev_x = &x;
            ctx.prev_cap_current = &cap_current;
            out = newton(circuit, ctx, x, config);
            if (out.converged) break;
            if (retry >= config.max_dt_retries) {
                std::ostringstream msg;
                msg << "timestep underflow at t = " << t << " s (dt = " << dt << " s)";
                throw SolverError(SolverError::Kind::TimestepUnderflow, msg.str());
            }
            dt /= config.dt_shrink_factor;
        }

        // Capacitor currents for the trapezoidal history.
        std::size_t ci = 0;
        for (const auto& d : circuit.devices()) {
            if (const auto* c = std::get_if<Capacitor>(&d)) {
                const double v = volt(out.x, c->a) - volt(out.x, c->b);
                const double vp = volt(x, c->a) - volt(x, c->b);
                if (config.integrator == Integrator::Trapezoidal) {
                    cap_current[ci] = 2.0 * c->capacitance / dt * (v - vp) - cap_current[ci];
                } else {
                    cap_current[ci] = c->capacitance / dt * (v - vp);
                }
                ++ci;
            }
        }

        // Operator splitting: polarization advances with the accepted terminal voltages.
        for (auto& d : circuit.devices()) {
            if (auto* f = std::get_if<Fefet>(&d)) {
                f->state = device::step_polarization(f->state, f->params, volt(out.x, f->gate), volt(out.x, f->drain),
                                                     volt(out.x, f->source), dt);
            }
        }

        x = std::move(out.x);
        t += dt;
        if (std::abs(t - bp) <= t_eps) t = bp;
        record(w, circuit, t, x);
        dt_next = std::min(config.dtmax, dt * config.dt_shrink_factor);
    }
    return w;
}

device::Curve DcSweep::node_curve(const Circuit& circuit, const std::string& node) const {
    device::Curve c;
    c.label = node;
    const NodeId id = circuit.node(node);
    for (std::size_t i = 0; i < values.size(); ++i) {
        c.points.push_back({values[i], id == kGround ? 0.0 : points[i].node_voltages[static_cast<std::size_t>(id)]});
    }
    return c;
}

DcSweep dc_sweep(Circuit& circuit, const std::string& source_name, double start, double stop, double step,
                 const SolverConfig& config, const std::optional<Solution>& initial_guess) {
    if (step == 0.0) throw SolverError(SolverError::Kind::BadInput, "dc sweep step must be nonzero");
    if ((stop - start) * step < 0.0) {
        throw SolverError(SolverError::Kind::BadInput, "dc sweep step sign inconsistent with start/stop");
    }

    SourceWaveform* wave = nullptr;
    for (auto& d : circuit.devices()) {
        if (auto* v = std::get_if<VoltageSource>(&d); v && v->name == source_name) wave = &v->wave;
        if (auto* i = std::get_if<CurrentSource>(&d); i && i->name == source_name) wave = &i->wave;
    }
    if (!wave) throw SolverError(SolverError::Kind::BadInput, "dc sweep: no source named '" + source_name + "'");

    const SourceWaveform saved = *wave;
    const auto saved_ic = circuit.initial_conditions;
    DcSweep out;
    out.source = source_name;
    const auto count = static_cast<long>(std::floor((stop - start) / step + 1e-9));
    std::optional<Solution> guess = initial_guess;
    try {
        for (long k = 0; k <= count; ++k) {
            const double value = start + static_cast<double>(k) * step;
            *wave = SourceWaveform::constant(value);
            try {
                guess = dc_operating_point(circuit, config, guess, DcOptions{.release_initial_conditions = true});
            } catch (const SolverError& e) {
                std::ostringstream msg;
                msg << e.what() << " (sweep " << source_name << " = " << value << ")";
                throw SolverError(e.kind(), msg.str());
            }
            out.values.push_back(value);
            out.points.push_back(*guess);
            // Initial conditions only seed the first point; later points continue.
            circuit.initial_conditions.clear();
        }
    } catch (...) {
        *wave = saved;
        circuit.initial_conditions = saved_ic;
        throw;
    }
    *wave = saved;
    circuit.initial_conditions = saved_ic;
    return out;
}

}  // namespace fesram::engine
