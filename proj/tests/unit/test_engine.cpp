#include <doctest.h>

#include <cmath>

#include "fesram/engine.hpp"
#include "fesram/error.hpp"

using namespace fesram;
using namespace fesram::engine;

namespace {

Circuit divider(double v) {
    Circuit c;
    auto in = c.add_node("in");
    auto mid = c.add_node("mid");
    c.add(VoltageSource{"vin", in, kGround, SourceWaveform::constant(v)});
    c.add(Resistor{"r1", in, mid, 1e3});
    c.add(Resistor{"r2", mid, kGround, 1e3});
    return c;
}

Circuit rc(double r, double cap) {
    Circuit c;
    auto in = c.add_node("in");
    auto out = c.add_node("out");
    c.add(VoltageSource{"vin", in, kGround, SourceWaveform::piecewise({{0.0, 0.0}, {1e-15, 1.0}})});
    c.add(Resistor{"r1", in, out, r});
    c.add(Capacitor{"c1", out, kGround, cap});
    return c;
}

double rc_max_error(double dt, Integrator integrator) {
    Circuit c = rc(1e3, 1e-12);
    SolverConfig cfg;
    cfg.dtmax = dt;
    cfg.integrator = integrator;
    const double tau = 1e-9;
    auto w = transient(c, 5 * tau, cfg);
    double err = 0.0;
    const auto& v = w.node("out");
    for (std::size_t k = 0; k < w.size(); ++k) {
        if (w.times[k] < 2e-15) continue;
        err = std::max(err, std::abs(v[k] - (1.0 - std::exp(-w.times[k] / tau))));
    }
    return err;
}

double rc_final_error(double dt) {
    Circuit c = rc(1e3, 1e-12);
    SolverConfig cfg;
    cfg.dtmax = dt;
    auto w = transient(c, 1e-9, cfg);
    return std::abs(w.final_voltage("out") - (1.0 - std::exp(-1.0)));
}

Circuit inverter() {
    Circuit c;
    auto vdd = c.add_node("vdd");
    auto in = c.add_node("in");
    auto out = c.add_node("out");
    c.add(VoltageSource{"vdd", vdd, kGround, SourceWaveform::constant(1.0)});
    c.add(VoltageSource{"vin", in, kGround, SourceWaveform::constant(0.0)});
    device::MosfetParams n;
    device::MosfetParams p;
    p.polarity = device::Polarity::P;
    p.vth0 = -0.4;
    c.add(Mosfet{"mn", in, out, kGround, n});
    c.add(Mosfet{"mp", in, out, vdd, p});
    return c;
}

}  // namespace

TEST_SUITE("engine") {

TEST_CASE("voltage divider is exact") {
    Circuit c = divider(1.0);
    auto s = dc_operating_point(c, SolverConfig{});
    CHECK(std::abs(s.node_voltages[c.node("mid")] - 0.5) < 1e-6);
    CHECK(s.max_kcl_residual < 1e-9);
    // 1 V over 2 kOhm, current enters the + terminal from outside: -0.5 mA
    CHECK(s.branch_currents[0] == doctest::Approx(-0.5e-3).epsilon(1e-9));
}

TEST_CASE("node tied only to a capacitor resolves to zero through gmin") {
    Circuit c;
    auto a = c.add_node("a");
    auto f = c.add_node("float");
    c.add(VoltageSource{"v1", a, kGround, SourceWaveform::constant(1.0)});
    c.add(Capacitor{"c1", f, kGround, 1e-15});
    auto s = dc_operating_point(c, SolverConfig{});
    CHECK(std::abs(s.node_voltages[f]) < 1e-12);
}

TEST_CASE("voltage source loop is singular") {
    Circuit c;
    auto a = c.add_node("a");
    c.add(VoltageSource{"v1", a, kGround, SourceWaveform::constant(1.0)});
    c.add(VoltageSource{"v2", a, kGround, SourceWaveform::constant(2.0)});
    CHECK_THROWS_AS(dc_operating_point(c, SolverConfig{}), SolverError);
}

TEST_CASE("RC charging matches the exponential") {
    // Backward Euler carries a global error near (dt/2tau)/e, about 0.18% at tau/100.
    const double be = rc_max_error(1e-11, Integrator::BackwardEuler);
    CHECK(be < 2e-3);
    CHECK(rc_max_error(5e-12, Integrator::BackwardEuler) < 1e-3);
    CHECK(rc_max_error(1e-11, Integrator::Trapezoidal) < 1e-3);
}

TEST_CASE("backward Euler converges at first order") {
    const double e1 = rc_final_error(2e-11);
    const double e2 = rc_final_error(1e-11);
    const double ratio = e1 / e2;
    CHECK(ratio > 1.5);
    CHECK(ratio < 2.5);
}

TEST_CASE("RC discharge energy decreases") {
    Circuit c;
    auto out = c.add_node("out");
    c.add(Resistor{"r1", out, kGround, 1e3});
    c.add(Capacitor{"c1", out, kGround, 1e-12});
    c.initial_conditions["out"] = 1.0;
    SolverConfig cfg;
    cfg.dtmax = 1e-11;
    auto w = transient(c, 3e-9, cfg);
    const auto& v = w.node("out");
    CHECK(v.front() == doctest::Approx(1.0));
    for (std::size_t k = 1; k < v.size(); ++k) CHECK(v[k] * v[k] <= v[k - 1] * v[k - 1]);
    CHECK(v.back() < 0.06);
}

TEST_CASE("tstop zero gives a single point") {
    Circuit c = divider(1.0);
    auto w = transient(c, 0.0, SolverConfig{});
    CHECK(w.size() == 1);
    CHECK(w.times[0] == 0.0);
}

TEST_CASE("waveform times strictly increase and lengths agree") {
    Circuit c = rc(1e3, 1e-12);
    SolverConfig cfg;
    cfg.dtmax = 5e-11;
    auto w = transient(c, 1e-9, cfg);
    for (std::size_t k = 1; k < w.size(); ++k) CHECK(w.times[k] > w.times[k - 1]);
    for (const auto& v : w.node_voltages) CHECK(v.size() == w.size());
    for (const auto& b : w.branch_currents) CHECK(b.size() == w.size());
}

TEST_CASE("dc sweep over divider is a straight line") {
    Circuit c = divider(0.0);
    auto sw = dc_sweep(c, "vin", 0.0, 2.0, 0.1, SolverConfig{});
    auto curve = sw.node_curve(c, "mid");
    REQUIRE(curve.points.size() == 21);
    for (const auto& p : curve.points) CHECK(p.y == doctest::Approx(0.5 * p.x).epsilon(1e-6));
}

TEST_CASE("dc sweep rejects zero and backwards steps") {
    Circuit c = divider(0.0);
    CHECK_THROWS_AS(dc_sweep(c, "vin", 0.0, 1.0, 0.0, SolverConfig{}), SolverError);
    CHECK_THROWS_AS(dc_sweep(c, "vin", 0.0, 1.0, -0.1, SolverConfig{}), SolverError);
}

TEST_CASE("inverter VTC is monotone and warm-start independent") {
    Circuit c = inverter();
    SolverConfig cfg;
    auto fwd = dc_sweep(c, "vin", 0.0, 1.0, 0.01, cfg).node_curve(c, "out");
    auto bwd = dc_sweep(c, "vin", 1.0, 0.0, -0.01, cfg).node_curve(c, "out");
    REQUIRE(fwd.points.size() == bwd.points.size());
    const std::size_t n = fwd.points.size();
    for (std::size_t k = 1; k < n; ++k) CHECK(fwd.points[k].y <= fwd.points[k - 1].y + 1e-9);
    for (std::size_t k = 0; k < n; ++k) CHECK(std::abs(fwd.points[k].y - bwd.points[n - 1 - k].y) < 2e-6);
    CHECK(fwd.points.front().y > 0.99);
    CHECK(fwd.points.back().y < 0.01);
}

TEST_CASE("KCL residual holds at every transient point") {
    Circuit c = inverter();
    c.vsource("vin").wave = SourceWaveform::piecewise({{0.0, 0.0}, {1e-10, 1.0}});
    auto out = c.node("out");
    c.add(Capacitor{"cl", out, kGround, 1e-15});
    SolverConfig cfg;
    cfg.dtmax = 1e-12;
    CHECK_NOTHROW(transient(c, 3e-10, cfg));
}

}
