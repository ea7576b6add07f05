#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <variant>

#include "fesram/cellbench.hpp"
#include "fesram/config.hpp"
#include "fesram/error.hpp"

using namespace fesram;
using namespace fesram::cellbench;

namespace {

const CellConfig& nv_cfg() {
    static const CellConfig c = CellConfig::from_config(config::Config::defaults(), Topology::Nvsram6T);
    return c;
}

const CellConfig& base_cfg() {
    static const CellConfig c = CellConfig::from_config(config::Config::defaults(), Topology::Baseline6T);
    return c;
}

const CellState& stored(int bit) {
    static const CellState s0 = latched_state(nv_cfg(), 0);
    static const CellState s1 = latched_state(nv_cfg(), 1);
    return bit ? s1 : s0;
}

const engine::Mosfet* find_mos(const engine::Circuit& c, const std::string& name) {
    for (const auto& d : c.devices()) {
        if (const auto* m = std::get_if<engine::Mosfet>(&d); m && m->name == name) return m;
    }
    return nullptr;
}

const engine::Fefet* find_fe(const engine::Circuit& c, const std::string& name) {
    for (const auto& d : c.devices()) {
        if (const auto* f = std::get_if<engine::Fefet>(&d); f && f->name == name) return f;
    }
    return nullptr;
}

}  // namespace

TEST_SUITE("cellbench") {

TEST_CASE("topology") {
    const auto nv = build_cell(nv_cfg());
    int mos = 0, fe = 0;
    for (const auto& d : nv.devices()) {
        mos += std::holds_alternative<engine::Mosfet>(d);
        fe += std::holds_alternative<engine::Fefet>(d);
    }
    CHECK(mos + fe == 6);
    CHECK(fe == 2);

    const auto* m4 = find_fe(nv, "m4");
    const auto* m3 = find_mos(nv, "m3");
    REQUIRE(m4);
    REQUIRE(m3);
    CHECK(m4->gate == nv.node("qb"));
    CHECK(m3->drain == nv.node("qb"));
    CHECK(find_fe(nv, "m2")->gate == nv.node("q"));

    const auto base = build_cell(base_cfg());
    for (const auto& d : base.devices()) CHECK_FALSE(std::holds_alternative<engine::Fefet>(d));
}

TEST_CASE("config validation") {
    auto c = nv_cfg();
    c.c_bitline = 0.0;
    CHECK_THROWS_AS(c.validate(), DomainError);
    c = nv_cfg();
    c.vdd_program = c.vdd_nominal;
    CHECK_THROWS_AS(c.validate(), DomainError);
    c = nv_cfg();
    c.vth_offsets = {0.0, 0.0};
    CHECK_THROWS_AS(c.validate(), DomainError);
}

TEST_CASE("logic classification") {
    CHECK(CellState{1.0, 0.0, 1.0, {}, {}}.logic() == Logic::One);
    CHECK(CellState{0.0, 1.0, 1.0, {}, {}}.logic() == Logic::Zero);
    CHECK(CellState{0.6, 0.4, 1.0, {}, {}}.logic() == Logic::Invalid);
    CHECK(CellState{0.9, 0.05, 1.0, {}, {}}.logic() == Logic::One);
    CHECK(CellState{0.0, 0.0, 0.0, {}, {}}.logic() == Logic::Invalid);
}

TEST_CASE("schedules are continuous") {
    OperationSchedule s;
    s.phases.push_back({1e-9, 0.0, {1.0, 0, 0, 0}, "jump"});
    CHECK_THROWS_AS(s.validate(), DomainError);
    s.phases[0] = {0.0, 10e-12, {1.0, 0, 0, 0}, "empty"};
    CHECK_THROWS_AS(s.validate(), DomainError);

    for (int bit : {0, 1}) {
        const auto w = write_schedule(nv_cfg(), bit);
        CHECK_NOTHROW(w.validate());
        for (int term = 0; term < 4; ++term) {
            const auto wave = w.waveform(term);
            const double t_end = w.total_time();
            double prev = wave.value(0.0), worst = 0.0;
            for (int k = 1; k <= 20000; ++k) {
                const double v = wave.value(t_end * k / 20000.0);
                worst = std::max(worst, std::abs(v - prev));
                prev = v;
            }
            // 4 V over >= 10 ps, sampled every t_end/20000
            CHECK(worst <= 4.0 * (t_end / 20000.0) / OperationSchedule::kMinRamp + 1e-9);
        }
    }
    CHECK_NOTHROW(power_off_schedule(nv_cfg(), 1.0).validate());
}

TEST_CASE("write swaps polarization roles") {
    const auto& zero = stored(0);
    const auto w = run_write(nv_cfg(), zero, 1);
    CHECK(w.m4_mean >= 0.95);
    CHECK(w.m2_mean < 0.0);
    CHECK(w.m2_mean > -1.0);
    CHECK(zero.m2.mean() >= 0.95);
    CHECK(zero.m4.mean() < 0.0);
    CHECK(w.after.logic() == Logic::One);
    CHECK(w.after.q == doctest::Approx(1.0).epsilon(0.01));
    CHECK(std::abs(w.after.qb) < 0.01);
}

TEST_CASE("same-state write is a no-op") {
    for (int bit : {0, 1}) {
        const auto w = run_write(nv_cfg(), stored(bit), bit);
        CHECK(w.max_delta_p < 1e-3);
        CHECK(w.after.logic() == (bit ? Logic::One : Logic::Zero));
    }
}

TEST_CASE("power-off collapses nodes and keeps polarization") {
    for (int bit : {0, 1}) {
        const auto off = run_power_off(nv_cfg(), stored(bit));
        CHECK(off.nodes_collapsed);
        CHECK(off.max_node_voltage < 50e-3);
        CHECK(off.polarization_preserved);
        CHECK(off.max_delta_p < 1e-6);
        const auto again = run_power_off(nv_cfg(), off.after);
        CHECK(again.nodes_collapsed);
        CHECK(max_abs_delta(again.after.m2, off.after.m2) == 0.0);
        CHECK(max_abs_delta(again.after.m4, off.after.m4) == 0.0);
    }
}

TEST_CASE("restore recovers the programmed bit at every target") {
    for (int bit : {0, 1}) {
        const auto off = run_power_off(nv_cfg(), stored(bit)).after;
        CHECK(polarization_logic(off) == (bit ? Logic::One : Logic::Zero));
        for (double v : {0.25, 0.5, 0.75, 1.0}) {
            const auto r = run_restore_one_step(nv_cfg(), off, v);
            CHECK(r.correct);
            CHECK(r.logic == (bit ? Logic::One : Logic::Zero));
        }
    }
}

TEST_CASE("baseline is volatile") {
    for (int bit : {0, 1}) {
        const auto off = run_power_off(base_cfg(), latched_state(base_cfg(), bit));
        CHECK(off.nodes_collapsed);
        const auto r = run_restore_one_step(base_cfg(), off.after, 1.0);
        CHECK(r.expected == Logic::Invalid);
        CHECK_FALSE(r.correct);

        // a 1 mV nudge against the old data decides the baseline, not the nvSRAM
        auto nudged = off.after;
        (bit ? nudged.qb : nudged.q) = 1e-3;
        CHECK(run_restore_one_step(base_cfg(), nudged, 1.0).logic == (bit ? Logic::Zero : Logic::One));
        auto nv = run_power_off(nv_cfg(), stored(bit)).after;
        (bit ? nv.qb : nv.q) = 1e-3;
        CHECK(run_restore_one_step(nv_cfg(), nv, 1.0).correct);
    }
}

TEST_CASE("two-phase restore clears residual charge") {
    const auto off = run_power_off(nv_cfg(), stored(1)).after;
    const double ramp = 100e-9;
    const auto offset = find_mislatch_offset(nv_cfg(), off, ramp);
    REQUIRE(offset.has_value());
    CHECK(*offset > 0.0);
    CHECK(*offset < 1.0);
    auto bad = off;
    bad.qb = *offset + 0.01;
    CHECK_FALSE(run_restore_one_step(nv_cfg(), bad, 1.0, ramp).correct);
    CHECK(run_restore_two_phase(nv_cfg(), bad, 1.0, ramp).correct);

    const auto a = run_restore_one_step(nv_cfg(), off, 1.0);
    const auto b = run_restore_two_phase(nv_cfg(), off, 1.0);
    CHECK(a.logic == b.logic);

    // the slow default ramp lets the residual bleed away
    CHECK_FALSE(find_mislatch_offset(nv_cfg(), off, nv_cfg().restore_ramp).has_value());
}

TEST_CASE("same-state polarization never crashes") {
    const auto lvt = device::FeFetState::lvt(nv_cfg().segments);
    const auto blank = blank_state(nv_cfg(), lvt, lvt);
    CHECK(polarization_logic(blank) == Logic::Invalid);
    RestoreReport r;
    CHECK_NOTHROW(r = run_restore_one_step(nv_cfg(), blank, 1.0));
    CHECK(r.expected == Logic::Invalid);
    CHECK_FALSE(r.correct);
    CHECK_NOTHROW(run_restore_two_phase(nv_cfg(), blank, 1.0));
}

TEST_CASE("ramp sweep") {
    const auto off = run_power_off(nv_cfg(), stored(0)).after;
    const auto pts = restore_ramp_sweep(nv_cfg(), off, 1.0, {1e-6, 1e-8});
    REQUIRE(pts.size() == 2);
    CHECK(pts[0].correct);
    CHECK(pts[1].ramp == 1e-8);
    CHECK_THROWS_AS(run_restore_one_step(nv_cfg(), off, 1.0, 1e-12), DomainError);
}

TEST_CASE("read latency and parity") {
    const auto rb = run_read(base_cfg(), latched_state(base_cfg(), 1));
    CHECK(rb.latency > 50e-12);
    CHECK(rb.latency < 90e-12);
    CHECK(rb.value == 1);
    CHECK(rb.non_destructive);
    const auto rn = run_read(nv_cfg(), stored(1));
    CHECK(std::abs(rn.latency - rb.latency) / rb.latency < 0.05);
    CHECK(rn.non_destructive);
    CHECK(rn.max_delta_p < 1e-6);
    const auto r0 = run_read(nv_cfg(), stored(0));
    CHECK(r0.value == 0);
    CHECK(r0.logic_after == Logic::Zero);
    CHECK(r0.waveform.final_voltage("blb") > r0.waveform.final_voltage("bl"));
    const auto b0 = run_read(base_cfg(), latched_state(base_cfg(), 0));
    CHECK(b0.value == 0);
    CHECK(b0.non_destructive);
}

TEST_CASE("hold disturb") {
    const auto h = run_hold_disturb(nv_cfg(), stored(1), 1000.0);
    CHECK(h.max_opposing_fraction < 0.01);
    CHECK(run_hold_disturb(nv_cfg(), stored(1), 0.0).max_delta_p == 0.0);
    CHECK_THROWS_AS(run_hold_disturb(nv_cfg(), stored(1), -1.0), DomainError);

    // latch held against its polarization: 1 V self-corrects, 2 V holds and switches
    auto mismatched = stored(0);
    mismatched.q = 1.0;
    mismatched.qb = 0.0;
    const auto at1 = run_hold_disturb(nv_cfg(), mismatched, 1000.0, 1.0);
    CHECK(at1.after.logic() == Logic::Zero);
    CHECK(at1.max_opposing_fraction < 0.01);
    const auto at2 = run_hold_disturb(nv_cfg(), mismatched, 1000.0, 2.0);
    CHECK(at2.after.logic() == Logic::One);
    CHECK(at2.max_opposing_fraction > 0.5);
}

TEST_CASE("silicon protocol") {
    for (int bit : {0, 1}) {
        const auto off = run_power_off(nv_cfg(), stored(bit)).after;
        const auto tr = run_silicon_protocol(nv_cfg(), off, {0.25, 0.5, 0.75, 1.0}, 1e-6, 2);
        CHECK(tr.total == 8);
        CHECK(tr.correct == 8);
        for (const auto& r : tr.reads) CHECK(bit ? r.bl > r.blb : r.blb > r.bl);
        int reads = 0;
        for (const auto& s : tr.steps) reads += s.phase == "read";
        CHECK(reads == 8);
        CHECK(tr.steps.front().phase == "off");
        // step index, not time
        for (std::size_t k = 0; k < tr.steps.size(); ++k) CHECK(tr.steps[k].index == static_cast<int>(k));
    }
    const auto off = run_power_off(nv_cfg(), stored(1)).after;
    const auto heavy = run_silicon_protocol(nv_cfg(), off, {1.0}, 100e-6, 1);
    REQUIRE(heavy.reads.size() == 1);
    CHECK(heavy.reads[0].weak);
    CHECK_THROWS_AS(run_silicon_protocol(nv_cfg(), off, {-1.0}, 1e-6, 1), DomainError);
}

TEST_CASE("monte carlo") {
    const auto zero = monte_carlo_restore(nv_cfg(), 0.0, 0.0, 10, 7);
    CHECK(zero.yield == 1.0);
    const auto a = monte_carlo_restore(nv_cfg(), 0.03, 0.05, 40, 11, 1, 4);
    const auto b = monte_carlo_restore(nv_cfg(), 0.03, 0.05, 40, 11, 1, 1);
    REQUIRE(a.details.size() == b.details.size());
    for (std::size_t i = 0; i < a.details.size(); ++i) {
        CHECK(a.details[i].seed == b.details[i].seed);
        CHECK(a.details[i].correct == b.details[i].correct);
    }
    CHECK(a.yield >= 0.99);
    const auto wide = monte_carlo_restore(nv_cfg(), 0.3, 0.05, 40, 11);
    CHECK(wide.yield < a.yield);
    CHECK(derive_seed(1, 0) != derive_seed(1, 1));
    CHECK(derive_seed(1, 0) != derive_seed(2, 0));
    CHECK_THROWS_AS(monte_carlo_restore(nv_cfg(), 0.03, 0.05, 0, 1), DomainError);
}

}  // TEST_SUITE
