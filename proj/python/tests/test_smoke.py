import math
import os
from pathlib import Path

import pytest

import fesram

SOURCE = Path(os.environ.get("FESRAM_SOURCE_DIR", Path(__file__).resolve().parents[2]))


def test_rc_transient_tracks_exponential():
    text = (SOURCE / "tests/golden/netlists/rc.cir").read_text()
    runs = fesram.simulate(text)
    tran = [r for r in runs if r["kind"] == "tran"][0]
    t, v = tran["time"], tran["nodes"]["out"]
    err = max(abs(vk - (1 - math.exp(-(tk - 1e-15) / 1e-9))) for tk, vk in zip(t, v) if tk > 1e-15)
    assert err < 2e-3


def test_format_round_trip():
    text = (SOURCE / "tests/golden/netlists/rc.cir").read_text()
    once = fesram.format_netlist(text)
    assert fesram.format_netlist(once) == once


def test_parse_error_carries_line():
    with pytest.raises(fesram.ParseError, match="line"):
        fesram.format_netlist("title\nr1 a 0 1q\n")
    assert issubclass(fesram.ParseError, fesram.Error)


def test_read_latency_parity():
    base = fesram.read_latency("baseline")
    nv = fesram.read_latency("nvsram")
    assert 50e-12 < base < 90e-12
    assert abs(nv - base) / base < 0.05


def test_monostable_vs_bistable():
    assert fesram.butterfly("nvsram", 1, "hold")["monostable"]
    b = fesram.butterfly("baseline", 1, "hold")
    assert b["stable_count"] == 2 and b["snm"] > 0.1


@pytest.mark.parametrize("bit", [0, 1])
def test_power_cycle_restores(bit):
    r = fesram.power_cycle(bit, 0.5)
    assert r["correct"]
    assert r["max_node_voltage"] < 0.05
    assert r["max_delta_p"] < 1e-6


def test_kinetics_anchors():
    pts = dict(fesram.halid([4.0, 2.0]))
    assert pts[4.0] == pytest.approx(10e-9, rel=1e-9)
    assert pts[2.0] == pytest.approx(100.0, rel=1e-9)
    assert fesram.disturb_projection(1.0, 1000.0) < 0.01
    with pytest.raises(fesram.DomainError):
        fesram.halid([0.0])


def test_monte_carlo_small():
    assert fesram.monte_carlo_yield(8, 0.0) == 1.0


def test_bad_topology():
    with pytest.raises(fesram.DomainError):
        fesram.read_latency("dram")
