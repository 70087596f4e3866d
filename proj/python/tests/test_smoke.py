import math

import numpy as np
import pytest

import sstsim


def test_default_config_round_trip():
    cfg = sstsim.default_config()
    assert cfg["spm"]["c_mv"] == pytest.approx(268e-6)
    assert sstsim.normalise_config(cfg) == cfg


def test_bad_config_raises():
    cfg = sstsim.default_config()
    cfg["system"]["n_blocks"] = 0
    with pytest.raises(sstsim.ConfigError, match="n_blocks"):
        sstsim.normalise_config(cfg)


def test_blocking_resonance():
    cfg = sstsim.default_config()
    spm = cfg["spm"]
    n, l, c1, c2 = spm["n_turns"], spm["l_leak"], spm["c_b1"], spm["c_b2"]
    c_series = 1.0 / (1.0 / c1 + n * n / c2)
    assert sstsim.blocking_resonance(cfg) == pytest.approx(1.0 / (2 * math.pi * math.sqrt(l * c_series)))


def test_margins():
    m = sstsim.margins()
    assert m["crossover_hz"] == pytest.approx(643, abs=20)
    assert m["phase_margin_deg"] == pytest.approx(55, abs=5)


def test_short_simulation():
    cfg = sstsim.default_config()
    cfg["scenario"]["duration"] = 0.02
    cols, summary = sstsim.simulate(cfg)
    assert isinstance(cols["v_lv"], np.ndarray)
    assert len(cols["t"]) == summary["frames"]
    assert not summary["aborted"]
    assert np.allclose(cols["v_lv"], 750.0, atol=1.0)


def test_catalog_scenario():
    assert "startup" in sstsim.catalog()
    summary, traces = sstsim.run_scenario("margins")
    assert summary["criteria"]
    assert all(c["pass"] for c in summary["criteria"])
