import numpy as np
import pytest

from qreadout import estimators as E
from qreadout import pipeline
from qreadout.encoding import VelocityField, sine_field
from qreadout.stats import classical_oracle


def test_readout_config_validation():
    for kw in (dict(mode="x"), dict(baseline="x"), dict(encode="x"), dict(shots=0)):
        with pytest.raises(ValueError):
            pipeline.ReadoutConfig(**kw)


def test_z_score():
    assert pipeline.z_score(1.0, 1.0, 0.0) == 0.0
    assert pipeline.z_score(1.1, 1.0, 0.0) == float("inf")
    assert np.isclose(pipeline.z_score(1.1, 1.0, 0.05), 2.0)


def test_oracle_quantities_keys(rng):
    u = rng.normal(size=16)
    q = pipeline.oracle_quantities(u)
    assert len(q) == 4 + 8 * len(E.SHIFTED_PAIRS)
    assert np.isclose(q[("shifted", 1, 3, 2)], np.sum(u * np.roll(u, -2) ** 3))


def test_injected_report_matches_oracle(rng):
    f = VelocityField(rng.normal(size=16))
    doc = pipeline.field_report(f, pipeline.ReadoutConfig(encode="inject", mode="both", seed=3))
    assert max(doc["statevector_error"].values()) < 1e-10
    assert "encoding" not in doc
    assert set(doc["shots"]["n_sigma"]) == {"mean", "m2", "m3", "m4"}
    assert all(v >= pipeline.MIN_SHOTS for v in doc["shots"]["budget"].values())
    m, c = classical_oracle(f)
    assert np.allclose(doc["curves"]["S2_statevector"], c[2].values, atol=1e-10)
    text = pipeline.curves_csv(doc["curves"])
    assert text.splitlines()[0].startswith("r,S2_reference")
    assert len(text.splitlines()) == 10


def test_trained_sine_report():
    doc = pipeline.field_report(sine_field(4), pipeline.ReadoutConfig())
    assert doc["encoding"]["converged"]
    assert max(doc["statevector_error"].values()) < 1e-3


def test_fixed_budget_and_precision_budget():
    f = sine_field(4)
    src = E.InjectedSource(f.unit)
    fixed = pipeline.shot_request(src, f.norm, 16, 0, shots=500)
    assert {it["shots"] for it in fixed["items"]} == {500}
    solved = pipeline.shot_request(src, f.norm, 16, 0)
    assert all(it["shots"] >= pipeline.MIN_SHOTS for it in solved["items"])
    tighter = pipeline.shot_request(src, f.norm, 16, 0, precision=0.01)
    assert sum(i["shots"] for i in tighter["items"]) > sum(i["shots"] for i in solved["items"])


def test_quantity_n_sigma_shape_and_calibration(rng):
    u = rng.normal(size=16)
    src = E.InjectedSource(u / np.linalg.norm(u))
    z = pipeline.quantity_n_sigma(src, u, None, range(20))
    assert z.shape == (20, 35)
    assert np.isfinite(z).all() and np.mean(z <= 2) > 0.85
    again = pipeline.quantity_n_sigma(src, u, None, range(20))
    assert np.array_equal(z, again)
