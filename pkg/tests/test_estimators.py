import json

import numpy as np
import pytest

from qreadout import estimators as E
from qreadout.circuits import AnsatzSpec
from qreadout.encoding import sine_field, train

UNIFORM = np.full(16, 0.25)


def direct(u, m, l, r):
    return np.sum(u**m * np.roll(u, -r) ** l)


def test_uniform_field_examples():
    assert np.isclose(E.estimate_mean(UNIFORM, 1.0).value, 0.25)
    s3 = E.estimate_sum_u3(UNIFORM, 1.0)
    assert np.isclose(s3.raw, 0.0625) and np.isclose(s3.value, 0.25)
    s4 = E.estimate_sum_u4(UNIFORM, 1.0)
    assert np.isclose(s4.raw, 1 / 16) and np.isclose(s4.value, 1 / 16)
    for m, l in E.SHIFTED_PAIRS:
        for r in (0, 5):
            assert np.isclose(E.estimate_shifted(UNIFORM, 1.0, m, l, r).value, 16 * 0.25 ** (m + l))


def test_basis_field_collision_is_one():
    e5 = np.zeros(16)
    e5[5] = 1
    assert np.isclose(E.estimate_sum_u4(e5, 1.0).raw, 1.0)


def test_sine_exact_against_direct_sums():
    f = sine_field(4)
    u = f.unit
    assert np.isclose(E.estimate_mean(u, 1.0).value, 0.2041, atol=1e-4)
    assert abs(E.estimate_sum_u3(u, 1.0).value - np.sum(u**3)) < 1e-6
    assert abs(E.estimate_sum_u4(u, 1.0).value - np.sum(u**4)) < 1e-6
    assert abs(E.estimate_shifted(u, 1.0, 3, 1, 2).value - direct(u, 3, 1, 2)) < 1e-6
    assert np.isclose(E.estimate_shifted(u, 1.0, 1, 1, 0).value, 1.0)


def test_odd_field_has_zero_cubic_sum():
    u = np.sin(2 * np.pi * np.arange(16) / 16)
    assert abs(E.estimate_sum_u3(u / np.linalg.norm(u), 1.0).value) < 1e-14


def test_scaling_with_norm(rng):
    v = rng.normal(size=16)
    nrm = np.linalg.norm(v)
    u = v / nrm
    assert np.isclose(E.estimate_mean(u, nrm).value, v.mean())
    assert np.isclose(E.estimate_sum_u3(u, nrm).value, np.sum(v**3))
    assert np.isclose(E.estimate_sum_u4(u, nrm).value, np.sum(v**4))
    assert np.isclose(E.estimate_sum_u2(nrm).value, np.sum(v**2))
    for m, l in E.SHIFTED_PAIRS:
        assert np.isclose(E.estimate_shifted(u, nrm, m, l, 3).value, direct(v, m, l, 3))


def test_shift_symmetry_and_consistency(rng):
    u = rng.normal(size=16)
    u /= np.linalg.norm(u)
    for r in range(16):
        assert np.isclose(E.estimate_shifted(u, 1, 3, 1, r).value,
                          E.estimate_shifted(u, 1, 1, 3, (16 - r) % 16).value)
    assert np.isclose(E.estimate_shifted(u, 1, 2, 2, 0).value, E.estimate_sum_u4(u, 1).value)


def test_errors():
    with pytest.raises(ValueError):
        E.estimate_shifted(UNIFORM, 1, 2, 1, 1)
    with pytest.raises(ValueError):
        E.estimate_shifted(UNIFORM, 1, 1, 1, 16)
    with pytest.raises(ValueError):
        E.estimate_mean(UNIFORM, 1, mode="shots", shots=0)
    with pytest.raises(ValueError):
        E.estimate_mean(UNIFORM, 1, mode="fuzzy")


def test_exact_mode_has_zero_sigma_and_shots_records_seed():
    u = sine_field(4).unit
    ex = E.estimate_mean(u, 1.0)
    assert ex.sigma == 0 and ex.mode == "exact" and ex.shots is None
    sh = E.estimate_mean(u, 1.0, "shots", 100, seed=7)
    assert sh.sigma > 0 and sh.seed == 7 and sh.shots == 100
    assert sh == E.estimate_mean(u, 1.0, "shots", 100, seed=7)
    assert E.estimate_mean(u, 1.0, "shots", 100).seed is not None


def test_mean_single_shot_std():
    f = sine_field(4)
    mean = f.values.mean()
    assert np.isclose(E.mean_single_shot_std(1.0, 16, mean), np.sqrt(1 / 16 - mean**2))
    assert np.isclose(E.mean_single_shot_std(1.0, 16, 0.2041), 0.1444, atol=1e-4)
    draws = np.array([E.estimate_mean(f.unit, 1.0, "shots", 1, seed=s).value
                      for s in range(3000)])
    assert abs(draws.std() - 0.1444) < 0.01


def test_shots_sigma_follows_mean_formula():
    u = sine_field(4).unit
    e = E.estimate_mean(u, 1.0, "shots", 500, seed=1)
    x = e.raw
    assert np.isclose(e.sigma, 0.25 * np.sqrt((1 - x**2) / 500))


def test_direct_mean_loses_sign():
    u = sine_field(4).unit
    pos = E.estimate_mean_direct(u, 1.0)
    neg = E.estimate_mean_direct(-u, 1.0)
    assert np.isclose(pos.value, 0.2041, atol=1e-4) and np.isclose(neg.value, pos.value)
    assert np.isclose(E.estimate_mean(-u, 1.0).value, -pos.value)
    e0 = np.zeros(16)
    e0[0] = 1
    assert np.isclose(E.estimate_mean_direct(e0, 2.0).value, 2.0 / 16)
    sh = E.estimate_mean_direct(u, 1.0, "shots", 4000, seed=0)
    assert abs(sh.value - pos.value) < 4 * sh.sigma


def test_circuit_source_matches_injected():
    f = sine_field(4)
    spec = AnsatzSpec("adjusted", 4, 12)
    res = train(f, spec)
    for mode in ("single_ancilla", "cat_state"):
        src = E.CircuitSource(spec, res.theta, mode)
        tol = 10 * np.sqrt(2 * max(res.cost, 1e-20)) + 1e-10
        assert abs(E.estimate_mean(src, 1).value - f.values.mean()) < tol
        assert abs(E.estimate_sum_u3(src, 1).value - np.sum(f.unit**3)) < tol
        assert abs(E.estimate_sum_u4(src, 1).value - np.sum(f.unit**4)) < tol
        assert abs(E.estimate_shifted(src, 1, 1, 3, 5).value - direct(f.unit, 1, 3, 5)) < tol


def test_batch_request_roundtrip_and_threads():
    u = sine_field(4).unit
    req = E.readout_request(16, "shots", 200, seed=4)
    assert len(req["items"]) == 3 + 4 * 8
    assert len({it["seed"] for it in req["items"]}) == len(req["items"])
    a = E.evaluate_batch(u, 1.0, json.dumps(req))
    b = E.evaluate_batch(u, 1.0, req, workers=4)
    assert a == b
    assert json.loads(json.dumps(a)) == a


def test_batch_unknown_quantity():
    with pytest.raises(ValueError):
        E.evaluate_batch(UNIFORM, 1, {"items": [{"quantity": "sum_u5"}]})


def test_shot_noise_law():
    u = sine_field(4).unit
    for M in (16, 256):
        vals = [E.estimate_mean(u, 1.0, "shots", M, seed=s).value for s in range(1000)]
        expected = np.sqrt(1 / 16 - u.mean() ** 2) / np.sqrt(M)
        assert abs(np.std(vals) / expected - 1) < 0.1


def test_shots_for_precision():
    u = sine_field(4).unit
    prep = E.prepare(u, 1.0, {"quantity": "mean"})
    M = E.shots_for_precision(prep, 0.05)
    assert prep.single_shot_std() / np.sqrt(M) <= 0.05 < prep.single_shot_std() / np.sqrt(M - 1)
    with pytest.raises(ValueError):
        E.shots_for_precision(prep, 0)
