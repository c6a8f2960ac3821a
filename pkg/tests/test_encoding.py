import json

import numpy as np
import pytest

from qreadout import sim
from qreadout.circuits import AnsatzSpec, build_ansatz
from qreadout.encoding import (EncodingResult, TrainConfig, VelocityField, cosine_distance,
                               cost_and_gradient, exact_inject, load_field, normalize, sine_field,
                               train)

SPEC = AnsatzSpec("adjusted", 4, 12)


def test_normalize_examples():
    f = normalize([1, 1, 1, 1])
    assert f.norm == 2 and np.allclose(f.unit, 0.5)
    for bad in ([0, 0, 0, 0], [1, 2, 3], [1, np.nan], [1.0]):
        with pytest.raises(ValueError):
            normalize(bad)


def test_sine_field_is_unit_norm():
    for n in (2, 4, 8):
        f = sine_field(n)
        assert abs(f.norm - 1) < 1e-12 and f.N == 2**n and f.n_qubits == n


def test_cosine_distance_examples(rng):
    a = rng.normal(size=8)
    assert abs(cosine_distance(a, a)) < 1e-15
    assert np.isclose(cosine_distance([1, 0], [0, 1]), 1)
    assert np.isclose(cosine_distance(a, -a), 2)
    assert np.isclose(cosine_distance(a, 3 * a), 0)
    with pytest.raises(ValueError):
        cosine_distance(a, np.zeros(8))


def test_exact_inject():
    e0 = np.zeros(16)
    e0[0] = 1
    assert np.array_equal(exact_inject(VelocityField(e0)), sim.zero_state(4))
    f = sine_field(4)
    assert np.array_equal(exact_inject(f), f.unit)


@pytest.mark.parametrize("method", ["adjoint", "shift"])
def test_gradient_matches_finite_differences(method, rng):
    spec = AnsatzSpec("adjusted", 4, 6)
    c = build_ansatz(spec)
    target = rng.normal(size=16)
    target /= np.linalg.norm(target)
    for _ in range(20):
        th = rng.uniform(-np.pi, np.pi, spec.parameter_count)
        _, g = cost_and_gradient(c, th, target, method)
        h = 1e-5
        fd = np.array([(cost_and_gradient(c, th + h * e, target)[0]
                        - cost_and_gradient(c, th - h * e, target)[0]) / (2 * h)
                       for e in np.eye(len(th))])
        assert np.linalg.norm(g - fd) <= 1e-5 * max(np.linalg.norm(fd), 1e-3)


def test_cost_is_cosine_distance(rng):
    c = build_ansatz(SPEC)
    th = rng.uniform(-1, 1, SPEC.parameter_count)
    target = rng.normal(size=16)
    cost, _ = cost_and_gradient(c, th, target)
    assert np.isclose(cost, cosine_distance(sim.run(c, theta=th), target))


def test_uniform_target_trains_trivially():
    res = train(VelocityField(np.ones(16)), SPEC)
    assert res.cost <= 1e-12 and res.converged


def test_sine_training_and_sign(rng):
    f = sine_field(4)
    res = train(f, SPEC)
    assert res.converged and 0 <= res.cost <= 1e-8
    assert np.allclose(res.state, f.unit, atol=np.sqrt(2 * max(res.cost, 1e-16)) + 1e-12)
    # scale invariance: only the unit vector matters
    res2 = train(VelocityField(3.5 * f.values), SPEC)
    assert np.allclose(res2.state, res.state, atol=1e-12)


def test_negated_target_keeps_sign():
    f = VelocityField(-sine_field(4).values)
    res = train(f, SPEC)
    assert res.converged
    assert np.allclose(res.state, f.unit, atol=1e-4)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        train(sine_field(3), SPEC)


def test_nonconvergence_is_reported_not_raised():
    rng = np.random.default_rng(3)
    res = train(VelocityField(rng.normal(size=16)), AnsatzSpec("adjusted", 4, 1),
                TrainConfig(restarts=2, max_iters=50))
    assert not res.converged and res.cost > 1e-8


def test_result_json_roundtrip():
    res = train(sine_field(4), SPEC)
    doc = json.loads(res.to_json())
    assert {"theta", "cost", "iters", "converged"} <= set(doc)
    back = EncodingResult.from_json(res.to_json())
    assert np.allclose(back.theta, res.theta) and np.allclose(back.state, res.state)


def test_load_field_csv_and_snapshot(tmp_path):
    vals = np.arange(1, 9, dtype=float)
    (tmp_path / "u.csv").write_text("# provenance line\n" + "\n".join(str(float(v)) for v in vals) + "\n")
    assert np.array_equal(load_field(tmp_path / "u.csv").values, vals)
    doc = {"config": {"x_begin": 0.0, "x_end": 8.0}, "seed": 0, "t": 1.0,
           "values": vals.tolist(), "norm": float(np.linalg.norm(vals))}
    (tmp_path / "s.json").write_text(json.dumps(doc))
    f = load_field(tmp_path / "s.json")
    assert np.array_equal(f.values, vals) and f.dx == 1.0


def test_polish_resolves_amplitudes_below_cost_floor():
    from qreadout.circuits import AnsatzSpec
    from qreadout.encoding import TrainConfig, sine_field, train

    f = sine_field(4)
    spec = AnsatzSpec("adjusted", 4, 12)
    rough = train(f, spec, TrainConfig(polish=False))
    fine = train(f, spec, TrainConfig())
    assert fine.converged
    assert np.abs(fine.state - f.unit).max() < 1e-12
    assert np.abs(fine.state - f.unit).max() <= np.abs(rough.state - f.unit).max()
