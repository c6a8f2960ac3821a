"""Readout of field sums from encoded states, exactly or with simulated shots.

Every estimator maps an observable expectation on a prepared state to a
field-scale quantity:

=================  ==============================  =========================
quantity           prepared state                  value
=================  ==============================  =========================
mean               Hadamard test (ancilla X)       |u| / sqrt(N) * <X>
mean_direct        phi then H on every qubit       |u| / sqrt(N) * sqrt(P(0))
sum_u3             Hadamard test beside a copy     <O3> * sqrt(N) * |u|^3
sum_u4             two copies                      <O4> * |u|^4
shifted (m, l, r)  one copy (1,1) / two copies     <O> * |u|^(m+l)
=================  ==============================  =========================

Shot sampling draws ``M`` outcomes from the observable's exact spectral
distribution (see ``Observable.distribution``) with a seeded PCG64 stream.
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from functools import cached_property

import numpy as np

from . import sim
from .circuits import (AnsatzSpec, HadamardTestSpec, build_ansatz, build_direct_mean_circuit,
                       build_hadamard_test, build_o3_circuit, build_twin_circuit)
from .observables import DiagonalTerm, Observable, ancilla_x, collision, o3, shifted

SHIFTED_PAIRS = ((1, 1), (3, 1), (1, 3), (2, 2))


@dataclass(frozen=True)
class Estimate:
    quantity: str
    value: float
    sigma: float
    mode: str
    raw: float
    raw_sigma: float = 0.0
    shots: int | None = None
    seed: int | None = None
    m: int | None = None
    l: int | None = None
    r: int | None = None

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}


# ---------------------------------------------------------------- sources

class InjectedSource:
    """Readout states built directly from a unit vector (no training error)."""

    def __init__(self, state):
        self.phi = np.asarray(state, dtype=float)
        self.n = sim.num_qubits(self.phi)

    @property
    def N(self):
        return 1 << self.n

    def single(self):
        return self.phi

    @cached_property
    def _twin(self):
        return np.kron(self.phi, self.phi)

    def twin(self):
        return self._twin

    def hadamard(self):
        branches = np.stack([sim.uniform_state(self.n), self.phi], axis=1) / np.sqrt(2.0)
        return branches.ravel(), ancilla_x(self.n + 1, (self.n,))

    def o3(self):
        n = self.n
        branches = np.stack([sim.uniform_state(n), self.phi], axis=1) / np.sqrt(2.0)
        t = np.einsum("ia,j->ija", branches, self.phi)
        return t.ravel(), o3(n, (2 * n,), tuple(range(2 * n)), 2 * n + 1)

    def direct(self):
        psi = self.phi
        for q in range(self.n):
            psi = sim.apply_gate(psi, sim.Gate("H", q))
        return psi


class CircuitSource:
    """Readout states produced by running the measurement circuits for ``theta``."""

    def __init__(self, spec: AnsatzSpec, theta, control_mode="single_ancilla"):
        self.spec = spec
        self.theta = np.asarray(theta, dtype=float)
        self.control_mode = control_mode
        self.n = spec.n

    @property
    def N(self):
        return 1 << self.n

    @cached_property
    def _single(self):
        return sim.run(build_ansatz(self.spec, self.theta))

    def single(self):
        return self._single

    @cached_property
    def _twin(self):
        return sim.run(build_twin_circuit(self.spec, self.theta))

    def twin(self):
        return self._twin

    @cached_property
    def _hadamard(self):
        mc = build_hadamard_test(HadamardTestSpec(self.spec, self.control_mode), self.theta)
        return sim.run(mc.circuit), mc.observable

    def hadamard(self):
        return self._hadamard

    @cached_property
    def _o3(self):
        mc = build_o3_circuit(HadamardTestSpec(self.spec, self.control_mode), self.theta)
        return sim.run(mc.circuit), mc.observable

    def o3(self):
        return self._o3

    def direct(self):
        return sim.run(build_direct_mean_circuit(self.spec, self.theta))


def as_source(obj):
    if isinstance(obj, (InjectedSource, CircuitSource)):
        return obj
    return InjectedSource(obj)


# ---------------------------------------------------------------- sampling

def make_rng(seed):
    """Seeded PCG64 generator; returns ``(rng, seed)`` with the seed actually used."""
    if seed is None:
        seed = int(np.random.SeedSequence().generate_state(1, np.uint64)[0])
    return np.random.Generator(np.random.PCG64(seed)), int(seed)


def sample_mean(values, probs, shots, rng):
    """Sample mean and its standard error from ``shots`` draws of a discrete law."""
    counts = rng.multinomial(shots, probs)
    mean = counts @ values / shots
    var = max(counts @ values**2 / shots - mean**2, 0.0)
    return float(mean), float(np.sqrt(var / shots))


def measure(state, obs: Observable, mode="exact", shots=None, seed=None):
    """``(expectation, standard error, seed)`` of one observable."""
    if mode == "exact":
        return obs.expectation(state), 0.0, None
    if mode != "shots":
        raise ValueError(f"unknown mode {mode!r}")
    if not shots or shots < 1:
        raise ValueError("shots mode needs a positive shot count")
    values, probs = obs.distribution(state)
    rng, seed = make_rng(seed)
    mean, err = sample_mean(values, probs, int(shots), rng)
    return mean, err, seed


def _measure(source, norm, item, mode, shots, seed) -> Estimate:
    if mode not in ("exact", "shots"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "shots" and (not shots or shots < 1):
        raise ValueError("shots mode needs a positive shot count")
    prep = prepare(source, norm, item)
    return prep.exact() if mode == "exact" else prep.sample(shots, seed)


# ---------------------------------------------------------------- estimators

def estimate_mean(source, norm, mode="exact", shots=None, seed=None) -> Estimate:
    return _measure(source, norm, {"quantity": "mean"}, mode, shots, seed)


def mean_single_shot_std(norm, N, mean):
    """Standard deviation of one Hadamard-test shot in field units."""
    return float(np.sqrt(max(norm**2 / N - mean**2, 0.0)))


def estimate_mean_direct(source, norm, mode="exact", shots=None, seed=None) -> Estimate:
    """|<u>| from the probability of |0...0> after a Hadamard layer (sign is lost)."""
    src = as_source(source)
    state = src.direct()
    obs = Observable(src.n, tuple(range(src.n)), (DiagonalTerm(0),))
    p, _, used = measure(state, obs, mode, shots, seed)
    scale = norm / np.sqrt(src.N)
    value = scale * np.sqrt(max(p, 0.0))
    sigma = 0.0 if mode == "exact" else scale * np.sqrt((1.0 - p) / (4.0 * shots))
    return Estimate("mean_direct", float(value), float(sigma), mode, float(p),
                    0.0 if mode == "exact" else float(np.sqrt(p * (1 - p) / shots)),
                    int(shots) if mode == "shots" else None, used)


def estimate_sum_u2(norm) -> Estimate:
    """sum u_i^2 = |u|^2 holds identically for a normalised encoding."""
    return Estimate("sum_u2", float(norm) ** 2, 0.0, "exact", 1.0)


def estimate_sum_u3(source, norm, mode="exact", shots=None, seed=None) -> Estimate:
    return _measure(source, norm, {"quantity": "sum_u3"}, mode, shots, seed)


def estimate_sum_u4(source, norm, mode="exact", shots=None, seed=None) -> Estimate:
    return _measure(source, norm, {"quantity": "sum_u4"}, mode, shots, seed)


def estimate_shifted(source, norm, m, l, r, mode="exact", shots=None, seed=None) -> Estimate:
    """sum_i u_i^m u_{i+r}^l with periodic indices."""
    item = {"quantity": "shifted", "m": m, "l": l, "r": r}
    return _measure(source, norm, item, mode, shots, seed)


# ---------------------------------------------------------------- batch API

@dataclass(frozen=True, eq=False)
class Prepared:
    """Everything needed to measure one item: state, observable, field scale."""

    quantity: str
    state: np.ndarray
    observable: Observable
    scale: float
    idx: dict

    @cached_property
    def law(self):
        return self.observable.distribution(self.state)

    def single_shot_std(self) -> float:
        """Raw (observable-scale) standard deviation of one shot."""
        values, probs = self.law
        mean = probs @ values
        return float(np.sqrt(max(probs @ values**2 - mean**2, 0.0)))

    def exact(self) -> Estimate:
        raw = self.observable.expectation(self.state)
        return Estimate(self.quantity, self.scale * raw, 0.0, "exact", raw, **self.idx)

    def sample(self, shots, seed) -> Estimate:
        rng, used = make_rng(seed)
        raw, err = sample_mean(*self.law, int(shots), rng)
        return Estimate(self.quantity, self.scale * raw, abs(self.scale) * err, "shots",
                        raw, err, int(shots), used, **self.idx)


def prepare(source, norm, item) -> Prepared:
    """Readout state and observable for a batch item (not for mean_direct / sum_u2)."""
    src = as_source(source)
    q = item["quantity"]
    if q == "mean":
        state, obs = src.hadamard()
        return Prepared(q, state, obs, norm / np.sqrt(src.N), {})
    if q == "sum_u3":
        state, obs = src.o3()
        return Prepared(q, state, obs, np.sqrt(src.N) * norm**3, {})
    if q == "sum_u4":
        return Prepared(q, src.twin(), collision(src.n), norm**4, {})
    if q == "shifted":
        m, l, r = int(item["m"]), int(item["l"]), int(item["r"])
        if (m, l) not in SHIFTED_PAIRS:
            raise ValueError(f"unsupported exponent pair ({m}, {l})")
        if not 0 <= r < src.N:
            raise ValueError(f"shift {r} out of range for N = {src.N}")
        state = src.single() if (m, l) == (1, 1) else src.twin()
        return Prepared(q, state, shifted(m, l, r, src.n), norm ** (m + l), dict(m=m, l=l, r=r))
    raise ValueError(f"unknown quantity {q!r}")


def shots_for_precision(prep: Prepared, epsilon: float = 0.05) -> int:
    """Smallest M with single-shot std / sqrt(M) <= epsilon on the observable scale."""
    if not epsilon > 0:
        raise ValueError("precision must be positive")
    return max(1, int(np.ceil((prep.single_shot_std() / epsilon) ** 2)))


def _run_item(src, norm, item):
    q = item["quantity"]
    mode, shots, seed = item.get("mode", "exact"), item.get("shots"), item.get("seed")
    if q == "mean_direct":
        return estimate_mean_direct(src, norm, mode, shots, seed)
    if q == "sum_u2":
        return estimate_sum_u2(norm)
    return _measure(src, norm, item, mode, shots, seed)


def evaluate_batch(source, norm, request, workers: int = 1) -> dict:
    """Evaluate a batch request ``{"items": [...]}``; returns ``{"estimates": [...]}``.

    Items: ``{quantity, m?, l?, r?, mode, shots?, seed?}``.  Accepts the
    request as a dict or JSON text.
    """
    if isinstance(request, str):
        request = json.loads(request)
    src = as_source(source)
    items = request["items"]
    if workers > 1:
        # warm shared caches before fanning out
        src.twin()
        with ThreadPoolExecutor(workers) as pool:
            out = list(pool.map(lambda it: _run_item(src, norm, it), items))
    else:
        out = [_run_item(src, norm, it) for it in items]
    return {"estimates": [e.to_dict() for e in out]}


def readout_request(N, mode="exact", shots=None, seed=None, shifts=None) -> dict:
    """The full moment + structure-function workload for one field.

    Per-item seeds are spawned from ``seed`` so every quantity has its own
    reproducible stream.
    """
    shifts = list(range(1, N // 2 + 1)) if shifts is None else list(shifts)
    items = [{"quantity": "mean"}, {"quantity": "sum_u3"}, {"quantity": "sum_u4"}]
    for r in shifts:
        for m, l in SHIFTED_PAIRS:
            items.append({"quantity": "shifted", "m": m, "l": l, "r": r})
    seeds = (np.random.SeedSequence(seed).generate_state(len(items), np.uint64)
             if mode == "shots" and seed is not None else [None] * len(items))
    for it, s in zip(items, seeds):
        it["mode"] = mode
        if mode == "shots":
            it["shots"] = shots
            it["seed"] = None if s is None else int(s)
    return {"items": items}
