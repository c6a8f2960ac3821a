"""Encode, estimate, assemble and compare: the readout workflow for one field."""
from __future__ import annotations

import csv
import io
import logging
from dataclasses import asdict, dataclass

import numpy as np

from . import estimators as est
from .circuits import AnsatzSpec
from .encoding import EncodingResult, TrainConfig, VelocityField, exact_inject, train
from .stats import StatReport, assemble, classical_oracle

log = logging.getLogger(__name__)

MIN_SHOTS = 100


@dataclass
class ReadoutConfig:
    mode: str = "exact"  # exact | shots | both
    shots: int | None = None  # None: per-quantity budget from ``precision``
    precision: float = 0.05
    seed: int = 0
    baseline: str = "classical"  # or statevector
    encode: str = "train"  # or inject
    control_mode: str = "single_ancilla"
    workers: int = 1

    def __post_init__(self):
        if self.mode not in ("exact", "shots", "both"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.baseline not in ("classical", "statevector"):
            raise ValueError(f"unknown baseline {self.baseline!r}")
        if self.encode not in ("train", "inject"):
            raise ValueError(f"unknown encoding {self.encode!r}")
        if self.shots is not None and self.shots < 1:
            raise ValueError("shots must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


def default_ansatz(n: int) -> tuple[AnsatzSpec, TrainConfig]:
    """Adjusted ansatz deep enough to train reliably, with its tolerance."""
    if n <= 4:
        return AnsatzSpec("adjusted", n, 12), TrainConfig(tolerance=1e-8)
    return AnsatzSpec("adjusted", n, 3 * n), TrainConfig(tolerance=1e-4, restarts=4)


def encode(field: VelocityField, config: ReadoutConfig, spec=None, train_config=None):
    """``(source, encoding result or None)`` for ``field``."""
    if config.encode == "inject":
        return est.InjectedSource(exact_inject(field)), None
    d_spec, d_train = default_ansatz(field.n_qubits)
    spec = spec or d_spec
    result = train(field, spec, train_config or d_train)
    log.info("trained %s n=%d L=%d: cost %.2e", spec.variant, spec.n, spec.L, result.cost)
    return est.CircuitSource(spec, result.theta, config.control_mode), result


def shot_request(source, norm, N, seed, shots=None, precision=0.05, shifts=None) -> dict:
    """Shots-mode batch with a fixed budget or one solved per quantity.

    Budgets solve ``std / sqrt(M) = precision`` on the observable scale and are
    floored at ``MIN_SHOTS`` so the plug-in standard error stays meaningful.
    """
    req = est.readout_request(N, "shots", shots or MIN_SHOTS, seed, shifts)
    if shots is None:
        for item in req["items"]:
            prep = est.prepare(source, norm, item)
            item["shots"] = max(MIN_SHOTS, est.shots_for_precision(prep, precision))
    return req


def readout(source, norm, N, mode="exact", shots=None, seed=0, precision=0.05,
            shifts=None, workers=1) -> StatReport:
    if mode == "exact":
        req = est.readout_request(N, "exact", shifts=shifts)
    else:
        req = shot_request(source, norm, N, seed, shots, precision, shifts)
    batch = est.evaluate_batch(source, norm, req, workers=workers)
    return assemble(batch["estimates"], norm, N, shifts)


def oracle_quantities(values, shifts=None) -> dict:
    """Direct sums keyed like estimates: ``"mean"``, ``"sum_u3"``, ``("shifted", m, l, r)``..."""
    u = np.asarray(values, dtype=float)
    N = u.shape[0]
    shifts = range(1, N // 2 + 1) if shifts is None else shifts
    out = {"mean": u.mean(), "sum_u2": np.sum(u**2), "sum_u3": np.sum(u**3), "sum_u4": np.sum(u**4)}
    for r in shifts:
        v = np.roll(u, -r)
        for m, l in est.SHIFTED_PAIRS:
            out[("shifted", m, l, r)] = np.sum(u**m * v**l)
    return out


def estimate_key(e):
    get = (lambda k: e[k]) if isinstance(e, dict) else (lambda k: getattr(e, k))
    q = get("quantity")
    return ("shifted", get("m"), get("l"), get("r")) if q == "shifted" else q


def z_score(value, reference, sigma) -> float:
    """|value - reference| / sigma; zero-variance estimates score 0 when exact, inf otherwise."""
    diff = abs(value - reference)
    if sigma > 0:
        return float(diff / sigma)
    return 0.0 if diff <= 1e-12 * max(1.0, abs(reference)) else float("inf")


def _moment_rows(ms):
    return {k: getattr(ms, k).value for k in ("mean", "m2", "m3", "m4")}


def field_report(field: VelocityField, config: ReadoutConfig, source=None,
                 encoding: EncodingResult | None = None) -> dict:
    """Reference, statevector and shots rows for the moments plus S2 / S4 curves."""
    if source is None:
        source, encoding = encode(field, config)
    N, norm = field.N, field.norm
    oracle_m, oracle_c = classical_oracle(field)
    exact = readout(source, norm, N, "exact", workers=config.workers)
    doc = {"N": N, "norm": norm,
           "reference": _moment_rows(oracle_m),
           "statevector": _moment_rows(exact.moments),
           "statevector_error": {k: abs(_moment_rows(exact.moments)[k] - _moment_rows(oracle_m)[k])
                                 for k in ("mean", "m2", "m3", "m4")}}
    if encoding is not None:
        doc["encoding"] = encoding.to_dict()
    curves = {"r": oracle_c[2].r.tolist(),
              "S2_reference": oracle_c[2].values.tolist(), "S4_reference": oracle_c[4].values.tolist(),
              "S2_statevector": exact.curves[2].values.tolist(),
              "S4_statevector": exact.curves[4].values.tolist()}
    if config.mode in ("shots", "both"):
        shots = readout(source, norm, N, "shots", config.shots, config.seed, config.precision,
                        workers=config.workers)
        base = oracle_m if config.baseline == "classical" else exact.moments
        row, sig, nsig = {}, {}, {}
        for k in ("mean", "m2", "m3", "m4"):
            v = getattr(shots.moments, k)
            row[k], sig[k] = v.value, v.sigma
            nsig[k] = z_score(v.value, getattr(base, k).value, v.sigma)
        doc["shots"] = {"values": row, "sigma": sig, "n_sigma": nsig, "baseline": config.baseline,
                        "budget": {str(estimate_key(e)): e.shots for e in shots.estimates}}
        curves.update({"S2_shots": shots.curves[2].values.tolist(),
                       "S2_shots_sigma": shots.curves[2].sigmas.tolist(),
                       "S4_shots": shots.curves[4].values.tolist(),
                       "S4_shots_sigma": shots.curves[4].sigmas.tolist()})
    doc["curves"] = curves
    return doc


def quantity_n_sigma(source, values, shots, seeds, precision=0.05) -> np.ndarray:
    """Per-seed, per-quantity z-scores of shots estimates against direct sums.

    Returns an array of shape ``(len(seeds), n_quantities)``.  Each
    observable's outcome distribution is computed once and reused across seeds.
    """
    u = np.asarray(values, dtype=float)
    norm = float(np.linalg.norm(u))
    N = u.shape[0]
    ref = oracle_quantities(u)
    items = est.readout_request(N, "exact")["items"]
    preps = [est.prepare(source, norm, it) for it in items]
    budgets = [shots or max(MIN_SHOTS, est.shots_for_precision(p, precision)) for p in preps]
    out = np.empty((len(seeds), len(preps)))
    for i, seed in enumerate(seeds):
        ss = np.random.SeedSequence(seed).generate_state(len(preps), np.uint64)
        for j, (p, m) in enumerate(zip(preps, budgets)):
            e = p.sample(m, int(ss[j]))
            out[i, j] = z_score(e.value, ref[estimate_key(e)], e.sigma)
    return out


def curves_csv(curves: dict) -> str:
    keys = list(curves)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(keys)
    for row in zip(*(curves[k] for k in keys)):
        w.writerow([repr(float(v)) if not isinstance(v, (int, np.integer)) else int(v) for v in row])
    return buf.getvalue()
