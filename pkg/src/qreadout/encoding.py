"""Amplitude encoding: field normalisation and ansatz training on cosine distance."""
from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import least_squares, minimize

from . import sim
from .circuits import AnsatzSpec, build_ansatz

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class VelocityField:
    values: np.ndarray
    dx: float = 1.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        object.__setattr__(self, "values", v)
        n = v.shape[0]
        if n < 2 or n & (n - 1):
            raise ValueError(f"field length {n} is not a power of two")
        if not np.isfinite(v).all():
            raise ValueError("field contains non-finite values")
        if not np.linalg.norm(v) > 0:
            raise ValueError("field has zero norm")

    @property
    def N(self) -> int:
        return self.values.shape[0]

    @property
    def n_qubits(self) -> int:
        return self.N.bit_length() - 1

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    @property
    def unit(self) -> np.ndarray:
        return self.values / self.norm


def normalize(values, dx: float = 1.0) -> VelocityField:
    return VelocityField(values, dx)


def sine_field(n: int) -> VelocityField:
    """(sin(2 pi i / N) + 1) on N = 2**n points, scaled to unit norm."""
    N = 1 << n
    u = np.sin(2 * np.pi * np.arange(N) / N) + 1.0
    return VelocityField(u / np.linalg.norm(u), 2 * np.pi / N)


def cosine_distance(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ValueError("cosine distance undefined for a zero vector")
    return float(1.0 - (a @ b) / (na * nb))


def exact_inject(target: VelocityField) -> np.ndarray:
    """The encoded state, bypassing training."""
    return target.unit.copy()


@dataclass
class TrainConfig:
    tolerance: float = 1e-8
    max_iters: int = 5000
    seed: int = 0
    restarts: int = 8
    gradient: str = "adjoint"  # or "shift"
    polish: bool = True  # least-squares refinement on the amplitude residual


@dataclass
class EncodingResult:
    theta: np.ndarray
    cost: float
    iterations: int
    converged: bool
    state: np.ndarray = field(repr=False)
    spec: AnsatzSpec | None = None

    def to_dict(self) -> dict:
        d = {"theta": [float(t) for t in self.theta], "cost": float(self.cost),
             "iters": int(self.iterations), "converged": bool(self.converged)}
        if self.spec is not None:
            d["ansatz"] = self.spec.to_dict()
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "EncodingResult":
        d = json.loads(text)
        spec = AnsatzSpec.from_dict(d["ansatz"]) if "ansatz" in d else None
        theta = np.asarray(d["theta"], dtype=float)
        state = sim.run(build_ansatz(spec, theta)) if spec is not None else np.empty(0)
        return cls(theta, d["cost"], d["iters"], d["converged"], state, spec)


def cost_and_gradient(circuit: sim.Circuit, theta, target: np.ndarray, method="adjoint"):
    """Cosine distance to ``target`` and its gradient in ``theta``.

    The prepared state is normalised by construction, so the gradient of the
    denominator vanishes and only the overlap term contributes.
    """
    tnorm = np.linalg.norm(target)
    if method == "adjoint":
        overlap, g = sim.overlap_gradient(circuit, theta, target)
    elif method == "shift":
        from .dea import circuit_jacobian

        psi = sim.run(circuit, theta=theta)
        overlap = float(target @ psi)
        g = circuit_jacobian(circuit, theta).T @ target
    else:
        raise ValueError(f"unknown gradient method {method!r}")
    return 1.0 - overlap / tnorm, -g / tnorm


def _starts(P, rng, restarts):
    yield np.zeros(P)
    yield rng.uniform(-0.1, 0.1, P)
    for _ in range(max(restarts - 2, 0)):
        yield rng.uniform(-np.pi, np.pi, P)


def _polish(circuit, theta, goal, cost):
    """Refine on ``psi(theta) - goal`` directly.

    The cosine distance is quadratic in the amplitude error, so double
    precision stalls it around 1e-8 in the amplitudes; the residual itself
    keeps resolving down to ~1e-15.
    """
    from .dea import circuit_jacobian

    res = least_squares(lambda th: sim.run(circuit, theta=th) - goal, theta,
                        jac=lambda th: circuit_jacobian(circuit, th), method="trf",
                        xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=50)
    new = cost_and_gradient(circuit, res.x, goal)[0]
    if np.linalg.norm(res.fun) < np.linalg.norm(sim.run(circuit, theta=theta) - goal):
        return new, res.x
    return cost, theta


def train(target: VelocityField, spec: AnsatzSpec, config: TrainConfig | None = None) -> EncodingResult:
    """Fit ansatz angles so the prepared state matches ``target.unit``.

    Restarts: all-zero angles, small uniform(-0.1, 0.1) angles, then uniform
    over (-pi, pi).  Stops at the first restart reaching ``config.tolerance``;
    otherwise returns the best one with ``converged=False``.
    """
    config = config or TrainConfig()
    if 1 << spec.n != target.N:
        raise ValueError(f"ansatz on {spec.n} qubits cannot encode {target.N} values")
    circuit = build_ansatz(spec)
    goal = target.unit
    rng = np.random.default_rng(config.seed)
    best, iters = None, 0

    def fun(th):
        return cost_and_gradient(circuit, th, goal, config.gradient)

    for k, th0 in enumerate(_starts(spec.parameter_count, rng, config.restarts)):
        if k >= max(config.restarts, 1):
            break
        res = minimize(fun, th0, jac=True, method="BFGS",
                       options={"maxiter": config.max_iters, "gtol": 1e-13})
        iters += int(res.nit)
        cost = fun(res.x)[0]
        log.debug("restart %d: cost %.3e after %d iterations", k, cost, res.nit)
        if best is None or cost < best[0]:
            best = (cost, res.x)
        if best[0] <= config.tolerance:
            break
    cost, theta = best
    if config.polish:
        cost, theta = _polish(circuit, theta, goal, cost)
    state = sim.run(circuit, theta=theta)
    return EncodingResult(theta, max(float(cost), 0.0), iters,
                          bool(cost <= config.tolerance), state, spec)


def load_field(path, dx: float = 1.0) -> VelocityField:
    """Read a field from CSV (one value per line, ``#`` comments) or a snapshot JSON file."""
    path = Path(path)
    if path.suffix == ".json":
        doc = json.loads(path.read_text())
        cfg = doc.get("config", {})
        span = cfg.get("x_end", 2 * np.pi) - cfg.get("x_begin", 0.0)
        values = np.asarray(doc["values"], dtype=float)
        return VelocityField(values, span / len(values) if cfg else dx)
    with path.open() as fh:
        rows = csv.reader(line for line in fh if not line.lstrip().startswith("#"))
        values = [float(row[0]) for row in rows if row and row[0].strip()]
    return VelocityField(values, dx)
