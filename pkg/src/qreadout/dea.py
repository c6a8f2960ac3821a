"""Dimensional expressivity analysis: state Jacobians and their numerical rank.

For a real ansatz ``|psi(theta)>`` on n qubits the reachable directions live in
the tangent space of the real unit sphere, so the rank of ``d psi / d theta``
is bounded by ``2**n - 1``.  Ranks are reported as the maximum over random
evaluation points since the rank drops on measure-zero sets (theta = 0 is one).
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels, sim
from .circuits import VARIANTS, AnsatzSpec, build_ansatz

SHIFT = np.pi / 2

# Plateaus quoted for n = 4 with the nearest-neighbour CNOT layout.
REFERENCE_PLATEAUS = {"brickwall": 15, "adjusted": 7}

AMBIGUITY_NOTE = (
    "adjusted-ansatz plateau differs from the quoted reference of 7. The CNOT "
    "layout used here (odd layers CNOT(0,1),CNOT(2,3); even layers CNOT(1,2); RY "
    "on qubits 1,3 after each layer; final RY on all qubits) is a reading of a "
    "circuit figure. With these 12 CNOTs at L=8 and random angles the Jacobian "
    "rank saturates at the listed value, so the reference plateau is not "
    "reproduced under this layout; no orientation variant of the same CNOT "
    "pattern saturates at 7 either."
)


def circuit_jacobian(circuit: sim.Circuit, theta, shift: float = SHIFT, backend=None) -> np.ndarray:
    """Real Jacobian ``(2**n, P)`` of the prepared state by the two-point shift rule.

    Each RY occurrence is shifted separately and contributions to a shared
    slot are summed.  With ``R(t) = exp(-i t Y / 2)``,
    ``d psi = (psi(t + s) - psi(t - s)) / (4 sin(s / 2))`` holds exactly.
    """
    kb = backend or _kernels.backend
    kind, target, control, _, pidx = circuit.program()
    angle = circuit.angles(theta)
    if ((pidx >= 0) & (kind == 3)).any():
        raise ValueError("shift rule here covers RY only; controlled rotations need four terms")
    J = np.zeros((1 << circuit.n, circuit.parameter_count))
    denom = 4.0 * np.sin(shift / 2.0)
    for k in np.flatnonzero(pidx >= 0):
        cols = []
        for sgn in (1.0, -1.0):
            a = angle.copy()
            a[k] += sgn * shift
            psi = sim.zero_state(circuit.n)
            kb.run_program(psi, circuit.n, kind, target, control, a)
            cols.append(psi)
        J[:, pidx[k]] += (cols[0] - cols[1]) / denom
    return J


def jacobian(spec: AnsatzSpec, theta, shift: float = SHIFT) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (spec.parameter_count,):
        raise ValueError(f"expected {spec.parameter_count} angles, got {theta.shape}")
    return circuit_jacobian(build_ansatz(spec), theta, shift)


def rank(J, tolerance: float = 1e-10) -> int:
    """Singular values above ``tolerance`` times the largest one."""
    J = np.asarray(J, dtype=float)
    if J.size == 0:
        raise ValueError("rank of an empty matrix")
    if not tolerance > 0:
        raise ValueError("tolerance must be positive")
    s = np.linalg.svd(J, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > tolerance * s[0]))


def null_space(J, tolerance: float = 1e-10) -> np.ndarray:
    """Orthonormal basis (columns) of parameter directions that leave the state fixed."""
    _, s, vt = np.linalg.svd(J)
    cut = tolerance * s[0] if s.size and s[0] > 0 else 0.0
    r = int(np.sum(s > cut))
    return vt[r:].T.copy()


@dataclass
class ExpressivityReport:
    spec: AnsatzSpec
    theta: np.ndarray
    singular_values: np.ndarray
    rank: int
    tolerance: float = 1e-10
    null_space: np.ndarray = field(default=None, repr=False)

    @property
    def parameter_count(self) -> int:
        return self.spec.parameter_count

    @property
    def shape(self) -> tuple[int, int]:
        return (1 << self.spec.n, self.spec.parameter_count)

    @property
    def bound(self) -> int:
        return (1 << self.spec.n) - 1

    def to_dict(self) -> dict:
        return {"ansatz": self.spec.to_dict(), "P": self.parameter_count,
                "shape": list(self.shape), "rank": self.rank, "bound": self.bound,
                "tolerance": self.tolerance,
                "singular_values": [float(s) for s in self.singular_values],
                "theta": [float(t) for t in self.theta],
                "null_space": [] if self.null_space is None else self.null_space.T.tolist()}


def analyze(spec: AnsatzSpec, samples: int = 20, seed: int = 0,
            tolerance: float = 1e-10) -> ExpressivityReport:
    """Best-rank report over ``samples`` uniform(-pi, pi) evaluation points."""
    rng = np.random.default_rng(seed)
    circuit = build_ansatz(spec)
    best = None
    for _ in range(max(samples, 1)):
        theta = rng.uniform(-np.pi, np.pi, spec.parameter_count)
        J = circuit_jacobian(circuit, theta)
        r = rank(J, tolerance) if J.size else 0
        if best is None or r > best[0]:
            best = (r, theta, J)
    r, theta, J = best
    s = np.linalg.svd(J, compute_uv=False) if J.size else np.zeros(0)
    ns = null_space(J, tolerance) if J.size else np.zeros((spec.parameter_count, 0))
    return ExpressivityReport(spec, theta, s, r, tolerance, ns)


@dataclass
class SweepResult:
    variant: str
    n: int
    rows: list  # (layers, rank, P, bound)
    samples: int
    seed: int
    tolerance: float

    @property
    def plateau(self) -> int:
        return max(r[1] for r in self.rows)

    @property
    def reference(self) -> int | None:
        return REFERENCE_PLATEAUS.get(self.variant) if self.n == 4 else None

    @property
    def note(self) -> str:
        ref = self.reference
        if self.variant == "adjusted" and ref is not None and self.plateau != ref:
            return AMBIGUITY_NOTE + f" Achieved plateau: {self.plateau}."
        return ""

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["layers", "rank", "P", "bound"])
        w.writerows(self.rows)
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"variant": self.variant, "n": self.n, "samples": self.samples,
                "seed": self.seed, "tolerance": self.tolerance, "plateau": self.plateau,
                "reference_plateau": self.reference, "note": self.note,
                "rows": [dict(zip(("layers", "rank", "P", "bound"), r)) for r in self.rows]}

    def write(self, path):
        Path(path).write_text(self.to_csv())


def expressivity_sweep(variant: str, n: int, L_max: int, samples: int = 20, seed: int = 0,
                       tolerance: float = 1e-10) -> SweepResult:
    """Max rank over random angles for every ``L = 0..L_max``."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown ansatz variant {variant!r}")
    rows = []
    for L in range(L_max + 1):
        spec = AnsatzSpec(variant, n, L)
        rep = analyze(spec, samples, seed + L, tolerance)
        rows.append((L, rep.rank, spec.parameter_count, rep.bound))
    return SweepResult(variant, n, rows, samples, seed, tolerance)
