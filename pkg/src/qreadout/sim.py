"""Real-amplitude statevector simulation of H / RY / CNOT / CRY / SWAP circuits.

States are plain ``float64`` numpy arrays of length ``2**n``.  Every gate in the
alphabet is real orthogonal, so amplitudes never leave the reals.  Qubit 0 is
the most significant bit of a basis-state index: on two qubits ``|10>`` is
index 2.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import _kernels

KINDS = ("H", "RY", "CNOT", "CRY", "SWAP")
_CODE = {k: i for i, k in enumerate(KINDS)}
_TWO_QUBIT = {"CNOT", "CRY", "SWAP"}


class UnboundParameterError(ValueError):
    pass


@dataclass(frozen=True)
class Gate:
    """One gate.  ``param`` names a slot in a circuit parameter vector.

    A parameterised gate either carries a concrete ``theta`` or a ``param``
    slot index that is filled at bind/run time.
    """

    kind: str
    target: int
    control: int | None = None
    theta: float | None = None
    param: int | None = None

    def __post_init__(self):
        if self.kind not in _CODE:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        needs_control = self.kind in _TWO_QUBIT
        if needs_control != (self.control is not None):
            raise ValueError(f"{self.kind} gate: control given iff kind is two-qubit")
        rotation = self.kind in ("RY", "CRY")
        if not rotation and (self.theta is not None or self.param is not None):
            raise ValueError(f"{self.kind} gate takes no angle")
        if self.theta is not None and not np.isfinite(self.theta):
            raise ValueError("gate angle must be finite")
        if needs_control and self.control == self.target:
            raise ValueError("control and target must differ")

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.target,) if self.control is None else (self.control, self.target)

    @property
    def is_two_qubit(self) -> bool:
        return self.kind in _TWO_QUBIT

    @property
    def bound(self) -> bool:
        return self.kind not in ("RY", "CRY") or self.theta is not None

    def inverse(self) -> "Gate":
        if self.kind in ("RY", "CRY"):
            if self.theta is None:
                raise UnboundParameterError("cannot invert an unbound rotation")
            return replace(self, theta=-self.theta, param=None)
        return self

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "target": self.target}
        if self.control is not None:
            d["control"] = self.control
        if self.theta is not None:
            d["theta"] = float(self.theta)
        if self.param is not None:
            d["param"] = self.param
        return d


@dataclass(frozen=True)
class Circuit:
    n: int
    gates: tuple[Gate, ...] = ()
    parameter_count: int = 0
    _program: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if self.n < 0:
            raise ValueError("negative qubit count")
        for g in self.gates:
            if max(g.qubits) >= self.n or min(g.qubits) < 0:
                raise ValueError(f"gate {g} out of range for {self.n} qubits")
            if g.param is not None and not 0 <= g.param < self.parameter_count:
                raise ValueError(f"parameter slot {g.param} out of range")

    def __add__(self, other: "Circuit") -> "Circuit":
        if other.n != self.n:
            raise ValueError("qubit counts differ")
        return Circuit(self.n, self.gates + other.gates,
                       max(self.parameter_count, other.parameter_count))

    def __len__(self):
        return len(self.gates)

    def bind(self, theta: Sequence[float]) -> "Circuit":
        theta = _check_params(theta, self.parameter_count)
        gates = tuple(
            replace(g, theta=float(theta[g.param]), param=None) if g.param is not None else g
            for g in self.gates
        )
        return Circuit(self.n, gates)

    def program(self):
        """Flat int arrays plus the slot index per gate (cached)."""
        if not self._program:
            m = len(self.gates)
            kind = np.empty(m, np.int64)
            target = np.empty(m, np.int64)
            control = np.full(m, -1, np.int64)
            angle = np.zeros(m)
            pidx = np.full(m, -1, np.int64)
            for k, g in enumerate(self.gates):
                kind[k] = _CODE[g.kind]
                target[k] = g.target
                if g.control is not None:
                    control[k] = g.control
                if g.param is not None:
                    pidx[k] = g.param
                elif g.theta is not None:
                    angle[k] = g.theta
                elif g.kind in ("RY", "CRY"):
                    pidx[k] = -2  # unbound and no slot
            self._program.update(kind=kind, target=target, control=control,
                                 angle=angle, pidx=pidx)
        p = self._program
        return p["kind"], p["target"], p["control"], p["angle"], p["pidx"]

    def angles(self, theta=None) -> np.ndarray:
        """Per-gate angle array with slots filled from ``theta``."""
        _, _, _, angle, pidx = self.program()
        if (pidx == -2).any():
            raise UnboundParameterError("circuit has a rotation without angle or slot")
        slots = pidx >= 0
        if slots.any():
            if theta is None:
                raise UnboundParameterError("circuit has free parameter slots")
            theta = _check_params(theta, self.parameter_count)
            angle = angle.copy()
            angle[slots] = theta[pidx[slots]]
        return angle

    def to_json(self) -> str:
        doc = {"n": self.n, "gates": [g.to_dict() for g in self.gates]}
        if self.parameter_count:
            doc["parameter_count"] = self.parameter_count
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str | dict) -> "Circuit":
        doc = json.loads(text) if isinstance(text, str) else text
        gates = [Gate(g["kind"], int(g["target"]), g.get("control"),
                      g.get("theta"), g.get("param")) for g in doc["gates"]]
        return cls(int(doc["n"]), tuple(gates), int(doc.get("parameter_count", 0)))


def _check_params(theta, count):
    theta = np.asarray(theta, dtype=float).ravel()
    if theta.shape[0] != count:
        raise ValueError(f"expected {count} parameters, got {theta.shape[0]}")
    return theta


def zero_state(n: int) -> np.ndarray:
    psi = np.zeros(1 << n)
    psi[0] = 1.0
    return psi


def uniform_state(n: int) -> np.ndarray:
    return np.full(1 << n, 1.0 / np.sqrt(1 << n))


def num_qubits(state: np.ndarray) -> int:
    dim = state.shape[0]
    n = dim.bit_length() - 1
    if dim < 2 or 1 << n != dim:
        raise ValueError(f"state length {dim} is not a power of two >= 2")
    return n


def apply_gate(state: np.ndarray, gate: Gate, backend=None) -> np.ndarray:
    """Return a new state with ``gate`` applied."""
    n = num_qubits(state)
    if max(gate.qubits) >= n:
        raise ValueError(f"gate {gate} out of range for {n} qubits")
    if not gate.bound:
        raise UnboundParameterError(f"{gate.kind} gate has no angle")
    kb = backend or _kernels.backend
    out = np.array(state, dtype=float, copy=True)
    kb.apply_one(out, n, _CODE[gate.kind], gate.target,
                 -1 if gate.control is None else gate.control,
                 0.0 if gate.theta is None else float(gate.theta))
    return out


def run(circuit: Circuit, initial: np.ndarray | None = None, theta=None,
        backend=None) -> np.ndarray:
    """Apply every gate of ``circuit`` in order.

    ``theta`` fills parameter slots; without it the circuit must be fully bound.
    """
    angle = circuit.angles(theta)
    if initial is None:
        psi = zero_state(circuit.n)
    else:
        psi = np.array(initial, dtype=float, copy=True)
        if psi.shape[0] != 1 << circuit.n:
            raise ValueError("initial state does not match the qubit count")
    kind, target, control, _, _ = circuit.program()
    (backend or _kernels.backend).run_program(psi, circuit.n, kind, target, control, angle)
    return psi


def overlap_gradient(circuit: Circuit, theta, bra: np.ndarray, backend=None):
    """Return ``(<bra|psi>, d<bra|psi>/dtheta)`` for ``psi = run(circuit, theta=theta)``.

    Exact reverse-mode sweep through the orthogonal gates: one forward and one
    backward pass regardless of the parameter count.
    """
    kb = backend or _kernels.backend
    angle = circuit.angles(theta)
    kind, target, control, _, pidx = circuit.program()
    psi = zero_state(circuit.n)
    kb.run_program(psi, circuit.n, kind, target, control, angle)
    bra = np.ascontiguousarray(bra, dtype=float)
    grad = kb.overlap_gradient(psi, bra, circuit.n, kind, target, control, angle,
                               pidx, circuit.parameter_count)
    return float(bra @ psi), grad


def expectation(state: np.ndarray, obs) -> float:
    """<psi|O|psi> for a structured observable."""
    return obs.expectation(state)


@dataclass(frozen=True)
class CircuitMetrics:
    qubit_count: int
    two_qubit_gate_count: int
    two_qubit_layer_count: int


def _decompose(g: Gate):
    if g.kind == "CRY":
        half = None if g.theta is None else g.theta / 2
        return [Gate("RY", g.target, theta=half), Gate("CNOT", g.target, g.control),
                Gate("RY", g.target, theta=None if half is None else -half),
                Gate("CNOT", g.target, g.control)]
    if g.kind == "SWAP":
        a, b = g.control, g.target
        return [Gate("CNOT", b, a), Gate("CNOT", a, b), Gate("CNOT", b, a)]
    return [g]


def metrics(circuit: Circuit, decomposed: bool = False) -> CircuitMetrics:
    """Two-qubit gate count and greedy earliest-fit two-qubit layer count.

    In ``decomposed`` mode CRY counts as 2 CNOTs and SWAP as 3 CNOTs.
    Single-qubit gates do not occupy layers.
    """
    gates = circuit.gates
    if decomposed:
        gates = [d for g in gates for d in _decompose(g)]
    front = [0] * circuit.n
    count = 0
    depth = 0
    for g in gates:
        if not g.is_two_qubit:
            continue
        count += 1
        layer = max(front[q] for q in g.qubits) + 1
        for q in g.qubits:
            front[q] = layer
        depth = max(depth, layer)
    return CircuitMetrics(circuit.n, count, depth)


def layers(circuit: Circuit) -> list[list[Gate]]:
    """The two-qubit layers produced by the same greedy schedule as ``metrics``."""
    front = [0] * circuit.n
    out: list[list[Gate]] = []
    for g in circuit.gates:
        if not g.is_two_qubit:
            continue
        layer = max(front[q] for q in g.qubits) + 1
        for q in g.qubits:
            front[q] = layer
        if layer > len(out):
            out.append([])
        out[layer - 1].append(g)
    return out
