"""Circuit families: ansatze, Hadamard tests, the parallel O3 circuit, twin copies.

All builders return parameter-slot templates when ``theta`` is None and bound
circuits otherwise.  Slot order is the order in which rotations appear in the
plain ansatz, so one parameter vector drives every derived circuit.

Adjusted ansatz (n qubits, L layers)::

    H on all qubits
    layer l = 1..L:  odd l -> CNOT(0,1), CNOT(2,3), ...   even l -> CNOT(1,2), CNOT(3,4), ...
                     then RY on qubits 1, 3, 5, ...
    RY on all qubits

Brick-wall ansatz: RY on all qubits, then L layers of the same CNOT bricks each
followed by RY on all qubits.
"""
from __future__ import annotations

from dataclasses import dataclass

from .observables import Observable, ancilla_x, o3
from .sim import Circuit, Gate

VARIANTS = ("adjusted", "brickwall")
CONTROL_MODES = ("single_ancilla", "cat_state")


@dataclass(frozen=True)
class AnsatzSpec:
    variant: str = "adjusted"
    n: int = 4
    L: int = 8

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown ansatz variant {self.variant!r}")
        if self.n < 2 or self.n % 2:
            raise ValueError("ansatz needs an even qubit count >= 2")
        if self.L < 0:
            raise ValueError("layer count must be non-negative")

    @property
    def parameter_count(self) -> int:
        if self.variant == "adjusted":
            return self.L * (self.n // 2) + self.n
        return self.n + self.L * self.n

    def to_dict(self) -> dict:
        return {"variant": self.variant, "n": self.n, "L": self.L}

    @classmethod
    def from_dict(cls, d) -> "AnsatzSpec":
        return cls(d["variant"], int(d["n"]), int(d["L"]))


@dataclass(frozen=True)
class HadamardTestSpec:
    ansatz: AnsatzSpec = AnsatzSpec()
    control_mode: str = "single_ancilla"

    def __post_init__(self):
        if self.control_mode not in CONTROL_MODES:
            raise ValueError(f"unknown control mode {self.control_mode!r}")
        if self.ansatz.variant != "adjusted":
            raise ValueError("Hadamard-test switching needs the adjusted ansatz "
                             "(all angles zero must prepare the uniform state)")

    @property
    def ancilla_count(self) -> int:
        return 1 if self.control_mode == "single_ancilla" else self.ansatz.n // 2


@dataclass(frozen=True)
class MeasurementCircuit:
    """A circuit with its readout observable and the final wire layout.

    ``system`` lists, per logical ansatz qubit, the wire holding it at the end
    (SWAPs in the cat-state layout move qubits onto ancilla wires).
    """

    circuit: Circuit
    observable: Observable
    system: tuple[int, ...]
    ancillas: tuple[int, ...] = ()


def brick_pairs(n: int, layer: int):
    """CNOT (control, target) pairs of 1-based ``layer``."""
    start = 0 if layer % 2 else 1
    return [(q, q + 1) for q in range(start, n - 1, 2)]


def _ops(spec: AnsatzSpec):
    """Abstract gate stream: ('H', q) | ('CNOT', c, t) | ('RY', q, slot, final)."""
    n, slot = spec.n, 0
    if spec.variant == "adjusted":
        for q in range(n):
            yield ("H", q)
        rotated = range(1, n, 2)
    else:
        for q in range(n):
            yield ("RY", q, slot, False)
            slot += 1
        rotated = range(n)
    for layer in range(1, spec.L + 1):
        for c, t in brick_pairs(n, layer):
            yield ("CNOT", c, t)
        for q in rotated:
            yield ("RY", q, slot, False)
            slot += 1
    if spec.variant == "adjusted":
        for q in range(n):
            yield ("RY", q, slot, True)
            slot += 1


def _finish(n_wires, gates, spec, theta):
    c = Circuit(n_wires, tuple(gates), spec.parameter_count)
    return c if theta is None else c.bind(theta)


def _check_theta(spec, theta):
    if theta is not None and len(theta) != spec.parameter_count:
        raise ValueError(f"{spec.variant} ansatz with n={spec.n}, L={spec.L} takes "
                         f"{spec.parameter_count} parameters, got {len(theta)}")


def _plain_gates(spec, wires):
    out = []
    for op in _ops(spec):
        if op[0] == "H":
            out.append(Gate("H", wires[op[1]]))
        elif op[0] == "CNOT":
            out.append(Gate("CNOT", wires[op[2]], wires[op[1]]))
        else:
            out.append(Gate("RY", wires[op[1]], param=op[2]))
    return out


def build_ansatz(spec: AnsatzSpec, theta=None) -> Circuit:
    _check_theta(spec, theta)
    return _finish(spec.n, _plain_gates(spec, range(spec.n)), spec, theta)


def _controlled_gates(hspec: HadamardTestSpec, wires, anc):
    """Hadamard-test gate list on system ``wires`` with ancilla wires ``anc``.

    Returns ``(gates, final_system_wires, final_ancilla_wires)``.
    """
    spec = hspec.ansatz
    n = spec.n
    gates = []
    if hspec.control_mode == "single_ancilla":
        gates.append(Gate("H", anc[0]))
        for op in _ops(spec):
            if op[0] == "H":
                gates.append(Gate("H", wires[op[1]]))
            elif op[0] == "CNOT":
                gates.append(Gate("CNOT", wires[op[2]], wires[op[1]]))
            else:
                gates.append(Gate("CRY", wires[op[1]], anc[0], param=op[2]))
        return gates, tuple(wires), (anc[0],)

    # cat state: ancilla k sits next to system qubit 2k+1
    gates.append(Gate("H", anc[0]))
    for k in range(1, len(anc)):
        gates.append(Gate("CNOT", anc[k], anc[k - 1]))
    system = list(wires)
    readout = list(anc)
    swapped = False
    for op in _ops(spec):
        if op[0] == "H":
            gates.append(Gate("H", wires[op[1]]))
        elif op[0] == "CNOT":
            gates.append(Gate("CNOT", wires[op[2]], wires[op[1]]))
        else:
            q, slot, final = op[1], op[2], op[3]
            if final and not swapped:
                for k in range(n // 2):
                    gates.append(Gate("SWAP", wires[2 * k + 1], anc[k]))
                    system[2 * k + 1] = anc[k]
                    readout[k] = wires[2 * k + 1]
                swapped = True
            k = q // 2
            ctrl = readout[k] if swapped else anc[k]
            gates.append(Gate("CRY", system[q], ctrl, param=slot))
    return gates, tuple(system), tuple(readout)


def build_hadamard_test(hspec: HadamardTestSpec, theta=None) -> MeasurementCircuit:
    """Ancilla-controlled ansatz: <X...X> on the ancillas = <uniform|phi(theta)>."""
    spec = hspec.ansatz
    _check_theta(spec, theta)
    n = spec.n
    anc = tuple(range(n, n + hspec.ancilla_count))
    gates, system, readout = _controlled_gates(hspec, range(n), anc)
    width = n + len(anc)
    return MeasurementCircuit(_finish(width, gates, spec, theta),
                              ancilla_x(width, readout), system, readout)


def build_o3_circuit(hspec: HadamardTestSpec, theta=None) -> MeasurementCircuit:
    """Hadamard test on wires 0..n-1 (+ ancillas after 2n) beside a plain copy on n..2n-1."""
    spec = hspec.ansatz
    _check_theta(spec, theta)
    n = spec.n
    anc = tuple(range(2 * n, 2 * n + hspec.ancilla_count))
    gates, system, readout = _controlled_gates(hspec, range(n), anc)
    gates += _plain_gates(spec, range(n, 2 * n))
    width = 2 * n + len(anc)
    both = system + tuple(range(n, 2 * n))
    obs = o3(n, readout, both, width)
    return MeasurementCircuit(_finish(width, gates, spec, theta), obs, both, readout)


def build_twin_circuit(spec: AnsatzSpec, theta=None) -> Circuit:
    """Two disjoint copies sharing parameters; output is phi (x) phi."""
    _check_theta(spec, theta)
    n = spec.n
    gates = _plain_gates(spec, range(n)) + _plain_gates(spec, range(n, 2 * n))
    return _finish(2 * n, gates, spec, theta)


def build_direct_mean_circuit(spec: AnsatzSpec, theta=None) -> Circuit:
    """Ansatz followed by H on every qubit; P(|0...0>) = <uniform|phi>^2."""
    _check_theta(spec, theta)
    gates = _plain_gates(spec, range(spec.n)) + [Gate("H", q) for q in range(spec.n)]
    return _finish(spec.n, gates, spec, theta)
