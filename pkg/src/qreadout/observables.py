"""Structured Hermitian observables and their exact outcome distributions.

An observable is ``X^{(x)k} (x) A (x) I`` where the X factor acts on
``x_wires`` (possibly none), ``A`` is a sparse real symmetric operator on the
``system`` wires given as diagonal entries plus symmetrised transitions
``w (|a><b| + |b><a|)``, and the identity covers every remaining wire.  All
basis indices inside ``A`` are over the system wires in the listed order,
first wire most significant.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components


@dataclass(frozen=True)
class DiagonalTerm:
    index: int
    weight: float = 1.0


@dataclass(frozen=True)
class TransitionTerm:
    a: int
    b: int
    weight: float = 0.5


@dataclass(frozen=True)
class Observable:
    n_qubits: int
    system: tuple[int, ...]
    diagonal: tuple[DiagonalTerm, ...] = ()
    transitions: tuple[TransitionTerm, ...] = ()
    x_wires: tuple[int, ...] = ()
    identity: bool = False

    def __post_init__(self):
        wires = self.system + self.x_wires
        if len(set(wires)) != len(wires):
            raise ValueError("system and X wires must be distinct")
        if wires and (max(wires) >= self.n_qubits or min(wires) < 0):
            raise ValueError("observable wire out of range")
        dim = 1 << len(self.system)
        for t in self.diagonal:
            if not 0 <= t.index < dim:
                raise ValueError(f"diagonal index {t.index} out of range")
        for t in self.transitions:
            if not (0 <= t.a < dim and 0 <= t.b < dim):
                raise ValueError(f"transition ({t.a}, {t.b}) out of range")
        if self.identity and (self.diagonal or self.transitions):
            raise ValueError("identity part cannot also carry terms")

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    def with_x(self, wires, n_qubits=None, system=None) -> "Observable":
        """Embed into a larger register and attach an X factor on ``wires``."""
        return Observable(n_qubits or self.n_qubits, tuple(system or self.system),
                          self.diagonal, self.transitions, tuple(wires), self.identity)

    def _arranged(self, state):
        state = np.asarray(state, dtype=float)
        if state.shape[0] != self.dim:
            raise ValueError(f"state dimension {state.shape[0]} != observable dimension {self.dim}")
        rest = [q for q in range(self.n_qubits) if q not in self.system and q not in self.x_wires]
        order = list(self.x_wires) + list(self.system) + rest
        t = state.reshape((2,) * self.n_qubits).transpose(order)
        return t.reshape(1 << len(self.x_wires), 1 << len(self.system), 1 << len(rest))

    def _apply_system(self, arr):
        if self.identity:
            return arr
        out = np.zeros_like(arr)
        if self.diagonal:
            idx = np.array([t.index for t in self.diagonal])
            w = np.array([t.weight for t in self.diagonal])
            np.add.at(out, (slice(None), idx), w[None, :, None] * arr[:, idx, :])
        if self.transitions:
            a = np.array([t.a for t in self.transitions])
            b = np.array([t.b for t in self.transitions])
            w = np.array([t.weight for t in self.transitions])[None, :, None]
            np.add.at(out, (slice(None), a), w * arr[:, b, :])
            np.add.at(out, (slice(None), b), w * arr[:, a, :])
        return out

    def expectation(self, state) -> float:
        arr = self._arranged(state)
        # X on every x-wire maps ancilla index a -> (2^k - 1) - a
        return float(np.sum(arr[::-1] * self._apply_system(arr)))

    def system_matrix(self) -> np.ndarray:
        d = 1 << len(self.system)
        if self.identity:
            return np.eye(d)
        m = np.zeros((d, d))
        for t in self.diagonal:
            m[t.index, t.index] += t.weight
        for t in self.transitions:
            m[t.a, t.b] += t.weight
            m[t.b, t.a] += t.weight
        return m

    def to_dense(self) -> np.ndarray:
        """Full matrix (small registers only; used by tests)."""
        if self.n_qubits > 12:
            raise ValueError("dense form limited to 12 qubits")
        rest = [q for q in range(self.n_qubits) if q not in self.system and q not in self.x_wires]
        back = np.argsort(list(self.x_wires) + list(self.system) + rest)
        cols = []
        for e in np.eye(self.dim):
            out = self._apply_system(self._arranged(e))[::-1]
            cols.append(out.reshape((2,) * self.n_qubits).transpose(back).reshape(-1))
        return np.array(cols).T

    def is_hermitian(self) -> bool:
        # transitions are stored symmetrised and weights are real
        return all(np.isreal(t.weight) for t in self.diagonal + self.transitions)

    def spectrum(self):
        """Eigen-decomposition of the system part as ``(eigenvalues, blocks)``.

        ``blocks`` is a list of ``(indices, vectors)`` with ``vectors[:, i]`` the
        eigenvector for the i-th eigenvalue of that block, supported on
        ``indices``.  Isolated diagonal entries and disjoint transition pairs
        are handled in closed form; longer connected chains (shifted single-
        copy transitions share indices) fall back to a small dense ``eigh``.
        Indices outside every block carry eigenvalue 0 (or 1 for identity).
        """
        if self.identity:
            return None
        d = 1 << len(self.system)
        rows, cols = [], []
        for t in self.diagonal:
            rows.append(t.index)
            cols.append(t.index)
        for t in self.transitions:
            rows += [t.a, t.b]
            cols += [t.b, t.a]
        support = np.unique(rows)
        pos = {int(i): k for k, i in enumerate(support)}
        r = np.array([pos[i] for i in rows])
        c = np.array([pos[i] for i in cols])
        graph = coo_matrix((np.ones(len(r)), (r, c)), shape=(len(support),) * 2)
        ncomp, labels = connected_components(graph, directed=False)
        m_full = None
        blocks = []
        for comp in range(ncomp):
            idx = support[labels == comp]
            if len(idx) == 1:
                w = sum(t.weight for t in self.diagonal if t.index == idx[0])
                w += 2 * sum(t.weight for t in self.transitions if t.a == t.b == idx[0])
                blocks.append((idx, np.array([w]), np.ones((1, 1))))
                continue
            if m_full is None:
                m_full = _SparseSym(self, d)
            sub = m_full.block(idx)
            if len(idx) == 2 and sub[0, 0] == 0 and sub[1, 1] == 0:
                w = sub[0, 1]
                vecs = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)
                blocks.append((idx, np.array([w, -w]), vecs))
            else:
                vals, vecs = np.linalg.eigh(sub)
                blocks.append((idx, vals, vecs))
        return blocks

    def distribution(self, state):
        """Exact outcome distribution ``(values, probabilities)`` of one measurement."""
        arr = self._arranged(state)
        k = len(self.x_wires)
        if k:
            hk = np.ones((1, 1))
            h = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)
            for _ in range(k):
                hk = np.kron(hk, h)
            arr = np.tensordot(hk, arr, axes=(1, 0))
            parity = np.array([1.0 - 2.0 * (bin(a).count("1") % 2) for a in range(1 << k)])
        else:
            parity = np.ones(1)
        values, probs = [], []
        if self.identity:
            weight = np.sum(arr**2, axis=(1, 2))
            values.extend(parity)
            probs.extend(weight)
        else:
            covered = np.zeros(arr.shape[1], bool)
            for idx, vals, vecs in self.spectrum():
                covered[idx] = True
                amp = np.tensordot(arr[:, idx, :], vecs, axes=(1, 0))  # (anc, rest, eig)
                p = np.sum(amp**2, axis=1)  # (anc, eig)
                values.extend((parity[:, None] * vals[None, :]).ravel())
                probs.extend(p.ravel())
            rest = np.sum(arr[:, ~covered, :] ** 2)
            values.append(0.0)
            probs.append(rest)
        values = np.asarray(values)
        probs = np.clip(np.asarray(probs), 0.0, None)
        key = np.round(values, 12)
        uniq, inv = np.unique(key, return_inverse=True)
        merged = np.bincount(inv, weights=probs, minlength=len(uniq))
        return uniq, merged / merged.sum()


class _SparseSym:
    def __init__(self, obs, d):
        self.entries = {}
        for t in obs.diagonal:
            self._add(t.index, t.index, t.weight)
        for t in obs.transitions:
            self._add(t.a, t.b, t.weight)
            self._add(t.b, t.a, t.weight)

    def _add(self, i, j, w):
        self.entries[(i, j)] = self.entries.get((i, j), 0.0) + w

    def block(self, idx):
        pos = {int(i): k for k, i in enumerate(idx)}
        m = np.zeros((len(idx), len(idx)))
        for (i, j), w in self.entries.items():
            if i in pos and j in pos:
                m[pos[i], pos[j]] += w
        return m


# ------------------------------------------------------------------ builders

def ancilla_x(n_qubits: int, wires) -> Observable:
    """Product of X on ``wires``, identity elsewhere (Hadamard-test readout)."""
    return Observable(n_qubits, (), x_wires=tuple(wires), identity=True)


def collision(n: int, system=None, n_qubits=None) -> Observable:
    """Sum_j |jj><jj| on two n-qubit copies."""
    system = tuple(system) if system is not None else tuple(range(2 * n))
    size = 1 << n
    diag = tuple(DiagonalTerm(j * size + j) for j in range(size))
    return Observable(n_qubits or len(system), system, diag)


def shifted(m: int, l: int, r: int, n: int, system=None, n_qubits=None) -> Observable:
    """Observable whose expectation on the (twin) state is sum_i u_i^m u_{i+r}^l.

    Indices wrap periodically.  ``(1, 1)`` acts on one copy, the others on
    two copies ``|a, b>`` with index ``a * N + b``.
    """
    size = 1 << n
    if not 0 <= r < size:
        raise ValueError(f"shift {r} out of range for N = {size}")
    js = range(size)
    if (m, l) == (1, 1):
        terms = tuple(TransitionTerm(j, (j + r) % size) for j in js)
        nsys = n
        diag = ()
    elif (m, l) in ((3, 1), (1, 3)):
        if (m, l) == (3, 1):
            pairs = [(j * size + j, j * size + (j + r) % size) for j in js]
        else:
            pairs = [(j * size + (j + r) % size, ((j + r) % size) * size + (j + r) % size) for j in js]
        terms = tuple(TransitionTerm(a, b) for a, b in pairs)
        nsys = 2 * n
        diag = ()
    elif (m, l) == (2, 2):
        terms = ()
        diag = tuple(DiagonalTerm(j * size + (j + r) % size) for j in js)
        nsys = 2 * n
    else:
        raise ValueError(f"unsupported exponent pair ({m}, {l})")
    system = tuple(system) if system is not None else tuple(range(nsys))
    return Observable(n_qubits or len(system), system, diag, terms)


def o3(n: int, ancilla_wires, system, n_qubits) -> Observable:
    """X on the ancilla wires times sum_i |ii><ii| on both system blocks."""
    return collision(n, system, n_qubits).with_x(ancilla_wires)
