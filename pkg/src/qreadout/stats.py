"""Central moments and structure functions from measured sums, plus the classical oracle.

Uncertainties propagate to first order assuming the input sums come from
independent experiments.  The mean enters every central moment, so the
moments themselves are correlated; each reported sigma is marginal.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .encoding import VelocityField


def _vs(x):
    """(value, sigma) from an Estimate-like object, a pair, or a plain number."""
    if hasattr(x, "value"):
        return float(x.value), float(getattr(x, "sigma", 0.0))
    if isinstance(x, tuple):
        return float(x[0]), float(x[1])
    return float(x), 0.0


@dataclass(frozen=True)
class Value:
    value: float
    sigma: float = 0.0


@dataclass(frozen=True)
class MomentSet:
    mean: Value
    m2: Value
    m3: Value
    m4: Value

    def as_tuple(self):
        return (self.mean.value, self.m2.value, self.m3.value, self.m4.value)

    def to_dict(self):
        return {k: {"value": v.value, "sigma": v.sigma}
                for k, v in (("mean", self.mean), ("m2", self.m2), ("m3", self.m3), ("m4", self.m4))}


@dataclass
class StructureFunctionCurve:
    order: int
    r: np.ndarray
    values: np.ndarray
    sigmas: np.ndarray = None
    t: float | None = None

    def __post_init__(self):
        self.r = np.asarray(self.r, dtype=int)
        self.values = np.asarray(self.values, dtype=float)
        self.sigmas = (np.zeros_like(self.values) if self.sigmas is None
                       else np.asarray(self.sigmas, dtype=float))


@dataclass(frozen=True)
class ConsistencyScore:
    estimate: float
    reference: float
    uncertainty: float
    n_sigma: float


def central_moments(mean, sum_u2, sum_u3, sum_u4, N) -> MomentSet:
    if N <= 0:
        raise ValueError("N must be positive")
    mu, smu = _vs(mean)
    s2, ss2 = _vs(sum_u2)
    s3, ss3 = _vs(sum_u3)
    s4, ss4 = _vs(sum_u4)
    r2, r3, r4 = s2 / N, s3 / N, s4 / N
    e2, e3, e4 = ss2 / N, ss3 / N, ss4 / N

    m2 = r2 - mu**2
    m3 = r3 - 3 * mu * r2 + 2 * mu**3
    m4 = r4 - 4 * mu * r3 + 6 * mu**2 * r2 - 3 * mu**4

    d2 = np.hypot(-2 * mu * smu, e2)
    d3 = np.sqrt(((-3 * r2 + 6 * mu**2) * smu) ** 2 + (3 * mu * e2) ** 2 + e3**2)
    d4 = np.sqrt(((-4 * r3 + 12 * mu * r2 - 12 * mu**3) * smu) ** 2
                 + (6 * mu**2 * e2) ** 2 + (4 * mu * e3) ** 2 + e4**2)
    return MomentSet(Value(mu, smu), Value(m2, float(d2)), Value(m3, float(d3)), Value(m4, float(d4)))


def structure_function(k, r, components, N) -> Value:
    """S_k(r) from field-scale sums.

    ``components`` maps ``"sum_u2"``, ``"sum_u4"`` and ``(m, l)`` pairs
    (shifted sums at this ``r``) to estimates or numbers.
    """
    if r == 0:
        return Value(0.0, 0.0)
    try:
        if k == 2:
            terms = [(2.0, components["sum_u2"]), (-2.0, components[(1, 1)])]
        elif k == 4:
            terms = [(2.0, components["sum_u4"]), (-4.0, components[(3, 1)]),
                     (-4.0, components[(1, 3)]), (6.0, components[(2, 2)])]
        else:
            raise ValueError(f"structure-function order {k} not supported")
    except KeyError as exc:
        raise ValueError(f"missing component {exc.args[0]!r} for S_{k}") from None
    vals = [(c, *_vs(x)) for c, x in terms]
    value = sum(c * v for c, v, _ in vals) / N
    sigma = np.sqrt(sum((c * s) ** 2 for c, _, s in vals)) / N
    return Value(float(value), float(sigma))


def shift_range(N, full=False):
    return np.arange(N if full else N // 2 + 1)


def classical_oracle(field: VelocityField | np.ndarray, full=False):
    """Moments and S_2 / S_4 straight from the definitions (no decomposition)."""
    u = field.values if isinstance(field, VelocityField) else np.asarray(field, dtype=float)
    N = u.shape[0]
    mu = u.mean()
    d = u - mu
    moments = MomentSet(Value(mu), Value(np.mean(d**2)), Value(np.mean(d**3)), Value(np.mean(d**4)))
    rs = shift_range(N, full)
    curves = {}
    for k in (2, 4):
        vals = [np.mean(np.abs(np.roll(u, -r) - u) ** k) for r in rs]
        curves[k] = StructureFunctionCurve(k, rs, vals)
    return moments, curves


def time_average(curves) -> StructureFunctionCurve:
    curves = list(curves)
    if not curves:
        raise ValueError("no curves to average")
    ref = curves[0]
    for c in curves[1:]:
        if c.order != ref.order or not np.array_equal(c.r, ref.r):
            raise ValueError("curves have inconsistent orders or r-grids")
    vals = np.mean([c.values for c in curves], axis=0)
    sig = np.sqrt(np.sum([c.sigmas**2 for c in curves], axis=0)) / len(curves)
    return StructureFunctionCurve(ref.order, ref.r, vals, sig, None)


def n_sigma(estimate, reference, uncertainty) -> ConsistencyScore:
    if not uncertainty > 0:
        raise ValueError("uncertainty must be positive")
    return ConsistencyScore(float(estimate), float(reference), float(uncertainty),
                            abs(float(estimate) - float(reference)) / float(uncertainty))


@dataclass
class StatReport:
    """All readout products for one field."""

    moments: MomentSet
    curves: dict
    estimates: list = field(default_factory=list)
    norm: float = 1.0
    N: int = 0


def assemble(estimates, norm, N, shifts=None) -> StatReport:
    """Turn a list of estimate dicts/objects (batch response) into moments and curves."""
    from .estimators import estimate_sum_u2

    est = [e if hasattr(e, "value") else _EstimateView(e) for e in estimates]
    by = {}
    for e in est:
        key = (e.quantity,) if e.quantity != "shifted" else ("shifted", e.m, e.l, e.r)
        by[key] = e
    s2 = estimate_sum_u2(norm)
    moments = central_moments(by[("mean",)], s2, by[("sum_u3",)], by[("sum_u4",)], N)
    rs = sorted({k[3] for k in by if k[0] == "shifted"}) if shifts is None else list(shifts)
    rs = [0] + [r for r in rs if r != 0]
    curves = {}
    for k in (2, 4):
        vals, sigs = [], []
        for r in rs:
            comp = {"sum_u2": s2, "sum_u4": by[("sum_u4",)]}
            if r:
                for m, l in ((1, 1), (3, 1), (1, 3), (2, 2)):
                    comp[(m, l)] = by[("shifted", m, l, r)]
            v = structure_function(k, r, comp, N)
            vals.append(v.value)
            sigs.append(v.sigma)
        curves[k] = StructureFunctionCurve(k, rs, vals, sigs)
    return StatReport(moments, curves, est, norm, N)


class _EstimateView:
    def __init__(self, d):
        self.__dict__.update({"m": None, "l": None, "r": None, "sigma": 0.0})
        self.__dict__.update(d)


def estimates_csv(estimates) -> str:
    """One row per estimate: quantity, m, l, r, value, sigma, mode, shots, seed."""
    cols = ("quantity", "m", "l", "r", "value", "sigma", "mode", "shots", "seed")
    lines = [",".join(cols)]
    for e in estimates:
        d = e.to_dict() if hasattr(e, "to_dict") else dict(e)
        lines.append(",".join("" if d.get(c) is None else
                              repr(d[c]) if isinstance(d[c], float) else str(d[c]) for c in cols))
    return "\n".join(lines) + "\n"
