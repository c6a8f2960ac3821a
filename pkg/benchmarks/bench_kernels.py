"""Time the numba kernels against their numpy twins.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Reports the best wall time per kernel and backend plus the max abs difference
between backends.  The first numba call compiles (or loads the on-disk cache),
so every kernel is warmed up once before timing.
"""
import argparse
import time

import numpy as np

from qreadout import _kernels, burgers, sim
from qreadout.circuits import AnsatzSpec, HadamardTestSpec, build_ansatz, build_o3_circuit


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def cases(rng):
    spec = AnsatzSpec("adjusted", 4, 12)
    theta = rng.uniform(-np.pi, np.pi, spec.parameter_count)
    o3c = build_o3_circuit(HadamardTestSpec(spec, "cat_state"), theta).circuit
    yield "run o3 circuit (10 qubits)", lambda kb: sim.run(o3c, backend=kb)

    spec8 = AnsatzSpec("adjusted", 8, 24)
    c8 = build_ansatz(spec8)
    th8 = rng.uniform(-np.pi, np.pi, spec8.parameter_count)
    target = rng.normal(size=256)
    yield "adjoint gradient (n=8, P=104)", lambda kb: sim.overlap_gradient(c8, th8, target, kb)[1]

    cfg = burgers.BurgersConfig(steps=5000)
    rng_f = np.random.default_rng(0)
    f = burgers.physical_forcing(cfg, burgers.sample_forcing(cfg, rng_f, cfg.steps))
    d1, d2, filt = burgers.spectral_operators(cfg)
    yield "burgers 5000 RK4 steps", lambda kb: kb.burgers_integrate(
        np.zeros(cfg.N), d1, d2, cfg.nu, f, cfg.dt, 10, filt, True)[0]


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    nb, npb = _kernels.get_backend("numba"), _kernels.get_backend("numpy")
    print(f"{'kernel':34s}{'numpy [ms]':>12s}{'numba [ms]':>12s}{'speedup':>10s}{'max diff':>12s}")
    for name, fn in cases(np.random.default_rng(1)):
        t_np, a = best_of(lambda: fn(npb), args.repeat)
        t_nb, b = best_of(lambda: fn(nb), args.repeat)
        diff = float(np.max(np.abs(np.asarray(a) - np.asarray(b))))
        print(f"{name:34s}{1e3 * t_np:12.2f}{1e3 * t_nb:12.2f}{t_np / t_nb:10.1f}{diff:12.1e}")


if __name__ == "__main__":
    main()
