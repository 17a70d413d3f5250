"""Compare the compiled and pure-numpy hot kernels on a realistic operator.

Times the three per-step kernels (gaussian_kernel, diffusion_fields,
bundle_rates) for both backends on the same arrays, checks that they agree
to round-off, then times a full explicit step with each backend selected.

Usage:
    python3 benchmarks/bench_kernels.py [--size N] [--repeats K]

--size N builds a scaled scenario with momentum grid 3N x 3N and N cells
per configuration axis (default: the reduced desk preset).
"""

import argparse
import dataclasses
import time

import numpy as np

import wavekin._accel as accel
from wavekin import RunConfig, build_scenario, desk_scale, initial_state, step
from wavekin._accel import fallback
from wavekin.solver import dt_cfl


def best_of(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_micro(op, state, repeats):
    rng = np.random.default_rng(7)
    backends = [("fallback", fallback)]
    if accel.compiled is not None:
        backends.append(("compiled", accel.compiled))

    args = rng.normal(scale=3.0, size=1_000_000)
    n = state.n * rng.uniform(0.5, 1.5, size=state.n.shape)
    c_base = n * op.omega_sup
    c1 = np.ascontiguousarray(c_base * op.kappa**2)
    c2 = np.ascontiguousarray(c_base * op.omega_sup * op.kappa)
    c3 = np.ascontiguousarray(c_base * op.omega_sup**2)
    f1, f2, f3 = (rng.normal(size=op._n_rows) for _ in range(3))

    results = {}
    outputs = {}
    for name, mod in backends:
        out_g = np.empty_like(args)
        results[name, "gaussian_kernel"] = best_of(
            lambda: mod.gaussian_kernel(args, 0.1, out_g), repeats)
        o11, o12, o22 = (np.zeros(op._n_rows) for _ in range(3))
        results[name, "diffusion_fields"] = best_of(
            lambda: mod.diffusion_fields(
                op.indptr, op.indices, op.data, c1, c2, c3,
                op._xx, op._xy, op._xz, op._yy, op._yz, op._zz,
                op.n_p, o11, o12, o22),
            repeats)
        r1, r2, r3 = (np.zeros(op.n_bundles) for _ in range(3))
        results[name, "bundle_rates"] = best_of(
            lambda: mod.bundle_rates(
                op.indptr, op.indices, op.data, f1, f2, f3, r1, r2, r3),
            repeats)
        outputs[name] = (out_g.copy(), o11.copy(), o12.copy(), o22.copy(),
                         r1.copy(), r2.copy(), r3.copy())
    return [n for n, _ in backends], results, outputs


def bench_step(op, state, repeats):
    dt = 0.5 * dt_cfl(op.diffusion_field(state.n), op.tables)
    saved = (accel.gaussian_kernel, accel.diffusion_fields, accel.bundle_rates)
    times = {}
    try:
        for name, mod in (("fallback", fallback), ("compiled", accel.compiled)):
            if mod is None:
                continue
            accel.gaussian_kernel = mod.gaussian_kernel
            accel.diffusion_fields = mod.diffusion_fields
            accel.bundle_rates = mod.bundle_rates
            step(state, op, "fully_explicit", dt)  # warm up
            times[name] = best_of(
                lambda: step(state, op, "fully_explicit", dt), repeats)
    finally:
        accel.gaussian_kernel, accel.diffusion_fields, accel.bundle_rates = saved
    return times


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=0,
                    help="axis cell count for a scaled scenario (0 = desk preset)")
    ap.add_argument("--repeats", type=int, default=7,
                    help="timing repeats, best is reported")
    args = ap.parse_args(argv)

    if args.size > 0:
        n = args.size
        cfg = dataclasses.replace(
            RunConfig(), n_p_par=3 * n, n_p_perp=3 * n, n_r=n,
            n_q_phi=n, n_k_z=n, n_tri_kr=10, n_tri_r=10, n_strata=6)
    else:
        cfg = desk_scale()

    t0 = time.perf_counter()
    sc = build_scenario(cfg)
    build_s = time.perf_counter() - t0
    op = sc.operator
    state = initial_state(sc)
    st = op.stats()
    print(f"scenario built in {build_s:.2f} s: {st['bundles']} bundles, "
          f"{st['rows']} rows, {st['nonzeros']} nonzeros "
          f"(fill {st['fill']:.3f}, {st['bytes'] / 1e6:.1f} MB)")
    print(f"compiled backend available: {accel.compiled is not None}")

    names, results, outputs = bench_micro(op, state, args.repeats)
    print()
    print(f"{'kernel':<18}" + "".join(f"{n + ' (ms)':>16}" for n in names)
          + ("" if len(names) < 2 else f"{'speedup':>10}"))
    for kernel in ("gaussian_kernel", "diffusion_fields", "bundle_rates"):
        row = f"{kernel:<18}"
        vals = [results[n, kernel] for n in names]
        row += "".join(f"{v * 1e3:>16.3f}" for v in vals)
        if len(vals) == 2:
            row += f"{vals[0] / vals[1]:>10.2f}x"
        print(row)

    if len(names) == 2:
        worst = max(
            float(np.max(np.abs(a - b)))
            for a, b in zip(outputs["fallback"], outputs["compiled"]))
        print(f"\nbackend agreement: max abs difference {worst:.3e}")

    times = bench_step(op, state, args.repeats)
    print()
    for name, t in times.items():
        print(f"full explicit step, {name:<9}: {t * 1e3:8.3f} ms")
    if len(times) == 2:
        print(f"step speedup: {times['fallback'] / times['compiled']:.2f}x")


if __name__ == "__main__":
    main()
