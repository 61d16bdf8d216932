"""Compare the compiled kernel core against the numpy fallback.

Times the two hot kernels on batch sizes spanning the submesh regime, then a
whole solver run under each backend, and verifies the runs agree bit for bit.

Run: python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from eventstep import kernels, lts
from eventstep.cli import RunConfig, build_world


def time_call(fn, *args, repeat=2000):
    best = float("inf")
    for _ in range(5):
        t0 = time.perf_counter()
        for _ in range(repeat):
            fn(*args)
        best = min(best, (time.perf_counter() - t0) / repeat)
    return best


def bench_kernels():
    from eventstep.kernels import _fallback

    try:
        from eventstep.kernels import _core
    except ImportError:
        print("compiled core not built; run `pip install -e .` first")
        return

    rng = np.random.default_rng(1)
    print(f"{'kernel':<28}{'m':>6}{'numpy':>12}{'compiled':>12}{'ratio':>8}")
    for m in (8, 32, 128, 512):
        states = rng.uniform(-1.5, 1.5, size=(m, 1))
        dx = rng.uniform(0.01, 0.05, size=m)
        for name, args in (
                ("interior_fluxes/burgers-llf",
                 (kernels.LAW_BURGERS, kernels.FLUX_LLF, states)),
                ("internal_k_max/burgers-llf",
                 (kernels.LAW_BURGERS, kernels.FLUX_LLF, states, dx))):
            fn_py = getattr(_fallback, name.split("/")[0])
            fn_c = getattr(_core, name.split("/")[0])
            t_py = time_call(fn_py, *args)
            t_c = time_call(fn_c, *args)
            assert np.array_equal(np.atleast_1d(fn_py(*args)),
                                  np.atleast_1d(fn_c(*args)))
            print(f"{name:<28}{m:>6}{t_py * 1e6:>10.2f}us"
                  f"{t_c * 1e6:>10.2f}us{t_py / t_c:>8.1f}x")


def bench_solver():
    cfg = RunConfig(problem="burgers", ics="shockwave", mesh="polynomial",
                    cells=800, submeshes=20, t_end=0.02, flux="llf")
    sigs = {}
    print(f"\n{'backend':<10}{'solver run':>12}")
    for backend in ("py", "c"):
        try:
            kernels.set_backend(backend)
        except ImportError:
            print(f"{backend:<10}{'unavailable':>12}")
            continue
        world, _ = build_world(cfg)
        t0 = time.perf_counter()
        trace = lts.run_sequential(world)
        dt = time.perf_counter() - t0
        sigs[backend] = trace.signatures()
        print(f"{backend:<10}{dt:>10.2f}s  "
              f"({len(trace.update_records())} updates)")
    kernels.set_backend("auto")
    if len(sigs) == 2:
        same = sigs["py"] == sigs["c"]
        print(f"traces bit-identical across backends: {same}")
        assert same


if __name__ == "__main__":
    bench_kernels()
    bench_solver()
