"""Time the numba curvature kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--points 2000] [--dim 4] [--repeat 5]

Kernel timings call both variants directly on the same random arrays (and
check they agree). The end-to-end timing runs a bundled manifest in a child
process once per backend, toggled through WARPGEOM_DISABLE_NUMBA.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from warpgeom import _kernels as K


def _arrays(n, d, seed=0):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, d, d))
    g = a @ a.transpose(0, 2, 1) + d * np.eye(d)
    # dg[n, m, i, j] = d_m g_ij and d2g[n, a, b, i, j] = d_a d_b g_ij
    dg = rng.normal(size=(n, d, d, d))
    dg = dg + dg.transpose(0, 1, 3, 2)
    d2g = rng.normal(size=(n, d, d, d, d))
    d2g = d2g + d2g.transpose(0, 2, 1, 3, 4)
    d2g = d2g + d2g.transpose(0, 1, 2, 4, 3)
    return np.linalg.inv(g), dg, d2g


def _best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def bench_kernels(n, d, repeat):
    ginv, dg, d2g = _arrays(n, d)
    gam = K.christoffel_np(ginv, dg)
    dgam = K.christoffel_grad_np(ginv, dg, d2g)
    pairs = [
        ("christoffel", K.christoffel_np, K.christoffel_nb, (ginv, dg)),
        ("christoffel_grad", K.christoffel_grad_np, K.christoffel_grad_nb, (ginv, dg, d2g)),
        ("ricci", K.ricci_np, K.ricci_nb, (gam, dgam)),
    ]
    print(f"{'kernel':18} {'numpy ms':>10} {'numba ms':>10} {'speedup':>8}  max|diff|")
    for name, f_np, f_nb, args in pairs:
        t_np = _best(lambda: f_np(*args), repeat)
        if f_nb is None:
            print(f"{name:18} {t_np * 1e3:10.2f} {'n/a':>10}")
            continue
        f_nb(*args)  # compile outside the timing
        t_nb = _best(lambda: f_nb(*args), repeat)
        diff = np.abs(f_np(*args) - f_nb(*args)).max()
        print(f"{name:18} {t_np * 1e3:10.2f} {t_nb * 1e3:10.2f} {t_np / t_nb:8.1f}  {diff:.1e}")


def bench_manifest(manifest, repeat):
    code = ("import timeit, tempfile, os; from warpgeom.cli import main; "
            "d = tempfile.mkdtemp(); run = lambda: main(['check', %r, '--report', os.path.join(d, 'r.json')]); "
            "import contextlib, io\nwith contextlib.redirect_stdout(io.StringIO()):\n run()\n"
            " t = min(timeit.repeat(run, number=1, repeat=%d))\nprint(t)") % (manifest, repeat)
    for flag in ("0", "1"):
        env = dict(os.environ, WARPGEOM_DISABLE_NUMBA=flag)
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        backend = "numpy" if flag == "1" else "numba"
        print(f"{os.path.basename(manifest)} end to end, {backend}: {float(out.stdout.strip()) * 1e3:.1f} ms")


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--points", type=int, default=2000)
    p.add_argument("--dim", type=int, default=4)
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--manifest", default=None, help="manifest for the end-to-end timing (default: bundled family)")
    args = p.parse_args(argv)
    print(f"backend selected by environment: {K.BACKEND}; points={args.points} dim={args.dim}")
    bench_kernels(args.points, args.dim, args.repeat)
    if args.manifest is None:
        from warpgeom.cli import bundled_manifests
        args.manifest = str(next(m for m in bundled_manifests() if m.stem == "family"))
    bench_manifest(args.manifest, args.repeat)


if __name__ == "__main__":
    main()
