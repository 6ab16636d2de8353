#!/usr/bin/env python3
"""Smoke test for the weakmeter_py extension module.

Builds the cdylib if needed, copies it into python/_build/ under the
importable name, and exercises the bound API end to end.

Run from anywhere:  python3 python/smoke_test.py
"""

import math
import shutil
import subprocess
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def load_module():
    lib = ROOT / "target" / "release" / "libweakmeter_py.so"
    if not lib.exists():
        subprocess.run(
            ["cargo", "build", "-p", "weakmeter-py", "--release"],
            cwd=ROOT,
            check=True,
        )
    build_dir = ROOT / "python" / "_build"
    build_dir.mkdir(exist_ok=True)
    shutil.copy2(lib, build_dir / "weakmeter_py.so")
    sys.path.insert(0, str(build_dir))
    import weakmeter_py

    return weakmeter_py


def approx(a, b, tol=1e-9):
    assert abs(a - b) <= tol * max(1.0, abs(a), abs(b)), f"{a} != {b} (tol {tol})"


def main():
    wm = load_module()

    # Reference configuration: unit spread and coherence, rectangular window
    # of unit duration with hbar = M = 1, so kappa^2 = 1 and nu = 1/sqrt(2).
    probe = wm.Probe(1.0, 1.0)
    window = wm.Window.rectangular(1.0)
    scales = probe.scales(window)
    approx(scales["kappa_sq"], 1.0)
    approx(scales["nu"], 1.0 / math.sqrt(2.0))
    approx(scales["p_h"], 1.0)

    # Purely imaginary weak value: theta = gamma = phi = pi/2.
    geom = wm.Geometry(math.pi / 2, math.pi / 2, math.pi / 2)
    a_w = geom.weak_value()
    approx(a_w.real, 0.0, 1e-12)
    approx(a_w.imag, -1.0, 1e-12)

    lam = 0.01
    exact = wm.exact_average(geom, probe, window, lam)
    assert 0.9998 <= exact <= 1.0, exact
    approx(wm.weak_average(geom, probe, window), 1.0)

    # Engine agrees with the closed form.
    engine = wm.inferred_average(geom, probe, window, lam)
    approx(engine, exact, 1e-6)

    # Conditional density integrates to one; postselection probability is
    # sensible.
    ps, density, prob = wm.conditional_density(geom, probe, window, lam)
    assert len(ps) == len(density) == 4001
    assert all(d >= 0.0 for d in density)
    step = ps[1] - ps[0]
    total = step * (sum(density) - 0.5 * (density[0] + density[-1]))
    approx(total, 1.0, 1e-9)
    approx(prob, wm.postselection_probability(geom, probe, window, lam), 1e-9)

    # Extremum of the average reaches epsilon * nu / lambda = 100 for
    # phi = pi/4 near gamma = pi.
    geom45 = wm.Geometry(math.pi / 2, 1.0, math.pi / 4)
    ext = wm.average_extrema(geom45, probe, window, lam)
    approx(ext["upper"]["value"], 100.0, 1e-6)
    assert abs(ext["upper"]["gamma_star"] - math.pi) < 0.1
    assert ext["upper"]["method"] == "analytic"

    # Variance extrema saturate the universal bounds at kappa^2 = 1.
    spread = wm.spread_extrema(geom45, probe, window, lam)
    approx(spread["min"], 0.75 / lam**2, 1e-9)
    approx(spread["max"], 3.0 / lam**2, 1e-9)

    # Generic engine path reproduces the spin closed form from raw states.
    s = math.sin(math.pi / 4)
    pre = [1.0 + 0.0j, 0.0j]
    post = [math.cos(math.pi / 4), s * (math.cos(math.pi / 2) + 1j * math.sin(math.pi / 2))]
    sigma_x = [[0.0j, 1.0 + 0.0j], [1.0 + 0.0j, 0.0j]]
    aw2, a2w = wm.generic_weak_value(pre, post, sigma_x)
    approx(aw2.real, a_w.real, 1e-12)
    approx(aw2.imag, a_w.imag, 1e-12)
    approx(a2w.real, 1.0, 1e-12)
    generic = wm.generic_inferred_average(pre, post, sigma_x, probe, window, lam)
    approx(generic, exact, 1e-6)

    # Invalid input surfaces as ValueError.
    try:
        wm.Probe(1.0, 2.0)
    except ValueError:
        pass
    else:
        raise AssertionError("coherence above spread should be rejected")

    print("smoke test: PASS")


if __name__ == "__main__":
    main()
