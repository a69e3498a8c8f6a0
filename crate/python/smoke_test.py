"""Smoke test for the Python bindings.

    pip install --no-build-isolation ./crates/py
    python python/smoke_test.py
"""

import math
import os
import tempfile

import heisenflag_py as hf


def check(cond, msg):
    if not cond:
        raise SystemExit(f"FAILED: {msg}")
    print(f"ok  {msg}")


def main():
    a = hf.HPoint([1.0], [0.0], 0.0)
    b = hf.HPoint([0.0], [1.0], 0.0)
    check(abs((a * b).t - (b * a).t) == 8.0, "commutator is central")
    check(abs(hf.HPoint([0.0], [0.0], 1.0).norm("koranyi") - math.sqrt(2)) < 1e-15, "Koranyi norm")
    check(hf.distance(a, a.dilate(2.0)) == 1.0, "gauge distance")
    check(hf.tube_measure(0.5, 0.125) == 0.75, "tube measure")
    check(abs(hf.tile_height([0.0, 0.0]) - 0.25) < 1e-12, "tile height at the origin")

    spec = hf.GridSpec(1, 2.0, 4.0, 8, 16)
    check(spec.shape == (64, 16) and len(spec) == 1024, "grid shape")
    check(spec.lattice_ratio() == 2, "lattice ratio")
    try:
        hf.GridSpec(1, 2.0, 4.0, 8, 15)
        check(False, "odd n_t rejected")
    except ValueError:
        check(True, "odd n_t rejected")

    calc = hf.SpectralCalculus(spec)
    f = hf.random_band_limited(spec, 3)
    check(abs(sum(calc.mode_energies(f)) - f.norm(2) ** 2) < 1e-10 * f.norm(2) ** 2, "Parseval")
    s = hf.square_dis(f, calc)
    check(abs(s.norm(2) - f.norm(2)) < 1e-10 * f.norm(2), "square function isometry")

    d = hf.GridField.delta(spec)
    check(abs(d.integral()[0] - 1.0) < 1e-14, "delta mass")
    h = calc.heat(d, 0.1)
    hk = hf.heat_kernel(0.1, spec)
    check((h - hk).norm(2) < 1e-5 * hk.norm(2), "heat kernel matches the spectral heat semigroup")

    k = hf.khinchin(f, calc, n_draws=32, seed=1)
    check(abs(k["ratio"] - 1.105402335201648) < 1e-9, "Khinchin ratio")

    row = hf.equivalence_row(f, calc)
    check(row["radial"] <= row["nontangential"] <= row["grand_maximal"], "maximal functions ordered")
    check(row["square_dis"] > 0 and row["atom_sum"] > 0, "functionals positive")

    dec = hf.atomic_decompose(f, calc)
    check(dec["residual"].norm(2) < 1e-6 * f.norm(2), "decomposition residual")

    with tempfile.TemporaryDirectory() as tmp:
        p = os.path.join(tmp, "f.hfld")
        f.write(p)
        g = hf.GridField.read(p)
        check((g - f).norm(1) == 0.0, "hfld round trip")

    print(f"heisenflag_py {hf.__version__}: all checks passed")


if __name__ == "__main__":
    main()
