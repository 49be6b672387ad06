"""Smoke test for the finslerpy extension.

Build first with `cargo build --release -p finsler-py`; the script picks up
target/release/libfinslerpy.so when the module is not installed.
"""

import importlib
import math
import pathlib
import shutil
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load():
    try:
        return importlib.import_module("finslerpy")
    except ImportError:
        pass
    for profile in ("release", "debug"):
        for lib in ("libfinslerpy.so", "libfinslerpy.dylib"):
            built = ROOT / "target" / profile / lib
            if built.exists():
                tmp = pathlib.Path(tempfile.mkdtemp())
                shutil.copy(built, tmp / "finslerpy.so")
                sys.path.insert(0, str(tmp))
                return importlib.import_module("finslerpy")
    sys.exit("finslerpy not built: run `cargo build --release -p finsler-py`")


def close(a, b, tol):
    return abs(a - b) <= tol * max(1.0, abs(b))


def main():
    fp = load()
    checks = []

    funk = fp.Metric("funk")
    k = funk.flag_curvature([0.1, 0.0], [0.0, 1.0], [1.0, 0.0])
    checks.append(("funk flag curvature -1/4", close(k, -0.25, 1e-7)))

    rot = fp.Metric("rotation2d")
    r = rot.riemann([0.3, 0.4], [1.0, 1.0])
    checks.append(("rotation2d is flat", max(abs(v) for row in r for v in row) < 1e-7))
    checks.append(("rotation2d has S = 0", abs(rot.s_curvature([0.3, 0.4], [1.0, 1.0])) < 1e-8))

    traj = rot.geodesic([0.1, -0.2], [0.3, 0.4], time=0.5)
    speeds = [p[3] for p in traj]
    checks.append(("geodesic speed is constant", max(speeds) - min(speeds) < 1e-6 * speeds[0]))

    a, b = fp.zermelo("euclidean", "rotation", [0.3, 0.4])
    checks.append(("navigation data of the rotation", close(b[0], 0.4 / 0.75, 1e-12) and close(a[0][0], 0.91 / 0.5625, 1e-12)))

    nav = fp.navigate(fp.Metric("euclidean:n=2"), "radial", [0.3, 0.1], [0.0, 1.0])
    checks.append(("radial navigation is Funk", close(nav, funk([0.3, 0.1], [0.0, 1.0]), 1e-10)))

    slab = fp.Metric("slab:kappa=0.5")
    _, c2 = slab.torsion_norms([0.0, 0.0])
    checks.append(("slab torsion below 27k/2", c2 <= 6.75))

    report = fp.Metric("euclidean:n=2").verify(points=10, mc_samples=20000)
    checks.append(("verify report passes", report["pass"] and len(report["checks"]) > 5))

    try:
        fp.Metric("hilbert")
        checks.append(("unknown spec raises", False))
    except ValueError:
        checks.append(("unknown spec raises", True))

    checks.append(("gallery lists defaults", "rotation2d" in fp.gallery_specs()))
    checks.append(("F is finite", math.isfinite(funk([0.5, 0.0], [1.0, 0.0]))))

    failed = 0
    for name, ok in checks:
        print(f"{'ok  ' if ok else 'FAIL'} {name}")
        failed += not ok
    sys.exit(1 if failed else 0)


if __name__ == "__main__":
    main()
