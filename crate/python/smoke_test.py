"""Smoke test for the radwave Python extension.

Build first:

    cargo build -p radwave-py --release --features extension-module

then run `python3 python/smoke_test.py` from the repository root.
"""

import json
import math
import os
import shutil
import sys
import tempfile

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def import_radwave():
    try:
        import radwave  # noqa: F401
        return radwave
    except ImportError:
        pass
    for profile in ("release", "debug"):
        lib = os.path.join(ROOT, "target", profile, "libradwave.so")
        if os.path.exists(lib):
            tmp = tempfile.mkdtemp()
            shutil.copy(lib, os.path.join(tmp, "radwave.so"))
            sys.path.insert(0, tmp)
            import radwave
            return radwave
    raise SystemExit("radwave extension not built; see the module docstring")


def main():
    rw = import_radwave()

    assert abs(rw.alpha_p(4.0) - (1.0 - 2.0 ** -0.5)) < 1e-15
    assert rw.map_forward(3.0, 2.0, 1.0) == (-0.5, -1.0)
    assert abs(rw.omega(3.0, 2.0, 1.0) - 0.5) < 1e-15
    assert abs(rw.omega(4.0, 2.0, 1.0) - 0.75) < 1e-15
    assert abs(rw.conformal_coefficient(4.0, -0.25, -1.0) - 0.84375) < 1e-12
    u, v = rw.map_inverse(4.5, *rw.map_forward(4.5, 3.0, 0.5))
    assert abs(u - 3.0) < 1e-12 and abs(v - 0.5) < 1e-12

    try:
        rw.omega(3.0, 1.0, 2.0)
    except RuntimeError:
        pass
    else:
        raise AssertionError("v > u must be rejected")
    try:
        rw.alpha_p(2.0)
    except ValueError:
        pass
    else:
        raise AssertionError("p = 2 must be rejected")

    times, radii, rows = rw.evolve(3.0, 1e-6, 0.4, 6, 2.0, 1.5, 1.0 / 64)
    assert len(rows) == len(times) and len(rows[0]) == len(radii)
    t, r = times[-1], radii[20]
    exact = rw.exact_linear_solution(1e-6, 0.4, 6, t, r)
    assert abs(rows[-1][20] - exact) < 1e-9, (rows[-1][20], exact)

    with tempfile.TemporaryDirectory() as out:
        config = {
            "p": 3.0,
            "data": {"amplitude": 1.0, "support_radius": 0.4, "smoothness_exponent": 4},
            "grid": {"t_start": 1.0, "t_end": 2.0, "r_max": 1.5, "h": 1.0 / 64, "lambda": 0.8},
            "outputs": out,
        }
        summary = json.loads(rw.simulate(json.dumps(config)))
        assert summary["steps"] == 80
        assert math.isfinite(summary["energy_drift"]) and summary["energy_drift"] < 1e-2
        assert os.path.exists(os.path.join(out, "manifest.json"))

    (cid, passed, line), = rw.validate([4])
    assert cid == 4 and passed, line

    print("radwave", rw.__version__, "smoke test passed")


if __name__ == "__main__":
    main()
