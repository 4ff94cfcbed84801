"""Smoke test for the leibpy extension.

Build and run from the repository root:

    cargo build -p leib-py --release --features extension-module
    cp target/release/libleibpy.so python/leibpy.so
    python3 python/smoke_test.py
"""

import json
import math
import pathlib
import sys

HERE = pathlib.Path(__file__).resolve().parent
sys.path.insert(0, str(HERE))

import leibpy  # noqa: E402

FIXTURES = HERE.parent / "crates" / "core" / "fixtures"


def main() -> int:
    e = leibpy.Expr("x1^2*sin(x2)", ["x1", "x2"])
    assert math.isclose(e.diff("x1").eval({"x1": 0.5, "x2": 1.0}), math.sin(1.0))

    flat = leibpy.Scene.load(str(FIXTURES / "euclidean2.scene.json"))
    local, global_ = flat.coboundary("metric", ["d1", "d2", "xd2"], [0.3, 0.7])
    assert local == global_ == 2.0, (local, global_)

    value, exact, numeric = flat.first_variation("rotation", "sine_bump")
    assert abs(exact + 4 / math.pi) < 1e-9 and abs(numeric - exact) < 1e-6

    sphere = leibpy.Scene.load(str(FIXTURES / "sphere.scene.json"))
    r = sphere.riemann("round", [math.pi / 2, 0.3])
    assert abs(abs(r[(0, 1, 1, 0)]) - 1.0) < 1e-12
    _, second = sphere.christoffel("round", [0.7, 1.0])
    assert abs(second[(0, 1, 1)] + math.sin(0.7) * math.cos(0.7)) < 1e-14

    checks = sphere.verify("riemann", samples=10)
    assert checks and all(c.passed for c in checks), [c for c in checks if not c.passed]

    code, report = leibpy.run_command(["verify", "--suite", "leibniz", "--samples", "5",
                                       "--scene", str(FIXTURES / "halfplane.scene.json")])
    assert code == 0 and json.loads(report)["command"] == "verify"

    try:
        leibpy.Scene.from_json('{"dimension": 1, "coordinates": ["x"], "domain": [[0, 1]],'
                               ' "metrics": {"g": [["0"]]}}')
    except ValueError as err:
        assert "degenerate" in str(err)
    else:
        raise AssertionError("degenerate metric accepted")

    print(f"smoke test passed ({len(checks)} riemann checks)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
