"""Smoke test for the pyqmlab extension. Run after `pip install --no-build-isolation -e crates/python`."""

import json
import math

import pyqmlab as q


def close(a, b, tol=1e-9):
    return abs(a - b) <= tol


def main():
    x = q.MetricSpace.interval(5, 2.0)
    assert len(x) == 5 and close(x.diameter, 2.0)
    assert close(x.d(0, 4), 2.0)

    mu = [1, 0, 0, 0, 0]
    nu = [0, 0, 0, 1, 0]
    w, coupling = q.wasserstein1_coupling(x, mu, nu)
    assert close(w, 1.5), w
    assert close(q.wasserstein1(x, mu, nu), q.wasserstein_inf(x, mu, nu))
    assert close(sum(map(sum, coupling)), 1.0)

    a = q.MetricSpace([[0, 1], [1, 0]])
    b = q.MetricSpace([[0, 3], [3, 0]])
    value, exact = q.gh_distance(a, b)
    assert exact and close(value, 1.0), value

    c = q.MetricSpace.circle(6, 2 * math.pi)
    assert close(q.hausdorff(c, [0], [3]), math.pi)
    f = q.mcshane_clip(x, [0, 5, 0, -5, 0], 1.0)
    assert all(abs(f[i] - f[j]) <= x.d(i, j) + 1e-12 for i in range(5) for j in range(5))

    functions, density = q.nucleus(q.MetricSpace.interval(3, 1.0), 0.5, 0.25)
    assert functions and density > 0

    passed, checks = q.selfcheck(0)
    assert passed, [c for c in checks if not c[1]]

    report, artifacts = q.run_scenario(json.dumps({"kind": "rotation-field", "p": 1, "q": 4, "ts": [0.0, 0.5], "n": 16}))
    assert json.loads(report)["passed"]
    assert "d_hat.csv" in artifacts

    for bad, exc in [('{"kind": "nope"}', ValueError),
                     ('{"kind": "nucleus", "space": {"kind": "interval", "n": 4, "length": 1}, "r": 0.1, "eps": 0.1}', RuntimeError)]:
        try:
            q.run_scenario(bad)
        except exc:
            pass
        else:
            raise AssertionError(f"expected {exc.__name__} for {bad}")

    print(f"pyqmlab {q.__version__}: smoke test passed")


if __name__ == "__main__":
    main()
