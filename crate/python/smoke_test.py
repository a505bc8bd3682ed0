"""Smoke test for the spherenet_py extension.

Build and install first:  pip install --no-build-isolation ./crates/python
"""

import math

import spherenet_py as sn


def close(a, b, tol):
    return abs(a - b) <= tol * max(1.0, abs(b))


def main():
    assert sn.harmonic_dim(3, 2) == 5

    g = sn.gegenbauer_coefficients("relu", 3, 6)
    assert close(g[0], math.sqrt(3) / 4, 1e-10), g[0]

    a = sn.hermite_coefficients("erf", 9)
    assert all(a[l] == 0.0 for l in range(0, 10, 2))
    assert close(a[1], 2 / math.sqrt(3 * math.pi), 1e-12)

    h = math.sqrt(5) / 2
    r = sn.theorem1_constant(3, 2, f"poly:{-h},0,{h}", 225)
    assert close(r["C"], 15.0, 1e-12) and close(r["w2_bound"], 1.0, 1e-12), r

    rate, k, valid = sn.relu_rate(1024, 3)
    assert rate == 0.875 and k == 6 and not valid

    pts = sn.sample_sphere(3, 4, 7)
    assert all(close(sum(x * x for x in p), 3.0, 1e-12) for p in pts)
    K = sn.gp_kernel("poly:0,1", pts, 1)
    for i, p in enumerate(pts):
        for j, q in enumerate(pts):
            assert close(K[i][j], sum(u * v for u, v in zip(p, q)) / 3, 1e-12)

    assert sn.w2_gaussian([[4.0]], [[1.0]]) == 1.0
    assert sn.w2_exact([[0.0], [1.0]], [[1.0], [0.0]]) == 0.0

    s = sn.stein_check(f"poly:{-h},0,{h}", 3, 2, 20000, 5, tests=4)
    assert s["passed"] == 1.0 and s["control_rejected"] == 1.0, s

    try:
        sn.relu_rate(100, 2)
    except ValueError:
        pass
    else:
        raise AssertionError("d = 2 must be rejected")

    print("spherenet_py smoke test passed")


if __name__ == "__main__":
    main()
