"""Smoke test for the pyfreerep extension: python python/smoke_test.py"""

import math

import pyfreerep as fr


def test_xi():
    assert fr.xi("1") == ("1", 1.0)
    exact, value = fr.xi("ab")
    assert exact == "2/3"
    assert math.isclose(fr.xi("a")[1], math.sqrt(3) / 2, rel_tol=1e-15)
    assert math.isclose(value, 2 / 3, rel_tol=1e-15)


def test_masses_and_conformality():
    assert fr.ps_mass("a") == "1/4"
    assert fr.ps_mass("ab") == "1/12"
    for g in ["a", "bA", "aBab"]:
        assert abs(fr.rn_total(g) - 1.0) < 1e-12


def test_alpha():
    assert math.isclose(fr.alpha(["1", "1"]), math.log(3), rel_tol=1e-12)
    x = math.exp(-fr.alpha(["1", "2"]))
    assert abs(3 * x**3 + x**2 + x - 1) < 1e-12


def test_sphere_sums():
    for n in range(1, 6):
        _, q = fr.sphere_sum(n)
        assert math.isclose(q, (n + 2) ** 2 / 3, rel_tol=1e-12)
    assert fr.sphere_sum(2)[0] == "16/3"


def test_fibers():
    rows = fr.fiber_sizes(2, 2)
    assert (4, False, 108, 1, 1) in rows
    assert any(r[1] and r[3] == 12 for r in rows)


def test_errors():
    try:
        fr.xi("ac", 2)
    except ValueError:
        pass
    else:
        raise AssertionError("rank check")


if __name__ == "__main__":
    for name, f in list(globals().items()):
        if name.startswith("test_"):
            f()
            print(f"{name}: ok")
