"""Smoke test for the cretan_py extension module.

Build and install first, e.g. `maturin develop -m crates/py/Cargo.toml`
or `pip install` of a wheel from `maturin build`.
"""

import json
import math

import cretan_py as c


def check_field():
    y = c.QuadExt("-1/2 - 1/6*sqrt(3)")
    assert str(y) == "-1/2 - 1/6*sqrt(3)"
    assert y * y.inverse() == 1
    assert y + y.conjugate() == c.QuadExt("-1")
    assert c.QuadExt.sqrt(12) == 2 * c.QuadExt.sqrt(3)
    assert abs(float(y) + 0.7886751345948129) < 1e-15
    assert y < 0 and y.sign() == -1
    assert len({c.QuadExt("2/4"), c.QuadExt("1/2")}) == 1
    try:
        c.QuadExt(0).inverse()
    except ZeroDivisionError:
        pass
    else:
        raise AssertionError("inverse of zero")


def check_designs():
    b = c.find_design(13, 4, 1)
    assert b.params == (13, 4, 1) and b.verify()
    assert b.complement().params == (13, 9, 6)
    sols = c.all_solutions(b)
    assert len(sols) == 2 and sols.classification == "both-original"
    weights = sorted(float(m.weight) for m in sols.matrices)
    assert abs(weights[0] - 4.4019) < 5e-4 and abs(weights[1] - 9.5981) < 5e-4
    for m in sols.matrices:
        assert m.verify_exact() and m.defect_count() == 0
        rows = m.to_list()
        det = c.float_det(rows)
        assert abs(det * det / float(m.weight) ** 13 - 1) < 1e-9
        assert c.residual(rows)["max_offdiag"] < 1e-12

    roots = c.solve_characteristic(5, 1, 0)
    assert any(str(r.y) == "-2/3" and r.admissible for r in roots)

    menon = c.all_solutions(c.menon_design(2)).principal()
    assert menon.weight == 16 and math.isclose(menon.det_float, 16.0**8, rel_tol=1e-9)

    assert c.qr_design(7).verify() and c.twin_prime_design(3).params == (15, 7, 3)
    try:
        c.qr_design(5)
    except ValueError:
        pass
    else:
        raise AssertionError("5 is not 3 mod 4")


def check_search():
    r = c.search("circ5", restarts=8, workers=1)
    assert abs(r.fitted_omega - 2.387286) < 1e-3 and r.residual <= 1e-5
    again = c.search("circ5", restarts=8, workers=2)
    assert json.loads(r.to_json()) == json.loads(again.to_json())
    assert len(r.matrix()) == 5


if __name__ == "__main__":
    check_field()
    check_designs()
    check_search()
    print("cretan_py smoke test passed")
