"""Quick end-to-end check of the Python bindings."""

import cmath
import json
import math

import pytdpair as td


def main():
    p = td.Params(3, 0.9j, 0.35j, 0.29j, theta=2.1)
    assert p.validate() == [], p.validate()
    assert td.Params(2, 0, 0.5j, 0.37j).validate()

    w0 = td.build(p, 0)
    assert len(w0) == 8 and all(len(r) == 8 for r in w0)
    r0, r1 = td.tridiagonal_residual(p)
    assert max(r0, r1) < 1e-10, (r0, r1)

    lam = p.eigenvalues()
    for n, value in enumerate(lam):
        assert abs(value - cmath.cosh(p.alpha + p.phi * (p.n - 2 * n) / 2)) < 1e-14

    psi = td.basis(p, "psi")
    assert [len([b for b in psi if b["level"] == n]) for n in range(4)] == [1, 3, 3, 1]
    for b in psi:
        v = b["vector"]
        wv = [sum(w0[i][j] * v[j] for j in range(8)) for i in range(8)]
        err = math.sqrt(sum(abs(x - b["eigenvalue"] * y) ** 2 for x, y in zip(wv, v)))
        assert err < 1e-11 * max(1.0, math.sqrt(sum(abs(y) ** 2 for y in v)))

    rec = td.assembled(p)
    ora = td.assembled(p, method="oracle")
    gap = max(abs(a - b) for ra, rb in zip(rec, ora) for a, b in zip(ra, rb))
    assert gap < 1e-9, gap
    levels = td.blocks(p, "dual")
    assert [len(b["A"]) for b in levels] == [1, 3, 3, 1]

    table = td.overlaps(p)
    assert len(table["rows"]) == 64
    assert all(abs(f - 1) < 1e-12 for (n, i, k, s, f) in table["rows"] if n == 0)

    orth = td.orthogonality(p)
    assert max(orth["max_diagonal_deviation"], orth["max_off_diagonal"]) < 1e-8

    two = p.with_n(2)
    print("N=2 closed form at s=0:", td.closed_form(two, 0))
    assert td.aw_residual(p.with_n(1)) < 1e-10
    assert td.aw_residual(two) > 1e-3

    passed, text = td.verify(p, ["tridiagonal", "blocks", "recurrence", "qdiff"])
    report = json.loads(text)
    assert passed and len(report["outcomes"]) == 4

    try:
        td.verify(p, ["nonsense"])
    except ValueError:
        pass
    else:
        raise AssertionError("unknown check accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
