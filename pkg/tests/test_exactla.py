from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from intspace import exactla as la


def ff_rank(rows):
    """Fraction-free (Bareiss style) elimination over the integers."""
    a = [list(r) for r in rows]
    if not a:
        return 0
    m, n = len(a), len(a[0])
    r, prev = 0, 1
    for c in range(n):
        piv = next((i for i in range(r, m) if a[i][c] != 0), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        for i in range(r + 1, m):
            for j in range(c + 1, n):
                a[i][j] = (a[r][c] * a[i][j] - a[i][c] * a[r][j]) // prev
            a[i][c] = 0
        prev = a[r][c]
        r += 1
        if r == m:
            break
    return r


int_mats = st.integers(1, 6).flatmap(lambda r: st.integers(1, 6).flatmap(
    lambda c: st.lists(st.lists(st.integers(-4, 4), min_size=c, max_size=c), min_size=r, max_size=r)))


def test_rank_examples():
    assert la.rank(la.identity(3)) == 3
    assert la.rank(la.mat([[1, 2], [2, 4]])) == 1


@given(int_mats)
def test_rank_matches_fraction_free_oracle(rows):
    assert la.rank(la.mat(rows)) == ff_rank(rows)


def test_kernel_examples():
    assert la.kernel_basis(la.identity(2)) == []
    assert len(la.kernel_basis(la.zeros(2, 3))) == 3
    (v,) = la.kernel_basis(la.mat([[1, 2], [2, 4]]))
    a, b = la.to_rows(v)
    assert a[0] == -2 * b[0] and b[0] != 0


@given(int_mats)
def test_kernel_property(rows):
    m = la.mat(rows)
    ks = la.kernel_basis(m)
    assert len(ks) == m.ncols() - la.rank(m)
    for v in ks:
        assert la.is_zero(m * v)


def test_solve_affine_examples():
    b = la.mat([[3], [Fraction(1, 2)]])
    x, ker = la.solve_affine(la.identity(2), b)
    assert la.mat_equal(x, b) and ker.ncols() == 0
    x, _ = la.solve_affine(la.mat([[1, 2], [2, 4]]), la.mat([[1], [3]]))
    assert x is None
    with pytest.raises(ValueError):
        la.solve_affine(la.identity(2), la.mat([[1], [2], [3]]))


@given(int_mats, st.data())
def test_solve_affine_consistent(rows, data):
    m = la.mat(rows)
    x0 = la.mat([[data.draw(st.integers(-5, 5))] for _ in range(m.ncols())])
    b = m * x0
    x, ker = la.solve_affine(m, b)
    assert x is not None and la.is_zero(m * x - b)
    assert ker.ncols() == m.ncols() - la.rank(m)
    assert la.is_zero(m * ker)


@given(st.fractions(max_denominator=50))
def test_rational_json_roundtrip(q):
    s = la.q_to_str(q)
    back = la.q_from_str(s)
    assert Fraction(int(back.p), int(back.q)) == q


def test_entries_reduced():
    m = la.mat([[Fraction(2, 4), "6/8"]])
    assert la.to_rows(m)[0][0] == la.fmpq(1, 2)
    assert la.mat_to_json(m) == [["1/2", "3/4"]]
