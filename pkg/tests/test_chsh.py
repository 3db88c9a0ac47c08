import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from semantic_bell.chsh import (
    PAIR_LABELS,
    EmptyEnsemble,
    EstimatorMode,
    MissingPair,
    ZeroNorm,
    chsh_literal,
    chsh_signed,
    density_matrix,
    expectation,
    normalize,
    product_vector,
)

from conftest import make_trials

SIGN_PATTERNS = list(itertools.product((1, -1), repeat=4))


def brute_force_literal(rows):
    """Pure-python rho / E / S from raw (a, a', b, b') rows."""
    vecs = []
    for a, ap, b, bp in rows:
        v = [a * b, a * bp, ap * b, ap * bp]
        norm = math.sqrt(sum(x * x for x in v))
        if norm:
            vecs.append([x / norm for x in v])
    n = len(vecs)
    rho = [[sum(v[i] * v[j] for v in vecs) / n for j in range(4)] for i in range(4)]
    e = [4 * rho[i][i] for i in range(4)]
    return rho, e, e[0] - e[1] + e[2] + e[3]


def test_normalize_examples():
    assert np.allclose(normalize([1, 1, 1, 1]), [0.5] * 4)
    r = 1 / math.sqrt(2)
    assert np.allclose(normalize([-1, 0, -1, 0]), [-r, 0, -r, 0], atol=1e-15)
    with pytest.raises(ZeroNorm):
        normalize([0, 0, 0, 0])


def test_density_matrix_examples():
    rho = density_matrix([normalize([1, 1, 1, 1])]).matrix
    assert np.array_equal(rho, np.full((4, 4), 0.25))

    v = normalize([1, -1, 0, 1])
    rho = density_matrix([v] * 7).matrix
    assert np.allclose(rho, np.outer(v, v), atol=1e-15)
    assert abs(np.trace(rho) - 1) < 1e-12

    rho = density_matrix([[1, 0, 0, 0], [0, 1, 0, 0]]).matrix
    assert np.array_equal(rho, np.diag([0.5, 0.5, 0, 0]))
    assert np.allclose(sorted(np.linalg.eigvalsh(rho)), [0, 0, 0.5, 0.5], atol=1e-15)

    with pytest.raises(EmptyEnsemble):
        density_matrix([])


def test_expectation_examples():
    uniform = density_matrix([normalize([1, 1, 1, 1])])
    assert [expectation(uniform, c) for c in PAIR_LABELS] == [1.0, 1.0, 1.0, 1.0]
    diag = density_matrix([[1, 0, 0, 0], [0, 0, 1, 0]])
    assert expectation(diag, "AB") == 2.0
    assert expectation(diag, "AB'") == 0.0


def test_product_vector_examples():
    t1, t2, t3 = make_trials([(1, 1, 1, 1), (1, 1, -1, 0), (0, 0, 0, 0)])
    assert product_vector(t1).tolist() == [1, 1, 1, 1]
    assert product_vector(t2).tolist() == [-1, 0, -1, 0]
    assert product_vector(t3).tolist() == [0, 0, 0, 0]


@pytest.mark.parametrize("pattern", SIGN_PATTERNS)
def test_complete_data_gives_two(pattern):
    res = chsh_literal(make_trials([pattern] * 3))
    assert res.s_literal == 2.0
    assert res.expectations == (1.0, 1.0, 1.0, 1.0)


def test_maximum_four():
    res = chsh_literal(make_trials([(1, 1, -1, 0)] * 5))
    assert res.expectations == pytest.approx((2, 0, 2, 0), abs=1e-12)
    assert res.s_literal == pytest.approx(4.0, abs=1e-12)


def test_minimum_point_three():
    # 37 vectors on the AB' axis and 43 on AB: rho[AB', AB'] = 37/80, E(AB') = 1.85
    rows = [(1, 0, 0, 1)] * 37 + [(1, 0, 1, 0)] * 43
    res = chsh_literal(make_trials(rows))
    _, e, s = brute_force_literal(rows)
    assert e[1] == pytest.approx(1.85, abs=1e-12)
    assert s == pytest.approx(0.30, abs=1e-12)
    assert res.s_literal == pytest.approx(s, abs=1e-12)


def test_discards_zero_vectors():
    res = chsh_literal(make_trials([(1, 1, 1, 1), (0, 0, 0, 0), (0, 1, 0, 0)]))
    assert (res.n_complete, res.n_discarded) == (1, 2)
    with pytest.raises(EmptyEnsemble):
        chsh_literal(make_trials([(0, 0, 0, 0), (1, 0, 0, 0)]))


ensembles = st.lists(st.tuples(*[st.sampled_from([1, -1, 0])] * 4), min_size=1, max_size=25)


@given(ensembles)
def test_literal_matches_brute_force_and_identity(rows):
    rows = [r for r in rows if any(r[i] * r[j] for i, j in ((0, 2), (0, 3), (1, 2), (1, 3)))]
    if not rows:
        return
    res = chsh_literal(make_trials(rows))
    rho, e, s = brute_force_literal(rows)
    assert np.allclose(res.expectations, e, atol=1e-12)
    assert res.s_literal == pytest.approx(s, abs=1e-12)
    assert res.s_literal == pytest.approx(4 - 2 * res.e_abp, abs=1e-9)
    assert sum(res.expectations) == pytest.approx(4, abs=1e-9)
    assert all(x >= 0 for x in res.expectations)


@given(st.lists(st.lists(st.floats(-1, 1, allow_nan=False), min_size=4, max_size=4), min_size=1, max_size=30))
def test_density_matrix_hygiene(raw):
    raw = [v for v in raw if np.linalg.norm(v) > 1e-6]
    if not raw:
        return
    rho = density_matrix(normalize(v) for v in raw)
    rho.check()
    m = rho.matrix
    assert abs(np.trace(m) - 1) <= 1e-12
    assert np.max(np.abs(m - m.T)) <= 1e-12
    assert np.linalg.eigvalsh(m).min() >= -1e-10


def test_signed_joint_examples():
    assert chsh_signed(make_trials([(1, 1, 1, 1)])) == 2.0
    # per-trial value is +-2 for every sign pattern
    for p in SIGN_PATTERNS:
        a, ap, b, bp = p
        assert chsh_signed([p]) == a * b - a * bp + ap * b + ap * bp
        assert abs(chsh_signed([p])) == 2


@given(st.lists(st.sampled_from(SIGN_PATTERNS), min_size=1, max_size=50))
def test_signed_joint_bound(rows):
    assert abs(chsh_signed(make_trials(rows), EstimatorMode.JOINT)) <= 2 + 1e-12


def test_signed_excludes_zero_products():
    # AB' only from the second trial, where it is -1
    s = chsh_signed([(1, 1, 1, 0), (1, 1, 1, 1)])
    assert s == pytest.approx(1 - 1 + 1 + 1)


def test_signed_pairwise():
    samples = [("AB", 1, 1), ("AB'", 1, -1), ("A'B", -1, -1), ("A'B'", 1, 1)]
    assert chsh_signed(samples, EstimatorMode.PAIRWISE) == 4.0
    with pytest.raises(MissingPair):
        chsh_signed(samples[:3], "pairwise")
