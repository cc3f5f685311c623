import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from duality_lab.entropy import (
    EntropyValue,
    distinguishability,
    half_norm,
    hmax,
    hmin,
    lemma2_bound,
    pguess,
    psecr,
)
from duality_lab.errors import NotADistribution, OutOfRange
from duality_lab.interferometer import example1_state
from duality_lab.numerics import random_density, random_source
from duality_lab.oracles import guessing_by_enumeration
from duality_lab.quantum import CQState, cq_conditional_on_path, measure_side_information, random_povm

seeds = st.integers(0, 2**32 - 1)


def pure(v):
    v = np.asarray(v, dtype=complex)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


def random_cq(seed, d, db):
    rng = random_source(seed)
    states = np.array([random_density(db, int(rng.integers(1, db + 1)), rng) for _ in range(d)])
    return CQState(rng.dirichlet(np.ones(d)), states)


def trine():
    angles = 2 * np.pi * np.arange(3) / 3
    return CQState(np.full(3, 1 / 3), np.array([pure([np.cos(a), np.sin(a)]) for a in angles]))


def tetrahedron():
    vecs = [[1, 0], [1 / np.sqrt(3), np.sqrt(2 / 3)]]
    vecs += [[1 / np.sqrt(3), np.sqrt(2 / 3) * np.exp(2j * np.pi * k / 3)] for k in (1, 2)]
    return CQState(np.full(4, 0.25), np.array([pure(v) for v in vecs]))


# Frozen reference values for this instance came from an independent conic
# solver (CLARABEL via cvxpy) on the primal guessing SDP and on the
# purification form of the secrecy problem.
FROZEN = dict(pguess=0.6156385865, psecr=2.5141550881)


def frozen_instance():
    r0 = np.array([[0.7, 0.2 + 0.1j], [0.2 - 0.1j, 0.3]])
    r1 = np.array([[0.4, -0.3j], [0.3j, 0.6]])
    r2 = np.array([[0.5, 0.5], [0.5, 0.5]])
    return CQState(np.array([0.5, 0.3, 0.2]), np.array([r0, r1, r2]))


class TestHalfNorm:
    def test_point_mass(self):
        assert half_norm([0, 1, 0]).value == pytest.approx(1.0)

    def test_uniform(self):
        assert half_norm(np.full(4, 0.25)).value == pytest.approx(4.0)

    def test_biased_coin(self):
        assert half_norm([0.7, 0.3]).value == pytest.approx((np.sqrt(0.7) + np.sqrt(0.3)) ** 2, abs=1e-12)
        assert half_norm([0.7, 0.3]).value == pytest.approx(1.91652, abs=1e-5)

    def test_rejects_non_distributions(self):
        with pytest.raises(NotADistribution):
            half_norm([0.5, 0.6])
        with pytest.raises(NotADistribution):
            half_norm([1.1, -0.1])

    @pytest.mark.parametrize("q", [[], [np.nan, 1.0], [np.inf, 0.0], [0.5, np.nan, 0.5]])
    def test_rejects_empty_and_non_finite(self, q):
        with pytest.raises(NotADistribution):
            half_norm(q)

    @given(seeds, st.integers(1, 8))
    def test_range(self, seed, d):
        q = random_source(seed).dirichlet(np.ones(d))
        v = half_norm(q).value
        assert 1.0 - 1e-12 <= v <= d + 1e-12


class TestGuessing:
    def test_identical_conditionals(self):
        cq = CQState(np.array([0.5, 0.5]), np.array([np.eye(2) / 2] * 2))
        assert pguess(cq).value == pytest.approx(0.5)

    def test_orthogonal_conditionals(self):
        cq = CQState(np.array([0.2, 0.3, 0.5]), np.array([np.diag(e) for e in np.eye(3)]))
        assert pguess(cq).value == pytest.approx(1.0)

    def test_helstrom_pair(self):
        cq = CQState(np.array([0.5, 0.5]), np.array([pure([1, 0]), pure([1, 1])]))
        r = pguess(cq)
        assert r.value == pytest.approx((1 + 1 / np.sqrt(2)) / 2, abs=1e-12)
        assert r.gap == 0.0

    def test_trine(self):
        r = pguess(trine(), 1e-10)
        assert r.value == pytest.approx(2 / 3, abs=1e-9)
        assert r.gap <= 1e-10

    def test_tetrahedron(self):
        assert pguess(tetrahedron(), 1e-10).value == pytest.approx(0.5, abs=1e-9)

    def test_frozen_instance(self):
        r = pguess(frozen_instance(), 1e-10)
        assert r.lower_bound - 1e-8 <= FROZEN["pguess"] <= r.upper_bound + 1e-8

    def test_example_path_register(self):
        for n in (3, 4, 6):
            cq = cq_conditional_on_path(example1_state(n).density(), n, 1)
            assert pguess(cq).value == pytest.approx((n - 1) / n, abs=1e-12)

    def test_single_outcome(self):
        cq = CQState(np.array([1.0]), np.array([np.eye(2) / 2]))
        assert pguess(cq).value == 1.0

    def test_tol_range(self):
        with pytest.raises(OutOfRange):
            pguess(trine(), 1e-2)

    def test_classical_side_information_matches_enumeration(self):
        joint = np.array([[0.1, 0.05, 0.2], [0.15, 0.3, 0.05], [0.05, 0.05, 0.05]])
        assert pguess(CQState.classical(joint)).value == pytest.approx(guessing_by_enumeration(joint))

    @given(seeds, st.integers(3, 5), st.integers(2, 4))
    @settings(max_examples=25)
    def test_certificate_valid(self, seed, d, db):
        cq = random_cq(seed, d, db)
        r = pguess(cq, 1e-9)
        assert r.lower_bound <= r.value <= r.upper_bound
        assert r.gap <= 1e-9
        y = r.certificate
        for a in cq.weighted():
            assert np.linalg.eigvalsh(y - a)[0] >= -1e-9
        assert np.trace(y).real == pytest.approx(r.upper_bound, abs=1e-9)
        m = r.optimizer
        assert np.allclose(m.sum(axis=0), np.eye(db), atol=1e-8)
        achieved = np.real(np.einsum("xij,xji->", m, cq.weighted()))
        assert achieved == pytest.approx(r.value, abs=1e-8)

    @given(seeds, st.integers(1, 4))
    @settings(max_examples=25)
    def test_helstrom_agrees_with_iteration(self, seed, db):
        cq = random_cq(seed, 2, max(db, 2))
        a = pguess(cq, 1e-10)
        b = pguess(cq, 1e-10, method="iterative")
        assert abs(a.value - b.value) <= 1e-8

    @given(seeds, st.integers(2, 4), st.integers(2, 3), st.integers(2, 4))
    @settings(max_examples=25)
    def test_measuring_b_never_helps(self, seed, d, db, k):
        cq = random_cq(seed, d, db)
        coarse = measure_side_information(cq, random_povm(db, k, random_source(seed + 1)))
        assert pguess(coarse).value <= pguess(cq).value + 1e-8


class TestSecrecy:
    def test_deterministic(self):
        cq = CQState(np.array([1.0, 0.0]), np.array([pure([1, 0]), pure([0, 1])]))
        assert psecr(cq).value == pytest.approx(1.0)

    def test_uniform_trivial(self):
        assert psecr(CQState.trivial(np.full(5, 0.2))).value == pytest.approx(5.0)

    def test_perfect_classical_correlation(self):
        assert psecr(CQState.classical(np.diag([0.2, 0.3, 0.5]))).value == pytest.approx(1.0)

    def test_classical_formula(self):
        joint = np.array([[0.1, 0.2], [0.3, 0.4]])
        want = sum(np.sum(np.sqrt(joint[:, y])) ** 2 for y in range(2))
        assert psecr(CQState.classical(joint)).value == pytest.approx(want)

    def test_trine(self):
        r = psecr(trine())
        assert r.value == pytest.approx(1.5, abs=1e-8)
        assert r.gap <= 1e-9

    def test_tetrahedron(self):
        assert psecr(tetrahedron()).value == pytest.approx(2.0, abs=1e-8)

    def test_frozen_instance(self):
        r = psecr(frozen_instance(), 1e-10)
        assert r.value == pytest.approx(FROZEN["psecr"], abs=1e-7)

    @given(seeds, st.integers(2, 4), st.integers(2, 3))
    @settings(max_examples=20)
    def test_sigma_attains_value(self, seed, d, db):
        cq = random_cq(seed, d, db)
        r = psecr(cq)
        assert r.gap <= 1e-9
        sigma = r.optimizer
        from duality_lab.numerics import fidelity

        g = sum(np.sqrt(p * fidelity(s, sigma)) for p, s in zip(cq.probs, cq.states)) ** 2
        assert g == pytest.approx(r.value, abs=1e-7)

    @given(seeds, st.integers(2, 4), st.integers(2, 3), st.integers(2, 4))
    @settings(max_examples=20)
    def test_measuring_b_never_lowers_hmax(self, seed, d, db, k):
        cq = random_cq(seed, d, db)
        coarse = measure_side_information(cq, random_povm(db, k, random_source(seed + 1)))
        assert float(hmax(coarse)) >= float(hmax(cq)) - 1e-8


class TestEntropies:
    def test_uniform_trivial(self):
        cq = CQState.trivial(np.full(4, 0.25))
        assert hmin(cq) == pytest.approx(2.0)
        assert hmax(cq) == pytest.approx(2.0)

    def test_deterministic(self):
        cq = CQState.trivial([1.0, 0.0, 0.0])
        assert hmin(cq) == pytest.approx(0.0)
        assert hmax(cq) == pytest.approx(0.0)

    def test_helstrom_pair(self):
        cq = CQState(np.array([0.5, 0.5]), np.array([pure([1, 0]), pure([1, 1])]))
        h = hmin(cq)
        assert h == pytest.approx(-np.log2((1 + 1 / np.sqrt(2)) / 2), abs=1e-12)
        assert h == pytest.approx(0.228447, abs=1e-6)

    def test_interval(self):
        h = hmin(trine(), 1e-6)
        assert isinstance(h, EntropyValue)
        assert h.lower <= float(h) <= h.upper

    @given(seeds, st.integers(2, 4), st.integers(1, 3))
    @settings(max_examples=20)
    def test_hmin_below_hmax(self, seed, d, db):
        cq = random_cq(seed, d, db)
        assert float(hmin(cq)) <= float(hmax(cq)) + 1e-8


class TestDistinguishability:
    def test_indistinguishable(self):
        cq = CQState(np.array([0.5, 0.5]), np.array([np.eye(2) / 2] * 2))
        assert distinguishability(cq) == pytest.approx(0.0)

    def test_orthogonal(self):
        cq = CQState(np.array([0.5, 0.5]), np.array([pure([1, 0]), pure([0, 1])]))
        assert distinguishability(cq) == pytest.approx(1.0)

    def test_example_path_register(self):
        for n in (3, 4, 7):
            cq = cq_conditional_on_path(example1_state(n).density(), n, 1)
            assert distinguishability(cq) == pytest.approx((n - 2) / (n - 1), abs=1e-12)


class TestLemma2Bound:
    def test_perfect_guessing(self):
        assert lemma2_bound(1.0, 3) == pytest.approx(0.0)

    def test_uniform_guessing(self):
        for d in (2, 3, 5):
            assert lemma2_bound(1 / d, d) == pytest.approx(np.log2(d))

    def test_d3(self):
        assert lemma2_bound(2 / 3, 3) == pytest.approx(np.log2(1 + np.sqrt(3)), abs=1e-12)
        assert lemma2_bound(2 / 3, 3) == pytest.approx(1.44998, abs=1e-5)

    def test_out_of_range(self):
        with pytest.raises(OutOfRange):
            lemma2_bound(0.2, 3)

    @given(seeds, st.integers(2, 4), st.integers(1, 3))
    @settings(max_examples=20)
    def test_bound_holds(self, seed, d, db):
        cq = random_cq(seed, d, db)
        assert float(hmax(cq)) <= lemma2_bound(max(pguess(cq).value, 1 / d), d) + 1e-6


class TestSolverFallbacks:
    def test_barrier_matches_fixed_point(self):
        from duality_lab import _solvers

        rng = random_source(31)
        for _ in range(10):
            cq = CQState(rng.dirichlet(np.ones(3)), np.stack([random_density(3, 2, rng) for _ in range(3)]))
            ops = cq.weighted()
            lo, hi, y, m, _ = _solvers.guessing_barrier(ops, 1e-10)
            assert hi - lo <= 1e-10
            assert lo == pytest.approx(pguess(cq, 1e-11).value, abs=1e-9)
            assert np.allclose(m.sum(axis=0), np.eye(3), atol=1e-9)
            assert all(np.linalg.eigvalsh(y - a)[0] >= -1e-12 for a in ops)

    def test_rank_deficient_ensemble_certifies(self):
        # slow case for the fixed point: several rank-deficient conditionals
        rng = random_source(20240975)
        cq = CQState(np.array([0.0243, 0.2792, 0.0883, 0.6082]),
                     np.stack([random_density(3, 2, rng), random_density(3, 2, rng),
                               random_density(3, 3, rng), random_density(3, 2, rng)]))
        r = pguess(cq, 1e-9)
        assert r.gap <= 1e-9

    def test_secrecy_certifies_on_four_outcomes(self):
        rng = random_source(7)
        for _ in range(20):
            cq = CQState(rng.dirichlet(np.ones(4)), np.stack([random_density(4, int(rng.integers(1, 5)), rng)
                                                              for _ in range(4)]))
            r = psecr(cq, 1e-9)
            assert r.gap <= 1e-9
