"""Tests for the finite-alphabet count estimator and its sup-over-lags form."""

import math
import warnings

import numpy as np
import pytest

from betamix import (
    EmpiricalPairMeasure,
    FiniteChainSpec,
    MixingEnvelope,
    ParameterError,
    SamplePath,
    beta_exact_finite,
    beta_hat_finite,
    count_pairs,
    derive_seed,
    estimate_beta_finite,
    estimate_beta_sup,
    gen_finite_chain,
    skip_length_finite,
)

TWO_STATE = FiniteChainSpec(
    np.array([[0.9, 0.1], [0.2, 0.8]]), np.array([2.0 / 3.0, 1.0 / 3.0])
)
ENV = MixingEnvelope(eta=1.0, gamma=0.3)


def naive_beta(values, alphabet, m, k):
    """Independent direct evaluation: explicit loops, correctly rounded sum."""
    n = len(values)
    N = (n - k) // (2 * (k + 1))
    terms = []
    marg = []
    for u in range(alphabet):
        c = 0
        for i in range(2 * N):
            if values[k * i] == u:
                c += 1
        marg.append(c / (2 * N))
    for u in range(alphabet):
        for v in range(alphabet):
            c = 0
            for i in range(N):
                if values[2 * i * (k + 1)] == u and values[2 * i * (k + 1) + m] == v:
                    c += 1
            terms.append(abs(c / N - marg[u] * marg[v]))
    return 0.5 * math.fsum(terms)


class TestCountPairs:
    def test_alternating_example(self):
        path = SamplePath.finite([0, 1, 0, 1, 0, 1, 0, 1], alphabet_size=2)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            emp = count_pairs(path, m=1, k=1)
        assert emp.N == 1
        assert emp.pair_counts.tolist() == [[0, 1], [0, 0]]
        assert emp.marginal_counts.tolist() == [1, 1]

    def test_constant_path(self):
        path = SamplePath.finite([0] * 20, alphabet_size=2)
        emp = count_pairs(path, m=1, k=2)
        assert emp.pair_counts[0, 0] == emp.N
        assert emp.marginal_counts.tolist() == [2 * emp.N, 0]

    def test_path_too_short(self):
        path = SamplePath.finite([0, 1, 0, 1, 0, 1], alphabet_size=2)
        with pytest.raises(ParameterError):
            count_pairs(path, m=1, k=1)

    def test_continuous_path_rejected(self):
        path = SamplePath.continuous(np.zeros(50))
        with pytest.raises(ParameterError):
            count_pairs(path, m=1, k=2)


class TestBetaHatFinite:
    def test_alternating_example_value(self):
        path = SamplePath.finite([0, 1, 0, 1, 0, 1, 0, 1], alphabet_size=2)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            emp = count_pairs(path, m=1, k=1)
        assert beta_hat_finite(emp) == 0.75

    def test_zero_when_joint_equals_product(self):
        emp = EmpiricalPairMeasure(
            alphabet_size=2,
            pair_counts=np.array([[1, 1], [1, 1]]),
            marginal_counts=np.array([2, 2]),
            N=4,
            M=4,
        )
        assert beta_hat_finite(emp) == 0.0

    def test_zero_for_degenerate_point_mass(self):
        emp = EmpiricalPairMeasure(
            alphabet_size=2,
            pair_counts=np.array([[0, 0], [0, 4]]),
            marginal_counts=np.array([0, 4]),
            N=4,
            M=4,
        )
        assert beta_hat_finite(emp) == 0.0

    def test_range_and_zero_iff_product(self):
        rng = np.random.default_rng(19)
        for _ in range(200):
            size = int(rng.integers(2, 4))
            n = int(rng.integers(16, 41))
            path = SamplePath.finite(rng.integers(0, size, size=n), alphabet_size=size)
            k = int(rng.integers(1, n // 8 + 1))
            m = int(rng.integers(1, k + 1))
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                emp = count_pairs(path, m, k)
            val = beta_hat_finite(emp)
            assert 0.0 <= val <= 1.0
            marg = emp.marginal()
            exact_product = np.array_equal(emp.joint(), np.outer(marg, marg))
            assert (val == 0.0) == exact_product

    def test_relabeling_invariance(self):
        rng = np.random.default_rng(29)
        for _ in range(50):
            size = 3
            n = 200
            vals = rng.integers(0, size, size=n)
            perm = rng.permutation(size)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                a = beta_hat_finite(count_pairs(SamplePath.finite(vals, size), 2, 3))
                b = beta_hat_finite(
                    count_pairs(SamplePath.finite(perm[vals], size), 2, 3)
                )
            assert a == b

    def test_matches_naive_implementation_exactly(self):
        rng = np.random.default_rng(37)
        checked = 0
        while checked < 200:
            size = int(rng.integers(2, 4))
            n = int(rng.integers(16, 41))
            k = int(rng.integers(1, n // 8 + 1))
            m = int(rng.integers(1, k + 1))
            vals = rng.integers(0, size, size=n)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                mine = beta_hat_finite(count_pairs(SamplePath.finite(vals, size), m, k))
            assert mine == naive_beta(vals.tolist(), size, m, k)
            checked += 1


class TestEstimateBetaFinite:
    def test_two_state_chain_with_auto_skip(self):
        n = 10**4
        true1 = beta_exact_finite(TWO_STATE, 1)
        errs = []
        for rep in range(5):
            path = gen_finite_chain(TWO_STATE, n, derive_seed(500, rep))
            est = estimate_beta_finite(path, 1, "auto", envelope=ENV)
            assert est.k == skip_length_finite(ENV, 2, n)
            errs.append(abs(est.beta_hat - true1))
        assert float(np.mean(errs)) < 0.06

    def test_iid_uniform_symbols_near_zero(self):
        uniform = FiniteChainSpec(
            np.full((3, 3), 1.0 / 3.0), np.full(3, 1.0 / 3.0)
        )
        vals = []
        for rep in range(20):
            path = gen_finite_chain(uniform, 10**5, derive_seed(900, rep))
            vals.append(estimate_beta_finite(path, 1, 2).beta_hat)
        assert float(np.mean(vals)) < 0.02

    def test_lag_above_skip_rejected(self):
        path = SamplePath.finite([0, 1] * 50, alphabet_size=2)
        with pytest.raises(ParameterError, match="exceeds skip"):
            estimate_beta_finite(path, 5, 3)

    def test_auto_without_envelope_rejected(self):
        path = SamplePath.finite([0, 1] * 50, alphabet_size=2)
        with pytest.raises(ParameterError, match="envelope"):
            estimate_beta_finite(path, 1, "auto")

    def test_error_shrinks_like_root_n(self):
        true1 = beta_exact_finite(TWO_STATE, 1)
        means = []
        for n in (10**3, 10**4, 10**5):
            k = skip_length_finite(ENV, 2, n)
            errs = [
                abs(
                    estimate_beta_finite(
                        gen_finite_chain(TWO_STATE, n, derive_seed(500, rep)), 1, k
                    ).beta_hat
                    - true1
                )
                for rep in range(20)
            ]
            means.append(float(np.mean(errs)))
        assert means[0] / means[1] >= 2.0
        assert means[1] / means[2] >= 2.0


class TestEstimateBetaSup:
    def test_constant_path_all_zero(self):
        path = SamplePath.finite([0] * 500, alphabet_size=2)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            ests = estimate_beta_sup(path, 5)
        assert len(ests) == 5
        assert all(e.beta_hat == 0.0 for e in ests)

    def test_matches_single_lag_estimates(self):
        rng = np.random.default_rng(41)
        path = SamplePath.finite(rng.integers(0, 3, size=2000), alphabet_size=3)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            sup = estimate_beta_sup(path, 6)
            singles = [estimate_beta_finite(path, m, 6) for m in range(1, 7)]
        assert [e.beta_hat for e in sup] == [e.beta_hat for e in singles]
        assert [e.m for e in sup] == list(range(1, 7))

    def test_auto_skip(self):
        n = 10**4
        path = gen_finite_chain(TWO_STATE, n, 123)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            ests = estimate_beta_sup(path, "auto", envelope=ENV)
        from betamix import skip_length_multi

        k = skip_length_multi(ENV, 2, n)
        assert len(ests) == k
        assert all(0.0 <= e.beta_hat <= 1.0 for e in ests)
