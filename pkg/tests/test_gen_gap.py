import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
import tiltgap as tg
from tiltgap.errors import (
    AlphabetMismatch,
    EnumerationCapExceeded,
    InfiniteLautum,
    InfiniteLoss,
    LengthMismatch,
    NonPositiveLambda,
    NotAbsContinuous,
)

from conftest import random_instance
from tiltgap.gen_gap import check_cap, dataset_at, dataset_rank, iter_datasets

# W3 fixture, n = 2, uniform prior; frozen from tests/oracles.py
W3_ORACLE = {
    0.5: (0.33764294900630976, 0.25376358145542914, 0.42152231655719038,
          (0.66976636994397961, 0.33023363005602039)),
    1.0: (0.24497214993452016, 0.11181148463969817, 0.13316066529482199,
          (0.62155793052875619, 0.37844206947124381)),
    2.0: (0.14310790603300084, 0.034907564008410411, 0.036646389008090011,
          (0.57056498112863484, 0.42943501887136516)),
}


def _ds(alphabet, *labels):
    return tg.Dataset.from_labels(alphabet, labels)


# -- ranking ------------------------------------------------------------------


def test_dataset_ranking_is_lexicographic():
    A = tg.Alphabet(["a", "b", "c"])
    seen = [tuple(z.entries.tolist()) for z in iter_datasets(A, 3)]
    assert seen == list(itertools.product(range(3), repeat=3))
    for r, z in enumerate(iter_datasets(A, 3)):
        assert dataset_rank(z) == r
        assert dataset_at(A, 3, r).entries.tolist() == z.entries.tolist()


def test_enumeration_cap(monkeypatch):
    assert check_cap(10, 6) == 10**6
    with pytest.raises(EnumerationCapExceeded) as exc:
        check_cap(10, 7)
    assert exc.value.required == 10**7 and exc.value.cap == 10**6
    monkeypatch.setenv("TILTGAP_ENUM_CAP", "8")
    assert check_cap(2, 3) == 8
    with pytest.raises(EnumerationCapExceeded):
        check_cap(3, 2)
    with pytest.raises(EnumerationCapExceeded):
        check_cap(3, 2, cap=5)


def test_gibbs_cap_raised_before_allocation(w3):
    lm, _, q = w3
    with pytest.raises(EnumerationCapExceeded):
        tg.gibbs_posterior(lm, q, 1.0, 13)


# -- pointwise gap ---------------------------------------------------------------


def test_gen_gap_examples(w2):
    lm, u = w2
    A = lm.alphabet
    assert tg.gen_gap(lm, 0, u, _ds(A, "z1", "z1", "z2")) == pytest.approx(1 / 6, abs=1e-15)
    assert tg.gen_gap(lm, 0, u, _ds(A, "z1", "z2")) == 0.0
    const = tg.LossModel(A, ["c"], [[3.0, 3.0]])
    assert tg.gen_gap(const, 0, u, _ds(A, "z2", "z2", "z1")) == 0.0
    inf = tg.LossModel(A, ["i"], [[0.0, math.inf]])
    with pytest.raises(InfiniteLoss):
        tg.gen_gap(inf, 0, tg.DiscreteMeasure(A, [1, 0]), _ds(A, "z2"))
    with pytest.raises(AlphabetMismatch):
        tg.gen_gap(lm, 0, u, tg.Dataset(tg.Alphabet(["q"]), [0]))


def test_lemma6_examples(w2):
    lm, u = w2
    A = lm.alphabet
    rep = tg.gap_decomposition_pz(lm, 0, u, _ds(A, "z1", "z1", "z2"), 1.0)
    assert rep.g_direct == pytest.approx(1 / 6, abs=1e-15)
    assert abs(rep.residual) <= 1e-9
    rep = tg.gap_decomposition_pz(lm, 0, u, _ds(A, "z2", "z1"), 1.0)
    assert rep.g_direct == 0.0 and rep.g_closed_form == 0.0
    with pytest.raises(NotAbsContinuous):
        tg.gap_decomposition_pz(lm, 0, tg.DiscreteMeasure(A, [1, 0]), _ds(A, "z2"), 1.0)


def test_lemma6_small_divergence_sweep(w2):
    lm, u = w2
    beta = 1.0
    w = tg.tilt(lm, 0, u, beta)
    for z in iter_datasets(lm.alphabet, 6):
        rep = tg.gap_decomposition_pz(lm, 0, u, z, beta)
        assert abs(rep.residual) <= 1e-9
        t = tg.type_of(z).as_measure
        eps = tg.kl_divergence(t, u)
        spread = abs(tg.kl_divergence(t, w.measure) - tg.kl_divergence(u, w.measure))
        assert abs(rep.g_direct) <= beta * (eps + spread) + 1e-12


def test_corollary4_examples(w2):
    lm, u = w2
    A = lm.alphabet
    z = _ds(A, "z1", "z1", "z2")
    for beta in (0.3, 1.0, 4.0):
        general = tg.gap_decomposition_general(lm, 0, u, z, tg.tilt(lm, 0, u, beta))
        lemma6 = tg.gap_decomposition_pz(lm, 0, u, z, beta)
        assert general.g_direct == lemma6.g_direct
        assert general.g_closed_form == lemma6.g_closed_form
        assert general.residual == lemma6.residual
    ref = tg.mix(u, tg.type_of(z).as_measure, 0.5)
    reps = [tg.gap_decomposition_general(lm, 0, u, z, tg.tilt(lm, 0, ref, b)) for b in (0.5, 3.0)]
    assert reps[0].g_direct == reps[1].g_direct
    assert all(abs(r.residual) <= 1e-9 for r in reps)
    same = tg.gap_decomposition_general(lm, 0, u, _ds(A, "z1", "z2"), tg.tilt(lm, 0, ref, 1.0))
    assert same.g_direct == 0.0 and abs(same.g_closed_form) <= 1e-15


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.1, 10.0))
def test_corollary4_matches_lemma6_bitwise(seed, beta):
    rng = np.random.default_rng(seed)
    lm, pz = random_instance(rng, full_support=False)
    z = tg.Dataset(lm.alphabet, rng.choice(pz.support, int(rng.integers(1, 12))))
    general = tg.gap_decomposition_general(lm, 0, pz, z, tg.tilt(lm, 0, pz, beta))
    lemma6 = tg.gap_decomposition_pz(lm, 0, pz, z, beta)
    assert (general.g_direct, general.g_closed_form, general.residual) == \
        (lemma6.g_direct, lemma6.g_closed_form, lemma6.residual)
    assert abs(lemma6.residual) <= 1e-9


# -- algorithms ------------------------------------------------------------------


def test_learning_algorithm_validation(w3):
    lm, _, q = w3
    with pytest.raises(LengthMismatch):
        tg.LearningAlgorithm(lm, 2, np.full((8, 2), 0.5))
    with pytest.raises(LengthMismatch):
        tg.LearningAlgorithm(lm, 2, np.full((9, 2), 0.6))
    with pytest.raises(LengthMismatch):
        tg.LearningAlgorithm(lm, 0, np.full((1, 2), 0.5))
    alg = tg.LearningAlgorithm.data_independent(lm, 2, q)
    with pytest.raises(ValueError):
        alg.table[0, 0] = 1.0
    with pytest.raises(LengthMismatch):
        alg.conditional(_ds(lm.alphabet, "z1"))


def test_expected_gap_examples(w3):
    lm, pz, q = w3
    A = lm.alphabet
    z = _ds(A, "z1", "z2")
    det = tg.LearningAlgorithm.data_independent(lm, 2, tg.DiscreteMeasure.point_mass(lm.models, 0))
    assert tg.expected_gap(det, pz, z) == tg.gen_gap(lm, 0, pz, z)
    g = tg.gibbs_posterior(lm, q, 1.0, 2)
    cond = oracles.gibbs_enumeration(lm.loss.tolist(), pz.weights, q.weights, 1, 2)["conditionals"][1]
    direct = sum(float(c) * tg.gen_gap(lm, t, pz, z) for t, c in enumerate(cond))
    assert tg.expected_gap(g, pz, z) == pytest.approx(direct, abs=1e-14)
    const = tg.LossModel(A, lm.models, np.full((2, 3), 1.25))
    assert tg.expected_gap(tg.gibbs_posterior(const, q, 1.0, 2), pz, z) == 0.0


def test_doubly_expected_gap_data_independent(w3):
    lm, pz, q = w3
    for n in (1, 2, 3):
        for w in ([1, 0], [0.3, 0.7]):
            alg = tg.LearningAlgorithm.data_independent(lm, n, tg.DiscreteMeasure(lm.models, w))
            assert abs(tg.doubly_expected_gap(alg, pz)) <= 1e-10
            assert abs(tg.mutual_info(alg, pz)) <= 1e-10
            assert abs(tg.lautum_info(alg, pz)) <= 1e-10
            np.testing.assert_allclose(tg.model_marginal(alg, pz).weights, w, atol=1e-12)


def test_binary_deterministic_kernel():
    A = tg.Alphabet(["a", "b"])
    lm = tg.LossModel(A, ["ta", "tb"], [[0.0, 1.0], [1.0, 0.0]])
    pz = tg.DiscreteMeasure.uniform(A)
    alg = tg.LearningAlgorithm(lm, 1, [[1, 0], [0, 1]])
    assert tg.model_marginal(alg, pz).weights.tolist() == [0.5, 0.5]
    assert tg.mutual_info(alg, pz) == pytest.approx(math.log(2), abs=1e-15)
    assert tg.lautum_info(alg, pz) == math.inf
    with pytest.raises(InfiniteLautum):
        tg.lautum_info(alg, pz, strict=True)


def test_zero_probability_datasets_are_ignored():
    A = tg.Alphabet(["a", "b"])
    lm = tg.LossModel(A, ["ta", "tb"], [[0.0, 1.0], [1.0, 0.0]])
    alg = tg.LearningAlgorithm(lm, 1, [[1, 0], [0, 1]])
    # dataset "b" never occurs, so model "tb" is outside the marginal but uncharged
    pz = tg.DiscreteMeasure(A, [1, 0])
    assert tg.model_marginal(alg, pz).weights.tolist() == [1.0, 0.0]
    assert tg.mutual_info(alg, pz) == 0.0
    assert tg.lautum_info(alg, pz) == 0.0
    assert tg.doubly_expected_gap(alg, pz) == 0.0


def test_gibbs_posterior_examples(w3):
    lm, pz, q = w3
    A = lm.alphabet
    g = tg.gibbs_posterior(lm, q, 1.0, 2)
    expected = (0.88079707797788244, 0.11920292202211756)
    np.testing.assert_allclose(g.conditional(_ds(A, "z1", "z1")).weights, expected, rtol=0, atol=1e-15)
    far = tg.gibbs_posterior(lm, q, 1e6, 2)
    np.testing.assert_allclose(far.table, np.tile(q.weights, (9, 1)), atol=1e-5)
    single = tg.LossModel(A, ["only"], [[0.5, 1.0, 4.0]])
    s = tg.gibbs_posterior(single, tg.DiscreteMeasure.uniform(single.models), 0.7, 2)
    assert np.all(s.table == 1.0)
    with pytest.raises(NonPositiveLambda):
        tg.gibbs_posterior(lm, q, 0.0, 2)
    with pytest.raises(AlphabetMismatch):
        tg.gibbs_posterior(lm, pz, 1.0, 2)
    inf = tg.LossModel(A, lm.models, [[0, 1, math.inf], [2, 1, 0]])
    with pytest.raises(InfiniteLoss):
        tg.gibbs_posterior(inf, q, 1.0, 2)
    # a prior that ignores the model with infinite loss is fine
    ok = tg.gibbs_posterior(inf, tg.DiscreteMeasure(lm.models, [0, 1]), 1.0, 2)
    assert np.all(ok.table[:, 1] == 1.0)


@pytest.mark.parametrize("lam", [0.5, 1.0, 2.0])
def test_gibbs_audit_w3_against_oracle(w3, lam):
    lm, pz, q = w3
    gap, mutual, lautum, marginal = W3_ORACLE[lam]
    g = tg.gibbs_posterior(lm, q, lam, 2)
    audit = tg.gibbs_audit(g, pz)
    assert audit.doubly_expected_direct == pytest.approx(gap, abs=1e-14)
    assert audit.mutual_info == pytest.approx(mutual, abs=1e-14)
    assert audit.lautum_info == pytest.approx(lautum, abs=1e-14)
    assert abs(audit.identity_residual) <= 1e-8
    np.testing.assert_allclose(tg.model_marginal(g, pz).weights, marginal, rtol=0, atol=1e-14)
    assert tg.doubly_expected_gap(g, pz) == audit.doubly_expected_direct


def test_gibbs_audit_constant_loss(w3):
    lm, pz, q = w3
    const = tg.LossModel(lm.alphabet, lm.models, np.full((2, 3), 0.8))
    audit = tg.gibbs_audit(tg.gibbs_posterior(const, q, 1.0, 2), pz)
    assert audit.doubly_expected_direct == 0.0
    assert abs(audit.mutual_info) <= 1e-15 and abs(audit.lautum_info) <= 1e-15


def _gibbs_grid():
    rng = np.random.default_rng(1234)
    for k in (2, 3, 4):
        for m in (1, 2, 3, 4):
            for n in (1, 2, 3):
                loss = rng.uniform(0, 5, (m, k))
                pz = rng.uniform(0.05, 1, k)
                q = rng.uniform(0.05, 1, m)
                yield k, m, n, loss, pz / pz.sum(), q / q.sum()


@pytest.mark.parametrize("lam", [0.5, 1.0, 2.0])
def test_gibbs_identity_grid(lam):
    for k, m, n, loss, pzw, qw in _gibbs_grid():
        A = tg.Alphabet(range(k))
        lm = tg.LossModel(A, range(m), loss)
        pz, q = tg.DiscreteMeasure(A, pzw), tg.DiscreteMeasure(lm.models, qw)
        g = tg.gibbs_posterior(lm, q, lam, n)
        audit = tg.gibbs_audit(g, pz)
        assert abs(audit.identity_residual) <= 1e-8, (k, m, n)
        assert audit.mutual_info >= 0 and audit.lautum_info >= 0
        # conditional table matches the defining formula
        logk = g.log_partitions
        risk = g.risk_table()
        expect = qw * np.exp(-logk[:, None] - risk / lam)
        np.testing.assert_allclose(g.table, expect, rtol=0, atol=1e-12)
        assert np.all((g.table > 0) == (qw > 0))


def test_gibbs_identity_grid_against_oracle():
    for k, m, n, loss, pzw, qw in list(_gibbs_grid())[::7]:
        A = tg.Alphabet(range(k))
        lm = tg.LossModel(A, range(m), loss)
        audit = tg.gibbs_audit(
            tg.gibbs_posterior(lm, tg.DiscreteMeasure(lm.models, qw), 1.0, n),
            tg.DiscreteMeasure(A, pzw),
        )
        ref = oracles.gibbs_enumeration(loss.tolist(), pzw.tolist(), qw.tolist(), 1, n)
        assert audit.doubly_expected_direct == pytest.approx(float(ref["gap"]), abs=1e-13)
        assert audit.mutual_info == pytest.approx(float(ref["mutual"]), abs=1e-13)
        assert audit.lautum_info == pytest.approx(float(ref["lautum"]), abs=1e-13)


def test_gibbs_conditionals_approach_prior_as_lambda_grows(w3):
    lm, _, _ = w3
    q = tg.DiscreteMeasure(lm.models, [0.3, 0.7])
    prev = None
    for lam in [2.0**k for k in range(-4, 8)]:
        g = tg.gibbs_posterior(lm, q, lam, 2)
        kls = np.array([tg.kl_divergence(g.conditional(r), q) for r in range(g.n_datasets)])
        if prev is not None:
            assert np.all(kls <= prev + 1e-15)
        prev = kls
