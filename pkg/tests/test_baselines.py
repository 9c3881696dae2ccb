import numpy as np
import pytest

from spade.baselines import (
    ACQUISITIONS,
    GPModel,
    GpPolicy,
    NOISE_VARIANCE,
    acquisition,
    rbf_gram,
    tanimoto_gram,
    tanimoto_kernel,
)
from spade.core import DENSE, PolicyConfig
from spade.policy import RandomPolicy, make_context

from oracles import dense_gp_posterior

PHI0 = 0.3989422804014327


class TestTanimotoKernel:
    def test_identity(self):
        x = np.array([1.0, 1.0, 0.0, 1.0])
        assert tanimoto_kernel(x, x) == 1.0

    def test_disjoint_supports(self):
        assert tanimoto_kernel(np.array([1.0, 1, 0, 0]), np.array([0.0, 0, 1, 1])) == 0.0

    def test_hand_value(self):
        x = np.array([1.0, 1, 0, 0])
        y = np.array([1.0, 0, 1, 0])
        assert tanimoto_kernel(x, y) == pytest.approx(1.0 / 3.0)

    def test_both_zero_convention(self):
        z = np.zeros(4)
        assert tanimoto_kernel(z, z) == 0.0

    def test_symmetric_and_bounded(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            x = rng.integers(0, 2, 16).astype(float)
            y = rng.integers(0, 2, 16).astype(float)
            k = tanimoto_kernel(x, y)
            assert k == tanimoto_kernel(y, x)
            assert 0.0 <= k <= 1.0

    def test_gram_matches_pairwise(self):
        rng = np.random.default_rng(1)
        A = rng.integers(0, 2, size=(7, 12)).astype(float)
        G = tanimoto_gram(A, A)
        for i in range(7):
            for j in range(7):
                assert G[i, j] == pytest.approx(tanimoto_kernel(A[i], A[j]), abs=1e-12)

    def test_gram_psd(self):
        rng = np.random.default_rng(2)
        for seed in range(5):
            A = np.random.default_rng(seed).integers(0, 2, size=(20, 32)).astype(float)
            eig = np.linalg.eigvalsh(tanimoto_gram(A, A))
            assert eig.min() >= -1e-8


class TestGPPosterior:
    def test_prior_with_no_data(self):
        model = GPModel.fit(np.zeros((0, 4)), np.array([]))
        mean, var = model.posterior(np.array([[1.0, 0, 1, 0]]))
        assert mean[0] == 0.0
        assert var[0] == pytest.approx(1.0 + NOISE_VARIANCE)

    def test_single_point_closed_form(self):
        x = np.array([[1.0, 1, 0, 0]])
        y = np.array([8.0])
        model = GPModel.fit(x, y)
        mean, _ = model.posterior(x)
        # ybar + (y - ybar) * 1/(1 + noise); ybar = y with one point
        assert mean[0] == pytest.approx(8.0 + 0.0 / 1.1)
        y2 = np.array([8.0, 6.0])
        x2 = np.vstack([x, [[0.0, 0, 1, 1]]])  # disjoint: K = I
        model2 = GPModel.fit(x2, y2)
        mean2, _ = model2.posterior(x2[:1])
        assert mean2[0] == pytest.approx(7.0 + (8.0 - 7.0) / 1.1)

    def test_matches_dense_solve_oracle(self):
        rng = np.random.default_rng(3)
        for n in (1, 5, 15):
            X = rng.integers(0, 2, size=(n, 24)).astype(float)
            y = rng.uniform(5, 9, size=n)
            Xs = rng.integers(0, 2, size=(8, 24)).astype(float)
            model = GPModel.fit(X, y)
            mean, var = model.posterior(Xs)
            K = tanimoto_gram(X, X)
            Kc = tanimoto_gram(Xs, X)
            kd = np.array([tanimoto_kernel(x, x) for x in Xs])
            m_ref, v_ref = dense_gp_posterior(K, Kc, kd, y, NOISE_VARIANCE)
            np.testing.assert_allclose(mean, m_ref, atol=1e-8)
            np.testing.assert_allclose(var, v_ref, atol=1e-8)

    def test_interpolates_with_tiny_noise(self):
        rng = np.random.default_rng(4)
        X = rng.integers(0, 2, size=(10, 32)).astype(float)
        y = rng.uniform(5, 9, size=10)
        model = GPModel.fit(X, y, noise=1e-8)
        mean, _ = model.posterior(X)
        np.testing.assert_allclose(mean, y, atol=1e-4)

    def test_variances_nonnegative(self):
        rng = np.random.default_rng(5)
        X = rng.integers(0, 2, size=(12, 16)).astype(float)
        model = GPModel.fit(X, rng.uniform(5, 9, 12))
        _, var = model.posterior(rng.integers(0, 2, size=(30, 16)).astype(float))
        assert np.all(var >= 0)

    def test_dense_kind_uses_rbf(self):
        rng = np.random.default_rng(6)
        X = rng.normal(size=(6, 5))
        model = GPModel.fit(X, rng.uniform(5, 9, 6), kind=DENSE)
        mean, var = model.posterior(X[:2])
        assert np.all(np.isfinite(mean)) and np.all(var >= 0)
        G = rbf_gram(X, X)
        assert np.allclose(G, G.T)
        np.testing.assert_allclose(np.diag(G), 1.0, atol=1e-12)


class TestAcquisition:
    def test_degenerate_ei(self):
        assert acquisition(9.0, 0.0, 8.0, "ei") == 1.0
        assert acquisition(7.0, 0.0, 8.0, "ei") == 0.0

    def test_pi_at_mean(self):
        assert acquisition(8.0, 1.0, 8.0, "pi") == pytest.approx(0.5)

    def test_ei_at_mean(self):
        assert acquisition(8.0, 1.0, 8.0, "ei") == pytest.approx(PHI0, abs=1e-9)

    def test_ucb_and_mean(self):
        assert acquisition(7.0, 2.0, 0.0, "ucb") == 9.0
        assert acquisition(7.0, 2.0, 0.0, "m") == 7.0

    def test_monotone_in_mean(self):
        mus = np.linspace(4, 10, 50)
        for kind in ("ei", "pi"):
            vals = acquisition(mus, np.full(50, 0.7), 8.0, kind)
            assert np.all(np.diff(vals) > 0)

    def test_ei_matches_monte_carlo(self):
        rng = np.random.default_rng(8)
        draws = 8.0 + 1.0 * rng.standard_normal(2_000_000)
        mc = np.maximum(0.0, draws - 8.0).mean()
        assert acquisition(8.0, 1.0, 8.0, "ei") == pytest.approx(mc, abs=3e-3)

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            acquisition(1.0, 1.0, 0.0, "thompson")


def _ctx(pics_seen, n_rest, d=8, seed=0, rng_seed=0):
    n_seen = len(pics_seen)
    n = n_seen + n_rest
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 2, size=(n, d)).astype(float)
    return make_context([f"L{i:02d}" for i in range(n)], X,
                        np.arange(n_seen), np.asarray(pics_seen, dtype=float),
                        np.arange(n_seen, n), np.zeros(n, dtype=int),
                        np.random.default_rng(rng_seed))


class TestGpPolicy:
    def test_first_cycle_matches_shared_rule(self):
        from spade.policy import SpadePolicy
        cfg = PolicyConfig(batch_size=5)
        batches = [pol.propose(_ctx([], 20, rng_seed=42)).batch
                   for pol in (GpPolicy(cfg, "ei"), SpadePolicy(cfg), RandomPolicy(cfg))]
        assert batches[0] == batches[1] == batches[2]

    def test_batch_matches_acquisition_oracle(self):
        rng = np.random.default_rng(9)
        pics = [8.0, 6.5, 7.2, 5.5, 6.0]
        ctx = _ctx(pics, 15, d=16, seed=9)
        cfg = PolicyConfig(batch_size=4)
        for kind in ACQUISITIONS:
            prop = GpPolicy(cfg, kind).propose(ctx)
            K = tanimoto_gram(ctx.X[:5], ctx.X[:5])
            Kc = tanimoto_gram(ctx.X[5:], ctx.X[:5])
            kd = np.array([tanimoto_kernel(x, x) for x in ctx.X[5:]])
            m_ref, v_ref = dense_gp_posterior(K, Kc, kd, np.array(pics), NOISE_VARIANCE)
            scores = acquisition(m_ref, np.sqrt(v_ref), max(pics), kind)
            order = np.lexsort((ctx.id_rank[ctx.rest_indices], -scores))
            expected = [int(ctx.rest_indices[j]) for j in order[:4]]
            assert prop.batch == expected, kind

    def test_identical_candidates_tie_break(self):
        X = np.ones((6, 4))
        X[0, 0] = 0.0  # one seen ligand differs
        ctx = make_context([f"L{i}" for i in range(6)], X, np.array([0]),
                           np.array([7.0]), np.arange(1, 6),
                           np.zeros(6, dtype=int), np.random.default_rng(0))
        prop = GpPolicy(PolicyConfig(batch_size=3), "m").propose(ctx)
        ids = [ctx.ids[i] for i in prop.batch]
        assert ids == sorted(ids)


def test_random_policy_partitions_pool():
    cfg = PolicyConfig(batch_size=4)
    n = 13
    X = np.random.default_rng(1).integers(0, 2, (n, 6)).astype(float)
    ids = [f"L{i:02d}" for i in range(n)]
    seen: list[int] = []
    pics: list[float] = []
    chosen_all = []
    rng = np.random.default_rng(33)
    while len(seen) < n:
        rest = [i for i in range(n) if i not in seen]
        ctx = make_context(ids, X, np.array(seen, dtype=int), np.array(pics),
                           np.array(rest, dtype=int), np.zeros(n, dtype=int), rng)
        batch = RandomPolicy(cfg).propose(ctx).batch
        assert set(batch).isdisjoint(seen)
        chosen_all.extend(batch)
        seen.extend(batch)
        pics.extend([6.0] * len(batch))
    assert sorted(chosen_all) == list(range(n))
