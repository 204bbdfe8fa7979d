import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from icicd.analytic import coverage_combined
from icicd.errors import DomainError
from icicd.model import NetworkModel, ShadowingSpec
from icicd.montecarlo.deployment import (IDLE, MUTED, SERVING, LoadEstimate,
                                         deployment_coverage_grid, estimate_effective_load,
                                         estimate_load_table, sample_deployment, schedule)


class TestScheduler:
    """The random sequential coordination policy on small instances."""

    def test_chain(self):
        cands = np.array([[0, 1], [1, 0], [2, 1]])
        status, served = schedule([0, 1, 2], cands, 2)
        assert status.tolist() == [SERVING, MUTED, SERVING]
        assert served.tolist() == [0, -1, 2]

    def test_no_coordination(self):
        cands = np.array([[0, 1], [1, 0], [2, 1]])
        status, _ = schedule([0, 1, 2], cands[:, :1], 1, 3)
        assert status.tolist() == [SERVING] * 3

    def test_blocked_by_serving_neighbour(self):
        cands = np.array([[1, 2], [0, 1]])
        status, served = schedule([0, 1], cands, 2, 3)
        assert status.tolist() == [IDLE, SERVING, MUTED]
        assert served.tolist() == [-1, 0, -1]

    def test_order_matters(self):
        cands = np.array([[0, 1], [1, 0]])
        assert schedule([0, 1], cands, 2)[0].tolist() == [SERVING, MUTED]
        assert schedule([1, 0], cands, 2)[0].tolist() == [MUTED, SERVING]

    def test_padding(self):
        status, _ = schedule([0], np.array([[0, -1]]), 2, 1)
        assert status.tolist() == [SERVING]

    @settings(max_examples=50, deadline=None)
    @given(data=st.data(), n_bs=st.integers(2, 8), n_users=st.integers(1, 15),
           K=st.integers(1, 3))
    def test_invariants(self, data, n_bs, n_users, K):
        K = min(K, n_bs)
        cands = np.array([data.draw(st.permutations(range(n_bs)))[:K] for _ in range(n_users)])
        order = data.draw(st.permutations(range(n_users)))
        status, served = schedule(order, cands, K, n_bs)
        for b in np.flatnonzero(status == SERVING):
            u = served[b]
            assert cands[u, 0] == b
            assert all(status[c] != SERVING for c in cands[u, 1:])
        scheduled = set(served[served >= 0].tolist())
        for u in range(n_users):
            if u not in scheduled:
                # every unscheduled user was blocked
                assert status[cands[u, 0]] != IDLE or any(status[c] == SERVING
                                                          for c in cands[u, 1:])


class TestDeploymentSample:
    """Single window realizations."""

    def test_structure(self):
        model = NetworkModel(4.0, 1.0, ShadowingSpec.lognormal(6.0))
        sample = sample_deployment(model, 10.0, 3, window_side=8.0, seed=2)
        assert sample.candidates.shape == (len(sample.user_points), 3)
        assert np.all((sample.bs_points >= 0) & (sample.bs_points <= 8.0))
        doc = json.loads(sample.to_json())
        assert set(doc["status"]) <= {"idle", "serving", "muted"}
        assert doc["serving_map"] == sample.serving_map.tolist()

    def test_reproducible(self):
        a = sample_deployment(NetworkModel(), 10.0, 2, 8.0, seed=1, index=3)
        b = sample_deployment(NetworkModel(), 10.0, 2, 8.0, seed=1, index=3)
        np.testing.assert_array_equal(a.bs_points, b.bs_points)
        np.testing.assert_array_equal(a.status, b.status)


@pytest.fixture(scope="module")
def table():
    return estimate_load_table(4.0, 1.0, 10.0, 0.0, [1, 2, 3], 4, seed=3)


class TestLoad:
    """Effective load estimation."""

    def test_increasing(self, table):
        kappas = [table.per_K[K].kappa_hat for K in (1, 2, 3)]
        assert kappas[0] == pytest.approx(1.0, abs=0.05)
        assert kappas[0] < kappas[1] < kappas[2]
        assert table.affine_fit is not None

    def test_round_trip(self, table):
        back = LoadEstimate.from_dict(json.loads(json.dumps(table.to_dict())))
        assert back.per_K == table.per_K
        assert back.affine_fit == pytest.approx(table.affine_fit)

    def test_worker_invariance(self, table):
        again = estimate_load_table(4.0, 1.0, 10.0, 0.0, [1, 2, 3], 4, seed=3, workers=2)
        assert again.per_K == table.per_K

    def test_single_K(self):
        entry = estimate_effective_load(4.0, 1.0, 10.0, 0.0, 2, 2, window_side=12.0, seed=1)
        assert entry.realizations == 2 and entry.kappa_hat > 1.0

    def test_empty_windows(self):
        with pytest.warns(RuntimeWarning):
            with pytest.raises(DomainError):
                estimate_load_table(4.0, 1.0, 1e-4, 0.0, [1], 2, window_side=4.0)

    @pytest.mark.parametrize("kwargs", [dict(window_side=2.0), dict(lambda_u=0.0),
                                        dict(realizations=0), dict(K_values=[0])])
    def test_domain(self, kwargs):
        args = dict(alpha=4.0, lambda_bs=1.0, lambda_u=10.0, sigma_dB=0.0, K_values=[1],
                    realizations=1)
        args.update(kwargs)
        with pytest.raises(DomainError):
            estimate_load_table(**args)


class TestDeploymentCoverage:
    def test_no_coordination_close_to_exact(self):
        grid = deployment_coverage_grid(NetworkModel(), 10.0, [1], 1, [1.0], 6, seed=4)
        est = grid[(1, 1.0)]
        exact = coverage_combined(1.0, 1, 1, 1.0, 0.5)
        assert abs(est.value - exact) < max(4 * est.stderr, 0.02)

    def test_domain(self):
        with pytest.raises(DomainError):
            deployment_coverage_grid(NetworkModel(), 10.0, [1], 1, [0.0], 1)
