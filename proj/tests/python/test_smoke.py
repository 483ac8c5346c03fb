import math

import numpy as np
import pytest

import bcdm

Q = np.array([[1, 0], [0, 1], [1, 1], [1, 0], [0, 1], [1, 1]])


def test_model_names():
    assert "dina" in bcdm.models()
    assert len(bcdm.models()) == 10


def test_patterns_odometer_order():
    p = bcdm.enumerate_patterns(Q)
    assert p.tolist() == [[0, 0], [1, 0], [0, 1], [1, 1]]


def test_rdina_matches_dina():
    slip, guess = bcdm.rdina_to_sg(-1.2, 3.1)
    for eta in (0, 1):
        assert bcdm.prob_dina(eta, slip, guess) == pytest.approx(
            bcdm.prob_rdina(eta, -1.2, 3.1), abs=1e-12)


def test_dic_arithmetic():
    assert bcdm.dic([10.0, 12.0, 14.0]) == (12.0, 2.0, 14.0)
    aic, bic = bcdm.aic_bic(100.0, 5, 100)
    assert aic == 105.0
    assert bic == pytest.approx(100.0 + (math.log(100) - 1) * 5)


def test_rhat_separates_offset_chains():
    rng = np.random.default_rng(1)
    same = [rng.normal(size=500), rng.normal(size=500)]
    apart = [rng.normal(size=500), rng.normal(size=500) + 10]
    assert bcdm.rhat(same) < 1.1
    assert bcdm.rhat(apart) > 1.2
    assert 300 < bcdm.effective_draws(same) <= 1000


def test_discrepancy_rejects_degenerate_probabilities():
    y = np.array([[1, 0]])
    assert bcdm.discrepancy(y, np.array([[0.5, 0.5]])) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        bcdm.discrepancy(y, np.array([[1.0, 0.5]]))


def test_simulate_then_fit():
    sim = bcdm.simulate(Q, model="dina", n_persons=200, seed=3)
    assert sim["Y"].shape == (200, 6)
    res = bcdm.fit(Q, sim["Y"], model="dina", n_iter=600, seed=5)
    assert "s[1]" in res["summary"] and "pai[4]" in res["summary"]
    assert len(res["modal_class"]) == 200
    assert 0.0 <= res["ppp"] <= 1.0
    assert res["dic"] > res["dbar"]


def test_dimension_mismatch_raises():
    with pytest.raises(ValueError):
        bcdm.fit(Q, np.zeros((10, 5), dtype=int), n_iter=100)
