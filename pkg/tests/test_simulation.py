import numpy as np
import pytest

from gammanet.exceptions import InputError
from gammanet.path import PathConfig
from gammanet.simulation import (
    METHODS,
    SimConfig,
    SimTruth,
    compute_metrics,
    generate_run,
    run_study,
)

SMALL = SimConfig(n_runs=3, n=40, p=6, n_zeros=3, rng_seed=11,
                  path=PathConfig(n_lambda=15, n_folds=4))


def test_generate_run_shapes_and_sparsity():
    cfg = SimConfig(n=100, p=15, n_zeros=10)
    for idx in range(5):
        data, truth = generate_run(cfg, idx)
        assert data.design.shape == (100, 15)
        assert np.sum(truth.x_true == 0) == 10
        assert np.all(data.responses > 0)
        np.testing.assert_allclose(truth.b_true, np.exp(data.design @ truth.x_true))
        np.testing.assert_allclose(truth.rate_true, 1.0 / truth.b_true)


def test_generate_run_deterministic():
    cfg = SimConfig(rng_seed=3)
    (d1, t1), (d2, t2) = generate_run(cfg, 4), generate_run(cfg, 4)
    assert d1 == d2 and np.array_equal(t1.x_true, t2.x_true)
    d3, _ = generate_run(cfg, 5)
    assert not np.array_equal(d1.responses, d3.responses)


@pytest.mark.parametrize("k", [0.5, 1.0, 3.0])
def test_response_moments(k):
    # b / b_true is Gamma(k, 1/k): mean 1, variance 1/k.
    cfg = SimConfig(n=100_000, p=1, n_zeros=0, shape=k, rng_seed=2)
    for idx in range(2):
        data, truth = generate_run(cfg, idx)
        z = data.responses / truth.b_true
        assert z.mean() == pytest.approx(1.0, rel=0.02)
        assert z.var() == pytest.approx(1.0 / k, rel=0.05)


def test_metrics_hand_example():
    truth = SimTruth(np.array([1.0, 0.0]), np.ones(1), np.ones(1))
    m = compute_metrics([0.5, 0.2], truth)
    assert m.error_l1 == pytest.approx(0.7)
    assert m.pct_error_l1 == pytest.approx(70.0)
    assert (m.zeros_correct, m.nonzeros_correct) == (0, 1)


def test_metrics_zero_tolerance_and_all_zero_truth():
    truth = SimTruth(np.zeros(3), np.ones(1), np.ones(1))
    m = compute_metrics([1e-11, -1e-11, 1e-9], truth)
    assert m.pct_error_l1 is None
    assert m.zeros_correct == 2 and m.nonzeros_correct == 0
    with pytest.raises(InputError):
        compute_metrics([0.0], truth)


def test_config_validation():
    for kw in ({"n_runs": 0}, {"n_zeros": 16}, {"shape": 0.0}, {"n": 5}):
        with pytest.raises(InputError):
            SimConfig(**kw)


def test_study_accounting_and_determinism():
    rep = run_study(SMALL)
    assert rep.n_runs_completed + len(rep.failed_runs) == SMALL.n_runs
    for m in METHODS:
        assert rep.per_run[m].shape == (rep.n_runs_completed, 4)
        assert rep.histogram[m].sum() == rep.n_runs_completed
        assert rep.histogram[m].size == SMALL.n_zeros + 1
    # The unpenalized fit keeps every coefficient.
    assert np.all(rep.per_run["glmGamma"][:, 2] == 0)
    assert np.all(rep.per_run["glmGamma"][:, 3] == SMALL.p - SMALL.n_zeros)
    # Refits share the support of their parent.
    for parent in ("glmGammaNet.percentile", "glmGammaNet.1sd"):
        np.testing.assert_array_equal(rep.per_run[parent][:, 2:],
                                      rep.per_run[parent + ".nonzero"][:, 2:])
    again = run_study(SMALL)
    for m in METHODS:
        assert rep.per_run[m].tobytes() == again.per_run[m].tobytes()


def test_study_worker_invariance_and_prefix():
    one = run_study(SMALL, workers=1)
    two = run_study(SMALL, workers=2)
    for m in METHODS:
        assert one.per_run[m].tobytes() == two.per_run[m].tobytes()
    assert one.line_search_activations == two.line_search_activations
    # Runs are independent, so a shorter study is a prefix of a longer one.
    first = run_study(SimConfig(**{**SMALL.__dict__, "n_runs": 1}))
    for m in METHODS:
        np.testing.assert_array_equal(first.per_run[m][0], one.per_run[m][0])


def test_report_dict_and_tables():
    rep = run_study(SimConfig(**{**SMALL.__dict__, "n_runs": 1}))
    d = rep.to_dict()
    assert set(d["methods"]) == set(METHODS)
    assert [r[0] for r in rep.table3()] == list(METHODS)
    assert len(rep.histogram_rows()) == len(METHODS) * (SMALL.n_zeros + 1)
