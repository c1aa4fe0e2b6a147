import numpy as np
import pytest

from simplexqmc.search import SearchConfig, best_of_random, exchange_descent, rate_study, search
from simplexqmc.wce import enm_sq, random_point_set


def _cfg(sched, **kw):
    base = dict(n=12, m=2, d=2, schedule=sched, restarts=8, seed=3)
    base.update(kw)
    return SearchConfig(**base)


def test_config_validation(sched2):
    with pytest.raises(ValueError):
        _cfg(sched2, m=3)
    with pytest.raises(ValueError):
        _cfg(sched2, restarts=0)
    with pytest.raises(ValueError):
        _cfg(sched2, exchange_iters=-1)


def test_best_of_random_is_deterministic_and_minimal(kernel24, consts24, sched2):
    cfg = _cfg(sched2)
    T1, r1 = best_of_random(cfg, kernel24, consts24)
    T2, r2 = best_of_random(cfg, kernel24, consts24)
    np.testing.assert_array_equal(T1, T2)
    draws = [enm_sq(random_point_set(12, 2, 2, s), sched2, kernel24) for s in cfg.restart_seeds()]
    assert r1.e_nm_sq == min(draws)
    assert r1.e_nm_sq == pytest.approx(enm_sq(T1, sched2, kernel24), abs=1e-15)


def test_more_restarts_never_hurt(kernel24, consts24, sched2):
    errs = [best_of_random(_cfg(sched2, restarts=R), kernel24, consts24)[1].e_nm_sq for R in (4, 8, 16, 32)]
    assert all(b <= a for a, b in zip(errs, errs[1:]))


def test_threads_give_same_answer(kernel24, consts24, sched2):
    T1, _ = best_of_random(_cfg(sched2, workers=1), kernel24, consts24)
    T4, _ = best_of_random(_cfg(sched2, workers=4), kernel24, consts24)
    np.testing.assert_array_equal(T1, T4)


def test_ties_go_to_first_draw(kernel24, consts24, sched2, monkeypatch):
    import simplexqmc.search as mod

    monkeypatch.setattr(mod, "enm_sq", lambda T, s, k: 0.5)
    cfg = _cfg(sched2)
    T, _ = best_of_random(cfg, kernel24, consts24)
    np.testing.assert_array_equal(T, random_point_set(12, 2, 2, cfg.restart_seeds()[0]))


def test_exchange_descent_monotone_and_exact(kernel24, consts24, sched2):
    cfg = _cfg(sched2, n=8, exchange_iters=3000)
    start = random_point_set(8, 2, 2, 0)
    T, rep, info = exchange_descent(start, cfg, kernel24, consts24, return_state=True)
    assert info["accepted"] >= 100
    full = enm_sq(T, sched2, kernel24)
    assert abs(info["running_e2"] - full) <= 1e-10
    assert full < enm_sq(start, sched2, kernel24)


def test_search_pipeline(kernel24, consts24, sched2):
    cfg = _cfg(sched2, exchange_iters=200)
    T, rep = search(cfg, kernel24, consts24)
    _, best = best_of_random(cfg, kernel24, consts24)
    assert rep.e_nm_sq <= best.e_nm_sq
    assert rep.lower_bound <= rep.e_nm_sq <= rep.upper_bound


def test_rate_study_table(kernel24, consts24, sched2):
    rows, slope = rate_study([8, 16, 32], _cfg(sched2), kernel24, consts24)
    assert [r["n"] for r in rows] == [8, 16, 32]
    assert all(r["best_e2"] <= r["upper_e2"] for r in rows)
    assert np.isfinite(slope)
    with pytest.raises(ValueError):
        rate_study([16, 8], _cfg(sched2), kernel24, consts24)


def test_kernel_dimension_mismatch(kernel13, consts24, sched2):
    with pytest.raises(ValueError):
        best_of_random(_cfg(sched2), kernel13, consts24)
