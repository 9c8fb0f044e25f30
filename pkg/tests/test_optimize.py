import math

import numpy as np
import pytest

from lics.errors import ValidationError
from lics.optimize import FreeParameter, Objective, nelder_mead, optimize, start_count
from lics.scenarios import two_pulse_lics


@pytest.fixture
def transfer(fig2):
    return Objective(fig2.scenario, {"pop_f": 1.0}, (FreeParameter("delta3", -6.0, 2.0),))


def test_matches_dense_scan(transfer):
    grid = np.linspace(-6, 2, 401)
    scan = max(two_pulse_lics(d)["pop_f"] for d in grid)
    res = optimize(transfer, budget=200, seed=1)
    assert res.achieved["pop_f"] >= scan - 1e-6
    assert res.evaluations <= 200
    assert -6.0 <= res.best["schedule.delta3"] <= 2.0


def test_deterministic_for_seed(transfer):
    a = optimize(transfer, budget=120, seed=7)
    b = optimize(transfer, budget=120, seed=7, workers=3)
    assert a.best == b.best and a.objective == b.objective
    assert a.trace == b.trace


def test_best_not_worse_than_any_start(transfer):
    res = optimize(transfer, budget=160, seed=3)
    assert all(res.objective <= s.f0 + 1e-15 for s in res.starts)
    values = [v for _, v in res.trace]
    assert values == sorted(values, reverse=True)


def test_start_at_optimum_returns_immediately(fig2):
    target = two_pulse_lics(-3.9)["pop_f"]
    obj = Objective(fig2.scenario, {"pop_f": target}, (FreeParameter("delta3", -6, 2),),
                    start={"delta3": -3.9})
    res = optimize(obj, budget=50)
    assert res.evaluations == 1
    assert res.best == {"schedule.delta3": -3.9}


def test_two_parameter_search(fig5):
    obj = Objective(fig5.scenario, {"pop_f": 0.0, "W": 1.0},
                    (FreeParameter("delta2", -4, 4), FreeParameter("delta3", -4, 4)),
                    weights={"W": 2.0})
    res = optimize(obj, budget=150, seed=0)
    sc = res.scenario
    assert sc.schedule.delta2 == res.best["schedule.delta2"]
    assert res.objective == pytest.approx(obj.score(res.achieved))


@pytest.mark.parametrize("budget", [0, 2, 2.5, True])
def test_budget_guard(transfer, budget):
    with pytest.raises(ValidationError, match="budget"):
        optimize(transfer, budget=budget)


@pytest.mark.parametrize(
    "kwargs, match",
    [
        (dict(targets={}), "target"),
        (dict(targets={"sum_total": 1.0}), "cannot target"),
        (dict(targets={"W": 1.5}), "outside"),
        (dict(free=()), "free parameter"),
        (dict(weights={"pop_m": 1.0}), "untargeted"),
        (dict(weights={"W": 0.0}), "positive"),
        (dict(start={"delta3": 9.0}), "outside its bounds"),
        (dict(free=(FreeParameter("delta3", -1, 1), FreeParameter("schedule.delta3", -1, 1))), "repeat"),
    ],
)
def test_objective_validation(fig2, kwargs, match):
    base = dict(base=fig2.scenario, targets={"W": 1.0}, free=(FreeParameter("delta3", -6, 2),))
    base.update(kwargs)
    with pytest.raises(ValidationError, match=match):
        Objective(**base)


def test_free_parameter_validation():
    with pytest.raises(ValidationError):
        FreeParameter("delta3", 1.0, 1.0)
    with pytest.raises(ValidationError):
        FreeParameter("delta3", -math.inf, 1.0)
    with pytest.raises(ValidationError):
        FreeParameter("no_such_thing", 0.0, 1.0)


def test_nelder_mead_quadratic():
    f = lambda x: float(np.sum((x - np.array([0.3, -0.2])) ** 2))  # noqa: E731
    x, fx, evals, converged, history, errors = nelder_mead(f, np.array([0.9, 0.9]), np.array([-1.0, -1.0]),
                                                           np.array([1.0, 1.0]), 500)
    assert converged and not errors
    np.testing.assert_allclose(x, [0.3, -0.2], atol=1e-3)
    assert evals == len(history) <= 500


def test_nelder_mead_respects_box():
    f = lambda x: float(x[0])  # noqa: E731
    x, fx, *_ = nelder_mead(f, np.array([0.5]), np.array([0.0]), np.array([1.0]), 200)
    assert x[0] == pytest.approx(0.0, abs=1e-6)


def test_start_count():
    assert start_count(400, 1) == 10
    assert start_count(10, 3) == 1
    assert start_count(10**6, 1) == 32
