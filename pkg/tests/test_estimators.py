import itertools

import numpy as np
import pytest

from mencode.errors import NoInteriorMode, OutOfRangeValue
from mencode.estimators import (
    ESS_LADDER,
    Predictor,
    class_posteriors,
    ess_lower_bound,
    fit,
    min_feasible_ess,
    predict_class,
    predict_joint,
)
from mencode.model import ParameterSet, naive_bayes_structure

from test_model import make_dataset, make_schema, single_var_dataset


def test_fit_four_methods_single_binary_variable():
    # n = 5, k = 3, uniform subjective prior (ess = 2 on a binary variable).
    ds, st = single_var_dataset([2, 3])
    values = {}
    for method in ("MMLWF", "MMLP", "MMLV", "MDL"):
        pred = fit(method, ds, st, ess=2.0)
        values[method] = float(pred.params.tables[0][0, 1])
    assert values["MMLWF"] == pytest.approx(3.5 / 6)
    assert values["MMLP"] == pytest.approx(0.6)
    assert values["MMLV"] == pytest.approx(2.5 / 4)
    assert values["MDL"] == pytest.approx(3.5 / 6)


def test_fit_mdl_on_empty_dataset_gives_jeffreys_mean():
    ds, st = single_var_dataset([0, 0])
    pred = fit("MDL", ds, st, ess=1.0)
    np.testing.assert_allclose(pred.params.tables[0], [[0.5, 0.5]])


def test_fit_infeasible_ess_reports_hint():
    ds, st = single_var_dataset([0, 5])
    with pytest.raises(NoInteriorMode) as exc:
        fit("MMLV", ds, st, ess=2.0)
    # MMLV on a binary variable needs mu_h = ess/2 > 3/2, so the ladder hint is 4.
    assert exc.value.min_feasible_ess == pytest.approx(4.0)


def test_fit_is_deterministic():
    rng = np.random.default_rng(0)
    rows = np.column_stack([rng.integers(0, 2, 30), rng.integers(0, 2, 30)])
    ds = make_dataset([2, 2], rows, class_index=1)
    st = naive_bayes_structure(ds.schema)
    a = fit("MMLV", ds, st, ess=8.0)
    b = fit("MMLV", ds, st, ess=8.0)
    for t1, t2 in zip(a.params.tables, b.params.tables):
        assert np.array_equal(t1, t2)


def _hand_predictor(theta_class, theta_leaf_c0, theta_leaf_c1):
    st = naive_bayes_structure(make_schema([2, 2], class_index=1))
    params = ParameterSet(structure=st, tables=(
        np.array([theta_leaf_c0, theta_leaf_c1]),
        np.array([theta_class]),
    ))
    return Predictor(method="MMLP", structure=st, params=params, ess=1.0)


def test_predict_class_uniform_params():
    pred = _hand_predictor([0.5, 0.5], [0.5, 0.5], [0.5, 0.5])
    np.testing.assert_allclose(predict_class(pred, [0]), [0.5, 0.5])


def test_predict_class_bayes_rule_hand_value():
    pred = _hand_predictor([0.5, 0.5], [0.9, 0.1], [0.1, 0.9])
    np.testing.assert_allclose(predict_class(pred, [0]), [0.9, 0.1], atol=1e-12)


def test_predict_class_sums_to_one():
    pred = _hand_predictor([0.3, 0.7], [0.8, 0.2], [0.25, 0.75])
    for leaf in (0, 1):
        assert predict_class(pred, [leaf]).sum() == pytest.approx(1.0, abs=1e-9)


def test_predict_joint_uniform():
    pred = _hand_predictor([0.5, 0.5], [0.5, 0.5], [0.5, 0.5])
    for row in itertools.product(range(2), repeat=2):
        assert predict_joint(pred, row) == pytest.approx(0.25)


def test_predict_joint_sums_to_one():
    pred = _hand_predictor([0.4, 0.6], [0.8, 0.2], [0.3, 0.7])
    total = sum(predict_joint(pred, row) for row in itertools.product(range(2), repeat=2))
    assert total == pytest.approx(1.0, abs=1e-12)


def test_predict_class_consistent_with_joint():
    # P(k | r) must equal joint(r + k) normalized over k, exhaustively.
    ds = make_dataset([2, 3, 2],
                      [[0, 0, 0], [1, 2, 1], [0, 1, 1], [1, 1, 0], [0, 2, 0],
                       [1, 0, 1], [0, 0, 1], [1, 2, 0]],
                      class_index=2)
    st = naive_bayes_structure(ds.schema)
    pred = fit("MDL", ds, st, ess=2.0)
    for leaves in itertools.product(range(2), range(3)):
        joints = np.array([
            predict_joint(pred, (*leaves, c)) for c in range(2)
        ])
        np.testing.assert_allclose(
            predict_class(pred, leaves), joints / joints.sum(), atol=1e-12)


def test_predict_class_out_of_range():
    pred = _hand_predictor([0.5, 0.5], [0.9, 0.1], [0.1, 0.9])
    with pytest.raises(OutOfRangeValue):
        predict_class(pred, [2])
    with pytest.raises(OutOfRangeValue):
        predict_class(pred, [0, 0])


def test_class_posteriors_ignores_class_column():
    pred = _hand_predictor([0.5, 0.5], [0.9, 0.1], [0.1, 0.9])
    rows = np.array([[0, 0], [0, 1]])
    posts = class_posteriors(pred, rows)
    np.testing.assert_allclose(posts[0], posts[1])


def test_ess_lower_bound_and_ladder():
    _ds, st = single_var_dataset([0, 5])
    mins = np.array([0.0])
    assert ess_lower_bound(mins, st, "MDL") == 0.0
    assert ess_lower_bound(mins, st, "MMLP") == pytest.approx(2.0)
    assert ess_lower_bound(mins, st, "MMLV") == pytest.approx(3.0)
    assert ess_lower_bound(mins, st, "MMLWF") == pytest.approx(1.0)
    # Strictly-greater ladder selection: a bound of exactly 2 picks 4.
    assert min_feasible_ess(mins, st, ["MMLP"]) == pytest.approx(4.0)
    assert min_feasible_ess(mins, st, ["MDL"]) == pytest.approx(ESS_LADDER[0])
