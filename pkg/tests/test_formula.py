import numpy as np
import pandas as pd
import pytest
from scipy.integrate import quad
from scipy.interpolate import CubicSpline

from evtkit.errors import ExtrapolationWarning, RankError, SchemaError
from evtkit.formula import (
    CubicRegressionSpline,
    Design,
    Formula,
    Indicator,
    Spline,
    build_design,
    parse_formulas,
)


def test_parse_and_print():
    f = Formula.parse("scale ~ 1 + ind(season==1) + crs(V3, B=4) + lin(w)")
    assert str(f) == "scale ~ 1 + ind(season==1) + crs(V3, B=4) + lin(w)"
    assert f.variables == ["season", "V3", "w"]
    assert f.splines == [Spline("V3", 4)]
    assert Formula.parse(str(f)) == f


@pytest.mark.parametrize(
    "text",
    ["scale ~ ind(s==1)", "scale ~ 1 + foo(x)", "rate ~ 1", "shape ~ 1 + lin(x)", "scale ~ 1 + crs(x, B=2)", "scale ~ 1 + 1"],
)
def test_parse_rejects(text):
    with pytest.raises(ValueError):
        Formula.parse(text)


def test_parse_block():
    fs = parse_formulas("# model\nthreshold ~ 1 + ind(season==1)\nscale ~ 1\n\nshape ~ 1\n")
    assert set(fs) == {"threshold", "scale", "shape"}
    with pytest.raises(ValueError):
        parse_formulas("scale ~ 1\nscale ~ 1")


def test_spline_interpolates_like_natural_cubic():
    knots = np.array([0.0, 0.3, 0.5, 0.9, 1.4])
    beta = np.array([1.0, -0.5, 2.0, 0.3, 0.7])
    basis = CubicRegressionSpline(knots)
    x = np.linspace(0, 1.4, 97)
    ref = CubicSpline(knots, beta, bc_type="natural")
    np.testing.assert_allclose(basis(x) @ beta, ref(x), atol=1e-12)
    wiggle = quad(lambda t: ref(t, 2) ** 2, 0, 1.4, points=knots[1:-1], limit=100)[0]
    assert beta @ basis.penalty @ beta == pytest.approx(wiggle, rel=1e-9)


def test_spline_penalty_kills_lines():
    basis = CubicRegressionSpline(np.linspace(0, 1, 6))
    line = 2.0 + 3.0 * basis.knots
    assert line @ basis.penalty @ line == pytest.approx(0.0, abs=1e-9)


def _frame(n=200, seed=0):
    rng = np.random.default_rng(seed)
    return pd.DataFrame({"x": rng.random(n), "season": rng.integers(1, 3, n)})


def test_design_identifiable_sum_to_zero():
    f = Formula.parse("scale ~ 1 + ind(season==1) + crs(x, B=5)")
    d = Design(f, _frame())
    X = d.training.X
    assert X.shape[1] == 1 + 1 + 4
    np.testing.assert_allclose(X[:, 2:].sum(axis=0), 0.0, atol=1e-9)
    assert np.linalg.matrix_rank(X) == X.shape[1]
    assert d.n_smooth == 1
    assert d.penalty([2.0]).shape == (6, 6)


def test_raw_design_has_full_spline():
    dm = build_design(Formula.parse("scale ~ 1 + crs(x, B=5)"), _frame())
    assert dm.n_columns == 6
    np.testing.assert_allclose(dm.X[:, 1:].sum(axis=1), 1.0, atol=1e-12)


def test_indicator_column():
    frame = _frame()
    dm = build_design(Formula("scale", (Formula.parse("scale ~ 1").terms[0], Indicator("season", 1.0))), frame)
    np.testing.assert_array_equal(dm.X[:, 1], (frame.season == 1).astype(float))


def test_extrapolation_warns_and_clamps():
    d = Design(Formula.parse("scale ~ 1 + crs(x, B=4)"), _frame())
    new = pd.DataFrame({"x": [-1.0, 5.0]})
    with pytest.warns(ExtrapolationWarning):
        X = d.matrix(new)
    edge = d.matrix(pd.DataFrame({"x": [d._splines[Spline("x", 4)].knots[0]]}), warn=False)
    np.testing.assert_allclose(X[0], edge[0])


def test_design_errors():
    frame = pd.DataFrame({"x": np.repeat([1.0, 2.0], 50)})
    with pytest.raises(RankError):
        Design(Formula.parse("scale ~ 1 + crs(x, B=4)"), frame)
    with pytest.raises(SchemaError):
        Design(Formula.parse("scale ~ 1 + lin(nope)"), frame)
