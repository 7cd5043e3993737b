"""Formula language for basis expansions and the design matrices it produces.

Grammar, one line per parameter::

    param ~ 1 [+ lin(VAR)] [+ ind(VAR==LEVEL)] [+ crs(VAR, B=INT)]*

with ``param`` one of ``threshold``, ``scale``, ``shape``; ``shape`` accepts
only ``1``. ``crs`` terms are cubic regression splines parameterised by
their values at ``B`` knots placed at equally spaced sample quantiles.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.linalg import qr

from evtkit.errors import ExtrapolationWarning, RankError, SchemaError

PARAMS = ("threshold", "scale", "shape")


@dataclass(frozen=True)
class Intercept:
    def __str__(self):
        return "1"


@dataclass(frozen=True)
class Linear:
    var: str

    def __str__(self):
        return f"lin({self.var})"


@dataclass(frozen=True)
class Indicator:
    var: str
    level: float

    def __str__(self):
        level = int(self.level) if float(self.level).is_integer() else self.level
        return f"ind({self.var}=={level})"


@dataclass(frozen=True)
class Spline:
    var: str
    dim: int

    def __post_init__(self):
        if self.dim < 3:
            raise ValueError(f"spline dimension must be >= 3, got {self.dim}")

    def __str__(self):
        return f"crs({self.var}, B={self.dim})"


Term = Intercept | Linear | Indicator | Spline

_TERM_PATTERNS = [
    (re.compile(r"^1$"), lambda m: Intercept()),
    (re.compile(r"^lin\(\s*(\w+)\s*\)$"), lambda m: Linear(m.group(1))),
    (re.compile(r"^ind\(\s*(\w+)\s*==\s*([-+.\w]+)\s*\)$"), lambda m: Indicator(m.group(1), float(m.group(2)))),
    (re.compile(r"^crs\(\s*(\w+)\s*,\s*B\s*=\s*(\d+)\s*\)$"), lambda m: Spline(m.group(1), int(m.group(2)))),
]


@dataclass(frozen=True)
class Formula:
    param: str
    terms: tuple = (Intercept(),)

    def __post_init__(self):
        if self.param not in PARAMS:
            raise ValueError(f"unknown parameter {self.param!r}; expected one of {PARAMS}")
        terms = tuple(self.terms)
        object.__setattr__(self, "terms", terms)
        if sum(isinstance(t, Intercept) for t in terms) > 1:
            raise ValueError("at most one intercept allowed")
        if len(set(terms)) != len(terms):
            raise ValueError(f"duplicate terms in {self}")
        if self.param == "shape" and terms != (Intercept(),):
            raise ValueError("the shape formula accepts only '1'")

    @classmethod
    def parse(cls, text: str) -> "Formula":
        m = re.match(r"^\s*(\w+)\s*~\s*(.+?)\s*$", text)
        if not m:
            raise ValueError(f"cannot parse formula {text!r}")
        param, rhs = m.groups()
        pieces = [p.strip() for p in rhs.split("+")]
        if pieces[0] != "1":
            raise ValueError(f"formula must start with '1': {text!r}")
        terms = []
        for piece in pieces:
            for pattern, build in _TERM_PATTERNS:
                tm = pattern.match(piece)
                if tm:
                    terms.append(build(tm))
                    break
            else:
                raise ValueError(f"unrecognised term {piece!r} in {text!r}")
        return cls(param, tuple(terms))

    @property
    def variables(self) -> list[str]:
        return list(dict.fromkeys(t.var for t in self.terms if not isinstance(t, Intercept)))

    @property
    def has_intercept(self) -> bool:
        return any(isinstance(t, Intercept) for t in self.terms)

    @property
    def splines(self) -> list[Spline]:
        return [t for t in self.terms if isinstance(t, Spline)]

    def plus(self, term: Term) -> "Formula":
        return Formula(self.param, self.terms + (term,))

    def __str__(self):
        return f"{self.param} ~ " + " + ".join(str(t) for t in self.terms)


def parse_formulas(text: str) -> dict[str, Formula]:
    """Parse a block of formula lines into ``{param: Formula}``."""
    out = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        f = Formula.parse(line)
        if f.param in out:
            raise ValueError(f"parameter {f.param!r} given twice")
        out[f.param] = f
    return out


class CubicRegressionSpline:
    """Natural cubic spline basis parameterised by function values at knots.

    Evaluated rows satisfy ``basis(x) @ beta = f(x)`` with ``f`` the natural
    cubic interpolant of ``beta`` at ``knots``; the wiggliness penalty is
    ``beta' S beta = integral of f''(x)^2``.
    """

    def __init__(self, knots):
        k = np.asarray(knots, dtype=float)
        if k.size < 3 or np.any(np.diff(k) <= 0):
            raise RankError("spline knots must be at least 3 strictly increasing values")
        self.knots = k
        h = np.diff(k)
        m = k.size
        D = np.zeros((m - 2, m))
        Bm = np.zeros((m - 2, m - 2))
        for i in range(m - 2):
            D[i, i] = 1.0 / h[i]
            D[i, i + 1] = -1.0 / h[i] - 1.0 / h[i + 1]
            D[i, i + 2] = 1.0 / h[i + 1]
            Bm[i, i] = (h[i] + h[i + 1]) / 3.0
            if i < m - 3:
                Bm[i, i + 1] = Bm[i + 1, i] = h[i + 1] / 6.0
        Fm = np.linalg.solve(Bm, D)
        self.F = np.vstack([np.zeros(m), Fm, np.zeros(m)])
        self.penalty = D.T @ Fm
        self.h = h

    @property
    def dim(self) -> int:
        return self.knots.size

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        k, h = self.knots, self.h
        j = np.clip(np.searchsorted(k, x, side="right") - 1, 0, k.size - 2)
        hj = h[j]
        right = k[j + 1] - x
        left = x - k[j]
        a_minus = right / hj
        a_plus = left / hj
        c_minus = (right**3 / hj - hj * right) / 6.0
        c_plus = (left**3 / hj - hj * left) / 6.0
        out = c_minus[:, None] * self.F[j] + c_plus[:, None] * self.F[j + 1]
        rows = np.arange(x.size)
        out[rows, j] += a_minus
        out[rows, j + 1] += a_plus
        return out


@dataclass
class Block:
    term: Term
    columns: slice
    penalty: np.ndarray | None = None

    @property
    def size(self) -> int:
        return self.columns.stop - self.columns.start


@dataclass
class DesignMatrix:
    """Evaluated basis functions, one block of columns per formula term."""

    X: np.ndarray
    blocks: list[Block]
    names: list[str] = field(default_factory=list)

    @property
    def n_columns(self) -> int:
        return self.X.shape[1]

    def penalties(self) -> list[np.ndarray]:
        """Full-size penalty matrices, one per penalised block."""
        out = []
        for b in self.blocks:
            if b.penalty is not None:
                S = np.zeros((self.n_columns, self.n_columns))
                S[b.columns, b.columns] = b.penalty
                out.append(S)
        return out


def _as_frame(data) -> pd.DataFrame:
    return data.frame if hasattr(data, "frame") else data


def _column(frame: pd.DataFrame, var: str) -> np.ndarray:
    if var not in frame.columns:
        raise SchemaError(f"formula references unknown variable {var!r}")
    return frame[var].to_numpy(dtype=float)


class Design:
    """A formula's basis learned on training data, reusable on new rows.

    With ``identifiable=True`` every spline block in a formula with an
    intercept is reparameterised to ``B - 1`` columns satisfying a
    sum-to-zero constraint over the training rows, and its penalty is
    rescaled to the Frobenius norm of the block's cross-product so that
    smoothing parameters are comparable across terms.
    """

    def __init__(self, formula: Formula, data, identifiable: bool = True):
        frame = _as_frame(data)
        self.formula = formula
        self.identifiable = identifiable
        self._splines: dict[Spline, CubicRegressionSpline] = {}
        self._constraints: dict[Spline, np.ndarray] = {}
        self._penalty_scale: dict[Spline, float] = {}
        for term in formula.terms:
            if isinstance(term, Spline):
                x = _column(frame, term.var)
                if np.unique(x).size < term.dim:
                    raise RankError(f"{term}: only {np.unique(x).size} distinct values for {term.dim} knots")
                knots = np.quantile(x, np.linspace(0.0, 1.0, term.dim))
                if np.unique(knots).size < term.dim:
                    raise RankError(f"{term}: tied quantile knots; reduce B")
                basis = CubicRegressionSpline(knots)
                self._splines[term] = basis
                raw = basis(x)
                if identifiable and formula.has_intercept:
                    C = raw.sum(axis=0)[:, None]
                    Q, _ = qr(C, mode="full")
                    Z = Q[:, 1:]
                else:
                    Z = np.eye(term.dim)
                self._constraints[term] = Z
                Xb = raw @ Z
                S = Z.T @ basis.penalty @ Z
                self._penalty_scale[term] = np.linalg.norm(Xb.T @ Xb) / max(np.linalg.norm(S), 1e-300)
            elif not isinstance(term, Intercept):
                _column(frame, term.var)
        self.training = self.design_matrix(frame, warn=False)

    def design_matrix(self, data, warn: bool = True) -> DesignMatrix:
        frame = _as_frame(data)
        n = len(frame)
        cols, blocks, names = [], [], []
        start = 0
        for term in self.formula.terms:
            penalty = None
            if isinstance(term, Intercept):
                block = np.ones((n, 1))
                labels = ["(Intercept)"]
            elif isinstance(term, Linear):
                block = _column(frame, term.var)[:, None]
                labels = [str(term)]
            elif isinstance(term, Indicator):
                block = (_column(frame, term.var) == term.level).astype(float)[:, None]
                labels = [str(term)]
            else:
                basis = self._splines[term]
                x = _column(frame, term.var)
                lo, hi = basis.knots[0], basis.knots[-1]
                outside = (x < lo) | (x > hi)
                if warn and outside.any():
                    warnings.warn(
                        f"{outside.sum()} value(s) of {term.var} outside the training range "
                        f"[{lo:.4g}, {hi:.4g}]; basis clamped",
                        ExtrapolationWarning,
                        stacklevel=3,
                    )
                Z = self._constraints[term]
                block = basis(np.clip(x, lo, hi)) @ Z
                penalty = (Z.T @ basis.penalty @ Z) * self._penalty_scale[term]
                labels = [f"{term}[{i}]" for i in range(block.shape[1])]
            cols.append(block)
            blocks.append(Block(term, slice(start, start + block.shape[1]), penalty))
            names.extend(labels)
            start += block.shape[1]
        X = np.hstack(cols) if cols else np.zeros((n, 0))
        return DesignMatrix(X, blocks, names)

    def matrix(self, data, warn: bool = True) -> np.ndarray:
        return self.design_matrix(data, warn=warn).X

    def penalty(self, smoothing) -> np.ndarray:
        """Total penalty ``sum_j smoothing[j] * S_j`` over spline blocks."""
        Ss = self.training.penalties()
        p = self.training.n_columns
        total = np.zeros((p, p))
        smoothing = np.broadcast_to(np.asarray(smoothing, dtype=float), (len(Ss),))
        for lam, S in zip(smoothing, Ss):
            total += lam * S
        return total

    @property
    def n_smooth(self) -> int:
        return len(self.training.penalties())


def build_design(formula: Formula, data, identifiable: bool = False) -> DesignMatrix:
    """Evaluate ``formula`` on ``data``.

    By default spline blocks keep all ``B`` columns (the raw cubic
    regression spline basis). Pass ``identifiable=True`` to get the
    constrained, penalty-scaled design used for fitting.
    """
    return Design(formula, data, identifiable=identifiable).training
