"""Time-varying coefficient matrices, forcing vectors, and impulse sequences.

Entries are declared as expression strings in ``t`` (continuous
coefficients) or ``k`` (impulse families); see :mod:`idepcag.expr` for
the grammar.  All evaluation is double precision and pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import expr
from .errors import DimensionError, EvalDomainError, SingularMatrixError
from .expr import Expression, parse

__all__ = [
    "MatrixFunction",
    "VectorFunction",
    "ImpulseSequence",
    "parse",
    "eval_matrix",
    "impulse_at",
]


def _as_expression(entry, variable="t"):
    if isinstance(entry, Expression):
        return entry
    if isinstance(entry, str):
        return parse(entry)
    return expr.Num(float(entry))


class MatrixFunction:
    """An n x n matrix of expressions in ``t``.

    Parameters
    ----------
    entries : nested sequence
        n rows of n entries; each entry an expression string, an
        :class:`~idepcag.expr.Expression`, or a number.
    """

    def __init__(self, entries):
        rows = [list(r) for r in entries]
        n = len(rows)
        if n == 0 or any(len(r) != n for r in rows):
            raise DimensionError("matrix entries must form a square n x n grid")
        self.n = n
        self.entries = [[_as_expression(e) for e in row] for row in rows]
        used = frozenset().union(*(e.variables() for row in self.entries for e in row))
        self.constant_flag = "t" not in used
        # value precomputed only when the entries are literal constants
        # (impulse families are expressions in k and evaluate per node)
        self._constant_value = self._eval_entries(0.0) if not used else None

    @classmethod
    def zero(cls, n):
        return cls([[0.0] * n for _ in range(n)])

    @classmethod
    def constant(cls, matrix):
        m = np.asarray(matrix, dtype=float)
        return cls([[float(v) for v in row] for row in m])

    def _eval_entries(self, t):
        out = np.empty((self.n, self.n))
        for i, row in enumerate(self.entries):
            for j, e in enumerate(row):
                try:
                    out[i, j] = e.eval(t=t)
                except EvalDomainError as err:
                    raise EvalDomainError(f"entry ({i},{j}): {err}") from err
        if not np.all(np.isfinite(out)):
            bad = np.argwhere(~np.isfinite(out))[0]
            raise EvalDomainError(
                f"entry ({bad[0]},{bad[1]}) is non-finite at t={t}"
            )
        return out

    def eval(self, t: float) -> np.ndarray:
        """Matrix value at time ``t``."""
        if self._constant_value is not None:
            return self._constant_value.copy()
        return self._eval_entries(float(t))

    def eval_many(self, ts) -> np.ndarray:
        """Stacked values at an array of times; shape ``(len(ts), n, n)``."""
        ts = np.asarray(ts, dtype=float)
        m = ts.shape[0]
        if self._constant_value is not None:
            return np.broadcast_to(self._constant_value, (m, self.n, self.n)).copy()
        out = np.empty((m, self.n, self.n))
        for i, row in enumerate(self.entries):
            for j, e in enumerate(row):
                try:
                    out[:, i, j] = e.eval(t=ts)
                except EvalDomainError as err:
                    raise EvalDomainError(f"entry ({i},{j}): {err}") from err
        if not np.all(np.isfinite(out)):
            raise EvalDomainError("non-finite matrix entry on evaluation grid")
        return out

    def is_zero(self) -> bool:
        return self._constant_value is not None and not np.any(self._constant_value)

    def to_strings(self):
        return [[e.to_source() for e in row] for row in self.entries]


class VectorFunction:
    """An n-vector of expressions in ``t`` (the forcing term)."""

    def __init__(self, entries):
        entries = list(entries)
        if not entries:
            raise DimensionError("vector needs at least one entry")
        self.n = len(entries)
        self.entries = [_as_expression(e) for e in entries]

    @classmethod
    def zero(cls, n):
        return cls([0.0] * n)

    def eval(self, t: float) -> np.ndarray:
        out = np.empty(self.n)
        for i, e in enumerate(self.entries):
            try:
                out[i] = e.eval(t=float(t))
            except EvalDomainError as err:
                raise EvalDomainError(f"entry ({i}): {err}") from err
        if not np.all(np.isfinite(out)):
            raise EvalDomainError(f"non-finite vector entry at t={t}")
        return out

    def eval_many(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        out = np.empty((ts.shape[0], self.n))
        for i, e in enumerate(self.entries):
            try:
                out[:, i] = e.eval(t=ts)
            except EvalDomainError as err:
                raise EvalDomainError(f"entry ({i}): {err}") from err
        if not np.all(np.isfinite(out)):
            raise EvalDomainError("non-finite vector entry on evaluation grid")
        return out

    def is_zero(self) -> bool:
        return all(isinstance(e, expr.Num) and e.value == 0.0 for e in self.entries)

    def to_strings(self):
        return [e.to_source() for e in self.entries]


# Relative floor for the smallest singular value of I + C_k.
_INVERTIBILITY_RTOL = 1e-12


@dataclass
class ImpulseSequence:
    """State-jump data: y(t_k) = (I + C_k) y(t_k^-) + D_k.

    ``C_k``/``D_k`` default to zero outside anything declared.  Entries may
    be given per node index (``c_items``/``d_items`` mapping k to arrays)
    or as expression matrices in ``k`` applying on ``k_range`` (inclusive
    bounds, either side open with ``None``).
    """

    n: int
    c_expr: MatrixFunction | None = None
    d_expr: VectorFunction | None = None
    c_items: dict = field(default_factory=dict)
    d_items: dict = field(default_factory=dict)
    k_range: tuple = (None, None)

    @classmethod
    def none(cls, n):
        return cls(n=n)

    @classmethod
    def constant(cls, C=None, D=None, n=None, k_range=(None, None)):
        if C is not None:
            C = np.atleast_2d(np.asarray(C, dtype=float))
            n = C.shape[0]
        if D is not None:
            D = np.atleast_1d(np.asarray(D, dtype=float))
            n = D.shape[0] if n is None else n
        if n is None:
            raise DimensionError("need C, D, or n to fix the dimension")
        seq = cls(n=n, k_range=k_range)
        if C is not None:
            seq.c_expr = MatrixFunction.constant(C)
        if D is not None:
            seq.d_expr = VectorFunction([float(v) for v in D])
        return seq

    def _in_range(self, k):
        lo, hi = self.k_range
        return (lo is None or k >= lo) and (hi is None or k <= hi)

    def c_at(self, k: int) -> np.ndarray:
        if k in self.c_items:
            return np.asarray(self.c_items[k], dtype=float)
        if self.c_expr is not None and self._in_range(k):
            out = np.empty((self.n, self.n))
            for i, row in enumerate(self.c_expr.entries):
                for j, e in enumerate(row):
                    out[i, j] = e.eval(k=float(k))
            return out
        return np.zeros((self.n, self.n))

    def d_at(self, k: int) -> np.ndarray:
        if k in self.d_items:
            return np.asarray(self.d_items[k], dtype=float)
        if self.d_expr is not None and self._in_range(k):
            return np.array([e.eval(k=float(k)) for e in self.d_expr.entries])
        return np.zeros(self.n)

    def jump_factor(self, k: int) -> np.ndarray:
        """I + C_k, with the invertibility gate applied."""
        C = self.c_at(k)
        M = np.eye(self.n) + C
        smin = np.linalg.svd(M, compute_uv=False)[-1]
        if smin <= _INVERTIBILITY_RTOL * (1.0 + np.linalg.norm(C, 2)):
            raise SingularMatrixError(f"I + C_k is numerically singular at k={k}")
        return M

    def is_identity(self) -> bool:
        """True when no jump data is declared anywhere."""
        return (
            self.c_expr is None
            and self.d_expr is None
            and not self.c_items
            and not self.d_items
        )


def eval_matrix(m: MatrixFunction, t: float) -> np.ndarray:
    """Entrywise evaluation of a matrix function at time ``t``."""
    return m.eval(t)


def impulse_at(s: ImpulseSequence, k: int):
    """(C_k, D_k) with invertibility of I + C_k verified."""
    s.jump_factor(k)
    return s.c_at(k), s.d_at(k)
