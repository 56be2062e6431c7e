"""Linear programming and zero-sum game solving.

A small dense two-phase simplex with Bland's rule, runnable over exact
rationals (``fractions.Fraction``) or doubles.  Both backends share one
tableau implementation; the dtype is the only difference.  Bland's rule keeps
the pivot sequence deterministic and cycle-free in exact arithmetic, and the
float backend applies a fixed 1e-9 feasibility/optimality tolerance.

Zero-sum matrix games are solved through the classic LP formulation (maximize
the guaranteed payoff subject to mixing constraints).  The returned strategies
are basic solutions, i.e. vertices of the corresponding polytopes; when the
equilibrium is not unique, whichever vertex the pivot sequence reaches is
returned as is.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Literal, Sequence

import numpy as np

__all__ = [
    "LinearProgram",
    "LPSolution",
    "GameSolution",
    "solve_lp",
    "solve_zero_sum",
    "FLOAT_TOL",
]

FLOAT_TOL = 1e-9

Rel = Literal["<=", "=", ">="]
Mode = Literal["exact", "float"]


@dataclass
class LinearProgram:
    """``sense`` the objective over ``Ax (rel) b`` with per-variable bounds.

    ``bounds[i]`` is a ``(lo, hi)`` pair; ``None`` means unbounded on that
    side.  Omitted bounds default to ``(0, None)`` for every variable.
    """

    objective: Sequence
    rows: Sequence[tuple[Sequence, Rel, object]]
    bounds: Sequence[tuple] | None = None
    sense: Literal["max", "min"] = "max"

    def bound(self, i: int) -> tuple:
        if self.bounds is None:
            return (0, None)
        return self.bounds[i]


@dataclass
class LPSolution:
    status: Literal["optimal", "infeasible", "unbounded"]
    values: list | None = None
    objective: object | None = None


@dataclass
class GameSolution:
    row_strategy: list
    column_strategy: list
    value: object


class _Tableau:
    """Dense simplex tableau over a chosen scalar type."""

    def __init__(self, a, b, dtype, tol, ncols: int = 0):
        # an LP can legitimately have no constraint rows at all
        if len(a) == 0:
            self.T = np.zeros((0, ncols), dtype=dtype)
        else:
            self.T = np.array(a, dtype=dtype)
        self.b = np.array(b, dtype=dtype)
        self.dtype = dtype
        self.tol = tol
        self.rows, self.cols = self.T.shape
        self.basic: list[int] = [-1] * self.rows
        self.forbidden: set[int] = set()

    def pivot(self, r: int, c: int) -> None:
        piv = self.T[r, c]
        self.T[r, :] = self.T[r, :] / piv
        self.b[r] = self.b[r] / piv
        for i in range(self.rows):
            if i == r:
                continue
            f = self.T[i, c]
            if f != 0:
                self.T[i, :] = self.T[i, :] - f * self.T[r, :]
                self.b[i] = self.b[i] - f * self.b[r]
        self.basic[r] = c

    def reduced_costs(self, cost):
        r = np.array(cost, dtype=self.dtype)
        for i, bi in enumerate(self.basic):
            cb = cost[bi]
            if cb != 0:
                r = r - cb * self.T[i, :]
        return r

    def objective_value(self, cost):
        z = 0
        for i, bi in enumerate(self.basic):
            z = z + cost[bi] * self.b[i]
        return z

    def solve(self, cost, max_iters: int) -> str:
        """Minimize ``cost`` from the current basis.  Bland's rule throughout."""
        red = self.reduced_costs(cost)
        for it in range(max_iters):
            enter = -1
            for j in range(self.cols):
                if j in self.forbidden:
                    continue
                if red[j] < -self.tol:
                    enter = j
                    break
            if enter < 0:
                return "optimal"
            leave = -1
            best = None
            for i in range(self.rows):
                a = self.T[i, enter]
                if a > self.tol:
                    ratio = self.b[i] / a
                    if best is None or ratio < best or (
                        ratio == best and self.basic[i] < self.basic[leave]
                    ):
                        best = ratio
                        leave = i
            if leave < 0:
                return "unbounded"
            self.pivot(leave, enter)
            # Same pivot applied to the cost row; refresh periodically in
            # float mode to shake off accumulated roundoff.
            if self.tol and it % 50 == 49:
                red = self.reduced_costs(cost)
            else:
                red = red - red[enter] * self.T[leave, :]
        raise RuntimeError("simplex iteration budget exhausted")


def _standard_form(lp: LinearProgram, conv):
    """Rewrite an LP as ``min c.x, Ax = b, x >= 0`` plus a back-transform.

    Returns (c, rows, rhs, recover) where ``recover`` maps a standard-form
    solution vector back to the original variables.
    """
    nvars = len(lp.objective)
    # Per original variable: list of (std_col, coeff) plus a constant offset.
    var_terms: list[list[tuple[int, object]]] = []
    var_offset: list[object] = []
    extra_rows: list[tuple[list[tuple[int, object]], str, object]] = []
    col = 0
    for i in range(nvars):
        lo, hi = lp.bound(i)
        lo = None if lo is None else conv(lo)
        hi = None if hi is None else conv(hi)
        if lo is not None:
            var_terms.append([(col, conv(1))])
            var_offset.append(lo)
            if hi is not None:
                extra_rows.append(([(col, conv(1))], "<=", hi - lo))
            col += 1
        elif hi is not None:
            # free below, capped above: x = hi - x'
            var_terms.append([(col, conv(-1))])
            var_offset.append(hi)
            col += 1
        else:
            var_terms.append([(col, conv(1)), (col + 1, conv(-1))])
            var_offset.append(conv(0))
            col += 2
    nstd = col

    sign = conv(-1) if lp.sense == "max" else conv(1)
    c = [conv(0)] * nstd
    for i, ci in enumerate(lp.objective):
        for j, coef in var_terms[i]:
            c[j] += sign * conv(ci) * coef

    std_rows = []
    for coeffs, rel, rhs in lp.rows:
        if len(coeffs) != nvars:
            raise ValueError(
                f"row has {len(coeffs)} coefficients, expected {nvars}"
            )
        line = [conv(0)] * nstd
        const = conv(0)
        for i, a in enumerate(coeffs):
            a = conv(a)
            if a == 0:
                continue
            const += a * var_offset[i]
            for j, coef in var_terms[i]:
                line[j] += a * coef
        std_rows.append((line, rel, conv(rhs) - const))
    for terms, rel, rhs in extra_rows:
        line = [conv(0)] * nstd
        for j, coef in terms:
            line[j] += coef
        std_rows.append((line, rel, rhs))

    def recover(xstd):
        out = []
        for i in range(nvars):
            val = var_offset[i]
            for j, coef in var_terms[i]:
                val = val + coef * xstd[j]
            out.append(val)
        return out

    return c, std_rows, nstd, recover


def solve_lp(lp: LinearProgram, mode: Mode = "exact") -> LPSolution:
    """Two-phase simplex.  ``mode`` picks the scalar type, nothing else."""
    if mode == "exact":
        conv = Fraction
        dtype = object
        tol = Fraction(0)
    elif mode == "float":
        conv = float
        dtype = np.float64
        tol = FLOAT_TOL
    else:
        raise ValueError(f"unknown mode {mode!r}")

    c, std_rows, nstd, recover = _standard_form(lp, conv)

    # Attach slack/surplus columns, normalize rhs nonnegative.
    nrows = len(std_rows)
    ncols = nstd + nrows  # one slot per row; '=' rows leave theirs unused (zero col)
    a = [[conv(0)] * ncols for _ in range(nrows)]
    b = []
    slack_ok = [False] * nrows
    for r, (line, rel, rhs) in enumerate(std_rows):
        for j, v in enumerate(line):
            a[r][j] = v
        if rel == "<=":
            a[r][nstd + r] = conv(1)
        elif rel == ">=":
            a[r][nstd + r] = conv(-1)
        elif rel != "=":
            raise ValueError(f"unknown relation {rel!r}")
        if rhs < 0:
            a[r] = [-x for x in a[r]]
            rhs = -rhs
        b.append(rhs)
        slack_ok[r] = a[r][nstd + r] == 1

    # Artificials where no ready identity column exists.
    art_cols = []
    for r in range(nrows):
        if not slack_ok[r]:
            art_cols.append(r)
    total_cols = ncols + len(art_cols)
    full = [[conv(0)] * total_cols for _ in range(nrows)]
    for r in range(nrows):
        for j in range(ncols):
            full[r][j] = a[r][j]
    for idx, r in enumerate(art_cols):
        full[r][ncols + idx] = conv(1)

    tab = _Tableau(full, b, dtype, tol, ncols=total_cols)
    for r in range(nrows):
        tab.basic[r] = nstd + r if slack_ok[r] else ncols + art_cols.index(r)

    max_iters = 5000 + 60 * (nrows + total_cols)

    if art_cols:
        phase1 = [conv(0)] * total_cols
        for idx in range(len(art_cols)):
            phase1[ncols + idx] = conv(1)
        status = tab.solve(phase1, max_iters)
        if status != "optimal":
            raise RuntimeError("phase 1 cannot be unbounded")
        if tab.objective_value(phase1) > tol:
            return LPSolution(status="infeasible")
        # Pivot artificials out of the basis (or drop redundant rows).
        drop = []
        for i in range(tab.rows):
            if tab.basic[i] >= ncols:
                done = False
                for j in range(ncols):
                    nonzero = abs(tab.T[i, j]) > tol if mode == "float" else tab.T[i, j] != 0
                    if nonzero:
                        tab.pivot(i, j)
                        done = True
                        break
                if not done:
                    drop.append(i)
        if drop:
            keep = [i for i in range(tab.rows) if i not in drop]
            tab.T = tab.T[keep, :]
            tab.b = tab.b[keep]
            tab.basic = [tab.basic[i] for i in keep]
            tab.rows = len(keep)
        tab.forbidden = set(range(ncols, total_cols))

    status = tab.solve(c + [conv(0)] * (total_cols - nstd), max_iters)
    if status == "unbounded":
        return LPSolution(status="unbounded")

    xstd = [conv(0)] * nstd
    for i, bi in enumerate(tab.basic):
        if bi < nstd:
            xstd[bi] = tab.b[i]
    values = recover(xstd)
    obj = sum((conv(ci) * v for ci, v in zip(lp.objective, values)), conv(0))
    return LPSolution(status="optimal", values=values, objective=obj)


def solve_zero_sum(payoff: Sequence[Sequence], mode: Mode = "exact") -> GameSolution:
    """Equilibrium of the zero-sum game with the given row-player payoffs.

    Solves both players' LPs: the row player maximizes the floor of her
    expected payoff over the opponent's pure responses, the column player
    minimizes the ceiling.  In exact mode the two optima must coincide; the
    float backend tolerates 1e-7 slack.
    """
    nr = len(payoff)
    nc = len(payoff[0])
    if any(len(row) != nc for row in payoff):
        raise ValueError("payoff matrix is ragged")

    # Row player: vars y_0..y_{nr-1}, v.  max v  s.t.  y^T A >= v, sum y = 1.
    rows = []
    for j in range(nc):
        coeffs = [payoff[i][j] for i in range(nr)] + [-1]
        rows.append((coeffs, ">=", 0))
    rows.append(([1] * nr + [0], "=", 1))
    row_lp = LinearProgram(
        objective=[0] * nr + [1],
        rows=rows,
        bounds=[(0, None)] * nr + [(None, None)],
        sense="max",
    )
    row_sol = solve_lp(row_lp, mode)
    if row_sol.status != "optimal":
        raise RuntimeError(f"row player LP came back {row_sol.status}")

    cols = []
    for i in range(nr):
        coeffs = [payoff[i][j] for j in range(nc)] + [-1]
        cols.append((coeffs, "<=", 0))
    cols.append(([1] * nc + [0], "=", 1))
    col_lp = LinearProgram(
        objective=[0] * nc + [1],
        rows=cols,
        bounds=[(0, None)] * nc + [(None, None)],
        sense="min",
    )
    col_sol = solve_lp(col_lp, mode)
    if col_sol.status != "optimal":
        raise RuntimeError(f"column player LP came back {col_sol.status}")

    v_row = row_sol.objective
    v_col = col_sol.objective
    if mode == "exact":
        if v_row != v_col:
            raise RuntimeError(f"duality gap in exact mode: {v_row} vs {v_col}")
    elif abs(float(v_row) - float(v_col)) > 1e-7:
        raise RuntimeError(f"duality gap too large: {v_row} vs {v_col}")

    return GameSolution(
        row_strategy=list(row_sol.values[:nr]),
        column_strategy=list(col_sol.values[:nc]),
        value=v_row,
    )
