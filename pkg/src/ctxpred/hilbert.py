"""Weighted inner-product geometry for context-conditioned variables.

A random variable here is a real value attached to every (context,
next-symbol) pair the model can produce.  The natural measure on those
pairs weights a context by its normalized prefix mass and the symbol by
its conditional probability; expectations, inner products, and
orthogonal projections are then finite weighted sums over an enumerated
support.

Exact mode enumerates contexts level by level until all but ``tail_tol``
of the context mass is covered; every result therefore comes with a
certified tail bound.  Sample mode applies the same projection algebra
to empirical vectors (one entry per corpus token) with moments estimated
on training rows only, so held-out rows never leak into the fit.

Reductions use numpy's pairwise summation in a fixed row order, keeping
results reproducible bit for bit on a given platform.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import AlignmentError, ConvergenceError, DegenerateError
from .lm import AutoregressiveLM, EnumerationBudget, _chain_arrays, prefix_normalizer

# Hard cap on enumerated contexts: past this the support no longer fits
# comfortably in memory and the model needs a looser tail_tol instead.
MAX_CONTEXTS = 2_000_000

# Below this squared norm a projection direction is treated as zero.
ZERO_NORM_TOL = 1e-24


@dataclass(frozen=True)
class MeasureTable:
    """Enumerated support of the joint context/next-symbol measure.

    Rows are stored column-wise: ``row_context`` indexes an internal
    context trie, ``row_symbol`` indexes ``symbols`` (units followed by
    the end-of-string symbol), ``row_cond`` is the conditional
    probability of the symbol in that context, and ``weights`` carries
    the joint mass.  ``tail_mass`` bounds the context mass left out of
    the enumeration.
    """

    source: AutoregressiveLM
    budget: EnumerationBudget
    symbols: tuple[str, ...]
    weights: np.ndarray
    row_context: np.ndarray
    row_symbol: np.ndarray
    row_cond: np.ndarray
    tail_mass: float
    ctx_parent: np.ndarray = field(repr=False)
    ctx_unit: np.ndarray = field(repr=False)
    ctx_mass: np.ndarray = field(repr=False)

    @classmethod
    def from_lm(cls, lm: AutoregressiveLM, budget: EnumerationBudget) -> "MeasureTable":
        """Enumerate contexts of increasing length until mass coverage.

        Total context mass equals the prefix normalizer, so coverage is
        tracked exactly; stopping is by whole levels, which keeps the
        enumeration vectorized and the row order deterministic.
        """
        states, index, trans, emit = _chain_arrays(lm)
        n_states = len(states)
        n_units = emit.shape[1]
        eos_vec = np.array([lm.eos_prob(s) for s in states])
        succ = np.zeros((n_states, n_units), dtype=np.int64)
        for i, s in enumerate(states):
            for a, u in enumerate(lm.alphabet.units):
                if emit[i, a] > 0.0:
                    succ[i, a] = index[lm.next_state(s, u)]

        z = prefix_normalizer(lm)
        ctx_state = [np.array([index[()]], dtype=np.int64)]
        ctx_parent = [np.array([-1], dtype=np.int64)]
        ctx_unit = [np.array([-1], dtype=np.int64)]
        ctx_mass = [np.array([1.0])]
        covered = 1.0 / z
        total_contexts = 1
        frontier_state = ctx_state[0]
        frontier_mass = ctx_mass[0]
        frontier_offset = 0
        level = 0
        while covered < 1.0 - budget.tail_tol:
            if level >= budget.max_len:
                raise ConvergenceError(
                    f"context mass {1.0 - covered:.3g} remains beyond length "
                    f"{budget.max_len}; tail_tol {budget.tail_tol:.3g} not met",
                    remaining=1.0 - covered,
                )
            parts_state, parts_parent, parts_unit, parts_mass = [], [], [], []
            for a in range(n_units):
                p = emit[frontier_state, a]
                hit = np.nonzero(p > 0.0)[0]
                if hit.size == 0:
                    continue
                parts_state.append(succ[frontier_state[hit], a])
                parts_parent.append(frontier_offset + hit)
                parts_unit.append(np.full(hit.size, a, dtype=np.int64))
                parts_mass.append(frontier_mass[hit] * p[hit])
            if not parts_state:
                # no continuations anywhere; remaining mass is exactly zero
                break
            new_state = np.concatenate(parts_state)
            new_parent = np.concatenate(parts_parent)
            new_unit = np.concatenate(parts_unit)
            new_mass = np.concatenate(parts_mass)
            total_contexts += new_state.size
            if total_contexts > MAX_CONTEXTS:
                raise ConvergenceError(
                    f"enumeration needs more than {MAX_CONTEXTS} contexts "
                    f"before reaching coverage 1 - {budget.tail_tol:.3g}; "
                    "relax tail_tol or shrink the model",
                    remaining=1.0 - covered,
                )
            ctx_state.append(new_state)
            ctx_parent.append(new_parent)
            ctx_unit.append(new_unit)
            ctx_mass.append(new_mass)
            covered += float(np.sum(new_mass)) / z
            frontier_offset = total_contexts - new_state.size
            frontier_state = new_state
            frontier_mass = new_mass
            level += 1

        state_arr = np.concatenate(ctx_state)
        mass_arr = np.concatenate(ctx_mass)
        parent_arr = np.concatenate(ctx_parent)
        unit_arr = np.concatenate(ctx_unit)

        # conditional probability of every symbol in every kept context
        conds = np.concatenate([emit[state_arr, :], eos_vec[state_arr, None]], axis=1)
        keep = conds > 0.0
        n_ctx = state_arr.size
        ctx_idx = np.repeat(np.arange(n_ctx, dtype=np.int64), conds.shape[1])
        sym_idx = np.tile(np.arange(conds.shape[1], dtype=np.int64), n_ctx)
        flat_keep = keep.ravel()
        row_context = ctx_idx[flat_keep]
        row_symbol = sym_idx[flat_keep]
        row_cond = conds.ravel()[flat_keep]
        weights = (mass_arr[row_context] / z) * row_cond

        return cls(
            source=lm,
            budget=budget,
            symbols=lm.alphabet.units + (lm.alphabet.eos,),
            weights=weights,
            row_context=row_context,
            row_symbol=row_symbol,
            row_cond=row_cond,
            tail_mass=float(max(1.0 - covered, 0.0)),
            ctx_parent=parent_arr,
            ctx_unit=unit_arr,
            ctx_mass=mass_arr,
        )

    @property
    def n_rows(self) -> int:
        return int(self.weights.size)

    @property
    def total_weight(self) -> float:
        return float(np.sum(self.weights))

    def context_tuple(self, ctx: int) -> tuple[str, ...]:
        """Reconstruct a context (unit tuple) from the internal trie."""
        out = []
        i = int(ctx)
        while self.ctx_parent[i] >= 0 or self.ctx_unit[i] >= 0:
            out.append(self.source.alphabet.units[int(self.ctx_unit[i])])
            i = int(self.ctx_parent[i])
        return tuple(reversed(out))

    def iter_rows(self, limit: int | None = None):
        """Yield (context, symbol, weight) tuples; debugging helper."""
        n = self.n_rows if limit is None else min(limit, self.n_rows)
        for r in range(n):
            yield (
                self.context_tuple(int(self.row_context[r])),
                self.symbols[int(self.row_symbol[r])],
                float(self.weights[r]),
            )


@dataclass(frozen=True)
class RandomVariableTable:
    """A real variable on the enumerated support of one measure."""

    measure: MeasureTable
    values: np.ndarray
    label: str

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.measure.n_rows,):
            raise AlignmentError(
                f"variable {self.label!r} has {vals.shape} values for "
                f"{self.measure.n_rows} rows"
            )
        if not np.all(np.isfinite(vals)):
            raise DegenerateError(f"variable {self.label!r} has non-finite values")
        object.__setattr__(self, "values", vals)

    def with_values(self, values: np.ndarray, label: str) -> "RandomVariableTable":
        return RandomVariableTable(measure=self.measure, values=values, label=label)


@dataclass(frozen=True)
class ProjectionCoefficient:
    """Fitted scalar for removing one variable's component from another.

    Applies as (x - x_mean) - alpha * (z - z_mean); in uncentered mode
    both means are zero.  The same record serves the exact measure-based
    projection and the sample residualization, so a coefficient fitted
    on training rows can be replayed on held-out rows.
    """

    alpha: float
    x_mean: float
    z_mean: float
    centered: bool
    x_label: str = "x"
    z_label: str = "z"

    def apply(self, x: np.ndarray, z: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        z = np.asarray(z, dtype=float)
        return (x - self.x_mean) - self.alpha * (z - self.z_mean)


def _require_same_measure(x: RandomVariableTable, y: RandomVariableTable) -> None:
    if x.measure is not y.measure:
        raise AlignmentError(
            f"variables {x.label!r} and {y.label!r} live on different measures"
        )


def inner_product(x: RandomVariableTable, y: RandomVariableTable) -> float:
    """Measure-weighted inner product sum_rows w * x * y.

    np.sum reduces with pairwise summation in fixed row order, so the
    value is reproducible for identical inputs.
    """
    _require_same_measure(x, y)
    return float(np.sum(x.measure.weights * x.values * y.values))


def norm(x: RandomVariableTable) -> float:
    return float(np.sqrt(inner_product(x, x)))


def mean(x: RandomVariableTable) -> float:
    """Expectation under the (truncated, hence renormalized) measure."""
    w = x.measure.weights
    return float(np.sum(w * x.values) / np.sum(w))


def project_complement(
    x: RandomVariableTable,
    z: RandomVariableTable,
    center: bool = True,
) -> tuple[RandomVariableTable, ProjectionCoefficient]:
    """Remove from x its component along z; returns residual and scalar.

    With ``center`` the variables are mean-centered first, which makes
    the residual uncorrelated with z under the measure (not merely
    orthogonal to it).
    """
    _require_same_measure(x, z)
    if center:
        mx, mz = mean(x), mean(z)
    else:
        mx = mz = 0.0
    xc = x.values - mx
    zc = z.values - mz
    w = x.measure.weights
    denom = float(np.sum(w * zc * zc))
    if denom <= ZERO_NORM_TOL:
        raise DegenerateError(
            f"projection direction {z.label!r} has zero norm after centering"
        )
    alpha = float(np.sum(w * xc * zc)) / denom
    coeff = ProjectionCoefficient(
        alpha=alpha,
        x_mean=mx,
        z_mean=mz,
        centered=center,
        x_label=x.label,
        z_label=z.label,
    )
    residual = RandomVariableTable(
        measure=x.measure,
        values=xc - alpha * zc,
        label=f"{x.label}_perp_{z.label}",
    )
    return residual, coeff


# -- sample mode -----------------------------------------------------------


def fit_projection(
    x_train: np.ndarray,
    z_train: np.ndarray,
    x_label: str = "x",
    z_label: str = "z",
) -> ProjectionCoefficient:
    """Estimate the residualization coefficient from training rows only.

    alpha is the ratio of unbiased sample covariances cov(x, z) /
    var(z); together with the training means it can be applied to any
    later rows without re-estimating moments.
    """
    x = np.asarray(x_train, dtype=float)
    z = np.asarray(z_train, dtype=float)
    if x.shape != z.shape or x.ndim != 1:
        raise AlignmentError(
            f"training vectors must be equal-length 1-d arrays, got {x.shape} and {z.shape}"
        )
    if x.size < 2:
        raise DegenerateError("need at least two rows to fit a projection")
    mx = float(np.mean(x))
    mz = float(np.mean(z))
    xc = x - mx
    zc = z - mz
    denom = float(np.sum(zc * zc) / (x.size - 1))
    if denom <= ZERO_NORM_TOL:
        raise DegenerateError(f"{z_label!r} has zero sample variance")
    alpha = float(np.sum(xc * zc) / (x.size - 1)) / denom
    return ProjectionCoefficient(
        alpha=alpha,
        x_mean=mx,
        z_mean=mz,
        centered=True,
        x_label=x_label,
        z_label=z_label,
    )


def sample_orthogonalize(x: np.ndarray, z: np.ndarray) -> np.ndarray:
    """In-sample residualization: center both vectors, subtract the
    least-squares component of x along z.  The result has zero mean and
    zero sample covariance with z."""
    coeff = fit_projection(x, z)
    return coeff.apply(x, z)
