"""Ordinary least squares, variance decomposition, and model identities.

The linear layer deliberately stays small: a design matrix with an
explicit intercept column and a condition-number gate, an OLS fit with a
floored residual variance, Gaussian log-likelihoods for out-of-sample
comparison against a mean-only baseline, and an averaged-over-orderings
(Shapley) decomposition of R-squared into per-group shares.

Two structural identities are enforced as first-class checks rather
than left to downstream eyeballing:

* swapping a predictor for (frequency - surprisal) changes individual
  coefficients in a known linear way but cannot change the fitted
  values, and
* residualizing one predictor against another preserves the first
  coefficient while turning the second into its single-predictor slope.

Both checks raise ``IdentityError`` with the measured deltas when the
algebra fails to hold numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import scipy.linalg

from .errors import (
    AlignmentError,
    ConfigError,
    DegenerateError,
    IdentityError,
    RankDeficiencyError,
    SizeError,
)
from .hilbert import sample_orthogonalize

INTERCEPT_LABEL = "intercept"

# Designs with condition number above this are treated as rank
# deficient for practical purposes: coefficient read-outs become
# meaningless well before exact singularity.
CONDITION_LIMIT = 1e10

# Lower bound applied to the maximum-likelihood residual variance at
# fit time so that perfectly interpolated training folds cannot produce
# infinite log-likelihoods on held-out rows.
VARIANCE_FLOOR = 1e-8

MAX_GROUPS = 12


def _as_column(values, label: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise AlignmentError(f"column {label!r} must be one-dimensional")
    if not np.all(np.isfinite(arr)):
        raise DegenerateError(f"column {label!r} contains non-finite values")
    return arr


@dataclass(frozen=True)
class DesignMatrix:
    """Labelled regressor matrix with a leading intercept column."""

    labels: tuple[str, ...]
    matrix: np.ndarray

    @classmethod
    def build(
        cls, columns: Mapping[str, np.ndarray], intercept: bool = True
    ) -> "DesignMatrix":
        if not columns and not intercept:
            raise ConfigError("design needs at least one column")
        cols = []
        labels = []
        n = None
        for label, values in columns.items():
            arr = _as_column(values, label)
            if n is None:
                n = arr.size
            elif arr.size != n:
                raise AlignmentError(
                    f"column {label!r} has {arr.size} rows, expected {n}"
                )
            labels.append(label)
            cols.append(arr)
        if n is None:  # intercept-only design
            raise ConfigError("intercept-only designs need an explicit row count")
        if intercept:
            labels.insert(0, INTERCEPT_LABEL)
            cols.insert(0, np.ones(n))
        matrix = np.column_stack(cols)
        design = cls(labels=tuple(labels), matrix=matrix)
        design._check_conditioning()
        return design

    @classmethod
    def intercept_only(cls, n: int) -> "DesignMatrix":
        if n < 1:
            raise ConfigError("need at least one row")
        return cls(labels=(INTERCEPT_LABEL,), matrix=np.ones((n, 1)))

    def _check_conditioning(self) -> None:
        cond = np.linalg.cond(self.matrix)
        if cond > CONDITION_LIMIT or not np.isfinite(cond):
            culprits = self._dependent_labels()
            raise RankDeficiencyError(
                f"design condition number {cond:.3e} exceeds "
                f"{CONDITION_LIMIT:.0e}; near-dependent columns: "
                + ", ".join(culprits),
                columns=culprits,
            )

    def _dependent_labels(self) -> list[str]:
        # Pivoted QR points at the columns that add (almost) nothing to
        # the span of the ones already chosen.
        _, r, piv = scipy.linalg.qr(self.matrix, mode="economic", pivoting=True)
        diag = np.abs(np.diag(r))
        if diag[0] == 0.0:
            return list(self.labels)
        weak = diag <= diag[0] / CONDITION_LIMIT
        names = [self.labels[piv[i]] for i in range(diag.size) if weak[i]]
        return names or [self.labels[piv[-1]]]

    @property
    def n_obs(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_cols(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True)
class FitResult:
    """OLS estimates plus the training-scale quantities reused later.

    ``residual_variance`` is the maximum-likelihood estimate SSE/n
    floored at ``VARIANCE_FLOOR``; standard errors use the usual
    degrees-of-freedom correction SSE/(n-k).
    """

    labels: tuple[str, ...]
    coefficients: np.ndarray
    std_errors: np.ndarray
    n_obs: int
    sse: float
    sst: float
    r2: float
    residual_variance: float

    def coef(self, label: str) -> float:
        try:
            return float(self.coefficients[self.labels.index(label)])
        except ValueError:
            raise AlignmentError(f"no coefficient named {label!r}") from None

    def coef_dict(self) -> dict[str, float]:
        return {lab: float(b) for lab, b in zip(self.labels, self.coefficients)}

    def predict(self, design: DesignMatrix) -> np.ndarray:
        if design.labels != self.labels:
            raise AlignmentError(
                f"design columns {design.labels} do not match fitted "
                f"columns {self.labels}"
            )
        return design.matrix @ self.coefficients


def ols_fit(design: DesignMatrix, y: np.ndarray) -> FitResult:
    y = _as_column(y, "response")
    x = design.matrix
    n, k = x.shape
    if y.size != n:
        raise AlignmentError(f"response has {y.size} rows, design has {n}")
    if n <= k:
        raise DegenerateError(
            f"need more rows ({n}) than columns ({k}) to fit and "
            "estimate residual scale"
        )
    beta, _, _, _ = np.linalg.lstsq(x, y, rcond=None)
    resid = y - x @ beta
    sse = float(resid @ resid)
    centered = y - y.mean()
    sst = float(centered @ centered)
    r2 = 0.0 if sst == 0.0 else 1.0 - sse / sst
    sigma2_df = sse / (n - k)
    xtx_inv = np.linalg.inv(x.T @ x)
    std_errors = np.sqrt(np.clip(np.diag(xtx_inv), 0.0, None) * sigma2_df)
    return FitResult(
        labels=design.labels,
        coefficients=beta,
        std_errors=std_errors,
        n_obs=n,
        sse=sse,
        sst=sst,
        r2=r2,
        residual_variance=max(sse / n, VARIANCE_FLOOR),
    )


def fit_columns(columns: Mapping[str, np.ndarray], y: np.ndarray) -> FitResult:
    """Convenience wrapper: build the design and fit in one step."""
    return ols_fit(DesignMatrix.build(columns), y)


def gaussian_loglik_rows(y: np.ndarray, mean, variance: float) -> np.ndarray:
    """Per-row Normal(mean, variance) log-densities."""
    y = _as_column(y, "response")
    if variance <= 0.0 or not math.isfinite(variance):
        raise DegenerateError(f"variance must be positive, got {variance}")
    mean = np.broadcast_to(np.asarray(mean, dtype=float), y.shape)
    return -0.5 * math.log(2.0 * math.pi * variance) - 0.5 * (y - mean) ** 2 / variance


def gaussian_loglik(y: np.ndarray, mean, variance: float) -> float:
    """Sum of Normal(mean, variance) log-densities over the sample."""
    return float(np.sum(gaussian_loglik_rows(y, mean, variance)))


@dataclass(frozen=True)
class DeltaLogLik:
    """Held-out log-likelihood gain of a fitted model over the
    training-mean baseline (both with training-estimated variances)."""

    total: float
    per_token: float
    n_test: int
    model_loglik: float
    baseline_loglik: float


def delta_loglik(
    y_train: np.ndarray,
    fitted_train: np.ndarray,
    y_test: np.ndarray,
    predicted_test: np.ndarray,
) -> DeltaLogLik:
    y_train = _as_column(y_train, "y_train")
    fitted_train = _as_column(fitted_train, "fitted_train")
    y_test = _as_column(y_test, "y_test")
    predicted_test = _as_column(predicted_test, "predicted_test")
    if y_train.shape != fitted_train.shape:
        raise AlignmentError("training response and fitted values differ in length")
    if y_test.shape != predicted_test.shape:
        raise AlignmentError("test response and predictions differ in length")
    n_tr = y_train.size
    dev_model = y_train - fitted_train
    var_model = max(float(dev_model @ dev_model) / n_tr, VARIANCE_FLOOR)
    base_mean = float(y_train.mean())
    dev_base = y_train - base_mean
    var_base = max(float(dev_base @ dev_base) / n_tr, VARIANCE_FLOOR)
    model = gaussian_loglik(y_test, predicted_test, var_model)
    base = gaussian_loglik(y_test, base_mean, var_base)
    total = model - base
    return DeltaLogLik(
        total=total,
        per_token=total / y_test.size,
        n_test=int(y_test.size),
        model_loglik=model,
        baseline_loglik=base,
    )


# ---------------------------------------------------------------------------
# R-squared decomposition averaged over orderings
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LmgReport:
    groups: tuple[str, ...]
    shares: np.ndarray
    raw_shares: np.ndarray
    total_r2: float
    n_fits: int

    def share(self, group: str) -> float:
        try:
            return float(self.shares[self.groups.index(group)])
        except ValueError:
            raise AlignmentError(f"no group named {group!r}") from None

    def as_dict(self) -> dict[str, float]:
        return {g: float(s) for g, s in zip(self.groups, self.shares)}


def _subset_r2(x_blocks: Sequence[np.ndarray], y: np.ndarray, mask: int) -> float:
    cols = [np.ones(y.size)]
    for i, block in enumerate(x_blocks):
        if mask >> i & 1:
            cols.append(block)
    if len(cols) == 1:
        return 0.0
    x = np.hstack([c.reshape(y.size, -1) for c in cols])
    beta, _, _, _ = np.linalg.lstsq(x, y, rcond=None)
    resid = y - x @ beta
    sse = float(resid @ resid)
    centered = y - y.mean()
    sst = float(centered @ centered)
    return 0.0 if sst == 0.0 else 1.0 - sse / sst


def lmg(
    columns: Mapping[str, np.ndarray],
    y: np.ndarray,
    groups: Mapping[str, Sequence[str]],
) -> LmgReport:
    """Decompose model R-squared into per-group shares.

    Each group's share is its R-squared increment averaged over all
    orders in which the groups could have been added, computed by
    subset (Shapley) weighting from a cache of 2**p subset fits.  The
    shares are nonnegative up to rounding and sum to the full-model
    R-squared; a sum mismatch beyond 1e-10 or a share below -1e-10 is
    reported as a numerical failure rather than silently clipped.
    """
    y = _as_column(y, "response")
    names = tuple(groups)
    p = len(names)
    if p == 0:
        raise ConfigError("need at least one predictor group")
    if p > MAX_GROUPS:
        raise SizeError(
            f"{p} groups would need {2 ** p} subset fits; the limit is "
            f"{MAX_GROUPS} groups ({2 ** MAX_GROUPS} fits)"
        )
    seen: set[str] = set()
    blocks = []
    for gname in names:
        members = list(groups[gname])
        if not members:
            raise ConfigError(f"group {gname!r} is empty")
        overlap = seen & set(members)
        if overlap:
            raise ConfigError(f"columns {sorted(overlap)} appear in two groups")
        seen.update(members)
        cols = []
        for m in members:
            if m not in columns:
                raise ConfigError(f"group {gname!r} references unknown column {m!r}")
            cols.append(_as_column(columns[m], m))
        blocks.append(np.column_stack(cols))
    unused = set(columns) - seen
    if unused:
        raise ConfigError(f"columns {sorted(unused)} belong to no group")

    r2_cache = np.empty(2 ** p)
    for mask in range(2 ** p):
        r2_cache[mask] = _subset_r2(blocks, y, mask)

    # weight of a subset of size s when adding one more group
    fact = [math.factorial(i) for i in range(p + 1)]
    weight = [fact[s] * fact[p - s - 1] / fact[p] for s in range(p)]

    raw = np.zeros(p)
    for g in range(p):
        bit = 1 << g
        for mask in range(2 ** p):
            if mask & bit:
                continue
            s = int(mask).bit_count()
            raw[g] += weight[s] * (r2_cache[mask | bit] - r2_cache[mask])

    total = float(r2_cache[-1])
    if abs(raw.sum() - total) > 1e-10:
        raise DegenerateError(
            f"decomposition sum {raw.sum():.3e} differs from model "
            f"R-squared {total:.3e} by more than 1e-10"
        )
    if np.any(raw < -1e-10):
        worst = float(raw.min())
        raise DegenerateError(
            f"share {worst:.3e} is negative beyond rounding tolerance"
        )
    shares = np.clip(raw, 0.0, None)
    return LmgReport(
        groups=names,
        shares=shares,
        raw_shares=raw.copy(),
        total_r2=total,
        n_fits=2 ** p,
    )


# ---------------------------------------------------------------------------
# Structural identities
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EquivalenceReport:
    """Deltas measured when trading surprisal for its pointwise-mutual-
    information rewrite (frequency minus surprisal) in the same model."""

    fit_surprisal: FitResult
    fit_pmi: FitResult
    deltas: dict[str, float] = field(repr=False)


def equivalence_report(
    y: np.ndarray,
    surprisal: np.ndarray,
    frequency: np.ndarray,
    pmi: np.ndarray | None = None,
    extras: Mapping[str, np.ndarray] | None = None,
    fit_tol: float = 1e-10,
    coef_tol: float = 1e-8,
) -> EquivalenceReport:
    """Fit the surprisal model and the pmi model on raw (unstandardized)
    columns and verify the exact reparameterization identities.

    Because pmi = frequency - surprisal pointwise, the two designs span
    the same space: fits and R-squared must agree to ``fit_tol`` and the
    coefficients must satisfy beta_pmi = -beta_surprisal and
    beta_freq(pmi model) = beta_freq(surprisal model) + beta_surprisal
    to ``coef_tol``.  Standardizing the columns first would rescale the
    coefficients and break both identities, so callers must pass raw
    values.
    """
    s = _as_column(surprisal, "surprisal")
    f = _as_column(frequency, "frequency")
    p = f - s if pmi is None else _as_column(pmi, "pmi")
    extras = dict(extras or {})
    cols_i = {"surprisal": s, "frequency": f, **extras}
    cols_ii = {"pmi": p, "frequency": f, **extras}
    design_i = DesignMatrix.build(cols_i)
    design_ii = DesignMatrix.build(cols_ii)
    fit_i = ols_fit(design_i, y)
    fit_ii = ols_fit(design_ii, y)

    pred_i = fit_i.predict(design_i)
    pred_ii = fit_ii.predict(design_ii)
    deltas = {
        "r2": abs(fit_i.r2 - fit_ii.r2),
        "prediction": float(np.max(np.abs(pred_i - pred_ii))),
        "beta_pmi_vs_neg_surprisal": abs(
            fit_ii.coef("pmi") + fit_i.coef("surprisal")
        ),
        "beta_frequency_shift": abs(
            fit_ii.coef("frequency")
            - (fit_i.coef("frequency") + fit_i.coef("surprisal"))
        ),
        "intercept": abs(fit_ii.coef(INTERCEPT_LABEL) - fit_i.coef(INTERCEPT_LABEL)),
    }
    broken = {}
    if deltas["r2"] > fit_tol:
        broken["r2"] = deltas["r2"]
    if deltas["prediction"] > fit_tol:
        broken["prediction"] = deltas["prediction"]
    if deltas["beta_pmi_vs_neg_surprisal"] > coef_tol:
        broken["beta_pmi_vs_neg_surprisal"] = deltas["beta_pmi_vs_neg_surprisal"]
    if deltas["beta_frequency_shift"] > coef_tol:
        broken["beta_frequency_shift"] = deltas["beta_frequency_shift"]
    if broken:
        raise IdentityError(
            "model-equivalence identities violated: "
            + ", ".join(f"{k}={v:.3e}" for k, v in broken.items()),
            deltas=broken,
        )
    return EquivalenceReport(fit_surprisal=fit_i, fit_pmi=fit_ii, deltas=deltas)


@dataclass(frozen=True)
class TripletReport:
    """Three nested fits demonstrating what residualization does to
    coefficients: A keeps both raw predictors, B residualizes the first
    against the second, C drops the first entirely."""

    fit_raw: FitResult
    fit_residualized: FitResult
    fit_reduced: FitResult
    deltas: dict[str, float] = field(repr=False)


def residualization_triplet(
    y: np.ndarray,
    x1: np.ndarray,
    x2: np.ndarray,
    labels: tuple[str, str] = ("x1", "x2"),
    coef_tol: float = 1e-8,
) -> TripletReport:
    """Check the two coefficient-preservation identities of sample
    residualization.

    With x1 replaced by its residual against x2, the coefficient on the
    residualized column equals the raw model's x1 coefficient, and the
    x2 coefficient collapses to the slope of the x2-only model.  Both
    must hold to ``coef_tol``, otherwise ``IdentityError`` is raised.
    """
    l1, l2 = labels
    x1 = _as_column(x1, l1)
    x2 = _as_column(x2, l2)
    x1_perp = sample_orthogonalize(x1, x2)
    x1_centered = x1 - x1.mean()
    if float(x1_perp @ x1_perp) <= 1e-12 * max(float(x1_centered @ x1_centered), 1e-30):
        raise DegenerateError(
            f"{l1!r} is numerically collinear with {l2!r}: nothing is "
            "left after residualization"
        )
    fit_a = fit_columns({l1: x1, l2: x2}, y)
    fit_b = fit_columns({f"{l1}_perp": x1_perp, l2: x2}, y)
    fit_c = fit_columns({l2: x2}, y)
    deltas = {
        "first_coefficient": abs(fit_a.coef(l1) - fit_b.coef(f"{l1}_perp")),
        "second_coefficient": abs(fit_b.coef(l2) - fit_c.coef(l2)),
    }
    broken = {k: v for k, v in deltas.items() if v > coef_tol}
    if broken:
        raise IdentityError(
            "residualization identities violated: "
            + ", ".join(f"{k}={v:.3e}" for k, v in broken.items()),
            deltas=broken,
        )
    return TripletReport(
        fit_raw=fit_a,
        fit_residualized=fit_b,
        fit_reduced=fit_c,
        deltas=deltas,
    )
