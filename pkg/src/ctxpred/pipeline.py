"""Cross-validated analysis: predictor table to report structures.

This module owns the experiment recipe.  Given a predictor source (an
internal LM or an external per-token file) and raw reading-time
observations it:

1. aggregates participants and builds the predictor table,
2. drops document-initial rows (no spillover values there),
3. assigns folds, then per fold standardizes every column with
   training-rows statistics only,
4. fits the competing linear models (raw surprisal, PMI rewrite, and
   the orthogonalized variant), decomposes training R-squared into
   per-group shares, and scores held-out rows against the
   training-mean baseline,
5. optionally fits smooth (spline) counterparts of each model,
6. runs the reparameterization-identity check on the raw columns and
   full-sample raw-scale fits for coefficient read-outs in original
   units.

Nothing here touches the filesystem; the CLI layer serializes the
returned structures.  Test rows never contribute to means, variances,
projection coefficients, or fitted parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .corpus import (
    AggregatedToken,
    TokenObservation,
    aggregate_participants,
    kfold,
    standardize_stats,
)
from .errors import ConfigError, DegenerateError
from .hilbert import fit_projection, sample_orthogonalize
from .predictors import build_predictor_table, table_columns
from .regression import (
    DesignMatrix,
    FitResult,
    delta_loglik,
    equivalence_report,
    gaussian_loglik_rows,
    lmg,
    ols_fit,
)
from .smooth import DEFAULT_KNOTS, LAMBDA_GRID, fit_smooth

MODEL_KINDS = ("surprisal", "pmi", "ortho")
BASE_PREDICTORS = ("surprisal", "pmi", "frequency", "length")


@dataclass(frozen=True)
class ModelSpec:
    """Column recipe for one competing model.

    ``pairs`` lists (column label, source column, anchor column or
    None); anchored columns are replaced by their training-fold
    residual against the anchor.  Spillover twins reuse the recipe with
    ``prev_`` sources and their own training-fold projection.
    """

    name: str
    pairs: tuple[tuple[str, str, str | None], ...]


def model_spec(kind: str, include_length: bool, swap_ortho: str | None) -> ModelSpec:
    if kind == "surprisal":
        pairs = [("surprisal", "surprisal", None), ("frequency", "frequency", None)]
        if include_length:
            pairs.append(("length", "length", None))
    elif kind == "pmi":
        pairs = [("pmi", "pmi", None), ("frequency", "frequency", None)]
        if include_length:
            pairs.append(("length", "length", None))
    elif kind == "ortho":
        if swap_ortho is None:
            pairs = [
                ("ortho_surprisal", "surprisal", "frequency"),
                ("frequency", "frequency", None),
            ]
            if include_length:
                pairs.append(("ortho_length", "length", "frequency"))
        elif swap_ortho == "frequency":
            pairs = [
                ("surprisal", "surprisal", None),
                ("ortho_frequency", "frequency", "surprisal"),
            ]
            if include_length:
                pairs.append(("ortho_length", "length", "surprisal"))
        else:
            raise ConfigError(f"unsupported swap-ortho target {swap_ortho!r}")
    else:
        raise ConfigError(
            f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}"
        )
    return ModelSpec(name=kind, pairs=tuple(pairs))


def _spill(label: str) -> str:
    return f"prev_{label}"


def _needed_sources(specs: Sequence[ModelSpec]) -> list[str]:
    names: list[str] = []
    for spec in specs:
        for _, source, anchor in spec.pairs:
            for base in filter(None, (source, anchor)):
                for variant in (base, _spill(base)):
                    if variant not in names:
                        names.append(variant)
    return names


def _assemble(
    spec: ModelSpec,
    std_train: Mapping[str, np.ndarray],
    std_test: Mapping[str, np.ndarray],
) -> tuple[dict[str, np.ndarray], dict[str, np.ndarray], dict[str, float]]:
    """Build one model's train/test columns from standardized sources.

    Residualization coefficients come from training rows only and are
    applied unchanged to the held-out rows.  Returns the train columns,
    test columns, and the training-fold correlation of each
    residualized column with its anchor (a leak/exactness diagnostic).
    """
    cols_tr: dict[str, np.ndarray] = {}
    cols_te: dict[str, np.ndarray] = {}
    anchor_corr: dict[str, float] = {}
    for label, source, anchor in spec.pairs:
        for lab, src in ((label, source), (_spill(label), _spill(source))):
            if anchor is None:
                cols_tr[lab] = std_train[src]
                cols_te[lab] = std_test[src]
                continue
            anc = anchor if lab == label else _spill(anchor)
            coeff = fit_projection(std_train[src], std_train[anc], src, anc)
            cols_tr[lab] = coeff.apply(std_train[src], std_train[anc])
            cols_te[lab] = coeff.apply(std_test[src], std_test[anc])
            denom = math.sqrt(
                float(cols_tr[lab] @ cols_tr[lab]) * float(std_train[anc] @ std_train[anc])
            )
            num = float(cols_tr[lab] @ std_train[anc])
            anchor_corr[lab] = 0.0 if denom == 0.0 else num / denom
    return cols_tr, cols_te, anchor_corr


def _groups(
    spec: ModelSpec, grouping: str
) -> dict[str, list[str]]:
    if grouping == "paired":
        return {label: [label, _spill(label)] for label, _, _ in spec.pairs}
    if grouping == "separate":
        out: dict[str, list[str]] = {}
        for label, _, _ in spec.pairs:
            out[label] = [label]
            out[_spill(label)] = [_spill(label)]
        return out
    raise ConfigError(f"unknown grouping {grouping!r}; use 'paired' or 'separate'")


def _raw_model_columns(
    spec: ModelSpec, raw: Mapping[str, np.ndarray]
) -> dict[str, np.ndarray]:
    """Full-sample unstandardized columns (residualized where the model
    encoding calls for it) for the original-units pooled fit."""
    cols: dict[str, np.ndarray] = {}
    for label, source, anchor in spec.pairs:
        for lab, src in ((label, source), (_spill(label), _spill(source))):
            if anchor is None:
                cols[lab] = raw[src]
            else:
                anc = anchor if lab == label else _spill(anchor)
                cols[lab] = sample_orthogonalize(raw[src], raw[anc])
    return cols


def _fit_to_raw_scale(
    fit: FitResult,
    spec: ModelSpec,
    stats: Mapping[str, tuple[float, float]],
) -> dict[str, float] | None:
    """Translate a standardized-column fit back to original units.

    Only meaningful when every column is a plain standardized copy of a
    raw source column (no residualization), i.e. for the surprisal and
    PMI models.
    """
    if any(anchor is not None for _, _, anchor in spec.pairs):
        return None
    coeffs: dict[str, float] = {}
    intercept = fit.coef("intercept")
    for label, source, _ in spec.pairs:
        for lab, src in ((label, source), (_spill(label), _spill(source))):
            mean, sd = stats[src]
            beta = fit.coef(lab)
            coeffs[lab] = beta / sd
            intercept -= beta * mean / sd
    coeffs["intercept"] = intercept
    return coeffs


@dataclass
class AnalyzeResult:
    report: dict
    lmg_rows: list[dict] = field(default_factory=list)


def analyze_observations(
    source,
    observations: Sequence[TokenObservation],
    seed: int,
    folds: int = 10,
    predictors: Sequence[str] = MODEL_KINDS,
    include_length: bool = True,
    swap_ortho: str | None = None,
    smooth: bool = False,
    lmg_grouping: str = "paired",
    fold_by: str = "token",
    smooth_k: int = DEFAULT_KNOTS,
    lambda_grid: Sequence[float] = LAMBDA_GRID,
) -> AnalyzeResult:
    aggregated = aggregate_participants(list(observations))
    return analyze_tokens(
        source,
        aggregated,
        seed=seed,
        folds=folds,
        predictors=predictors,
        include_length=include_length,
        swap_ortho=swap_ortho,
        smooth=smooth,
        lmg_grouping=lmg_grouping,
        fold_by=fold_by,
        smooth_k=smooth_k,
        lambda_grid=lambda_grid,
    )


def analyze_tokens(
    source,
    aggregated: Sequence[AggregatedToken],
    seed: int,
    folds: int = 10,
    predictors: Sequence[str] = MODEL_KINDS,
    include_length: bool = True,
    swap_ortho: str | None = None,
    smooth: bool = False,
    lmg_grouping: str = "paired",
    fold_by: str = "token",
    smooth_k: int = DEFAULT_KNOTS,
    lambda_grid: Sequence[float] = LAMBDA_GRID,
) -> AnalyzeResult:
    for kind in predictors:
        if kind not in MODEL_KINDS:
            raise ConfigError(
                f"unknown predictor set {kind!r}; expected subset of {MODEL_KINDS}"
            )
    if fold_by not in ("token", "document"):
        raise ConfigError(f"fold_by must be 'token' or 'document', got {fold_by!r}")
    specs = [model_spec(kind, include_length, swap_ortho) for kind in predictors]

    records = build_predictor_table(list(aggregated), source)
    rows = [
        r
        for r in records
        if r.prev_surprisal is not None and r.rt_ms is not None
    ]
    n_dropped = len(records) - len(rows)
    if len(rows) < folds:
        raise ConfigError(
            f"only {len(rows)} usable rows after dropping document-initial "
            f"tokens; need at least {folds}"
        )

    source_names = _needed_sources(specs)
    # the raw surprisal/frequency/pmi columns always exist for the
    # identity check, whatever the model selection
    for extra in ("surprisal", "frequency", "pmi"):
        if extra not in source_names:
            source_names.append(extra)
    raw = table_columns(rows, source_names)
    y = np.array([r.rt_ms for r in rows], dtype=float)

    assignment = kfold(
        len(rows),
        folds,
        seed,
        doc_ids=[r.doc_id for r in rows] if fold_by == "document" else None,
    )

    model_entries: dict[str, dict] = {}
    smooth_entries: dict[str, dict] = {}
    lmg_rows: list[dict] = []
    ortho_diag: dict[str, float] = {}

    for spec in specs:
        model_entries[spec.name] = {
            "model": spec.name,
            "kind": "linear",
            "columns": [lab for lab, _, _ in spec.pairs]
            + [_spill(lab) for lab, _, _ in spec.pairs],
            "folds": [],
            "lmg": None,
            "delta_llh": None,
            "pooled_raw": None,
        }
        if smooth:
            smooth_entries[spec.name] = {
                "model": f"{spec.name}_smooth",
                "kind": "smooth",
                "folds": [],
                "delta_llh": None,
            }

    fold_shares: dict[str, list[list[float]]] = {s.name: [] for s in specs}
    fold_deltas: dict[str, list[float]] = {s.name: [] for s in specs}
    smooth_deltas: dict[str, list[float]] = {s.name: [] for s in specs}
    group_names: dict[str, list[str]] = {}
    fold_r2: dict[str, list[float]] = {s.name: [] for s in specs}

    for f in range(folds):
        tr = assignment.train_idx(f)
        te = assignment.test_idx(f)
        stats = {name: standardize_stats(raw[name][tr], name) for name in source_names}
        std_tr = {n: (raw[n][tr] - m) / s for n, (m, s) in stats.items()}
        std_te = {n: (raw[n][te] - m) / s for n, (m, s) in stats.items()}
        y_tr, y_te = y[tr], y[te]

        for spec in specs:
            cols_tr, cols_te, anchor_corr = _assemble(spec, std_tr, std_te)
            design_tr = DesignMatrix.build(cols_tr)
            fit = ols_fit(design_tr, y_tr)
            fitted_tr = fit.predict(design_tr)
            pred_te = _predict_columns(fit, cols_te)
            delta = delta_loglik(y_tr, fitted_tr, y_te, pred_te)
            held_rows = gaussian_loglik_rows(y_te, pred_te, fit.residual_variance)

            groups = _groups(spec, lmg_grouping)
            report_lmg = lmg(cols_tr, y_tr, groups)
            group_names[spec.name] = list(report_lmg.groups)
            fold_shares[spec.name].append([float(v) for v in report_lmg.shares])
            fold_deltas[spec.name].append(delta.per_token)
            fold_r2[spec.name].append(fit.r2)
            for gname, share in zip(report_lmg.groups, report_lmg.shares):
                lmg_rows.append(
                    {
                        "model": spec.name,
                        "group": gname,
                        "fold": f,
                        "share": float(share),
                        "total_r2": report_lmg.total_r2,
                    }
                )
            entry = {
                "fold": f,
                "r2": fit.r2,
                "coeffs": fit.coef_dict(),
                "coeffs_raw": _fit_to_raw_scale(fit, spec, stats),
                "llh": float(held_rows.mean()),
                "delta_llh": delta.per_token,
            }
            model_entries[spec.name]["folds"].append(entry)
            for lab, corr in anchor_corr.items():
                key = f"{spec.name}:{lab}"
                ortho_diag[key] = max(ortho_diag.get(key, 0.0), abs(corr))

            if smooth:
                sfit = fit_smooth(cols_tr, y_tr, k=smooth_k, lambda_grid=lambda_grid)
                spred_te = sfit.predict(cols_te)
                sdelta = delta_loglik(y_tr, sfit.predict(cols_tr), y_te, spred_te)
                smooth_deltas[spec.name].append(sdelta.per_token)
                smooth_entries[spec.name]["folds"].append(
                    {
                        "fold": f,
                        "r2": sfit.r2,
                        "llh": float(
                            gaussian_loglik_rows(
                                y_te, spred_te, sfit.residual_variance
                            ).mean()
                        ),
                        "delta_llh": sdelta.per_token,
                        "terms": sfit.term_summary(),
                    }
                )

    for spec in specs:
        shares = np.asarray(fold_shares[spec.name])
        entry = model_entries[spec.name]
        entry["lmg"] = {
            "groups": group_names[spec.name],
            "shares": [float(v) for v in shares.mean(axis=0)],
            "total_r2": float(np.mean(fold_r2[spec.name])),
            "fold_shares": [list(map(float, row)) for row in shares],
        }
        entry["delta_llh"] = _mean_se(fold_deltas[spec.name])
        raw_cols = _raw_model_columns(spec, raw)
        pooled = ols_fit(DesignMatrix.build(raw_cols), y)
        entry["pooled_raw"] = {
            "coeffs": pooled.coef_dict(),
            "std_errors": {
                lab: float(se) for lab, se in zip(pooled.labels, pooled.std_errors)
            },
            "r2": pooled.r2,
        }
        if smooth:
            smooth_entries[spec.name]["delta_llh"] = _mean_se(smooth_deltas[spec.name])

    # reparameterization identities on the raw, unstandardized columns
    # (standardization would rescale away the exact coefficient algebra)
    equivalence = equivalence_report(
        y, raw["surprisal"], raw["frequency"], pmi=raw["pmi"]
    )

    models = [model_entries[s.name] for s in specs]
    if smooth:
        models.extend(smooth_entries[s.name] for s in specs)
    report = {
        "n_rows": len(rows),
        "n_dropped_document_initial": n_dropped,
        "folds": folds,
        "fold_mode": assignment.mode,
        "seed": seed,
        "models": models,
        "equivalence": {
            "deltas": {k: float(v) for k, v in equivalence.deltas.items()}
        },
        "ortho_train_correlations": {
            k: float(v) for k, v in sorted(ortho_diag.items())
        },
    }
    return AnalyzeResult(report=report, lmg_rows=lmg_rows)


def _predict_columns(fit: FitResult, columns: Mapping[str, np.ndarray]) -> np.ndarray:
    """Predict without rebuilding a DesignMatrix (test folds may have
    fewer rows than columns, which the rank gate would reject)."""
    n = len(next(iter(columns.values())))
    parts = []
    for label in fit.labels:
        if label == "intercept":
            parts.append(np.ones(n))
        else:
            parts.append(np.asarray(columns[label], dtype=float))
    return np.column_stack(parts) @ fit.coefficients


def _mean_se(values: Sequence[float]) -> dict[str, float]:
    arr = np.asarray(values, dtype=float)
    if arr.size < 2:
        raise DegenerateError("need at least two folds for a standard error")
    return {
        "mean": float(arr.mean()),
        "se": float(arr.std(ddof=1) / math.sqrt(arr.size)),
    }
