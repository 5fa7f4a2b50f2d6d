"""Reading-time corpora: parsing, participant aggregation, folds, synthesis.

The corpus exchange format is TSV with a fixed header::

    participant  doc_id  sentence_id  token_idx  token  rt_ms  skipped

one row per (participant, token).  Reading times stay in milliseconds
end to end.  Aggregation averages reading times over the participants
who did not skip the token; tokens skipped by everyone are dropped.

Synthetic corpora draw documents from an autoregressive unit model as a
sequence of independently sampled sentences, then generate reading
times from an affine model over the token's predictor values plus
Gaussian noise.  The generating coefficients, noise level, and seed are
returned as a sidecar record so recovery can be checked downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigError, DegenerateError, FormatError
from .lm import AutoregressiveLM, sample_string
from .seeding import named_rng

CORPUS_HEADER = (
    "participant",
    "doc_id",
    "sentence_id",
    "token_idx",
    "token",
    "rt_ms",
    "skipped",
)

# fraction of malformed rows beyond which a corpus file is rejected
MALFORMED_LIMIT = 0.05


@dataclass(frozen=True)
class TokenObservation:
    """One participant's reading of one token."""

    participant: str
    doc_id: str
    sentence_id: int
    token_idx: int
    token: str
    rt_ms: float
    skipped: bool


@dataclass(frozen=True)
class AggregatedToken:
    """A token with its mean reading time over non-skipping participants."""

    doc_id: str
    sentence_id: int
    token_idx: int
    token: str
    rt_ms: float | None
    n_readers: int = 0


def parse_corpus(path) -> tuple[list[TokenObservation], list[tuple[int, str]]]:
    """Read a corpus TSV; returns (rows, malformed (line, reason) pairs).

    Individual bad rows are tolerated and reported; more than
    MALFORMED_LIMIT of the data rows being bad rejects the file.
    """
    rows: list[TokenObservation] = []
    malformed: list[tuple[int, str]] = []
    n_data_lines = 0
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if tuple(header.split("\t")) != CORPUS_HEADER:
            raise FormatError(
                f"{path}: header must be {chr(9).join(CORPUS_HEADER)!r}, got {header!r}"
            )
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            n_data_lines += 1
            parts = line.split("\t")
            if len(parts) != len(CORPUS_HEADER):
                malformed.append((lineno, f"expected {len(CORPUS_HEADER)} fields"))
                continue
            participant, doc_id, sent_s, idx_s, token, rt_s, skip_s = parts
            try:
                sentence_id = int(sent_s)
                token_idx = int(idx_s)
                rt_ms = float(rt_s)
            except ValueError:
                malformed.append((lineno, "non-numeric sentence_id/token_idx/rt_ms"))
                continue
            if token_idx < 0 or sentence_id < 0:
                malformed.append((lineno, "negative index"))
                continue
            if not math.isfinite(rt_ms) or rt_ms < 0.0:
                malformed.append((lineno, f"rt_ms {rt_s!r} not finite and >= 0"))
                continue
            if skip_s not in ("0", "1"):
                malformed.append((lineno, f"skipped must be 0 or 1, got {skip_s!r}"))
                continue
            if not token:
                malformed.append((lineno, "empty token"))
                continue
            rows.append(
                TokenObservation(
                    participant=participant,
                    doc_id=doc_id,
                    sentence_id=sentence_id,
                    token_idx=token_idx,
                    token=token,
                    rt_ms=rt_ms,
                    skipped=skip_s == "1",
                )
            )
    if n_data_lines == 0:
        raise FormatError(f"{path}: corpus has no data rows")
    if len(malformed) > MALFORMED_LIMIT * n_data_lines:
        examples = "; ".join(f"line {ln}: {why}" for ln, why in malformed[:5])
        raise FormatError(
            f"{path}: {len(malformed)} of {n_data_lines} rows malformed "
            f"(limit {MALFORMED_LIMIT:.0%}): {examples}"
        )
    return rows, malformed


def write_corpus_tsv(rows: Sequence[TokenObservation], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(CORPUS_HEADER) + "\n")
        for r in rows:
            fh.write(
                f"{r.participant}\t{r.doc_id}\t{r.sentence_id}\t{r.token_idx}\t"
                f"{r.token}\t{r.rt_ms!r}\t{int(r.skipped)}\n"
            )


def aggregate_participants(rows: Sequence[TokenObservation]) -> list[AggregatedToken]:
    """Mean reading time per token over participants who read it.

    Tokens skipped by every participant have no reading time and are
    dropped.  Token text must agree across participants.
    """
    by_key: dict[tuple[str, int], list[TokenObservation]] = {}
    for r in rows:
        by_key.setdefault((r.doc_id, r.token_idx), []).append(r)
    out: list[AggregatedToken] = []
    for (doc_id, token_idx), group in sorted(by_key.items()):
        tokens = {g.token for g in group}
        if len(tokens) != 1:
            raise FormatError(
                f"token text disagrees across participants at "
                f"({doc_id!r}, {token_idx}): {sorted(tokens)!r}"
            )
        read = [g.rt_ms for g in group if not g.skipped]
        if not read:
            continue
        out.append(
            AggregatedToken(
                doc_id=doc_id,
                sentence_id=group[0].sentence_id,
                token_idx=token_idx,
                token=group[0].token,
                rt_ms=float(np.mean(read)),
                n_readers=len(read),
            )
        )
    return out


def standardize(values: np.ndarray, label: str = "column") -> np.ndarray:
    """Center to mean zero and scale to unit sample (n-1) deviation."""
    mean, sd = standardize_stats(values, label)
    return (np.asarray(values, dtype=float) - mean) / sd


def standardize_stats(values: np.ndarray, label: str = "column") -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        raise DegenerateError(f"{label}: need at least two values to standardize")
    sd = float(np.std(v, ddof=1))
    if sd == 0.0 or not math.isfinite(sd):
        raise DegenerateError(f"{label}: zero or non-finite variance")
    return float(np.mean(v)), sd


@dataclass(frozen=True)
class FoldAssignment:
    """Balanced splits of row indices, token- or document-level."""

    n_rows: int
    k: int
    seed: int
    mode: str
    fold_of_row: np.ndarray = field(repr=False)

    def test_idx(self, fold: int) -> np.ndarray:
        return np.nonzero(self.fold_of_row == fold)[0]

    def train_idx(self, fold: int) -> np.ndarray:
        return np.nonzero(self.fold_of_row != fold)[0]


def kfold(
    n_rows: int,
    k: int,
    seed: int,
    doc_ids: Sequence[str] | None = None,
) -> FoldAssignment:
    """Seeded balanced fold assignment.

    Token mode (default) shuffles rows and deals them out so fold sizes
    differ by at most one.  Document mode (``doc_ids`` given) keeps each
    document in a single fold, balancing document counts instead.
    """
    if k < 2:
        raise ConfigError(f"need at least 2 folds, got {k}")
    if n_rows < k:
        raise ConfigError(f"{n_rows} rows cannot fill {k} folds")
    rng = named_rng(seed, "folds")
    if doc_ids is None:
        perm = rng.permutation(n_rows)
        fold_of_row = np.empty(n_rows, dtype=np.int64)
        fold_of_row[perm] = np.arange(n_rows, dtype=np.int64) % k
        return FoldAssignment(
            n_rows=n_rows, k=k, seed=seed, mode="token", fold_of_row=fold_of_row
        )
    if len(doc_ids) != n_rows:
        raise ConfigError("doc_ids must align with rows")
    docs = sorted(set(doc_ids))
    if len(docs) < k:
        raise ConfigError(f"{len(docs)} documents cannot fill {k} folds")
    order = rng.permutation(len(docs))
    fold_of_doc = {docs[int(d)]: i % k for i, d in enumerate(order)}
    fold_of_row = np.array([fold_of_doc[d] for d in doc_ids], dtype=np.int64)
    return FoldAssignment(
        n_rows=n_rows, k=k, seed=seed, mode="document", fold_of_row=fold_of_row
    )


# -- synthesis --------------------------------------------------------------


@dataclass(frozen=True)
class SyntheticCorpus:
    observations: list[TokenObservation]
    records: list  # PredictorRecord, no reading times joined
    sidecar: dict


def generate_synthetic(
    lm: AutoregressiveLM,
    true_coeffs: dict[str, float],
    noise_sd: float,
    n_docs: int,
    doc_len: int,
    seed: int,
    n_participants: int = 1,
) -> SyntheticCorpus:
    """Sample documents from the model and attach affine-model times.

    Each document concatenates independent sentences until it holds at
    least ``doc_len`` tokens.  The clean reading time of a token is
    intercept plus the dot product of ``true_coeffs`` with its predictor
    values (absent spillover values contribute zero); every participant
    reads every token with independent Gaussian noise.
    """
    from .predictors import PREDICTOR_NAMES, build_predictor_table

    if n_docs < 1 or doc_len < 1:
        raise ConfigError("n_docs and doc_len must be positive")
    if noise_sd < 0:
        raise ConfigError(f"noise_sd must be >= 0, got {noise_sd}")
    allowed = {"intercept", *PREDICTOR_NAMES}
    unknown = sorted(set(true_coeffs) - allowed)
    if unknown:
        raise ConfigError(f"unknown coefficient names: {unknown}")

    rng = named_rng(seed, "corpus")
    tokens: list[AggregatedToken] = []
    width = max(4, len(str(n_docs)))
    for d in range(n_docs):
        doc_id = f"d{d:0{width}d}"
        token_idx = 0
        sentence_id = 0
        attempts = 0
        while token_idx < doc_len:
            sent = sample_string(lm, rng)
            attempts += 1
            if not sent:
                if attempts > 50 * (doc_len + 1):
                    raise ConfigError(
                        "model keeps producing empty sentences; cannot fill documents"
                    )
                continue
            for u in sent:
                tokens.append(
                    AggregatedToken(
                        doc_id=doc_id,
                        sentence_id=sentence_id,
                        token_idx=token_idx,
                        token=u,
                        rt_ms=None,
                    )
                )
                token_idx += 1
            sentence_id += 1

    records = build_predictor_table(tokens, lm)
    intercept = float(true_coeffs.get("intercept", 0.0))
    slopes = {n: float(v) for n, v in true_coeffs.items() if n != "intercept"}

    observations: list[TokenObservation] = []
    for rec in records:
        clean = intercept
        for name, beta in slopes.items():
            v = getattr(rec, name)
            if v is not None:
                clean += beta * v
        noise = rng.normal(0.0, noise_sd, size=n_participants)
        for p in range(n_participants):
            rt = clean + float(noise[p])
            if rt < 0.0:
                raise ConfigError(
                    f"generated a negative reading time ({rt:.3f} ms) at "
                    f"({rec.doc_id!r}, {rec.token_idx}); raise the intercept "
                    "or lower the noise"
                )
            observations.append(
                TokenObservation(
                    participant=f"p{p:02d}",
                    doc_id=rec.doc_id,
                    sentence_id=rec.sentence_id,
                    token_idx=rec.token_idx,
                    token=rec.token,
                    rt_ms=rt,
                    skipped=False,
                )
            )
    sidecar = {"true_coeffs": dict(true_coeffs), "noise_sd": noise_sd, "seed": seed}
    return SyntheticCorpus(observations=observations, records=records, sidecar=sidecar)
