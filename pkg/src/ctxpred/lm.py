"""Finite-order autoregressive unit language models over a small alphabet.

A model of order k assigns every context a conditional distribution over
the unit alphabet plus an end-of-string symbol, where the conditional
depends on the context only through its last k units.  All models here
must terminate almost surely (spectral radius of the unit-to-unit
transition operator strictly below one), which makes prefix masses,
expected lengths, and the best unigram approximation exactly computable
by small linear solves over the finite state space.

Conventions:
  * contexts and strings are tuples of unit strings; the empty tuple is
    the start context,
  * the state of a context is its last ``order`` units,
  * conditional tables store strictly positive probabilities; a missing
    entry is a structural zero,
  * all logarithms throughout the package are natural (values in nats).

Model definition files are TSV with columns ``state``, ``unit``,
``prob``.  The state column holds units joined by single spaces, with
``^`` for the start state; the unit column holds a unit or ``$`` for
end-of-string.  Rows for one state must sum to 1 within 1e-9 and are
renormalized exactly on load.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import (
    ConditioningError,
    ConfigError,
    ConvergenceError,
    DegenerateError,
    DivergenceError,
    FormatError,
    SymbolError,
)

START_STATE_MARK = "^"
EOS_MARK = "$"

# Sum tolerance for rows of a definition file; in-memory tables are
# renormalized so conditionals sum to 1 within 1e-12 after loading.
FILE_ROW_SUM_TOL = 1e-9
COND_SUM_TOL = 1e-12

# Linear solves refuse to report results past this conditioning.
SOLVE_CONDITION_LIMIT = 1e12

# Almost-sure termination margin for the unit transition operator.
SPECTRAL_MARGIN = 1e-9


@dataclass(frozen=True)
class EnumerationBudget:
    """Horizon and certified tail bound for truncated enumerations."""

    max_len: int = 256
    tail_tol: float = 1e-9

    def __post_init__(self):
        if self.max_len < 1:
            raise ConfigError(f"max_len must be >= 1, got {self.max_len}")
        if not (0.0 < self.tail_tol <= 1e-3):
            raise ConfigError(
                f"tail_tol must lie in (0, 1e-3], got {self.tail_tol}"
            )


@dataclass(frozen=True)
class UnitAlphabet:
    """Ordered unit inventory plus the reserved end-of-string symbol."""

    units: tuple[str, ...]
    eos: str = EOS_MARK

    def __post_init__(self):
        seen = set()
        for u in self.units:
            if not u or any(ch.isspace() for ch in u):
                raise FormatError(f"unit {u!r} is empty or contains whitespace")
            if u in (START_STATE_MARK, self.eos):
                raise FormatError(f"unit {u!r} collides with a reserved marker")
            if u in seen:
                raise FormatError(f"duplicate unit {u!r}")
            seen.add(u)

    @property
    def symbols(self) -> tuple[str, ...]:
        """Units followed by the end-of-string symbol."""
        return self.units + (self.eos,)


@dataclass(frozen=True)
class UnigramLM:
    """Context-free distribution over units and end-of-string."""

    probs: dict[str, float]
    normalizer: float = 1.0

    def prob(self, symbol: str) -> float:
        return self.probs.get(symbol, 0.0)


State = tuple[str, ...]


@dataclass(frozen=True)
class AutoregressiveLM:
    """Order-k conditional table with validated termination behaviour.

    ``cond`` maps each context state to a dict of symbol probabilities
    (units and/or the eos symbol).  Stored probabilities are strictly
    positive; per-state sums must equal one within ``COND_SUM_TOL``.
    """

    alphabet: UnitAlphabet
    cond: dict[State, dict[str, float]]
    order: int = field(init=False)

    def __post_init__(self):
        if () not in self.cond:
            raise FormatError("model must define the start state")
        object.__setattr__(self, "order", max(len(s) for s in self.cond))
        units = set(self.alphabet.units)
        for state, row in self.cond.items():
            for u in state:
                if u not in units:
                    raise FormatError(f"state {state!r} uses unknown unit {u!r}")
            total = 0.0
            for sym, p in row.items():
                if sym != self.alphabet.eos and sym not in units:
                    raise SymbolError(f"symbol {sym!r} is not in the alphabet")
                if not (0.0 < p <= 1.0) or not math.isfinite(p):
                    raise FormatError(
                        f"probability for {sym!r} in state {state!r} must be in (0, 1], got {p}"
                    )
                total += p
            if abs(total - 1.0) > COND_SUM_TOL:
                raise FormatError(
                    f"conditionals for state {state!r} sum to {total!r}, not 1"
                )
            for sym in row:
                if sym != self.alphabet.eos:
                    nxt = self.next_state(state, sym)
                    if nxt not in self.cond:
                        raise FormatError(
                            f"transition {state!r} --{sym!r}--> {nxt!r} has no defined state"
                        )
        rho = _spectral_radius(self)
        if rho >= 1.0 - SPECTRAL_MARGIN:
            raise DivergenceError(
                f"unit transition operator has spectral radius {rho:.12g}; "
                "the model does not terminate almost surely"
            )

    # -- state space ----------------------------------------------------

    @property
    def states(self) -> list[State]:
        return sorted(self.cond, key=lambda s: (len(s), s))

    def next_state(self, state: State, unit: str) -> State:
        if self.order == 0:
            return ()
        return (state + (unit,))[-self.order :]

    def state_of(self, context: Iterable[str]) -> State:
        ctx = tuple(context)
        unknown = [u for u in ctx if u not in self.alphabet.units]
        if unknown:
            raise SymbolError(f"context units not in the alphabet: {unknown!r}")
        return ctx[-self.order :] if self.order else ()

    def eos_prob(self, state: State) -> float:
        return self.cond[state].get(self.alphabet.eos, 0.0)


def _spectral_radius(lm: AutoregressiveLM) -> float:
    states, _, trans, _ = _chain_arrays(lm)
    if len(states) == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(trans))))


def _chain_arrays(lm: AutoregressiveLM):
    """Index the state space and build the unit-step transition matrix.

    Returns ``(states, index, trans, emit)`` where ``trans[i, j]`` is the
    one-unit transition probability from state i to state j and
    ``emit[i, a]`` is the probability of emitting unit a from state i
    (columns ordered like ``lm.alphabet.units``).
    """
    states = lm.states
    index = {s: i for i, s in enumerate(states)}
    n = len(states)
    m = len(lm.alphabet.units)
    trans = np.zeros((n, n))
    emit = np.zeros((n, m))
    unit_col = {u: a for a, u in enumerate(lm.alphabet.units)}
    for s, row in lm.cond.items():
        i = index[s]
        for sym, p in row.items():
            if sym == lm.alphabet.eos:
                continue
            emit[i, unit_col[sym]] = p
            trans[i, index[lm.next_state(s, sym)]] += p
    return states, index, trans, emit


def _expected_visits(lm: AutoregressiveLM) -> tuple[list[State], np.ndarray]:
    """Expected number of times each state is occupied before termination.

    Solves (I - T)' v = e_start for the absorbing chain on context
    states.  Every occupation emits exactly one symbol, so the visit
    counts double as expected symbol emissions per state.
    """
    states, index, trans, _ = _chain_arrays(lm)
    n = len(states)
    system = np.eye(n) - trans.T
    cond_number = np.linalg.cond(system)
    if not np.isfinite(cond_number) or cond_number > SOLVE_CONDITION_LIMIT:
        raise ConditioningError(
            f"visit-count system condition number {cond_number:.3g} exceeds "
            f"{SOLVE_CONDITION_LIMIT:.0e}"
        )
    start = np.zeros(n)
    start[index[()]] = 1.0
    visits = np.linalg.solve(system, start)
    return states, visits


def expected_length(lm: AutoregressiveLM) -> float:
    """Expected number of units in a sampled string.

    Total symbol emissions count every unit plus the single terminating
    symbol, so the expectation is the summed visit mass minus one.
    """
    _, visits = _expected_visits(lm)
    return float(np.sum(visits) - 1.0)


def prefix_normalizer(lm: AutoregressiveLM) -> float:
    """Total prefix mass over all contexts: 1 + expected string length."""
    return 1.0 + expected_length(lm)


def conditional(lm: AutoregressiveLM, context: Iterable[str], symbol: str) -> float:
    """Probability of emitting ``symbol`` (a unit or eos) after ``context``."""
    if symbol not in lm.alphabet.symbols:
        raise SymbolError(f"symbol {symbol!r} is not in the alphabet")
    state = lm.state_of(context)
    if state not in lm.cond:
        raise DegenerateError(
            f"context state {state!r} is unreachable under this model"
        )
    return lm.cond[state].get(symbol, 0.0)


def prefix_mass(
    lm: AutoregressiveLM, prefix: Iterable[str], budget: EnumerationBudget
) -> float:
    """Total probability of strings extending ``prefix`` (itself included).

    The mass equals the product of unit conditionals along the prefix
    because continuation mass from any state is exactly one for an
    almost-surely terminating model.  The budget is used to certify that
    enumeration to ``max_len`` further units would capture all but
    ``tail_tol`` of that mass; if it cannot, a convergence error reports
    the uncaptured bound.
    """
    ctx = tuple(prefix)
    state: State = ()
    base = 1.0
    for u in ctx:
        p = conditional(lm, state, u)
        if p == 0.0:
            return 0.0
        base *= p
        state = lm.next_state(state, u)

    states, index, trans, _ = _chain_arrays(lm)
    alive = np.zeros(len(states))
    alive[index[state]] = 1.0
    for _ in range(budget.max_len):
        alive = trans.T @ alive
        if base * float(np.sum(alive)) <= budget.tail_tol:
            break
    remaining = base * float(np.sum(alive))
    if remaining > budget.tail_tol:
        raise ConvergenceError(
            f"mass {remaining:.3g} beyond horizon {budget.max_len} exceeds "
            f"tail_tol {budget.tail_tol:.3g}",
            remaining=remaining,
        )
    return base


def unigram_minimizer(lm: AutoregressiveLM) -> UnigramLM:
    """Best context-free approximation of the model in forward KL.

    The optimum reweights expected symbol counts per generated string:
    q(symbol) = E[count of symbol] / Z, where the normalizer Z equals
    the total prefix mass (1 + expected length) because every string of
    length n contributes n unit emissions plus one terminating symbol.
    """
    states, visits = _expected_visits(lm)
    counts: dict[str, float] = {sym: 0.0 for sym in lm.alphabet.symbols}
    for s, v in zip(states, visits):
        for sym, p in lm.cond[s].items():
            counts[sym] += v * p
    z = float(sum(counts.values()))
    probs = {sym: c / z for sym, c in counts.items() if c > 0.0}
    return UnigramLM(probs=probs, normalizer=z)


def forward_kl_unigram(
    lm: AutoregressiveLM, q: UnigramLM, budget: EnumerationBudget
) -> float:
    """Truncated KL from the model to ``q`` read as a string distribution.

    ``q`` scores a string as the product of its unit probabilities times
    q(eos).  The divergence is accumulated string-by-string in aggregate
    over context states: for each state we track the alive mass, the
    mass-weighted accumulated log probability under the model, and the
    same under q.  Enumeration stops once the alive mass drops to
    ``tail_tol`` (or the horizon is hit, which raises).
    """
    for sym in lm.alphabet.symbols:
        if q.prob(sym) <= 0.0:
            raise DegenerateError(
                f"q must be strictly positive on the alphabet; q({sym!r}) = {q.prob(sym)}"
            )
    states, index, trans, emit = _chain_arrays(lm)
    n = len(states)
    eos_p = np.array([lm.eos_prob(s) for s in states])
    log_q_units = np.log(np.array([q.prob(u) for u in lm.alphabet.units]))
    log_q_eos = math.log(q.prob(lm.alphabet.eos))

    # next-state index per (state, unit); -1 marks a structural zero
    m = len(lm.alphabet.units)
    succ = np.full((n, m), -1, dtype=int)
    for i, s in enumerate(states):
        for a, u in enumerate(lm.alphabet.units):
            if emit[i, a] > 0.0:
                succ[i, a] = index[lm.next_state(s, u)]

    mass = np.zeros(n)
    mass[index[()]] = 1.0
    logp_acc = np.zeros(n)  # sum over alive paths of p(path) * log p(path)
    logq_acc = np.zeros(n)  # same with log q(path units)
    kl = 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        log_eos_p = np.where(eos_p > 0.0, np.log(np.maximum(eos_p, 1e-300)), 0.0)
    for _ in range(budget.max_len + 1):
        # terminate at this length
        kl += float(
            np.sum(
                eos_p * (logp_acc + mass * log_eos_p)
                - eos_p * (logq_acc + mass * log_q_eos)
            )
        )
        alive = float(np.sum(mass * (1.0 - eos_p)))
        if alive <= budget.tail_tol:
            return kl
        new_mass = np.zeros(n)
        new_logp = np.zeros(n)
        new_logq = np.zeros(n)
        for a in range(m):
            p_col = emit[:, a]
            hit = succ[:, a] >= 0
            if not np.any(hit):
                continue
            tgt = succ[hit, a]
            w = p_col[hit]
            np.add.at(new_mass, tgt, mass[hit] * w)
            np.add.at(
                new_logp, tgt, w * (logp_acc[hit] + mass[hit] * np.log(w))
            )
            np.add.at(
                new_logq, tgt, w * (logq_acc[hit] + mass[hit] * log_q_units[a])
            )
        mass, logp_acc, logq_acc = new_mass, new_logp, new_logq
    remaining = float(np.sum(mass))
    raise ConvergenceError(
        f"alive mass {remaining:.3g} after {budget.max_len} units exceeds "
        f"tail_tol {budget.tail_tol:.3g}",
        remaining=remaining,
    )


def sample_string(lm: AutoregressiveLM, rng: np.random.Generator) -> list[str]:
    """Draw one complete string (unit list, eos excluded) from the model."""
    state: State = ()
    out: list[str] = []
    # a.s. termination is validated at construction; the cap only guards
    # against astronomically unlucky draws
    for _ in range(10_000_000):
        row = lm.cond[state]
        symbols = list(row)
        probs = np.array([row[s] for s in symbols])
        sym = symbols[rng.choice(len(symbols), p=probs / probs.sum())]
        if sym == lm.alphabet.eos:
            return out
        out.append(sym)
        state = lm.next_state(state, sym)
    raise ConvergenceError("sampling failed to terminate")


# -- model definition files ---------------------------------------------


def _parse_state_field(text: str) -> State:
    if text == START_STATE_MARK:
        return ()
    return tuple(text.split(" "))


def _format_state(state: State) -> str:
    return START_STATE_MARK if not state else " ".join(state)


def load_lm_tsv(path) -> AutoregressiveLM:
    """Read a model definition file, validating schema and row sums."""
    rows: list[tuple[int, State, str, float]] = []
    units: list[str] = []
    seen_units = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise FormatError(
                    f"{path}:{lineno}: expected 3 tab-separated fields, got {len(parts)}"
                )
            state_text, unit_text, prob_text = parts
            try:
                prob = float(prob_text)
            except ValueError:
                raise FormatError(
                    f"{path}:{lineno}: probability {prob_text!r} is not a number"
                ) from None
            if not math.isfinite(prob) or not (0.0 < prob <= 1.0):
                raise FormatError(
                    f"{path}:{lineno}: probability must be in (0, 1], got {prob}"
                )
            if unit_text != EOS_MARK and unit_text not in seen_units:
                seen_units.add(unit_text)
                units.append(unit_text)
            rows.append((lineno, _parse_state_field(state_text), unit_text, prob))
    if not rows:
        raise FormatError(f"{path}: no model rows found")

    cond: dict[State, dict[str, float]] = {}
    for lineno, state, unit_text, prob in rows:
        row = cond.setdefault(state, {})
        if unit_text in row:
            raise FormatError(
                f"{path}:{lineno}: duplicate entry for state "
                f"{_format_state(state)!r}, symbol {unit_text!r}"
            )
        row[unit_text] = prob
    for state, row in cond.items():
        total = sum(row.values())
        if abs(total - 1.0) > FILE_ROW_SUM_TOL:
            raise FormatError(
                f"{path}: rows for state {_format_state(state)!r} sum to "
                f"{total!r}, outside 1 +/- {FILE_ROW_SUM_TOL}"
            )
        for sym in row:
            row[sym] /= total
    alphabet = UnitAlphabet(units=tuple(units))
    return AutoregressiveLM(alphabet=alphabet, cond=cond)


def write_lm_tsv(lm: AutoregressiveLM, path) -> None:
    """Write a model definition file (inverse of load_lm_tsv)."""
    with open(path, "w", encoding="utf-8") as fh:
        for state in lm.states:
            row = lm.cond[state]
            for sym in sorted(row):
                fh.write(f"{_format_state(state)}\t{sym}\t{row[sym]!r}\n")
