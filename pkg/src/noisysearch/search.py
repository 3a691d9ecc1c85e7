"""Search with a noisy oracle: Grover runs, checking, and the full procedure.

The procedure that is almost optimal against both noise kinds:

* run Grover instances truncated to 1, 2, 4, ..., ~1/p iterations,
* classically check every sampled candidate (one query suffices under
  dephasing; a majority vote over ~log n queries under depolarizing),
* repeat the truncated subroutine ~ c * n * p^2 times,
* if p is unknown, guess p = 1/sqrt(n) and keep doubling until a guess
  works out or the guesses exceed 1.

The number of marked elements is never an input.  Grover iterations keep
only the query register (index plus one output qubit) as state, apply the
oracle by swapping amplitudes of marked rows, and realize sampled noise
directly, so trajectory runs scale to n = 2^12 without dense matrices.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .oracles import NoiseSpec, TruthTable
from .qcore import as_generator
from .runtime import AlgorithmSpec

__all__ = [
    "CheckPolicy",
    "CandidateCheck",
    "SearchOutcome",
    "NoisyOracle",
    "grover_success_formula",
    "grover_algorithm",
    "grover_run",
    "check_element",
    "truncated_grover",
    "noisy_search",
    "repetition_multiplier",
]


# ---------------------------------------------------------------------------
# Sampled-noise oracle access with query accounting
# ---------------------------------------------------------------------------

class NoisyOracle:
    """Query access to one problem instance with per-call sampled noise.

    Counts every oracle call (`queries`); all randomness comes from the
    held generator, so runs are pure functions of (table, spec, seed).
    """

    def __init__(self, table: TruthTable, spec: NoiseSpec, rng):
        self.table = table
        self.spec = spec
        self.rng = as_generator(rng)
        self.queries = 0

    def classical_query(self, x: int) -> int:
        """Prepare |x>|0>, call the noisy oracle, measure the output register."""
        self.queries += 1
        p = self.spec.effective_p
        if p > 0.0 and self.spec.kind == "depolarizing" and self.rng.random() < p:
            return int(self.rng.integers(self.table.m))
        # dephasing leaves computational-basis queries untouched
        return self.table.outputs[x]

    def classical_query_batch(self, x: int, count: int) -> np.ndarray:
        """``count`` independent classical queries of the same input."""
        self.queries += count
        vals = np.full(count, self.table.outputs[x], dtype=np.int64)
        p = self.spec.effective_p
        if p > 0.0 and self.spec.kind == "depolarizing":
            err = self.rng.random(count) < p
            vals[err] = self.rng.integers(self.table.m, size=int(err.sum()))
        return vals

    def call_on_state(self, amps: np.ndarray) -> np.ndarray:
        """Noisy oracle call on a pure query state of shape (n, m)."""
        n, m = self.table.n, self.table.m
        if amps.shape != (n, m):
            raise ValueError(f"state shape {amps.shape} does not match (n, m) = {(n, m)}")
        self.queries += 1
        yxor = np.bitwise_xor(np.arange(m)[None, :], self.table.out_array()[:, None])
        out = amps[np.arange(n)[:, None], yxor]
        p = self.spec.effective_p
        if p <= 0.0 or self.rng.random() >= p:
            return out
        if self.spec.kind == "dephasing":
            probs = np.einsum("xy,xy->x", out, out.conj()).real
            x0 = int(self.rng.choice(n, p=probs / probs.sum()))
            collapsed = np.zeros_like(out)
            collapsed[x0] = out[x0] / math.sqrt(probs[x0])
            return collapsed
        # depolarizing: measure Q, discard, re-prepare a uniform basis state
        fresh = np.zeros_like(out)
        fresh[int(self.rng.integers(n)), int(self.rng.integers(m))] = 1.0
        return fresh


# ---------------------------------------------------------------------------
# Grover primitives
# ---------------------------------------------------------------------------

def grover_success_formula(n: int, k: int, t: int) -> float:
    """Success probability sin((2t+1) arcsin sqrt(k/n))^2 of a clean t-step run.

    With k = 0 there is nothing to find; returns 0.0 and warns, since the
    closed form carries no guarantee in that case.
    """
    if t < 0:
        raise ValueError("iteration count t must be nonnegative")
    if k == 0:
        warnings.warn("no marked elements: closed form undefined, returning 0",
                      RuntimeWarning, stacklevel=2)
        return 0.0
    if not (1 <= k <= n):
        raise ValueError(f"marked count k={k} outside [1, n={n}]")
    return math.sin((2 * t + 1) * math.asin(math.sqrt(k / n))) ** 2


def grover_algorithm(n: int, tau: int) -> AlgorithmSpec:
    """Grover's algorithm as a gate-program AlgorithmSpec (m = 2, no workspace)."""
    return AlgorithmSpec(
        n=n, m=2, tau=tau, ell=0,
        initial_state=_grover_initial(n),
        steps=(("diffusion",),) * tau,
    )


def _grover_initial(n: int) -> np.ndarray:
    qi = np.full(n, 1.0 / math.sqrt(n), dtype=np.complex128)
    minus = np.array([1.0, -1.0], dtype=np.complex128) / math.sqrt(2.0)
    return np.kron(qi, minus)


def grover_run(oracle: NoisyOracle, t: int) -> int:
    """Run t noisy Grover iterations and sample the index register."""
    if t < 0:
        raise ValueError("iteration count t must be nonnegative")
    n, m = oracle.table.n, oracle.table.m
    if m != 2:
        raise ValueError("grover_run expects a binary truth table (m = 2)")
    amps = _grover_initial(n).reshape(n, 2)
    for _ in range(t):
        amps = oracle.call_on_state(amps)
        amps = 2.0 * amps.mean(axis=0, keepdims=True) - amps  # diffusion on Qi
    probs = np.einsum("xy,xy->x", amps, amps.conj()).real
    return int(oracle.rng.choice(n, p=probs / probs.sum()))


# ---------------------------------------------------------------------------
# Classical checking
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CheckPolicy:
    """Repetitions and majority threshold for classically checking one element."""

    repeats: int
    majority: int

    @classmethod
    def for_noise(cls, spec: NoiseSpec, n: int) -> "CheckPolicy":
        if spec.kind in ("dephasing", "none"):
            return cls(repeats=1, majority=1)
        r = 1.0 - spec.effective_p
        if r <= 0.0:
            raise ValueError("depolarizing checks require p < 1")
        k = max(1, math.ceil(48.0 * math.log(max(n, 2)) / (r * r)))
        return cls(repeats=k, majority=k // 2 + 1)


def check_element(x: int, oracle: NoisyOracle, policy: CheckPolicy) -> tuple[bool, int]:
    """Classically decide whether x is marked; returns (verdict, queries used)."""
    readings = oracle.classical_query_batch(x, policy.repeats)
    ones = int(np.count_nonzero(readings == oracle.table.marked_value))
    return ones >= policy.majority, policy.repeats


# ---------------------------------------------------------------------------
# Truncated Grover and the full search
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CandidateCheck:
    iterations: int
    candidate: int
    confirmed: bool


@dataclass
class SearchOutcome:
    """Result of a search: a confirmed element or a fail, plus accounting."""

    found: int | None
    queries_used: int
    candidates: list[CandidateCheck] = field(default_factory=list)

    @property
    def succeeded(self) -> bool:
        return self.found is not None


def _doubling_iterations(cap: int) -> list[int]:
    ts = [1]
    while ts[-1] * 2 <= cap:
        ts.append(ts[-1] * 2)
    return ts


def truncated_grover(oracle: NoisyOracle, p_guess: float,
                     policy: CheckPolicy | None = None) -> SearchOutcome:
    """Grover runs of 1, 2, 4, ... up to ~1/p_guess iterations, each checked.

    Returns the first confirmed candidate; a returned element is always one
    that passed the check, otherwise the outcome is a fail.
    """
    if not (0.0 < p_guess <= 1.0):
        raise ValueError(f"p_guess={p_guess} outside (0, 1]")
    if policy is None:
        policy = CheckPolicy.for_noise(oracle.spec, oracle.table.n)
    queries = 0
    log: list[CandidateCheck] = []
    for t in _doubling_iterations(math.ceil(1.0 / p_guess)):
        x = grover_run(oracle, t)
        queries += t
        ok, used = check_element(x, oracle, policy)
        queries += used
        log.append(CandidateCheck(iterations=t, candidate=x, confirmed=ok))
        if ok:
            return SearchOutcome(found=x, queries_used=queries, candidates=log)
    return SearchOutcome(found=None, queries_used=queries, candidates=log)


def repetition_multiplier(eps: float) -> int:
    """Parallel-repetition count multiplier c such that c*n*p^2 runs suffice."""
    return math.ceil(4.0 * math.log(2.0 / eps))


def noisy_search(oracle: NoisyOracle, eps: float,
                 p_known: float | None = None) -> SearchOutcome:
    """Find a marked element with failure probability ~eps.

    With ``p_known`` the truncated subroutine is repeated ~c_eps*n*p^2
    times at guess max(p, 1/sqrt(n)).  With p unknown: one full Grover run
    plus check, then guesses 1/sqrt(n), doubling up to 1.  Fail is a valid
    outcome; queries are totalled over everything that ran.
    """
    if not (0.0 < eps < 1.0):
        raise ValueError(f"eps={eps} outside (0, 1)")
    n = oracle.table.n
    policy = CheckPolicy.for_noise(oracle.spec, n)
    c_eps = repetition_multiplier(eps)
    total = 0
    log: list[CandidateCheck] = []

    def attempt(p_guess: float) -> SearchOutcome | None:
        nonlocal total
        reps = max(1, math.ceil(c_eps * n * p_guess * p_guess))
        for _ in range(reps):
            out = truncated_grover(oracle, p_guess, policy)
            total += out.queries_used
            log.extend(out.candidates)
            if out.succeeded:
                return out
        return None

    if p_known is not None:
        hit = attempt(max(p_known, 1.0 / math.sqrt(n)))
        found = hit.found if hit else None
        return SearchOutcome(found=found, queries_used=total, candidates=log)

    # Unknown rate: try the clean-case schedule first, then guess upward.
    t_full = max(1, math.floor(math.pi / 4.0 * math.sqrt(n)))
    x = grover_run(oracle, t_full)
    total += t_full
    ok, used = check_element(x, oracle, policy)
    total += used
    log.append(CandidateCheck(iterations=t_full, candidate=x, confirmed=ok))
    if ok:
        return SearchOutcome(found=x, queries_used=total, candidates=log)

    guess = 1.0 / math.sqrt(n)
    while True:
        hit = attempt(min(guess, 1.0))
        if hit is not None:
            return SearchOutcome(found=hit.found, queries_used=total, candidates=log)
        if guess >= 1.0:
            return SearchOutcome(found=None, queries_used=total, candidates=log)
        guess *= 2.0
