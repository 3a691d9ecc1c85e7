"""The purified (extended) computation and its progress trace.

The mixed-state run of an algorithm against the signaling dephasing oracle
is purified by two extra registers: the truth register F (holding the
problem instance in superposition) and per-call record registers R_1..R_t
(holding, per call, either the no-error symbol or the basis value the
query-input register collapsed to).  Each call becomes the isometry

    O(p) = sqrt(1-p) * O_clean + sqrt(p) * O_collapse,

where the clean branch applies the truth-controlled oracle and writes
(flag 0, blank record) while the collapse branch additionally copies the
query input into the fresh record register and writes flag 1.  The two
branches have orthogonal images, so the overall state stays pure.

Full extended states carry register order F, Qi, Qo, W, R_1, ..., R_t; the
flag qubits live in W (fastest qubit first-appended-last).  The compressed
operators used for operator-level checks drop W and order the axes
(F, R, Qi, Qo[, flag]); projectors stay on F ⊗ R(+Qi) and are applied by
axis permutation, never lifted to the full space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..qcore import PureState, RegisterLayout
from ..runtime import AlgorithmSpec
from .projectors import (
    ProjectorFamily,
    function_outputs,
    projector_family,
    truth_dim,
)
from .records import record_count

__all__ = [
    "DimensionCapError",
    "DEFAULT_AMPLITUDE_CAP",
    "extended_oracles",
    "extended_noisy_oracle",
    "ExtendedState",
    "StepOverlaps",
    "CallTransition",
    "ProgressTrace",
    "run_extended",
    "reduced_algorithm_density",
]

DEFAULT_AMPLITUDE_CAP = 2 ** 24


class DimensionCapError(RuntimeError):
    """Raised when a requested object would exceed the amplitude cap."""


def _check_cap(amplitudes: int, cap: int, what: str) -> None:
    if amplitudes > cap:
        raise DimensionCapError(
            f"{what} needs {amplitudes} amplitudes, above the cap of {cap}; "
            "raise the cap explicitly if this is intentional"
        )


# ---------------------------------------------------------------------------
# Compressed extended oracles (no workspace axis)
# ---------------------------------------------------------------------------

def extended_oracles(n: int, m: int, t: int, mode: str = "worst",
                     include_flag: bool = True,
                     cap: int = DEFAULT_AMPLITUDE_CAP) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """The clean/collapse isometries for call t+1 as sparse matrices.

    Input space (F, R_1..R_t, Qi, Qo), output space (F, R_1..R_{t+1}, Qi,
    Qo[, flag]).  Both map each basis state to a single basis state:

        clean:    |f, R, x, y>  ->  |f, R+blank, x, y XOR f(x)> (flag 0)
        collapse: |f, R, x, y>  ->  |f, R+x,     x, y XOR f(x)> (flag 1)
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    df = truth_dim(mode, n, m)
    rdim = record_count(n, t)
    flag_dim = 2 if include_flag else 1
    d_in = df * rdim * n * m
    d_out = df * rdim * (n + 1) * n * m * flag_dim
    _check_cap(d_out, cap, f"extended oracle at t={t} (mode={mode}, n={n}, m={m})")

    outs = function_outputs(mode, n, m)
    idx = np.arange(d_in)
    y = idx % m
    x = (idx // m) % n
    r = (idx // (m * n)) % rdim
    f = idx // (m * n * rdim)
    y2 = np.bitwise_xor(y, outs[f, x])

    def _build(symbol: np.ndarray, flag: int) -> sp.csr_matrix:
        rows = ((f * (rdim * (n + 1)) + r * (n + 1) + symbol) * n + x) * m + y2
        if include_flag:
            rows = rows * 2 + flag
        mat = sp.coo_matrix(
            (np.ones(d_in, dtype=np.complex128), (rows, idx)), shape=(d_out, d_in)
        )
        return mat.tocsr()

    clean = _build(np.zeros(d_in, dtype=np.int64), 0)
    collapse = _build(x + 1, 1)
    return clean, collapse


def extended_noisy_oracle(n: int, m: int, t: int, mode: str, p: float,
                          include_flag: bool = True,
                          cap: int = DEFAULT_AMPLITUDE_CAP) -> sp.csr_matrix:
    """The rate-p extended call: sqrt(1-p)*clean + sqrt(p)*collapse."""
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"p={p} outside [0, 1]")
    clean, collapse = extended_oracles(n, m, t, mode, include_flag, cap)
    return (math.sqrt(1.0 - p) * clean + math.sqrt(p) * collapse).tocsr()


# ---------------------------------------------------------------------------
# Full extended states
# ---------------------------------------------------------------------------

@dataclass
class ExtendedState:
    """A pure state of the extended computation after t oracle calls."""

    mode: str
    n: int
    m: int
    t: int
    ell: int
    amplitudes: np.ndarray  # tensor of shape (dF, n, m, w, rdim)

    @property
    def dims(self) -> tuple[int, ...]:
        return self.amplitudes.shape

    def to_pure_state(self) -> PureState:
        df, n, m, w, rdim = self.amplitudes.shape
        regs = [("F", df), ("Qi", n), ("Qo", m), ("W", w)]
        for i in range(self.t):
            regs.append((f"R{i + 1}", self.n + 1))
        layout = RegisterLayout(regs)
        return PureState(layout, self.amplitudes.reshape(-1))

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def _initial_extended(alg: AlgorithmSpec, mode: str) -> ExtendedState:
    df = truth_dim(mode, alg.n, alg.m)
    truth0 = np.full(df, 1.0 / math.sqrt(df), dtype=np.complex128)
    psi0 = alg.initial_state.reshape(alg.n, alg.m, 2 ** alg.ell)
    amps = truth0[:, None, None, None, None] * psi0[None, :, :, :, None]
    return ExtendedState(mode, alg.n, alg.m, 0, alg.ell, amps.astype(np.complex128))


def _apply_call_branches(state: ExtendedState, outs: np.ndarray,
                         coeff_clean: float, coeff_collapse: float) -> np.ndarray:
    """Scatter one extended call; returns the grown amplitude tensor.

    The workspace gains the flag qubit (fastest position), the record gains
    one register (fastest position among records).
    """
    df, n, m, w, rdim = state.amplitudes.shape
    src = state.amplitudes
    out = np.zeros((df, n, m, 2 * w, rdim * (n + 1)), dtype=np.complex128)
    ys = np.arange(m)
    for x in range(n):
        for v in range(m):
            rows = np.where(outs[:, x] == v)[0]
            if rows.size == 0:
                continue
            blk = src[rows, x][:, np.bitwise_xor(ys, v)]  # (k, m, w, rdim), y XORed
            if coeff_clean != 0.0:
                out[rows, x, :, 0::2, 0::(n + 1)] += coeff_clean * blk
            if coeff_collapse != 0.0:
                out[rows, x, :, 1::2, (x + 1)::(n + 1)] += coeff_collapse * blk
    return out


def _apply_unitary(amps: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Apply a dense unitary on (Qi, Qo, W) to a (dF, n, m, w, rdim) tensor."""
    df, n, m, w, rdim = amps.shape
    moved = amps.transpose(1, 2, 3, 0, 4).reshape(n * m * w, df * rdim)
    if u.shape != (n * m * w, n * m * w):
        raise ValueError(f"unitary shape {u.shape} does not match algorithm dimension {n * m * w}")
    out = (u @ moved).reshape(n, m, w, df, rdim)
    return out.transpose(3, 0, 1, 2, 4)


def _overlap_fr(amps: np.ndarray, proj: sp.csr_matrix) -> float:
    """Squared norm of the projection for a projector on F ⊗ R."""
    df, n, m, w, rdim = amps.shape
    mat = amps.transpose(0, 4, 1, 2, 3).reshape(df * rdim, n * m * w)
    return max(0.0, float(np.vdot(mat, proj @ mat).real))


def _overlap_frq(amps: np.ndarray, proj: sp.csr_matrix) -> float:
    """Squared norm of the projection for a projector on F ⊗ R ⊗ Qi."""
    df, n, m, w, rdim = amps.shape
    mat = amps.transpose(0, 4, 1, 2, 3).reshape(df * rdim * n, m * w)
    return max(0.0, float(np.vdot(mat, proj @ mat).real))


def _project_frq(amps: np.ndarray, proj: sp.csr_matrix) -> np.ndarray:
    """Apply a projector on F ⊗ R ⊗ Qi to the full tensor (same shape out)."""
    df, n, m, w, rdim = amps.shape
    mat = amps.transpose(0, 4, 1, 2, 3).reshape(df * rdim * n, m * w)
    out = (proj @ mat).reshape(df, rdim, n, m, w)
    return out.transpose(0, 2, 3, 4, 1)


def _success_probability(amps: np.ndarray, outs: np.ndarray, mode: str) -> float:
    """Overlap with the success projector (marked truth value at the answer)."""
    df, n, m, w, rdim = amps.shape
    marked_value = 1 if mode == "worst" else 0
    total = 0.0
    for x in range(n):
        rows = np.where(outs[:, x] == marked_value)[0]
        if rows.size:
            blk = amps[rows, x]
            total += float(np.vdot(blk, blk).real)
    return total


# ---------------------------------------------------------------------------
# Progress trace
# ---------------------------------------------------------------------------

@dataclass
class StepOverlaps:
    """Progress-subspace weights of the state just before call t+1."""

    t: int
    classical: float
    quantum: float
    active: float
    passive: float
    psi: float


@dataclass
class CallTransition:
    """Weights after applying each oracle branch to the step-t state."""

    t: int
    quantum_after_clean: float
    quantum_after_collapse: float
    classical_after_clean: float
    classical_after_collapse: float
    classical_from_passive: float
    increment: float
    increment_bound: float


@dataclass
class ProgressTrace:
    mode: str
    n: int
    m: int
    p: float
    tau: int
    steps: list[StepOverlaps] = field(default_factory=list)
    transitions: list[CallTransition] = field(default_factory=list)
    q_succ: float = 0.0

    @property
    def final_psi(self) -> float:
        return self.steps[-1].psi

    def final_success_bound(self) -> float:
        extra = 2.0 / (self.n - self.tau) if self.mode == "worst" else 2.0 / self.m
        return self.final_psi + extra


def _step_overlaps(amps: np.ndarray, fam: ProjectorFamily, t: int) -> StepOverlaps:
    c = _overlap_fr(amps, fam.classical)
    b = _overlap_fr(amps, fam.quantum)
    act = _overlap_frq(amps, fam.active)
    pas = _overlap_frq(amps, fam.passive)
    return StepOverlaps(t=t, classical=c, quantum=b, active=act, passive=pas,
                        psi=c + fam.progress_scalar * b)


def run_extended(alg: AlgorithmSpec, p: float, mode: str = "worst",
                 cap: int = DEFAULT_AMPLITUDE_CAP) -> tuple[ProgressTrace, ExtendedState]:
    """Run the purified computation, tracing progress at every step.

    The noise is the signaling dephasing oracle of rate p; the algorithm's
    unitaries must therefore be sized for signaling mode (the workspace
    grows by the flag qubit at every call).
    """
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"p={p} outside [0, 1]")
    alg.validate(signaling=True)
    n, m = alg.n, alg.m
    outs = function_outputs(mode, n, m)
    state = _initial_extended(alg, mode)
    trace = ProgressTrace(mode=mode, n=n, m=m, p=p, tau=alg.tau)

    fam = projector_family(mode, n, m, 0)
    trace.steps.append(_step_overlaps(state.amplitudes, fam, 0))

    sq, sc = math.sqrt(1.0 - p), math.sqrt(p)
    for t in range(alg.tau):
        df, _, _, w, rdim = state.amplitudes.shape
        _check_cap(df * n * m * (2 * w) * rdim * (n + 1), cap,
                   f"extended state at call {t + 1}")
        fam_next = projector_family(mode, n, m, t + 1)

        after_clean = _apply_call_branches(state, outs, 1.0, 0.0)
        after_collapse = _apply_call_branches(state, outs, 0.0, 1.0)

        # progress weights the two branches would produce on their own
        bq = _overlap_fr(after_clean, fam_next.quantum)
        bc = _overlap_fr(after_collapse, fam_next.quantum)
        cq = _overlap_fr(after_clean, fam_next.classical)
        cc = _overlap_fr(after_collapse, fam_next.classical)
        passive_part = _project_frq(state.amplitudes, fam.passive)
        pas_state = ExtendedState(mode, n, m, t, alg.ell, passive_part)
        pas_collapse = _apply_call_branches(pas_state, outs, 0.0, 1.0)
        w_pas = _overlap_fr(pas_collapse, fam_next.classical)

        amps = sq * after_clean + sc * after_collapse
        u = alg.step_dense(t + 1, signaling=True)
        amps = _apply_unitary(amps, u)
        state = ExtendedState(mode, n, m, t + 1, alg.ell, amps)

        step = _step_overlaps(amps, fam_next, t + 1)
        prev_psi = trace.steps[-1].psi
        if mode == "worst":
            bound = 48.0 / (p * (n - t - 1)) if p > 0.0 and n - t - 1 > 0 else math.inf
        else:
            bound = 32.0 / (p * (m - 1)) if p > 0.0 else math.inf
        trace.transitions.append(CallTransition(
            t=t,
            quantum_after_clean=bq,
            quantum_after_collapse=bc,
            classical_after_clean=cq,
            classical_after_collapse=cc,
            classical_from_passive=w_pas,
            increment=step.psi - prev_psi,
            increment_bound=bound,
        ))
        trace.steps.append(step)
        fam = fam_next

    trace.q_succ = _success_probability(state.amplitudes, outs, mode)
    return trace, state


def reduced_algorithm_density(state: ExtendedState) -> np.ndarray:
    """Trace out truth and record registers; returns the matrix on Qi⊗Qo⊗W."""
    df, n, m, w, rdim = state.amplitudes.shape
    t = state.amplitudes.reshape(df, n * m * w, rdim)
    return np.einsum("faj,fbj->ab", t, t.conj())
