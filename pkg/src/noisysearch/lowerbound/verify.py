"""Numerical certification of the progress-measure machinery.

Three layers of checks, each returning plain result rows:

* ``verify_claim_identities``: operator equalities that hold exactly (to
  rounding) — which subspaces each oracle branch preserves, where it can
  send weight, orthogonality of images, resolutions of identity,
  isometry of the extended calls.
* ``verify_claim_norms``: closed-form operator norms of the nonzero
  transfer operators (idle -> active under the clean branch, idle ->
  classical under the collapse branch, success overlap with idle).
* ``verify_lemma_inequalities``: per-call progress inequalities evaluated
  on actual runs of (random) algorithms, plus the start-at-zero and
  final-success bounds.

Norms are computed on compressed operators over (F, R, Qi, Qo, flag); the
workspace register is dropped, which is sound because every projector and
both oracle branches act as the identity on it (the freshly written flag
is kept as an explicit output axis).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..qcore import operator_norm, random_statevec, random_unitary
from ..runtime import AlgorithmSpec
from .extended import (
    DEFAULT_AMPLITUDE_CAP,
    ProgressTrace,
    extended_oracles,
    run_extended,
)
from .projectors import (
    complement_superposition,
    marked_direction,
    projector_family,
    success_projector,
)
from .records import record_input_sets

__all__ = [
    "CheckResult",
    "verify_claim_identities",
    "verify_claim_norms",
    "verify_lemma_inequalities",
    "random_algorithm",
    "all_pass",
    "IDENTITY_TOL",
    "COMPLETENESS_TOL",
    "NORM_TOL",
    "INEQUALITY_TOL",
]

IDENTITY_TOL = 1e-10
COMPLETENESS_TOL = 1e-12
NORM_TOL = 1e-9
INEQUALITY_TOL = 1e-9


@dataclass
class CheckResult:
    """One verification row: computed vs expected with residual and verdict."""

    mode: str
    n: int
    m: int
    t: int
    p: float | None
    name: str
    computed: float
    expected: float
    residual: float
    passed: bool
    note: str = ""


def all_pass(results) -> bool:
    return all(r.passed for r in results)


def _maxabs(mat) -> float:
    mat = mat.tocoo() if sp.issparse(mat) else sp.coo_matrix(mat)
    return float(np.abs(mat.data).max()) if mat.nnz else 0.0


def _lift_fr(proj: sp.csr_matrix, n: int, m: int, with_flag: bool) -> sp.csr_matrix:
    """Lift a projector on F ⊗ R to (F, R, Qi, Qo[, flag])."""
    tail = n * m * (2 if with_flag else 1)
    return sp.kron(proj, sp.identity(tail, dtype=np.complex128, format="csr"), format="csr")


def _lift_frq(proj: sp.csr_matrix, m: int, with_flag: bool) -> sp.csr_matrix:
    """Lift a projector on F ⊗ R ⊗ Qi to (F, R, Qi, Qo[, flag])."""
    tail = m * (2 if with_flag else 1)
    return sp.kron(proj, sp.identity(tail, dtype=np.complex128, format="csr"), format="csr")


def _result(mode, n, m, t, name, computed, expected, tol, note="", p=None,
            passed=None) -> CheckResult:
    residual = abs(computed - expected)
    if passed is None:
        passed = residual <= tol
    return CheckResult(mode=mode, n=n, m=m, t=t, p=p, name=name,
                       computed=float(computed), expected=float(expected),
                       residual=float(residual), passed=bool(passed), note=note)


# ---------------------------------------------------------------------------
# Exact operator identities
# ---------------------------------------------------------------------------

def verify_claim_identities(n: int, m: int, t: int, mode: str = "worst",
                            cap: int = DEFAULT_AMPLITUDE_CAP) -> list[CheckResult]:
    """Max-entry residuals of the exact operator identities at step t."""
    fam = projector_family(mode, n, m, t)
    fam2 = projector_family(mode, n, m, t + 1)
    clean, collapse = extended_oracles(n, m, t, mode, include_flag=True, cap=cap)
    res: list[CheckResult] = []

    def row(name, value, tol=IDENTITY_TOL, note=""):
        res.append(_result(mode, n, m, t, name, value, 0.0, tol, note))

    eye_in = sp.identity(clean.shape[1], dtype=np.complex128, format="csr")
    eye_out = sp.identity(clean.shape[0], dtype=np.complex128, format="csr")

    # isometries with orthogonal images
    row("clean_isometry", _maxabs(clean.conj().T @ clean - eye_in), COMPLETENESS_TOL)
    row("collapse_isometry", _maxabs(collapse.conj().T @ collapse - eye_in), COMPLETENESS_TOL)
    row("clean_collapse_images_orthogonal", _maxabs(clean.conj().T @ collapse),
        COMPLETENESS_TOL)
    mixed = math.sqrt(1.0 - 0.37) * clean + math.sqrt(0.37) * collapse
    row("mixed_call_isometry", _maxabs(mixed.conj().T @ mixed - eye_in), COMPLETENESS_TOL)

    # resolutions of identity and the active/passive split, at t and t+1
    for fam_k, label in ((fam, "t"), (fam2, "t_plus_1")):
        eye_fr = sp.identity(fam_k.dim_fr, dtype=np.complex128, format="csr")
        row(f"subspace_resolution_{label}",
            _maxabs(fam_k.classical + fam_k.quantum + fam_k.idle - eye_fr),
            COMPLETENESS_TOL)
        lifted_quantum = sp.kron(fam_k.quantum,
                                 sp.identity(n, dtype=np.complex128, format="csr"))
        row(f"active_passive_split_{label}",
            _maxabs(fam_k.active + fam_k.passive - lifted_quantum), COMPLETENESS_TOL)

    c_in = _lift_fr(fam.classical, n, m, False)
    c_out = _lift_fr(fam2.classical, n, m, True)
    a_in = _lift_fr(fam.idle, n, m, False)
    a_out = _lift_fr(fam2.idle, n, m, True)
    b_in = _lift_fr(fam.quantum, n, m, False)
    b_out = _lift_fr(fam2.quantum, n, m, True)
    act_in = _lift_frq(fam.active, m, False)
    act_out = _lift_frq(fam2.active, m, True)
    pas_in = _lift_frq(fam.passive, m, False)
    pas_out = _lift_frq(fam2.passive, m, True)

    # the clean branch relabels the record without touching its content
    row("clean_commutes_with_marked_record", _maxabs(clean @ c_in - c_out @ clean))
    # the collapse branch never removes a marked input from the record
    row("collapse_keeps_marked_record", _maxabs((eye_out - c_out) @ (collapse @ c_in)))
    # freshly created classical weight is orthogonal to pre-existing one
    m_old = c_out @ (collapse @ c_in)
    m_new = c_out @ (collapse @ (b_in + a_in))
    row("fresh_vs_old_classical_images_orthogonal", _maxabs(m_old.conj().T @ m_new))
    # the collapse branch sends active weight only to classical or idle
    row("collapse_maps_active_to_classical_or_idle",
        _maxabs((eye_out - c_out - a_out) @ (collapse @ act_in)))
    # the collapse branch cannot create quantum weight out of idle weight
    row("collapse_cannot_reach_quantum_from_idle", _maxabs(b_out @ (collapse @ a_in)))

    if mode == "worst":
        # the passive subspace is invariant under both branches
        row("passive_invariant_under_clean", _maxabs(clean @ pas_in - pas_out @ clean))
        row("passive_invariant_under_collapse",
            _maxabs(collapse @ pas_in - pas_out @ collapse))
        res.append(_result(mode, n, m, t, "marked_state_swap_identity",
                           _swap_identity_residual(n, t), 0.0, COMPLETENESS_TOL))
    else:
        # weaker containments: each branch keeps active in active (under the
        # quantum part) and passive in passive
        row("clean_keeps_active_in_active",
            _maxabs((b_out - act_out) @ (clean @ act_in)))
        row("clean_keeps_passive_in_passive",
            _maxabs((b_out - pas_out) @ (clean @ pas_in)))
    return res


def _swap_identity_residual(n: int, t: int) -> float:
    """Residual of: idle(S) + direction(S, x) = idle(S+x) + |f_x> projector."""
    worst = 0.0
    seen = set()
    for rec in record_input_sets(n, t):
        if rec in seen or n - len(rec) < 2:
            continue
        seen.add(rec)
        psi = complement_superposition(n, rec)
        lhs_base = np.outer(psi, psi.conj())
        for x in range(n):
            if x in rec:
                continue
            fx = marked_direction(n, rec, x)
            psi2 = complement_superposition(n, rec | {x})
            rhs = np.outer(psi2, psi2.conj())
            rhs[x, x] += 1.0
            worst = max(worst, np.abs(lhs_base + np.outer(fx, fx.conj()) - rhs).max())
    return worst


# ---------------------------------------------------------------------------
# Closed-form norms
# ---------------------------------------------------------------------------

def expected_idle_to_active_norm(mode: str, n: int, m: int, t: int) -> float:
    if mode == "worst":
        return 2.0 * math.sqrt(n - t - 1) / (n - t)
    return math.sqrt(2.0 * m - 3.0) / (m - 1.0)


def expected_idle_to_classical_norm(mode: str, n: int, m: int, t: int) -> float:
    if mode == "worst":
        return 1.0 / math.sqrt(n - t)
    return 1.0 / math.sqrt(m)


def verify_claim_norms(n: int, m: int, t: int, mode: str = "worst",
                       cap: int = DEFAULT_AMPLITUDE_CAP) -> list[CheckResult]:
    """Operator norms of the transfer operators against their closed forms."""
    fam = projector_family(mode, n, m, t)
    fam2 = projector_family(mode, n, m, t + 1)
    clean, collapse = extended_oracles(n, m, t, mode, include_flag=True, cap=cap)
    res: list[CheckResult] = []

    a_in = _lift_fr(fam.idle, n, m, False)
    act_in = _lift_frq(fam.active, m, False)
    b_out = _lift_fr(fam2.quantum, n, m, True)
    c_out = _lift_fr(fam2.classical, n, m, True)
    a_out = _lift_fr(fam2.idle, n, m, True)
    act_out = _lift_frq(fam2.active, m, True)

    transfer = act_out @ (clean @ a_in)
    res.append(_result(mode, n, m, t, "idle_to_active_transfer_norm",
                       operator_norm(transfer),
                       expected_idle_to_active_norm(mode, n, m, t), NORM_TOL))
    res.append(_result(mode, n, m, t, "idle_transfer_lands_in_active",
                       _maxabs((b_out - act_out) @ (clean @ a_in)), 0.0, IDENTITY_TOL))

    to_classical = c_out @ (collapse @ a_in)
    if mode == "worst":
        res.append(_result(mode, n, m, t, "idle_to_classical_transfer_norm_sq",
                           operator_norm(to_classical) ** 2, 1.0 / (n - t), NORM_TOL))
    else:
        res.append(_result(mode, n, m, t, "idle_to_classical_transfer_norm",
                           operator_norm(to_classical),
                           expected_idle_to_classical_norm(mode, n, m, t), NORM_TOL))

    succ = success_projector(mode, n, m, t)
    idle_frq = sp.kron(fam.idle, sp.identity(n, dtype=np.complex128, format="csr"))
    res.append(_result(mode, n, m, t, "success_overlap_with_idle",
                       operator_norm(succ @ idle_frq),
                       expected_idle_to_classical_norm(mode, n, m, t), NORM_TOL))

    if mode == "worst":
        backflow = a_out @ (collapse @ act_in)
        bound = 1.0 / math.sqrt(n - t)
        res.append(_result(mode, n, m, t, "active_to_idle_backflow_norm",
                           operator_norm(backflow), bound, math.inf,
                           note="informational: reported against the bound, not asserted",
                           passed=True))
    return res


# ---------------------------------------------------------------------------
# Per-call progress inequalities on actual runs
# ---------------------------------------------------------------------------

def random_algorithm(n: int, m: int, tau: int, ell: int, seed) -> AlgorithmSpec:
    """Random signaling-mode algorithm: Haar unitaries, Gaussian initial state."""
    rng = np.random.default_rng(seed)
    init = random_statevec(n * m * 2 ** ell, rng)
    steps = tuple(random_unitary(n * m * 2 ** (ell + t), rng) for t in range(1, tau + 1))
    return AlgorithmSpec(n=n, m=m, tau=tau, ell=ell, initial_state=init, steps=steps)


def verify_lemma_inequalities(alg: AlgorithmSpec, p: float, mode: str = "worst",
                              tol: float = INEQUALITY_TOL,
                              cap: int = DEFAULT_AMPLITUDE_CAP):
    """Run the extended computation and check every per-call inequality.

    Returns (results, trace).  Requires p > 0 for the increment bound and,
    in worst mode, n - tau >= 2 so the final bound is meaningful.
    """
    if p <= 0.0:
        raise ValueError("the increment bound needs p > 0")
    n, m = alg.n, alg.m
    if mode == "worst" and n - alg.tau < 2:
        raise ValueError(f"worst mode needs n - tau >= 2, got n={n}, tau={alg.tau}")
    trace, _ = run_extended(alg, p, mode, cap=cap)
    res: list[CheckResult] = []

    res.append(_result(mode, n, m, 0, "initial_progress_zero",
                       trace.steps[0].psi, 0.0, 1e-10, p=p))

    for tr in trace.transitions:
        t = tr.t
        step = trace.steps[t]
        if mode == "worst":
            if n - t - 1 <= 0:
                raise ValueError(f"call {t + 1}: n - t - 1 must stay positive")
            spread = 2.0 / math.sqrt(n - t - 1)
            quantum_clean_bound = (math.sqrt(step.active) + spread) ** 2 + step.passive
            quantum_collapse_expected = step.passive
            classical_collapse_bound = (step.classical + 2.0 * step.active
                                        + 2.0 / (n - t - 1))
        else:
            spread = math.sqrt(2.0 / (m - 1))
            quantum_clean_bound = (math.sqrt(step.active) + spread) ** 2 + step.passive
            quantum_collapse_expected = step.passive - tr.classical_from_passive
            classical_collapse_bound = (step.classical + 3.0 * step.active
                                        + 3.0 * tr.classical_from_passive
                                        + 3.0 / (m - 1))

        res.append(_result(mode, n, m, t, "quantum_weight_after_clean_call_bound",
                           tr.quantum_after_clean, quantum_clean_bound, math.inf, p=p,
                           passed=tr.quantum_after_clean <= quantum_clean_bound + tol))
        res.append(_result(mode, n, m, t, "quantum_weight_after_collapse_equality",
                           tr.quantum_after_collapse, quantum_collapse_expected, tol, p=p))
        res.append(_result(mode, n, m, t, "classical_weight_after_clean_equality",
                           tr.classical_after_clean, step.classical, tol, p=p))
        res.append(_result(mode, n, m, t, "classical_weight_after_collapse_bound",
                           tr.classical_after_collapse, classical_collapse_bound,
                           math.inf, p=p,
                           passed=tr.classical_after_collapse
                           <= classical_collapse_bound + tol))
        res.append(_result(mode, n, m, t, "progress_increment_bound",
                           tr.increment, tr.increment_bound, math.inf, p=p,
                           passed=tr.increment <= tr.increment_bound + tol))

    res.append(_result(mode, n, m, alg.tau, "final_success_bound",
                       trace.q_succ, trace.final_success_bound(), math.inf, p=p,
                       passed=trace.q_succ <= trace.final_success_bound() + tol))
    return res, trace
