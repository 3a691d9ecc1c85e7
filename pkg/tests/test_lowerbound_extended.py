"""Extended computation: oracle isometries, purification, progress traces.

The reference constructions here are deliberately independent of the
package's vectorized index-scatter code: dense operators are assembled from
Kronecker factors basis state by basis state, so agreement is a real check.
"""

import math

import numpy as np
import pytest

from noisysearch.lowerbound import (
    DimensionCapError,
    complement_superposition,
    extended_noisy_oracle,
    extended_oracles,
    function_outputs,
    projector_family,
    random_algorithm,
    record_count,
    reduced_algorithm_density,
    run_extended,
    truth_dim,
)
from noisysearch.oracles import (
    NoiseSpec,
    TruthTable,
    signaling_call_channel,
    standard_oracle_unitary,
)
from noisysearch.runtime import AlgorithmSpec, run_exact
from noisysearch.search import grover_algorithm
from noisysearch.qcore import basis_vec, random_unitary


# ---------------------------------------------------------------------------
# independent dense construction of the extended calls
# ---------------------------------------------------------------------------

def dense_extended_calls(n, m, t, mode):
    """Kronecker-factor construction: sum over truth-basis states."""
    df = truth_dim(mode, n, m)
    rdim = record_count(n, t)
    outs = function_outputs(mode, n, m)

    append = {}
    for sym in range(n + 1):
        a = np.zeros((rdim * (n + 1), rdim))
        for r in range(rdim):
            a[r * (n + 1) + sym, r] = 1.0
        append[sym] = a

    e0 = basis_vec(2, 0).reshape(2, 1)
    e1 = basis_vec(2, 1).reshape(2, 1)
    d_in = df * rdim * n * m
    d_out = df * rdim * (n + 1) * n * m * 2
    clean = np.zeros((d_out, d_in), dtype=np.complex128)
    collapse = np.zeros((d_out, d_in), dtype=np.complex128)
    for f_idx in range(df):
        e_ff = np.zeros((df, df))
        e_ff[f_idx, f_idx] = 1.0
        table = TruthTable.from_outputs(list(outs[f_idx]), m)
        o_f = standard_oracle_unitary(table)
        clean += np.kron(np.kron(np.kron(e_ff, append[0]), o_f), e0)
        for x in range(n):
            e_xx = np.zeros((n, n))
            e_xx[x, x] = 1.0
            xor = np.zeros((m, m))
            for y in range(m):
                xor[y ^ int(outs[f_idx, x]), y] = 1.0
            collapse += np.kron(np.kron(np.kron(e_ff, append[x + 1]),
                                        np.kron(e_xx, xor)), e1)
    return clean, collapse


@pytest.mark.parametrize("mode,n,m,t", [
    ("worst", 3, 2, 0), ("worst", 4, 2, 1), ("random", 2, 2, 1), ("random", 2, 4, 0),
])
def test_extended_calls_match_dense_reference(mode, n, m, t):
    clean_ref, collapse_ref = dense_extended_calls(n, m, t, mode)
    clean, collapse = extended_oracles(n, m, t, mode)
    assert np.abs(clean.toarray() - clean_ref).max() < 1e-14
    assert np.abs(collapse.toarray() - collapse_ref).max() < 1e-14


def test_extended_call_basis_action():
    # clean: |f_z, R, x, y> -> |f_z, R+blank, x, y^f_z(x)> with flag 0
    # collapse: records x and sets flag 1
    n, m, t = 3, 2, 1
    clean, collapse = extended_oracles(n, m, t, "worst")
    rdim = record_count(n, t)
    z, r, x, y = 1, 2, 1, 0  # f_z(x) = 1 here
    col = ((z * rdim + r) * n + x) * m + y
    out_clean = (((z * (rdim * (n + 1)) + r * (n + 1) + 0) * n + x) * m + (y ^ 1)) * 2 + 0
    out_coll = (((z * (rdim * (n + 1)) + r * (n + 1) + (x + 1)) * n + x) * m + (y ^ 1)) * 2 + 1
    v = clean @ basis_vec(clean.shape[1], col)
    assert v[out_clean] == 1.0 and np.abs(v).sum() == 1.0
    v = collapse @ basis_vec(collapse.shape[1], col)
    assert v[out_coll] == 1.0 and np.abs(v).sum() == 1.0


def test_mixed_call_is_isometry_for_all_rates():
    n, m, t = 3, 2, 1
    for p in (0.0, 0.3, 1.0):
        op = extended_noisy_oracle(n, m, t, "worst", p)
        gram = (op.conj().T @ op).toarray()
        assert np.abs(gram - np.eye(op.shape[1])).max() < 1e-12


def test_extended_call_reproduces_signaling_channel():
    # fixing the truth register and discarding the fresh record register
    # leaves exactly the signaling noisy call on Q
    n, m = 4, 2
    p = 0.35
    op = extended_noisy_oracle(n, m, 0, "worst", p).toarray()
    z = 2
    table = TruthTable.unique_marked(n, z)
    d = n * m
    # columns for F = z: map Q basis -> (F, R1, Qi, Qo, flag)
    cols = np.stack([op[:, z * d + j] for j in range(d)], axis=1)
    cols = cols.reshape(n, n + 1, d * 2, d)  # (F, R1, Q*flag, input)
    choi = np.zeros((2 * d * d, 2 * d * d), dtype=np.complex128)
    for j in range(d):
        for k in range(d):
            # E(|j><k|) after tracing out F and the record register
            block = np.einsum("fra,frb->ab",
                              cols[:, :, :, j], cols[:, :, :, k].conj())
            choi += np.kron(block, np.outer(basis_vec(d, j), basis_vec(d, k)))
    ref = signaling_call_channel(table, NoiseSpec("dephasing", p, True)).choi()
    assert np.abs(choi - ref).max() < 1e-10


def test_extended_call_with_flag_discarded_is_concealing():
    from noisysearch.oracles import concealing_call_channel

    n, m = 3, 2
    p = 0.6
    op = extended_noisy_oracle(n, m, 0, "worst", p).toarray()
    z = 0
    table = TruthTable.unique_marked(n, z)
    d = n * m
    cols = np.stack([op[:, z * d + j] for j in range(d)], axis=1)
    cols = cols.reshape(n, n + 1, d, 2, d)  # (F, R1, Q, flag, input)
    choi = np.zeros((d * d, d * d), dtype=np.complex128)
    for j in range(d):
        for k in range(d):
            block = np.einsum("frag,frbg->ab", cols[:, :, :, :, j],
                              cols[:, :, :, :, k].conj())
            choi += np.kron(block, np.outer(basis_vec(d, j), basis_vec(d, k)))
    ref = concealing_call_channel(table, NoiseSpec("dephasing", p)).choi()
    assert np.abs(choi - ref).max() < 1e-10


def test_dimension_cap_guard():
    with pytest.raises(DimensionCapError, match="cap"):
        extended_oracles(3, 2, 1, "worst", cap=10)
    alg = grover_algorithm(4, 2)
    with pytest.raises(DimensionCapError, match="call"):
        run_extended(alg, 0.5, "worst", cap=500)


# ---------------------------------------------------------------------------
# hand-built first step of the uniform-superposition query
# ---------------------------------------------------------------------------

def test_first_query_progress_by_hand():
    # independent construction of the state after one clean uniform query,
    # and of the progress weights, straight from the definitions
    n = 4
    u = np.full(n, 1 / math.sqrt(n))
    minus = np.array([1.0, -1.0]) / math.sqrt(2.0)
    phi = np.zeros((n, n, 2, 2, n + 1), dtype=np.complex128)  # (F,Qi,Qo,W,R1)
    for z in range(n):
        o_f = standard_oracle_unitary(TruthTable.unique_marked(n, z))
        q = (o_f @ np.kron(u, minus)).reshape(n, 2)
        phi[z, :, :, 0, 0] = q / math.sqrt(n)  # flag 0, blank record

    # progress projectors at t=1, from their defining formulas
    psi_empty = complement_superposition(n, frozenset())
    c_weight = 0.0  # no recorded inputs can be marked after a clean call
    quantum_proj = np.eye(n) - np.outer(psi_empty, psi_empty)
    blank = phi[:, :, :, 0, 0]
    b_weight = float(np.einsum("za,zxy,axy->", quantum_proj, blank.conj(), blank).real)
    psi_by_hand = c_weight + 3.0 * b_weight
    assert abs(psi_by_hand - 3.0 * 4.0 * (n - 1) / n ** 2) < 1e-12  # = 2.25 at n=4

    trace, _ = run_extended(grover_algorithm(n, 1), 0.0, "worst")
    assert abs(trace.steps[1].psi - psi_by_hand) < 1e-12
    assert abs(trace.steps[1].psi - 2.25) < 1e-12


# ---------------------------------------------------------------------------
# run_extended properties
# ---------------------------------------------------------------------------

def test_initial_progress_is_zero_both_modes():
    alg = random_algorithm(4, 2, 2, 1, seed=0)
    trace, _ = run_extended(alg, 0.5, "worst")
    assert abs(trace.steps[0].psi) < 1e-10
    alg_r = random_algorithm(3, 4, 2, 1, seed=1)
    trace_r, _ = run_extended(alg_r, 0.5, "random")
    assert abs(trace_r.steps[0].psi) < 1e-10


def test_extended_state_stays_normalized():
    alg = random_algorithm(4, 2, 3, 1, seed=2)
    _, state = run_extended(alg, 0.35, "worst")
    assert abs(state.norm() - 1.0) < 1e-10
    layout = state.to_pure_state().layout
    assert layout.names == ("F", "Qi", "Qo", "W", "R1", "R2", "R3")
    assert layout.dim("W") == 2 ** (1 + 3)


def test_progress_invariant_under_algorithm_unitaries():
    # appending one more unitary on (Qi, Qo, W) must not change the trace
    n, m, tau, ell = 4, 2, 2, 1
    base = random_algorithm(n, m, tau, ell, seed=3)
    extra = random_unitary(n * m * 2 ** (ell + tau), np.random.default_rng(99))
    twisted = AlgorithmSpec(
        n=n, m=m, tau=tau, ell=ell, initial_state=base.initial_state,
        steps=tuple(base.steps[:-1]) + (extra @ base.steps[-1],),
    )
    for p in (0.0, 0.5):
        a, _ = run_extended(base, p, "worst")
        b, _ = run_extended(twisted, p, "worst")
        assert abs(a.steps[-1].psi - b.steps[-1].psi) < 1e-10
        assert abs(a.steps[-1].classical - b.steps[-1].classical) < 1e-10


def test_success_probability_matches_averaged_direct_runs():
    n, m, tau, ell = 4, 2, 2, 1
    alg = random_algorithm(n, m, tau, ell, seed=4)
    for p in (0.0, 0.4):
        trace, _ = run_extended(alg, p, "worst")
        spec = NoiseSpec("dephasing", p, signaling=True)
        direct = np.mean([
            run_exact(alg, TruthTable.unique_marked(n, x), spec)[0].success_probability
            for x in range(n)
        ])
        assert abs(trace.q_succ - direct) < 1e-9


@pytest.mark.parametrize("p", [0.0, 0.5])
def test_purification_consistency(p):
    # tracing out truth and record registers reproduces the averaged
    # signaling-mode density run, step for step identical unitaries
    n, m, tau, ell = 4, 2, 3, 1
    alg = random_algorithm(n, m, tau, ell, seed=5)
    _, state = run_extended(alg, p, "worst")
    reduced = reduced_algorithm_density(state)
    spec = NoiseSpec("dephasing", p, signaling=True)
    avg = np.zeros_like(reduced)
    for x in range(n):
        _, rho = run_exact(alg, TruthTable.unique_marked(n, x), spec)
        avg += rho.mat / n
    assert np.abs(reduced - avg).max() < 1e-9


def test_random_mode_purification_consistency():
    n, m, tau, ell = 2, 2, 2, 1
    alg = random_algorithm(n, m, tau, ell, seed=6)
    p = 0.5
    _, state = run_extended(alg, p, "random")
    reduced = reduced_algorithm_density(state)
    spec = NoiseSpec("dephasing", p, signaling=True)
    outs = function_outputs("random", n, m)
    avg = np.zeros_like(reduced)
    for f_idx in range(m ** n):
        table = TruthTable.from_outputs(list(outs[f_idx]), m)
        _, rho = run_exact(alg, table, spec)
        avg += rho.mat / m ** n
    assert np.abs(reduced - avg).max() < 1e-9


def test_transition_weights_recombine_into_next_step():
    # the clean/collapse branch weights recombine with (1-p, p) because the
    # branches land in orthogonal subspaces and the unitary changes nothing
    alg = random_algorithm(5, 2, 3, 1, seed=7)
    p = 0.3
    trace, _ = run_extended(alg, p, "worst")
    for tr, nxt in zip(trace.transitions, trace.steps[1:]):
        combined_quantum = (1 - p) * tr.quantum_after_clean + p * tr.quantum_after_collapse
        combined_classical = (1 - p) * tr.classical_after_clean + p * tr.classical_after_collapse
        assert abs(combined_quantum - nxt.quantum) < 1e-10
        assert abs(combined_classical - nxt.classical) < 1e-10
