"""Progress projector families: definitional identities and record bookkeeping."""

import numpy as np
import pytest
import scipy.sparse as sp

from noisysearch.lowerbound import (
    Record,
    all_records,
    complement_superposition,
    marked_direction,
    output_marked_direction,
    projector_family,
    record_count,
    record_input_sets,
    success_projector,
    truth_dim,
)


# ---------------------------------------------------------------------------
# records
# ---------------------------------------------------------------------------

def test_record_symbol_encoding():
    r = Record((0, 3, 0, 1))  # blank, input 2, blank, input 0
    assert r.inputs() == frozenset({2, 0})
    assert r.n_remaining(5) == 3
    assert r.appended(0).inputs() == r.inputs()
    assert r.appended(5).inputs() == r.inputs() | {4}


def test_record_index_round_trip():
    n, t = 3, 3
    for idx in range(record_count(n, t)):
        r = Record.from_index(idx, n, t)
        assert r.index(n) == idx
    assert record_count(n, t) == (n + 1) ** t


def test_record_append_is_index_arithmetic():
    n = 4
    r = Record((2, 0))
    assert r.appended(3).index(n) == r.index(n) * (n + 1) + 3


def test_input_set_size_bounded_by_length():
    for rec in all_records(3, 2):
        assert len(rec.inputs()) <= rec.length


# ---------------------------------------------------------------------------
# defining vectors
# ---------------------------------------------------------------------------

def test_complement_superposition_entries():
    psi = complement_superposition(5, frozenset({1, 3}))
    assert abs(np.linalg.norm(psi) - 1.0) < 1e-14
    assert psi[1] == 0 and psi[3] == 0
    assert np.allclose(psi[[0, 2, 4]], 1 / np.sqrt(3))
    assert np.linalg.norm(complement_superposition(3, frozenset({0, 1, 2}))) == 0.0


def test_marked_direction_orthogonality():
    n = 6
    rec = frozenset({2})
    for x in (0, 1, 3):
        fx = marked_direction(n, rec, x)
        assert abs(np.linalg.norm(fx) - 1.0) < 1e-14
        assert abs(np.vdot(complement_superposition(n, rec), fx)) < 1e-14
        # the grown complement is orthogonal to the plain marked state
        grown = complement_superposition(n, rec | {x})
        e_x = np.zeros(n)
        e_x[x] = 1.0
        assert abs(np.vdot(grown, e_x)) < 1e-14
    with pytest.raises(ValueError):
        marked_direction(n, rec, 2)
    with pytest.raises(ValueError):
        marked_direction(2, frozenset({0}), 1)  # only one candidate left


def test_swap_identity_of_projector_pairs():
    # idle(S) + direction(S, x) projectors == idle(S+x) + marked(x) projectors
    n = 5
    for rec in (frozenset(), frozenset({1}), frozenset({0, 3})):
        for x in range(n):
            if x in rec:
                continue
            psi = complement_superposition(n, rec)
            fx = marked_direction(n, rec, x)
            psi2 = complement_superposition(n, rec | {x})
            rhs = np.outer(psi2, psi2) + np.diag(np.eye(n)[x])
            lhs = np.outer(psi, psi) + np.outer(fx, fx)
            assert np.abs(lhs - rhs).max() < 1e-14


def test_output_marked_direction():
    for m in (2, 4, 8):
        v = output_marked_direction(m)
        assert abs(np.linalg.norm(v) - 1.0) < 1e-14
        uniform = np.full(m, 1 / np.sqrt(m))
        assert abs(np.vdot(uniform, v)) < 1e-14


# ---------------------------------------------------------------------------
# family identities
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("mode,n,m,t", [
    ("worst", 3, 2, 0), ("worst", 4, 2, 1), ("worst", 5, 2, 2), ("worst", 6, 2, 3),
    ("random", 2, 2, 0), ("random", 2, 4, 1), ("random", 3, 2, 1), ("random", 3, 4, 2),
])
def test_family_resolves_identity_and_splits(mode, n, m, t):
    fam = projector_family(mode, n, m, t)
    eye = sp.identity(fam.dim_fr, dtype=complex)
    assert abs(fam.classical + fam.quantum + fam.idle - eye).max() < 1e-12
    lifted = sp.kron(fam.quantum, sp.identity(n, dtype=complex))
    assert abs(fam.active + fam.passive - lifted).max() < 1e-12
    for proj in (fam.classical, fam.quantum, fam.idle, fam.active, fam.passive):
        assert abs(proj - proj.conj().T).max() < 1e-12          # Hermitian
        assert abs(proj @ proj - proj).max() < 1e-12            # idempotent
    assert abs(fam.classical @ fam.quantum).max() < 1e-12       # orthogonal
    assert abs(fam.classical @ fam.idle).max() < 1e-12
    assert abs(fam.quantum @ fam.idle).max() < 1e-12
    assert abs(fam.active @ fam.passive).max() < 1e-12


def test_progress_scalar_per_mode():
    assert projector_family("worst", 3, 2, 0).progress_scalar == 3.0
    assert projector_family("random", 2, 2, 0).progress_scalar == 4.0


def test_truth_dim_and_mode_validation():
    assert truth_dim("worst", 5, 2) == 5
    assert truth_dim("random", 3, 4) == 64
    with pytest.raises(ValueError):
        truth_dim("typical", 3, 2)
    with pytest.raises(ValueError):
        projector_family("typical", 3, 2, 0)


def test_success_projector_is_diagonal_projector():
    for mode, n, m in (("worst", 4, 2), ("random", 2, 4)):
        s = success_projector(mode, n, m, 1)
        assert abs(s @ s - s).max() < 1e-14
        assert abs(s - s.conj().T).max() < 1e-14
        off_diag = s - sp.diags(s.diagonal())
        assert abs(off_diag).max() if off_diag.nnz else 0.0 < 1e-14


def test_classical_projector_diagonal_in_worst_mode():
    n, m, t = 4, 2, 2
    fam = projector_family("worst", n, m, t)
    sets = record_input_sets(n, t)
    dense = fam.classical.toarray().reshape(n, len(sets), n, len(sets))
    for r_idx, rec in enumerate(sets):
        for z in range(n):
            expected = 1.0 if z in rec else 0.0
            assert dense[z, r_idx, z, r_idx] == expected
