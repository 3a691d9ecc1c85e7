"""Progress-defining projectors on the truth and record registers.

The joint space of the truth register F and the record register R splits
into three orthogonal parts, built per record string R:

* classical: some recorded input is marked for the truth-table value,
* idle: the truth register still looks like the uniform superposition over
  the not-yet-recorded candidates (no usable progress),
* quantum: the rest, where a coherent query has singled the marked input
  out without it entering the record.

The quantum part, extended by the query-input register Qi, further splits
into an active part (reachable from idle by one clean call, and the part
the noise can touch) and a passive part (invariant storage).

Two modes:

* ``worst``: F has one basis state per single-marked-input function
  (dimension n).
* ``random``: F is a product of n output registers of dimension m, one per
  input; an input is marked when its output equals 0.

Projectors act on F ⊗ R (or F ⊗ R ⊗ Qi for the active/passive split) with
index order (F, R, Qi), and are materialized sparse; they are never lifted
to the full state space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache, reduce

import numpy as np
import scipy.sparse as sp

from .records import record_count, record_input_sets

__all__ = [
    "ProjectorFamily",
    "projector_family",
    "success_projector",
    "truth_dim",
    "function_outputs",
    "complement_superposition",
    "marked_direction",
    "output_marked_direction",
    "MODES",
]

MODES = ("worst", "random")


def truth_dim(mode: str, n: int, m: int) -> int:
    if mode == "worst":
        return n
    if mode == "random":
        return m ** n
    raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")


def function_outputs(mode: str, n: int, m: int) -> np.ndarray:
    """Table out[f, x] = value of the function with truth index f at input x.

    Worst mode: index z encodes the function marking exactly input z (m=2).
    Random mode: index digits in base m, input 0 most significant.
    """
    if mode == "worst":
        return np.eye(n, dtype=np.int64)
    if mode == "random":
        df = m ** n
        out = np.empty((df, n), dtype=np.int64)
        idx = np.arange(df)
        for x in range(n - 1, -1, -1):
            out[:, x] = idx % m
            idx //= m
        return out
    raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")


# ---------------------------------------------------------------------------
# Defining vectors
# ---------------------------------------------------------------------------

def complement_superposition(n: int, recorded: frozenset[int]) -> np.ndarray:
    """Uniform superposition over the functions whose mark avoids the record.

    Zero vector when every input is recorded.
    """
    v = np.zeros(n, dtype=np.complex128)
    rest = [x for x in range(n) if x not in recorded]
    if rest:
        v[rest] = 1.0 / math.sqrt(len(rest))
    return v


def marked_direction(n: int, recorded: frozenset[int], x: int) -> np.ndarray:
    """Unit vector toward |f_x> orthogonal to the complement superposition.

    Defined for x outside the record when at least two candidates remain:
    sqrt(nr/(nr-1)) |f_x> minus the complement superposition, renormalized.
    """
    if x in recorded:
        raise ValueError(f"input {x} already appears in the record")
    nr = n - len(recorded)
    if nr < 2:
        raise ValueError("needs at least two unrecorded candidates")
    v = -complement_superposition(n, recorded) / math.sqrt(nr - 1)
    v[x] += math.sqrt(nr) / math.sqrt(nr - 1)
    return v


def output_marked_direction(m: int) -> np.ndarray:
    """Unit vector toward the marked output 0, orthogonal to uniform (dim m)."""
    v = np.full(m, -1.0 / math.sqrt(m * (m - 1)), dtype=np.complex128)
    v[0] = math.sqrt((m - 1.0) / m)
    return v


# ---------------------------------------------------------------------------
# Sparse assembly helpers
# ---------------------------------------------------------------------------

class _CooBuilder:
    def __init__(self, dim: int):
        self.dim = dim
        self.rows: list[np.ndarray] = []
        self.cols: list[np.ndarray] = []
        self.data: list[np.ndarray] = []

    def add_block(self, base: np.ndarray, block: np.ndarray) -> None:
        """Place a dense block on the global basis indices ``base``."""
        r, c = np.nonzero(block)
        if r.size == 0:
            return
        self.rows.append(base[r])
        self.cols.append(base[c])
        self.data.append(np.ascontiguousarray(block[r, c], dtype=np.complex128))

    def add_diagonal(self, idx: np.ndarray) -> None:
        if idx.size == 0:
            return
        self.rows.append(idx)
        self.cols.append(idx)
        self.data.append(np.ones(idx.size, dtype=np.complex128))

    def build(self) -> sp.csr_matrix:
        if not self.rows:
            return sp.csr_matrix((self.dim, self.dim), dtype=np.complex128)
        rows = np.concatenate(self.rows)
        cols = np.concatenate(self.cols)
        data = np.concatenate(self.data)
        mat = sp.coo_matrix((data, (rows, cols)), shape=(self.dim, self.dim))
        return mat.tocsr()


@dataclass(frozen=True)
class ProjectorFamily:
    """All progress projectors for one (mode, n, m, t)."""

    mode: str
    n: int
    m: int
    t: int
    dim_f: int
    dim_r: int
    classical: sp.csr_matrix  # on F ⊗ R
    quantum: sp.csr_matrix    # on F ⊗ R
    idle: sp.csr_matrix       # on F ⊗ R
    active: sp.csr_matrix     # on F ⊗ R ⊗ Qi
    passive: sp.csr_matrix    # on F ⊗ R ⊗ Qi

    @property
    def dim_fr(self) -> int:
        return self.dim_f * self.dim_r

    @property
    def dim_frq(self) -> int:
        return self.dim_f * self.dim_r * self.n

    @property
    def progress_scalar(self) -> float:
        """Weight of the quantum overlap in the progress measure."""
        return 3.0 if self.mode == "worst" else 4.0


def _complement_diag(n: int, recorded) -> np.ndarray:
    d = np.ones(n, dtype=np.complex128)
    for x in recorded:
        d[x] = 0.0
    return np.diag(d)


def _fr_base(df: int, rdim: int, r_idx: int) -> np.ndarray:
    return np.arange(df) * rdim + r_idx


def _frq_base(df: int, rdim: int, n: int, r_idx: int, x: int) -> np.ndarray:
    return (np.arange(df) * rdim + r_idx) * n + x


@lru_cache(maxsize=None)
def projector_family(mode: str, n: int, m: int, t: int) -> ProjectorFamily:
    if mode == "worst":
        return _worst_family(n, m, t)
    if mode == "random":
        return _random_family(n, m, t)
    raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")


def _worst_family(n: int, m: int, t: int) -> ProjectorFamily:
    df = n
    rdim = record_count(n, t)
    sets = record_input_sets(n, t)

    classical = _CooBuilder(df * rdim)
    quantum = _CooBuilder(df * rdim)
    idle = _CooBuilder(df * rdim)
    active = _CooBuilder(df * rdim * n)
    passive = _CooBuilder(df * rdim * n)

    for r_idx, rec in enumerate(sets):
        base = _fr_base(df, rdim, r_idx)
        in_rec = sorted(rec)
        classical.add_diagonal(base[in_rec])

        psi = complement_superposition(n, rec)
        idle_block = np.outer(psi, psi.conj())
        idle.add_block(base, idle_block)

        q_block = _complement_diag(n, rec) - idle_block
        quantum.add_block(base, q_block)

        nr = n - len(rec)
        for x in range(n):
            if x not in rec and nr >= 2:
                fx = marked_direction(n, rec, x)
                active.add_block(_frq_base(df, rdim, n, r_idx, x), np.outer(fx, fx.conj()))
            grown = rec | {x}
            psi2 = complement_superposition(n, grown)
            pas_block = _complement_diag(n, grown) - np.outer(psi2, psi2.conj())
            passive.add_block(_frq_base(df, rdim, n, r_idx, x), pas_block)

    return ProjectorFamily("worst", n, m, t, df, rdim,
                           classical.build(), quantum.build(), idle.build(),
                           active.build(), passive.build())


def _kron_chain(mats) -> np.ndarray:
    return reduce(np.kron, mats)


def _random_family(n: int, m: int, t: int) -> ProjectorFamily:
    df = m ** n
    rdim = record_count(n, t)
    sets = record_input_sets(n, t)

    eye = np.eye(m, dtype=np.complex128)
    hit = np.zeros((m, m), dtype=np.complex128)
    hit[0, 0] = 1.0  # projector on the marked output value 0
    miss = eye - hit
    tilde = output_marked_direction(m)
    tilde_proj = np.outer(tilde, tilde.conj())
    no_tilde = eye - tilde_proj

    classical = _CooBuilder(df * rdim)
    quantum = _CooBuilder(df * rdim)
    idle = _CooBuilder(df * rdim)
    active = _CooBuilder(df * rdim * n)
    passive = _CooBuilder(df * rdim * n)

    for r_idx, rec in enumerate(sets):
        base = _fr_base(df, rdim, r_idx)
        miss_on_rec = _kron_chain([miss if x in rec else eye for x in range(n)])
        idle_block = _kron_chain([miss if x in rec else no_tilde for x in range(n)])
        c_block = np.eye(df, dtype=np.complex128) - miss_on_rec
        q_block = miss_on_rec - idle_block

        classical.add_block(base, c_block)
        quantum.add_block(base, q_block)
        idle.add_block(base, idle_block)

        for x in range(n):
            qbase = _frq_base(df, rdim, n, r_idx, x)
            if x not in rec:
                act_block = _kron_chain([
                    miss if x2 in rec else (tilde_proj if x2 == x else no_tilde)
                    for x2 in range(n)
                ])
                active.add_block(qbase, act_block)
                passive.add_block(qbase, q_block - act_block)
            else:
                passive.add_block(qbase, q_block)

    return ProjectorFamily("random", n, m, t, df, rdim,
                           classical.build(), quantum.build(), idle.build(),
                           active.build(), passive.build())


@lru_cache(maxsize=None)
def success_projector(mode: str, n: int, m: int, t: int) -> sp.csr_matrix:
    """Projector on success (marked truth value at the answer) on F ⊗ R ⊗ Qi."""
    df = truth_dim(mode, n, m)
    rdim = record_count(n, t)
    outs = function_outputs(mode, n, m)
    rows = []
    for x in range(n):
        marked = np.where(outs[:, x] == (1 if mode == "worst" else 0))[0]
        for r_idx in range(rdim):
            rows.append((marked * rdim + r_idx) * n + x)
    idx = np.concatenate(rows)
    dim = df * rdim * n
    return sp.coo_matrix(
        (np.ones(idx.size, dtype=np.complex128), (idx, idx)), shape=(dim, dim)
    ).tocsr()
