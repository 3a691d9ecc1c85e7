"""Oracle calls for functions f:[n] -> [m], noiseless and noisy.

The query register Q = Qi ⊗ Qo holds an input index (dimension n) and an
output word (dimension m, a power of two).  The standard oracle XORs f(x)
into Qo; the phase oracle kicks a sign (-1)^{f(x)·y}.  Noise acts per call:
depolarizing replaces the whole Q state with the maximally mixed state with
probability p, dephasing collapses Qi to the computational basis with
probability p (Qo untouched).  An error-signaling call additionally appends
a flag qubit to the workspace: 0 = clean call, 1 = error occurred.

Oracles are basis permutations, so they are applied by index remapping
rather than dense matrix multiplication.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .qcore import Channel, DensityState, PureState, RegisterLayout, apply_channel, basis_vec

__all__ = [
    "TruthTable",
    "NoiseSpec",
    "standard_oracle_perm",
    "standard_oracle_unitary",
    "phase_oracle_unitary",
    "apply_index_map",
    "noise_channel",
    "signaling_noise_channel",
    "flag_conditioned_depolarizer",
    "oracle_channel",
    "concealing_call_channel",
    "signaling_call_channel",
    "noisy_oracle_call",
    "signaling_noisy_oracle_call",
    "HADAMARD",
]

HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=np.complex128) / math.sqrt(2.0)

NOISE_KINDS = ("depolarizing", "dephasing", "none")


# ---------------------------------------------------------------------------
# Truth tables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TruthTable:
    """A function f:[n] -> [m] as an explicit output table (m a power of two)."""

    n: int
    m: int
    outputs: tuple[int, ...]

    def __post_init__(self):
        if self.m < 2 or (self.m & (self.m - 1)) != 0:
            raise ValueError(f"range size m={self.m} must be a power of two >= 2")
        if len(self.outputs) != self.n:
            raise ValueError(f"output table has length {len(self.outputs)}, expected n={self.n}")
        if any(not (0 <= v < self.m) for v in self.outputs):
            raise ValueError("output values must lie in [0, m)")

    @classmethod
    def from_outputs(cls, outputs: Sequence[int], m: int) -> "TruthTable":
        return cls(len(outputs), int(m), tuple(int(v) for v in outputs))

    @classmethod
    def unique_marked(cls, n: int, x: int) -> "TruthTable":
        """f_x: the binary function whose only marked input is x."""
        if not (0 <= x < n):
            raise ValueError(f"marked input {x} outside [0, {n})")
        return cls(n, 2, tuple(1 if i == x else 0 for i in range(n)))

    @classmethod
    def uniform_random(cls, n: int, m: int, seed) -> "TruthTable":
        rng = np.random.default_rng(seed)
        return cls(n, m, tuple(int(v) for v in rng.integers(0, m, size=n)))

    @property
    def marked_value(self) -> int:
        """The output value counted as 'marked': 1 for binary f, else 0."""
        return 1 if self.m == 2 else 0

    def marked_inputs(self) -> tuple[int, ...]:
        mv = self.marked_value
        return tuple(x for x, v in enumerate(self.outputs) if v == mv)

    def out_array(self) -> np.ndarray:
        return np.asarray(self.outputs, dtype=np.int64)

    # line-based text format: header "n m", then one output per line
    def to_text(self) -> str:
        lines = [f"{self.n} {self.m}"] + [str(v) for v in self.outputs]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "TruthTable":
        tokens = text.split()
        if len(tokens) < 2:
            raise ValueError("truth table text needs a 'n m' header")
        n, m = int(tokens[0]), int(tokens[1])
        if len(tokens) != 2 + n:
            raise ValueError(f"expected {n} output values, found {len(tokens) - 2}")
        return cls(n, m, tuple(int(v) for v in tokens[2:]))


@dataclass(frozen=True)
class NoiseSpec:
    """Oracle noise: kind, rate p, and whether errors are signaled."""

    kind: str
    p: float = 0.0
    signaling: bool = False

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"noise kind {self.kind!r} not in {NOISE_KINDS}")
        if not (0.0 <= self.p <= 1.0):
            raise ValueError(f"noise rate p={self.p} outside [0, 1]")

    @property
    def effective_p(self) -> float:
        return 0.0 if self.kind == "none" else float(self.p)


# ---------------------------------------------------------------------------
# Noiseless oracle unitaries
# ---------------------------------------------------------------------------

def standard_oracle_perm(table: TruthTable) -> np.ndarray:
    """Index map of the standard oracle on Q = Qi ⊗ Qo: (x, y) -> (x, y XOR f(x)).

    Returned as an involutive permutation ``img`` with image index
    ``img[x*m + y] = x*m + (y ^ f(x))``.
    """
    n, m = table.n, table.m
    x = np.repeat(np.arange(n), m)
    y = np.tile(np.arange(m), n)
    return x * m + np.bitwise_xor(y, table.out_array()[x])


def standard_oracle_unitary(table: TruthTable) -> np.ndarray:
    """Dense permutation matrix of the standard oracle (dimension n*m)."""
    img = standard_oracle_perm(table)
    d = img.size
    u = np.zeros((d, d), dtype=np.complex128)
    u[img, np.arange(d)] = 1.0
    return u


def phase_oracle_unitary(table: TruthTable) -> np.ndarray:
    """Diagonal unitary with entries (-1)^{f(x)·y} (bitwise inner product)."""
    n, m = table.n, table.m
    x = np.repeat(np.arange(n), m)
    y = np.tile(np.arange(m), n)
    anded = np.bitwise_and(table.out_array()[x], y)
    parity = np.zeros_like(anded)
    v = anded.copy()
    while v.any():
        parity ^= v & 1
        v >>= 1
    return np.diag(np.where(parity == 1, -1.0, 1.0).astype(np.complex128))


def apply_index_map(state, img: np.ndarray, targets: Sequence[str] = ("Qi", "Qo")):
    """Apply a basis permutation ``j -> img[j]`` on the named registers.

    Fast path for permutation oracles: O(d) index scatter instead of a dense
    multiply.  Works for pure and density states.
    """
    layout = state.layout
    axes = [layout.axis(t) for t in targets]
    d = math.prod(layout.dims[a] for a in axes)
    if img.size != d:
        raise ValueError(f"index map of size {img.size} does not match registers {tuple(targets)}")
    k = len(axes)

    if isinstance(state, PureState):
        t = np.moveaxis(state.tensor(), axes, range(k))
        shape = t.shape
        mat = t.reshape(d, -1)
        out = np.empty_like(mat)
        out[img] = mat
        out = np.moveaxis(out.reshape(shape), range(k), axes)
        return PureState(layout, out.ravel(), normalized=state.normalized)
    if isinstance(state, DensityState):
        nreg = len(layout.dims)
        t = state.mat.reshape(layout.dims + layout.dims)
        moved = np.moveaxis(t, axes + [a + nreg for a in axes], range(2 * k))
        shape = moved.shape
        mat = moved.reshape(d, d, -1)
        out = np.empty_like(mat)
        out[np.ix_(img, img)] = mat
        out = np.moveaxis(out.reshape(shape), range(2 * k), axes + [a + nreg for a in axes])
        dd = layout.total_dim
        return DensityState(layout, out.reshape(dd, dd), normalized=state.normalized)
    raise TypeError(f"expected PureState or DensityState, got {type(state).__name__}")


# ---------------------------------------------------------------------------
# Noise channels
# ---------------------------------------------------------------------------

def _depolarize_kraus(d: int) -> list[np.ndarray]:
    """Complete depolarization to I/d: Kraus set {|i><j| / sqrt(d)}."""
    ops = []
    for i in range(d):
        for j in range(d):
            k = np.zeros((d, d), dtype=np.complex128)
            k[i, j] = 1.0 / math.sqrt(d)
            ops.append(k)
    return ops


def _dephase_qi_kraus(n: int, m: int) -> list[np.ndarray]:
    """Complete dephasing of Qi only: Kraus set {|x><x| ⊗ I_m}."""
    ops = []
    eye_m = np.eye(m, dtype=np.complex128)
    for x in range(n):
        k = np.zeros((n, n), dtype=np.complex128)
        k[x, x] = 1.0
        ops.append(np.kron(k, eye_m))
    return ops


def full_error_channel(kind: str, n: int, m: int) -> Channel:
    """The probability-one error event on Q for the given noise kind."""
    if kind == "depolarizing":
        return Channel.from_kraus(_depolarize_kraus(n * m))
    if kind == "dephasing":
        return Channel.from_kraus(_dephase_qi_kraus(n, m))
    if kind == "none":
        return Channel.identity(n * m)
    raise ValueError(f"unknown noise kind {kind!r}")


def noise_channel(spec: NoiseSpec, n: int, m: int) -> Channel:
    """Error-concealing noise on Q: (1-p)·identity + p·(full error)."""
    if spec.signaling:
        raise ValueError("noise_channel builds the concealing map; use signaling_noise_channel")
    p = spec.effective_p
    return Channel.from_mixture([
        (1.0 - p, Channel.identity(n * m)),
        (p, full_error_channel(spec.kind, n, m)),
    ])


def signaling_noise_channel(spec: NoiseSpec, n: int, m: int) -> Channel:
    """Error-signaling noise: Q -> Q ⊗ flag with flag 0 = clean, 1 = error."""
    d = n * m
    p = spec.effective_p
    e0 = basis_vec(2, 0).reshape(2, 1)
    e1 = basis_vec(2, 1).reshape(2, 1)
    clean = [math.sqrt(1.0 - p) * np.kron(k, e0) for k in Channel.identity(d).flat_kraus()]
    err = [math.sqrt(p) * np.kron(k, e1)
           for k in full_error_channel(spec.kind, n, m).flat_kraus()]
    ops = [k for k in clean if p < 1.0] + [k for k in err if p > 0.0]
    return Channel(d, 2 * d, kraus=tuple(ops))  # completeness holds by construction


def flag_conditioned_depolarizer(n: int, m: int) -> Channel:
    """Measure the flag qubit; on flag 1, completely depolarize Q."""
    d = n * m
    p0 = np.diag(basis_vec(2, 0))
    p1 = np.diag(basis_vec(2, 1))
    eye = np.eye(d, dtype=np.complex128)
    ops = [np.kron(eye, p0)]
    ops += [np.kron(k, p1) for k in _depolarize_kraus(d)]
    return Channel.from_kraus(ops)


def oracle_channel(table: TruthTable) -> Channel:
    return Channel.from_kraus([standard_oracle_unitary(table)])


def concealing_call_channel(table: TruthTable, spec: NoiseSpec) -> Channel:
    """The noisy call N_p ∘ O_f as a channel on Q (for Choi comparisons)."""
    return oracle_channel(table).then(noise_channel(spec, table.n, table.m))


def signaling_call_channel(table: TruthTable, spec: NoiseSpec) -> Channel:
    """The signaling noisy call N_p^+ ∘ O_f as a channel Q -> Q ⊗ flag."""
    return oracle_channel(table).then(signaling_noise_channel(spec, table.n, table.m))


# ---------------------------------------------------------------------------
# Noisy oracle calls on states
# ---------------------------------------------------------------------------

def noisy_oracle_call(rho: DensityState, table: TruthTable, spec: NoiseSpec) -> DensityState:
    """Error-concealing noisy call on registers Qi, Qo of a density state."""
    if spec.signaling:
        raise ValueError("spec is signaling; use signaling_noisy_oracle_call")
    _check_query_dims(rho.layout, table)
    out = apply_index_map(rho, standard_oracle_perm(table), ("Qi", "Qo"))
    if spec.effective_p > 0.0:
        out = apply_channel(out, noise_channel(spec, table.n, table.m), ("Qi", "Qo"))
    return out


def signaling_noisy_oracle_call(rho: DensityState, table: TruthTable, spec: NoiseSpec,
                                workspace: str = "W") -> DensityState:
    """Error-signaling noisy call; appends a flag qubit to the workspace.

    The flag becomes the fastest-varying qubit of the named workspace
    register, i.e. the workspace dimension doubles in place.
    """
    if not spec.signaling:
        raise ValueError("spec is not signaling; use noisy_oracle_call")
    _check_query_dims(rho.layout, table)
    p = spec.effective_p
    layout = rho.layout
    w = layout.dim(workspace)

    faultless = apply_index_map(rho, standard_oracle_perm(table), ("Qi", "Qo"))
    flag0 = np.kron(np.eye(w, dtype=np.complex128), basis_vec(2, 0).reshape(2, 1))
    flag1 = np.kron(np.eye(w, dtype=np.complex128), basis_vec(2, 1).reshape(2, 1))

    from .qcore import embed_and_apply  # local import avoids a cycle in type hints

    acc = None
    new_layout = None
    if p < 1.0:
        ok = embed_and_apply(faultless, flag0, (workspace,))
        acc = (1.0 - p) * ok.mat
        new_layout = ok.layout
    if p > 0.0:
        errored = apply_channel(faultless, full_error_channel(spec.kind, table.n, table.m),
                                ("Qi", "Qo"))
        err = embed_and_apply(errored, flag1, (workspace,))
        acc = p * err.mat if acc is None else acc + p * err.mat
        new_layout = err.layout
    return DensityState(new_layout, acc, normalized=rho.normalized)


def _check_query_dims(layout: RegisterLayout, table: TruthTable) -> None:
    if layout.dim("Qi") != table.n or layout.dim("Qo") != table.m:
        raise ValueError(
            f"state query registers (Qi={layout.dim('Qi')}, Qo={layout.dim('Qo')}) "
            f"do not match the oracle (n={table.n}, m={table.m})"
        )
