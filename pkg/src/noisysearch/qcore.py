"""Dense complex linear algebra over named multi-register quantum systems.

Pure states, density operators, unitaries/isometries, channels, partial
traces, measurements, and operator norms for Hilbert spaces that are tensor
products of named registers.  Basis indices flatten row-major in layout
order: the first register is the most significant "digit".

Everything here is plain ``complex128`` NumPy, applied densely.  Structured
fast paths (oracle permutations, record bookkeeping) live in the modules
that know the structure.  States and operators are value-like: functions
return new objects and never mutate inputs, so read-only sharing across
parallel workers is safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

__all__ = [
    "RegisterLayout",
    "PureState",
    "DensityState",
    "Channel",
    "embed_and_apply",
    "apply_channel",
    "partial_trace",
    "measure_register",
    "operator_norm",
    "assert_unitary",
    "basis_vec",
    "random_unitary",
    "random_statevec",
    "as_generator",
]

NORM_ATOL = 1e-10
TRACE_ATOL = 1e-10
HERM_ATOL = 1e-10
KRAUS_ATOL = 1e-10
WEIGHT_ATOL = 1e-12
UNITARY_ATOL = 1e-10


def as_generator(seed) -> np.random.Generator:
    """Accept an int seed, a SeedSequence, a Generator, or None."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def basis_vec(dim: int, index: int) -> np.ndarray:
    v = np.zeros(dim, dtype=np.complex128)
    v[index] = 1.0
    return v


def random_statevec(dim: int, rng) -> np.ndarray:
    rng = as_generator(rng)
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_unitary(dim: int, rng) -> np.ndarray:
    """Haar-random unitary: QR of a complex Gaussian matrix, phases fixed."""
    rng = as_generator(rng)
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def assert_unitary(u: np.ndarray, atol: float = UNITARY_ATOL, what: str = "operator") -> None:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValueError(f"{what} is not square: shape {u.shape}")
    err = np.abs(u.conj().T @ u - np.eye(u.shape[1])).max()
    if err > atol:
        raise ValueError(f"{what} is not unitary: max |U†U - I| = {err:.3e}")


# ---------------------------------------------------------------------------
# Register layouts and states
# ---------------------------------------------------------------------------

class RegisterLayout:
    """An ordered list of (name, dimension) registers.

    The total dimension is the product of the register dimensions, and a
    multi-register basis label flattens row-major in layout order.
    """

    __slots__ = ("registers", "_axis")

    def __init__(self, registers: Iterable[tuple[str, int]]):
        regs = tuple((str(name), int(dim)) for name, dim in registers)
        names = [name for name, _ in regs]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate register names in layout: {names}")
        for name, dim in regs:
            if dim < 1:
                raise ValueError(f"register {name!r} has dimension {dim} < 1")
        object.__setattr__(self, "registers", regs)
        object.__setattr__(self, "_axis", {name: i for i, (name, _) in enumerate(regs)})

    def __setattr__(self, *a):  # value-like: immutable
        raise AttributeError("RegisterLayout is immutable")

    def __eq__(self, other):
        return isinstance(other, RegisterLayout) and self.registers == other.registers

    def __hash__(self):
        return hash(self.registers)

    def __repr__(self):
        inner = ", ".join(f"{n}:{d}" for n, d in self.registers)
        return f"RegisterLayout({inner})"

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.registers)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(d for _, d in self.registers)

    @property
    def total_dim(self) -> int:
        return int(math.prod(self.dims)) if self.registers else 1

    def axis(self, name: str) -> int:
        try:
            return self._axis[name]
        except KeyError:
            raise KeyError(f"unknown register {name!r}; layout has {self.names}") from None

    def dim(self, name: str) -> int:
        return self.registers[self.axis(name)][1]

    def with_dim(self, name: str, new_dim: int) -> "RegisterLayout":
        i = self.axis(name)
        regs = list(self.registers)
        regs[i] = (name, int(new_dim))
        return RegisterLayout(regs)

    def without(self, names: Sequence[str]) -> "RegisterLayout":
        drop = set(names)
        for n in drop:
            self.axis(n)
        return RegisterLayout([(n, d) for n, d in self.registers if n not in drop])

    def appended(self, name: str, dim: int) -> "RegisterLayout":
        return RegisterLayout(list(self.registers) + [(name, dim)])


class PureState:
    """A complex amplitude vector over a register layout.

    Unit norm is enforced at construction unless ``normalized=False`` marks
    the state as a deliberately sub-normalized projection.
    """

    __slots__ = ("layout", "vec", "normalized")

    def __init__(self, layout: RegisterLayout, vec: np.ndarray, normalized: bool = True):
        vec = np.asarray(vec, dtype=np.complex128).ravel()
        if vec.size != layout.total_dim:
            raise ValueError(
                f"amplitude vector has length {vec.size}, layout dimension is {layout.total_dim}"
            )
        if normalized:
            nrm = np.linalg.norm(vec)
            if abs(nrm - 1.0) > NORM_ATOL:
                raise ValueError(f"state norm {nrm!r} differs from 1 beyond {NORM_ATOL}")
        self.layout = layout
        self.vec = vec
        self.normalized = bool(normalized)

    def tensor(self) -> np.ndarray:
        return self.vec.reshape(self.layout.dims)

    def norm(self) -> float:
        return float(np.linalg.norm(self.vec))

    def to_density(self) -> "DensityState":
        return DensityState(self.layout, np.outer(self.vec, self.vec.conj()),
                            normalized=self.normalized)


class DensityState:
    """A density operator over a register layout.

    Hermiticity and (unless flagged) unit trace are checked at construction;
    the O(d^3) positivity check is available via :meth:`validate_psd`.
    """

    __slots__ = ("layout", "mat", "normalized")

    def __init__(self, layout: RegisterLayout, mat: np.ndarray, normalized: bool = True):
        mat = np.asarray(mat, dtype=np.complex128)
        d = layout.total_dim
        if mat.shape != (d, d):
            raise ValueError(f"density matrix shape {mat.shape} does not match layout dimension {d}")
        herm = np.abs(mat - mat.conj().T).max() if d else 0.0
        if herm > HERM_ATOL:
            raise ValueError(f"matrix is not Hermitian: max |rho - rho†| = {herm:.3e}")
        if normalized:
            tr = mat.trace()
            if abs(tr - 1.0) > TRACE_ATOL:
                raise ValueError(f"trace {tr!r} differs from 1 beyond {TRACE_ATOL}")
        self.layout = layout
        self.mat = mat
        self.normalized = bool(normalized)

    def trace(self) -> float:
        return float(self.mat.trace().real)

    def validate_psd(self, atol: float = 1e-10) -> None:
        w = np.linalg.eigvalsh(self.mat)
        if w.min() < -atol:
            raise ValueError(f"density operator has eigenvalue {w.min():.3e} < -{atol}")


# ---------------------------------------------------------------------------
# Applying operators
# ---------------------------------------------------------------------------

def _apply_to_tensor(tensor: np.ndarray, op: np.ndarray, axes: Sequence[int],
                     new_axis_dims: Sequence[int]) -> np.ndarray:
    """Contract ``op`` over the given tensor axes (in op's row-major order)."""
    k = len(axes)
    moved = np.moveaxis(tensor, axes, range(k))
    rest = moved.shape[k:]
    mat = moved.reshape(op.shape[1], -1)
    out = (op @ mat).reshape(*new_axis_dims, *rest)
    return np.moveaxis(out, range(k), axes)


def _resolve_targets(layout: RegisterLayout, op: np.ndarray, targets: Sequence[str]):
    axes = [layout.axis(t) for t in targets]
    d_in = math.prod(layout.dims[a] for a in axes)
    if op.ndim != 2 or op.shape[1] != d_in:
        raise ValueError(
            f"operator shape {op.shape} does not act on registers {tuple(targets)} "
            f"of joint dimension {d_in}"
        )
    if op.shape[0] == op.shape[1]:
        new_layout = layout
        new_axis_dims = [layout.dims[a] for a in axes]
    else:
        if len(targets) != 1:
            raise ValueError("an isometry that changes dimension must target a single register")
        new_layout = layout.with_dim(targets[0], op.shape[0])
        new_axis_dims = [op.shape[0]]
    return axes, new_layout, new_axis_dims


def embed_and_apply(state, op, targets: Sequence[str]):
    """Apply ``op`` on the named target registers, identity elsewhere.

    ``op`` acts on the targets in the order given (row-major).  A rectangular
    isometry grows its single target register in place; all other registers
    and the layout order are untouched.  Returns a new state of the same kind.
    """
    op = np.asarray(op, dtype=np.complex128)
    layout = state.layout
    axes, new_layout, new_axis_dims = _resolve_targets(layout, op, targets)

    if isinstance(state, PureState):
        out = _apply_to_tensor(state.tensor(), op, axes, new_axis_dims).ravel()
        ok = abs(np.linalg.norm(out) - 1.0) <= NORM_ATOL
        return PureState(new_layout, out, normalized=ok)
    if isinstance(state, DensityState):
        nreg = len(layout.dims)
        t = state.mat.reshape(layout.dims + layout.dims)
        t = _apply_to_tensor(t, op, axes, new_axis_dims)
        t = _apply_to_tensor(t, op.conj(), [a + nreg for a in axes], new_axis_dims)
        d = new_layout.total_dim
        return DensityState(new_layout, t.reshape(d, d), normalized=state.normalized)
    raise TypeError(f"expected PureState or DensityState, got {type(state).__name__}")


# ---------------------------------------------------------------------------
# Channels
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Channel:
    """A CPTP map, represented by Kraus operators or a mixture of channels.

    Kraus form: ``rho -> sum_K K rho K†`` with completeness ``sum K†K = I``.
    Mixture form: nonnegative weights summing to one over sub-channels of
    identical input/output dimensions.  Input and output dimensions may
    differ (register-adding maps).
    """

    dim_in: int
    dim_out: int
    kraus: tuple[np.ndarray, ...] | None = None
    mixture: tuple[tuple[float, "Channel"], ...] | None = None

    @classmethod
    def from_kraus(cls, ops: Iterable[np.ndarray]) -> "Channel":
        ops = tuple(np.asarray(k, dtype=np.complex128) for k in ops)
        if not ops:
            raise ValueError("a Kraus channel needs at least one operator")
        d_out, d_in = ops[0].shape
        for k in ops:
            if k.shape != (d_out, d_in):
                raise ValueError("all Kraus operators must share one shape")
        total = sum(k.conj().T @ k for k in ops)
        err = np.abs(total - np.eye(d_in)).max()
        if err > KRAUS_ATOL:
            raise ValueError(f"Kraus completeness violated: max |ΣK†K - I| = {err:.3e}")
        return cls(d_in, d_out, kraus=ops)

    @classmethod
    def from_mixture(cls, pairs: Iterable[tuple[float, "Channel"]]) -> "Channel":
        pairs = tuple((float(w), ch) for w, ch in pairs)
        if not pairs:
            raise ValueError("a mixture channel needs at least one branch")
        d_in, d_out = pairs[0][1].dim_in, pairs[0][1].dim_out
        for w, ch in pairs:
            if w < -WEIGHT_ATOL:
                raise ValueError(f"negative mixture weight {w}")
            if (ch.dim_in, ch.dim_out) != (d_in, d_out):
                raise ValueError("mixture branches must share input/output dimensions")
        s = sum(w for w, _ in pairs)
        if abs(s - 1.0) > WEIGHT_ATOL:
            raise ValueError(f"mixture weights sum to {s!r}, not 1")
        return cls(d_in, d_out, mixture=pairs)

    @classmethod
    def identity(cls, dim: int) -> "Channel":
        return cls.from_kraus([np.eye(dim, dtype=np.complex128)])

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """Act on a raw dim_in x dim_in matrix."""
        rho = np.asarray(rho, dtype=np.complex128)
        if self.mixture is not None:
            out = np.zeros((self.dim_out, self.dim_out), dtype=np.complex128)
            for w, ch in self.mixture:
                if w != 0.0:
                    out += w * ch.apply(rho)
            return out
        out = np.zeros((self.dim_out, self.dim_out), dtype=np.complex128)
        for k in self.kraus:
            out += k @ rho @ k.conj().T
        return out

    def flat_kraus(self) -> list[np.ndarray]:
        """Kraus operators of the channel with mixtures folded in."""
        if self.kraus is not None:
            return list(self.kraus)
        ops: list[np.ndarray] = []
        for w, ch in self.mixture:
            if w == 0.0:
                continue
            ops.extend(math.sqrt(w) * k for k in ch.flat_kraus())
        return ops

    def then(self, other: "Channel") -> "Channel":
        """Composition: ``other`` after ``self``."""
        if other.dim_in != self.dim_out:
            raise ValueError("composition dimension mismatch")
        ops = [k2 @ k1 for k2 in other.flat_kraus() for k1 in self.flat_kraus()]
        return Channel.from_kraus(ops)

    def choi(self) -> np.ndarray:
        """Choi matrix ``sum_ij E(|i><j|) ⊗ |i><j|`` (output ⊗ input order)."""
        d = self.dim_in * self.dim_out
        c = np.zeros((d, d), dtype=np.complex128)
        for k in self.flat_kraus():
            v = k.reshape(-1)
            c += np.outer(v, v.conj())
        return c


def apply_channel(state: DensityState, ch: Channel, targets: Sequence[str]) -> DensityState:
    """Apply a channel to the named registers of a density state.

    Rectangular (register-growing) channels must target a single register,
    which grows in place to the channel's output dimension.
    """
    if not isinstance(state, DensityState):
        raise TypeError("apply_channel expects a DensityState")
    layout = state.layout
    axes = [layout.axis(t) for t in targets]
    d_in = math.prod(layout.dims[a] for a in axes)
    if ch.dim_in != d_in:
        raise ValueError(
            f"channel input dimension {ch.dim_in} does not match registers "
            f"{tuple(targets)} of joint dimension {d_in}"
        )
    if ch.dim_out != ch.dim_in and len(targets) != 1:
        raise ValueError("a register-growing channel must target a single register")

    if ch.mixture is not None:
        acc = None
        out_layout = None
        for w, sub in ch.mixture:
            if w == 0.0:
                continue
            part = apply_channel(state, sub, targets)
            out_layout = part.layout
            acc = w * part.mat if acc is None else acc + w * part.mat
        return DensityState(out_layout, acc, normalized=state.normalized)

    nreg = len(layout.dims)
    new_axis_dims = [ch.dim_out] if ch.dim_out != ch.dim_in else [layout.dims[a] for a in axes]
    new_layout = layout if ch.dim_out == ch.dim_in else layout.with_dim(targets[0], ch.dim_out)
    src = state.mat.reshape(layout.dims + layout.dims)
    acc = None
    for k in ch.kraus:
        t = _apply_to_tensor(src, k, axes, new_axis_dims)
        t = _apply_to_tensor(t, k.conj(), [a + nreg for a in axes], new_axis_dims)
        acc = t if acc is None else acc + t
    d = new_layout.total_dim
    return DensityState(new_layout, acc.reshape(d, d), normalized=state.normalized)


# ---------------------------------------------------------------------------
# Partial trace and measurement
# ---------------------------------------------------------------------------

def partial_trace(state: DensityState, discard: Sequence[str]) -> DensityState:
    """Trace out the named registers; the output layout drops them."""
    if not isinstance(state, DensityState):
        raise TypeError("partial_trace expects a DensityState")
    layout = state.layout
    drop = [layout.axis(name) for name in discard]
    nreg = len(layout.dims)
    keep = [i for i in range(nreg) if i not in set(drop)]

    t = state.mat.reshape(layout.dims + layout.dims)
    ket_sub = list(range(nreg))
    bra_sub = [i if i in set(drop) else i + nreg for i in range(nreg)]
    out_sub = [i for i in keep] + [i + nreg for i in keep]
    reduced = np.einsum(t, ket_sub + bra_sub, out_sub)
    new_layout = layout.without(discard)
    d = new_layout.total_dim
    return DensityState(new_layout, reduced.reshape(d, d), normalized=state.normalized)


def _register_probs(state, name: str) -> np.ndarray:
    layout = state.layout
    a = layout.axis(name)
    if isinstance(state, PureState):
        t = np.moveaxis(state.tensor(), a, 0).reshape(layout.dims[a], -1)
        return np.einsum("ij,ij->i", t, t.conj()).real
    if isinstance(state, DensityState):
        nreg = len(layout.dims)
        t = state.mat.reshape(layout.dims + layout.dims)
        sub = list(range(nreg)) * 2
        sub[a + nreg] = nreg  # fresh index for the bra side of the target
        return np.einsum(t, sub, [a, nreg]).diagonal().real.copy()
    raise TypeError(f"expected PureState or DensityState, got {type(state).__name__}")


def measure_register(state, name: str, mode: str = "distribution", rng=None):
    """Measure a register in the computational basis.

    ``mode="distribution"`` returns ``{outcome: probability}``.
    ``mode="sample"`` draws an outcome with the given rng/seed and returns
    ``(outcome, post_state)`` where the post-state is the normalized
    projection onto that outcome.
    """
    probs = _register_probs(state, name)
    total = probs.sum()
    if mode == "distribution":
        if abs(total - 1.0) > NORM_ATOL and getattr(state, "normalized", True):
            raise ValueError(f"outcome distribution sums to {total!r}")
        return {int(i): float(p) for i, p in enumerate(probs)}
    if mode != "sample":
        raise ValueError(f"unknown measurement mode {mode!r}")
    if total <= 1e-300:
        raise ValueError("cannot sample: all branches have zero probability")
    rng = as_generator(rng)
    outcome = int(rng.choice(probs.size, p=probs / total))

    layout = state.layout
    a = layout.axis(name)
    if isinstance(state, PureState):
        t = state.tensor().copy()
        idx = [slice(None)] * len(layout.dims)
        for k in range(layout.dims[a]):
            if k != outcome:
                idx[a] = k
                t[tuple(idx)] = 0.0
        branch = math.sqrt(probs[outcome])
        if branch <= 1e-150:
            raise ValueError("cannot sample: selected branch has zero norm")
        return outcome, PureState(layout, t.ravel() / branch)
    # density: project both sides and renormalize
    nreg = len(layout.dims)
    t = state.mat.reshape(layout.dims + layout.dims).copy()
    for side in (a, a + nreg):
        idx = [slice(None)] * (2 * nreg)
        for k in range(layout.dims[a]):
            if k != outcome:
                idx[side] = k
                t[tuple(idx)] = 0.0
                idx[side] = slice(None)
    d = layout.total_dim
    if probs[outcome] <= 1e-150:
        raise ValueError("cannot sample: selected branch has zero probability")
    return outcome, DensityState(layout, t.reshape(d, d) / probs[outcome])


# ---------------------------------------------------------------------------
# Operator norm
# ---------------------------------------------------------------------------

def operator_norm(m, dense_cutoff: int = 4096, power_tol: float = 1e-13,
                  max_iter: int = 200000, seed: int = 7) -> float:
    """Largest singular value of a rectangular complex matrix.

    Dense SVD when ``max(shape) <= dense_cutoff``; otherwise power iteration
    on M†M with Rayleigh-quotient convergence tolerance ``power_tol``.
    Accepts NumPy arrays and SciPy sparse matrices.
    """
    sparse = sp.issparse(m)
    if not sparse:
        m = np.asarray(m, dtype=np.complex128)
        if m.ndim != 2:
            raise ValueError(f"expected a matrix, got ndim={m.ndim}")
    rows, cols = m.shape
    if rows == 0 or cols == 0:
        raise ValueError("operator_norm of an empty matrix")

    if max(rows, cols) <= dense_cutoff:
        dense = m.toarray() if sparse else m
        return float(np.linalg.svd(dense, compute_uv=False)[0])

    # Power iteration on the smaller Gram side.
    a = m.tocsr() if sparse else m
    ah = a.conj().T.tocsr() if sparse else a.conj().T
    if rows >= cols:
        matvec = lambda v: ah @ (a @ v)
        dim = cols
    else:
        matvec = lambda v: a @ (ah @ v)
        dim = rows

    rng = np.random.default_rng(seed)
    lam = 0.0
    for _attempt in range(4):
        v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        v /= np.linalg.norm(v)
        lam = 0.0
        for _ in range(max_iter):
            w = matvec(v)
            nrm = np.linalg.norm(w)
            if nrm <= 1e-300:
                break  # v in the kernel; retry with a fresh start
            lam_new = float(np.vdot(v, w).real)
            v = w / nrm
            if abs(lam_new - lam) <= power_tol * max(1.0, abs(lam_new)):
                lam = lam_new
                return math.sqrt(max(lam, 0.0))
            lam = lam_new
        else:
            return math.sqrt(max(lam, 0.0))
    return 0.0
