"""Execution of quantum noisy-query algorithms.

An algorithm is: a query count tau, an initial pure state on Qi ⊗ Qo ⊗ W
(W starts as ell qubits), input-independent unitaries U_1..U_tau, and a
final computational-basis measurement of Qi.  One round = one noisy oracle
call followed by one unitary.  In signaling mode every call grows W by one
flag qubit, so U_t acts on n*m*2^(ell+t) dimensions; in concealing mode the
memory size is constant.

Two execution modes:

* ``run_exact`` evolves the density matrix and returns the exact success
  probability.
* ``run_trajectory`` keeps a pure state and samples the noise per call
  (dephasing: projectively measure Qi and keep the branch; depolarizing:
  measure Q, discard, re-prepare a uniform random basis state of Q).
  Averaging trajectories over seeds converges to the exact run.

Unitaries are given either as dense matrices or as small gate programs
(compositions of oracle-free primitives), so Grover-style circuits never
materialize a dense matrix in trajectory mode.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .oracles import (
    HADAMARD,
    NoiseSpec,
    TruthTable,
    apply_index_map,
    noisy_oracle_call,
    signaling_noisy_oracle_call,
    standard_oracle_perm,
)
from .qcore import (
    DensityState,
    PureState,
    RegisterLayout,
    as_generator,
    assert_unitary,
    embed_and_apply,
)

__all__ = [
    "AlgorithmSpec",
    "RunResult",
    "GATE_NAMES",
    "run_exact",
    "run_trajectory",
    "average_success",
    "named_initial_state",
    "algorithm_from_config",
    "load_algorithm",
    "algorithm_to_config",
]


# ---------------------------------------------------------------------------
# Gate programs (oracle-free primitives on Qi / Qo)
# ---------------------------------------------------------------------------

def _diffusion_matrix(n: int) -> np.ndarray:
    return (2.0 / n) * np.ones((n, n), dtype=np.complex128) - np.eye(n, dtype=np.complex128)


def _gate_dense(name: str, n: int, m: int, wdim: int) -> np.ndarray:
    eye_mw = np.eye(m * wdim, dtype=np.complex128)
    if name == "identity":
        return np.eye(n * m * wdim, dtype=np.complex128)
    if name == "diffusion":
        return np.kron(_diffusion_matrix(n), eye_mw)
    if name == "hadamard_qo":
        if m != 2:
            raise ValueError("hadamard_qo requires m = 2")
        return np.kron(np.eye(n, dtype=np.complex128),
                       np.kron(HADAMARD, np.eye(wdim, dtype=np.complex128)))
    if name == "x_qo":
        if m != 2:
            raise ValueError("x_qo requires m = 2")
        x = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128)
        return np.kron(np.eye(n, dtype=np.complex128),
                       np.kron(x, np.eye(wdim, dtype=np.complex128)))
    raise ValueError(f"unknown gate {name!r}")


def _gate_apply(name: str, t: np.ndarray) -> np.ndarray:
    """Apply a named gate to a state tensor of shape (n, m, w)."""
    if name == "identity":
        return t
    if name == "diffusion":
        return 2.0 * t.mean(axis=0, keepdims=True) - t
    if name == "hadamard_qo":
        if t.shape[1] != 2:
            raise ValueError("hadamard_qo requires m = 2")
        s = math.sqrt(0.5)
        out = np.empty_like(t)
        out[:, 0, :] = s * (t[:, 0, :] + t[:, 1, :])
        out[:, 1, :] = s * (t[:, 0, :] - t[:, 1, :])
        return out
    if name == "x_qo":
        if t.shape[1] != 2:
            raise ValueError("x_qo requires m = 2")
        return t[:, ::-1, :]
    raise ValueError(f"unknown gate {name!r}")


GATE_NAMES = ("identity", "diffusion", "hadamard_qo", "x_qo")


# ---------------------------------------------------------------------------
# Algorithm specification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AlgorithmSpec:
    """A noisy-query algorithm: tau calls interleaved with unitaries.

    ``steps[t-1]`` is the unitary U_t applied after the t-th oracle call,
    either a dense ndarray on Qi ⊗ Qo ⊗ W (sized for the layout at that
    step) or a tuple of gate names applied left to right.
    """

    n: int
    m: int
    tau: int
    ell: int
    initial_state: np.ndarray
    steps: tuple

    def __post_init__(self):
        init = np.asarray(self.initial_state, dtype=np.complex128).ravel()
        object.__setattr__(self, "initial_state", init)
        object.__setattr__(self, "steps", tuple(self.steps))
        if self.tau < 0 or self.ell < 0:
            raise ValueError("tau and ell must be nonnegative")
        if len(self.steps) != self.tau:
            raise ValueError(f"expected {self.tau} step unitaries, got {len(self.steps)}")
        if init.size != self.n * self.m * (2 ** self.ell):
            raise ValueError(
                f"initial state has dimension {init.size}, expected n*m*2^ell = "
                f"{self.n * self.m * 2 ** self.ell}"
            )

    def workspace_dim(self, t: int, signaling: bool) -> int:
        return 2 ** (self.ell + t) if signaling else 2 ** self.ell

    def validate(self, signaling: bool) -> None:
        nrm = np.linalg.norm(self.initial_state)
        if abs(nrm - 1.0) > 1e-10:
            raise ValueError(f"initial state norm {nrm!r} differs from 1")
        for t, step in enumerate(self.steps, start=1):
            if isinstance(step, np.ndarray):
                d = self.n * self.m * self.workspace_dim(t, signaling)
                if step.shape != (d, d):
                    raise ValueError(
                        f"step {t}: dense unitary has shape {step.shape}, expected ({d}, {d})"
                    )
                assert_unitary(step, what=f"step {t} unitary")
            else:
                for g in step:
                    if g not in GATE_NAMES:
                        raise ValueError(f"step {t}: unknown gate {g!r}")

    def step_dense(self, t: int, signaling: bool) -> np.ndarray:
        """Dense U_t for the layout at step t (gate programs are multiplied out)."""
        step = self.steps[t - 1]
        if isinstance(step, np.ndarray):
            return step
        wdim = self.workspace_dim(t, signaling)
        u = np.eye(self.n * self.m * wdim, dtype=np.complex128)
        for g in step:
            u = _gate_dense(g, self.n, self.m, wdim) @ u
        return u


@dataclass
class RunResult:
    """Outcome of one execution: exact probability or a sampled answer."""

    success_probability: float | None
    sampled_answer: int | None
    sampled_success: bool | None
    queries_used: int

    def __post_init__(self):
        sp = self.success_probability
        if sp is not None and not (-1e-10 <= sp <= 1.0 + 1e-10):
            raise ValueError(f"success probability {sp} outside [0, 1]")


def _initial_layout(alg: AlgorithmSpec) -> RegisterLayout:
    return RegisterLayout([("Qi", alg.n), ("Qo", alg.m), ("W", 2 ** alg.ell)])


def _qi_marginal(state) -> np.ndarray:
    layout = state.layout
    a = layout.axis("Qi")
    if isinstance(state, PureState):
        t = np.moveaxis(state.tensor(), a, 0).reshape(layout.dim("Qi"), -1)
        return np.einsum("ij,ij->i", t, t.conj()).real
    nreg = len(layout.dims)
    t = state.mat.reshape(layout.dims + layout.dims)
    sub = list(range(nreg)) * 2
    out = np.einsum(t, sub, [a]).real
    return out


def _success_from_marginal(probs: np.ndarray, table: TruthTable) -> float:
    marked = table.marked_inputs()
    return float(sum(probs[x] for x in marked))


# ---------------------------------------------------------------------------
# Exact (density-matrix) execution
# ---------------------------------------------------------------------------

def run_exact(alg: AlgorithmSpec, table: TruthTable, spec: NoiseSpec):
    """Deterministic density-matrix run; returns (RunResult, final DensityState)."""
    if (table.n, table.m) != (alg.n, alg.m):
        raise ValueError("truth table dimensions do not match the algorithm")
    alg.validate(spec.signaling)
    layout = _initial_layout(alg)
    rho = PureState(layout, alg.initial_state).to_density()
    for t in range(1, alg.tau + 1):
        try:
            if spec.signaling:
                rho = signaling_noisy_oracle_call(rho, table, spec)
            else:
                rho = noisy_oracle_call(rho, table, spec)
            u = alg.step_dense(t, spec.signaling)
            rho = embed_and_apply(rho, u, ("Qi", "Qo", "W"))
        except ValueError as exc:
            raise ValueError(f"dimension error at step {t}: {exc}") from exc
    probs = _qi_marginal(rho)
    result = RunResult(
        success_probability=_success_from_marginal(probs, table),
        sampled_answer=None,
        sampled_success=None,
        queries_used=alg.tau,
    )
    return result, rho


# ---------------------------------------------------------------------------
# Trajectory (sampled-noise, pure-state) execution
# ---------------------------------------------------------------------------

def _trajectory_noise(t: np.ndarray, spec: NoiseSpec, rng) -> tuple[np.ndarray, int]:
    """One sampled noise realization on a (n, m, w) tensor; returns (tensor, flag)."""
    p = spec.effective_p
    if p <= 0.0 or rng.random() >= p:
        return t, 0
    n, m, w = t.shape
    if spec.kind == "dephasing":
        probs = np.einsum("xyw,xyw->x", t, t.conj()).real
        total = probs.sum()
        x0 = rng.choice(n, p=probs / total)
        out = np.zeros_like(t)
        out[x0] = t[x0] / math.sqrt(probs[x0])
        return out, 1
    if spec.kind == "depolarizing":
        probs = np.einsum("xyw,xyw->xy", t, t.conj()).real.ravel()
        total = probs.sum()
        j = rng.choice(n * m, p=probs / total)
        x0, y0 = divmod(int(j), m)
        cond = t[x0, y0] / math.sqrt(probs[j])
        out = np.zeros_like(t)
        x1 = rng.integers(n)
        y1 = rng.integers(m)
        out[x1, y1] = cond
        return out, 1
    return t, 0  # kind == "none"


def run_trajectory(alg: AlgorithmSpec, table: TruthTable, spec: NoiseSpec, seed) -> RunResult:
    """Pure-state run with noise sampled per call; deterministic given the seed."""
    if (table.n, table.m) != (alg.n, alg.m):
        raise ValueError("truth table dimensions do not match the algorithm")
    alg.validate(spec.signaling)
    rng = as_generator(seed)
    n, m = alg.n, alg.m
    t = alg.initial_state.reshape(n, m, 2 ** alg.ell).copy()

    yxor = np.bitwise_xor(np.arange(m)[None, :], table.out_array()[:, None])  # (n, m)
    xi = np.arange(n)[:, None]

    for step_idx in range(1, alg.tau + 1):
        t = t[xi, yxor]  # standard oracle: out[x, y ^ f(x)] = in[x, y]
        t, flag = _trajectory_noise(t, spec, rng)
        if spec.signaling:
            w = t.shape[2]
            grown = np.zeros((n, m, 2 * w), dtype=np.complex128)
            grown[:, :, flag::2] = t
            t = grown
        step = alg.steps[step_idx - 1]
        if isinstance(step, np.ndarray):
            d = t.size
            if step.shape != (d, d):
                raise ValueError(
                    f"dimension error at step {step_idx}: unitary shape {step.shape}, "
                    f"state dimension {d}"
                )
            t = (step @ t.ravel()).reshape(t.shape)
        else:
            for g in step:
                t = _gate_apply(g, t)

    probs = np.einsum("xyw,xyw->x", t, t.conj()).real
    answer = int(rng.choice(n, p=probs / probs.sum()))
    return RunResult(
        success_probability=None,
        sampled_answer=answer,
        sampled_success=answer in table.marked_inputs(),
        queries_used=alg.tau,
    )


# ---------------------------------------------------------------------------
# Instance families
# ---------------------------------------------------------------------------

def average_success(alg: AlgorithmSpec, family: str, spec: NoiseSpec,
                    seed=None, samples: int | None = None) -> float:
    """Mean exact success probability over an instance family.

    ``family="unique"``: the n functions with exactly one marked input.
    ``family="uniform"``: uniformly random f in [m]^[n]; enumerated exactly
    when m^n <= 4096, otherwise sampled (requires ``samples`` and ``seed``).
    """
    if family == "unique":
        tables = [TruthTable.unique_marked(alg.n, x) for x in range(alg.n)]
    elif family == "uniform":
        total = alg.m ** alg.n
        if total <= 4096:
            tables = []
            for idx in range(total):
                outs = []
                v = idx
                for _ in range(alg.n):
                    outs.append(v % alg.m)
                    v //= alg.m
                tables.append(TruthTable.from_outputs(outs, alg.m))
        else:
            if samples is None:
                raise ValueError(
                    f"family of size m^n = {total} is too large for exact enumeration; "
                    "pass samples= to sample instead"
                )
            rng = as_generator(seed)
            tables = [TruthTable.uniform_random(alg.n, alg.m, rng) for _ in range(samples)]
    else:
        raise ValueError(f"unknown family {family!r} (expected 'unique' or 'uniform')")
    vals = [run_exact(alg, f, spec)[0].success_probability for f in tables]
    return float(np.mean(vals))


# ---------------------------------------------------------------------------
# Config files (JSON-compatible tree)
# ---------------------------------------------------------------------------

def named_initial_state(name: str, n: int, m: int, ell: int) -> np.ndarray:
    """Built-in initial states on Qi ⊗ Qo ⊗ W."""
    w = 2 ** ell
    qi = np.full(n, 1.0 / math.sqrt(n), dtype=np.complex128)
    w0 = np.zeros(w, dtype=np.complex128)
    w0[0] = 1.0
    if name == "grover":
        if m != 2:
            raise ValueError("the 'grover' initial state requires m = 2")
        minus = np.array([1.0, -1.0], dtype=np.complex128) / math.sqrt(2.0)
        return np.kron(np.kron(qi, minus), w0)
    if name == "uniform_query":
        qo = np.zeros(m, dtype=np.complex128)
        qo[0] = 1.0
        return np.kron(np.kron(qi, qo), w0)
    if name == "zero":
        full = np.zeros(n * m * w, dtype=np.complex128)
        full[0] = 1.0
        return full
    raise ValueError(f"unknown initial state {name!r}")


def _complex_list_to_array(entries) -> np.ndarray:
    return np.array([complex(re, im) for re, im in entries], dtype=np.complex128)


def _array_to_complex_list(vec: np.ndarray):
    return [[float(z.real), float(z.imag)] for z in np.asarray(vec).ravel()]


def algorithm_from_config(cfg: dict) -> AlgorithmSpec:
    """Build an AlgorithmSpec from a JSON-compatible tree.

    Keys: n, m, tau, ell, initial_state (a name or a list of [re, im]
    pairs), steps (per step: a list of gate names, or {"dense": matrix}
    with [re, im] entries).
    """
    n, m, tau, ell = int(cfg["n"]), int(cfg["m"]), int(cfg["tau"]), int(cfg["ell"])
    init = cfg.get("initial_state", "uniform_query")
    if isinstance(init, str):
        init_vec = named_initial_state(init, n, m, ell)
    else:
        init_vec = _complex_list_to_array(init)
    steps = []
    for entry in cfg.get("steps", []):
        if isinstance(entry, dict):
            rows = entry["dense"]
            mat = np.array([[complex(re, im) for re, im in row] for row in rows],
                           dtype=np.complex128)
            steps.append(mat)
        else:
            steps.append(tuple(entry))
    return AlgorithmSpec(n=n, m=m, tau=tau, ell=ell, initial_state=init_vec, steps=steps)


def algorithm_to_config(alg: AlgorithmSpec) -> dict:
    steps = []
    for step in alg.steps:
        if isinstance(step, np.ndarray):
            steps.append({"dense": [[[float(z.real), float(z.imag)] for z in row]
                                    for row in step]})
        else:
            steps.append(list(step))
    return {
        "n": alg.n, "m": alg.m, "tau": alg.tau, "ell": alg.ell,
        "initial_state": _array_to_complex_list(alg.initial_state),
        "steps": steps,
    }


def load_algorithm(path) -> AlgorithmSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return algorithm_from_config(json.load(fh))
