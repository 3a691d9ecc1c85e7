"""Oracle construction, noise channels, and their exact algebra."""

import numpy as np
import pytest

from noisysearch.oracles import (
    HADAMARD,
    NoiseSpec,
    TruthTable,
    apply_index_map,
    concealing_call_channel,
    flag_conditioned_depolarizer,
    noise_channel,
    noisy_oracle_call,
    oracle_channel,
    phase_oracle_unitary,
    signaling_call_channel,
    signaling_noise_channel,
    signaling_noisy_oracle_call,
    standard_oracle_perm,
    standard_oracle_unitary,
)
from noisysearch.qcore import (
    Channel,
    PureState,
    RegisterLayout,
    basis_vec,
    measure_register,
    partial_trace,
    random_statevec,
)


def q_layout(n, m, w=1):
    return RegisterLayout([("Qi", n), ("Qo", m), ("W", w)])


def random_density(layout, seed):
    rng = np.random.default_rng(seed)
    return PureState(layout, random_statevec(layout.total_dim, rng)).to_density()


def discard_flag_channel(d):
    """Trace out the flag qubit appended behind a d-dimensional register."""
    ops = []
    for b in range(2):
        k = np.zeros((d, 2 * d), dtype=np.complex128)
        for i in range(d):
            k[i, 2 * i + b] = 1.0
        ops.append(k)
    return Channel.from_kraus(ops)


# ---------------------------------------------------------------------------
# truth tables
# ---------------------------------------------------------------------------

def test_truth_table_validation():
    with pytest.raises(ValueError):
        TruthTable(3, 3, (0, 1, 2))  # m not a power of two
    with pytest.raises(ValueError):
        TruthTable(3, 2, (0, 2, 0))  # value out of range
    with pytest.raises(ValueError):
        TruthTable.unique_marked(4, 4)


def test_unique_marked_has_one_marked_input():
    f = TruthTable.unique_marked(5, 3)
    assert f.outputs.count(1) == 1
    assert f.marked_inputs() == (3,)
    assert f.marked_value == 1


def test_marked_value_for_wide_outputs():
    f = TruthTable.from_outputs([0, 3, 1, 0], m=4)
    assert f.marked_value == 0
    assert f.marked_inputs() == (0, 3)


def test_uniform_random_is_deterministic():
    a = TruthTable.uniform_random(10, 4, seed=99)
    b = TruthTable.uniform_random(10, 4, seed=99)
    c = TruthTable.uniform_random(10, 4, seed=100)
    assert a == b
    assert a != c


def test_text_round_trip():
    f = TruthTable.from_outputs([2, 0, 3, 3, 1], m=4)
    text = f.to_text()
    assert text.splitlines()[0] == "5 4"
    assert TruthTable.from_text(text) == f
    with pytest.raises(ValueError):
        TruthTable.from_text("3 2\n0 1")  # missing a value


# ---------------------------------------------------------------------------
# standard and phase oracles
# ---------------------------------------------------------------------------

def test_standard_oracle_definition_small():
    f = TruthTable.unique_marked(2, 0)
    u = standard_oracle_unitary(f)
    # |0,0> -> |0,1> and |1,0> -> |1,0>
    assert np.array_equal(u @ basis_vec(4, 0), basis_vec(4, 1))
    assert np.array_equal(u @ basis_vec(4, 2), basis_vec(4, 2))


def test_standard_oracle_involution_exact():
    rng = np.random.default_rng(0)
    for _ in range(10):
        n = int(rng.integers(2, 9))
        m = int(2 ** rng.integers(1, 3))
        f = TruthTable.uniform_random(n, m, rng)
        img = standard_oracle_perm(f)
        assert np.array_equal(np.sort(img), np.arange(n * m))  # permutation
        assert np.array_equal(img[img], np.arange(n * m))      # involution
        u = standard_oracle_unitary(f)
        assert np.array_equal(u @ u, np.eye(n * m))


def test_unique_marked_oracle_is_reflection():
    n = 6
    x = 2
    u = standard_oracle_unitary(TruthTable.unique_marked(n, x))
    minus = np.array([1.0, -1.0]) / np.sqrt(2.0)
    probe = np.kron(basis_vec(n, x), minus)
    reflection = np.eye(2 * n) - 2.0 * np.outer(probe, probe.conj())
    assert np.abs(u - reflection).max() < 1e-12


def test_phase_oracle_of_zero_function_is_identity():
    f = TruthTable.from_outputs([0, 0, 0], m=2)
    assert np.array_equal(phase_oracle_unitary(f), np.eye(6))


def test_phase_oracle_sign_pattern():
    f = TruthTable.unique_marked(3, 1)
    u = phase_oracle_unitary(f)
    signs = np.diagonal(u).real
    # only (x=1, y=1) picks up the minus sign
    assert signs[1 * 2 + 1] == -1.0
    assert np.sum(signs == -1.0) == 1


def test_phase_and_standard_oracles_conjugate_by_hadamard():
    rng = np.random.default_rng(1)
    for _ in range(5):
        n = int(rng.integers(2, 7))
        f = TruthTable.uniform_random(n, 2, rng)
        h = np.kron(np.eye(n), HADAMARD)
        lhs = h @ phase_oracle_unitary(f) @ h
        assert np.abs(lhs - standard_oracle_unitary(f)).max() < 1e-12


def test_apply_index_map_matches_dense():
    rng = np.random.default_rng(2)
    n, m = 5, 2
    f = TruthTable.uniform_random(n, m, rng)
    layout = q_layout(n, m, 3)
    state = PureState(layout, random_statevec(layout.total_dim, rng))
    fast = apply_index_map(state, standard_oracle_perm(f), ("Qi", "Qo"))
    from noisysearch.qcore import embed_and_apply

    dense = embed_and_apply(state, standard_oracle_unitary(f), ("Qi", "Qo"))
    assert np.abs(fast.vec - dense.vec).max() < 1e-14
    rho = state.to_density()
    fast_rho = apply_index_map(rho, standard_oracle_perm(f), ("Qi", "Qo"))
    dense_rho = embed_and_apply(rho, standard_oracle_unitary(f), ("Qi", "Qo"))
    assert np.abs(fast_rho.mat - dense_rho.mat).max() < 1e-14


# ---------------------------------------------------------------------------
# noise channels
# ---------------------------------------------------------------------------

def test_full_depolarization_gives_maximally_mixed():
    n, m = 4, 2
    rho = random_density(q_layout(n, m), 3)
    from noisysearch.qcore import apply_channel

    out = apply_channel(rho, noise_channel(NoiseSpec("depolarizing", 1.0), n, m),
                        ("Qi", "Qo"))
    red = partial_trace(out, ("W",))
    assert np.abs(red.mat - np.eye(n * m) / (n * m)).max() < 1e-12


def test_full_dephasing_acts_on_query_input_only():
    n, m = 2, 2
    rng = np.random.default_rng(4)
    sigma = random_statevec(m, rng)
    plus = np.array([1.0, 1.0]) / np.sqrt(2.0)
    layout = RegisterLayout([("Qi", n), ("Qo", m)])
    rho = PureState(layout, np.kron(plus, sigma)).to_density()
    from noisysearch.qcore import apply_channel

    out = apply_channel(rho, noise_channel(NoiseSpec("dephasing", 1.0), n, m),
                        ("Qi", "Qo"))
    expected = np.kron(np.eye(2) / 2, np.outer(sigma, sigma.conj()))
    assert np.abs(out.mat - expected).max() < 1e-12


def test_zero_rate_noise_is_identity():
    n, m = 3, 2
    rho = random_density(q_layout(n, m), 5)
    from noisysearch.qcore import apply_channel

    for kind in ("depolarizing", "dephasing", "none"):
        out = apply_channel(rho, noise_channel(NoiseSpec(kind, 0.0), n, m),
                            ("Qi", "Qo"))
        assert np.abs(out.mat - rho.mat).max() == 0.0


def test_dephasing_fixes_diagonal_query_input():
    # any state diagonal on Qi is left exactly fixed, for every rate
    rng = np.random.default_rng(6)
    n, m = 3, 2
    layout = q_layout(n, m)
    probs = rng.random(n)
    probs /= probs.sum()
    blocks = []
    for x in range(n):
        v = random_statevec(m, rng)
        blocks.append(probs[x] * np.outer(v, v.conj()))
    mat = np.zeros((n * m, n * m), dtype=np.complex128)
    for x in range(n):
        mat[x * m:(x + 1) * m, x * m:(x + 1) * m] = blocks[x]
    from noisysearch.qcore import DensityState, apply_channel

    rho = DensityState(layout.without(("W",)), mat)
    for p in (0.25, 0.5, 1.0):
        out = apply_channel(rho, noise_channel(NoiseSpec("dephasing", p), n, m),
                            ("Qi", "Qo"))
        assert np.abs(out.mat - rho.mat).max() < 1e-12


def test_noise_spec_validation():
    with pytest.raises(ValueError):
        NoiseSpec("depolarizing", 1.5)
    with pytest.raises(ValueError):
        NoiseSpec("fuzzy", 0.5)
    assert NoiseSpec("none", 0.7).effective_p == 0.0


# ---------------------------------------------------------------------------
# noisy oracle calls
# ---------------------------------------------------------------------------

def test_noiseless_call_equals_unitary_conjugation():
    n, m = 4, 2
    f = TruthTable.unique_marked(n, 1)
    rho = random_density(q_layout(n, m), 7)
    out = noisy_oracle_call(rho, f, NoiseSpec("dephasing", 0.0))
    u = standard_oracle_unitary(f)
    from noisysearch.qcore import embed_and_apply

    ref = embed_and_apply(rho, u, ("Qi", "Qo"))
    assert np.abs(out.mat - ref.mat).max() < 1e-14


def test_fully_depolarized_call_forgets_input():
    n, m = 4, 2
    f = TruthTable.unique_marked(n, 2)
    spec = NoiseSpec("depolarizing", 1.0)
    out1 = noisy_oracle_call(random_density(q_layout(n, m), 8), f, spec)
    out2 = noisy_oracle_call(random_density(q_layout(n, m), 9), f, spec)
    assert np.abs(out1.mat - out2.mat).max() < 1e-12


def test_dephasing_call_on_basis_state_is_noiseless():
    n, m = 4, 2
    f = TruthTable.unique_marked(n, 3)
    layout = q_layout(n, m)
    basis = PureState(layout, np.kron(np.kron(basis_vec(n, 3), basis_vec(m, 0)),
                                      [1.0])).to_density()
    clean = noisy_oracle_call(basis, f, NoiseSpec("dephasing", 0.0))
    for p in (0.3, 1.0):
        noisy = noisy_oracle_call(basis, f, NoiseSpec("dephasing", p))
        assert np.abs(noisy.mat - clean.mat).max() < 1e-14


def test_noise_commutes_with_oracle_as_channels():
    n, m = 3, 2
    rng = np.random.default_rng(10)
    f = TruthTable.uniform_random(n, m, rng)
    for kind in ("depolarizing", "dephasing"):
        for p in (0.2, 0.7, 1.0):
            spec = NoiseSpec(kind, p)
            after = oracle_channel(f).then(noise_channel(spec, n, m))
            before = noise_channel(spec, n, m).then(oracle_channel(f))
            assert np.abs(after.choi() - before.choi()).max() < 1e-12


# ---------------------------------------------------------------------------
# signaling calls
# ---------------------------------------------------------------------------

def test_signaling_flag_deterministic_at_extremes():
    n, m = 3, 2
    f = TruthTable.unique_marked(n, 0)
    rho = random_density(q_layout(n, m, 2), 11)
    clean = signaling_noisy_oracle_call(rho, f, NoiseSpec("dephasing", 0.0, True))
    assert clean.layout.dim("W") == 4  # flag qubit appended
    flag_probs = _flag_distribution(clean)
    assert abs(flag_probs[0] - 1.0) < 1e-12
    broken = signaling_noisy_oracle_call(rho, f, NoiseSpec("dephasing", 1.0, True))
    assert abs(_flag_distribution(broken)[1] - 1.0) < 1e-12


def _flag_distribution(rho):
    """Distribution of the most recently appended workspace qubit."""
    w = rho.layout.dim("W")
    diag = np.zeros(2)
    probs = measure_register(rho, "W")
    for idx, pr in probs.items():
        diag[idx % 2] += pr
    return diag


def test_signaling_flag_marginal_is_rate():
    n, m = 3, 2
    f = TruthTable.unique_marked(n, 1)
    rho = random_density(q_layout(n, m), 12)
    for p in (0.0, 0.35, 1.0):
        out = signaling_noisy_oracle_call(rho, f, NoiseSpec("depolarizing", p, True))
        dist = _flag_distribution(out)
        assert abs(dist[1] - p) < 1e-12


def test_signaling_conditioned_states():
    # flag 0 branch = faultless call; flag 1 branch = fully erased call
    n, m = 3, 2
    f = TruthTable.unique_marked(n, 1)
    rho = random_density(q_layout(n, m), 13)
    p = 0.4
    out = signaling_noisy_oracle_call(rho, f, NoiseSpec("depolarizing", p, True))
    clean = noisy_oracle_call(rho, f, NoiseSpec("depolarizing", 0.0))
    erased = noisy_oracle_call(rho, f, NoiseSpec("depolarizing", 1.0))
    # W grew from dim 1 to 2 (the flag); select flag = 0 / 1 on both sides
    t = out.mat.reshape(n, m, 2, n, m, 2)
    branch0 = t[:, :, 0, :, :, 0].reshape(n * m, n * m)
    branch1 = t[:, :, 1, :, :, 1].reshape(n * m, n * m)
    ref0 = partial_trace(clean, ("W",)).mat
    ref1 = partial_trace(erased, ("W",)).mat
    assert np.abs(branch0 - (1 - p) * ref0).max() < 1e-12
    assert np.abs(branch1 - p * ref1).max() < 1e-12


def test_depolarizing_signaling_equals_depolarize_after_dephasing_signaling():
    n, m = 4, 2
    for p in (0.0, 0.3, 1.0):
        polar = signaling_noise_channel(NoiseSpec("depolarizing", p, True), n, m)
        phase = signaling_noise_channel(NoiseSpec("dephasing", p, True), n, m)
        composed = phase.then(flag_conditioned_depolarizer(n, m))
        assert np.abs(polar.choi() - composed.choi()).max() < 1e-12


def test_signaling_then_discarding_flag_is_concealing():
    n, m = 3, 2
    rng = np.random.default_rng(14)
    f = TruthTable.uniform_random(n, m, rng)
    for kind in ("depolarizing", "dephasing"):
        for p in (0.25, 0.8):
            sig = signaling_call_channel(f, NoiseSpec(kind, p, True))
            conc = concealing_call_channel(f, NoiseSpec(kind, p))
            dropped = sig.then(discard_flag_channel(n * m))
            assert np.abs(dropped.choi() - conc.choi()).max() < 1e-12
