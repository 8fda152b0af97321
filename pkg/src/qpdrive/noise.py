"""Depolarizing trajectories and the coherent z-drift error model.

All routines act on a batch of trajectories stored as the columns of a
``(2**L, m)`` array; each column carries its own noise realization.
"""

from dataclasses import dataclass, asdict

import numpy as np

from .core import PauliString, apply_gate, n_qubits_of

DEFAULT_P1Q = 5e-4
DEFAULT_P2Q = 8e-3
DEFAULT_DELTA_F_RMS = 0.5  # Hz
DEFAULT_T_LAYER = 50e-3  # s

_NONTRIVIAL_1Q = ("X", "Y", "Z")
_NONTRIVIAL_2Q = tuple(a + b for a in "IXYZ" for b in "IXYZ" if a + b != "II")


@dataclass
class CoherentDrift:
    """Quasi-static z detuning ``2 pi df_i sigma^z_i`` per site.

    ``delta_f_rms`` in Hz, ``t_layer`` in seconds. ``common_mode`` draws a
    single offset shared by all sites instead of independent per-site draws.
    """

    delta_f_rms: float = DEFAULT_DELTA_F_RMS
    t_layer: float = DEFAULT_T_LAYER
    common_mode: bool = False

    def __post_init__(self):
        if self.delta_f_rms < 0 or self.t_layer < 0:
            raise ValueError("delta_f_rms and t_layer must be non-negative")

    def sample_profile(self, n_qubits, n_shots, rng):
        """Offsets in Hz, shape ``(L, n_shots)``; fixed within each shot."""
        if self.common_mode:
            return np.repeat(rng.normal(0, self.delta_f_rms, size=(1, n_shots)), n_qubits, axis=0)
        return rng.normal(0, self.delta_f_rms, size=(n_qubits, n_shots))

    def phases(self, profile):
        """Per-layer phase ``phi_i = 2 pi df_i t_layer`` (rotation angle is ``2 phi``)."""
        return 2 * np.pi * np.asarray(profile) * self.t_layer


@dataclass
class NoiseModel:
    p_1q: float = 0.0
    p_2q: float = 0.0
    coherent: CoherentDrift = None

    def __post_init__(self):
        if isinstance(self.coherent, dict):
            self.coherent = CoherentDrift(**self.coherent)
        for p in (self.p_1q, self.p_2q):
            if not 0 <= p <= 1:
                raise ValueError(f"error probability {p} outside [0, 1]")

    @classmethod
    def default_rates(cls, coherent=None):
        return cls(DEFAULT_P1Q, DEFAULT_P2Q, coherent)

    @property
    def is_noiseless(self):
        return self.p_1q == 0 and self.p_2q == 0 and (self.coherent is None or self.coherent.delta_f_rms == 0)

    def to_dict(self):
        return asdict(self)


def _pauli_on(n_qubits, sites, labels):
    chars = ["I"] * n_qubits
    for s, c in zip(sites, labels):
        chars[s] = c
    return PauliString("".join(chars))


def apply_gate_noise(state, gate, model, rng):
    """Random non-identity Pauli on the gate support with probability ``p``.

    ``state`` may be one trajectory (1-D) or a batch (columns); every column
    draws independently.
    """
    p = model.p_1q if gate.arity == 1 else model.p_2q
    if p == 0:
        return state
    options = _NONTRIVIAL_1Q if gate.arity == 1 else _NONTRIVIAL_2Q
    n = n_qubits_of(state)
    if state.ndim == 1:
        if rng.random() >= p:
            return state
        lab = options[rng.integers(len(options))]
        return _pauli_on(n, gate.sites, lab).apply(state)
    hit = np.flatnonzero(rng.random(state.shape[1]) < p)
    if hit.size == 0:
        return state
    choice = rng.integers(len(options), size=hit.size)
    state = state.copy()
    for k in np.unique(choice):
        cols = hit[choice == k]
        state[:, cols] = _pauli_on(n, gate.sites, options[k]).apply(state[:, cols])
    return state


def apply_circuit_noisy(state, circuit, model, rng):
    """Gate-by-gate evolution with depolarizing insertions after each gate."""
    for op in circuit.ops:
        state = apply_gate(state, op)
        state = apply_gate_noise(state, op, model, rng)
    return state


def z_sign_table(n_qubits):
    """``(2**L, L)`` table of sigma^z eigenvalues, site 0 = LSB."""
    idx = np.arange(1 << n_qubits)
    return 1 - 2 * ((idx[:, None] >> np.arange(n_qubits)[None, :]) & 1)


def coherent_z_layer(state, drift, profile, layer_index=None, signs=None):
    """One layer of drift: ``R1Q(z, 2 phi_i)`` on every site.

    ``profile`` is the per-shot offset array from ``sample_profile`` (shape
    ``(L,)`` for a single trajectory or ``(L, m)`` for a batch). The profile
    is static, so ``layer_index`` only documents the call site.
    """
    n = n_qubits_of(state)
    if signs is None:
        signs = z_sign_table(n)
    phi = drift.phases(profile)
    # exp(-i phi sigma^z): diagonal phase -phi * sum_i z_i(b) phi_i
    arg = signs @ phi
    return state * np.exp(-1j * arg)
