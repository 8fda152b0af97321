"""Dense statevector / unitary engine.

States are plain complex numpy arrays of length ``2**L``; site 0 is the
least-significant bit of the basis index. Every kernel also accepts a
2-D array of shape ``(2**L, m)`` and acts on each column, which is how
unitaries are built (columns of the identity) and how batches of shots are
evolved together.
"""

from dataclasses import dataclass, field, replace
from enum import Enum
import os

import numpy as np

from . import gates

MAX_UNITARY_QUBITS = 12
MAX_STATE_QUBITS = 20

# unitarity checks on every applied matrix; off by default (hot path)
DEBUG_CHECKS = os.environ.get("QPDRIVE_DEBUG", "") not in ("", "0")


class Boundary(str, Enum):
    OBC = "OBC"
    PBC = "PBC"


ONE_QUBIT_KINDS = ("r1q", "rz")
TWO_QUBIT_KINDS = ("xx", "yy", "zz", "xy", "cz", "cnot", "ms")
ANGLE_KINDS = ("r1q", "rz", "xx", "yy", "zz", "xy")


@dataclass(frozen=True)
class GateOp:
    """One circuit element.

    ``kind`` is one of ``r1q, rz, xx, yy, zz, xy, cz, cnot, ms``. ``axis``
    is only used by ``r1q``; ``yy_sign`` only by ``xy`` (-1 marks a bond
    with the YY half sign-flipped). For ``cnot`` the sites are
    ``(control, target)``.
    """

    kind: str
    sites: tuple
    angle: float = 0.0
    axis: tuple = None
    yy_sign: int = 1

    def __post_init__(self):
        object.__setattr__(self, "sites", tuple(int(s) for s in self.sites))
        if self.kind in ONE_QUBIT_KINDS:
            if len(self.sites) != 1:
                raise ValueError(f"{self.kind} acts on one site, got {self.sites}")
        elif self.kind in TWO_QUBIT_KINDS:
            if len(self.sites) != 2:
                raise ValueError(f"{self.kind} acts on two sites, got {self.sites}")
            if self.sites[0] == self.sites[1]:
                raise ValueError(f"{self.kind} needs distinct sites, got {self.sites}")
        else:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if self.kind == "r1q":
            if self.axis is None:
                raise ValueError("r1q needs an axis")
            object.__setattr__(self, "axis", tuple(float(a) for a in self.axis))
        if self.yy_sign not in (1, -1):
            raise ValueError("yy_sign must be +1 or -1")

    @property
    def arity(self):
        return len(self.sites)

    def matrix(self):
        k = self.kind
        if k == "r1q":
            return gates.r1q(self.axis, self.angle)
        if k == "rz":
            return gates.rz(self.angle)
        if k == "xx":
            return gates.xx(self.angle)
        if k == "yy":
            return gates.yy(self.angle)
        if k == "zz":
            return gates.zz(self.angle)
        if k == "xy":
            return gates.xy(self.angle, self.yy_sign)
        if k == "cz":
            return gates.CZ
        if k == "cnot":
            return gates.CNOT
        return gates.ms()


@dataclass
class Circuit:
    n_qubits: int
    ops: list = field(default_factory=list)
    boundary: Boundary = Boundary.OBC

    def __post_init__(self):
        self.boundary = Boundary(self.boundary)
        for op in self.ops:
            self._check(op)

    def _check(self, op):
        for s in op.sites:
            if not 0 <= s < self.n_qubits:
                raise ValueError(f"site {s} out of range for L={self.n_qubits}")

    def append(self, op):
        self._check(op)
        self.ops.append(op)
        return self

    def __add__(self, other):
        if other.n_qubits != self.n_qubits:
            raise ValueError("cannot concatenate circuits of different size")
        return Circuit(self.n_qubits, list(self.ops) + list(other.ops), self.boundary)

    def __len__(self):
        return len(self.ops)

    def __iter__(self):
        return iter(self.ops)

    def count(self):
        """``(n_1q, n_2q)`` gate counts."""
        n1 = sum(1 for op in self.ops if op.arity == 1)
        return n1, len(self.ops) - n1

    def copy(self):
        return replace(self, ops=list(self.ops))


@dataclass(frozen=True)
class PauliString:
    """Tensor product of Paulis; ``labels[k]`` acts on site ``k``."""

    labels: str

    def __post_init__(self):
        labels = self.labels.upper()
        if set(labels) - set("IXYZ"):
            raise ValueError(f"bad Pauli labels {self.labels!r}")
        object.__setattr__(self, "labels", labels)

    @property
    def n_qubits(self):
        return len(self.labels)

    @classmethod
    def single(cls, n_qubits, site, label):
        chars = ["I"] * n_qubits
        chars[site] = label.upper()
        return cls("".join(chars))

    @classmethod
    def uniform(cls, n_qubits, label):
        return cls(label.upper() * n_qubits)

    @classmethod
    def random(cls, n_qubits, rng):
        return cls("".join(rng.choice(list("IXYZ"), size=n_qubits)))

    def masks(self):
        """``(flip_mask, phase_mask, n_y)`` describing ``P|b> = i^n_y (-1)^{|b & phase|} |b ^ flip>``."""
        flip = phase = 0
        n_y = 0
        for k, c in enumerate(self.labels):
            if c in "XY":
                flip |= 1 << k
            if c in "YZ":
                phase |= 1 << k
            n_y += c == "Y"
        return flip, phase, n_y

    def matrix(self):
        out = np.ones((1, 1), dtype=complex)
        for c in self.labels:
            # site 0 is the least-significant bit -> rightmost kron factor
            out = np.kron(gates.PAULI[c], out)
        return out

    def apply(self, state):
        flip, phase, n_y = self.masks()
        idx = np.arange(state.shape[0])
        signs = 1 - 2 * (_popcount(idx & phase) & 1)
        coef = (1j**n_y) * signs
        out = np.empty_like(state, dtype=complex)
        target = idx ^ flip
        if state.ndim == 1:
            out[target] = coef * state
        else:
            out[target] = coef[:, None] * state
        return out


def _popcount(a):
    a = np.asarray(a, dtype=np.int64)
    count = np.zeros_like(a)
    while np.any(a):
        count += a & 1
        a = a >> 1
    return count


def n_qubits_of(state):
    dim = state.shape[0]
    n = dim.bit_length() - 1
    if dim != 1 << n:
        raise ValueError(f"state dimension {dim} is not a power of two")
    return n


def zero_state(n_qubits):
    psi = np.zeros(1 << n_qubits, dtype=complex)
    psi[0] = 1.0
    return psi


def product_state(single_site_states):
    """Kronecker product of per-site 2-vectors (site 0 first in the list)."""
    out = np.ones(1, dtype=complex)
    for v in single_site_states:
        out = np.kron(np.asarray(v, dtype=complex), out)
    return out


def random_state(n_qubits, rng):
    psi = rng.normal(size=1 << n_qubits) + 1j * rng.normal(size=1 << n_qubits)
    return psi / np.linalg.norm(psi)


def _check_unitary(u):
    if not gates.is_unitary(u):
        raise ValueError("gate matrix is not unitary")


def apply_1q(state, site, u, check=None):
    """Apply a 2x2 ``u`` on ``site``; returns a new array."""
    n = n_qubits_of(state)
    if not 0 <= site < n:
        raise ValueError(f"site {site} out of range for L={n}")
    if check if check is not None else DEBUG_CHECKS:
        _check_unitary(u)
    v = state.reshape(1 << (n - 1 - site), 2, -1)
    out = np.empty_like(v, dtype=complex)
    out[:, 0] = u[0, 0] * v[:, 0] + u[0, 1] * v[:, 1]
    out[:, 1] = u[1, 0] * v[:, 0] + u[1, 1] * v[:, 1]
    return out.reshape(state.shape)


def apply_2q(state, site_i, site_j, u, check=None):
    """Apply a 4x4 ``u`` (basis ``2*b_i + b_j``) on an arbitrary site pair."""
    n = n_qubits_of(state)
    if site_i == site_j:
        raise ValueError("two-qubit gate needs distinct sites")
    for s in (site_i, site_j):
        if not 0 <= s < n:
            raise ValueError(f"site {s} out of range for L={n}")
    if check if check is not None else DEBUG_CHECKS:
        _check_unitary(u)
    hi, lo = max(site_i, site_j), min(site_i, site_j)
    if site_i == lo:
        u = u.reshape(2, 2, 2, 2).transpose(1, 0, 3, 2).reshape(4, 4)
    v = state.reshape(1 << (n - 1 - hi), 2, 1 << (hi - lo - 1), 2, -1)
    w = np.moveaxis(v, (1, 3), (0, 1)).reshape(4, -1)
    r = (u @ w).reshape(2, 2, v.shape[0], v.shape[2], v.shape[4])
    return np.moveaxis(r, (0, 1), (1, 3)).reshape(state.shape)


def apply_gate(state, op):
    u = op.matrix()
    if op.arity == 1:
        return apply_1q(state, op.sites[0], u)
    return apply_2q(state, op.sites[0], op.sites[1], u)


def apply_circuit(state, circuit):
    if n_qubits_of(state) != circuit.n_qubits:
        raise ValueError("state and circuit sizes differ")
    for op in circuit.ops:
        state = apply_gate(state, op)
    return state


def expectation(state, pauli):
    """``<psi|P|psi>`` for a normalized 1-D state."""
    if n_qubits_of(state) != pauli.n_qubits:
        raise ValueError("state and Pauli string sizes differ")
    return float(np.real(np.vdot(state, pauli.apply(state))))


def circuit_unitary(circuit, max_qubits=None):
    """Dense unitary of ``circuit`` (first op rightmost)."""
    cap = MAX_UNITARY_QUBITS if max_qubits is None else max_qubits
    if circuit.n_qubits > cap:
        raise ValueError(f"L={circuit.n_qubits} exceeds the dense-unitary cap of {cap}")
    u = np.eye(1 << circuit.n_qubits, dtype=complex)
    return apply_circuit(u, circuit)


def trace_overlap(u, v):
    """``tr(u^dagger v) / 2^L``."""
    u = np.asarray(u)
    v = np.asarray(v)
    if u.shape != v.shape:
        raise ValueError(f"shape mismatch {u.shape} vs {v.shape}")
    return complex(np.vdot(u, v) / u.shape[0])


def unitarity_error(u):
    u = np.asarray(u)
    return float(np.abs(u.conj().T @ u - np.eye(u.shape[0])).max())


def stochastic_trace_overlap(circuit_u, circuit_v, n_samples, rng, batch=256):
    """Estimate ``trace_overlap`` from Haar-random states.

    Returns ``(estimate, stderr)``, both complex; ``stderr`` carries the
    standard errors of the real and imaginary parts.
    """
    if n_samples <= 0:
        raise ValueError("n_samples must be positive")
    if circuit_u.n_qubits != circuit_v.n_qubits:
        raise ValueError("circuits act on different numbers of qubits")
    n = circuit_u.n_qubits
    dim = 1 << n
    samples = []
    done = 0
    while done < n_samples:
        m = min(batch, n_samples - done)
        psi = rng.normal(size=(dim, m)) + 1j * rng.normal(size=(dim, m))
        psi /= np.linalg.norm(psi, axis=0)
        a = apply_circuit(psi, circuit_u)
        b = apply_circuit(psi, circuit_v)
        samples.append(np.einsum("ij,ij->j", a.conj(), b))
        done += m
    s = np.concatenate(samples)
    mean = s.mean()
    if n_samples > 1:
        err = complex(s.real.std(ddof=1), s.imag.std(ddof=1)) / np.sqrt(n_samples)
    else:
        err = complex(np.nan, np.nan)
    return complex(mean), err
