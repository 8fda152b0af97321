"""Loschmidt flux echo on a periodic chain.

A Z2 flux through the ring is inserted locally by flipping the sign of the
YY half of the exchange gate on one bond. The echo compares evolutions with
and without the flip, ``Z(t) = tr(U_F(t)^dag U(t)) / 2^L``, either exactly
or through an ancilla that controls the sign flip.
"""

from dataclasses import dataclass, replace, field
import itertools

import numpy as np

from .core import Boundary, Circuit, GateOp, apply_circuit, circuit_unitary
from .drives import Model, bonds, build_fspt_period, sample_disorder
from .noise import apply_circuit_noisy, coherent_z_layer, z_sign_table
from .observables import InitScheme, ShotProtocol, sample_initial, local_expectations
from .seeding import rng_for


@dataclass
class FluxConfig:
    bond: int = 0
    boundary: Boundary = Boundary.PBC

    def __post_init__(self):
        self.boundary = Boundary(self.boundary)
        if self.boundary != Boundary.PBC:
            raise ValueError("flux insertion needs periodic boundary conditions")

    def ancilla_site(self, n_qubits):
        return n_qubits


@dataclass
class EchoSeries:
    times: np.ndarray
    values: np.ndarray  # complex
    stderr: np.ndarray = field(default=None)  # complex: (re err) + 1j (im err)

    def rows(self):
        err = self.stderr if self.stderr is not None else np.zeros(len(self.times), dtype=complex)
        return [
            {"t": int(t), "re": repr(float(v.real)), "im": repr(float(v.imag)),
             "re_stderr": repr(float(e.real)), "im_stderr": repr(float(e.imag))}
            for t, v, e in zip(self.times, self.values, err)
        ]


def _bond_sites(n_qubits, bond):
    pairs = bonds(n_qubits, Boundary.PBC)
    if not 0 <= bond < len(pairs):
        raise ValueError(f"bond {bond} out of range")
    return pairs[bond]


def _find_exchange(period, sites):
    hits = [k for k, op in enumerate(period.ops) if op.kind == "xy" and set(op.sites) == set(sites)]
    if not hits:
        raise ValueError(f"no exchange gate on bond {sites}")
    return hits


def flux_flip_circuit(period, bond):
    """Copy of ``period`` with the YY sign flipped on every XY gate of ``bond``."""
    if period.boundary != Boundary.PBC:
        raise ValueError("flux insertion needs a PBC circuit")
    sites = _bond_sites(period.n_qubits, bond)
    ops = list(period.ops)
    for k in _find_exchange(period, sites):
        ops[k] = replace(ops[k], yy_sign=-ops[k].yy_sign)
    return Circuit(period.n_qubits, ops, period.boundary)


def _check_spec(spec):
    if spec.model != Model.FSPT:
        raise ValueError("the flux echo is defined for the FSPT drive")
    if spec.boundary != Boundary.PBC:
        raise ValueError("the flux echo needs a PBC drive")


def exact_echo(spec, dis, flux, t_max):
    """``tr(U_F(t)^dag U(t)) / 2^L`` for ``t = 0..t_max`` (dense unitaries)."""
    _check_spec(spec)
    period = build_fspt_period(spec, dis)
    p = circuit_unitary(period)
    pf = circuit_unitary(flux_flip_circuit(period, flux.bond))
    d = p.shape[0]
    u = np.eye(d, dtype=complex)
    uf = np.eye(d, dtype=complex)
    vals = [1.0 + 0j]
    for _ in range(t_max):
        u = p @ u
        uf = pf @ uf
        vals.append(np.vdot(uf, u) / d)
    return EchoSeries(np.arange(t_max + 1), np.array(vals), np.zeros(t_max + 1, dtype=complex))


def ancilla_period(period, bond, ancilla):
    """Period on ``L+1`` qubits where the ancilla controls the YY sign of ``bond``.

    The flagged XY gate is split into ``XX(J)`` and ``CNOT(a,i) YY(J) CNOT(a,i)``;
    conjugating by the CNOT maps ``Y_i -> Z_a Y_i``.
    """
    sites = _bond_sites(period.n_qubits, bond)
    flagged = set(_find_exchange(period, sites))
    ops = []
    for k, op in enumerate(period.ops):
        if k not in flagged:
            ops.append(op)
            continue
        i, j = op.sites
        ops += [
            GateOp("xx", (i, j), op.angle),
            GateOp("cnot", (ancilla, i)),
            GateOp("yy", (i, j), op.yy_sign * op.angle),
            GateOp("cnot", (ancilla, i)),
        ]
    return Circuit(period.n_qubits + 1, ops, period.boundary)


def _plus_ancilla(states):
    # ancilla is the most significant qubit: |+> (x) |psi>
    return np.concatenate([states, states], axis=0) / np.sqrt(2)


def _ancilla_readout(states, ancilla):
    x = local_expectations(states, ancilla, "x")
    y = local_expectations(states, ancilla, "y")
    # <X_a> = Re tr(U^dag U_F)/d, <Y_a> = Im tr(U^dag U_F)/d, and Z = conj of that
    return x - 1j * y


def ancilla_echo(spec, dis, flux, noise, n_shots, t_max, rng, exhaustive=False):
    """Interferometric estimate of the echo from ancilla ``<X>`` and ``<Y>``.

    The system starts in random product states of the alternating protocol;
    ``exhaustive=True`` enumerates all ``2^L`` sign patterns instead, which
    reproduces the trace exactly in the noiseless case.
    """
    _check_spec(spec)
    L = spec.n_qubits
    period = build_fspt_period(spec, dis)
    anc = flux.ancilla_site(L)
    circ = ancilla_period(period, flux.bond, anc)
    protocol = ShotProtocol(max(1, n_shots), InitScheme.ALTERNATING)
    if exhaustive:
        states = _exhaustive_states(protocol, L)
    else:
        states, _ = sample_initial(protocol, rng, L, n_shots)
    m = states.shape[1]
    psi = _plus_ancilla(states)

    drift = noise.coherent if noise is not None else None
    if drift is not None and drift.delta_f_rms == 0:
        drift = None
    depol = noise is not None and (noise.p_1q > 0 or noise.p_2q > 0)
    profile = drift.sample_profile(L + 1, m, rng) if drift is not None else None
    zsigns = z_sign_table(L + 1) if drift is not None else None

    samples = [_ancilla_readout(psi, anc)]
    for t in range(t_max):
        psi = apply_circuit_noisy(psi, circ, noise, rng) if depol else apply_circuit(psi, circ)
        if drift is not None:
            # one drift step per brickwork layer
            psi = coherent_z_layer(psi, drift, profile, 2 * t, zsigns)
            psi = coherent_z_layer(psi, drift, profile, 2 * t + 1, zsigns)
        samples.append(_ancilla_readout(psi, anc))
    s = np.array(samples)
    if m > 1 and not exhaustive:
        err = (s.real.std(axis=1, ddof=1) + 1j * s.imag.std(axis=1, ddof=1)) / np.sqrt(m)
    else:
        err = np.zeros(t_max + 1, dtype=complex)
    return EchoSeries(np.arange(t_max + 1), s.mean(axis=1), err)


def _exhaustive_states(protocol, n_qubits):
    class _Counter:
        # feeds every sign pattern through sample_initial's draw
        def __init__(self, patterns):
            self.patterns = patterns

        def integers(self, lo, hi, size):
            return self.patterns

    patterns = np.array(list(itertools.product((0, 1), repeat=n_qubits)))
    states, _ = sample_initial(protocol, _Counter(patterns), n_qubits, len(patterns))
    return states


def echo_ensemble(spec, flux, t_max, n_realizations, master_seed=0):
    """Exact echo for ``n_realizations`` disorder draws; array ``(R, t_max+1)``."""
    out = []
    for r in range(n_realizations):
        dis = sample_disorder(spec, rng_for(master_seed, "flux-echo", "disorder", r))
        out.append(exact_echo(spec, dis, flux, t_max).values)
    return np.array(out)


def classify_echo(series, start=None):
    """Long-time metrics of a disorder ensemble of echo series.

    ``series`` is ``(R, T)`` (or one series). Over the final quarter of the
    times (or from ``start``): the ensemble-mean echo, the mean modulus and
    the staggered mean ``(-1)^t Z``. The default window has even length so
    a constant series has zero staggered mean. Real parts are reported for the first
    and last, which is where the phase table lives.
    """
    z = np.atleast_2d(np.asarray(series))
    T = z.shape[1]
    if T == 0 or z.shape[0] == 0:
        raise ValueError("empty series")
    if start is None:
        n = max(2, (T // 4) // 2 * 2) if T >= 2 else 1
        start = T - n
    t = np.arange(start, T)
    mean = z.mean(axis=0)[start:]
    sign = 1 - 2 * (t % 2)
    return {
        "mean": float(np.mean(mean.real)),
        "mean_abs": float(np.mean(np.abs(z[:, start:]))),
        "staggered": float(np.mean(sign * mean.real)),
        "window": [int(start), int(T - 1)],
        "n_realizations": int(z.shape[0]),
    }
