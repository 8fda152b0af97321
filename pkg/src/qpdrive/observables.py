"""Spin autocorrelators with the random product-state shot protocol.

``C_a(r, t) = mean over shots of s_r <sigma^a_r(t)>`` where ``s_r = +-1`` is
the prepared eigenvalue of ``sigma^a_r``. Time is counted in Floquet
periods for FSPT and in layers for the EDSPT drives (so Fibonacci
checkpoints sit at ``t = F_n``).
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import gates
from .core import PauliString, apply_1q, apply_circuit, circuit_unitary, n_qubits_of
from .drives import Model, build_edspt_layers, fibonacci_numbers, fibonacci_word, fspt_layers
from .noise import apply_circuit_noisy, coherent_z_layer, z_sign_table


class InitScheme(str, Enum):
    ALTERNATING = "alternating"  # z on even sites, x on odd sites
    ALL_Z = "all_z"
    ALL_X = "all_x"


_EIGEN = {
    "z": (np.array([1, 0], dtype=complex), np.array([0, 1], dtype=complex)),
    "x": (np.array([1, 1], dtype=complex) / np.sqrt(2), np.array([1, -1], dtype=complex) / np.sqrt(2)),
    "y": (np.array([1, 1j], dtype=complex) / np.sqrt(2), np.array([1, -1j], dtype=complex) / np.sqrt(2)),
}


@dataclass
class ShotProtocol:
    """``projective=True`` replaces expectation reads by sampled +-1 outcomes."""

    n_shots: int = 100
    init_scheme: InitScheme = InitScheme.ALTERNATING
    projective: bool = False

    def __post_init__(self):
        self.init_scheme = InitScheme(self.init_scheme)
        if self.n_shots < 1:
            raise ValueError("n_shots must be >= 1")

    def axis(self, site):
        if self.init_scheme == InitScheme.ALL_Z:
            return "z"
        if self.init_scheme == InitScheme.ALL_X:
            return "x"
        return "z" if site % 2 == 0 else "x"

    def measure_axes(self, n_qubits):
        return [self.axis(s) for s in range(n_qubits)]

    def to_dict(self):
        return {"n_shots": self.n_shots, "init_scheme": self.init_scheme.value, "projective": self.projective}


@dataclass
class CorrelatorRecord:
    site: int
    axis: str
    times: np.ndarray
    values: np.ndarray
    stderr: np.ndarray
    n_shots: int
    n_labels: list = field(default=None)  # Fibonacci index per time, if any
    shot_values: np.ndarray = field(default=None, repr=False)  # (n_times, n_shots)

    def at(self, t):
        return float(self.values[list(self.times).index(t)])


def sample_initial(protocol, rng, n_qubits, n_states=None):
    """Random product state(s) and the prepared eigenvalue signs.

    Returns ``(state, signs)``; with ``n_states`` the states are the columns
    of a ``(2**L, n_states)`` array and ``signs`` has shape ``(n_states, L)``.
    """
    m = 1 if n_states is None else n_states
    signs = 1 - 2 * rng.integers(0, 2, size=(m, n_qubits))
    axes = protocol.measure_axes(n_qubits)
    out = np.empty((1 << n_qubits, m), dtype=complex)
    for k in range(m):
        psi = np.ones(1, dtype=complex)
        for site in range(n_qubits):
            v = _EIGEN[axes[site]][0 if signs[k, site] > 0 else 1]
            psi = np.kron(v, psi)
        out[:, k] = psi
    if n_states is None:
        return out[:, 0], signs[0]
    return out, signs


def local_expectations(state, site, axis):
    """``<sigma^axis_site>`` for each column (or the single state)."""
    n = n_qubits_of(state)
    p = PauliString.single(n, site, axis)
    if state.ndim == 1:
        return float(np.real(np.vdot(state, p.apply(state))))
    return np.real(np.einsum("ij,ij->j", state.conj(), p.apply(state)))


def _layer_sequence(spec, dis, t_max):
    """Per time step, the list of layer circuits applied during it."""
    if spec.model == Model.FSPT:
        first, second = fspt_layers(spec, dis)
        return [[first, second]] * t_max
    ux, uz = build_edspt_layers(spec, dis)
    layers = {"x": ux, "z": uz}
    n = 1
    while fibonacci_numbers(n)[-1] < t_max:
        n += 1
    word = fibonacci_word(n).word
    return [[layers[c]] for c in word[:t_max]]


def fibonacci_times(n_max):
    """Layer counts ``F_1..F_n_max`` of the Fibonacci checkpoints."""
    return fibonacci_numbers(n_max)


def autocorrelator(spec, dis, noise, protocol, times, rng, sites=None):
    """Shot-averaged autocorrelators at each requested time.

    All shots are evolved together as columns of one array. ``noise`` may be
    ``None``. Returns one ``CorrelatorRecord`` per site, on the axis the
    protocol prepares there.
    """
    times = [int(t) for t in times]
    if times != sorted(times) or (times and times[0] < 0):
        raise ValueError("times must be sorted and non-negative")
    L = spec.n_qubits
    sites = list(range(L)) if sites is None else list(sites)
    for s in sites:
        if not 0 <= s < L:
            raise ValueError(f"site {s} out of range")
    axes = {s: protocol.axis(s) for s in sites}
    m = protocol.n_shots
    state, signs = sample_initial(protocol, rng, L, m)

    drift = noise.coherent if noise is not None else None
    if drift is not None and drift.delta_f_rms == 0:
        drift = None
    depol = noise is not None and (noise.p_1q > 0 or noise.p_2q > 0)
    profile = drift.sample_profile(L, m, rng) if drift is not None else None
    zsigns = z_sign_table(L) if drift is not None else None

    t_max = times[-1] if times else 0
    steps = _layer_sequence(spec, dis, t_max)
    samples = {s: [] for s in sites}

    def record():
        for s in sites:
            e = local_expectations(state, s, axes[s])
            if protocol.projective:
                e = np.where(rng.random(m) < (1 + e) / 2, 1.0, -1.0)
            samples[s].append(signs[:, s] * e)

    want = set(times)
    layer_index = 0
    if 0 in want:
        record()
    for t in range(1, t_max + 1):
        for circ in steps[t - 1]:
            if depol:
                state = apply_circuit_noisy(state, circ, noise, rng)
            else:
                state = apply_circuit(state, circ)
            if drift is not None:
                state = coherent_z_layer(state, drift, profile, layer_index, zsigns)
            layer_index += 1
        if t in want:
            record()

    fib = {f: n for n, f in enumerate(fibonacci_numbers(40), start=1)} if spec.is_edspt else {}
    out = []
    for s in sites:
        arr = np.array(samples[s])  # (n_times, m)
        err = arr.std(axis=1, ddof=1) / np.sqrt(m) if m > 1 else np.full(len(times), np.nan)
        out.append(CorrelatorRecord(
            site=s, axis=axes[s], times=np.array(times), values=arr.mean(axis=1), stderr=err,
            n_shots=m, n_labels=[fib.get(t) for t in times] if fib else None, shot_values=arr,
        ))
    return out


def trace_correlator(u, site, axis="z"):
    """Infinite-temperature ``tr(sigma^a_r U^dag sigma^a_r U) / 2^L`` of a dense unitary."""
    if axis != "z":
        w = gates.BASIS_CHANGE[axis]
        # V = W_r^dag U W_r turns sigma^axis into sigma^z on both sides
        u = apply_1q(u, site, w.conj().T)
        u = apply_1q(u.T, site, w.T).T
    z = 1 - 2 * ((np.arange(u.shape[0]) >> site) & 1)
    return float(z @ (np.abs(u) ** 2) @ z / u.shape[0])


def _ideal_unitaries(spec, dis, times):
    """Yields ``(t, U(t))`` for the requested times."""
    times = [int(t) for t in times]
    L = spec.n_qubits
    if spec.model == Model.FSPT:
        first, second = fspt_layers(spec, dis)
        period = circuit_unitary(first + second)
        u = np.eye(1 << L, dtype=complex)
        t = 0
        for target in times:
            while t < target:
                u = period @ u
                t += 1
            yield t, u
        return
    ux, uz = build_edspt_layers(spec, dis)
    mats = {"x": circuit_unitary(ux), "z": circuit_unitary(uz)}
    fibs = fibonacci_numbers(90)
    if all(t in fibs for t in times):
        # recursion U_{n+1} = U_{n-1} U_n: one product per checkpoint
        by_len = {1: mats["x"], 2: mats["z"] @ mats["x"]}
        n = 2
        while fibs[n - 1] < max(times, default=0):
            by_len[fibs[n]] = by_len[fibs[n - 2]] @ by_len[fibs[n - 1]]
            n += 1
        for t in times:
            yield t, by_len[t]
        return
    n = 1
    while fibs[n - 1] < max(times, default=0):
        n += 1
    word = fibonacci_word(n).word
    u = np.eye(1 << L, dtype=complex)
    t = 0
    for target in times:
        while t < target:
            u = mats[word[t]] @ u
            t += 1
        yield t, u


def ideal_autocorrelators(spec, dis, sites_axes, times):
    """Exact (infinite-shot, noiseless) correlators; ``{(site, axis): array}``."""
    out = {key: [] for key in sites_axes}
    for t, u in _ideal_unitaries(spec, dis, times):
        for site, axis in sites_axes:
            out[(site, axis)].append(1.0 if t == 0 else trace_correlator(u, site, axis))
    return {k: np.array(v) for k, v in out.items()}


def ideal_autocorrelator(spec, dis, site, axis, times):
    return ideal_autocorrelators(spec, dis, [(site, axis)], times)[(site, axis)]


def bulk_average(records, bulk_sites=None):
    """Mean over sites; stderr combined in quadrature divided by the site count."""
    recs = [r for r in records if bulk_sites is None or r.site in set(bulk_sites)]
    if not recs:
        raise ValueError("no bulk sites selected")
    axes = {r.axis for r in recs}
    vals = np.mean([r.values for r in recs], axis=0)
    err = np.sqrt(np.sum([np.asarray(r.stderr) ** 2 for r in recs], axis=0)) / len(recs)
    return CorrelatorRecord(
        site=-1, axis=axes.pop() if len(axes) == 1 else "mixed", times=recs[0].times,
        values=vals, stderr=err, n_shots=recs[0].n_shots, n_labels=recs[0].n_labels,
    )


def edge_sites(n_qubits):
    return (0, n_qubits - 1)


def bulk_sites(n_qubits):
    return tuple(range(1, n_qubits - 1))


def staggered_amplitude(values, times):
    """``mean_t (-1)^t C(t)`` over the given times."""
    times = np.asarray(times)
    return float(np.mean((1 - 2 * (times % 2)) * np.asarray(values)))


def staggered_estimate(record, window):
    """Staggered amplitude of a shot record over ``window`` times, with its stderr.

    The staggered sum is formed per shot first, so correlations between the
    times in the window are carried into the error bar.
    """
    window = [int(t) for t in window]
    idx = [list(record.times).index(t) for t in window]
    sign = 1 - 2 * (np.array(window) % 2)
    if record.shot_values is None:
        raise ValueError("record carries no per-shot values")
    per_shot = (sign[:, None] * record.shot_values[idx]).mean(axis=0)
    m = per_shot.size
    err = per_shot.std(ddof=1) / np.sqrt(m) if m > 1 else float("nan")
    return float(per_shot.mean()), float(err)


CSV_COLUMNS = ("model", "J", "seed", "site", "axis", "t_label", "n_label", "value", "stderr")


def record_rows(spec, records):
    rows = []
    for r in records:
        for k, t in enumerate(r.times):
            n = r.n_labels[k] if r.n_labels else ""
            rows.append({
                "model": spec.model.value, "J": repr(float(spec.J)), "seed": spec.seed,
                "site": r.site, "axis": r.axis, "t_label": int(t), "n_label": "" if n is None else n,
                "value": repr(float(r.values[k])), "stderr": repr(float(r.stderr[k])),
            })
    return rows
