"""Long-time EDSPT evolution through the unitary recursion and heating times.

``U_{n+1} = U_{n-1} U_n`` reaches ``F_n`` layers with ``n`` dense products,
so Fibonacci times far beyond direct layer-by-layer evolution are cheap.
Rounding errors grow like ``phi^n`` under the recursion, so the checkpoint
unitaries are re-projected onto the unitary group whenever their unitarity
error passes a tolerance.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .core import Boundary, circuit_unitary, unitarity_error
from .drives import DriveSpec, Model, build_edspt_layers, fibonacci_numbers, sample_disorder
from .observables import trace_correlator
from .seeding import rng_for

MAX_FIB_INDEX = 90
REUNITARIZE_TOL = 1e-12


@dataclass
class HeatingSweep:
    J_values: list
    L: int = 8
    n_max: int = 40
    n_realizations: int = 100
    epsilon: float = 0.02
    model: Model = Model.EDSPT
    disorder_scale: float = 4 * np.pi
    master_seed: int = 0
    edge_site: int = 0

    def __post_init__(self):
        self.model = Model(self.model)
        if not self.J_values:
            raise ValueError("J_values must not be empty")
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.L > 12:
            raise ValueError("L must be <= 12 for dense unitaries")
        if not 1 <= self.n_max <= MAX_FIB_INDEX:
            raise ValueError(f"n_max must lie in [1, {MAX_FIB_INDEX}]")
        if self.n_realizations < 1:
            raise ValueError("n_realizations must be >= 1")

    def spec(self, J):
        return DriveSpec(model=self.model, n_qubits=self.L, J=float(J), disorder_scale=self.disorder_scale)


def polar_unitary(u, tol=1e-15, max_iter=8):
    """Closest unitary to a nearly unitary ``u`` (polar factor).

    Newton-Schulz iteration ``X <- X (3 - X^dag X) / 2``; converges
    quadratically while ``|X^dag X - 1| < 1``.
    """
    eye = np.eye(u.shape[0])
    x = u
    for _ in range(max_iter):
        g = x.conj().T @ x
        err = np.abs(g - eye).max()
        if err >= 1:
            raise ValueError("matrix too far from unitary for the polar iteration")
        if err < tol:
            break
        x = x @ (3 * eye - g) / 2
    return x


def fibonacci_unitaries(spec, dis, n_max, tol=REUNITARIZE_TOL):
    """Yields ``(n, U_n)`` for ``n = 1..n_max``, with ``U_1 = U_x`` and ``U_2 = U_z U_x``."""
    if n_max > MAX_FIB_INDEX:
        raise ValueError(f"checkpoints beyond n={MAX_FIB_INDEX} are not supported")
    ux, uz = build_edspt_layers(spec, dis)
    prev = circuit_unitary(ux)
    yield 1, prev
    if n_max < 2:
        return
    cur = circuit_unitary(uz) @ prev
    yield 2, cur
    for n in range(3, n_max + 1):
        prev, cur = cur, prev @ cur
        if unitarity_error(cur) > tol:
            cur = polar_unitary(cur)
        yield n, cur


def realization_series(spec, dis, n_max, site=0):
    """Edge ``C_z(F_n)`` for ``n = 1..n_max`` of one disorder draw."""
    return np.array([trace_correlator(u, site, "z") for _, u in fibonacci_unitaries(spec, dis, n_max)])


@dataclass
class EdgeSeries:
    J: float
    n: np.ndarray
    fib: list  # F_n as exact ints
    avg_abs: np.ndarray
    stderr: np.ndarray
    n_realizations: int
    raw: np.ndarray = field(default=None, repr=False)  # (R, n_max) signed values

    @property
    def delta(self):
        return abs(self.J - np.pi) / np.pi


def edge_series(sweep, J, map_fn=map, seeds=None):
    """Disorder-averaged ``|C_z(edge, F_n)|`` for one ``J``.

    ``map_fn`` lets the caller run realizations on an executor; results
    come back in realization order. ``seeds`` are the realization labels
    (default ``0..n_realizations-1``).
    """
    spec = sweep.spec(J)

    def one(r):
        dis = sample_disorder(spec, rng_for(sweep.master_seed, "heating", "disorder", r))
        return realization_series(spec, dis, sweep.n_max, sweep.edge_site)

    seeds = range(sweep.n_realizations) if seeds is None else seeds
    raw = np.array(list(map_fn(one, seeds)))
    a = np.abs(raw)
    err = a.std(axis=0, ddof=1) / np.sqrt(len(a)) if len(a) > 1 else np.full(a.shape[1], np.nan)
    n = np.arange(1, sweep.n_max + 1)
    return EdgeSeries(float(J), n, fibonacci_numbers(sweep.n_max), a.mean(axis=0), err, len(a), raw)


def heating_time(series, epsilon):
    """First ``F_n`` where the averaged ``|C_z|`` drops below ``epsilon``; ``inf`` if never."""
    for f, v in zip(series.fib, series.avg_abs):
        if v < epsilon:
            return f
    return math.inf


def superpolynomial_check(deltas, t_h):
    """Slopes of ``log t_h`` vs ``log(1/delta)`` on consecutive segments.

    Sorted by increasing ``1/delta``. Returns ``(non_decreasing, slopes)``.
    """
    order = np.argsort(1 / np.asarray(deltas, dtype=float))
    x = np.log(1 / np.asarray(deltas, dtype=float)[order])
    t = np.asarray(t_h, dtype=float)[order]
    non_decreasing = bool(np.all(np.diff(t) >= 0))
    y = np.log(t)
    slopes = list(np.diff(y) / np.diff(x))
    return non_decreasing, [float(s) for s in slopes]


def series_rows(series):
    return [
        {"J": repr(series.J), "delta": repr(series.delta), "n": int(n), "F_n": str(f),
         "avg_abs_Cz": repr(float(v)), "stderr": repr(float(e)), "n_realizations": series.n_realizations}
        for n, f, v, e in zip(series.n, series.fib, series.avg_abs, series.stderr)
    ]


def summary_row(series, epsilon):
    t = heating_time(series, epsilon)
    return {"J": repr(series.J), "delta": repr(series.delta), "t_h_label": "inf" if math.isinf(t) else str(t)}
