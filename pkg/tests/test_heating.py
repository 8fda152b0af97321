import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from qpdrive.core import circuit_unitary, unitarity_error
from qpdrive.drives import DriveSpec, Model, build_edspt_layers, fibonacci_word, sample_disorder
from qpdrive.heating import (EdgeSeries, HeatingSweep, edge_series, fibonacci_unitaries, heating_time,
                             polar_unitary, realization_series, superpolynomial_check)
from qpdrive.observables import trace_correlator


def test_recursion_matches_word_evolution(rng):
    spec = DriveSpec(Model.EDSPT, 4, J=0.9 * np.pi)
    dis = sample_disorder(spec, rng)
    series = realization_series(spec, dis, 8)
    times = [len(fibonacci_word(n).word) for n in range(1, 9)]
    ux, uz = build_edspt_layers(spec, dis)
    m = {"x": circuit_unitary(ux), "z": circuit_unitary(uz)}
    u = np.eye(16, dtype=complex)
    word = fibonacci_word(8).word
    direct = []
    for t, c in enumerate(word, start=1):
        u = m[c] @ u
        if t in times:
            direct.append(trace_correlator(u, 0, "z"))
    assert np.abs(series - np.array(direct)).max() < 1e-10
    units = dict(fibonacci_unitaries(spec, dis, 3))
    assert np.abs(units[3] - units[1] @ units[2]).max() < 1e-12


def test_long_recursion_stays_unitary(rng):
    spec = DriveSpec(Model.EDSPT, 6, J=0.9 * np.pi)
    last = None
    for n, u in fibonacci_unitaries(spec, sample_disorder(spec, rng), 40):
        last = u
    assert unitarity_error(last) < 1e-8


def test_polar_unitary(rng):
    q, _ = np.linalg.qr(rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8)))
    noisy = q + 1e-6 * rng.normal(size=(8, 8))
    assert unitarity_error(polar_unitary(noisy)) < 1e-13
    with pytest.raises(ValueError):
        polar_unitary(3 * q)


def test_pi_pulses_never_heat():
    sweep = HeatingSweep([np.pi], L=4, n_max=12, n_realizations=3, disorder_scale=0.0)
    s = edge_series(sweep, np.pi)
    assert np.allclose(s.avg_abs, 1)
    assert heating_time(s, 0.02) == math.inf


def test_heating_time_edges():
    s = EdgeSeries(0.9, np.arange(1, 4), [1, 2, 3], np.array([0.01, 0.5, 0.2]), np.zeros(3), 1)
    assert heating_time(s, 0.02) == 1
    s.avg_abs = np.array([0.5, 0.3, 0.01])
    assert heating_time(s, 0.02) == 3
    assert heating_time(s, 0.001) == math.inf


def test_superpolynomial_check():
    d = [0.3, 0.2, 0.15, 0.1]
    ok, slopes = superpolynomial_check(d, [math.exp(1 / x) for x in d])
    assert ok and slopes[-1] > slopes[0]
    ok, slopes = superpolynomial_check(d, [x**-2 for x in d])
    assert ok and np.allclose(slopes, 2)


def test_sweep_validation_and_determinism():
    with pytest.raises(ValueError):
        HeatingSweep([])
    with pytest.raises(ValueError):
        HeatingSweep([1.0], n_max=91)
    sweep = HeatingSweep([0.8 * np.pi], L=4, n_max=10, n_realizations=6)
    a = edge_series(sweep, 0.8 * np.pi)
    with ThreadPoolExecutor(4) as pool:
        b = edge_series(sweep, 0.8 * np.pi, pool.map)
    assert np.array_equal(a.raw, b.raw)
    assert ((a.avg_abs >= 0) & (a.avg_abs <= 1 + 1e-12)).all()
    assert a.fib[-1] == 89
