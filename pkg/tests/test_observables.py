import itertools

import numpy as np
import pytest

from qpdrive.drives import DriveSpec, Model, sample_disorder
from qpdrive.noise import NoiseModel
from qpdrive.observables import (InitScheme, ShotProtocol, autocorrelator, bulk_average, ideal_autocorrelators,
                                 local_expectations, record_rows, sample_initial, staggered_amplitude,
                                 staggered_estimate)


class AllPatterns:
    """Stand-in generator whose sign draw enumerates every pattern."""

    def __init__(self, n):
        self.p = np.array(list(itertools.product((0, 1), repeat=n)))

    def integers(self, lo, hi, size):
        return self.p


def test_initial_states(rng):
    psi, signs = sample_initial(ShotProtocol(1, "all_z"), AllPatterns(3), 3)
    assert np.allclose(psi, np.eye(8)[:, 0]) and (signs == 1).all()
    proto = ShotProtocol(20)
    states, signs = sample_initial(proto, rng, 10, 20)
    assert proto.measure_axes(10) == ["z", "x"] * 5
    for site in range(10):
        e = local_expectations(states, site, proto.axis(site))
        assert np.allclose(e, signs[:, site])


@pytest.mark.parametrize("model,J", [(Model.FSPT, 0.87 * np.pi), (Model.EDSPT, 0.93 * np.pi)])
def test_exhaustive_shots_match_trace_formula(model, J, rng):
    L = 4
    spec = DriveSpec(model, L, J=J)
    dis = sample_disorder(spec, rng)
    times = [0, 1, 2, 3, 5, 8] if model == Model.EDSPT else list(range(7))
    proto = ShotProtocol(2**L)
    recs = autocorrelator(spec, dis, None, proto, times, AllPatterns(L))
    exact = ideal_autocorrelators(spec, dis, [(r.site, r.axis) for r in recs], times)
    for r in recs:
        assert np.abs(r.values - exact[(r.site, r.axis)]).max() < 1e-10
        assert r.values[0] == pytest.approx(1.0, abs=1e-15)


def test_trivial_drive_gives_unit_correlators(rng):
    spec = DriveSpec(Model.FSPT, 4, J=0.0, disorder_scale=0.0)
    recs = autocorrelator(spec, sample_disorder(spec), None, ShotProtocol(5), range(6), rng)
    for r in recs:
        assert np.allclose(r.values, 1)


def test_monte_carlo_is_unbiased(rng):
    spec = DriveSpec(Model.FSPT, 3, J=0.8 * np.pi)
    dis = sample_disorder(spec, rng)
    times = [0, 1, 2, 3, 4]
    recs = autocorrelator(spec, dis, None, ShotProtocol(10_000), times, rng)
    exact = ideal_autocorrelators(spec, dis, [(r.site, r.axis) for r in recs], times)
    for r in recs:
        assert (np.abs(r.values - exact[(r.site, r.axis)])[1:] <= 4 * r.stderr[1:] + 1e-12).all()


def test_projective_reads_are_unbiased(rng):
    spec = DriveSpec(Model.FSPT, 3, J=0.8 * np.pi)
    dis = sample_disorder(spec, rng)
    recs = autocorrelator(spec, dis, None, ShotProtocol(20_000, projective=True), [0, 3], rng)
    exact = ideal_autocorrelators(spec, dis, [(0, "z")], [0, 3])[(0, "z")]
    assert set(np.unique(recs[0].shot_values)) <= {-1.0, 1.0}
    assert abs(recs[0].values[1] - exact[1]) < 4 * recs[0].stderr[1]


def test_noise_contracts_correlators():
    spec = DriveSpec(Model.FSPT, 6, J=0.9 * np.pi)
    t = list(range(11, 21))
    clean, noisy = [], []
    for r in range(4):
        dis = sample_disorder(spec, np.random.default_rng(r))
        clean.append(autocorrelator(spec, dis, None, ShotProtocol(200), t, np.random.default_rng(100 + r), [0])[0])
        noisy.append(autocorrelator(spec, dis, NoiseModel(0.0, 0.03), ShotProtocol(200), t,
                                    np.random.default_rng(100 + r), [0])[0])
    a = abs(np.mean([staggered_estimate(c, t)[0] for c in clean]))
    b, err = np.mean([staggered_estimate(c, t) for c in noisy], axis=0)
    assert abs(b) <= a + 3 * err


def test_staggered_and_bulk_helpers(rng):
    assert staggered_amplitude([1, -1, 1, -1], [0, 1, 2, 3]) == 1.0
    spec = DriveSpec(Model.FSPT, 4)
    recs = autocorrelator(spec, sample_disorder(spec), None, ShotProtocol(4), [0, 1, 2], rng)
    one = bulk_average(recs, [2])
    assert np.array_equal(one.values, recs[2].values)
    est, err = staggered_estimate(recs[0], [1, 2])
    assert est == pytest.approx(np.mean([-recs[0].values[1], recs[0].values[2]]))
    rows = record_rows(spec, recs)
    assert len(rows) == 12 and rows[0]["model"] == "FSPT"
    with pytest.raises(ValueError):
        autocorrelator(spec, sample_disorder(spec), None, ShotProtocol(4), [3, 1], rng)
    with pytest.raises(ValueError):
        ShotProtocol(0)
    assert InitScheme("all_x") == InitScheme.ALL_X
