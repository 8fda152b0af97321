import math

import numpy as np

from qpdrive import magnus as mg


def test_words_and_matrix():
    words = dict(zip(mg.LETTERS, mg.inflation_words()))
    assert words["A"] == ("B_y", "A_z", "B")
    assert words["A_x"] == ("B_z", "A_y", "B_x")
    m = mg.recursion_matrix()
    assert np.array_equal(m, mg.REFERENCE_M)
    assert list(m[0]) == [0, 1, 0, 0, 0, 1, 1, 0]
    assert all(m[a].sum() == len(w) for a, w in enumerate(mg.inflation_words()))


def test_spectrum():
    m = mg.recursion_matrix().astype(float)
    assert abs(np.linalg.det(m - mg.PHI**3 * np.eye(8))) < 1e-10
    rep = mg.algebra_report(20)
    assert rep["eigenvalue_error"] < 1e-10 and rep["eigenvector_error"] < 1e-10


def test_symmetry_group():
    gx, gz = mg.symmetry_generators()
    eye = np.eye(8, dtype=int)
    assert np.array_equal(gx, mg.REFERENCE_GX) and np.array_equal(gz, mg.REFERENCE_GZ)
    assert np.array_equal(gx @ gx, eye) and np.array_equal(gz @ gz, eye)
    assert np.array_equal(gx @ gz, gz @ gx)
    m = mg.recursion_matrix()
    assert np.array_equal(m @ gx, gx @ m) and np.array_equal(m @ gz, gz @ m)
    a, ax = mg.LETTERS.index("A"), mg.LETTERS.index("A_x")
    assert gx[a, ax] == 1 and gx[ax, a] == 1
    ay = mg.LETTERS.index("A_y")
    assert (gx @ gz)[a, ay] == 1


def test_first_order_coefficients():
    assert list(mg.first_order_coefficients(0)) == [1, 0, 0, 0, 0, 0, 0, 0]
    assert list(mg.first_order_coefficients(1)) == [0, 1, 0, 0, 0, 1, 1, 0]
    # asymmetric part decays like (|lambda_2| / phi^3)^n
    ev = sorted(np.abs(np.linalg.eigvals(mg.recursion_matrix().astype(float))), reverse=True)
    ratio = ev[1] / ev[0]
    asym = []
    for n in (10, 14):
        c = np.array(mg.first_order_coefficients(n), dtype=float)
        asym.append(np.linalg.norm(c - mg.symmetrize_vector(c)) / np.linalg.norm(c))
    assert asym[1] / asym[0] <= ratio**4 * 1.01


def test_second_order_growth_and_skew():
    hist = mg.coefficient_history(20)
    assert not hist[0][1].any()
    assert np.allclose(hist[1][1], mg._bch_source(hist[0][0]))
    for n, (_, C) in enumerate(hist):
        assert np.array_equal(C, -C.T)
    norms = [np.linalg.norm(C) / mg.PHI ** (3 * n) for n, (_, C) in enumerate(hist)]
    assert max(norms[1:]) < 1


def test_dressing_and_effective_hamiltonian():
    v = mg.dressing_coefficients()
    s5 = math.sqrt(5)
    assert np.allclose(v, [-(2 + s5) / 4, 0, -s5 / 4, 0, 1 / 4, 0, 3 / 4, -1])
    for c in (0.0, 0.3, -1.2):
        w = mg.dressing_coefficients(c)
        assert abs(w[7] - w[1] + 1) < 1e-15
    hist = mg.asymmetry_history(20)
    assert hist[-1]["dressed"] < 1e-10 < hist[-1]["bare"]
    d = mg.effective_hamiltonian()
    assert d.is_symmetric()
    assert np.allclose(d.quadratic, -d.quadratic.T)
    b = mg.LETTERS.index("B")
    assert abs(d.linear[b] - 1 / (4 * s5)) < 1e-15
    c, C = mg.coefficient_history(20)[-1]
    scale = mg.PHI**60
    Cd = mg.dressed_quadratic(c, C, mg.dressing_coefficients())
    assert np.abs(mg.symmetrize_matrix(Cd) / scale - d.quadratic).max() < 1e-10
    assert np.abs(c / scale - d.linear).max() < 1e-10


def test_numeric_validation_scaling():
    rep = mg.numeric_validate(4, (0.01, 0.02, 0.05, 0.1), 2, np.random.default_rng(0))
    assert abs(rep["slope"] - 3.0) < 0.3
    dressed = [r["dressed"] for r in rep["symmetry"]]
    assert dressed[0] > dressed[1] > dressed[2]


def test_zero_delta_is_pauli_string():
    strings = mg.pauli_strings(3)
    z = np.zeros((8, 8), dtype=complex)
    u = mg.word_unitaries(mg.letter_matrices(z, z, strings), 2)[0]
    assert np.allclose(u, np.eye(8))
    s = mg.fibonacci_pair_sequence(strings["x"], strings["z"], z, z, 8)
    for m in s:
        assert min(abs(abs(np.vdot(p, m)) / 8 - 1) for p in strings.values()) < 1e-12
