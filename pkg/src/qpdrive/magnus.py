"""Recursive Magnus expansion of the Fibonacci drive.

Write the two layers as ``U_x = X e^A`` and ``U_z = Z e^B`` with ``X, Z``
commuting Pauli strings and ``A, B`` small anti-Hermitian perturbations.
Three inflation steps bring the ``X, Z`` prefactors back to their original
form, leaving a substitution rule on the eight letters
``(A, B, A_x, B_x, A_y, B_y, A_z, B_z)`` where ``K_p = P K P``.

``H_n = log U_{3n}`` is expanded as ``sum_a c_a K_a + sum_ab C_ab [K_a, K_b]``;
this module iterates both coefficient sets exactly and checks the result
against dense matrix logarithms.
"""

from dataclasses import dataclass
from functools import reduce
import math

import numpy as np
import scipy.linalg

from . import gates

LETTERS = ("A", "B", "A_x", "B_x", "A_y", "B_y", "A_z", "B_z")
PHI = (1 + math.sqrt(5)) / 2

# the substitution rule for the two base letters after three inflations
BASE_WORDS = {"A": ("B_y", "A_z", "B"), "B": ("A_y", "B_x", "B_y", "A_z", "B")}

# reference matrices as tabulated for this drive
REFERENCE_M = np.array([
    [0, 1, 0, 0, 0, 1, 1, 0],
    [0, 1, 0, 1, 1, 1, 1, 0],
    [0, 0, 0, 1, 1, 0, 0, 1],
    [0, 1, 0, 1, 1, 0, 1, 1],
    [0, 1, 1, 0, 0, 1, 0, 0],
    [1, 1, 1, 0, 0, 1, 0, 1],
    [1, 0, 0, 1, 0, 0, 0, 1],
    [1, 0, 1, 1, 0, 1, 0, 1],
])
REFERENCE_GX = np.array([
    [0, 0, 1, 0, 0, 0, 0, 0],
    [0, 0, 0, 1, 0, 0, 0, 0],
    [1, 0, 0, 0, 0, 0, 0, 0],
    [0, 1, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 1, 0],
    [0, 0, 0, 0, 0, 0, 0, 1],
    [0, 0, 0, 0, 1, 0, 0, 0],
    [0, 0, 0, 0, 0, 1, 0, 0],
])
REFERENCE_GZ = np.array([
    [0, 0, 0, 0, 0, 0, 1, 0],
    [0, 0, 0, 0, 0, 0, 0, 1],
    [0, 0, 0, 0, 1, 0, 0, 0],
    [0, 0, 0, 0, 0, 1, 0, 0],
    [0, 0, 1, 0, 0, 0, 0, 0],
    [0, 0, 0, 1, 0, 0, 0, 0],
    [1, 0, 0, 0, 0, 0, 0, 0],
    [0, 1, 0, 0, 0, 0, 0, 0],
])

# Z2 x Z2 subscripts as bit pairs: x = 01, z = 10, y = x*z = 11
_SUB_BITS = {"": 0, "x": 1, "z": 2, "y": 3}
_BITS_SUB = {v: k for k, v in _SUB_BITS.items()}


def _split(letter):
    fam, _, sub = letter.partition("_")
    return fam, sub


def conjugate(letter, by):
    """Letter obtained by conjugating ``letter`` with the string ``by`` in {'', x, y, z}."""
    fam, sub = _split(letter)
    new = _BITS_SUB[_SUB_BITS[sub] ^ _SUB_BITS[by]]
    return fam + ("_" + new if new else "")


def inflation_words():
    """Substitution word of every letter, in the ``LETTERS`` order."""
    out = []
    for letter in LETTERS:
        fam, sub = _split(letter)
        out.append(tuple(conjugate(w, sub) for w in BASE_WORDS[fam]))
    return out


def recursion_matrix():
    """``M[a, b]`` = multiplicity of letter ``b`` in the word of letter ``a``."""
    m = np.zeros((8, 8), dtype=np.int64)
    for a, word in enumerate(inflation_words()):
        for w in word:
            m[a, LETTERS.index(w)] += 1
    return m


def symmetry_generators():
    """Permutation matrices of conjugation by ``X`` and by ``Z``."""
    gx = np.zeros((8, 8), dtype=np.int64)
    gz = np.zeros((8, 8), dtype=np.int64)
    for a, letter in enumerate(LETTERS):
        gx[a, LETTERS.index(conjugate(letter, "x"))] = 1
        gz[a, LETTERS.index(conjugate(letter, "z"))] = 1
    return gx, gz


def symmetrize_vector(c):
    gx, gz = symmetry_generators()
    return (c + gx @ c + gz @ c + gx @ gz @ c) / 4


def symmetrize_matrix(C):
    gx, gz = symmetry_generators()
    gy = gx @ gz
    return (C + gx @ C @ gx + gz @ C @ gz + gy @ C @ gy.T) / 4


def first_order_coefficients(n):
    """``c(n) = (M^T)^n e_1`` as exact Python integers."""
    m = recursion_matrix().astype(object)
    c = np.zeros(8, dtype=object)
    c[0] = 1
    for _ in range(n):
        c = m.T @ c
    return c


def _bch_source(c):
    """``r`` from first-order BCH of every word, weighted by ``c``."""
    r = np.zeros((8, 8))
    for a, word in enumerate(inflation_words()):
        idx = [LETTERS.index(w) for w in word]
        for p in range(len(idx)):
            for q in range(p + 1, len(idx)):
                # (c/2)[K_i, K_j] split over the two antisymmetric slots
                r[idx[p], idx[q]] += c[a] / 4
                r[idx[q], idx[p]] -= c[a] / 4
    return r


def coefficient_history(n_max):
    """``[(c(n), C(n))]`` for ``n = 0..n_max`` (floats)."""
    m = recursion_matrix().astype(float)
    c = np.zeros(8)
    c[0] = 1.0
    C = np.zeros((8, 8))
    out = [(c.copy(), C.copy())]
    for _ in range(n_max):
        C = m.T @ C @ m + _bch_source(c)
        c = m.T @ c
        out.append((c.copy(), C.copy()))
    return out


def second_order_coefficients(n):
    return coefficient_history(n)[-1][1]


def dressing_coefficients(c=0.0):
    """Frame-change vector ``v`` of ``V = exp(1/2 sum v K)``; ``c`` is free."""
    s5 = math.sqrt(5)
    k = -(1 - s5) / 2 * c
    return np.array([
        -(2 + s5) / 4 + k, c, -s5 / 4 + k, c, 1 / 4 + k, c, 3 / 4 + k, c - 1,
    ])


@dataclass
class LetterPolynomial:
    """``sum_a linear[a] K_a + sum_ab quadratic[a, b] [K_a, K_b]``."""

    linear: np.ndarray
    quadratic: np.ndarray

    def __post_init__(self):
        self.linear = np.asarray(self.linear, dtype=float)
        q = np.asarray(self.quadratic, dtype=float)
        # only the antisymmetric part survives under the commutator
        self.quadratic = (q - q.T) / 2

    def evaluate(self, letters):
        """Dense matrix for the given letter matrices ``K_1..K_8``."""
        out = sum(self.linear[a] * letters[a] for a in range(8))
        for a in range(8):
            for b in range(a + 1, 8):
                w = self.quadratic[a, b]
                if w:
                    # C_ab [K_a,K_b] + C_ba [K_b,K_a] = 2 C_ab [K_a,K_b]
                    out = out + 2 * w * (letters[a] @ letters[b] - letters[b] @ letters[a])
        return out

    def permuted(self, g):
        """Image under the letter permutation ``g`` (``K_a -> K_{g(a)}``)."""
        return LetterPolynomial(g.T @ self.linear, g.T @ self.quadratic @ g)

    def is_symmetric(self, atol=1e-12):
        gx, gz = symmetry_generators()
        return all(
            np.allclose(p.linear, self.linear, atol=atol) and np.allclose(p.quadratic, self.quadratic, atol=atol)
            for p in (self.permuted(gx), self.permuted(gz))
        )


def effective_hamiltonian():
    """``-iD`` expanded into the letter basis."""
    s5 = math.sqrt(5)
    lin = np.zeros(8)
    for a, letter in enumerate(LETTERS):
        lin[a] = (1 / s5) * (1 / 4) * (1.0 if letter.startswith("B") else 1 / PHI)
    quad = np.zeros((8, 8))
    terms = {"": (3 * s5 - 5) / 40, "x": (s5 - 5) / 40, "z": 1 / (4 * s5)}
    for sub, coef in terms.items():
        for p in ("", "x", "y", "z"):
            a = LETTERS.index(conjugate("A", p))
            b = LETTERS.index(conjugate("B" + ("_" + sub if sub else ""), p))
            # coef/4 on [K_a, K_b], spread antisymmetrically over (a,b) and (b,a)
            quad[a, b] += coef / 8
            quad[b, a] -= coef / 8
    return LetterPolynomial(lin, quad)


def predicted_polynomial(n):
    c, C = coefficient_history(n)[-1]
    return LetterPolynomial(c, C)


def dressed_quadratic(c, C, v):
    """Quadratic coefficients after the frame change ``V = exp(1/2 sum v K)``."""
    return C + (np.outer(v, c) - np.outer(c, v)) / 4


def asymmetry_history(n_max, v=None):
    """``|C(n) - C_s(n)| / phi^{3n}`` with and without dressing, ``n = 0..n_max``."""
    v = dressing_coefficients() if v is None else v
    rows = []
    for n, (c, C) in enumerate(coefficient_history(n_max)):
        scale = PHI ** (3 * n)
        Cd = dressed_quadratic(c, C, v)
        rows.append({
            "n": n,
            "bare": float(np.linalg.norm(C - symmetrize_matrix(C)) / scale),
            "dressed": float(np.linalg.norm(Cd - symmetrize_matrix(Cd)) / scale),
            "norm_C": float(np.linalg.norm(C) / scale),
        })
    return rows


# ---------------------------------------------------------------- numerics


def pauli_strings(n_qubits):
    """Uniform-axis strings ``X = prod sigma^x``, ``Z = prod sigma^z`` and ``Y = XZ``."""
    x = reduce(np.kron, [gates.X] * n_qubits)
    z = reduce(np.kron, [gates.Z] * n_qubits)
    return {"": np.eye(1 << n_qubits, dtype=complex), "x": x, "z": z, "y": x @ z}


def random_local_generator(n_qubits, delta, rng):
    """Anti-Hermitian sum of random 2-site terms with spectral norm ``delta``."""
    d = 1 << n_qubits
    h = np.zeros((d, d), dtype=complex)
    for i in range(n_qubits - 1):
        g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        term = (g + g.conj().T) / 2
        # site i is the LSB, so the pair (i, i+1) sits at kron position n-2-i
        h += np.kron(np.kron(np.eye(1 << (n_qubits - 2 - i)), term), np.eye(1 << i))
    a = 1j * h
    return delta * a / np.linalg.norm(a, 2)


def letter_matrices(a, b, strings):
    out = []
    for letter in LETTERS:
        fam, sub = _split(letter)
        p = strings[sub]
        out.append(p @ (a if fam == "A" else b) @ p)
    return out


def word_unitaries(letters, n):
    """``E_n(alpha)``: the letter exponentials after ``n`` substitutions."""
    e = [scipy.linalg.expm(k) for k in letters]
    words = [[LETTERS.index(w) for w in word] for word in inflation_words()]
    for _ in range(n):
        e = [reduce(np.matmul, [e[k] for k in word]) for word in words]
    return e


def fibonacci_pair_sequence(x, z, a, b, count):
    """``S_0 = X e^A``, ``S_1 = Z e^B``, ``S_{k+1} = S_{k-1} S_k``."""
    s = [x @ scipy.linalg.expm(a), z @ scipy.linalg.expm(b)]
    while len(s) < count:
        s.append(s[-2] @ s[-1])
    return s[:count]


def principal_log(u):
    """Matrix log with eigenphases in (-pi, pi]; raises near the branch cut."""
    w, v = scipy.linalg.schur(u, output="complex")
    phases = np.angle(np.diag(w))
    if np.max(np.abs(phases)) > np.pi - 1e-6:
        raise ValueError("eigenvalue at -1: principal log is ambiguous")
    return scipy.linalg.logm(u)


def _commutator_ratio(h, strings):
    nh = np.linalg.norm(h, 2)
    return max(np.linalg.norm(h @ strings[p] - strings[p] @ h, 2) for p in ("x", "z")) / nh


def numeric_validate(n_qubits=4, deltas=(0.01, 0.02, 0.05, 0.1), n=2, rng=None,
                     symmetry_delta=0.02, symmetry_depths=(0, 1, 2)):
    """Dense cross-check of the second-order prediction.

    Returns a dict with per-delta residuals ``|log U_{3n} - H_pred|``, the
    log-log slope of residual vs delta, and the relative generator asymmetry
    ``max_P |[H', P]| / |H'|`` of ``H' = log(V U_{2m} V^dag)`` for each depth ``m``.
    """
    if n_qubits > 8:
        raise ValueError("numeric validation is capped at 8 qubits")
    rng = np.random.default_rng(0) if rng is None else rng
    strings = pauli_strings(n_qubits)
    a0 = random_local_generator(n_qubits, 1.0, rng)
    b0 = random_local_generator(n_qubits, 1.0, rng)
    poly = predicted_polynomial(n)
    rows = []
    for delta in deltas:
        if delta > 0.3:
            raise ValueError("delta must be <= 0.3")
        letters = letter_matrices(delta * a0, delta * b0, strings)
        u = word_unitaries(letters, n)[0]
        h = principal_log(u)
        res2 = np.linalg.norm(h - poly.evaluate(letters), 2)
        res1 = np.linalg.norm(h - LetterPolynomial(poly.linear, np.zeros((8, 8))).evaluate(letters), 2)
        rows.append({"delta": delta, "residual": float(res2), "first_order_residual": float(res1),
                     "norm_H": float(np.linalg.norm(h, 2))})
    slope = float(np.polyfit(np.log([r["delta"] for r in rows]), np.log([r["residual"] for r in rows]), 1)[0])

    letters = letter_matrices(symmetry_delta * a0, symmetry_delta * b0, strings)
    v = dressing_coefficients()
    frame = scipy.linalg.expm(0.5 * sum(v[k] * letters[k] for k in range(8)))
    sym_rows = []
    for m in symmetry_depths:
        u = word_unitaries(letters, 2 * m)[0]
        try:
            bare = _commutator_ratio(principal_log(u), strings)
            dressed = _commutator_ratio(principal_log(frame @ u @ frame.conj().T), strings)
        except ValueError as exc:
            sym_rows.append({"n": m, "error": str(exc)})
            continue
        sym_rows.append({"n": m, "bare": float(bare), "dressed": float(dressed)})
    return {"n_qubits": n_qubits, "n": n, "residuals": rows, "slope": slope,
            "symmetry_delta": symmetry_delta, "symmetry": sym_rows}


def algebra_report(n_max=20):
    """Exact checks of the letter algebra, as a JSON-ready dict."""
    m = recursion_matrix()
    gx, gz = symmetry_generators()
    ev, evec = np.linalg.eig(m.astype(float))
    k = int(np.argmax(ev.real))
    lead = evec[:, k].real
    lead = lead / lead[1]
    expect = np.array([1 / PHI, 1] * 4)
    hist = asymmetry_history(n_max)
    return {
        "M_matches_reference": bool(np.array_equal(m, REFERENCE_M)),
        "gx_matches_reference": bool(np.array_equal(gx, REFERENCE_GX)),
        "gz_matches_reference": bool(np.array_equal(gz, REFERENCE_GZ)),
        "row_sums_equal_word_lengths": bool(all(m[a].sum() == len(w) for a, w in enumerate(inflation_words()))),
        "leading_eigenvalue": float(ev[k].real),
        "phi_cubed": PHI**3,
        "eigenvalue_error": float(abs(ev[k].real - PHI**3)),
        "eigenvector_error": float(np.max(np.abs(lead - expect))),
        "group_axioms": bool(
            np.array_equal(gx @ gx, np.eye(8, dtype=int)) and np.array_equal(gz @ gz, np.eye(8, dtype=int))
            and np.array_equal(gx @ gz, gz @ gx)
        ),
        "M_commutes_with_g": bool(np.array_equal(m @ gx, gx @ m) and np.array_equal(m @ gz, gz @ m)),
        "C_norm_over_phi3n": [h["norm_C"] for h in hist],
        "asymmetry": hist,
    }
