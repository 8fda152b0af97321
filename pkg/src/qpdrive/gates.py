"""Gate matrices and angle conventions.

Every rotation in the package goes through this module:

* ``r1q(n, theta)  = exp(-i theta/2 n.sigma)``
* ``xx/yy/zz(theta) = exp(-i theta/2 sigma^a (x) sigma^a)``
* ``xy(theta)       = exp(-i theta/2 (XX + YY))``

With these conventions ``theta = pi`` turns every exchange gate into a
Pauli product (``xy(pi) = Z(x)Z``, ``xx(pi) = -i X(x)X``), which is the
fixed point of both drives.

Two-qubit matrices act on ``(site_i, site_j)`` with basis index
``2*b_i + b_j``, i.e. ``kron(a_i, b_j)``.
"""

import numpy as np

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)

PAULI = {"I": I2, "X": X, "Y": Y, "Z": Z}
AXES = {"x": np.array([1.0, 0.0, 0.0]), "y": np.array([0.0, 1.0, 0.0]), "z": np.array([0.0, 0.0, 1.0])}

CZ = np.diag([1, 1, 1, -1]).astype(complex)
CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)

# W with sigma^axis = W Z W^dagger; used to read x/y correlators in the z basis
BASIS_CHANGE = {
    "z": I2,
    "x": HADAMARD,
    "y": np.array([[1, 1], [1j, -1j]], dtype=complex) / np.sqrt(2),
}


def r1q(axis, theta):
    """Single-qubit rotation ``exp(-i theta/2 n.sigma)`` about a unit ``axis``."""
    n = np.asarray(axis, dtype=float)
    norm = np.linalg.norm(n)
    if norm == 0:
        return I2.copy()
    n = n / norm
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return c * I2 - 1j * s * (n[0] * X + n[1] * Y + n[2] * Z)


def rz(theta):
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def _pair_rotation(p, theta):
    # (p (x) p)^2 = 1, so the exponential is a cos/sin pair
    pp = np.kron(p, p)
    return np.cos(theta / 2) * np.eye(4) - 1j * np.sin(theta / 2) * pp


def xx(theta):
    return _pair_rotation(X, theta)


def yy(theta):
    return _pair_rotation(Y, theta)


def zz(theta):
    return _pair_rotation(Z, theta)


def xy(theta, yy_sign=1):
    """``exp(-i theta/2 (XX + s YY))``; ``s = -1`` is the flux-inserted bond."""
    # XX and YY commute
    return xx(theta) @ _pair_rotation(Y, yy_sign * theta)


def ms():
    """Phase-insensitive Molmer-Sorensen gate ``exp(-i pi/4 Z(x)Z)``."""
    return zz(np.pi / 2)


def is_unitary(u, atol=1e-10):
    u = np.asarray(u)
    return np.allclose(u.conj().T @ u, np.eye(u.shape[0]), atol=atol, rtol=0)
