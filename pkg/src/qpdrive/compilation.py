"""Compilation to the trapped-ion native gate set and a small text format.

Native operations are CZ (or the phase-insensitive MS gate
``exp(-i pi/4 ZZ)``), rotations about axes in the xy-plane (``r1q``) and
virtual z rotations (``rz``). Every two-qubit drive gate costs exactly two
entanglers:

* ``ZZ(t) = H_b . CZ . Rx_b(t) . CZ . H_b``  (CZ conjugates ``X_b`` to ``Z_a X_b``)
* ``XX`` and ``YY`` follow by single-qubit basis changes of ``ZZ``
* ``XX(t) YY(+-t)`` uses ``CNOT (Rx_a(t) Rz_b(+-t)) CNOT = XX(t) ZZ(+-t)`` and a
  basis change taking ``Z`` to ``Y``

Single-qubit pieces between entanglers are merged and re-expressed as
``rz . r1q(y) . rz`` so all z rotations stay virtual.
"""

from dataclasses import dataclass
from enum import Enum
import hashlib
import re

import numpy as np

from . import gates
from .core import Circuit, GateOp

ZERO_ANGLE = 1e-14


class Entangler(str, Enum):
    CZ = "cz"
    MS = "ms"


@dataclass(frozen=True)
class NativeGateSet:
    entangler: Entangler = Entangler.CZ

    def __post_init__(self):
        object.__setattr__(self, "entangler", Entangler(self.entangler))

    def allows(self, op):
        if op.kind == "rz":
            return True
        if op.kind == "r1q":
            return abs(op.axis[2]) < 1e-12
        return op.kind == self.entangler.value


def _rx(t):
    return gates.r1q((1, 0, 0), t)


def _rz(t):
    return gates.rz(t)


def _skeleton_2q(op):
    """Sequence of ``("1q", which, u)`` and ``("ent",)`` items in time order.

    ``which`` is 0 for the first site of the op, 1 for the second.
    """
    k, t = op.kind, op.angle
    h = gates.HADAMARD
    if k in ("zz", "xx", "yy"):
        # basis change W with W^dag Z W = axis
        w = {"zz": gates.I2, "xx": h, "yy": gates.HADAMARD @ np.diag([1, -1j])}[k]
        wd = w.conj().T
        return [
            ("1q", 0, w), ("1q", 1, h @ w),
            ("ent",), ("1q", 1, _rx(t)), ("ent",),
            ("1q", 1, wd @ h), ("1q", 0, wd),
        ]
    if k == "xy":
        # V = Rx(pi/2) maps Z -> Y and fixes X; the sign rides on the ZZ angle
        v = _rx(np.pi / 2)
        vd = v.conj().T
        return [
            ("1q", 0, vd), ("1q", 1, h @ vd),  # CNOT(a->b) = H_b CZ H_b
            ("ent",), ("1q", 1, h),
            ("1q", 0, _rx(t)), ("1q", 1, _rz(op.yy_sign * t)),
            ("1q", 1, h), ("ent",),
            ("1q", 1, v @ h), ("1q", 0, v),
        ]
    if k == "cnot":
        return [("1q", 1, h), ("ent",), ("1q", 1, h)]
    if k == "cz":
        return [("ent",)]
    if k == "ms":
        # exp(-i pi/4 ZZ) = CZ . Rz(pi/2) x Rz(pi/2) up to phase
        return [("ent",), ("1q", 0, _rz(np.pi / 2)), ("1q", 1, _rz(np.pi / 2))]
    raise ValueError(f"cannot compile gate kind {k!r}")


def zyz_angles(u):
    """``(a, b, c)`` with ``u = e^{i g} Rz(a) Ry(b) Rz(c)``."""
    u = np.asarray(u, dtype=complex)
    v = u / np.sqrt(np.linalg.det(u))
    b = 2 * np.arctan2(abs(v[1, 0]), abs(v[0, 0]))
    s = np.angle(v[1, 1]) if abs(v[1, 1]) > 1e-12 else 0.0  # (a + c) / 2
    d = np.angle(v[1, 0]) if abs(v[1, 0]) > 1e-12 else 0.0  # (a - c) / 2
    return s + d, float(b), s - d


def one_qubit_natives(u, site):
    """``rz(c), r1q(y, b), rz(a)`` in time order, zero rotations dropped."""
    a, b, c = zyz_angles(u)
    out = []
    if abs(c) > ZERO_ANGLE:
        out.append(GateOp("rz", (site,), float(c)))
    if abs(b) > ZERO_ANGLE:
        out.append(GateOp("r1q", (site,), float(b), axis=(0.0, 1.0, 0.0)))
    if abs(a) > ZERO_ANGLE:
        out.append(GateOp("rz", (site,), float(a)))
    return out


def _entangler_ops(gate_set, i, j):
    if gate_set.entangler == Entangler.CZ:
        return [GateOp("cz", (i, j))]
    # CZ = MS . Rz(-pi/2) x Rz(-pi/2) up to phase
    return [GateOp("ms", (i, j)), GateOp("rz", (i,), -np.pi / 2), GateOp("rz", (j,), -np.pi / 2)]


def compile_2q(op, gate_set=NativeGateSet()):
    """Native sequence for one two-qubit gate; zero-angle rotations emit nothing."""
    if op.arity != 2:
        raise ValueError("compile_2q needs a two-qubit gate")
    if op.kind in ("xx", "yy", "zz", "xy") and abs(op.angle) < ZERO_ANGLE:
        return []
    sites = op.sites
    pending = [gates.I2.copy(), gates.I2.copy()]
    out = []

    def flush():
        for w in (0, 1):
            out.extend(one_qubit_natives(pending[w], sites[w]))
            pending[w] = gates.I2.copy()

    for item in _skeleton_2q(op):
        if item[0] == "ent":
            flush()
            out.extend(_entangler_ops(gate_set, *sites))
        else:
            _, w, u = item
            pending[w] = u @ pending[w]
    flush()
    return out


def compile_1q(op):
    if op.kind == "rz":
        return [op] if abs(op.angle) > ZERO_ANGLE else []
    return one_qubit_natives(op.matrix(), op.sites[0])


def fold_virtual_z(ops):
    """Merge runs of ``rz`` on a qubit until another op touches it."""
    pending = {}
    out = []

    def flush(site):
        t = pending.pop(site, 0.0)
        if abs(t) > ZERO_ANGLE:
            out.append(GateOp("rz", (site,), t))

    for op in ops:
        if op.kind == "rz":
            s = op.sites[0]
            pending[s] = pending.get(s, 0.0) + op.angle
            continue
        for s in op.sites:
            flush(s)
        out.append(op)
    for s in sorted(pending):
        flush(s)
    return out


def compile_circuit(circuit, gate_set=NativeGateSet()):
    """Native circuit and ``{"n_1q", "n_2q"}`` gate counts (virtual z counted in ``n_1q``)."""
    ops = []
    for op in circuit.ops:
        ops.extend(compile_1q(op) if op.arity == 1 else compile_2q(op, gate_set))
    ops = fold_virtual_z(ops)
    native = Circuit(circuit.n_qubits, ops, circuit.boundary)
    n1, n2 = native.count()
    n_virtual = sum(1 for op in ops if op.kind == "rz")
    return native, {"n_1q": n1, "n_2q": n2, "n_virtual_z": n_virtual}


def phase_aligned_distance(u, v):
    """``max|U - e^{i p} V|`` at the phase ``p = arg tr(V^dag U)``.

    That phase is optimal in the Frobenius norm, so the value is an upper
    bound on the max-norm minimum over ``p``.
    """
    u = np.asarray(u)
    v = np.asarray(v)
    ov = np.vdot(v, u)
    phase = ov / abs(ov) if abs(ov) > 0 else 1.0
    return float(np.abs(u - phase * v).max())


# ----------------------------------------------------------------- text format

_FMT = "%.12g"
_HEADER = "// qpdrive circuit v1"
STRICT_KINDS = ("rz", "r1q", "cz")


def _fmt(x):
    return _FMT % float(x)


def _op_line(op):
    qs = ",".join(f"q[{s}]" for s in op.sites)
    if op.kind == "r1q":
        args = [op.angle, *op.axis]
    elif op.kind in ("rz", "xx", "yy", "zz"):
        args = [op.angle]
    elif op.kind == "xy":
        args = [op.angle, op.yy_sign]
    else:
        args = []
    head = op.kind + ("(" + ",".join(_fmt(a) for a in args) + ")" if args else "")
    return f"{head} {qs}"


def blob_hash(body):
    """Git-style blob SHA-1 of ``body``."""
    data = body.encode("utf-8")
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def emit_text(circuit, model="", seed="", strict=False):
    """Deterministic text form: ``//`` header, then one op per line (LF endings)."""
    lines = []
    for op in circuit.ops:
        if strict and op.kind not in STRICT_KINDS:
            raise ValueError(f"gate {op.kind!r} not allowed in strict mode")
        lines.append(_op_line(op))
    body = "".join(line + "\n" for line in lines)
    header = [
        _HEADER,
        f"// L={circuit.n_qubits}",
        f"// boundary={circuit.boundary.value}",
        f"// model={model}",
        f"// seed={seed}",
        f"// sha1={blob_hash(body)}",
    ]
    return "".join(h + "\n" for h in header) + body


_LINE = re.compile(r"^([a-z0-9]+)(?:\(([^)]*)\))?\s+(q\[\d+\](?:,q\[\d+\])*)$")


def parse_text(text, strict=False):
    """Inverse of ``emit_text``; returns ``(circuit, header_dict)``. Checks the hash."""
    header = {}
    ops = []
    body_lines = []
    for raw in text.split("\n"):
        if not raw:
            continue
        if raw.startswith("//"):
            key, sep, val = raw[2:].strip().partition("=")
            if sep:
                header[key] = val
            continue
        m = _LINE.match(raw)
        if not m:
            raise ValueError(f"cannot parse line {raw!r}")
        kind, args, qs = m.groups()
        if strict and kind not in STRICT_KINDS:
            raise ValueError(f"gate {kind!r} not allowed in strict mode")
        sites = tuple(int(q) for q in re.findall(r"\d+", qs))
        vals = [float(a) for a in args.split(",")] if args else []
        if kind == "r1q":
            ops.append(GateOp(kind, sites, vals[0], axis=tuple(vals[1:4])))
        elif kind == "xy":
            ops.append(GateOp(kind, sites, vals[0], yy_sign=int(vals[1])))
        elif vals:
            ops.append(GateOp(kind, sites, vals[0]))
        else:
            ops.append(GateOp(kind, sites))
        body_lines.append(raw)
    if "L" not in header:
        raise ValueError("missing L in header")
    body = "".join(line + "\n" for line in body_lines)
    if "sha1" in header and header["sha1"] != blob_hash(body):
        raise ValueError("content hash mismatch")
    circuit = Circuit(int(header["L"]), ops, header.get("boundary", "OBC"))
    return circuit, header
