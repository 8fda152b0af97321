"""FSPT / EDSPT drive circuits, disorder sampling and the Fibonacci schedule."""

from dataclasses import dataclass, field, asdict
from enum import Enum
import itertools

import numpy as np

from .core import Boundary, Circuit, GateOp, apply_circuit


class Model(str, Enum):
    FSPT = "FSPT"
    EDSPT = "EDSPT"
    EDSPT_UNIAXIAL = "EDSPT_UNIAXIAL"


# ingredients of one EDSPT layer; the order is configurable
LAYER_PARTS = ("exchange", "coupling", "field")
DEFAULT_LAYER_ORDER = LAYER_PARTS
LAYER_ORDERS = tuple(itertools.permutations(LAYER_PARTS))


@dataclass
class DriveSpec:
    """One model instance.

    ``J`` and ``disorder_scale`` are in radians. ``fields`` selects whether
    the two EDSPT layers carry ``"independent"`` field draws or one
    ``"shared"`` set.
    """

    model: Model = Model.FSPT
    n_qubits: int = 10
    J: float = 0.9 * np.pi
    disorder_scale: float = 4 * np.pi
    boundary: Boundary = Boundary.OBC
    seed: int = 0
    layer_order: tuple = DEFAULT_LAYER_ORDER
    fields: str = "independent"

    def __post_init__(self):
        self.model = Model(self.model)
        self.boundary = Boundary(self.boundary)
        self.layer_order = tuple(self.layer_order)
        self.validate()

    def validate(self):
        if self.n_qubits < 2:
            raise ValueError("n_qubits must be at least 2")
        if not 0 <= self.J <= 2 * np.pi + 1e-12:
            raise ValueError(f"J={self.J} outside [0, 2pi]")
        if self.disorder_scale < 0:
            raise ValueError("disorder_scale must be non-negative")
        if self.layer_order not in LAYER_ORDERS:
            raise ValueError(f"layer_order must be a permutation of {LAYER_PARTS}")
        if self.fields not in ("independent", "shared"):
            raise ValueError("fields must be 'independent' or 'shared'")

    @property
    def is_edspt(self):
        return self.model in (Model.EDSPT, Model.EDSPT_UNIAXIAL)

    def to_dict(self):
        d = asdict(self)
        d["model"] = self.model.value
        d["boundary"] = self.boundary.value
        d["layer_order"] = list(self.layer_order)
        return d


@dataclass
class DisorderRealization:
    """Random couplings of one drive instance.

    ``K``: one angle per odd bond (EDSPT). ``B``: per-layer ``(L, 3)``
    arrays of axis*magnitude field vectors, keyed ``"x"``/``"z"`` (EDSPT).
    ``h``: per-site x-field angles (FSPT).
    """

    K: np.ndarray = None
    B: dict = field(default=None)
    h: np.ndarray = None


def bonds(n_qubits, boundary):
    """Bond index -> site pair; bond ``i`` joins ``(i, i+1 mod L)``."""
    out = [(i, i + 1) for i in range(n_qubits - 1)]
    if Boundary(boundary) == Boundary.PBC and n_qubits > 2:
        out.append((n_qubits - 1, 0))
    return out


def odd_bonds(n_qubits, boundary):
    return [b for i, b in enumerate(bonds(n_qubits, boundary)) if i % 2 == 1]


def even_bonds(n_qubits, boundary):
    return [b for i, b in enumerate(bonds(n_qubits, boundary)) if i % 2 == 0]


def _random_axes(rng, n):
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def sample_disorder(spec, rng=None):
    """Draw a disorder realization; uses ``spec.seed`` when ``rng`` is None."""
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    L, w = spec.n_qubits, spec.disorder_scale
    if spec.model == Model.FSPT:
        return DisorderRealization(h=rng.uniform(0, w, size=L))

    K = rng.uniform(0, w, size=len(odd_bonds(L, spec.boundary)))

    def draw_fields():
        mags = rng.uniform(0, w, size=L)
        if spec.model == Model.EDSPT_UNIAXIAL:
            axes = np.tile([0.0, 1.0, 0.0], (L, 1))
        else:
            axes = _random_axes(rng, L)
        return axes * mags[:, None]

    bx = draw_fields()
    bz = draw_fields() if spec.fields == "independent" else bx.copy()
    return DisorderRealization(K=K, B={"x": bx, "z": bz})


def _require(spec, *models):
    if spec.model not in models:
        raise ValueError(f"model {spec.model.value} not valid here (need {[m.value for m in models]})")


def build_fspt_period(spec, dis):
    """One Floquet period: XY(J) on even bonds, XY(J) on odd bonds (+ wrap), x fields."""
    _require(spec, Model.FSPT)
    L = spec.n_qubits
    c = Circuit(L, boundary=spec.boundary)
    for i, j in [(i, i + 1) for i in range(0, L - 1, 2)]:
        c.append(GateOp("xy", (i, j), spec.J))
    odd = [(i, i + 1) for i in range(1, L - 1, 2)]
    if spec.boundary == Boundary.PBC and L > 2:
        odd.append((L - 1, 0))
    for i, j in odd:
        c.append(GateOp("xy", (i, j), spec.J))
    for i in range(L):
        c.append(GateOp("r1q", (i,), float(dis.h[i]), axis=(1.0, 0.0, 0.0)))
    return c


def fspt_layers(spec, dis):
    """The period split into its two brickwork layers (fields ride on the second)."""
    period = build_fspt_period(spec, dis)
    n_even = len(range(0, spec.n_qubits - 1, 2))
    first = Circuit(spec.n_qubits, period.ops[:n_even], spec.boundary)
    second = Circuit(spec.n_qubits, period.ops[n_even:], spec.boundary)
    return first, second


def _edspt_layer(spec, dis, axis):
    L = spec.n_qubits
    kind = {"x": "xx", "z": "zz"}[axis]
    parts = {
        "exchange": [GateOp(kind, b, spec.J) for b in even_bonds(L, spec.boundary)],
        "coupling": [GateOp(kind, b, float(k)) for b, k in zip(odd_bonds(L, spec.boundary), dis.K)],
        "field": [],
    }
    for i, vec in enumerate(dis.B[axis]):
        mag = float(np.linalg.norm(vec))
        ax = tuple(vec / mag) if mag > 0 else (0.0, 0.0, 1.0)
        parts["field"].append(GateOp("r1q", (i,), mag, axis=ax))
    ops = [op for part in spec.layer_order for op in parts[part]]
    return Circuit(L, ops, spec.boundary)


def build_edspt_layers(spec, dis):
    """``(U_x, U_z)`` circuits."""
    _require(spec, Model.EDSPT, Model.EDSPT_UNIAXIAL)
    return _edspt_layer(spec, dis, "x"), _edspt_layer(spec, dis, "z")


@dataclass
class FibonacciSchedule:
    """Layer labels in time order and the Fibonacci checkpoint lengths."""

    n_max: int
    word: str
    fib_indices: list

    def checkpoint(self, n):
        """Layer count ``F_n`` after ``n`` recursions."""
        return self.fib_indices[n - 1]


def fibonacci_word(n_max):
    """``W_1 = x``, ``W_2 = xz``, ``W_{n+1} = W_n W_{n-1}`` (time order)."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    words = ["x", "xz"]
    while len(words) < n_max:
        words.append(words[-1] + words[-2])
    words = words[:n_max]
    return FibonacciSchedule(n_max, words[-1], [len(w) for w in words])


def fibonacci_numbers(n_max):
    """``F_1 .. F_n_max`` with ``F_1 = 1, F_2 = 2`` (exact Python ints)."""
    out = [1, 2]
    while len(out) < n_max:
        out.append(out[-1] + out[-2])
    return out[:n_max]


class ScheduleEvolution:
    """Steps a state (or a stack of columns) through the Fibonacci word.

    Iterating yields ``(layer_count, label, state)`` after each layer;
    ``checkpoints`` collects the state at every Fibonacci length reached.
    Passing ``state=None`` accumulates the unitary instead.
    """

    def __init__(self, spec, dis, schedule, up_to_layer=None, state=None, on_layer=None):
        if up_to_layer is None:
            up_to_layer = len(schedule.word)
        if up_to_layer > len(schedule.word):
            raise ValueError("up_to_layer exceeds the schedule length")
        ux, uz = build_edspt_layers(spec, dis)
        self.layers = {"x": ux, "z": uz}
        self.schedule = schedule
        self.up_to_layer = up_to_layer
        if state is None:
            state = np.eye(1 << spec.n_qubits, dtype=complex)
        self.state = state
        self.initial = state
        self.layer_count = 0
        self.on_layer = on_layer
        self._fib = {f: n for n, f in enumerate(schedule.fib_indices, start=1)}
        self.checkpoints = {}

    def __iter__(self):
        return self

    def __next__(self):
        if self.layer_count >= self.up_to_layer:
            raise StopIteration
        label = self.schedule.word[self.layer_count]
        self.state = apply_circuit(self.state, self.layers[label])
        self.layer_count += 1
        if self.on_layer is not None:
            self.state = self.on_layer(self.state, self.layer_count, label)
        n = self._fib.get(self.layer_count)
        if n is not None:
            self.checkpoints[n] = self.state
        return self.layer_count, label, self.state

    def run(self):
        for _ in self:
            pass
        return self.state


def evolve_schedule(spec, dis, schedule, up_to_layer=None, state=None, on_layer=None):
    return ScheduleEvolution(spec, dis, schedule, up_to_layer, state, on_layer)
