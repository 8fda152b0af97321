"""Experiment configuration: JSON schema, defaults and validation.

A config is a nested dict::

    {"experiment": "fspt-correlators",
     "drive": {"model": "FSPT", "n_qubits": 10, "J": "0.9pi", ...},
     "noise": {"p_1q": 0, "p_2q": 0, "coherent": null},
     "protocol": {"n_shots": 100, "init_scheme": "alternating", "projective": false},
     "sweep": {"J": ["0.9pi"], "seeds": [0, 1]},
     "params": {"t_max": 35, ...},
     "master_seed": 0, "threads": "auto", "output_dir": "runs/x"}

Angles (``drive.J``, ``drive.disorder_scale``, ``sweep.J``) may be radians
or strings like ``"0.95pi"``. Validation errors name the offending field.
"""

from dataclasses import dataclass, field
import copy
import hashlib
import json
import math
import os
import re

import numpy as np

from .compilation import Entangler
from .core import Boundary
from .drives import LAYER_ORDERS, DriveSpec, Model
from .noise import CoherentDrift, NoiseModel
from .observables import InitScheme, ShotProtocol

SCHEMA_VERSION = 1
THREADS_ENV = "QPDRIVE_THREADS"
EXPERIMENTS = ("fspt-correlators", "edspt-correlators", "flux-echo", "magnus-verify", "heating-sweep", "compile")

# per-experiment defaults, overridden by the file and then by flags
DRIVE_DEFAULTS = {
    "fspt-correlators": {"model": "FSPT", "n_qubits": 10, "J": 0.9 * math.pi, "boundary": "OBC"},
    "edspt-correlators": {"model": "EDSPT", "n_qubits": 10, "J": 0.95 * math.pi, "boundary": "OBC"},
    "flux-echo": {"model": "FSPT", "n_qubits": 9, "J": 0.9 * math.pi, "boundary": "PBC"},
    "magnus-verify": {"model": "EDSPT", "n_qubits": 4, "J": math.pi, "boundary": "OBC"},
    "heating-sweep": {"model": "EDSPT", "n_qubits": 8, "J": 0.9 * math.pi, "boundary": "OBC"},
    "compile": {"model": "FSPT", "n_qubits": 10, "J": 0.9 * math.pi, "boundary": "OBC"},
}
PARAM_DEFAULTS = {
    "fspt-correlators": {"t_max": 35, "n_realizations": 1, "shot_chunk": 25},
    "edspt-correlators": {"n_max": 9, "n_realizations": 1, "shot_chunk": 25},
    "flux-echo": {"t_max": 40, "n_realizations": 100, "method": "exact", "bond": 0},
    "magnus-verify": {"n_max": 20, "deltas": [0.01, 0.02, 0.05, 0.1], "n": 2},
    "heating-sweep": {"n_max": 22, "n_realizations": 100, "epsilon": 0.02, "edge_site": 0},
    "compile": {"entangler": "cz", "strict": False, "verify": True},
}
# detunings delta/pi of the default heating sweep
HEATING_DELTAS = (0.3, 0.2, 0.15, 0.1)
_ALLOWED_PARAMS = {k: set(v) for k, v in PARAM_DEFAULTS.items()}


class ConfigError(ValueError):
    """Invalid configuration; ``field`` is the dotted path of the culprit."""

    def __init__(self, field_name, message):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


_PI_RE = re.compile(r"^\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?\s*\*?\s*pi\s*$")


def parse_angle(value, field_name="angle"):
    """Radians from a number or a ``"<k>pi"`` string (``"pi"``, ``"0.95pi"``, ``"1/2pi"`` not allowed)."""
    if isinstance(value, bool):
        raise ConfigError(field_name, f"expected an angle, got {value!r}")
    if isinstance(value, (int, float, np.integer, np.floating)):
        return float(value)
    if isinstance(value, str):
        m = _PI_RE.match(value)
        if m:
            return float(m.group(1) or 1.0) * math.pi
        try:
            return float(value)
        except ValueError:
            pass
    raise ConfigError(field_name, f"cannot read {value!r} as an angle (radians or '<k>pi')")


def resolve_threads(value=None):
    """Worker count from an int, ``"auto"`` or the environment default."""
    if value is None:
        value = os.environ.get(THREADS_ENV, "1")
    if value == "auto":
        return os.cpu_count() or 1
    try:
        n = int(value)
    except (TypeError, ValueError):
        raise ConfigError("threads", f"expected a positive integer or 'auto', got {value!r}") from None
    if n < 1:
        raise ConfigError("threads", "must be >= 1")
    return n


def _merge(base, over):
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


@dataclass
class ExperimentConfig:
    experiment: str
    drive: DriveSpec
    noise: NoiseModel
    protocol: ShotProtocol
    sweep_J: list
    seeds: list
    params: dict
    master_seed: int = 0
    threads: int = 1
    output_dir: str = None
    raw: dict = field(default=None, repr=False)

    def to_dict(self):
        """Fully resolved config, JSON-ready."""
        return {
            "schema_version": SCHEMA_VERSION,
            "experiment": self.experiment,
            "drive": self.drive.to_dict(),
            "noise": self.noise.to_dict(),
            "protocol": self.protocol.to_dict(),
            "sweep": {"J": list(self.sweep_J), "seeds": list(self.seeds)},
            "params": dict(self.params),
            "master_seed": self.master_seed,
            "threads": self.threads,
            "output_dir": self.output_dir,
        }

    def semantic_hash(self):
        """SHA-256 of the resolved config minus fields with no effect on results."""
        d = self.to_dict()
        d.pop("threads")
        d.pop("output_dir")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()


def _drive(d, experiment, dense=False):
    allowed = {"model", "n_qubits", "J", "disorder_scale", "boundary", "seed", "layer_order", "fields"}
    for k in d:
        if k not in allowed:
            raise ConfigError(f"drive.{k}", "unknown field")
    kw = dict(d)
    for k in ("J", "disorder_scale"):
        if k in kw:
            kw[k] = parse_angle(kw[k], f"drive.{k}")
    for k, enum in (("model", Model), ("boundary", Boundary)):
        if k in kw:
            try:
                kw[k] = enum(kw[k])
            except ValueError:
                raise ConfigError(f"drive.{k}", f"{kw[k]!r} not in {[e.value for e in enum]}") from None
    if "n_qubits" in kw:
        if isinstance(kw["n_qubits"], bool) or not isinstance(kw["n_qubits"], int):
            raise ConfigError("drive.n_qubits", "must be an integer")
        if not 2 <= kw["n_qubits"] <= 20:
            raise ConfigError("drive.n_qubits", "must lie in [2, 20]")
    if "layer_order" in kw and tuple(kw["layer_order"]) not in LAYER_ORDERS:
        raise ConfigError("drive.layer_order", "must be a permutation of exchange, coupling, field")
    try:
        spec = DriveSpec(**kw)
    except (ValueError, TypeError) as exc:
        raise ConfigError("drive", str(exc)) from None
    if experiment in ("fspt-correlators", "flux-echo") and spec.model != Model.FSPT:
        raise ConfigError("drive.model", f"{experiment} needs the FSPT model")
    if experiment in ("edspt-correlators", "heating-sweep") and not spec.is_edspt:
        raise ConfigError("drive.model", f"{experiment} needs an EDSPT model")
    if experiment == "flux-echo" and spec.boundary != Boundary.PBC:
        raise ConfigError("drive.boundary", "flux-echo needs PBC")
    if experiment == "magnus-verify" and spec.n_qubits > 8:
        raise ConfigError("drive.n_qubits", "magnus-verify is capped at 8 qubits")
    if dense and spec.n_qubits > 12:
        raise ConfigError("drive.n_qubits", f"{experiment} uses dense unitaries, L must be <= 12")
    return spec


def _noise(d):
    allowed = {"p_1q", "p_2q", "coherent"}
    for k in d:
        if k not in allowed:
            raise ConfigError(f"noise.{k}", "unknown field")
    coh = d.get("coherent")
    if coh is not None:
        if not isinstance(coh, dict):
            raise ConfigError("noise.coherent", "must be an object or null")
        for k in coh:
            if k not in ("delta_f_rms", "t_layer", "common_mode"):
                raise ConfigError(f"noise.coherent.{k}", "unknown field")
        try:
            coh = CoherentDrift(**coh)
        except (ValueError, TypeError) as exc:
            raise ConfigError("noise.coherent", str(exc)) from None
    try:
        return NoiseModel(float(d.get("p_1q", 0.0)), float(d.get("p_2q", 0.0)), coh)
    except (ValueError, TypeError) as exc:
        raise ConfigError("noise", str(exc)) from None


def _protocol(d):
    for k in d:
        if k not in ("n_shots", "init_scheme", "projective"):
            raise ConfigError(f"protocol.{k}", "unknown field")
    if "init_scheme" in d:
        try:
            InitScheme(d["init_scheme"])
        except ValueError:
            raise ConfigError("protocol.init_scheme",
                              f"{d['init_scheme']!r} not in {[e.value for e in InitScheme]}") from None
    n = d.get("n_shots", 100)
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ConfigError("protocol.n_shots", "must be a positive integer")
    return ShotProtocol(n, d.get("init_scheme", "alternating"), bool(d.get("projective", False)))


def _positive_int(params, key, lo=1, hi=None):
    v = params[key]
    if isinstance(v, bool) or not isinstance(v, int) or v < lo or (hi is not None and v > hi):
        rng = f"[{lo}, {hi}]" if hi is not None else f">= {lo}"
        raise ConfigError(f"params.{key}", f"must be an integer {rng}")


def _params(experiment, d, spec):
    for k in d:
        if k not in _ALLOWED_PARAMS[experiment]:
            raise ConfigError(f"params.{k}", f"unknown for {experiment}")
    p = _merge(PARAM_DEFAULTS[experiment], d)
    for key in ("t_max", "n_realizations", "shot_chunk", "n"):
        if key in p:
            _positive_int(p, key)
    if "n_max" in p:
        _positive_int(p, "n_max", hi=90 if experiment == "heating-sweep" else 40)
    if experiment == "flux-echo":
        if p["method"] not in ("exact", "ancilla"):
            raise ConfigError("params.method", "must be 'exact' or 'ancilla'")
        if not isinstance(p["bond"], int) or not 0 <= p["bond"] < spec.n_qubits:
            raise ConfigError("params.bond", f"must lie in [0, {spec.n_qubits - 1}]")
    if experiment == "heating-sweep":
        if not 0 < float(p["epsilon"]) < 1:
            raise ConfigError("params.epsilon", "must lie in (0, 1)")
        if not isinstance(p["edge_site"], int) or not 0 <= p["edge_site"] < spec.n_qubits:
            raise ConfigError("params.edge_site", "out of range")
    if experiment == "magnus-verify":
        deltas = p["deltas"]
        if not isinstance(deltas, list) or len(deltas) < 2:
            raise ConfigError("params.deltas", "need at least two deltas")
        if any(not 0 < float(x) <= 0.3 for x in deltas):
            raise ConfigError("params.deltas", "each delta must lie in (0, 0.3]")
        p["deltas"] = [float(x) for x in deltas]
    if experiment == "compile":
        try:
            p["entangler"] = Entangler(p["entangler"]).value
        except ValueError:
            raise ConfigError("params.entangler", f"{p['entangler']!r} not in {[e.value for e in Entangler]}") from None
        p["strict"] = bool(p["strict"])
        if p["strict"] and p["entangler"] != Entangler.CZ.value:
            raise ConfigError("params.strict", "strict output allows only the cz entangler")
        p["verify"] = bool(p["verify"])
    return p


def build_config(raw):
    """Validate a merged config dict into an ``ExperimentConfig``."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    known = {"experiment", "drive", "noise", "protocol", "sweep", "params", "master_seed",
             "threads", "output_dir", "schema_version"}
    for k in raw:
        if k not in known:
            raise ConfigError(k, "unknown field")
    exp = raw.get("experiment")
    if exp not in EXPERIMENTS:
        raise ConfigError("experiment", f"{exp!r} not in {list(EXPERIMENTS)}")
    if raw.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"unsupported (this build reads {SCHEMA_VERSION})")
    for section in ("drive", "noise", "protocol", "sweep", "params"):
        if not isinstance(raw.get(section, {}), dict):
            raise ConfigError(section, "must be an object")

    drive_raw = _merge(DRIVE_DEFAULTS[exp], raw.get("drive", {}))
    params_raw = raw.get("params", {})
    dense = exp in ("flux-echo", "heating-sweep") or (exp == "compile" and params_raw.get("verify", True))
    spec = _drive(drive_raw, exp, dense)
    noise = _noise(raw.get("noise", {}))
    protocol = _protocol(raw.get("protocol", {}))
    params = _params(exp, params_raw, spec)

    sweep = raw.get("sweep", {})
    for k in sweep:
        if k not in ("J", "seeds"):
            raise ConfigError(f"sweep.{k}", "unknown field")
    if "J" in sweep:
        if not isinstance(sweep["J"], list) or not sweep["J"]:
            raise ConfigError("sweep.J", "must be a non-empty list")
        sweep_J = [parse_angle(v, f"sweep.J[{i}]") for i, v in enumerate(sweep["J"])]
        for i, j in enumerate(sweep_J):
            if not 0 <= j <= 2 * math.pi + 1e-12:
                raise ConfigError(f"sweep.J[{i}]", "outside [0, 2pi]")
    elif exp == "heating-sweep":
        sweep_J = [np.pi * (1 - d) for d in HEATING_DELTAS]
    else:
        sweep_J = [spec.J]
    if "seeds" in sweep:
        seeds = sweep["seeds"]
        if not isinstance(seeds, list) or not seeds:
            raise ConfigError("sweep.seeds", "must be a non-empty list")
        if any(isinstance(s, bool) or not isinstance(s, int) or s < 0 for s in seeds):
            raise ConfigError("sweep.seeds", "entries must be non-negative integers")
        if len(set(seeds)) != len(seeds):
            raise ConfigError("sweep.seeds", "entries must be distinct")
    else:
        seeds = list(range(params.get("n_realizations", 1)))
    if "n_realizations" in params:
        params["n_realizations"] = len(seeds)

    master = raw.get("master_seed", 0)
    if isinstance(master, bool) or not isinstance(master, int) or not 0 <= master < 2**64:
        raise ConfigError("master_seed", "must be an integer in [0, 2^64)")
    threads = resolve_threads(raw.get("threads"))
    out = raw.get("output_dir")
    if out is not None and not isinstance(out, str):
        raise ConfigError("output_dir", "must be a path string")
    return ExperimentConfig(exp, spec, noise, protocol, sweep_J, list(seeds), params,
                            master, threads, out, raw)


def load_config_file(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError("--config", f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("--config", f"invalid JSON: {exc}") from None
