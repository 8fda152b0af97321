"""Command-line experiment runner.

``qpdrive run --experiment <name> [flags]`` resolves a config (defaults,
then ``--config`` JSON, then flags), runs the experiment over a thread
pool and writes CSV/JSON results, the resolved config and a manifest.

Work is split into independent tasks keyed by ``(J, realization, shot
chunk)``. Each task draws from its own counter-based stream and results
are reduced in task order, so the thread count never changes the output.
"""

import argparse
from concurrent.futures import ThreadPoolExecutor
import csv
from dataclasses import replace
import io
import json
import math
import os
import platform
import sys
import time

import numpy as np

from . import __version__
from .compilation import NativeGateSet, compile_circuit, emit_text, phase_aligned_distance
from .config import EXPERIMENTS, SCHEMA_VERSION, ConfigError, build_config, load_config_file, _merge
from .core import circuit_unitary
from .drives import Model, build_edspt_layers, build_fspt_period, fibonacci_numbers, sample_disorder
from .flux_echo import FluxConfig, ancilla_echo, classify_echo, exact_echo, EchoSeries
from .heating import HeatingSweep, edge_series, heating_time, series_rows, summary_row, superpolynomial_check
from .magnus import algebra_report, numeric_validate
from .observables import (CSV_COLUMNS, CorrelatorRecord, ShotProtocol, autocorrelator, bulk_average,
                          edge_sites, record_rows, staggered_amplitude)
from .seeding import rng_for


class OutputCollision(RuntimeError):
    pass


# ------------------------------------------------------------------ outputs

def csv_text(rows, columns=None):
    buf = io.StringIO()
    columns = list(columns or (rows[0].keys() if rows else []))
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def json_text(obj):
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"not serializable: {type(o).__name__}")


def _finite(x):
    # JSON has no inf; heating times that never cross read as null
    return None if isinstance(x, float) and not math.isfinite(x) else x


# ------------------------------------------------------------------ runners

def _chunks(n, size):
    out = []
    while n > 0:
        out.append(min(size, n))
        n -= out[-1]
    return out


def _correlator_times(cfg):
    if cfg.experiment == "fspt-correlators":
        return list(range(cfg.params["t_max"] + 1)), None
    fib = fibonacci_numbers(cfg.params["n_max"])
    return fib, {f: n for n, f in enumerate(fib, start=1)}


def run_correlators(cfg, pmap):
    times, _ = _correlator_times(cfg)
    exp = cfg.experiment
    chunks = _chunks(cfg.protocol.n_shots, cfg.params["shot_chunk"])
    tasks = [(J, seed, c, m) for J in cfg.sweep_J for seed in cfg.seeds for c, m in enumerate(chunks)]

    def one(task):
        J, seed, c, m = task
        spec = replace(cfg.drive, J=J, seed=seed)
        dis = sample_disorder(spec, rng_for(cfg.master_seed, exp, "disorder", seed))
        proto = ShotProtocol(m, cfg.protocol.init_scheme, cfg.protocol.projective)
        rng = rng_for(cfg.master_seed, exp, "shots", repr(J), seed, c)
        return autocorrelator(spec, dis, cfg.noise, proto, times, rng)

    results = iter(pmap(one, tasks))
    rows, summary = [], []
    L = cfg.drive.n_qubits
    for J in cfg.sweep_J:
        per_seed = []
        for seed in cfg.seeds:
            parts = [next(results) for _ in chunks]
            records = []
            for k in range(L):
                shots = np.concatenate([p[k].shot_values for p in parts], axis=1)
                m = shots.shape[1]
                err = shots.std(axis=1, ddof=1) / np.sqrt(m) if m > 1 else np.full(len(times), np.nan)
                r0 = parts[0][k]
                records.append(CorrelatorRecord(r0.site, r0.axis, r0.times, shots.mean(axis=1), err, m,
                                                r0.n_labels, shots))
            bulk = [bulk_average(records, range(1, L - 1))] if L > 2 else []
            spec = replace(cfg.drive, J=J, seed=seed)
            rows += record_rows(spec, records + bulk)
            per_seed.append(records)
        summary.append(_correlator_summary(cfg, J, per_seed, times))
    return {"correlators.csv": csv_text(rows, CSV_COLUMNS), "summary.json": json_text(summary)}


def _correlator_summary(cfg, J, per_seed, times):
    L = cfg.drive.n_qubits
    out = {"J": J, "J_over_pi": J / np.pi, "n_realizations": len(per_seed), "edges": {}}
    for site in edge_sites(L):
        vals = np.mean([recs[site].values for recs in per_seed], axis=0)
        entry = {"axis": per_seed[0][site].axis, "ensemble_mean": vals}
        if cfg.experiment == "fspt-correlators":
            entry["staggered_amplitude"] = staggered_amplitude(vals[1:], times[1:])
        out["edges"][str(site)] = entry
    if cfg.experiment == "edspt-correlators" and L > 2:
        edge = np.mean([[abs(recs[s].values[-1]) for s in edge_sites(L)] for recs in per_seed])
        bulk = np.mean([[abs(recs[s].values[-1]) for s in range(1, L - 1)] for recs in per_seed])
        out["final_checkpoint"] = {"n": cfg.params["n_max"], "mean_abs_edge": edge, "mean_abs_bulk": bulk}
    return out


def run_flux_echo(cfg, pmap):
    flux = FluxConfig(cfg.params["bond"])
    t_max = cfg.params["t_max"]
    tasks = [(J, seed) for J in cfg.sweep_J for seed in cfg.seeds]

    def one(task):
        J, seed = task
        spec = replace(cfg.drive, J=J, seed=seed)
        dis = sample_disorder(spec, rng_for(cfg.master_seed, "flux-echo", "disorder", seed))
        if cfg.params["method"] == "exact":
            return exact_echo(spec, dis, flux, t_max)
        rng = rng_for(cfg.master_seed, "flux-echo", "shots", repr(J), seed)
        return ancilla_echo(spec, dis, flux, cfg.noise, cfg.protocol.n_shots, t_max, rng)

    results = list(pmap(one, tasks))
    rows, mean_rows, summary = [], [], []
    k = 0
    for J in cfg.sweep_J:
        block = results[k:k + len(cfg.seeds)]
        k += len(cfg.seeds)
        for seed, s in zip(cfg.seeds, block):
            rows += [{"J": repr(J), "seed": seed, **r} for r in s.rows()]
        z = np.array([s.values for s in block])
        err = z.real.std(axis=0, ddof=1) + 1j * z.imag.std(axis=0, ddof=1) if len(z) > 1 else np.zeros(z.shape[1])
        mean = EchoSeries(block[0].times, z.mean(axis=0), err / np.sqrt(len(z)))
        mean_rows += [{"J": repr(J), **r} for r in mean.rows()]
        summary.append({"J": J, "J_over_pi": J / np.pi, "method": cfg.params["method"], **classify_echo(z)})
    return {"echo.csv": csv_text(rows), "echo_mean.csv": csv_text(mean_rows), "summary.json": json_text(summary)}


def run_heating(cfg, pmap):
    p = cfg.params
    sweep = HeatingSweep(cfg.sweep_J, L=cfg.drive.n_qubits, n_max=p["n_max"], n_realizations=len(cfg.seeds),
                         epsilon=p["epsilon"], model=cfg.drive.model, disorder_scale=cfg.drive.disorder_scale,
                         master_seed=cfg.master_seed, edge_site=p["edge_site"])
    rows, summary, deltas, t_h = [], [], [], []
    for J in cfg.sweep_J:
        s = edge_series(sweep, J, pmap, cfg.seeds)
        rows += series_rows(s)
        summary.append(summary_row(s, p["epsilon"]))
        deltas.append(s.delta)
        t_h.append(heating_time(s, p["epsilon"]))
    report = {"epsilon": p["epsilon"], "delta": deltas, "t_h": [_finite(float(t)) for t in t_h]}
    if len(deltas) >= 2 and all(0 < d for d in deltas) and all(math.isfinite(t) for t in t_h):
        ok, slopes = superpolynomial_check(deltas, t_h)
        report.update({"t_h_non_decreasing": ok, "segment_slopes": slopes})
    return {"heating.csv": csv_text(rows), "heating_summary.csv": csv_text(summary),
            "heating.json": json_text(report)}


def run_magnus(cfg, pmap):
    p = cfg.params
    algebra = algebra_report(p["n_max"])
    numeric = numeric_validate(cfg.drive.n_qubits, p["deltas"], p["n"], rng_for(cfg.master_seed, "magnus"))
    report = {"algebra": algebra, "numeric": numeric}
    return {"magnus.json": json_text(report), "magnus_residuals.csv": csv_text(numeric["residuals"])}


def run_compile(cfg, pmap):
    spec = replace(cfg.drive, seed=cfg.seeds[0])
    dis = sample_disorder(spec, rng_for(cfg.master_seed, "compile", "disorder", cfg.seeds[0]))
    if spec.model == Model.FSPT:
        circ = build_fspt_period(spec, dis)
    else:
        ux, uz = build_edspt_layers(spec, dis)
        circ = ux + uz
    native, stats = compile_circuit(circ, NativeGateSet(cfg.params["entangler"]))
    stats.update({"source_n_1q": circ.count()[0], "source_n_2q": circ.count()[1],
                  "entangler": cfg.params["entangler"]})
    if cfg.params["verify"]:
        stats["phase_aligned_distance"] = phase_aligned_distance(circuit_unitary(circ), circuit_unitary(native))
    model = spec.model.value
    return {
        "source.txt": emit_text(circ, model, spec.seed),
        "circuit.txt": emit_text(native, model, spec.seed, strict=cfg.params["strict"]),
        "stats.json": json_text(stats),
    }


RUNNERS = {
    "fspt-correlators": run_correlators,
    "edspt-correlators": run_correlators,
    "flux-echo": run_flux_echo,
    "heating-sweep": run_heating,
    "magnus-verify": run_magnus,
    "compile": run_compile,
}


def execute(cfg):
    """Run ``cfg`` and return ``{filename: text}``; nothing touches the disk."""
    if cfg.threads == 1:
        return RUNNERS[cfg.experiment](cfg, map)
    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        # Executor.map yields in submission order: the reduction is ordered by task
        return RUNNERS[cfg.experiment](cfg, pool.map)


def default_out_dir(cfg):
    return os.path.join("runs", f"{cfg.experiment}-{cfg.semantic_hash()[:12]}")


def _check_out_dir(path, force):
    if os.path.exists(path):
        if not os.path.isdir(path):
            raise OutputCollision(f"{path} exists and is not a directory")
        if os.listdir(path) and not force:
            raise OutputCollision(f"output directory {path} is not empty (use --force to overwrite)")


def prepare_out_dir(path, force):
    _check_out_dir(path, force)
    os.makedirs(path, exist_ok=True)


def run(cfg, force=False):
    """Execute and persist; returns the manifest dict."""
    out_dir = cfg.output_dir or default_out_dir(cfg)
    cfg.output_dir = out_dir
    # fail on a collision before spending compute; the check repeats before writing
    _check_out_dir(out_dir, force)
    t0 = time.perf_counter()
    files = execute(cfg)
    wall = time.perf_counter() - t0
    prepare_out_dir(out_dir, force)
    files = dict(files)
    files["config.json"] = json_text(cfg.to_dict())
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "tool": "qpdrive",
        "version": __version__,
        "experiment": cfg.experiment,
        "config_hash": cfg.semantic_hash(),
        "master_seed": cfg.master_seed,
        "threads": cfg.threads,
        "wall_time_s": wall,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "files": sorted(files),
    }
    files["manifest.json"] = json_text(manifest)
    for name, text in files.items():
        with open(os.path.join(out_dir, name), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    return manifest


# ------------------------------------------------------------------ argument parsing

def _split_list(text):
    return [t for t in (s.strip() for s in text.split(",")) if t]


def build_parser():
    p = argparse.ArgumentParser(prog="qpdrive", description="Driven spin-chain simulator experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run one experiment")
    r.add_argument("--experiment", choices=EXPERIMENTS)
    r.add_argument("--config", help="JSON config file; flags override its fields")
    r.add_argument("--J", help="exchange angle, e.g. 0.95pi; a comma list sets the J sweep")
    r.add_argument("--L", type=int, help="number of qubits")
    r.add_argument("--model", choices=[m.value for m in Model])
    r.add_argument("--boundary", choices=["OBC", "PBC"])
    r.add_argument("--disorder-scale", help="disorder width in radians or '<k>pi'")
    r.add_argument("--shots", type=int, help="shots per realization")
    r.add_argument("--init-scheme", choices=["alternating", "all_z", "all_x"])
    r.add_argument("--projective", action="store_true", default=None, help="sample +-1 outcomes")
    r.add_argument("--realizations", type=int, help="disorder realizations (seeds 0..R-1)")
    r.add_argument("--seeds", help="comma list of realization seeds")
    r.add_argument("--t-max", type=int, help="periods (fspt-correlators, flux-echo)")
    r.add_argument("--n-max", type=int, help="Fibonacci index (edspt-correlators, heating-sweep, magnus-verify)")
    r.add_argument("--epsilon", type=float, help="heating threshold")
    r.add_argument("--method", choices=["exact", "ancilla"], help="flux-echo estimator")
    r.add_argument("--p1q", type=float, help="1q depolarizing probability")
    r.add_argument("--p2q", type=float, help="2q depolarizing probability")
    r.add_argument("--drift-rms", type=float, help="coherent z drift rms in Hz (0 disables)")
    r.add_argument("--t-layer", type=float, help="layer duration in seconds for the drift")
    r.add_argument("--common-mode", action="store_true", default=None, help="one drift offset for all sites")
    r.add_argument("--entangler", choices=["cz", "ms"], help="native entangler (compile)")
    r.add_argument("--strict", action="store_true", default=None, help="emit only rz, r1q, cz")
    r.add_argument("--no-verify", action="store_true", help="skip the dense fidelity check (compile)")
    r.add_argument("--seed", type=int, help="master seed")
    r.add_argument("--out-dir", help="output directory (default runs/<experiment>-<hash>)")
    r.add_argument("--threads", help="worker threads or 'auto' (default $QPDRIVE_THREADS or 1)")
    r.add_argument("--force", action="store_true", help="write into a non-empty output directory")
    return p


def flags_to_overrides(a):
    """Nested config dict holding only the flags that were given."""
    o = {"drive": {}, "noise": {}, "protocol": {}, "sweep": {}, "params": {}}
    if a.experiment:
        o["experiment"] = a.experiment
    if a.J is not None:
        js = _split_list(a.J)
        if len(js) == 1 and "," not in a.J:
            o["drive"]["J"] = js[0]
        else:
            o["sweep"]["J"] = js
            if js:
                o["drive"]["J"] = js[0]
    for flag, key in (("L", "n_qubits"), ("model", "model"), ("boundary", "boundary"),
                      ("disorder_scale", "disorder_scale")):
        if getattr(a, flag) is not None:
            o["drive"][key] = getattr(a, flag)
    for flag, key in (("p1q", "p_1q"), ("p2q", "p_2q")):
        if getattr(a, flag) is not None:
            o["noise"][key] = getattr(a, flag)
    coh = {}
    for flag, key in (("drift_rms", "delta_f_rms"), ("t_layer", "t_layer"), ("common_mode", "common_mode")):
        if getattr(a, flag) is not None:
            coh[key] = getattr(a, flag)
    if coh:
        o["noise"]["coherent"] = coh
    for flag, key in (("shots", "n_shots"), ("init_scheme", "init_scheme"), ("projective", "projective")):
        if getattr(a, flag) is not None:
            o["protocol"][key] = getattr(a, flag)
    for flag, key in (("realizations", "n_realizations"), ("t_max", "t_max"), ("n_max", "n_max"),
                      ("epsilon", "epsilon"), ("method", "method"), ("entangler", "entangler"),
                      ("strict", "strict")):
        if getattr(a, flag) is not None:
            o["params"][key] = getattr(a, flag)
    if a.no_verify:
        o["params"]["verify"] = False
    if a.seeds is not None:
        try:
            o["sweep"]["seeds"] = [int(s) for s in _split_list(a.seeds)]
        except ValueError:
            raise ConfigError("--seeds", "expected a comma list of integers") from None
    if a.seed is not None:
        o["master_seed"] = a.seed
    if a.threads is not None:
        o["threads"] = a.threads
    if a.out_dir is not None:
        o["output_dir"] = a.out_dir
    return {k: v for k, v in o.items() if v != {}}


def config_from_args(a):
    base = load_config_file(a.config) if a.config else {}
    if not isinstance(base, dict):
        raise ConfigError("--config", "top level must be a JSON object")
    over = flags_to_overrides(a)
    raw = _merge(base, over)  # nested merge: a flag replaces only its own field
    if "experiment" not in raw:
        raise ConfigError("experiment", "missing (give --experiment or set it in the config file)")
    return build_config(raw)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
    except ConfigError as exc:
        print(f"qpdrive: invalid config: {exc}", file=sys.stderr)
        return 2
    try:
        manifest = run(cfg, force=args.force)
    except OutputCollision as exc:
        print(f"qpdrive: {exc}", file=sys.stderr)
        return 2
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"qpdrive: {cfg.experiment} failed: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {cfg.output_dir} ({manifest['wall_time_s']:.2f} s, config {manifest['config_hash'][:12]})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
