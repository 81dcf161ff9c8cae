"""Command-line front end: single pairs, ensembles, sweeps and the oracle gauntlet.

    vaporg2 pair --omega-r 50 --gamma12 0 --g12 0 --out runs/pair
    vaporg2 ensemble --temperature 380 --pairs 1500 --workers 4
    vaporg2 sweep --axis omega_r --values 5,10,15,50 --pairs 500
    vaporg2 validate

Settings come from built-in defaults, then ``--config`` (key = value lines,
or a previous manifest.json), then command-line flags.  Every run writes a
manifest.json next to its outputs, including runs that fail.
"""

from __future__ import annotations

import argparse
import configparser
import datetime as _dt
import hashlib
import json
import logging
import math
import os
import platform
import sys
import traceback
from dataclasses import fields, replace
from functools import partial
from pathlib import Path

import numpy as np

from . import __version__
from . import constants as C
from .analysis import NoPeakError, UnresolvedPeakError, first_peak_fwhm
from .coupling import DipoleGeometry, collective_params
from .dynamics import COEFFICIENT_SETS, PairConfig, build_system
from .ensemble import (
    AVERAGING_MODES,
    DIPOLE_POLICIES,
    RNG_DESCRIPTION,
    EnsembleSpec,
    VaporConditions,
    ensemble_g2,
    pair_rng,
    sample_pair,
)
from .regression import g2_series
from .validation import run_validation

log = logging.getLogger("vaporg2")

OUT_ENV = "VAPORG2_OUT"
SWEEP_AXES = ("omega_r", "temperature", "delta_av")
SEED_POLICIES = ("common", "per-point")
AXIS_UNITS = {"omega_r": "Gamma", "temperature": "K", "delta_av": "Gamma"}

EXIT_OK, EXIT_RUN, EXIT_CONFIG = 0, 1, 2


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- converters


def _finite(text) -> float:
    v = float(text)
    if not math.isfinite(v):
        raise ValueError(f"{text!r} is not finite")
    return v


def _count(text) -> int:
    v = int(text)
    if v < 1:
        raise ValueError("must be a positive integer")
    return v


def _seed(text) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise ValueError("seed must fit in an unsigned 64-bit integer")
    return v


def _vec3(text) -> tuple[float, float, float]:
    if isinstance(text, (list, tuple)):
        parts = list(text)
    else:
        parts = str(text).replace(" ", "").split(",")
    if len(parts) != 3:
        raise ValueError("expected three comma-separated numbers")
    return tuple(_finite(p) for p in parts)


def _values(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        parts = list(text)
    else:
        parts = [p for p in str(text).replace(" ", "").split(",") if p]
    if not parts:
        raise ValueError("value list is empty")
    return [_finite(p) for p in parts]


def _sigma(text):
    return text if text == "from-temperature" else _finite(text)


def _choice(options):
    def conv(text):
        if text not in options:
            raise ValueError(f"must be one of {', '.join(options)}")
        return text

    return conv


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


# config key -> (converter, EnsembleSpec field or None)
KEYS = {
    "temperature": (_finite, "temperature"),
    "omega_r": (_finite, "omega_r"),
    "delta_av": (_finite, "delta_av"),
    "pairs": (_count, "n_pairs"),
    "seed": (_seed, "seed"),
    "tau_max": (_finite, "tau_max"),
    "tau_points": (_count, "tau_points"),
    "averaging": (_choice(AVERAGING_MODES), "averaging_mode"),
    "dipole": (_choice(DIPOLE_POLICIES), "dipole_policy"),
    "coefficients": (_choice(COEFFICIENT_SETS), "coefficients"),
    "min_separation": (_finite, "min_separation"),
    "detuning_halfwidth": (_finite, "detuning_halfwidth"),
    "doppler_sigma": (_sigma, "doppler_sigma"),
    "omega_r_mhz": (_finite, None),
    "delta_av_mhz": (_finite, None),
    "workers": (_count, None),
    "out": (str, None),
    # pair mode
    "delta1": (_finite, None),
    "delta2": (_finite, None),
    "delta1_mhz": (_finite, None),
    "delta2_mhz": (_finite, None),
    "r1": (_vec3, None),
    "r2": (_vec3, None),
    "dipole_axis": (_vec3, None),
    "gamma12": (_finite, None),
    "g12": (_finite, None),
    # sweep mode
    "axis": (_choice(SWEEP_AXES), None),
    "values": (_values, None),
    "seed_policy": (_choice(SEED_POLICIES), None),
    # validate mode
    "n_configs": (_count, None),
}

# manifest "spec" names that map back onto config keys
_SPEC_TO_KEY = {field: key for key, (_, field) in KEYS.items() if field}


def _key_lines(path: Path) -> dict[str, int]:
    lines = {}
    for n, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        s = raw.strip()
        if not s or s[0] in "#;[":
            continue
        for sep in ("=", ":"):
            if sep in s:
                lines.setdefault(s.split(sep, 1)[0].strip().lower().replace("-", "_"), n)
                break
    return lines


def _load_json_config(path: Path) -> dict:
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from None
    cfg = doc.get("config", doc)
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: 'config' must be an object")
    out = {}
    for key, value in cfg.items():
        key = _SPEC_TO_KEY.get(key, key)
        if value is None or key in ("wavelength_m",):
            continue
        if key not in KEYS:
            raise ConfigError(f"{path}: unknown field {key!r}")
        conv = KEYS[key][0]
        try:
            out[key] = conv(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{path}: field {key!r}: {exc}") from None
    return out


def load_config(path) -> dict:
    """Parse a key = value file (an optional [section] header is ignored)."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"{path}: no such config file")
    if path.suffix == ".json":
        return _load_json_config(path)
    text = path.read_text(encoding="utf-8")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = lambda k: k.strip().lower().replace("-", "_")
    has_section = any(line.strip().startswith("[") for line in text.splitlines())
    offset = 0 if has_section else 1
    try:
        parser.read_string(text if has_section else "[run]\n" + text, source=str(path))
    except configparser.Error as exc:
        msg = str(exc)
        lineno = getattr(exc, "lineno", None)
        if lineno is not None:
            msg = f"{path}:{lineno - offset}: {getattr(exc, 'message', msg).splitlines()[0]}"
        raise ConfigError(msg) from None
    lines = _key_lines(path)
    out = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            where = f"{path}:{lines.get(key, '?')}"
            if key not in KEYS:
                raise ConfigError(f"{where}: unknown field {key!r}")
            try:
                out[key] = KEYS[key][0](raw.strip())
            except ValueError as exc:
                raise ConfigError(f"{where}: field {key!r}: {exc}") from None
    return out


# ---------------------------------------------------------------- arguments


def _add_common(p: argparse.ArgumentParser, pair: bool = False):
    g = p.add_argument_group("run settings")
    g.add_argument("--config", type=Path, help="key = value file or a previous manifest.json")
    g.add_argument("--seed", type=_seed)
    g.add_argument("--out", help=f"output directory (default: ${OUT_ENV} or ./vaporg2-out)")
    g.add_argument("--temperature", type=_finite, help="cell temperature [K]")
    g.add_argument("--omega-r", type=_finite, help="Rabi frequency [Gamma]")
    g.add_argument("--omega-r-mhz", type=_finite, help="Rabi frequency [MHz]; Gamma = 2 pi x 6 MHz")
    g.add_argument("--delta-av", type=_finite, help="mean laser detuning [Gamma]")
    g.add_argument("--delta-av-mhz", type=_finite, help="mean laser detuning [MHz]")
    g.add_argument("--tau-max", type=_finite, help="largest delay [1/Gamma]")
    g.add_argument("--tau-points", type=_count)
    g.add_argument("--dipole", choices=DIPOLE_POLICIES)
    g.add_argument("--coefficients", choices=COEFFICIENT_SETS)
    g.add_argument("--min-separation", type=_finite, help="closest allowed pair [lambda]")
    g.add_argument("--detuning-halfwidth", type=_finite, help="detuning window half-width [Gamma]")
    g.add_argument("--doppler-sigma", type=_sigma, help="Gaussian width [Gamma] or 'from-temperature'")
    if not pair:
        g.add_argument("--pairs", type=_count, help="number of sampled pairs")
        g.add_argument("--averaging", choices=AVERAGING_MODES)
        g.add_argument("--workers", type=_count)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vaporg2", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pair", help="g2(tau) of one atom pair")
    _add_common(p, pair=True)
    g = p.add_argument_group("pair geometry (positions, explicit couplings, or --seed)")
    g.add_argument("--r1", type=_vec3, help="position of atom 1, 'x,y,z' [lambda]")
    g.add_argument("--r2", type=_vec3, help="position of atom 2, 'x,y,z' [lambda]")
    g.add_argument("--dipole-axis", type=_vec3, help="dipole unit vector (default z)")
    g.add_argument("--gamma12", type=_finite, help="collective damping [Gamma]")
    g.add_argument("--g12", type=_finite, help="dipole-dipole shift [Gamma]")
    g.add_argument("--delta1", type=_finite, help="detuning of atom 1 [Gamma]")
    g.add_argument("--delta2", type=_finite, help="detuning of atom 2 [Gamma]")
    g.add_argument("--delta1-mhz", type=_finite)
    g.add_argument("--delta2-mhz", type=_finite)

    p = sub.add_parser("ensemble", help="Monte Carlo average over vapor pairs")
    _add_common(p)

    p = sub.add_parser("sweep", help="ensembles along one parameter axis")
    _add_common(p)
    p.add_argument("--axis", choices=SWEEP_AXES)
    p.add_argument("--values", type=_values, help="comma-separated axis values")
    p.add_argument("--seed-policy", choices=SEED_POLICIES)

    p = sub.add_parser("validate", help="cross-check the moment equations against the oracle")
    p.add_argument("--config", type=Path)
    p.add_argument("--seed", type=_seed)
    p.add_argument("--out")
    p.add_argument("--n-configs", type=_count, help="random configurations for the g2 check")
    p.add_argument("--coefficients", choices=COEFFICIENT_SETS)
    return ap


def resolve_settings(args: argparse.Namespace) -> dict:
    """Defaults < config file < flags; MHz entries are folded into Gamma units per layer."""
    mhz_names = ("omega_r", "delta_av", "delta1", "delta2")

    def fold(layer, where):
        for name in mhz_names:
            if f"{name}_mhz" not in layer:
                continue
            if name in layer:
                raise ConfigError(f"{where}: {name} and {name}_mhz are mutually exclusive")
            layer[name] = layer.pop(f"{name}_mhz") / C.GAMMA_MHZ
        return layer

    settings = load_config(args.config) if getattr(args, "config", None) else {}
    settings = fold(settings, args.config) if settings else settings
    flags = {k: getattr(args, k) for k in KEYS if getattr(args, k, None) is not None}
    settings.update(fold(flags, "command line"))
    return settings


def ensemble_spec(settings: dict) -> EnsembleSpec:
    kwargs = {KEYS[k][1]: v for k, v in settings.items() if KEYS[k][1]}
    try:
        return EnsembleSpec(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"invalid settings: {exc}") from None


def output_dir(settings: dict) -> Path:
    return Path(settings.get("out") or os.environ.get(OUT_ENV) or "vaporg2-out")


# ---------------------------------------------------------------- outputs


def sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_csv(path: Path, columns: list[tuple[str, str, np.ndarray]], meta: dict) -> Path:
    """Columns are (name, unit, values).  Floats use a round-trip format."""
    path.parent.mkdir(parents=True, exist_ok=True)
    head = [f"# {k}: {v}" for k, v in meta.items()]
    head.append("# units: " + ", ".join(f"{name} [{unit}]" for name, unit, _ in columns))
    data = np.column_stack([np.asarray(v, dtype=float) for _, _, v in columns])
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(head) + "\n")
        fh.write(",".join(name for name, _, _ in columns) + "\n")
        np.savetxt(fh, data, delimiter=",", fmt="%.17g")
    return path


def read_csv(path: Path) -> tuple[list[str], np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    names = lines[0].strip().split(",")
    data = np.loadtxt(lines[1:], delimiter=",", ndmin=2)
    return names, data


def _check_outputs(paths: list[Path], finite_columns: dict[str, list[str]]) -> dict[str, str]:
    """Re-read every output, confirm it parses and that key columns are finite."""
    sums = {}
    for path in paths:
        names, data = read_csv(path)
        if data.shape[1] != len(names) or data.shape[0] == 0:
            raise RuntimeError(f"{path}: malformed output")
        for col in finite_columns.get(path.name, []):
            if not np.all(np.isfinite(data[:, names.index(col)])):
                raise RuntimeError(f"{path}: non-finite values in column {col}")
        sums[str(path)] = sha256(path)
    return sums


class Manifest:
    def __init__(self, command: str, out: Path, argv: list[str]):
        self.path = out / "manifest.json"
        self.doc = {
            "tool": "vaporg2",
            "version": __version__,
            "command": command,
            "argv": argv,
            "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
            "python": platform.python_version(),
            "numpy": np.__version__,
            "rng": RNG_DESCRIPTION,
            "status": "running",
            "config": {},
            "outputs": {},
        }

    def update(self, **kw):
        self.doc.update(kw)

    def write(self):
        self.path.parent.mkdir(parents=True, exist_ok=True)
        base = self.path.parent
        self.doc["outputs"] = {
            os.path.relpath(k, base): v for k, v in self.doc["outputs"].items()
        }
        tmp = self.path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(self.doc, indent=2, default=_json_default) + "\n", encoding="utf-8")
        os.replace(tmp, self.path)


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(type(obj).__name__)


def _spec_meta(spec: EnsembleSpec) -> dict:
    return {f.name: getattr(spec, f.name) for f in fields(spec)}


# ---------------------------------------------------------------- pair


def pair_from_settings(settings: dict, spec: EnsembleSpec) -> tuple[PairConfig, dict]:
    """Explicit positions, explicit couplings, or the seed's first sampled pair."""
    has_pos = "r1" in settings or "r2" in settings
    has_coupling = "gamma12" in settings or "g12" in settings
    if has_pos and has_coupling:
        raise ConfigError("give either positions (r1, r2) or explicit gamma12/g12, not both")
    omega = spec.omega_r
    d1 = settings.get("delta1", spec.delta_av)
    d2 = settings.get("delta2", spec.delta_av)

    if has_pos:
        if not ("r1" in settings and "r2" in settings):
            raise ConfigError("both r1 and r2 are required")
        r1, r2 = np.array(settings["r1"]), np.array(settings["r2"])
        axis = np.array(settings.get("dipole_axis", (0.0, 0.0, 1.0)))
        try:
            coll = collective_params(DipoleGeometry(r1 - r2, axis))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        cfg = PairConfig(
            d1, d2,
            omega * np.exp(-1j * C.TWO_PI * r1[0]),
            omega * np.exp(-1j * C.TWO_PI * r2[0]),
            coll.gamma12, coll.g12, coll.x,
        )
        return cfg, {"mode": "positions", "r1": r1, "r2": r2, "dipole_axis": axis}
    if has_coupling:
        try:
            cfg = PairConfig(d1, d2, omega, omega, settings.get("gamma12", 0.0), settings.get("g12", 0.0))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return cfg, {"mode": "couplings"}
    if "seed" in settings:
        vapor = VaporConditions(spec.temperature, spec.wavelength_m)
        s = sample_pair(pair_rng(spec.seed, 0), spec, vapor, 0)
        if "delta1" in settings or "delta2" in settings:
            raise ConfigError("explicit detunings cannot be combined with a sampled pair")
        return s.cfg, {"mode": "sampled", "pair_index": 0, "r1": s.r1, "r2": s.r2, "dipole_axis": s.dipole_axis}
    raise ConfigError("pair needs positions (--r1/--r2), explicit couplings (--gamma12/--g12) or --seed")


def run_pair(settings: dict, out: Path, manifest: Manifest) -> int:
    spec = ensemble_spec(settings)
    cfg, origin = pair_from_settings(settings, spec)
    pair_doc = {
        "delta1": cfg.delta1, "delta2": cfg.delta2,
        "omega1": complex(cfg.omega1), "omega2": complex(cfg.omega2),
        "gamma12": cfg.gamma12, "g12": cfg.g12, "x": cfg.x, **origin,
    }
    manifest.update(config=_spec_meta(spec) | {"seed_given": "seed" in settings}, pair=pair_doc)
    series = g2_series(cfg, spec.tau(), spec.coefficients)
    meta = {
        "vaporg2": __version__,
        "kind": "pair g2",
        "coefficients": spec.coefficients,
        "delta1 [Gamma]": repr(cfg.delta1),
        "delta2 [Gamma]": repr(cfg.delta2),
        "|omega| [Gamma]": repr(spec.omega_r),
        "gamma12 [Gamma]": repr(cfg.gamma12),
        "g12 [Gamma]": repr(cfg.g12),
    }
    path = write_csv(
        out / "g2_pair.csv",
        [
            ("tau", "1/Gamma", series.tau),
            ("numerator", "f(R)^2", series.numerator),
            ("denominator", "f(R)^2", series.denominator),
            ("g2", "dimensionless", series.g2),
        ],
        meta,
    )
    manifest.update(outputs=_check_outputs([path], {"g2_pair.csv": ["tau", "g2"]}),
                    scalars={"g2_zero": float(series.g2[0])})
    print(f"g2(0) = {series.g2[0]:.6f}  ->  {path}")
    return EXIT_OK


# ---------------------------------------------------------------- ensemble


def _fwhm_or_nan(tau, g2) -> tuple[float, str | None]:
    try:
        return first_peak_fwhm((tau, g2)), None
    except (NoPeakError, UnresolvedPeakError) as exc:
        return float("nan"), str(exc)


def write_ensemble(res, out: Path) -> tuple[list[Path], dict]:
    spec = res.spec
    meta = {"vaporg2": __version__, "kind": "ensemble g2"} | {k: repr(v) for k, v in _spec_meta(spec).items()}
    meta["failed pairs"] = str(len(res.failures))
    curve = write_csv(
        out / "g2_ensemble.csv",
        [("tau", "1/Gamma", res.tau), ("g2_mean", "dimensionless", res.g2_mean),
         ("g2_stderr", "dimensionless", res.g2_stderr)],
        meta,
    )
    r12 = np.array([s.r12 for s in res.samples])
    idx = np.array([s.index for s in res.samples])
    pairs = write_csv(
        out / "pairs.csv",
        [
            ("index", "-", idx),
            ("r12_x", "lambda", r12[:, 0]),
            ("r12_y", "lambda", r12[:, 1]),
            ("r12_z", "lambda", r12[:, 2]),
            ("r12", "lambda", np.linalg.norm(r12, axis=1)),
            ("delta1", "Gamma", [s.delta1 for s in res.samples]),
            ("delta2", "Gamma", [s.delta2 for s in res.samples]),
            ("gamma12", "Gamma", [s.cfg.gamma12 for s in res.samples]),
            ("g12", "Gamma", [s.cfg.g12 for s in res.samples]),
            ("g2_zero", "dimensionless", res.pair_g2_zero[idx]),
        ],
        {"vaporg2": __version__, "kind": "per-pair summary", "seed": str(spec.seed),
         "note": "g2_zero is nan for pairs that failed"},
    )
    fwhm, why = _fwhm_or_nan(res.tau, res.g2_mean)
    scalars = {
        "g2_zero": float(res.g2_mean[0]),
        "g2_zero_stderr": float(res.g2_stderr[0]),
        "fwhm": fwhm,
        "fwhm_note": why,
        "n_ok": res.n_ok,
        "failures": {str(k): v for k, v in res.failures.items()},
        "g2_zero_quantiles": {str(q): v for q, v in res.g2_zero_quantiles().items()},
    }
    return [curve, pairs], scalars


_FINITE = {"g2_ensemble.csv": ["tau", "g2_mean", "g2_stderr"]}


def run_ensemble(settings: dict, out: Path, manifest: Manifest) -> int:
    spec = ensemble_spec(settings)
    manifest.update(config=_spec_meta(spec), averaging_mode=spec.averaging_mode,
                    dipole_policy=spec.dipole_policy, seed=spec.seed)
    res = ensemble_g2(spec, workers=settings.get("workers", 1))
    paths, scalars = write_ensemble(res, out)
    manifest.update(outputs=_check_outputs(paths, _FINITE), scalars=scalars, provenance=res.provenance)
    print(f"g2(0) = {scalars['g2_zero']:.4f} +/- {scalars['g2_zero_stderr']:.4f}, "
          f"FWHM = {scalars['fwhm']:.4f}  ({res.n_ok}/{spec.n_pairs} pairs)  ->  {out}")
    return EXIT_OK


# ---------------------------------------------------------------- sweep


def point_seed(seed: int, k: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=(2**32 + k,)).generate_state(1, np.uint64)[0])


def run_sweep(settings: dict, out: Path, manifest: Manifest) -> int:
    base = ensemble_spec(settings)
    if "axis" not in settings or "values" not in settings:
        raise ConfigError("sweep needs --axis and --values")
    axis, values = settings["axis"], settings["values"]
    policy = settings.get("seed_policy", "common")
    field = KEYS[axis][1]
    points = []
    for k, v in enumerate(values):
        seed = base.seed if policy == "common" else point_seed(base.seed, k)
        try:
            points.append(replace(base, **{field: v, "seed": seed}))
        except ValueError as exc:
            raise ConfigError(f"sweep value {axis}={v}: {exc}") from None
    manifest.update(
        config=_spec_meta(base), sweep={"axis": axis, "values": values, "seed_policy": policy},
        averaging_mode=base.averaging_mode, dipole_policy=base.dipole_policy, seed=base.seed,
    )

    rows, outputs, failures, point_docs = [], [], {}, []
    for k, spec in enumerate(points):
        sub = out / f"point_{k:02d}_{axis}_{values[k]:g}"
        try:
            res = ensemble_g2(spec, workers=settings.get("workers", 1))
        except Exception as exc:  # aggregate and carry on with the remaining points
            failures[str(values[k])] = f"{type(exc).__name__}: {exc}"
            rows.append((values[k], np.nan, np.nan, np.nan, 0))
            continue
        paths, scalars = write_ensemble(res, sub)
        outputs += paths
        rows.append((values[k], scalars["g2_zero"], scalars["g2_zero_stderr"], scalars["fwhm"], res.n_ok))
        point_docs.append({"value": values[k], "seed": spec.seed, "dir": sub.name, **scalars})
        log.info("%s = %g: g2(0) = %.4f", axis, values[k], scalars["g2_zero"])

    arr = np.array(rows, dtype=float)
    summary = write_csv(
        out / "summary.csv",
        [
            (axis, AXIS_UNITS[axis], arr[:, 0]),
            ("g2_zero", "dimensionless", arr[:, 1]),
            ("g2_zero_stderr", "dimensionless", arr[:, 2]),
            ("fwhm", "1/Gamma", arr[:, 3]),
            ("n_ok", "pairs", arr[:, 4]),
        ],
        {"vaporg2": __version__, "kind": "sweep summary", "axis": axis, "seed_policy": policy,
         "seed": str(base.seed), "note": "fwhm is nan when the first peak is not resolved"},
    )
    manifest.update(points=point_docs,
                    outputs=_check_outputs(outputs + [summary], _FINITE))
    for row in rows:
        print(f"{axis} = {row[0]:g}: g2(0) = {row[1]:.4f} +/- {row[2]:.4f}, FWHM = {row[3]:.4f}")
    if failures:
        raise RuntimeError(f"{len(failures)} of {len(values)} sweep points failed: {failures}")
    return EXIT_OK


# ---------------------------------------------------------------- validate


def run_validate(settings: dict, out: Path, manifest: Manifest) -> int:
    coefficients = settings.get("coefficients", "derived")
    n = settings.get("n_configs", 100)
    seed = settings.get("seed", 2024)
    manifest.update(config={"n_configs": n, "seed": seed, "coefficients": coefficients})
    report = run_validation(n_configs=n, seed=seed, build=partial(build_system, coefficients=coefficients))
    text = "\n".join(report.lines()) + "\n"
    path = out / "validation.txt"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    print(text, end="")
    manifest.update(
        outputs={str(path): sha256(path)},
        checks=[vars(c) for c in report.checks],
    )
    if not report.passed:
        failed = [c.name for c in report.checks if not c.passed]
        raise RuntimeError(f"validation failed: {', '.join(failed)}")
    return EXIT_OK


COMMANDS = {"pair": run_pair, "ensemble": run_ensemble, "sweep": run_sweep, "validate": run_validate}


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        settings = resolve_settings(args)
    except ConfigError as exc:
        settings, cfg_error = {}, exc
    else:
        cfg_error = None
    out = output_dir(settings if cfg_error is None else {"out": getattr(args, "out", None)})
    manifest = Manifest(args.command, out, argv)

    code = EXIT_OK
    try:
        if cfg_error is not None:
            raise cfg_error
        code = COMMANDS[args.command](settings, out, manifest)
        manifest.update(status="ok")
    except ConfigError as exc:
        code = EXIT_CONFIG
        manifest.update(status="failed", error=str(exc))
        print(f"error: {exc}", file=sys.stderr)
    except Exception as exc:
        code = EXIT_RUN
        manifest.update(status="failed", error=f"{type(exc).__name__}: {exc}",
                        traceback=traceback.format_exc(limit=5))
        print(f"error: {exc}", file=sys.stderr)
    finally:
        try:
            manifest.write()
        except OSError as exc:
            print(f"error: could not write manifest: {exc}", file=sys.stderr)
            code = code or EXIT_RUN
    return code


if __name__ == "__main__":
    raise SystemExit(main())
