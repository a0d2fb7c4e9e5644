"""Command-line front end: config parsing, orchestration, serialization.

Every subcommand is a pure function of (config file, seed): outputs embed
the config hash and are byte-identical across reruns and worker counts.
Floats are serialized with 17 significant digits so values round-trip
exactly.

Exit codes: 0 success, 1 numeric failure, 2 config error, 3 verification
failure.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import math
import sys
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import __version__, bounds, checks, expansion, pathmc
from .errors import ConfigError, IntervalGasError, RadiusExceededWarning
from .kernel import KernelKind
from .model import ModelParams, RadialCutoff, capital_lambda

_MODEL_KEYS = {"dimension", "cutoff", "radius", "width", "scale", "exponent",
               "amplitude", "lambda", "momentum", "momentum_direction",
               "kernel"}
_EXPANSION_KEYS = {"max_order", "tree_mode", "samples_per_tree", "batch_size",
                   "workers", "seed"}
_BOUNDS_KEYS = {"radii"}
_PATHMC_KEYS = {"horizons", "steps_per_unit", "samples", "batch_size"}
_OUTPUT_KEYS = {"format", "path"}
_SECTIONS = {"model": _MODEL_KEYS, "expansion": _EXPANSION_KEYS,
             "bounds": _BOUNDS_KEYS, "pathmc": _PATHMC_KEYS,
             "output": _OUTPUT_KEYS}


@dataclass(frozen=True)
class RunConfig:
    params: ModelParams
    max_order: int
    mc: expansion.McConfig
    radii_mode: str
    horizons: tuple[float, ...]
    steps_per_unit: int
    path_samples: int
    path_batch: int
    out_format: str
    out_path: str | None
    config_hash: str


def _get(section, key, cast, default, path):
    raw = section.get(key)
    if raw is None:
        return default
    try:
        return cast(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: bad value for {key!r}: {raw!r}") from exc


def parse_config(path: str, seed_override: int | None = None) -> RunConfig:
    """Parse and validate the plain-text key-value config; unknown keys or
    sections are rejected."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
        cp.read_string(blob.decode("utf-8"), source=path)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except (configparser.Error, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    for name in cp.sections():
        if name not in _SECTIONS:
            raise ConfigError(f"{path}: unknown section [{name}]")
        for key in cp[name]:
            if key not in _SECTIONS[name]:
                raise ConfigError(f"{path}: unknown key {key!r} in [{name}]")
    if "model" not in cp:
        raise ConfigError(f"{path}: missing required section [model]")
    m = cp["model"]
    dimension = _get(m, "dimension", int, 3, path)
    family = _get(m, "cutoff", str, None, path)
    if family is None:
        raise ConfigError(f"{path}: [model] needs a cutoff family")
    amplitude = _get(m, "amplitude", float, 1.0, path)
    try:
        if family == "sharp":
            cutoff = RadialCutoff.sharp(_require(m, "radius", float, path),
                                        amplitude)
        elif family == "gaussian":
            cutoff = RadialCutoff.gaussian(_require(m, "width", float, path),
                                           amplitude)
        elif family == "powerlaw":
            cutoff = RadialCutoff.powerlaw(_require(m, "scale", float, path),
                                           _require(m, "exponent", float, path),
                                           amplitude)
        else:
            raise ConfigError(f"{path}: unknown cutoff family {family!r}")
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    lam = _get(m, "lambda", float, 0.0, path)
    p_mag = _get(m, "momentum", float, 0.0, path)
    raw_dir = m.get("momentum_direction")
    if raw_dir is None:
        direction = np.zeros(dimension)
        direction[0] = 1.0
    else:
        try:
            direction = np.array([float(v) for v in raw_dir.split()])
        except ValueError as exc:
            raise ConfigError(f"{path}: bad momentum_direction") from exc
        if direction.shape != (dimension,) or not np.linalg.norm(direction):
            raise ConfigError(f"{path}: momentum_direction must be a nonzero "
                              f"{dimension}-vector")
        direction = direction / np.linalg.norm(direction)
    kernel_name = _get(m, "kernel", str, "brownian", path)
    try:
        kind = KernelKind(kernel_name)
    except ValueError as exc:
        raise ConfigError(f"{path}: unknown kernel {kernel_name!r}") from exc
    try:
        params = ModelParams(dimension=dimension, coupling=lam,
                             momentum=p_mag * direction, kernel=kind,
                             cutoff=cutoff)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    e = cp["expansion"] if "expansion" in cp else {}
    seed = _get(e, "seed", int, 0, path)
    if seed_override is not None:
        seed = seed_override
    try:
        mc = expansion.McConfig(
            samples_per_tree=_get(e, "samples_per_tree", int, 20_000, path),
            seed=seed,
            batch_size=_get(e, "batch_size", int, 2_500, path),
            workers=_get(e, "workers", int, 1, path),
            tree_mode=_get(e, "tree_mode", str, "auto", path))
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    max_order = _get(e, "max_order", int, 2, path)
    if max_order < 0:
        raise ConfigError(f"{path}: max_order must be >= 0")

    b = cp["bounds"] if "bounds" in cp else {}
    radii_mode = _get(b, "radii", str, "both", path)
    if radii_mode not in ("both", "ho", "translation"):
        raise ConfigError(f"{path}: radii must be both|ho|translation")

    pm = cp["pathmc"] if "pathmc" in cp else {}
    raw_h = pm.get("horizons") if pm else None
    if raw_h is None:
        horizons = (4.0, 8.0, 16.0)
    else:
        try:
            horizons = tuple(float(v) for v in raw_h.split())
        except ValueError as exc:
            raise ConfigError(f"{path}: bad horizons list") from exc
        if not horizons or any(h <= 0 for h in horizons):
            raise ConfigError(f"{path}: horizons must be positive")
    steps_per_unit = _get(pm, "steps_per_unit", int, 8, path)
    path_samples = _get(pm, "samples", int, 1024, path)
    path_batch = _get(pm, "batch_size", int, 256, path)

    o = cp["output"] if "output" in cp else {}
    out_format = _get(o, "format", str, "json", path)
    if out_format not in ("json", "csv"):
        raise ConfigError(f"{path}: output format must be json|csv")
    out_path = _get(o, "path", str, None, path)

    # the hash identifies the numeric content of the run: scheduling
    # (worker count) and output routing are excluded so identical math
    # yields identical payloads
    canon = []
    for name in sorted(cp.sections()):
        if name == "output":
            continue
        for key in sorted(cp[name]):
            if (name, key) == ("expansion", "workers"):
                continue
            value = str(seed) if (name, key) == ("expansion", "seed") \
                else cp[name][key]
            canon.append(f"{name}.{key}={value}")
    digest = hashlib.sha256("\n".join(canon).encode()).hexdigest()

    return RunConfig(params=params, max_order=max_order, mc=mc,
                     radii_mode=radii_mode, horizons=horizons,
                     steps_per_unit=steps_per_unit,
                     path_samples=path_samples, path_batch=path_batch,
                     out_format=out_format, out_path=out_path,
                     config_hash=digest)


def _require(section, key, cast, path):
    raw = section.get(key)
    if raw is None:
        raise ConfigError(f"{path}: [model] cutoff needs key {key!r}")
    return cast(raw)


# ---------------------------------------------------------------------------
# serialization with 17 significant digits


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


def dumps_17g(obj, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        rows = [f'{pad}  "{k}": {dumps_17g(v, indent + 1)}'
                for k, v in obj.items()]
        return "{\n" + ",\n".join(rows) + f"\n{pad}}}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        rows = [f"{pad}  {dumps_17g(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(rows) + f"\n{pad}]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, float):
        return _fmt_float(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    return '"' + str(obj).replace("\\", "\\\\").replace('"', '\\"') + '"'


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _provenance(cfg: RunConfig) -> dict:
    return {"seed": cfg.mc.seed, "version": __version__,
            "config_hash": cfg.config_hash}


def _coeff_rows(coeffs) -> list:
    return [{"order": c.order, "value": c.value, "stderr": c.stderr,
             "samples": c.samples, "mode": c.mode} for c in coeffs]


def _radii_payload(cfg: RunConfig) -> dict:
    params = cfg.params
    out: dict = {}
    if cfg.radii_mode in ("both", "translation"):
        out["lambda0_thm"] = bounds.lambda0_translation_theorem(
            params.cutoff, params.dimension, params.p_abs)
        out["lambda0_section"] = bounds.lambda0_translation(
            params.cutoff, params.dimension, params.p_abs)
        out["printed_forms_disagree_for_nonzero_P"] = params.p_abs > 0
    if cfg.radii_mode in ("both", "ho"):
        lam_cap = capital_lambda(params.cutoff, params.dimension)
        out["lambda0_ho"] = (2.0 * math.e * lam_cap.value ** 2) ** -0.5
        out["lambda_sup_tail_decreasing"] = lam_cap.tail_decreasing
    return out


def run_energy(cfg: RunConfig) -> str:
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RadiusExceededWarning)
        series = expansion.ground_state_energy(cfg.params, cfg.max_order,
                                               cfg.mc)
        radius_flag = any(issubclass(w.category, RadiusExceededWarning)
                          for w in caught)
    payload = {
        "coefficients": _coeff_rows(series.coefficients),
        "energy": {"value": series.value, "stat_error": series.stat_error,
                   "truncation_bound": series.truncation_bound},
        "radii": _radii_payload(cfg),
        "radius_exceeded": radius_flag,
        "provenance": _provenance(cfg),
    }
    return dumps_17g(payload) + "\n"


def run_mass(cfg: RunConfig) -> str:
    series = expansion.effective_mass(cfg.params, max(cfg.max_order, 1),
                                      cfg.mc)
    payload = {
        "coefficients": _coeff_rows(series.coefficients),
        "mass": {"value": series.value, "stat_error": series.stat_error},
        "c2_closed_form": expansion.c2_closed_form(cfg.params.cutoff,
                                                   cfg.params.dimension),
        "heavier_than_free": series.heavier_than_free,
        "radii": _radii_payload(cfg),
        "provenance": _provenance(cfg),
    }
    return dumps_17g(payload) + "\n"


def run_coeffs(cfg: RunConfig) -> str:
    coeffs = [expansion.energy_coefficient(n, cfg.params, cfg.mc)
              for n in range(1, cfg.max_order + 1)]
    payload = {"coefficients": _coeff_rows(coeffs),
               "provenance": _provenance(cfg)}
    return dumps_17g(payload) + "\n"


def run_bounds(cfg: RunConfig) -> str:
    params = cfg.params
    payload: dict = {"radii": _radii_payload(cfg)}
    lam = params.coupling
    tails: dict = {}
    if cfg.radii_mode in ("both", "translation"):
        tail = bounds.gamma_tail_translation(lam, params.p_abs, params.cutoff,
                                             params.dimension, from_order=1)
        tails["translation"] = {"terms": list(tail.terms[:8]),
                                "total": tail.total, "ratio": tail.ratio,
                                "radius": tail.radius}
    if cfg.radii_mode in ("both", "ho"):
        tail = bounds.gamma_tail_oscillator(lam, params.cutoff,
                                            params.dimension, from_order=1)
        tails["oscillator"] = {"terms": list(tail.terms[:8]),
                               "majorant_terms": list(tail.majorant_terms[:8]),
                               "total": tail.total, "ratio": tail.ratio,
                               "radius": tail.radius}
    payload["tails"] = tails
    payload["provenance"] = _provenance(cfg)
    return dumps_17g(payload) + "\n"


def run_pathmc(cfg: RunConfig) -> str:
    configs = []
    for T in cfg.horizons:
        steps = max(8, int(math.ceil(T * cfg.steps_per_unit)))
        configs.append(pathmc.PathConfig(horizon=T, grid_steps=steps,
                                         samples=cfg.path_samples,
                                         seed=cfg.mc.seed,
                                         batch_size=cfg.path_batch))
    result = pathmc.energy_from_paths(cfg.params, configs,
                                      workers=cfg.mc.workers)
    lines = ["T,logZ,logZ_stderr,energy,extrapolated"]
    for row in result.rows:
        lines.append(",".join(_fmt_float(v) for v in
                              (row.horizon, row.log_z, row.log_z_stderr,
                               row.energy, result.extrapolated)))
    return "\n".join(lines) + "\n"


def run_verify(cfg: RunConfig) -> tuple[str, bool]:
    results = checks.run_all(seed=cfg.mc.seed, workers=cfg.mc.workers)
    ok = all(r.passed for r in results)
    lines = []
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        lines.append(f"{status} {r.name}: measured {r.measured:.3g} "
                     f"(tolerance {r.tolerance:.3g}) - {r.detail}")
    report = {
        "checks": [{"name": r.name, "passed": r.passed,
                    "measured": r.measured, "tolerance": r.tolerance,
                    "detail": r.detail} for r in results],
        "all_passed": ok,
        "provenance": _provenance(cfg),
    }
    return "\n".join(lines) + "\n" + dumps_17g(report) + "\n", ok


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="intervalgas",
        description="Tree-expansion and path-integral estimates for the "
                    "ground-state energy of a particle coupled to a "
                    "massless boson field")
    parser.add_argument("command",
                        choices=["energy", "mass", "bounds", "verify",
                                 "pathmc", "coeffs"])
    parser.add_argument("config", help="path to the run configuration file")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the configured seed")
    parser.add_argument("--output", default=None,
                        help="override the configured output path")
    args = parser.parse_args(argv)
    try:
        cfg = parse_config(args.config, seed_override=args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out_path = args.output if args.output is not None else cfg.out_path
    try:
        if args.command == "energy":
            _emit(run_energy(cfg), out_path)
        elif args.command == "mass":
            _emit(run_mass(cfg), out_path)
        elif args.command == "coeffs":
            _emit(run_coeffs(cfg), out_path)
        elif args.command == "bounds":
            _emit(run_bounds(cfg), out_path)
        elif args.command == "pathmc":
            _emit(run_pathmc(cfg), out_path)
        elif args.command == "verify":
            text, ok = run_verify(cfg)
            _emit(text, out_path)
            if not ok:
                return 3
    except IntervalGasError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"invalid run: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
