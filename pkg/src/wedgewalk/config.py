"""Experiment configuration: a JSON object model with strict validation.

One config file describes one experiment.  Angles are written as exact
rational multiples of pi (``{"pi_num": 1, "pi_den": 4}``) and angle
grids as fractions of the wedge half-angle, so no trigonometric rounding
enters a config.  Unknown fields are rejected with a field-path message;
defaults are filled in and echoed back by ``resolved()`` so a manifest
fully determines every output.

Sweeps: for the ``simulate`` kind, ``model.c`` may be a list; it expands
into one batch per value with a suffixed output file.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional

from .geometry import RectFrame, WedgeSpec
from .models import FAMILIES, ModelSpec

KINDS = (
    "simulate",
    "tail-fit",
    "drift-check",
    "rect-exit",
    "boundary-scaling",
    "lyapunov-eval",
)

CHECKS = ("supermartingale", "submartingale", "lamperti")
LAMPERTI_FIELDS = ("g", "sqrt_f2")


class ConfigError(ValueError):
    """Validation failure with the offending field path."""

    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}" if path else message)


def _require(d: dict, key: str, path: str):
    if key not in d:
        raise ConfigError(f"{path}{key}", "missing required field")
    return d[key]


def _no_unknown(d: dict, allowed, path: str):
    for k in d:
        if k not in allowed:
            raise ConfigError(f"{path}{k}", "unknown field")


def _as_int(v, path: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        if isinstance(v, float) and v.is_integer():
            return int(v)
        raise ConfigError(path, f"expected an integer, got {v!r}")
    return v


def _as_num(v, path: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(path, f"expected a number, got {v!r}")
    return float(v)


def _as_num_list(v, path: str) -> List[float]:
    if not isinstance(v, list) or not v:
        raise ConfigError(path, "expected a nonempty array of numbers")
    return [_as_num(x, f"{path}[{i}]") for i, x in enumerate(v)]


def _as_int_list(v, path: str) -> List[int]:
    if not isinstance(v, list) or not v:
        raise ConfigError(path, "expected a nonempty array of integers")
    return [_as_int(x, f"{path}[{i}]") for i, x in enumerate(v)]


def parse_model(d: Any, path: str = "model.", allow_sweep: bool = False):
    """Returns (ModelSpec or None, c_values or None).  With allow_sweep,
    a list-valued ``c`` yields (None, [values])."""
    if not isinstance(d, dict):
        raise ConfigError(path.rstrip("."), "expected an object")
    _no_unknown(d, {"family", "c", "b", "eps_cap"}, path)
    family = _require(d, "family", path)
    if family not in FAMILIES:
        raise ConfigError(f"{path}family", f"expected one of {list(FAMILIES)}, got {family!r}")
    b = _as_int(d.get("b", 1), f"{path}b")
    eps_cap = _as_num(d.get("eps_cap", 0.125), f"{path}eps_cap")
    c_raw = d.get("c", 0.0)
    if isinstance(c_raw, list):
        if not allow_sweep:
            raise ConfigError(f"{path}c", "array-valued c is only allowed for simulate sweeps")
        values = _as_num_list(c_raw, f"{path}c")
        for v in values:
            _build_model(family, v, b, eps_cap, path)
        return None, values
    c = _as_num(c_raw, f"{path}c")
    return _build_model(family, c, b, eps_cap, path), None


def _build_model(family, c, b, eps_cap, path) -> ModelSpec:
    try:
        return ModelSpec(family=family, c=c, b=b, eps_cap=eps_cap)
    except ValueError as exc:
        raise ConfigError(path.rstrip("."), str(exc)) from exc


def parse_wedge(d: Any, path: str = "wedge.") -> WedgeSpec:
    if not isinstance(d, dict):
        raise ConfigError(path.rstrip("."), "expected an object")
    _no_unknown(d, {"alpha", "halfline_thickness", "excluded_radius"}, path)
    alpha = _require(d, "alpha", path)
    if not isinstance(alpha, dict):
        raise ConfigError(f"{path}alpha", "expected {pi_num, pi_den}")
    _no_unknown(alpha, {"pi_num", "pi_den"}, f"{path}alpha.")
    try:
        return WedgeSpec(
            pi_num=_as_int(_require(alpha, "pi_num", f"{path}alpha."), f"{path}alpha.pi_num"),
            pi_den=_as_int(_require(alpha, "pi_den", f"{path}alpha."), f"{path}alpha.pi_den"),
            halfline_thickness=_as_int(d.get("halfline_thickness", 1), f"{path}halfline_thickness"),
            excluded_radius=_as_num(d.get("excluded_radius", 0.0), f"{path}excluded_radius"),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(path.rstrip("."), str(exc)) from exc


@dataclass
class ExperimentConfig:
    kind: str
    raw: Dict[str, Any]        # resolved config (defaults filled)
    model: Optional[ModelSpec]
    c_sweep: Optional[List[float]]
    wedge: Optional[WedgeSpec]
    params: Dict[str, Any]     # kind-specific, validated

    def resolved(self) -> Dict[str, Any]:
        return self.raw


_COMMON_KEYS = {"kind"}


def parse_config(doc: Any) -> ExperimentConfig:
    """Validate a config document (dict or JSON string)."""
    if isinstance(doc, str):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise ConfigError("", f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("", "top-level config must be an object")
    kind = _require(doc, "kind", "")
    if kind not in KINDS:
        raise ConfigError("kind", f"expected one of {list(KINDS)}, got {kind!r}")
    parser = _KIND_PARSERS[kind]
    return parser(doc)


def _parse_simulate(doc: dict) -> ExperimentConfig:
    _no_unknown(doc, _COMMON_KEYS | {"model", "wedge", "start", "n_paths", "t_max",
                                     "master_seed"}, "")
    model, sweep = parse_model(_require(doc, "model", ""), allow_sweep=True)
    wedge = parse_wedge(_require(doc, "wedge", ""))
    start = _as_int_list(_require(doc, "start", ""), "start")
    if len(start) != 2:
        raise ConfigError("start", "expected a 2-vector of integers")
    n_paths = _as_int(_require(doc, "n_paths", ""), "n_paths")
    if n_paths < 0:
        raise ConfigError("n_paths", "must be nonnegative")
    t_max = _as_int(_require(doc, "t_max", ""), "t_max")
    if t_max < 1:
        raise ConfigError("t_max", "must be a positive integer")
    master_seed = _as_int(_require(doc, "master_seed", ""), "master_seed")
    b_val = model.b if model is not None else _as_int(doc["model"].get("b", 1), "model.b")
    if wedge.is_halfline and wedge.halfline_thickness != b_val:
        raise ConfigError("wedge.halfline_thickness",
                          "for alpha = pi the thickness must equal the model jump bound b")
    resolved = {
        "kind": "simulate",
        "model": _model_dict(model, sweep, doc["model"]),
        "wedge": _wedge_dict(wedge),
        "start": start,
        "n_paths": n_paths,
        "t_max": t_max,
        "master_seed": master_seed,
    }
    return ExperimentConfig(
        kind="simulate", raw=resolved, model=model, c_sweep=sweep, wedge=wedge,
        params={"start": (start[0], start[1]), "n_paths": n_paths, "t_max": t_max,
                "master_seed": master_seed},
    )


def _parse_tail_fit(doc: dict) -> ExperimentConfig:
    _no_unknown(doc, _COMMON_KEYS | {"samples_csv", "window", "points_per_octave"}, "")
    samples_csv = _require(doc, "samples_csv", "")
    if not isinstance(samples_csv, str):
        raise ConfigError("samples_csv", "expected a path string")
    window = _require(doc, "window", "")
    if not isinstance(window, dict):
        raise ConfigError("window", "expected {t_lo, t_hi}")
    _no_unknown(window, {"t_lo", "t_hi"}, "window.")
    t_lo = _as_int(_require(window, "t_lo", "window."), "window.t_lo")
    t_hi = _as_int(_require(window, "t_hi", "window."), "window.t_hi")
    if not (0 < t_lo < t_hi):
        raise ConfigError("window", "need 0 < t_lo < t_hi")
    ppo = _as_int(doc.get("points_per_octave", 8), "points_per_octave")
    if ppo < 1:
        raise ConfigError("points_per_octave", "must be >= 1")
    resolved = {"kind": "tail-fit", "samples_csv": samples_csv,
                "window": {"t_lo": t_lo, "t_hi": t_hi}, "points_per_octave": ppo}
    return ExperimentConfig(
        kind="tail-fit", raw=resolved, model=None, c_sweep=None, wedge=None,
        params={"samples_csv": samples_csv, "window": (t_lo, t_hi),
                "points_per_octave": ppo},
    )


def _angle_grid(doc: dict, wedge: WedgeSpec, key: str):
    fracs = _as_num_list(_require(doc, key, ""), key)
    for i, f in enumerate(fracs):
        if not (-1.0 <= f <= 1.0):
            raise ConfigError(f"{key}[{i}]", "angle fraction must lie in [-1, 1]")
    return fracs, [f * wedge.alpha for f in fracs]


_DRIFT_CHECK_FIELDS = {
    "supermartingale": {"w", "gamma"},
    "submartingale": {"gamma"},
    "lamperti": {"h", "p0", "r_exp", "require"},
}


def _parse_drift_check(doc: dict) -> ExperimentConfig:
    check = _require(doc, "check", "")
    if check not in CHECKS:
        raise ConfigError("check", f"expected one of {list(CHECKS)}, got {check!r}")
    allowed = _COMMON_KEYS | {"check", "model", "wedge", "radii", "angles_frac"} \
        | _DRIFT_CHECK_FIELDS[check]
    _no_unknown(doc, allowed, "")
    model, _ = parse_model(_require(doc, "model", ""))
    wedge = parse_wedge(_require(doc, "wedge", ""))
    radii = _as_num_list(_require(doc, "radii", ""), "radii")
    fracs, angles = _angle_grid(doc, wedge, "angles_frac")
    params: Dict[str, Any] = {"check": check, "radii": radii, "angles": angles}
    resolved = {
        "kind": "drift-check", "check": check,
        "model": _model_dict(model, None, doc["model"]),
        "wedge": _wedge_dict(wedge), "radii": radii, "angles_frac": fracs,
    }
    if check == "supermartingale":
        w = _as_num(_require(doc, "w", ""), "w")
        gamma = _as_num(_require(doc, "gamma", ""), "gamma")
        if not (0 < w * wedge.alpha < math.pi / 2):
            raise ConfigError("w", "requires 0 < w < pi/(2 alpha)")
        if not (0 < gamma < 1):
            raise ConfigError("gamma", "requires gamma in (0, 1)")
        params.update(w=w, gamma=gamma)
        resolved.update(w=w, gamma=gamma)
    elif check == "submartingale":
        gamma = _as_num(_require(doc, "gamma", ""), "gamma")
        if gamma <= 1:
            raise ConfigError("gamma", "requires gamma > 1")
        params.update(gamma=gamma)
        resolved.update(gamma=gamma)
    else:  # lamperti
        h = doc.get("h", "g")
        if h not in LAMPERTI_FIELDS:
            raise ConfigError("h", f"expected one of {list(LAMPERTI_FIELDS)}, got {h!r}")
        p0 = _as_num(_require(doc, "p0", ""), "p0")
        r_exp = _as_num(doc.get("r_exp", 2.0), "r_exp")
        if r_exp <= 1:
            raise ConfigError("r_exp", "must exceed 1")
        require = doc.get("require", "noncon1")
        if require not in ("noncon1", "existence"):
            raise ConfigError("require", "expected 'noncon1' or 'existence'")
        params.update(h=h, p0=p0, r_exp=r_exp, require=require)
        resolved.update(h=h, p0=p0, r_exp=r_exp, require=require)
    return ExperimentConfig(
        kind="drift-check", raw=resolved, model=model, c_sweep=None, wedge=wedge,
        params=params,
    )


def _parse_rect_exit(doc: dict) -> ExperimentConfig:
    _no_unknown(doc, _COMMON_KEYS | {"model", "frame", "N_list", "y", "z",
                                     "n_paths", "master_seed", "cap_factor"}, "")
    model, _ = parse_model(_require(doc, "model", ""))
    frame = _require(doc, "frame", "")
    if not isinstance(frame, dict):
        raise ConfigError("frame", "expected {i, h}")
    _no_unknown(frame, {"i", "h"}, "frame.")
    i = _as_int(frame.get("i", 4), "frame.i")
    h = _as_num(frame.get("h", 1.0), "frame.h")
    n_list = _as_int_list(_require(doc, "N_list", ""), "N_list")
    y = _as_int(doc.get("y", 0), "y")
    z = _as_int(doc.get("z", 0), "z")
    n_paths = _as_int(_require(doc, "n_paths", ""), "n_paths")
    master_seed = _as_int(_require(doc, "master_seed", ""), "master_seed")
    cap_factor = _as_int(doc.get("cap_factor", 100), "cap_factor")
    for N in n_list:
        try:
            RectFrame(i=i, N=N, h=h)
        except ValueError as exc:
            raise ConfigError("frame", str(exc)) from exc
        if abs(y) > 2 * h * N:
            raise ConfigError("y", f"|y| must be <= 2 h N for N={N}")
    if model is not None and abs(z) > model.b:
        raise ConfigError("z", "|z| must be <= the model jump bound b")
    resolved = {
        "kind": "rect-exit", "model": _model_dict(model, None, doc["model"]),
        "frame": {"i": i, "h": h}, "N_list": n_list, "y": y, "z": z,
        "n_paths": n_paths, "master_seed": master_seed, "cap_factor": cap_factor,
    }
    return ExperimentConfig(
        kind="rect-exit", raw=resolved, model=model, c_sweep=None, wedge=None,
        params={"i": i, "h": h, "N_list": n_list, "y": y, "z": z, "n_paths": n_paths,
                "master_seed": master_seed, "cap_factor": cap_factor},
    )


def _parse_boundary_scaling(doc: dict) -> ExperimentConfig:
    _no_unknown(doc, _COMMON_KEYS | {"model", "wedge", "r", "phis_frac", "eps1",
                                     "n_paths", "master_seed"}, "")
    model, _ = parse_model(_require(doc, "model", ""))
    wedge = parse_wedge(_require(doc, "wedge", ""))
    r = _as_num(_require(doc, "r", ""), "r")
    if r <= 0:
        raise ConfigError("r", "must be positive")
    fracs, phis = _angle_grid(doc, wedge, "phis_frac")
    eps1 = _as_num(doc.get("eps1", 0.05), "eps1")
    if eps1 <= 0:
        raise ConfigError("eps1", "must be positive")
    n_paths = _as_int(_require(doc, "n_paths", ""), "n_paths")
    master_seed = _as_int(_require(doc, "master_seed", ""), "master_seed")
    resolved = {
        "kind": "boundary-scaling", "model": _model_dict(model, None, doc["model"]),
        "wedge": _wedge_dict(wedge), "r": r, "phis_frac": fracs, "eps1": eps1,
        "n_paths": n_paths, "master_seed": master_seed,
    }
    return ExperimentConfig(
        kind="boundary-scaling", raw=resolved, model=model, c_sweep=None, wedge=wedge,
        params={"r": r, "phis": phis, "eps1": eps1, "n_paths": n_paths,
                "master_seed": master_seed},
    )


def _parse_lyapunov_eval(doc: dict) -> ExperimentConfig:
    _no_unknown(doc, _COMMON_KEYS | {"model", "wedge", "w", "p", "radii",
                                     "angles_frac"}, "")
    model, _ = parse_model(_require(doc, "model", ""))
    wedge = parse_wedge(_require(doc, "wedge", ""))
    w = _as_num(_require(doc, "w", ""), "w")
    if w <= 0:
        raise ConfigError("w", "must be positive")
    p = _as_int(doc.get("p", 1), "p")
    if p not in (1, 2):
        raise ConfigError("p", "expected 1 (mean) or 2 (second moment)")
    radii = _as_num_list(_require(doc, "radii", ""), "radii")
    fracs, angles = _angle_grid(doc, wedge, "angles_frac")
    resolved = {
        "kind": "lyapunov-eval", "model": _model_dict(model, None, doc["model"]),
        "wedge": _wedge_dict(wedge), "w": w, "p": p, "radii": radii,
        "angles_frac": fracs,
    }
    return ExperimentConfig(
        kind="lyapunov-eval", raw=resolved, model=model, c_sweep=None, wedge=wedge,
        params={"w": w, "p": p, "radii": radii, "angles": angles},
    )


def _model_dict(model: Optional[ModelSpec], sweep: Optional[List[float]], raw: dict) -> dict:
    if model is not None:
        return {"family": model.family, "c": model.c, "b": model.b,
                "eps_cap": model.eps_cap}
    return {"family": raw["family"], "c": sweep, "b": raw.get("b", 1),
            "eps_cap": raw.get("eps_cap", 0.125)}


def _wedge_dict(w: WedgeSpec) -> dict:
    return {"alpha": {"pi_num": w.pi_num, "pi_den": w.pi_den},
            "halfline_thickness": w.halfline_thickness,
            "excluded_radius": w.excluded_radius}


_KIND_PARSERS = {
    "simulate": _parse_simulate,
    "tail-fit": _parse_tail_fit,
    "drift-check": _parse_drift_check,
    "rect-exit": _parse_rect_exit,
    "boundary-scaling": _parse_boundary_scaling,
    "lyapunov-eval": _parse_lyapunov_eval,
}
