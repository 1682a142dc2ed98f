"""Layered experiment configuration.

Config files are flat ``key = value`` text with section prefixes::

    # a short desk run
    model.delta = 3
    model.mu1 = 2
    model.mu2 = 5
    model.sigma = 10
    run.T = 300

Resolution order is defaults < preset < file < command-line flags.  Every
error names the offending key and where it came from.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

from .errors import ConfigError, ModelError
from .model import DurationPmf, ModelParams

REQUIRED = ("model.delta", "model.mu1", "model.mu2", "model.sigma")

DEFAULTS: Dict[str, str] = {
    "model.p1": "uniform",
    "model.p2": "uniform",
    "model.mu0": "0",
    "run.T": "200",
    "run.J": "100000",
    "run.scale": "0.1",
    "run.alpha": "0.01",
    "run.sigma_grid": "",
    "run.seed": "0",
    "run.threads": "1",
    "run.init_mode": "model",
    "run.window": "full",
    "run.budget": "100000",
    "run.bound_mode": "paper-faithful",
    "run.refine": "true",
    "run.n_boot": "50",
    "run.preset": "",
    "output.dir": "randur-out",
}

KNOWN_KEYS = frozenset(REQUIRED) | frozenset(DEFAULTS)

# J is given at the full protocol size; run.scale shrinks it.
PRESETS: Dict[str, Dict[str, str]] = {
    "fig1": {
        "model.delta": "3", "model.mu1": "2", "model.mu2": "5", "model.sigma": "10",
        "run.T": "300", "run.alpha": "0.01", "run.window": "0.8",
    },
    "fig_pmiss_sigma": {
        "model.delta": "3", "model.mu1": "2", "model.mu2": "5", "model.sigma": "10",
        "run.T": "200", "run.alpha": "0.01", "run.sigma_grid": "5,10,15,20,25",
    },
    "fig_exponent_vs_bound": {
        "model.delta": "3", "model.mu1": "2", "model.mu2": "5", "model.sigma": "10",
        "run.T": "1000", "run.alpha": "0.01", "run.window": "full",
        "run.sigma_grid": "5,10,15,20,25,30,35,40,45,50",
    },
    "fig_mu1zero": {
        "model.delta": "2", "model.mu1": "0", "model.mu2": "1", "model.sigma": "0.3",
        "run.T": "100", "run.alpha": "0.01", "run.window": "0.8",
        "run.sigma_grid": "0.2,0.3,0.33,0.37,0.4,0.45,0.5,0.6",
    },
    "fig_dishwasher": {
        "model.delta": "10", "model.mu1": "66", "model.mu2": "2200", "model.mu0": "90",
        "model.sigma": "90", "run.T": "30", "run.alpha": "0.01",
        "run.sigma_grid": "70,80,90,100,110",
    },
}


@dataclass(frozen=True)
class ExperimentConfig:
    params: ModelParams
    T: int
    J: int
    scale: float
    alpha: float
    sigma_grid: Tuple[float, ...]
    seed: int
    threads: int
    init_mode: str
    window: str
    budget: int
    bound_mode: str
    refine: bool
    n_boot: int
    preset: Optional[str]
    output_dir: Path
    raw: Mapping[str, str]

    @property
    def n_runs(self) -> int:
        """Monte Carlo runs per hypothesis after scaling."""
        return max(1, int(round(self.J * self.scale)))

    @property
    def fit_window(self):
        return "full" if self.window == "full" else float(self.window)

    def sigmas(self) -> Tuple[float, ...]:
        return self.sigma_grid or (self.params.sigma,)

    def to_dict(self) -> dict:
        """Resolved configuration; worker count and output location excluded."""
        return {
            "params": self.params.to_dict(), "T": self.T, "J": self.J, "scale": self.scale,
            "n_runs": self.n_runs, "alpha": self.alpha, "sigma_grid": list(self.sigma_grid),
            "seed": self.seed, "init_mode": self.init_mode, "window": self.window,
            "budget": self.budget, "bound_mode": self.bound_mode, "refine": self.refine,
            "n_boot": self.n_boot, "preset": self.preset,
        }

    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def read_config_file(path) -> Dict[str, Tuple[str, str]]:
    """Parse a config file into ``key -> (value, origin)``."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    entries: Dict[str, Tuple[str, str]] = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line.strip()!r}")
        key, value = (part.strip() for part in text.split("=", 1))
        origin = f"{path}:{lineno}"
        if key not in KNOWN_KEYS:
            raise ConfigError(f"{origin}: unknown key {key!r}")
        entries[key] = (value, origin)
    return entries


def parse_overrides(items: Iterable[str]) -> Dict[str, Tuple[str, str]]:
    """``KEY=VALUE`` strings from the command line."""
    out: Dict[str, Tuple[str, str]] = {}
    for item in items:
        if "=" not in item:
            raise ConfigError(f"flag: expected KEY=VALUE, got {item!r}")
        key, value = (part.strip() for part in item.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError(f"flag: unknown key {key!r}")
        out[key] = (value, "flag")
    return out


def _convert(key, value, origin, kind):
    try:
        return kind(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{origin}: bad value {value!r} for {key}") from None


def _boolean(value: str) -> bool:
    lowered = value.lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(value)


def _floats(value: str) -> Tuple[float, ...]:
    return tuple(float(v) for v in value.replace(";", ",").split(",") if v.strip())


def _pmf(value: str, delta: int) -> DurationPmf:
    if value.strip().lower() == "uniform":
        return DurationPmf.uniform(delta)
    return DurationPmf(_floats(value))


def resolve(file_entries: Optional[Mapping[str, Tuple[str, str]]] = None,
            flag_entries: Optional[Mapping[str, Tuple[str, str]]] = None,
            preset: Optional[str] = None) -> ExperimentConfig:
    file_entries = dict(file_entries or {})
    flag_entries = dict(flag_entries or {})
    if preset is None:
        for layer in (flag_entries, file_entries):
            if "run.preset" in layer and layer["run.preset"][0]:
                preset = layer["run.preset"][0]
                break
    merged: Dict[str, Tuple[str, str]] = {k: (v, "default") for k, v in DEFAULTS.items()}
    if preset:
        if preset not in PRESETS:
            raise ConfigError(f"run.preset: unknown preset {preset!r} (known: {', '.join(sorted(PRESETS))})")
        merged.update({k: (v, f"preset {preset}") for k, v in PRESETS[preset].items()})
        merged["run.preset"] = (preset, f"preset {preset}")
    merged.update(file_entries)
    merged.update(flag_entries)
    if preset:
        merged["run.preset"] = (preset, f"preset {preset}")

    missing = [k for k in REQUIRED if k not in merged]
    if missing:
        raise ConfigError("missing required keys: " + ", ".join(missing))

    def get(key, kind=str):
        value, origin = merged[key]
        return _convert(key, value, origin, kind)

    delta = get("model.delta", int)
    try:
        params = ModelParams(
            delta,
            _convert("model.p1", merged["model.p1"][0], merged["model.p1"][1], lambda v: _pmf(v, delta)),
            _convert("model.p2", merged["model.p2"][0], merged["model.p2"][1], lambda v: _pmf(v, delta)),
            get("model.mu1", float), get("model.mu2", float), get("model.sigma", float),
            get("model.mu0", float),
        )
    except ModelError as exc:
        raise ConfigError(f"model: {exc}") from None

    cfg = ExperimentConfig(
        params=params,
        T=get("run.T", int), J=get("run.J", int), scale=get("run.scale", float),
        alpha=get("run.alpha", float), sigma_grid=get("run.sigma_grid", _floats),
        seed=get("run.seed", int), threads=get("run.threads", int),
        init_mode=get("run.init_mode"), window=get("run.window"),
        budget=get("run.budget", int), bound_mode=get("run.bound_mode"),
        refine=get("run.refine", _boolean), n_boot=get("run.n_boot", int),
        preset=get("run.preset") or None, output_dir=Path(get("output.dir")),
        raw={k: v for k, (v, _) in sorted(merged.items())},
    )
    _validate(cfg, merged)
    return cfg


def _validate(cfg: ExperimentConfig, merged) -> None:
    checks: List[Tuple[str, bool, str]] = [
        ("run.T", cfg.T >= 1, "must be >= 1"),
        ("run.J", cfg.J >= 1, "must be >= 1"),
        ("run.scale", cfg.scale > 0, "must be > 0"),
        ("run.alpha", 0 < cfg.alpha < 1, "must lie in (0, 1)"),
        ("run.threads", cfg.threads >= 1, "must be >= 1"),
        ("run.budget", cfg.budget >= 1, "must be >= 1"),
        ("run.n_boot", cfg.n_boot >= 0, "must be >= 0"),
        ("run.sigma_grid", all(s > 0 for s in cfg.sigma_grid), "entries must be > 0"),
        ("run.init_mode", cfg.init_mode in ("model", "paper"), "must be 'model' or 'paper'"),
        ("run.bound_mode", cfg.bound_mode in ("paper-faithful", "mass-weighted"),
         "must be 'paper-faithful' or 'mass-weighted'"),
    ]
    if cfg.window != "full":
        try:
            ok = 0 <= float(cfg.window) < 1
        except ValueError:
            ok = False
        checks.append(("run.window", ok, "must be 'full' or a fraction in [0, 1)"))
    for key, ok, msg in checks:
        if not ok:
            value, origin = merged[key]
            raise ConfigError(f"{origin}: {key} = {value!r} {msg}")


def parse_config(path=None, overrides: Iterable[str] = (), preset: Optional[str] = None) -> ExperimentConfig:
    """Resolve a config from an optional file, ``KEY=VALUE`` flags and a preset."""
    file_entries = read_config_file(path) if path else {}
    return resolve(file_entries, parse_overrides(overrides), preset)
