"""Run configuration: defaults, key=value config files, CLI overrides.

A run is fully described by a flat set of keys.  Files use one `key = value`
pair per line with `#` comments.  The same keys can be overridden from the
command line; the resolved configuration is echoed next to the outputs so a
run can be reproduced from its artifacts alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

from .physics import TWO_PI, ModelParams


class ConfigError(ValueError):
    """Malformed, unknown, or inconsistent configuration input."""


_MU0_MODES = ("consistent", "zero")

# key -> (python type, RunConfig attribute); booleans accept true/false/1/0
_KEYS = {
    "eps": (float, "eps"),
    "theta0": (float, "theta0"),
    "sigma": (float, "sigma"),
    "delta": (float, "delta"),
    "tau": (float, "tau"),
    "mesh": (int, "mesh_subdivisions"),
    "length": (float, "length"),
    "g": (str, "g_kind"),
    "seed": (int, "seed"),
    "steps": (int, "n_steps"),
    "tmax": (float, "tmax"),
    "phi0_scale": (float, "phi0_scale"),
    "phi0_offset": (float, "phi0_offset"),
    "c0_scale": (float, "c0_scale"),
    "c0_offset": (float, "c0_offset"),
    "mu0": (str, "mu0_mode"),
    "out": (str, "outdir"),
    "dump_every": (int, "dump_every"),
    "diag_every": (int, "diag_every"),
    "figures": (bool, "figures"),
}


@dataclass
class RunConfig:
    """Everything needed to reproduce one simulation run."""

    eps: float = 0.15
    theta0: float = 7.0
    sigma: float = 0.1
    delta: float = 1e-3
    tau: float = 1e-3
    mesh_subdivisions: int = 60
    length: float = TWO_PI
    g_kind: str = "quadratic"
    seed: int = 1
    n_steps: int = 1000
    tmax: float | None = None
    phi0_scale: float = 0.08
    phi0_offset: float = 0.2
    c0_scale: float = 0.1
    c0_offset: float = 0.4
    mu0_mode: str = "consistent"
    outdir: str | None = None
    dump_every: int = 0
    diag_every: int = 1
    figures: bool = True
    explicit: set = field(default_factory=set, repr=False, compare=False)

    def params(self) -> ModelParams:
        try:
            return ModelParams(
                eps=self.eps, theta0=self.theta0, sigma=self.sigma, delta=self.delta,
                tau=self.tau, M=self.mesh_subdivisions, L=self.length,
                g_kind=self.g_kind,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def validate(self) -> "RunConfig":
        if self.mu0_mode not in _MU0_MODES:
            raise ConfigError(f"mu0 must be one of {_MU0_MODES}, got {self.mu0_mode!r}")
        if self.seed < 0:
            raise ConfigError("seed must be nonnegative")
        if self.dump_every < 0 or self.diag_every < 1:
            raise ConfigError("dump_every must be >= 0 and diag_every >= 1")
        if self.phi0_scale < 0.0 or self.c0_scale < 0.0:
            raise ConfigError("initial-data scales must be nonnegative")
        lo, hi = self.phi0_offset, self.phi0_offset + self.phi0_scale
        if not (0.0 < lo and hi < 1.0):
            raise ConfigError(
                f"initial phi range [{lo}, {hi}] must stay inside (0, 1)"
            )
        self.params()  # surfaces ModelParams violations as ConfigError
        resolved = self
        if self.tmax is not None:
            steps = int(round(self.tmax / self.tau))
            if steps < 1 or abs(steps * self.tau - self.tmax) > 1e-12:
                raise ConfigError(
                    f"tmax = {self.tmax} is not an integer multiple of tau = {self.tau}"
                )
            if "steps" in self.explicit and steps != self.n_steps:
                raise ConfigError(
                    f"steps = {self.n_steps} and tmax = {self.tmax} disagree "
                    f"(tmax/tau = {steps})"
                )
            resolved = replace(self, n_steps=steps)
        if resolved.n_steps < 0:
            raise ConfigError("steps must be nonnegative")
        return resolved

    def resolved_items(self) -> list[tuple[str, str]]:
        """Deterministic key/value listing used for the echoed config file."""
        items: list[tuple[str, str]] = []
        for key, (kind, attr) in _KEYS.items():
            value = getattr(self, attr)
            if key == "tmax":
                value = self.n_steps * self.tau
            if value is None:
                continue
            if kind is bool:
                items.append((key, "true" if value else "false"))
            elif kind is float:
                items.append((key, format(float(value), ".17g")))
            else:
                items.append((key, str(value)))
        return items


def _parse_value(key: str, raw: str):
    kind, _ = _KEYS[key]
    raw = raw.strip()
    try:
        if kind is bool:
            lowered = raw.lower()
            if lowered in ("true", "1", "yes", "on"):
                return True
            if lowered in ("false", "0", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r} ({exc})") from exc


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse `key = value` lines into a {key: typed value} dict."""
    out: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, raw = stripped.split("=", 1)
        key = key.strip()
        if key not in _KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in out:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = _parse_value(key, raw)
    return out


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> RunConfig:
    """Build a validated RunConfig from defaults, an optional file, and overrides.

    ``overrides`` maps config keys (file spelling) to already-typed values or
    strings; later sources win.
    """
    values: dict = {}
    if path is not None:
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        values.update(parse_config_text(text, source=str(path)))
    for key, value in (overrides or {}).items():
        if key not in _KEYS:
            raise ConfigError(f"unknown configuration key {key!r}")
        if isinstance(value, str):
            value = _parse_value(key, value)
        values[key] = value

    cfg = RunConfig()
    for key, value in values.items():
        _, attr = _KEYS[key]
        setattr(cfg, attr, value)
    cfg.explicit = set(values)
    return cfg.validate()
