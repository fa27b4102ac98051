"""Run configs, atomic report writing, and the deterministic run manifest.

Config files are flat `key = value` text with `#` comments.  Reports are JSON
(sorted keys, fixed layout) and time series are CSV; manifest files carry no
wall-clock data, so identical configs and seeds reproduce them byte for byte.
Wall-clock timing goes to a sidecar log instead.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
import time
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError
from .mcf import RunConfig

_INT_KEYS = {"k", "t1", "t2", "seed"}
_STR_KEYS = {"profile_kind"}


def parse_config_text(text: str, source: str = "<string>") -> dict:
    """Parse flat key = value lines with # comments into a typed dict."""
    out: dict = {}
    known = {f.name for f in dataclasses.fields(RunConfig)}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in known:
            raise ConfigError(f"{source}:{lineno}: unknown key '{key}'")
        if key in _STR_KEYS:
            out[key] = val
        elif key in _INT_KEYS:
            try:
                out[key] = int(val)
            except ValueError as exc:
                raise ConfigError(f"{source}:{lineno}: '{key}' wants an integer") from exc
        else:
            try:
                out[key] = float(val)
            except ValueError as exc:
                raise ConfigError(f"{source}:{lineno}: '{key}' wants a number") from exc
    return out


def load_run_config(path, overrides: dict | None = None) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    data = parse_config_text(text, source=str(path))
    if overrides:
        data.update(overrides)
    try:
        return RunConfig(**data)
    except TypeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def load_bundled_config(name: str, overrides: dict | None = None) -> RunConfig:
    """Load one of the packaged default run configs (flowcert/configs/)."""
    try:
        text = (resources.files("flowcert") / "configs" / name).read_text()
    except (FileNotFoundError, OSError) as exc:
        raise ConfigError(f"no bundled config named '{name}'") from exc
    data = parse_config_text(text, source=f"configs/{name}")
    if overrides:
        data.update(overrides)
    return RunConfig(**data)


def config_to_text(cfg: RunConfig) -> str:
    lines = [f"{key} = {value}" for key, value in cfg.to_dict().items()]
    return "\n".join(lines) + "\n"


def jsonable(obj):
    """Recursively convert numpy scalars/arrays and NaN to JSON-safe values."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return None if math.isnan(v) else v
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.tmp{os.getpid()}")
    tmp.write_text(text)
    os.replace(tmp, path)


def write_json(path, obj) -> None:
    atomic_write_text(path, json.dumps(jsonable(obj), indent=2, sort_keys=True) + "\n")


def manifest_dict(command: str, seed: int, config: dict, checks: list[dict]) -> dict:
    """Assemble the deterministic run manifest (no timestamps by design)."""
    return {
        "artifact": {"name": "flowcert", "version": __version__},
        "command": command,
        "seed": int(seed),
        "config": jsonable(config),
        "checks": [jsonable(c) for c in checks],
        "all_passed": bool(all(c.get("passed", False) for c in checks)),
    }


class RunLog:
    """Append-only sidecar log carrying the wall-clock side of a run."""

    def __init__(self, path, quiet: bool = False):
        self.path = Path(path) if path is not None else None
        self.quiet = quiet
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.write_text("")

    def say(self, msg: str) -> None:
        stamp = time.strftime("%Y-%m-%dT%H:%M:%S")
        line = f"[{stamp}] {msg}"
        if self.path is not None:
            with open(self.path, "a") as fh:
                fh.write(line + "\n")
        if not self.quiet:
            print(msg, flush=True)
