"""Run artifacts: config parsing, manifests, stable CSV/JSON writers.

An experiment run is a directory ``<results root>/<scenario>-<stamp>/``
holding one CSV per result table, a ``summary.json`` of metrics and
pass/fail checks, and a ``manifest.json`` snapshotting the resolved
configuration, toolkit version, wall clock, and output digests.  The
configuration format is flat INI: a ``[scenario]`` section naming the
scenario and seed, and an optional ``[params]`` section of plain
key-value overrides.  Every diagnostic carries a ``file:line`` anchor.

Writers are byte-stable: identical resolved parameters and seed produce
identical CSV bytes, which the manifest digests make checkable.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import math
import os
import time
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

__all__ = [
    "RESULTS_ENV",
    "ParamSpec",
    "RawConfig",
    "read_config",
    "resolve_params",
    "write_csv",
    "write_json",
    "json_ready",
    "RunManifest",
    "make_run_dir",
    "load_run",
    "DriftRow",
    "compare_runs",
]

RESULTS_ENV = "OSCINT_RESULTS"


# -- configuration ------------------------------------------------------------


@dataclass(frozen=True)
class ParamSpec:
    """Declared scenario parameter: kind, default, one-line doc.

    Kinds: ``int``, ``float``, ``bool``, ``str``, ``choice`` (with
    ``choices``), ``floats`` and ``ints`` (comma separated), and
    ``float_or_auto`` (the literal ``auto`` resolves to ``None``).
    """

    kind: str
    default: object
    help: str = ""
    choices: tuple = ()


class _Locator:
    """Maps ``(section, key)`` back to a line of the config file."""

    def __init__(self, path, text):
        self.path = str(path)
        self._lines = text.splitlines()

    def where(self, section, key=None):
        in_section = False
        for i, line in enumerate(self._lines, start=1):
            stripped = line.strip()
            if stripped.startswith("[") and stripped.endswith("]"):
                if in_section and key is not None:
                    break
                in_section = stripped[1:-1].strip() == section
                if in_section and key is None:
                    return f"{self.path}:{i}"
            elif in_section and key is not None:
                name = stripped.split("=", 1)[0].split(":", 1)[0].strip()
                if name == key:
                    return f"{self.path}:{i}"
        return self.path


@dataclass(frozen=True)
class RawConfig:
    """Parsed but unvalidated config: scenario name, seed, raw params."""

    path: str
    name: str
    seed: int
    params: dict
    locator: _Locator = None

    def where(self, key=None, section="params"):
        if self.locator is None:
            return self.path
        return self.locator.where(section, key)


def read_config(path):
    """Read a flat INI config; structural problems raise :class:`ConfigError`.

    Required: ``[scenario] name``.  Optional: ``[scenario] seed``
    (default 0) and a ``[params]`` section.  Unknown sections are
    rejected here; unknown parameter keys are rejected later against
    the scenario's schema, where the name is known.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", location=str(path))
    locator = _Locator(path, text)
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        loc = f"{path}:{line}" if line else str(path)
        raise ConfigError(f"config does not parse: {exc.message}",
                          location=loc)
    for section in parser.sections():
        if section not in ("scenario", "params"):
            raise ConfigError(
                f"unknown section [{section}]; expected [scenario] and "
                f"optional [params]",
                location=locator.where(section),
            )
    if not parser.has_section("scenario"):
        raise ConfigError("missing [scenario] section", location=str(path))
    if not parser.has_option("scenario", "name"):
        raise ConfigError("missing scenario name",
                          location=locator.where("scenario"))
    name = parser.get("scenario", "name").strip()
    seed_text = parser.get("scenario", "seed", fallback="0").strip()
    try:
        seed = int(seed_text)
    except ValueError:
        raise ConfigError(
            f"seed must be an integer, got {seed_text!r}",
            location=locator.where("scenario", "seed"),
        )
    extra = [k for k in parser.options("scenario") if k not in ("name", "seed")]
    if extra:
        raise ConfigError(
            f"unexpected key {extra[0]!r} in [scenario]; parameters belong "
            f"in [params]",
            location=locator.where("scenario", extra[0]),
        )
    params = dict(parser.items("params")) if parser.has_section("params") else {}
    return RawConfig(path=str(path), name=name, seed=seed, params=params,
                     locator=locator)


def _parse_value(spec, text):
    text = text.strip()
    if spec.kind == "int":
        return int(text)
    if spec.kind == "float":
        return float(text)
    if spec.kind == "bool":
        low = text.lower()
        if low in ("true", "yes", "on", "1"):
            return True
        if low in ("false", "no", "off", "0"):
            return False
        raise ValueError(f"not a boolean: {text!r}")
    if spec.kind == "str":
        return text
    if spec.kind == "choice":
        if text not in spec.choices:
            raise ValueError(f"must be one of {spec.choices}, got {text!r}")
        return text
    if spec.kind == "floats":
        return tuple(float(p) for p in text.split(","))
    if spec.kind == "ints":
        return tuple(int(p) for p in text.split(","))
    if spec.kind == "float_or_auto":
        return None if text.lower() == "auto" else float(text)
    raise ValueError(f"unknown parameter kind {spec.kind!r}")


def resolve_params(schema, raw):
    """Validate raw strings against a schema; fill defaults.

    ``schema`` maps key -> :class:`ParamSpec`.  Unknown keys and type
    failures raise :class:`ConfigError` anchored at the offending line.
    """
    resolved = {}
    for key, text in raw.params.items():
        if key not in schema:
            known = ", ".join(sorted(schema))
            raise ConfigError(
                f"unknown parameter {key!r} for scenario {raw.name!r}; "
                f"known: {known}",
                location=raw.where(key),
            )
        try:
            resolved[key] = _parse_value(schema[key], text)
        except ValueError as exc:
            raise ConfigError(f"parameter {key!r}: {exc}",
                              location=raw.where(key))
    for key, spec in schema.items():
        resolved.setdefault(key, spec.default)
    return resolved


# -- stable serialization ------------------------------------------------------


def _format_cell(value):
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path, header, rows):
    """Write a table with repr-exact floats and newline line endings."""
    lines = [",".join(header)]
    width = len(header)
    for row in rows:
        if len(row) != width:
            raise ValueError(
                f"row has {len(row)} cells, header has {width}: {row!r}"
            )
        lines.append(",".join(_format_cell(c) for c in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def json_ready(obj):
    """Recursively convert to JSON-safe values; non-finite floats to null."""
    if isinstance(obj, dict):
        return {str(k): json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_ready(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, np.ndarray):
        return [json_ready(v) for v in obj.tolist()]
    return obj


def write_json(path, payload):
    """Stable-keyed JSON with a trailing newline."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(json_ready(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _sha256(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


# -- manifest and run directories ---------------------------------------------


@dataclass(frozen=True)
class RunManifest:
    """Snapshot that makes a run re-executable and its outputs checkable."""

    scenario: str
    seed: int
    params: dict
    version: str
    backend: str
    started_utc: str
    wall_seconds: float
    outputs: dict  # file name -> sha256 of bytes

    def write(self, run_dir):
        write_json(os.path.join(run_dir, "manifest.json"), vars(self))

    @staticmethod
    def digests(run_dir, names):
        return {name: _sha256(os.path.join(run_dir, name)) for name in names}


def make_run_dir(name, results_root=None):
    """Create ``<root>/<name>-<UTC stamp>/``; suffix on collision.

    The root comes from the argument, the ``OSCINT_RESULTS`` variable,
    or ``./results``, in that order.
    """
    if results_root is None:
        results_root = os.environ.get(RESULTS_ENV, "results")
    stamp = time.strftime("%Y%m%dT%H%M%SZ", time.gmtime())
    base = os.path.join(results_root, f"{name}-{stamp}")
    run_dir = base
    counter = 1
    while os.path.exists(run_dir):
        run_dir = f"{base}-{counter}"
        counter += 1
    os.makedirs(run_dir)
    return run_dir


def load_run(run_dir):
    """Load ``(manifest, summary)`` dicts of a finished run directory."""
    out = []
    for name in ("manifest.json", "summary.json"):
        path = os.path.join(run_dir, name)
        try:
            with open(path, "r", encoding="utf-8") as fh:
                out.append(json.load(fh))
        except OSError as exc:
            raise ConfigError(f"not a run directory: {exc}",
                              location=str(run_dir))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"corrupt {name}: {exc}", location=path)
    return tuple(out)


# -- drift comparison ----------------------------------------------------------


@dataclass(frozen=True)
class DriftRow:
    metric: str
    value_a: float | None
    value_b: float | None
    drift: float | None  # |b - a| / max(|a|, |b|); None when undefined


def _flatten_metrics(prefix, node, out):
    if isinstance(node, dict):
        for key in sorted(node):
            _flatten_metrics(f"{prefix}.{key}" if prefix else str(key),
                             node[key], out)
    elif isinstance(node, list):
        for i, item in enumerate(node):
            _flatten_metrics(f"{prefix}[{i}]", item, out)
    elif isinstance(node, (int, float)) and not isinstance(node, bool):
        out[prefix] = float(node)
    elif node is None:
        out[prefix] = None


def compare_runs(dir_a, dir_b):
    """Per-metric relative drift between two runs of the same scenario.

    Metrics are the numeric leaves of each summary's ``metrics`` tree.
    Mismatched scenario names are rejected; metrics present on one side
    only are reported with the missing side as ``None``.
    """
    manifest_a, summary_a = load_run(dir_a)
    manifest_b, summary_b = load_run(dir_b)
    if manifest_a.get("scenario") != manifest_b.get("scenario"):
        raise ConfigError(
            f"runs compare only within one scenario: "
            f"{manifest_a.get('scenario')!r} vs {manifest_b.get('scenario')!r}",
            location=str(dir_b),
        )
    flat_a, flat_b = {}, {}
    _flatten_metrics("", summary_a.get("metrics", {}), flat_a)
    _flatten_metrics("", summary_b.get("metrics", {}), flat_b)
    rows = []
    for metric in sorted(set(flat_a) | set(flat_b)):
        a = flat_a.get(metric)
        b = flat_b.get(metric)
        if a is None or b is None:
            drift = None
        else:
            scale = max(abs(a), abs(b))
            drift = 0.0 if scale == 0.0 else abs(b - a) / scale
        rows.append(DriftRow(metric=metric, value_a=a, value_b=b, drift=drift))
    return rows
