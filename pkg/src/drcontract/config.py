"""Flat key-value config files for ModelParams, and output writers.

Config format, one ``key = value`` per line, ``#`` starts a comment.  Vector
keys take comma-separated values.  Keys:

    T kappa theta delta h p r mu lambda sigma eps a_max x0 r0

Unknown keys are rejected.
"""

import csv
import io
import json
import os
import tempfile
from importlib import resources

import numpy as np

from .core_model import DomainError, ModelParams

VECTOR_KEYS = {"mu", "lambda", "sigma"}
SCALAR_KEYS = {"T", "kappa", "theta", "delta", "h", "p", "r", "eps", "a_max", "x0", "r0"}
REQUIRED = {"T", "kappa", "theta", "h", "p", "r", "mu", "lambda", "sigma"}


class ConfigError(ValueError):
    pass


def parse_config(text, source="<config>"):
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in VECTOR_KEYS | SCALAR_KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        try:
            if key in VECTOR_KEYS:
                values[key] = tuple(float(v) for v in value.split(","))
            elif key == "a_max" and value.lower() in ("", "none", "auto"):
                values[key] = None
            else:
                values[key] = float(value)
        except ValueError:
            raise ConfigError(f"{source}:{lineno}: bad number in {value!r}") from None
    missing = REQUIRED - values.keys()
    if missing:
        raise ConfigError(f"{source}: missing keys {sorted(missing)}")
    values["lam"] = values.pop("lambda")
    try:
        return ModelParams(**values)
    except DomainError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_config(path):
    with open(path) as fh:
        return parse_config(fh.read(), source=str(path))


def default_config_text():
    return resources.files("drcontract").joinpath("data/nominal.cfg").read_text()


def load_default():
    return parse_config(default_config_text(), source="nominal.cfg")


def format_config(params):
    def vec(v):
        return ", ".join(fmt(x) for x in v)

    lines = [
        f"T = {fmt(params.T)}",
        f"kappa = {fmt(params.kappa)}",
        f"theta = {fmt(params.theta)}",
        f"delta = {fmt(params.delta)}",
        f"h = {fmt(params.h)}",
        f"p = {fmt(params.p)}",
        f"r = {fmt(params.r)}",
        f"mu = {vec(params.mu)}",
        f"lambda = {vec(params.lam)}",
        f"sigma = {vec(params.sigma)}",
        f"eps = {fmt(params.eps)}",
        f"a_max = {'auto' if params.a_max is None else fmt(params.a_max)}",
        f"x0 = {fmt(params.x0)}",
        f"r0 = {fmt(params.r0)}",
    ]
    return "\n".join(lines) + "\n"


# output

def fmt(x):
    """Ten significant digits."""
    return format(float(x), ".10g")


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not np.isfinite(x):
            return None
        return float(fmt(x))
    return obj


def atomic_write(path, text):
    path = os.fspath(path)
    folder = os.path.dirname(path) or "."
    os.makedirs(folder, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, obj):
    atomic_write(path, json.dumps(_clean(obj), indent=2) + "\n")


def csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if isinstance(v, (float, np.floating, int, np.integer))
                    and not isinstance(v, bool) else v for v in row])
    return buf.getvalue()


def write_csv(path, header, rows):
    atomic_write(path, csv_text(header, rows))
