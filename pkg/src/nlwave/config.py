"""Run configuration: ``key = value`` sections with typed, validated keys.

Grammar: an INI file (stdlib configparser) whose sections and keys must all appear in
:data:`SCHEMA`.  Lists are comma separated.  ``#`` starts a comment.  Overrides use
``section.key=value``; a bare ``key=value`` is accepted when the key name is unique.
"""

from __future__ import annotations

import configparser
import difflib
import hashlib
from pathlib import Path

from .errors import ConfigError

__all__ = ["SCHEMA", "load_config", "parse_config", "apply_overrides", "render_config", "config_hash", "REFERENCE_CONFIG"]


def _floats(text):
    return tuple(float(v) for v in text.split(",") if v.strip())


def _ints(text):
    return tuple(int(v) for v in text.split(",") if v.strip())


def _str(text):
    return text.strip()


# section -> key -> (parser, default text)
SCHEMA = {
    "grid": {"nx": (int, "33"), "ny": (int, "33"), "T": (float, "2.5"), "courant": (float, "0.5")},
    "medium": {
        "b_amplitude": (_floats, "0.15, 0.1, -0.125"),
        "b_center": (_floats, "0.5, 0.5"),
        "b_radius": (float, "0.35"),
        "remainder": (_str, "none"),
        "remainder_amplitude": (float, "0.05"),
    },
    "data": {"mode": (_ints, "1, 1"), "boundary": (_ints, "1, 1"), "amp": (float, "0.3"), "ramp": (float, "0.5")},
    "solver": {"scheme": (_str, "picard"), "eps_max": (float, "0.1")},
    "forward": {"eps": (float, "0.02")},
    "expand": {"eps": (_floats, "0.08, 0.04, 0.02, 0.01")},
    "iomap": {"eps": (_floats, "0.08, 0.04, 0.02, 0.01"), "eps_pair": (_floats, "0.02, 0.01")},
    "identity": {"probes": (int, "10"), "probe_lam": (float, "3.0")},
    "probes": {"lam": (float, "12.0"), "N": (int, "2"), "lams": (_floats, "4, 8, 12")},
    "lightray": {
        "n_omega": (int, "8"),
        "n_base": (int, "32"),
        "bump_center": (_floats, "1.25, 0.5, 0.5"),
        "bump_widths": (_floats, "0.4, 0.12, 0.12"),
    },
    "recover": {
        "b_radius": (float, "0.49"),
        "n_dirs": (int, "16"),
        "lams": (_floats, "2, 4, 6, 8, 10, 12"),
        "probe_dirs": (int, "5"),
        "probe_lam": (float, "3.0"),
        "hs": (float, "0.125"),
        "ht": (float, "0.125"),
        "ridge": (float, "1e-6"),
        "cond_cap": (float, "1e6"),
        "factor_s": (int, "2"),
        "factor_t": (int, "4"),
        "g2_source": (_str, "adjoint"),
        "threshold": (float, "0.15"),
    },
    "report": {"checks": (lambda s: tuple(v.strip() for v in s.split(",") if v.strip()), "expand, iomap, identity, lightray")},
    "output": {"root": (_str, "runs")},
}

REFERENCE_CONFIG = Path(__file__).with_name("reference.ini")


def _all_keys():
    return [f"{s}.{k}" for s in SCHEMA for k in SCHEMA[s]]


def _unknown(name, candidates, what="key"):
    word = name.split(".")[-1]
    scored = [(difflib.SequenceMatcher(None, word, c.split(".")[-1]).ratio(), -len(c), c.split(".")[-1]) for c in candidates]
    best = max(scored) if scored else None
    msg = f"unknown config {what} '{name}'"
    if best and best[0] >= 0.3:
        msg += f"; did you mean '{best[2]}'?"
    msg += " Valid: " + ", ".join(candidates)
    return ConfigError(msg)


def _convert(section, key, text):
    parser = SCHEMA[section][key][0]
    try:
        return parser(text)
    except ValueError as exc:
        raise ConfigError(f"{section}.{key}: cannot parse {text!r} ({exc})") from None


def _raw_defaults():
    return {s: {k: v[1] for k, v in keys.items()} for s, keys in SCHEMA.items()}


def parse_config(text):
    """Parse INI text into raw (string) values on top of the defaults."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None
    raw = _raw_defaults()
    for section in cp.sections():
        if section not in SCHEMA:
            raise _unknown(section, list(SCHEMA), "section")
        for key, value in cp.items(section):
            if key not in SCHEMA[section]:
                raise _unknown(f"{section}.{key}", [f"{section}.{k}" for k in SCHEMA[section]])
            raw[section][key] = value
    return raw


def apply_overrides(raw, overrides):
    """Apply ``section.key=value`` (or unique ``key=value``) strings."""
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} must look like section.key=value")
        name, value = (p.strip() for p in item.split("=", 1))
        if "." in name:
            section, key = name.split(".", 1)
            if section not in SCHEMA or key not in SCHEMA[section]:
                raise _unknown(name, _all_keys())
        else:
            owners = [s for s in SCHEMA if name in SCHEMA[s]]
            if not owners:
                raise _unknown(name, _all_keys())
            if len(owners) > 1:
                raise ConfigError(f"key '{name}' is ambiguous; use one of " + ", ".join(f"{s}.{name}" for s in owners))
            section, key = owners[0], name
        raw[section][key] = value
    return raw


def resolve(raw):
    """Typed values plus the canonical text they re-parse from."""
    cfg = {s: {k: _convert(s, k, v) for k, v in keys.items()} for s, keys in raw.items()}
    validate(cfg)
    return cfg


def validate(cfg):
    g = cfg["grid"]
    if g["nx"] < 5 or g["ny"] < 5:
        raise ConfigError("grid.nx and grid.ny must be at least 5")
    if g["T"] <= 0 or not 0 < g["courant"] <= 1 / 2**0.5:
        raise ConfigError("grid.T must be positive and grid.courant in (0, 1/sqrt(2)]")
    if len(cfg["medium"]["b_amplitude"]) != 3 or len(cfg["medium"]["b_center"]) != 2:
        raise ConfigError("medium.b_amplitude needs 3 values and medium.b_center 2")
    if cfg["medium"]["remainder"] not in ("none", "cubic"):
        raise ConfigError("medium.remainder must be 'none' or 'cubic'")
    if cfg["solver"]["scheme"] not in ("picard", "lagged"):
        raise ConfigError("solver.scheme must be 'picard' or 'lagged'")
    if len(cfg["iomap"]["eps_pair"]) != 2:
        raise ConfigError("iomap.eps_pair needs two values (eps, eps/2)")
    if cfg["recover"]["g2_source"] not in ("adjoint", "direct"):
        raise ConfigError("recover.g2_source must be 'adjoint' or 'direct'")
    h = max(1.0 / (g["nx"] - 1), 1.0 / (g["ny"] - 1))
    for name, lam in (("probes.lam", cfg["probes"]["lam"]), ("identity.probe_lam", cfg["identity"]["probe_lam"])):
        if lam * h > 0.5:
            raise ConfigError(f"{name}={lam} is too large for the grid: lambda*h = {lam * h:.3g} > 0.5")
    return cfg


def render_config(raw):
    """Canonical INI text of a resolved configuration (sorted keys, normalized values)."""
    cfg = resolve(raw)
    lines = []
    for section in SCHEMA:
        lines.append(f"[{section}]")
        for key in SCHEMA[section]:
            v = cfg[section][key]
            if isinstance(v, tuple):
                text = ", ".join(repr(x) if isinstance(x, float) else str(x) for x in v)
            else:
                text = repr(v) if isinstance(v, float) else str(v)
            lines.append(f"{key} = {text}")
        lines.append("")
    return "\n".join(lines)


def config_hash(text):
    return hashlib.sha256(text.encode()).hexdigest()[:12]


def load_config(path=None, overrides=()):
    """Read a config file (or the shipped reference) and apply overrides.

    Returns (typed config dict, canonical text).
    """
    path = REFERENCE_CONFIG if path is None else Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} does not exist")
    raw = apply_overrides(parse_config(path.read_text()), overrides)
    text = render_config(raw)
    return resolve(raw), text
