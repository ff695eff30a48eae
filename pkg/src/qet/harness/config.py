"""Config loading and validation.

Structural checks come from ``schemas/config.schema.json``; the checks that
need arithmetic (``sum(dims) == D``, block index range, per-command required
fields) live here. Every problem is reported as a ``(field, message)`` pair.
"""
from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

import jsonschema

from ..errors import ConfigError
from ..rng import SeedSpec

REQUIRED = {
    "moments": ("dims",),
    "tails": ("thresholds",),
    "bounds-grid": (),
    "equilibrate": ("dims", "times"),
    "theorem-t1": ("dims", "epsilon", "delta", "delta_prime", "n_dec"),
    "theorem-main": ("dims", "epsilon", "delta", "delta_prime", "n_dec", "n_states"),
    "calibrate-constants": (),
}


@lru_cache(maxsize=None)
def load_schema(name: str) -> dict:
    text = resources.files("qet").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def _field(path) -> str:
    return ".".join(str(p) for p in path) or "<root>"


def validate_config(cfg: dict) -> dict:
    """Return a normalised copy of ``cfg`` or raise :class:`ConfigError`."""
    if not isinstance(cfg, dict):
        raise ConfigError([("<root>", "config must be a JSON object")])
    validator = jsonschema.Draft202012Validator(load_schema("config"))
    errors = sorted(validator.iter_errors(cfg), key=lambda e: (list(map(str, e.path)), e.message))
    if errors:
        raise ConfigError([(_field(e.absolute_path), e.message) for e in errors])

    problems = []
    cmd = cfg["command"]
    for key in REQUIRED[cmd]:
        if key not in cfg:
            problems.append((key, f"required by command {cmd!r}"))
    dims = cfg.get("dims")
    if dims is not None:
        if "D" in cfg and sum(dims) != cfg["D"]:
            problems.append(("dims", f"block dimensions sum to {sum(dims)}, expected D={cfg['D']}"))
        if cfg.get("nu", 0) >= len(dims):
            problems.append(("nu", f"block index {cfg['nu']} out of range for {len(dims)} blocks"))
    ham = cfg.get("hamiltonian")
    if ham is not None and dims is not None:
        D = sum(dims)
        if ham["kind"] == "diagonal" and len(ham.get("energies", [])) != D:
            problems.append(("hamiltonian.energies", f"need {D} energies"))
        if ham["kind"] == "matrix":
            re_ = ham.get("real")
            if re_ is None or len(re_) != D or any(len(r) != D for r in re_):
                problems.append(("hamiltonian.real", f"need a {D} x {D} array"))
            im = ham.get("imag")
            if im is not None and (len(im) != D or any(len(r) != D for r in im)):
                problems.append(("hamiltonian.imag", f"need a {D} x {D} array"))
    st = cfg.get("initial_state")
    if st is not None and dims is not None:
        D = sum(dims)
        if st["kind"] in ("basis", "eigenvector") and not 0 <= st.get("index", 0) < D:
            problems.append(("initial_state.index", f"must lie in [0, {D})"))
        if st["kind"] == "vector":
            if len(st.get("real", [])) != D or ("imag" in st and len(st["imag"]) != D):
                problems.append(("initial_state.real", f"need {D} components"))
    for d, D in cfg.get("cases", []):
        if d >= D:
            problems.append(("cases", f"need d < D, got ({d}, {D})"))
    if problems:
        raise ConfigError(problems)
    return dict(cfg)


def seed_of(cfg: dict, override: int | None = None) -> SeedSpec:
    if override is not None:
        return SeedSpec(int(override))
    s = cfg.get("seed", 0)
    if isinstance(s, dict):
        return SeedSpec(s["seed"], s.get("stream", 0))
    return SeedSpec(s)


def load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError([("--config", f"cannot read {path}: {exc.strerror}")]) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError([("--config", f"invalid JSON at line {exc.lineno}: {exc.msg}")]) from exc
    return validate_config(cfg)
