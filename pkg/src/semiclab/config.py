"""INI run configuration with field-level validation."""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ConfigError, LabError
from .potentials import (PowerLaw, apply_cutoff, even_polynomial, harmonic, load_tabulated,
                         regular_from_function, zero_potential)

SUBCOMMANDS = ("tf", "hartree", "sweep", "wigner", "weyl-law", "window", "cutoff",
               "fock-verify", "nbody")


@dataclass
class RunConfig:
    # [model]
    d: int = 1
    N: int = 16
    L: float = 3.0
    n: int = 2048
    # [external]
    external: str = "harmonic"
    omega2: float = 1.0
    coefficients: tuple = ()
    table: Optional[str] = None
    # [pair]
    pair: str = "powerlaw"
    lam: float = 0.2
    a: float = 0.5
    width: float = 1.0
    scf_cutoff: Optional[float] = None
    cutoffs: tuple = (4.0, 8.0, 16.0, 32.0, 64.0)
    p_list: tuple = (2.0, 2.5)
    # [scf]
    alpha: float = 0.5
    tol: float = 1e-8
    max_iter: int = 2000
    # [sweep]
    N_list: tuple = (8, 16, 32, 64)
    eps_list: tuple = (0.05, 0.1, 0.2, 0.4)
    hbar_list: tuple = (1 / 8, 1 / 16, 1 / 32, 1 / 64, 1 / 128)
    weyl_shift: float = 1.0
    xi_samples: tuple = (0.5, 1.0, 2.0)
    # [fock]
    M: int = 8
    fock_N: int = 3
    lambdas: tuple = (0.0, 0.01, 0.02, 0.04, 0.08)
    fock_Lambda: float = 4.0
    fock_L: float = 6.0
    fock_n: int = 256
    instances: int = 25
    trials: int = 100
    # [output]
    out: str = "out"
    seed: int = 0
    wigner_p_max: float = 3.0
    wigner_x_points: int = 256
    source: dict = field(default_factory=dict, repr=False)

    def digest(self) -> str:
        """Short hash of the effective configuration (used in file names)."""
        d = asdict(self)
        d.pop("source")
        d.pop("out")
        blob = json.dumps(d, sort_keys=True, default=list)
        return hashlib.sha256(blob.encode()).hexdigest()[:10]

    # -- model objects ---------------------------------------------------------
    def external_potential(self):
        if self.external == "harmonic":
            return harmonic(self.omega2)
        if self.external == "polynomial":
            return even_polynomial(self.coefficients)
        return load_tabulated(self.table)

    def pair_potential(self):
        if self.pair == "zero":
            return zero_potential()
        if self.pair == "powerlaw":
            return PowerLaw(self.lam, self.a, self.d)
        # gaussian lam exp(-x^2 / (2 w^2)): Vhat = lam w / sqrt(2 pi) exp(-w^2 xi^2 / 2)
        w = self.width
        return regular_from_function(
            lambda xi: self.lam * w / np.sqrt(2 * np.pi) * np.exp(-0.5 * (w * xi) ** 2),
            xi_max=12.0 / w, L=self.L)

    def scf_pair(self, grid):
        V = self.pair_potential()
        if self.scf_cutoff is not None:
            return apply_cutoff(V, self.scf_cutoff, grid)
        return V


_SCHEMA = {
    "model": {"d": ("d", int), "n_particles": ("N", int), "N": ("N", int), "L": ("L", float),
              "n": ("n", int)},
    "external": {"kind": ("external", str), "omega2": ("omega2", float),
                 "coefficients": ("coefficients", "floats"), "table": ("table", str)},
    "pair": {"kind": ("pair", str), "lambda": ("lam", float), "a": ("a", float),
             "width": ("width", float), "scf_cutoff": ("scf_cutoff", float),
             "cutoffs": ("cutoffs", "floats"), "p": ("p_list", "floats")},
    "scf": {"alpha": ("alpha", float), "tol": ("tol", float), "max_iter": ("max_iter", int)},
    "sweep": {"N_list": ("N_list", "ints"), "eps_list": ("eps_list", "floats"),
              "hbar_list": ("hbar_list", "floats"), "weyl_shift": ("weyl_shift", float),
              "xi_samples": ("xi_samples", "floats")},
    "fock": {"M": ("M", int), "N": ("fock_N", int), "lambdas": ("lambdas", "floats"),
             "Lambda": ("fock_Lambda", float), "L": ("fock_L", float), "n": ("fock_n", int),
             "instances": ("instances", int), "trials": ("trials", int)},
    "output": {"dir": ("out", str), "seed": ("seed", int), "wigner_p_max": ("wigner_p_max", float),
               "wigner_x_points": ("wigner_x_points", int)},
}


def _number(text):
    text = text.strip()
    if "/" in text:
        num, den = text.split("/", 1)
        return float(num) / float(den)
    return float(text)


def _convert(raw, kind, name):
    try:
        if kind == "floats":
            return tuple(_number(t) for t in raw.replace(",", " ").split())
        if kind == "ints":
            return tuple(int(t) for t in raw.replace(",", " ").split())
        if kind is int:
            return int(raw)
        if kind is float:
            return _number(raw)
        return raw.strip()
    except ValueError:
        raise ConfigError(name, f"cannot parse {raw!r}") from None


def parse_config(text: str) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("config", str(exc).splitlines()[0]) from None
    values = {}
    for section in cp.sections():
        if section not in _SCHEMA:
            raise ConfigError(section, "unknown section")
        for key, raw in cp.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"{section}.{key}", "unknown key")
            attr, kind = _SCHEMA[section][key]
            values[attr] = _convert(raw, kind, f"{section}.{key}")
    cfg = RunConfig(**values)
    cfg.source = {s: dict(cp.items(s)) for s in cp.sections()}
    validate(cfg)
    return cfg


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text)


def _require(cond, name, message):
    if not cond:
        raise ConfigError(name, message)


def validate(cfg: RunConfig) -> None:
    """Check every field before any computation starts."""
    _require(cfg.d == 1, "model.d", "only d = 1 lattices are supported")
    _require(cfg.N >= 1, "model.N", "must be a positive integer")
    _require(cfg.L > 0, "model.L", "must be positive")
    _require(cfg.n >= 16, "model.n", "must be at least 16")
    _require(cfg.external in ("harmonic", "polynomial", "tabulated"), "external.kind",
             "must be harmonic, polynomial or tabulated")
    _require(cfg.omega2 > 0, "external.omega2", "must be positive")
    if cfg.external == "polynomial":
        _require(len(cfg.coefficients) > 1 and cfg.coefficients[-1] > 0, "external.coefficients",
                 "need a positive leading even coefficient")
    if cfg.external == "tabulated":
        _require(cfg.table is not None, "external.table", "path required for tabulated potentials")
        try:
            cfg.external_potential()
        except (LabError, OSError, ValueError) as exc:
            raise ConfigError("external.table", str(exc)) from None
    _require(cfg.pair in ("powerlaw", "gaussian", "zero"), "pair.kind",
             "must be powerlaw, gaussian or zero")
    _require(cfg.lam >= 0, "pair.lambda", "must be nonnegative")
    if cfg.pair == "powerlaw":
        _require(cfg.lam > 0, "pair.lambda", "power law needs lambda > 0")
        _require(0 < cfg.a < min(cfg.d, 1), "pair.a", f"must lie in (0, {min(cfg.d, 1)})")
    _require(cfg.width > 0, "pair.width", "must be positive")
    _require(cfg.scf_cutoff is None or cfg.scf_cutoff >= 1, "pair.scf_cutoff", "must be >= 1")
    _require(len(cfg.cutoffs) >= 2 and all(c >= 1 for c in cfg.cutoffs), "pair.cutoffs",
             "need at least two cutoffs, each >= 1")
    _require(len(cfg.p_list) >= 1 and all(p >= 2 for p in cfg.p_list), "pair.p",
             "exponents must be >= 2")
    _require(0 < cfg.alpha <= 1, "scf.alpha", "must lie in (0, 1]")
    _require(0 < cfg.tol < 1, "scf.tol", "must lie in (0, 1)")
    _require(cfg.max_iter >= 1, "scf.max_iter", "must be positive")
    _require(len(cfg.N_list) >= 3, "sweep.N_list", "need at least three entries")
    _require(all(b > a for a, b in zip(cfg.N_list, cfg.N_list[1:])) and cfg.N_list[0] >= 1,
             "sweep.N_list", "must be strictly ascending positive integers")
    _require(all(0 < e < 0.5 for e in cfg.eps_list), "sweep.eps_list", "each eps must lie in (0, 0.5)")
    _require(all(h > 0 for h in cfg.hbar_list), "sweep.hbar_list", "must be positive")
    _require(2 <= cfg.M <= 12, "fock.M", "must lie in [2, 12]")
    _require(1 <= cfg.fock_N < cfg.M, "fock.N", "must lie in [1, M)")
    _require(all(x >= 0 for x in cfg.lambdas), "fock.lambdas", "must be nonnegative")
    _require(cfg.fock_Lambda >= 1, "fock.Lambda", "must be >= 1")
    _require(cfg.fock_L > 0, "fock.L", "must be positive")
    _require(cfg.fock_n >= 16, "fock.n", "must be at least 16")
    _require(cfg.instances >= 1, "fock.instances", "must be positive")
    _require(cfg.trials >= 1, "fock.trials", "must be positive")
    _require(cfg.wigner_p_max > 0, "output.wigner_p_max", "must be positive")
    _require(cfg.wigner_x_points >= 2, "output.wigner_x_points", "must be at least 2")
