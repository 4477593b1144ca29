"""Experiment configuration: a single JSON document per run.

Schema (all keys optional unless noted; unknown keys are rejected)::

    {
      "experiment": "rate" | "dominance" | "intersection" | "hermite-cert"
                    | "invariance" | "estimate" | "construct-spectrum",
      "seed": 0,                                   # uint64
      "spectra": {"r": 3, "t12": [...], "t13": [...], "t23": [...], "dS": [5, 5, 5]},
      "mixings": [[[...]], ...],                   # explicit A_i, overrides spectra
      "planted": {"d": 3, "strength": 2.0},        # partial-overlap ensemble
      "prior": {"family": "gaussian", ...},
      "n_grid": [1000, 3000, 10000],               # strictly increasing
      "trials": 50,
      "maps": {"pre": "random", "menu": ["tanh", "cubic"], "post": "random",
               "alpha": 1.0, "beta": 1.0, "gamma": 0.2},
      "ratios": [...], "t1": 0.6, "rank": 3,       # dominance ablation
      "max_degree": 6, "quadrature_nodes": 64, "t_grid": [...],
      "agreement_vectors": 500, "agreement_max_rank": 4, "agreement_degree": 4,
      "threshold": 0.9,
      "views": ["view1.bin", "views.csv"],         # estimate; paths relative to the config
      "pairwise_ranks": 2, "view_ranks": null,
      "tolerances": {"slope_low": -0.65, ...},
      "outputs": {"dir": "out", "format": "csv"}
    }

A bare target-spectra document (``{"r", "t12", "t13", "t23", "dS"}``) is
accepted for ``construct-spectrum``.
"""

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from ..exceptions import ConfigError, MVCCAError
from ..priors import PriorSpec
from ..spectra import TargetSpectra

KINDS = ("rate", "dominance", "intersection", "hermite-cert", "invariance",
         "estimate", "construct-spectrum")

DEFAULT_TOLERANCES = {
    "slope_low": -0.65,
    "slope_high": -0.35,
    "chain_fraction": 0.95,
    "rank_fraction": 0.95,
    "hermite": 1e-8,
    "moment": 1e-10,
    "roundtrip": 1e-8,
    "fidelity": 1e-10,
}

_RATE_SPECTRA = {"r": 3, "t12": [0.8] * 3, "t13": [0.8] * 3, "t23": [0.8] * 3, "dS": [5, 5, 5]}

KIND_DEFAULTS = {
    "rate": {"spectra": _RATE_SPECTRA, "n_grid": [1000, 3000, 10000, 30000, 100000],
             "trials": 50},
    "dominance": {"ratios": [round(0.5 + 0.05 * k, 10) for k in range(21)], "t1": 0.6,
                  "rank": 3, "n_grid": [10000], "trials": 10, "max_degree": 4},
    "intersection": {"spectra": _RATE_SPECTRA, "n_grid": [100000], "trials": 100},
    "hermite-cert": {"max_degree": 6, "quadrature_nodes": 64,
                     "t_grid": [round(0.1 * k, 10) for k in range(1, 10)],
                     "agreement_vectors": 500, "agreement_max_rank": 4,
                     "agreement_degree": 4},
    "invariance": {"spectra": _RATE_SPECTRA, "n_grid": [10000], "trials": 20,
                   "maps": {"pre": "random", "menu": ["tanh", "cubic"], "post": "random"}},
    "estimate": {},
    "construct-spectrum": {"spectra": _RATE_SPECTRA},
}

# keys that do not change any emitted number
_UNHASHED = ("outputs",)


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int = 0
    spectra: dict = None
    mixings: list = None
    planted: dict = None
    prior: dict = field(default_factory=lambda: {"family": "gaussian"})
    n_grid: list = None
    trials: int = 1
    maps: dict = None
    ratios: list = None
    t1: float = 0.6
    rank: int = 3
    max_degree: int = 6
    quadrature_nodes: int = 64
    t_grid: list = None
    agreement_vectors: int = 500
    agreement_max_rank: int = 4
    agreement_degree: int = 4
    threshold: float = 0.9
    views: list = None
    pairwise_ranks: object = None
    view_ranks: object = None
    tolerances: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)

    def tolerance(self, name):
        return self.tolerances.get(name, DEFAULT_TOLERANCES[name])

    def target_spectra(self):
        return TargetSpectra.from_dict(self.spectra)

    def prior_spec(self):
        return PriorSpec.from_dict(self.prior)

    def to_dict(self):
        return asdict(self)

    def hash(self):
        """SHA-256 of the key-sorted JSON form, excluding output locations."""
        d = {k: v for k, v in self.to_dict().items() if k not in _UNHASHED}
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _fail(msg):
    raise ConfigError(msg)


def build_config(raw, experiment=None, base_dir="."):
    """Merge kind defaults with ``raw`` and validate."""
    raw = dict(raw or {})
    if "t12" in raw and "spectra" not in raw:
        raw = {"spectra": {k: raw.pop(k) for k in ("r", "t12", "t13", "t23", "dS") if k in raw},
               **raw}
    kind = experiment or raw.get("experiment")
    if raw.get("experiment") not in (None, kind):
        _fail(f"config declares experiment {raw['experiment']!r} but {kind!r} was requested")
    if kind not in KINDS:
        _fail(f"unknown experiment {kind!r}; expected one of {KINDS}")
    known = set(ExperimentConfig.__dataclass_fields__)
    unknown = sorted(set(raw) - known)
    if unknown:
        _fail(f"unknown config keys: {unknown}")
    merged = {**KIND_DEFAULTS[kind], **raw, "experiment": kind}
    if ("mixings" in raw or "planted" in raw) and "spectra" not in raw:
        merged.pop("spectra", None)
    cfg = ExperimentConfig(**merged)
    _validate(cfg, base_dir)
    return cfg


def _validate(cfg, base_dir):
    seed = cfg.seed
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
        _fail(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    if isinstance(cfg.trials, bool) or not isinstance(cfg.trials, int) or cfg.trials < 1:
        _fail(f"trials must be a positive integer, got {cfg.trials!r}")
    if cfg.n_grid is not None:
        grid = cfg.n_grid
        if not grid or any(isinstance(n, bool) or int(n) != n or n < 2 for n in grid):
            _fail(f"n_grid must be a nonempty list of integers >= 2, got {grid}")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            _fail(f"n_grid must be strictly increasing, got {grid}")
        cfg.n_grid = [int(n) for n in grid]
    unknown_tol = sorted(set(cfg.tolerances) - set(DEFAULT_TOLERANCES))
    if unknown_tol:
        _fail(f"unknown tolerance keys: {unknown_tol}")
    try:
        if cfg.spectra is not None:
            cfg.target_spectra()
        cfg.prior_spec()
    except MVCCAError as exc:
        raise ConfigError(str(exc)) from exc
    if cfg.mixings is not None:
        try:
            mats = [np.asarray(A, dtype=float) for A in cfg.mixings]
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"mixings are not numeric matrices: {exc}") from exc
        if len(mats) < 2 or any(A.ndim != 2 for A in mats):
            _fail("mixings must list at least two 2-d matrices")
    if cfg.experiment == "rate":
        if len(cfg.n_grid) < 4:
            _fail("rate experiment needs at least 4 n_grid points")
        if np.log10(cfg.n_grid[-1] / cfg.n_grid[0]) < 1.5:
            _fail("rate experiment n_grid must span at least 1.5 decades")
        if cfg.trials < 20:
            _fail("rate experiment needs at least 20 trials")
    if cfg.experiment == "dominance":
        if not cfg.ratios or min(cfg.ratios) >= 1 or max(cfg.ratios) <= 1:
            _fail("dominance ablation needs a ratio grid crossing 1")
        if not 0 < cfg.t1 < 1:
            _fail("t1 must lie in (0, 1)")
        if cfg.rank < 2:
            _fail("dominance ablation needs rank >= 2")
    if cfg.experiment == "hermite-cert":
        if cfg.agreement_degree < 2:
            _fail("agreement_degree must be >= 2")
        if any(not 0 < t < 1 for t in cfg.t_grid):
            _fail("t_grid entries must lie in (0, 1)")
    if cfg.experiment == "estimate":
        if not cfg.views:
            _fail("estimate needs a list of view files under 'views'")
        resolved = []
        for p in cfg.views:
            full = p if os.path.isabs(p) else os.path.join(base_dir, p)
            if not os.path.exists(full):
                _fail(f"view file not found: {full}")
            resolved.append(full)
        cfg.views = resolved
        if cfg.pairwise_ranks is None:
            _fail("estimate needs pairwise_ranks")
    if not 0.5 < cfg.threshold < 1:
        _fail("threshold must lie in (0.5, 1)")


def load_config(path, experiment=None):
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return build_config(raw, experiment, base_dir=os.path.dirname(os.path.abspath(path)))
