"""Scenario configs, the batch runner and report/CSV serialization."""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources
import csv
import json
import logging
import os
from pathlib import Path
import tempfile
import time
import warnings

import numpy as np

from . import __version__
from .chain import default_probes, fourth_claim_verdict
from .errors import InconsistencyError, InvalidInputError, NumericalFailure
from .gram_schmidt import GSConfig
from .hilbert import HilbertModel, ToleranceConfig
from .operators import operator_from_dict

logger = logging.getLogger(__name__)

OUTPUT_ENV = "ORBITCHAIN_OUT"
DEFAULT_OUTPUT = "orbitchain-runs"

_CONFIG_KEYS = {"name", "dim", "depth", "operator", "seed_vector", "probes", "gs", "tolerances", "seed", "description"}


class ConfigError(InvalidInputError):
    """A scenario configuration is malformed."""


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    dim: int
    depth: int
    operator: dict
    seed_vector: dict = field(default_factory=lambda: {"kind": "canonical", "index": 1})
    probes: dict = field(default_factory=lambda: {"canonical": True, "seed": True, "random": 8})
    gs: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    seed: int = 0
    description: str = ""

    def __post_init__(self):
        if not isinstance(self.name, str) or not self.name.strip():
            raise ConfigError("name: must be a nonempty string")
        if any(c in self.name for c in "/\\"):
            raise ConfigError("name: must not contain path separators")
        for key in ("dim", "depth", "seed"):
            if not isinstance(getattr(self, key), int) or isinstance(getattr(self, key), bool):
                raise ConfigError(f"{key}: must be an integer")
        if self.dim < 2:
            raise ConfigError(f"dim: must be >= 2, got {self.dim}")
        if self.depth < 1:
            raise ConfigError(f"depth: must be >= 1, got {self.depth}")
        if self.depth > self.dim:
            raise ConfigError(f"depth: {self.depth} exceeds dim {self.dim}")
        if self.depth > self.dim - self.dim / 4:
            raise ConfigError(
                f"depth: {self.depth} exceeds the margin dim - dim/4 = {self.dim - self.dim / 4:g}"
            )
        if not isinstance(self.operator, dict):
            raise ConfigError("operator: must be an object")
        # fail early on bad nested fields
        try:
            self.build_tolerances()
            self.build_gs()
            self.build_operator()
            self.build_seed_vector()
        except ConfigError:
            raise
        except (InvalidInputError, TypeError, KeyError, ValueError) as exc:
            raise ConfigError(f"{self.name}: {exc}") from exc

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(data) - _CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        missing = {"name", "dim", "depth", "operator"} - set(data)
        if missing:
            raise ConfigError(f"missing config fields: {sorted(missing)}")
        return cls(**data)

    @classmethod
    def load(cls, path):
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        return cls.from_dict(data)

    def to_dict(self):
        return {
            "name": self.name,
            "description": self.description,
            "dim": self.dim,
            "depth": self.depth,
            "operator": self.operator,
            "seed_vector": self.seed_vector,
            "probes": self.probes,
            "gs": self.gs,
            "tolerances": self.tolerances,
            "seed": self.seed,
        }

    def with_overrides(self, seed=None, dim=None, depth=None, gs_variant=None, reorthogonalize=None):
        changes = {}
        if seed is not None:
            changes["seed"] = seed
        if dim is not None:
            changes["dim"] = dim
        if depth is not None:
            changes["depth"] = depth
        if gs_variant is not None or reorthogonalize is not None:
            gs = dict(self.gs)
            if gs_variant is not None:
                gs["variant"] = gs_variant
            if reorthogonalize is not None:
                gs["reorthogonalize"] = reorthogonalize
            changes["gs"] = gs
        return replace(self, **changes) if changes else self

    def build_tolerances(self):
        try:
            return ToleranceConfig(**self.tolerances)
        except TypeError as exc:
            raise ConfigError(f"tolerances: {exc}") from exc

    def build_gs(self):
        unknown = set(self.gs) - {"variant", "reorthogonalize"}
        if unknown:
            raise ConfigError(f"gs: unknown fields {sorted(unknown)}")
        reorth = self.gs.get("reorthogonalize", True)
        if not isinstance(reorth, bool):
            raise ConfigError("gs.reorthogonalize: must be true or false")
        return GSConfig(
            variant=self.gs.get("variant", "modified"),
            reorthogonalize=reorth,
            thresholds=self.build_tolerances(),
        )

    def build_operator(self):
        return operator_from_dict(self.operator, self.dim)

    def build_seed_vector(self):
        model = HilbertModel(self.dim)
        kind = self.seed_vector.get("kind")
        if kind == "canonical":
            return model.basis_vector(int(self.seed_vector.get("index", 1)))
        if kind == "all_ones":
            return np.ones(self.dim, dtype=np.complex128)
        if kind == "random":
            rng = np.random.default_rng(int(self.seed_vector.get("seed", self.seed)))
            return model.random_unit(rng)
        raise ConfigError(f"seed_vector: unknown kind {kind!r}")

    def build_probes(self, x):
        unknown = set(self.probes) - {"canonical", "seed", "random"}
        if unknown:
            raise ConfigError(f"probes: unknown fields {sorted(unknown)}")
        labels, Z = default_probes(self.dim, x, self.depth, int(self.probes.get("random", 8)), self.seed)
        keep = [
            i for i, label in enumerate(labels)
            if (label.startswith("e") and self.probes.get("canonical", True))
            or (label == "x_unit" and self.probes.get("seed", True))
            or label.startswith("random")
        ]
        return tuple(labels[i] for i in keep), Z[keep]


@dataclass
class RunReport:
    """A scenario result.

    ``body`` is the deterministic part; ``wall_time`` and ``status`` live
    outside it so that identical runs give identical body bytes.
    """

    name: str
    body: dict
    wall_time: float = 0.0
    status: str = "ok"
    error: str | None = None

    @property
    def verdict(self):
        return self.body.get("verdict")

    def body_json(self):
        return json.dumps(self.body, indent=2, sort_keys=True) + "\n"

    def metadata(self):
        return {"name": self.name, "status": self.status, "error": self.error,
                "wall_time_s": self.wall_time, "version": __version__}

    def write(self, out_dir):
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        report_path = out_dir / f"{self.name}.json"
        if self.status == "ok":
            _atomic_write(report_path, self.body_json())
        _atomic_write(out_dir / f"{self.name}.meta.json", json.dumps(self.metadata(), indent=2) + "\n")
        return report_path


def _atomic_write(path, text):
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _floats(values):
    return [float(v) for v in np.asarray(values).ravel()]


def run_scenario(config):
    """Run the full pipeline for one scenario and return its :class:`RunReport`.

    Numeric failures and inconsistencies propagate as exceptions.
    """
    start = time.perf_counter()
    T = config.build_operator()
    x = config.build_seed_vector()
    cfg = config.build_gs()
    labels, probes = config.build_probes(x)
    outcome = fourth_claim_verdict(T, x, config.depth, probes, cfg, labels)
    chain, weak, cyc = outcome.chain, outcome.weak, outcome.cyclicity

    invariant = None
    if outcome.invariant_subspace is not None:
        inv = outcome.invariant_subspace
        invariant = {
            "description": "closed span of the orbit T x, T^2 x, ... at truncation",
            "dim": inv.basis.dim,
            "invariance_residual": float(inv.invariance_residual),
            "nontrivial": bool(inv.nontrivial),
        }
    body = {
        "tool": {"name": "orbitchain", "version": __version__},
        "config": config.to_dict(),
        "tolerances": cfg.thresholds.as_dict(),
        "gs": {"variant": cfg.variant.value, "reorthogonalize": cfg.reorthogonalize},
        "chain": {
            "theta_count": chain.depth,
            "breakdown_index": chain.breakdown_index,
            "n_directions": len(chain.directions),
            "a_moduli": _floats(np.abs(chain.a.values)),
            "residual_norms": _floats(chain.residual_norms),
            "certificate": chain.certify()["measured"],
        },
        "cyclicity": {
            "defect": cyc.defect,
            "relative_defect": cyc.relative_defect,
            "dense_at_truncation": cyc.dense_at_truncation,
            "span_dim": cyc.span_dim,
        },
        "weak_convergence": {
            "steps": len(chain.directions),
            "max_bessel_excess": weak.max_violation,
            "probes": [
                {
                    "label": label,
                    "values": _floats(weak.values[p]),
                    "bessel_bounds": _floats(weak.bessel_bounds[p]),
                    "completeness_defect": float(weak.completeness_defects[p]),
                }
                for p, label in enumerate(weak.labels)
            ],
        },
        "verdict": outcome.verdict.value,
        "verdict_reason": weak.verdict_reason,
        "invariant_subspace": invariant,
        "claimed_functional": {
            "formula": "2*(1 - 2**-n)",
            "constructed": False,
            "claimed_values": list(outcome.claimed_functional_values),
        },
    }
    return RunReport(config.name, body, wall_time=time.perf_counter() - start)


def _run_guarded(config):
    start = time.perf_counter()
    statuses = {InconsistencyError: "inconsistency", NumericalFailure: "numeric_failure",
                InvalidInputError: "invalid_input"}
    try:
        return run_scenario(config)
    except (InconsistencyError, NumericalFailure, InvalidInputError) as exc:
        status = next(v for k, v in statuses.items() if isinstance(exc, k))
        logger.error("scenario %s failed (%s): %s", config.name, status, exc)
        return RunReport(config.name, {}, time.perf_counter() - start, status, str(exc))


def run_batch(configs, parallelism=1, out_dir=None):
    """Run many scenarios; failures are recorded per scenario and the batch continues.

    Reports come back in input order and do not depend on ``parallelism``.
    With ``out_dir`` every report plus an ``index.json`` summary is written.
    """
    configs = list(configs)
    if parallelism < 1:
        raise ConfigError("parallelism must be >= 1")
    names = [c.name for c in configs]
    dupes = sorted({n for n in names if names.count(n) > 1})
    if dupes:
        raise ConfigError(f"duplicate scenario names: {dupes}")
    if parallelism == 1 or len(configs) <= 1:
        reports = [_run_guarded(c) for c in configs]
    else:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            reports = list(pool.map(_run_guarded, configs))
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        index = []
        for r in reports:
            path = r.write(out_dir)
            index.append({"name": r.name, "status": r.status, "verdict": r.verdict,
                          "report": path.name if r.status == "ok" else None, "error": r.error})
        _atomic_write(out_dir / "index.json", json.dumps({"scenarios": index}, indent=2) + "\n")
    return reports


def emit_plot_data(report, target):
    """Write one CSV per probe with columns n, value, bessel_bound.

    ``report`` may be a :class:`RunReport`, a report body dict or a path to a
    report JSON file. Returns the written paths.
    """
    if isinstance(report, (str, Path)):
        body = json.loads(Path(report).read_text())
    elif isinstance(report, RunReport):
        body = report.body
    else:
        body = report
    try:
        name = body["config"]["name"]
        probes = body["weak_convergence"]["probes"]
    except (KeyError, TypeError) as exc:
        raise InvalidInputError(f"not a complete run report (missing {exc})") from exc
    if not probes:
        warnings.warn(f"report {name!r} has no probes; no plot data written", stacklevel=2)
        return []
    target = Path(target)
    target.mkdir(parents=True, exist_ok=True)
    paths = []
    for probe in probes:
        path = target / f"{name}__{probe['label']}.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["n", "value", "bessel_bound"])
            for n, (v, b) in enumerate(zip(probe["values"], probe["bessel_bounds"]), start=1):
                writer.writerow([n, repr(v), repr(b)])
        paths.append(path)
    return paths


def bundled_names():
    files = resources.files("orbitchain").joinpath("bundled")
    return sorted(p.name[:-5] for p in files.iterdir() if p.name.endswith(".json"))


def bundled_scenario(name):
    path = resources.files("orbitchain").joinpath("bundled", f"{name}.json")
    if not path.is_file():
        raise ConfigError(f"no bundled scenario {name!r}; available: {', '.join(bundled_names())}")
    return ScenarioConfig.from_dict(json.loads(path.read_text()))


def default_output_dir():
    return Path(os.environ.get(OUTPUT_ENV, DEFAULT_OUTPUT))
