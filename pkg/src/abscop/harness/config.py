"""Experiment configuration: a versioned YAML schema with validation and defaults."""

from __future__ import annotations

import dataclasses
import math
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Mapping, Optional

import yaml

from ..copula_models import (
    CopulaSpec,
    Family,
    FunctionalKind,
    Kind,
    ParameterDomainError,
    spearman_to_pearson,
)
from ..engine import MarginalMode

SCHEMA_VERSION = 1
DESK_REPETITIONS = 100
FULL_SCALE = {"repetitions": 500, "n": 1000}
DEFAULT_B = 10_000
DEFAULT_LEVEL = 0.95
DEFAULT_BOOT_REPS = 500

ENV_OUTPUT_DIR = "ABSCOP_OUTPUT_DIR"
ENV_WORKERS = "ABSCOP_WORKERS"

PARAMETRIC_FAMILIES = (Family.CLAYTON, Family.FRANK, Family.GUMBEL)


class ConfigError(ValueError):
    """A configuration value violates the schema; the message names the field."""

    def __init__(self, field_name: str, constraint: str):
        self.field = field_name
        self.constraint = constraint
        super().__init__(f"config field '{field_name}': {constraint}")


@dataclass(frozen=True)
class Truth:
    family: Family
    theta: float
    dims: tuple
    spearman: Optional[float] = None

    def spec(self, d: int) -> CopulaSpec:
        return CopulaSpec(self.family, self.theta, d)


@dataclass(frozen=True)
class Baselines:
    asymptotic: bool = False
    bootstrap: bool = False
    bootstrap_reps: int = DEFAULT_BOOT_REPS
    parametric: tuple = ()
    mcmc_iters: int = 4000
    mcmc_burn_in: int = 1000


@dataclass(frozen=True)
class Marginals:
    mode: MarginalMode = MarginalMode.EMPIRICAL_CDF
    families: Optional[tuple] = None
    files: Optional[tuple] = None
    tensor: Optional[str] = None


@dataclass(frozen=True)
class ExperimentConfig:
    study: str
    truth: Optional[Truth]
    n: Optional[int]
    kinds: tuple
    seed: int
    repetitions: int = DESK_REPETITIONS
    prior: Optional[tuple] = None
    B: int = DEFAULT_B
    level: float = DEFAULT_LEVEL
    baselines: Baselines = field(default_factory=Baselines)
    marginals: Marginals = field(default_factory=Marginals)
    output_dir: str = ""
    workers: int = 1
    base_dir: str = "."

    def resolved_k(self, kind: FunctionalKind, n: Optional[int] = None) -> Optional[int]:
        n = self.n if n is None else n
        return kind.resolve_k(n) if kind.kind.is_tail and n else None

    def echo(self) -> dict:
        """Plain-data view of the validated config (defaults filled in).

        Output directory and worker count are left out so that result files do
        not depend on where or how wide a study was run.
        """
        out = {
            "schema_version": SCHEMA_VERSION,
            "study": self.study,
            "seed": self.seed,
            "n": self.n,
            "repetitions": self.repetitions,
            "B": self.B,
            "level": self.level,
            "kinds": [
                {"kind": k.kind.value, "k": self.resolved_k(k)} if k.kind.is_tail else {"kind": k.kind.value}
                for k in self.kinds
            ],
            "prior": list(self.prior) if self.prior else "default",
            "baselines": {
                "asymptotic": self.baselines.asymptotic,
                "bootstrap": self.baselines.bootstrap,
                "bootstrap_reps": self.baselines.bootstrap_reps,
                "parametric": [f.value for f in self.baselines.parametric],
                "mcmc_iters": self.baselines.mcmc_iters,
                "mcmc_burn_in": self.baselines.mcmc_burn_in,
            },
            "marginals": {"mode": self.marginals.mode.value},
        }
        if self.truth is not None:
            t = {"family": self.truth.family.value, "theta": self.truth.theta, "dims": list(self.truth.dims)}
            if self.truth.spearman is not None:
                t["spearman"] = self.truth.spearman
            out["truth"] = t
        m = out["marginals"]
        if self.marginals.families:
            m["families"] = list(self.marginals.families)
        if self.marginals.files:
            m["files"] = list(self.marginals.files)
        if self.marginals.tensor:
            m["tensor"] = self.marginals.tensor
        return out

    def replace(self, **changes) -> "ExperimentConfig":
        cfg = dataclasses.replace(self, **changes)
        _check_k(cfg)
        return cfg


# --------------------------------------------------------------------------- parsing helpers


def _int(raw: Mapping, name: str, default=None, minimum: Optional[int] = None, required: bool = False):
    if name not in raw or raw[name] is None:
        if required:
            raise ConfigError(name, "is required")
        return default
    v = raw[name]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or int(v) != v:
        raise ConfigError(name, f"must be an integer, got {v!r}")
    v = int(v)
    if minimum is not None and v < minimum:
        raise ConfigError(name, f"must be >= {minimum}, got {v}")
    return v


def _float(raw: Mapping, name: str, default=None, label: Optional[str] = None):
    if name not in raw or raw[name] is None:
        return default
    v = raw[name]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(label or name, f"must be a finite number, got {v!r}")
    return float(v)


def _enum(cls, value, name: str):
    try:
        return cls(value)
    except ValueError:
        allowed = ", ".join(m.value for m in cls)
        raise ConfigError(name, f"unknown value {value!r} (allowed: {allowed})") from None


def _parse_truth(raw) -> Truth:
    if not isinstance(raw, Mapping):
        raise ConfigError("truth", "must be a mapping with at least 'family'")
    if "family" not in raw:
        raise ConfigError("truth.family", "is required")
    family = _enum(Family, raw["family"], "truth.family")
    spearman = _float(raw, "spearman", label="truth.spearman")
    theta = _float(raw, "theta", label="truth.theta")
    if spearman is not None:
        if family is not Family.GAUSSIAN:
            raise ConfigError("truth.spearman", "only the gaussian family may be parameterised by spearman")
        if theta is not None:
            raise ConfigError("truth", "give either 'theta' or 'spearman', not both")
        if not -1 < spearman < 1:
            raise ConfigError("truth.spearman", f"must lie in (-1, 1), got {spearman}")
        theta = spearman_to_pearson(spearman)
    if theta is None:
        if family is Family.INDEPENDENCE:
            theta = 0.0
        else:
            raise ConfigError("truth.theta", f"is required for the {family.value} family")
    dims = raw.get("dim", 2)
    dims = dims if isinstance(dims, (list, tuple)) else [dims]
    if not dims:
        raise ConfigError("truth.dim", "must list at least one dimension")
    parsed = []
    for d in dims:
        if isinstance(d, bool) or not isinstance(d, int) or d < 2:
            raise ConfigError("truth.dim", f"dimensions must be integers >= 2, got {d!r}")
        parsed.append(d)
    for d in parsed:
        try:
            CopulaSpec(family, theta, d)
        except ParameterDomainError as exc:
            raise ConfigError("truth.theta", str(exc)) from None
    return Truth(family, theta, tuple(parsed), spearman)


def _parse_kinds(raw) -> tuple:
    if raw is None:
        raise ConfigError("kinds", "is required (e.g. [spearman_rho])")
    items = raw if isinstance(raw, (list, tuple)) else [raw]
    if not items:
        raise ConfigError("kinds", "must list at least one functional")
    kinds = []
    for i, item in enumerate(items):
        name = f"kinds[{i}]"
        if isinstance(item, Mapping):
            if "kind" not in item:
                raise ConfigError(f"{name}.kind", "is required")
            kind = _enum(Kind, item["kind"], f"{name}.kind")
            k = _int(item, "k", minimum=1)
            if k is not None and not kind.is_tail:
                raise ConfigError(f"{name}.k", f"tuning k only applies to tail kinds, not {kind.value}")
        else:
            kind, k = _enum(Kind, item, name), None
        kinds.append(FunctionalKind(kind, k))
    return tuple(kinds)


def _parse_baselines(raw) -> Baselines:
    if raw is None:
        return Baselines()
    if not isinstance(raw, Mapping):
        raise ConfigError("baselines", "must be a mapping")
    unknown = set(raw) - {"asymptotic", "bootstrap", "parametric", "mcmc"}
    if unknown:
        raise ConfigError("baselines", f"unknown keys {sorted(unknown)}")
    asym = bool(raw.get("asymptotic", False))
    boot = raw.get("bootstrap", False)
    reps = DEFAULT_BOOT_REPS
    if isinstance(boot, Mapping):
        reps = _int(boot, "reps", DEFAULT_BOOT_REPS, minimum=2)
        boot = True
    fams = raw.get("parametric") or []
    fams = fams if isinstance(fams, (list, tuple)) else [fams]
    parsed = []
    for f in fams:
        fam = _enum(Family, f, "baselines.parametric")
        if fam not in PARAMETRIC_FAMILIES:
            raise ConfigError("baselines.parametric", f"{fam.value} has no parametric sampler")
        parsed.append(fam)
    mcmc = raw.get("mcmc") or {}
    iters = _int(mcmc, "iters", 4000, minimum=2)
    burn = _int(mcmc, "burn_in", 1000, minimum=0)
    if not iters > burn:
        raise ConfigError("baselines.mcmc.iters", f"must exceed burn_in ({iters} <= {burn})")
    return Baselines(asym, bool(boot), reps, tuple(parsed), iters, burn)


def _parse_marginals(raw) -> Marginals:
    if raw is None:
        return Marginals()
    if isinstance(raw, str):
        raw = {"mode": raw}
    if not isinstance(raw, Mapping) or "mode" not in raw:
        raise ConfigError("marginals.mode", "is required")
    mode = _enum(MarginalMode, raw["mode"], "marginals.mode")
    if mode is not MarginalMode.POSTERIOR_FILE:
        return Marginals(mode)
    files, fams, tensor = raw.get("files"), raw.get("families"), raw.get("tensor")
    if tensor is not None:
        return Marginals(mode, tensor=str(tensor))
    if not files or not fams:
        raise ConfigError("marginals", "posterior_file mode needs 'tensor' or both 'files' and 'families'")
    if len(files) != len(fams):
        raise ConfigError("marginals.families", f"need one family per file ({len(fams)} vs {len(files)})")
    return Marginals(mode, tuple(map(str, fams)), tuple(map(str, files)))


def _check_k(cfg: ExperimentConfig) -> None:
    if cfg.n is None:
        return
    for i, k in enumerate(cfg.kinds):
        if k.k is not None and k.k > cfg.n:
            raise ConfigError(f"kinds[{i}].k", f"must satisfy 0 < k <= n (k={k.k}, n={cfg.n})")


def parse_config(raw: Any, base_dir: str = ".", require_truth: bool = True) -> ExperimentConfig:
    """Validate a decoded config mapping and fill defaults."""
    if not isinstance(raw, Mapping):
        raise ConfigError("<root>", "config must be a mapping")
    known = {
        "schema_version", "study", "truth", "n", "repetitions", "kinds", "prior", "B", "level",
        "baselines", "marginals", "seed", "output_dir", "workers",
    }
    unknown = set(raw) - known
    if unknown:
        raise ConfigError("<root>", f"unknown keys {sorted(unknown)}")
    version = raw.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"unsupported version {version!r} (expected {SCHEMA_VERSION})")
    if "seed" not in raw or raw["seed"] is None:
        raise ConfigError("seed", "is required (no clock-based seeding)")
    seed = _int(raw, "seed", minimum=0)

    truth = _parse_truth(raw["truth"]) if raw.get("truth") is not None else None
    if require_truth and truth is None:
        raise ConfigError("truth", "is required for simulation studies")
    n = _int(raw, "n", minimum=4, required=require_truth)
    kinds = _parse_kinds(raw.get("kinds"))
    R = _int(raw, "repetitions", DESK_REPETITIONS, minimum=1)
    B = _int(raw, "B", DEFAULT_B, minimum=100)
    level = _float(raw, "level", DEFAULT_LEVEL)
    if not 0 < level < 1:
        raise ConfigError("level", f"must lie in (0, 1), got {level}")

    prior = raw.get("prior")
    if prior is not None:
        if not isinstance(prior, Mapping) or not {"lower", "upper"} <= set(prior):
            raise ConfigError("prior", "must be a mapping with 'lower' and 'upper'")
        lo, hi = _float(prior, "lower", label="prior.lower"), _float(prior, "upper", label="prior.upper")
        if not lo < hi:
            raise ConfigError("prior", f"needs lower < upper, got ({lo}, {hi})")
        prior = (lo, hi)

    baselines = _parse_baselines(raw.get("baselines"))
    marginals = _parse_marginals(raw.get("marginals"))
    study = str(raw.get("study") or "study")
    workers = _int(raw, "workers", 1, minimum=1)
    output_dir = str(raw.get("output_dir") or os.path.join("results", study))

    if truth is not None:
        for i, k in enumerate(kinds):
            if k.kind is Kind.SPEARMAN_RHO and any(d != 2 for d in truth.dims):
                raise ConfigError(f"kinds[{i}]", "spearman_rho requires every truth.dim to be 2")
    has_rho = any(k.kind is Kind.SPEARMAN_RHO for k in kinds)
    if baselines.asymptotic and not has_rho:
        raise ConfigError("baselines.asymptotic", "requires spearman_rho among the kinds")
    if baselines.parametric:
        if not has_rho:
            raise ConfigError("baselines.parametric", "requires spearman_rho among the kinds")
        if truth is not None and any(d != 2 for d in truth.dims):
            raise ConfigError("baselines.parametric", "parametric chains are bivariate; truth.dim must be 2")

    cfg = ExperimentConfig(
        study=study, truth=truth, n=n, kinds=kinds, seed=seed, repetitions=R, prior=prior, B=B,
        level=level, baselines=baselines, marginals=marginals, output_dir=output_dir,
        workers=workers, base_dir=str(base_dir),
    )
    _check_k(cfg)
    if truth is not None and marginals.mode is MarginalMode.POSTERIOR_FILE:
        raise ConfigError("marginals.mode", "posterior_file is only available when analysing a CSV")
    return cfg


def apply_env(cfg: ExperimentConfig, environ: Optional[Mapping] = None) -> ExperimentConfig:
    """Override output directory and worker count from the environment."""
    environ = os.environ if environ is None else environ
    changes = {}
    if environ.get(ENV_OUTPUT_DIR):
        changes["output_dir"] = environ[ENV_OUTPUT_DIR]
    if environ.get(ENV_WORKERS):
        try:
            w = int(environ[ENV_WORKERS])
        except ValueError:
            raise ConfigError(ENV_WORKERS, f"must be an integer, got {environ[ENV_WORKERS]!r}") from None
        if w < 1:
            raise ConfigError(ENV_WORKERS, f"must be >= 1, got {w}")
        changes["workers"] = w
    return cfg.replace(**changes) if changes else cfg


def scale_to_full(cfg: ExperimentConfig) -> ExperimentConfig:
    return cfg.replace(**FULL_SCALE)


# --------------------------------------------------------------------------- files and presets


def preset_dir() -> Path:
    return Path(str(resources.files("abscop.harness") / "presets"))


def list_presets() -> dict:
    """Preset name -> one-line description."""
    out = {}
    for p in sorted(preset_dir().glob("*.yaml")):
        raw = yaml.safe_load(p.read_text()) or {}
        first = p.read_text().splitlines()[0] if p.stat().st_size else ""
        desc = first.lstrip("# ").strip() if first.startswith("#") else raw.get("study", p.stem)
        out[p.stem] = desc
    return out


def resolve_config_path(name_or_path) -> Path:
    """A filesystem path, or the name of a shipped preset."""
    p = Path(name_or_path)
    if p.exists():
        return p
    preset = preset_dir() / f"{name_or_path}.yaml"
    if preset.exists():
        return preset
    raise FileNotFoundError(f"no config file or preset named {name_or_path!r}")


def load_config(path, require_truth: bool = True) -> ExperimentConfig:
    """Read and validate a YAML config file (or a shipped preset by name)."""
    p = resolve_config_path(path)
    try:
        raw = yaml.safe_load(p.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError("<file>", f"{p} does not parse as YAML: {exc}") from None
    return parse_config(raw, base_dir=str(p.parent), require_truth=require_truth)
