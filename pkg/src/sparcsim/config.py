"""Experiment configuration: YAML schema, validation, and presets.

A config file is a single YAML document with a versioned schema. Unknown
keys are rejected so typos fail loudly. The `design_points` entry is either
the name of a built-in preset ("table1": the ten tiered design points plus
the pro-rata benchmark) or an explicit list of design point mappings.
"""

from dataclasses import asdict, dataclass, field, fields

import yaml

from .errors import ParseError, SchemaError
from .mechanism import TierScheme, validate_scheme
from .simulation import TABLE1_DESIGN_POINTS, BaseConfig, DesignPoint, PopulationSpec

SCHEMA_VERSION = 1

PRESETS = {"table1": TABLE1_DESIGN_POINTS}


@dataclass
class ExperimentConfig:
    base: BaseConfig = field(default_factory=BaseConfig)
    population: PopulationSpec = field(default_factory=PopulationSpec)
    design_points: tuple = tuple(TABLE1_DESIGN_POINTS)
    runs_per_point: int = 10
    master_seed: int = 42
    success_delta: float = 0.05
    output_dir: str = "out"
    horizon_mode: str = "compressed"

    def __post_init__(self):
        self.design_points = tuple(self.design_points)
        if self.horizon_mode not in ("paper", "compressed"):
            raise SchemaError(
                f"horizon_mode must be paper|compressed, got {self.horizon_mode!r}"
            )
        ids = [dp.id for dp in self.design_points]
        if len(ids) != len(set(ids)):
            raise SchemaError("design point ids must be unique")

    def design_point(self, dp_id: int) -> DesignPoint:
        for dp in self.design_points:
            if dp.id == dp_id:
                return dp
        raise SchemaError(f"no design point with id {dp_id}")


def _check_keys(mapping: dict, allowed, where: str):
    unknown = set(mapping) - set(allowed)
    if unknown:
        raise SchemaError(f"unknown key(s) {sorted(unknown)} in {where}")


def _parse_base(d: dict) -> BaseConfig:
    names = [f.name for f in fields(BaseConfig)]
    _check_keys(d, names, "base")
    return BaseConfig(**d)


def _parse_population(d: dict) -> PopulationSpec:
    names = [f.name for f in fields(PopulationSpec)]
    _check_keys(d, names, "population")
    return PopulationSpec(**d)


_EXPECTED = {"success": True, "fail": False, None: None}


def _parse_design_point(d: dict, default_x: int) -> DesignPoint:
    _check_keys(
        d,
        ["id", "kind", "tier_sizes", "member_pcts", "committee_size", "p", "expected"],
        f"design point {d.get('id', '?')}",
    )
    if "id" not in d or "kind" not in d:
        raise SchemaError("each design point needs 'id' and 'kind'")
    expected = d.get("expected")
    if isinstance(expected, str):
        expected = expected.lower()
    if expected not in _EXPECTED:
        raise SchemaError(f"expected must be success|fail, got {expected!r}")
    expected = _EXPECTED[expected]
    kind = d["kind"]
    if kind == "prorata":
        return DesignPoint(int(d["id"]), "prorata", expected_success=expected)
    if kind == "decay":
        if "p" not in d:
            raise SchemaError("decay design point needs exponent 'p'")
        if d["p"] <= 0:
            raise SchemaError("decay exponent p must be > 0")
        return DesignPoint(int(d["id"]), "decay", decay_p=float(d["p"]),
                           expected_success=expected)
    if kind == "tiered":
        if "tier_sizes" not in d or "member_pcts" not in d:
            raise SchemaError("tiered design point needs tier_sizes and member_pcts")
        scheme = TierScheme(
            int(d.get("committee_size", default_x)),
            tuple(d["tier_sizes"]),
            tuple(d["member_pcts"]),
        )
        verdict = validate_scheme(scheme)
        if not verdict.ok:
            raise SchemaError(
                f"design point {d['id']}: " + "; ".join(verdict.violations)
            )
        return DesignPoint(int(d["id"]), "tiered", scheme, expected_success=expected)
    raise SchemaError(f"design point kind must be tiered|prorata|decay, got {kind!r}")


def _parse_design_points(spec, default_x: int):
    if isinstance(spec, str):
        if spec not in PRESETS:
            raise SchemaError(
                f"unknown design point preset {spec!r}; available: {sorted(PRESETS)}"
            )
        return tuple(PRESETS[spec])
    if not isinstance(spec, list) or not spec:
        raise SchemaError("design_points must be a preset name or a non-empty list")
    return tuple(_parse_design_point(d, default_x) for d in spec)


_TOP_KEYS = [
    "schema_version", "base", "population", "design_points", "runs_per_point",
    "master_seed", "success_delta", "output_dir", "horizon_mode",
]


def config_from_dict(doc: dict) -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise SchemaError("config document must be a mapping")
    _check_keys(doc, _TOP_KEYS, "top level")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaError(
            f"schema_version must be {SCHEMA_VERSION}, got {version!r}"
        )
    base = _parse_base(doc.get("base", {}) or {})
    kwargs = dict(
        base=base,
        population=_parse_population(doc.get("population", {}) or {}),
        design_points=_parse_design_points(
            doc.get("design_points", "table1"), base.committee_size
        ),
    )
    for key, caster in [
        ("runs_per_point", int), ("master_seed", int),
        ("success_delta", float), ("output_dir", str), ("horizon_mode", str),
    ]:
        if key in doc:
            kwargs[key] = caster(doc[key])
    try:
        return ExperimentConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise SchemaError(str(exc)) from exc


def load_config(path) -> ExperimentConfig:
    """Parse and validate a YAML config file.

    Raises ParseError with the YAML problem mark (line/column) on malformed
    input, SchemaError naming the violated rule otherwise.
    """
    try:
        with open(path) as fh:
            doc = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ParseError(f"config file not found: {path}")
    except yaml.YAMLError as exc:
        raise ParseError(f"cannot parse {path}: {exc}") from exc
    if doc is None:
        raise ParseError(f"config file {path} is empty")
    return config_from_dict(doc)


def _design_point_to_dict(dp: DesignPoint) -> dict:
    d = {"id": dp.id, "kind": dp.kind}
    if dp.kind == "tiered":
        d["committee_size"] = dp.scheme.committee_size
        d["tier_sizes"] = list(dp.scheme.tier_sizes)
        d["member_pcts"] = list(dp.scheme.member_pcts)
    elif dp.kind == "decay":
        d["p"] = dp.decay_p
    if dp.expected_success is not None:
        d["expected"] = "success" if dp.expected_success else "fail"
    return d


def config_to_dict(cfg: ExperimentConfig) -> dict:
    pop = {k: v for k, v in asdict(cfg.population).items() if v is not None}
    pop["lognormal_mu"] = list(cfg.population.lognormal_mu)
    pop["lognormal_sigma"] = list(cfg.population.lognormal_sigma)
    if cfg.population.stakes is not None:
        pop["stakes"] = list(cfg.population.stakes)
    return {
        "schema_version": SCHEMA_VERSION,
        "base": asdict(cfg.base),
        "population": pop,
        "design_points": [_design_point_to_dict(dp) for dp in cfg.design_points],
        "runs_per_point": cfg.runs_per_point,
        "master_seed": cfg.master_seed,
        "success_delta": cfg.success_delta,
        "output_dir": cfg.output_dir,
        "horizon_mode": cfg.horizon_mode,
    }


def save_config(cfg: ExperimentConfig, path):
    with open(path, "w") as fh:
        yaml.safe_dump(config_to_dict(cfg), fh, sort_keys=False)
