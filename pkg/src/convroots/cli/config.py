"""Run configuration: TOML in, validated dataclasses out, and back.

Sections are ``[distribution]``, ``[grid]``, ``[classes]``, ``[conditions]``,
``[kesten]`` and ``[output]``. Unknown sections or keys are errors, reported
with the line they appear on. Values that mean "not set" use ``0`` (for
example ``local_T = 0.0``), since TOML has no null.
"""
from __future__ import annotations

import copy
import re
import sys
from dataclasses import asdict, dataclass, field, fields

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib
import tomli_w

from ..families import FAMILIES

DIST_FAMILIES = tuple(sorted(FAMILIES)) + ("example61", "explicit", "levy")
PMF_KINDS = ("poisson", "geometric", "explicit")
LEVY_KINDS = ("pareto", "exponential", "table")


class ConfigError(ValueError):
    """Invalid configuration; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        where = ""
        if path:
            where += f"{path}:"
        if line:
            where += f"{line}:"
        super().__init__(f"{where} {message}".strip() if where else message)


@dataclass
class DistributionSpec:
    family: str = "geometric"
    params: dict = field(default_factory=lambda: {"q": 0.5})
    masses: list = field(default_factory=list)
    lattice_span_exact: bool = True
    levy_kind: str = "pareto"
    levy_params: dict = field(default_factory=lambda: {"alpha": 2.0, "mu": 1.0})
    levy_table: str = ""
    h1: dict = field(default_factory=lambda: {"family": "exponential", "params": {"lam": 5.0}})
    K: int = 0


@dataclass
class GridSpec:
    step: float = 1.0
    N: int = 512
    x_lo: float = 0.0


@dataclass
class ClassesSpec:
    list: list = field(default_factory=list)
    band: float = 0.02
    slope_band: float = 1e-3
    excursion_factor: float = 2.0
    horizon_factor: float = 10.0
    fractions: list = field(default_factory=lambda: [1 / 16, 1 / 8, 1 / 4])
    floor: float = 1e-280
    t_multiples: list = field(default_factory=lambda: [1, 2, 5, 10])


@dataclass
class ConditionsSpec:
    liminf: bool = True
    gamma: float = 0.0
    k_max: int = 3
    t_ladder: list = field(default_factory=list)
    n0: bool = True
    pmf: dict = field(default_factory=lambda: {"kind": "poisson", "mu": 1.0, "K": 40})
    epsilons: list = field(default_factory=lambda: [0.9, 0.5, 0.1, 0.01])
    variant: str = "k-1"
    local_T: float = 0.0
    x_hi: float = 0.0
    bridge: bool = True


@dataclass
class KestenSpec:
    enabled: bool = True
    G: dict = field(default_factory=lambda: {"family": "compound",
                                             "pmf": {"kind": "poisson", "mu": 1.0, "K": 40}})
    gamma: float = 0.0
    k_max: int = 20
    M_choice: float = 0.0


@dataclass
class OutputSpec:
    dir: str = "reports"
    prefix: str = ""


SECTIONS = {
    "distribution": DistributionSpec,
    "grid": GridSpec,
    "classes": ClassesSpec,
    "conditions": ConditionsSpec,
    "kesten": KestenSpec,
    "output": OutputSpec,
}


@dataclass
class RunConfig:
    distribution: DistributionSpec = field(default_factory=DistributionSpec)
    grid: GridSpec = field(default_factory=GridSpec)
    classes: ClassesSpec = field(default_factory=ClassesSpec)
    conditions: ConditionsSpec = field(default_factory=ConditionsSpec)
    kesten: KestenSpec = field(default_factory=KestenSpec)
    output: OutputSpec = field(default_factory=OutputSpec)

    def to_dict(self) -> dict:
        return asdict(self)

    def dumps(self) -> str:
        return tomli_w.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict, text: str = "", path: str | None = None) -> "RunConfig":
        return _build(data, text, path)

    @classmethod
    def loads(cls, text: str, path: str | None = None) -> "RunConfig":
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            m = re.search(r"line (\d+)", str(exc))
            raise ConfigError(f"TOML syntax error: {exc}", int(m.group(1)) if m else None,
                              path) from None
        return _build(data, text, path)

    @classmethod
    def load(cls, path: str) -> "RunConfig":
        with open(path, "rb") as fh:
            raw = fh.read()
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ConfigError(f"config is not UTF-8: {exc}", None, path) from None
        return cls.loads(text, path)


# ---------------------------------------------------------------------------
# validation


def _find_line(text: str, section: str | None, key: str | None) -> int | None:
    """1-based line of ``key`` inside ``[section]`` (or of the header itself)."""
    if not text:
        return None
    current = None
    header_line = None
    for no, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        m = re.match(r"^\[\s*([A-Za-z0-9_.\-]+)\s*\]", s)
        if m:
            current = m.group(1)
            if current == section and key is None:
                return no
            if current == section:
                header_line = no
            continue
        if current == section and key is not None:
            if re.match(rf"^{re.escape(key)}\s*=", s) or re.match(rf'^"{re.escape(key)}"\s*=', s):
                return no
    return header_line


_TYPES = {bool: "boolean", int: "integer", float: "number", str: "string",
          list: "array", dict: "table"}


def _coerce(value, default, where: str):
    """Check ``value`` against the type of ``default`` (ints accepted for floats)."""
    t = type(default)
    if t is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if t is int and isinstance(value, bool):
        raise TypeError(f"{where}: expected integer, got boolean")
    if not isinstance(value, t) or (t is int and isinstance(value, bool)):
        raise TypeError(f"{where}: expected {_TYPES.get(t, t.__name__)}, "
                        f"got {type(value).__name__}")
    return copy.deepcopy(value)


def _build(data: dict, text: str, path: str | None) -> RunConfig:
    kwargs = {}
    for sec in data:
        if sec not in SECTIONS:
            raise ConfigError(f"unknown section [{sec}]; expected one of {list(SECTIONS)}",
                              _find_line(text, sec, None), path)
    for sec, cls in SECTIONS.items():
        body = data.get(sec, {})
        if not isinstance(body, dict):
            raise ConfigError(f"[{sec}] must be a table", _find_line(text, None, sec), path)
        defaults = cls()
        names = {f.name for f in fields(cls)}
        vals = {}
        for key, value in body.items():
            if key not in names:
                raise ConfigError(f"{sec}.{key}: unknown key; expected one of {sorted(names)}",
                                  _find_line(text, sec, key), path)
            try:
                vals[key] = _coerce(value, getattr(defaults, key), f"{sec}.{key}")
            except TypeError as exc:
                raise ConfigError(str(exc), _find_line(text, sec, key), path) from None
        kwargs[sec] = cls(**vals)
    cfg = RunConfig(**kwargs)
    _semantic_checks(cfg, text, path)
    return cfg


def _semantic_checks(cfg: RunConfig, text: str, path: str | None) -> None:
    def fail(sec, key, msg):
        raise ConfigError(f"{sec}.{key}: {msg}", _find_line(text, sec, key), path)

    d = cfg.distribution
    if d.family not in DIST_FAMILIES:
        fail("distribution", "family", f"unknown family {d.family!r}; expected one of "
                                       f"{list(DIST_FAMILIES)}")
    if d.family == "explicit" and not d.masses:
        fail("distribution", "masses", "explicit family needs a nonempty masses list")
    if d.family in FAMILIES:
        expected = set(FAMILIES[d.family][1]) | ({"scale"} if d.family == "weibull" else set())
        unknown = set(d.params) - expected
        missing = set(FAMILIES[d.family][1]) - set(d.params)
        if unknown or missing:
            fail("distribution", "params",
                 f"family {d.family!r} takes {sorted(expected)}; missing {sorted(missing)}, "
                 f"unexpected {sorted(unknown)}")
    if d.family == "levy" and d.levy_kind not in LEVY_KINDS:
        fail("distribution", "levy_kind", f"expected one of {list(LEVY_KINDS)}")
    if d.K < 0:
        fail("distribution", "K", "must be nonnegative (0 selects it automatically)")
    g = cfg.grid
    if not g.step > 0:
        fail("grid", "step", "must be positive")
    if g.N < 1:
        fail("grid", "N", "must be at least 1")
    c = cfg.classes
    for item in c.list:
        from ..diagnostics.verdict import ClassSpec
        try:
            ClassSpec.parse(str(item))
        except ValueError as exc:
            fail("classes", "list", str(exc))
    if not 0 < c.band < 1:
        fail("classes", "band", "must lie in (0, 1)")
    if not c.fractions or any(not 0 < f <= 1 for f in c.fractions):
        fail("classes", "fractions", "entries must lie in (0, 1]")
    k = cfg.conditions
    if k.k_max < 1:
        fail("conditions", "k_max", "must be at least 1")
    if k.variant not in ("k-1", "k"):
        fail("conditions", "variant", "must be 'k-1' or 'k'")
    if k.pmf.get("kind") not in PMF_KINDS:
        fail("conditions", "pmf", f"kind must be one of {list(PMF_KINDS)}")
    if any(not e > 0 for e in k.epsilons):
        fail("conditions", "epsilons", "entries must be positive")
    kk = cfg.kesten
    if kk.k_max < 1:
        fail("kesten", "k_max", "must be at least 1")
    fam = kk.G.get("family")
    if fam != "compound" and fam not in FAMILIES:
        fail("kesten", "G", f"family must be 'compound' or one of {sorted(FAMILIES)}")
