"""Experiment configuration files.

A config is a YAML mapping::

    master_seed: 20261016        # required, 64-bit unsigned integer
    out_dir: out                 # optional, default "out"
    threads: 1                   # optional hint, never changes results
    experiments:                 # required, nonempty list
      - name: theorem_rademacher # required, unique
        generator:               # required
          family: rademacher_magnitude
          magnitude_law: two_point     # ones | two_point | uniform | exponential
          magnitude_seed: 7
        statistic: full_sum      # full_sum (default) | weber
        gamma: 0.0               # in [0, 1); k(m) = max(1, floor(gamma m))
        m_values: [500, 2000, 8000]
        n_rep: 10000             # default 10000
        epsilons: [0.05, 0.1, 0.5]   # default
        seed: 123                # optional, overrides master_seed
        write_samples: false     # default false
        write_reports: true      # default true

Generator keys by family: ``dist`` (iid_symmetric: std_normal, rademacher,
uniform_sym); ``magnitude_law``, ``magnitude_seed`` or an explicit
``magnitudes`` list (rademacher_magnitude, zero_sum_permutation);
``rho`` (equicorrelated_gaussian) and ``delta`` (scale_mixture), each either a
number or ``{coef: c, power: p}`` meaning ``c * m**(-p)``.
"""

from dataclasses import dataclass
from pathlib import Path

import yaml

from exchclt.engine import ExperimentSpec
from exchclt.errors import ConfigError, InvalidArgument
from exchclt.generators import GeneratorSpec, Rate
from exchclt.hypothesis_checks import DEFAULT_EPSILONS
from exchclt.statistics import ScheduleSpec, StatisticKind

DEFAULT_N_REP = 10_000
DEFAULT_OUT_DIR = "out"

_TOP_KEYS = {"master_seed", "out_dir", "threads", "experiments"}
_EXPERIMENT_KEYS = {
    "name", "generator", "statistic", "gamma", "m_values", "n_rep",
    "epsilons", "seed", "write_samples", "write_reports",
}
_GENERATOR_KEYS = {"family", "dist", "magnitude_law", "magnitude_seed", "magnitudes", "rho", "delta"}


@dataclass(frozen=True)
class ConfigFile:
    experiments: tuple
    master_seed: int
    out_dir: str = DEFAULT_OUT_DIR
    threads: int = 1


def _require(mapping, key, where):
    if key not in mapping:
        raise ConfigError("missing required key", field=f"{where}.{key}" if where else key)
    return mapping[key]


def _check_keys(mapping, allowed, where):
    if not isinstance(mapping, dict):
        raise ConfigError("expected a mapping", field=where or "<root>")
    for key in mapping:
        if key not in allowed:
            raise ConfigError("unknown key", field=f"{where}.{key}" if where else str(key))


def _int(value, where, minimum=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"expected an integer, got {value!r}", field=where)
    if minimum is not None and value < minimum:
        raise ConfigError(f"must be >= {minimum}, got {value}", field=where)
    return value


def _number(value, where):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", field=where)
    return float(value)


def _bool(value, where):
    if not isinstance(value, bool):
        raise ConfigError(f"expected true/false, got {value!r}", field=where)
    return value


def _rate(value, where):
    if isinstance(value, dict):
        _check_keys(value, {"coef", "power"}, where)
        coef = _number(_require(value, "coef", where), f"{where}.coef")
        power = _number(value.get("power", 0.0), f"{where}.power")
    else:
        coef, power = _number(value, where), 0.0
    try:
        return Rate(coef, power)
    except InvalidArgument as exc:
        raise ConfigError(str(exc), field=where) from None


def _generator(raw, where):
    _check_keys(raw, _GENERATOR_KEYS, where)
    kwargs = {"family": _require(raw, "family", where)}
    for key in ("dist", "magnitude_law"):
        if key in raw:
            kwargs[key] = raw[key]
    if "magnitude_seed" in raw:
        kwargs["magnitude_seed"] = _int(raw["magnitude_seed"], f"{where}.magnitude_seed", 0)
    if "magnitudes" in raw:
        mags = raw["magnitudes"]
        if not isinstance(mags, list):
            raise ConfigError("expected a list of numbers", field=f"{where}.magnitudes")
        kwargs["magnitudes"] = tuple(
            _number(v, f"{where}.magnitudes[{i}]") for i, v in enumerate(mags))
    for key in ("rho", "delta"):
        if key in raw:
            kwargs[key] = _rate(raw[key], f"{where}.{key}")
    try:
        return GeneratorSpec(**kwargs)
    except InvalidArgument as exc:
        raise ConfigError(str(exc), field=where) from None


def _experiment(raw, where, master_seed):
    _check_keys(raw, _EXPERIMENT_KEYS, where)
    name = _require(raw, "name", where)
    if not isinstance(name, str) or not name or any(c in name for c in "/\\,\n"):
        raise ConfigError(f"invalid experiment name {name!r}", field=f"{where}.name")
    generator = _generator(_require(raw, "generator", where), f"{where}.generator")
    gamma = _number(raw.get("gamma", 0.0), f"{where}.gamma")
    kind = raw.get("statistic", "full_sum")
    try:
        statistic = StatisticKind(kind, gamma if kind == "weber" else 0.0)
    except InvalidArgument as exc:
        raise ConfigError(str(exc), field=f"{where}.statistic") from None
    m_values = _require(raw, "m_values", where)
    if isinstance(m_values, int) and not isinstance(m_values, bool):
        m_values = [m_values]
    if not isinstance(m_values, list) or not m_values:
        raise ConfigError("expected a nonempty list of integers", field=f"{where}.m_values")
    m_values = [_int(m, f"{where}.m_values[{i}]", 2) for i, m in enumerate(m_values)]
    try:
        schedule = ScheduleSpec(tuple(m_values), gamma)
    except InvalidArgument as exc:
        raise ConfigError(str(exc), field=f"{where}.m_values") from None
    epsilons = raw.get("epsilons", list(DEFAULT_EPSILONS))
    if not isinstance(epsilons, list) or not epsilons:
        raise ConfigError("expected a nonempty list of numbers", field=f"{where}.epsilons")
    epsilons = [_number(e, f"{where}.epsilons[{i}]") for i, e in enumerate(epsilons)]
    if any(e <= 0 for e in epsilons):
        raise ConfigError("epsilons must be positive", field=f"{where}.epsilons")
    seed = _int(raw.get("seed", master_seed), f"{where}.seed", 0)
    if seed >= 1 << 64:
        raise ConfigError("seed must fit in 64 bits", field=f"{where}.seed")
    try:
        return ExperimentSpec(
            name=name,
            generator=generator,
            schedule=schedule,
            statistic=statistic,
            n_rep=_int(raw.get("n_rep", DEFAULT_N_REP), f"{where}.n_rep", 1),
            master_seed=seed,
            epsilons=tuple(epsilons),
            write_samples=_bool(raw.get("write_samples", False), f"{where}.write_samples"),
            write_reports=_bool(raw.get("write_reports", True), f"{where}.write_reports"),
        )
    except InvalidArgument as exc:
        raise ConfigError(str(exc), field=where) from None


def load_config_text(text, seed_override=None):
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        problem = getattr(exc, "problem", None) or str(exc)
        raise ConfigError(f"parse error: {problem}", line=line) from None
    _check_keys(raw, _TOP_KEYS, "")
    master_seed = _int(_require(raw, "master_seed", ""), "master_seed", 0)
    if seed_override is not None:
        master_seed = seed_override
    if master_seed >= 1 << 64:
        raise ConfigError("master_seed must fit in 64 bits", field="master_seed")
    out_dir = raw.get("out_dir", DEFAULT_OUT_DIR)
    if not isinstance(out_dir, str):
        raise ConfigError("expected a path string", field="out_dir")
    threads = _int(raw.get("threads", 1), "threads", 1)
    experiments = _require(raw, "experiments", "")
    if not isinstance(experiments, list) or not experiments:
        raise ConfigError("expected a nonempty list", field="experiments")
    specs = []
    seen = set()
    for i, item in enumerate(experiments):
        where = f"experiments[{i}]"
        if seed_override is not None and isinstance(item, dict):
            item = {**item, "seed": seed_override}
        spec = _experiment(item, where, master_seed)
        if spec.name in seen:
            raise ConfigError(f"duplicate experiment name {spec.name!r}", field=f"{where}.name")
        seen.add(spec.name)
        specs.append(spec)
    return ConfigFile(tuple(specs), master_seed, out_dir, threads)


def load_config(path, seed_override=None):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return load_config_text(text, seed_override)


def parse_config(path):
    """Validated experiment specs of a config file, defaults filled."""
    return list(load_config(path).experiments)
