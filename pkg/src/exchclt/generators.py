"""Row generators for row-wise exchangeable triangular arrays.

Five families span {extendable, non-extendable} x {jointly sign-symmetric,
marginally symmetric only}, and each isolates one of the three hypothesis
conditions:

==========================  ==========  ===========  ================================
family                      extendable  joint signs  notes
==========================  ==========  ===========  ================================
iid_symmetric               yes         yes          baseline, all conditions hold
rademacher_magnitude        no          yes          random signs on permuted magnitudes
zero_sum_permutation        no          no           permuted +/- pairs, row sum is 0
equicorrelated_gaussian     yes         rho == 0     pairwise correlation rho
scale_mixture               yes         yes          one random scale per row
==========================  ==========  ===========  ================================

Parameters that may shrink with the row size (``rho``, ``delta``) are given
as a :class:`Rate`, ``coef * m**(-power)``.  Every generator is a pure
function of its arguments and the random stream it is handed.
"""

from dataclasses import dataclass, field
from functools import lru_cache
import math

import numpy as np

from exchclt.errors import InvalidArgument

FAMILIES = (
    "iid_symmetric",
    "rademacher_magnitude",
    "zero_sum_permutation",
    "equicorrelated_gaussian",
    "scale_mixture",
)
IID_DISTS = ("std_normal", "rademacher", "uniform_sym")
MAGNITUDE_LAWS = ("ones", "two_point", "uniform", "exponential")

_SQRT3 = math.sqrt(3.0)
_NORMALIZED_TOL = 1e-9


@dataclass(frozen=True)
class ArrayRow:
    """One realized row X_1..X_m of the array."""

    values: np.ndarray
    generator_id: str = ""
    seed_info: tuple = None  # (master_seed, m, replicate) when engine-driven

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1:
            raise InvalidArgument("row values must be one-dimensional")
        if not np.isfinite(values).all():
            raise InvalidArgument("row values must be finite")
        object.__setattr__(self, "values", values)

    @property
    def m(self):
        return len(self.values)

    def replace_values(self, values):
        return ArrayRow(values, self.generator_id, self.seed_info)

    @classmethod
    def _trusted(cls, values, generator_id, seed_info):
        # skips validation; values must already be a finite 1-d float64 array
        row = object.__new__(cls)
        object.__setattr__(row, "values", values)
        object.__setattr__(row, "generator_id", generator_id)
        object.__setattr__(row, "seed_info", seed_info)
        return row


@dataclass(frozen=True)
class Rate:
    """A parameter schedule ``coef * m**(-power)``; ``power=0`` is a constant."""

    coef: float = 0.0
    power: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.coef) and self.coef >= 0):
            raise InvalidArgument(f"rate coefficient must be >= 0, got {self.coef}")
        if not (math.isfinite(self.power) and self.power >= 0):
            raise InvalidArgument(f"rate power must be >= 0, got {self.power}")

    def at(self, m):
        return self.coef * float(m) ** (-self.power)

    @property
    def vanishes(self):
        return self.coef == 0 or self.power > 0

    def __str__(self):
        if self.power == 0:
            return repr(self.coef)
        return f"{self.coef!r}*m^-{self.power!r}"


@dataclass(frozen=True)
class GeneratorSpec:
    family: str
    dist: str = "std_normal"
    magnitude_law: str = "ones"
    magnitude_seed: int = 0
    magnitudes: tuple = None
    rho: Rate = field(default_factory=Rate)
    delta: Rate = field(default_factory=Rate)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidArgument(f"unknown generator family {self.family!r}")
        if self.dist not in IID_DISTS:
            raise InvalidArgument(f"unknown distribution {self.dist!r}")
        if self.magnitude_law not in MAGNITUDE_LAWS:
            raise InvalidArgument(f"unknown magnitude law {self.magnitude_law!r}")
        if self.magnitudes is not None:
            object.__setattr__(self, "magnitudes", tuple(float(v) for v in self.magnitudes))
        for name in ("rho", "delta"):
            rate = getattr(self, name)
            if rate.power == 0 and not rate.coef < 1:
                raise InvalidArgument(f"{name} must lie in [0, 1), got {rate.coef}")

    @property
    def generator_id(self):
        if self.family == "iid_symmetric":
            return f"iid_symmetric({self.dist})"
        if self.family in ("rademacher_magnitude", "zero_sum_permutation"):
            src = "explicit" if self.magnitudes is not None else self.magnitude_law
            return f"{self.family}({src})"
        if self.family == "equicorrelated_gaussian":
            return f"equicorrelated_gaussian(rho={self.rho})"
        return f"scale_mixture(delta={self.delta})"


@dataclass(frozen=True)
class HypothesisProfile:
    exchangeable_by_construction: bool
    marginal_symmetric: bool
    jointly_sign_symmetric: bool
    extendable: bool
    cond1_expected: bool
    cond2_expected: bool
    cond3_lemma_expected: bool
    cond3_theorem_expected: bool

    def __post_init__(self):
        if self.jointly_sign_symmetric and not self.marginal_symmetric:
            raise InvalidArgument("joint sign symmetry implies marginal symmetry")


def normalize_magnitudes(raw):
    """Rescale positive magnitudes to unit mean square, keeping their order."""
    raw = np.asarray(raw, dtype=np.float64)
    if raw.ndim != 1 or raw.size == 0:
        raise InvalidArgument("magnitudes must be a nonempty sequence")
    if not (np.isfinite(raw).all() and (raw > 0).all()):
        raise InvalidArgument("magnitudes must be finite and strictly positive")
    scale = math.sqrt(np.dot(raw, raw) / raw.size)
    out = raw / scale
    # one corrective pass absorbs the rounding of the first rescale
    return out / math.sqrt(np.dot(out, out) / out.size)


def _check_normalized(values, what):
    ms = np.dot(values, values) / values.size
    if abs(ms - 1.0) > _NORMALIZED_TOL:
        raise InvalidArgument(f"{what} not normalized: mean square {ms!r}")


def _signs(m, stream):
    return stream.integers(0, 2, size=m).astype(np.float64) * 2.0 - 1.0


def gen_iid_symmetric(dist, m, stream, seed_info=None):
    """I.i.d. zero-mean unit-variance symmetric entries."""
    if m < 1:
        raise InvalidArgument(f"m must be >= 1, got {m}")
    if dist == "std_normal":
        values = stream.standard_normal(m)
    elif dist == "rademacher":
        values = _signs(m, stream)
    elif dist == "uniform_sym":
        values = stream.uniform(-_SQRT3, _SQRT3, size=m)
    else:
        raise InvalidArgument(f"unknown distribution {dist!r}")
    return ArrayRow(values, f"iid_symmetric({dist})", seed_info)


def _rademacher_magnitude_row(magnitudes, stream, seed_info, generator_id):
    values = stream.permutation(magnitudes) * _signs(len(magnitudes), stream)
    return ArrayRow._trusted(values, generator_id, seed_info)


def gen_rademacher_magnitude(magnitudes, stream, seed_info=None):
    """values_i = eps_i * R_i: i.i.d. signs times a random permutation of ``magnitudes``."""
    magnitudes = np.asarray(magnitudes, dtype=np.float64)
    if magnitudes.ndim != 1 or magnitudes.size == 0 or (magnitudes <= 0).any():
        raise InvalidArgument("magnitudes must be a nonempty sequence of positive reals")
    _check_normalized(magnitudes, "magnitudes")
    return _rademacher_magnitude_row(magnitudes, stream, seed_info, "rademacher_magnitude")


def check_sign_paired(base):
    base = np.asarray(base, dtype=np.float64)
    if base.ndim != 1 or base.size == 0 or base.size % 2:
        raise InvalidArgument("zero-sum base must have even, positive length")
    ordered = np.sort(base)
    if not np.array_equal(ordered, -ordered[::-1]) or (ordered == 0).any():
        raise InvalidArgument("zero-sum base entries must come in exact +/- pairs")
    _check_normalized(base, "zero-sum base")
    return base


def gen_zero_sum_permutation(base_values, stream, seed_info=None):
    """Uniform random permutation of a sign-paired, normalized multiset."""
    base = check_sign_paired(base_values)
    return ArrayRow(stream.permutation(base), "zero_sum_permutation", seed_info)


def gen_equicorrelated_gaussian(rho, m, stream, seed_info=None):
    """values_i = sqrt(rho) W + sqrt(1 - rho) Z_i with W, Z_i i.i.d. N(0, 1).

    Z is drawn before W, so ``rho=0`` reproduces ``gen_iid_symmetric``'s
    standard normal row bit for bit on the same stream state.
    """
    if not 0 <= rho < 1:
        raise InvalidArgument(f"rho must lie in [0, 1), got {rho}")
    if m < 1:
        raise InvalidArgument(f"m must be >= 1, got {m}")
    z = stream.standard_normal(m)
    w = stream.standard_normal()
    values = math.sqrt(rho) * w + math.sqrt(1.0 - rho) * z
    return ArrayRow(values, f"equicorrelated_gaussian(rho={rho!r})", seed_info)


def gen_scale_mixture(delta, m, stream, seed_info=None):
    """values_i = sigma Z_i, one sigma ~ U[1 - delta, 1 + delta] per row."""
    if not 0 <= delta < 1:
        raise InvalidArgument(f"delta must lie in [0, 1), got {delta}")
    if m < 1:
        raise InvalidArgument(f"m must be >= 1, got {m}")
    z = stream.standard_normal(m)
    sigma = stream.uniform(1.0 - delta, 1.0 + delta)
    return ArrayRow(sigma * z, f"scale_mixture(delta={delta!r})", seed_info)


def _law_draws(law, seed, size):
    if law == "ones":
        return np.ones(size)
    rng = np.random.default_rng([int(seed), int(size)])
    if law == "two_point":
        return rng.integers(1, 3, size=size).astype(np.float64)
    if law == "uniform":
        return 1.0 - rng.random(size)  # (0, 1]
    return rng.exponential(size=size) + np.finfo(float).tiny


@lru_cache(maxsize=64)
def _fixed_multiset(spec, m):
    """Normalized magnitudes (or zero-sum base) of length ``m``; read-only."""
    if spec.family == "rademacher_magnitude":
        if spec.magnitudes is not None:
            if len(spec.magnitudes) != m:
                raise InvalidArgument(
                    f"explicit magnitudes have length {len(spec.magnitudes)}, need m={m}")
            out = normalize_magnitudes(spec.magnitudes)
        else:
            out = normalize_magnitudes(_law_draws(spec.magnitude_law, spec.magnitude_seed, m))
    else:
        if spec.magnitudes is not None:
            if len(spec.magnitudes) != m:
                raise InvalidArgument(
                    f"explicit base has length {len(spec.magnitudes)}, need m={m}")
            out = check_sign_paired(spec.magnitudes).copy()
        else:
            if m % 2:
                raise InvalidArgument(f"zero_sum_permutation needs even m, got {m}")
            c = normalize_magnitudes(_law_draws(spec.magnitude_law, spec.magnitude_seed, m // 2))
            out = np.empty(m)
            out[0::2] = c
            out[1::2] = -c
    out.setflags(write=False)
    return out


def generate_row(spec, m, stream, seed_info=None):
    """Draw one row of size ``m`` from the family described by ``spec``."""
    gid = spec.generator_id
    family = spec.family
    if family == "iid_symmetric":
        row = gen_iid_symmetric(spec.dist, m, stream, seed_info)
    elif family == "rademacher_magnitude":
        return _rademacher_magnitude_row(_fixed_multiset(spec, m), stream, seed_info, gid)
    elif family == "zero_sum_permutation":
        return ArrayRow._trusted(stream.permutation(_fixed_multiset(spec, m)), gid, seed_info)
    elif family == "equicorrelated_gaussian":
        row = gen_equicorrelated_gaussian(spec.rho.at(m), m, stream, seed_info)
    else:
        row = gen_scale_mixture(spec.delta.at(m), m, stream, seed_info)
    return ArrayRow._trusted(row.values, gid, seed_info)


def hypothesis_profile(spec):
    """Which hypotheses the family satisfies by construction."""
    family = spec.family
    if family == "iid_symmetric":
        return HypothesisProfile(True, True, True, True, True, True, True, True)
    if family == "rademacher_magnitude":
        return HypothesisProfile(True, True, True, False, True, True, True, True)
    if family == "zero_sum_permutation":
        return HypothesisProfile(True, True, False, False, True, True, True, True)
    if family == "equicorrelated_gaussian":
        vanishing = spec.rho.vanishes
        return HypothesisProfile(
            True, True, spec.rho.coef == 0, True, vanishing, True, vanishing, vanishing)
    vanishing = spec.delta.vanishes
    return HypothesisProfile(True, True, True, True, True, True, vanishing, vanishing)
