"""Reproducible execution of generator x statistic x schedule experiments."""

from dataclasses import dataclass, field
import logging
import time

from exchclt import __version__
from exchclt.errors import CellError, InvalidArgument
from exchclt.generators import GeneratorSpec
from exchclt.gof import StatisticSample, gof_report
from exchclt.hypothesis_checks import DEFAULT_EPSILONS, condition_report, summarize_rows
from exchclt.statistics import ScheduleSpec, StatisticKind
from exchclt.streams import derive_stream  # noqa: F401  (re-exported)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    generator: GeneratorSpec
    schedule: ScheduleSpec
    statistic: StatisticKind = field(default_factory=StatisticKind)
    n_rep: int = 10_000
    master_seed: int = 0
    epsilons: tuple = DEFAULT_EPSILONS
    write_samples: bool = False
    write_reports: bool = True

    def __post_init__(self):
        if self.n_rep < 1:
            raise InvalidArgument(f"n_rep must be >= 1, got {self.n_rep}")
        eps = tuple(float(e) for e in self.epsilons)
        if not eps or any(not e > 0 for e in eps):
            raise InvalidArgument(f"epsilons must be positive, got {self.epsilons}")
        object.__setattr__(self, "epsilons", eps)
        if self.statistic.kind == "weber" and self.statistic.gamma != self.schedule.gamma:
            raise InvalidArgument("weber statistic gamma must match the schedule gamma")

    def lemma_k(self, m):
        """Prefix length used for the statistic and the k-normalized condition 3."""
        if self.statistic.kind == "weber":
            return self.schedule.k(m)
        return max(1, m // 2)


@dataclass
class Cell:
    m: int
    sample: StatisticSample
    conditions: object
    gof: object
    n_rep: int
    wall_time: float


@dataclass
class ExperimentReport:
    spec: ExperimentSpec
    cells: list
    version: str = __version__

    @property
    def master_seed(self):
        return self.spec.master_seed


def run_cell(spec, m, seed=None, threads=1):
    """One Monte Carlo cell: statistic sample, condition estimates and GoF at size ``m``."""
    seed = spec.master_seed if seed is None else seed
    summ = summarize_rows(
        spec.generator, m, spec.n_rep, seed,
        k=spec.lemma_k(m), statistic=spec.statistic, threads=threads,
    )
    sample = StatisticSample(spec.statistic, m, summ.statistic, seed)
    return sample, condition_report(summ, spec.epsilons), gof_report(sample)


def run_experiment(spec, threads=1):
    cells = []
    for m in spec.schedule.m_values:
        start = time.perf_counter()
        try:
            sample, cond, gof = run_cell(spec, m, threads=threads)
        except Exception as exc:
            raise CellError(spec.name, m, exc) from exc
        elapsed = time.perf_counter() - start
        logger.info("%s m=%d ks=%.5f (%.2fs)", spec.name, m, gof.ks, elapsed)
        cells.append(Cell(m, sample, cond, gof, spec.n_rep, elapsed))
    return ExperimentReport(spec, cells)
