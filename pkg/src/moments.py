"""
Mixed moments of sym^3 twists over dyadic discriminant blocks.

S(D) = (1/D) sum_d prod_i L(1/2, sym^3 f_i x chi_d)^l_i is the mixed-moment
statistic, T(D) = (1/D) sum_d prod_i sqrt(L_i / L(1, chi_d)) the period proxy
whose decay signals decorrelation. Both are reported per block, with the
1/#family normalisation alongside, and log S is fitted against log log D.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

try:
    from .errors import InsufficientBlocksError, MissingValueError, ResourceError
    from .generate_reports import read_central_values, write_central_values
    from .hecke import EigenformSpec, SymCubeCoefficients
    from .lvalue import (AfeSettings, CentralValue, GammaData, TwistedLSeries, evaluate,
                         make_series, period_proxy, truncation_length)
    from .quadchar import DiscriminantFilter, dirichlet_L1, enumerate_discriminants
except ImportError:
    from errors import InsufficientBlocksError, MissingValueError, ResourceError
    from generate_reports import read_central_values, write_central_values
    from hecke import EigenformSpec, SymCubeCoefficients
    from lvalue import (AfeSettings, CentralValue, GammaData, TwistedLSeries, evaluate,
                        make_series, period_proxy, truncation_length)
    from quadchar import DiscriminantFilter, dirichlet_L1, enumerate_discriminants

logger = logging.getLogger(__name__)

ValueStore = Dict[Tuple[int, str], CentralValue]

NEGATIVE_TOL = 1e-12


@dataclass(frozen=True)
class ExperimentConfig:
    """Forms, weights l_i, dyadic blocks and family filter of one sweep."""

    forms: Tuple[EigenformSpec, ...]
    ells: Tuple[float, ...]
    blocks: Tuple[int, ...]
    residue: int = 1
    modulus: int = 8
    afe: AfeSettings = field(default_factory=AfeSettings)
    normalisation: str = 'D'
    workers: int = 1
    recompute: bool = True

    def __post_init__(self):
        labels = [f.label for f in self.forms]
        if len(set(labels)) != len(labels):
            raise ValueError(f"forms must be pairwise distinct: {labels}")
        if len(self.ells) != len(self.forms):
            raise ValueError(f"{len(self.forms)} forms but {len(self.ells)} weights")
        if any(ell <= 0 for ell in self.ells):
            raise ValueError(f"weights must be positive: {self.ells}")

    @classmethod
    def from_config(cls, config: Dict[str, Any]) -> "ExperimentConfig":
        forms = tuple(EigenformSpec(int(f['weight']), str(f['label'])) for f in config['forms'])
        ells = [float(v) for v in config['experiment'].get('ells', [])]
        if len(ells) != len(forms):
            # one weight broadcast to every form
            ells = [ells[0] if ells else 0.5] * len(forms)
        family = config['family']
        return cls(forms=forms, ells=tuple(ells),
                   blocks=tuple(int(D) for D in family.get('blocks', [])),
                   residue=int(family['residue']), modulus=int(family['modulus']),
                   afe=AfeSettings.from_config(config['afe']),
                   normalisation=family.get('normalisation', 'D'),
                   workers=int(config['runtime'].get('workers', 1)))

    @property
    def labels(self) -> Tuple[str, ...]:
        return tuple(f.label for f in self.forms)

    def with_ells(self, ells: Sequence[float]) -> "ExperimentConfig":
        return ExperimentConfig(self.forms, tuple(ells), self.blocks, self.residue, self.modulus,
                                self.afe, self.normalisation, self.workers, self.recompute)

    def weighted_forms(self) -> List[Tuple[str, float]]:
        """(label, l) pairs in label order, so products do not depend on form order."""
        return sorted(zip(self.labels, self.ells))


@dataclass(frozen=True)
class BlockStats:
    D: int
    family_size: int
    S: float
    S_family: float
    T: float
    T_family: float
    predicted_S: float
    predicted_T: float
    vanishing: int

    def as_record(self) -> Dict[str, Any]:
        return dict(self.__dict__)


@dataclass(frozen=True)
class MomentReport:
    """Per-block statistics of one run plus the fitted log log D slopes."""

    run: str
    ells: Tuple[float, ...]
    blocks: Tuple[BlockStats, ...]
    slope_S: float
    slope_T: float
    predicted_S: float
    predicted_T: float

    def as_records(self) -> List[Dict[str, Any]]:
        rows = []
        for block in self.blocks:
            row = {'run': self.run, 'ells': ",".join(repr(ell) for ell in self.ells)}
            row.update(block.as_record())
            row['slope_S'] = self.slope_S
            row['slope_T'] = self.slope_T
            rows.append(row)
        return rows


def predicted_moment_exponent(ells: Sequence[float]) -> float:
    """sum_i l_i (l_i - 1) / 2."""
    return sum(ell * (ell - 1) / 2 for ell in ells)


def predicted_decorrelation_exponent(m: int) -> float:
    return -m / 8


def block_filter(cfg: ExperimentConfig, D: int) -> DiscriminantFilter:
    return DiscriminantFilter(D, cfg.residue, cfg.modulus)


def block_family(cfg: ExperimentConfig, D: int) -> List[int]:
    return enumerate_discriminants(block_filter(cfg, D))


def _denominator(D: int, family_size: int, normalisation: str) -> float:
    if normalisation == 'family':
        return float(family_size)
    return float(D)


def _clamped(value: CentralValue) -> float:
    if value.L_half >= 0:
        return value.L_half
    if value.L_half < -NEGATIVE_TOL * max(value.scale, 1.0):
        logger.warning(f"clamping negative central value {value.L_half:.3g} "
                       f"at d={value.d} ({value.form_label}) to 0")
    return 0.0


def _lookup(values: Mapping[Tuple[int, str], CentralValue], d: int, label: str) -> CentralValue:
    try:
        return values[(d, label)]
    except KeyError:
        raise MissingValueError(f"no central value for d={d}, {label}")


def moment_statistic(cfg: ExperimentConfig, D: int, values: Mapping[Tuple[int, str], CentralValue],
                     normalisation: Optional[str] = None) -> float:
    """
    S(D) = (1/D) sum_d prod_i max(L_i(d), 0)^l_i over the block D <= -d <= 2D.

    Args:
        cfg: Experiment configuration
        D: Block start
        values: Central values keyed by (d, form label)
        normalisation: 'D' (default from cfg) or 'family'

    Raises:
        MissingValueError: If a (d, form) pair has no value
    """
    family = block_family(cfg, D)
    if not family:
        return 0.0
    total = 0.0
    weighted = cfg.weighted_forms()
    for d in family:
        product = 1.0
        for label, ell in weighted:
            product *= _clamped(_lookup(values, d, label)) ** ell
        total += product
    return total / _denominator(D, len(family), normalisation or cfg.normalisation)


def decorrelation_statistic(cfg: ExperimentConfig, D: int,
                            values: Mapping[Tuple[int, str], CentralValue],
                            normalisation: Optional[str] = None) -> float:
    """T(D) = (1/D) sum_d prod_i sqrt(max(L_i(d), 0) / L(1, chi_d))."""
    family = block_family(cfg, D)
    if not family:
        return 0.0
    total = 0.0
    for d in family:
        row = [_lookup(values, d, label) for label in sorted(cfg.labels)]
        total += period_proxy(d, [_clamped(value) for value in row], L1=row[0].L1_chi)
    return total / _denominator(D, len(family), normalisation or cfg.normalisation)


def cauchy_schwarz_check(cfg: ExperimentConfig, D: int,
                         values: Mapping[Tuple[int, str], CentralValue]) -> Tuple[float, float]:
    """
    (T(D)^2, S1(D) S2(D)) for the first two forms, S_i = (1/D) sum_d L_i(d) / L(1, chi_d).
    The first never exceeds the second.
    """
    if len(cfg.forms) < 2:
        raise ValueError("the Cauchy-Schwarz check needs two forms")
    pair = ExperimentConfig(cfg.forms[:2], (0.5, 0.5), cfg.blocks, cfg.residue, cfg.modulus,
                            cfg.afe, cfg.normalisation)
    T = decorrelation_statistic(pair, D, values)
    family = block_family(cfg, D)
    denominator = _denominator(D, len(family), cfg.normalisation)
    S = []
    for spec in cfg.forms[:2]:
        total = 0.0
        for d in family:
            value = _lookup(values, d, spec.label)
            total += _clamped(value) / value.L1_chi
        S.append(total / denominator if family else 0.0)
    return T * T, S[0] * S[1]


def fit_log_slope(Ds: Sequence[int], stats: Sequence[float], what: str = "S") -> float:
    """Least-squares slope of log stat against log log D; NaN unless every stat is positive."""
    if any(not s > 0 for s in stats):
        if all(s == 0 for s in stats):
            logger.warning(f"{what}(D) vanishes identically on every block; slope undefined")
        else:
            logger.warning(f"{what}(D) is zero on some block; slope undefined")
        return float('nan')
    x = np.log(np.log(np.asarray(Ds, dtype=np.float64)))
    y = np.log(np.asarray(stats, dtype=np.float64))
    return float(np.polyfit(x, y, 1)[0])


def dyadic_sweep(cfg: ExperimentConfig, values: Mapping[Tuple[int, str], CentralValue],
                 run: str = 'main') -> MomentReport:
    """
    Per-block S and T with both normalisations and their fitted slopes.

    Raises:
        InsufficientBlocksError: Fewer than 3 blocks
        MissingValueError: A needed central value is absent
    """
    if len(cfg.blocks) < 3:
        raise InsufficientBlocksError(f"need at least 3 dyadic blocks, got {len(cfg.blocks)}")
    if list(cfg.blocks) != sorted(cfg.blocks):
        raise ValueError(f"blocks must be ascending: {cfg.blocks}")
    predicted_S = predicted_moment_exponent(cfg.ells)
    predicted_T = predicted_decorrelation_exponent(len(cfg.forms))
    blocks = []
    for D in cfg.blocks:
        family = block_family(cfg, D)
        vanishing = sum(1 for d in family
                        if any(_lookup(values, d, label).epsilon == -1 for label in cfg.labels))
        blocks.append(BlockStats(
            D=D, family_size=len(family),
            S=moment_statistic(cfg, D, values, 'D'),
            S_family=moment_statistic(cfg, D, values, 'family'),
            T=decorrelation_statistic(cfg, D, values, 'D'),
            T_family=decorrelation_statistic(cfg, D, values, 'family'),
            predicted_S=predicted_S, predicted_T=predicted_T, vanishing=vanishing))
        logger.info(f"[{run}] D={D}: {len(family)} discriminants, {vanishing} with a vanishing factor")
    key = 'S_family' if cfg.normalisation == 'family' else 'S'
    key_T = 'T_family' if cfg.normalisation == 'family' else 'T'
    Ds = [b.D for b in blocks]
    slope_S = fit_log_slope(Ds, [getattr(b, key) for b in blocks], "S")
    slope_T = fit_log_slope(Ds, [getattr(b, key_T) for b in blocks], "T")
    return MomentReport(run, cfg.ells, tuple(blocks), slope_S, slope_T, predicted_S, predicted_T)


# ---------------------------------------------------------------------------
# Central values
# ---------------------------------------------------------------------------

def required_terms(cfg: ExperimentConfig, spec: EigenformSpec, d_max: int) -> int:
    """Coefficients needed to evaluate every twist with |d| <= d_max under both kernels."""
    gamma = GammaData(spec.weight)
    probe = TwistedLSeries(None, -abs(d_max), gamma)
    kernels = (cfg.afe.kernel(gamma), cfg.afe.kernel(gamma, c=cfg.afe.c_alt, tilt=cfg.afe.tilt))
    return truncation_length(probe, cfg.afe, kernels)


def sweep_terms(cfg: ExperimentConfig, budget: int) -> int:
    """Table length for the whole sweep, checked against the term budget."""
    if not cfg.blocks:
        return 0
    needed = max(required_terms(cfg, spec, 2 * max(cfg.blocks)) for spec in cfg.forms)
    if needed > budget:
        raise ResourceError(f"blocks up to D={max(cfg.blocks)} need {needed} coefficients; "
                            f"the budget is {budget} (raise --terms or lower --dmax)")
    return needed


def _evaluate_pair(args) -> CentralValue:
    d, form, afe = args
    return evaluate(make_series(form, d), afe, L1=dirichlet_L1(d))


def evaluate_pairs(pairs: Sequence[Tuple[int, str]], forms: Mapping[str, SymCubeCoefficients],
                   afe: AfeSettings, workers: int = 1) -> List[CentralValue]:
    """Evaluate (d, label) pairs on a thread pool; results keep the input order."""
    jobs = [(d, forms[label], afe) for d, label in pairs]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(_evaluate_pair, jobs))


def collect_central_values(cfg: ExperimentConfig, D: int, forms: Mapping[str, SymCubeCoefficients],
                           store: Optional[Path] = None,
                           values: Optional[ValueStore] = None) -> ValueStore:
    """
    Central values for every (d, form) pair of a block.

    Pairs already in `values` or in the CSV store are reused; the rest are
    evaluated on a thread pool and the store is rewritten with the union.

    Raises:
        MissingValueError: Pairs missing and recomputation disabled
    """
    values = dict(values or {})
    if store is not None and Path(store).exists():
        for key, cv in read_central_values(store).items():
            values.setdefault(key, cv)
    family = block_family(cfg, D)
    todo = [(d, label) for d in family for label in sorted(cfg.labels) if (d, label) not in values]
    if todo and not cfg.recompute:
        raise MissingValueError(f"{len(todo)} central values missing for D={D} and recomputation is off")
    if todo:
        logger.info(f"D={D}: evaluating {len(todo)} central values on {cfg.workers} workers")
        results = evaluate_pairs(todo, forms, cfg.afe, cfg.workers)
        for (d, label), cv in zip(todo, results):
            values[(d, label)] = cv
        if store is not None:
            write_central_values(store, values.values())
    return values


def run_experiment(cfg: ExperimentConfig, forms: Mapping[str, SymCubeCoefficients],
                   store: Optional[Path] = None, symplectic: bool = False
                   ) -> Tuple[List[MomentReport], ValueStore]:
    """
    Collect every block and run the sweep; with `symplectic` the sweep is
    repeated with all l_i = 1.
    """
    values: ValueStore = {}
    for D in cfg.blocks:
        values = collect_central_values(cfg, D, forms, store, values)
    reports = [dyadic_sweep(cfg, values, 'main')]
    if symplectic:
        reports.append(dyadic_sweep(cfg.with_ells([1.0] * len(cfg.forms)), values, 'symplectic'))
    return reports, values
