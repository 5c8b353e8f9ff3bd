"""
Central values L(1/2, sym^3 f x chi_d) by the approximate functional equation.

The smoothing function

    V(x) = 1/(2 pi i) int_(sigma0) G(s) L_inf(1/2+s)/L_inf(1/2) x^(-s) ds/s,
    L_inf(s) = prod_j Gamma_C(s + mu_j),  Gamma_C(s) = 2 (2 pi)^(-s) Gamma(s),

is tabulated once per kernel on a log-x grid (trapezoidal rule on a vertical
line, checked by step halving) and interpolated with a cubic spline. A tilted
kernel G(s) exp(b s) gives V(x e^(-b)) on the direct side and V(x e^b) on the
dual side; comparing it with the even kernel separates the two root-number
hypotheses.
"""

import dataclasses
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import loggamma

try:
    from .errors import (AmbiguityError, ConsistencyError, InsufficientCoefficientsError,
                         QuadratureError)
    from .hecke import SymCubeCoefficients
    from .quadchar import character_values, dirichlet_L1
except ImportError:
    from errors import (AmbiguityError, ConsistencyError, InsufficientCoefficientsError,
                        QuadratureError)
    from hecke import SymCubeCoefficients
    from quadchar import character_values, dirichlet_L1

logger = logging.getLogger(__name__)

QUADRATURE_TOL = 1e-9
ROW_CHUNK = 256
LOG_2PI = math.log(2 * math.pi)


@dataclass(frozen=True)
class GammaData:
    """
    Archimedean data: L_inf(s) = prod Gamma_C(s + mu) over the shifts.

    The default shifts are those of sym^3 of a weight-k form, ((3k-3)/2, (k-1)/2).
    """

    weight: int
    shifts: Tuple[float, ...] = ()

    def __post_init__(self):
        if not self.shifts:
            k = self.weight
            object.__setattr__(self, 'shifts', ((3 * k - 3) / 2, (k - 1) / 2))
        if any(mu <= 0 for mu in self.shifts):
            raise ValueError(f"gamma shifts must be positive: {self.shifts}")

    @classmethod
    def standard(cls, weight: int) -> "GammaData":
        """Gamma factor of L(s, f) itself (degree 2)."""
        return cls(weight, ((weight - 1) / 2,))

    @property
    def degree(self) -> int:
        return 2 * len(self.shifts)


@dataclass(frozen=True)
class SmoothingKernel:
    """Kernel G(s) = exp(c s^2 + tilt s) and the quadrature parameters of V."""

    gamma: GammaData
    c: float = 1e-3
    sigma0: float = 1.5
    step: float = 0.05
    height: float = 60.0
    grid_step: float = 0.01
    tail_tol: float = 1e-15
    tilt: float = 0.0
    log_x_min: float = -30.0
    log_x_max: float = 9.25

    def untilted(self) -> "SmoothingKernel":
        return dataclasses.replace(self, tilt=0.0)

    def with_c(self, c: float) -> "SmoothingKernel":
        return dataclasses.replace(self, c=c)


@dataclass(frozen=True)
class AfeSettings:
    """Truncation and tolerance constants of the AFE evaluation."""

    A: float = 3.0
    B: float = 10.0
    c: float = 1e-3
    c_alt: float = 4e-3
    tilt: float = 0.5
    sigma0: float = 1.5
    step: float = 0.05
    height: float = 60.0
    grid_step: float = 0.01
    tail_tol: float = 1e-15
    root_tol: float = 1e-6
    vanish_tol: float = 1e-5

    @classmethod
    def from_config(cls, afe: Dict[str, float]) -> "AfeSettings":
        names = {f.name for f in dataclasses.fields(cls)}
        return cls(**{key: float(value) for key, value in afe.items() if key in names})

    def kernel(self, gamma: GammaData, c: Optional[float] = None, tilt: float = 0.0) -> SmoothingKernel:
        return SmoothingKernel(gamma, c=self.c if c is None else c, sigma0=self.sigma0,
                               step=self.step, height=self.height, grid_step=self.grid_step,
                               tail_tol=self.tail_tol, tilt=tilt)


@dataclass(frozen=True)
class TwistedLSeries:
    """L(s, F x chi_d) with Dirichlet coefficients chi_d(n) b(n); F = sym^3 f by default."""

    form: SymCubeCoefficients
    d: int
    gamma: GammaData
    epsilon: Optional[int] = None

    @property
    def conductor(self) -> int:
        return abs(self.d) ** self.gamma.degree

    @property
    def sqrt_conductor(self) -> float:
        return math.sqrt(self.conductor)

    def with_epsilon(self, epsilon: int) -> "TwistedLSeries":
        return dataclasses.replace(self, epsilon=epsilon)


@dataclass(frozen=True)
class RootNumberResult:
    epsilon: int
    residual_plus: float    # |L_even - L_tilted| under epsilon = +1
    residual_minus: float   # |L_tilted| under epsilon = -1 (the tilted odd residual)
    scale: float
    N_cut: int


@dataclass(frozen=True)
class CentralValue:
    """One row of the central-value dump."""

    d: int
    form_label: str
    epsilon: int
    L_half: float
    L1_chi: float
    N_cut: int
    scale: float = float('nan')
    odd_residual: float = float('nan')


def make_series(form: SymCubeCoefficients, d: int, gamma: Optional[GammaData] = None) -> TwistedLSeries:
    """TwistedLSeries of sym^3 f x chi_d with the default gamma data."""
    return TwistedLSeries(form, d, gamma or GammaData(form.weight))


# ---------------------------------------------------------------------------
# Smoothing function
# ---------------------------------------------------------------------------

def _log_gamma_ratio(s: np.ndarray, gamma: GammaData) -> np.ndarray:
    """log L_inf(1/2 + s) - log L_inf(1/2)."""
    out = np.zeros_like(s, dtype=np.complex128)
    for mu in gamma.shifts:
        a = 0.5 + mu
        out += -s * LOG_2PI + loggamma(a + s) - loggamma(a)
    return out


def _line_integrand(kernel: SmoothingKernel, sigma: float, t: np.ndarray) -> np.ndarray:
    """G(s) R(s) / s on s = sigma + i t (tilt applied by rescaling x, not here)."""
    s = sigma + 1j * t
    return np.exp(kernel.c * s * s + _log_gamma_ratio(s, kernel.gamma)) / s


def _vertical_line(log_x: np.ndarray, kernel: SmoothingKernel, sigma: float,
                   step: float) -> Tuple[np.ndarray, np.ndarray, float]:
    """
    (1/pi) int_0^H Re[f(sigma+it) x^(-sigma-it)] dt by the trapezoidal rule with
    step/2, together with the step-h estimate and the integrand size at t = H.
    """
    n_fine = int(round(kernel.height / (step / 2)))
    t = np.linspace(0.0, kernel.height, n_fine + 1)
    f = _line_integrand(kernel, sigma, t)
    w_fine = np.full(t.size, step / 2)
    w_fine[0] = w_fine[-1] = step / 4
    w_coarse = np.zeros(t.size)
    w_coarse[::2] = step
    w_coarse[0] = step / 2
    w_coarse[-1 if n_fine % 2 == 0 else -2] = step / 2
    fine = np.empty(log_x.size)
    coarse = np.empty(log_x.size)
    for lo in range(0, log_x.size, ROW_CHUNK):
        lx = log_x[lo:lo + ROW_CHUNK, None]
        vals = (f[None, :] * np.exp(-(sigma + 1j * t[None, :]) * lx)).real
        fine[lo:lo + ROW_CHUNK] = vals @ w_fine / math.pi
        coarse[lo:lo + ROW_CHUNK] = vals @ w_coarse / math.pi
    edge = float(np.abs(f[-1]) * np.exp(-sigma * log_x).max())
    return fine, coarse, edge


def _evaluate_V(log_x: np.ndarray, kernel: SmoothingKernel, sigma0: Optional[float] = None) -> np.ndarray:
    """
    V at exp(log_x) for the untilted kernel. x >= 1 uses Re(s) = sigma0; x < 1
    moves to Re(s) = -sigma0 (capped below the first gamma pole) and adds the
    residue 1 at s = 0.

    Raises:
        QuadratureError: If step halving or the truncation height is not converged
    """
    sigma0 = kernel.sigma0 if sigma0 is None else sigma0
    sigma_left = -min(sigma0, 0.5 + min(kernel.gamma.shifts) - 0.25)
    log_x = np.asarray(log_x, dtype=np.float64)
    V = np.empty(log_x.size)
    for mask, sigma, residue in ((log_x >= 0, sigma0, 0.0), (log_x < 0, sigma_left, 1.0)):
        if not mask.any():
            continue
        fine, coarse, edge = _vertical_line(log_x[mask], kernel, sigma, kernel.step)
        diff = float(np.max(np.abs(fine - coarse)))
        if diff > QUADRATURE_TOL:
            raise QuadratureError(f"step halving changed V by {diff:.3g} (sigma={sigma})")
        if edge > QUADRATURE_TOL * 1e-3:
            raise QuadratureError(f"integrand still {edge:.3g} at height {kernel.height}")
        V[mask] = fine + residue
    return V


def smoothing_V(x: float, kernel: SmoothingKernel, sigma0: Optional[float] = None) -> float:
    """
    V(x) for the kernel by direct quadrature (no interpolation).

    Args:
        x: Positive argument
        kernel: Smoothing kernel; its tilt b evaluates V_0(x e^(-b))
        sigma0: Optional override of the contour abscissa

    Raises:
        QuadratureError: On non-convergence
    """
    if not x > 0:
        raise ValueError(f"x must be positive, got {x}")
    log_x = math.log(x) - kernel.tilt
    return float(_evaluate_V(np.array([log_x]), kernel.untilted(), sigma0)[0])


@dataclass(frozen=True)
class KernelTable:
    """Spline of V on a log-x grid plus the point where V drops below tail_tol."""

    spline: CubicSpline
    log_x_min: float
    log_x_tail: float

    @property
    def x_tail(self) -> float:
        return math.exp(self.log_x_tail)

    def __call__(self, log_x: np.ndarray) -> np.ndarray:
        log_x = np.asarray(log_x, dtype=np.float64)
        out = np.where(log_x >= self.log_x_tail, 0.0, 1.0)
        inside = (log_x > self.log_x_min) & (log_x < self.log_x_tail)
        if inside.any():
            out[inside] = self.spline(log_x[inside])
        return out


def kernel_table(kernel: SmoothingKernel) -> KernelTable:
    """Tabulated V for a kernel; tilted kernels share the untilted table."""
    return _kernel_table(kernel.untilted())


@lru_cache(maxsize=32)
def _kernel_table(kernel: SmoothingKernel) -> KernelTable:
    n = int(round((kernel.log_x_max - kernel.log_x_min) / kernel.grid_step))
    grid = np.linspace(kernel.log_x_min, kernel.log_x_max, n + 1)
    V = _evaluate_V(grid, kernel)
    above = np.flatnonzero(np.abs(V) >= kernel.tail_tol)
    if above.size == 0 or above[-1] + 1 >= grid.size:
        raise QuadratureError(f"V does not fall below {kernel.tail_tol} by x = e^{kernel.log_x_max}")
    tail = float(grid[above[-1] + 1])
    if V.min() < -1e-12:
        logger.warning(f"V takes negative values (min {V.min():.3g}) for {kernel}")
    logger.debug(f"kernel c={kernel.c}: V < {kernel.tail_tol} beyond x = {math.exp(tail):.4g}")
    return KernelTable(CubicSpline(grid, V), kernel.log_x_min, tail)


# ---------------------------------------------------------------------------
# Approximate functional equation
# ---------------------------------------------------------------------------

def twisted_coefficient(series: TwistedLSeries, n: int) -> float:
    """chi_d(n) b(n); zero when gcd(n, d) > 1."""
    if n < 1 or n > series.form.N_max:
        raise ValueError(f"n={n} outside 1..{series.form.N_max}")
    chi = int(character_values(series.d, np.array([n]))[0])
    return chi * float(series.form.b[n])


def truncation_length(series: TwistedLSeries, settings: AfeSettings,
                      kernels: Iterable[SmoothingKernel] = ()) -> int:
    """
    N_cut = ceil(A sqrt(Q) (log Q + B)), extended when needed to the point beyond
    which every kernel's V (tilts included) is below tail_tol.

    At small conductors the A,B rule stops short of the kernel tail; the sum must
    still run past it or the two sides of the functional equation disagree.
    """
    Q = series.conductor
    n_rule = math.ceil(settings.A * math.sqrt(Q) * (math.log(Q) + settings.B))
    kernels = list(kernels) or [settings.kernel(series.gamma)]
    n_tail = max(math.ceil(kernel_table(k).x_tail * math.exp(abs(k.tilt)) * series.sqrt_conductor)
                 for k in kernels)
    return max(1, n_rule, n_tail)


def _weighted_coefficients(series: TwistedLSeries, N: int) -> Tuple[np.ndarray, np.ndarray]:
    if N > series.form.N_max:
        raise InsufficientCoefficientsError(
            f"{series.form.label}, d={series.d}: need {N} coefficients, have {series.form.N_max}")
    n = np.arange(1, N + 1, dtype=np.int64)
    coeff = character_values(series.d, n) * series.form.b[1:N + 1] / np.sqrt(n)
    return n, coeff


def afe_sums(series: TwistedLSeries, kernel: SmoothingKernel, N: int) -> Tuple[float, float, float]:
    """
    Direct and dual AFE sums for a (possibly tilted) kernel.

    Returns:
        (S_direct, S_dual, scale) with L(1/2) = S_direct + epsilon * S_dual and
        scale = sum |coefficient| (V_direct + V_dual)
    """
    n, coeff = _weighted_coefficients(series, N)
    table = kernel_table(kernel)
    log_x = np.log(n) - math.log(series.sqrt_conductor)
    v_direct = table(log_x - kernel.tilt)
    v_dual = v_direct if kernel.tilt == 0 else table(log_x + kernel.tilt)
    direct = float(np.dot(coeff, v_direct))
    dual = direct if kernel.tilt == 0 else float(np.dot(coeff, v_dual))
    scale = float(np.dot(np.abs(coeff), v_direct + v_dual))
    return direct, dual, scale


def determine_root_number(series: TwistedLSeries, settings: AfeSettings,
                          N_cut: Optional[int] = None) -> RootNumberResult:
    """
    Root number from two kernels: K1 = (c, no tilt) and K2 = (c_alt, tilt).

    Under hypothesis epsilon the AFE gives L_1 = (1 + epsilon) S and
    L_2 = S_direct + epsilon S_dual; the hypothesis whose two values agree
    within root_tol * scale wins.

    Raises:
        AmbiguityError: Both hypotheses consistent
        ConsistencyError: Neither hypothesis consistent
    """
    k1 = settings.kernel(series.gamma)
    k2 = settings.kernel(series.gamma, c=settings.c_alt, tilt=settings.tilt)
    if N_cut is None:
        N_cut = truncation_length(series, settings, (k1, k2))
    even, _, scale1 = afe_sums(series, k1, N_cut)
    direct, dual, scale2 = afe_sums(series, k2, N_cut)
    scale = max(scale1, scale2)
    residual_plus = abs(2 * even - (direct + dual))
    residual_minus = abs(direct - dual)
    tol = settings.root_tol * scale
    plus_ok, minus_ok = residual_plus < tol, residual_minus < tol
    if plus_ok and minus_ok:
        raise AmbiguityError(
            f"d={series.d}, {series.form.label}: both signs consistent "
            f"(residuals {residual_plus:.3g}, {residual_minus:.3g}; scale {scale:.3g})")
    if not (plus_ok or minus_ok):
        raise ConsistencyError(
            f"d={series.d}, {series.form.label}: no sign consistent "
            f"(residuals {residual_plus:.3g}, {residual_minus:.3g}; scale {scale:.3g})")
    epsilon = 1 if plus_ok else -1
    logger.debug(f"d={series.d} {series.form.label}: epsilon={epsilon} "
                 f"(+:{residual_plus:.3g} -:{residual_minus:.3g} scale {scale:.3g})")
    return RootNumberResult(epsilon, residual_plus, residual_minus, scale, N_cut)


def root_number(series: TwistedLSeries, settings: AfeSettings = AfeSettings()) -> int:
    """Empirical root number, +1 or -1."""
    return determine_root_number(series, settings).epsilon


def central_value(series: TwistedLSeries, settings: AfeSettings = AfeSettings(),
                  N_cut: Optional[int] = None, c: Optional[float] = None) -> float:
    """
    L(1/2) = (1 + epsilon) sum chi_d(n) b(n) n^(-1/2) V(n / sqrt Q); exactly 0 for epsilon = -1.

    Raises:
        InsufficientCoefficientsError: Table shorter than N_cut
    """
    epsilon = series.epsilon
    if epsilon is None:
        epsilon = root_number(series, settings)
    if epsilon == -1:
        return 0.0
    kernel = settings.kernel(series.gamma, c=c)
    if N_cut is None:
        N_cut = truncation_length(series, settings, (kernel,))
    S, _, scale = afe_sums(series, kernel, N_cut)
    value = 2 * S
    if value < -1e-6 * scale:
        logger.warning(f"negative central value {value:.6g} at d={series.d} ({series.form.label})")
    return value


def evaluate(series: TwistedLSeries, settings: AfeSettings = AfeSettings(),
             L1: Optional[float] = None) -> CentralValue:
    """Root number, central value and L(1, chi_d) as one record."""
    result = determine_root_number(series, settings)
    value = central_value(series.with_epsilon(result.epsilon), settings)
    if L1 is None:
        L1 = dirichlet_L1(series.d) if series.d < 0 else 1.0
    if result.epsilon == -1 and result.residual_minus >= settings.vanish_tol * result.scale:
        logger.warning(f"d={series.d}: tilted odd residual {result.residual_minus:.3g} above "
                       f"{settings.vanish_tol} * scale")
    return CentralValue(series.d, series.form.label, result.epsilon, value, L1, result.N_cut,
                        result.scale, result.residual_minus)


def robustness_checks(series: TwistedLSeries, settings: AfeSettings = AfeSettings(),
                      rel_tol: float = 1e-4, abs_tol: float = 1e-8) -> Dict[str, Dict[str, float]]:
    """
    Truncation-doubling and kernel-change oracles for one series.

    Returns:
        {'truncation': {...}, 'kernel': {...}, 'vanishing': {...}} each with
        keys lhs, rhs, passed
    """
    result = determine_root_number(series, settings)
    fixed = series.with_epsilon(result.epsilon)
    N_cut = result.N_cut
    base = central_value(fixed, settings, N_cut)
    doubled = central_value(fixed, settings, 2 * N_cut)
    alt = central_value(fixed, settings, N_cut, c=settings.c_alt)

    def close(a, b):
        return abs(a - b) <= max(rel_tol * abs(b), abs_tol)

    checks = {
        'truncation': {'lhs': base, 'rhs': doubled, 'passed': close(base, doubled)},
        'kernel': {'lhs': base, 'rhs': alt, 'passed': close(base, alt)},
    }
    if result.epsilon == -1:
        checks['vanishing'] = {'lhs': result.residual_minus,
                               'rhs': settings.vanish_tol * result.scale,
                               'passed': result.residual_minus < settings.vanish_tol * result.scale}
    return checks


def period_proxy(d: int, central_values: Sequence[float], L1: Optional[float] = None) -> float:
    """
    prod_i sqrt(max(L(1/2, sym^3 f_i x chi_d), 0) / L(1, chi_d)), the d-dependent
    part of the Bessel period magnitude with all other constants set to 1.
    """
    if L1 is None:
        L1 = dirichlet_L1(d)
    out = 1.0
    for value in central_values:
        out *= math.sqrt(max(value, 0.0) / L1)
    return out


def chi_minus_one(d: int) -> int:
    """chi_d(-1) = sign(d) for a fundamental discriminant."""
    return -1 if d < 0 else 1


def fit_global_sign(records: Sequence[Tuple[int, int]]) -> Tuple[Optional[int], int]:
    """
    Fit epsilon_g in epsilon(d) = epsilon_g * chi_d(-1) to observed (d, epsilon) pairs.

    Returns:
        (epsilon_g, mismatches); epsilon_g is None for an empty sample
    """
    if not records:
        return None, 0
    votes = sum(eps * chi_minus_one(d) for d, eps in records)
    eps_g = 1 if votes >= 0 else -1
    mismatches = sum(1 for d, eps in records if eps != eps_g * chi_minus_one(d))
    return eps_g, mismatches
