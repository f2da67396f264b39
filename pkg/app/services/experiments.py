"""
Worked examples and counterexamples.

- the shrinking-fiber model, whose sphere-bundle integral converges while
  the base integral diverges;
- the sharpness bound for approximating a step by C^1 ramps;
- the Dirichlet problem on the flat torus, solved spectrally and then
  approximated by mollification;
- the comparison with the Ge-Shen norm.

The torus Laplacian is div grad, so cos(x^1) has eigenvalue -1.
"""

import logging
import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from ..config import settings
from ..models.domain import Domain, FiberQuadrature
from ..models.field import ScalarField, ramp, step
from ..schemas.table import ConvergenceTable
from ..utils.errors import HypothesisViolationError
from . import sobolev
from .approximation import EXPERIMENT_STENCIL_CELLS, MollifierSpec, grid_errors, mollify
from .metric_zoo import FinslerMetric


logger = logging.getLogger(__name__)

TORUS_PERIOD = 2.0 * math.pi
MEAN_TOLERANCE = 1e-10
SHARPNESS_BOX = ((-1.0, 0.0), (1.0, 1.0))


# ---------------------------------------------------------------------------
# Shrinking fibers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ShrinkingFiberModel:
    """
    Strip R x (0, 1) whose fiber over x is a circle of radius exp(-(x^1)^2).

    The model is given at the level of measures: fiber arc length
    2 pi exp(-(x^1)^2) and base measure dx dy. No metric F is attached; the
    natural candidate F = exp((x^1)^2)|y| has fiber density 2 pi exp(2 (x^1)^2)
    instead.
    """
    resolution: int = 4096

    def radius(self, x1: np.ndarray) -> np.ndarray:
        return np.exp(-np.asarray(x1, dtype=float) ** 2)

    def fiber_measure(self, x1: np.ndarray) -> np.ndarray:
        return 2.0 * math.pi * self.radius(x1)

    def strip(self, L: float) -> Domain:
        return Domain.box([-L, 0.0], [L, 1.0], (self.resolution, 8))

    def stry_constant(self, L: float, sample_count: int = 101) -> float:
        """inf of the fiber measure over sampled x^1 in [-L, L], endpoints included."""
        if sample_count < 100:
            raise ValueError("stry constant needs at least 100 samples")
        return float(np.min(self.fiber_measure(np.linspace(-L, L, sample_count))))


def fiber_decay_example(L: float, model: ShrinkingFiberModel = None) -> Tuple[float, float]:
    """
    (integral over the strip of the fiber measure, area of the strip) on [-L, L] x (0, 1).

    The first value converges to 2 pi^{3/2} as L grows, the second is 2L.
    """
    if L < 1.0:
        raise ValueError("fiber decay example needs L >= 1")
    model = model or ShrinkingFiberModel()
    domain = model.strip(L)
    nodes = domain.nodes()
    weights = domain.weights()
    sm_integral = float(np.sum(weights * model.fiber_measure(nodes[:, 0])))
    m_integral = float(np.sum(weights))
    return sm_integral, m_integral


def fiber_decay_table(L_list: Sequence[float], model: ShrinkingFiberModel = None) -> ConvergenceTable:
    model = model or ShrinkingFiberModel()
    rows = [[float(L), *fiber_decay_example(L, model)] for L in L_list]
    return ConvergenceTable(
        columns=["L", "sm_integral", "m_integral"],
        rows=rows,
        metadata={"model": "shrinking_fiber", "grid": f"{model.resolution}x8"},
    )


# ---------------------------------------------------------------------------
# Sharpness
# ---------------------------------------------------------------------------

def sharpness_bound(p: float) -> float:
    """1 / (2 + 2^{1/p'}) with 1/p + 1/p' = 1."""
    if p < 1.0:
        raise ValueError("p must be at least 1")
    inverse_conjugate = 1.0 - 1.0 / p
    return 1.0 / (2.0 + 2.0**inverse_conjugate)


def sharpness_experiment(p: float, widths: Sequence[float], resolution: int = 400) -> Tuple[ConvergenceTable, float]:
    """
    Rows (w, ||u - phi_w||_{H_1^p(W)}) for the step u and C^1 ramps phi_w on
    W = [-1, 1] x [0, 1], with the flat-chart norm.

    Returns:
        tuple: (table, closed-form lower bound)
    """
    widths = [float(w) for w in widths]
    if any(not 0.0 < w <= 1.0 for w in widths):
        raise ValueError("ramp widths must lie in (0, 1]")
    resolution = resolution + resolution % 2
    lo, hi = SHARPNESS_BOX
    domain = Domain.box(lo, hi, (resolution, max(8, resolution // 2)))
    u = step()
    rows = [[w, sobolev.classical_sobolev_norm(u - ramp(w), (1, p), domain)] for w in widths]
    bound = sharpness_bound(p)
    logger.info("sharpness p=%g: bound %.6f, min row %.6f", p, bound, min(r[1] for r in rows))
    table = ConvergenceTable(
        columns=["w", "h1p"],
        rows=rows,
        metadata={"p": repr(float(p)), "bound": repr(bound), "domain": domain.describe()},
    )
    return table, bound


# ---------------------------------------------------------------------------
# Dirichlet problem on the flat torus
# ---------------------------------------------------------------------------

class SpectralField(ScalarField):
    """Trigonometric interpolant on the torus [0, 2 pi)^n, evaluated mode by mode."""

    def __init__(self, coefficients: np.ndarray, name: str = "spectral"):
        self.coefficients = coefficients
        shape = coefficients.shape
        freqs = np.meshgrid(*[np.fft.fftfreq(s, d=1.0 / s) for s in shape], indexing="ij")
        modes = np.stack(freqs, axis=-1).reshape(-1, len(shape))
        amplitudes = coefficients.reshape(-1) / float(np.prod(shape))
        keep = np.abs(amplitudes) > 1e-15 * max(float(np.max(np.abs(amplitudes))), 1e-300)
        self.modes = modes[keep]
        self.amplitudes = amplitudes[keep]
        super().__init__(value=self._evaluate, gradient=self._evaluate_gradient, smoothness="smooth", name=name)

    def _phase(self, x: np.ndarray) -> np.ndarray:
        return np.exp(1j * np.asarray(x, float) @ self.modes.T)

    def _evaluate(self, x):
        if self.modes.shape[0] == 0:
            return np.zeros(np.shape(x)[:-1])
        return np.real(self._phase(x) @ self.amplitudes)

    def _evaluate_gradient(self, x):
        if self.modes.shape[0] == 0:
            return np.zeros(np.shape(x))
        phase = self._phase(x)
        return np.real(np.einsum("...m,m,mk->...k", phase, 1j * self.amplitudes, self.modes))


def _torus(N: int, dimension: int) -> Domain:
    return Domain.torus([TORUS_PERIOD] * dimension, N)


def dirichlet_solve_torus(f: ScalarField, N: int, dimension: int = 2) -> Tuple[SpectralField, float]:
    """
    Solve div grad u = f on the flat torus by FFT, with mean-zero u.

    Returns:
        tuple: (u, max |div grad u - f| over the grid)

    Raises:
        HypothesisViolationError: If f does not have zero mean
    """
    if N < 16 or N & (N - 1):
        raise ValueError(f"grid size must be a power of two >= 16, got {N}")
    domain = _torus(N, dimension)
    samples = f(domain.grid_points())
    mean = float(np.mean(samples))
    if abs(mean) >= MEAN_TOLERANCE:
        logger.warning("refusing Dirichlet solve: mean of %s is %.3e", f.name, mean)
        raise HypothesisViolationError(f"right-hand side must have zero mean, got {mean:.3e}")
    f_hat = np.fft.fftn(samples)
    freqs = np.meshgrid(*[np.fft.fftfreq(N, d=1.0 / N)] * dimension, indexing="ij")
    k2 = sum(k**2 for k in freqs)
    u_hat = np.zeros_like(f_hat)
    nonzero = k2 > 0
    u_hat[nonzero] = -f_hat[nonzero] / k2[nonzero]
    laplacian = np.real(np.fft.ifftn(-k2 * u_hat))
    residual = float(np.max(np.abs(laplacian - samples)))
    logger.info("torus Dirichlet solve N=%d: residual %.3e", N, residual)
    return SpectralField(u_hat, name=f"dirichlet({f.name})"), residual


def _test_field(rng: np.random.Generator, dimension: int, max_mode: int = 4) -> ScalarField:
    k = rng.integers(-max_mode, max_mode + 1, size=dimension)
    while not np.any(k):
        k = rng.integers(-max_mode, max_mode + 1, size=dimension)
    a, b = rng.normal(size=2)

    def value(x):
        phase = x @ k
        return a * np.cos(phase) + b * np.sin(phase)

    def gradient(x):
        phase = x @ k
        return (-a * np.sin(phase) + b * np.cos(phase))[..., None] * k

    return ScalarField(value, gradient, name=f"trig{k.tolist()}")


def weak_form_residual(u: ScalarField, f: ScalarField, n_tests: int = 20, N: int = 64, seed: int = None) -> float:
    """
    max over random trigonometric v of |int grad u . grad v + int f v| on the torus.

    The periodic trapezoid rule is exact for the trigonometric products involved.
    """
    seed = settings.SEED if seed is None else seed
    rng = np.random.default_rng(seed)
    dimension = u.modes.shape[1] if isinstance(u, SpectralField) else 2
    domain = _torus(N, dimension)
    nodes = domain.nodes()
    weights = domain.weights()
    du = u.grad(nodes)
    fv = f(nodes)
    worst = 0.0
    for _ in range(n_tests):
        v = _test_field(rng, dimension)
        lhs = float(np.sum(weights * np.sum(du * v.grad(nodes), axis=-1)))
        rhs = float(np.sum(weights * fv * v(nodes)))
        worst = max(worst, abs(lhs + rhs))
    return worst


def dirichlet_approximation(u: ScalarField, eps_list: Sequence[float], N: int = 32, dimension: int = 2) -> ConvergenceTable:
    """
    Rows (eps, ||J_eps*u - u||_2, ||J_eps*u - u||_{H_1^2}, Young ratio) on the torus.
    """
    eps_list = [float(e) for e in eps_list]
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps list must be strictly decreasing")
    base = _torus(N, dimension)
    rows = []
    for eps in eps_list:
        grid = base.with_spacing_at_most(eps / EXPERIMENT_STENCIL_CELLS)
        v = mollify(u, MollifierSpec(eps, dimension), grid)
        rows.append([eps, *grid_errors(v, u, grid, 2.0, 0.0)])
    return ConvergenceTable(
        columns=["eps", "lp_err", "h1p_err", "young_ratio"],
        rows=rows,
        metadata={"field": u.name, "laplacian": "div grad", "domain": base.describe()},
    )


# ---------------------------------------------------------------------------
# Ge-Shen comparison
# ---------------------------------------------------------------------------

def compare_gs(metric: FinslerMetric, u: ScalarField, domain: Domain, rule: FiberQuadrature = None) -> Tuple[float, float, float]:
    """
    (H_1^2 norm on SM, Ge-Shen norm, their ratio).

    Raises:
        ReversibilityError: If the metric is not reversible
    """
    gs = sobolev.gs_norm(metric, u, domain, rule)
    ours = sobolev.sobolev_norm(metric, u, (1, 2.0), domain, rule)
    ratio = ours / gs if gs > 0.0 else float("nan")
    return ours, gs, ratio
