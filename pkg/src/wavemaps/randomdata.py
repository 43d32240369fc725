"""Brownian data: Euclidean Brownian motion and its smooth approximations,
manifold paths on the sphere, white-noise velocities, and the rescaled /
translated / localized data bundles the solver consumes.

RNG contract: all randomness flows from numpy's SeedSequence. A run seed s
is expanded as SeedSequence(s).spawn(k); child stream 0 drives W, child
stream 1 the independent copy Wbar. Identical (seed, config) gives
bit-identical output on every platform numpy supports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .spectral import (
    Field1D,
    Grid1D,
    bump_profile,
    cutoff_chi,
    low_pass,
    resample_trig,
    rewindow,
    spectral_derivative,
)

SQRT_2PI = math.sqrt(2.0 * math.pi)


def rng_stream(seed: int, stream: int) -> np.random.Generator:
    """The documented seed -> stream derivation (see module docstring)."""
    children = np.random.SeedSequence(seed).spawn(stream + 1)
    return np.random.default_rng(children[stream])


@dataclass(frozen=True)
class SphereManifold:
    """The unit sphere S^{D-1} with the compactly extended tangential
    projection P_ext(p) = Id - w(|p|) p p^T / |p|^2."""

    dimension: int = 3

    def __post_init__(self):
        if self.dimension < 2:
            raise ValueError("need dimension >= 2")

    @staticmethod
    def extension_bump(radius) -> np.ndarray:
        return bump_profile(radius, 0.5, 0.75, 1.25, 1.5)

    def project(self, p: np.ndarray, vec: np.ndarray) -> np.ndarray:
        """Apply P_ext(p) to vec. Both arrays have shape (D,) or (D, n)."""
        norm_sq = np.sum(p * p, axis=0)
        w = self.extension_bump(np.sqrt(norm_sq))
        inner = np.sum(p * vec, axis=0)
        scale = np.where(norm_sq > 0, w * inner / np.where(norm_sq > 0, norm_sq, 1.0), 0.0)
        return vec - scale * p


@dataclass
class RandomSeries:
    """Coefficients of the random Fourier series for W on [-pi, pi].

    g_m are standard complex Gaussians for 0 < m <= M_max with the
    real-valuedness reflection g_{-m} = conj(g_m); g_0 is the real drift
    coefficient. components index j = 0..D-1.
    """

    seed: int
    M_max: int
    D: int
    stream: int = 0
    g0: np.ndarray = field(init=False)
    gm: np.ndarray = field(init=False)  # shape (D, M_max), complex

    def __post_init__(self):
        rng = rng_stream(self.seed, self.stream)
        self.g0 = rng.standard_normal(self.D)
        re = rng.standard_normal((self.D, self.M_max)) / math.sqrt(2.0)
        im = rng.standard_normal((self.D, self.M_max)) / math.sqrt(2.0)
        self.gm = re + 1j * im

    def evaluate(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Oscillatory part at the points x (shape (D, len(x))) plus the
        drift coefficients; the full series is osc + drift[:, None] * x."""
        m = np.arange(1, self.M_max + 1)
        phase = np.exp(1j * np.outer(x, m)) - 1.0  # (n, M)
        # the m and -m terms are complex conjugates, so they sum to 2 Re(...)
        osc = 2.0 * (phase @ (self.gm / (SQRT_2PI * 1j * m)).T).real.T
        drift = self.g0 / SQRT_2PI
        return osc, drift


def _cumint(rows: np.ndarray, grid: Grid1D) -> np.ndarray:
    """Row-wise cumulative trapezoid antiderivative vanishing at x = 0.

    Unlike spectral.integrate this skips the central-support check: the
    result is read pointwise (never fed to the FFT without re-windowing),
    and grid-wide integrands like V are legitimate here."""
    from scipy.integrate import cumulative_trapezoid

    acc = cumulative_trapezoid(rows, dx=grid.spacing, axis=-1, initial=0.0)
    return acc - acc[:, grid.zero_index][:, None]


def sample_bm_increments(seed: int, grid: Grid1D, D: int, stream: int = 0) -> np.ndarray:
    """Brownian motion on the grid from i.i.d. Gaussian increments of
    variance h; W(0) = 0 exactly. Returns shape (D, num_points)."""
    rng = rng_stream(seed, stream)
    h = grid.spacing
    steps = rng.standard_normal((D, grid.num_points - 1)) * math.sqrt(h)
    w = np.concatenate([np.zeros((D, 1)), np.cumsum(steps, axis=1)], axis=1)
    w -= w[:, grid.zero_index][:, None]
    return w


def sample_bm_fourier(seed: int, M_max: int, grid: Grid1D, D: int,
                      stream: int = 0) -> tuple[np.ndarray, np.ndarray, RandomSeries]:
    """Random-Fourier-series Brownian motion: returns (oscillatory samples
    shape (D, n), drift coefficients shape (D,), the coefficient record).

    The full path is osc + drift[:, None] * x; the linear drift is kept out
    of the periodic samples so spectral multipliers never see it."""
    if not math.isclose(grid.half_length, math.pi):
        raise ValueError("the Fourier series construction requires L = pi")
    series = RandomSeries(seed, M_max, D, stream)
    osc, drift = series.evaluate(grid.points)
    return osc, drift, series


def smooth_truncate(w: Field1D, eps: float, windowed: bool = True) -> Field1D:
    """W^eps: low-pass at N = 1/eps. If windowed, the input is multiplied by
    the wide window first (mandatory for non-periodic samples)."""
    n_cut = 1.0 / eps
    if (9.0 / 8.0) * n_cut > w.grid.nyquist / 2.0:
        raise ValueError(f"1/eps = {n_cut:g} is beyond the resolved band")
    base = rewindow(w) if windowed else w
    return low_pass(base, "x", n_cut)


@dataclass
class BrownianPath:
    grid: Grid1D
    samples: np.ndarray            # (D, n)
    basepoint: np.ndarray          # (D,)
    epsilon: float
    constraint_drift: float = 0.0  # max pre-renormalization |B|^2 - 1 drift

    @property
    def dimension(self) -> int:
        return self.samples.shape[0]


@dataclass
class VelocityField:
    grid: Grid1D
    V: np.ndarray     # (D, n)
    Vint: np.ndarray  # (D, n), integral of V from 0


@dataclass
class LinearWaves:
    grid: Grid1D
    phi_plus: np.ndarray   # (D, n)
    phi_minus: np.ndarray  # (D, n)
    theta: float = 1.0

    @property
    def dimension(self) -> int:
        return self.phi_plus.shape[0]


def _upsample2(values: np.ndarray) -> np.ndarray:
    """Trigonometric 2x upsampling along the last axis (band-limited input)."""
    n = values.shape[-1]
    spec = np.fft.fft(values, axis=-1)
    pad = np.zeros(values.shape[:-1] + (2 * n,), dtype=complex)
    pad[..., : n // 2] = spec[..., : n // 2]
    pad[..., -(n // 2) :] = spec[..., -(n // 2) :]
    # split the Nyquist coefficient symmetrically
    pad[..., n // 2] = 0.5 * spec[..., n // 2]
    pad[..., -(n // 2)] = 0.5 * spec[..., n // 2]
    return 2.0 * np.fft.ifft(pad, axis=-1).real


def solve_path_ode(forcing: np.ndarray, grid: Grid1D, basepoint: np.ndarray,
                   manifold: SphereManifold, scale: float = 1.0,
                   epsilon: float = 0.0,
                   max_step_drift: float = 1e-3) -> BrownianPath:
    """Integrate d_x B = scale * P_ext(B) * forcing(x) from x = 0 by RK4
    with per-step renormalization onto the sphere.

    forcing has shape (D, n) on the grid (band-limited; midpoint values come
    from trigonometric upsampling). Returns the path with the recorded
    maximum pre-renormalization constraint drift."""
    basepoint = np.asarray(basepoint, dtype=float)
    if abs(np.linalg.norm(basepoint) - 1.0) > 1e-12:
        raise ValueError("basepoint must be a unit vector")
    D, n = forcing.shape
    fine = _upsample2(forcing)  # values at x_j and midpoints
    h = grid.spacing
    out = np.zeros((D, n))
    zero = grid.zero_index
    out[:, zero] = basepoint
    worst = 0.0

    def rhs(b, fval):
        return scale * manifold.project(b, fval)

    def step(b, i, direction):
        # fine grid index of x_i is 2i; midpoint of [x_i, x_{i+1}] is 2i+1
        if direction > 0:
            f0, f1, f2 = fine[:, 2 * i], fine[:, 2 * i + 1], fine[:, (2 * i + 2) % (2 * n)]
        else:
            f0, f1, f2 = fine[:, 2 * i], fine[:, 2 * i - 1], fine[:, 2 * i - 2]
        hh = direction * h
        k1 = rhs(b, f0)
        k2 = rhs(b + 0.5 * hh * k1, f1)
        k3 = rhs(b + 0.5 * hh * k2, f1)
        k4 = rhs(b + hh * k3, f2)
        return b + (hh / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)

    b = basepoint.copy()
    for i in range(zero, n - 1):
        b = step(b, i, +1)
        drift = abs(float(b @ b) - 1.0)
        worst = max(worst, drift)
        if drift > max_step_drift:
            raise ValueError(
                f"path ODE step drift {drift:.3e} exceeds {max_step_drift:g}; "
                "decrease the grid spacing or increase eps"
            )
        b = b / np.linalg.norm(b)
        out[:, i + 1] = b
    b = basepoint.copy()
    for i in range(zero, 0, -1):
        b = step(b, i, -1)
        drift = abs(float(b @ b) - 1.0)
        worst = max(worst, drift)
        if drift > max_step_drift:
            raise ValueError(
                f"path ODE step drift {drift:.3e} exceeds {max_step_drift:g}; "
                "decrease the grid spacing or increase eps"
            )
        b = b / np.linalg.norm(b)
        out[:, i - 1] = b
    return BrownianPath(grid, out, basepoint, epsilon, worst)


def white_noise_velocity(path: BrownianPath, wbar_eps: np.ndarray,
                         manifold: SphereManifold) -> VelocityField:
    """V(x) = P_ext(B(x)) d_x Wbar^eps(x), with the integral of V from 0.

    wbar_eps: smooth-truncated independent copy, shape (D, n), already
    windowed (so the spectral derivative is legitimate)."""
    grid = path.grid
    deriv = np.stack([
        spectral_derivative(Field1D(grid, wbar_eps[j]), "x").samples
        for j in range(wbar_eps.shape[0])
    ])
    V = manifold.project(path.samples, deriv)
    return VelocityField(grid, V, _cumint(V, grid))


@dataclass
class LocalizedData:
    """The rescaled, translated and chi-localized data bundle."""

    tau: float
    x0: float
    grid: Grid1D
    w_resc: np.ndarray        # tau^{-1/2} (W^eps(tau x + x0) - W^eps(x0))
    wbar_resc: np.ndarray
    path: BrownianPath        # B^eps_{tau,x0,loc}
    velocity: VelocityField   # V^eps_{tau,x0,loc} and its integral


def _rescale_field(values: np.ndarray, src_grid: Grid1D, out_grid: Grid1D,
                   tau: float, x0: float) -> np.ndarray:
    pts = tau * out_grid.points + x0
    lim = src_grid.half_length
    if np.any(np.abs(pts) > lim):
        raise ValueError("rescaled points leave the source grid")
    out = np.stack([resample_trig(Field1D(src_grid, row), pts) for row in values])
    at0 = np.array([resample_trig(Field1D(src_grid, row), np.array([x0]))[0]
                    for row in values])
    return (out - at0[:, None]) / math.sqrt(tau)


def path_value_at(path: BrownianPath, x: float) -> np.ndarray:
    """Cubic-spline sample of the path at one point, renormalized onto the
    sphere (the path is smooth but not periodic, so no trig interpolation)."""
    from scipy.interpolate import CubicSpline

    pts = path.grid.points
    val = np.array([CubicSpline(pts, row)(x) for row in path.samples])
    return val / np.linalg.norm(val)


def localize_rescale(w_eps: np.ndarray, wbar_eps: np.ndarray, src_grid: Grid1D,
                     out_grid: Grid1D, tau: float, x0: float,
                     global_path: BrownianPath, manifold: SphereManifold,
                     epsilon: float) -> LocalizedData:
    """Build W^eps_{tau,x0}, then the localized path B^eps_{tau,x0,loc} from
    the ODE with forcing d_x(chi(x) W^eps_{tau,x0}) and speed tau^{1/2},
    starting from the rescaled global path's value at 0 (= B^eps(x0)),
    then the localized velocity from the independent copy."""
    if not (0.0 < tau <= 1.0):
        raise ValueError("tau must lie in (0, 1]")
    w_resc = _rescale_field(w_eps, src_grid, out_grid, tau, x0)
    wbar_resc = _rescale_field(wbar_eps, src_grid, out_grid, tau, x0)
    chi = cutoff_chi(out_grid.points)
    forcing = np.stack([
        spectral_derivative(Field1D(out_grid, chi * row), "x").samples
        for row in w_resc
    ])
    init = path_value_at(global_path, x0)
    path = solve_path_ode(forcing, out_grid, init, manifold,
                          scale=math.sqrt(tau), epsilon=epsilon)
    wbar_loc = np.stack([
        spectral_derivative(Field1D(out_grid, chi * row), "x").samples
        for row in wbar_resc
    ])
    V = math.sqrt(tau) * manifold.project(path.samples, wbar_loc)
    velocity = VelocityField(out_grid, V, _cumint(V, out_grid))
    return LocalizedData(tau, x0, out_grid, w_resc, wbar_resc, path, velocity)


def linear_waves(path: BrownianPath, velocity: VelocityField,
                 theta: float = 1.0) -> LinearWaves:
    """phi^{+/-} = (1/(2 theta)) ((B - B(0)) -/+ integral of V)."""
    if theta <= 0:
        raise ValueError("theta must be positive")
    zero = path.grid.zero_index
    shifted = path.samples - path.samples[:, zero][:, None]
    plus = (shifted - velocity.Vint) / (2.0 * theta)
    minus = (shifted + velocity.Vint) / (2.0 * theta)
    return LinearWaves(path.grid, plus, minus, theta)


def brownian_pipeline(seed: int, grid: Grid1D, D: int, eps: float,
                      basepoint: np.ndarray | None = None,
                      manifold: SphereManifold | None = None
                      ) -> tuple[np.ndarray, np.ndarray, BrownianPath, VelocityField]:
    """Default data pipeline on a working grid: increments W and Wbar,
    smooth truncation, path ODE, velocity. Returns (W^eps, Wbar^eps, B, V)."""
    manifold = manifold or SphereManifold(D)
    if basepoint is None:
        basepoint = np.zeros(D)
        basepoint[-1] = 1.0
    w = sample_bm_increments(seed, grid, D, stream=0)
    wbar = sample_bm_increments(seed, grid, D, stream=1)
    w_eps = np.stack([smooth_truncate(Field1D(grid, row), eps).samples for row in w])
    wbar_eps = np.stack([smooth_truncate(Field1D(grid, row), eps).samples for row in wbar])
    forcing = np.stack([
        spectral_derivative(Field1D(grid, row), "x").samples for row in w_eps
    ])
    path = solve_path_ode(forcing, grid, basepoint, manifold, epsilon=eps)
    velocity = white_noise_velocity(path, wbar_eps, manifold)
    return w_eps, wbar_eps, path, velocity
