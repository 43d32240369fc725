"""Lacunary data and the divergence of the first Picard iterate.

Constructs the localized lacunary profiles

    psi1(y) = chi(y/eps) sum_{n in F} n^{-1/2} sin(n y),
    psi2(y) = chi(y/eps) (sin(y) + sum_{n in F} n^{-1/2} sin((n-1) y)),

with F = {base^(gap*k) : kappa0 <= k <= kappa}, whose C^{1/2} norms stay
bounded while the spatially averaged first Picard iterate

    J(kappa) = int chi(x/eps) <Pic(t, x), e1> dx,
    <Pic(t, x), e1> = (1/8) int_{x-t}^{x+t} psi1'(y) psi2(y)^2 dy,

grows linearly in kappa.  The main term of the growth is

    predicted(kappa) = -(1/16) (kappa - kappa0)
        * int dx chi(x/eps) int_{x-t}^{x+t} dy chi(y/eps)^3 (1 - cos 2y),

and the scan reports J, the prediction, and their residual per kappa.
"""

from dataclasses import dataclass

import numpy as np

from .spectral import (
    Field1D,
    Grid1D,
    cutoff_chi,
    cutoff_chi_prime,
    holder_norm,
)

# chi(y/eps) vanishes for |y| >= 2.1*eps; quadrature never leaves this window
SUPPORT_FACTOR = 2.1

# Gauss-Legendre nodes per panel; panels no wider than half a wavelength of
# the fastest oscillation, so >= 8 points per oscillation everywhere (the
# half-wavelength panel at order 12 leaves ~1e-10 relative truncation)
GL_ORDER = 12

# the chi glue occupies |y/eps| in [2, 2.1]; cap panel width at a fraction of
# eps so the cutoff itself is resolved even at low frequencies
GLUE_FRACTION = 0.01

# evaluate integrands at most this many nodes at a time
CHUNK = 2**22


@dataclass(frozen=True)
class LacunaryProfile:
    """Frequency set F = {base^(gap*k) : kappa0 <= k <= kappa} with a
    localization width eps_loc."""

    kappa0: int
    kappa: int
    eps_loc: float = 0.01
    base: int = 2
    gap: int = 3

    def __post_init__(self):
        if self.kappa0 < 1 or self.kappa < self.kappa0:
            raise ValueError("need integers 1 <= kappa0 <= kappa")
        if self.base**self.gap < 8:
            raise ValueError("frequency ratio base**gap must be at least 8")
        if self.eps_loc <= 0:
            raise ValueError("eps_loc must be positive")

    @property
    def frequencies(self) -> np.ndarray:
        ks = np.arange(self.kappa0, self.kappa + 1)
        return (float(self.base) ** (self.gap * ks)).astype(float)

    @property
    def support_radius(self) -> float:
        return SUPPORT_FACTOR * self.eps_loc


def psi1_value(profile: LacunaryProfile, y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    series = np.zeros_like(y)
    for n in profile.frequencies:
        series += n**-0.5 * np.sin(n * y)
    return cutoff_chi(y / profile.eps_loc) * series


def psi2_value(profile: LacunaryProfile, y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    series = np.sin(y)
    for n in profile.frequencies:
        series += n**-0.5 * np.sin((n - 1.0) * y)
    return cutoff_chi(y / profile.eps_loc) * series


def psi1_derivative(profile: LacunaryProfile, y) -> np.ndarray:
    """Termwise-analytic derivative of psi1, including the chi' term."""
    y = np.asarray(y, dtype=float)
    series = np.zeros_like(y)
    d_series = np.zeros_like(y)
    for n in profile.frequencies:
        series += n**-0.5 * np.sin(n * y)
        d_series += n**0.5 * np.cos(n * y)
    eps = profile.eps_loc
    return (cutoff_chi(y / eps) * d_series
            + cutoff_chi_prime(y / eps) / eps * series)


def lacunary_fields(profile: LacunaryProfile, grid: Grid1D):
    """Sample (psi1, psi2) on the grid; guards against unresolved frequencies."""
    top = float(profile.frequencies.max())
    if top > grid.nyquist / 8.0:
        raise ValueError(
            f"top frequency {top:g} exceeds nyquist/8 = {grid.nyquist / 8.0:g}")
    if profile.support_radius > grid.half_length:
        raise ValueError("profile support exceeds the grid")
    x = grid.points
    return (Field1D(grid, psi1_value(profile, x)),
            Field1D(grid, psi2_value(profile, x)))


def _gauss_quadrature(lo: float, hi: float, width: float, integrand) -> float:
    """Composite Gauss-Legendre quadrature on [lo, hi] with panels <= width,
    evaluated in bounded-size chunks of panels."""
    count = max(1, int(np.ceil((hi - lo) / width)))
    nodes, weights = np.polynomial.legendre.leggauss(GL_ORDER)
    step = (hi - lo) / count
    half = 0.5 * step
    per_chunk = max(1, CHUNK // GL_ORDER)
    total = 0.0
    for start in range(0, count, per_chunk):
        stop = min(start + per_chunk, count)
        mid = lo + step * (np.arange(start, stop) + 0.5)
        y = (mid[:, None] + half * nodes[None, :]).ravel()
        w = np.broadcast_to(half * weights, (stop - start, GL_ORDER)).ravel()
        total += float(np.dot(w, integrand(y)))
    return total


def _panel_width(profile: LacunaryProfile, top_frequency: float,
                 refine: float) -> float:
    width = min(np.pi / top_frequency, GLUE_FRACTION * profile.eps_loc)
    return width / refine


def picard_first_component(profile: LacunaryProfile, t: float, x: float,
                           refine: float = 1.0) -> float:
    """<Pic(t, x), e1> = (1/8) int_{x-t}^{x+t} psi1'(y) psi2(y)^2 dy."""
    sign = 1.0 if t >= 0 else -1.0
    radius = profile.support_radius
    lo = max(min(x - t, x + t), -radius)
    hi = min(max(x - t, x + t), radius)
    if hi <= lo:
        return 0.0
    width = _panel_width(profile, float(profile.frequencies.max()), refine)
    total = _gauss_quadrature(
        lo, hi, width,
        lambda y: psi1_derivative(profile, y) * psi2_value(profile, y) ** 2)
    return sign * 0.125 * total


def _gauss_panels(lo: float, hi: float, width: float):
    """Node/weight arrays for a composite Gauss-Legendre rule (small counts)."""
    count = max(1, int(np.ceil((hi - lo) / width)))
    edges = np.linspace(lo, hi, count + 1)
    nodes, weights = np.polynomial.legendre.leggauss(GL_ORDER)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    y = mid[:, None] + half[:, None] * nodes[None, :]
    w = half[:, None] * weights[None, :]
    return y.ravel(), w.ravel()


def _x_quadrature(profile: LacunaryProfile, refine: float):
    radius = profile.support_radius
    width = GLUE_FRACTION * profile.eps_loc / refine
    return _gauss_panels(-radius, radius, width)


def picard_average(profile: LacunaryProfile, t: float,
                   refine: float = 1.0) -> float:
    """J = int chi(x/eps) <Pic(t, x), e1> dx over the chi window."""
    x_nodes, x_w = _x_quadrature(profile, refine)
    chi_x = cutoff_chi(x_nodes / profile.eps_loc)
    radius = profile.support_radius
    if abs(t) >= 2.0 * radius:
        # every interval [x-t, x+t] covers the full psi support, so the inner
        # integral is the same number at each x node
        pic = picard_first_component(profile, t, 0.0, refine)
        return float(np.dot(x_w, chi_x)) * pic
    vals = np.array([picard_first_component(profile, t, float(x), refine)
                     for x in x_nodes])
    return float(np.dot(x_w, chi_x * vals))


def main_term_coefficient(profile: LacunaryProfile, t: float,
                          refine: float = 1.0) -> float:
    """The kappa-coefficient of the predicted main term:
    -(1/16) int dx chi(x/eps) int_{[x-t, x+t]} dy chi(y/eps)^3 (1 - cos 2y)."""
    eps = profile.eps_loc
    radius = profile.support_radius
    x_nodes, x_w = _x_quadrature(profile, refine)
    chi_x = cutoff_chi(x_nodes / eps)
    width = GLUE_FRACTION * eps / refine

    def inner(lo, hi):
        if hi <= lo:
            return 0.0
        y, w = _gauss_panels(lo, hi, width)
        vals = cutoff_chi(y / eps) ** 3 * (1.0 - np.cos(2.0 * y))
        return float(np.dot(w, vals))

    if abs(t) >= 2.0 * radius:
        total = float(np.dot(x_w, chi_x)) * inner(-radius, radius)
    else:
        total = float(np.dot(x_w, chi_x * np.array([
            inner(max(x - t, -radius), min(x + t, radius)) for x in x_nodes])))
    return -total / 16.0


def predicted_main(profile: LacunaryProfile, t: float,
                   refine: float = 1.0) -> float:
    return (profile.kappa - profile.kappa0) * main_term_coefficient(
        profile, t, refine)


@dataclass
class ScanRow:
    kappa: int
    J: float
    predicted: float
    residual: float
    psi1_norm: float
    psi2_norm: float


@dataclass
class DivergenceScan:
    rows: list
    slope: float
    intercept: float
    r_squared: float
    predicted_slope: float
    norm_kappa_cap: int  # norms sampled with frequencies truncated here


def _linear_fit(xs: np.ndarray, ys: np.ndarray):
    slope, intercept = np.polyfit(xs, ys, 1)
    fitted = slope * xs + intercept
    ss_res = float(np.sum((ys - fitted) ** 2))
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


# largest 1-D grid used for norm measurement (memory bound)
NORM_GRID_CAP = 2**23


def _norm_grid_for(top_frequency: float) -> Grid1D:
    # nyquist = n/2 on [-pi, pi); the field guard wants top <= nyquist/8
    n = 4096
    while n / 16.0 < top_frequency and n < NORM_GRID_CAP:
        n *= 2
    return Grid1D(n, np.pi)


def resolved_kappa(grid: Grid1D, base: int = 2, gap: int = 3) -> int:
    """Largest k whose lacunary frequency base**(gap*k) the grid resolves."""
    k = int(np.floor(np.log(grid.nyquist / 8.0) / (gap * np.log(base))))
    if k < 1:
        raise ValueError("grid resolves no lacunary frequency")
    return k


def divergence_scan(kappa0: int, kappa_max: int, t: float = 1.0,
                    eps_loc: float | None = None, base: int = 2, gap: int = 3,
                    norm_grid: Grid1D | None = None,
                    refine: float = 1.0) -> DivergenceScan:
    """Scan kappa = kappa0+1 .. kappa_max at fixed (t, eps_loc).

    J and the prediction use grid-free analytic quadrature at full frequency
    content.  The C^{1/2} norms are measured on a sampling grid, with the
    frequency set truncated to the grid's resolved band: successive lacunary
    blocks have equal block norms (same envelope, rescaled), so the truncation
    leaves the Holder norm unchanged up to the envelope tails.
    """
    if eps_loc is None:
        eps_loc = t / 100.0
    kappas = list(range(kappa0 + 1, kappa_max + 1))
    if not kappas:
        raise ValueError("need kappa_max > kappa0")
    top = float(base) ** (gap * kappa_max)
    grid = norm_grid if norm_grid is not None else _norm_grid_for(top)
    norm_cap = max(kappa0, resolved_kappa(grid, base, gap))
    coeff = None
    rows = []
    for kappa in kappas:
        profile = LacunaryProfile(kappa0, kappa, eps_loc, base, gap)
        if coeff is None:
            coeff = main_term_coefficient(profile, t, refine)
        J = picard_average(profile, t, refine)
        predicted = (kappa - kappa0) * coeff
        norm_profile = LacunaryProfile(kappa0, min(kappa, norm_cap),
                                       eps_loc, base, gap)
        psi1, psi2 = lacunary_fields(norm_profile, grid)
        rows.append(ScanRow(kappa, J, predicted, J - predicted,
                            holder_norm(psi1, 0.5), holder_norm(psi2, 0.5)))
    if len(rows) >= 2:
        slope, intercept, r2 = _linear_fit(
            np.array(kappas, dtype=float), np.array([r.J for r in rows]))
    else:
        slope, intercept, r2 = float("nan"), float("nan"), 1.0
    return DivergenceScan(rows, slope, intercept, r2, coeff, norm_cap)
