"""Discrete Fourier / Littlewood-Paley toolbox.

Dyadic projections, Holder and product norms, paraproducts, commutators,
traces, integrals and the Duhamel operator on periodic grids. Everything
here is a pure function of its inputs.

Conventions:
  * a Grid1D with half-length L samples [-L, L) uniformly; frequencies are
    xi_k = pi*k/L, so L = pi gives integer frequencies;
  * dyadic scales run over {1, 2, 4, ...} up to a quarter of the Nyquist
    frequency, which keeps every projection fully resolved;
  * norms are sups over grid samples and over the resolved dyadic band.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

# Width of the "comparable scales" window: M ~ N means
# 2**-SIM_EXPONENT * N < M < 2**SIM_EXPONENT * N.
SIM_EXPONENT = 10

# Relative magnitude below which a Fourier coefficient counts as inactive
# when estimating a field's occupied band (aliasing guard).
BAND_TOL = 1e-13


def _smooth_step(t: np.ndarray | float) -> np.ndarray:
    """C-infinity step: 0 for t <= 0, 1 for t >= 1, exp(-1/t) glue between."""
    arr = np.asarray(t, dtype=float)
    flat = np.atleast_1d(arr)
    num = np.zeros_like(flat)
    pos = flat > 0
    num[pos] = np.exp(-1.0 / flat[pos])
    den = np.zeros_like(flat)
    neg = flat < 1
    den[neg] = np.exp(-1.0 / (1.0 - flat[neg]))
    out = num / (num + den)
    return out.reshape(arr.shape)


def _smooth_step_prime(t: np.ndarray | float) -> np.ndarray:
    """Analytic derivative of _smooth_step (vanishes outside (0, 1))."""
    arr = np.asarray(t, dtype=float)
    flat = np.atleast_1d(arr).astype(float)
    out = np.zeros_like(flat)
    mid = (flat > 0) & (flat < 1)
    tm = flat[mid]
    num = np.exp(-1.0 / tm)
    den = np.exp(-1.0 / (1.0 - tm))
    out[mid] = num * den * (tm**-2 + (1.0 - tm) ** -2) / (num + den) ** 2
    return out.reshape(arr.shape)


def bump_profile(x, lo_zero: float, lo_one: float, hi_one: float, hi_zero: float):
    """Smooth even-in-structure bump of |x|: 0 below lo_zero, 1 on
    [lo_one, hi_one], 0 above hi_zero."""
    a = np.abs(np.asarray(x, dtype=float))
    up = _smooth_step((a - lo_zero) / (lo_one - lo_zero)) if lo_one > lo_zero else 1.0
    down = 1.0 - _smooth_step((a - hi_one) / (hi_zero - hi_one))
    return up * down


@dataclass(frozen=True)
class Grid1D:
    """Uniform periodic grid on [-L, L) with num_points samples."""

    num_points: int
    half_length: float = math.pi

    def __post_init__(self):
        n = self.num_points
        if n < 8 or (n & (n - 1)) != 0:
            raise ValueError("num_points must be a power of two, >= 8")
        if self.half_length <= 0:
            raise ValueError("half_length must be positive")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_length / self.num_points

    @property
    def points(self) -> np.ndarray:
        n = self.num_points
        return -self.half_length + self.spacing * np.arange(n)

    @property
    def frequencies(self) -> np.ndarray:
        """xi_k = pi*k/L in FFT order."""
        return 2.0 * math.pi * np.fft.fftfreq(self.num_points, d=self.spacing)

    @property
    def nyquist(self) -> float:
        return math.pi / self.spacing

    @property
    def resolved_band(self) -> float:
        """Largest dyadic scale kept fully resolved: Nyquist / 4."""
        return self.nyquist / 4.0

    @property
    def zero_index(self) -> int:
        return self.num_points // 2

    def dyadic_scales(self) -> list[int]:
        scales = []
        n = 1
        while n <= self.resolved_band:
            scales.append(n)
            n *= 2
        return scales


@dataclass
class Field1D:
    grid: Grid1D
    samples: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.shape != (self.grid.num_points,):
            raise ValueError("sample count does not match grid")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("non-finite samples")

    def copy(self) -> "Field1D":
        return Field1D(self.grid, self.samples.copy())


@dataclass
class Field2D:
    grid_u: Grid1D
    grid_v: Grid1D
    samples: np.ndarray  # rows index u, columns index v

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        expect = (self.grid_u.num_points, self.grid_v.num_points)
        if self.samples.shape != expect:
            raise ValueError("sample shape does not match grids")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("non-finite samples")

    def copy(self) -> "Field2D":
        return Field2D(self.grid_u, self.grid_v, self.samples.copy())


@dataclass(frozen=True)
class CutoffProfile:
    """The analysis parameters and the two canonical cutoffs.

    rho is the smooth even Fourier cutoff (plateau [-7/8, 7/8], support
    [-9/8, 9/8]); chi the spatial cutoff (plateau [-2, 2], support
    [-21/10, 21/10]); sigma = 100*delta.
    """

    s: float = 0.45
    r: float = 0.74
    delta: float = 0.005
    eta: float = 0.001

    def __post_init__(self):
        # The asymptotic chain 1/2-s << delta << 3/4-r is not realizable by
        # concrete numbers; what is enforced is that every gap is positive.
        if not (0.0 < self.s < 0.5):
            raise ValueError("s must satisfy 0 < s < 1/2")
        if not (0.5 < self.r < 0.75):
            raise ValueError("r must satisfy 1/2 < r < 3/4")
        if self.delta <= 0 or self.eta <= 0:
            raise ValueError("delta and eta must be positive")

    @property
    def sigma(self) -> float:
        return 100.0 * self.delta

    @staticmethod
    def rho(xi) -> np.ndarray:
        return np.asarray(
            1.0 - _smooth_step((np.abs(np.asarray(xi, dtype=float)) - 7.0 / 8.0) / 0.25)
        )

    @staticmethod
    def chi(x) -> np.ndarray:
        return np.asarray(
            1.0 - _smooth_step((np.abs(np.asarray(x, dtype=float)) - 2.0) * 10.0)
        )


def cutoff_rho(xi):
    """The fixed Fourier cutoff rho: even, smooth, 1 on [-7/8,7/8], 0 outside
    [-9/8,9/8]."""
    return CutoffProfile.rho(xi)


def cutoff_chi(x):
    """The spatial cutoff chi: 1 on [-2,2], 0 outside [-21/10, 21/10]."""
    return CutoffProfile.chi(x)


def cutoff_chi_prime(x):
    """Analytic derivative of cutoff_chi (never finite differences)."""
    arr = np.asarray(x, dtype=float)
    return -np.sign(arr) * 10.0 * _smooth_step_prime((np.abs(arr) - 2.0) * 10.0)


def dyadic_symbol(xi, N: int) -> np.ndarray:
    """rho_N(xi): rho for N = 1, rho(xi/N) - rho(2 xi/N) for N >= 2."""
    if N < 1 or (N & (N - 1)) != 0:
        raise ValueError("N must be a dyadic integer >= 1")
    xi = np.asarray(xi, dtype=float)
    if N == 1:
        return cutoff_rho(xi)
    return cutoff_rho(xi / N) - cutoff_rho(2.0 * xi / N)


def _check_scale(grid: Grid1D, N: int) -> None:
    if N > grid.resolved_band:
        raise ValueError(
            f"dyadic scale N={N} exceeds resolved band {grid.resolved_band:g}"
        )


def _sim_scales(grid: Grid1D, N: int) -> list[int]:
    """Dyadic M in the grid band with 2^-10 N < M < 2^10 N."""
    lo = N / 2.0**SIM_EXPONENT
    hi = N * 2.0**SIM_EXPONENT
    return [M for M in grid.dyadic_scales() if lo < M < hi]


def _fattened_symbol(grid: Grid1D, xi: np.ndarray, N: int) -> np.ndarray:
    sym = np.zeros_like(xi)
    for M in _sim_scales(grid, N):
        sym += dyadic_symbol(xi, M)
    return np.clip(sym, None, 1.0)


def _axis_grid(f, axis: str) -> Grid1D:
    if isinstance(f, Field1D):
        if axis != "x":
            raise ValueError("axis must be 'x' for Field1D")
        return f.grid
    if axis == "u":
        return f.grid_u
    if axis == "v":
        return f.grid_v
    raise ValueError("axis must be 'u' or 'v' for Field2D")


def _apply_multiplier(f, axis: str, symbol_of_xi):
    """Apply a real even Fourier multiplier along the named axis."""
    grid = _axis_grid(f, axis)
    sym = symbol_of_xi(grid.frequencies)
    if isinstance(f, Field1D):
        out = np.fft.ifft(sym * np.fft.fft(f.samples)).real
        return Field1D(f.grid, out)
    ax = 0 if axis == "u" else 1
    shape = (-1, 1) if ax == 0 else (1, -1)
    spec = np.fft.fft(f.samples, axis=ax) * sym.reshape(shape)
    return Field2D(f.grid_u, f.grid_v, np.fft.ifft(spec, axis=ax).real)


def lp_project(f, axis: str, N: int, fattened: bool = False):
    """Littlewood-Paley block P_N along the axis (or the fattened sum over
    M ~ N)."""
    grid = _axis_grid(f, axis)
    _check_scale(grid, N)
    if fattened:
        return _apply_multiplier(f, axis, lambda xi: _fattened_symbol(grid, xi, N))
    return _apply_multiplier(f, axis, lambda xi: dyadic_symbol(xi, N))


def low_pass(f, axis: str, N: float):
    """P_{<= N}: multiplier rho(xi/N); identity on modes |xi| <= 7N/8."""
    if N <= 0:
        raise ValueError("N must be positive")
    return _apply_multiplier(f, axis, lambda xi: cutoff_rho(xi / N))


def active_band(f, axis: str = "x") -> float:
    """Largest |xi| carrying a coefficient above BAND_TOL (relative)."""
    grid = _axis_grid(f, axis)
    if isinstance(f, Field1D):
        spec = np.abs(np.fft.fft(f.samples))
    else:
        ax = 0 if axis == "u" else 1
        spec = np.abs(np.fft.fft(f.samples, axis=ax))
        spec = spec.max(axis=1 - ax)
    top = spec.max()
    if top == 0.0:
        return 0.0
    occupied = np.abs(grid.frequencies)[spec > BAND_TOL * top]
    return float(occupied.max()) if occupied.size else 0.0


def _guard_product(f, g, axis: str) -> None:
    grid = _axis_grid(f, axis)
    combined = active_band(f, axis) + active_band(g, axis)
    if combined > grid.nyquist / 2.0:
        raise ValueError(
            f"aliasing guard: combined active bands {combined:g} exceed "
            f"Nyquist/2 = {grid.nyquist / 2.0:g}"
        )


def holder_norm(f: Field1D, gamma: float) -> float:
    """Discrete C^gamma norm: max over resolved N of N^gamma * sup |P_N f|."""
    spec = np.fft.fft(f.samples)
    xi = f.grid.frequencies
    best = 0.0
    for N in f.grid.dyadic_scales():
        block = np.fft.ifft(dyadic_symbol(xi, N) * spec).real
        best = max(best, N**gamma * float(np.abs(block).max()))
    return best


def product_norm(F: Field2D, gamma1: float, gamma2: float) -> float:
    """Discrete C^{gamma1}_u C^{gamma2}_v norm (double dyadic sup)."""
    spec = np.fft.fft2(F.samples)
    xi_u = F.grid_u.frequencies
    xi_v = F.grid_v.frequencies
    best = 0.0
    for N1 in F.grid_u.dyadic_scales():
        part = dyadic_symbol(xi_u, N1)[:, None] * spec
        for N2 in F.grid_v.dyadic_scales():
            block = np.fft.ifft2(part * dyadic_symbol(xi_v, N2)[None, :]).real
            best = max(
                best, N1**gamma1 * N2**gamma2 * float(np.abs(block).max())
            )
    return best


PARAPRODUCT_KINDS = (
    "ll", "sim", "gg", "lesssim", "gtrsim", "notsim",
    "ll_sigma", "gtrsim_sigma", "down",
)


def _pair_selected(kind: str, M: int, N: int, sigma: float) -> bool:
    wide = 2.0**SIM_EXPONENT
    if kind == "ll":
        return M <= N / wide
    if kind == "sim":
        return N / wide < M < N * wide
    if kind == "gg":
        return M >= N * wide
    if kind == "lesssim":
        return M < N * wide
    if kind == "gtrsim":
        return M > N / wide
    if kind == "notsim":
        return M <= N / wide or M >= N * wide
    if kind == "ll_sigma":
        return M <= N ** (1.0 - sigma)
    if kind == "gtrsim_sigma":
        return M > N ** (1.0 - sigma)
    raise ValueError(f"unknown paraproduct kind {kind!r}")


def paraproduct(f, g, axis: str, kind: str, profile: CutoffProfile | None = None):
    """Dyadic double sum over (M, N) with the kind's scale predicate.

    The first argument carries the M block, the second the N block; e.g.
    kind='ll' is the low x high piece (f at scales well below g).
    """
    if kind not in PARAPRODUCT_KINDS:
        raise ValueError(f"unknown paraproduct kind {kind!r}")
    grid = _axis_grid(f, axis)
    if grid != _axis_grid(g, axis):
        raise ValueError("fields must share the grid")
    _guard_product(f, g, axis)
    sigma = (profile or CutoffProfile()).sigma
    scales = grid.dyadic_scales()
    blocks_f = {M: lp_project(f, axis, M) for M in scales}
    blocks_g = {N: lp_project(g, axis, N) for N in scales}
    out = np.zeros_like(f.samples)
    if kind == "down":
        for M in scales:
            for N in scales:
                if not _pair_selected("sim", M, N, sigma):
                    continue
                prod = blocks_f[M].samples * blocks_g[N].samples
                k_cap = min(M, N) ** sigma
                piece = type(f)(grid, prod) if isinstance(f, Field1D) else None
                if piece is None:
                    piece = Field2D(f.grid_u, f.grid_v, prod)
                for K in scales:
                    if K <= k_cap:
                        out += lp_project(piece, axis, K).samples
        return type(f)(grid, out) if isinstance(f, Field1D) else Field2D(
            f.grid_u, f.grid_v, out
        )
    for M in scales:
        for N in scales:
            if _pair_selected(kind, M, N, sigma):
                out += blocks_f[M].samples * blocks_g[N].samples
    if isinstance(f, Field1D):
        return Field1D(grid, out)
    return Field2D(f.grid_u, f.grid_v, out)


def commutator_apply(f, g, axis: str, K: int):
    """[P_K, f] g = P_K(f g) - f * P_K g along the axis."""
    grid = _axis_grid(f, axis)
    _check_scale(grid, K)
    _guard_product(f, g, axis)
    prod = type(f)(grid, f.samples * g.samples) if isinstance(f, Field1D) else Field2D(
        f.grid_u, f.grid_v, f.samples * g.samples
    )
    first = lp_project(prod, axis, K).samples
    second = f.samples * lp_project(g, axis, K).samples
    if isinstance(f, Field1D):
        return Field1D(grid, first - second)
    return Field2D(f.grid_u, f.grid_v, first - second)


def trace(F: Field2D, mode: str):
    """Tr (diag), Tr_u or Tr_v of a square-grid 2-D field."""
    if F.grid_u != F.grid_v:
        raise ValueError("trace requires grid_u = grid_v")
    diag = np.diagonal(F.samples).copy()
    if mode == "diag":
        return Field1D(F.grid_u, diag)
    if mode == "u":
        return Field2D(F.grid_u, F.grid_v, np.tile(diag[:, None], (1, F.grid_v.num_points)))
    if mode == "v":
        return Field2D(F.grid_u, F.grid_v, np.tile(diag[None, :], (F.grid_u.num_points, 1)))
    raise ValueError("mode must be one of diag, u, v")


def _support_check(samples: np.ndarray, grid: Grid1D, axis_name: str) -> None:
    x = grid.points
    inner = np.abs(x) <= grid.half_length / 2.0
    mass = np.abs(samples)
    total = float(mass.sum())
    if total == 0.0:
        return
    if mass.ndim == 1:
        tail = float(mass[~inner].sum())
    else:
        sel = ~inner
        tail = float((mass[sel, :] if axis_name == "u" else mass[:, sel]).sum())
    if tail > 1e-8 * total:
        raise ValueError(
            f"integrand not supported in the central half along {axis_name} "
            f"(tail mass fraction {tail / total:.3e} > 1e-8)"
        )


def window_profile(grid: Grid1D) -> np.ndarray:
    """Wide smooth window: 1 on [-L/2, L/2], 0 near the grid ends."""
    L = grid.half_length
    return bump_profile(grid.points, -1.0, 0.0, L / 2.0, 0.98 * L)


def rewindow(f):
    """Multiply by the wide window; mandatory before spectral operations on
    integral outputs."""
    if isinstance(f, Field1D):
        return Field1D(f.grid, f.samples * window_profile(f.grid))
    wu = window_profile(f.grid_u)
    wv = window_profile(f.grid_v)
    return Field2D(f.grid_u, f.grid_v, f.samples * wu[:, None] * wv[None, :])


def integrate(f: Field1D) -> Field1D:
    """I f(x) = int_0^x f, cumulative trapezoid, exact zero at x = 0."""
    _support_check(f.samples, f.grid, "x")
    acc = cumulative_trapezoid(f.samples, dx=f.grid.spacing, initial=0.0)
    acc -= acc[f.grid.zero_index]
    return Field1D(f.grid, acc)


def integrate_partial(F: Field2D, axis: str) -> Field2D:
    """I_u or I_v: antiderivative from 0 along the axis."""
    ax = 0 if axis == "u" else 1
    grid = F.grid_u if ax == 0 else F.grid_v
    _support_check(F.samples, grid, axis)
    acc = cumulative_trapezoid(F.samples, dx=grid.spacing, axis=ax, initial=0.0)
    zero = grid.zero_index
    if ax == 0:
        acc -= acc[zero, :][None, :]
    else:
        acc -= acc[:, zero][:, None]
    return Field2D(F.grid_u, F.grid_v, acc)


def _cumulative_cubic(samples: np.ndarray, dx: float, axis: int) -> np.ndarray:
    """Additive fourth-order cumulative quadrature: each interval gets the
    integral of the cubic through its four surrounding points, so point
    differences reproduce the composite rule over any sub-segment (unlike
    composite Simpson, whose pointwise values carry oscillatory error)."""
    f = np.moveaxis(samples, axis, -1)
    n = f.shape[-1]
    if n < 4:
        raise ValueError("need at least 4 points")
    inc = np.empty_like(f[..., :-1])
    inc[..., 1:-1] = (dx / 24.0) * (-f[..., :-3] + 13.0 * f[..., 1:-2]
                                    + 13.0 * f[..., 2:-1] - f[..., 3:])
    inc[..., 0] = (dx / 24.0) * (9.0 * f[..., 0] + 19.0 * f[..., 1]
                                 - 5.0 * f[..., 2] + f[..., 3])
    inc[..., -1] = (dx / 24.0) * (9.0 * f[..., -1] + 19.0 * f[..., -2]
                                  - 5.0 * f[..., -3] + f[..., -4])
    out = np.zeros_like(f)
    np.cumsum(inc, axis=-1, out=out[..., 1:])
    return np.moveaxis(out, -1, axis)


def _cumulative(samples: np.ndarray, dx: float, axis: int, rule: str) -> np.ndarray:
    if rule == "trapezoid":
        return cumulative_trapezoid(samples, dx=dx, axis=axis, initial=0.0)
    return _cumulative_cubic(samples, dx, axis)


def _duhamel_with_rule(F: Field2D, rule: str) -> Field2D:
    """Duh[F] = (I_v - Tr_u I_v)(I_u - Tr_v I_u)(F) with the given
    cumulative quadrature rule."""
    grid = F.grid_u
    h = grid.spacing
    zero = grid.zero_index
    # inner factor: G(u,v) = int_v^u F(u',v) du'
    cu = _cumulative(F.samples, h, 0, rule)
    cu -= cu[zero, :][None, :]
    G = cu - np.diagonal(cu)[None, :]
    # outer factor: int_u^v G(u, v') dv'
    cv = _cumulative(G, h, 1, rule)
    cv -= cv[:, zero][:, None]
    out = cv - np.diagonal(cv)[:, None]
    return Field2D(F.grid_u, F.grid_v, out)


def duhamel(F: Field2D, method: str = "direct") -> Field2D:
    """The zero-diagonal-data solution operator for d_u d_v phi = F:
    Duh[F](u,v) = -int_u^v dv' int_u^{v'} du' F(u',v').

    direct: nested additive fourth-order cumulative quadrature; factorized: the
    trapezoid-based composition of partial integrals and traces. Both vanish
    (with their first transverse derivative) on the diagonal.
    """
    if F.grid_u != F.grid_v:
        raise ValueError("duhamel requires grid_u = grid_v")
    _support_check(F.samples, F.grid_u, "u")
    _support_check(F.samples, F.grid_v, "v")
    if method == "direct":
        return _duhamel_with_rule(F, "cubic")
    if method == "factorized":
        inner = Field2D(
            F.grid_u,
            F.grid_v,
            integrate_partial(F, "u").samples
            - trace(integrate_partial(F, "u"), "v").samples,
        )
        outer = integrate_partial(inner, "v")
        result = outer.samples - trace(outer, "u").samples
        return Field2D(F.grid_u, F.grid_v, result)
    raise ValueError("method must be 'direct' or 'factorized'")


def scaling_slope(pairs) -> tuple[float, float, float]:
    """Least-squares fit of log(value) against log(scale).

    Returns (slope, intercept, r_squared)."""
    pairs = list(pairs)
    if len(pairs) < 3:
        raise ValueError("need at least 3 (scale, value) pairs")
    scales = np.array([p[0] for p in pairs], dtype=float)
    values = np.array([p[1] for p in pairs], dtype=float)
    if np.any(scales <= 0) or np.any(values <= 0):
        raise ValueError("scales and values must be positive")
    lx, ly = np.log(scales), np.log(values)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(((ly - ly.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - float((resid**2).sum()) / ss_tot
    return float(slope), float(intercept), r2


def spectral_derivative(f, axis: str = "x"):
    """d/dx along the axis via the FFT (the input is windowed/periodic by
    contract)."""
    grid = _axis_grid(f, axis)
    xi = grid.frequencies
    if isinstance(f, Field1D):
        out = np.fft.ifft(1j * xi * np.fft.fft(f.samples)).real
        return Field1D(f.grid, out)
    ax = 0 if axis == "u" else 1
    shape = (-1, 1) if ax == 0 else (1, -1)
    spec = np.fft.fft(f.samples, axis=ax) * (1j * xi).reshape(shape)
    return Field2D(f.grid_u, f.grid_v, np.fft.ifft(spec, axis=ax).real)


def resample_trig(f: Field1D, points: np.ndarray) -> np.ndarray:
    """Evaluate the trigonometric interpolant of a periodic field at
    arbitrary points (only the active modes are summed)."""
    n = f.grid.num_points
    spec = np.fft.fft(f.samples) / n
    xi = f.grid.frequencies
    # index 0 of the FFT sits at x = -L: shift phases accordingly
    spec = spec * np.exp(1j * xi * f.grid.half_length)
    top = np.abs(spec).max()
    if top == 0.0:
        return np.zeros_like(np.asarray(points, dtype=float))
    keep = np.abs(spec) > BAND_TOL * top
    spec = spec[keep]
    xi = xi[keep]
    pts = np.asarray(points, dtype=float)
    flat = pts.ravel()
    res = np.empty(flat.size, dtype=complex)
    chunk = max(1, 2**22 // max(1, xi.size))
    for i in range(0, flat.size, chunk):
        seg = flat[i : i + chunk]
        res[i : i + chunk] = np.exp(1j * np.outer(seg, xi)) @ spec
    return res.reshape(pts.shape).real
