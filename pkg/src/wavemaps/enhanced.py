"""Enhanced data: the high x high -> low product family of the linear waves
and the D^s functional built from it.

Products are formed blockwise: Phi_{M,N}(x; t) = M^s P_M phi^{sign1, m}(x - t)
* d_x P_N phi^{sign2, n}(x + t), with shifts and derivatives applied on the
Fourier side. Shifted products are only ever computed for mixed directions
(sign1 != sign2); shifted same-direction products are excluded by
construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .randomdata import LinearWaves
from .spectral import (
    Field1D,
    Grid1D,
    _sim_scales,
    active_band,
    cutoff_chi,
    dyadic_symbol,
    scaling_slope,
)

SIGNS = (1, -1)


def window_waves(waves: LinearWaves) -> LinearWaves:
    """chi-window both wave families (normed quantities are windowed first)."""
    chi = cutoff_chi(waves.grid.points)
    return LinearWaves(waves.grid, waves.phi_plus * chi,
                       waves.phi_minus * chi, waves.theta)


def _component(waves: LinearWaves, sign: int, m: int) -> np.ndarray:
    return (waves.phi_plus if sign > 0 else waves.phi_minus)[m]


def _block_spectrum(waves: LinearWaves, sign: int, m: int, N: int,
                    derivative: bool) -> np.ndarray:
    """FFT of P_N phi^{sign, m}, optionally of its x-derivative."""
    grid = waves.grid
    xi = grid.frequencies
    spec = np.fft.fft(_component(waves, sign, m)) * dyadic_symbol(xi, N)
    if derivative:
        spec = spec * (1j * xi)
    return spec


def _shifted(spec: np.ndarray, grid: Grid1D, t: float) -> np.ndarray:
    """Samples of the field with argument shifted to x + t."""
    return np.fft.ifft(spec * np.exp(1j * grid.frequencies * t)).real


def _guard_block_product(grid: Grid1D, M: int, N: int) -> None:
    combined = (9.0 / 8.0) * (M + N)
    if combined > grid.nyquist / 2.0:
        raise ValueError(
            f"aliasing guard: blocks M={M}, N={N} occupy a combined band "
            f"{combined:g} > Nyquist/2 = {grid.nyquist / 2.0:g}"
        )


def hhl_product(waves: LinearWaves, sign1: int, sign2: int, m: int, n: int,
                M: int, N: int, s: float, t: float = 0.0) -> Field1D:
    """Phi^{sign1,sign2,m,n}_{M,N}(x; t) as a 1-D field."""
    grid = waves.grid
    _guard_block_product(grid, M, N)
    f1 = _shifted(_block_spectrum(waves, sign1, m, M, False), grid, -t)
    f2 = _shifted(_block_spectrum(waves, sign2, n, N, True), grid, +t)
    return Field1D(grid, M**s * f1 * f2)


def _holder_batch(samples: np.ndarray, grid: Grid1D, gamma: float,
                  scales) -> float:
    """max over the batch (first axis) and scales of N^gamma sup |P_N row|."""
    spec = np.fft.fft(samples, axis=-1)
    xi = grid.frequencies
    best = 0.0
    for N in scales:
        block = np.fft.ifft(spec * dyadic_symbol(xi, N), axis=-1).real
        best = max(best, N**gamma * float(np.abs(block).max()))
    return best


def default_t_samples() -> np.ndarray:
    return np.linspace(-2.0, 2.0, 64)


def product_scales(grid: Grid1D) -> list[int]:
    """Dyadic scales whose pairwise products stay inside the alias guard."""
    return [N for N in grid.dyadic_scales()
            if (9.0 / 8.0) * 2 * N <= grid.nyquist / 2.0]


@dataclass
class EnhancedData:
    waves: LinearWaves
    s: float
    scale_range: list[int]
    t_samples: np.ndarray
    ds_value: float
    linear_branch: float
    same_branch: float
    mixed_branch: float
    table: dict = field(default_factory=dict)  # (s1,s2,m,n,M,N) -> norm


def _pair_iter(scale_range, grid):
    for M in scale_range:
        for N in _sim_scales(grid, M):
            if N in scale_range:
                yield M, N


def _product_rows(waves: LinearWaves, s: float, scale_range, t_samples,
                  grid: Grid1D):
    """Yield ((s1, s2, m, n, M, N), sup-over-t C^{s-1} norm) entries."""
    D = waves.dimension
    scales = list(scale_range)
    t_mixed = np.asarray(t_samples, dtype=float)
    for sign1 in SIGNS:
        for sign2 in SIGNS:
            mixed = sign1 != sign2
            shifts = t_mixed if mixed else np.array([0.0])
            for m in range(D):
                spec1 = {M: _block_spectrum(waves, sign1, m, M, False)
                         for M in scales}
                for n in range(D):
                    spec2 = {N: _block_spectrum(waves, sign2, n, N, True)
                             for N in scales}
                    measure = grid.dyadic_scales()
                    for M, N in _pair_iter(scales, grid):
                        _guard_block_product(grid, M, N)
                        xi = grid.frequencies
                        ph1 = np.exp(-1j * np.outer(shifts, xi))
                        ph2 = np.conj(ph1)
                        f1 = np.fft.ifft(spec1[M] * ph1, axis=-1).real
                        f2 = np.fft.ifft(spec2[N] * ph2, axis=-1).real
                        prod = M**s * f1 * f2
                        norm = _holder_batch(prod, grid, s - 1.0, measure)
                        yield (sign1, sign2, m, n, M, N), norm


def ds_norm(waves: LinearWaves, s: float, scale_range=None,
            t_samples=None) -> EnhancedData:
    """The D^s functional: max of the linear Holder branch and the square
    roots of the same-direction and mixed (shifted) product branches."""
    grid = waves.grid
    scales = list(scale_range) if scale_range is not None else product_scales(grid)
    t_s = np.asarray(t_samples if t_samples is not None else default_t_samples())
    measure = grid.dyadic_scales()
    linear = (_holder_batch(waves.phi_plus, grid, s, measure)
              + _holder_batch(waves.phi_minus, grid, s, measure))
    table = {}
    same = 0.0
    mixed = 0.0
    for key, norm in _product_rows(waves, s, scales, t_s, grid):
        table[key] = norm
        if key[0] == key[1]:
            same = max(same, norm)
        else:
            mixed = max(mixed, norm)
    value = max(linear, np.sqrt(same), np.sqrt(mixed))
    return EnhancedData(waves, s, scales, t_s, float(value), linear,
                        float(np.sqrt(same)), float(np.sqrt(mixed)), table)


def ds_distance(waves1: LinearWaves, waves2: LinearWaves, s: float,
                scale_range=None, t_samples=None) -> float:
    """D^s distance: the same branches applied to differences of the waves
    and of their product families."""
    if waves1.grid != waves2.grid:
        raise ValueError("waves must share the grid")
    grid = waves1.grid
    scales = list(scale_range) if scale_range is not None else product_scales(grid)
    t_s = np.asarray(t_samples if t_samples is not None else default_t_samples())
    measure = grid.dyadic_scales()
    diff = LinearWaves(grid, waves1.phi_plus - waves2.phi_plus,
                       waves1.phi_minus - waves2.phi_minus, waves1.theta)
    linear = (_holder_batch(diff.phi_plus, grid, s, measure)
              + _holder_batch(diff.phi_minus, grid, s, measure))
    rows1 = dict(_product_rows(waves1, s, scales, t_s, grid))
    best = 0.0
    for key, norm2 in _product_rows(waves2, s, scales, t_s, grid):
        best = max(best, abs(rows1[key] - norm2))
    return float(max(linear, np.sqrt(best)))


@dataclass
class HhlReport:
    rows: list            # (sign1, sign2, m, n, M, N, t, norm)
    column: dict          # M -> max over N ~ M (all sign/component pairs)
    slope: float
    intercept: float
    r_squared: float
    ratio_rows: list      # (M, N, raw C^{r-1} norm, bound ratio)
    max_ratio: float


def hhl_scaling_report(waves: LinearWaves, s: float, scale_range=None,
                       r: float = 0.74, ratio_sweep: bool = True) -> HhlReport:
    """The M-column of the product family (boundedness diagnostic) and the
    general (M, N) sweep against the M^{-s} N^{r-s} envelope."""
    grid = waves.grid
    scales = list(scale_range) if scale_range is not None else product_scales(grid)
    rows = []
    column: dict[int, float] = {}
    for key, norm in _product_rows(waves, s, scales, np.array([0.0]), grid):
        sign1, sign2, m, n, M, N = key
        rows.append((sign1, sign2, m, n, M, N, 0.0, norm))
        column[M] = max(column.get(M, 0.0), norm)
    fit_pairs = [(M, v) for M, v in sorted(column.items()) if v > 0]
    slope, intercept, r2 = scaling_slope(fit_pairs)
    # Raw-product sweep against the M^-s N^{r-s} envelope (no M^s weight)
    ratio_rows = []
    max_ratio = 0.0
    if ratio_sweep:
        measure = grid.dyadic_scales()
        enh = ds_norm(waves, s, scales, t_samples=np.array([0.0]))
        dsq = enh.ds_value**2 if enh.ds_value > 0 else 1.0
        D = waves.dimension
        for sign1 in SIGNS:
            for sign2 in SIGNS:
                for m in range(D):
                    for n in range(D):
                        for M in scales:
                            for N in scales:
                                if M > 2.0**10 * N:
                                    continue
                                prod = hhl_product(waves, sign1, sign2, m, n,
                                                   M, N, 0.0)
                                norm = _holder_batch(prod.samples[None, :],
                                                     grid, r - 1.0, measure)
                                ratio = norm / (M ** (-s) * N ** (r - s) * dsq)
                                ratio_rows.append((M, N, norm, ratio))
                                max_ratio = max(max_ratio, ratio)
    return HhlReport(rows, column, slope, intercept, r2, ratio_rows, max_ratio)


def lacunary_adversary(grid: Grid1D, s: float, scales=None) -> LinearWaves:
    """Matched-norm lacunary wave pair with an O(1) low-frequency block at
    every scale: phi^+ = sum N^-s sin(Nx), phi^- = sum N^-s sin((N-1)x)."""
    scales = list(scales) if scales is not None else grid.dyadic_scales()
    x = grid.points
    plus = np.zeros_like(x)
    minus = np.zeros_like(x)
    for N in scales:
        if N < 2:
            continue
        plus += N ** (-s) * np.sin(N * x)
        minus += N ** (-s) * np.sin((N - 1) * x)
    one = np.stack([plus])
    other = np.stack([minus])
    return LinearWaves(grid, one, other, 1.0)
