"""Wave maps solver in null coordinates.

The unknown phi(u, v) is a D-component field on a square (u, v) grid; the
underlying map into the sphere is phi + shift, where shift is the path value
at the localization point. The fixed-point map is

    (Gamma phi)^k = chi(u) phi^{+,k}(u) + chi(v) phi^{-,k}(v)
                    - chi(u) chi(v) Duh[ chi((v-u)/tau) S(phi)(d_u phi, d_v phi) ],

with the truncated second fundamental form S(zeta)(X, Y) =
b(|zeta + shift|) (zeta + shift) <X, Y>, b a bump equal to 1 on [1/2, 3/2].
An independent characteristic-lattice march provides a cross-check oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .randomdata import (LinearWaves, LocalizedData, SphereManifold,
                         brownian_pipeline, linear_waves, localize_rescale)
from .spectral import (
    Field2D,
    Grid1D,
    bump_profile,
    cutoff_chi,
    duhamel,
    holder_norm,
    Field1D,
    spectral_derivative,
)


@dataclass(frozen=True)
class SolverConfig:
    dimension: int = 3
    tau: float = 0.1
    theta: float = 1.0
    epsilon: float = 2.0**-4
    s: float = 0.45
    r: float = 0.74
    delta: float = 0.01
    eta: float = 0.001
    grid_points: int = 1024      # points per null axis
    data_points: int = 8192     # 1-D grid for the global Brownian data
    picard_tol: float = 1e-10
    max_iter: int = 40

    def __post_init__(self):
        if not (0.0 < self.s < 0.5 and 0.5 < self.r < 0.75):
            raise ValueError("need 0 < s < 1/2 and 1/2 < r < 3/4")
        if self.delta <= 0 or self.eta <= 0:
            raise ValueError("delta and eta must be positive")
        if not (0.0 < self.tau <= 1.0):
            raise ValueError("need 0 < tau <= 1")
        if self.picard_tol <= 0:
            raise ValueError("picard_tol must be positive")

    @property
    def sigma(self) -> float:
        return 100.0 * self.delta

    def axis_grid(self) -> Grid1D:
        return Grid1D(self.grid_points, 2.0 * np.pi)

    def data_grid(self) -> Grid1D:
        return Grid1D(self.data_points, np.pi)


@dataclass
class WaveMapState:
    grid: Grid1D                # shared u and v axis
    values: np.ndarray          # (D, n, n); axis 1 = u, axis 2 = v
    shift: np.ndarray           # (D,)

    @property
    def dimension(self) -> int:
        return self.values.shape[0]

    def sup_difference(self, other: "WaveMapState") -> float:
        return float(np.nanmax(np.abs(self.values - other.values)))


def second_form_contraction(zeta: np.ndarray, X: np.ndarray, Y: np.ndarray,
                            shift: np.ndarray) -> np.ndarray:
    """S(zeta)(X, Y) = b(|zeta + shift|) (zeta + shift) <X, Y>.

    All arrays are (D, ...); the bump b is 1 on [1/2, 3/2] and vanishes
    outside [1/4, 2], so the nonlinearity is globally Lipschitz.
    """
    pos = zeta + shift.reshape((-1,) + (1,) * (zeta.ndim - 1))
    radius = np.sqrt(np.sum(pos * pos, axis=0))
    b = bump_profile(radius, 0.25, 0.5, 1.5, 2.0)
    inner = np.sum(X * Y, axis=0)
    return b * inner * pos


def zero_state(waves: LinearWaves, shift: np.ndarray) -> WaveMapState:
    n = waves.grid.num_points
    return WaveMapState(waves.grid, np.zeros((waves.dimension, n, n)),
                        np.asarray(shift, dtype=float))


def linear_state(waves: LinearWaves, shift: np.ndarray) -> WaveMapState:
    """The linear evolution chi(u) phi^+(u) + chi(v) phi^-(v)."""
    chi = cutoff_chi(waves.grid.points)
    vals = ((chi * waves.phi_plus)[:, :, None]
            + (chi * waves.phi_minus)[:, None, :])
    return WaveMapState(waves.grid, vals, np.asarray(shift, dtype=float))


def _null_derivatives(state: WaveMapState):
    du = np.stack([
        spectral_derivative(Field2D(state.grid, state.grid, c), "u").samples
        for c in state.values
    ])
    dv = np.stack([
        spectral_derivative(Field2D(state.grid, state.grid, c), "v").samples
        for c in state.values
    ])
    return du, dv


def _forcing(state: WaveMapState, config: SolverConfig) -> np.ndarray:
    """chi((v-u)/tau) S(phi)(d_u phi, d_v phi), shape (D, n, n)."""
    x = state.grid.points
    chi_t = cutoff_chi((x[None, :] - x[:, None]) / config.tau)
    # the exact forcing is supported in the square |u|, |v| <= 21/10); the
    # gate only removes spectral-differentiation noise outside it
    gate = bump_profile(x, -2.8, -2.2, 2.2, 2.8)
    du, dv = _null_derivatives(state)
    S = second_form_contraction(state.values, du, dv, state.shift)
    return gate[:, None] * gate[None, :] * chi_t * S


def picard_map(state: WaveMapState, waves: LinearWaves,
               config: SolverConfig) -> WaveMapState:
    """One application of the Duhamel fixed-point map Gamma."""
    grid = state.grid
    chi = cutoff_chi(grid.points)
    chi_uv = chi[:, None] * chi[None, :]
    lin = linear_state(waves, state.shift).values
    F = _forcing(state, config)
    out = np.empty_like(lin)
    for k in range(state.dimension):
        duh = duhamel(Field2D(grid, grid, F[k]), method="direct").samples
        out[k] = lin[k] - chi_uv * duh
    return WaveMapState(grid, out, state.shift)


@dataclass
class PicardDiagnostics:
    increments: list = field(default_factory=list)
    ratios: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False


def solve_picard(waves: LinearWaves, config: SolverConfig,
                 shift: np.ndarray, initial: WaveMapState | None = None
                 ) -> tuple[WaveMapState, PicardDiagnostics]:
    """Iterate Gamma from the linear evolution (or a supplied state) until
    the sup-norm increment falls below picard_tol."""
    state = initial if initial is not None else linear_state(waves, shift)
    diag = PicardDiagnostics()
    stalls = 0
    for it in range(config.max_iter):
        nxt = picard_map(state, waves, config)
        inc = nxt.sup_difference(state)
        diag.increments.append(inc)
        if len(diag.increments) >= 2 and diag.increments[-2] > 0:
            ratio = inc / diag.increments[-2]
            diag.ratios.append(ratio)
            stalls = stalls + 1 if ratio >= 0.9 else 0
            if stalls >= 3:
                raise RuntimeError(
                    "Picard iteration is not contracting "
                    f"(last increments {diag.increments[-3:]})"
                )
        state = nxt
        diag.iterations = it + 1
        if inc < config.picard_tol:
            diag.converged = True
            break
    return state, diag


def _fd4(arr: np.ndarray, axis: int, h: float) -> np.ndarray:
    """Fourth-order central first derivative (local stencil; the time gate
    has a sub-grid-width edge, so global spectral differentiation would
    pollute the residual measurement)."""
    def sh(k):
        return np.roll(arr, -k, axis=axis)
    return (sh(-2) - 8 * sh(-1) + 8 * sh(1) - sh(2)) / (12.0 * h)


def equation_residual(state: WaveMapState, config: SolverConfig,
                      inner: float = 1.0) -> float:
    """sup of |d_u d_v phi + S(phi)(d_u phi, d_v phi)| over the inner
    diamond where all chi factors are 1 (|u|, |v| <= inner and |v - u|
    inside the time-gate plateau, shrunk by the stencil width)."""
    grid = state.grid
    h = grid.spacing
    du = np.stack([_fd4(c, 0, h) for c in state.values])
    dv = np.stack([_fd4(c, 1, h) for c in state.values])
    S = second_form_contraction(state.values, du, dv, state.shift)
    x = grid.points
    mask = (np.abs(x)[:, None] <= inner) & (np.abs(x)[None, :] <= inner) \
        & (np.abs(x[None, :] - x[:, None]) <= 2.0 * config.tau - 5.0 * h)
    worst = 0.0
    for k in range(state.dimension):
        mixed = _fd4(_fd4(state.values[k], 0, h), 1, h)
        worst = max(worst, float(np.abs((mixed + S[k])[mask]).max()))
    return worst


def manifold_defect(state: WaveMapState, config: SolverConfig,
                    inner: float = 1.0) -> float:
    """sup of | |phi + shift|^2 - 1 | over the inner diamond intersected
    with the causal band |v - u| <= 2 tau where the full equation is active."""
    pos = state.values + state.shift[:, None, None]
    defect = np.abs(np.sum(pos * pos, axis=0) - 1.0)
    x = state.grid.points
    mask = (np.abs(x)[:, None] <= inner) & (np.abs(x)[None, :] <= inner) \
        & (np.abs(x[None, :] - x[:, None]) <= 2.0 * config.tau)
    return float(defect[mask].max())


# ---------------------------------------------------------------------------
# characteristic-lattice oracle


def characteristic_march(p: np.ndarray, w: np.ndarray, grid: Grid1D,
                         shift: np.ndarray, t_max: float,
                         renormalize: bool = False) -> WaveMapState:
    """Explicit second-order march for d_u d_v phi = -S(phi)(d_u phi, d_v phi)
    with Cauchy data phi(x, 0) = p, d_t phi(x, 0) = w.

    Cell update: phi(u, v+h) = phi(u+h, v+h) - phi(u+h, v) + phi(u, v)
    + h^2 F(cell), with cell-centered averages and one-sided difference
    quotients; seeded on the first off-diagonal layers by a second-order
    Taylor expansion of the Cauchy data. Entries outside the computed
    diagonal band are NaN.
    """
    shift = np.asarray(shift, dtype=float)
    h = grid.spacing
    d_max = int(np.ceil(2.0 * t_max / h)) + 2

    def deriv(rows):
        return np.stack([
            spectral_derivative(Field1D(grid, row), "x").samples
            for row in rows
        ])

    p1 = deriv(p)
    p2 = deriv(p1)
    w1 = deriv(w)
    q = 0.5 * (p1 + w)
    s_diag = second_form_contraction(p, 0.5 * (p1 - w), 0.5 * (p1 + w), shift)
    r2 = 0.5 * (p2 + w1) + s_diag

    D, n = p.shape
    vals = np.full((D, n, n), np.nan)
    idx = np.arange(n)
    vals[:, idx, idx] = p
    seed_plus = p + h * q + 0.5 * h**2 * r2
    seed_minus = p - h * q + 0.5 * h**2 * r2
    vals[:, idx[:-1], idx[:-1] + 1] = seed_plus[:, :-1]
    vals[:, idx[:-1] + 1, idx[:-1]] = seed_minus[:, 1:]

    def renorm(new):
        pos = new + shift[:, None]
        return pos / np.sqrt(np.sum(pos * pos, axis=0)) - shift[:, None]

    for d in range(1, d_max):
        # upper band: new entries phi(i, i+d+1), i = 0 .. n-d-2
        i = idx[: n - d - 1]
        A = vals[:, i, i + d]
        B = vals[:, i + 1, i + d]
        C = vals[:, i + 1, i + d + 1]
        new = C - B + A + h**2 * second_form_contraction(
            0.5 * (A + C), (B - A) / h, (C - B) / h, shift)
        if renormalize:
            new = renorm(new)
        vals[:, i, i + d + 1] = new
        # lower band: new entries phi(i+1, i-d), i = d .. n-2
        i = idx[d:-1]
        A = vals[:, i, i - d]
        B = vals[:, i, i - d + 1]
        C = vals[:, i + 1, i - d + 1]
        new = A - B + C + h**2 * second_form_contraction(
            0.5 * (A + C), (C - B) / h, (B - A) / h, shift)
        if renormalize:
            new = renorm(new)
        vals[:, i + 1, i - d] = new
        worst = max(np.abs(vals[:, idx[: n - d - 1], idx[: n - d - 1] + d + 1]).max(),
                    np.abs(vals[:, idx[d:-1] + 1, idx[d:-1] - d]).max())
        if worst > 10.0:
            raise RuntimeError(f"characteristic march blew up at layer {d + 1}")
    return WaveMapState(grid, vals, shift)


def characteristic_oracle(waves: LinearWaves, config: SolverConfig,
                          shift: np.ndarray, t_max: float | None = None,
                          renormalize: bool = False) -> WaveMapState:
    """March the Cauchy data of the chi-windowed linear waves (the same data
    the Duhamel fixed point evolves); comparisons with the Picard solution
    are made on |u|, |v| <= 2 where all chi factors are 1."""
    grid = waves.grid
    chi = cutoff_chi(grid.points)

    def deriv(rows):
        return np.stack([
            spectral_derivative(Field1D(grid, row), "x").samples
            for row in rows
        ])

    p = chi * (waves.phi_plus + waves.phi_minus)
    w = deriv(chi * waves.phi_minus) - deriv(chi * waves.phi_plus)
    t_lim = t_max if t_max is not None else 1.2 * config.tau
    return characteristic_march(p, w, grid, shift, t_lim, renormalize)


def oracle_band_difference(a: WaveMapState, b: WaveMapState) -> float:
    """sup difference over cells where both states are defined, restricted
    to the chi plateau |u|, |v| <= 2."""
    x = a.grid.points
    mask = (np.abs(x)[:, None] <= 2.0) & (np.abs(x)[None, :] <= 2.0)
    diff = np.abs(a.values - b.values)[:, mask]
    return float(np.nanmax(np.where(np.isnan(diff), -np.inf, diff)))


# ---------------------------------------------------------------------------
# Cartesian conversion and energy


def null_to_cartesian(state: WaveMapState, t_values) -> tuple[np.ndarray, np.ndarray]:
    """Sample phi(t, x) and d_t phi(t, x) on the axis grid for each t.

    Returns (position, velocity) with shape (T, D, n); u = x - t, v = x + t,
    d_t = d_v - d_u evaluated spectrally then interpolated bilinearly.
    """
    grid = state.grid
    x = grid.points
    t_values = np.atleast_1d(np.asarray(t_values, dtype=float))
    du, dv = _null_derivatives(state)
    vel2d = dv - du
    D, n = state.dimension, grid.num_points
    pos = np.empty((t_values.size, D, n))
    vel = np.empty((t_values.size, D, n))
    for k in range(D):
        fpos = RegularGridInterpolator((x, x), state.values[k],
                                       bounds_error=False, fill_value=0.0)
        fvel = RegularGridInterpolator((x, x), vel2d[k],
                                       bounds_error=False, fill_value=0.0)
        for j, t in enumerate(t_values):
            pts = np.column_stack([x - t, x + t])
            pos[j, k] = fpos(pts)
            vel[j, k] = fvel(pts)
    return pos, vel


def hamiltonian_energy(position: np.ndarray, velocity: np.ndarray,
                       grid: Grid1D, window: float = 3.0) -> float:
    """(1/2) integral over |x| <= window of |d_x phi|^2 + |d_t phi|^2."""
    dx = np.stack([
        spectral_derivative(Field1D(grid, c), "x").samples for c in position
    ])
    density = 0.5 * np.sum(dx * dx + velocity * velocity, axis=0)
    mask = np.abs(grid.points) <= window
    return float(np.trapezoid(density[mask], grid.points[mask]))


def _lattice_slice(values: np.ndarray, m: int) -> np.ndarray:
    """phi(t = m h, x) sampled exactly on the lattice: entry i is
    values[:, i - m, i + m] (zero where the indices wrap)."""
    D, n, _ = values.shape
    out = np.zeros((D, n))
    i = np.arange(n)
    ok = (i - m >= 0) & (i - m < n) & (i + m >= 0) & (i + m < n)
    out[:, ok] = values[:, i[ok] - m, i[ok] + m]
    return out


def _shift_rows(arr: np.ndarray, k: int) -> np.ndarray:
    """arr[..., i + k] with zero fill (row translation by -k grid steps)."""
    out = np.zeros_like(arr)
    if k == 0:
        out[...] = arr
    elif k > 0:
        out[..., :-k] = arr[..., k:]
    else:
        out[..., -k:] = arr[..., :k]
    return out


def oracle_energy_drift(loc: LocalizedData, config: SolverConfig,
                        renormalize: bool = True) -> tuple[float, np.ndarray]:
    """Relative energy drift max_t |E(t) - E(0)| / E(0) of the on-manifold
    characteristic run from the Cauchy data (B, V) over |t| <= tau.

    Slices are taken exactly on the lattice (t = m h). The free-wave part of
    each slice is the d'Alembert formula, exact on the lattice by index
    shifts, so only the smooth Duhamel remainder is finite-differenced in t;
    differencing the full field would be polluted by the steep features of
    the data.
    """
    grid = loc.path.grid
    h = grid.spacing
    x = grid.points
    shift = loc.path.basepoint
    B = loc.path.samples
    V = loc.velocity.V
    Vint = loc.velocity.Vint
    p = B - shift[:, None]
    m_max = int(np.floor(config.tau / h))
    state = characteristic_march(p, V, grid, shift, (m_max + 2) * h,
                                 renormalize=renormalize)
    vals = np.where(np.isnan(state.values), 0.0, state.values)
    Bp = np.stack([_fd4(row, 0, h) for row in B])

    energies = []
    mask = np.abs(x) <= 3.0
    for m in range(-m_max, m_max + 1):
        lin = 0.5 * (_shift_rows(p, -m) + _shift_rows(p, m)
                     + _shift_rows(Vint, m) - _shift_rows(Vint, -m))
        lin_x = 0.5 * (_shift_rows(Bp, -m) + _shift_rows(Bp, m)
                       + _shift_rows(V, m) - _shift_rows(V, -m))
        lin_t = 0.5 * (_shift_rows(Bp, m) - _shift_rows(Bp, -m)
                       + _shift_rows(V, m) + _shift_rows(V, -m))
        rem = _lattice_slice(vals, m) - lin
        # exact remainder vanishes outside the causal support of the data;
        # zero it there so array-edge fill does not leak into the FFT
        rem *= np.abs(x) <= 3.5
        rem_next = _lattice_slice(vals, m + 1)
        rem_prev = _lattice_slice(vals, m - 1)
        lin_next = 0.5 * (_shift_rows(p, -m - 1) + _shift_rows(p, m + 1)
                          + _shift_rows(Vint, m + 1) - _shift_rows(Vint, -m - 1))
        lin_prev = 0.5 * (_shift_rows(p, -m + 1) + _shift_rows(p, m - 1)
                          + _shift_rows(Vint, m - 1) - _shift_rows(Vint, -m + 1))
        vel_rem = ((rem_next - lin_next) - (rem_prev - lin_prev)) / (2 * h)
        dx_rem = np.stack([
            spectral_derivative(Field1D(grid, c), "x").samples for c in rem
        ])
        dx = lin_x + dx_rem
        vel = lin_t + vel_rem
        density = 0.5 * np.sum(dx * dx + vel * vel, axis=0)
        energies.append(float(np.trapezoid(density[mask], x[mask])))
    energies = np.asarray(energies)
    e0 = energies[m_max]
    drift = float(np.max(np.abs(energies - e0)) / e0)
    return drift, energies


# ---------------------------------------------------------------------------
# localized data and the epsilon-convergence experiment


def localized_waves(seed: int, config: SolverConfig, x0: float = 0.0,
                    epsilon: float | None = None) -> tuple[LinearWaves, LocalizedData]:
    """Global Brownian pipeline at the data resolution, localized and
    rescaled onto the solver axis grid."""
    eps = epsilon if epsilon is not None else config.epsilon
    data_grid = config.data_grid()
    w_eps, wbar_eps, path, _vel = brownian_pipeline(
        seed, data_grid, config.dimension, eps)
    loc = localize_rescale(w_eps, wbar_eps, data_grid, config.axis_grid(),
                           config.tau, x0, path, SphereManifold(config.dimension),
                           eps)
    return linear_waves(loc.path, loc.velocity, config.theta), loc


@dataclass
class ConvergenceRow:
    eps: float
    d_c0cs: float
    d_c1cs1: float
    data_diff: float


@dataclass
class ConvergenceReport:
    rows: list
    errors: dict


def _sup_holder(fields: np.ndarray, grid: Grid1D, gamma: float) -> float:
    best = 0.0
    for comp in fields.reshape(-1, grid.num_points):
        best = max(best, holder_norm(Field1D(grid, comp), gamma))
    return best


def convergence_experiment(seed: int, config: SolverConfig,
                           exponents=range(3, 10), x0: float = 0.0,
                           n_times: int = 9) -> ConvergenceReport:
    """Solve at eps_i = 2^{-i} and report successive solution differences in
    the discrete C_t^0 C_x^s and C_t^1 C_x^{s-1} norms, plus the data-level
    D^s distances."""
    from .enhanced import ds_distance, product_scales

    t_grid = np.linspace(-config.tau, config.tau, n_times)
    rows: list[ConvergenceRow] = []
    errors: dict[float, str] = {}
    prev = None  # (eps, waves, pos, vel)
    axis = config.axis_grid()
    scales = product_scales(axis)
    t_shifts = np.linspace(-2.0 * config.tau, 2.0 * config.tau, 9)
    for i in exponents:
        eps = 2.0**-i
        try:
            waves, loc = localized_waves(seed, config, x0, epsilon=eps)
            shift = loc.path.basepoint
            state, _diag = solve_picard(waves, config, shift)
            pos, vel = null_to_cartesian(state, t_grid)
        except (RuntimeError, ValueError) as exc:
            errors[eps] = str(exc)
            prev = None
            continue
        if prev is not None:
            p_eps, p_waves, p_pos, p_vel = prev
            d0 = _sup_holder(pos - p_pos, axis, config.s)
            d1 = _sup_holder(vel - p_vel, axis, config.s - 1.0)
            dd = ds_distance(p_waves, waves, config.s, scale_range=scales,
                             t_samples=t_shifts)
            rows.append(ConvergenceRow(eps, d0, d1, dd))
        prev = (eps, waves, pos, vel)
    return ConvergenceReport(rows, errors)


def patch_consistency(seed: int, config: SolverConfig, x0_other: float,
                      n_times: int = 5) -> float:
    """Finite-speed check: two localization patches (x0 = 0 and x0_other)
    describe the same map on the overlap of their chi plateaus; returns the
    sup difference of the reconstructed map values there."""
    waves0, loc0 = localized_waves(seed, config, 0.0)
    waves1, loc1 = localized_waves(seed, config, x0_other)
    state0, _ = solve_picard(waves0, config, loc0.path.basepoint)
    state1, _ = solve_picard(waves1, config, loc1.path.basepoint)
    t_grid = np.linspace(-config.tau, config.tau, n_times)
    pos0, _ = null_to_cartesian(state0, t_grid)
    pos1, _ = null_to_cartesian(state1, t_grid)
    axis = config.axis_grid()
    x = axis.points
    offset = x0_other / config.tau
    # overlap of the plateaus in patch-0 coordinates
    mask = (np.abs(x) <= 1.0) & (np.abs(x - offset) <= 1.0)
    if not mask.any():
        raise ValueError("patches do not overlap on their plateaus")
    worst = 0.0
    for j in range(t_grid.size):
        map1 = pos1[j] + loc1.path.basepoint[:, None]
        for k in range(pos0.shape[1]):
            shifted = np.interp(x[mask] - offset, x, map1[k])
            ref = pos0[j, k, mask] + loc0.path.basepoint[k]
            worst = max(worst, float(np.abs(shifted - ref).max()))
    return worst
