"""Closed-form position-space dynamics of Gaussian oscillator states.

Conventions used throughout (natural units make all of these O(1)):

    ground variance   sigma_gr^2 = hbar / (2 m omega)
    shape parameters  A(t) = A0 + dA*cos(2*omega*t + phi_sq)
                      B(t) = dA*sin(2*omega*t + phi_sq)
    purity product    P = (A0 + dA)*(A0 - dA),  P = 1 for pure states
    center            x_c(t) = X_amp*cos(omega*t + phi_c)
                      p_c(t) = -m*omega*X_amp*sin(omega*t + phi_c)

A pure state with these parameters is the normalized Gaussian

    psi(x, t) = (2*pi*sigma_gr^2*A)^(-1/4)
                * exp(-(x - x_c)^2 * (1 + i*B) / (4*sigma_gr^2*A))
                * exp(i*p_c*x/hbar) * exp(-i*phi(t))

whose accumulated phase phi(t) is available in closed form (see
``accumulated_phase``).  Everything here is a pure function of value
types; nothing mutates shared state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CoverageError, InvariantError

__all__ = [
    "OscillatorConfig",
    "SqueezeDynamics",
    "CenterTrajectory",
    "GaussianStateSpec",
    "GridSpec",
    "WavefunctionSample",
    "DensityMatrixSample",
    "Moments",
    "quadrature_shape",
    "squeeze_from_initial_variance",
    "center_state",
    "accumulated_phase",
    "eval_pure_wavefunction",
    "eval_pure_density",
    "moments",
    "ode_residuals",
    "schrodinger_residual",
]

# Stored-redundant quantities (purity product, mean centers) must agree
# with their defining expressions to this tolerance.
REDUNDANCY_TOL = 1e-12

# Trapezoid norm of a wavefunction sample must be 1 to within this.
NORM_TOL = 1e-8

# Grids must extend at least this many maximal standard deviations past
# the classical turning points of the state they sample.
COVERAGE_SIGMAS = 8.0


@dataclass(frozen=True)
class OscillatorConfig:
    """Physical constants of the 1-D harmonic oscillator."""

    mass: float = 1.0
    angular_frequency: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        if not (self.mass > 0 and self.angular_frequency > 0 and self.hbar > 0):
            raise InvariantError(
                "oscillator constants must satisfy m > 0, omega > 0, hbar > 0: "
                f"got m={self.mass}, omega={self.angular_frequency}, hbar={self.hbar}"
            )

    @property
    def ground_variance(self) -> float:
        """sigma_gr^2 = hbar / (2 m omega), the ground-state x variance."""
        return self.hbar / (2.0 * self.mass * self.angular_frequency)

    @property
    def period(self) -> float:
        return 2.0 * np.pi / self.angular_frequency


@dataclass(frozen=True)
class SqueezeDynamics:
    """Parameters of the 2*omega shape oscillation: A0, dA, phi_sq."""

    A0: float
    dA: float = 0.0
    phi_sq: float = 0.0

    def __post_init__(self):
        if not self.dA >= 0.0:
            raise InvariantError(f"squeeze invariant dA >= 0 violated: dA={self.dA}")
        if not self.A0 > self.dA:
            raise InvariantError(
                f"squeeze invariant A0 > dA violated: A0={self.A0}, dA={self.dA}"
            )
        if self.purity_product < 1.0 - REDUNDANCY_TOL:
            raise InvariantError(
                "squeeze invariant (A0+dA)(A0-dA) >= 1 violated: "
                f"product={self.purity_product}"
            )

    @property
    def purity_product(self) -> float:
        """P = (A0 + dA)(A0 - dA); equals 1 exactly for pure states."""
        return (self.A0 + self.dA) * (self.A0 - self.dA)

    @property
    def is_pure(self) -> bool:
        return abs(self.purity_product - 1.0) <= REDUNDANCY_TOL


@dataclass(frozen=True)
class CenterTrajectory:
    """Classical center motion: amplitude X_amp and initial phase phi_c."""

    X_amp: float = 0.0
    phi_c: float = 0.0

    def __post_init__(self):
        if not self.X_amp >= 0.0:
            raise InvariantError(f"center invariant X_amp >= 0 violated: X_amp={self.X_amp}")


@dataclass(frozen=True)
class GaussianStateSpec:
    """Full description of a (possibly mixed) Gaussian oscillator state.

    ``purity_product`` is stored redundantly and must agree with
    (A0+dA)(A0-dA) to 1e-12; P = 1 marks a pure state.
    """

    osc: OscillatorConfig
    squeeze: SqueezeDynamics
    center: CenterTrajectory = field(default_factory=CenterTrajectory)
    purity_product: float = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.purity_product is None:
            object.__setattr__(self, "purity_product", self.squeeze.purity_product)
        elif abs(self.purity_product - self.squeeze.purity_product) > REDUNDANCY_TOL:
            raise InvariantError(
                "stored purity product disagrees with (A0+dA)(A0-dA): "
                f"stored={self.purity_product}, derived={self.squeeze.purity_product}"
            )

    @property
    def is_pure(self) -> bool:
        return abs(self.purity_product - 1.0) <= REDUNDANCY_TOL

    def max_spatial_std(self) -> float:
        """Largest sqrt(sigma_gr^2 * A(t)) over a period."""
        return np.sqrt(self.osc.ground_variance * (self.squeeze.A0 + self.squeeze.dA))

    def support_radius(self, n_sigmas: float = COVERAGE_SIGMAS) -> float:
        """Center excursion plus ``n_sigmas`` maximal standard deviations."""
        return self.center.X_amp + n_sigmas * self.max_spatial_std()


@dataclass(frozen=True)
class GridSpec:
    """Uniform spatial grid with inclusive endpoints."""

    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise InvariantError(f"grid invariant x_min < x_max violated: [{self.x_min}, {self.x_max}]")
        if self.n_points < 16:
            raise InvariantError(f"grid invariant n_points >= 16 violated: n_points={self.n_points}")

    @classmethod
    def for_state(cls, spec: GaussianStateSpec, n_points: int = 1024,
                  margin: float = 12.0) -> "GridSpec":
        """Symmetric grid covering ``spec`` with ``margin`` std-dev headroom.

        The default margin of 12 keeps edge amplitudes below 1e-12 so the
        grid is usable for propagation, comfortably past the hard coverage
        minimum of 8.
        """
        radius = spec.support_radius(margin)
        grid = cls(-radius, radius, n_points)
        grid.require_coverage(spec)
        return grid

    @property
    def spacing(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    def points(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_points)

    def trapezoid_weights(self) -> np.ndarray:
        w = np.full(self.n_points, self.spacing)
        w[0] *= 0.5
        w[-1] *= 0.5
        return w

    def wavenumbers(self) -> np.ndarray:
        """FFT wavenumbers for the periodic extension of period n*h."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n_points, d=self.spacing)

    def covers(self, spec: GaussianStateSpec) -> bool:
        radius = spec.support_radius()
        return (-self.x_min >= radius) and (self.x_max >= radius)

    def require_coverage(self, spec: GaussianStateSpec) -> None:
        if not self.covers(spec):
            raise CoverageError(
                "grid coverage invariant violated: |x_min|, x_max must be >= "
                f"X_amp + {COVERAGE_SIGMAS:g}*max std = {spec.support_radius():.6g}, "
                f"got [{self.x_min:.6g}, {self.x_max:.6g}]"
            )


def _trapz(values: np.ndarray, grid: GridSpec):
    return np.trapezoid(values, dx=grid.spacing)


@dataclass(frozen=True)
class WavefunctionSample:
    """Complex wavefunction values on a grid at one instant."""

    grid: GridSpec
    values: np.ndarray
    time: float

    def __post_init__(self):
        if self.values.shape != (self.grid.n_points,):
            raise InvariantError(
                f"wavefunction sample shape {self.values.shape} does not match grid "
                f"n_points={self.grid.n_points}"
            )
        norm = self.norm()
        if abs(norm - 1.0) > NORM_TOL:
            raise InvariantError(
                f"wavefunction norm invariant violated: trapezoid norm = {norm!r}, "
                f"must be 1 within {NORM_TOL:g}"
            )

    def norm(self) -> float:
        return float(_trapz(np.abs(self.values) ** 2, self.grid))


@dataclass(frozen=True)
class DensityMatrixSample:
    """Complex density matrix rho(x, x') sampled on grid x grid."""

    grid: GridSpec
    values: np.ndarray
    time: float

    def __post_init__(self):
        n = self.grid.n_points
        if self.values.shape != (n, n):
            raise InvariantError(
                f"density sample shape {self.values.shape} does not match grid ({n}, {n})"
            )
        scale = float(np.abs(self.values).max())
        herm = float(np.abs(self.values - self.values.conj().T).max())
        if herm > 1e-10 * max(scale, 1.0):
            raise InvariantError(
                f"density Hermiticity invariant violated: max |rho - rho^H| = {herm!r}"
            )
        diag = np.diagonal(self.values)
        if np.abs(diag.imag).max() > 1e-10 * max(scale, 1.0) or diag.real.min() < -1e-10 * scale:
            raise InvariantError("density diagonal must be real and non-negative")
        tr = self.trace()
        if abs(tr - 1.0) > NORM_TOL:
            raise InvariantError(
                f"density trace invariant violated: trapezoid trace = {tr!r}, "
                f"must be 1 within {NORM_TOL:g}"
            )

    def trace(self) -> float:
        return float(_trapz(np.diagonal(self.values).real, self.grid))


@dataclass(frozen=True)
class Moments:
    """First and second moments of a state in x and p."""

    mean_x: float
    mean_p: float
    var_x: float
    var_p: float
    cov_xp: float
    uncertainty_product: float


# ---------------------------------------------------------------------------
# shape, center, and phase closed forms
# ---------------------------------------------------------------------------

def quadrature_shape(sq: SqueezeDynamics, omega: float, t):
    """A(t), B(t) of the 2*omega shape oscillation.

    ``t`` may be a scalar or an array; the return matches.
    """
    arg = 2.0 * omega * np.asarray(t, dtype=float) + sq.phi_sq
    A = sq.A0 + sq.dA * np.cos(arg)
    B = sq.dA * np.sin(arg)
    if np.ndim(t) == 0:
        return float(A), float(B)
    return A, B


def squeeze_from_initial_variance(D: float, osc: OscillatorConfig) -> SqueezeDynamics:
    """Pure-state squeeze parameters for an initial real Gaussian of x variance D.

    The state starts at a shape extremum, so A(0) = D/sigma_gr^2, B(0) = 0,
    and the pure-state constraint fixes (A0, dA) uniquely with dA >= 0;
    narrow initial states (D < sigma_gr^2) get phi_sq = pi.
    """
    if not D > 0:
        raise InvariantError(f"initial variance must be positive: D={D}")
    a_init = D / osc.ground_variance
    A0 = 0.5 * (a_init + 1.0 / a_init)
    dA = 0.5 * abs(a_init - 1.0 / a_init)
    phi_sq = 0.0 if a_init >= 1.0 else np.pi
    return SqueezeDynamics(A0=A0, dA=dA, phi_sq=phi_sq)


def center_state(center: CenterTrajectory, osc: OscillatorConfig, t):
    """Classical center (x_c, p_c) at time(s) t."""
    omega = osc.angular_frequency
    arg = omega * np.asarray(t, dtype=float) + center.phi_c
    x_c = center.X_amp * np.cos(arg)
    p_c = -osc.mass * omega * center.X_amp * np.sin(arg)
    if np.ndim(t) == 0:
        return float(x_c), float(p_c)
    return x_c, p_c


def _vacuum_phase(sq: SqueezeDynamics, omega: float, t):
    """Continuous phase of the zero-center state, phi(0) on the principal branch.

    The textbook form is (1/2)*atan[(A0-dA)*tan(omega*t + phi_sq/2)] with a
    branch constant that grows by pi/2 at every tangent singularity.  The
    equivalent smooth expression used here,

        atan(c*tan(theta)) + k*pi = theta + atan((c-1)*sin(theta)*cos(theta)
                                                / (cos(theta)^2 + c*sin(theta)^2)),

    has no singularities (the denominator is >= min(1, c) > 0), so no branch
    counting is needed and starts at phi_sq = n*pi are well conditioned.
    """
    c = sq.A0 - sq.dA
    theta = omega * np.asarray(t, dtype=float) + 0.5 * sq.phi_sq
    theta0 = 0.5 * sq.phi_sq

    def unwrapped(th):
        s, co = np.sin(th), np.cos(th)
        return th + np.arctan((c - 1.0) * s * co / (co * co + c * s * s))

    # Pin phi(0) to the principal-branch value of the textbook form.
    phi0 = 0.5 * np.arctan(c * np.tan(theta0))
    return 0.5 * unwrapped(theta) - 0.5 * unwrapped(theta0) + phi0


def _center_phase(center: CenterTrajectory, osc: OscillatorConfig, t):
    """Closed-form integral (m omega^2 / 2 hbar) * int_0^t (X_amp^2 - 2 x_c^2) dt'.

    The integrand is -X_amp^2 cos(2(omega t' + phi_c)), so the contribution is
    bounded; with the phase-space center on its classical orbit this is what
    the x^0 component of the Schroedinger equation demands (the residual
    diagnostic below certifies it numerically).
    """
    omega = osc.angular_frequency
    t = np.asarray(t, dtype=float)
    X2 = center.X_amp**2
    integral = -X2 * (np.sin(2.0 * (omega * t + center.phi_c))
                      - np.sin(2.0 * center.phi_c)) / (2.0 * omega)
    return osc.mass * omega**2 / (2.0 * osc.hbar) * integral


def accumulated_phase(sq: SqueezeDynamics, center: CenterTrajectory,
                      osc: OscillatorConfig, t):
    """Accumulated global phase phi(t) of a pure state.

    Only defined for pure parameter sets; the center contribution starts
    at 0 and the zero-center part starts on the principal branch.
    """
    if not sq.is_pure:
        raise InvariantError(
            "accumulated phase is only defined for pure states: "
            f"(A0+dA)(A0-dA) = {sq.purity_product!r} != 1"
        )
    omega = osc.angular_frequency
    phi = _vacuum_phase(sq, omega, t) + _center_phase(center, osc, t)
    if np.ndim(t) == 0:
        return float(phi)
    return phi


# ---------------------------------------------------------------------------
# state evaluation
# ---------------------------------------------------------------------------

def _require_pure(spec: GaussianStateSpec, what: str) -> None:
    if not spec.is_pure:
        raise InvariantError(
            f"{what} requires a pure state (P = 1): P = {spec.purity_product!r}"
        )


def _pure_psi(spec: GaussianStateSpec, x: np.ndarray, t: float) -> np.ndarray:
    """Raw wavefunction values on ``x`` (no sample validation)."""
    osc = spec.osc
    s2 = osc.ground_variance
    A, B = quadrature_shape(spec.squeeze, osc.angular_frequency, t)
    x_c, p_c = center_state(spec.center, osc, t)
    phi = accumulated_phase(spec.squeeze, spec.center, osc, t)
    u = x - x_c
    return ((2.0 * np.pi * s2 * A) ** -0.25
            * np.exp(-u * u * (1.0 + 1j * B) / (4.0 * s2 * A))
            * np.exp(1j * (p_c * x / osc.hbar - phi)))


def eval_pure_wavefunction(spec: GaussianStateSpec, grid: GridSpec, t: float) -> WavefunctionSample:
    """Sample the closed-form pure wavefunction on ``grid`` at time ``t``."""
    _require_pure(spec, "wavefunction evaluation")
    grid.require_coverage(spec)
    return WavefunctionSample(grid=grid, values=_pure_psi(spec, grid.points(), t), time=t)


def eval_pure_density(spec: GaussianStateSpec, grid: GridSpec, t: float) -> DensityMatrixSample:
    """Pure density matrix rho(x,x') = psi(x) psi*(x') in factored form.

    The factors separate the mean coordinate sum s = (x+x')/2 - x_c and the
    separation d = x - x'; the global phase cancels.
    """
    _require_pure(spec, "pure density evaluation")
    grid.require_coverage(spec)
    osc = spec.osc
    s2 = osc.ground_variance
    A, B = quadrature_shape(spec.squeeze, osc.angular_frequency, t)
    x_c, p_c = center_state(spec.center, osc, t)
    x = grid.points()
    s = 0.5 * (x[:, None] + x[None, :]) - x_c
    d = x[:, None] - x[None, :]
    rho = (np.exp(-(s * s + 0.25 * d * d) / (2.0 * s2 * A)
                  - 1j * B * s * d / (2.0 * s2 * A)
                  + 1j * p_c * d / osc.hbar)
           / np.sqrt(2.0 * np.pi * s2 * A))
    return DensityMatrixSample(grid=grid, values=rho, time=t)


# ---------------------------------------------------------------------------
# moments
# ---------------------------------------------------------------------------

def _spectral_derivative(values: np.ndarray, grid: GridSpec, order: int = 1,
                         axis: int = 0) -> np.ndarray:
    k = grid.wavenumbers()
    shape = [1] * values.ndim
    shape[axis] = grid.n_points
    ik = (1j * k.reshape(shape)) ** order
    return np.fft.ifft(ik * np.fft.fft(values, axis=axis), axis=axis)


def _wavefunction_moments(wf: WavefunctionSample, osc: OscillatorConfig) -> Moments:
    x = wf.grid.points()
    psi = wf.values
    hbar = osc.hbar
    prob = np.abs(psi) ** 2
    mean_x = float(_trapz(x * prob, wf.grid))
    var_x = float(_trapz((x - mean_x) ** 2 * prob, wf.grid))
    dpsi = _spectral_derivative(psi, wf.grid)
    mean_p = float(hbar * _trapz((np.conj(psi) * dpsi).imag, wf.grid))
    mean_p2 = float(hbar**2 * _trapz(np.abs(dpsi) ** 2, wf.grid))
    var_p = mean_p2 - mean_p**2
    # symmetrized covariance: Re<(x - <x>)(p - <p>)> = hbar Im int psi* (x - <x>) psi'
    cov_xp = float(hbar * _trapz(((x - mean_x) * np.conj(psi) * dpsi).imag, wf.grid))
    return Moments(mean_x=mean_x, mean_p=mean_p, var_x=var_x, var_p=var_p,
                   cov_xp=cov_xp, uncertainty_product=float(np.sqrt(var_x * var_p)))


def _density_moments(dm: DensityMatrixSample, osc: OscillatorConfig) -> Moments:
    x = dm.grid.points()
    rho = dm.values
    hbar = osc.hbar
    diag = np.diagonal(rho).real
    mean_x = float(_trapz(x * diag, dm.grid))
    var_x = float(_trapz((x - mean_x) ** 2 * diag, dm.grid))
    d1 = _spectral_derivative(rho, dm.grid, order=1, axis=0)
    d2 = _spectral_derivative(rho, dm.grid, order=2, axis=0)
    d1_diag = np.diagonal(d1)
    mean_p = float(_trapz((-1j * hbar * d1_diag).real, dm.grid))
    mean_p2 = float(_trapz((-(hbar**2) * np.diagonal(d2)).real, dm.grid))
    var_p = mean_p2 - mean_p**2
    # symmetrized covariance: Re Tr[(x - <x>)(p - <p>) rho]
    cov_xp = float(_trapz(((x - mean_x) * (-1j * hbar) * d1_diag).real, dm.grid))
    return Moments(mean_x=mean_x, mean_p=mean_p, var_x=var_x, var_p=var_p,
                   cov_xp=cov_xp, uncertainty_product=float(np.sqrt(var_x * var_p)))


def moments(sample, osc: OscillatorConfig) -> Moments:
    """Grid-quadrature moments of a wavefunction or density-matrix sample.

    Derivatives are spectral; the input must be normalized (trapezoid norm
    or trace within 1e-6 of 1).
    """
    if isinstance(sample, WavefunctionSample):
        if abs(sample.norm() - 1.0) > 1e-6:
            raise InvariantError(f"moments requires a normalized input: norm={sample.norm()!r}")
        mom = _wavefunction_moments(sample, osc)
    elif isinstance(sample, DensityMatrixSample):
        if abs(sample.trace() - 1.0) > 1e-6:
            raise InvariantError(f"moments requires unit trace: trace={sample.trace()!r}")
        mom = _density_moments(sample, osc)
    else:
        raise TypeError(
            f"moments expects a WavefunctionSample or DensityMatrixSample, got {type(sample)!r}")
    if not (mom.var_x > 0.0 and mom.var_p > 0.0):
        raise InvariantError(
            f"moment invariant var_x, var_p > 0 violated: var_x={mom.var_x!r}, "
            f"var_p={mom.var_p!r}; the grid likely under-resolves the state"
        )
    if mom.uncertainty_product < 0.5 * osc.hbar * (1.0 - 1e-6):
        raise InvariantError(
            "moment invariant sigma_x sigma_p >= hbar/2 violated: "
            f"product={mom.uncertainty_product!r}"
        )
    return mom


# ---------------------------------------------------------------------------
# residual diagnostics
# ---------------------------------------------------------------------------

def ode_residuals(sq: SqueezeDynamics, osc: OscillatorConfig, t,
                  dt_fd: float | None = None):
    """Finite-difference residuals of the three defining ODEs, normalized by omega.

    r1:  dA/dt + 2 omega B = 0
    r2:  B dA/dt - A dB/dt - omega (1 - B^2 - A^2) = 0   (fails unless P = 1)
    r3:  dphi/dt - omega / (2 A) = 0

    r3 uses the zero-center closed-form phase without the purity gate, so the
    residual is meaningful as a negative control for non-pure parameter sets.
    """
    omega = osc.angular_frequency
    if dt_fd is None:
        dt_fd = 1e-6 / omega
    t = np.asarray(t, dtype=float)
    A, B = quadrature_shape(sq, omega, t)
    Ap, Bp = quadrature_shape(sq, omega, t + dt_fd)
    Am, Bm = quadrature_shape(sq, omega, t - dt_fd)
    A_dot = (np.asarray(Ap) - np.asarray(Am)) / (2.0 * dt_fd)
    B_dot = (np.asarray(Bp) - np.asarray(Bm)) / (2.0 * dt_fd)
    phi_dot = (_vacuum_phase(sq, omega, t + dt_fd)
               - _vacuum_phase(sq, omega, t - dt_fd)) / (2.0 * dt_fd)
    r1 = np.abs(A_dot + 2.0 * omega * np.asarray(B)) / omega
    r2 = np.abs(np.asarray(B) * A_dot - np.asarray(A) * B_dot
                - omega * (1.0 - np.asarray(B) ** 2 - np.asarray(A) ** 2)) / omega
    r3 = np.abs(phi_dot - omega / (2.0 * np.asarray(A))) / omega
    if np.ndim(t) == 0:
        return float(r1), float(r2), float(r3)
    return r1, r2, r3


def schrodinger_residual(spec: GaussianStateSpec, grid: GridSpec, t: float,
                         dt_fd: float | None = None) -> float:
    """Relative L2 residual of the Schroedinger equation on the analytic state.

    The time derivative is a central difference of the closed form; the
    spatial derivative is spectral.  Certifies that the closed-form state
    solves i hbar dpsi/dt = -(hbar^2/2m) psi'' + (1/2) m omega^2 x^2 psi.
    """
    _require_pure(spec, "Schroedinger residual")
    grid.require_coverage(spec)
    osc = spec.osc
    if dt_fd is None:
        dt_fd = 1e-6 / osc.angular_frequency
    x = grid.points()
    psi = _pure_psi(spec, x, t)
    dpsi_dt = (_pure_psi(spec, x, t + dt_fd) - _pure_psi(spec, x, t - dt_fd)) / (2.0 * dt_fd)
    d2psi = _spectral_derivative(psi, grid, order=2)
    h_psi = (-osc.hbar**2 / (2.0 * osc.mass) * d2psi
             + 0.5 * osc.mass * osc.angular_frequency**2 * x**2 * psi)
    num = np.linalg.norm(1j * osc.hbar * dpsi_dt - h_psi)
    den = np.linalg.norm(h_psi)
    return float(num / den)
