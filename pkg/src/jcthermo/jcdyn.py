"""Exact interaction-picture evolution of a qubit coupled to one bosonic mode.

The excitation-conserving coupling g(sigma_+ a + sigma_- a^dag) splits the
joint Hilbert space into two-dimensional doublets |1,n> <-> |0,n+1> plus the
invariant vacuum |0,0>.  The propagator is assembled doublet by doublet from
closed-form amplitudes, so a single time point costs one small matrix
sandwich instead of an ODE solve.

Ordering of the joint basis is qubit ⊗ Fock with qubit index 0 = excited
(see :mod:`.qstate`).  At a finite Fock cutoff the top doublet is incomplete;
the orphan level |1, N-1> is frozen (acts as identity), which keeps the
truncated propagator exactly unitary.  The cutoff margin keeps its
population below the tail tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse

from .qstate import (
    EIG_CLAMP,
    DensityMatrix,
    _ptrace_bath_raw,
    _ptrace_system_raw,
    entropy_of_spectrum,
    thermal_state,
)

CUTOFF_MARGIN = 8
MAX_JOINT_DIM = 4096


class CutoffLeakageError(RuntimeError):
    """Population reached the top Fock level beyond the tail tolerance."""


class ConfigError(ValueError):
    """Invalid model or numerics configuration."""


@dataclass(frozen=True)
class ModelParams:
    """Physical constants of the qubit + mode system, in units omega_a = hbar = kB = 1.

    ``beta_a`` (initial qubit inverse temperature) is optional: runs that
    minimise over initial states never use it.
    """

    omega_b: float
    g: float
    beta_b: float
    omega_a: float = 1.0
    beta_a: float | None = None

    def __post_init__(self):
        if not (self.omega_a > 0.0 and self.omega_b > 0.0):
            raise ConfigError("frequencies must be strictly positive")
        if self.g < 0.0:
            raise ConfigError("coupling g must be non-negative")
        if not (self.beta_b > 0.0):
            raise ConfigError("bath inverse temperature must be strictly positive")
        if self.beta_a is not None and not (self.beta_a > 0.0):
            raise ConfigError("qubit inverse temperature must be strictly positive")

    @property
    def delta(self) -> float:
        """Detuning omega_a - omega_b."""
        return self.omega_a - self.omega_b


@dataclass(frozen=True)
class NumericsConfig:
    """Resolution and tolerance knobs shared across the pipeline."""

    t_max: float = 50.0              # units of 1/omega_a
    n_steps: int = 500
    fock_cutoff: int | str = "auto"
    tail_tol: float = 1e-14
    eig_clamp: float = EIG_CLAMP
    sign_band: float = 1e-9
    state_grid: int = 24
    ode_rtol: float = 1e-10
    ode_atol: float = 1e-12
    p_criterion_variant: str = "standard"   # or "alt_gamma2": gamma_3 + gamma_2/2 comparison form

    def __post_init__(self):
        if isinstance(self.fock_cutoff, str):
            if self.fock_cutoff != "auto":
                raise ConfigError(f"fock_cutoff must be an integer or 'auto', got {self.fock_cutoff!r}")
        elif self.fock_cutoff < 2:
            raise ConfigError("explicit fock_cutoff must be >= 2")
        if not (0.0 < self.tail_tol <= 1e-6):
            raise ConfigError("tail_tol must lie in (0, 1e-6]")
        if self.n_steps < 2:
            raise ConfigError("n_steps must be at least 2")
        if self.t_max <= 0.0:
            raise ConfigError("t_max must be positive")
        if self.state_grid < 4:
            raise ConfigError("state_grid must be at least 4")
        if self.p_criterion_variant not in ("standard", "alt_gamma2"):
            raise ConfigError(f"unknown p_criterion_variant {self.p_criterion_variant!r}")

    def time_grid(self) -> np.ndarray:
        return np.linspace(0.0, self.t_max, self.n_steps + 1)


def auto_cutoff(params: ModelParams, tail_tol: float = 1e-14) -> int:
    """Smallest Fock dimension with Boltzmann weight of the top level below
    ``tail_tol``, plus a safety margin of ``CUTOFF_MARGIN`` levels."""
    if not (0.0 < tail_tol <= 1e-6):
        raise ConfigError("tail_tol must lie in (0, 1e-6]")
    x = params.beta_b * params.omega_b
    z_inv = -math.expm1(-x)  # 1 - e^{-x}
    # weight of level N is e^{-N x} (1 - e^{-x}); solve e^{-N x} z_inv < tail_tol
    n_raw = 2 if z_inv <= tail_tol else math.ceil(math.log(z_inv / tail_tol) / x)
    n = max(2, n_raw) + CUTOFF_MARGIN
    if 2 * n > MAX_JOINT_DIM:
        raise ConfigError(
            f"required Fock cutoff {n} exceeds the desk-scale limit ({MAX_JOINT_DIM // 2}); "
            "the bath is too hot for this dense implementation")
    return n


def resolve_cutoff(params: ModelParams, cfg: NumericsConfig) -> int:
    if cfg.fock_cutoff == "auto":
        return auto_cutoff(params, cfg.tail_tol)
    return int(cfg.fock_cutoff)


@dataclass(frozen=True)
class JointState:
    """Joint qubit ⊗ mode state at one instant of the run."""

    params: ModelParams
    cutoff: int
    rho_ab: DensityMatrix
    time: float


@dataclass(frozen=True)
class JointObservables:
    s_a: float
    s_b: float
    s_ab: float
    i_ab: float
    e_b: float
    e_int: float
    p1: float


@dataclass(frozen=True)
class InstantRates:
    """Exact instantaneous time derivatives extracted from the generator."""

    sdot_a: float
    sdot_b: float
    idot_ab: float
    edot_b: float
    edot_int: float
    pdot_a: float
    rho_dot_a: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class ReducedMapPoint:
    """Scalars of the reduced qubit map at time t, measured from the joint dynamics.

    The map is phase covariant: excited population evolves affinely,
    p1(t) = p11 * p1(0) + p10 * (1 - p1(0)), and the coherence is
    multiplied by ``kappa``.  ``d*`` fields are exact time derivatives.
    """

    t: float
    p11: float
    p10: float
    kappa: complex
    dp11: float
    dp10: float
    dkappa: complex

    @property
    def z_scale(self) -> float:
        return self.p11 - self.p10

    @property
    def z_offset(self) -> float:
        return self.p11 + self.p10 - 1.0

    @property
    def dz_scale(self) -> float:
        return self.dp11 - self.dp10

    @property
    def dz_offset(self) -> float:
        return self.dp11 + self.dp10

    @property
    def ell_scale(self) -> float:
        return abs(self.kappa)

    @property
    def dell_scale(self) -> float:
        m = abs(self.kappa)
        if m < 1e-15:
            return 0.0
        return (self.kappa.conjugate() * self.dkappa).real / m


class JointDynamics:
    """Precomputed machinery for one (params, cutoff) pair.

    Stateless after construction; all methods are pure functions of their
    arguments, so an instance can be shared across threads.
    """

    def __init__(self, params: ModelParams, cutoff: int, tail_tol: float = 1e-14):
        if cutoff < 2:
            raise ConfigError("cutoff must be >= 2")
        self.params = params
        self.cutoff = int(cutoff)
        self.tail_tol = float(tail_tol)
        n = self.cutoff
        self._m = np.arange(1, n)                      # doublet index, couples |1,m-1> <-> |0,m>
        self._root_m = np.sqrt(self._m.astype(float))
        self._omega_m = np.sqrt(params.delta ** 2 + 4.0 * params.g ** 2 * self._m)
        self.bath_state = thermal_state(params.omega_b * np.arange(n), params.beta_b)
        self.bath_populations = np.diag(self.bath_state.mat).real.copy()
        self._excitation_diag = np.concatenate([np.arange(n) + 1.0, np.arange(n)])
        # interleaved ordering |0,0>, |1,0>, |0,1>, |1,1>, |0,2>, ... puts the
        # doublet structure on a bandwidth-3 Hermitian band
        order = np.empty(2 * n, dtype=int)
        order[0] = n                     # |0,0>
        order[2 * self._m - 1] = self._m - 1   # |1,m-1>
        order[2 * self._m] = n + self._m       # |0,m>
        order[2 * n - 1] = n - 1         # orphan |1,N-1>
        self._interleave = order

    # -- propagator -----------------------------------------------------

    def _doublet_amplitudes(self, t: float):
        """Closed-form doublet amplitudes (c_m, d_m) for m = 1..N-1."""
        delta = self.params.delta
        half = 0.5 * self._omega_m * t
        with np.errstate(invalid="ignore", divide="ignore"):
            s = np.where(self._omega_m > 0.0, np.sin(half) / np.where(self._omega_m > 0.0, self._omega_m, 1.0), 0.5 * t)
        phase = np.exp(0.5j * delta * t)
        c = phase * (np.cos(half) - 1j * delta * s)
        d = -2j * self.params.g * phase * s
        return c, d

    def propagator_sparse(self, t: float) -> scipy.sparse.csr_matrix:
        """Joint unitary as a sparse matrix (at most two entries per column)."""
        n = self.cutoff
        c, d = self._doublet_amplitudes(t)
        rows1 = self._m - 1
        rows = np.concatenate([rows1, n + self._m, rows1, n + self._m, [n], [n - 1]])
        cols = np.concatenate([rows1, rows1, n + self._m, n + self._m, [n], [n - 1]])
        data = np.concatenate([c, -self._root_m * np.conj(d), self._root_m * d,
                               np.conj(c), [1.0], [1.0]])
        # vacuum |0,0> invariant; orphan |1,N-1> frozen, keeps U exactly unitary
        return scipy.sparse.csr_matrix((data, (rows, cols)), shape=(2 * n, 2 * n))

    def propagator(self, t: float) -> np.ndarray:
        """Dense 2N x 2N unitary; couples only |1,n> <-> |0,n+1>."""
        return self.propagator_sparse(t).toarray()

    def coupling(self, t: float) -> scipy.sparse.csr_matrix:
        """Interaction-frame coupling V(t) = g(sigma_+ a e^{i delta t} + h.c.).

        This is the exact generator of :meth:`propagator`:
        dU/dt = -i V(t) U(t).  Evaluated at the instantaneous time because
        the frame rotates at the detuning.
        """
        n = self.cutoff
        phase = np.exp(1j * self.params.delta * t)
        amp = self.params.g * self._root_m * phase
        rows = np.concatenate([self._m - 1, n + self._m])
        cols = np.concatenate([n + self._m, self._m - 1])
        data = np.concatenate([amp, np.conj(amp)])
        return scipy.sparse.csr_matrix((data, (rows, cols)), shape=(2 * n, 2 * n))

    # -- evolution ------------------------------------------------------

    def _initial_product_sparse(self, rho_a0: np.ndarray) -> scipy.sparse.csr_matrix:
        n = self.cutoff
        q = self.bath_populations
        fock = np.arange(n)
        rows = np.concatenate([fock, fock, n + fock, n + fock])
        cols = np.concatenate([fock, n + fock, fock, n + fock])
        data = np.concatenate([rho_a0[0, 0] * q, rho_a0[0, 1] * q,
                               rho_a0[1, 0] * q, rho_a0[1, 1] * q])
        return scipy.sparse.csr_matrix((data, (rows, cols)), shape=(2 * n, 2 * n))

    def evolve_raw(self, rho_a0: np.ndarray, t: float, check_leakage: bool = True) -> np.ndarray:
        """U(t) (rho_A ⊗ rho_B^thermal) U(t)^dag as a dense array.

        The sandwich is a sparse triple product (the propagator and the
        product initial state both carry O(N) entries), assembled dense at
        the end.
        """
        n = self.cutoff
        u = self.propagator_sparse(t)
        rho_sp = (u @ self._initial_product_sparse(np.asarray(rho_a0, dtype=complex))) @ u.getH()
        rho_sp = 0.5 * (rho_sp + rho_sp.getH())
        rho = rho_sp.toarray()
        if check_leakage:
            leak = float(rho[n - 1, n - 1].real + rho[2 * n - 1, 2 * n - 1].real)
            if leak > 10.0 * self.tail_tol:
                raise CutoffLeakageError(
                    f"top Fock level holds population {leak:.3e} at t = {t}; increase the cutoff")
        return rho

    def joint_spectrum(self, rho_ab: np.ndarray) -> np.ndarray:
        """Eigenvalues of the joint state; uses the interleaved band when possible."""
        perm = self._interleave
        a = rho_ab[np.ix_(perm, perm)]
        return _banded_or_dense_eigvals(a, bandwidth=3)

    def bath_spectrum(self, rho_b: np.ndarray):
        """Eigen-decomposition (w, v) of the bath state.

        Diagonal-qubit initial states keep the bath exactly diagonal in the
        Fock basis; that case returns ``v = None`` with the populations in
        Fock order, sparing the dense solve in the common production path.
        """
        diag = np.diag(rho_b)
        off = rho_b - np.diag(diag)
        if np.abs(off).max() < 1e-15:
            return diag.real.copy(), None
        return np.linalg.eigh(rho_b)

    def observables(self, rho_ab: np.ndarray, t: float,
                    joint_eigs: np.ndarray | None = None,
                    bath_eig=None) -> JointObservables:
        n = self.cutoff
        rho_a = _ptrace_bath_raw(rho_ab, n)
        rho_b = _ptrace_system_raw(rho_ab, n)
        s_a = entropy_of_spectrum(np.linalg.eigvalsh(rho_a))
        wb = (bath_eig[0] if bath_eig is not None else self.bath_spectrum(rho_b)[0])
        s_b = entropy_of_spectrum(wb)
        if joint_eigs is None:
            joint_eigs = self.joint_spectrum(rho_ab)
        s_ab = entropy_of_spectrum(joint_eigs)
        e_b = float(np.sum(np.diag(rho_b).real * self.params.omega_b * np.arange(n)))
        e_int = self.interaction_energy(rho_ab, t)
        return JointObservables(
            s_a=s_a, s_b=s_b, s_ab=s_ab, i_ab=s_a + s_b - s_ab,
            e_b=e_b, e_int=e_int, p1=float(rho_a[0, 0].real))

    def interaction_energy(self, rho_ab: np.ndarray, t: float) -> float:
        """Physical coupling energy Tr[rho V(t)]; equals the lab-frame value."""
        n = self.cutoff
        phase = np.exp(1j * self.params.delta * t)
        # Tr[rho V] = 2 g sum_m sqrt(m) Re(e^{i delta t} <0,m|rho|1,m-1>)
        elems = rho_ab[n + self._m, self._m - 1]
        return float(2.0 * self.params.g * np.sum(self._root_m * (phase * elems).real))

    def instantaneous_rates(self, rho_ab: np.ndarray, t: float,
                            bath_eig=None) -> InstantRates:
        """Exact derivatives from d(rho)/dt = -i [V(t), rho]; no differencing."""
        n = self.cutoff
        v = self.coupling(t)
        k = np.asarray(v @ rho_ab)
        # partial traces commute with the commutator assembly
        k_a = _ptrace_bath_raw(k, n)
        k_b = _ptrace_system_raw(k, n)
        rho_dot_a = -1j * (k_a - k_a.conj().T)
        rho_dot_b = -1j * (k_b - k_b.conj().T)
        rho_a = _ptrace_bath_raw(rho_ab, n)
        rho_b = _ptrace_system_raw(rho_ab, n)
        sdot_a = neg_tr_rhodot_log(rho_a, rho_dot_a)
        wb, vb = bath_eig if bath_eig is not None else self.bath_spectrum(rho_b)
        keep = wb > EIG_CLAMP
        if vb is None:
            weights = np.diag(rho_dot_b).real[keep]
        else:
            proj = vb[:, keep]
            weights = np.sum(proj.conj() * (rho_dot_b @ proj), axis=0).real
        sdot_b = float(-np.sum(weights * np.log(wb[keep])))
        edot_b = float(np.sum(np.diag(rho_dot_b).real * self.params.omega_b * np.arange(n)))
        # E_int(t) = Tr[rho V(t)] so dE_int/dt = Tr[rho dV/dt]; the commutator term vanishes
        phase = np.exp(1j * self.params.delta * t)
        elems = rho_ab[n + self._m, self._m - 1]
        edot_int = float(-2.0 * self.params.g * self.params.delta
                         * np.sum(self._root_m * (phase * elems).imag))
        return InstantRates(
            sdot_a=sdot_a, sdot_b=sdot_b, idot_ab=sdot_a + sdot_b,
            edot_b=edot_b, edot_int=edot_int,
            pdot_a=float(rho_dot_a[0, 0].real), rho_dot_a=rho_dot_a)

    def conserved_quantities(self, rho_ab: np.ndarray, t: float) -> dict:
        """Unitarity and conservation diagnostics: S_AB, total energy, excitations."""
        n = self.cutoff
        rho_a = _ptrace_bath_raw(rho_ab, n)
        e_a = self.params.omega_a * float(rho_a[0, 0].real)
        e_b = float(np.sum(np.diag(_ptrace_system_raw(rho_ab, n)).real
                           * self.params.omega_b * np.arange(n)))
        return {
            "s_ab": entropy_of_spectrum(self.joint_spectrum(rho_ab)),
            "energy": e_a + e_b + self.interaction_energy(rho_ab, t),
            "excitation": float(np.sum(np.diag(rho_ab).real * self._excitation_diag)),
        }

    # -- reduced map ----------------------------------------------------

    def map_point(self, t: float) -> ReducedMapPoint:
        """Measure the reduced-map scalars by evolving the three qubit basis
        operators through the exact joint dynamics (linearity makes this
        equivalent to evolving every initial state separately).

        Every factor carries O(N) entries, so the whole extraction is
        sparse; the coherence scalar is read off through the shift matrix
        T with T[N+n, n] = 1, whose product with an operator E has
        diag(E T)[n] = E[n, N+n].
        """
        n = self.cutoff
        u = self.propagator_sparse(t).tocsc()
        u1 = u[:, :n].tocsr()          # images of |1,n>
        u0 = u[:, n:].tocsr()          # images of |0,n>
        qd = scipy.sparse.diags(self.bath_populations.astype(complex))
        e1 = (u1 @ qd) @ u1.getH()     # evolved |1><1| ⊗ rho_B
        e0 = (u0 @ qd) @ u0.getH()     # evolved |0><0| ⊗ rho_B
        ep = (u1 @ qd) @ u0.getH()     # evolved sigma_+ ⊗ rho_B
        v = self.coupling(t)
        k1 = v @ e1
        k0 = v @ e0
        shift = scipy.sparse.csr_matrix(
            (np.ones(n), (n + np.arange(n), np.arange(n))), shape=(2 * n, 2 * n))
        p11 = float(e1.diagonal()[:n].real.sum())
        p10 = float(e0.diagonal()[:n].real.sum())
        kappa = complex((ep @ shift).diagonal().sum())
        dp11 = float(2.0 * k1.diagonal()[:n].imag.sum())
        dp10 = float(2.0 * k0.diagonal()[:n].imag.sum())
        dmat = -1j * ((v @ ep) - (v @ ep.getH()).getH())
        dkappa = complex((dmat @ shift).diagonal().sum())
        return ReducedMapPoint(t=t, p11=p11, p10=p10, kappa=kappa,
                               dp11=dp11, dp10=dp10, dkappa=dkappa)

    def reduced_state(self, rho_a0: np.ndarray, mp: ReducedMapPoint) -> np.ndarray:
        """Apply the measured reduced map to an initial qubit state."""
        p1 = mp.p11 * rho_a0[0, 0].real + mp.p10 * rho_a0[1, 1].real
        c = mp.kappa * rho_a0[0, 1]
        return np.array([[p1, c], [np.conj(c), 1.0 - p1]], dtype=complex)


def _band_from_dense(a: np.ndarray, bandwidth: int) -> np.ndarray | None:
    """Extract the lower band of a Hermitian matrix; None if mass lies outside."""
    n = a.shape[0]
    ab = np.zeros((bandwidth + 1, n), dtype=complex)
    total = float(np.sum(np.abs(a) ** 2))
    band_mass = 0.0
    ab[0] = np.diag(a)
    band_mass += float(np.sum(np.abs(ab[0]) ** 2))
    for k in range(1, bandwidth + 1):
        d = np.diag(a, -k)
        ab[k, : n - k] = d
        band_mass += 2.0 * float(np.sum(np.abs(d) ** 2))
    if total - band_mass > 1e-24:   # off-band mass beyond roundoff
        return None
    return ab


def _banded_or_dense_eigvals(a: np.ndarray, bandwidth: int) -> np.ndarray:
    ab = _band_from_dense(a, bandwidth)
    if ab is None:
        return np.linalg.eigvalsh(a)
    return scipy.linalg.eigvals_banded(ab, lower=True)


def neg_tr_rhodot_log(rho: np.ndarray, rho_dot: np.ndarray,
                      clamp: float = EIG_CLAMP) -> float:
    """-Tr[rho_dot ln rho] with the pure-state divergence emitted as ±inf.

    A vanishing eigenvalue of ``rho`` makes the logarithm divergent; the
    result is infinite unless ``rho_dot`` has no weight along that
    direction (then the direction contributes nothing).
    """
    w, v = np.linalg.eigh(rho)
    weights = np.einsum("ij,jk,ki->i", v.conj().T, rho_dot, v).real
    small = w <= clamp
    if np.any(small):
        drift = weights[small]
        pos = drift[drift > 1e-12].sum()
        neg = drift[drift < -1e-12].sum()
        if pos > 0.0:
            return math.inf
        if neg < 0.0:
            return -math.inf
    keep = ~small
    return float(-np.sum(weights[keep] * np.log(w[keep])))


# -- module-level operations (thin wrappers over JointDynamics) ----------


def jc_propagator(params: ModelParams, cutoff: int, t: float) -> np.ndarray:
    """Closed-form joint propagator of dimension 2 * cutoff at time t >= 0."""
    if t < 0.0:
        raise ConfigError("propagator time must be non-negative")
    return JointDynamics(params, cutoff).propagator(t)


def evolve_joint(rho_a0: DensityMatrix, params: ModelParams,
                 cfg: NumericsConfig, t: float) -> JointState:
    """Evolve rho_A(0) ⊗ thermal bath to time t through the exact propagator."""
    cutoff = resolve_cutoff(params, cfg)
    dyn = JointDynamics(params, cutoff, cfg.tail_tol)
    rho = dyn.evolve_raw(rho_a0.mat if isinstance(rho_a0, DensityMatrix) else rho_a0, t)
    eigs = dyn.joint_spectrum(rho)
    state = DensityMatrix(rho, _min_eig=float(eigs.min()))
    return JointState(params=params, cutoff=cutoff, rho_ab=state, time=t)


def joint_observables(state: JointState) -> JointObservables:
    """Entropies, mutual information, bath and coupling energies, population."""
    dyn = JointDynamics(state.params, state.cutoff)
    return dyn.observables(state.rho_ab.mat, state.time)


def instantaneous_rates(state: JointState) -> InstantRates:
    """Exact instantaneous derivatives of the joint observables."""
    dyn = JointDynamics(state.params, state.cutoff)
    return dyn.instantaneous_rates(state.rho_ab.mat, state.time)


@dataclass(frozen=True)
class ObservableRates:
    """Finite-difference derivatives of an observable series on a uniform grid."""

    sdot_a: np.ndarray
    sdot_b: np.ndarray
    idot_ab: np.ndarray
    edot_b: np.ndarray
    edot_int: np.ndarray
    pdot_a: np.ndarray


def finite_difference(values: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order first derivative on a uniform grid (one-sided at the ends)."""
    y = np.asarray(values, dtype=float)
    if y.size < 5:
        raise ValueError("need at least 5 grid points for the 4th-order stencil")
    d = np.empty_like(y)
    d[2:-2] = (y[:-4] - 8.0 * y[1:-3] + 8.0 * y[3:-1] - y[4:]) / (12.0 * h)
    d[0] = (-25.0 * y[0] + 48.0 * y[1] - 36.0 * y[2] + 16.0 * y[3] - 3.0 * y[4]) / (12.0 * h)
    d[1] = (-3.0 * y[0] - 10.0 * y[1] + 18.0 * y[2] - 6.0 * y[3] + y[4]) / (12.0 * h)
    d[-2] = (3.0 * y[-1] + 10.0 * y[-2] - 18.0 * y[-3] + 6.0 * y[-4] - y[-5]) / (12.0 * h)
    d[-1] = (25.0 * y[-1] - 48.0 * y[-2] + 36.0 * y[-3] - 16.0 * y[-4] + 3.0 * y[-5]) / (12.0 * h)
    return d


def time_derivative_observables(series: list[JointObservables], h: float) -> ObservableRates:
    """Finite-difference rates of a :func:`joint_observables` series."""
    if h <= 0.0:
        raise ValueError("grid spacing must be positive")
    cols = {name: np.array([getattr(o, name) for o in series])
            for name in ("s_a", "s_b", "i_ab", "e_b", "e_int", "p1")}
    return ObservableRates(
        sdot_a=finite_difference(cols["s_a"], h),
        sdot_b=finite_difference(cols["s_b"], h),
        idot_ab=finite_difference(cols["i_ab"], h),
        edot_b=finite_difference(cols["e_b"], h),
        edot_int=finite_difference(cols["e_int"], h),
        pdot_a=finite_difference(cols["p1"], h),
    )
