"""Trajectory integration for the two model classes, plus inequality checks.

Both systems are delay equations integrated by the method of steps: the
time step dt divides the history-grid spacing (hence the delay r), so every
delayed lookup lands in an already-resolved interval.  The integrator is
classical RK4; off-step delayed values come from cubic Hermite interpolation
of the stored (state, derivative) pairs, which preserves 4th order.

Model classes:
  * scalar retarded reaction-diffusion on (0, pi) with Dirichlet walls,
    reduced to sine-modal ODEs  y_n' = -(n^2+a) y_n - b y_n(t-r) + fhat_n
  * finite-dimensional retarded equations with discrete delays, an optional
    distributed kernel, and a pointwise delayed nonlinearity.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .core import GridSpec, HistorySegment, interpolate, sup_norm
from .errors import (ConfigError, DegeneratePairError, IntegrationError,
                     ShapeError)

BLOWUP_NORM = 1e6


# ---------------------------------------------------------------------------
# Nonlinearities
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NonlinearitySpec:
    """Pointwise nonlinearity family: zero, kappa*tanh(u), or
    kappa*tanh(u) + offset (affine-plus-saturation)."""

    kind: str = "zero"
    kappa: float = 0.0
    offset: float = 0.0

    def __post_init__(self):
        if self.kind not in ("zero", "tanh", "affine_tanh"):
            raise ConfigError(f"unknown nonlinearity kind {self.kind!r}")
        if self.kind == "zero" and (self.kappa or self.offset):
            raise ConfigError("zero nonlinearity takes no parameters")
        if self.kind == "tanh" and self.offset:
            raise ConfigError("tanh nonlinearity has no offset; use affine_tanh")
        if self.kappa < 0:
            raise ConfigError("kappa must be nonnegative")

    @property
    def L_f(self) -> float:
        """Lipschitz constant (|tanh'| <= 1)."""
        return 0.0 if self.kind == "zero" else self.kappa

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero"

    def __call__(self, u: np.ndarray) -> np.ndarray:
        if self.kind == "zero":
            return np.zeros_like(u)
        out = self.kappa * np.tanh(u)
        if self.kind == "affine_tanh":
            out = out + self.offset
        return out


# ---------------------------------------------------------------------------
# Parameter blocks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RDEParams:
    """Scalar retarded reaction-diffusion equation in sine-modal form."""

    a: float
    b: float
    r: float
    num_modes: int
    nonlinearity: NonlinearitySpec = NonlinearitySpec()

    def __post_init__(self):
        # b = 0 (no delayed linear term) is allowed for diagnostic runs
        if not (self.a > 0 and self.b >= 0):
            raise ConfigError("need a > 0 and b >= 0")
        if not self.b - self.a < 1:
            raise ConfigError(f"standing assumption b - a < 1 violated "
                              f"({self.b} - {self.a} >= 1)")
        if not self.r > 0:
            raise ConfigError("delay r must be positive")
        if self.num_modes < 1:
            raise ConfigError("num_modes must be >= 1")

    @property
    def L_f(self) -> float:
        return self.nonlinearity.L_f

    def sine_matrix(self) -> np.ndarray:
        """Synthesis matrix S_{jn} = sin(n x_j) on M = 2N+1 interior points."""
        N = self.num_modes
        M = 2 * N + 1
        j = np.arange(1, M + 1)
        n = np.arange(1, N + 1)
        return np.sin(np.outer(j * math.pi / (M + 1), n))

    def c1(self) -> float:
        """Modal-space norm of f(0) (the constant c1 of the envelope)."""
        if self.nonlinearity.is_zero:
            return 0.0
        S = self.sine_matrix()
        M = S.shape[0]
        w = self.nonlinearity(np.zeros(M))
        fhat = (2.0 / (M + 1)) * (S.T @ w)
        from .core import MODAL_SCALE
        return MODAL_SCALE * float(np.linalg.norm(fhat))


@dataclass(frozen=True)
class DichotomyInputs:
    """User-supplied dichotomy data for the abstract retarded system."""

    K0: float
    gamma: float
    beta: float
    K: float
    m: int

    def __post_init__(self):
        if not (self.K0 > 0 and self.K > 0):
            raise ConfigError("need K0 > 0 and K > 0")
        if not self.gamma > 0:
            raise ConfigError("need gamma > 0")
        if not self.beta < -self.gamma:
            raise ConfigError(f"need beta < -gamma, got beta={self.beta}")
        if self.m < 1:
            raise ConfigError("projection dimension m must be >= 1")


@dataclass(frozen=True)
class RFDEParams:
    """Finite-dimensional retarded equation with discrete delays, an
    optional distributed kernel A(t, theta), and a delayed nonlinearity."""

    matrices: tuple          # tuple of (n, n) arrays
    delays: tuple            # omega_k in [0, r], strictly increasing
    r: float
    kernel: object = None    # callable (t, theta) -> (n, n) array, or None
    nonlinearity: NonlinearitySpec = NonlinearitySpec()
    dichotomy: DichotomyInputs | None = None

    def __post_init__(self):
        mats = tuple(np.asarray(A, dtype=float) for A in self.matrices)
        if not mats:
            raise ConfigError("need at least one delay matrix")
        n = mats[0].shape[0]
        for A in mats:
            if A.shape != (n, n):
                raise ShapeError("all matrices must be square of equal size")
        for A in mats:
            A.setflags(write=False)
        object.__setattr__(self, "matrices", mats)
        oms = tuple(float(w) for w in self.delays)
        if len(oms) != len(mats):
            raise ConfigError("need one delay per matrix")
        if any(w2 <= w1 for w1, w2 in zip(oms, oms[1:])):
            raise ConfigError("delays must be strictly increasing")
        if not (oms[0] >= 0 and oms[-1] <= self.r):
            raise ConfigError("delays must lie in [0, r]")
        if not self.r > 0:
            raise ConfigError("delay r must be positive")
        object.__setattr__(self, "delays", oms)

    @property
    def dim(self) -> int:
        return self.matrices[0].shape[0]

    @property
    def L_f(self) -> float:
        return self.nonlinearity.L_f


# ---------------------------------------------------------------------------
# Trajectories
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Trajectory:
    """States sampled every history-grid spacing, with the initial history
    prepended so any sample time yields a full HistorySegment."""

    grid: GridSpec
    times: np.ndarray = field(repr=False)   # from -r to T, step = grid.spacing
    states: np.ndarray = field(repr=False)  # (len(times), value_dim)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        s = np.asarray(self.states, dtype=float)
        if s.shape != (len(t), self.grid.value_dim):
            raise ShapeError("states shape mismatch")
        t.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "states", s)

    def _index(self, t: float) -> int:
        h = self.grid.spacing
        i = round((t - self.times[0]) / h)
        if not (0 <= i < len(self.times)) or abs(
                self.times[i] - t) > 1e-9 * max(1.0, abs(t)) + 1e-12:
            raise ConfigError(f"time {t} is not a sample time")
        return int(i)

    def sample_times(self) -> np.ndarray:
        """Times t >= 0 at which a full history segment is available."""
        return self.times[self.grid.num_nodes - 1:]

    def segment(self, t: float) -> HistorySegment:
        i = self._index(t)
        n = self.grid.num_nodes
        if i < n - 1:
            raise ConfigError(f"no full history before t=0 (asked {t})")
        return HistorySegment(self.grid, self.states[i - n + 1:i + 1])

    def norms(self) -> np.ndarray:
        """Segment sup-norm at each sample time >= 0."""
        n = self.grid.num_nodes
        node_norms = self.grid.value_space_norm(self.states)
        return np.array([node_norms[i - n + 1:i + 1].max()
                         for i in range(n - 1, len(self.times))])

    def to_csv(self, path_or_buf, extra_columns: dict | None = None) -> None:
        """Rows: time, segment sup-norm, leading state coordinates."""
        own = isinstance(path_or_buf, (str, bytes))
        f = open(path_or_buf, "w", newline="") if own else path_or_buf
        lead = min(4, self.grid.value_dim)
        extra = extra_columns or {}
        try:
            w = csv.writer(f)
            w.writerow(["time", "sup_norm"]
                       + [f"y{k + 1}" for k in range(lead)]
                       + list(extra))
            ts = self.sample_times()
            sn = self.norms()
            rows = self.states[self.grid.num_nodes - 1:]
            for k, (t, nn, row) in enumerate(zip(ts, sn, rows)):
                w.writerow([repr(float(t)), repr(float(nn))]
                           + [repr(float(x)) for x in row[:lead]]
                           + [repr(float(col[k])) for col in extra.values()])
        finally:
            if own:
                f.close()


# ---------------------------------------------------------------------------
# Core integrator
# ---------------------------------------------------------------------------

def _check_steps(r: float, num_nodes: int, dt: float) -> tuple[int, int]:
    """dt must divide the history spacing h = r/(num_nodes-1) exactly."""
    h = r / (num_nodes - 1)
    k = h / dt
    ki = round(k)
    if ki < 1 or abs(k - ki) > 1e-9 * ki:
        raise ConfigError(
            f"dt={dt} must divide the history spacing {h} exactly")
    return ki, num_nodes - 1


def _integrate(rhs, phi, grid: GridSpec, T: float, dt: float) -> Trajectory:
    """RK4 with dense (y, dy) storage for Hermite delayed lookups.

    rhs(t, y, lookup) where lookup(tau) returns the state at any past time
    tau <= t (clamped within the current stage's resolved window).
    phi: HistorySegment or callable theta -> value vector on [-r, 0].
    """
    r, d = grid.delay_r, grid.value_dim
    steps_per_node, _ = _check_steps(r, grid.num_nodes, dt)
    n_steps = round(T / dt)
    if abs(n_steps * dt - T) > 1e-9 * max(1.0, T) or n_steps < 1:
        raise ConfigError(f"T={T} must be a positive multiple of dt={dt}")

    if callable(phi):
        phi_fn = lambda th: np.broadcast_to(
            np.asarray(phi(th), dtype=float), (d,))
        seg = HistorySegment.from_function(grid, phi)
    else:
        if phi.grid != grid:
            raise ShapeError("initial history grid mismatch")
        seg = phi
        phi_fn = lambda th: interpolate(phi, th)

    ys = np.empty((n_steps + 1, d))
    dys = np.empty((n_steps + 1, d))
    ys[0] = seg.values[-1]

    def lookup(tau: float) -> np.ndarray:
        if tau <= 1e-12:
            return np.asarray(phi_fn(min(0.0, max(-r, tau))))
        x = tau / dt
        i = int(math.floor(x))
        s = x - i
        if s < 1e-10:
            return ys[i]
        if s > 1.0 - 1e-10:
            return ys[i + 1]
        # cubic Hermite on [t_i, t_{i+1}]
        h00 = (1 + 2 * s) * (1 - s) ** 2
        h10 = s * (1 - s) ** 2
        h01 = s * s * (3 - 2 * s)
        h11 = s * s * (s - 1)
        return (h00 * ys[i] + h10 * dt * dys[i]
                + h01 * ys[i + 1] + h11 * dt * dys[i + 1])

    dys[0] = rhs(0.0, ys[0], lookup)
    for k in range(n_steps):
        t = k * dt
        y = ys[k]
        k1 = dys[k]
        k2 = rhs(t + dt / 2, y + dt / 2 * k1, lookup)
        k3 = rhs(t + dt / 2, y + dt / 2 * k2, lookup)
        k4 = rhs(t + dt, y + dt * k3, lookup)
        ys[k + 1] = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(ys[k + 1])) or np.max(
                np.abs(ys[k + 1])) > BLOWUP_NORM:
            raise IntegrationError(f"blow-up at t={t + dt:.6g}")
        dys[k + 1] = rhs(t + dt, ys[k + 1], lookup)

    # assemble trajectory at history-grid spacing, prepending the history
    n_hist = grid.num_nodes - 1
    n_out = n_steps // steps_per_node
    times = np.concatenate([grid.nodes()[:-1],
                            np.arange(n_out + 1) * grid.spacing])
    states = np.concatenate([seg.values[:-1], ys[::steps_per_node]])
    return Trajectory(grid, times, states)


# ---------------------------------------------------------------------------
# Model-specific right-hand sides
# ---------------------------------------------------------------------------

def _rde_rhs(params: RDEParams):
    N = params.num_modes
    decay = -(np.arange(1, N + 1) ** 2 + params.a)
    S = params.sine_matrix()
    M = S.shape[0]
    fac = 2.0 / (M + 1)
    nl = params.nonlinearity
    r = params.r

    def rhs(t, y, lookup):
        yd = lookup(t - r)
        out = decay * y - params.b * yd
        if not nl.is_zero:
            out = out + fac * (S.T @ nl(S @ yd))
        return out

    return rhs


def _rfde_rhs(params: RFDEParams, grid: GridSpec):
    r = params.r
    nl = params.nonlinearity
    instant = [(A, w) for A, w in zip(params.matrices, params.delays)
               if w == 0.0]
    delayed = [(A, w) for A, w in zip(params.matrices, params.delays)
               if w > 0.0]
    if params.kernel is not None:
        thetas = grid.nodes()
        wts = _simpson_weights(len(thetas)) * grid.spacing
    kern = params.kernel

    def rhs(t, y, lookup):
        out = np.zeros_like(y)
        for A, _ in instant:
            out = out + A @ y
        for A, w in delayed:
            out = out + A @ lookup(t - w)
        if kern is not None:
            acc = np.zeros_like(y)
            for th, wq in zip(thetas, wts):
                u = y if th == 0.0 else lookup(t + th)
                acc = acc + wq * (np.asarray(kern(t, th), dtype=float) @ u)
            out = out + acc
        if not nl.is_zero:
            out = out + nl(lookup(t - r))
        return out

    return rhs


def _simpson_weights(n: int) -> np.ndarray:
    """Composite Simpson weights for n nodes; the final interval falls back
    to trapezoid when the interval count is odd."""
    if n < 2:
        raise ConfigError("quadrature needs >= 2 nodes")
    w = np.zeros(n)
    intervals = n - 1
    pairs = intervals // 2
    for p in range(pairs):
        i = 2 * p
        w[i] += 1.0 / 3.0
        w[i + 1] += 4.0 / 3.0
        w[i + 2] += 1.0 / 3.0
    if intervals % 2 == 1:
        w[-2] += 0.5
        w[-1] += 0.5
    return w


# ---------------------------------------------------------------------------
# Public simulators
# ---------------------------------------------------------------------------

def rde_grid(params: RDEParams, num_nodes: int) -> GridSpec:
    return GridSpec(delay_r=params.r, num_nodes=num_nodes,
                    value_dim=params.num_modes, value_norm="modal")


def simulate_rde(params: RDEParams, phi, T: float, dt: float,
                 grid: GridSpec | None = None) -> Trajectory:
    """Integrate the modal reaction-diffusion system from history phi."""
    if grid is None:
        if not isinstance(phi, HistorySegment):
            raise ConfigError("grid required when phi is a callable")
        grid = phi.grid
    if grid.value_dim != params.num_modes or grid.value_norm != "modal":
        raise ShapeError("grid must be modal with value_dim == num_modes")
    if abs(grid.delay_r - params.r) > 1e-12 * params.r:
        raise ShapeError("grid delay must equal params.r")
    return _integrate(_rde_rhs(params), phi, grid, T, dt)


def simulate_rfde(params: RFDEParams, phi, sigma: float, T: float, dt: float,
                  grid: GridSpec | None = None) -> Trajectory:
    """Integrate the finite-dimensional retarded system from time sigma.

    Output times are relative to sigma (the trajectory starts at 0); the
    kernel and any explicit time dependence see the absolute time sigma + t.
    """
    if grid is None:
        if not isinstance(phi, HistorySegment):
            raise ConfigError("grid required when phi is a callable")
        grid = phi.grid
    if grid.value_dim != params.dim or grid.value_norm != "euclidean":
        raise ShapeError("grid must be euclidean with value_dim == system dim")
    if abs(grid.delay_r - params.r) > 1e-12 * params.r:
        raise ShapeError("grid delay must equal params.r")
    for w in params.delays:
        if w != 0.0 and w < dt - 1e-12:
            raise ConfigError(f"delay {w} must be 0 or >= dt")
    base = _rfde_rhs(params, grid)
    if sigma:
        # the kernel sees absolute time; lookups stay trajectory-relative
        def shifted(t, y, lk):
            return base(sigma + t, y, lambda tau_abs: lk(tau_abs - sigma))
    else:
        shifted = base
    return _integrate(shifted, phi, grid, T, dt)


def linear_semigroup(params, phi, T: float, dt: float,
                     grid: GridSpec | None = None, sigma: float = 0.0):
    """The solution semigroup with the nonlinearity switched off."""
    from dataclasses import replace
    stripped = replace(params, nonlinearity=NonlinearitySpec())
    if isinstance(params, RDEParams):
        return simulate_rde(stripped, phi, T, dt, grid)
    return simulate_rfde(stripped, phi, sigma, T, dt, grid)


# ---------------------------------------------------------------------------
# Inequality checks
# ---------------------------------------------------------------------------

def check_squeeze(traj1: Trajectory, traj2: Trajectory, decomp,
                  sc) -> dict:
    """Verify the two-sided squeezing inequalities along a trajectory pair.

    At each sample time t: ||P w_t|| <= M1 e^{l0 t} ||w_0|| and
    ||Q w_t|| <= (M2 e^{l1 t} + M3 e^{l0 t}) ||w_0||, where w = difference.

    decomp is either a SpectralDecomposition or any callable
    (segment, "P"|"Q") -> segment supplying the projection pair.
    """
    if callable(decomp):
        project = lambda d, h, which: d(h, which)
    else:
        from .spectral import project
    if traj1.grid != traj2.grid:
        raise ShapeError("trajectory grids differ")
    times = traj1.sample_times()
    if len(times) != len(traj2.sample_times()):
        raise ShapeError("trajectory lengths differ")
    w0 = traj1.segment(times[0]) - traj2.segment(times[0])
    w0n = sup_norm(w0)
    if w0n == 0.0:
        raise DegeneratePairError("zero initial separation")
    rows = []
    violations = []
    for t in times:
        w = traj1.segment(t) - traj2.segment(t)
        pn = sup_norm(project(decomp, w, "P"))
        qn = sup_norm(project(decomp, w, "Q"))
        rhs_p = sc.M1 * math.exp(sc.lambda0 * t) * w0n
        rhs_q = (sc.M2 * math.exp(sc.lambda1 * t)
                 + sc.M3 * math.exp(sc.lambda0 * t)) * w0n
        slack_p = rhs_p - pn
        slack_q = rhs_q - qn
        rows.append((float(t), pn, qn, rhs_p, rhs_q))
        if slack_p < 0:
            violations.append({"time": float(t), "part": "P",
                               "norm": pn, "rhs": rhs_p})
        if slack_q < 0:
            violations.append({"time": float(t), "part": "Q",
                               "norm": qn, "rhs": rhs_q})
    slacks_p = [r[3] - r[1] for r in rows]
    slacks_q = [r[4] - r[2] for r in rows]
    return {
        "initial_separation": w0n,
        "num_samples": len(rows),
        "min_slack_P": min(slacks_p),
        "min_slack_Q": min(slacks_q),
        "mean_slack_P": sum(slacks_p) / len(rows),
        "mean_slack_Q": sum(slacks_q) / len(rows),
        "violations": violations,
        "passed": not violations,
        "rows": rows,
    }


def check_absorbing(traj: Trajectory, radius: float) -> dict:
    """First entry into the radius ball and positive-invariance afterwards."""
    if not radius > 0:
        raise ConfigError("radius must be positive")
    times = traj.sample_times()
    norms = traj.norms()
    inside = norms <= radius
    if not inside.any():
        return {"radius": float(radius), "entered": False,
                "entry_time": None, "exits_after_entry": False,
                "horizon": float(times[-1])}
    first = int(np.argmax(inside))
    exits = bool((~inside[first:]).any())
    return {"radius": float(radius), "entered": True,
            "entry_time": float(times[first]),
            "exits_after_entry": exits,
            "max_norm_after_entry": float(norms[first:].max()),
            "horizon": float(times[-1])}
