"""Entropy evolutionary-form coefficients, commutator and classification.

The entropy gradient projected on the accompanying frame of a trajectory
defines a 1-form with an along-trajectory coefficient A1 (from the energy
balance; zero for inviscid flow, transport-driven otherwise) and a normal
coefficient A_nu (from the momentum balance in Crocco form).  The form's
commutator

    K = dA_nu/dxi1 - dA1/dxi_nu

is the nonequilibrium indicator: any term feeding it marks an internal
force and an instability source, and its attribution names the source.

The normal coefficient is assembled from per-term *vector* fields
G_term(x, y) so that A_nu = G . n on the frame normal; the commutator is
then evaluated by contracting the node-field Jacobian of G with the frame
(t . grad(G . n) with the frame held fixed at each sample, dropping
manifold-deformation terms).  This keeps every derivative on the grid
stencils, where it is second-order accurate, instead of differencing
bilinear-interpolated samples, which would cost an order.

Sign conventions: the momentum balance in Crocco form reads
T grad s = grad h0 - U x rot U - F + dU/dt (the ``CONSISTENT`` vortical
sign, which the steady homentropic shear-flow solution validates);
``PAPER_LITERAL`` keeps the + vortical sign for fidelity with the source
formulation, and is retained behind the ``sign`` switch.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from .errors import MissingSnapshots, ShapeMismatch
from .fields import (
    AccompanyingFrame,
    FieldSet,
    StructuredGrid2D,
    Trajectory,
    curl2d,
    gradient,
    interp_bilinear,
    time_derivative,
)
from .thermo import DerivedState, GasModel, derive_fields

__all__ = [
    "ATTRIBUTION_ORDER",
    "CroccoSign",
    "A1Variant",
    "ForceKind",
    "ForceModel",
    "TransportModel",
    "NormalCoefficient",
    "A1Coefficient",
    "FormCoefficients",
    "Commutator",
    "FlowRegime",
    "LagrangeReport",
    "EquilibriumClass",
    "crocco_normal_coefficient",
    "ideal_a1",
    "viscous_a1",
    "commutator",
    "lagrange_criterion",
    "classify_regime",
    "equilibrium_classifier",
    "truncation_estimate",
    "equilibrium_tolerance",
]

ATTRIBUTION_ORDER = (
    "nonstationarity",
    "vortical",
    "force",
    "h0_gradient",
    "heatflux_divergence",
    "conduction_production",
    "viscous_production",
)


class CroccoSign(enum.Enum):
    CONSISTENT = "consistent"
    PAPER_LITERAL = "paper"


class A1Variant(enum.Enum):
    PAPER_LITERAL = "paper"
    STANDARD_PRODUCTION = "standard"


class ForceKind(enum.Enum):
    NONE = "none"
    POTENTIAL = "potential"
    TABULATED = "tabulated"


@dataclass(frozen=True)
class ForceModel:
    """Mass force specification: none, potential phi (F = -grad phi),
    or tabulated node components."""

    kind: ForceKind = ForceKind.NONE
    phi: Optional[np.ndarray] = None
    fx: Optional[np.ndarray] = None
    fy: Optional[np.ndarray] = None

    @classmethod
    def none(cls):
        return cls(ForceKind.NONE)

    @classmethod
    def potential(cls, phi):
        return cls(ForceKind.POTENTIAL, phi=np.asarray(phi, float))

    @classmethod
    def tabulated(cls, fx, fy):
        return cls(ForceKind.TABULATED,
                   fx=np.asarray(fx, float), fy=np.asarray(fy, float))

    def validate(self, grid: StructuredGrid2D):
        if self.kind is ForceKind.POTENTIAL:
            grid.check_conforms(self.phi, "phi")
        elif self.kind is ForceKind.TABULATED:
            grid.check_conforms(self.fx, "fx")
            grid.check_conforms(self.fy, "fy")

    def components(self, grid: StructuredGrid2D):
        """(Fx, Fy) node fields, or None when no force is modeled."""
        if self.kind is ForceKind.NONE:
            return None
        if self.kind is ForceKind.POTENTIAL:
            px, py = gradient(self.phi, grid)
            return -px, -py
        return self.fx, self.fy


@dataclass(frozen=True)
class TransportModel:
    """Newtonian/Fourier transport closure: q = -k grad T, Stokes stress."""

    mu: float
    k: float

    def __post_init__(self):
        if self.mu < 0.0 or self.k < 0.0:
            raise ValueError("transport coefficients must be nonnegative")


@dataclass(frozen=True)
class NormalCoefficient:
    """A_nu sampled along a trajectory, split into its additive terms.

    ``piece_fields`` holds the per-term vector node fields the samples were
    projected from; commutator evaluation differentiates these directly.
    """

    samples: np.ndarray
    pieces: Dict[str, np.ndarray]
    piece_fields: Optional[Dict[str, Tuple[np.ndarray, np.ndarray]]] = None
    sign: CroccoSign = CroccoSign.CONSISTENT

    @classmethod
    def from_samples(cls, samples, name: str = "prescribed"):
        samples = np.asarray(samples, float)
        return cls(samples=samples, pieces={name: samples}, piece_fields=None)


@dataclass(frozen=True)
class A1Coefficient:
    """Along-trajectory coefficient as a node field plus its terms.

    ``field`` is None for the inviscid (identically zero) coefficient.
    """

    field: Optional[np.ndarray]
    pieces: Dict[str, np.ndarray]
    variant: Optional[A1Variant] = None

    @property
    def is_zero(self) -> bool:
        return self.field is None

    def sample_along(self, traj: Trajectory, grid: StructuredGrid2D) -> np.ndarray:
        if self.is_zero:
            return np.zeros(len(traj))
        return np.array([interp_bilinear(self.field, grid, p) for p in traj.points])


@dataclass(frozen=True)
class FormCoefficients:
    """The evolutionary 1-form's coefficient pair for one trajectory."""

    anu: NormalCoefficient
    a1: A1Coefficient
    crocco_sign: CroccoSign = CroccoSign.CONSISTENT


@dataclass(frozen=True)
class Commutator:
    """K samples along a trajectory and their source attribution.

    The attribution components sum to K (both are evaluated through the
    same linear derivative operators, so they agree to rounding).
    """

    xi: np.ndarray
    K: np.ndarray
    attribution: Dict[str, np.ndarray]


class FlowRegime(enum.Enum):
    HYPERBOLIC = "hyperbolic"
    ELLIPTIC = "elliptic"
    SONIC = "sonic"


@dataclass(frozen=True)
class LagrangeReport:
    """Eddy-free stable-flow conditions: all three must hold."""

    stationary: bool
    potential: bool
    simply_connected: bool

    @property
    def predicts_equilibrium(self) -> bool:
        return self.stationary and self.potential and self.simply_connected


@dataclass(frozen=True)
class EquilibriumClass:
    kind: str  # "locally_equilibrium" | "nonequilibrium"
    dominant: Optional[str]
    magnitude: float


# ---------------------------------------------------------------------------
# coefficient construction


def _sample_vector(fx, fy, grid, points):
    sx = np.array([interp_bilinear(fx, grid, p) for p in points])
    sy = np.array([interp_bilinear(fy, grid, p) for p in points])
    return sx, sy


def crocco_normal_coefficient(
    fs: FieldSet,
    traj: Trajectory,
    frame: AccompanyingFrame,
    forces: ForceModel,
    m: GasModel,
    sign: CroccoSign = CroccoSign.CONSISTENT,
    time_index: int = 0,
    include_time_term: Optional[bool] = None,
) -> NormalCoefficient:
    """Normal coefficient A_nu = (grad h0 -/+ U x rot U - F + dU/dt) . n / T.

    The vortical sign is minus for ``CONSISTENT`` (the momentum-balance
    identity) and plus for ``PAPER_LITERAL``.  The time term needs at least
    two snapshots; ``include_time_term=None`` enables it automatically when
    a time series is attached.  The field set's primary arrays should hold
    the state at ``time_index`` so the spatial and temporal terms refer to
    the same instant.

    Raises
    ------
    MissingSnapshots
        When the time term is requested explicitly without a time series.
    """
    grid = fs.grid
    forces.validate(grid)
    derived = derive_fields(fs.rho, fs.p, m)
    T = derived["T"]
    h0 = derived["h"] + 0.5 * (fs.u ** 2 + fs.v ** 2)

    has_series = fs.snapshots is not None and len(fs.snapshots) >= 2
    if include_time_term is None:
        include_time_term = has_series
    elif include_time_term and not has_series:
        raise MissingSnapshots("time term requested but no snapshot series")

    vort_sign = 1.0 if sign is CroccoSign.PAPER_LITERAL else -1.0

    piece_fields = {}
    gx, gy = gradient(h0, grid)
    piece_fields["h0_gradient"] = (gx / T, gy / T)

    omega = curl2d(fs.u, fs.v, grid)
    piece_fields["vortical"] = (vort_sign * fs.v * omega / T,
                                vort_sign * (-fs.u) * omega / T)

    fcomp = forces.components(grid)
    if fcomp is not None:
        piece_fields["force"] = (-fcomp[0] / T, -fcomp[1] / T)

    if include_time_term:
        dudt = time_derivative(fs, "u", time_index)
        dvdt = time_derivative(fs, "v", time_index)
        piece_fields["nonstationarity"] = (dudt / T, dvdt / T)

    pieces = {}
    for name, (fx, fy) in piece_fields.items():
        sx, sy = _sample_vector(fx, fy, grid, traj.points)
        pieces[name] = sx * frame.normal[:, 0] + sy * frame.normal[:, 1]
    total = np.sum(list(pieces.values()), axis=0)
    return NormalCoefficient(samples=total, pieces=pieces,
                             piece_fields=piece_fields, sign=sign)


def ideal_a1() -> A1Coefficient:
    """The inviscid along-trajectory coefficient: identically zero."""
    return A1Coefficient(field=None, pieces={})


def viscous_a1(
    fs: FieldSet,
    tm: TransportModel,
    m: GasModel,
    variant: A1Variant = A1Variant.PAPER_LITERAL,
) -> A1Coefficient:
    """Transport contribution to the along-trajectory coefficient.

    ``PAPER_LITERAL`` evaluates, term by term,

        (1/rho) d/dx_i(-q_i/T) - (q_i/(rho T)) dT/dx_i
            + (tau_ki/rho) du_i/dx_k

    with Fourier flux and Newtonian/Stokes stress.  ``STANDARD_PRODUCTION``
    replaces the last two terms by the entropy-production forms
    k |grad T|^2/(rho T^2) and tau:grad u/(rho T).  The two production
    terms are returned as separate pieces; both are evaluated through
    sum-of-squares groupings and are nonnegative nodewise in either
    variant.
    """
    if fs.grid.nx < 5 or fs.grid.ny < 5:
        raise ShapeMismatch("need nx, ny >= 5 to resolve second derivatives")
    grid = fs.grid
    derived = derive_fields(fs.rho, fs.p, m)
    T = derived["T"]
    rho = fs.rho

    Tx, Ty = gradient(T, grid)
    qx, qy = -tm.k * Tx, -tm.k * Ty

    d1x, _ = gradient(-qx / T, grid)
    _, d1y = gradient(-qy / T, grid)
    heatflux_divergence = (d1x + d1y) / rho

    conduction = (tm.k * Tx * Tx + tm.k * Ty * Ty) / (rho * T)

    ux, uy = gradient(fs.u, grid)
    vx, vy = gradient(fs.v, grid)
    # tau : grad u regrouped as a sum of squares (Stokes hypothesis)
    tau_ddu = tm.mu * ((4.0 / 3.0) * (ux - 0.5 * vy) ** 2 + vy ** 2
                       + (uy + vx) ** 2)
    viscous = tau_ddu / rho

    if variant is A1Variant.STANDARD_PRODUCTION:
        conduction = conduction / T
        viscous = viscous / T

    pieces = {
        "heatflux_divergence": heatflux_divergence,
        "conduction_production": conduction,
        "viscous_production": viscous,
    }
    total = heatflux_divergence + conduction + viscous
    return A1Coefficient(field=total, pieces=pieces, variant=variant)


# ---------------------------------------------------------------------------
# commutator


def _frame_contraction(fx, fy, grid, traj, frame):
    """t . grad(F . n) per sample with the frame frozen at the sample."""
    dxx, dxy = gradient(fx, grid)
    dyx, dyy = gradient(fy, grid)
    out = np.empty(len(traj))
    for i, p in enumerate(traj.points):
        jac = np.array([
            [interp_bilinear(dxx, grid, p), interp_bilinear(dyx, grid, p)],
            [interp_bilinear(dxy, grid, p), interp_bilinear(dyy, grid, p)],
        ])  # jac[a, b] = dF_b/dx_a
        out[i] = frame.tangent[i] @ jac @ frame.normal[i]
    return out


def _normal_derivative(field, grid, traj, frame):
    """n . grad(field) per sample."""
    gx, gy = gradient(field, grid)
    sx, sy = _sample_vector(gx, gy, grid, traj.points)
    return sx * frame.normal[:, 0] + sy * frame.normal[:, 1]


def commutator(
    fc: FormCoefficients,
    traj: Trajectory,
    frame: AccompanyingFrame,
    fs: FieldSet,
) -> Commutator:
    """K = dA_nu/dxi1 - dA1/dxi_nu along the trajectory, with attribution.

    When the normal coefficient carries its per-term vector fields, each
    term's xi1-derivative is the frame contraction of the term's node-field
    Jacobian; a prescribed (samples-only) coefficient falls back to
    arclength differencing of the samples.  A1 terms contribute through
    minus their frame-normal derivative.
    """
    grid = fs.grid
    attribution: Dict[str, np.ndarray] = {}

    anu = fc.anu
    if anu.piece_fields is not None:
        for name, (fx, fy) in anu.piece_fields.items():
            attribution[name] = _frame_contraction(fx, fy, grid, traj, frame)
    else:
        xi = traj.arclength
        edge = 2 if len(xi) >= 3 else 1
        for name, samples in anu.pieces.items():
            attribution[name] = np.gradient(samples, xi, edge_order=edge)

    if not fc.a1.is_zero:
        for name, piece in fc.a1.pieces.items():
            attribution[name] = -_normal_derivative(piece, grid, traj, frame)

    K = np.sum(list(attribution.values()), axis=0)
    return Commutator(xi=traj.arclength.copy(), K=K, attribution=attribution)


# ---------------------------------------------------------------------------
# classification


def _flood_components(mask: np.ndarray):
    ny, nx = mask.shape
    seen = np.zeros(mask.shape, dtype=bool)
    comps = []
    for j in range(ny):
        for i in range(nx):
            if mask[j, i] and not seen[j, i]:
                q = deque([(j, i)])
                seen[j, i] = True
                cells = []
                while q:
                    cj, ci = q.popleft()
                    cells.append((cj, ci))
                    for dj, di in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                        nj, ni = cj + dj, ci + di
                        if 0 <= nj < ny and 0 <= ni < nx and mask[nj, ni] \
                                and not seen[nj, ni]:
                            seen[nj, ni] = True
                            q.append((nj, ni))
                comps.append(cells)
    return comps


def _is_simply_connected(mask: np.ndarray) -> bool:
    """Fluid region connected and every excluded pocket open to the edge."""
    fluid = _flood_components(mask)
    if len(fluid) != 1:
        return False
    ny, nx = mask.shape
    for comp in _flood_components(~mask):
        touches = any(j in (0, ny - 1) or i in (0, nx - 1) for j, i in comp)
        if not touches:
            return False
    return True


def lagrange_criterion(
    fs: FieldSet,
    forces: ForceModel,
    has_time_series: Optional[bool] = None,
) -> LagrangeReport:
    """Eddy-free stable-flow test: stationary + potential force +
    simply connected domain."""
    if has_time_series is None:
        has_time_series = fs.snapshots is not None and len(fs.snapshots) >= 2

    stationary = True
    if has_time_series:
        t0 = fs.snapshots[0].t
        t1 = fs.snapshots[-1].t
        span = max(t1 - t0, 1e-300)
        worst = 0.0
        for name in ("rho", "u", "v", "p"):
            scale = max(float(np.max(np.abs(getattr(fs, name)))), 1e-300)
            for k in range(len(fs.snapshots)):
                df = time_derivative(fs, name, k)
                worst = max(worst, float(np.max(np.abs(df))) * span / scale)
        stationary = worst <= 1e-9

    if forces.kind is ForceKind.TABULATED:
        forces.validate(fs.grid)
        c = curl2d(forces.fx, forces.fy, fs.grid)
        fscale = max(float(np.max(np.hypot(forces.fx, forces.fy))), 1e-300)
        lscale = min(fs.grid.hx * (fs.grid.nx - 1), fs.grid.hy * (fs.grid.ny - 1))
        potential = float(np.max(np.abs(c))) <= 1e-8 * fscale / lscale
    else:
        potential = True

    mask = fs.mask if fs.mask is not None else np.ones(fs.grid.shape, dtype=bool)
    simply_connected = _is_simply_connected(np.asarray(mask, dtype=bool))

    return LagrangeReport(stationary=stationary, potential=potential,
                          simply_connected=simply_connected)


def classify_regime(state: DerivedState) -> FlowRegime:
    """Hyperbolic (|u| > a), elliptic (|u| < a) or sonic within 1e-12 a.

    The speed is recovered from the derived state as sqrt(2 (h0 - h)).
    """
    speed = np.sqrt(max(2.0 * (state.h0 - state.h), 0.0))
    if abs(speed - state.a) <= 1e-12 * state.a:
        return FlowRegime.SONIC
    return FlowRegime.HYPERBOLIC if speed > state.a else FlowRegime.ELLIPTIC


def equilibrium_classifier(c: Commutator, tol: float) -> EquilibriumClass:
    """Vanishing-commutator test; the dominant source is the attribution
    term with the largest |integral| along the trajectory."""
    if not tol > 0.0:
        raise ValueError("tolerance must be positive")
    magnitude = float(np.max(np.abs(c.K))) if len(c.K) else 0.0
    if magnitude <= tol:
        return EquilibriumClass("locally_equilibrium", None, magnitude)
    best_name, best_val = None, -1.0
    for name, comp in c.attribution.items():
        val = abs(float(np.trapezoid(comp, c.xi)))
        if val > best_val:
            best_name, best_val = name, val
    return EquilibriumClass("nonequilibrium", best_name, magnitude)


# ---------------------------------------------------------------------------
# truncation-based tolerances


@dataclass(frozen=True)
class TruncationEstimate:
    anu: float
    commutator: float


def _third_derivative_scale(f: np.ndarray, grid: StructuredGrid2D) -> float:
    out = 0.0
    if grid.nx >= 4:
        out = max(out, float(np.max(np.abs(np.diff(f, 3, axis=1)))) / grid.hx ** 3)
    if grid.ny >= 4:
        out = max(out, float(np.max(np.abs(np.diff(f, 3, axis=0)))) / grid.hy ** 3)
    return out


def truncation_estimate(fs: FieldSet, m: GasModel) -> TruncationEstimate:
    """Stencil-truncation scale of A_nu and K on this grid and data.

    Second-order stencils err as h^2 f'''/6; third derivatives are
    estimated by third differences of the ingredient fields, and a
    rounding-amplification floor eps |f| / h guards exactly representable
    (polynomial) fields whose truncation term vanishes.
    """
    grid = fs.grid
    derived = derive_fields(fs.rho, fs.p, m)
    T = derived["T"]
    h0 = derived["h"] + 0.5 * (fs.u ** 2 + fs.v ** 2)
    t_min = float(np.min(T))
    v_max = float(np.max(fs.speed))
    h = max(grid.hx, grid.hy)
    h_min = min(grid.hx, grid.hy)

    m3 = (_third_derivative_scale(h0, grid)
          + v_max * (_third_derivative_scale(fs.u, grid)
                     + _third_derivative_scale(fs.v, grid)))
    eps = np.finfo(float).eps
    mag = float(np.max(np.abs(h0))) + v_max ** 2 + v_max * float(np.max(fs.speed))
    floor_anu = 4096.0 * eps * mag / (t_min * h_min)
    anu = (h * h / 6.0) * m3 / t_min + floor_anu

    lx = grid.hx * (grid.nx - 1)
    ly = grid.hy * (grid.ny - 1)
    l_char = min(lx, ly)
    commut = anu / l_char + floor_anu / h_min
    return TruncationEstimate(anu=anu, commutator=commut)


def equilibrium_tolerance(fs: FieldSet, m: GasModel) -> float:
    """Default commutator tolerance: 10x the stencil truncation estimate."""
    return 10.0 * truncation_estimate(fs, m).commutator
