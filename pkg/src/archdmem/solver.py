"""Global assembly, modal analysis and incremental nonlinear static analysis.

The free DOFs are the ``4 n`` element parameters. Every ground interface
adds a pseudo-element with four DOFs held at zero; its internal forces are
the support reactions.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .arch_model import GROUND, ModelMesh
from .constitutive import fiber_kernel, shear_kernel, shear_yield_force, sliding_kernel
from .element_mech import element_mass, mid_section_area, self_weight_forces, shear_lever, shear_stiffness
from .interface_mech import calibrate_interface
from .kinematics import point_map

log = logging.getLogger(__name__)

_INF = math.inf

SLIDING_TANGENT_FLOOR = 1e-6


class MechanismError(RuntimeError):
    """The tangent stiffness is singular: a collapse mechanism has formed."""

    def __init__(self, message: str, mode: np.ndarray):
        super().__init__(message)
        self.mode = mode


@dataclass
class StructureOptions:
    """Calibration options that are not part of the model file."""

    penalty_factor: float = 1.0
    n_gauss: int = 2
    rigid_shear: bool = False


class Structure:
    """Flattened, solver-ready view of a :class:`ModelMesh`.

    Fiber and sliding data of all interfaces are stacked into arrays so that
    one vectorised constitutive call covers the whole model.
    """

    def __init__(self, mesh: ModelMesh, options: Optional[StructureOptions] = None):
        self.mesh = mesh
        self.options = options or StructureOptions()
        n = mesh.n_elements
        self.n_free = 4 * n
        ground = [i for i, itf in enumerate(mesh.interfaces) if itf.is_ground]
        self.ground_interfaces = ground
        self.n_ext = self.n_free + 4 * len(ground)

        self.assemblies = [calibrate_interface(mesh, i, self.options.penalty_factor) for i in range(len(mesh.interfaces))]
        rows_v, dofs_v, itf_of_fiber = [], [], []
        rows_u, dofs_u = [], []
        for i, (itf, asm) in enumerate(zip(mesh.interfaces, self.assemblies)):
            dq = self._dofs(itf.q, i)
            dp = self._dofs(itf.p, i)
            dofs = np.concatenate([dq, dp])
            rows_v.append(asm.B[:, 1, :])
            dofs_v.append(np.broadcast_to(dofs, (itf.n_f, 8)))
            itf_of_fiber.append(np.full(itf.n_f, i))
            rows_u.append(asm.B[0, 0, :])
            dofs_u.append(dofs)
        self.Bv = np.vstack(rows_v)
        self.dofs_v = np.vstack(dofs_v)
        self.fiber_itf = np.concatenate(itf_of_fiber)
        self.Bu = np.vstack(rows_u)
        self.dofs_u = np.vstack(dofs_u)
        cat = lambda name: np.concatenate([getattr(a, name) for a in self.assemblies])  # noqa: E731
        self.k_el, self.F_t, self.F_m = cat("k_el"), cat("F_t"), cat("F_m")
        self.u_tu, self.u_mu, self.area = cat("u_tu"), cat("u_mu"), cat("area")
        self.k_pen = np.array([a.k_pen for a in self.assemblies])
        self.c = np.array([a.c for a in self.assemblies])
        self.mu = np.array([a.mu for a in self.assemblies])
        self.G_s = np.array([a.G_s for a in self.assemblies])
        self.xi = np.concatenate([itf.xi for itf in mesh.interfaces])
        self.n_fibers = self.k_el.size
        self.n_itf = len(mesh.interfaces)

        self.Gv = sp.csr_matrix(
            (self.Bv.ravel(), (np.repeat(np.arange(self.n_fibers), 8), self.dofs_v.ravel())), shape=(self.n_fibers, self.n_ext)
        )
        self.Gu = sp.csr_matrix(
            (self.Bu.ravel(), (np.repeat(np.arange(self.n_itf), 8), self.dofs_u.ravel())), shape=(self.n_itf, self.n_ext)
        )
        # fiber -> interface summation operator
        self.S = sp.csr_matrix((np.ones(self.n_fibers), (self.fiber_itf, np.arange(self.n_fibers))), shape=(self.n_itf, self.n_fibers))
        # every fiber of an interface acts on the same 8 DOFs: the tangent is a
        # sum of 8x8 interface blocks scattered into a dense matrix
        self.fiber_start = np.concatenate([[0], np.cumsum([itf.n_f for itf in mesh.interfaces])[:-1]])
        self.block_index = (self.dofs_u[:, :, None] * self.n_ext + self.dofs_u[:, None, :]).ravel()

        # element shear
        self.K_gamma = np.empty(n)
        self.shear_area = np.empty(n)
        self.lever = np.empty(n)
        for e, (el, mat) in enumerate(zip(mesh.elements, mesh.materials)):
            self.K_gamma[e] = shear_stiffness(el, mat.E, mat.nu, self.options.n_gauss, G=mat.G)
            self.shear_area[e] = mid_section_area(el)
            self.lever[e] = shear_lever(el)
        self.element_itfs = [[i for i, itf in enumerate(mesh.interfaces) if e in (itf.p, itf.q)] for e in range(n)]
        self.gamma_dofs = 4 * np.arange(n) + 3
        # DOFs held at zero in static analysis (the shear distortions of rigid-shear models)
        self.constrained = self.gamma_dofs.copy() if self.options.rigid_shear else np.zeros(0, int)

        # loads
        self.F_gravity = np.zeros(self.n_free)
        if mesh.gravity:
            for e, (el, mat) in enumerate(zip(mesh.elements, mesh.materials)):
                self.F_gravity[4 * e : 4 * e + 4] += self_weight_forces(el, mat.w)
        self.P = np.zeros(self.n_free)
        for load in mesh.point_loads:
            el = mesh.elements[load.element]
            self.P[4 * load.element : 4 * load.element + 4] += load.magnitude * (point_map(el, load.point).T @ np.asarray(load.direction, float))
        self.monitor = np.zeros(self.n_free)
        if mesh.monitored is not None:
            m = mesh.monitored
            el = mesh.elements[m.element]
            self.monitor[4 * m.element : 4 * m.element + 4] = point_map(el, m.point).T @ np.asarray(m.direction, float)

    def _dofs(self, e: int, i: int) -> np.ndarray:
        if e == GROUND:
            g = self.ground_interfaces.index(i)
            start = self.n_free + 4 * g
        else:
            start = 4 * e
        return np.arange(start, start + 4)

    def mass_matrix(self) -> np.ndarray:
        M = np.zeros((self.n_free, self.n_free))
        for e, (el, mat) in enumerate(zip(self.mesh.elements, self.mesh.materials)):
            M[4 * e : 4 * e + 4, 4 * e : 4 * e + 4] = element_mass(el, mat.w, self.options.n_gauss).M
        return M


@dataclass
class GlobalState:
    """Displacements, load factor and committed constitutive history."""

    d: np.ndarray
    u_max_t: np.ndarray
    u_p_c: np.ndarray
    broken_t: np.ndarray
    broken_c: np.ndarray
    u_p: np.ndarray
    u_p_acc: np.ndarray
    gamma_p: np.ndarray
    load_factor: float = 0.0
    gravity_factor: float = 0.0
    step: int = 0

    @classmethod
    def initial(cls, s: Structure) -> "GlobalState":
        nf, ni, ne = s.n_fibers, s.n_itf, s.mesh.n_elements
        return cls(np.zeros(s.n_ext), np.zeros(nf), np.zeros(nf), s.F_t <= 0, np.zeros(nf, bool), np.zeros(ni), np.zeros(ni), np.zeros(ne))

    def copy(self) -> "GlobalState":
        return GlobalState(**{k: (v.copy() if isinstance(v, np.ndarray) else v) for k, v in self.__dict__.items()})


@dataclass
class Evaluation:
    F_int: np.ndarray
    K: Optional[np.ndarray]  # dense tangent over free and support DOFs
    opening: np.ndarray
    f_v: np.ndarray
    slide: np.ndarray
    f_u: np.ndarray
    N: np.ndarray
    history: dict


def evaluate(s: Structure, state: GlobalState, d: np.ndarray, with_tangent: bool = True, secant: bool = False) -> Evaluation:
    """Internal forces (and tangent) at ``d`` from the committed history in ``state``.

    With ``secant`` the negative tangents of softening fibers and sliding
    springs are replaced by non-negative secants: a slower but contracting
    iteration used when full Newton cycles between competing cracks.
    """
    # a diverging trial iterate may overflow; callers reject non-finite residuals
    with np.errstate(over="ignore", invalid="ignore"):
        return _evaluate(s, state, d, with_tangent, secant)


def _evaluate(s: Structure, state: GlobalState, d: np.ndarray, with_tangent: bool, secant: bool) -> Evaluation:
    opening = np.einsum("fk,fk->f", s.Bv, d[s.dofs_v])
    f_v, k_v, umax, upc, bt, bc = fiber_kernel(opening, s.k_el, s.F_t, s.F_m, s.u_tu, s.u_mu, state.u_max_t, state.u_p_c, state.broken_c)
    if secant:
        x = opening + state.u_p_c
        with np.errstate(divide="ignore", invalid="ignore"):
            k_sec = np.where(x != 0, np.maximum(f_v / np.where(x != 0, x, 1.0), 0.0), 0.0)
        k_v = np.where(k_v < 0, k_sec, k_v)
    bt = bt | state.broken_t
    N = -np.bincount(s.fiber_itf, f_v, minlength=s.n_itf)
    A_c = np.bincount(s.fiber_itf, s.area * ((~bt) | (opening < 0)), minlength=s.n_itf)
    slide = np.einsum("ik,ik->i", s.Bu, d[s.dofs_u])
    f_u, k_u, up, acc = sliding_kernel(slide, s.k_pen, s.c, s.mu, s.G_s, A_c, N, state.u_p, state.u_p_acc)
    if secant:
        k_u = np.maximum(k_u, 0.0)

    gam = d[s.gamma_dofs]
    if s.options.rigid_shear:
        T, k_g, gp = np.zeros_like(gam), np.zeros_like(gam), state.gamma_p
    else:
        T_y = np.array([_shear_capacity(s, e, N) for e in range(s.mesh.n_elements)])
        T, k_g, gp = shear_kernel(gam, s.K_gamma, T_y, state.gamma_p)

    F = np.bincount(s.dofs_v.ravel(), (s.Bv * f_v[:, None]).ravel(), minlength=s.n_ext)
    F += np.bincount(s.dofs_u.ravel(), (s.Bu * f_u[:, None]).ravel(), minlength=s.n_ext)
    F[s.gamma_dofs] += T
    K = None
    if with_tangent:
        kB = s.Bv * k_v[:, None]
        blocks = np.add.reduceat(kB[:, :, None] * s.Bv[:, None, :], s.fiber_start, axis=0)
        # a tiny floor on the sliding tangent removes the zero-energy sway of
        # symmetric sliding mechanisms from the Newton matrix; forces are unaffected
        k_u_newton = np.maximum(k_u, SLIDING_TANGENT_FLOOR * s.k_pen)
        blocks += k_u_newton[:, None, None] * s.Bu[:, :, None] * s.Bu[:, None, :]
        # on the friction surface the sliding force follows the normal force of
        # the same iterate: d f_u / d N = sign(f_u) mu (non-symmetric coupling)
        frictional = (k_u < s.k_pen) & (N > 0) & (s.mu > 0)
        if np.any(frictional):
            coupling = np.where(frictional, np.sign(f_u) * s.mu, 0.0)
            dN = -np.add.reduceat(kB, s.fiber_start, axis=0)
            blocks += coupling[:, None, None] * s.Bu[:, :, None] * dN[:, None, :]
        K = np.bincount(s.block_index, blocks.ravel(), minlength=s.n_ext * s.n_ext).reshape(s.n_ext, s.n_ext)
        K[s.gamma_dofs, s.gamma_dofs] += k_g
    history = dict(u_max_t=umax, u_p_c=upc, broken_t=bt, broken_c=bc, u_p=up, u_p_acc=acc, gamma_p=gp)
    return Evaluation(F, K, opening, f_v, slide, f_u, N, history)


def _shear_capacity(s: Structure, e: int, N: np.ndarray) -> float:
    domain = s.mesh.materials[e].diagonal_shear
    if domain.kind == "none":
        return _INF
    itfs = s.element_itfs[e]
    conf = float(np.mean(np.maximum(N[itfs], 0.0))) if itfs else 0.0
    return shear_yield_force(domain, s.shear_area[e], conf) * s.lever[e]


def commit(state: GlobalState, ev: Evaluation, d: np.ndarray) -> None:
    state.d = d.copy()
    for k, v in ev.history.items():
        setattr(state, k, v)


def assemble(s: Structure, state: GlobalState):
    """Tangent (sparse, free DOFs) and internal force vector at the committed state."""
    ev = evaluate(s, state, state.d)
    n = s.n_free
    return sp.csr_matrix(ev.K[:n, :n]), ev.F_int[:n]


def reactions(s: Structure, ev: Evaluation) -> np.ndarray:
    """Support reactions ``(n_ground, 3)``: force x, force y (N) and moment about each pseudo-origin."""
    return ev.F_int[s.n_free :].reshape(-1, 4)[:, :3]


def near_null_mode(K: np.ndarray):
    """Eigenpair of smallest magnitude of the symmetric part of ``K`` scaled by its mean diagonal."""
    scale = float(np.mean(np.abs(np.diag(K)))) or 1.0
    w, v = np.linalg.eigh(0.5 * (K + K.T) / scale)
    k = int(np.argmin(np.abs(w)))
    return w[k], v[:, k]


# --------------------------------------------------------------------------- modal


@dataclass
class ModalResult:
    frequencies: np.ndarray  # Hz
    shapes: np.ndarray  # (n_free, n_modes), mass-normalised

    @property
    def periods(self) -> np.ndarray:
        return 1.0 / self.frequencies


def solve_modal(mesh_or_structure, n_modes: int, options: Optional[StructureOptions] = None) -> ModalResult:
    """Smallest ``n_modes`` natural frequencies of the initial elastic model.

    With ``options.rigid_shear`` the Gamma DOFs are constrained to zero.
    """
    s = mesh_or_structure if isinstance(mesh_or_structure, Structure) else Structure(mesh_or_structure, options)
    if n_modes <= 0:
        return ModalResult(np.zeros(0), np.zeros((s.n_free, 0)))
    state = GlobalState.initial(s)
    # initial tangent: every fiber on its elastic branch
    opening = np.zeros(s.n_fibers)
    k_v = s.k_el
    K = (s.Gv.T @ sp.diags(k_v) @ s.Gv + s.Gu.T @ sp.diags(s.k_pen) @ s.Gu).toarray()[: s.n_free, : s.n_free]
    del opening, state
    keep = np.arange(s.n_free)
    if s.options.rigid_shear:
        keep = np.setdiff1d(keep, s.gamma_dofs)
    else:
        K[s.gamma_dofs, s.gamma_dofs] += s.K_gamma
    M = s.mass_matrix()
    Kr, Mr = K[np.ix_(keep, keep)], M[np.ix_(keep, keep)]
    n_modes = min(n_modes, keep.size)
    try:
        w2, vec = sla.eigh(Kr, Mr, subset_by_index=[0, n_modes - 1])
    except np.linalg.LinAlgError as exc:
        raise MechanismError("stiffness or mass matrix is singular (unrestrained model?)", np.zeros(s.n_free)) from exc
    if w2[0] <= 0:
        raise MechanismError("non-positive eigenvalue: model is not kinematically restrained", vec[:, 0])
    shapes = np.zeros((s.n_free, n_modes))
    shapes[keep] = vec
    return ModalResult(np.sqrt(w2) / (2.0 * math.pi), shapes)


# --------------------------------------------------------------------------- static


@dataclass
class AnalysisProtocol:
    gravity_steps: int = 10
    target_displacement: float = 10.0  # mm, monitored point, measured after gravity
    step: Optional[float] = None  # mm; default target / 200
    tol: float = 1e-6
    max_iter: int = 50
    substep_factor: int = 4
    max_depth: int = 5
    snapshot_every: int = 1
    max_snap_back_steps: int = 400

    def __post_init__(self):
        if self.step is not None and not self.step > 0:
            raise ValueError("step size must be > 0")
        if not 0 < self.tol < 1e-2:
            raise ValueError("tolerance must lie in (0, 1e-2)")
        if self.gravity_steps < 1:
            raise ValueError("at least one gravity step is required")

    @property
    def step_size(self) -> float:
        return self.step if self.step is not None else self.target_displacement / 200.0


@dataclass
class CapacityCurve:
    displacement: list = field(default_factory=list)  # mm
    load: list = field(default_factory=list)  # kN, applied concentrated load
    base_reaction: list = field(default_factory=list)  # kN, total vertical support reaction

    def as_arrays(self):
        return np.asarray(self.displacement), np.asarray(self.load), np.asarray(self.base_reaction)


@dataclass
class Snapshot:
    step: int
    displacement: float
    load: float
    d: np.ndarray
    opening: np.ndarray
    f_v: np.ndarray
    u_max_t: np.ndarray
    broken_t: np.ndarray
    broken_c: np.ndarray
    slide: np.ndarray
    u_p: np.ndarray


@dataclass
class StaticResult:
    curve: CapacityCurve
    snapshots: list
    termination: str
    structure: Structure
    state: GlobalState
    gravity_state: Optional[GlobalState] = None
    equilibrium_errors: list = field(default_factory=list)
    diagnostic: dict = field(default_factory=dict)
    mechanism: Optional[np.ndarray] = None

    @property
    def converged(self) -> bool:
        return self.termination in ("target reached", "mechanism")


class ConvergenceError(RuntimeError):
    def __init__(self, message, history):
        super().__init__(message)
        self.history = history


STAGNATION_WINDOW = 12


def _newton(
    s: Structure,
    state: GlobalState,
    gravity_factor: float,
    load_factor: float,
    target: Optional[float],
    proto: AnalysisProtocol,
    control: Optional[np.ndarray] = None,
    secant: bool = False,
):
    """Newton iterations for one increment.

    Load control when ``target`` is None; otherwise ``control @ d`` is
    prescribed (default: the monitored displacement) and the load factor is
    an unknown of the bordered system. Returns ``(d, load_factor, evaluation)``.
    """
    n = s.n_free
    c = s.monitor if control is None else control
    d = state.d.copy()
    lam = load_factor
    Fg = gravity_factor * s.F_gravity
    ref = max(np.linalg.norm(s.F_gravity), np.linalg.norm(s.P) * max(abs(lam), 1.0), 1.0)
    gap_tol = 1e-9 * max(1.0, abs(target or 0.0))
    history = []
    max_iter = proto.max_iter * (4 if secant else 1)
    for it in range(max_iter + 1):
        ev = evaluate(s, state, d, secant=secant)
        R = ev.F_int[:n] - Fg - lam * s.P
        R[s.constrained] = 0.0
        res = float(np.linalg.norm(R)) / ref
        gap = 0.0 if target is None else target - float(c @ d[:n])
        history.append(res)
        if not math.isfinite(res):
            raise ConvergenceError("non-finite residual", history)
        if res <= proto.tol and abs(gap) <= gap_tol:
            return d, lam, ev
        if it == max_iter:
            break
        if not secant and it > STAGNATION_WINDOW and min(history[-STAGNATION_WINDOW:]) > 0.5 * min(history[1:-STAGNATION_WINDOW]):
            # no progress that could reach the tolerance within the budget
            raise ConvergenceError("residual stagnated", history)
        K = ev.K[:n, :n].copy()
        if s.constrained.size:
            K[s.constrained, :] = 0.0
            K[:, s.constrained] = 0.0
            K[s.constrained, s.constrained] = 1.0
        if target is not None:
            # bordered system: regular even when K alone is singular, as long as
            # the mechanism changes the controlled quantity and does work on the load
            Kb = np.zeros((n + 1, n + 1))
            Kb[:n, :n] = K
            Kb[:n, n] = -s.P
            Kb[n, :n] = c
            K = Kb
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("error", sla.LinAlgWarning)
                lu = sla.lu_factor(K, check_finite=False)
        except (ValueError, np.linalg.LinAlgError, sla.LinAlgWarning) as exc:
            raise ConvergenceError("singular tangent", history) from exc
        if target is None:
            dd, dl = sla.lu_solve(lu, -R, check_finite=False), 0.0
        else:
            sol = sla.lu_solve(lu, np.append(-R, gap), check_finite=False)
            dd, dl = sol[:n], float(sol[n])
        if not np.all(np.isfinite(dd)):
            raise ConvergenceError("non-finite increment", history)
        if abs(gap) > gap_tol:
            # the constraint is linear: a full step closes it exactly
            d = d.copy()
            d[:n] += dd
            lam += dl
        else:
            d, lam = _line_search(s, state, d, lam, dd, dl, Fg, res * ref)
        ref = max(ref, np.linalg.norm(s.P) * abs(lam))
    raise ConvergenceError(f"no convergence after {max_iter} iterations", history)


def _line_search(s, state, d, lam, dd, dl, Fg, r0):
    """Backtracking on the residual norm; breaks two-cycles of fibers switching branch."""
    n = s.n_free
    best = None
    for alpha in (1.0, 0.5, 0.25, 0.125):
        d_try = d.copy()
        d_try[:n] += alpha * dd
        lam_try = lam + alpha * dl
        ev = evaluate(s, state, d_try, with_tangent=False)
        R = ev.F_int[:n] - Fg - lam_try * s.P
        R[s.constrained] = 0.0
        r = float(np.linalg.norm(R))
        if best is None or r < best[0]:
            best = (r, d_try, lam_try)
        if r <= (1.0 - 1e-4 * alpha) * r0:
            break
    return best[1], best[2]


@dataclass
class DepthMemory:
    """Subdivision depth carried between increments.

    Increments start ``start`` levels deep instead of first retrying the
    coarse sizes that failed on the previous increment; ``used`` records the
    deepest level that converged.
    """

    start: int = 0
    used: int = 0

    def next_increment(self) -> None:
        self.start, self.used = max(self.used - 1, 0), 0


def _advance(s, state, g0, g1, lam, u0, u1, proto, depth=0, control=None, memory=None):
    """Advance from (g0, u0) to (g1, u1), subdividing on divergence. Mutates ``state``.

    ``u0``/``u1`` are values of ``control @ d`` (None under load control).
    """
    if memory is not None and depth < memory.start:
        return _subdivide(s, state, g0, g1, u0, u1, proto, depth, control, memory)
    try:
        try:
            d, lam_new, ev = _newton(s, state, g1, lam, u1, proto, control)
        except ConvergenceError:
            if 0 < depth < proto.max_depth:
                raise
            # the slower contracting iteration gets through alternating crack
            # patterns on which Newton cycles; tried on full and smallest increments
            d, lam_new, ev = _newton(s, state, g1, lam, u1, proto, control, secant=True)
    except ConvergenceError:
        if depth >= proto.max_depth:
            raise
        return _subdivide(s, state, g0, g1, u0, u1, proto, depth, control, memory)
    if memory is not None:
        memory.used = max(memory.used, depth)
    commit(state, ev, d)
    state.load_factor = lam_new
    state.gravity_factor = g1
    return ev


def _subdivide(s, state, g0, g1, u0, u1, proto, depth, control, memory):
    m = proto.substep_factor
    for j in range(1, m + 1):
        gj = g0 + (g1 - g0) * j / m
        uj = None if u1 is None else u0 + (u1 - u0) * j / m
        uprev = None if u1 is None else u0 + (u1 - u0) * (j - 1) / m
        gprev = g0 + (g1 - g0) * (j - 1) / m
        ev = _advance(s, state, gprev, gj, state.load_factor, uprev, uj, proto, depth + 1, control, memory)
    return ev


def crack_opening_control(s: Structure, state: GlobalState) -> np.ndarray:
    """Control vector measuring the summed opening of the fibers open in ``state``.

    The summed crack opening grows monotonically through local snap-backs,
    where the monitored displacement has to decrease.
    """
    opening = s.Gv @ state.d
    open_ = opening > 0
    if not np.any(open_):
        open_ = opening >= opening.max()
    return np.asarray(s.Gv[open_].sum(axis=0)).ravel()[: s.n_free]


def _snapshot(s: Structure, state: GlobalState, ev: Evaluation, step: int, disp: float) -> Snapshot:
    return Snapshot(
        step=step,
        displacement=disp,
        load=state.load_factor / 1000.0,
        d=state.d[: s.n_free].copy(),
        opening=ev.opening.copy(),
        f_v=ev.f_v.copy(),
        u_max_t=state.u_max_t.copy(),
        broken_t=state.broken_t.copy(),
        broken_c=state.broken_c.copy(),
        slide=ev.slide.copy(),
        u_p=state.u_p.copy(),
    )


def equilibrium_error(s: Structure, state: GlobalState, ev: Evaluation) -> float:
    """Relative mismatch between support reactions and applied loads (force resultant)."""
    load = state.gravity_factor * s.F_gravity + state.load_factor * s.P
    applied = np.array([load[0::4].sum(), load[1::4].sum()])
    r = reactions(s, ev)
    total = r[:, :2].sum(axis=0)
    scale = max(np.linalg.norm(applied), 1e-30)
    return float(np.linalg.norm(total + applied) / scale)


def run_static(mesh: ModelMesh, protocol: Optional[AnalysisProtocol] = None, options: Optional[StructureOptions] = None, structure: Optional[Structure] = None, observer=None) -> StaticResult:
    """Gravity stage under load control, then displacement-controlled pushover.

    The monitored displacement is measured from the end of the gravity stage,
    positive along the load direction. Never raises on non-convergence: the
    partial result carries the termination reason and diagnostic.
    ``observer(step, structure, state, evaluation)``, if given, is called for
    every recorded step (step 0 is the end of the gravity stage).
    """
    proto = protocol or AnalysisProtocol()
    s = structure or Structure(mesh, options)
    state = GlobalState.initial(s)
    curve = CapacityCurve()
    snaps: list[Snapshot] = []
    result = StaticResult(curve, snaps, "target reached", s, state)
    n = s.n_free

    ev = None
    for k in range(1, proto.gravity_steps + 1):
        g0, g1 = (k - 1) / proto.gravity_steps, k / proto.gravity_steps
        try:
            ev = _advance(s, state, g0, g1, 0.0, None, None, proto)
        except ConvergenceError as exc:
            result.termination = "gravity stage did not converge"
            result.diagnostic = {"stage": "gravity", "step": k, "residual_history": exc.history}
            return result
    if ev is None:
        ev = evaluate(s, state, state.d)
    result.gravity_state = state.copy()
    result.equilibrium_errors.append(equilibrium_error(s, state, ev))
    u_ref = float(s.monitor @ state.d[:n])

    def record(step, ev):
        disp = float(s.monitor @ state.d[:n]) - u_ref
        base = float(reactions(s, ev)[:, 1].sum()) / 1000.0
        curve.displacement.append(disp)
        curve.load.append(state.load_factor / 1000.0)
        curve.base_reaction.append(base)
        if step % proto.snapshot_every == 0:
            snaps.append(_snapshot(s, state, ev, step, disp))
        if observer is not None:
            observer(step, s, state, ev)

    record(0, ev)
    if proto.target_displacement <= 0 or not np.any(s.P):
        return result
    n_steps = int(math.ceil(proto.target_displacement / proto.step_size - 1e-9))
    du = proto.target_displacement / n_steps
    u_end = u_ref + proto.target_displacement
    d_prev = state.d.copy()
    step = 0
    memory = DepthMemory()
    while True:
        u0 = float(s.monitor @ state.d[:n])
        if u0 >= u_end - 1e-9 * max(1.0, abs(u_end)):
            break
        u1 = min(u0 + du, u_end)
        try:
            d_before = state.d.copy()
            memory.next_increment()
            ev = _advance(s, state, 1.0, 1.0, state.load_factor, u0, u1, proto, memory=memory)
            d_prev = d_before
        except ConvergenceError as exc:
            # local snap-back: follow the crack opening until the monitored
            # point moves beyond u1, recording every converged state
            try:
                for ev in _snap_back(s, state, proto, u1, d_prev):
                    step += 1
                    result.equilibrium_errors.append(equilibrium_error(s, state, ev))
                    record(step, ev)
                d_prev = state.d.copy()
                continue
            except ConvergenceError:
                pass
            K = evaluate(s, state, state.d).K[:n, :n]
            lam_min, mode = near_null_mode(K)
            result.diagnostic = {"stage": "pushover", "step": step + 1, "residual_history": exc.history, "min_eigenvalue": lam_min}
            if abs(lam_min) < 1e-8:
                result.termination = "mechanism"
                result.mechanism = mode
            else:
                result.termination = "substepping exhausted"
            return result
        step += 1
        state.step = step
        result.equilibrium_errors.append(equilibrium_error(s, state, ev))
        record(step, ev)
    return result


def _snap_back(s: Structure, state: GlobalState, proto: AnalysisProtocol, u_exit: float, d_prev: np.ndarray):
    """Crack-opening-controlled steps until the monitored displacement exceeds ``u_exit``.

    Yields the evaluation of every committed step; raises
    :class:`ConvergenceError` when ``proto.max_snap_back_steps`` are used up.
    """
    n = s.n_free
    c = crack_opening_control(s, state)
    dv = abs(float(c @ (state.d[:n] - d_prev[:n])))
    dv = max(dv, 1e-6 * float(np.abs(c).sum()) * proto.step_size)
    for _ in range(proto.max_snap_back_steps):
        c = crack_opening_control(s, state)
        v0 = float(c @ state.d[:n])
        ev = _advance(s, state, 1.0, 1.0, state.load_factor, v0, v0 + dv, proto, control=c)
        state.step += 1
        yield ev
        if float(s.monitor @ state.d[:n]) > u_exit:
            return
    raise ConvergenceError("snap-back not traversed", [])


def ultimate_load(curve: CapacityCurve, criterion: float):
    """Load (kN) at monitored displacement ``criterion`` (mm), linearly interpolated.

    Returns ``(load, truncated)``; ``truncated`` is True when the curve ends
    before the criterion, in which case the last load is returned.
    """
    u, F, _ = curve.as_arrays()
    if u.size == 0:
        return math.nan, True
    reached = np.nonzero(u >= criterion - 1e-9 * max(1.0, abs(criterion)))[0]
    if reached.size == 0:
        return float(F[-1]), True
    k = int(reached[0])
    if k == 0:
        return float(F[0]), False
    t = min(1.0, (criterion - u[k - 1]) / (u[k] - u[k - 1]))
    return float(F[k - 1] + t * (F[k] - F[k - 1])), False


def peak_load(curve: CapacityCurve) -> tuple[float, float]:
    """Largest applied load (kN) and the monitored displacement (mm) where it occurs."""
    u, F, _ = curve.as_arrays()
    k = int(np.argmax(F))
    return float(F[k]), float(u[k])


def residual_plateau(curve: CapacityCurve, window: float, floor_fraction: float = 0.5) -> float:
    """Mean load (kN) over the flattest post-peak stretch of length ``window`` (mm).

    Only the softening branch is searched: from the peak until the load first
    drops below ``floor_fraction`` times the peak (a later collapse of the
    residual mechanism is not part of it). The flattest stretch is the one
    with the smallest load range.
    """
    u, F, _ = curve.as_arrays()
    k0 = int(np.argmax(F))
    u, F = u[k0:], F[k0:]
    below = np.nonzero(F < floor_fraction * F[0])[0]
    if below.size:
        u, F = u[: below[0]], F[: below[0]]
    if u.size < 2 or u[-1] - u[0] < window:
        return float(F[-1])
    best = None
    for i in range(u.size):
        j = int(np.searchsorted(u, u[i] + window))
        if j >= u.size:
            break
        seg = F[i : j + 1]
        spread = float(seg.max() - seg.min())
        if best is None or spread < best[0]:
            best = (spread, float(np.trapezoid(seg, u[i : j + 1]) / (u[j] - u[i])))
    return best[1] if best else float(F[-1])


@dataclass(frozen=True)
class Hinge:
    """A hinge zone: consecutive interfaces opening on the same face.

    ``interface`` is the most opened interface of the zone and ``zone`` all
    of its interfaces. ``kind`` is ``"flexural"``, ``"sliding"`` or
    ``"mixed"``; ``side`` is the face that opens (``"intrados"`` at xi = 0,
    ``"extrados"`` at xi = 1), or ``None`` for pure sliding.
    """

    interface: int
    kind: str
    side: Optional[str]
    open_fraction: float
    slip: float
    zone: tuple = ()


def _interface_hinges(s: Structure, snap, opening_tol, slip_tol, min_open_fraction):
    u_y = s.F_t / s.k_el
    start = 0
    for i, itf in enumerate(s.mesh.interfaces):
        sl = slice(start, start + itf.n_f)
        start += itf.n_f
        op = snap.opening[sl]
        is_open = op > np.maximum(opening_tol, u_y[sl])
        side, frac = None, 0.0
        for name, seq, far in (("intrados", is_open, op[-1]), ("extrados", is_open[::-1], op[0])):
            run = seq.size if seq.all() else int(np.argmin(seq))
            f = run / itf.n_f
            if f >= min_open_fraction and far <= 0 and f > frac:
                side, frac = name, f
        slip = float(snap.u_p[i])
        sliding = abs(slip) > slip_tol
        if side is None and not sliding:
            continue
        kind = "mixed" if side and sliding else ("flexural" if side else "sliding")
        yield Hinge(i, kind, side, frac, slip, (i,)), float(np.max(np.abs(op)))


def detect_hinges(s: Structure, snap: "Snapshot", opening_tol: float = 1e-6, slip_tol: float = 1e-6, min_open_fraction: float = 0.5) -> list:
    """Flexural and sliding hinges of a committed snapshot.

    A fiber counts as open beyond yield when its opening exceeds both
    ``opening_tol`` (mm) and its elastic limit ``F_t / k``. An interface
    opens flexurally when the open fibers contiguous to one face cover at
    least ``min_open_fraction`` of the section while the fiber at the
    opposite face is closed; it slides when the plastic slip exceeds
    ``slip_tol`` (mm). Consecutive interfaces opening on the same face form
    one hinge zone, represented by its most opened interface.
    """
    zones: list = []
    for h, magnitude in _interface_hinges(s, snap, opening_tol, slip_tol, min_open_fraction):
        last = zones[-1] if zones else None
        if last is not None and last[-1][0].interface == h.interface - 1 and last[-1][0].side == h.side:
            last.append((h, magnitude))
        else:
            zones.append([(h, magnitude)])
    out = []
    for zone in zones:
        rep = max(zone, key=lambda hm: hm[1])[0]
        sliding = any(abs(h.slip) > slip_tol for h, _ in zone)
        kind = rep.kind if rep.side is None else ("mixed" if sliding else "flexural")
        slip = max((h.slip for h, _ in zone), key=abs)
        out.append(Hinge(rep.interface, kind, rep.side, rep.open_fraction, slip, tuple(h.interface for h, _ in zone)))
    return out


def hinge_timeline(s: Structure, snapshots: list, **kwargs) -> list:
    """Hinge zones in order of activation: ``(interface, step, displacement, kind, side)``.

    A zone is identified with the first interface of it that activates; a
    later snapshot whose zone overlaps an already seen one adds nothing.
    """
    seen: dict = {}
    covered: set = set()
    for snap in snapshots:
        for h in detect_hinges(s, snap, **kwargs):
            if covered.intersection(h.zone):
                covered.update(h.zone)
                continue
            covered.update(h.zone)
            seen[h.interface] = (h.interface, snap.step, snap.displacement, h.kind, h.side)
    return sorted(seen.values(), key=lambda r: (r[1], r[0]))
