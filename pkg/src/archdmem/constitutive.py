"""One-dimensional laws with history for fibers, interface sliding and element shear.

Every law has a vectorised kernel (``*_kernel``) working on numpy arrays,
used by the solver, and a scalar ``*_update`` wrapper. Kernels never modify
their inputs: they return the trial force, tangent and the trial history,
which the caller commits once a step has converged.

Sign conventions: fiber displacement and force are positive in opening
(tension); the sliding normal force ``N`` is positive in compression.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .arch_model import DiagonalShear

_INF = math.inf


# --------------------------------------------------------------------------- fibers


@dataclass(frozen=True)
class FiberAxialLaw:
    k_el: float
    F_t: float
    F_m: float = _INF
    u_tu: float = _INF
    u_mu: float = _INF

    def violations(self) -> list[str]:
        out = []
        if not self.k_el > 0:
            out.append("k_el must be > 0")
        if not self.F_t >= 0:
            out.append("F_t must be >= 0")
        if not self.F_m > 0:
            out.append("F_m must be > 0")
        return out


@dataclass(frozen=True)
class FiberAxialState:
    u: float = 0.0
    u_max_t: float = 0.0  # largest opening reached, measured from the plastic origin
    u_p_c: float = 0.0  # accumulated compressive plastic shortening
    broken_t: bool = False
    broken_c: bool = False


def _tension_envelope(x, k, Ft, u_tu):
    """Force and slope of the monotonic tensile curve at opening ``x >= 0``."""
    with np.errstate(divide="ignore", invalid="ignore"):
        u_y = np.where(k > 0, Ft / k, 0.0)
        soft = np.isfinite(u_tu) & (u_tu > u_y)
        brittle = np.isfinite(u_tu) & (u_tu <= u_y)
        span = np.where(soft, u_tu - u_y, 1.0)
        f_soft = np.where(soft, Ft * (u_tu - x) / span, Ft)
    elastic = x <= u_y
    force = np.where(elastic, k * x, np.where(brittle, 0.0, np.where(soft & (x >= u_tu), 0.0, f_soft)))
    slope = np.where(elastic, k, np.where(soft & (x < u_tu), -Ft / span, 0.0))
    force = np.where(Ft > 0, force, 0.0)
    slope = np.where(Ft > 0, slope, 0.0)
    return force, slope


def fiber_kernel(u, k, Ft, Fm, u_tu, u_mu, u_max_t, u_p_c, broken_c):
    """Vectorised fiber update. Returns ``(force, tangent, u_max_t, u_p_c, broken_t, broken_c)``.

    Tension follows the envelope with secant unloading to the plastic origin;
    compression is elastic-plastic with linear softening of the yield force
    with plastic shortening, unloading elastically.
    """
    u = np.asarray(u, float)
    x = u + u_p_c
    # a closed fiber (x == 0) responds on the compressive elastic branch
    tens = x > 0

    # tension side
    xt = np.where(tens, x, 0.0)
    on_env = xt >= u_max_t
    f_env, s_env = _tension_envelope(xt, k, Ft, u_tu)
    f_max, _ = _tension_envelope(u_max_t, k, Ft, u_tu)
    u_y = np.where(k > 0, Ft / k, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        secant = np.where(u_max_t > u_y, f_max / np.where(u_max_t > 0, u_max_t, 1.0), k)
    secant = np.where(Ft > 0, secant, 0.0)
    f_t = np.where(on_env, f_env, secant * xt)
    t_t = np.where(on_env, s_env, secant)
    new_umax = np.where(tens & on_env, xt, u_max_t)

    # compression side
    y = np.where(tens, 0.0, -x)
    finite_mu = np.isfinite(u_mu)
    finite_Fm = np.isfinite(Fm)
    Fm_safe = np.where(finite_Fm, Fm, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        H = np.where(finite_Fm & finite_mu & (u_mu > 0), -Fm_safe / np.where(u_mu > 0, u_mu, 1.0), 0.0)
        cap = np.where(finite_Fm, Fm_safe + H * u_p_c, _INF)
    trial = k * y
    yielding = (trial > cap) & finite_Fm
    with np.errstate(divide="ignore", invalid="ignore"):
        dk = np.where(yielding, (trial - np.where(finite_Fm, cap, 0.0)) / (k + H), 0.0)
    kappa = u_p_c + dk
    crushed = broken_c | (finite_mu & finite_Fm & (kappa >= u_mu) & yielding) | (finite_Fm & (cap <= 0))
    m = np.where(yielding, Fm_safe + H * kappa, trial)
    with np.errstate(divide="ignore", invalid="ignore"):
        t_plastic = np.where(H != 0, k * H / (k + H), 0.0)
    t_c = np.where(yielding, t_plastic, k)
    f_c = np.where(crushed, 0.0, -m)
    t_c = np.where(crushed, 0.0, t_c)
    new_upc = np.where(~tens & yielding & ~crushed, kappa, u_p_c)

    force = np.where(tens, f_t, f_c)
    tangent = np.where(tens, t_t, t_c)
    broken_t = np.isfinite(u_tu) & (new_umax >= u_tu) & (Ft > 0) | (Ft <= 0)
    broken_c = np.where(tens, broken_c, crushed)
    return force, tangent, new_umax, new_upc, broken_t, broken_c


def fiber_axial_update(law: FiberAxialLaw, state: FiberAxialState, u_new: float):
    """Scalar fiber update: ``(force N, tangent N/mm, new state)``."""
    f, t, umax, upc, bt, bc = fiber_kernel(
        np.array([u_new]),
        np.array([law.k_el]),
        np.array([law.F_t]),
        np.array([law.F_m]),
        np.array([law.u_tu]),
        np.array([law.u_mu]),
        np.array([state.u_max_t]),
        np.array([state.u_p_c]),
        np.array([state.broken_c]),
    )
    new = FiberAxialState(
        u=float(u_new),
        u_max_t=float(umax[0]),
        u_p_c=float(upc[0]),
        broken_t=bool(bt[0]) and law.F_t > 0 or state.broken_t,
        broken_c=bool(bc[0]) or state.broken_c,
    )
    return float(f[0]), float(t[0]), new


# --------------------------------------------------------------------------- sliding


@dataclass(frozen=True)
class SlidingLaw:
    c: float
    mu: float
    G_s: float
    k_pen: float


@dataclass(frozen=True)
class SlidingState:
    u: float = 0.0
    u_p: float = 0.0
    u_p_acc: float = 0.0
    damage: float = 0.0


def cohesion_damage(c, G_s, u_p_acc):
    """Linear cohesion degradation reaching 1 after an accumulated slide 2*G_s/c."""
    c = np.asarray(c, float)
    G_s = np.asarray(G_s, float)
    with np.errstate(divide="ignore", invalid="ignore"):
        rate = np.where(np.isfinite(G_s) & (G_s > 0), c / (2.0 * np.where(G_s > 0, G_s, 1.0)), 0.0)
        rate = np.where(G_s <= 0, _INF, rate)
        d = np.where(rate > 0, np.minimum(1.0, rate * u_p_acc), 0.0)
    d = np.where((c > 0) & (G_s <= 0), 1.0, d)
    return d, rate


def sliding_yield_force(law: SlidingLaw, A_c: float, N: float, u_p_acc: float) -> float:
    """Mohr-Coulomb resistance ``c A_c (1 - d_c) + mu max(N, 0)`` (N)."""
    d, _ = cohesion_damage(law.c, law.G_s, u_p_acc)
    return float(law.c * A_c * (1.0 - d) + law.mu * max(N, 0.0))


def sliding_kernel(u, k_pen, c, mu, G_s, A_c, N, u_p, u_p_acc):
    """Vectorised 1-DOF return mapping. Returns ``(force, tangent, u_p, u_p_acc)``."""
    u = np.asarray(u, float)
    d, rate = cohesion_damage(c, G_s, u_p_acc)
    coh0 = c * A_c
    fric = mu * np.maximum(N, 0.0)
    Fy = coh0 * (1.0 - d) + fric
    trial = k_pen * (u - u_p)
    sgn = np.where(trial >= 0, 1.0, -1.0)
    over = np.abs(trial) - Fy
    plastic = over > 1e-12 * np.maximum(Fy, 1.0)
    softening = (d < 1.0) & (coh0 > 0) & (rate > 0) & np.isfinite(rate)
    H = np.where(softening, -coh0 * np.where(np.isfinite(rate), rate, 0.0), 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        dgam = np.where(plastic, over / (k_pen + H), 0.0)
        acc_full = np.where(softening, (1.0 - d) / np.where(rate > 0, rate, 1.0), 0.0) + u_p_acc
    past = softening & (u_p_acc + dgam > acc_full)
    # once cohesion is exhausted the surface is purely frictional
    dgam = np.where(plastic & past, (np.abs(trial) - fric) / k_pen, dgam)
    new_acc = u_p_acc + dgam
    d_new, _ = cohesion_damage(c, G_s, new_acc)
    Fy_new = coh0 * (1.0 - d_new) + fric
    force = np.where(plastic, sgn * Fy_new, trial)
    with np.errstate(divide="ignore", invalid="ignore"):
        t_soft = np.where(H != 0, k_pen * H / (k_pen + H), 0.0)
    tangent = np.where(plastic, np.where(softening & ~past, t_soft, 0.0), k_pen)
    new_up = u_p + sgn * dgam
    return force, tangent, new_up, new_acc


def sliding_update(law: SlidingLaw, state: SlidingState, u_new: float, N: float, A_c: float):
    """Scalar sliding update: ``(force N, tangent N/mm, new state)``."""
    f, t, up, acc = sliding_kernel(
        np.array([u_new]), law.k_pen, law.c, law.mu, law.G_s, A_c, N, np.array([state.u_p]), np.array([state.u_p_acc])
    )
    d, _ = cohesion_damage(law.c, law.G_s, acc)
    return float(f[0]), float(t[0]), replace(state, u=float(u_new), u_p=float(up[0]), u_p_acc=float(acc[0]), damage=float(d[0]))


# --------------------------------------------------------------------------- diagonal shear


@dataclass(frozen=True)
class DiagonalShearLaw:
    K_gamma: float
    domain: DiagonalShear
    reference_area: float
    lever: float


@dataclass(frozen=True)
class ShearState:
    gamma: float = 0.0
    gamma_p: float = 0.0


def shear_yield_force(domain: DiagonalShear, reference_area: float, confinement_N: float) -> float:
    """Yield shear force (N) of the element mid cross-section; ``inf`` if elastic."""
    sigma0 = max(confinement_N, 0.0) / reference_area
    if domain.kind == "none":
        return _INF
    if domain.kind == "mohr-coulomb":
        return (domain.cohesion + domain.friction * sigma0) * reference_area
    if domain.kind == "turnsek-cacovic":
        ft = 1.5 * domain.tau0
        return reference_area * ft / domain.b * math.sqrt(1.0 + sigma0 / ft)
    raise ValueError(f"unknown diagonal shear domain {domain.kind!r}")


def shear_kernel(gamma, K, T_y, gamma_p):
    """Elastic-perfectly-plastic generalized shear. Returns ``(T, tangent, gamma_p)``."""
    trial = K * (gamma - gamma_p)
    plastic = np.abs(trial) > T_y
    sgn = np.sign(trial)
    T_cap = np.where(plastic, T_y, 0.0)
    T = np.where(plastic, sgn * T_cap, trial)
    new_gp = np.where(plastic, gamma - sgn * T_cap / K, gamma_p)
    return T, np.where(plastic, 0.0, K), new_gp


def diagonal_shear_update(law: DiagonalShearLaw, state: ShearState, gamma_new: float, confinement_N: float):
    """Scalar shear update: ``(generalized force N·mm, tangent N·mm, new state)``."""
    V_y = shear_yield_force(law.domain, law.reference_area, confinement_N)
    T, t, gp = shear_kernel(np.array([gamma_new]), law.K_gamma, V_y * law.lever, np.array([state.gamma_p]))
    return float(T[0]), float(t[0]), ShearState(float(gamma_new), float(gp[0]))
