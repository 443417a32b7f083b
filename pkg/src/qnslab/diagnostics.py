"""Relative entropy, convergence-theorem norms, density-deviation
norms, and log-log rate fitting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .acoustic import AcousticState
from .constitutive import VacuumError, _free_energy_values
from .euler import EulerReference
from .qns import QnsState
from .spectral import (
    ScalarField,
    gradient,
    helmholtz_project,
    integrate,
    vector_field,
)


@dataclass
class EntropyReport:
    t: float
    rel_entropy: float
    kinetic_part: float
    quantum_part: float
    internal_part: float
    theorem_lhs: tuple[float, float, float]
    corollary_lhs: tuple[float, float, float]


@dataclass
class RateFit:
    epsilons: list[float]
    values: list[float]
    slope: float
    intercept: float
    residual: float


def _check_alignment(s: QnsState, ref: EulerReference, ac: AcousticState, time_tol: float):
    if not (s.grid == ref.v.grid == ac.grid):
        raise ValueError("state, reference and acoustic state must share one grid")
    if abs(s.time - ac.time) > time_tol:
        raise ValueError(
            f"state and acoustic times differ: {s.time:.6g} vs {ac.time:.6g} (tol {time_tol:g})"
        )
    if not ref.steady and abs(s.time - ref.time) > time_tol:
        raise ValueError(
            f"state and reference times differ: {s.time:.6g} vs {ref.time:.6g} (tol {time_tol:g})"
        )


def _reference_density(s: QnsState, ac: AcousticState) -> np.ndarray:
    b = 1.0 + s.params.epsilon * ac.sigma.values
    if b.min() <= 0.0:
        raise VacuumError(
            f"reference density 1 + eps*sigma non-positive (min {b.min():.3e})"
        )
    return b


def relative_entropy(
    s: QnsState, ref: EulerReference, ac: AcousticState, time_tol: float = 1e-9
) -> EntropyReport:
    """Modulated energy between the state and the corrected reference
    (v + grad Psi, 1 + eps sigma): kinetic + quantum + internal parts.

    The internal part is the Bregman gap of the free energy, hence
    nonnegative; the whole functional vanishes iff the state sits
    exactly on the corrected reference.
    """
    _check_alignment(s, ref, ac, time_tol)
    g = s.grid
    eps = s.params.epsilon
    gamma = s.params.gamma
    n = s.n.values
    b = _reference_density(s, ac)

    gp = gradient(ac.psi)
    wx = s.m.x.values / n - ref.v.x.values - gp.x.values
    wy = s.m.y.values / n - ref.v.y.values - gp.y.values
    kinetic = 0.5 * integrate(ScalarField(g, n * (wx * wx + wy * wy)))

    gs = gradient(ScalarField(g, np.sqrt(n)))
    gb = gradient(ScalarField(g, np.sqrt(b)))
    quantum = 2.0 * eps * eps * integrate(
        ScalarField(g, (gs.x.values - gb.x.values) ** 2 + (gs.y.values - gb.y.values) ** 2)
    )

    bregman = (
        _free_energy_values(n, gamma, 0)
        - _free_energy_values(b, gamma, 1) * (n - b)
        - _free_energy_values(b, gamma, 0)
    )
    internal = integrate(ScalarField(g, bregman)) / (eps * eps)

    thm = theorem_lhs(s, ref, ac, time_tol)
    cor = corollary_lhs(s, ref)
    return EntropyReport(
        t=s.time,
        rel_entropy=kinetic + quantum + internal,
        kinetic_part=kinetic,
        quantum_part=quantum,
        internal_part=internal,
        theorem_lhs=thm,
        corollary_lhs=cor,
    )


def theorem_lhs(
    s: QnsState, ref: EulerReference, ac: AcousticState, time_tol: float = 1e-9
) -> tuple[float, float, float]:
    """The three squared norms of the convergence estimate:
    ||sqrt(n)(u - v - grad Psi)||^2, ||(n - 1 - eps sigma)/eps||^2,
    eps^2 ||grad sqrt(n) - grad sqrt(1 + eps sigma)||^2."""
    _check_alignment(s, ref, ac, time_tol)
    g = s.grid
    eps = s.params.epsilon
    n = s.n.values
    b = _reference_density(s, ac)

    gp = gradient(ac.psi)
    wx = s.m.x.values / n - ref.v.x.values - gp.x.values
    wy = s.m.y.values / n - ref.v.y.values - gp.y.values
    vel = integrate(ScalarField(g, n * (wx * wx + wy * wy)))

    dens = integrate(ScalarField(g, ((n - b) / eps) ** 2))

    gs = gradient(ScalarField(g, np.sqrt(n)))
    gb = gradient(ScalarField(g, np.sqrt(b)))
    grad = eps * eps * integrate(
        ScalarField(g, (gs.x.values - gb.x.values) ** 2 + (gs.y.values - gb.y.values) ** 2)
    )
    return (vel, dens, grad)


def corollary_lhs(s: QnsState, ref: EulerReference) -> tuple[float, float, float]:
    """||P(sqrt(n) u) - v||^2, ||(n-1)/eps||^2, eps^2 ||grad sqrt(n)||^2."""
    if s.grid != ref.v.grid:
        raise ValueError("state and reference must share one grid")
    g = s.grid
    eps = s.params.epsilon
    n = s.n.values
    if n.min() <= 0.0:
        raise VacuumError(f"corollary_lhs: non-positive density (min {n.min():.3e})")
    root_n = np.sqrt(n)
    w = vector_field(g, root_n * s.m.x.values / n, root_n * s.m.y.values / n)
    p_part, _ = helmholtz_project(w)
    first = integrate(
        ScalarField(
            g,
            (p_part.x.values - ref.v.x.values) ** 2 + (p_part.y.values - ref.v.y.values) ** 2,
        )
    )
    second = integrate(ScalarField(g, ((n - 1.0) / eps) ** 2))
    gs = gradient(ScalarField(g, root_n))
    third = eps * eps * integrate(ScalarField(g, gs.x.values ** 2 + gs.y.values ** 2))
    return (first, second, third)


def density_deviation_norms(s: QnsState) -> dict[str, float]:
    """Small/large indicator splits of n - 1 and the full L^gamma and
    L^lambda norms (ties |n-1| = 1 go to the large part)."""
    g = s.grid
    h2 = g.spacing ** 2
    gamma = s.params.gamma
    lam = s.params.lam
    dev = s.n.values - 1.0
    small = np.abs(dev) < 1.0
    small_l2 = float(np.sqrt((dev[small] ** 2).sum() * h2))
    large_lg = float(((np.abs(dev[~small]) ** gamma).sum() * h2) ** (1.0 / gamma))
    full_lg = float(((np.abs(dev) ** gamma).sum() * h2) ** (1.0 / gamma))
    full_ll = float(((np.abs(dev) ** lam).sum() * h2) ** (1.0 / lam))
    return {
        "small_part_L2": small_l2,
        "large_part_Lgamma": large_lg,
        "full_Lgamma": full_lg,
        "full_Llambda": full_ll,
    }


def rate_fit(eps: list[float], vals: list[float]) -> RateFit:
    """Least-squares line through (log eps, log val); the residual is
    the RMS of the log-residuals."""
    eps = [float(e) for e in eps]
    vals = [float(v) for v in vals]
    if len(eps) != len(vals) or len(eps) < 3:
        raise ValueError(f"rate fit needs >= 3 matched points, got {len(eps)}/{len(vals)}")
    if any(e2 >= e1 for e1, e2 in zip(eps, eps[1:])):
        raise ValueError("epsilons must be strictly decreasing")
    if min(vals) <= 0.0 or min(eps) <= 0.0:
        raise ValueError("rate fit requires positive epsilons and values")
    lx = np.log(np.array(eps))
    ly = np.log(np.array(vals))
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    return RateFit(
        epsilons=eps,
        values=vals,
        slope=float(slope),
        intercept=float(intercept),
        residual=float(np.sqrt(np.mean(resid ** 2))),
    )
