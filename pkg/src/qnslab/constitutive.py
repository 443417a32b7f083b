"""Pressure law, Helmholtz free energy, and the quantum (Bohm) force."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import (
    ScalarField,
    VectorField,
    dealias,
    differentiate,
    gradient,
    vector_field,
)

# Densities below this are numerically meaningless in the quantum force
# (division by sqrt(n)); callers abort rather than clip.
N_FLOOR = 1e-8

POTENTIAL = "potential"
DIVERGENCE = "divergence"


class VacuumError(RuntimeError):
    """Density dropped to (or below) the vacuum floor."""

    def __init__(self, msg, min_n=None, location=None, time=None):
        super().__init__(msg)
        self.min_n = min_n
        self.location = location
        self.time = time


@dataclass(frozen=True)
class LimitParams:
    """Mach number and adiabatic exponent, with the derived exponents."""

    epsilon: float
    gamma: float

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.gamma <= 1.0:
            raise ValueError(f"gamma must exceed 1, got {self.gamma}")

    @property
    def lam(self) -> float:
        """min{2, gamma} (density-deviation integrability exponent)."""
        return min(2.0, self.gamma)

    @property
    def rate(self) -> float:
        """min{1 - 1/gamma, 1/gamma} (convergence-rate exponent)."""
        return min(1.0 - 1.0 / self.gamma, 1.0 / self.gamma)


def _require_positive(values: np.ndarray, what: str) -> None:
    if values.min() <= 0.0:
        iy, ix = np.unravel_index(int(values.argmin()), values.shape)
        raise VacuumError(
            f"{what} requires positive density; min n = {values.min():.6e} at grid point "
            f"(iy={iy}, ix={ix})",
            min_n=float(values.min()),
            location=(int(iy), int(ix)),
        )


def pressure(n: ScalarField, gamma: float) -> ScalarField:
    """Barotropic pressure n**gamma."""
    _require_positive(n.values, "pressure")
    return ScalarField(n.grid, n.values ** gamma)


def _free_energy_values(n: np.ndarray, gamma: float, order: int) -> np.ndarray:
    if order == 0:
        return (n ** gamma - gamma * (n - 1.0) - 1.0) / (gamma - 1.0)
    if order == 1:
        return gamma * (n ** (gamma - 1.0) - 1.0) / (gamma - 1.0)
    if order == 2:
        return gamma * n ** (gamma - 2.0)
    raise ValueError(f"free energy order must be 0, 1 or 2, got {order}")


def free_energy(n: ScalarField, gamma: float, order: int = 0) -> ScalarField:
    """Convex free energy H(n) = (n^g - g(n-1) - 1)/(g-1), or H', H''.

    H(1) = H'(1) = 0 and H''(1) = gamma = p'(1).
    """
    _require_positive(n.values, "free_energy")
    return ScalarField(n.grid, _free_energy_values(n.values, gamma, order))


def p_prime_at_one(gamma: float) -> float:
    """Sound-speed coefficient p'(1); single source of truth is H''(1)."""
    return float(_free_energy_values(np.float64(1.0), gamma, 2))


def bohm_force(n: ScalarField, form: str = DIVERGENCE) -> VectorField:
    """Quantum force 2 n grad(lap(sqrt n)/sqrt n) in either of its forms.

    The divergence form grad(lap n) - 4 div(grad(sqrt n) x grad(sqrt n))
    is the production form; the potential form evaluates the expression
    literally and exists for cross-validation.  sqrt(n) is taken
    pointwise and dealiased before any differentiation; the result is
    dealiased.
    """
    vals = n.values
    if vals.min() < N_FLOOR:
        iy, ix = np.unravel_index(int(vals.argmin()), vals.shape)
        raise VacuumError(
            f"bohm_force refused: min n = {vals.min():.6e} below floor {N_FLOOR:g} "
            f"at (iy={iy}, ix={ix})",
            min_n=float(vals.min()),
            location=(int(iy), int(ix)),
        )
    g = n.grid
    s = dealias(ScalarField(g, np.sqrt(vals)))
    if form == POTENTIAL:
        lap_s = ScalarField(g, differentiate(s, (2, 0)).values + differentiate(s, (0, 2)).values)
        ratio = dealias(ScalarField(g, lap_s.values / s.values))
        grad_ratio = gradient(ratio)
        return vector_field(
            g,
            dealias(ScalarField(g, 2.0 * vals * grad_ratio.x.values)).values,
            dealias(ScalarField(g, 2.0 * vals * grad_ratio.y.values)).values,
        )
    if form == DIVERGENCE:
        nd = dealias(n)
        grad_lap_x = differentiate(nd, (3, 0)).values + differentiate(nd, (1, 2)).values
        grad_lap_y = differentiate(nd, (2, 1)).values + differentiate(nd, (0, 3)).values
        gs = gradient(s)
        txx = dealias(ScalarField(g, gs.x.values * gs.x.values))
        txy = dealias(ScalarField(g, gs.x.values * gs.y.values))
        tyy = dealias(ScalarField(g, gs.y.values * gs.y.values))
        div_x = differentiate(txx, (1, 0)).values + differentiate(txy, (0, 1)).values
        div_y = differentiate(txy, (1, 0)).values + differentiate(tyy, (0, 1)).values
        return vector_field(g, grad_lap_x - 4.0 * div_x, grad_lap_y - 4.0 * div_y)
    raise ValueError(f"unknown bohm force form {form!r} (use POTENTIAL or DIVERGENCE)")
