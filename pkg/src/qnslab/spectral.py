"""Fourier-spectral machinery on the periodic square [0, 2pi)^2.

Fields live on a uniform N x N grid, indexed [iy, ix] (row-major, x
fastest).  The forward transform is normalized by 1/N^2 so the zero mode
equals the field mean.  Wavenumbers are the integers {-N/2+1, ..., N/2};
odd-order derivative multipliers zero the Nyquist mode, which is the
exact derivative of the real trigonometric interpolant at the grid
points and keeps odd derivatives of real fields real.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi
TORUS_AREA = TWO_PI * TWO_PI

# Imaginary residue tolerated (relative to field magnitude) when an
# inverse transform is expected to produce a real field.
IMAG_RESIDUE_TOL = 1e-10


class SpectralError(ValueError):
    pass


class Grid2D:
    """Uniform even-N periodic grid with precomputed wavenumber arrays.

    Attributes ending in ``g`` (``kgx``, ``kgy``, ``kg2``) are the
    first-derivative wavenumbers with the Nyquist column/row zeroed; the
    plain ``kx``, ``ky``, ``k2`` carry the +N/2 Nyquist label and are
    only ever used with even powers.  All arrays are read-only after
    construction, so one grid may be shared freely across threads.
    """

    def __init__(self, n_points: int):
        n = int(n_points)
        if n < 8 or n % 2 != 0:
            raise SpectralError(f"grid size must be an even integer >= 8, got {n_points}")
        self.n_points = n
        self.spacing = TWO_PI / n

        coords = np.arange(n) * self.spacing
        self.x, self.y = np.meshgrid(coords, coords)

        k1 = np.fft.fftfreq(n, 1.0 / n).astype(int)
        k1[n // 2] = n // 2  # relabel Nyquist as +N/2
        kg1 = k1.copy()
        kg1[n // 2] = 0
        self.kx, self.ky = np.meshgrid(k1, k1)
        self.kgx, self.kgy = np.meshgrid(kg1, kg1)
        self.k2 = (self.kx ** 2 + self.ky ** 2).astype(float)
        self.kg2 = (self.kgx ** 2 + self.kgy ** 2).astype(float)

        cutoff = n / 3.0
        self.dealias_mask = (np.abs(self.kx) <= cutoff) & (np.abs(self.ky) <= cutoff)

        for arr in (self.x, self.y, self.kx, self.ky, self.kgx, self.kgy,
                    self.k2, self.kg2, self.dealias_mask):
            arr.setflags(write=False)

    def __eq__(self, other):
        return isinstance(other, Grid2D) and other.n_points == self.n_points

    def __hash__(self):
        return hash(self.n_points)

    def __repr__(self):
        return f"Grid2D(n_points={self.n_points})"


def to_spectral(values: np.ndarray) -> np.ndarray:
    """Forward transform, normalized so that fhat[0, 0] = mean(values)."""
    return np.fft.fft2(values) / values.size


def to_physical(fhat: np.ndarray, scale_hint: float = 0.0) -> np.ndarray:
    """Inverse transform back to a real field.

    Raises if the imaginary residue exceeds IMAG_RESIDUE_TOL of the
    field magnitude (a symptom of non-Hermitian spectral data).
    scale_hint is the magnitude of the fields the spectral data came
    from: a result that cancels to round-off level is still real to
    within the round-off of its inputs, not of itself.
    """
    w = np.fft.ifft2(fhat) * fhat.size
    scale = max(float(np.abs(w.real).max()), scale_hint)
    resid = float(np.abs(w.imag).max())
    if resid > IMAG_RESIDUE_TOL * max(scale, 1e-30):
        raise SpectralError(
            f"imaginary residue {resid:.3e} exceeds {IMAG_RESIDUE_TOL:g} of field scale {scale:.3e}"
        )
    return np.ascontiguousarray(w.real)


@dataclass
class ScalarField:
    grid: Grid2D
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        n = self.grid.n_points
        if self.values.shape != (n, n):
            raise SpectralError(f"field shape {self.values.shape} does not match grid {n}x{n}")
        if not np.isfinite(self.values).all():
            raise SpectralError("field contains non-finite values")

    def mean(self) -> float:
        return float(self.values.mean())

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy())


@dataclass
class VectorField:
    x: ScalarField
    y: ScalarField

    def __post_init__(self):
        if self.x.grid != self.y.grid:
            raise SpectralError("vector field components must share one grid")

    @property
    def grid(self) -> Grid2D:
        return self.x.grid

    def copy(self) -> "VectorField":
        return VectorField(self.x.copy(), self.y.copy())


def vector_field(grid: Grid2D, vx: np.ndarray, vy: np.ndarray) -> VectorField:
    return VectorField(ScalarField(grid, vx), ScalarField(grid, vy))


def differentiate(f: ScalarField, order: tuple[int, int]) -> ScalarField:
    """Exact spectral derivative d^(a+b) f / dx^a dy^b of the interpolant.

    Supports a + b <= 3 (third derivatives are the highest the quantum
    pressure needs).  The zero mode of any derivative with a + b >= 1
    vanishes identically.
    """
    a, b = int(order[0]), int(order[1])
    if a < 0 or b < 0 or a + b > 3:
        raise SpectralError(f"derivative order {order} unsupported (need a,b >= 0, a+b <= 3)")
    if a == 0 and b == 0:
        return f.copy()
    g = f.grid
    kx = g.kgx if a % 2 else g.kx
    ky = g.kgy if b % 2 else g.ky
    mult = (1j * kx) ** a * (1j * ky) ** b
    hint = float(np.abs(f.values).max()) * float(np.abs(mult).max())
    return ScalarField(g, to_physical(mult * to_spectral(f.values), scale_hint=hint))


def gradient(f: ScalarField) -> VectorField:
    return VectorField(differentiate(f, (1, 0)), differentiate(f, (0, 1)))


def divergence(w: VectorField) -> ScalarField:
    dx = differentiate(w.x, (1, 0))
    dy = differentiate(w.y, (0, 1))
    return ScalarField(w.grid, dx.values + dy.values)


def curl(w: VectorField) -> ScalarField:
    """Scalar curl d(wy)/dx - d(wx)/dy."""
    return ScalarField(
        w.grid,
        differentiate(w.y, (1, 0)).values - differentiate(w.x, (0, 1)).values,
    )


def helmholtz_project(w: VectorField) -> tuple[VectorField, VectorField]:
    """Split w into its divergence-free and gradient parts, w = p + q.

    Per mode, q_hat = k (k . w_hat) / |k|^2 with the first-derivative
    wavenumbers, so div(q) = div(w) and curl(q) = 0 hold exactly under
    the same derivative convention.  The mean (and the degenerate
    Nyquist corners) go entirely to the divergence-free part.
    """
    g = w.grid
    wxh = to_spectral(w.x.values)
    wyh = to_spectral(w.y.values)
    hint = max(float(np.abs(w.x.values).max()), float(np.abs(w.y.values).max()))
    k2 = np.where(g.kg2 == 0.0, 1.0, g.kg2)
    proj = (g.kgx * wxh + g.kgy * wyh) / k2
    proj = np.where(g.kg2 == 0.0, 0.0 + 0.0j, proj)
    qxh = g.kgx * proj
    qyh = g.kgy * proj
    q = vector_field(g, to_physical(qxh, hint), to_physical(qyh, hint))
    p = vector_field(g, to_physical(wxh - qxh, hint), to_physical(wyh - qyh, hint))
    return p, q


def gradient_potential(q: VectorField) -> ScalarField:
    """Mean-free potential psi with grad(psi) = q, for curl-free q."""
    g = q.grid
    hint = max(float(np.abs(q.x.values).max()), float(np.abs(q.y.values).max()))
    div_hat = to_spectral(divergence(q).values)
    k2 = np.where(g.kg2 == 0.0, 1.0, g.kg2)
    psi_hat = -div_hat / k2
    psi_hat[g.kg2 == 0.0] = 0.0
    return ScalarField(g, to_physical(psi_hat, hint))


def dealias(f: ScalarField) -> ScalarField:
    """Zero every mode with |kx| or |ky| above N/3 (the 2/3 rule)."""
    g = f.grid
    hint = float(np.abs(f.values).max())
    return ScalarField(g, to_physical(to_spectral(f.values) * g.dealias_mask, hint))


def dealias_values(grid: Grid2D, values: np.ndarray) -> np.ndarray:
    hint = float(np.abs(values).max())
    return to_physical(to_spectral(values) * grid.dealias_mask, hint)


def norm(f: ScalarField | VectorField, p: float = 2.0, k: int = 0) -> float:
    """Discrete L^p / W^{k,p} norm by uniform quadrature.

    For k >= 1 all spectral derivatives with a + b <= k contribute:
    finite p combines them as (sum_alpha ||D^alpha f||_p^p)^(1/p),
    p = inf takes the largest sup-norm.  Vector fields combine their
    components the same way.
    """
    if p < 1:
        raise SpectralError(f"p must be >= 1, got {p}")
    if k not in (0, 1, 2):
        raise SpectralError(f"derivative order k must be 0, 1 or 2, got {k}")
    comps = [f] if isinstance(f, ScalarField) else [f.x, f.y]
    pieces = []
    for c in comps:
        for a in range(k + 1):
            for b in range(k + 1 - a):
                pieces.append(c.values if a == b == 0 else differentiate(c, (a, b)).values)
    if np.isinf(p):
        return float(max(np.abs(v).max() for v in pieces))
    h2 = comps[0].grid.spacing ** 2
    total = sum(float((np.abs(v) ** p).sum()) * h2 for v in pieces)
    return total ** (1.0 / p)


def integrate(f: ScalarField) -> float:
    """Quadrature of f over the torus."""
    return float(f.values.sum()) * f.grid.spacing ** 2


def random_band_limited(
    grid: Grid2D, kmax: int, rng: np.random.Generator, amplitude: float = 1.0
) -> ScalarField:
    """Random real mean-free field supported on |kx|, |ky| <= kmax,
    scaled to the requested sup amplitude."""
    noise = rng.standard_normal((grid.n_points, grid.n_points))
    fhat = to_spectral(noise)
    keep = (np.abs(grid.kx) <= kmax) & (np.abs(grid.ky) <= kmax)
    fhat *= keep
    fhat[0, 0] = 0.0
    vals = to_physical(fhat)
    peak = np.abs(vals).max()
    if peak > 0:
        vals = vals * (amplitude / peak)
    return ScalarField(grid, vals)
