"""Integral and differential operators on disc functions.

The Cauchy-Green transform T solves dbar g = f on the disc; it is applied
mode by mode in the angular index, where the radial profile of each output
mode satisfies a first order ODE solved by spectral collocation (exact for
polynomial data, spectrally accurate otherwise). The Cauchy integral K is
the holomorphic projection of boundary data; K1 u = K u - (K u)(1).
"""
from __future__ import annotations

import numpy as np

from .discfun import BoundaryFunction, DiscFunction
from .errors import PreconditionError

__all__ = [
    "cauchy_green_T",
    "cauchy_integral_K",
    "k1",
    "d",
    "d_bar",
    "harmonic_conjugate",
]


def cauchy_green_T(f: DiscFunction) -> DiscFunction:
    """Area-integral transform with dbar(Tf) = f on the grid.

    Output mode m is fed by input mode m + 1; the top representable input
    mode therefore has no image and inputs must be angularly resolved.
    """
    grid = f.grid
    solvers = grid.t_solvers
    out = np.zeros_like(f.coeffs)
    half = grid.N // 2
    for slot in range(grid.N):
        m = grid.modes[slot]
        kin = m + 1
        if kin > half - 1:
            continue
        slot_in = kin if kin >= 0 else grid.N + kin
        rhs = 2.0 * f.coeffs[:, :, slot_in].copy()
        if m >= 0:
            rhs[:, 0] = 0.0  # boundary row carries the condition H(1) = 0
        out[:, :, slot] = rhs @ solvers[slot].T
    return DiscFunction(grid, out)


def cauchy_integral_K(f: BoundaryFunction) -> DiscFunction:
    """Cauchy integral of boundary data: keeps the nonnegative modes."""
    return DiscFunction.from_boundary_holomorphic(f)


def k1(u: BoundaryFunction, tol=1e-9) -> DiscFunction:
    """K u - (K u)(1) for real boundary data with u(1) = 0."""
    if not u.is_real:
        raise PreconditionError("k1 expects real boundary data")
    v1 = np.max(np.abs(u.value_at_one()))
    if v1 > tol:
        raise PreconditionError(f"u(1) = {v1:.3g} is not zero")
    ku = cauchy_integral_K(u)
    shift = ku.values[:, 0, 0]  # value at the node zeta = 1
    out = ku.coeffs.copy()
    out[:, :, 0] -= shift[:, None]
    return DiscFunction(u.grid, out)


def d(f: DiscFunction) -> DiscFunction:
    return f.d()


def d_bar(f: DiscFunction) -> DiscFunction:
    return f.d_bar()


def harmonic_conjugate(u: BoundaryFunction) -> BoundaryFunction:
    """Boundary trace of the conjugate harmonic function, vanishing at 1.

    u + i * harmonic_conjugate(u) extends holomorphically to the disc.
    """
    if not u.is_real:
        raise PreconditionError("harmonic_conjugate expects real boundary data")
    grid = u.grid
    c = u.coeffs.copy()
    k = grid.modes
    mult = -1j * np.sign(k)
    mult[grid.N // 2] = 0.0  # Nyquist has no usable conjugate
    conj = grid.boundary_values(c * mult).real
    conj = conj - conj[:, 0:1]
    return BoundaryFunction(grid, conj)
