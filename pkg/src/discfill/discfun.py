"""Function containers on the disc and its boundary circle.

BoundaryFunction stores N equispaced samples on the circle together with
the equivalent truncated Fourier coefficients; DiscFunction stores polar
Fourier profiles on the radial nodes of a DiscGrid. Both are vector valued
with a leading component axis and immutable by convention.
"""
from __future__ import annotations

import csv

import numpy as np

from .grids import DiscGrid

__all__ = [
    "BoundaryFunction",
    "DiscFunction",
    "save_coeffs_csv",
    "load_coeffs_csv",
]


def _as_components(arr, width):
    arr = np.asarray(arr)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.shape[-1] != width:
        raise ValueError(f"expected trailing axis {width}, got {arr.shape}")
    return arr.astype(complex)


class BoundaryFunction:
    """Samples of a map on the boundary circle at theta_j = 2 pi j / N."""

    def __init__(self, grid: DiscGrid, samples):
        self.grid = grid
        self.samples = _as_components(samples, grid.N)

    @classmethod
    def from_callable(cls, grid, fn):
        vals = np.asarray(fn(grid.theta))
        return cls(grid, vals)

    @classmethod
    def from_coeffs(cls, grid, coeffs):
        coeffs = _as_components(coeffs, grid.N)
        return cls(grid, grid.boundary_values(coeffs))

    @classmethod
    def zero(cls, grid, ncomp=1):
        return cls(grid, np.zeros((ncomp, grid.N), dtype=complex))

    @property
    def ncomp(self):
        return self.samples.shape[0]

    @property
    def coeffs(self):
        return self.grid.boundary_coeffs(self.samples)

    @property
    def is_real(self):
        return bool(np.max(np.abs(self.samples.imag)) < 1e-12)

    def value_at_one(self):
        """Value at the boundary point zeta = 1 (the j = 0 sample)."""
        return self.samples[:, 0]

    def eval_at(self, theta):
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        phase = np.exp(1j * np.outer(theta, self.grid.modes))
        return self.coeffs @ phase.T

    def c1_norm(self):
        """sup |u| + sup |u'| with the derivative taken spectrally."""
        du = self.coeffs * (1j * self.grid.modes)
        dvals = self.grid.boundary_values(du)
        return float(np.max(np.abs(self.samples)) + np.max(np.abs(dvals)))

    def __add__(self, other):
        return BoundaryFunction(self.grid, self.samples + other.samples)

    def __sub__(self, other):
        return BoundaryFunction(self.grid, self.samples - other.samples)

    def __mul__(self, scalar):
        return BoundaryFunction(self.grid, self.samples * scalar)

    __rmul__ = __mul__


class DiscFunction:
    """Polar-Fourier representation of a map on the closed unit disc.

    ``coeffs`` has shape (ncomp, M, N): the k-th angular mode profile on the
    radial nodes. Values on the grid and boundary traces are derived views.
    """

    def __init__(self, grid: DiscGrid, coeffs):
        self.grid = grid
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.ndim == 2:
            coeffs = coeffs[None, :, :]
        if coeffs.shape[-2:] != (grid.M, grid.N):
            raise ValueError(f"coefficient shape {coeffs.shape} does not match grid")
        self.coeffs = coeffs
        self._values = None

    @classmethod
    def from_values(cls, grid, values):
        values = np.asarray(values, dtype=complex)
        if values.ndim == 2:
            values = values[None, :, :]
        out = cls(grid, grid.values_to_coeffs(values))
        out._values = values
        return out

    @classmethod
    def from_boundary_holomorphic(cls, boundary: BoundaryFunction):
        """Holomorphic extension of boundary data with nonnegative modes."""
        grid = boundary.grid
        return cls(grid, grid.hol_profiles(boundary.coeffs))

    @classmethod
    def zero(cls, grid, ncomp=1):
        return cls(grid, np.zeros((ncomp, grid.M, grid.N), dtype=complex))

    @classmethod
    def from_pointwise(cls, grid, fn, ncomp=None):
        """Sample fn(zeta) on the grid; fn maps (..., ) complex to values."""
        vals = np.asarray(fn(grid.zeta), dtype=complex)
        if vals.ndim == 2:
            vals = vals[None, :, :]
        return cls.from_values(grid, vals)

    @property
    def ncomp(self):
        return self.coeffs.shape[0]

    @property
    def values(self):
        if self._values is None:
            self._values = self.grid.coeffs_to_values(self.coeffs)
        return self._values

    def boundary(self):
        return BoundaryFunction(self.grid, self.values[:, 0, :])

    def component(self, i):
        return DiscFunction(self.grid, self.coeffs[i : i + 1])

    def sup_norm(self):
        return float(np.max(np.abs(self.values)))

    def at(self, zeta):
        """Evaluate at arbitrary points of the closed disc, shape (ncomp, P)."""
        zeta = np.atleast_1d(np.asarray(zeta, dtype=complex))
        rows = self.grid.interp_rows(np.abs(zeta))
        prof = np.einsum("pm,cmk->cpk", rows, self.coeffs)
        phase = np.exp(1j * np.outer(np.angle(zeta), self.grid.modes))
        return np.einsum("cpk,pk->cp", prof, phase)

    def _wirtinger(self, bar):
        grid = self.grid
        df = np.einsum("ij,cjk->cik", grid.diff, self.coeffs)
        out = np.zeros_like(self.coeffs)
        half = grid.N // 2
        for slot in range(grid.N):
            k = grid.modes[slot]
            tgt = k + 1 if bar else k - 1
            if tgt < -half or tgt > half - 1:
                continue
            st = tgt if tgt >= 0 else grid.N + tgt
            term = df[:, :, slot]
            ratio = k * self.coeffs[:, :, slot] / grid.r
            out[:, :, st] = 0.5 * (term - ratio) if bar else 0.5 * (term + ratio)
        return DiscFunction(grid, out)

    def d(self):
        """Wirtinger derivative d/d zeta, spectrally."""
        return self._wirtinger(bar=False)

    def d_bar(self):
        """Wirtinger derivative d/d conj(zeta), spectrally."""
        return self._wirtinger(bar=True)

    def __add__(self, other):
        return DiscFunction(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other):
        return DiscFunction(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return DiscFunction(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__


def save_coeffs_csv(disc: DiscFunction, path):
    """Serialize a single-component DiscFunction (columns k, r_index, re, im)."""
    if disc.ncomp != 1:
        raise ValueError("coefficient CSV format is single component")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "r_index", "re", "im"])
        for slot in range(disc.grid.N):
            k = disc.grid.modes[slot]
            for m in range(disc.grid.M):
                c = disc.coeffs[0, m, slot]
                writer.writerow([k, m, repr(c.real), repr(c.imag)])


def load_coeffs_csv(grid: DiscGrid, path):
    coeffs = np.zeros((1, grid.M, grid.N), dtype=complex)
    slot_of = {int(k): s for s, k in enumerate(grid.modes)}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for k, m, re, im in reader:
            coeffs[0, int(m), slot_of[int(k)]] = float(re) + 1j * float(im)
    return DiscFunction(grid, coeffs)
