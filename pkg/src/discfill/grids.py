"""Polar spectral grids on the closed unit disc.

The angular direction uses N equispaced samples (N a power of two) with the
usual FFT mode layout. The radial direction uses M Chebyshev-Radau nodes on
(0, 1] with r = 1 an exact node, so boundary traces are plain restrictions.
Grids carry their barycentric interpolation weights, the differentiation
matrix, and two precomputed operator families:

* per-mode solvers for the Cauchy-Green transform (the radial profile of
  output mode m solves H' - (m/r) H = 2 f_{m+1}, with H(1) = 0 for m >= 0),
* the boundary matrix of a -> 2 K_1 a used by the boundary Newton steps.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

__all__ = ["DiscGrid"]


def _radial_nodes(m):
    i = np.arange(m)
    return (1.0 + np.cos(2.0 * np.pi * i / (2 * m - 1))) / 2.0


def _bary_weights(r):
    m = len(r)
    w = np.ones(m)
    for i in range(m):
        d = r[i] - np.delete(r, i)
        w[i] = np.prod(np.sign(d)) * np.exp(-np.sum(np.log(np.abs(d))))
    return w / np.max(np.abs(w))


def _diff_matrix(r, w):
    m = len(r)
    d = np.zeros((m, m))
    for i in range(m):
        mask = np.arange(m) != i
        d[i, mask] = (w[mask] / w[i]) / (r[i] - r[mask])
    d[np.arange(m), np.arange(m)] = -d.sum(axis=1)
    return d


class DiscGrid:
    """Shared, immutable polar grid of size (n_radial, n_angular)."""

    def __init__(self, n_angular=256, n_radial=64):
        if n_angular & (n_angular - 1):
            raise ValueError("n_angular must be a power of two")
        self.N = n_angular
        self.M = n_radial
        self.theta = 2.0 * np.pi * np.arange(self.N) / self.N
        self.modes = np.fft.fftfreq(self.N, 1.0 / self.N).astype(int)
        self.r = _radial_nodes(self.M)
        self.bary_w = _bary_weights(self.r)
        self.diff = _diff_matrix(self.r, self.bary_w)
        self.zeta = self.r[:, None] * np.exp(1j * self.theta[None, :])
        self._t_solvers = None
        self._two_k1 = None

    @staticmethod
    @lru_cache(maxsize=16)
    def get(n_angular=256, n_radial=64):
        return DiscGrid(n_angular, n_radial)

    # -- transforms ------------------------------------------------------
    def values_to_coeffs(self, values):
        """Angular FFT, f = sum_k c_k(r) e^{i k theta}; shape preserved."""
        return np.fft.fft(values, axis=-1) / self.N

    def coeffs_to_values(self, coeffs):
        return np.fft.ifft(coeffs * self.N, axis=-1)

    def boundary_coeffs(self, samples):
        return np.fft.fft(samples, axis=-1) / self.N

    def boundary_values(self, coeffs):
        return np.fft.ifft(coeffs * self.N, axis=-1)

    # -- radial interpolation -------------------------------------------
    def interp_rows(self, r_targets):
        """Barycentric interpolation matrix (P, M) at radii r_targets."""
        r_targets = np.atleast_1d(np.asarray(r_targets, dtype=float))
        rows = np.zeros((len(r_targets), self.M))
        for i, r0 in enumerate(r_targets):
            diff = r0 - self.r
            hit = np.abs(diff) < 1e-14
            if np.any(hit):
                rows[i, np.argmax(hit)] = 1.0
                continue
            lag = self.bary_w / diff
            rows[i] = lag / np.sum(lag)
        return rows

    # -- cached operator families ---------------------------------------
    @property
    def t_solvers(self):
        """Stack (N, M, M): inverse collocation operators per output mode."""
        if self._t_solvers is None:
            mats = np.zeros((self.N, self.M, self.M))
            for slot in range(self.N):
                m = self.modes[slot]
                L = self.diff - np.diag(m / self.r)
                if m >= 0:
                    L[0, :] = 0.0
                    L[0, 0] = 1.0
                mats[slot] = np.linalg.inv(L)
            self._t_solvers = mats
        return self._t_solvers

    @property
    def two_k1_matrix(self):
        """Complex (N, N): boundary samples a -> boundary trace of 2 K_1 a."""
        if self._two_k1 is None:
            c = np.fft.fft(np.eye(self.N), axis=0) / self.N
            c[self.N // 2:, :] = 0.0  # negative modes and Nyquist
            vals = np.fft.ifft(2.0 * c * self.N, axis=0)
            self._two_k1 = vals - vals[0:1, :]
        return self._two_k1

    def hol_profiles(self, coeffs):
        """Disc profiles c_k r^k for nonnegative-mode boundary coefficients.

        coeffs has shape (..., N); modes below 0 (and the Nyquist slot) are
        discarded. Returns (..., M, N).
        """
        k = np.maximum(self.modes, 0)
        radial = self.r[:, None] ** k[None, :]
        out = coeffs[..., None, :] * radial
        out[..., :, self.N // 2:] = 0.0
        return out
