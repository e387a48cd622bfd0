"""Polynomials in (z, zbar) on C^n.

These are the common currency for structure matrices, defining functions
and test scalar fields: every built-in scenario and every inline config
table reduces to a small number of ZPoly instances, which gives closed-form
Wirtinger derivatives everywhere they matter for accuracy.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["ZPoly", "RealZPoly"]


def _powers(z, alpha):
    out = np.ones(z.shape[:-1], dtype=complex)
    for l, a in enumerate(alpha):
        if a:
            out = out * z[..., l] ** a
    return out


@dataclass(frozen=True)
class ZPoly:
    """Complex polynomial sum_i c_i * z^alpha_i * conj(z)^beta_i.

    ``terms`` is a tuple of (coeff, alpha, beta) with alpha, beta integer
    multi-indices of length n. Immutable; all operations return new objects.
    """

    n: int
    terms: tuple = field(default_factory=tuple)

    @staticmethod
    def constant(n, c):
        if c == 0:
            return ZPoly(n, ())
        return ZPoly(n, ((complex(c), (0,) * n, (0,) * n),))

    @staticmethod
    def coordinate(n, j, conjugate=False):
        alpha = [0] * n
        beta = [0] * n
        (beta if conjugate else alpha)[j] = 1
        return ZPoly(n, ((1.0 + 0.0j, tuple(alpha), tuple(beta)),))

    @property
    def is_zero(self):
        return all(c == 0 for c, _, _ in self.terms)

    def degree(self):
        if not self.terms:
            return 0
        return max(sum(a) + sum(b) for _, a, b in self.terms)

    def __call__(self, z):
        """Evaluate at complex points z of shape (..., n)."""
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape[:-1], dtype=complex)
        zb = np.conj(z)
        for c, alpha, beta in self.terms:
            out = out + c * _powers(z, alpha) * _powers(zb, beta)
        return out

    def dz(self, j):
        terms = []
        for c, alpha, beta in self.terms:
            if alpha[j]:
                a = list(alpha)
                a[j] -= 1
                terms.append((c * alpha[j], tuple(a), beta))
        return ZPoly(self.n, tuple(terms))

    def dzbar(self, j):
        terms = []
        for c, alpha, beta in self.terms:
            if beta[j]:
                b = list(beta)
                b[j] -= 1
                terms.append((c * beta[j], alpha, tuple(b)))
        return ZPoly(self.n, tuple(terms))

    def conj(self):
        return ZPoly(self.n, tuple((np.conj(c), b, a) for c, a, b in self.terms))

    def __add__(self, other):
        if isinstance(other, ZPoly):
            return ZPoly(self.n, self.terms + other.terms).collect()
        return self + ZPoly.constant(self.n, other)

    __radd__ = __add__

    def __mul__(self, other):
        if isinstance(other, ZPoly):
            terms = []
            for c1, a1, b1 in self.terms:
                for c2, a2, b2 in other.terms:
                    terms.append(
                        (
                            c1 * c2,
                            tuple(x + y for x, y in zip(a1, a2)),
                            tuple(x + y for x, y in zip(b1, b2)),
                        )
                    )
            return ZPoly(self.n, tuple(terms)).collect()
        return ZPoly(
            self.n, tuple((c * other, a, b) for c, a, b in self.terms)
        )

    __rmul__ = __mul__

    def __sub__(self, other):
        return self + (-1.0) * other

    def collect(self):
        acc = {}
        for c, a, b in self.terms:
            acc[(a, b)] = acc.get((a, b), 0.0) + c
        terms = tuple((c, a, b) for (a, b), c in sorted(acc.items()) if c != 0)
        return ZPoly(self.n, terms)


class RealZPoly:
    """Real scalar field rho = Re P for a ZPoly P.

    Exposes value, Wirtinger gradient, real gradient and real Hessian, all
    closed form. Used for defining functions and for test fields fed to the
    Levi form evaluators.
    """

    def __init__(self, p: ZPoly):
        self.p = p
        self.n = p.n
        self._pz = [p.dz(j) for j in range(p.n)]
        self._pzb = [p.dzbar(j) for j in range(p.n)]
        # rho_{z_j} = (P_{z_j} + conj(P_{zbar_j})) / 2
        self._rz = [
            0.5 * (self._pz[j] + self._pzb[j].conj()) for j in range(p.n)
        ]
        self._rzz = [[self._rz[j].dz(k) for k in range(p.n)] for j in range(p.n)]
        self._rzzb = [
            [self._rz[j].dzbar(k) for k in range(p.n)] for j in range(p.n)
        ]

    def value(self, z):
        return np.real(self.p(z))

    def wirtinger_gradient(self, z):
        """rho_z as a complex row, shape (..., n)."""
        z = np.asarray(z, dtype=complex)
        return np.stack([rz(z) for rz in self._rz], axis=-1)

    def gradient_real(self, z):
        """Gradient in stacked real coordinates (Re z, Im z), shape (..., 2n)."""
        g = self.wirtinger_gradient(z)
        return np.concatenate([2.0 * g.real, -2.0 * g.imag], axis=-1)

    def hessian_real(self, z):
        """Real Hessian in stacked coordinates, shape (..., 2n, 2n)."""
        z = np.asarray(z, dtype=complex)
        n = self.n
        base = z.shape[:-1]
        H = np.zeros(base + (2 * n, 2 * n))
        for j in range(n):
            for k in range(n):
                hzz = self._rzz[j][k](z)
                hzzb = self._rzzb[j][k](z)
                H[..., j, k] = 2.0 * (hzz + hzzb).real
                H[..., n + j, n + k] = 2.0 * (hzzb - hzz).real
                H[..., j, n + k] = -2.0 * hzz.imag + 2.0 * hzzb.imag
        H[..., n:, :n] = np.swapaxes(H[..., :n, n:], -1, -2)
        return H
