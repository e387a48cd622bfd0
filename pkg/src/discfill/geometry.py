"""Almost complex structures, hypersurfaces, tangent frames and Levi forms.

Conventions used throughout the package:

* C^n is identified with R^{2n} by stacking, x = (Re z, Im z).
* The standard structure J_st is the block matrix [[0, -I], [I, 0]]
  (multiplication by i).
* A map z: D -> C^n is holomorphic for a structure J iff
  dbar z = A(z) conj(d z), where the complex matrix A is recovered from J by
  A(z) v = (J_st + J(z))^{-1} (J_st - J(z)) conj(v).
* The Levi form of a scalar field u at q in direction v is normalized so
  that for the standard structure and u = |z|^2 a unit vector gives 4,
  the Laplacian of |zeta|^2 through the linear disc zeta -> q + v zeta.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DegenerateHypersurfaceError, StructureError
from .polynomials import RealZPoly, ZPoly

__all__ = [
    "j_standard",
    "real_to_complex",
    "complex_to_real",
    "a_from_j",
    "j_from_a",
    "StructureSpec",
    "HypersurfaceSpec",
    "TangentFrame",
    "ScalarField",
    "holomorphic_tangent_basis",
    "levi_form_direct",
    "levi_form_via_disc",
]

ON_SURFACE_TOL = 1e-9  # |rho(q)| below this counts as membership in E

_FD_STEP = 1e-5  # central difference step for derivative fallbacks


def j_standard(n):
    J = np.zeros((2 * n, 2 * n))
    J[:n, n:] = -np.eye(n)
    J[n:, :n] = np.eye(n)
    return J


def real_to_complex(x):
    x = np.asarray(x, dtype=float)
    n = x.shape[-1] // 2
    return x[..., :n] + 1j * x[..., n:]


def complex_to_real(z):
    z = np.asarray(z, dtype=complex)
    return np.concatenate([z.real, z.imag], axis=-1)


def antilinear_real_matrix(a):
    """Real 2n x 2n matrix of the map v -> a conj(v), batched over leading axes."""
    a = np.asarray(a, dtype=complex)
    n = a.shape[-1]
    q = np.zeros(a.shape[:-2] + (2 * n, 2 * n))
    q[..., :n, :n] = a.real
    q[..., :n, n:] = a.imag
    q[..., n:, :n] = a.imag
    q[..., n:, n:] = -a.real
    return q


def a_from_j(j_value):
    """Complex matrix of a structure given as a real 2n x 2n matrix.

    Batched over leading axes. Raises StructureError when J_st + J is
    (numerically) singular, i.e. the structure is too far from standard.
    """
    j_value = np.asarray(j_value, dtype=float)
    n = j_value.shape[-1] // 2
    js = j_standard(n)
    s = js + j_value
    if j_value.ndim == 2 and np.linalg.cond(s) > 1e12:
        raise StructureError("J_st + J is singular: structure too far from standard")
    try:
        q = np.linalg.solve(s, js - j_value)
    except np.linalg.LinAlgError as exc:
        raise StructureError("J_st + J is singular") from exc
    # Q is antilinear, Q w = A conj(w); columns of A are Q applied to the
    # real basis vectors e_1..e_n read back as complex vectors.
    return q[..., :n, :n] + 1j * q[..., n:, :n]


def j_from_a(a_value):
    """Real matrix of the structure with complex matrix A; inverse of a_from_j."""
    a_value = np.asarray(a_value, dtype=complex)
    n = a_value.shape[-1]
    smax = np.max(np.linalg.svd(a_value, compute_uv=False)) if a_value.size else 0.0
    if smax >= 1.0:
        raise StructureError(f"operator norm of A is {smax:.6g} >= 1")
    q = antilinear_real_matrix(a_value)
    eye = np.eye(2 * n)
    inv = np.linalg.solve(eye + q, eye - q)
    return np.einsum("ab,...bc->...ac", j_standard(n), inv)


def _fd_wirtinger_matrix(fun, z, n, step=_FD_STEP):
    """Central-difference Wirtinger derivatives of a matrix-valued map.

    Returns (d/dz, d/dzbar) with shape (..., n, n, n); last axis is the
    differentiation direction.
    """
    z = np.asarray(z, dtype=complex)
    base = fun(z)
    dz = np.zeros(base.shape + (n,), dtype=complex)
    dzb = np.zeros(base.shape + (n,), dtype=complex)
    for l in range(n):
        e = np.zeros(n, dtype=complex)
        e[l] = step
        dx = (fun(z + e) - fun(z - e)) / (2 * step)
        dy = (fun(z + 1j * e) - fun(z - 1j * e)) / (2 * step)
        dz[..., l] = 0.5 * (dx - 1j * dy)
        dzb[..., l] = 0.5 * (dx + 1j * dy)
    return dz, dzb


@dataclass(frozen=True)
class StructureSpec:
    """Almost complex structure on C^n given through its matrix field A(z).

    ``a`` maps points of shape (..., n) to matrices (..., n, n). Derivative
    evaluators, when present, return (..., n, n, n) with the differentiation
    direction last. ``j`` is optional; when absent it is derived from A.
    """

    n: int
    a: Callable
    a_z: Optional[Callable] = None
    a_zbar: Optional[Callable] = None
    j: Optional[Callable] = None
    closed_form: bool = False
    is_integrable: bool = False

    @staticmethod
    def standard(n):
        def a_zero(z):
            z = np.asarray(z, dtype=complex)
            return np.zeros(z.shape[:-1] + (n, n), dtype=complex)

        def deriv_zero(z):
            z = np.asarray(z, dtype=complex)
            return np.zeros(z.shape[:-1] + (n, n, n), dtype=complex)

        return StructureSpec(
            n=n, a=a_zero, a_z=deriv_zero, a_zbar=deriv_zero,
            closed_form=True, is_integrable=True,
        )

    @staticmethod
    def from_a_polys(n, entries):
        """Structure from a sparse table {(row, col): ZPoly} of A entries."""
        entries = {k: v for k, v in entries.items() if not v.is_zero}
        dz_entries = {
            (jk, l): p.dz(l) for jk, p in entries.items() for l in range(n)
        }
        dzb_entries = {
            (jk, l): p.dzbar(l) for jk, p in entries.items() for l in range(n)
        }

        def a_eval(z):
            z = np.asarray(z, dtype=complex)
            out = np.zeros(z.shape[:-1] + (n, n), dtype=complex)
            for (row, col), p in entries.items():
                out[..., row, col] = p(z)
            return out

        def make_deriv(table):
            def deriv(z):
                z = np.asarray(z, dtype=complex)
                out = np.zeros(z.shape[:-1] + (n, n, n), dtype=complex)
                for ((row, col), l), p in table.items():
                    if not p.is_zero:
                        out[..., row, col, l] = p(z)
                return out

            return deriv

        return StructureSpec(
            n=n, a=a_eval, a_z=make_deriv(dz_entries),
            a_zbar=make_deriv(dzb_entries),
            closed_form=True, is_integrable=not entries,
        )

    def a_at(self, z):
        return self.a(np.asarray(z, dtype=complex))

    def j_at(self, z):
        if self.j is not None:
            return self.j(np.asarray(z, dtype=complex))
        return j_from_a(self.a_at(z))

    def a_z_at(self, z):
        if self.a_z is not None:
            return self.a_z(np.asarray(z, dtype=complex))
        return _fd_wirtinger_matrix(self.a, z, self.n)[0]

    def a_zbar_at(self, z):
        if self.a_zbar is not None:
            return self.a_zbar(np.asarray(z, dtype=complex))
        return _fd_wirtinger_matrix(self.a, z, self.n)[1]

    def a_norm_at(self, z):
        """Largest singular value of A over the given points."""
        a = self.a_at(z)
        return np.linalg.svd(a, compute_uv=False)[..., 0]

    def validate_at(self, points, tol=1e-8):
        """Check the structure invariants on sample points.

        J^2 = -Id, consistency of A and J when both are supplied, and the
        solvability bound ||A|| < 1. Raises StructureError on violation.
        """
        points = np.asarray(points, dtype=complex)
        if points.ndim == 1:
            points = points[None, :]
        jv = self.j_at(points)
        eye = np.eye(2 * self.n)
        dev = np.max(np.abs(np.einsum("...ab,...bc->...ac", jv, jv) + eye))
        if dev > tol:
            raise StructureError(f"J^2 + Id deviates by {dev:.3g}")
        if self.j is not None:
            cons = np.max(np.abs(a_from_j(jv) - self.a_at(points)))
            if cons > tol:
                raise StructureError(f"A and J inconsistent by {cons:.3g}")
        norms = self.a_norm_at(points)
        if np.max(norms) >= 1.0:
            raise StructureError(
                f"||A|| = {np.max(norms):.6g} >= 1 on the sampled set"
            )


@dataclass(frozen=True)
class HypersurfaceSpec:
    """Real generating submanifold E = {rho = 0} of codimension d.

    ``rho`` maps (..., n) complex points to (..., d) real values, ``rho_z``
    to the complex Jacobi matrix (..., d, n). ``hessian`` gives the real
    Hessians (..., d, 2n, 2n); when None they are obtained by central
    differences of the gradient. ``p`` is the reference attachment point.
    """

    n: int
    d: int
    rho: Callable
    rho_z: Callable
    p: np.ndarray
    hessian: Optional[Callable] = None

    @staticmethod
    def from_polys(polys, p):
        """Build from a list of RealZPoly defining functions."""
        n = polys[0].n
        d = len(polys)

        def rho(z):
            z = np.asarray(z, dtype=complex)
            return np.stack([q.value(z) for q in polys], axis=-1)

        def rho_z(z):
            z = np.asarray(z, dtype=complex)
            return np.stack([q.wirtinger_gradient(z) for q in polys], axis=-2)

        def hess(z):
            z = np.asarray(z, dtype=complex)
            return np.stack([q.hessian_real(z) for q in polys], axis=-3)

        spec = HypersurfaceSpec(
            n=n, d=d, rho=rho, rho_z=rho_z, p=np.asarray(p, dtype=complex),
            hessian=hess,
        )
        spec.validate()
        return spec

    def validate(self, tol=ON_SURFACE_TOL):
        val = np.max(np.abs(self.rho(self.p)))
        if val > tol:
            raise DegenerateHypersurfaceError(
                f"rho(p) = {val:.3g}, attachment point is not on E"
            )
        sv = np.linalg.svd(self.rho_z(self.p), compute_uv=False)
        if sv[-1] < 1e-10:
            raise DegenerateHypersurfaceError("rho_z(p) is rank deficient")

    def on_surface(self, q, tol=ON_SURFACE_TOL):
        return np.max(np.abs(self.rho(q))) <= tol

    def gradient_real(self, z):
        """Real gradients of the rho components, shape (..., d, 2n)."""
        g = self.rho_z(np.asarray(z, dtype=complex))
        return np.concatenate([2.0 * g.real, -2.0 * g.imag], axis=-1)

    def hessian_real(self, z):
        if self.hessian is not None:
            return self.hessian(np.asarray(z, dtype=complex))
        z = np.asarray(z, dtype=complex)
        n2 = 2 * self.n
        h = np.zeros(z.shape[:-1] + (self.d, n2, n2))
        for i in range(n2):
            e = np.zeros(n2)
            e[i] = _FD_STEP
            ec = real_to_complex(e)
            gp = self.gradient_real(z + ec)
            gm = self.gradient_real(z - ec)
            h[..., :, i, :] = (gp - gm) / (2 * _FD_STEP)
        return 0.5 * (h + np.swapaxes(h, -1, -2))

    def component_field(self, k=0):
        """View rho^k as a ScalarField for the Levi form evaluators."""
        return _HypersurfaceComponentField(self, k)


class ScalarField:
    """Scalar field on C^n given by a plain callable, derivatives by FD.

    RealZPoly provides the same value/gradient_real/hessian_real interface
    with closed forms; either kind is accepted by the Levi form evaluators.
    """

    def __init__(self, fun, n, step=_FD_STEP):
        self.fun = fun
        self.n = n
        self.step = step

    def value(self, z):
        return self.fun(np.asarray(z, dtype=complex))

    def gradient_real(self, z):
        n2 = 2 * self.n
        g = np.zeros(np.shape(z)[:-1] + (n2,))
        for i in range(n2):
            e = np.zeros(n2)
            e[i] = self.step
            ec = real_to_complex(e)
            g[..., i] = (self.value(z + ec) - self.value(z - ec)) / (2 * self.step)
        return g

    def hessian_real(self, z):
        n2 = 2 * self.n
        h = np.zeros(np.shape(z)[:-1] + (n2, n2))
        step = max(self.step, 1e-4)
        for i in range(n2):
            e = np.zeros(n2)
            e[i] = step
            ec = real_to_complex(e)
            h[..., i, :] = (
                self.gradient_real(z + ec) - self.gradient_real(z - ec)
            ) / (2 * step)
        return 0.5 * (h + np.swapaxes(h, -1, -2))


class _HypersurfaceComponentField:
    def __init__(self, spec, k):
        self.spec = spec
        self.k = k
        self.n = spec.n

    def value(self, z):
        return self.spec.rho(z)[..., self.k]

    def gradient_real(self, z):
        return self.spec.gradient_real(z)[..., self.k, :]

    def hessian_real(self, z):
        return self.spec.hessian_real(z)[..., self.k, :, :]


@dataclass(frozen=True)
class TangentFrame:
    """Tangent data of E at a point.

    ``holo_basis`` holds n - d complex vectors spanning the holomorphic
    tangent space H_q E = T_q E intersected with J T_q E; together with
    their J-images they span H_q E over R and are orthonormal as produced.
    ``real_tangent_basis`` spans T_q E. ``normal_candidates`` holds the
    two signed unit normals per codimension (rows 2k, 2k+1).
    """

    point: np.ndarray
    real_tangent_basis: np.ndarray
    holo_basis: np.ndarray
    normal_candidates: np.ndarray


def _null_space_rows(mat, keep):
    vt = np.linalg.svd(mat)[2]
    return vt[-keep:, :]


def holomorphic_tangent_basis(hyp, q, structure, membership_tol=ON_SURFACE_TOL):
    """J-holomorphic tangent frame of E at q.

    Returns a TangentFrame whose holo_basis vectors v satisfy
    d rho(v) = d rho(J v) = 0 at q. Raises DegenerateHypersurfaceError when
    q is off E or rho_z loses rank there.
    """
    q = np.asarray(q, dtype=complex)
    n, d = hyp.n, hyp.d
    if np.max(np.abs(hyp.rho(q))) > membership_tol:
        raise DegenerateHypersurfaceError(
            f"point is not on E: |rho| = {np.max(np.abs(hyp.rho(q))):.3g}"
        )
    rz = hyp.rho_z(q)
    sv = np.linalg.svd(rz, compute_uv=False)
    if sv[-1] < 1e-10 * max(sv[0], 1.0):
        raise DegenerateHypersurfaceError("rho_z is rank deficient at q")

    grads = hyp.gradient_real(q)            # (d, 2n)
    jq = structure.j_at(q)
    rows = np.vstack([grads, grads @ jq])   # d rho and d rho o J
    null = _null_space_rows(rows, 2 * (n - d))
    proj_h = null.T @ null                  # orthogonal projector onto H

    # Greedy J-adapted orthonormalization seeded with the coordinate
    # directions, so the frame is canonical (e.g. exactly e_1, e_2 for a
    # linear hypersurface) rather than an arbitrary unitary mix from the
    # SVD null space. Each accepted v also locks in J v.
    candidates = [np.eye(2 * n)[j] for j in range(2 * n)] + list(null)
    chosen = []
    span = np.zeros((0, 2 * n))
    for cand in candidates:
        if len(chosen) == n - d:
            break
        w = proj_h @ cand
        if len(span):
            w = w - span.T @ (span @ w)
        nrm = np.linalg.norm(w)
        if nrm < 1e-3:
            continue
        v = w / nrm
        chosen.append(v)
        pair = np.vstack([span, v[None, :], (jq @ v)[None, :]])
        span = np.linalg.qr(pair.T)[0].T
    if len(chosen) < n - d:
        raise DegenerateHypersurfaceError(
            "could not build a full holomorphic tangent frame"
        )
    holo = np.stack([real_to_complex(v) for v in chosen])

    tangent = _null_space_rows(grads, 2 * n - d)
    normals = []
    for k in range(d):
        g = grads[k] / np.linalg.norm(grads[k])
        normals.extend([g, -g])
    return TangentFrame(
        point=q,
        real_tangent_basis=tangent,
        holo_basis=holo,
        normal_candidates=np.stack(normals),
    )


def _as_real_vector(v, n):
    v = np.asarray(v)
    if np.iscomplexobj(v) and v.shape[-1] == n:
        return complex_to_real(v)
    return np.asarray(v, dtype=float)


def levi_form_direct(u, q, v, structure, step=_FD_STEP):
    """Levi form of the field u at q on the vector v, by differentiating J.

    Evaluates -d(J* du)(v, Jv) at q using exterior calculus on constant
    extensions of v and Jv. With H the real Hessian of u and w = J(q) v,

        L = v' H v + w' H w + grad(u) . ((D_w J) v - (D_v J) w).

    Quadratic in v; calibrated so the standard structure with u = |z|^2
    gives 4 on unit vectors.
    """
    q = np.asarray(q, dtype=complex)
    v = _as_real_vector(v, structure.n)
    jq = structure.j_at(q)
    w = jq @ v
    hu = u.hessian_real(q)
    gu = u.gradient_real(q)

    def j_dir(direction):
        dc = real_to_complex(direction * step)
        return (structure.j_at(q + dc) - structure.j_at(q - dc)) / (2 * step)

    dvj = j_dir(v)
    dwj = j_dir(w)
    return float(v @ hu @ v + w @ hu @ w + gu @ (dwj @ v - dvj @ w))


def _frame_normalization(structure, q):
    """Linear change of frame G with G J(q) G^{-1} = J_st.

    Returns (g, s) with s = g^{-1}; s intertwines J_st with J(q). Raises
    StructureError when the normalization is singular.
    """
    n = structure.n
    jq = structure.j_at(q)
    s = 0.5 * (np.eye(2 * n) - jq @ j_standard(n))
    if np.linalg.cond(s) > 1e12:
        raise StructureError("frame normalization is singular at q")
    return np.linalg.inv(s), s


def levi_form_via_disc(u, q, v, structure, lap_step=1e-3, fd_step=_FD_STEP):
    """Levi form of u at q on v through a second order disc jet.

    After a linear frame change making J(q) standard, builds the jet
    f(zeta) = q + v zeta + alpha zeta conj(zeta) + gamma conj(zeta)^2 that
    solves the structure equation to first order, then returns the numerical
    Laplacian of u o f at 0. Independent of levi_form_direct and agrees with
    it within the documented tolerance.
    """
    q = np.asarray(q, dtype=complex)
    n = structure.n
    vr = _as_real_vector(v, n)
    g, s = _frame_normalization(structure, q)

    def a_transformed(wc):
        x = complex_to_real(wc) @ s.T
        jv = structure.j_at(real_to_complex(x))
        return a_from_j(np.einsum("ab,...bc,cd->...ad", g, jv, s))

    w0 = real_to_complex(g @ complex_to_real(q))
    vt = real_to_complex(g @ vr)

    # Directional Wirtinger derivatives of the transformed A along vt:
    # A_z[v] = (F' - i G') / 2 and A_zbar[conj v] = (F' + i G') / 2 with
    # F(t) = A(w0 + t v), G(t) = A(w0 + i t v).
    fp = (a_transformed(w0 + fd_step * vt) - a_transformed(w0 - fd_step * vt)) / (
        2 * fd_step
    )
    gp = (
        a_transformed(w0 + 1j * fd_step * vt)
        - a_transformed(w0 - 1j * fd_step * vt)
    ) / (2 * fd_step)
    a_z_v = 0.5 * (fp - 1j * gp)
    a_zb_vb = 0.5 * (fp + 1j * gp)
    alpha = a_z_v @ np.conj(vt)
    gamma = 0.5 * (a_zb_vb @ np.conj(vt))

    def jet(zeta):
        return w0 + vt * zeta + alpha * zeta * np.conj(zeta) + gamma * np.conj(zeta) ** 2

    def u_t(wc):
        return u.value(real_to_complex(complex_to_real(wc) @ s.T))

    h = lap_step
    return float(
        (u_t(jet(h)) + u_t(jet(-h)) + u_t(jet(1j * h)) + u_t(jet(-1j * h)) - 4 * u_t(jet(0.0)))
        / h**2
    )
