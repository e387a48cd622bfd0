"""Built-in structure/hypersurface pairs with closed-form oracle families.

Each scenario couples an almost complex structure with a hypersurface and,
where available, a closed-form family of attached discs used as the test
oracle. Scenario names are stable identifiers used by the CLI.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bishop import DiscParameters, SolverOptions
from .discfun import BoundaryFunction, DiscFunction
from .errors import ConfigError, PreconditionError
from .geometry import HypersurfaceSpec, StructureSpec
from .polynomials import RealZPoly, ZPoly

__all__ = ["Scenario", "builtin", "builtin_names", "oracle_disc", "oracle_params"]

BUILTIN_NAMES = (
    "standard-leviflat-C3",
    "ivashkovich-rosay",
    "sphere-C2",
    "sphere-C3",
    "quadric-signature(+,-)",
    "ir-scaled(lambda)",
)


@dataclass(frozen=True)
class Scenario:
    name: str
    structure: StructureSpec
    hypersurface: HypersurfaceSpec
    expected_dichotomy: str  # transverse | levi_flat_fill | hypersurface
    expected_rank: Optional[int] = None  # value map at a nonconstant disc
    expected_levi_max: Optional[float] = None
    oracle_kind: Optional[str] = None  # ir | sphere | quadric
    oracle_scale: float = 1.0  # lambda factor for the ir family
    side_labels: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.structure.n


def _imag_coordinate(n, j):
    """Im z_j as a defining polynomial."""
    return RealZPoly((-1j) * ZPoly.coordinate(n, j))


def _sphere(n):
    p = sum(
        (ZPoly.coordinate(n, j) * ZPoly.coordinate(n, j, conjugate=True)
         for j in range(n)),
        ZPoly.constant(n, -1.0),
    )
    return RealZPoly(p)


def _ir_structure(lam):
    entry = lam * ZPoly.coordinate(3, 0, conjugate=True)
    return StructureSpec.from_a_polys(3, {(2, 1): entry})


def _make_ir(name, lam):
    hyp = HypersurfaceSpec.from_polys([_imag_coordinate(3, 2)], p=np.zeros(3))
    if lam == 0.0:
        return Scenario(
            name=name,
            structure=StructureSpec.standard(3),
            hypersurface=hyp,
            expected_dichotomy="hypersurface",
            expected_rank=4,
            expected_levi_max=0.0,
            oracle_kind="ir",
            oracle_scale=0.0,
        )
    return Scenario(
        name=name,
        structure=_ir_structure(lam),
        hypersurface=hyp,
        expected_dichotomy="levi_flat_fill",
        expected_rank=5,
        expected_levi_max=0.0,
        oracle_kind="ir",
        oracle_scale=lam,
    )


def _make_sphere(n, name):
    p = np.zeros(n, dtype=complex)
    p[-1] = 1.0
    return Scenario(
        name=name,
        structure=StructureSpec.standard(n),
        hypersurface=HypersurfaceSpec.from_polys([_sphere(n)], p=p),
        expected_dichotomy="transverse",
        expected_rank=2 * n - 1,
        expected_levi_max=4.0,
        oracle_kind="sphere",
        side_labels={-1: "inside", 1: "outside"},
    )


def _make_quadric():
    rho = RealZPoly(
        (-1j) * ZPoly.coordinate(3, 2)
        - ZPoly.coordinate(3, 0) * ZPoly.coordinate(3, 0, conjugate=True)
        + ZPoly.coordinate(3, 1) * ZPoly.coordinate(3, 1, conjugate=True)
    )
    return Scenario(
        name="quadric-signature(+,-)",
        structure=StructureSpec.standard(3),
        hypersurface=HypersurfaceSpec.from_polys([rho], p=np.zeros(3)),
        expected_dichotomy="transverse",
        expected_levi_max=4.0,
        oracle_kind="quadric",
    )


_IR_SCALED = re.compile(r"^ir-scaled\(([-0-9.eE+]+)\)$")


def builtin_names():
    return BUILTIN_NAMES


def builtin(name) -> Scenario:
    """Look up a built-in scenario; ir-scaled takes a literal factor,
    e.g. ir-scaled(0.5)."""
    if name == "standard-leviflat-C3":
        return _make_ir(name, 0.0)
    if name == "ivashkovich-rosay":
        return _make_ir(name, 1.0)
    if name == "sphere-C2":
        return _make_sphere(2, name)
    if name == "sphere-C3":
        return _make_sphere(3, name)
    if name == "quadric-signature(+,-)":
        return _make_quadric()
    m = _IR_SCALED.match(name)
    if m:
        lam = float(m.group(1))
        if not 0.0 <= lam <= 1.0:
            raise ConfigError(f"ir-scaled factor {lam} outside [0, 1]")
        return _make_ir(name, lam)
    raise ConfigError(
        f"unknown scenario {name!r}; built-ins: {', '.join(BUILTIN_NAMES)}"
    )


# -- closed-form disc families ------------------------------------------


def _poly_eval(coeffs, zeta):
    out = np.zeros_like(zeta, dtype=complex)
    for c in reversed(coeffs):
        out = out * zeta + c
    return out


def _vanish_at_one(coeffs):
    coeffs = np.asarray(coeffs, dtype=complex).copy()
    coeffs[0] -= np.sum(coeffs)
    return coeffs


def _ir_third_component(c1, c2, lam):
    """Coefficients of psi = lam * int_1^zeta z1 z2' dtau, exact."""
    d2 = np.array([k * c2[k] for k in range(1, len(c2))], dtype=complex)
    if len(d2) == 0 or len(c1) == 0:
        return np.zeros(1, dtype=complex)
    prod = np.convolve(c1, d2)
    anti = np.concatenate([[0.0], prod / np.arange(1, len(prod) + 1)])
    anti[0] = -np.sum(anti)
    return lam * anti


def oracle_disc(scenario: Scenario, parameters: dict,
                options: SolverOptions = None) -> DiscFunction:
    """Closed-form attached disc of a scenario family.

    Parameter keys by family: ir takes z1, z2 (polynomial coefficients in
    zeta, forced to vanish at 1); sphere takes c (complex, C^2) or v
    (complex direction, C^n); quadric takes a, b (complex slopes).
    """
    options = options or SolverOptions()
    grid = options.grid()
    zeta = grid.zeta
    n = scenario.n

    if scenario.oracle_kind == "ir":
        c1 = _vanish_at_one(parameters["z1"])
        c2 = _vanish_at_one(parameters["z2"])
        psi = _ir_third_component(c1, c2, scenario.oracle_scale)
        vals = np.stack(
            [
                _poly_eval(c1, zeta),
                _poly_eval(c2, zeta),
                2.0 * np.real(_poly_eval(psi, zeta)) + 0j,
            ]
        )
        return DiscFunction.from_values(grid, vals)

    if scenario.oracle_kind == "sphere":
        v = _sphere_direction(scenario, parameters)
        m = -np.conj(v[-1]) / np.sum(np.abs(v) ** 2)
        p = scenario.hypersurface.p
        vals = p[:, None, None] + m * (1 - zeta)[None, :, :] * v[:, None, None]
        return DiscFunction.from_values(grid, vals)

    if scenario.oracle_kind == "quadric":
        a, b = complex(parameters["a"]), complex(parameters["b"])
        vals = np.stack(
            [
                a * (zeta - 1),
                b * (zeta - 1),
                2j * (abs(a) ** 2 - abs(b) ** 2) * (1 - zeta),
            ]
        )
        return DiscFunction.from_values(grid, vals)

    raise PreconditionError(f"scenario {scenario.name} has no closed-form family")


def _sphere_direction(scenario, parameters):
    n = scenario.n
    if "c" in parameters and n == 2:
        v = np.array([1.0, -complex(parameters["c"])], dtype=complex)
    else:
        v = np.asarray(parameters["v"], dtype=complex)
    if abs(v[-1]) < 1e-14:
        raise PreconditionError(
            "slice direction must have a nonzero normal component"
        )
    return v


def oracle_params(scenario: Scenario, parameters: dict,
                  options: SolverOptions = None, amplitude=1.0) -> DiscParameters:
    """Solver parameters whose solution is the closed-form oracle disc.

    The boundary data is the real part of the tangential components of the
    oracle disc in the canonical frame, scaled by 1/amplitude.
    """
    options = options or SolverOptions()
    grid = options.grid()
    disc = oracle_disc(scenario, parameters, options)
    n, d = scenario.n, scenario.hypersurface.d
    p = scenario.hypersurface.p
    tangential = disc.values[: n - d, 0, :] - p[: n - d, None]
    u = BoundaryFunction(grid, tangential.real / amplitude)
    return DiscParameters(
        attachment=scenario.hypersurface.p,
        boundary_data=u,
        amplitude=amplitude,
        options=options,
    )
