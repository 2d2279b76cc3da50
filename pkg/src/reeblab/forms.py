"""Two-forms on the disk and strip, their densities and cumulative primitives.

A 2-form is represented by its strip density F(r, theta), so that the form
reads F dr^dtheta on S = [0,1] x R.  When the form is the polar pullback of
f(x,y) dx^dy the two densities are related by F(r, theta) = r f(r cos theta,
r sin theta).  Attached to every form are the cumulative primitives

    A(r, theta) = integral of F(s, theta) ds   over s in [0, r],
    B(r, theta) = integral of F(r, s) ds       over s in [0, theta],
    G(r, theta) = double integral of F         over [0, r] x [0, theta],

which satisfy A(r, theta + 2 pi) = A(r, theta) and
B(r, theta + 2 pi) = B(r, theta) + B(r, 2 pi), plus the analogous shift rule
for G.  Angles are kept unwrapped everywhere; only presentation code reduces
them mod 2 pi.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import RectBivariateSpline

from .errors import ParameterOutOfRange, QuadratureNonconvergence
from .quadrature import TOL_QUAD, gauss_nodes_1d

TWO_PI = 2.0 * np.pi


# ---------------------------------------------------------------------------
# closed-form primitive bundles
# ---------------------------------------------------------------------------

@dataclass
class ClosedPrimitives:
    """Analytic A, B, G for a form whose integrals are known in closed form.

    The callables must be valid for unwrapped theta (any real value).
    """
    A: Callable
    B: Callable
    G: Callable


@dataclass
class PrimitivePack:
    """Evaluable cumulative primitives of a density form.

    ``A``, ``B``, ``G`` accept scalar or array (r, theta) with theta unwrapped;
    ``mode`` records whether they are closed forms or integrated numerically.
    """
    A: Callable
    B: Callable
    G: Callable
    mode: str = "analytic"
    nodes_used: int = 0

    def B_period(self, r):
        """B(r, 2 pi), the increment of B per full turn."""
        return self.B(r, TWO_PI)


# numpy Polynomial helpers for samples of theta handling
def _split_angle(theta):
    """Return (reduced angle in [0, 2 pi), integer turn count)."""
    theta = np.asarray(theta, dtype=float)
    k = np.floor(theta / TWO_PI)
    return theta - TWO_PI * k, k


# ---------------------------------------------------------------------------
# the form itself
# ---------------------------------------------------------------------------

class DensityForm:
    """A 2-form on the strip given by its density F(r, theta).

    Invariants: F is 2 pi-periodic in theta and positive for 0 < r < 1
    (the boundary values may vanish).  ``disk_density`` gives f with
    F = r * f(r e^{i theta}) when the form comes from the disk; it is None
    for strip-only densities.
    """

    def __init__(self, kind, F, disk_density=None, closed=None,
                 grid_data=None, params=None):
        self.kind = kind
        self.F = F
        self.disk_density = disk_density
        self.closed = closed
        self.grid_data = grid_data
        self.params = dict(params or {})
        self._pack_cache: Optional[PrimitivePack] = None

    # -- construction helpers -------------------------------------------------

    @staticmethod
    def standard():
        """The pullback of dx^dy: F(r, theta) = r."""
        closed = ClosedPrimitives(
            A=lambda r, t: 0.5 * np.asarray(r, dtype=float) ** 2 + 0.0 * np.asarray(t, dtype=float),
            B=lambda r, t: np.asarray(r, dtype=float) * np.asarray(t, dtype=float),
            G=lambda r, t: 0.5 * np.asarray(r, dtype=float) ** 2 * np.asarray(t, dtype=float),
        )
        return DensityForm(
            kind="standard",
            F=lambda r, t: np.asarray(r, dtype=float) + 0.0 * np.asarray(t, dtype=float),
            disk_density=lambda z: np.ones_like(np.real(z)),
            closed=closed,
        )

    @staticmethod
    def from_disk_density(f, kind="analytic:custom", params=None):
        """Form r f(r e^{i theta}) dr^dtheta from a smooth disk density f(z)."""
        def F(r, t):
            r = np.asarray(r, dtype=float)
            t = np.asarray(t, dtype=float)
            return r * np.asarray(f(r * np.exp(1j * t)))
        return DensityForm(kind=kind, F=F, disk_density=f, params=params)

    @staticmethod
    def from_grid(r_nodes, theta_nodes, values):
        """Bicubic interpolation of sampled F; primitives integrate the spline.

        ``values[i, j]`` = F(r_nodes[i], theta_nodes[j]); the theta grid must
        cover [0, 2 pi] with matching first/last columns.
        """
        r_nodes = np.asarray(r_nodes, dtype=float)
        theta_nodes = np.asarray(theta_nodes, dtype=float)
        values = np.asarray(values, dtype=float)
        if abs(theta_nodes[0]) > 1e-12 or abs(theta_nodes[-1] - TWO_PI) > 1e-9:
            raise ParameterOutOfRange("grid theta nodes must span [0, 2 pi]")
        if np.max(np.abs(values[:, 0] - values[:, -1])) > 1e-9:
            raise ParameterOutOfRange("grid samples are not 2 pi-periodic")
        spl = RectBivariateSpline(r_nodes, theta_nodes, values, kx=3, ky=3)

        def F(r, t):
            r = np.asarray(r, dtype=float)
            tm, _ = _split_angle(t)
            out = spl.ev(np.clip(r, 0.0, 1.0), tm)
            return out if out.shape else float(out)

        grid_data = {"r": r_nodes.tolist(), "theta": theta_nodes.tolist(),
                     "F": values.tolist()}
        form = DensityForm(kind="grid", F=F, grid_data=grid_data)
        form._spline = spl
        return form

    # -- evaluation ------------------------------------------------------------

    def density_at(self, z):
        """Disk density f at complex points z; requires a disk-backed form."""
        if self.disk_density is None:
            raise ParameterOutOfRange("form has no smooth disk density")
        return self.disk_density(z)

    def primitives(self, tol=TOL_QUAD, n_r=513, n_theta=1024):
        """Cumulative primitives A, B, G of this form (cached)."""
        if self._pack_cache is None:
            self._pack_cache = primitives(self, tol=tol, n_r=n_r, n_theta=n_theta)
        return self._pack_cache

    def total_mass(self):
        """Integral of F over the fundamental domain [0,1] x [0, 2 pi]."""
        return float(np.asarray(self.primitives().G(1.0, TWO_PI)))

    # -- serialization ----------------------------------------------------------

    def to_json(self):
        desc = {"kind": self.kind}
        if self.params:
            desc["params"] = self.params
        if self.kind == "grid":
            desc["grid"] = self.grid_data
        return desc

    @staticmethod
    def from_json(desc):
        kind = desc["kind"]
        if kind == "standard":
            return DensityForm.standard()
        if kind == "grid":
            g = desc["grid"]
            return DensityForm.from_grid(g["r"], g["theta"], g["F"])
        if kind.startswith("analytic:"):
            return registered_form(kind.split(":", 1)[1], **desc.get("params", {}))
        raise ParameterOutOfRange(f"unknown form kind {kind!r}")


def make_standard_form():
    """The form with F(r, theta) = r, carrying its closed-form primitives."""
    return DensityForm.standard()


# ---------------------------------------------------------------------------
# registered analytic family
# ---------------------------------------------------------------------------

def _cosine_form(amplitude=0.5):
    amp = float(amplitude)
    if not -1.0 < amp < 1.0:
        raise ParameterOutOfRange("cosine amplitude must lie in (-1, 1)")

    def F(r, t):
        r = np.asarray(r, dtype=float)
        t = np.asarray(t, dtype=float)
        return r * (1.0 + amp * np.cos(t))

    closed = ClosedPrimitives(
        A=lambda r, t: 0.5 * np.asarray(r, dtype=float) ** 2 * (1.0 + amp * np.cos(t)),
        B=lambda r, t: np.asarray(r, dtype=float) * (np.asarray(t, dtype=float) + amp * np.sin(t)),
        G=lambda r, t: 0.5 * np.asarray(r, dtype=float) ** 2 * (np.asarray(t, dtype=float) + amp * np.sin(t)),
    )
    return DensityForm(kind="analytic:cosine", F=F, closed=closed,
                       params={"amplitude": amp})


def _radial_poly_form(a=0.5):
    a = float(a)
    if a <= -1.0:
        raise ParameterOutOfRange("radial coefficient must exceed -1")

    def f(z):
        return 1.0 + a * np.abs(z) ** 2

    def F(r, t):
        r = np.asarray(r, dtype=float)
        return r * (1.0 + a * r ** 2) + 0.0 * np.asarray(t, dtype=float)

    closed = ClosedPrimitives(
        A=lambda r, t: (0.5 * np.asarray(r, dtype=float) ** 2
                        + 0.25 * a * np.asarray(r, dtype=float) ** 4) + 0.0 * np.asarray(t, dtype=float),
        B=lambda r, t: (np.asarray(r, dtype=float) * (1.0 + a * np.asarray(r, dtype=float) ** 2)) * np.asarray(t, dtype=float),
        G=lambda r, t: (0.5 * np.asarray(r, dtype=float) ** 2
                        + 0.25 * a * np.asarray(r, dtype=float) ** 4) * np.asarray(t, dtype=float),
    )
    return DensityForm(kind="analytic:radial_poly", F=F, disk_density=f,
                       closed=closed, params={"a": a})


def _xlinear_form(a=0.3):
    a = float(a)
    if not -1.0 < a < 1.0:
        raise ParameterOutOfRange("linear coefficient must lie in (-1, 1)")

    def f(z):
        return 1.0 + a * np.real(z)

    def F(r, t):
        r = np.asarray(r, dtype=float)
        t = np.asarray(t, dtype=float)
        return r * (1.0 + a * r * np.cos(t))

    closed = ClosedPrimitives(
        A=lambda r, t: 0.5 * np.asarray(r, dtype=float) ** 2
        + a * np.asarray(r, dtype=float) ** 3 * np.cos(t) / 3.0,
        B=lambda r, t: np.asarray(r, dtype=float) * np.asarray(t, dtype=float)
        + 0.5 * a * np.asarray(r, dtype=float) ** 2 * np.sin(t),
        G=lambda r, t: 0.5 * np.asarray(r, dtype=float) ** 2 * np.asarray(t, dtype=float)
        + a * np.asarray(r, dtype=float) ** 3 * np.sin(t) / 3.0,
    )
    return DensityForm(kind="analytic:xlinear", F=F, disk_density=f,
                       closed=closed, params={"a": a})


_REGISTRY = {
    "cosine": _cosine_form,
    "radial_poly": _radial_poly_form,
    "xlinear": _xlinear_form,
}


def registered_form(name, **params):
    """Look up a named analytic form; raises for unknown names."""
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise ParameterOutOfRange(f"unknown analytic form {name!r}") from None
    return factory(**params)


# ---------------------------------------------------------------------------
# numeric primitives for forms without closed A, B, G
# ---------------------------------------------------------------------------

def _numeric_pack(form, tol, n_r, n_theta, budget=4_000_000):
    """Sampled-grid cumulative primitives with tolerance-driven refinement.

    F is sampled on a tensor grid, the cumulative integrals are taken with a
    fourth-order rule, and the results are interpolated bicubically.  The grid
    doubles until two successive resolutions of A, B agree to ``tol``.
    """
    from scipy.integrate import cumulative_simpson

    def build(nr, nt):
        r = np.linspace(0.0, 1.0, nr)
        t = np.linspace(0.0, TWO_PI, nt)
        Fg = np.asarray(form.F(r[:, None], t[None, :]), dtype=float)
        Ag = cumulative_simpson(Fg, x=r, axis=0, initial=0.0)
        Bg = cumulative_simpson(Fg, x=t, axis=1, initial=0.0)
        Gg = cumulative_simpson(Bg, x=r, axis=0, initial=0.0)
        return r, t, Ag, Bg, Gg

    nr, nt = n_r, n_theta
    r, t, Ag, Bg, Gg = build(nr, nt)
    nodes = nr * nt
    while True:
        r2, t2, A2, B2, G2 = build(2 * nr - 1, 2 * nt - 1)
        nodes += (2 * nr - 1) * (2 * nt - 1)
        diff = max(np.max(np.abs(A2[::2, ::2] - Ag)),
                   np.max(np.abs(B2[::2, ::2] - Bg)))
        r, t, Ag, Bg, Gg = r2, t2, A2, B2, G2
        nr, nt = 2 * nr - 1, 2 * nt - 1
        if diff <= tol:
            break
        if nodes > budget:
            raise QuadratureNonconvergence(
                f"primitive grids exceeded {budget} nodes (last diff {diff:.3e})")

    sA = RectBivariateSpline(r, t, Ag, kx=3, ky=3)
    sB = RectBivariateSpline(r, t, Bg, kx=3, ky=3)
    sG = RectBivariateSpline(r, t, Gg, kx=3, ky=3)
    from scipy.interpolate import CubicSpline
    sBt = CubicSpline(r, Bg[:, -1])
    sGt = CubicSpline(r, Gg[:, -1])

    def A(rr, tt):
        rr = np.asarray(rr, dtype=float)
        tm, _ = _split_angle(tt)
        rr, tm = np.broadcast_arrays(rr, tm)
        return sA.ev(np.clip(rr, 0.0, 1.0), tm)

    def B(rr, tt):
        rr = np.asarray(rr, dtype=float)
        tm, k = _split_angle(tt)
        rr, tm, k = np.broadcast_arrays(rr, tm, k)
        rc = np.clip(rr, 0.0, 1.0)
        return sB.ev(rc, tm) + k * sBt(rc)

    def G(rr, tt):
        rr = np.asarray(rr, dtype=float)
        tm, k = _split_angle(tt)
        rr, tm, k = np.broadcast_arrays(rr, tm, k)
        rc = np.clip(rr, 0.0, 1.0)
        return sG.ev(rc, tm) + k * sGt(rc)

    return PrimitivePack(A=A, B=B, G=G, mode="sampled", nodes_used=nodes)


def primitives(form, tol=TOL_QUAD, n_r=513, n_theta=1024):
    """Primitive pack of a form: closed forms when available, else numeric."""
    if form.closed is not None:
        return PrimitivePack(A=form.closed.A, B=form.closed.B, G=form.closed.G,
                             mode="analytic")
    return _numeric_pack(form, tol, n_r, n_theta)


# ---------------------------------------------------------------------------
# disk 1-forms
# ---------------------------------------------------------------------------

class Primitive:
    """A smooth 1-form on the disk, used through its pairing with vectors.

    ``pair(z, v)`` evaluates lambda(z)[v] where z and v are complex (v a
    tangent vector read as v_x + i v_y).
    """

    name = "primitive"

    def pair(self, z, v):
        raise NotImplementedError


class LambdaZero(Primitive):
    """lambda_0 = (x dy - y dx) / 2."""

    name = "lambda0"

    def pair(self, z, v):
        return 0.5 * np.imag(np.conj(z) * v)


class LambdaRadial(Primitive):
    """a(z) (x dy - y dx) for a given coefficient field a."""

    def __init__(self, a, name="lambda_a"):
        self.a = a
        self.name = name

    def pair(self, z, v):
        return self.a(z) * np.imag(np.conj(z) * v)


class ShiftedPrimitive(Primitive):
    """lambda + du for a smooth function u with complex gradient grad_u."""

    def __init__(self, base, u, grad_u, name=None):
        self.base = base
        self.u = u
        self.grad_u = grad_u
        self.name = name or (base.name + "+du")

    def pair(self, z, v):
        return self.base.pair(z, v) + np.real(np.conj(self.grad_u(z)) * v)


class PulledBackPrimitive(Primitive):
    """h^* lambda for a holomorphic disk map h with derivative dh."""

    def __init__(self, base, h, dh, name=None):
        self.base = base
        self.h = h
        self.dh = dh
        self.name = name or ("pullback:" + base.name)

    def pair(self, z, v):
        return self.base.pair(self.h(z), self.dh(z) * v)


def primitive_lambda_a(f, order=48):
    """Coefficient a(x, y) = integral of t f(tx, ty) dt over [0, 1].

    The returned callable takes complex points and is paired as
    a(z) (x dy - y dx); for the polar pullback this 1-form lifts to
    A(r, theta) d theta.
    """
    nodes, weights = gauss_nodes_1d(0.0, 1.0, order)

    def a(z):
        z = np.asarray(z, dtype=complex)
        vals = np.asarray(f(nodes.reshape((-1,) + (1,) * z.ndim) * z[None, ...]))
        return np.einsum("q,q...->...", weights * nodes, vals)

    return a


def lambda_a_of(form, order=48):
    """The distinguished primitive of a disk-backed form, as a Primitive."""
    if form.kind == "standard":
        return LambdaZero()
    if form.disk_density is None:
        raise ParameterOutOfRange("form has no disk density; no lambda_a available")
    return LambdaRadial(primitive_lambda_a(form.disk_density, order=order),
                        name="lambda_a:" + form.kind)
