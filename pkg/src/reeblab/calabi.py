"""Action fields and the Calabi invariant, by several independent routes.

The action sigma of an isotopy with respect to a primitive lambda of the
preserved form satisfies  d sigma = phi^* lambda - lambda  together with the
boundary normalisation  sigma(z) = int lambda over t -> phi_t(z)  for z on
the unit circle.  Along a generating Hamiltonian it is computed as

    sigma(z) = int_{t -> phi_t(z)} lambda + int_0^1 H_t(phi_t(z)) dt,

and the Calabi invariant is either  int_D sigma omega  (action route) or
2 int_{[0,1] x D} H dt omega  (Hamiltonian route).  The two routes are kept
deliberately independent so that their agreement is a meaningful check.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ParameterOutOfRange
from .forms import TWO_PI, DensityForm, LambdaZero
from .hamflow import DEFAULT_STEPS, integrate_flow
from .quadrature import adaptive_1d, adaptive_2d, gauss_nodes_1d


@dataclass
class CalabiValue:
    """A Calabi invariant with its provenance and an honest error bar."""
    value: float
    route: str
    error_estimate: float

    def to_json(self):
        return {"value": self.value, "route": self.route,
                "error_estimate": self.error_estimate}


class ActionField:
    """sigma on the closed disk, tied to the isotopy it belongs to.

    ``pieces`` optionally decomposes sigma as a smooth background plus
    disk-supported local parts, which quadrature uses to split panels:
    {"background": g, "disks": [(center, radius, local_fn), ...]}.
    """

    def __init__(self, sigma, primitive_tag, provenance, isotopy=None,
                 pieces=None):
        self.sigma = sigma
        self.primitive_tag = primitive_tag
        self.provenance = provenance
        self.isotopy = isotopy
        self.pieces = pieces

    def __call__(self, z):
        return self.sigma(np.asarray(z, dtype=complex))


# ---------------------------------------------------------------------------
# action routes
# ---------------------------------------------------------------------------

def action_via_hamiltonian(H, lam, z, form=None, steps=DEFAULT_STEPS):
    """Action at z from the trajectory of the generating Hamiltonian.

    Both line integrals are accumulated with the integrator's own
    fourth-order scheme, so the result is consistent with the flow itself.
    """
    if not H.boundary_flag:
        raise ParameterOutOfRange("action route requires H = 0 on the boundary")
    form = form or DensityForm.standard()
    tr = integrate_flow(H, form, z, steps=steps, lam=lam)
    return tr.lambda_integral + tr.h_integral


def action_field_of(isotopy, lam=None, steps=DEFAULT_STEPS):
    """ActionField of an isotopy; closed form when the isotopy carries one.

    The closed forms are relative to lambda_0, so a different primitive
    forces the Hamiltonian route.
    """
    lam = lam or LambdaZero()
    closed_ok = isinstance(lam, LambdaZero) and \
        isotopy.action_closed_form(np.array([0.25 + 0.0j])) is not None
    if closed_ok:
        return ActionField(lambda z: isotopy.action_closed_form(z),
                           primitive_tag=lam.name, provenance="closed-form",
                           isotopy=isotopy)
    H = isotopy.hamiltonian()
    return ActionField(
        lambda z: action_via_hamiltonian(H, lam, z, form=isotopy.form, steps=steps),
        primitive_tag=lam.name, provenance="hamiltonian-route", isotopy=isotopy)


def action_radial(profile, z, t=1.0):
    """Closed-form action h(s) - s h'(s) at s = |z|^2, for lambda_0.

    Requires h(1) = 0 so that the generating Hamiltonian vanishes on the
    boundary.
    """
    if abs(float(profile.h(1.0))) > 1e-10:
        raise ParameterOutOfRange("radial action needs h(1) = 0")
    s = np.abs(np.asarray(z, dtype=complex)) ** 2
    return t * (profile.h(s) - s * profile.dh(s))


def action_at_origin(isotopy, order=64):
    """sigma(0) for an origin-fixing isotopy: the integral of H_t(0) dt."""
    closed = isotopy.action_closed_form(np.array(0.0 + 0.0j))
    if closed is not None:
        return float(np.asarray(closed))
    H = isotopy.hamiltonian()
    zero = np.array(0.0 + 0.0j)

    def f(ts):
        return np.array([float(np.asarray(H.value(t, zero))) for t in np.atleast_1d(ts)])

    val, _ = adaptive_1d(f, 0.0, 1.0, tol=1e-12, order=order)
    return val


def action_of_composition(sigma_outer, phi_inner, sigma_inner):
    """sigma of the composed isotopy: sigma_outer o phi_inner + sigma_inner.

    Both actions must refer to the same primitive.
    """
    if sigma_outer.primitive_tag != sigma_inner.primitive_tag:
        raise ParameterOutOfRange("actions refer to different primitives")

    def sigma(z):
        z = np.asarray(z, dtype=complex)
        return sigma_outer(phi_inner(z)) + sigma_inner(z)

    provenance = ("closed-form"
                  if sigma_outer.provenance == sigma_inner.provenance == "closed-form"
                  else "hamiltonian-route")
    return ActionField(sigma, sigma_outer.primitive_tag, provenance)


# ---------------------------------------------------------------------------
# disk integrals
# ---------------------------------------------------------------------------

def integrate_over_disk(fn, form, tol=1e-10, order=12):
    """integral of fn(z) times the form over the disk, in polar coordinates."""
    def integrand(r, t):
        z = r * np.exp(1j * t)
        return np.asarray(fn(z), dtype=float) * np.asarray(form.F(r, t), dtype=float)

    return adaptive_2d(integrand, 0.0, 1.0, 0.0, TWO_PI, tol=tol, order=order)


def integrate_disk_local(fn, center, radius, form, tol=1e-11, n_angular=64):
    """integral of fn over the disk |z - center| <= radius, local polar coords.

    The angular direction is handled by a periodic trapezoid rule (exact for
    harmonics below ``n_angular``, which disposes of rigid-rotation artifacts
    exactly), the radial direction by adaptive Gauss panels.
    """
    if form.disk_density is None:
        raise ParameterOutOfRange("local disk quadrature needs a disk density")
    ang = np.linspace(0.0, TWO_PI, n_angular, endpoint=False)
    phases = np.exp(1j * ang)

    def radial_integrand(s):
        s = np.asarray(s, dtype=float)
        z = center + s[:, None] * phases[None, :]
        vals = np.asarray(fn(z), dtype=float) * np.asarray(form.disk_density(z),
                                                           dtype=float)
        return s * vals.mean(axis=1) * TWO_PI

    return adaptive_1d(radial_integrand, 0.0, radius, tol=tol)


# ---------------------------------------------------------------------------
# Calabi routes
# ---------------------------------------------------------------------------

def calabi_via_hamiltonian(H, form, tol=1e-9, t_order=24):
    """CAL = 2 * integral of H over [0,1] x D against dt ^ omega."""
    if not H.boundary_flag:
        raise ParameterOutOfRange("Calabi route requires H = 0 on the boundary")

    def disk_integral(t):
        if H.support_disks and form.disk_density is not None:
            total, err = 0.0, 0.0
            for center, radius in H.support_disks:
                v, e = integrate_disk_local(lambda z: np.asarray(H.value(t, z)),
                                            center, radius, form, tol=tol / 4)
                total += v
                err += e
            return total, err
        return integrate_over_disk(lambda z: np.asarray(H.value(t, z)), form, tol=tol / 4)

    if H.autonomous:
        val, err = disk_integral(0.0)
        return CalabiValue(2.0 * val, "hamiltonian", 2.0 * err)

    from .quadrature import gauss_nodes_1d
    nodes, weights = gauss_nodes_1d(0.0, 1.0, t_order)
    vals = [disk_integral(t) for t in nodes]
    total = float(np.dot(weights, [v for v, _ in vals]))
    err = float(np.dot(weights, [e for _, e in vals]))
    nodes2, weights2 = gauss_nodes_1d(0.0, 1.0, t_order // 2)
    total2 = float(np.dot(weights2, [disk_integral(t)[0] for t in nodes2]))
    return CalabiValue(2.0 * total, "hamiltonian", 2.0 * (err + abs(total - total2)))


def calabi_via_action(sigma, form, tol=1e-9):
    """CAL = integral of sigma against the form over the disk.

    When the action field carries a support decomposition, the smooth
    background and the disk-supported parts are integrated separately; a
    radial background integrates against the form's angular mass in one
    dimension, and ``disk_weight`` multiplies each listed disk (used for
    rotationally symmetric families where one sector stands for all).
    """
    if sigma.pieces is not None:
        pieces = sigma.pieces
        if "background_radial" in pieces:
            bgr = pieces["background_radial"]
            pack = form.primitives()

            def radial_integrand(r):
                r = np.asarray(r, dtype=float)
                return np.asarray(bgr(r), dtype=float) * np.asarray(
                    pack.B_period(r), dtype=float)

            total, err = adaptive_1d(radial_integrand, 0.0, 1.0, tol=tol)
        else:
            total, err = integrate_over_disk(pieces["background"], form, tol=tol)
        weight = pieces.get("disk_weight", 1.0)
        for center, radius, local_fn in pieces.get("disks", ()):
            v, e = integrate_disk_local(local_fn, center, radius, form,
                                        tol=tol / max(1.0, weight))
            total += weight * v
            err += weight * e
        return CalabiValue(total, "action-integral", err)
    val, err = integrate_over_disk(sigma, form, tol=tol)
    return CalabiValue(val, "action-integral", err)


def calabi_via_action_sampled(isotopy, form=None, lam=None, order=48,
                              steps=400):
    """Action-route Calabi for flow-backed isotopies, on fixed Gauss grids.

    The action is evaluated by one batched trajectory integration over a
    polar tensor rule (order x 2*order nodes), then contracted with the
    quadrature weights.  A half-order rule provides the error estimate.
    """
    form = form or isotopy.form
    lam = lam or LambdaZero()
    H = isotopy.hamiltonian()

    def contract(k):
        nr, wr = gauss_nodes_1d(0.0, 1.0, k)
        nt, wt = gauss_nodes_1d(0.0, TWO_PI, 2 * k)
        Z = nr[:, None] * np.exp(1j * nt[None, :])
        sig = action_via_hamiltonian(H, lam, Z, form=form, steps=steps)
        Fg = np.asarray(form.F(nr[:, None], nt[None, :]), dtype=float)
        return float(np.einsum("i,j,ij->", wr, wt, sig * Fg))

    value = contract(order)
    coarse = contract(order // 2)
    return CalabiValue(value, "action-integral", abs(value - coarse))


def calabi_of_isotopy(isotopy, tol=1e-9):
    """Preferred-route Calabi invariant of an isotopy.

    Closed-form constructions override this through their own ``cal``
    attribute; the generic route is the Hamiltonian one.
    """
    cal = getattr(isotopy, "cal_closed_form", None)
    if cal is not None:
        return cal()
    return calabi_via_hamiltonian(isotopy.hamiltonian(), isotopy.form, tol=tol)
