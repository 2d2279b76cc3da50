"""Area-preserving disk isotopies generated by time-dependent Hamiltonians.

The defining convention throughout is  i_X omega = dH,  which for
omega = f dx^dy gives the vector field  X = -i grad(H) / f  in complex
notation (grad read as H_x + i H_y).  Radial Hamiltonians H(z) = h(|z|^2)
with the standard form have the closed-form flow

    phi_t(z) = exp(-2 t h'(|z|^2) i) z,

which is used both as a fast path and as the oracle for the generic
integrator.  All map evaluations are vectorized over complex arrays.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import (DegenerateFormError, EscapeError, ParameterOutOfRange)
from .forms import DensityForm, LambdaZero, TWO_PI

TOL_GEOM = 1e-9
DEFAULT_STEPS = 2000


# ---------------------------------------------------------------------------
# Hamiltonians
# ---------------------------------------------------------------------------

class TimeHamiltonian:
    """H(t, z) with analytic gradient, t in [0, 1], z in the closed disk.

    ``grad`` returns the complex number H_x + i H_y.  ``boundary_flag``
    asserts H(t, .) = 0 on the unit circle, which makes the generated maps
    well defined on the closed disk.
    """

    def __init__(self, value, grad, boundary_flag=True, autonomous=False,
                 name="hamiltonian", support_disks=None, params=None):
        self.value = value
        self.grad = grad
        self.boundary_flag = boundary_flag
        self.autonomous = autonomous
        self.name = name
        # optional list of (center, radius) pairs outside which H vanishes
        self.support_disks = support_disks
        self.params = dict(params or {})

    def check_boundary(self, n_samples=64, n_times=5, tol=1e-12):
        """Largest |H| over boundary samples; the boundary flag's certificate."""
        z = np.exp(1j * np.linspace(0.0, TWO_PI, n_samples, endpoint=False))
        worst = 0.0
        for t in np.linspace(0.0, 1.0, n_times):
            worst = max(worst, float(np.max(np.abs(self.value(t, z)))))
        return worst

    def to_json(self):
        return {"name": self.name, "params": self.params}


def _fd_gradient(value, eps=1e-5):
    """Central-difference complex gradient of a scalar field value(t, z)."""

    def grad(t, z):
        z = np.asarray(z, dtype=complex)
        gx = (np.asarray(value(t, z + eps)) - np.asarray(value(t, z - eps))) / (2 * eps)
        gy = (np.asarray(value(t, z + 1j * eps)) - np.asarray(value(t, z - 1j * eps))) / (2 * eps)
        return gx + 1j * gy

    return grad


def hamiltonian_vector_field(H, form, t, z):
    """X with i_X omega = dH(t, .) at z, as a complex array.

    Raises DegenerateFormError if the density vanishes at an interior point.
    """
    z = np.asarray(z, dtype=complex)
    if form.kind == "standard":
        return -1j * np.asarray(H.grad(t, z), dtype=complex)
    f = np.asarray(form.density_at(z), dtype=float)
    interior = np.abs(z) < 1.0 - TOL_GEOM
    if np.any(interior & (f <= 0.0)):
        raise DegenerateFormError("form density vanishes at an interior point")
    f = np.where(f == 0.0, 1.0, f)  # boundary-only zeros; X is 0/0 -> use flag
    return -1j * np.asarray(H.grad(t, z), dtype=complex) / f


# ---------------------------------------------------------------------------
# radial profiles
# ---------------------------------------------------------------------------

@dataclass
class RadialProfile:
    """h(s) of s = |z|^2 in [0, 1] with derivatives; generator of a twist map."""
    h: Callable
    dh: Callable
    d2h: Callable
    name: str = "radial"
    params: dict = field(default_factory=dict)

    def hamiltonian(self):
        def value(t, z):
            return self.h(np.abs(np.asarray(z)) ** 2)

        def grad(t, z):
            z = np.asarray(z, dtype=complex)
            return 2.0 * self.dh(np.abs(z) ** 2) * z

        return TimeHamiltonian(value, grad,
                               boundary_flag=abs(float(self.h(1.0))) < 1e-12,
                               autonomous=True, name="radial:" + self.name,
                               params=self.params)


def radial_profile_poly(coeffs, name="poly"):
    """Profile h(s) = sum c_k (1 - s)^(k+1); h(1) = 0 automatically."""
    c = np.asarray(coeffs, dtype=float)
    powers = np.arange(1, len(c) + 1)

    def h(s):
        s = np.asarray(s, dtype=float)
        return np.sum(c * (1.0 - s[..., None]) ** powers, axis=-1)

    def dh(s):
        s = np.asarray(s, dtype=float)
        return -np.sum(c * powers * (1.0 - s[..., None]) ** (powers - 1), axis=-1)

    def d2h(s):
        s = np.asarray(s, dtype=float)
        ex = np.maximum(powers - 2, 0)
        return np.sum(c * powers * (powers - 1) * (1.0 - s[..., None]) ** ex, axis=-1)

    return RadialProfile(h, dh, d2h, name=name, params={"coeffs": c.tolist()})


def rotation_profile(beta):
    """h(s) = (beta/2)(1 - s): the rigid rotation by angle beta."""
    return radial_profile_poly([0.5 * beta], name=f"rotation:{beta}")


def radial_flow(profile, z, t=1.0):
    """Closed-form time-t map of the radial Hamiltonian h(|z|^2)."""
    z = np.asarray(z, dtype=complex)
    return np.exp(-2j * t * profile.dh(np.abs(z) ** 2)) * z


# ---------------------------------------------------------------------------
# numeric flow
# ---------------------------------------------------------------------------

@dataclass
class FlowTrace:
    """Samples of one trajectory plus its line-integral accumulators."""
    times: np.ndarray
    points: np.ndarray          # complex, shape (steps+1,) + batch shape
    lambda_integral: np.ndarray  # int lambda(phi_t) [d/dt phi_t] dt
    h_integral: np.ndarray       # int H_t(phi_t) dt
    angle: np.ndarray            # unwrapped polar angle along the trajectory

    @property
    def endpoint(self):
        return self.points[-1]


def integrate_flow(H, form, z0, steps=DEFAULT_STEPS, lam=None, t1=1.0,
                   store_path=False, track_angle=False, accumulate=True):
    """Integrate dz/dt = X_H(t, z) from z0 over [0, t1] with classical RK4.

    The line integrals of ``lam`` (a Primitive; default lambda_0) and of H
    along the trajectory are accumulated as extra state variables with the
    same fourth-order scheme, and the unwrapped polar angle can be tracked
    the same way.  Iterates drifting past |z| = 1 by more than TOL_GEOM raise
    EscapeError; smaller drift is projected back to the closed disk.
    ``accumulate=False`` skips the line integrals (pure transport).
    """
    if steps < 1:
        raise ParameterOutOfRange("steps must be at least 1")
    if lam is None:
        lam = LambdaZero()
    z = np.array(z0, dtype=complex, copy=True)
    batch = z.shape
    acc_l = np.zeros(batch)
    acc_h = np.zeros(batch)
    ang = np.angle(z) if track_angle else np.zeros(batch)
    dt = t1 / steps
    times = np.linspace(0.0, t1, steps + 1)
    path = [z.copy()] if store_path else None

    def rhs(t, state):
        zz = state[0]
        X = hamiltonian_vector_field(H, form, t, zz)
        if accumulate:
            dl = lam.pair(zz, X)
            dh = np.asarray(H.value(t, zz), dtype=float)
        else:
            dl = dh = 0.0
        if track_angle:
            s2 = np.abs(zz) ** 2
            s2 = np.where(s2 == 0.0, 1.0, s2)
            da = np.imag(np.conj(zz) * X) / s2
        else:
            da = 0.0
        return X, dl, dh, da

    state = (z, acc_l, acc_h, ang)
    for k in range(steps):
        t = times[k]
        k1 = rhs(t, state)
        k2 = rhs(t + 0.5 * dt, tuple(s + 0.5 * dt * d for s, d in zip(state, k1)))
        k3 = rhs(t + 0.5 * dt, tuple(s + 0.5 * dt * d for s, d in zip(state, k2)))
        k4 = rhs(t + dt, tuple(s + dt * d for s, d in zip(state, k3)))
        state = tuple(s + (dt / 6.0) * (a + 2 * b + 2 * c + d)
                      for s, a, b, c, d in zip(state, k1, k2, k3, k4))
        z = state[0]
        radius = np.abs(z)
        worst = float(np.max(radius)) if radius.size else float(radius)
        if worst > 1.0 + TOL_GEOM:
            raise EscapeError(f"trajectory left the disk: |z| = {worst:.12f}")
        if worst > 1.0:
            over = radius > 1.0
            z = np.where(over, z / np.where(radius == 0.0, 1.0, radius), z)
            state = (z,) + state[1:]
        if store_path:
            path.append(state[0].copy())

    pts = np.array(path) if store_path else np.array([np.asarray(z0, dtype=complex), state[0]])
    return FlowTrace(times=times if store_path else np.array([0.0, t1]),
                     points=pts, lambda_integral=state[1],
                     h_integral=state[2], angle=state[3])


# ---------------------------------------------------------------------------
# isotopies
# ---------------------------------------------------------------------------

class DiskIsotopy:
    """A path t -> phi_t of form-preserving disk maps with phi_0 = id.

    Concrete isotopies provide at least ``hamiltonian`` and ``form``;
    closed-form families override ``time_map``/``inverse_time_map``/
    ``action`` and expose an exact strip lift through ``lift_exact``.
    """

    form: DensityForm
    name = "isotopy"

    def hamiltonian(self) -> TimeHamiltonian:
        raise NotImplementedError

    # -- evaluation --------------------------------------------------------

    def time_map(self, z, t=1.0):
        """phi_t(z); numeric fallback integrates the generating field."""
        tr = integrate_flow(self.hamiltonian(), self.form, z,
                            steps=self._steps_for(t), t1=t)
        return tr.endpoint

    def __call__(self, z, t=1.0):
        return self.time_map(z, t)

    def inverse_time_map(self, z, t=1.0):
        """phi_t^{-1}(z); numeric fallback integrates backwards."""
        H = self.hamiltonian()
        back = TimeHamiltonian(lambda s, w: -np.asarray(H.value(t - s, w)),
                               lambda s, w: -np.asarray(H.grad(t - s, w)),
                               boundary_flag=H.boundary_flag,
                               name=H.name + ":reversed")
        tr = integrate_flow(back, self.form, z, steps=self._steps_for(t), t1=t)
        return tr.endpoint

    def _steps_for(self, t):
        return max(16, int(np.ceil(DEFAULT_STEPS * min(1.0, abs(t)))))

    # -- metadata ----------------------------------------------------------

    def fixes_origin(self, tol=TOL_GEOM):
        return bool(abs(self.time_map(np.array(0.0 + 0.0j))) <= 10 * tol)

    def lift_exact(self, r, theta, t=1.0):
        """(R, Theta) of the unwrapped strip lift, when available in closed form."""
        return None

    def action_closed_form(self, z, t=1.0):
        """sigma_{phi_t, lambda_0}(z) when available in closed form, else None."""
        return None

    def to_json(self):
        return {"name": self.name}


class HamiltonianIsotopy(DiskIsotopy):
    """Isotopy defined by numerically integrating a TimeHamiltonian."""

    def __init__(self, H, form, steps=DEFAULT_STEPS, name=None):
        self.H = H
        self.form = form
        self.steps = steps
        self.name = name or ("flow:" + H.name)

    def hamiltonian(self):
        return self.H

    def _steps_for(self, t):
        return max(16, int(np.ceil(self.steps * min(1.0, abs(t)))))

    def time_map(self, z, t=1.0):
        tr = integrate_flow(self.H, self.form, z, steps=self._steps_for(t), t1=t,
                            accumulate=False)
        return tr.endpoint

    def flow_with_angle(self, z, t=1.0):
        """(endpoint, unwrapped angle) for strip lifting."""
        tr = integrate_flow(self.H, self.form, z, steps=self._steps_for(t),
                            t1=t, track_angle=True, accumulate=False)
        return tr.endpoint, tr.angle

    def time_map_fast(self, z, t=1.0):
        tr = integrate_flow(self.H, self.form, z, steps=self._steps_for(t),
                            t1=t, accumulate=False)
        return tr.endpoint


class RadialIsotopy(DiskIsotopy):
    """Flow of h(|z|^2) with the standard form; everything in closed form."""

    def __init__(self, profile, name=None):
        self.profile = profile
        self.form = DensityForm.standard()
        self.name = name or ("radial:" + profile.name)

    def hamiltonian(self):
        return self.profile.hamiltonian()

    def time_map(self, z, t=1.0):
        return radial_flow(self.profile, z, t)

    def inverse_time_map(self, z, t=1.0):
        return radial_flow(self.profile, z, -t)

    def fixes_origin(self, tol=TOL_GEOM):
        return True

    def lift_exact(self, r, theta, t=1.0):
        r = np.asarray(r, dtype=float)
        theta = np.asarray(theta, dtype=float)
        twist = -2.0 * t * self.profile.dh(r ** 2)
        return r, theta + twist

    def action_closed_form(self, z, t=1.0):
        """sigma(z) = t (h - s h')(|z|^2) with respect to lambda_0."""
        s = np.abs(np.asarray(z, dtype=complex)) ** 2
        return t * (self.profile.h(s) - s * self.profile.dh(s))

    def to_json(self):
        return {"name": "radial", "profile": self.profile.name,
                "params": self.profile.params}


class CompositeIsotopy(DiskIsotopy):
    """t -> outer_t o inner_t; the time-1 map is the pointwise composition."""

    def __init__(self, outer, inner, name=None):
        if outer.form.kind != inner.form.kind:
            raise ParameterOutOfRange("composed isotopies must share the form")
        self.outer = outer
        self.inner = inner
        self.form = outer.form
        self.name = name or f"({outer.name} o {inner.name})"

    def hamiltonian(self):
        """Generator K_t = H_out(t, .) + H_in(t, outer_t^{-1}(.))."""
        Ho = self.outer.hamiltonian()
        Hi = self.inner.hamiltonian()
        outer = self.outer

        def value(t, z):
            return np.asarray(Ho.value(t, z)) + np.asarray(
                Hi.value(t, outer.inverse_time_map(np.asarray(z, dtype=complex), t)))

        return TimeHamiltonian(value, _fd_gradient(value),
                               boundary_flag=Ho.boundary_flag and Hi.boundary_flag,
                               name="composite:" + self.name)

    def time_map(self, z, t=1.0):
        return self.outer.time_map(self.inner.time_map(z, t), t)

    def inverse_time_map(self, z, t=1.0):
        return self.inner.inverse_time_map(self.outer.inverse_time_map(z, t), t)

    def lift_exact(self, r, theta, t=1.0):
        inner = self.inner.lift_exact(r, theta, t)
        if inner is None:
            return None
        Ri, Ti = inner
        return self.outer.lift_exact(Ri, Ti, t)

    def to_json(self):
        return {"name": "composite", "outer": self.outer.to_json(),
                "inner": self.inner.to_json()}


def compose_isotopies(outer, inner):
    """The isotopy t -> outer_t o inner_t."""
    return CompositeIsotopy(outer, inner)


class InverseIsotopy(DiskIsotopy):
    """The reversed element t -> (phi_t)^{-1} of a given isotopy."""

    def __init__(self, base):
        self.base = base
        self.form = base.form
        self.name = "inverse:" + base.name

    def hamiltonian(self):
        H = self.base.hamiltonian()
        base = self.base

        def value(t, z):
            return -np.asarray(H.value(t, base.time_map(np.asarray(z, dtype=complex), t)))

        return TimeHamiltonian(value, _fd_gradient(value),
                               boundary_flag=H.boundary_flag,
                               name="inverse:" + H.name)

    def time_map(self, z, t=1.0):
        return self.base.inverse_time_map(z, t)

    def inverse_time_map(self, z, t=1.0):
        return self.base.time_map(z, t)


class IdentityIsotopy(DiskIsotopy):
    """The constant isotopy phi_t = id."""

    def __init__(self, form=None):
        self.form = form or DensityForm.standard()
        self.name = "identity"

    def hamiltonian(self):
        zero = lambda t, z: np.zeros_like(np.real(np.asarray(z)))
        return TimeHamiltonian(zero, lambda t, z: np.zeros_like(np.asarray(z, dtype=complex)),
                               autonomous=True, name="zero")

    def time_map(self, z, t=1.0):
        return np.asarray(z, dtype=complex)

    def inverse_time_map(self, z, t=1.0):
        return np.asarray(z, dtype=complex)

    def lift_exact(self, r, theta, t=1.0):
        return np.asarray(r, dtype=float), np.asarray(theta, dtype=float)

    def action_closed_form(self, z, t=1.0):
        return np.zeros_like(np.real(np.asarray(z)))


# ---------------------------------------------------------------------------
# registered Hamiltonian family (JSON-addressable)
# ---------------------------------------------------------------------------

def multipole_hamiltonian(k, m, amplitude, phase=0.0, time_freq=0):
    """H = amp * tw(t) * r^k (1 - r^2) cos(m theta + phase) on the standard form.

    Vanishes on the boundary; its gradient vanishes at the origin for k >= 2,
    so the generated maps fix 0.  ``time_freq`` = q makes tw(t) = cos(2 pi q t).
    """
    if k < 2 or m < 1:
        raise ParameterOutOfRange("multipole needs k >= 2 and m >= 1")

    def tw(t):
        return np.cos(2.0 * np.pi * time_freq * t) if time_freq else 1.0

    def value(t, z):
        z = np.asarray(z, dtype=complex)
        r = np.abs(z)
        th = np.angle(z)
        return amplitude * tw(t) * r ** k * (1.0 - r ** 2) * np.cos(m * th + phase)

    def grad(t, z):
        # write H = amp tw(t) Re(e^{i phase} z^m) r^{k-m} (1 - r^2); differentiate
        # via Wirtinger calculus: grad = 2 d/dz-bar (conjugated) form.
        z = np.asarray(z, dtype=complex)
        r = np.abs(z)
        th = np.angle(z)
        c = np.cos(m * th + phase)
        s = np.sin(m * th + phase)
        rk = r ** (k - 1)
        dr = amplitude * tw(t) * (k * rk * (1.0 - r ** 2) - 2.0 * r ** (k + 1)) * c
        dth = -amplitude * tw(t) * m * r ** k * (1.0 - r ** 2) * s
        er = np.where(r == 0.0, 1.0 + 0.0j, z / np.where(r == 0.0, 1.0, r))
        rs = np.where(r == 0.0, 1.0, r)
        return dr * er + dth * (1j * er) / rs

    return TimeHamiltonian(value, grad, boundary_flag=True,
                           autonomous=(time_freq == 0),
                           name=f"multipole:k={k},m={m}",
                           params={"k": k, "m": m, "amplitude": amplitude,
                                   "phase": phase, "time_freq": time_freq})


def sum_hamiltonians(*hams, name="sum"):
    def value(t, z):
        return sum(np.asarray(H.value(t, z)) for H in hams)

    def grad(t, z):
        return sum(np.asarray(H.grad(t, z)) for H in hams)

    return TimeHamiltonian(value, grad,
                           boundary_flag=all(H.boundary_flag for H in hams),
                           autonomous=all(H.autonomous for H in hams),
                           name=name)
