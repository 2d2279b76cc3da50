"""Strip lifts, generating functions, and the negative-action fixed point.

Disk maps fixing the origin lift through p(r, theta) = r e^{i theta} to
diffeomorphisms Phi = (R, Theta) of the strip S = [0,1] x R commuting with
the deck shift T(r, theta) = (r, theta + 2 pi).  A lift is monotone when
D_1 R > 0 everywhere; monotone lifts admit a generating function W(R, theta)
obtained by integrating the closed 1-form

    Xi = (A(R, theta) - A(r, theta)) d theta + (B(R, theta) - B(R, Theta)) dR

in the mixed coordinates (R, theta), normalised by W(1, .) = 0.  Interior
critical points of W are exactly the interior fixed points of Phi, W equals
the action there, and the two-integral formula recovers the Calabi
invariant.  That is the machinery driving the fixed-point search below.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline, RectBivariateSpline

from .calabi import action_at_origin, calabi_of_isotopy, CalabiValue
from .errors import (FixedPointMismatch, HypothesisViolation, NonClosedError,
                     NotFixingOriginError, NotMonotoneError, UnwrapFailure)
from .forms import DensityForm, TWO_PI
from .hamflow import DiskIsotopy, TOL_GEOM
from .quadrature import gauss_nodes_1d

TOL_MONO = 1e-6
DEFAULT_GRID = (257, 513)   # nodes on [0,1] x [0, 2 pi]


# ---------------------------------------------------------------------------
# strip maps
# ---------------------------------------------------------------------------

@dataclass
class StripMap:
    """The lift Phi = (R, Theta) sampled on a tensor grid, plus evaluators."""
    r_nodes: np.ndarray
    t_nodes: np.ndarray
    R: np.ndarray
    Theta: np.ndarray
    d1R: np.ndarray
    monotone: bool
    lift_at: Callable                # (r, theta) arrays -> (R, Theta), unwrapped
    exact: bool                      # lift_at is closed form (cheap + precise)
    source: Optional[DiskIsotopy] = None
    form: Optional[DensityForm] = None
    _col_splines: Optional[list] = field(default=None, repr=False)

    @property
    def min_d1R(self):
        return float(np.min(self.d1R))

    def equivariance_residual(self):
        """max |Theta(r, 2 pi) - Theta(r, 0) - 2 pi| over the grid."""
        return float(np.max(np.abs(self.Theta[:, -1] - self.Theta[:, 0] - TWO_PI)))

    def boundary_residual(self):
        return max(float(np.max(np.abs(self.R[0, :]))),
                   float(np.max(np.abs(self.R[-1, :] - 1.0))))

    def column_splines(self):
        """Cubic splines of r -> (R, Theta) per theta column, cached."""
        if self._col_splines is None:
            self._col_splines = [
                (CubicSpline(self.r_nodes, self.R[:, j]),
                 CubicSpline(self.r_nodes, self.Theta[:, j]))
                for j in range(self.t_nodes.size)
            ]
        return self._col_splines

    def d1R_at_zero(self, theta):
        """Third-order one-sided estimate of D_1 R at r = 0."""
        h = self.r_nodes[1] - self.r_nodes[0]
        theta = np.asarray(theta, dtype=float)
        Rv = [self.lift_at(np.full_like(theta, k * h), theta)[0] for k in (1, 2, 3)]
        return (18.0 * Rv[0] - 9.0 * Rv[1] + 2.0 * Rv[2]) / (6.0 * h)


def _principal(angles):
    """Reduce angle differences to (-pi, pi]."""
    return (angles + np.pi) % TWO_PI - np.pi


def _lift_from_path_sampling(isotopy, r, theta, n_t=64, t=1.0):
    """Unwrapped lift by continuing the angle along the isotopy in time.

    Doubles the time sampling until consecutive angular increments stay
    below pi/2, which certifies the unwrapping.
    """
    z0 = r * np.exp(1j * theta)
    while True:
        ts = np.linspace(0.0, t, n_t + 1)
        ang = np.asarray(theta, dtype=float).copy()
        prev = z0
        ok = True
        for tk in ts[1:]:
            cur = isotopy.time_map(z0, tk)
            with np.errstate(divide="ignore", invalid="ignore"):
                d = np.angle(np.where(prev == 0, 1.0, cur / np.where(prev == 0, 1.0, prev)))
            d = np.where((prev == 0) | (cur == 0), 0.0, d)
            if np.max(np.abs(d)) > 0.5 * np.pi:
                ok = False
                break
            ang = ang + d
            prev = cur
        if ok:
            return np.abs(prev), ang
        n_t *= 2
        if n_t > 4096:
            raise UnwrapFailure("time sampling for the lift did not stabilise")


def lift_map(isotopy, grid=DEFAULT_GRID, tol_geom=TOL_GEOM, tol_mono=TOL_MONO,
             form=None):
    """Lift an origin-fixing disk isotopy to the strip on a tensor grid.

    The lift is the one determined by the isotopy (continuous in t from the
    identity).  Raises NotFixingOriginError when |phi(0)| > tol_geom and
    UnwrapFailure when angular increments between neighbouring grid nodes
    exceed pi.
    """
    nr, nt = grid
    form = form or isotopy.form
    origin = isotopy.time_map(np.array(0.0 + 0.0j))
    if abs(complex(np.asarray(origin).reshape(()))) > 10 * tol_geom:
        raise NotFixingOriginError(
            f"map moves the origin by {abs(complex(np.asarray(origin).reshape(()))):.2e}")

    r_nodes = np.linspace(0.0, 1.0, nr)
    t_nodes = np.linspace(0.0, TWO_PI, nt)
    rg, tg = np.meshgrid(r_nodes, t_nodes, indexing="ij")

    probe = isotopy.lift_exact(np.array([0.5]), np.array([0.1]))
    if probe is not None:
        Rg, Tg = isotopy.lift_exact(rg, tg)
        Rg = np.asarray(Rg, dtype=float)
        Tg = np.asarray(Tg, dtype=float)

        def lift_at(r, theta):
            return isotopy.lift_exact(np.asarray(r, dtype=float),
                                      np.asarray(theta, dtype=float))

        exact = True
    elif hasattr(isotopy, "flow_with_angle"):
        z0 = rg[1:, :] * np.exp(1j * tg[1:, :])
        z, ang = isotopy.flow_with_angle(z0)
        Rg = np.empty_like(rg)
        Tg = np.empty_like(tg)
        Rg[1:, :] = np.abs(z)
        # the tracker starts from the principal angle; rebase to the grid theta
        Tg[1:, :] = ang + (tg[1:, :] - np.angle(z0))
        Rg[0, :] = 0.0
        # Theta at r = 0 by quadratic extrapolation; W never consumes it,
        # the row only keeps interpolants smooth.
        Tg[0, :] = 3.0 * Tg[1, :] - 3.0 * Tg[2, :] + Tg[3, :]

        def lift_at(r, theta):
            r = np.asarray(r, dtype=float)
            theta = np.asarray(theta, dtype=float)
            w0 = r * np.exp(1j * theta)
            zz, aa = isotopy.flow_with_angle(w0)
            return np.abs(zz), aa + (theta - np.angle(w0))

        exact = False
    else:
        interior = rg[1:, :]
        Rg = np.empty_like(rg)
        Tg = np.empty_like(tg)
        Rg[1:, :], Tg[1:, :] = _lift_from_path_sampling(isotopy, interior, tg[1:, :])
        Rg[0, :] = 0.0
        Tg[0, :] = 3.0 * Tg[1, :] - 3.0 * Tg[2, :] + Tg[3, :]

        def lift_at(r, theta):
            r = np.asarray(r, dtype=float)
            theta = np.asarray(theta, dtype=float)
            return _lift_from_path_sampling(isotopy, r, theta)

        exact = False

    Rg = np.clip(Rg, 0.0, 1.0)

    if np.max(np.abs(np.diff(Tg, axis=1))) > np.pi:
        raise UnwrapFailure("angular increment between grid nodes exceeds pi")

    d1R = np.gradient(Rg, r_nodes, axis=0, edge_order=2)
    monotone = bool(np.min(d1R) > tol_mono)

    return StripMap(r_nodes=r_nodes, t_nodes=t_nodes, R=Rg, Theta=Tg,
                    d1R=d1R, monotone=monotone, lift_at=lift_at, exact=exact,
                    source=isotopy, form=form)


def radially_monotone(isotopy, grid=DEFAULT_GRID, tol_mono=TOL_MONO):
    """True iff D_1 R > tol_mono everywhere on the evaluation grid."""
    return lift_map(isotopy, grid=grid, tol_mono=tol_mono).monotone


# ---------------------------------------------------------------------------
# Moebius conjugation
# ---------------------------------------------------------------------------

class MobiusMap:
    """h(z) = (z + z0) / (conj(z0) z + 1), the disk automorphism with h(0) = z0."""

    def __init__(self, z0):
        if abs(z0) >= 1.0:
            raise FixedPointMismatch("Moebius center must be interior")
        self.z0 = complex(z0)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        return (z + self.z0) / (np.conj(self.z0) * z + 1.0)

    def inverse(self, w):
        w = np.asarray(w, dtype=complex)
        return (w - self.z0) / (1.0 - np.conj(self.z0) * w)

    def deriv(self, z):
        z = np.asarray(z, dtype=complex)
        return (1.0 - abs(self.z0) ** 2) / (np.conj(self.z0) * z + 1.0) ** 2


class ConjugatedIsotopy(DiskIsotopy):
    """t -> h^{-1} o phi_t o h, preserving the pulled-back form h^* omega."""

    def __init__(self, base, mobius):
        self.base = base
        self.h = mobius
        base_density = base.form.disk_density
        if base_density is None:
            raise FixedPointMismatch("conjugation needs a disk-backed form")

        def density(z):
            z = np.asarray(z, dtype=complex)
            return np.asarray(base_density(mobius(z))) * np.abs(mobius.deriv(z)) ** 2

        self.form = DensityForm.from_disk_density(density, kind="analytic:pullback")
        self.name = f"conj[{mobius.z0:.3f}]:{base.name}"

    def hamiltonian(self):
        Hb = self.base.hamiltonian()
        h = self.h

        def value(t, z):
            return np.asarray(Hb.value(t, h(z)))

        def grad(t, z):
            z = np.asarray(z, dtype=complex)
            return np.asarray(Hb.grad(t, h(z))) * np.conj(h.deriv(z))

        return _conjugated_hamiltonian(value, grad, Hb)

    def time_map(self, z, t=1.0):
        return self.h.inverse(self.base.time_map(self.h(z), t))

    def inverse_time_map(self, z, t=1.0):
        return self.h.inverse(self.base.inverse_time_map(self.h(z), t))


def _conjugated_hamiltonian(value, grad, parent):
    from .hamflow import TimeHamiltonian
    return TimeHamiltonian(value, grad, boundary_flag=parent.boundary_flag,
                           autonomous=parent.autonomous,
                           name="conjugated:" + parent.name)


def mobius_conjugate(isotopy, z0, tol_fix=1e-8):
    """Conjugate an isotopy so that its interior fixed point z0 moves to 0.

    Returns the conjugated isotopy, which carries the pulled-back form; the
    Calabi invariant and the action values at corresponding fixed points are
    unchanged.
    """
    z0 = complex(z0)
    if abs(z0) >= 1.0:
        raise FixedPointMismatch("fixed point must be interior")
    moved = complex(np.asarray(isotopy.time_map(np.array(z0))).reshape(()))
    if abs(moved - z0) > tol_fix:
        raise FixedPointMismatch(
            f"point is not fixed: |phi(z0) - z0| = {abs(moved - z0):.2e}")
    if z0 == 0.0:
        return isotopy
    return ConjugatedIsotopy(isotopy, MobiusMap(z0))


# ---------------------------------------------------------------------------
# generating function
# ---------------------------------------------------------------------------

@dataclass
class GeneratingFunction:
    """W on the strip with normalisation W(1, .) = 0 and stored gradients."""
    R_nodes: np.ndarray
    T_nodes: np.ndarray
    W: np.ndarray
    XiR: np.ndarray                # = B(R, theta) - B(R, Theta) = D_1 W
    XiT: np.ndarray                # = A(R, theta) - A(r, theta)  = D_2 W
    r_of: np.ndarray               # inverse radius r(R, theta)
    Theta_of: np.ndarray           # Theta as a function of (R, theta)
    closedness_residual: float
    strip_map: StripMap
    pack: object
    _spline: Optional[RectBivariateSpline] = field(default=None, repr=False)

    def spline(self):
        if self._spline is None:
            self._spline = RectBivariateSpline(self.R_nodes, self.T_nodes,
                                               self.W, kx=3, ky=3)
        return self._spline

    def value(self, R, theta):
        """Interpolated W; theta is reduced mod 2 pi (W is periodic)."""
        R = np.clip(np.asarray(R, dtype=float), 0.0, 1.0)
        tm = np.mod(np.asarray(theta, dtype=float), TWO_PI)
        out = self.spline().ev(R, tm)
        return out if out.shape else float(out)

    def value_precise(self, R, theta, order=48):
        """Fresh path integration of Xi to (R, theta); exact-lift maps only."""
        return _w_by_path(self, float(R), float(theta), order=order)

    def grad_fields(self, R, theta):
        """(D_1 W, D_2 W) through the stored gradient grids."""
        sR = RectBivariateSpline(self.R_nodes, self.T_nodes, self.XiR, kx=3, ky=3)
        sT = RectBivariateSpline(self.R_nodes, self.T_nodes, self.XiT, kx=3, ky=3)
        R = np.clip(np.asarray(R, dtype=float), 0.0, 1.0)
        tm = np.mod(np.asarray(theta, dtype=float), TWO_PI)
        return sR.ev(R, tm), sT.ev(R, tm)

    def at_zero(self):
        """(mean, spread) of W on the inner boundary component."""
        row = self.W[0, :]
        return float(np.mean(row)), float(np.max(row) - np.min(row))

    def periodicity_residual(self):
        return float(np.max(np.abs(self.W[:, -1] - self.W[:, 0])))

    def to_csv_rows(self):
        rows = []
        for i, R in enumerate(self.R_nodes):
            for j, t in enumerate(self.T_nodes):
                rows.append((R, t, self.W[i, j]))
        return rows


def _invert_columns(smap, pack):
    """r(R, theta) and Theta(R, theta) on the (R, theta) tensor grid.

    Bisection (then a secant polish) on the monotone radial sections of R,
    to 1e-12 in r.  Exact lifts are inverted against the true map, sampled
    lifts against their column splines.
    """
    nr, nt = smap.R.shape
    targets = smap.r_nodes
    r_of = np.empty((nr, nt))
    theta_of = np.empty((nr, nt))

    if smap.exact:
        tgrid = np.broadcast_to(smap.t_nodes[None, :], (nr, nt))
        Rt = np.broadcast_to(targets[:, None], (nr, nt))
        lo = np.zeros((nr, nt))
        hi = np.ones((nr, nt))
        for _ in range(52):
            mid = 0.5 * (lo + hi)
            Rm = smap.lift_at(mid, tgrid)[0]
            above = Rm > Rt
            hi = np.where(above, mid, hi)
            lo = np.where(above, lo, mid)
        r_of = 0.5 * (lo + hi)
        # secant polish with the analytic map
        for _ in range(2):
            R1 = smap.lift_at(r_of, tgrid)[0]
            dR = smap.lift_at(np.clip(r_of + 1e-7, 0, 1), tgrid)[0] - R1
            step = np.where(dR != 0.0, (Rt - R1) * 1e-7 / np.where(dR == 0, 1, dR), 0.0)
            r_of = np.clip(r_of + step, 0.0, 1.0)
        theta_of = smap.lift_at(r_of, tgrid)[1]
    else:
        for j in range(nt):
            sR, sT = smap.column_splines()[j]
            lo = np.zeros(nr)
            hi = np.ones(nr)
            for _ in range(52):
                mid = 0.5 * (lo + hi)
                above = sR(mid) > targets
                hi = np.where(above, mid, hi)
                lo = np.where(above, lo, mid)
            rj = 0.5 * (lo + hi)
            r_of[:, j] = rj
            theta_of[:, j] = sT(rj)

    r_of[0, :] = 0.0
    r_of[-1, :] = 1.0
    return r_of, theta_of


def generating_function(smap, form=None, pack=None, closed_tol=1e-5):
    """Generating function of a monotone strip map, normalised by W(1,.) = 0.

    W is assembled by integrating Xi along (1,0) -> (R,0) -> (R,theta) and
    cross-checked against the alternate order; the maximal discrepancy is the
    reported closedness residual, the numerical certificate that the map
    preserves the form.
    """
    if not smap.monotone:
        raise NotMonotoneError(f"min D_1 R = {smap.min_d1R:.3e}")
    form = form or smap.form
    pack = pack or form.primitives()

    R_nodes, T_nodes = smap.r_nodes, smap.t_nodes
    r_of, theta_of = _invert_columns(smap, pack)

    Rg = np.broadcast_to(R_nodes[:, None], r_of.shape)
    Tg = np.broadcast_to(T_nodes[None, :], r_of.shape)

    XiR = np.asarray(pack.B(Rg, Tg) - pack.B(Rg, theta_of), dtype=float)
    XiT = np.asarray(pack.A(Rg, Tg) - pack.A(r_of, Tg), dtype=float)

    from .quadrature import cumulative_integral
    # radial leg along theta = 0, rebased so that W(1, .) = 0
    cR0 = cumulative_integral(XiR[:, 0], R_nodes)
    radial_leg = cR0 - cR0[-1]
    # angular legs at every R
    ang = cumulative_integral(XiT, T_nodes)
    W = radial_leg[:, None] + ang

    # alternate order: angular leg at R = 1 (identically zero since r(1,.) = 1),
    # then the radial leg at fixed theta
    cR = cumulative_integral(XiR.T, R_nodes).T
    W_alt = cR - cR[-1, :][None, :]
    residual = float(np.max(np.abs(W - W_alt)))
    if residual > closed_tol:
        raise NonClosedError(
            f"path-dependence of Xi is {residual:.3e}; the map does not "
            f"preserve the form at tolerance {closed_tol:.1e}")

    return GeneratingFunction(R_nodes=R_nodes, T_nodes=T_nodes, W=W,
                              XiR=XiR, XiT=XiT, r_of=r_of, Theta_of=theta_of,
                              closedness_residual=residual, strip_map=smap,
                              pack=pack)


def _xi_at(gf, R, theta):
    """Exact Xi components at one point, via the strip map's own evaluator."""
    smap, pack = gf.strip_map, gf.pack
    R = np.asarray(R, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if smap.exact:
        lo = np.zeros_like(R)
        hi = np.ones_like(R)
        for _ in range(52):
            mid = 0.5 * (lo + hi)
            above = smap.lift_at(mid, theta)[0] > R
            hi = np.where(above, mid, hi)
            lo = np.where(above, lo, mid)
        r = 0.5 * (lo + hi)
        Th = smap.lift_at(r, theta)[1]
    else:
        # spline-backed: interpolate the stored inverse grids
        sr = RectBivariateSpline(gf.R_nodes, gf.T_nodes, gf.r_of, kx=3, ky=3)
        st = RectBivariateSpline(gf.R_nodes, gf.T_nodes, gf.Theta_of, kx=3, ky=3)
        tm = np.mod(theta, TWO_PI)
        r = sr.ev(R, tm)
        Th = st.ev(R, tm) + (theta - tm)
    xiR = np.asarray(pack.B(R, theta) - pack.B(R, Th), dtype=float)
    xiT = np.asarray(pack.A(R, theta) - pack.A(r, theta), dtype=float)
    return xiR, xiT


def _w_by_path(gf, R, theta, order=48):
    """W(R, theta) by fresh Gauss quadrature of Xi along the broken path."""
    nodes, weights = gauss_nodes_1d(1.0, R, order)
    xiR, _ = _xi_at(gf, nodes, np.zeros_like(nodes))
    val = float(np.dot(weights, xiR))
    if theta != 0.0:
        nodes, weights = gauss_nodes_1d(0.0, theta, order)
        _, xiT = _xi_at(gf, np.full_like(nodes, R), nodes)
        val += float(np.dot(weights, xiT))
    return val


def curl_residual(gf, n=64, step=1e-4):
    """max |d(XiR)/d theta - d(XiT)/dR| over an n x n interior grid.

    Central differences with an analytic step on the Xi evaluator, so the
    estimate is not polluted by the storage grid spacing.
    """
    Rs = np.linspace(0.08, 0.92, n)
    Ts = np.linspace(0.1, TWO_PI - 0.1, n)
    Rg, Tg = np.meshgrid(Rs, Ts, indexing="ij")
    xiR_tp = _xi_at(gf, Rg, Tg + step)[0]
    xiR_tm = _xi_at(gf, Rg, Tg - step)[0]
    xiT_rp = _xi_at(gf, Rg + step, Tg)[1]
    xiT_rm = _xi_at(gf, Rg - step, Tg)[1]
    curl = (xiR_tp - xiR_tm - xiT_rp + xiT_rm) / (2.0 * step)
    return float(np.max(np.abs(curl)))


def w1w2_residual(gf, n_probes=24, step=1e-3, seed=11):
    """Worst |FD(W) - Xi| over random interior probes, both components.

    W is re-evaluated at analytically placed probe offsets by fresh path
    integration of Xi, and differentiated with a fourth-order Richardson
    stencil, so the check is independent of the storage grid spacing.
    """
    rng = np.random.default_rng(seed)
    Rs = rng.uniform(0.1, 0.9, n_probes)
    Ts = rng.uniform(0.2, TWO_PI - 0.2, n_probes)
    worst = 0.0
    for R, th in zip(Rs, Ts):
        xiR, xiT = _xi_at(gf, np.array(R), np.array(th))

        def dW(dR, dT):
            return _w_by_path(gf, R + dR, th + dT)

        d1 = (8 * (dW(step, 0) - dW(-step, 0))
              - (dW(2 * step, 0) - dW(-2 * step, 0))) / (12 * step)
        d2 = (8 * (dW(0, step) - dW(0, -step))
              - (dW(0, 2 * step) - dW(0, -2 * step))) / (12 * step)
        worst = max(worst, abs(d1 - float(xiR)), abs(d2 - float(xiT)))
    return worst


# ---------------------------------------------------------------------------
# action and Calabi from W
# ---------------------------------------------------------------------------

@dataclass
class StripAction:
    """The lifted action Sigma = W(R, theta) + G(Phi) - G(R, theta)."""
    r_nodes: np.ndarray
    t_nodes: np.ndarray
    values: np.ndarray
    gf: GeneratingFunction

    def at(self, r, theta):
        """Sigma at strip points, through the same formula (not interpolation)."""
        smap, pack, gf = self.gf.strip_map, self.gf.pack, self.gf
        R, Th = smap.lift_at(np.asarray(r, dtype=float), np.asarray(theta, dtype=float))
        return (gf.value(R, np.asarray(theta, dtype=float))
                + np.asarray(pack.G(R, Th), dtype=float)
                - np.asarray(pack.G(R, np.asarray(theta, dtype=float)), dtype=float))

    def on_disk(self, z):
        z = np.asarray(z, dtype=complex)
        return self.at(np.abs(z), np.angle(z))


def action_from_W(gf, smap=None, pack=None):
    """The action field recovered from the generating function.

    At fixed points of the lift Sigma reduces to W itself.
    """
    smap = smap or gf.strip_map
    pack = pack or gf.pack
    Rg = smap.R
    Tg = np.broadcast_to(smap.t_nodes[None, :], Rg.shape)
    Wv = gf.value(Rg, Tg)
    vals = (Wv + np.asarray(pack.G(Rg, smap.Theta), dtype=float)
            - np.asarray(pack.G(Rg, Tg), dtype=float))
    return StripAction(r_nodes=smap.r_nodes, t_nodes=smap.t_nodes,
                       values=vals, gf=gf)


def calabi_from_W(gf, smap=None, form=None):
    """Calabi invariant by the two-integral generating-function formula."""
    from scipy.integrate import simpson

    smap = smap or gf.strip_map
    form = form or smap.form
    rg = np.broadcast_to(smap.r_nodes[:, None], smap.R.shape)
    tg = np.broadcast_to(smap.t_nodes[None, :], smap.R.shape)
    F = np.asarray(form.F(rg, tg), dtype=float)
    W_of_R = gf.value(smap.R, tg)
    W_plain = gf.value(rg, tg)
    integrand = (W_of_R + W_plain) * F
    inner = simpson(integrand, x=smap.t_nodes, axis=1)
    value = float(simpson(inner, x=smap.r_nodes))
    # Richardson-style estimate from the half grid
    inner_h = simpson(integrand[::2, ::2], x=smap.t_nodes[::2], axis=1)
    value_h = float(simpson(inner_h, x=smap.r_nodes[::2]))
    return CalabiValue(value, "generating-function", abs(value - value_h))


# ---------------------------------------------------------------------------
# the fixed-point search
# ---------------------------------------------------------------------------

@dataclass
class FixedPointResult:
    point: complex
    action: float
    residual: float

    def to_json(self):
        return {"z": [self.point.real, self.point.imag],
                "action": self.action, "residual": self.residual}


def _refine_fixed_point(smap, R0, th0, tol=1e-10, max_iter=60):
    """Damped least-squares Newton on (R - r, Theta - theta)."""
    x = np.array([R0, th0])
    eps = 1e-7

    def g(p):
        R, Th = smap.lift_at(np.array(p[0]), np.array(p[1]))
        return np.array([float(R - p[0]), float(Th - p[1])])

    res = g(x)
    for _ in range(max_iter):
        if np.max(np.abs(res)) < tol:
            break
        J = np.empty((2, 2))
        for k in range(2):
            dp = np.zeros(2)
            dp[k] = eps
            J[:, k] = (g(x + dp) - g(x - dp)) / (2 * eps)
        step, *_ = np.linalg.lstsq(J, -res, rcond=None)
        lam = 1.0
        for _ in range(20):
            cand = x + lam * step
            cand[0] = min(max(cand[0], 0.0), 1.0)
            cres = g(cand)
            if np.linalg.norm(cres) < np.linalg.norm(res):
                x, res = cand, cres
                break
            lam *= 0.5
        else:
            break
    return x[0], x[1], float(np.max(np.abs(res)))


def find_negative_fixed_point(isotopy, form=None, grid=DEFAULT_GRID,
                              tol_fix=1e-9, cal_slack=1e-7, smap=None, gf=None):
    """Interior fixed point with negative action, under the standing hypotheses.

    Requires: phi fixes 0 and is radially monotone, CAL <= 0 (within
    ``cal_slack``), and phi != id.  If the origin already has negative action
    it is returned at once; otherwise the generating function is built, its
    interior minimum located by grid scan (ties broken towards small R) and
    sharpened by root-finding on the lift.  A precomputed lift / generating
    function can be passed to avoid rebuilding them.
    """
    form = form or isotopy.form

    sup_move = _distance_to_identity(isotopy)
    if sup_move < 1e-10:
        raise HypothesisViolation("map is indistinguishable from the identity")

    cal = calabi_of_isotopy(isotopy)
    if cal.value > cal_slack + cal.error_estimate:
        raise HypothesisViolation(
            f"Calabi invariant {cal.value:.3e} is positive beyond tolerance")

    sigma0 = action_at_origin(isotopy)
    if sigma0 < -1e-12:
        return FixedPointResult(point=0.0 + 0.0j, action=sigma0, residual=0.0)

    if smap is None:
        smap = lift_map(isotopy, grid=grid, form=form)
    if not smap.monotone:
        raise HypothesisViolation(
            f"map is not radially monotone (min D_1 R = {smap.min_d1R:.3e})")

    if gf is None:
        gf = generating_function(smap, form=form)
    interior = gf.W[1:-1, :-1]
    # ties towards the smallest R: argmin scans R-major, which does exactly that
    i, j = np.unravel_index(np.argmin(interior), interior.shape)
    Wmin = float(interior[i, j])
    i += 1
    if Wmin >= 0.0:
        raise HypothesisViolation(
            "generating function has no negative interior value; "
            "hypotheses are violated numerically")

    R0, th0 = smap.r_nodes[i], smap.t_nodes[j]
    Rf, thf, _ = _refine_fixed_point(smap, R0, th0)
    z = Rf * np.exp(1j * thf)
    moved = np.asarray(isotopy.time_map(np.array(z))).reshape(())
    residual = abs(complex(moved) - z)
    action = float(gf.value(Rf, thf))
    return FixedPointResult(point=complex(z), action=action, residual=residual)


def _distance_to_identity(isotopy, n=48):
    rs = np.linspace(0.05, 0.99, n)
    ts = np.linspace(0.0, TWO_PI, n, endpoint=False)
    z = (rs[:, None] * np.exp(1j * ts[None, :])).ravel()
    return float(np.max(np.abs(isotopy.time_map(z) - z)))
