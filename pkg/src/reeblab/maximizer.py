"""Explicit systolic-ratio counterexample constructions.

The composite map phi = phi+ o phi- couples a global twist with local
counter-rotations:

  * phi+ is the flow of (pi/n) chi_delta(|z|^2), a compactly supported
    counterclockwise twist restricting to the 2 pi/n rotation on the disk
    of radius sqrt(1 - 2 delta);
  * phi- is a product of rotors, one per disk of an n-fold symmetric
    packing, each the flow of -c chi_eps(|z - z_j|^2 / r_j^2), a clockwise
    twist supported in its disk.

Two parameter regimes are exposed: variant "calpic" (c = 2 pi/n) keeps the
action uniformly small while making the Calabi invariant negative, and
variant "sysgra" (c = pi - 2 pi/n) drives the Calabi invariant towards
-pi^2, which after suspension produces large systolic ratios.  Everything
about these maps (flows, actions, Calabi invariants, strip lifts) is in
closed form; quadrature is used only for independent cross-checks.
"""

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial

from .calabi import ActionField, CalabiValue
from .errors import (GeometryViolation, PackingTimeout, ParameterOutOfRange)
from .forms import DensityForm, TWO_PI
from .hamflow import (CompositeIsotopy, DiskIsotopy, IdentityIsotopy,
                      RadialIsotopy, RadialProfile, TimeHamiltonian)

BUMP_ORDER = 7          # kernel (1 - t^2)^p; the cutoff is C^{p+1}
PACK_RADIUS_CAP = 0.98  # packed disks stay inside this radius
R_MIN = 1e-3
DISK_BUDGET = 5000
RHO_MAX = 0.88


# ---------------------------------------------------------------------------
# the cutoff profile
# ---------------------------------------------------------------------------

def _bump_polynomials(p=BUMP_ORDER):
    """Unit-mass kernel rho = C (1-t^2)^p and its ramp M on [-1, 1].

    M(t) = integral of (tau - t) rho(tau) over [t, 1]; then M'' = rho,
    M' = -integral of rho over [t, 1] in [-1, 0], M(1) = 0, M(-1) = 1.
    """
    base = Polynomial([1.0, 0.0, -1.0]) ** p
    prim = base.integ()
    mass = prim(1.0) - prim(-1.0)
    rho = base / mass
    Q0 = rho.integ()
    Q1 = (Polynomial([0.0, 1.0]) * rho).integ()
    M = (Polynomial([float(Q1(1.0))]) - Q1
         - Polynomial([0.0, float(Q0(1.0))]) + Polynomial([0.0, 1.0]) * Q0)
    Mp = M.deriv()
    MI = M.integ()
    m_mean = float(MI(1.0) - MI(-1.0))
    return rho, M, Mp, m_mean


_RHO_POLY, _M_POLY, _MP_POLY, _M_MEAN = _bump_polynomials()


class CutoffProfile:
    """Smooth convex cutoff chi_delta: the mollified ramp max(1-delta-s, 0).

    The mollifier is the symmetric bump C (1-t^2)^p of half-width delta/2,
    so the affine region 1 - delta - s survives exactly on [0, 1 - 3 delta/2]
    (a superset of [0, 1 - 2 delta]) and the support is [0, 1 - delta/2].
    All evaluators are closed-form piecewise polynomials.
    """

    def __init__(self, delta):
        if not 0.0 < delta < 0.5:
            raise ParameterOutOfRange(f"delta = {delta} outside (0, 1/2)")
        self.delta = float(delta)
        self.kink = 1.0 - self.delta          # corner of the unmollified ramp
        self.halfwidth = 0.5 * self.delta

    def _zones(self, s):
        s = np.asarray(s, dtype=float)
        v = (s - self.kink) / self.halfwidth
        affine = v <= -1.0
        window = (v > -1.0) & (v < 1.0)
        return s, v, affine, window

    def chi(self, s):
        s, v, affine, window = self._zones(s)
        out = np.zeros_like(s)
        out = np.where(affine, 1.0 - self.delta - s, out)
        out = np.where(window, self.halfwidth * _M_POLY(np.clip(v, -1.0, 1.0)), out)
        return out if out.shape else float(out)

    def dchi(self, s):
        s, v, affine, window = self._zones(s)
        out = np.zeros_like(s)
        out = np.where(affine, -1.0, out)
        out = np.where(window, _MP_POLY(np.clip(v, -1.0, 1.0)), out)
        return out if out.shape else float(out)

    def d2chi(self, s):
        s, v, _, window = self._zones(s)
        out = np.zeros_like(s)
        out = np.where(window, _RHO_POLY(np.clip(v, -1.0, 1.0)) / self.halfwidth, out)
        return out if out.shape else float(out)

    def integral(self):
        """Closed form of the integral of chi_delta over [0, 1]."""
        a, w = self.kink, self.halfwidth
        return 0.5 * a * a - 0.5 * w * w + w * w * _M_MEAN

    def support_end(self):
        return self.kink + self.halfwidth

    def radial_profile(self, scale, name):
        """RadialProfile h(s) = scale * chi_delta(s)."""
        return RadialProfile(h=lambda s: scale * self.chi(s),
                             dh=lambda s: scale * self.dchi(s),
                             d2h=lambda s: scale * self.d2chi(s),
                             name=name,
                             params={"delta": self.delta, "scale": scale})


def make_cutoff(delta):
    """CutoffProfile for the given delta in (0, 1/2)."""
    return CutoffProfile(delta)


# ---------------------------------------------------------------------------
# disk packing
# ---------------------------------------------------------------------------

@dataclass
class DiskPacking:
    """n-fold symmetric packing: disks of the fundamental sector + rotations."""
    n: int
    sector_centers: np.ndarray        # complex, inside sector 0 < arg < 2 pi/n
    sector_radii: np.ndarray
    seed: int
    rho_target: float

    @property
    def density(self):
        """Total packed area over the disk area pi."""
        return float(self.n * np.sum(self.sector_radii ** 2))

    @property
    def max_reach(self):
        if self.sector_radii.size == 0:
            return 0.0
        return float(np.max(np.abs(self.sector_centers) + self.sector_radii))

    def all_disks(self):
        """(centers, radii) of the full n-fold symmetric family."""
        if self.sector_radii.size == 0:
            return np.empty(0, dtype=complex), np.empty(0)
        rot = np.exp(2j * np.pi * np.arange(self.n) / self.n)
        centers = (rot[:, None] * self.sector_centers[None, :]).ravel()
        radii = np.tile(self.sector_radii, self.n)
        return centers, radii

    def validate(self, tol=1e-12):
        """Geometric invariants with margins; raises nothing, reports all."""
        report = {}
        alpha = TWO_PI / self.n
        c, r = self.sector_centers, self.sector_radii
        if r.size:
            th = np.angle(c)
            wall = np.minimum(np.abs(c) * np.sin(th), np.abs(c) * np.sin(alpha - th))
            report["sector_margin"] = float(np.min(wall - r))
            report["outer_margin"] = float(np.min(1.0 - np.abs(c) - r))
            d = np.abs(c[:, None] - c[None, :]) - (r[:, None] + r[None, :])
            np.fill_diagonal(d, np.inf)
            within = float(np.min(d)) if r.size > 1 else np.inf
            cn = c * np.exp(1j * alpha)
            cross = float(np.min(np.abs(c[:, None] - cn[None, :]) - (r[:, None] + r[None, :])))
            report["overlap_margin"] = min(within, cross)
            report["radius_cap_margin"] = float(np.min(np.pi / self.n - r))
        else:
            report.update(sector_margin=np.inf, outer_margin=np.inf,
                          overlap_margin=np.inf, radius_cap_margin=np.inf)
        report["density"] = self.density
        report["density_margin"] = self.density - self.rho_target
        report["symmetric"] = True   # rotations are applied analytically
        report["ok"] = (report["sector_margin"] > -tol
                        and report["overlap_margin"] > -tol
                        and report["radius_cap_margin"] > -tol
                        and report["density_margin"] >= -1e-12)
        return report

    def to_json(self):
        return {"n": self.n, "seed": self.seed, "rho_target": self.rho_target,
                "centers": [[z.real, z.imag] for z in self.sector_centers],
                "radii": self.sector_radii.tolist()}

    @staticmethod
    def from_json(desc):
        centers = np.array([complex(x, y) for x, y in desc["centers"]],
                           dtype=complex)
        return DiskPacking(n=desc["n"], sector_centers=centers,
                           sector_radii=np.asarray(desc["radii"], dtype=float),
                           seed=desc["seed"], rho_target=desc["rho_target"])

    def to_csv_rows(self):
        centers, radii = self.all_disks()
        return [(z.real, z.imag, rr) for z, rr in zip(centers, radii)]


def pack_sector(n, rho_target, seed, r_min=R_MIN, budget=DISK_BUDGET,
                r_cap=PACK_RADIUS_CAP, batch=512, stall_rounds=80):
    """Greedy randomized packing of the fundamental sector to a density target.

    Candidate centers are sampled uniformly; each gets the largest radius
    inscribable against the sector walls, the cap radius, and the disks
    already placed (clipped to pi/n).  The best candidate of each round is
    accepted when its radius reaches ``r_min``; the loop stops at the target
    density or raises PackingTimeout when it stalls within the disk budget.
    The whole procedure is deterministic in (n, rho_target, seed).
    """
    if n < 2:
        raise ParameterOutOfRange("need n >= 2 sectors")
    if not 0.0 <= rho_target <= RHO_MAX:
        raise ParameterOutOfRange(
            f"rho_target = {rho_target} outside [0, {RHO_MAX}] (feasibility cap)")
    alpha = TWO_PI / n
    rng = np.random.Generator(np.random.Philox(seed))
    centers: list = []
    radii: list = []
    density = 0.0
    stalls = 0
    while density < rho_target and len(centers) < budget:
        u = rng.uniform(size=batch)
        th = rng.uniform(0.0, alpha, size=batch)
        rr = r_cap * np.sqrt(u)
        cand = rr * np.exp(1j * th)
        room = np.minimum(rr * np.sin(th), rr * np.sin(alpha - th))
        room = np.minimum(room, r_cap - rr)
        if centers:
            cc = np.asarray(centers)
            cr = np.asarray(radii)
            gaps = np.abs(cand[:, None] - cc[None, :]) - cr[None, :]
            room = np.minimum(room, np.min(gaps, axis=1))
        room = np.minimum(room, np.pi / n)
        best = int(np.argmax(room))
        if room[best] >= r_min:
            # shave a relative hair so the disk is strictly inside the open
            # sector and strictly clear of its neighbours
            accepted = float(room[best]) * (1.0 - 1e-9)
            centers.append(cand[best])
            radii.append(accepted)
            density += n * accepted ** 2
            stalls = 0
        else:
            stalls += 1
            if stalls >= stall_rounds:
                raise PackingTimeout(
                    f"density stalled at {density:.4f} < {rho_target} "
                    f"after {len(centers)} disks")
    if density < rho_target:
        raise PackingTimeout(
            f"disk budget {budget} exhausted at density {density:.4f}")
    return DiskPacking(n=n, sector_centers=np.asarray(centers, dtype=complex),
                       sector_radii=np.asarray(radii, dtype=float), seed=seed,
                       rho_target=rho_target)


# ---------------------------------------------------------------------------
# the rotor family
# ---------------------------------------------------------------------------

class RotorFamilyIsotopy(DiskIsotopy):
    """Product of clockwise rotors, one per packing disk; closed form.

    Each rotor is the flow of K_j(z) = -c chi_eps(|z - z_j|^2 / r_j^2),
    supported in its disk, which the map leaves invariant.  On the region
    where the cutoff is affine the rotor is the rigid clockwise rotation of
    angle 2 c / r_j^2 about z_j.
    """

    def __init__(self, packing, eps, c):
        if not 0.0 < eps < 0.5:
            raise ParameterOutOfRange(f"eps = {eps} outside (0, 1/2)")
        c_arr = np.broadcast_to(np.asarray(c, dtype=float),
                                packing.sector_radii.shape).copy()
        if np.any(c_arr <= 0.0):
            raise ParameterOutOfRange("rotor strengths must be positive")
        self.packing = packing
        self.eps = float(eps)
        self.c = c if np.isscalar(c) else c_arr
        self.c_arr = c_arr
        self.cutoff = CutoffProfile(eps)
        self.form = DensityForm.standard()
        self.alpha = TWO_PI / packing.n
        self.name = f"rotors[n={packing.n},eps={eps}]"

    # -- sector reduction ----------------------------------------------------

    def _to_sector(self, z):
        """Rotate points into the fundamental sector; returns (w, turns)."""
        th = np.angle(z)
        k = np.floor(np.mod(th, TWO_PI) / self.alpha)
        return z * np.exp(-1j * self.alpha * k), k

    def _per_disk(self, w, fn):
        """Apply fn(w_local, z_j, r_j, c_j) on the points inside each sector disk.

        fn receives centered coordinates and must return the local values;
        points outside every disk keep the fill value 0.
        """
        out = np.zeros(w.shape, dtype=complex)
        inside_any = np.zeros(w.shape, dtype=bool)
        for zj, rj, cj in zip(self.packing.sector_centers,
                              self.packing.sector_radii, self.c_arr):
            d = w - zj
            box = (np.abs(d.real) < rj) & (np.abs(d.imag) < rj)
            if not np.any(box):
                continue
            loc = d[box]
            hit = np.abs(loc) < rj
            if not np.any(hit):
                continue
            idx = np.flatnonzero(box)[hit]
            out.flat[idx] = fn(loc[hit], zj, rj, cj)
            inside_any.flat[idx] = True
        return out, inside_any

    # -- evaluation ------------------------------------------------------------

    def _twist_angle(self, w_local, rj, cj, t):
        v = np.abs(w_local) ** 2 / rj ** 2
        return 2.0 * t * (cj / rj ** 2) * self.cutoff.dchi(v)

    def time_map(self, z, t=1.0):
        z = np.asarray(z, dtype=complex)
        w, k = self._to_sector(z)

        def rotate(loc, zj, rj, cj):
            return zj + np.exp(1j * self._twist_angle(loc, rj, cj, t)) * loc - (zj + loc)

        delta, _ = self._per_disk(w, rotate)
        return z + delta * np.exp(1j * self.alpha * k)

    def inverse_time_map(self, z, t=1.0):
        return self.time_map(z, -t)

    def fixes_origin(self, tol=None):
        return True

    def lift_exact(self, r, theta, t=1.0):
        r = np.asarray(r, dtype=float)
        theta = np.asarray(theta, dtype=float)
        z = r * np.exp(1j * theta)
        w = self.time_map(z, t)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(z == 0, 1.0, w / np.where(z == 0, 1.0, z))
        return np.abs(w), theta + np.angle(ratio)

    def action_closed_form(self, z, t=1.0):
        """Action for lambda_0: radial rotor action plus the translation term.

        For one rotor centered at z_j the action is
        t (k - u k')(|w|^2) + Im(conj(z_j) w (e^{i t gamma} - 1)) / 2
        with k(u) = -c chi_eps(u / r_j^2) and w = z - z_j; supports are
        disjoint so the family action is the per-disk sum.
        """
        z = np.asarray(z, dtype=complex)
        w, k = self._to_sector(z)
        out = np.zeros(z.shape, dtype=float)

        for zj, rj in zip(self.packing.sector_centers, self.packing.sector_radii):
            d = w - zj
            box = (np.abs(d.real) < rj) & (np.abs(d.imag) < rj)
            if not np.any(box):
                continue
            loc = d[box]
            hit = np.abs(loc) < rj
            if not np.any(hit):
                continue
            idx = np.flatnonzero(box)[hit]
            loc = loc[hit]
            v = np.abs(loc) ** 2 / rj ** 2
            radial = -self.c * t * (self.cutoff.chi(v) - v * self.cutoff.dchi(v))
            gamma = self._twist_angle(loc, rj, t)
            kk = k.flat[idx] if np.ndim(k) else k
            zj_rot = zj * np.exp(1j * self.alpha * kk)
            loc_rot = loc * np.exp(1j * self.alpha * kk)
            trans = 0.5 * np.imag(np.conj(zj_rot) * loc_rot * (np.exp(1j * gamma) - 1.0))
            out.flat[idx] = radial + np.asarray(trans)
        return out if out.shape else float(out)

    def cal_closed_form(self):
        """CAL = -2 c pi (sum r_j^2) int chi_eps, exactly."""
        total = float(np.sum(self.packing.all_disks()[1] ** 2))
        value = -2.0 * self.c * np.pi * total * self.cutoff.integral()
        return CalabiValue(value, "hamiltonian", 0.0)

    def hamiltonian(self):
        centers, radii = self.packing.all_disks()
        cutoff, c = self.cutoff, self.c

        def per_disk_scalar(z, fn):
            z = np.asarray(z, dtype=complex)
            out = np.zeros(z.shape, dtype=complex)
            for zj, rj in zip(centers, radii):
                d = z - zj
                hit = np.abs(d) < rj
                if np.any(hit):
                    out[hit] += fn(d[hit], rj)
            return out

        def value(t, z):
            return np.real(per_disk_scalar(
                z, lambda w, rj: -c * cutoff.chi(np.abs(w) ** 2 / rj ** 2) + 0j))

        def grad(t, z):
            return per_disk_scalar(
                z, lambda w, rj: (-2.0 * c / rj ** 2)
                * cutoff.dchi(np.abs(w) ** 2 / rj ** 2) * w)

        return TimeHamiltonian(value, grad, boundary_flag=True, autonomous=True,
                               name=self.name,
                               support_disks=list(zip(centers, radii)))

    def sup_distance_bound(self):
        """2 max_j r_j, the diameter bound on |phi_t - id|."""
        if self.packing.sector_radii.size == 0:
            return 0.0
        return 2.0 * float(np.max(self.packing.sector_radii))

    def to_json(self):
        return {"name": "rotors", "eps": self.eps, "c": self.c,
                "packing": self.packing.to_json()}


# ---------------------------------------------------------------------------
# the two counterexample variants
# ---------------------------------------------------------------------------

def build_phi_plus(n, delta):
    """The global twist: flow of (pi/n) chi_delta(|z|^2).

    Restricts to the counterclockwise 2 pi/n rotation for |z|^2 <= 1 - 2 delta
    and to the identity where the cutoff vanishes.
    """
    if n < 2:
        raise ParameterOutOfRange("need n >= 2")
    cutoff = CutoffProfile(delta)
    profile = cutoff.radial_profile(np.pi / n, name=f"twist[n={n},delta={delta}]")
    iso = RadialIsotopy(profile, name=f"phi_plus[n={n},delta={delta}]")
    iso.cutoff = cutoff
    iso.cal_closed_form = lambda: CalabiValue(
        2.0 * np.pi ** 2 / n * cutoff.integral(), "hamiltonian", 0.0)
    return iso


def build_phi_minus(packing, eps, c):
    """The rotor family over a packing, with strength c."""
    return RotorFamilyIsotopy(packing, eps, c)


VARIANTS = ("calpic", "sysgra")


def rotor_strength(variant, n):
    if variant == "calpic":
        return 2.0 * np.pi / n
    if variant == "sysgra":
        return np.pi - 2.0 * np.pi / n
    raise ParameterOutOfRange(f"unknown variant {variant!r}")


@dataclass
class MaximizerConstruction:
    """A composed counterexample with closed-form action and Calabi invariant."""
    variant: str
    n: int
    delta: float
    eps: float
    c: float
    rho_target: float
    seed: int
    packing: DiskPacking
    phi_plus: object
    phi_minus: object
    isotopy: object
    cal: CalabiValue
    form: DensityForm = field(default_factory=DensityForm.standard)

    # -- map evaluation ------------------------------------------------------

    def map(self, z, t=1.0):
        return self.phi_plus.time_map(self.phi_minus.time_map(z, t), t)

    def map_power(self, z, k):
        z = np.asarray(z, dtype=complex)
        for _ in range(k):
            z = self.map(z)
        return z

    def inverse_map(self, z, t=1.0):
        return self.phi_minus.inverse_time_map(
            self.phi_plus.inverse_time_map(z, t), t)

    # -- action --------------------------------------------------------------

    def sigma(self, z, t=1.0):
        """sigma_{phi_t, lambda_0} = sigma+ o phi-_t + sigma-."""
        z = np.asarray(z, dtype=complex)
        return (np.asarray(self.phi_plus.action_closed_form(
            self.phi_minus.time_map(z, t), t))
            + np.asarray(self.phi_minus.action_closed_form(z, t)))

    def sigma_field(self):
        pieces = self._sigma_pieces()
        return ActionField(lambda z: self.sigma(z), primitive_tag="lambda0",
                           provenance="closed-form", isotopy=self.isotopy,
                           pieces=pieces)

    def _sigma_pieces(self):
        """Decomposition of sigma for quadrature: radial twist + rotor bumps.

        The twist action is radial and the rotor family is n-fold symmetric,
        so one sector's disks stand for all of them with weight n.
        """
        plus = self.phi_plus
        minus = self.phi_minus

        def background_radial(r):
            s = np.asarray(r, dtype=float) ** 2
            prof = plus.profile
            return prof.h(s) - s * prof.dh(s)

        def background(z):
            return np.asarray(plus.action_closed_form(np.asarray(z, dtype=complex)))

        disks = []
        for zj, rj in zip(self.packing.sector_centers, self.packing.sector_radii):
            def local(z, zj=zj, rj=rj):
                z = np.asarray(z, dtype=complex)
                moved = minus.time_map(z)
                return (np.asarray(plus.action_closed_form(moved))
                        - np.asarray(plus.action_closed_form(z))
                        + np.asarray(minus.action_closed_form(z)))
            disks.append((zj, rj, local))
        return {"background_radial": background_radial, "background": background,
                "disks": disks, "disk_weight": float(self.n)}

    def tau(self, z, t=1.0):
        """First return time of the suspension: sigma + pi."""
        return self.sigma(z, t) + np.pi

    # -- metadata --------------------------------------------------------------

    @property
    def rotation_band_radius(self):
        """phi+ is the exact 2 pi/n rotation inside this radius."""
        return float(np.sqrt(1.0 - 2.0 * self.delta))

    @property
    def fixed_band_start(self):
        """|z| >= this is fixed pointwise (the cutoff support has ended)."""
        cutoff = getattr(self.phi_plus, "cutoff", None)
        if cutoff is None:
            return 0.0
        return float(np.sqrt(cutoff.support_end()))

    def origin_action(self):
        return float(np.asarray(self.sigma(np.array(0.0 + 0.0j))))

    def sup_distance_to_identity(self, n_r=60, n_t=120, n_time=5):
        rs = np.linspace(0.01, 1.0, n_r)
        ts = np.linspace(0.0, TWO_PI, n_t, endpoint=False)
        z = (rs[:, None] * np.exp(1j * ts[None, :])).ravel()
        zs = np.concatenate([z] + [c + r * np.exp(1j * np.linspace(0, TWO_PI, 16))
                                   for c, r in zip(*self.packing.all_disks())]) \
            if self.packing.sector_radii.size else z
        worst = 0.0
        for t in np.linspace(0.0, 1.0, n_time)[1:]:
            worst = max(worst, float(np.max(np.abs(self.map(zs, t) - zs))))
        return worst

    def to_json(self):
        return {
            "variant": self.variant,
            "params": {"n": self.n, "delta": self.delta, "eps": self.eps,
                       "c": self.c, "rho_target": self.rho_target,
                       "seed": self.seed},
            "packing": self.packing.to_json(),
            "derived": {
                "cal": self.cal.to_json(),
                "density": self.packing.density,
                "origin_action": self.origin_action(),
                "rotation_band_radius": self.rotation_band_radius,
                "fixed_band_start": self.fixed_band_start,
            },
        }

    @staticmethod
    def from_json(desc):
        if desc.get("variant") == "identity":
            return identity_construction()
        p = desc["params"]
        packing = DiskPacking.from_json(desc["packing"])
        return assemble_construction(desc["variant"], p["n"], p["delta"],
                                     p["eps"], p["rho_target"], p["seed"],
                                     packing=packing)


def assemble_construction(variant, n, delta, eps, rho_target, seed,
                          packing=None):
    """Build (or rebuild from a stored packing) a counterexample construction."""
    c = rotor_strength(variant, n)
    if packing is None:
        packing = pack_sector(n, rho_target, seed)
    reach = packing.max_reach
    if reach > np.sqrt(1.0 - 2.0 * delta) + 1e-12:
        raise GeometryViolation(
            f"packing reaches radius {reach:.4f} beyond the rotation band "
            f"sqrt(1 - 2 delta) = {np.sqrt(1 - 2 * delta):.4f}")
    plus = build_phi_plus(n, delta)
    minus = build_phi_minus(packing, eps, c)
    iso = CompositeIsotopy(plus, minus, name=f"{variant}[n={n}]")
    cal_plus = plus.cal_closed_form()
    cal_minus = minus.cal_closed_form()
    cal = CalabiValue(cal_plus.value + cal_minus.value, "hamiltonian", 0.0)
    return MaximizerConstruction(
        variant=variant, n=n, delta=delta, eps=eps, c=c,
        rho_target=rho_target, seed=seed, packing=packing,
        phi_plus=plus, phi_minus=minus, isotopy=iso, cal=cal)


def build_counterexample(variant, n, delta, eps, rho_target, seed):
    """The spec'd entry point: pack, compose, and attach closed forms."""
    return assemble_construction(variant, n, delta, eps, rho_target, seed)


def identity_construction():
    """Trivial construction (phi = id) for baseline suspension data."""
    packing = DiskPacking(n=1, sector_centers=np.empty(0, dtype=complex),
                          sector_radii=np.empty(0), seed=0, rho_target=0.0)
    iso = IdentityIsotopy()

    cx = MaximizerConstruction(
        variant="identity", n=1, delta=0.0, eps=0.0, c=0.0, rho_target=0.0,
        seed=0, packing=packing, phi_plus=iso, phi_minus=iso, isotopy=iso,
        cal=CalabiValue(0.0, "hamiltonian", 0.0))
    cx.map = lambda z, t=1.0: np.asarray(z, dtype=complex)
    cx.sigma = lambda z, t=1.0: np.zeros(np.shape(np.asarray(z)))
    cx.tau = lambda z, t=1.0: np.pi + np.zeros(np.shape(np.asarray(z)))
    return cx


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------

def verify_construction(cx, grid=(160, 320), n_time=5, tol_fix=1e-9):
    """Per-property verification report with measured margins.

    Every entry is a dict {"pass": bool, ...margins}; failures are entries,
    never exceptions.
    """
    report = {}
    n = cx.n
    rs = np.linspace(0.0, 1.0, grid[0])
    ts = np.linspace(0.0, TWO_PI, grid[1], endpoint=False)
    z = (rs[:, None] * np.exp(1j * ts[None, :])).ravel()

    # packing geometry
    report["packing"] = cx.packing.validate()
    report["packing"]["pass"] = bool(report["packing"]["ok"])

    # sup-norm distance over a t-sample
    sup = cx.sup_distance_to_identity(n_time=n_time)
    bound = 4.0 * np.pi / n
    report["uniform_distance"] = {"sup": sup, "bound": bound,
                                  "pass": bool(sup <= bound + 1e-12)}

    # action bounds over the grid and over time
    lo_bound = (-np.pi + np.pi / n if cx.variant == "sysgra"
                else -3.0 * np.pi / n)
    hi_bound = 2.0 * np.pi / n
    lo, hi = np.inf, -np.inf
    for t in np.linspace(0.2, 1.0, n_time):
        sig = np.asarray(cx.sigma(z, t))
        lo = min(lo, float(np.min(sig)))
        hi = max(hi, float(np.max(sig)))
    report["action_bounds"] = {
        "min": lo, "max": hi, "lower_bound": lo_bound, "upper_bound": hi_bound,
        "pass": bool(lo >= lo_bound - 1e-8 and hi <= hi_bound + 1e-8)}

    # origin fixed with the prescribed action
    origin_sigma = cx.origin_action()
    expected = (np.pi / n) * (1.0 - cx.delta)
    origin_moved = abs(complex(np.asarray(cx.map(np.array(0.0 + 0.0j))).reshape(())))
    report["origin"] = {
        "moved": origin_moved, "action": origin_sigma, "expected": expected,
        "pass": bool(origin_moved < tol_fix
                     and abs(origin_sigma - expected) < 1e-12)}

    # no fixed points on the rotor supports
    centers, radii = cx.packing.all_disks()
    if radii.size:
        samples = []
        for zj, rj in zip(centers, radii):
            rr = np.sqrt(np.linspace(0.04, 0.96, 7)) * rj
            aa = np.linspace(0.0, TWO_PI, 11, endpoint=False)
            samples.append((zj + rr[:, None] * np.exp(1j * aa[None, :])).ravel())
        pts = np.concatenate(samples)
        gap = float(np.min(np.abs(cx.map(pts) - pts)))
        report["rotor_supports_moved"] = {"min_move": gap, "pass": bool(gap > 1e-6)}
        inv_ok = True
        alpha = TWO_PI / n
        moved = cx.phi_minus.time_map(pts)
        sector_before = np.floor(np.mod(np.angle(pts), TWO_PI) / alpha)
        sector_after = np.floor(np.mod(np.angle(moved), TWO_PI) / alpha)
        inv_ok = bool(np.all(sector_before == sector_after))
        report["sector_invariance"] = {"pass": inv_ok}
    else:
        report["rotor_supports_moved"] = {"min_move": np.inf, "pass": True}
        report["sector_invariance"] = {"pass": True}

    # all fixed points have non-negative action (origin + outer band + scan)
    band = cx.fixed_band_start
    fixed_mask = np.abs(cx.map(z) - z) < tol_fix
    sig1 = np.asarray(cx.sigma(z))
    worst_fixed_action = float(np.min(sig1[fixed_mask])) if np.any(fixed_mask) else 0.0
    report["fixed_point_actions"] = {
        "min_action": min(worst_fixed_action, origin_sigma),
        "band_start": band,
        "pass": bool(min(worst_fixed_action, origin_sigma) >= -1e-9)}

    # Calabi additivity: closed form vs quadrature of the action integral
    from .calabi import calabi_via_action
    cal_quad = calabi_via_action(cx.sigma_field(), cx.form, tol=1e-8)
    gap = abs(cal_quad.value - cx.cal.value)
    rel = gap / max(1.0, abs(cx.cal.value))
    report["calabi_two_routes"] = {
        "closed_form": cx.cal.value, "action_quadrature": cal_quad.value,
        "rel_gap": rel, "pass": bool(rel < 1e-4)}

    # non-fixed periodic points have period >= n (probe k < n)
    short = probe_short_periods(cx, min(n, 9), grid=(120, 240), tol_fix=tol_fix)
    report["short_periods"] = {"found": short, "pass": not short}

    report["pass"] = all(v.get("pass", True) for v in report.values()
                         if isinstance(v, dict))
    return report


def probe_short_periods(cx, k_max, grid=(200, 400), tol_fix=1e-9,
                        candidate_tol=1e-6):
    """Return periods k in [2, k_max) at which a non-fixed orbit closes.

    Grid points are iterated; near-fixed points are classified out first so
    the rotation bands do not masquerade as short orbits.
    """
    rs = np.linspace(0.02, 0.995, grid[0])
    ts = np.linspace(0.0, TWO_PI, grid[1], endpoint=False)
    z0 = (rs[:, None] * np.exp(1j * ts[None, :])).ravel()
    fixed = np.abs(cx.map(z0) - z0) < candidate_tol
    z0 = z0[~fixed]
    found = []
    z = cx.map(z0)
    for k in range(2, k_max + 1):
        z = cx.map(z)
        close = np.abs(z - z0) < candidate_tol
        if np.any(close):
            # sharpen: only accept if the residual actually crosses tol_fix
            residual = float(np.min(np.abs(z[close] - z0[close])))
            if residual < tol_fix:
                found.append(k)
    return found
