"""Suspension dictionary: disk return maps to Reeb-flow quantities on S^3.

A compactly supported area-preserving disk map phi with action sigma and
tau := sigma + pi positive suspends to a Reeb flow on S^3 for which the disk
is a global surface of section: tau is the first return time, the contact
volume equals pi^2 + CAL(phi), the section boundary is a closed orbit of
period pi, and a k-periodic point z of phi closes up after

    T(z) = sum of tau(phi^j(z)) for j < k.

The systolic ratio is T_min^2 / volume.  Nothing here constructs the contact
form itself; every quantity is read off the return map, which is equivalent.
"""

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .calabi import ActionField, calabi_via_action
from .errors import NonPositiveReturnTime
from .forms import TWO_PI
from .maximizer import MaximizerConstruction

BOUNDARY_PERIOD = np.pi


# ---------------------------------------------------------------------------
# records
# ---------------------------------------------------------------------------

@dataclass
class OrbitRecord:
    """One closed Reeb orbit seen through the section.

    ``kind`` is "origin", "band" (a parametric family of fixed points with a
    common period), or "point"; ``k`` is the minimal period of the underlying
    map orbit and ``T`` the suspension period.
    """
    kind: str
    z: Optional[complex]
    k: int
    T: float
    action: float
    residual: float = 0.0

    def to_json(self):
        return {"kind": self.kind,
                "z": None if self.z is None else [self.z.real, self.z.imag],
                "k": self.k, "T": self.T, "action": self.action,
                "residual": self.residual}


@dataclass
class SuspensionReport:
    variant: str
    cal_value: float
    cal_route: str
    volume: float
    volume_check: float
    volume_rel_gap: float
    tau_min: float
    tau_max: float
    t_min: float
    t_min_certified_up_to: int
    rho_sys: float
    boundary_is_minimal: bool
    census: List[OrbitRecord] = field(default_factory=list)
    certification_note: str = ""

    def to_json(self):
        return {
            "variant": self.variant,
            "cal": {"value": self.cal_value, "route": self.cal_route},
            "volume": self.volume,
            "volume_check": self.volume_check,
            "volume_rel_gap": self.volume_rel_gap,
            "tau_min": self.tau_min,
            "tau_max": self.tau_max,
            "boundary_orbit_period": BOUNDARY_PERIOD,
            "t_min": self.t_min,
            "t_min_certified_up_to": self.t_min_certified_up_to,
            "rho_sys": self.rho_sys,
            "boundary_is_minimal": self.boundary_is_minimal,
            "census": [o.to_json() for o in self.census],
            "certification_note": self.certification_note,
        }


# ---------------------------------------------------------------------------
# return time and volume
# ---------------------------------------------------------------------------

def return_time(cx, grid=(200, 400)):
    """The field tau = sigma + pi, with a positivity certificate.

    Returns (tau callable, tau_min, tau_max over the probe grid); raises
    NonPositiveReturnTime if the minimum is not positive.
    """
    rs = np.linspace(0.0, 1.0, grid[0])
    ts = np.linspace(0.0, TWO_PI, grid[1], endpoint=False)
    z = (rs[:, None] * np.exp(1j * ts[None, :])).ravel()
    tau_vals = np.asarray(cx.tau(z))
    tmin, tmax = float(np.min(tau_vals)), float(np.max(tau_vals))
    if tmin <= 0.0:
        raise NonPositiveReturnTime(f"min tau = {tmin:.6f} <= 0")
    return (lambda w: cx.tau(w)), tmin, tmax


def contact_volume(cx, tol=1e-8):
    """(volume, volume_check): pi^2 + CAL versus the integral of tau omega.

    The check integrates tau directly over the disk, an independent route.
    """
    volume = np.pi ** 2 + cx.cal.value
    if isinstance(cx, MaximizerConstruction) and cx.variant != "identity":
        pieces = dict(cx._sigma_pieces())
        bgr = pieces["background_radial"]
        pieces["background_radial"] = lambda r: np.asarray(bgr(r)) + np.pi
        tau_field = ActionField(lambda z: cx.tau(z), "lambda0", "closed-form",
                                pieces=pieces)
    else:
        tau_field = ActionField(lambda z: cx.tau(z), "lambda0", "closed-form")
    check = calabi_via_action(tau_field, cx.form, tol=tol)
    return float(volume), float(check.value)


# ---------------------------------------------------------------------------
# census
# ---------------------------------------------------------------------------

def _orbit_period_sum(cx, z, k):
    """T(z) = sum of tau over the first k iterates."""
    total = 0.0
    w = np.array(z, dtype=complex)
    for _ in range(k):
        total += float(np.asarray(cx.tau(w)))
        w = cx.map(w)
    return total


def periodic_orbit_census(cx, k_max, grid=(400, 400), tol_fix=1e-9,
                          candidate_tol=1e-7):
    """Closed map orbits of minimal period <= k_max, deduplicated.

    The origin and the outer fixed band are reported as such; remaining grid
    candidates are refined by a damped Newton iteration on phi^k - id and
    merged into orbits.  An empty point census is a valid result.
    """
    records = []
    band_start = getattr(cx, "fixed_band_start", 1.0)

    if cx.variant == "identity":
        records.append(OrbitRecord("band", None, 1, BOUNDARY_PERIOD, 0.0))
        return records

    origin = complex(np.asarray(cx.map(np.array(0.0 + 0.0j))).reshape(()))
    if abs(origin) < tol_fix:
        records.append(OrbitRecord(
            "origin", 0.0 + 0.0j, 1, _orbit_period_sum(cx, 0.0 + 0.0j, 1),
            float(np.asarray(cx.sigma(np.array(0.0 + 0.0j)))), abs(origin)))

    if band_start < 1.0:
        rep = 0.5 * (band_start + 1.0)
        act = float(np.asarray(cx.sigma(np.array(rep + 0.0j))))
        records.append(OrbitRecord("band", complex(rep), 1,
                                   BOUNDARY_PERIOD + act, act))

    rs = np.linspace(0.02, min(band_start - 1e-3, 0.999), grid[0])
    ts = np.linspace(0.0, TWO_PI, grid[1], endpoint=False)
    z0 = (rs[:, None] * np.exp(1j * ts[None, :])).ravel()
    fixed1 = np.abs(cx.map(z0) - z0) < candidate_tol
    taken: List[complex] = []

    def consider(zc, k, cap_state):
        if cap_state["left"] <= 0:
            return
        cap_state["left"] -= 1
        refined, residual = _refine_periodic(cx, complex(zc), k, tol_fix)
        if refined is None or residual > tol_fix:
            return
        kmin = _minimal_period(cx, refined, k, tol_fix)
        if kmin != k:
            return
        if abs(refined) < 1e-6 or abs(refined) >= band_start - 1e-9:
            # already represented by the origin / band records
            return
        if any(_same_orbit(cx, refined, other, k, candidate_tol)
               for other in taken):
            return
        taken.append(refined)
        records.append(OrbitRecord(
            "point", refined, k, _orbit_period_sum(cx, refined, k),
            float(np.asarray(cx.sigma(np.array(refined)))), residual))

    # isolated fixed points beyond the origin / band families
    cap = {"left": 400}
    near_band = np.abs(z0) >= band_start - 5e-3
    for zc in z0[fixed1 & ~near_band & (np.abs(z0) > 1e-3)]:
        consider(zc, 1, cap)

    alive = z0[~fixed1]
    z = alive.copy()
    for k in range(1, k_max + 1):
        z = cx.map(z)
        if k == 1:
            continue
        close = np.abs(z - alive) < candidate_tol
        cap = {"left": 400}
        for zc in alive[close]:
            consider(zc, k, cap)
    return records


def _refine_periodic(cx, z, k, tol, max_iter=40, eps=1e-7):
    """Newton iteration on phi^k - id around z; None when it wanders off."""
    x = np.array([z.real, z.imag])

    def g(p):
        w = complex(p[0], p[1])
        out = complex(np.asarray(cx.map_power(np.array(w), k)).reshape(())) - w
        return np.array([out.real, out.imag])

    res = g(x)
    for _ in range(max_iter):
        if np.max(np.abs(res)) < tol:
            break
        J = np.empty((2, 2))
        for i in range(2):
            dp = np.zeros(2)
            dp[i] = eps
            J[:, i] = (g(x + dp) - g(x - dp)) / (2 * eps)
        try:
            step = np.linalg.lstsq(J, -res, rcond=None)[0]
        except np.linalg.LinAlgError:
            return None, np.inf
        lam, improved = 1.0, False
        for _ in range(15):
            cand = x + lam * step
            if np.hypot(*cand) >= 1.0:
                lam *= 0.5
                continue
            cres = g(cand)
            if np.linalg.norm(cres) < np.linalg.norm(res):
                x, res, improved = cand, cres, True
                break
            lam *= 0.5
        if not improved:
            break
    return complex(x[0], x[1]), float(np.max(np.abs(res)))


def _minimal_period(cx, z, k, tol):
    w = np.array(z, dtype=complex)
    for j in range(1, k + 1):
        w = cx.map(w)
        if abs(complex(np.asarray(w).reshape(())) - z) < 100 * tol:
            return j
    return k


def _same_orbit(cx, z, other, k, tol):
    w = np.array(other, dtype=complex)
    for _ in range(k):
        if abs(complex(np.asarray(w).reshape(())) - z) < 10 * tol:
            return True
        w = cx.map(w)
    return False


# ---------------------------------------------------------------------------
# the systolic ratio
# ---------------------------------------------------------------------------

def _certification_note(cx, k_max):
    if cx.variant == "identity":
        return ("every orbit closes with period pi; the minimum is global "
                "by inspection")
    if cx.variant == "sysgra":
        return (f"numerical search certifies periods up to k_max = {k_max}; "
                f"beyond that, non-fixed periodic points have period >= n = "
                f"{cx.n} by sector bookkeeping while tau >= pi/n, so every "
                f"longer orbit has T >= pi")
    if cx.variant == "calpic":
        return (f"numerical search certifies periods up to k_max = {k_max}; "
                f"beyond that, tau >= pi/2 makes any orbit of period >= 2 "
                f"at least pi long, and fixed points have non-negative action")
    return (f"T_min is certified only up to k_max = {k_max} and the census "
            f"grid resolution; no analytic guarantee applies")


def systolic_ratio(cx, k_max=8, grid=(400, 400), tol_fix=1e-9, vol_tol=1e-8):
    """Assemble the full suspension report for a construction."""
    _, tau_min, tau_max = return_time(cx)
    volume, volume_check = contact_volume(cx, tol=vol_tol)
    census = periodic_orbit_census(cx, k_max, grid=grid, tol_fix=tol_fix)
    periods = [BOUNDARY_PERIOD] + [rec.T for rec in census]
    t_min = float(min(periods))
    rho = t_min ** 2 / volume
    return SuspensionReport(
        variant=cx.variant,
        cal_value=cx.cal.value,
        cal_route=cx.cal.route,
        volume=volume,
        volume_check=volume_check,
        volume_rel_gap=abs(volume - volume_check) / max(abs(volume), 1e-300),
        tau_min=tau_min,
        tau_max=tau_max,
        t_min=t_min,
        t_min_certified_up_to=k_max,
        rho_sys=rho,
        boundary_is_minimal=bool(BOUNDARY_PERIOD <= min(periods)),
        census=census,
        certification_note=_certification_note(cx, k_max),
    )


# ---------------------------------------------------------------------------
# suspension orbits
# ---------------------------------------------------------------------------

def suspension_orbit(cx, z0, t_total, samples_per_leg=24):
    """Trace of the suspension flow from (z0, 0) for total time t_total.

    The flow moves at unit speed in s until s = tau(z), then jumps to
    (phi(z), 0).  Returns (rows, events): rows are (t, x, y, s) samples,
    events the section crossings (t, x, y).
    """
    if t_total < 0:
        raise NonPositiveReturnTime("t_total must be non-negative")
    z = complex(np.asarray(z0).reshape(()))
    rows = []
    events = []
    t = 0.0
    remaining = float(t_total)
    while True:
        tau_z = float(np.asarray(cx.tau(np.array(z))))
        if tau_z <= 0.0:
            raise NonPositiveReturnTime(f"tau({z}) = {tau_z:.6f} <= 0")
        leg = min(tau_z, remaining)
        for s in np.linspace(0.0, leg, samples_per_leg, endpoint=False):
            rows.append((t + s, z.real, z.imag, s))
        t += leg
        remaining -= leg
        if remaining <= 0.0 and leg < tau_z:
            rows.append((t, z.real, z.imag, leg))
            break
        z = complex(np.asarray(cx.map(np.array(z))).reshape(()))
        events.append((t, z.real, z.imag))
        if remaining <= 0.0:
            rows.append((t, z.real, z.imag, 0.0))
            break
    return rows, events
