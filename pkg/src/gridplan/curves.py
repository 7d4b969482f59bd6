"""Continuous-curve machinery: Dubins and Reeds-Shepp shortest paths and
samplers, minimal-curvature arc+line trajectory construction, and motion
primitive synthesis for the Hybrid-A* planner.

Curve paths are represented as segment lists [(ctype, signed_length_m)]
with ctype in {'L', 'S', 'R'}; a negative length means the segment is
driven in reverse. Every candidate word produced by the closed-form
formulas is validated by integrating its segments and checking that the
endpoint reproduces the target pose, so a formula that does not apply to
a given configuration is simply discarded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .pose import PoseSE2, ang_diff, norm_angle

Segment = tuple[str, float]

_EPS = 1e-10
_VALIDATE_TOL = 1e-6


def _mod2pi(a: float) -> float:
    """Reduce an angle to (-pi, pi]."""
    a = math.fmod(a, 2.0 * math.pi)
    if a <= -math.pi:
        a += 2.0 * math.pi
    elif a > math.pi:
        a -= 2.0 * math.pi
    return a


def _polar(x: float, y: float) -> tuple[float, float]:
    return math.hypot(x, y), math.atan2(y, x)


def _step_pose(x: float, y: float, th: float, ctype: str,
               s: float) -> tuple[float, float, float]:
    """Advance a unit-radius pose along one segment by signed length s."""
    if ctype == "S":
        return x + s * math.cos(th), y + s * math.sin(th), th
    if ctype == "L":
        return (x + math.sin(th + s) - math.sin(th),
                y - math.cos(th + s) + math.cos(th),
                th + s)
    # 'R'
    return (x + math.sin(th) - math.sin(th - s),
            y + math.cos(th - s) - math.cos(th),
            th - s)


def _integrate(segments: list[Segment]) -> tuple[float, float, float]:
    x = y = th = 0.0
    for ctype, s in segments:
        x, y, th = _step_pose(x, y, th, ctype, s)
    return x, y, th


def _endpoint_matches(segments: list[Segment], x: float, y: float,
                      phi: float) -> bool:
    ex, ey, eth = _integrate(segments)
    return (abs(ex - x) < _VALIDATE_TOL and abs(ey - y) < _VALIDATE_TOL
            and abs(_mod2pi(eth - phi)) < _VALIDATE_TOL)


def _path_length(segments: list[Segment]) -> float:
    return sum(abs(s) for _, s in segments)


def _relative_target(a: PoseSE2, b: PoseSE2, R: float) -> tuple[float, float, float]:
    """Express b in a's frame, scaled to unit turning radius."""
    dx, dy = b.x - a.x, b.y - a.y
    c, s = math.cos(a.theta), math.sin(a.theta)
    return ((c * dx + s * dy) / R, (-s * dx + c * dy) / R,
            _mod2pi(b.theta - a.theta))


# ---------------------------------------------------------------------------
# Dubins (forward-only) shortest paths, derived from tangent-circle geometry
# ---------------------------------------------------------------------------

def _dubins_candidates(x: float, y: float, phi: float) -> list[list[Segment]]:
    """All Dubins word candidates to the unit-radius normalized target."""
    cands: list[list[Segment]] = []
    sphi, cphi = math.sin(phi), math.cos(phi)
    left1, right1 = (0.0, 1.0), (0.0, -1.0)
    left2 = (x - sphi, y + cphi)
    right2 = (x + sphi, y - cphi)

    def m2pos(a: float) -> float:
        a = math.fmod(a, 2.0 * math.pi)
        return a + 2.0 * math.pi if a < 0 else a

    # LSL: outer tangent between the two left circles
    dx, dy = left2[0] - left1[0], left2[1] - left1[1]
    rho, psi = _polar(dx, dy)
    cands.append([("L", m2pos(psi)), ("S", rho), ("L", m2pos(phi - psi))])
    # RSR
    dx, dy = right2[0] - right1[0], right2[1] - right1[1]
    rho, psi = _polar(dx, dy)
    cands.append([("R", m2pos(-psi)), ("S", rho), ("R", m2pos(psi - phi))])
    # LSR: inner tangent
    dx, dy = right2[0] - left1[0], right2[1] - left1[1]
    rho2 = dx * dx + dy * dy
    if rho2 >= 4.0:
        p = math.sqrt(rho2 - 4.0)
        chi = math.atan2(dy, dx) + math.atan2(2.0, p)
        cands.append([("L", m2pos(chi)), ("S", p), ("R", m2pos(chi - phi))])
    # RSL
    dx, dy = left2[0] - right1[0], left2[1] - right1[1]
    rho2 = dx * dx + dy * dy
    if rho2 >= 4.0:
        p = math.sqrt(rho2 - 4.0)
        chi = math.atan2(dy, dx) - math.atan2(2.0, p)
        cands.append([("R", m2pos(-chi)), ("S", p), ("L", m2pos(phi - chi))])
    # LRL: middle circle tangent to both left circles
    dx, dy = left2[0] - left1[0], left2[1] - left1[1]
    rho, thd = _polar(dx, dy)
    if 0.0 < rho <= 4.0:
        A = math.acos(rho / 4.0)
        for sgn in (1.0, -1.0):
            ang = thd + sgn * A
            t = m2pos(ang + 0.5 * math.pi)
            mid = (left1[0] + 2.0 * math.cos(ang), left1[1] + 2.0 * math.sin(ang))
            ang2 = math.atan2(left2[1] - mid[1], left2[0] - mid[0])
            u = m2pos((ang + math.pi) - ang2)
            v = m2pos(phi - t + u)
            cands.append([("L", t), ("R", u), ("L", v)])
    # RLR
    dx, dy = right2[0] - right1[0], right2[1] - right1[1]
    rho, thd = _polar(dx, dy)
    if 0.0 < rho <= 4.0:
        A = math.acos(rho / 4.0)
        for sgn in (1.0, -1.0):
            ang = thd + sgn * A
            t = m2pos(0.5 * math.pi - ang)
            mid = (right1[0] + 2.0 * math.cos(ang), right1[1] + 2.0 * math.sin(ang))
            ang2 = math.atan2(right2[1] - mid[1], right2[0] - mid[0])
            u = m2pos(ang2 - (ang + math.pi))
            v = m2pos(u - t - phi)
            cands.append([("R", t), ("L", u), ("R", v)])
    return cands


def dubins_path(a: PoseSE2, b: PoseSE2, R: float) -> list[Segment]:
    """Shortest forward-only bounded-curvature path; segments in meters."""
    if R <= 0.0:
        raise ValueError("turning radius must be positive")
    x, y, phi = _relative_target(a, b, R)
    if abs(x) < _EPS and abs(y) < _EPS and abs(phi) < _EPS:
        return []
    best: Optional[list[Segment]] = None
    best_len = math.inf
    for cand in _dubins_candidates(x, y, phi):
        if not _endpoint_matches(cand, x, y, phi):
            continue
        length = _path_length(cand)
        if length < best_len:
            best, best_len = cand, length
    if best is None:  # cannot happen: LSL/RSR always exist
        raise RuntimeError("no Dubins word matched the target pose")
    return [(c, s * R) for c, s in best]


def dubins_distance(a: PoseSE2, b: PoseSE2, R: float) -> float:
    return _path_length(dubins_path(a, b, R))


# ---------------------------------------------------------------------------
# Reeds-Shepp (bidirectional) shortest paths: the standard word families
# with timeflip / reflect / backwards transforms
# ---------------------------------------------------------------------------

_HALF_PI = 0.5 * math.pi


def _tau_omega(u, v, xi, eta, phi):
    delta = _mod2pi(u - v)
    A = math.sin(u) - math.sin(delta)
    B = math.cos(u) - math.cos(delta) - 1.0
    t1 = math.atan2(eta * A - xi * B, xi * A + eta * B)
    t2 = 2.0 * (math.cos(delta) - math.cos(v) - math.cos(u)) + 3.0
    tau = _mod2pi(t1 + math.pi) if t2 < 0.0 else _mod2pi(t1)
    return tau, _mod2pi(tau - u + v - phi)


def _LpSpLp(x, y, phi):
    u, t = _polar(x - math.sin(phi), y - 1.0 + math.cos(phi))
    if t >= -_EPS:
        v = _mod2pi(phi - t)
        if v >= -_EPS:
            return t, u, v
    return None


def _LpSpRp(x, y, phi):
    u1, t1 = _polar(x + math.sin(phi), y - 1.0 - math.cos(phi))
    u1sq = u1 * u1
    if u1sq >= 4.0:
        u = math.sqrt(u1sq - 4.0)
        t = _mod2pi(t1 + math.atan2(2.0, u))
        v = _mod2pi(t - phi)
        if t >= -_EPS and v >= -_EPS:
            return t, u, v
    return None


def _LpRmL(x, y, phi):
    xi = x - math.sin(phi)
    eta = y - 1.0 + math.cos(phi)
    u1, theta = _polar(xi, eta)
    if u1 <= 4.0:
        u = -2.0 * math.asin(0.25 * u1)
        t = _mod2pi(theta + 0.5 * u + math.pi)
        v = _mod2pi(phi - t + u)
        if t >= -_EPS and u <= _EPS:
            return t, u, v
    return None


def _LpRupLumRm(x, y, phi):
    xi = x + math.sin(phi)
    eta = y - 1.0 - math.cos(phi)
    rho = 0.25 * (2.0 + math.hypot(xi, eta))
    if rho <= 1.0:
        u = math.acos(rho)
        t, v = _tau_omega(u, -u, xi, eta, phi)
        if t >= -_EPS and v <= _EPS:
            return t, u, v
    return None


def _LpRumLumRp(x, y, phi):
    xi = x + math.sin(phi)
    eta = y - 1.0 - math.cos(phi)
    rho = (20.0 - xi * xi - eta * eta) / 16.0
    if 0.0 <= rho <= 1.0:
        u = -math.acos(rho)
        if u >= -_HALF_PI:
            t, v = _tau_omega(u, u, xi, eta, phi)
            if t >= -_EPS and v >= -_EPS:
                return t, u, v
    return None


def _LpRmSmLm(x, y, phi):
    xi = x - math.sin(phi)
    eta = y - 1.0 + math.cos(phi)
    rho, theta = _polar(xi, eta)
    if rho >= 2.0:
        r = math.sqrt(rho * rho - 4.0)
        u = 2.0 - r
        t = _mod2pi(theta + math.atan2(r, -2.0))
        v = _mod2pi(phi - _HALF_PI - t)
        if t >= -_EPS and u <= _EPS and v <= _EPS:
            return t, u, v
    return None


def _LpRmSmRm(x, y, phi):
    xi = x + math.sin(phi)
    eta = y - 1.0 - math.cos(phi)
    rho, theta = _polar(-eta, xi)
    if rho >= 2.0:
        t = theta
        u = 2.0 - rho
        v = _mod2pi(t + _HALF_PI - phi)
        if t >= -_EPS and u <= _EPS and v <= _EPS:
            return t, u, v
    return None


def _LpRmSLmRp(x, y, phi):
    xi = x + math.sin(phi)
    eta = y - 1.0 - math.cos(phi)
    rho, _ = _polar(xi, eta)
    if rho >= 2.0:
        u = 4.0 - math.sqrt(rho * rho - 4.0)
        if u <= _EPS:
            t = _mod2pi(math.atan2((4.0 - u) * xi - 2.0 * eta,
                                   -2.0 * xi + (u - 4.0) * eta))
            v = _mod2pi(t - phi)
            if t >= -_EPS and v >= -_EPS:
                return t, u, v
    return None


def _mirror(types: tuple[str, ...]) -> tuple[str, ...]:
    return tuple("R" if c == "L" else "L" if c == "R" else "S" for c in types)


def _rs_emit(cands, base_fn, x, y, phi, types, build):
    """Run a base formula under the 4 sign transforms and emit candidates.

    ``build(t, u, v)`` maps the formula solution to segment lengths matching
    ``types``. timeflip negates every length; reflect mirrors L/R.
    """
    for flip_x, mirror in ((False, False), (True, False),
                           (False, True), (True, True)):
        tx = -x if flip_x else x
        ty = -y if mirror else y
        tphi = phi if (flip_x and mirror) else -phi if (flip_x or mirror) else phi
        sol = base_fn(tx, ty, tphi)
        if sol is None:
            continue
        lengths = build(*sol)
        if flip_x:
            lengths = [-s for s in lengths]
        ts = _mirror(types) if mirror else types
        cands.append(list(zip(ts, lengths)))


def _rs_candidates(x: float, y: float, phi: float) -> list[list[Segment]]:
    cands: list[list[Segment]] = []
    # backwards target: swap the roles of start and goal
    xb = x * math.cos(phi) + y * math.sin(phi)
    yb = x * math.sin(phi) - y * math.cos(phi)

    # CSC
    _rs_emit(cands, _LpSpLp, x, y, phi, ("L", "S", "L"),
             lambda t, u, v: [t, u, v])
    _rs_emit(cands, _LpSpRp, x, y, phi, ("L", "S", "R"),
             lambda t, u, v: [t, u, v])
    # CCC, plus backwards (segment order reversed)
    _rs_emit(cands, _LpRmL, x, y, phi, ("L", "R", "L"),
             lambda t, u, v: [t, u, v])
    _rs_emit(cands, _LpRmL, xb, yb, phi, ("L", "R", "L"),
             lambda t, u, v: [v, u, t])
    # CCCC
    _rs_emit(cands, _LpRupLumRm, x, y, phi, ("L", "R", "L", "R"),
             lambda t, u, v: [t, u, -u, v])
    _rs_emit(cands, _LpRumLumRp, x, y, phi, ("L", "R", "L", "R"),
             lambda t, u, v: [t, u, u, v])
    # CCSC, plus backwards
    _rs_emit(cands, _LpRmSmLm, x, y, phi, ("L", "R", "S", "L"),
             lambda t, u, v: [t, -_HALF_PI, u, v])
    _rs_emit(cands, _LpRmSmRm, x, y, phi, ("L", "R", "S", "R"),
             lambda t, u, v: [t, -_HALF_PI, u, v])
    _rs_emit(cands, _LpRmSmLm, xb, yb, phi, ("L", "S", "R", "L"),
             lambda t, u, v: [v, u, -_HALF_PI, t])
    _rs_emit(cands, _LpRmSmRm, xb, yb, phi, ("R", "S", "R", "L"),
             lambda t, u, v: [v, u, -_HALF_PI, t])
    # CCSCC
    _rs_emit(cands, _LpRmSLmRp, x, y, phi, ("L", "R", "S", "L", "R"),
             lambda t, u, v: [t, -_HALF_PI, u, -_HALF_PI, v])
    return cands


def reeds_shepp_path(a: PoseSE2, b: PoseSE2, R: float) -> list[Segment]:
    """Shortest bidirectional bounded-curvature path; segments in meters,
    negative segment lengths driven in reverse."""
    if R <= 0.0:
        raise ValueError("turning radius must be positive")
    x, y, phi = _relative_target(a, b, R)
    if abs(x) < _EPS and abs(y) < _EPS and abs(phi) < _EPS:
        return []
    best: Optional[list[Segment]] = None
    best_len = math.inf
    for cand in _rs_candidates(x, y, phi):
        if not _endpoint_matches(cand, x, y, phi):
            continue
        length = _path_length(cand)
        if length < best_len:
            best, best_len = cand, length
    if best is None:
        raise RuntimeError("no Reeds-Shepp word matched the target pose")
    return [(c, s * R) for c, s in best]


def reeds_shepp_distance(a: PoseSE2, b: PoseSE2, R: float) -> float:
    return _path_length(reeds_shepp_path(a, b, R))


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------

def sample_segments(start: PoseSE2, segments: list[Segment], R: float,
                    step: float) -> tuple[np.ndarray, np.ndarray]:
    """Sample a segment path (lengths in meters) at <= ``step`` spacing.

    Returns (poses, dirs): poses is (N, 3) including the start pose, dirs
    is (N,) with +1/-1 per sample (the start inherits the first segment's
    direction).
    """
    poses = [(start.x, start.y, start.theta)]
    dirs = [0]
    x, y, th = start.x, start.y, start.theta
    for ctype, slen in segments:
        if abs(slen) < 1e-12:
            continue
        d = 1 if slen > 0 else -1
        n = max(1, math.ceil(abs(slen) / step - 1e-12))
        for i in range(1, n + 1):
            s = slen * i / n
            if ctype == "S":
                px, py, pth = _step_pose(x, y, th, "S", s)
            else:
                # _step_pose works at unit radius: scale positions by R
                px, py, pth = _step_pose(x / R, y / R, th, ctype, s / R)
                px, py = px * R, py * R
            poses.append((px, py, norm_angle(pth)))
            dirs.append(d)
        x, y = poses[-1][0], poses[-1][1]
        if ctype != "S":
            th = th + slen / R if ctype == "L" else th - slen / R
    if len(dirs) > 1:
        dirs[0] = dirs[1]
    else:
        dirs[0] = 1
    return np.array(poses, dtype=float), np.array(dirs, dtype=np.int8)


def dubins_sample(a: PoseSE2, b: PoseSE2, R: float,
                  step: float) -> tuple[np.ndarray, np.ndarray]:
    return sample_segments(a, dubins_path(a, b, R), R, step)


def reeds_shepp_sample(a: PoseSE2, b: PoseSE2, R: float,
                       step: float) -> tuple[np.ndarray, np.ndarray]:
    return sample_segments(a, reeds_shepp_path(a, b, R), R, step)


# ---------------------------------------------------------------------------
# Minimal-curvature arc + line trajectory construction
# ---------------------------------------------------------------------------

@dataclass
class TrajectorySolution:
    """A single arc (optionally joined by one straight segment) connecting
    two poses with the smallest possible curvature."""

    start: PoseSE2
    end: PoseSE2
    arc_center: Optional[tuple[float, float]]
    arc_radius: float  # math.inf for a pure straight line
    p_arc: tuple[float, float]
    q_arc: tuple[float, float]
    intersection: Optional[tuple[float, float]]
    line_segment: Optional[tuple[tuple[float, float], tuple[float, float]]]
    turn_sign: int
    total_length: float
    arc_length: float = 0.0

    def sample(self, step: float) -> np.ndarray:
        """Poses along the trajectory at <= ``step`` spacing, start included."""
        pts = [(self.start.x, self.start.y, self.start.theta)]

        def add_straight(p0, p1, theta):
            d = math.hypot(p1[0] - p0[0], p1[1] - p0[1])
            if d < 1e-12:
                return
            n = max(1, math.ceil(d / step - 1e-12))
            for i in range(1, n + 1):
                t = i / n
                pts.append((p0[0] + t * (p1[0] - p0[0]),
                            p0[1] + t * (p1[1] - p0[1]), theta))

        start_side = (self.line_segment is not None
                      and self.line_segment[0] == (self.start.x, self.start.y))
        if start_side:
            add_straight(self.line_segment[0], self.line_segment[1],
                         self.start.theta)
        if self.arc_center is not None and self.arc_length > 1e-12:
            cx, cy = self.arc_center
            a0 = math.atan2(self.p_arc[1] - cy, self.p_arc[0] - cx)
            sweep = self.turn_sign * self.arc_length / self.arc_radius
            n = max(1, math.ceil(self.arc_length / step - 1e-12))
            for i in range(1, n + 1):
                a = a0 + sweep * i / n
                pts.append((cx + self.arc_radius * math.cos(a),
                            cy + self.arc_radius * math.sin(a),
                            norm_angle(self.start.theta + sweep * i / n)))
        if self.line_segment is not None and not start_side:
            add_straight(self.line_segment[0], self.line_segment[1],
                         self.end.theta)
        elif self.arc_center is None and self.line_segment is None:
            add_straight((self.start.x, self.start.y),
                         (self.end.x, self.end.y), self.start.theta)
        return np.array(pts, dtype=float)


def generate_trajectory(start: PoseSE2, end: PoseSE2,
                        R_min: float = 0.0) -> Optional[TrajectorySolution]:
    """Connect two poses with a tangent arc plus at most one straight
    segment; returns None when no such trajectory exists or its radius is
    below ``R_min``.

    The heading lines are intersected with a direct 2x2 vector solve rather
    than slope formulas, so vertical headings need no special casing.
    """
    px, py = start.x, start.y
    qx, qy = end.x, end.y
    ux, uy = math.cos(start.theta), math.sin(start.theta)
    wx, wy = math.cos(end.theta), math.sin(end.theta)
    if abs(px - qx) < 1e-12 and abs(py - qy) < 1e-12:
        return None
    cross_uw = ux * wy - uy * wx
    vx, vy = qx - px, qy - py
    dist_pq = math.hypot(vx, vy)

    if abs(cross_uw) < 1e-9:
        # parallel headings: feasible only when collinear, co-directed and
        # the goal lies ahead -> a pure straight line
        if (abs(vx * uy - vy * ux) < 1e-9 and vx * ux + vy * uy > 0.0
                and ux * wx + uy * wy > 0.0):
            return TrajectorySolution(
                start=start, end=end, arc_center=None, arc_radius=math.inf,
                p_arc=(px, py), q_arc=(qx, qy), intersection=None,
                line_segment=((px, py), (qx, qy)), turn_sign=0,
                total_length=dist_pq, arc_length=0.0)
        return None

    # I = p + t1*u = q + t2*w
    det = -cross_uw
    t1 = (vx * (-wy) - (-wx) * vy) / det
    t2 = (ux * vy - uy * vx) / det
    if t1 <= 1e-12 or t2 >= -1e-12:
        return None  # intersection behind the start or past the end
    ix_, iy_ = px + t1 * ux, py + t1 * uy
    d = min(t1, -t2)
    pax, pay = ix_ - d * ux, iy_ - d * uy
    qax, qay = ix_ + d * wx, iy_ + d * wy
    # circle center: intersection of the perpendiculars at the arc endpoints
    # C = p_arc + s1*(-uy, ux) = q_arc + s2*(-wy, wx)
    det2 = (-uy) * wx - (-wy) * ux
    if abs(det2) < 1e-15:
        return None
    bx_, by_ = qax - pax, qay - pay
    s1 = (bx_ * wx - (-wy) * by_) / det2
    cx_, cy_ = pax + s1 * (-uy), pay + s1 * ux
    r = math.hypot(cx_ - pax, cy_ - pay)
    if R_min > 0.0 and r < R_min:
        return None
    turn_sign = 1 if cross_uw > 0.0 else -1
    sweep = abs(ang_diff(end.theta, start.theta))
    arc_length = r * sweep
    if t1 < -t2 - 1e-12:
        seg = ((qax, qay), (qx, qy))
        seg_len = math.hypot(qx - qax, qy - qay)
    elif -t2 < t1 - 1e-12:
        seg = ((px, py), (pax, pay))
        seg_len = math.hypot(pax - px, pay - py)
    else:
        seg, seg_len = None, 0.0
    return TrajectorySolution(
        start=start, end=end, arc_center=(cx_, cy_), arc_radius=r,
        p_arc=(pax, pay), q_arc=(qax, qay), intersection=(ix_, iy_),
        line_segment=seg, turn_sign=turn_sign,
        total_length=arc_length + seg_len, arc_length=arc_length)


def closed_form_d_min(R: float, theta_i: float, theta_f: float) -> float:
    """Published closed-form lower bound on the tangent length d; kept for
    diagnostic comparison against the constructed-radius feasibility test."""
    psi = 0.5 * math.pi - abs(theta_f - theta_i)
    return R / math.tan(0.5 * psi)


# ---------------------------------------------------------------------------
# Motion primitives
# ---------------------------------------------------------------------------

@dataclass
class MotionPrimitive:
    """A short precomputed feasible motion, origin-relative.

    ``poses`` is an (N, 3) array starting at the origin with the start
    heading; consecutive samples are spaced at most one grid resolution
    apart and the discrete curvature never exceeds the turning limit.
    """

    prim_id: int
    start_heading_bin: int
    end_heading_bin: int
    poses: np.ndarray
    length: float
    turn_direction: int
    reversed: bool = False

    @property
    def end_pose(self) -> tuple[float, float, float]:
        p = self.poses[-1]
        return float(p[0]), float(p[1]), float(p[2])


def _arc_primitive(prim_id: int, start_theta: float, turn_sign: int,
                   radius: float, length: float, direction: int,
                   step: float, start_bin: int, end_bin: int,
                   heading_bins: int) -> MotionPrimitive:
    """Sample one arc or straight segment as a MotionPrimitive."""
    n = max(1, math.ceil(length / step - 1e-12))
    poses = [(0.0, 0.0, start_theta)]
    for i in range(1, n + 1):
        s = length * i / n
        if turn_sign == 0:
            poses.append((direction * s * math.cos(start_theta),
                          direction * s * math.sin(start_theta), start_theta))
        else:
            dth = direction * turn_sign * s / radius
            cx = -radius * turn_sign * math.sin(start_theta)
            cy = radius * turn_sign * math.cos(start_theta)
            a0 = math.atan2(-cy, -cx)
            poses.append((cx + radius * math.cos(a0 + dth),
                          cy + radius * math.sin(a0 + dth),
                          norm_angle(start_theta + dth)))
    return MotionPrimitive(prim_id=prim_id, start_heading_bin=start_bin,
                           end_heading_bin=end_bin % heading_bins,
                           poses=np.array(poses), length=length,
                           turn_direction=turn_sign, reversed=direction < 0)


def hybrid_primitives(R_min: float, resolution: float, heading_bins: int,
                      allow_reverse: bool) -> list[MotionPrimitive]:
    """Motion primitives for Hybrid-A* at grid resolution.

    The minimum turn per primitive comes from the angle of a chord at least
    sqrt(2) cells long on the minimum-radius circle, rounded up to a whole
    number of heading bins; straight steps are exactly sqrt(2) cells. Extra
    left/right arcs at twice the turn angle diversify the successor set.
    """
    if R_min <= 0.0:
        raise ValueError("R_min must be positive")
    if heading_bins < 8:
        raise ValueError("heading_bins must be >= 8")
    chord = math.sqrt(2.0) * resolution
    arg = chord / (2.0 * R_min)
    if arg > 1.0:
        raise ValueError(
            f"turning radius {R_min} too small for resolution {resolution}; "
            f"minimum feasible radius is {chord / 2.0:.6g} m")
    bin_angle = 2.0 * math.pi / heading_bins
    chord_angle = 2.0 * math.asin(arg)
    k = max(1, math.ceil(chord_angle / bin_angle - 1e-12))
    turn = k * bin_angle
    arc_len = R_min * turn
    prims: list[MotionPrimitive] = []
    step = resolution

    def add(turn_sign, radius, length, direction, dbins):
        prims.append(_arc_primitive(len(prims), 0.0, turn_sign, radius,
                                    length, direction, step, 0, dbins,
                                    heading_bins))

    add(0, 0.0, chord, 1, 0)
    add(1, R_min, arc_len, 1, k)
    add(-1, R_min, arc_len, 1, -k)
    if 2 * k < heading_bins // 2:
        add(1, R_min, 2.0 * arc_len, 1, 2 * k)
        add(-1, R_min, 2.0 * arc_len, 1, -2 * k)
    if allow_reverse:
        add(0, 0.0, chord, -1, 0)
        add(1, R_min, arc_len, -1, -k)
        add(-1, R_min, arc_len, -1, k)
    return prims


def discrete_curvature_ok(poses: np.ndarray, max_curvature: float,
                          tol: float = 1e-6) -> bool:
    """Check discrete curvature (circumscribed-circle estimate over
    consecutive pose triples) against a bound."""
    xy = poses[:, :2]
    for i in range(1, len(xy) - 1):
        a, b, c = xy[i - 1], xy[i], xy[i + 1]
        ab, bc, ca = b - a, c - b, a - c
        area2 = abs(ab[0] * bc[1] - ab[1] * bc[0])
        denom = (math.hypot(*ab) * math.hypot(*bc) * math.hypot(*ca))
        if denom < 1e-15:
            continue
        if 2.0 * area2 / denom > max_curvature + tol:
            return False
    return True
