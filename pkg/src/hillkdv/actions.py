"""Gap integrals of the quasimomentum: actions, moments, the constant Q0.

On the momentum gap g_n = (z_n^-, z_n^+), z = sqrt(lam), the imaginary
part of the quasimomentum is v(z) = arccosh((-1)^n Delta(z^2)) and its
real part is the constant pi*n.  Everything here integrates v over gaps:

* the action A_n = (4/pi) * int_{g_n} z v(z) dz,
* the constant Q0 = (2/pi) * sum_n int_{g_n} v dz, also in the weighted
  form (2/pi) * sum_n (pi n) int_{g_n} v/z dz - equal in exact
  arithmetic, computed independently as a cross-check,
* weighted moments P_j = sum_n (pi n)^j A_n.

Quadrature uses Gauss-Chebyshev nodes in z, whose weight absorbs the
square-root vanishing of v at the gap ends, with the node count doubled
until convergence.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import QuadratureError
from .hill import DELTA_EVAL_NOISE, HillSpectrum, arccosh_one_plus

QUAD_RTOL = 1e-10
QUAD_MAX_NODES = 512
# Gaps whose action falls below this fraction of the largest action are
# pure evaluation noise; they are kept at their first estimate.
NEGLIGIBLE_ACTION_RTOL = 1e-13
# Two consecutive actions below this fraction of the maximum terminate the
# gap sweep (superexponential decay for trigonometric polynomials).
DECAY_STOP_RTOL = 1e-14


def _gap_sign(n: int) -> float:
    return -1.0 if n % 2 else 1.0


def gap_v(hs: HillSpectrum, n: int, z) -> np.ndarray | float:
    """v(z + i0) on the open momentum gap n; zero at both edges.

    Raises ValueError for closed gaps and for z outside the gap.
    """
    hs._check_gap_index(n)
    if not hs.bands.gap_open(n):
        raise ValueError(f"gap {n} is closed; v is zero on the spectrum")
    zm, zp = hs.bands.z_minus(n), hs.bands.z_plus(n)
    z_arr = np.atleast_1d(np.asarray(z, dtype=float))
    slack = 1e-9 * max(1.0, zp)
    if np.any(z_arr < zm - slack) or np.any(z_arr > zp + slack):
        raise ValueError(f"z outside momentum gap {n} = [{zm}, {zp}]")
    u = _gap_sign(n) * hs.delta(z_arr**2) - 1.0
    v = arccosh_one_plus(np.maximum(u, 0.0))
    return float(v[0]) if np.ndim(z) == 0 else v


def gap_v_profile(hs: HillSpectrum, n: int, points: int = 101):
    """(z, v) samples across gap n with the end values pinned to zero."""
    zm, zp = hs.bands.z_minus(n), hs.bands.z_plus(n)
    z = np.linspace(zm, zp, points)
    v = gap_v(hs, n, z)
    v[0] = 0.0
    v[-1] = 0.0
    return z, v


def _chebyshev_nodes(count: int):
    t = np.cos((2.0 * np.arange(1, count + 1) - 1.0) * np.pi / (2.0 * count))
    weight = (np.pi / count) * np.sqrt(1.0 - t**2)
    return t, weight


def _gap_integrals(hs: HillSpectrum, n: int, rtol: float, floor: float):
    """(A_n, int v dz, pi*n int v/z dz, nodes) by doubling quadrature.

    ``floor`` is the absolute scale below which a gap integral is accepted
    as numerically negligible without a convergence certificate.
    """
    zm, zp = hs.bands.z_minus(n), hs.bands.z_plus(n)
    mid, half = 0.5 * (zp + zm), 0.5 * (zp - zm)
    sgn = _gap_sign(n)
    # absolute accuracy attainable given the discriminant noise floor:
    # dv ~ noise / v integrates to O(noise) over the sqrt profile
    noise_v = 8.0 * DELTA_EVAL_NOISE
    noise_action = noise_v * max(1.0, zp)
    prev = None
    count = 16
    while count <= QUAD_MAX_NODES:
        t, weight = _chebyshev_nodes(count)
        z = mid + half * t
        u = sgn * hs.delta(z**2) - 1.0
        v = arccosh_one_plus(np.maximum(u, 0.0))
        w = half * weight
        action = (4.0 / np.pi) * float(np.sum(w * z * v))
        plain = (2.0 / np.pi) * float(np.sum(w * v))
        weighted = (2.0 / np.pi) * np.pi * n * float(np.sum(w * v / z))
        if abs(action) < floor:
            return action, plain, weighted, count
        if prev is not None:
            ok_action = abs(action - prev[0]) <= rtol * abs(action) + noise_action
            ok_plain = abs(plain - prev[1]) <= rtol * abs(plain) + noise_v
            ok_weighted = abs(weighted - prev[2]) <= rtol * abs(weighted) + noise_v
            if ok_action and ok_plain and ok_weighted:
                return action, plain, weighted, count
        prev = (action, plain, weighted)
        count *= 2
    raise QuadratureError(
        f"gap {n} quadrature did not converge by {QUAD_MAX_NODES} nodes; "
        f"last values {prev}"
    )


def action(hs: HillSpectrum, n: int, rtol: float = QUAD_RTOL) -> float:
    """The action of gap n; exactly zero for closed gaps."""
    hs._check_gap_index(n)
    if not hs.bands.gap_open(n):
        return 0.0
    return _gap_integrals(hs, n, rtol, floor=0.0)[0]


def action_via_contour(hs: HillSpectrum, n: int, max_nodes: int = QUAD_MAX_NODES) -> float:
    """Independent route: the same action from the lam-plane integral
    of lam * Delta'(lam) / sqrt(Delta^2 - 1) over the gap.

    The two half-lobes of the integrand nearly cancel (their size scales
    like lam * h_n while the action scales like h_n^2), so the reachable
    absolute accuracy degrades as gaps shrink; expect 1e-8 agreement only
    for well-opened gaps.  This is a sign-and-convention oracle, not a
    production path.
    """
    hs._check_gap_index(n)
    if not hs.bands.gap_open(n):
        return 0.0
    lm, lp = hs.bands.lam_minus(n), hs.bands.lam_plus(n)
    mid, half = 0.5 * (lp + lm), 0.5 * (lp - lm)
    sign = -1.0 if n % 2 == 0 else 1.0  # (-1)^{n+1}
    prev = None
    count = 32
    while count <= max_nodes:
        t, weight = _chebyshev_nodes(count)
        lam = mid + half * t
        d, dd = hs.delta_deriv(lam)
        s = d * d - 1.0
        integrand = np.where(s > 0.0, lam * dd / np.sqrt(np.maximum(s, 1e-300)), 0.0)
        value = sign * (2.0 / np.pi) * float(np.sum(half * weight * integrand))
        if prev is not None and abs(value - prev) <= 1e-9 * max(1.0, abs(value)):
            return value
        prev = value
        count *= 2
    return prev


@dataclass(frozen=True)
class ActionSpectrum:
    """Actions per gap with the quasimomentum constant in both forms.

    ``actions[k]`` is the action of gap k+1.  ``decayed`` records whether
    the sweep reached the superexponential tail before ``n_max``; moments
    taken from an undecayed spectrum carry a meaningful tail bound.
    """

    n_max: int
    z_edges: np.ndarray          # (n_max, 2)
    actions: np.ndarray          # (n_max,)
    q0_gap: float
    q0_weighted: float
    quad_nodes: np.ndarray       # (n_max,) nodes used, 0 for skipped gaps
    decayed: bool
    shift: float                 # the q0 of the underlying spectrum

    def moment(self, j: float) -> tuple[float, float]:
        """(P_j, tail bound) with P_j = sum (pi n)^j A_n over computed gaps.

        The tail is a geometric extrapolation of the last three nonzero
        terms; it is zero when the sweep decayed to the noise floor.
        """
        n = np.arange(1, self.n_max + 1, dtype=float)
        terms = (np.pi * n) ** j * self.actions
        value = float(np.sum(terms))
        nz = np.nonzero(np.abs(terms) > 0.0)[0]
        if self.decayed or len(nz) < 3:
            return value, 0.0
        last = np.abs(terms[nz[-3:]])
        ratios = last[1:] / np.maximum(last[:-1], 1e-300)
        r = min(float(np.sqrt(ratios[0] * ratios[1])), 0.9)
        tail = float(last[-1] * r / (1.0 - r))
        return value, tail

    @property
    def p_minus1(self) -> float:
        return self.moment(-1.0)[0]

    @property
    def p_1(self) -> float:
        return self.moment(1.0)[0]

    @property
    def p_3(self) -> float:
        return self.moment(3.0)[0]

    def table_rows(self):
        """(n, z-, z+, A_n) rows for export."""
        for k in range(self.n_max):
            yield (k + 1, float(self.z_edges[k, 0]), float(self.z_edges[k, 1]),
                   float(self.actions[k]))


def compute_action_spectrum(hs: HillSpectrum, rtol: float = QUAD_RTOL) -> ActionSpectrum:
    """Sweep all gaps of ``hs``, stopping once actions decay to the floor."""
    n_max = hs.n_max
    actions = np.zeros(n_max)
    nodes = np.zeros(n_max, dtype=int)
    z_edges = np.zeros((n_max, 2))
    q0_gap = 0.0
    q0_weighted = 0.0
    largest = 0.0
    decayed = False
    for n in range(1, n_max + 1):
        z_edges[n - 1] = (hs.bands.z_minus(n), hs.bands.z_plus(n))
        if not hs.bands.gap_open(n):
            continue
        floor = NEGLIGIBLE_ACTION_RTOL * max(largest, 1e-8)
        a, plain, weighted, used = _gap_integrals(hs, n, rtol, floor)
        actions[n - 1] = a
        nodes[n - 1] = used
        q0_gap += plain
        q0_weighted += weighted
        largest = max(largest, abs(a))
        if n > hs.psi.n_modes + 1 and n >= 2:
            tiny = DECAY_STOP_RTOL * max(largest, 1e-12)
            if abs(actions[n - 1]) <= tiny and abs(actions[n - 2]) <= tiny:
                decayed = True
                for m in range(n + 1, n_max + 1):
                    z_edges[m - 1] = (hs.bands.z_minus(m), hs.bands.z_plus(m))
                break
    else:
        # ran through every gap; decayed if the trailing ones vanished
        tiny = DECAY_STOP_RTOL * max(largest, 1e-12)
        decayed = n_max >= 2 and abs(actions[-1]) <= tiny and abs(actions[-2]) <= tiny
    return ActionSpectrum(
        n_max=n_max, z_edges=z_edges, actions=actions,
        q0_gap=q0_gap, q0_weighted=q0_weighted,
        quad_nodes=nodes, decayed=decayed, shift=hs.q0,
    )


def q0_gap_integral(hs: HillSpectrum, rtol: float = QUAD_RTOL) -> float:
    """The quasimomentum constant as (2/pi) sum_n int_{g_n} v dz."""
    return compute_action_spectrum(hs, rtol).q0_gap


def q0_weighted_integral(hs: HillSpectrum, rtol: float = QUAD_RTOL) -> float:
    """The same constant as (2/pi) sum_n (pi n) int_{g_n} v/z dz.

    Equality with :func:`q0_gap_integral` is a nontrivial identity; the
    two are computed with different weights as a cross-check.
    """
    return compute_action_spectrum(hs, rtol).q0_weighted


def momentum_gap_measure(hs: HillSpectrum, n: int) -> float:
    """int_{g_n} z dz = (lam_n^+ - lam_n^-) / 2, in closed form."""
    return 0.5 * (hs.bands.lam_plus(n) - hs.bands.lam_minus(n))


def scan_noise_budget(hs: HillSpectrum, v_local: np.ndarray) -> np.ndarray:
    """Absolute uncertainty of sampled v given the discriminant noise floor.

    dv = d(Delta) / sqrt(Delta^2 - 1) ~ noise / v near the band edges.
    """
    return DELTA_EVAL_NOISE / np.maximum(v_local, 1e-9)
