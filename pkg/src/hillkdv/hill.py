"""Discriminant, band edges and gap geometry of -y'' + (psi + q0) y = lam y.

Two independent spectral routes are computed and cross-validated:

* truncated Fourier (Hill) matrices for the periodic and antiperiodic
  eigenvalue problems, which deliver guaranteed-ordered band edges;
* the discriminant Delta(lam) from the transfer matrix of the ODE,
  whose roots of Delta = +-1 locate the same edges independently.

Edges of well-opened gaps are refined to discriminant roots; the Hill
matrix values are kept alongside so the disagreement between the two
routes is part of the result.  The shift constant q0 is chosen so the
lowest periodic eigenvalue sits exactly at zero, which places the whole
spectrum on the positive half line and makes z = sqrt(lam) real on it.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterator

import numpy as np
from scipy.linalg import eigvalsh
from scipy.optimize import brentq, minimize_scalar

from ._sl2 import GAUSS3, propagate, propagate_deriv
from .errors import SpectralError
from .fourier import TrigPotential

# A gap counts as open when its length exceeds this fraction of max(1, lam).
GAP_OPEN_RTOL = 1e-9
# Smallest cosh(h) - 1 at the gap centre for which Delta = +-1 root polishing
# is attempted; below it the discriminant is flat to rounding across the gap.
POLISH_MIN_U = 1e-11
# Absolute accuracy of a single discriminant evaluation (rounding floor of
# the step recursion); used to derive noise allowances downstream.
DELTA_EVAL_NOISE = 5e-13

_WRONSKIAN_TOL = 1e-10
_STEP_TUNE_TOL = 1e-12
_MAX_STEPS = 8192
_MAX_MATRIX_DIM = 4097


def arccosh_one_plus(u):
    """arccosh(1 + u) for u >= 0, accurate through the sqrt vanishing at 0.

    Uses the expansion sqrt(2u) * (1 - u/12 + 3u^2/160 - 5u^3/896) for
    small u, where the naive log form loses half the digits.
    """
    u = np.asarray(u, dtype=float)
    small = u < 1e-4
    us = np.where(small, u, 0.0)
    series = np.sqrt(2.0 * us) * (1.0 - us / 12.0 + 3.0 * us**2 / 160.0 - 5.0 * us**3 / 896.0)
    big = np.arccosh(1.0 + np.where(small, 0.0, u))
    out = np.where(small, series, big)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Monodromy:
    """Fundamental-solution data at x = 1 for one spectral parameter.

    theta solves with theta(0) = 1, theta'(0) = 0; phi with phi(0) = 0,
    phi'(0) = 1.
    """

    lam: complex
    theta1: complex
    dtheta1: complex
    phi1: complex
    dphi1: complex

    @property
    def delta(self) -> complex:
        return 0.5 * (self.theta1 + self.dphi1)

    @property
    def wronskian(self) -> complex:
        return self.theta1 * self.dphi1 - self.dtheta1 * self.phi1


class Discriminant:
    """Vectorised evaluator of Delta(lam) for -y'' + (psi + q0) y = lam y.

    The step count is tuned at construction by doubling until probe values
    stabilise below 1e-12, up to ``lam_max`` in modulus.
    """

    def __init__(self, psi: TrigPotential, q0: float = 0.0,
                 lam_max: float = 3000.0, n_steps: int | None = None):
        self.psi = psi
        self.q0 = float(q0)
        self.lam_max = float(lam_max)
        if n_steps is None:
            n_steps = self._tune_steps()
        self._set_steps(n_steps)

    def _nodes_for(self, n_steps: int):
        h = 1.0 / n_steps
        vs = []
        for c in GAUSS3:
            twisted = self.psi.translate(c * h)
            base = twisted.sample(n_steps) if n_steps >= 2 * self.psi.n_modes + 1 \
                else twisted.evaluate(np.arange(n_steps) * h)
            vs.append(base + self.q0)
        return vs[0], vs[1], vs[2], h

    def _set_steps(self, n_steps: int) -> None:
        self._n_steps = n_steps
        self._v1, self._v2, self._v3, self._h = self._nodes_for(n_steps)

    def _tune_steps(self) -> int:
        sup = 2.0 * float(np.sum(np.abs(self.psi.coeffs))) + abs(self.q0)
        probes = np.array([
            -(1.0 + sup),
            0.31 * self.lam_max,
            0.67 * self.lam_max,
            self.lam_max,
        ], dtype=np.complex128)
        n = max(256, 2 * self.psi.n_modes + 2)
        n = 1 << int(np.ceil(np.log2(n)))
        while True:
            d_lo = self._delta_raw(probes, n)
            d_hi = self._delta_raw(probes, 2 * n)
            scale = np.maximum(1.0, np.abs(d_hi))
            if np.max(np.abs(d_lo - d_hi) / scale) < _STEP_TUNE_TOL:
                return n
            n *= 2
            if n > _MAX_STEPS:
                raise SpectralError(
                    f"discriminant step tuning did not converge below {_MAX_STEPS} steps"
                )

    def _delta_raw(self, lams: np.ndarray, n_steps: int) -> np.ndarray:
        v1, v2, v3, h = self._nodes_for(n_steps)
        m = propagate(lams, v1, v2, v3, h)
        return 0.5 * (m[:, 0, 0] + m[:, 1, 1])

    @property
    def n_steps(self) -> int:
        return self._n_steps

    def _as_batch(self, lam):
        arr = np.atleast_1d(np.asarray(lam))
        return np.ascontiguousarray(arr, dtype=np.complex128), np.isrealobj(lam), np.ndim(lam) == 0

    def delta(self, lam):
        """Delta(lam); real input gives real output, scalars stay scalar."""
        batch, was_real, was_scalar = self._as_batch(lam)
        m = propagate(batch, self._v1, self._v2, self._v3, self._h)
        d = 0.5 * (m[:, 0, 0] + m[:, 1, 1])
        if was_real:
            d = d.real
        return d[0] if was_scalar else d

    __call__ = delta

    def delta_deriv(self, lam):
        """(Delta, dDelta/dlam), differentiated through the discrete map."""
        batch, was_real, was_scalar = self._as_batch(lam)
        m, dm = propagate_deriv(batch, self._v1, self._v2, self._v3, self._h)
        d = 0.5 * (m[:, 0, 0] + m[:, 1, 1])
        dd = 0.5 * (dm[:, 0, 0] + dm[:, 1, 1])
        if was_real:
            d, dd = d.real, dd.real
        if was_scalar:
            return d[0], dd[0]
        return d, dd

    def monodromy(self, lam) -> Monodromy:
        batch = np.array([lam], dtype=np.complex128)
        m = propagate(batch, self._v1, self._v2, self._v3, self._h)[0]
        real_in = np.isrealobj(lam)

        def _cast(z):
            return float(z.real) if real_in else complex(z)

        mono = Monodromy(
            lam=float(np.real(lam)) if real_in else complex(lam),
            theta1=_cast(m[0, 0]),
            dtheta1=_cast(m[1, 0]),
            phi1=_cast(m[0, 1]),
            dphi1=_cast(m[1, 1]),
        )
        if abs(mono.wronskian - 1.0) > _WRONSKIAN_TOL:
            raise SpectralError(
                f"Wronskian deviates by {abs(mono.wronskian - 1.0):.3e} at lam={lam!r}"
            )
        return mono


# -- Hill matrices ------------------------------------------------------

def _coefficient_lookup(psi: TrigPotential, k: int) -> np.ndarray:
    pad = np.zeros(4 * k + 3, dtype=np.complex128)
    centre = 2 * k + 1
    for n in range(1, psi.n_modes + 1):
        pad[centre + n] = psi.coeffs[n - 1]
        pad[centre - n] = np.conj(psi.coeffs[n - 1])
    return pad


def _block_eigs(pad: np.ndarray, k: int, mode_offsets: np.ndarray) -> np.ndarray:
    centre = 2 * k + 1
    diff = np.rint(np.subtract.outer(mode_offsets, mode_offsets)).astype(int)
    h = pad[centre + diff]
    freqs = 2.0 * np.pi * mode_offsets
    h[np.diag_indices_from(h)] += freqs**2
    return eigvalsh(h)


def _matrix_edges(psi: TrigPotential, n_max: int, move_tol: float) -> np.ndarray:
    """Interleaved 2-periodic eigenvalues from Fourier truncation, doubling
    the mode cutoff until the needed edges stop moving.

    The movement test allows for the eigensolver's own rounding, which
    grows with the squared top frequency of the compared matrix; without
    that allowance large truncations could never certify convergence.
    """
    k = n_max + 8 + psi.n_modes
    prev = None
    while True:
        pad = _coefficient_lookup(psi, k)
        per = _block_eigs(pad, k, np.arange(-k, k + 1, dtype=float))
        anti = _block_eigs(pad, k, np.arange(-k, k, dtype=float) + 0.5)
        edges = np.empty(2 * n_max + 1)
        edges[0] = per[0]
        for n in range(1, n_max + 1):
            src = anti if n % 2 else per
            edges[2 * n - 1] = src[n - 1]
            edges[2 * n] = src[n]
        solver_noise = 16.0 * np.finfo(float).eps * (2.0 * np.pi * k) ** 2
        if prev is not None and np.max(np.abs(edges - prev)) < move_tol + solver_noise:
            return edges
        if 2 * (2 * k) + 1 > _MAX_MATRIX_DIM:
            raise SpectralError("Hill matrix truncation did not converge")
        prev = edges
        k *= 2


def _check_interlacing(edges: np.ndarray) -> None:
    n_max = (len(edges) - 1) // 2
    for n in range(n_max):
        band_lo = edges[2 * n]
        band_hi = edges[2 * n + 1]
        if not band_hi > band_lo + 1e-8 * max(1.0, abs(band_hi)):
            raise SpectralError(
                f"band {n} collapsed: [{band_lo!r}, {band_hi!r}]; "
                "discretisation too coarse"
            )
        if n >= 1 and edges[2 * n] - edges[2 * n - 1] < -1e-10 * max(1.0, abs(band_lo)):
            raise SpectralError(f"gap {n} has negative length")


# -- band structure ------------------------------------------------------

@dataclass(frozen=True)
class BandStructure:
    """Normalised spectral data: edges, critical points, heights, gaps.

    All spectral parameters are in the shifted coordinate where the lowest
    periodic eigenvalue is exactly 0.  ``edges`` holds
    (lam_0^+, lam_1^-, lam_1^+, ..., lam_nmax^+); ``edges_matrix`` the
    corresponding Hill-matrix eigenvalues for cross-validation;
    ``edge_residuals`` the values |Delta(edge) - (-1)^n|.
    """

    q0: float
    n_max: int
    edges: np.ndarray
    edges_matrix: np.ndarray
    crit: np.ndarray
    heights: np.ndarray
    gap_lengths: np.ndarray
    edge_residuals: np.ndarray
    edge_shifts: np.ndarray

    def lam_minus(self, n: int) -> float:
        return float(self.edges[2 * n - 1])

    def lam_plus(self, n: int) -> float:
        return float(self.edges[2 * n])

    def z_minus(self, n: int) -> float:
        return float(np.sqrt(max(self.lam_minus(n), 0.0)))

    def z_plus(self, n: int) -> float:
        return float(np.sqrt(max(self.lam_plus(n), 0.0)))

    def gap_length(self, n: int) -> float:
        return float(self.gap_lengths[n - 1])

    def gap_length_z(self, n: int) -> float:
        return self.z_plus(n) - self.z_minus(n)

    def gap_open(self, n: int) -> bool:
        return self.gap_lengths[n - 1] > GAP_OPEN_RTOL * max(1.0, self.lam_plus(n))

    def open_gaps(self) -> Iterator[int]:
        return (n for n in range(1, self.n_max + 1) if self.gap_open(n))

    def height(self, n: int) -> float:
        return float(self.heights[n - 1])

    def table_rows(self):
        """(n, lam-, lam+, lam_crit, h, |gap|) rows for export."""
        for n in range(1, self.n_max + 1):
            yield (n, self.lam_minus(n), self.lam_plus(n), float(self.crit[n - 1]),
                   float(self.heights[n - 1]), float(self.gap_lengths[n - 1]))


def _bracket_root(f, inside, outside, centre, far):
    """Root of f between a point where f > 0 and one where f < 0.

    ``inside`` sits on the f > 0 side (interior of a gap or below the
    spectrum) and is pulled towards ``centre`` if the sign is off;
    ``outside`` sits on the f < 0 side (band interior) and is pushed
    towards ``far``.  Exact-arithmetic sign patterns guarantee success;
    failure after a few adjustments signals a pipeline bug.
    """
    for _ in range(6):
        if f(inside) > 0:
            break
        inside = 0.5 * (inside + centre)
    else:
        raise SpectralError("failed to bracket a discriminant root (gap side)")
    for _ in range(6):
        if f(outside) < 0:
            break
        outside = 0.5 * (outside + far)
    else:
        raise SpectralError("failed to bracket a discriminant root (band side)")
    a, b = min(inside, outside), max(inside, outside)
    return brentq(f, a, b, xtol=1e-14 * max(1.0, abs(b)), rtol=4 * np.finfo(float).eps)


class HillSpectrum:
    """Band structure of -y'' + (psi + q0) y with a reusable discriminant.

    Building one computes the Hill-matrix edges, refines them against the
    discriminant, fixes q0 so that lam_0^+ = 0, and locates the interior
    critical point and height of every gap.
    """

    def __init__(self, psi: TrigPotential, n_max: int = 16, *,
                 n_steps: int | None = None, edge_move_tol: float = 1e-10):
        if n_max < 1:
            raise ValueError("n_max must be >= 1")
        self.psi = psi
        self.n_max = n_max
        edges_m = _matrix_edges(psi, n_max, edge_move_tol)
        _check_interlacing(edges_m)
        lam_top = max(edges_m[-1] * 1.1, 100.0)
        self._disc = Discriminant(psi, 0.0, lam_max=lam_top, n_steps=n_steps)
        self._build(edges_m)

    # raw <-> normalised: lam_raw = lam_norm - q0
    def _build(self, edges_m: np.ndarray) -> None:
        disc = self._disc
        n_max = self.n_max

        def g0(lam):
            return disc.delta(lam) - 1.0

        band0 = edges_m[1] - edges_m[0]
        lam0 = _bracket_root(
            g0, inside=edges_m[0] - 0.35 * band0, outside=edges_m[0] + 0.6 * band0,
            centre=edges_m[0] - 2.0 * band0, far=0.5 * (edges_m[0] + edges_m[1]))
        q0 = -lam0

        edges_p = edges_m.copy()
        edges_p[0] = lam0
        crit = np.zeros(n_max)
        u_crit = np.zeros(n_max)

        for n in range(1, n_max + 1):
            sgn = -1.0 if n % 2 else 1.0
            lm, lp = edges_m[2 * n - 1], edges_m[2 * n]
            gap = lp - lm
            band_prev = edges_m[2 * n - 1] - edges_m[2 * n - 2]
            band_next = edges_m[2 * n + 2] - edges_m[2 * n + 1] if n < n_max else band_prev

            def g(lam, s=sgn):
                return s * disc.delta(lam) - 1.0

            mid = 0.5 * (lm + lp)
            open_enough = gap > GAP_OPEN_RTOL * max(1.0, abs(lp))
            u_mid = g(mid) if open_enough else -1.0
            if open_enough and u_mid > POLISH_MIN_U:
                edges_p[2 * n - 1] = _bracket_root(
                    g, inside=lm + 0.45 * gap, outside=lm - 0.35 * band_prev,
                    centre=mid, far=lm - 0.9 * band_prev)
                edges_p[2 * n] = _bracket_root(
                    g, inside=lp - 0.45 * gap, outside=lp + 0.35 * band_next,
                    centre=mid, far=lp + 0.9 * band_next)
                res = minimize_scalar(
                    lambda lam: -sgn * disc.delta(lam),
                    bounds=(edges_p[2 * n - 1], edges_p[2 * n]), method="bounded",
                    options={"xatol": 1e-12 * max(1.0, abs(lp))})
                crit[n - 1] = res.x
                u_crit[n - 1] = -res.fun - 1.0
            else:
                def dg(lam, s=sgn):
                    return s * disc.delta_deriv(lam)[1]

                lo = lm - 0.35 * band_prev
                hi = lp + 0.35 * band_next
                if dg(lo) > 0 > dg(hi):
                    crit[n - 1] = brentq(dg, lo, hi,
                                         xtol=1e-13 * max(1.0, abs(lp)),
                                         rtol=4 * np.finfo(float).eps)
                else:
                    crit[n - 1] = 0.5 * (lm + lp)
                u_crit[n - 1] = g(crit[n - 1])

        # shift so that lam_0^+ = 0 exactly
        edges_norm = edges_p + q0
        edges_norm[0] = 0.0
        edges_matrix_norm = edges_m + q0
        crit_norm = crit + q0
        gap_lengths = edges_norm[2::2] - edges_norm[1::2]

        heights = np.zeros(n_max)
        for n in range(1, n_max + 1):
            if gap_lengths[n - 1] <= GAP_OPEN_RTOL * max(1.0, edges_norm[2 * n]):
                continue
            u = u_crit[n - 1]
            if u < -1e-9:
                raise SpectralError(
                    f"discriminant maximum below 1 on open gap {n} (u={u:.3e})"
                )
            z_half = 0.5 * (np.sqrt(max(edges_norm[2 * n], 0.0))
                            - np.sqrt(max(edges_norm[2 * n - 1], 0.0)))
            # the chord bound keeps heights of barely-open gaps positive
            # where the measured u is below the evaluation noise
            heights[n - 1] = max(arccosh_one_plus(max(u, 0.0)), z_half)

        signs = np.empty(2 * n_max + 1)
        signs[0] = 1.0
        for n in range(1, n_max + 1):
            signs[2 * n - 1] = signs[2 * n] = -1.0 if n % 2 else 1.0
        residuals = np.abs(disc.delta(edges_norm - q0) - signs)

        self.q0 = q0
        self.bands = BandStructure(
            q0=q0, n_max=n_max,
            edges=edges_norm, edges_matrix=edges_matrix_norm,
            crit=crit_norm, heights=heights, gap_lengths=gap_lengths,
            edge_residuals=residuals,
            edge_shifts=np.abs(edges_norm - edges_matrix_norm),
        )

    # -- normalised-coordinate evaluations ------------------------------

    def delta(self, lam):
        return self._disc.delta(np.asarray(lam) - self.q0)

    def delta_deriv(self, lam):
        return self._disc.delta_deriv(np.asarray(lam) - self.q0)

    def monodromy(self, lam) -> Monodromy:
        shifted = Discriminant(self.psi, self.q0, lam_max=self._disc.lam_max,
                               n_steps=self._disc.n_steps)
        return shifted.monodromy(lam)

    def critical_point(self, n: int) -> float:
        self._check_gap_index(n)
        return float(self.bands.crit[n - 1])

    def height(self, n: int) -> float:
        self._check_gap_index(n)
        return float(self.bands.heights[n - 1])

    def _check_gap_index(self, n: int) -> None:
        if not 1 <= n <= self.n_max:
            raise ValueError(f"gap index {n} outside 1..{self.n_max}")

    @cached_property
    def gap_sequence_norms(self) -> dict:
        """l2-type sequence norms of gap lengths and heights used by bounds."""
        n = np.arange(1, self.n_max + 1, dtype=float)
        gaps = self.bands.gap_lengths
        return {
            "gaps_l2": float(np.sqrt(np.sum(gaps**2))),
            "gaps_hm1": float(np.sqrt(np.sum((gaps / (2 * np.pi * n)) ** 2))),
            "heights_l2": float(np.sqrt(np.sum(self.bands.heights**2))),
        }


# -- module-level operations ---------------------------------------------

def monodromy(psi: TrigPotential, q0: float, lam) -> Monodromy:
    """One-shot fundamental-solution data for -y'' + (psi + q0) y = lam y."""
    lam_scale = max(4.0 * abs(complex(lam)), 100.0)
    return Discriminant(psi, q0, lam_max=lam_scale).monodromy(lam)


def band_edges(psi: TrigPotential, n_max: int) -> np.ndarray:
    """Unshifted band edges (lam_0^+, lam_1^-, lam_1^+, ...), cross-validated."""
    hs = HillSpectrum(psi, n_max)
    return hs.bands.edges - hs.q0


def normalize_offset(psi: TrigPotential) -> float:
    """The constant q0 with lam_0^+(psi + q0) = 0."""
    return HillSpectrum(psi, n_max=2).q0
