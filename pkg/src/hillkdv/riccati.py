"""The quadratic change of variables p <-> q between L2 potentials.

Forward: q' = p' + p^2 - ||p||^2 with q0 = ||p||^2, computed exactly in
coefficient space (the square is formed on an alias-free grid).  The
positive weight w = exp(int_0^x p) turns -d^2/dx^2 + q' + q0 into the
divergence-form operator -(w^2 f')'/w^2, which is how a rough potential
q' acquires well-defined spectral data.

Inverse: given q, the ground state w of -d^2/dx^2 + q' is positive and
1-periodic, and p = w'/w inverts the map globally; its zero mean and
||p||^2 = -lam_0^+ come for free from periodicity.  The returned p is
certified by a forward round trip.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh, lu_factor, lu_solve

from .errors import SpectralError
from .fourier import (TrigPotential, antiderivative, derivative, l2_distance,
                      sobolev_norm)

_GROUND_TAIL_RTOL = 1e-15
_MAX_GROUND_MODES = 2048
ROUNDTRIP_TOL = 1e-7
RESIDUAL_TOL = 1e-9


@dataclass(frozen=True)
class GroundState:
    """Bottom periodic eigenpair of -y'' + psi y.

    ``coeffs[k]`` is the k-th nonnegative Fourier mode of w (mode 0 first,
    reality fixes the rest); w is positive and scaled to w(0) = 1.
    """

    eigenvalue: float
    coeffs: np.ndarray

    @property
    def n_modes(self) -> int:
        return len(self.coeffs) - 1

    def sample(self, m: int) -> np.ndarray:
        """w on the grid x_j = j/m; needs m >= 2*n_modes + 1."""
        if m < 2 * self.n_modes + 1:
            raise ValueError(f"grid of {m} points aliases the eigenfunction")
        spec = np.zeros(m // 2 + 1, dtype=np.complex128)
        spec[: self.n_modes + 1] = m * self.coeffs
        return np.fft.irfft(spec, m)


@dataclass(frozen=True)
class RiccatiPair:
    """A matched pair q' = p' + p^2 - ||p||^2 with its weight samples."""

    p: TrigPotential
    q: TrigPotential
    q0: float
    w_samples: np.ndarray


def _dealiased_square(p: TrigPotential) -> tuple[float, np.ndarray]:
    """(mean, positive modes 1..2N) of p^2, exact for trig polynomials."""
    if p.n_modes == 0:
        return 0.0, np.zeros(0, dtype=np.complex128)
    m = 4 * p.n_modes + 1
    values = p.sample(m) ** 2
    spec = np.fft.rfft(values) / m
    return float(spec[0].real), spec[1 : 2 * p.n_modes + 1]


def forward(p: TrigPotential) -> RiccatiPair:
    """Map p to the pair (p, q) with q' = p' + p^2 - ||p||^2."""
    mean_sq, sq_modes = _dealiased_square(p)
    n2 = len(sq_modes)
    source = np.zeros(n2, dtype=np.complex128)
    source[:n2] = sq_modes
    dp = derivative(p)
    source[: dp.n_modes] += dp.coeffs
    q = antiderivative(TrigPotential(source))
    w = _weight_samples(p)
    return RiccatiPair(p=p, q=q, q0=mean_sq, w_samples=w)


def _weight_samples(p: TrigPotential, m: int | None = None) -> np.ndarray:
    if m is None:
        m = max(256, 8 * p.n_modes)
    prim = antiderivative(p)
    grid = np.arange(m) / m
    return np.exp(prim.evaluate(grid) - prim.evaluate(0.0))


def _ground_coeffs(psi: TrigPotential) -> tuple[float, np.ndarray, float]:
    """Bottom periodic eigenpair by Fourier truncation plus grid polish.

    The dense solve is kept as small as the eigenvector allows (its
    residual floor scales with the squared top frequency); the returned
    (eigenvalue, coefficients, sup residual) come from the subsequent
    residual-correction sweeps on the grid.
    """
    psi = psi.trimmed(1e-14)
    k = max(psi.trimmed(1e-12).n_modes + 12, 24)
    while True:
        pad = np.zeros(4 * k + 3, dtype=np.complex128)
        centre = 2 * k + 1
        for n in range(1, min(psi.n_modes, 2 * k + 1) + 1):
            pad[centre + n] = psi.coeffs[n - 1]
            pad[centre - n] = np.conj(psi.coeffs[n - 1])
        modes = np.arange(-k, k + 1)
        h = pad[centre + np.subtract.outer(modes, modes)]
        h[np.diag_indices_from(h)] += (2.0 * np.pi * modes) ** 2
        vals, vecs = eigh(h, subset_by_index=(0, 1))
        lam0 = float(vals[0])
        u = vecs[:, 0]
        # one inverse-iteration sweep sharpens the vector against the
        # nearly-degenerate rest of the spectrum
        shift = lam0 - 1e-8 * max(1.0, abs(lam0))
        try:
            factor = lu_factor(h - shift * np.eye(len(u)))
            refined = lu_solve(factor, u)
            u = refined / np.linalg.norm(refined)
        except np.linalg.LinAlgError:
            pass
        lam0 = float(np.real(np.vdot(u, h @ u)))
        tail = np.max(np.abs(u[[0, -1]])) / np.max(np.abs(u))
        if tail < _GROUND_TAIL_RTOL or 2 * k >= _MAX_GROUND_MODES:
            break
        k *= 2
    # rotate the arbitrary global phase so the function is real
    pairs = u * u[::-1]
    phase = 0.5 * np.angle(np.sum(pairs))
    r = u * np.exp(-1j * phase)
    if np.real(r[k]) < 0:
        r = -r
    half = 0.5 * (r[k:] + np.conj(r[k::-1]))
    return _polish_ground(psi, half)


def _polish_ground(psi: TrigPotential, coeffs: np.ndarray) -> tuple[float, np.ndarray, float]:
    """Residual-correction sweeps on a fine grid.

    A dense backward-stable eigensolve leaves a residual of order
    eps * norm(H) spread over all modes; applying the operator spectrally
    on a grid is exact, so a few diagonally preconditioned corrections
    push the pointwise residual to the rounding floor of the application
    itself.  Returns (eigenvalue, nonnegative-mode coefficients, residual).
    """
    n_w = len(coeffs) - 1
    m = 1 << int(np.ceil(np.log2(max(8 * (n_w + psi.n_modes) + 16, 128))))
    spec = np.zeros(m // 2 + 1, dtype=np.complex128)
    spec[: n_w + 1] = m * coeffs
    freq_sq = (2.0 * np.pi * np.arange(m // 2 + 1)) ** 2
    pot = psi.evaluate(np.arange(m) / m) if 2 * psi.n_modes + 1 > m \
        else psi.sample(m)

    def apply_op(s):
        w = np.fft.irfft(s, m)
        return w, np.fft.irfft(freq_sq * s, m) + pot * w

    best = None
    for _ in range(5):
        w, hw = apply_op(spec)
        lam = float(np.mean(w * hw) / np.mean(w * w))
        resid = hw - lam * w
        sup = float(np.max(np.abs(resid)))
        if best is None or sup < best[0]:
            best = (sup, lam, spec.copy())
        if sup < 5e-12:
            break
        r_hat = np.fft.rfft(resid)
        denom = freq_sq - lam
        denom[0] = np.inf  # the mode-0 direction is the normalisation
        spec = spec - r_hat / denom
    sup, lam, spec = best
    w = np.fft.irfft(spec, m)
    if np.min(w) <= 0.0:
        raise SpectralError("ground state failed positivity; eigenvector unusable")
    spec /= w[0]
    c = spec / m
    mags = np.abs(c)
    keep = np.nonzero(mags > 1e-17 * mags.max())[0]
    cut = keep[-1] + 1 if len(keep) else 1
    return lam, c[:cut], sup / w[0]


def ground_state(psi: TrigPotential, residual_tol: float = RESIDUAL_TOL) -> GroundState:
    """Lowest periodic eigenvalue of -y'' + psi y with its eigenfunction,
    normalised positive and w(0) = 1; the residual is verified on a grid."""
    lam0, coeffs, resid = _ground_coeffs(psi)
    if resid > residual_tol:
        raise SpectralError(f"ground-state residual {resid:.3e} above {residual_tol:.0e}")
    return GroundState(eigenvalue=lam0, coeffs=coeffs)


def _residual(psi: TrigPotential, gs: GroundState, m: int) -> float:
    w = gs.sample(m)
    n = np.arange(m // 2 + 1)
    spec = np.fft.rfft(w)
    w2 = np.fft.irfft(-((2 * np.pi * n) ** 2) * spec, m)
    pot = psi.sample(m) if m >= 2 * psi.n_modes + 1 else psi.evaluate(np.arange(m) / m)
    return float(np.max(np.abs(-w2 + pot * w - gs.eigenvalue * w)))


def inverse(q: TrigPotential, roundtrip_tol: float = ROUNDTRIP_TOL) -> TrigPotential:
    """The unique p with forward(p).q = q, via the logarithmic derivative
    of the ground state of -d^2/dx^2 + q'."""
    if q.n_modes == 0:
        return TrigPotential.zero()
    psi = derivative(q)
    gs = ground_state(psi)
    n_w = gs.n_modes
    m = 1 << int(np.ceil(np.log2(max(8 * n_w + 8, 128))))
    w = gs.sample(m)
    spec = np.fft.rfft(w)
    n = np.arange(m // 2 + 1)
    dw = np.fft.irfft(1j * (2 * np.pi * n) * spec, m)
    ratio = dw / w
    # the transform of the ratio has a rounding floor near 1e-14 of its
    # peak; keeping it would feed amplified junk into later derivatives
    p = TrigPotential.from_samples(ratio).trimmed(1e-13)
    q_back = forward(p).q
    gap = l2_distance(q_back, q)
    if gap > roundtrip_tol * max(1.0, sobolev_norm(q, 0.0)):
        raise SpectralError(
            f"inverse map round trip off by {gap:.3e} in the L2 norm"
        )
    return p

