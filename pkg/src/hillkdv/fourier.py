"""Zero-mean real trigonometric polynomials on the unit circle.

A potential is stored through its positive-mode Fourier coefficients
c[1..N]; reality fixes the negative modes (c_{-n} = conj(c_n)) and the
zero mode is absent, so every instance is a real 1-periodic function
with exact zero mean.  All algebra (norms, antiderivatives, projections,
the cubic energy functional) is done in coefficient space or on grids
large enough to make products alias-free, so the operations here are
exact up to rounding.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import ConfigError

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class TrigPotential:
    """psi(x) = sum_{0 < |n| <= N} c_n e^{2 pi i n x} with c_{-n} = conj(c_n).

    ``coeffs[j]`` holds c_{j+1}.  Instances are immutable values; every
    operation returns a new object.
    """

    coeffs: np.ndarray

    def __post_init__(self):
        arr = np.array(self.coeffs, dtype=np.complex128, copy=True)
        if arr.ndim != 1:
            raise ValueError("coefficient array must be one-dimensional")
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls) -> "TrigPotential":
        return cls(np.zeros(0, dtype=np.complex128))

    @classmethod
    def from_cosines(cls, terms: Iterable[tuple[int, float]]) -> "TrigPotential":
        """Sum of amp * cos(2 pi n x) terms, given as (n, amp) pairs."""
        terms = list(terms)
        if not terms:
            return cls.zero()
        n_max = max(n for n, _ in terms)
        c = np.zeros(n_max, dtype=np.complex128)
        for n, amp in terms:
            if n < 1:
                raise ValueError(f"cosine mode must be >= 1, got {n}")
            c[n - 1] += 0.5 * amp
        return cls(c)

    @classmethod
    def from_samples(cls, values: np.ndarray, n_modes: int | None = None) -> "TrigPotential":
        """Recover coefficients from samples psi(j/M), j = 0..M-1.

        The sample mean is dropped, which projects onto the zero-mean
        subspace; ``n_modes`` defaults to the largest alias-free cutoff.
        """
        values = np.asarray(values, dtype=float)
        m = len(values)
        spec = np.fft.rfft(values) / m
        limit = (m - 1) // 2
        cut = limit if n_modes is None else min(n_modes, limit)
        return cls(spec[1 : cut + 1])

    # -- basic queries -------------------------------------------------

    @property
    def n_modes(self) -> int:
        return len(self.coeffs)

    def evaluate(self, x) -> np.ndarray:
        """Pointwise values at arbitrary x (scalar or array)."""
        x = np.asarray(x, dtype=float)
        if self.n_modes == 0:
            return np.zeros_like(x)
        n = np.arange(1, self.n_modes + 1)
        phases = np.exp(1j * TWO_PI * np.multiply.outer(x, n))
        return 2.0 * (phases @ self.coeffs).real

    def sample(self, m: int) -> np.ndarray:
        """Values on the uniform grid x_j = j/m, exact for m >= 2N + 1."""
        if m < 2 * self.n_modes + 1:
            raise ValueError(
                f"grid of {m} points aliases a potential with {self.n_modes} modes; "
                f"need at least {2 * self.n_modes + 1}"
            )
        spec = np.zeros(m // 2 + 1, dtype=np.complex128)
        spec[1 : self.n_modes + 1] = m * self.coeffs
        return np.fft.irfft(spec, m)

    def translate(self, shift: float) -> "TrigPotential":
        """psi(x + shift) as a new potential."""
        n = np.arange(1, self.n_modes + 1)
        return TrigPotential(self.coeffs * np.exp(1j * TWO_PI * n * shift))

    def scaled(self, factor: float) -> "TrigPotential":
        return TrigPotential(self.coeffs * factor)

    def trimmed(self, rel_tol: float = 1e-14) -> "TrigPotential":
        """Drop the negligible high-mode tail (relative to the largest mode)."""
        if self.n_modes == 0:
            return self
        mags = np.abs(self.coeffs)
        top = mags.max()
        if top == 0.0:
            return TrigPotential.zero()
        keep = np.nonzero(mags > rel_tol * top)[0]
        return TrigPotential(self.coeffs[: keep[-1] + 1]) if len(keep) else TrigPotential.zero()

    def fingerprint(self) -> str:
        """Stable hash of the coefficients, used to key reports."""
        return hashlib.sha256(np.ascontiguousarray(self.coeffs).tobytes()).hexdigest()[:16]

    def allclose(self, other: "TrigPotential", atol: float = 0.0, rtol: float = 1e-12) -> bool:
        n = max(self.n_modes, other.n_modes)
        a = np.zeros(n, dtype=np.complex128)
        b = np.zeros(n, dtype=np.complex128)
        a[: self.n_modes] = self.coeffs
        b[: other.n_modes] = other.coeffs
        return np.allclose(a, b, atol=atol, rtol=rtol)


def sobolev_norm(psi: TrigPotential, m: float) -> float:
    """Sequence norm (sum over n >= 1 of (2 pi n)^{2m} * 2 |c_n|^2)^{1/2}.

    m = 0 is the L2 norm, m = -1 the L2 norm of the zero-mean
    antiderivative, m = 1 the L2 norm of the derivative.
    """
    if psi.n_modes == 0:
        return 0.0
    n = np.arange(1, psi.n_modes + 1, dtype=float)
    return float(np.sqrt(2.0 * np.sum((TWO_PI * n) ** (2 * m) * np.abs(psi.coeffs) ** 2)))


def l2_distance(a: TrigPotential, b: TrigPotential) -> float:
    """L2 norm of a - b, padding the shorter coefficient vector."""
    n = max(a.n_modes, b.n_modes)
    ca = np.zeros(n, dtype=np.complex128)
    cb = np.zeros(n, dtype=np.complex128)
    ca[: a.n_modes] = a.coeffs
    cb[: b.n_modes] = b.coeffs
    return float(np.sqrt(2.0 * np.sum(np.abs(ca - cb) ** 2)))


def antiderivative(psi: TrigPotential) -> TrigPotential:
    """The zero-mean q with q' = psi, computed exactly in coefficient space."""
    n = np.arange(1, psi.n_modes + 1)
    return TrigPotential(psi.coeffs / (1j * TWO_PI * n))


def derivative(psi: TrigPotential) -> TrigPotential:
    n = np.arange(1, psi.n_modes + 1)
    return TrigPotential(psi.coeffs * (1j * TWO_PI * n))


def project(psi: TrigPotential, n: int) -> TrigPotential:
    """Retain modes |k| <= n, zero the rest; idempotent."""
    if n < 1:
        raise ValueError("projection cutoff must be >= 1")
    return TrigPotential(psi.coeffs[:n])


def hamiltonian(psi: TrigPotential) -> float:
    """Energy functional (1/2) * int_0^1 (psi'^2 + 2 psi^3) dx.

    The quadratic term is a Parseval sum; the cubic term is a Riemann sum
    on a grid with more than 3N points, which is exact for trigonometric
    polynomials of degree 3N.
    """
    if psi.n_modes == 0:
        return 0.0
    quad = sobolev_norm(psi, 1.0) ** 2
    m = max(3 * psi.n_modes + 1, 8)
    cubic = float(np.mean(psi.sample(m) ** 3))
    return 0.5 * (quad + 2.0 * cubic)


def evaluate_grid(psi: TrigPotential, m: int) -> np.ndarray:
    """Samples psi(j/m), j = 0..m-1; raises for grids that would alias."""
    return psi.sample(m)


# -- serialization ----------------------------------------------------

def write_potential(psi: TrigPotential, target) -> None:
    """Write the text record: a ``modes N`` line, then ``n re im`` rows."""
    own = isinstance(target, (str, Path))
    fh = open(target, "w", encoding="utf-8") if own else target
    try:
        fh.write(f"modes {psi.n_modes}\n")
        for j, c in enumerate(psi.coeffs, start=1):
            fh.write(f"{j} {c.real:.17g} {c.imag:.17g}\n")
    finally:
        if own:
            fh.close()


def read_potential(source) -> TrigPotential:
    """Parse the record produced by :func:`write_potential`."""
    own = isinstance(source, (str, Path))
    fh = open(source, "r", encoding="utf-8") if own else source
    try:
        lines = [ln.strip() for ln in fh.readlines()]
    finally:
        if own:
            fh.close()
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines or not lines[0].startswith("modes"):
        raise ConfigError("potential record must start with a 'modes <N>' line")
    try:
        n_modes = int(lines[0].split()[1])
    except (IndexError, ValueError) as exc:
        raise ConfigError(f"bad modes line: {lines[0]!r}") from exc
    coeffs = np.zeros(n_modes, dtype=np.complex128)
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 3:
            raise ConfigError(f"bad coefficient line: {ln!r}")
        try:
            n = int(parts[0])
            re, im = float(parts[1]), float(parts[2])
        except ValueError as exc:
            raise ConfigError(f"bad coefficient line: {ln!r}") from exc
        if not 1 <= n <= n_modes:
            raise ConfigError(f"mode index {n} outside 1..{n_modes}")
        coeffs[n - 1] = complex(re, im)
    return TrigPotential(coeffs)


def parse_potential_spec(text: str) -> TrigPotential:
    """Parse the inline mini-language: comma/plus separated ``cos:<n>:<amp>``."""
    terms = []
    for chunk in text.replace("+", ",").split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(":")
        if len(parts) != 3 or parts[0] != "cos":
            raise ConfigError(f"bad potential term {chunk!r}; expected cos:<n>:<amp>")
        try:
            n, amp = int(parts[1]), float(parts[2])
        except ValueError as exc:
            raise ConfigError(f"bad potential term {chunk!r}") from exc
        terms.append((n, amp))
    return TrigPotential.from_cosines(terms)
