"""Margin reports for the identities and inequalities the package certifies.

Each check evaluates both sides of one relation with independent
machinery (grid quadrature against gap quadrature, eigenvalue shifts
against weight norms, ...) and emits an :class:`EstimateReport` with the
margin and the tolerance it was held to.  Violations of proved relations
beyond tolerance indicate numerical-pipeline failures, never properties
of the input, and are counted as check failures.

Randomised batteries are reproducible: members are a pure function of
the seed, and report collections are sorted by potential fingerprint.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, fields
from functools import cached_property
from typing import Callable, Iterable

import numpy as np

from . import riccati
from .actions import (compute_action_spectrum, gap_v, momentum_gap_measure,
                      scan_noise_budget)
from .errors import HillKdvError
from .fourier import (TrigPotential, antiderivative, hamiltonian, l2_distance,
                      sobolev_norm)
from .hill import HillSpectrum
from .kdv import FlowResult

IDENTITY_RTOL = 1e-6
INEQUALITY_TOL = 1e-9
Q0_IDENTITY_RTOL = 1e-6
Q0_DUAL_RTOL = 1e-8
ROUNDTRIP_TOL = 1e-7
SHIFT_MATCH_TOL = 1e-8
MOMENT_TAIL_RTOL = 1e-8
SCAN_POINTS = 100
# Pointwise gap scans need v well above the discriminant noise floor.
SCAN_MIN_HEIGHT = 1e-3


@dataclass(frozen=True)
class EstimateReport:
    """One evaluated relation: sides, margin, tolerance, verdict.

    For inequalities the margin is rhs - lhs (nonnegative when the bound
    holds); for identities it is |lhs - rhs|.  ``informational`` marks
    reports that are emitted for the record but excluded from pass/fail
    aggregation (used for a bound reading with no supporting derivation).
    """

    check: str
    kind: str
    lhs: float
    rhs: float
    tolerance: float
    margin: float
    passed: bool
    fingerprint: str
    note: str = ""
    informational: bool = False

    @classmethod
    def inequality(cls, check: str, lhs: float, rhs: float, tolerance: float,
                   fingerprint: str, note: str = "",
                   informational: bool = False) -> "EstimateReport":
        margin = rhs - lhs
        return cls(check=check, kind="inequality", lhs=lhs, rhs=rhs,
                   tolerance=tolerance, margin=margin,
                   passed=bool(margin >= -tolerance), fingerprint=fingerprint,
                   note=note, informational=informational)

    @classmethod
    def identity(cls, check: str, lhs: float, rhs: float, tolerance: float,
                 fingerprint: str, note: str = "") -> "EstimateReport":
        margin = abs(lhs - rhs)
        return cls(check=check, kind="identity", lhs=lhs, rhs=rhs,
                   tolerance=tolerance, margin=margin,
                   passed=bool(margin <= tolerance), fingerprint=fingerprint,
                   note=note)

    def to_json(self) -> str:
        payload = {f.name: getattr(self, f.name) for f in fields(self)}
        return json.dumps(payload, sort_keys=True)


class PotentialAnalysis:
    """Spectral data for one potential, computed once and shared by checks.

    The gap count grows until the action sweep reaches its decay floor,
    which is what makes the moment sums trustworthy.
    """

    def __init__(self, psi: TrigPotential, n_max: int | None = None):
        self.psi = psi.trimmed()
        self.fingerprint = psi.fingerprint()
        count = n_max if n_max is not None else max(12, self.psi.n_modes + 6)
        while True:
            self.hill = HillSpectrum(self.psi, n_max=count)
            self.acts = compute_action_spectrum(self.hill)
            if self.acts.decayed or n_max is not None or count >= 44:
                break
            count += 10

    @cached_property
    def norm0(self) -> float:
        return sobolev_norm(self.psi, 0.0)

    @cached_property
    def norm_m1(self) -> float:
        return sobolev_norm(self.psi, -1.0)

    @cached_property
    def energy(self) -> float:
        return hamiltonian(self.psi)

    @cached_property
    def q_potential(self) -> TrigPotential:
        return antiderivative(self.psi)

    @cached_property
    def p_potential(self) -> TrigPotential:
        return riccati.inverse(self.q_potential)

    @cached_property
    def p_norm_sq(self) -> float:
        return sobolev_norm(self.p_potential, 0.0) ** 2


# -- single-potential checks ----------------------------------------------

def check_norm_action_identity(an: PotentialAnalysis) -> list[EstimateReport]:
    """L2 norm squared against four times the first action moment."""
    lhs = an.norm0**2
    rhs = 4.0 * an.acts.p_1
    tol = IDENTITY_RTOL * max(lhs, 1e-12)
    return [EstimateReport.identity("norm-action-identity", lhs, rhs, tol,
                                    an.fingerprint)]


def check_energy_bounds(an: PotentialAnalysis) -> list[EstimateReport]:
    """The energy functional bracketed by third-moment combinations."""
    p3, tail3 = an.acts.moment(3.0)
    p1 = an.acts.p_1
    pm1 = an.acts.p_minus1
    h = an.energy
    note = ""
    if tail3 > MOMENT_TAIL_RTOL * max(abs(p3), 1e-12):
        note = f"third-moment tail {tail3:.2e} above warning level"
    tol = INEQUALITY_TOL * max(1.0, abs(8 * p3))
    return [
        EstimateReport.inequality("energy-upper", h, 8.0 * p3, tol,
                                  an.fingerprint, note=note),
        EstimateReport.inequality("energy-lower", 8.0 * p3 - 8.0 * p1 * pm1, h,
                                  tol, an.fingerprint, note=note),
    ]


def check_norm_from_actions(an: PotentialAnalysis) -> list[EstimateReport]:
    """Antiderivative norm controlled by the inverse first moment."""
    pm1 = an.acts.p_minus1
    lhs = an.norm_m1**2
    rhs = 3.0 * pm1 * (1.0 + pm1)
    ratio = lhs / (pm1 * (1.0 + pm1)) if pm1 > 0 else 0.0
    flag = "within-3" if ratio <= 3.0 else ("flag-3-5" if ratio <= 5.0 else "above-5")
    tol = INEQUALITY_TOL * max(1.0, rhs)
    return [EstimateReport.inequality(
        "sobolev-from-actions", lhs, rhs, tol, an.fingerprint,
        note=f"ratio={ratio:.12g} {flag}")]


def check_actions_from_norm(an: PotentialAnalysis) -> list[EstimateReport]:
    lhs = an.acts.p_minus1
    e = an.norm_m1
    rhs = e**2 * (1.0 + e) ** 1.5
    tol = INEQUALITY_TOL * max(1.0, rhs)
    return [EstimateReport.inequality("actions-from-sobolev", lhs, rhs, tol,
                                      an.fingerprint)]


def check_gap_sequence_bounds(an: PotentialAnalysis) -> list[EstimateReport]:
    """Two-sided bounds between the potential and its gap/height sequences."""
    norms = an.hill.gap_sequence_norms
    g_m1 = norms["gaps_hm1"]
    g_0 = norms["gaps_l2"]
    h_0 = norms["heights_l2"]
    e = an.norm_m1
    n0 = an.norm0
    fp = an.fingerprint

    def tol(scale):
        return INEQUALITY_TOL * max(1.0, scale)

    return [
        EstimateReport.inequality("gapseq-from-potential", g_m1,
                                  np.sqrt(2.0) * e * (1.0 + e), tol(e), fp),
        EstimateReport.inequality("potential-from-gapseq", e,
                                  8.0 * np.pi * g_m1 * (1.0 + g_m1), tol(e), fp),
        EstimateReport.inequality("heights-lower",
                                  np.sqrt(np.pi / 8.0) * e, h_0, tol(h_0), fp),
        EstimateReport.inequality("heights-upper", h_0,
                                  0.5 * np.pi * e * np.sqrt(1.0 + e), tol(h_0), fp),
        EstimateReport.inequality("l2-from-gaps", n0,
                                  2.0 * g_0 * (1.0 + g_0 ** (1.0 / 3.0)), tol(n0), fp),
        EstimateReport.inequality("gaps-from-l2", g_0,
                                  2.0 * n0 * (1.0 + n0 ** (1.0 / 3.0)), tol(n0), fp),
    ]


def check_riccati_bounds(an: PotentialAnalysis) -> list[EstimateReport]:
    """Norm bounds of the quadratic change of variables plus round trips."""
    fp = an.fingerprint
    q = an.q_potential
    p = an.p_potential
    nq = sobolev_norm(q, 0.0)
    np_ = sobolev_norm(p, 0.0)
    pair = riccati.forward(p)
    back_q_gap = l2_distance(pair.q, q)
    p_again = riccati.inverse(pair.q)
    back_p_gap = l2_distance(p_again, p)
    shift_gap = abs(pair.q0 - an.hill.q0)
    return [
        EstimateReport.inequality("riccati-forward-bound", nq,
                                  np_ * (1.0 + 2.0 * np_),
                                  INEQUALITY_TOL * max(1.0, nq), fp),
        EstimateReport.inequality("riccati-inverse-bound", np_,
                                  np.sqrt(2.0) * nq * (1.0 + 2.0 * nq),
                                  INEQUALITY_TOL * max(1.0, np_), fp),
        EstimateReport.identity("riccati-roundtrip-qpq", back_q_gap, 0.0,
                                ROUNDTRIP_TOL * max(1.0, nq), fp),
        EstimateReport.identity("riccati-roundtrip-pqp", back_p_gap, 0.0,
                                ROUNDTRIP_TOL * max(1.0, np_), fp),
        EstimateReport.identity("riccati-shift-match", pair.q0, an.hill.q0,
                                SHIFT_MATCH_TOL, fp,
                                note="|p| squared against the spectral shift"),
    ]


def check_momentum_bound(an: PotentialAnalysis) -> list[EstimateReport]:
    """Weight-norm square below the inverse first moment of the actions."""
    lhs = an.p_norm_sq
    rhs = an.acts.p_minus1
    tol = INEQUALITY_TOL * max(1.0, rhs)
    return [EstimateReport.inequality("momentum-from-actions", lhs, rhs, tol,
                                      an.fingerprint)]


def check_action_height_gap(an: PotentialAnalysis) -> list[EstimateReport]:
    """The action/height/gap chain, with both readings of the gap measure.

    The lambda-plane reading is the one the derivation supports; the
    z-plane reading is recorded for reference only.
    """
    fp = an.fingerprint
    bands = an.hill.bands
    n = np.arange(1, bands.n_max + 1, dtype=float)
    pm1 = an.acts.p_minus1
    h_0 = an.hill.gap_sequence_norms["heights_l2"]
    g_m1_lambda = an.hill.gap_sequence_norms["gaps_hm1"]
    z_gaps = np.array([bands.gap_length_z(k) for k in range(1, bands.n_max + 1)])
    g_m1_z = float(np.sqrt(np.sum((z_gaps / (2 * np.pi * n)) ** 2)))

    worst = np.inf
    worst_gap = 0
    for k in bands.open_gaps():
        bound = (4.0 * bands.height(k) / np.pi) * momentum_gap_measure(an.hill, k)
        margin = bound - an.acts.actions[k - 1]
        if margin < worst:
            worst, worst_gap = margin, k
    chain = EstimateReport.inequality(
        "action-height-gap-chain",
        an.acts.actions[worst_gap - 1] if worst_gap else 0.0,
        (4.0 * bands.height(worst_gap) / np.pi) * momentum_gap_measure(an.hill, worst_gap)
        if worst_gap else 0.0,
        INEQUALITY_TOL, fp,
        note=f"worst gap n={worst_gap}" if worst_gap else "no open gaps")

    rhs_lambda = (4.0 / np.pi) * h_0 * g_m1_lambda
    rhs_z = (4.0 / np.pi) * h_0 * g_m1_z
    return [
        chain,
        EstimateReport.inequality("actionsum-bound-lambda", pm1, rhs_lambda,
                                  INEQUALITY_TOL * max(1.0, rhs_lambda), fp),
        EstimateReport.inequality("actionsum-bound-z", pm1, rhs_z,
                                  INEQUALITY_TOL * max(1.0, rhs_z), fp,
                                  note="alternate gap measure, no derivation",
                                  informational=True),
    ]


def check_q0_identities(an: PotentialAnalysis) -> list[EstimateReport]:
    """The quasimomentum constant three ways: gap integral, weighted
    integral, and half the weight-norm square."""
    fp = an.fingerprint
    q0g = an.acts.q0_gap
    q0w = an.acts.q0_weighted
    half_p = 0.5 * an.p_norm_sq
    return [
        EstimateReport.identity("q0-from-weight", q0g, half_p,
                                Q0_IDENTITY_RTOL * max(q0g, 1e-10), fp),
        EstimateReport.identity("q0-dual-forms", q0g, q0w,
                                Q0_DUAL_RTOL * max(q0g, 1e-12), fp),
        EstimateReport.inequality("q0-below-halfmoment", q0g,
                                  0.5 * an.acts.p_minus1,
                                  INEQUALITY_TOL * max(1.0, q0g), fp),
    ]


def check_gap_geometry(an: PotentialAnalysis) -> list[EstimateReport]:
    """Pointwise chord bound and concavity of v on resolvable open gaps."""
    fp = an.fingerprint
    bands = an.hill.bands
    scanned = []
    lower_worst = np.inf
    lower_tol = INEQUALITY_TOL
    concave_worst = -np.inf
    concave_tol = INEQUALITY_TOL
    for k in bands.open_gaps():
        if bands.height(k) < SCAN_MIN_HEIGHT:
            continue
        scanned.append(k)
        zm, zp = bands.z_minus(k), bands.z_plus(k)
        z = np.linspace(zm, zp, SCAN_POINTS + 2)[1:-1]
        v = gap_v(an.hill, k, z)
        chord = np.sqrt((z - zm) * (zp - z))
        budget = scan_noise_budget(an.hill, v)
        lower_worst = min(lower_worst, float(np.min(v - chord)))
        lower_tol = max(lower_tol, float(np.max(budget)))
        second = v[:-2] - 2.0 * v[1:-1] + v[2:]
        concave_worst = max(concave_worst, float(np.max(second)))
        concave_tol = max(concave_tol, 4.0 * float(np.max(budget)))
    if not scanned:
        note = "no gaps above the scan height floor"
        return [
            EstimateReport.inequality("gap-pointwise-lower", 0.0, 0.0,
                                      INEQUALITY_TOL, fp, note=note),
            EstimateReport.inequality("gap-concavity", 0.0, 0.0,
                                      INEQUALITY_TOL, fp, note=note),
        ]
    note = f"gaps={scanned} points={SCAN_POINTS}"
    return [
        EstimateReport.inequality("gap-pointwise-lower", -lower_worst, 0.0,
                                  lower_tol, fp, note=note),
        EstimateReport.inequality("gap-concavity", concave_worst, 0.0,
                                  concave_tol, fp, note=note),
    ]


def check_flow_norms(result: FlowResult) -> list[EstimateReport]:
    """Antiderivative-norm stability along a trajectory, both directions."""
    diag = result.diagnostics
    eps0 = float(diag.norm_hm1[0])
    fp = result.psi0.fingerprint()
    forward_rhs = 3.0 * eps0 * (1.0 + eps0) ** 2.5
    out = []
    for t, eps_t in zip(diag.times, diag.norm_hm1):
        out.append(EstimateReport.inequality(
            "flow-forward-bound", float(eps_t), forward_rhs,
            INEQUALITY_TOL * max(1.0, forward_rhs), fp, note=f"t={t:.6g}"))
        back_rhs = 14.0 * max(eps_t, eps_t**2.5)
        out.append(EstimateReport.inequality(
            "flow-backward-bound", eps0, float(back_rhs),
            INEQUALITY_TOL * max(1.0, back_rhs), fp, note=f"t={t:.6g}"))
    return out


CHECK_GROUPS: dict[str, Callable[[PotentialAnalysis], list[EstimateReport]]] = {
    "identity": check_norm_action_identity,
    "energy": check_energy_bounds,
    "sobolev": check_norm_from_actions,
    "moments": check_actions_from_norm,
    "gapseq": check_gap_sequence_bounds,
    "riccati": check_riccati_bounds,
    "momentum": check_momentum_bound,
    "actionsum": check_action_height_gap,
    "q0": check_q0_identities,
    "geometry": check_gap_geometry,
}


# -- batteries -------------------------------------------------------------

@dataclass(frozen=True)
class Battery:
    """Reproducible family of random potentials.

    Coefficients are complex normal deviates damped by the decay law,
    rescaled so the L2 norm is uniform in [norm_min, norm_max].
    """

    seed: int = 0
    count: int = 20
    n_modes: int = 8
    decay: str = "exp"            # "exp": e^{-rate n}; "power": n^{-rate}
    decay_rate: float = 0.6
    norm_min: float = 0.1
    norm_max: float = 2.0

    def __post_init__(self):
        if self.decay not in ("exp", "power"):
            raise ValueError(f"unknown decay law {self.decay!r}")
        if not 0 < self.norm_min <= self.norm_max:
            raise ValueError("need 0 < norm_min <= norm_max")

    def members(self) -> list[TrigPotential]:
        rng = np.random.default_rng(self.seed)
        n = np.arange(1, self.n_modes + 1, dtype=float)
        weights = np.exp(-self.decay_rate * n) if self.decay == "exp" \
            else n ** (-self.decay_rate)
        out = []
        for _ in range(self.count):
            raw = (rng.standard_normal(self.n_modes)
                   + 1j * rng.standard_normal(self.n_modes)) * weights
            target = rng.uniform(self.norm_min, self.norm_max)
            psi = TrigPotential(raw)
            out.append(psi.scaled(target / sobolev_norm(psi, 0.0)))
        return out


@dataclass(frozen=True)
class BatterySummary:
    """Sorted report collection for one battery run."""

    battery: Battery
    groups: tuple[str, ...]
    reports: tuple[EstimateReport, ...]
    failures: tuple[tuple[str, str], ...]
    ratio_14_max: float
    all_passed: bool

    def worst_margins(self) -> dict[str, float]:
        worst: dict[str, float] = {}
        for r in self.reports:
            key = r.check
            value = r.margin if r.kind == "inequality" else -r.margin
            if key not in worst or value < worst[key]:
                worst[key] = value
        return worst

    def jsonl(self) -> str:
        return "\n".join(r.to_json() for r in self.reports) + "\n"

    def text_summary(self) -> str:
        lines = [
            f"battery seed={self.battery.seed} count={self.battery.count} "
            f"modes<={self.battery.n_modes} groups={','.join(self.groups)}",
            f"reports={len(self.reports)} failures={len(self.failures)} "
            f"all_passed={self.all_passed}",
        ]
        flag = ("within-3" if self.ratio_14_max <= 3.0
                else "flag-3-5" if self.ratio_14_max <= 5.0 else "above-5")
        lines.append(f"sobolev-from-actions ratio tracker: "
                     f"max={self.ratio_14_max:.9g} ({flag})")
        lines.append(f"{'check':32s} {'worst margin':>14s}")
        for check, margin in sorted(self.worst_margins().items()):
            lines.append(f"{check:32s} {margin:14.6e}")
        for fp, msg in self.failures:
            lines.append(f"FAILED member {fp}: {msg}")
        return "\n".join(lines) + "\n"


def run_battery(battery: Battery,
                groups: Iterable[str] | None = None) -> BatterySummary:
    """Run the selected check groups over every member.

    Hard failures in a member's pipeline are recorded and the run
    continues; their absence is part of what a green summary certifies.
    """
    selected = tuple(CHECK_GROUPS) if groups is None else tuple(groups)
    unknown = [g for g in selected if g not in CHECK_GROUPS]
    if unknown:
        raise ValueError(f"unknown check groups: {unknown}")
    reports: list[EstimateReport] = []
    failures: list[tuple[str, str]] = []
    ratio_max = 0.0
    for psi in battery.members():
        try:
            an = PotentialAnalysis(psi)
            for g in selected:
                reports.extend(CHECK_GROUPS[g](an))
            if "sobolev" in selected:
                pm1 = an.acts.p_minus1
                if pm1 > 0:
                    ratio_max = max(ratio_max,
                                    an.norm_m1**2 / (pm1 * (1.0 + pm1)))
        except HillKdvError as exc:
            failures.append((psi.fingerprint(), str(exc)))
    ordered = tuple(sorted(reports, key=lambda r: (r.fingerprint, r.check, r.note)))
    all_passed = not failures and all(r.passed or r.informational for r in ordered)
    return BatterySummary(
        battery=battery, groups=selected, reports=ordered,
        failures=tuple(failures), ratio_14_max=ratio_max, all_passed=all_passed,
    )
