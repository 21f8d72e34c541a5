"""Command-line front end.

Subcommands: spectrum | actions | riccati | evolve | verify | plotdata.
Runs are configured by a flat key=value text file plus a few overriding
flags; every output file embeds the configuration it was produced from
and the package version, so result files are self-describing and
byte-reproducible apart from one timestamp line.

Exit codes: 0 success, 1 a check failed, 2 configuration error,
3 numerical hard error.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, riccati
from .actions import compute_action_spectrum, gap_v_profile
from .errors import ConfigError, HillKdvError
from .fourier import (TrigPotential, l2_distance, parse_potential_spec,
                      read_potential, sobolev_norm, write_potential)
from .hill import HillSpectrum
from .kdv import FlowConfig, cascade_experiment, evolve
from .verify import SCAN_MIN_HEIGHT, Battery, EstimateReport, run_battery

_FLOAT_FMT = "%.17g"


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return _FLOAT_FMT % float(value)
    return str(value)


# -- configuration ---------------------------------------------------------

def load_config(path: str | None) -> tuple[dict[str, str], list[str]]:
    """Flat key=value file -> (values, raw echo lines)."""
    if path is None:
        return {}, []
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {path}")
    values: dict[str, str] = {}
    echo: list[str] = []
    for raw in p.read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        echo.append(raw)
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"bad config line (expected key=value): {raw!r}")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values, echo


def _get(cfg: dict, key: str, default, cast):
    if key not in cfg:
        return default
    try:
        if cast is bool:
            text = cfg[key].lower()
            if text in ("true", "yes", "1", "on"):
                return True
            if text in ("false", "no", "0", "off"):
                return False
            raise ValueError(text)
        return cast(cfg[key])
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {cfg[key]!r}") from exc


def _potential_from_config(cfg: dict) -> TrigPotential:
    if "potential" in cfg:
        return parse_potential_spec(cfg["potential"])
    if "potential_file" in cfg:
        path = Path(cfg["potential_file"])
        if not path.exists():
            raise ConfigError(f"potential file not found: {path}")
        return read_potential(path)
    raise ConfigError("config must provide 'potential' or 'potential_file'")


def _battery_from_config(cfg: dict, seed_override: int | None) -> Battery:
    seed = seed_override if seed_override is not None else _get(cfg, "seed", 0, int)
    try:
        return Battery(
            seed=seed,
            count=_get(cfg, "count", 20, int),
            n_modes=_get(cfg, "modes", 8, int),
            decay=_get(cfg, "decay", "exp", str),
            decay_rate=_get(cfg, "decay_rate", 0.6, float),
            norm_min=_get(cfg, "norm_min", 0.1, float),
            norm_max=_get(cfg, "norm_max", 2.0, float),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _flow_config(cfg: dict) -> FlowConfig:
    return FlowConfig(
        modes=_get(cfg, "flow_modes", 256, int),
        dt=_get(cfg, "dt", 1e-4, float),
        t_end=_get(cfg, "t_end", 0.5, float),
        record_every=_get(cfg, "record_every", 500, int),
        dealias=_get(cfg, "dealias", True, bool),
        track_actions=_get(cfg, "track_actions", False, bool),
        action_count=_get(cfg, "action_count", 8, int),
        projector_cutoffs=tuple(
            int(tok) for tok in cfg.get("projector_cutoffs", "").split(",") if tok.strip()
        ),
    )


# -- output plumbing -------------------------------------------------------

class _Writer:
    def __init__(self, out_dir: Path, command: str, echo: list[str], effective: dict):
        self.out_dir = out_dir
        self.command = command
        self.echo = echo
        self.effective = effective
        out_dir.mkdir(parents=True, exist_ok=True)

    def header(self) -> list[str]:
        lines = [f"# hillkdv {__version__}", f"# command: {self.command}"]
        for raw in self.echo:
            lines.append(f"# config: {raw}")
        for key, value in sorted(self.effective.items()):
            lines.append(f"# effective: {key}={_fmt(value)}")
        lines.append(f"# generated: {datetime.now(timezone.utc).isoformat()}")
        return lines

    def table(self, name: str, columns: list[str], rows, comments=()) -> Path:
        path = self.out_dir / name
        with open(path, "w", encoding="utf-8") as fh:
            for line in self.header():
                fh.write(line + "\n")
            for line in comments:
                fh.write(f"# {line}\n")
            fh.write("\t".join(columns) + "\n")
            for row in rows:
                fh.write("\t".join(_fmt(x) for x in row) + "\n")
        return path

    def text(self, name: str, body: str) -> Path:
        path = self.out_dir / name
        with open(path, "w", encoding="utf-8") as fh:
            for line in self.header():
                fh.write(line + "\n")
            fh.write(body)
        return path


def _tolerance_scale(reports: list[EstimateReport], scale: float) -> list[EstimateReport]:
    if scale == 1.0:
        return reports
    out = []
    for r in reports:
        tol = r.tolerance * scale
        passed = r.margin >= -tol if r.kind == "inequality" else r.margin <= tol
        out.append(replace(r, tolerance=tol, passed=bool(passed)))
    return out


# -- commands ---------------------------------------------------------------

def cmd_spectrum(args, cfg, echo) -> int:
    psi = _potential_from_config(cfg)
    n_max = args.nmax or _get(cfg, "n_max", 16, int)
    hs = HillSpectrum(psi, n_max=n_max)
    writer = _Writer(Path(args.out), "spectrum", echo,
                     {"n_max": n_max, "q0": hs.q0})
    writer.table(
        "spectrum.tsv",
        ["n", "lam_minus", "lam_plus", "lam_crit", "height", "gap_length"],
        hs.bands.table_rows(),
        comments=[
            f"q0={_fmt(hs.q0)}",
            f"max_edge_residual={_fmt(float(np.max(hs.bands.edge_residuals)))}",
            f"max_edge_shift={_fmt(float(np.max(hs.bands.edge_shifts)))}",
        ],
    )
    return 0


def cmd_actions(args, cfg, echo) -> int:
    psi = _potential_from_config(cfg)
    n_max = args.nmax or _get(cfg, "n_max", 16, int)
    hs = HillSpectrum(psi, n_max=n_max)
    acts = compute_action_spectrum(hs)
    writer = _Writer(Path(args.out), "actions", echo,
                     {"n_max": n_max, "q0": hs.q0})
    writer.table("actions.tsv", ["n", "z_minus", "z_plus", "action"],
                 acts.table_rows())
    norm_sq = sobolev_norm(psi, 0.0) ** 2
    rows = []
    for j in (-1.0, 1.0, 3.0):
        value, tail = acts.moment(j)
        rows.append((j, value, tail))
    writer.table(
        "moments.tsv", ["j", "P_j", "tail_bound"], rows,
        comments=[
            f"q0_gap={_fmt(acts.q0_gap)}",
            f"q0_weighted={_fmt(acts.q0_weighted)}",
            f"norm_sq={_fmt(norm_sq)}",
            f"norm_sq_minus_4P1={_fmt(norm_sq - 4.0 * acts.p_1)}",
            f"decayed={acts.decayed}",
        ],
    )
    return 0


def cmd_riccati(args, cfg, echo) -> int:
    p = _potential_from_config(cfg)
    pair = riccati.forward(p)
    p_back = riccati.inverse(pair.q) if pair.q.n_modes else TrigPotential.zero()
    residual = l2_distance(p_back, p)
    np_, nq = sobolev_norm(p, 0.0), sobolev_norm(pair.q, 0.0)
    bound_margin = np_ * (1.0 + 2.0 * np_) - nq
    writer = _Writer(Path(args.out), "riccati", echo, {"q0": pair.q0})
    with open(writer.out_dir / "riccati_p.pot", "w", encoding="utf-8") as fh:
        write_potential(p, fh)
    with open(writer.out_dir / "riccati_q.pot", "w", encoding="utf-8") as fh:
        write_potential(pair.q, fh)
    writer.table(
        "riccati_summary.tsv",
        ["q0", "norm_p", "norm_q", "roundtrip_residual", "forward_bound_margin"],
        [(pair.q0, np_, nq, residual, bound_margin)],
    )
    print(f"riccati: q0={pair.q0:.12g} roundtrip residual={residual:.3e} "
          f"forward bound margin={bound_margin:.3e}")
    return 0


def cmd_evolve(args, cfg, echo) -> int:
    flow_cfg = _flow_config(cfg)
    if _get(cfg, "cascade", False, bool):
        report = cascade_experiment(
            n_high=_get(cfg, "cascade_high", 16, int),
            n_low=_get(cfg, "cascade_low", 2, int),
            amplitude=_get(cfg, "cascade_amplitude", float(np.pi), float),
            config=flow_cfg,
        )
        writer = _Writer(Path(args.out), "evolve", echo,
                         {"cascade": True, "epsilon": report.epsilon,
                          "delta": report.delta})
        writer.table(
            "cascade.tsv",
            ["time", "norm_hm1", "low_norm", "hm1_margin", "low_margin",
             "split_margin"],
            zip(report.times, report.norm_hm1, report.low_norms,
                report.hm1_margins, report.low_margins, report.split_margins),
            comments=[f"epsilon={_fmt(report.epsilon)}",
                      f"delta={_fmt(report.delta)}",
                      f"passed={report.passed}"],
        )
        print(f"cascade: eps={report.epsilon:.6g} "
              f"worst low-mode margin={np.min(report.low_margins):.6g} "
              f"passed={report.passed}")
        return 0 if report.passed else 1

    psi0 = _potential_from_config(cfg)
    result = evolve(psi0, flow_cfg)
    diag = result.diagnostics
    writer = _Writer(Path(args.out), "evolve", echo,
                     {"modes": flow_cfg.modes, "dt": flow_cfg.dt,
                      "t_end": flow_cfg.t_end})
    columns = ["time", "mean", "norm_l2", "norm_hm1", "energy"]
    series = [diag.times, diag.mean_value, diag.norm_l2, diag.norm_hm1, diag.energy]
    for cutoff in flow_cfg.projector_cutoffs:
        columns.append(f"proj_{cutoff}")
        series.append(diag.projector_norms[cutoff])
    writer.table("diagnostics.tsv", columns, zip(*series))
    if diag.actions is not None:
        rows = []
        for i, t in enumerate(diag.times):
            for k in range(flow_cfg.action_count):
                rows.append((t, k + 1, diag.actions[i, k]))
        writer.table("actions_history.tsv", ["time", "n", "action"], rows)
    drift_l2 = float(np.max(np.abs(diag.norm_l2**2 - diag.norm_l2[0] ** 2)))
    rel = drift_l2 / max(diag.norm_l2[0] ** 2, 1e-300)
    print(f"evolve: {len(diag.times)} records, L2-square drift {rel:.3e} relative")
    return 0


def cmd_verify(args, cfg, echo) -> int:
    battery = _battery_from_config(cfg, args.seed)
    groups_text = cfg.get("groups", "")
    groups = tuple(g.strip() for g in groups_text.split(",") if g.strip()) or None
    summary = run_battery(battery, groups)
    scale = args.tol if args.tol is not None else _get(cfg, "tol_scale", 1.0, float)
    reports = _tolerance_scale(list(summary.reports), scale)
    all_passed = not summary.failures and all(
        r.passed or r.informational for r in reports)
    writer = _Writer(Path(args.out), "verify", echo,
                     {"seed": battery.seed, "count": battery.count,
                      "tol_scale": scale})
    writer.text("reports.jsonl", "".join(r.to_json() + "\n" for r in reports))
    writer.text("summary.txt", summary.text_summary())
    print(summary.text_summary(), end="")
    return 0 if all_passed else 1


def cmd_plotdata(args, cfg, echo) -> int:
    out_dir = Path(args.out)
    writer = _Writer(out_dir, "plotdata", echo, {})
    if "potential" in cfg or "potential_file" in cfg:
        psi = _potential_from_config(cfg)
        n_max = args.nmax or _get(cfg, "n_max", 16, int)
        hs = HillSpectrum(psi, n_max=n_max)
        writer.table("heights.dat", ["n", "height"],
                     [(n, hs.bands.height(n)) for n in range(1, n_max + 1)])
        writer.table("gaps.dat", ["n", "gap_length"],
                     [(n, hs.bands.gap_length(n)) for n in range(1, n_max + 1)])
        for n in hs.bands.open_gaps():
            if hs.bands.height(n) < SCAN_MIN_HEIGHT:
                continue
            z, v = gap_v_profile(hs, n)
            writer.table(f"vprofile_gap{n}.dat", ["z", "v"], zip(z, v),
                         comments=[f"height={_fmt(hs.bands.height(n))}"])
    reports_path = out_dir / "reports.jsonl"
    if reports_path.exists():
        import json as _json

        rows = []
        index = 0
        for line in reports_path.read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            rec = _json.loads(line)
            rows.append((index, rec["margin"], rec["check"]))
            index += 1
        writer.table("margins.dat", ["index", "margin", "check"], rows)
    history_path = out_dir / "actions_history.tsv"
    if history_path.exists():
        by_time: dict[float, dict[int, float]] = {}
        for line in history_path.read_text(encoding="utf-8").splitlines():
            if line.startswith("#") or line.startswith("time") or not line.strip():
                continue
            t_s, n_s, a_s = line.split("\t")
            by_time.setdefault(float(t_s), {})[int(n_s)] = float(a_s)
        times = sorted(by_time)
        if times:
            base = by_time[times[0]]
            rows = [(t, max(abs(by_time[t][n] - base[n]) for n in base))
                    for t in times]
            writer.table("actiondrift.dat", ["time", "max_action_drift"], rows)
    return 0


# -- entry point -------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hillkdv",
        description="Band structure, gap actions and conservation checks "
                    "for the periodic KdV flow.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (("spectrum", cmd_spectrum), ("actions", cmd_actions),
                     ("riccati", cmd_riccati), ("evolve", cmd_evolve),
                     ("verify", cmd_verify), ("plotdata", cmd_plotdata)):
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="key=value config file")
        p.add_argument("--out", default="hillkdv_out", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="battery seed override")
        p.add_argument("--nmax", type=int, default=None, help="gap count override")
        p.add_argument("--tol", type=float, default=None,
                       help="tolerance scale factor for verify")
        p.set_defaults(handler=fn)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg, echo = load_config(args.config)
        return args.handler(args, cfg, echo)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except HillKdvError as exc:
        print(f"numerical hard error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
