"""Command line front end.

    relswap swap-order [--shots N --seed S --audit]
    relswap chsh       [--order larry|rob|both --shots N]
    relswap decohere   [--beta B --eta E --length L --tm-grid G --dt-grid G --shots N]
    relswap velocity   [--curve FILE | --beta B ... [--shots N]]

Units are natural (c = 1).  Exit codes: 0 ok, 2 usage, 3 domain, 4 I/O.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .chsh import chsh_from_branch_table, chsh_from_shots
from .decoherence import DecoherenceScenario, decohered_chsh_exact, default_grids, sweep_decoherence
from .emit import curve_rows, format_number, read_curve_csv, rows_to_csv, rows_to_json
from .errors import DomainError, RelswapError, UsageError
from .protocol import (
    ORDERS,
    audit_witnesses,
    entanglement_witness,
    exact_joint_distribution,
    frame_order,
    intermediate_branches,
    lab_events,
    run_shots,
)
from .quantum import BELL_INDICES
from .relativity import FrameParams
from .velocity import estimate_velocity, estimate_velocity_from_shots, simulate_shot_curve

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_IO = 0, 2, 3, 4
DEFAULT_BETA = 0.6


@dataclass
class RunConfig:
    command: str
    seed: int = 0
    shots: int = 0
    beta: float = DEFAULT_BETA
    eta: float | None = None
    L_prime: float = 1.0
    tm_grid: list[float] | None = None
    dt_grid: list[float] | None = None
    output_format: str | None = None
    output_path: str | None = None
    audit: bool = False
    order: str = "both"
    curve_path: str | None = None
    n_boot: int = 200
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.shots < 0:
            raise UsageError(f"--shots must be >= 0, got {self.shots}")
        if not -(2**63) <= self.seed < 2**64:
            raise UsageError("--seed must fit in 64 bits")
        if not abs(self.beta) < 1:
            raise DomainError(f"|beta| must be < 1, got {self.beta}")
        if self.eta is not None and not self.eta >= 0:
            raise DomainError(f"eta must be >= 0, got {self.eta}")
        if not self.L_prime > 0:
            raise DomainError(f"--length must be positive, got {self.L_prime}")

    def frame_params(self) -> FrameParams:
        """Defaults eta so that eta*gamma*tau' = 1: the peak is one decay length wide."""
        eta = self.eta
        if eta is None:
            probe = FrameParams(self.beta, self.L_prime)
            eta = 1 / (probe.gamma * abs(probe.tau_prime)) if self.beta != 0 else 1.0
        return FrameParams(self.beta, self.L_prime, eta)

    def grids(self, params: FrameParams, tm_points=None):
        tm, dt = default_grids(params) if tm_points is None else default_grids(params, tm_points)
        return (self.tm_grid or tm), (self.dt_grid or dt)

    def metadata(self) -> dict:
        meta = {k: v for k, v in asdict(self).items() if k not in ("extra", "output_path")}
        meta["version"] = __version__
        meta.update(self.extra)
        return meta


def parse_grid(text: str) -> list[float]:
    """``a,b,c`` or ``start:stop:num`` (inclusive, like numpy.linspace)."""
    try:
        if ":" in text:
            start, stop, num = text.split(":")
            return [float(v) for v in np.linspace(float(start), float(stop), int(num))]
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}; use a,b,c or start:stop:num") from None
    if not values:
        raise argparse.ArgumentTypeError("grid is empty")
    return values


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="root seed for all random streams")
    common.add_argument("--shots", type=int, default=0, help="Monte-Carlo shots; 0 means exact only")
    common.add_argument("--beta", type=float, default=DEFAULT_BETA, help="Rob's speed v/c")
    common.add_argument("--eta", type=float, default=None, help="depolarizing rate (default: eta*gamma*tau' = 1)")
    common.add_argument("--length", type=float, default=1.0, dest="L_prime", help="A-B separation L' in Rob's frame")
    common.add_argument("--tm-grid", type=parse_grid, default=None, help="t'_M values: a,b,c or start:stop:num")
    common.add_argument("--dt-grid", type=parse_grid, default=None, help="dt' values: a,b,c or start:stop:num")
    common.add_argument("--format", choices=("csv", "json"), default=None, dest="output_format")
    common.add_argument("--out", default=None, dest="output_path", help="output file (default: stdout)")
    common.add_argument("--audit", action="store_true", help="keep intermediate states and report witnesses")

    parser = argparse.ArgumentParser(prog="relswap", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("swap-order", parents=[common], help="compare Bell-first and verification-first orders")
    p = sub.add_parser("chsh", parents=[common], help="CHSH values per Bell outcome")
    p.add_argument("--order", choices=ORDERS + ("both",), default="both")
    sub.add_parser("decohere", parents=[common], help="CHSH value over (t'_M, dt') with a depolarizing memory")
    p = sub.add_parser("velocity", parents=[common], help="estimate beta from the peak of the CHSH curve")
    p.add_argument("--curve", default=None, dest="curve_path", help="CSV written by 'decohere'")
    p.add_argument("--boot", type=int, default=200, dest="n_boot", help="bootstrap replicates for shot data")
    return parser


def _emit(cfg: RunConfig, text: str, out) -> None:
    if cfg.output_path:
        Path(cfg.output_path).write_text(text)
    else:
        out.write(text)


def _f(x) -> str:
    return format_number(x)


def cmd_swap_order(cfg: RunConfig, out) -> int:
    # Rob moves along -x, so his boost velocity is -beta
    seen = frame_order(-cfg.beta, lab_events(cfg.L_prime, 0.1 * cfg.L_prime))
    tables = {o: exact_joint_distribution(o) for o in ORDERS}
    tv = tables["larry"].total_variation(tables["rob"])
    s = {o: chsh_from_branch_table(t) for o, t in tables.items()}
    witness = {
        o: [entanglement_witness(st, ("A", "B")) for n, m in np.ndindex(2, 2) for _, _, st in intermediate_branches(o, (n, m))]
        for o in ORDERS
    }
    summary = {
        "frame_order": seen,
        "tv_distance": {f"{n}{m}": tv[n, m] for n, m in np.ndindex(2, 2)},
        "tv_distance_max": float(tv.max()),
        "s_exact": {o: {f"{i}{j}": s[o].s_per_outcome[(i, j)] for i, j in BELL_INDICES} for o in ORDERS},
        "s_exact_average": {o: s[o].s_average for o in ORDERS},
        "witness_ab": {o: float(np.mean(witness[o])) for o in ORDERS},
    }
    if cfg.shots:
        summary["s_mc"], summary["s_mc_stderr"] = {}, {}
        for p, o in enumerate(ORDERS):
            batch = run_shots(o, cfg.shots, cfg.seed, p)
            res = chsh_from_shots(batch)
            summary["s_mc"][o] = {f"{i}{j}": res.s_per_outcome.get((i, j)) for i, j in BELL_INDICES}
            summary["s_mc_stderr"][o] = {f"{i}{j}": (res.stderr or {}).get((i, j)) for i, j in BELL_INDICES}
            if cfg.audit:
                w = audit_witnesses(batch)
                summary.setdefault("audit_witness_range", {})[o] = [float(w.min()), float(w.max())]

    header = ["n", "m", "i", "j", "l_a", "l_b", "p_larry", "p_rob"]
    rows = [row[:6] + (row[6], tables["rob"].prob(*row[:6])) for row in tables["larry"].rows()]
    if cfg.output_format == "csv":
        _emit(cfg, rows_to_csv(header, rows), out)
        return EXIT_OK
    if cfg.output_format == "json":
        _emit(cfg, rows_to_json(header, rows, cfg.metadata(), {"summary": summary}), out)
        return EXIT_OK

    lines = [
        f"observer speed {_f(cfg.beta)} along -x sees order: {seen}",
        "joint distribution p(i, j, l_a, l_b | n, m):",
        "  n m i j l_a l_b  p_larry      p_rob",
    ]
    lines += [f"  {n} {m} {i} {j} {a}   {b}    {pl:.9f}  {pr:.9f}" for n, m, i, j, a, b, pl, pr in rows]
    lines.append("total variation per setting: " + "  ".join(f"({k[0]},{k[1]}) {v:.3e}" for k, v in summary["tv_distance"].items()))
    for o in ORDERS:
        vals = "  ".join(f"S_{k}={_f(v)}" for k, v in summary["s_exact"][o].items())
        lines.append(f"exact {o:5s}: {vals}  S={_f(summary['s_exact_average'][o])}")
    lines.append(f"AB witness (entropy, bits): larry {_f(summary['witness_ab']['larry'])}, rob {_f(summary['witness_ab']['rob'])}")
    if cfg.shots:
        for o in ORDERS:
            vals = "  ".join(
                f"S_{k}={_f(v)}+-{_f(summary['s_mc_stderr'][o][k])}" for k, v in summary["s_mc"][o].items() if v is not None
            )
            lines.append(f"sampled {o:5s} ({cfg.shots} shots, seed {cfg.seed}): {vals}")
        if cfg.audit:
            for o, (lo, hi) in summary["audit_witness_range"].items():
                lines.append(f"audit {o}: sampled-shot AB witness in [{_f(lo)}, {_f(hi)}]")
    _emit(cfg, "\n".join(lines) + "\n", out)
    return EXIT_OK


def cmd_chsh(cfg: RunConfig, out) -> int:
    orders = ORDERS if cfg.order == "both" else (cfg.order,)
    header = ["order", "i", "j", "s_exact"] + (["s_mc", "s_mc_stderr", "shots"] if cfg.shots else [])
    rows = []
    for p, o in enumerate(orders):
        exact = chsh_from_branch_table(exact_joint_distribution(o))
        sampled = chsh_from_shots(run_shots(o, cfg.shots, cfg.seed, p)) if cfg.shots else None
        for idx in BELL_INDICES:
            row = [o, idx.i, idx.j, exact.s_per_outcome[idx]]
            if sampled is not None:
                cells = sum(v for (i, j, _, _), v in sampled.counts.items() if (i, j) == idx)
                row += [sampled.s_per_outcome.get(idx, float("nan")), (sampled.stderr or {}).get(idx, float("nan")), cells]
            rows.append(row)
    fmt = cfg.output_format or "csv"
    text = rows_to_csv(header, rows) if fmt == "csv" else rows_to_json(header, rows, cfg.metadata())
    _emit(cfg, text, out)
    return EXIT_OK


def cmd_decohere(cfg: RunConfig, out) -> int:
    params = cfg.frame_params()
    tm, dt = cfg.grids(params)
    curve = sweep_decoherence(params, tm, dt, cfg.shots, cfg.seed)
    header, rows = curve_rows(curve)
    if (cfg.output_format or "csv") == "csv":
        text = rows_to_csv(header, rows)
    else:
        cfg.extra.update(eta_used=params.eta, gamma=params.gamma, tau_prime=params.tau_prime)
        text = rows_to_json(header, rows, cfg.metadata())
    _emit(cfg, text, out)
    return EXIT_OK


def cmd_velocity(cfg: RunConfig, out) -> int:
    interval = None
    if cfg.curve_path:
        est = estimate_velocity(read_curve_csv(cfg.curve_path), cfg.L_prime)
        source = f"curve file {cfg.curve_path}"
    else:
        params = cfg.frame_params()
        if cfg.shots:
            tm, dt = cfg.grids(params, tm_points=(1.0,))
            shot_curve = simulate_shot_curve(params, tm[0], dt, cfg.shots, cfg.seed)
            est = estimate_velocity_from_shots(shot_curve, cfg.L_prime, cfg.n_boot, cfg.seed)
            interval = est.interval
            source = f"{cfg.shots} shots per grid point, seed {cfg.seed}"
        else:
            tm, dt = cfg.grids(params, tm_points=(1.0,))
            curve = sweep_decoherence(params, tm, dt)
            est = estimate_velocity(
                curve, cfg.L_prime, model=lambda t, d: decohered_chsh_exact(DecoherenceScenario(params, t, d))
            )
            source = "exact simulated curve"
    fields = {"beta_hat": est.beta_hat, "peak_dt_prime": est.peak_dt_prime}
    if interval is not None:
        fields["beta_ci_low"], fields["beta_ci_high"] = interval
    if cfg.output_format == "csv":
        _emit(cfg, rows_to_csv(list(fields), [list(fields.values())]), out)
    elif cfg.output_format == "json":
        _emit(cfg, rows_to_json(list(fields), [list(fields.values())], cfg.metadata()), out)
    else:
        lines = [f"source: {source}", f"beta_hat: {_f(est.beta_hat)}", f"peak_dt_prime: {_f(est.peak_dt_prime)}"]
        if interval is not None:
            lines.append(f"bootstrap 95% interval for beta: [{_f(interval[0])}, {_f(interval[1])}]")
        _emit(cfg, "\n".join(lines) + "\n", out)
    return EXIT_OK


COMMANDS = {"swap-order": cmd_swap_order, "chsh": cmd_chsh, "decohere": cmd_decohere, "velocity": cmd_velocity}


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = RunConfig(**vars(args))
        return COMMANDS[cfg.command](cfg, out)
    except DomainError as exc:
        print(f"relswap: domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except UsageError as exc:
        print(f"relswap: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RelswapError as exc:
        print(f"relswap: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"relswap: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
