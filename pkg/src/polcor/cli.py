"""``polcor`` command line.

Configuration is resolved from, lowest precedence first: built-in defaults,
the ``POLCOR_SEED`` environment variable (seed only), a flat ``key=value``
file given by ``--config``, then individual flags. Angles accept plain
numbers or multiples of pi such as ``pi/8``, ``3*pi/8`` or ``-pi``.
"""
from __future__ import annotations

import argparse
import math
import os
import re
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import acceptance
from .algebra import DetectorPair, format_derivation, intensity_expectation
from .harness import CorrelatorServer, parse_address, run_correlator, run_party
from .measurement import (
    ALL_PAIRS,
    CANONICAL_CHSH_ANGLES,
    CSV_COLUMNS,
    chsh,
    config_comment,
    correlation_csv,
    correlation_rows,
    local_stats,
    run_pipeline,
)
from .optics import Party
from .simulator import OpticalConfig, OverlapMode, simulate_party
from .wire import StreamError

FLOAT_KEYS = ("theta", "xi", "psi_a", "psi_b", "eta", "i0", "duty")
INT_KEYS = ("n_bins", "seed")
CONFIG_KEYS = FLOAT_KEYS + INT_KEYS + ("overlap_mode",)

RANGES = {
    "i0": "(0, inf)",
    "duty": "(0, 1)",
    "n_bins": "[1, inf) integer",
    "seed": "[0, 2**64) integer",
    "overlap_mode": "separated | coherent",
}

_PI_EXPR = re.compile(r"^([+-]?)(\d*\.?\d*(?:[eE][+-]?\d+)?)\s*\*?\s*pi\s*(?:/\s*(\d*\.?\d+))?$")


class ConfigError(ValueError):
    pass


def parse_number(text: str) -> float:
    """Parse ``1.5``, ``pi``, ``-pi/2``, ``3*pi/8`` or ``2pi``."""
    s = str(text).strip().lower()
    try:
        return float(s)
    except ValueError:
        pass
    m = _PI_EXPR.match(s)
    if not m:
        raise ValueError(f"cannot parse number {text!r}")
    sign, factor, div = m.groups()
    value = (float(factor) if factor else 1.0) * math.pi / (float(div) if div else 1.0)
    return -value if sign == "-" else value


def _coerce(key: str, raw) -> object:
    if key not in CONFIG_KEYS:
        raise ConfigError(f"unknown config key {key!r}; accepted keys: {', '.join(CONFIG_KEYS)}")
    try:
        if key in FLOAT_KEYS:
            value = parse_number(raw)
            if not math.isfinite(value):
                raise ValueError
        elif key in INT_KEYS:
            value = int(str(raw).strip(), 0)
        else:
            value = OverlapMode(str(raw).strip().lower())
    except ValueError:
        raise ConfigError(f"bad value {raw!r} for {key}; accepted: {RANGES.get(key, 'finite number')}") from None
    checks = {
        "i0": lambda v: v > 0,
        "duty": lambda v: 0 < v < 1,
        "n_bins": lambda v: v >= 1,
        "seed": lambda v: 0 <= v < 2**64,
    }
    if key in checks and not checks[key](value):
        raise ConfigError(f"{key}={raw} out of range; accepted range {RANGES[key]}")
    return value


def read_config_file(path) -> dict:
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
        values[key.strip()] = raw.strip()
    return values


def parse_config(path=None, overrides: dict | None = None, env=None) -> OpticalConfig:
    """Resolve an :class:`OpticalConfig`; flag ``overrides`` win over the file."""
    env = os.environ if env is None else env
    values = {}
    if env.get("POLCOR_SEED"):
        values["seed"] = _coerce("seed", env["POLCOR_SEED"])
    if path is not None:
        for k, raw in read_config_file(path).items():
            values[k] = _coerce(k, raw)
    for k, raw in (overrides or {}).items():
        if raw is not None:
            values[k] = _coerce(k, raw)
    return OpticalConfig(**values)


def parse_sweep(text: str) -> tuple[str, np.ndarray]:
    try:
        name, start, stop, steps = text.split(":")
    except ValueError:
        raise ConfigError(f"--sweep expects NAME:START:STOP:STEPS, got {text!r}") from None
    name = name.strip().replace("-", "_")
    if name not in FLOAT_KEYS + INT_KEYS:
        raise ConfigError(f"cannot sweep {name!r}; sweepable fields: {', '.join(FLOAT_KEYS + INT_KEYS)}")
    n = int(steps)
    if n < 2:
        raise ConfigError("sweep needs at least 2 steps")
    return name, np.linspace(parse_number(start), parse_number(stop), n)


def _sweep_values(cfg: OpticalConfig, name: str, values) -> list[OpticalConfig]:
    return [cfg.replace(**{name: _coerce(name, repr(int(round(v))) if name in INT_KEYS else repr(float(v)))})
            for v in values]


def write_output(text: str, out) -> None:
    """Write to ``out`` atomically (temp file + rename), or stdout when ``out`` is None."""
    if out is None or out == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    out = Path(out)
    fd, tmp = tempfile.mkstemp(dir=out.parent or ".", prefix=f".{out.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, out)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _pairs(args) -> tuple[DetectorPair, ...]:
    return (DetectorPair(args.pair),) if args.pair else ALL_PAIRS


def cmd_simulate(cfg, args):
    write_output(correlation_csv(cfg, run_pipeline(cfg, _pairs(args))), args.out)
    return 0


def cmd_fringe_scan(cfg, args):
    name, values = parse_sweep(args.sweep or "xi:0:pi:17")
    lines = [config_comment(cfg, "fringe-scan"), f"# sweep={args.sweep or 'xi:0:pi:17'}\n",
             ",".join(CSV_COLUMNS) + "\n"]
    for c in _sweep_values(cfg, name, values):
        for row in correlation_rows(c, run_pipeline(c, _pairs(args))):
            lines.append(",".join(row) + "\n")
    write_output("".join(lines), args.out)
    return 0


def cmd_local_scan(cfg, args):
    spec = args.sweep or "psi_a:0:2*pi:16"
    name, values = parse_sweep(spec)
    cols = (name, "party", "port1_mean", "port1_se", "port2_mean", "port2_se", "full_mean", "expected_full")
    lines = [config_comment(cfg, "local-scan"), f"# sweep={spec}\n", ",".join(cols) + "\n"]
    for c in _sweep_values(cfg, name, values):
        for party in Party:
            st = local_stats(simulate_party(c, party))
            angle = c.theta if party is Party.ALPHA else c.xi
            expect = intensity_expectation(party, angle, c.phases, c.i0)
            lines.append(",".join([repr(getattr(c, name)), party.name.lower(), repr(st.port1_mean),
                                   repr(st.port1_se), repr(st.port2_mean), repr(st.port2_se),
                                   repr(st.full_mean), repr(expect)]) + "\n")
    write_output("".join(lines), args.out)
    return 0


def cmd_chsh(cfg, args):
    angles = CANONICAL_CHSH_ANGLES if not args.angles else tuple(
        parse_number(x) for x in args.angles.split(","))
    if len(angles) != 4:
        raise ConfigError("--angles needs four values a,a',b,b'")
    closed = chsh(cfg, *angles, mode="closed")
    mc = chsh(cfg, *angles, mode="mc")
    names = {"ab": (0, 2), "ab'": (0, 3), "a'b": (1, 2), "a'b'": (1, 3)}
    lines = [config_comment(cfg, "chsh"), f"# angles={','.join(repr(a) for a in angles)}\n",
             "setting,theta,xi,E_closed,E_mc\n"]
    for key, (i, j) in names.items():
        lines.append(f"{key},{angles[i]!r},{angles[j]!r},{closed.correlations[key]!r},"
                     f"{mc.correlations[key]!r}\n")
    lines.append(f"S,,,{closed.s_value!r},{mc.s_value!r}\n")
    write_output("".join(lines), args.out)
    print(f"S closed-form = {closed.s_value:.6f}   S Monte Carlo = {mc.s_value:.6f}   "
          f"(classical bound 2, 2*sqrt(2) = {2 * math.sqrt(2):.6f})", file=sys.stderr)
    return 0


def cmd_algebra(cfg, args):
    write_output(format_derivation(cfg.theta, cfg.xi, cfg.phases, cfg.i0, args.pair or "AB"), args.out)
    return 0


def cmd_run_party(cfg, args):
    if not args.role:
        raise ConfigError("run-party needs --role alice|bob")
    if args.connect:
        sink = parse_address(args.connect)
    elif args.out:
        sink = args.out
    else:
        raise ConfigError("run-party needs --connect HOST:PORT or --out PATH")
    summary = run_party(args.role, cfg, sink)
    print(f"{summary.party.name.lower()}: emitted {summary.bins_emitted} bins", file=sys.stderr)
    return 0


def cmd_run_correlator(cfg, args):
    pairs = _pairs(args)
    if args.inputs:
        _, csv = run_correlator(args.inputs, cfg, pairs)
    elif args.listen:
        host, port = parse_address(args.listen)
        server = CorrelatorServer(cfg, host, port, pairs)
        print(f"correlator listening on {server.address[0]}:{server.address[1]}", file=sys.stderr)
        _, csv = server.serve_once()
    else:
        raise ConfigError("run-correlator needs --listen HOST:PORT or --inputs PATH PATH")
    write_output(csv, args.out)
    return 0


def cmd_verify(cfg, args):
    results = acceptance.run_all()
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} acceptance criteria passed")
    return 1 if failed else 0


COMMANDS = {
    "simulate": (cmd_simulate, "run the full pipeline and write the correlation CSV"),
    "local-scan": (cmd_local_scan, "per-port mean intensities against a swept parameter"),
    "fringe-scan": (cmd_fringe_scan, "joint intensities against a swept parameter"),
    "chsh": (cmd_chsh, "CHSH value, closed form and Monte Carlo"),
    "algebra": (cmd_algebra, "print the product-basis expansion and reduction"),
    "run-party": (cmd_run_party, "simulate one arm and stream it to a correlator or file"),
    "run-correlator": (cmd_run_correlator, "merge two party streams and write the correlation CSV"),
    "verify": (cmd_verify, "run the acceptance suite"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key=value config file")
    common.add_argument("--seed")
    common.add_argument("--bins", dest="n_bins")
    common.add_argument("--theta", metavar="RAD")
    common.add_argument("--xi", metavar="RAD")
    common.add_argument("--psi-a", dest="psi_a", metavar="RAD")
    common.add_argument("--psi-b", dest="psi_b", metavar="RAD")
    common.add_argument("--eta", metavar="RAD")
    common.add_argument("--i0")
    common.add_argument("--duty")
    common.add_argument("--overlap", dest="overlap_mode", choices=[m.value for m in OverlapMode])
    common.add_argument("--pair", choices=[p.value for p in DetectorPair])
    common.add_argument("--sweep", metavar="NAME:START:STOP:STEPS")
    common.add_argument("--angles", metavar="A,A2,B,B2", help="CHSH analyzer settings")
    common.add_argument("--out", metavar="PATH")
    common.add_argument("--listen", metavar="HOST:PORT")
    common.add_argument("--connect", metavar="HOST:PORT")
    common.add_argument("--role", choices=["alice", "bob"])
    common.add_argument("--inputs", nargs=2, metavar="PATH", help="correlator stream files")

    parser = argparse.ArgumentParser(prog="polcor", description="Polarization-basis correlations of time-separated laser pulses.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=help_text)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {k: getattr(args, k) for k in CONFIG_KEYS}
    try:
        cfg = parse_config(args.config, overrides)
        return COMMANDS[args.command][0](cfg, args)
    except StreamError as exc:
        print(f"polcor: {exc.code}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ConfigError, ValueError, OSError) as exc:
        print(f"polcor: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
