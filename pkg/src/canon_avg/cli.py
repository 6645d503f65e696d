"""Command line entry point: ``canon-avg run`` and ``canon-avg list-scenarios``."""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import os
import sys
import tempfile
from pathlib import Path

from .errors import IntegrationError, ResonanceError
from .scenarios import DEFAULTS, DESCRIPTIONS, SCENARIO_NAMES, ScenarioConfig, config_fields, run

OUTPUT_HELP = """\
outputs (written to --out, default ./canon_avg_out/<scenario>):
  report.json            config, per-epsilon table, fitted slopes, every check with its threshold
  errors_eps<E>.csv      t, then one column per method: L2 distance between coefficient vectors
                         (order1, order2, two_level, std_pt, born_fock, ... as applicable)
  trace_eps<E>.csv       oracle trace: t, re_c0, im_c0, re_c1, im_c1, ..., norm
  populations_eps<E>.csv (harmonic_resonant) t, oracle_w0..w3, ladder_w0..w3

exit status is 0 when every check passes, 1 when a check fails, 2 on bad input.
"""

_TUPLES = {"epsilon", "compare"}
_INTS = {"N", "seed", "min_modes", "workers"}
_STRS = {"scenario", "output_dir"}


def parse_config(text: str) -> dict:
    """Flat ``key = value`` file, ``#`` comments; ``epsilon`` and ``compare`` take comma lists."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), comment_prefixes=("#",))
    cp.optionxform = str
    cp.read_string("[run]\n" + text)
    known = set(config_fields())
    out = {}
    for key, raw in cp["run"].items():
        if key not in known:
            raise ValueError(f"unknown config key {key!r}")
        raw = raw.strip()
        if key in _TUPLES:
            items = [x.strip() for x in raw.split(",") if x.strip()]
            out[key] = tuple(float(x) for x in items) if key == "epsilon" else tuple(items)
        elif key in _INTS:
            out[key] = int(raw)
        elif key in _STRS:
            out[key] = raw
        else:
            out[key] = float(raw)
    return out


def build_config(file_params: dict, scenario=None, epsilon=None, out=None, compare=None, workers=None) -> ScenarioConfig:
    params = dict(file_params)
    name = scenario or params.pop("scenario", None)
    params.pop("scenario", None)
    if not name:
        raise ValueError("no scenario given (config key 'scenario' or --scenario)")
    if epsilon is not None:
        params["epsilon"] = tuple(epsilon)
    if out is not None:
        params["output_dir"] = out
    if compare is not None:
        params["compare"] = tuple(compare)
    if workers is not None:
        params["workers"] = workers
    return ScenarioConfig.for_scenario(name, **params)


def _atomic_write(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(x)) for x in r])
    return buf.getvalue()


def write_outputs(report, out_dir: Path) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, (header, rows) in sorted(report.curves.items()):
        p = out_dir / f"{name}.csv"
        _atomic_write(p, _csv_text(header, rows))
        written.append(p)
    p = out_dir / "report.json"
    _atomic_write(p, report.to_json() + "\n")
    written.append(p)
    return written


def _comma_floats(text: str):
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _comma_words(text: str):
    return tuple(x.strip() for x in text.split(",") if x.strip())


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="canon-avg", description="Averaged amplitude solvers checked against direct integration.")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run one scenario", epilog=OUTPUT_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    r.add_argument("config", nargs="?", help="flat key = value file; keys are ScenarioConfig fields")
    r.add_argument("--scenario", choices=SCENARIO_NAMES)
    r.add_argument("--epsilon", type=_comma_floats, help="comma list, strictly decreasing; drive amplitude for harmonic scenarios")
    r.add_argument("--out", help="output directory")
    r.add_argument("--compare", type=_comma_words, help="baselines to add: std-pt, born-fock")
    r.add_argument("--workers", type=int, help="processes for the epsilon sweep")
    sub.add_parser("list-scenarios", help="show scenario names and defaults")
    return ap


def main(argv=None) -> int:
    ap = make_parser()
    args = ap.parse_args(argv)
    if args.command == "list-scenarios":
        for name in SCENARIO_NAMES:
            defaults = ", ".join(f"{k}={v}" for k, v in DEFAULTS[name].items())
            print(f"{name:22s} {DESCRIPTIONS[name]}\n{'':22s} defaults: {defaults}")
        return 0
    try:
        params = parse_config(Path(args.config).read_text()) if args.config else {}
        cfg = build_config(params, args.scenario, args.epsilon, args.out, args.compare, args.workers)
    except (OSError, ValueError, configparser.Error) as exc:
        print(f"canon-avg: {exc}", file=sys.stderr)
        return 2
    try:
        report = run(cfg)
    except (ResonanceError, IntegrationError) as exc:
        print(f"canon-avg: {cfg.scenario}: {exc}", file=sys.stderr)
        return 2
    out_dir = Path(cfg.output_dir or Path("canon_avg_out") / cfg.scenario)
    write_outputs(report, out_dir)
    for c in report.checks:
        tag = "PASS" if c.passed else "FAIL"
        at = "" if c.epsilon is None else f" eps={c.epsilon:g}"
        print(f"{tag} {c.name}{at}: {c.value:.6g} (target {c.target:.6g}, {c.mode} {c.tol:g})")
    for m, s in sorted(report.slopes.items()):
        print(f"slope {m}: {s:.3f}")
    print(f"{'passed' if report.passed else 'FAILED'}: {sum(c.passed for c in report.checks)}/{len(report.checks)} checks; outputs in {out_dir}")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
