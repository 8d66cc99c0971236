"""Command-line front end: ``gamma``, ``zeros``, ``verify`` and ``bench``.

Exit codes are 0 on success, 1 on a computation or input error and 2 when
``verify`` finds the closed form and the oracle more than ``--tol`` apart.
JSON output uses sorted keys so identical inputs give identical bytes.
The log level is read from ``HINF_LOG`` (default ``WARNING``).
"""

from __future__ import annotations

import argparse
import csv
import enum
import io
import json
import logging
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field

import numpy as np

from . import errors
from .gamma import Case, gamma_star
from .oracle import (
    assemble_lmi2,
    assemble_lmi_full,
    bisect_gamma_detailed,
    facial_reduce_dual,
)
from .plant import Channel, channel_realization, load_plant
from .randplants import random_suite
from .sdp import write_sdpa
from .zeros import analyze

log = logging.getLogger("hinflimit")

BENCH_COLUMNS = (
    "index",
    "n",
    "case",
    "gamma_star",
    "oracle_gamma",
    "closed_form_time_s",
    "oracle_time_s",
    "gap",
    "status",
)


class Command(enum.Enum):
    GAMMA = "gamma"
    ZEROS = "zeros"
    VERIFY = "verify"
    BENCH = "bench"


@dataclass
class RunConfig:
    """Parsed command line.

    ``tol_axis`` of ``None`` lets zero analysis pick its default.
    """

    command: Command
    inputs: list = field(default_factory=list)
    tol_axis: float | None = None
    tol_verify: float = 1e-5
    json: bool = False
    components: bool = False
    dump_sdp: str | None = None
    seed: int = 42
    count: int = 20
    n_min: int = 2
    n_max: int = 6
    out: str | None = None

    def __post_init__(self):
        for name in ("tol_axis", "tol_verify"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise errors.ParseError(f"{name} must be strictly positive")
        if self.count < 0:
            raise errors.ParseError("count must be nonnegative")
        if not 1 <= self.n_min <= self.n_max:
            raise errors.ParseError("need 1 <= n-min <= n-max")


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, enum.Enum):
        return x.value
    return x


def dumps(obj) -> str:
    """Deterministic JSON text of ``obj``."""
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2)


def _channel_report(zd) -> dict:
    return {
        "zeros": [
            {
                "value": [z.value.real, z.value.imag],
                "multiplicity": z.multiplicity,
                "class": z.klass.value,
            }
            for z in zd.zeros
        ],
        "relative_degree": zd.relative_degree,
        "residuals": dict(zd.residuals),
    }


def zeros_report(plant, tol_axis: float | None = None) -> dict:
    """Zeros of the ``u -> z`` and ``w -> y`` channels."""
    out = {}
    for key, ch in (("zu", Channel.ZU), ("yw", Channel.YW)):
        out[key] = _channel_report(analyze(channel_realization(plant, ch), tol_axis))
    return out


def _oracle(plant, tol: float):
    # half the verification tolerance, so a conclusive bracket passes
    return bisect_gamma_detailed(plant, tol=tol / 2)


def _dual_for(plant, res):
    if res.case_id is Case.ZW_FALLBACK:
        return None
    if res.case_id is Case.CASE4:
        return assemble_lmi_full(plant, perp="nullvec", zu=res.zu, yw=res.yw)
    return assemble_lmi2(plant, res.zu, res.yw)


def _write_atomic(path: str, writer) -> None:
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".hinflimit-")
    os.close(fd)
    try:
        writer(tmp)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def verify_report(plant, tol: float, tol_axis: float | None = None, dump_sdp: str | None = None) -> dict:
    """Closed form against bisection, with the structural reduction of the dual."""
    res = gamma_star(plant, tol_axis)
    br = _oracle(plant, tol)
    if not br.conclusive:
        raise errors.OracleInconclusive(
            f"bisection bracket [{br.lo:.10g}, {br.hi:.10g}] is wider than the tolerance"
        )
    gap = abs(res.gamma_star - br.gamma)
    dual = _dual_for(plant, res)
    reduction = None
    if dual is not None:
        _, rep = facial_reduce_dual(dual)
        reduction = rep.to_dict()
    if dump_sdp is not None:
        p = assemble_lmi_full(plant)
        _write_atomic(dump_sdp, lambda path: write_sdpa(p, path, "hinflimit min-gamma LMI"))
    return {
        "gamma_star": res.gamma_star,
        "case": res.case_id.value,
        "oracle": br.to_dict(),
        "gap": gap,
        "tol": tol,
        "reduction": reduction,
        "passed": gap <= tol,
    }


def bench_rows(config: RunConfig) -> list:
    """One row per plant; see ``BENCH_COLUMNS``."""
    suite = []
    for path in config.inputs:
        suite.append(load_plant(path))
    if config.count:
        suite += [p for _, p in random_suite(config.seed, config.count, (config.n_min, config.n_max))]
    rows = []
    for i, plant in enumerate(suite):
        row = dict.fromkeys(BENCH_COLUMNS, "")
        row["index"] = i
        row["n"] = plant.n
        try:
            t0 = time.perf_counter()
            res = gamma_star(plant, config.tol_axis)
            t1 = time.perf_counter()
            br = _oracle(plant, config.tol_verify)
            t2 = time.perf_counter()
        except errors.HinfError as exc:
            log.info("plant %d skipped: %s", i, exc)
            row["status"] = f"skipped: {type(exc).__name__}"
            rows.append(row)
            continue
        row.update(
            case=res.case_id.value,
            gamma_star=repr(res.gamma_star),
            oracle_gamma=repr(br.gamma),
            closed_form_time_s=f"{t1 - t0:.6f}",
            oracle_time_s=f"{t2 - t1:.6f}",
            gap=f"{abs(res.gamma_star - br.gamma):.3e}",
            status="ok" if br.conclusive else "inconclusive",
        )
        log.debug("plant %d: %s", i, row)
        rows.append(row)
    return rows


def bench_csv(rows: list) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=BENCH_COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def _text_gamma(d: dict) -> str:
    lines = [f"gamma_star  {d['gamma_star']!r}", f"case        {d['case']}"]
    for key in ("hat_gamma", "feedthrough_term"):
        if key in d:
            lines.append(f"{key:<11} {d[key]!r}")
    for key in ("imag_terms_zu", "imag_terms_yw"):
        for t in d.get(key, []):
            lines.append(f"{key:<11} zero {t['zero'][0]:+.6g}{t['zero'][1]:+.6g}j  term {t['term']!r}")
    return "\n".join(lines)


def _text_zeros(d: dict) -> str:
    lines = []
    for key in ("zu", "yw"):
        ch = d[key]
        lines.append(f"[{key}] relative degree {ch['relative_degree']}")
        for z in ch["zeros"]:
            re_, im = z["value"]
            lines.append(f"  {re_:+.10g}{im:+.10g}j  x{z['multiplicity']}  {z['class']}")
        res = ", ".join(f"{k}={v:.1e}" for k, v in sorted(ch["residuals"].items()))
        lines.append(f"  residuals {res}")
    return "\n".join(lines)


def _text_verify(d: dict) -> str:
    o = d["oracle"]
    lines = [
        f"gamma_star  {d['gamma_star']!r}  ({d['case']})",
        f"bisection   {o['gamma']!r}  bracket [{o['lo']!r}, {o['hi']!r}]  tests {o['tests']}",
        f"gap         {d['gap']:.3e}  (tol {d['tol']:g})",
    ]
    r = d["reduction"]
    if r is not None:
        lines.append(
            f"reduction   {', '.join(r['rules']) or 'none'}: blocks {r['sizes_before']} -> "
            f"{r['sizes_after']}, constraints {r['constraints_before']} -> {r['constraints_after']}"
        )
    lines.append("PASS" if d["passed"] else "FAIL")
    return "\n".join(lines)


def run(config: RunConfig) -> tuple:
    """Execute ``config``; returns ``(exit_code, output_text)``."""
    if config.command is Command.BENCH:
        text = bench_csv(bench_rows(config))
        if config.out is not None:
            _write_atomic(config.out, lambda path: open(path, "w").write(text))
            return 0, ""
        return 0, text.rstrip("\n")
    if len(config.inputs) != 1:
        raise errors.ParseError(f"{config.command.value} takes exactly one plant file")
    plant = load_plant(config.inputs[0])
    if config.command is Command.GAMMA:
        d = gamma_star(plant, config.tol_axis).to_dict(config.components)
        return 0, dumps(d) if config.json else _text_gamma(_jsonable(d))
    if config.command is Command.ZEROS:
        d = zeros_report(plant, config.tol_axis)
        return 0, dumps(d) if config.json else _text_zeros(_jsonable(d))
    d = verify_report(plant, config.tol_verify, config.tol_axis, config.dump_sdp)
    code = 0 if d["passed"] else 2
    return code, dumps(d) if config.json else _text_verify(_jsonable(d))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--tol-axis", type=float, default=None, help="imaginary-axis tolerance")
    parser = argparse.ArgumentParser(prog="hinflimit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    g = sub.add_parser("gamma", parents=[common], help="closed-form optimal level")
    g.add_argument("plant")
    g.add_argument("--components", action="store_true", help="include every term of the max")
    z = sub.add_parser("zeros", parents=[common], help="invariant zeros of both channels")
    z.add_argument("plant")
    v = sub.add_parser("verify", parents=[common], help="closed form against SDP bisection")
    v.add_argument("plant")
    v.add_argument("--tol", type=float, default=1e-5)
    v.add_argument("--dump-sdp", metavar="PATH", help="write the min-gamma LMI in SDPA format")
    b = sub.add_parser("bench", parents=[common], help="timing and agreement table as CSV")
    b.add_argument("plants", nargs="*", help="plant files benchmarked before the random suite")
    b.add_argument("--seed", type=int, default=42)
    b.add_argument("--count", type=int, default=20, help="random plants (0 for none)")
    b.add_argument("--n-min", type=int, default=2)
    b.add_argument("--n-max", type=int, default=6)
    b.add_argument("--tol", type=float, default=1e-5, help="bisection tolerance")
    b.add_argument("--out", metavar="PATH", help="CSV file instead of stdout")
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    cmd = Command(ns.command)
    kw = dict(command=cmd, tol_axis=ns.tol_axis, json=ns.json)
    if cmd is Command.BENCH:
        kw.update(
            inputs=list(ns.plants), seed=ns.seed, count=ns.count, n_min=ns.n_min,
            n_max=ns.n_max, tol_verify=ns.tol, out=ns.out,
        )
    else:
        kw["inputs"] = [ns.plant]
    if cmd is Command.GAMMA:
        kw["components"] = ns.components
    if cmd is Command.VERIFY:
        kw.update(tol_verify=ns.tol, dump_sdp=ns.dump_sdp)
    return RunConfig(**kw)


def main(argv: list | None = None) -> int:
    level = logging.getLevelName(os.environ.get("HINF_LOG", "WARNING").upper())
    logging.basicConfig(
        level=level if isinstance(level, int) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    ns = build_parser().parse_args(argv)
    try:
        code, text = run(config_from_args(ns))
    except errors.HinfError as exc:
        if ns.json:
            sys.stderr.write(dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        else:
            sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return 1
    if text:
        sys.stdout.write(text + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
