"""Command-line front end.

Channel descriptors follow ``name:param[:param...]``::

    identity:d          dep:d:p            bitflip:p
    phaseflip:p         bitphaseflip:p     ampdamp:gamma
    wh:d                gwh:d:lambda       random:din:dout:kraus:seed

Anything else is read as the path of a channel JSON file.  Results go to
standard output as CSV (or JSON with ``--json``).  Exit codes: 0 on success,
2 when a solver did not reach an optimal status, 1 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .backend import SolverConfig, solve
from .builders import DEFAULT_SIDE_CAP, HierarchySpec, build_dep_lp, build_hierarchy
from .certify import extract_code, logdet_rank_min, rank_loop
from .channels import (
    QuantumChannel,
    amplitude_damping,
    depolarizing,
    identity_channel,
    load_channel,
    pauli_flip,
    random_channel,
    tensor_power,
    werner_holevo,
)
from .codes import CodePair, code_to_dict, evaluate_code
from .errors import CertificationError, QecBoundsError, SolverError
from .seesaw import SeesawConfig, seesaw_lower_bound

CSV_HEADER = ["channel", "params", "M", "level", "ppt", "assist", "value", "status", "seconds", "version"]

_BUILTINS = {
    "identity": (lambda d: identity_channel(int(d)), "identity:d"),
    "dep": (lambda d, p: depolarizing(int(d), float(p)), "dep:d:p"),
    "bitflip": (lambda p: pauli_flip("bit", float(p)), "bitflip:p"),
    "phaseflip": (lambda p: pauli_flip("phase", float(p)), "phaseflip:p"),
    "bitphaseflip": (lambda p: pauli_flip("bit-phase", float(p)), "bitphaseflip:p"),
    "ampdamp": (lambda g: amplitude_damping(float(g)), "ampdamp:gamma"),
    "wh": (lambda d: werner_holevo(int(d)), "wh:d"),
    "gwh": (lambda d, lam: werner_holevo(int(d), float(lam)), "gwh:d:lambda"),
    "random": (lambda a, b, k, s: random_channel(int(a), int(b), int(k), int(s)), "random:din:dout:kraus:seed"),
}


class UsageError(Exception):
    pass


def builtin_listing() -> str:
    return ", ".join(form for _, form in _BUILTINS.values())


def split_descriptor(desc: str) -> tuple[str, list[str]]:
    name, *params = desc.split(":")
    return name, params


def parse_channel(desc: str) -> QuantumChannel:
    name, params = split_descriptor(desc)
    if name in _BUILTINS:
        fn, form = _BUILTINS[name]
        try:
            return fn(*params)
        except TypeError:
            raise UsageError(f"channel {name!r} expects the form {form}") from None
        except ValueError as exc:
            raise UsageError(f"bad parameters for {form}: {exc}") from None
    path = Path(desc)
    if path.suffix == ".json" or path.exists():
        if not path.exists():
            raise UsageError(f"channel file {desc} not found")
        return load_channel(path)
    raise UsageError(f"unknown channel {desc!r}; builtins are {builtin_listing()}, or give a JSON file path")


def parse_grid(spec: str) -> list[float]:
    try:
        start, stop, steps = spec.split(":")
        start, stop, steps = float(start), float(stop), int(steps)
    except ValueError:
        raise UsageError(f"grid must look like start:stop:steps, got {spec!r}") from None
    if steps < 1:
        raise UsageError("the grid is empty")
    return np.linspace(start, stop, steps).tolist()


# ---------------------------------------------------------------------------
# records


@dataclass
class RunRecord:
    channel: str
    params: str
    M: int
    level: int | str
    ppt: bool
    assist: str
    value: float
    status: str
    seconds: float
    version: str = __version__

    def row(self) -> list[str]:
        return [
            self.channel,
            self.params,
            str(self.M),
            str(self.level),
            str(self.ppt).lower(),
            self.assist,
            f"{self.value:.12g}",
            self.status,
            f"{self.seconds:.3f}",
            self.version,
        ]


def _csv(records: list[RunRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow(r.row())
    return buf.getvalue()


def _emit(records: list[RunRecord], as_json: bool) -> None:
    if as_json:
        print(json.dumps([asdict(r) for r in records], indent=1))
    else:
        sys.stdout.write(_csv(records))


@dataclass(frozen=True)
class Job:
    desc: str
    M: int
    level: int
    ppt: bool
    assist: str
    reps: int
    lp: bool
    side_cap: int = DEFAULT_SIDE_CAP


def run_job(job: Job) -> RunRecord:
    name, params = split_descriptor(job.desc)
    t0 = time.perf_counter()
    config = SolverConfig.from_env()
    if job.lp:
        if name != "dep" or len(params) != 2 or int(params[0]) != 2:
            raise UsageError("--lp needs a qubit depolarizing channel dep:2:p")
        res = solve(build_dep_lp(job.reps, float(params[1]), job.M), config)
        level: int | str = "lp"
    else:
        ch = tensor_power(parse_channel(job.desc), job.reps)
        spec = HierarchySpec(level=job.level, ppt=job.ppt, assisted=job.assist)
        res = solve(build_hierarchy(ch, job.M, spec, side_cap=job.side_cap), config)
        level = job.level
    label = name if name in _BUILTINS else job.desc
    if job.reps > 1:
        label = f"{label}^{job.reps}"
    return RunRecord(
        label, ":".join(params) if name in _BUILTINS else "", job.M, level, job.ppt or job.lp, job.assist,
        float(res.value), res.status, time.perf_counter() - t0,
    )


def _exit_status(records) -> int:
    return 0 if all(r.status == "optimal" for r in records) else 2


# ---------------------------------------------------------------------------
# commands


def _job_from(args, desc: str) -> Job:
    return Job(desc, args.M, args.level, args.ppt, args.assist, args.reps, args.lp, args.side_cap)


def cmd_bound(args) -> int:
    rec = run_job(_job_from(args, args.channel))
    _emit([rec], args.json)
    return _exit_status([rec])


def _substitute(desc: str, value: float, index: int | None) -> str:
    name, params = split_descriptor(desc)
    if "@" in params:
        i = params.index("@")
    else:
        if not params:
            raise UsageError(f"channel {desc!r} has no parameter to sweep")
        i = len(params) - 1 if index is None else index
    if not 0 <= i < len(params):
        raise UsageError(f"parameter index {i} out of range for {desc!r}")
    params = list(params)
    params[i] = repr(float(value))
    return ":".join([name] + params)


def cmd_sweep(args) -> int:
    grid = parse_grid(args.grid)
    jobs = [_job_from(args, _substitute(args.channel, v, args.param_index)) for v in grid]
    # fail fast on malformed descriptors before spawning workers
    if not args.lp:
        parse_channel(jobs[0].desc)
    if args.parallel and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.parallel) as pool:
            records = list(pool.map(run_job, jobs))
    else:
        records = [run_job(j) for j in jobs]
    _emit(records, args.json)
    return _exit_status(records)


def cmd_certify(args) -> int:
    ch = tensor_power(parse_channel(args.channel), args.reps)
    spec = HierarchySpec(level=args.level, ppt=args.ppt)
    program = build_hierarchy(ch, args.M, spec, side_cap=args.side_cap)
    config = SolverConfig.from_env()
    t0 = time.perf_counter()
    res = solve(program, config)
    report: dict = {"channel": args.channel, "M": args.M, "level": args.level, "ppt": args.ppt,
                    "value": res.value, "status": res.status}
    if res.status not in ("optimal", "near-optimal"):
        print(json.dumps(report, indent=1))
        return 2
    try:
        W = logdet_rank_min(
            program, res.value - 1e-7 * max(1.0, abs(res.value)), args.delta, args.iters,
            config=config, jitter=args.jitter, seed=args.seed,
        )
    except CertificationError as exc:
        # fall back to the plain optimal solution, which lies on the same face
        report["logdet_error"] = str(exc)
        W = res.solution["W"]
    rep = rank_loop(W)
    report["rank_report"] = asdict(rep)
    try:
        code = extract_code(W, args.M)
        report["code"] = code_to_dict(code)
        report["code_fidelity"] = evaluate_code(code, ch, args.M)
        report["extraction_residual"] = code.residual
    except QecBoundsError as exc:
        report["code"] = None
        report["extraction_error"] = str(exc)
    report["seconds"] = time.perf_counter() - t0
    print(json.dumps(report, indent=1, default=float))
    return 0


def _instrument_dict(code) -> dict:
    def mat(x):
        a = np.asarray(x.entries)
        return [[[float(z.real), float(z.imag)] for z in row] for row in a]

    return {"M": code.M, "encoder_instrument": [mat(e) for e in code.E], "decoders": [mat(d) for d in code.D]}


def cmd_seesaw(args) -> int:
    ch = tensor_power(parse_channel(args.channel), args.reps)
    cfg = SeesawConfig(
        restarts=args.restarts, iters_per_restart=args.iters, seed=args.seed, solver=SolverConfig.from_env()
    )
    t0 = time.perf_counter()
    value, code = seesaw_lower_bound(ch, args.M, cfg, assisted=args.assist)
    out = {
        "channel": args.channel,
        "M": args.M,
        "assist": args.assist,
        "value": value,
        "seconds": time.perf_counter() - t0,
        "code": code_to_dict(code) if isinstance(code, CodePair) else _instrument_dict(code),
    }
    print(json.dumps(out, indent=1))
    return 0


# ---------------------------------------------------------------------------
# parser


def _common(p: argparse.ArgumentParser, hierarchy: bool = True) -> None:
    p.add_argument("--channel", required=True, help=f"descriptor ({builtin_listing()}) or JSON file")
    p.add_argument("--M", type=int, default=2, help="message dimension")
    p.add_argument("--reps", type=int, default=1, help="number of channel uses (tensor power)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true", help="emit JSON instead of CSV")
    if hierarchy:
        p.add_argument("--level", type=int, default=1, help="hierarchy level n")
        p.add_argument("--ppt", action="store_true", help="add the PPT cuts")
        p.add_argument("--side-cap", type=int, default=DEFAULT_SIDE_CAP, help="largest allowed variable side")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qecbounds",
        description="Converse bounds and achievable values for the entanglement fidelity of quantum codes.",
        epilog="Channel descriptors: " + builtin_listing() + ". Set QECBOUNDS_TOL to override solver tolerances.",
    )
    parser.add_argument("--version", action="version", version=f"qecbounds {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bound", help="solve one hierarchy level")
    _common(p)
    p.add_argument("--assist", choices=["plain", "locc1"], default="plain")
    p.add_argument("--lp", action="store_true", help="use the depolarizing LP with N = --reps")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("sweep", help="solve over a grid of one channel parameter")
    _common(p)
    p.add_argument("--assist", choices=["plain", "locc1"], default="plain")
    p.add_argument("--lp", action="store_true", help="use the depolarizing LP with N = --reps")
    p.add_argument("--grid", required=True, help="start:stop:steps; '@' in the descriptor marks the swept parameter")
    p.add_argument("--param-index", type=int, default=None, help="swept parameter if no '@' (default: last)")
    p.add_argument("--parallel", type=int, nargs="?", const=2, default=0, help="worker processes")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("certify", help="log-det, rank loop and code extraction")
    _common(p)
    p.add_argument("--delta", type=float, default=1e-4)
    p.add_argument("--iters", type=int, default=10)
    p.add_argument("--jitter", type=float, default=1e-3)
    p.set_defaults(func=cmd_certify, level=2, ppt=True)

    p = sub.add_parser("seesaw", help="alternating lower bound with the code achieving it")
    _common(p, hierarchy=False)
    p.add_argument("--assist", choices=["plain", "locc1"], default="plain")
    p.add_argument("--restarts", type=int, default=20)
    p.add_argument("--iters", type=int, default=50)
    p.set_defaults(func=cmd_seesaw)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, QecBoundsError, ValueError) as exc:
        if isinstance(exc, (SolverError, CertificationError)):
            print(f"solver error: {exc}", file=sys.stderr)
            return 2
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
