"""Command-line interface.

Subcommands: ``ergotropy``, ``report``, ``fig1``, ``fig2``, ``examples``, ``selftest``.
Exit codes: 0 success, 1 invalid input, 2 numerical failure. Errors are written
to stderr as a single JSON object.

State files are JSON::

    {"d_a": 2, "d_b": 2,
     "rho": [[[re, im], ...], ...],
     "H": {"kind": "non_interacting", "h_a": [[[re, im], ...]], "h_b": [...]}}

with ``"kind": "general"`` taking a full ``"h"`` matrix instead of ``h_a``/``h_b``.
Matrices are row-major lists of rows; each entry is a ``[re, im]`` pair.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from .contrib import contribution_report, tilde_contributions
from .errors import ErgocorrError, NumericalError, ValidationError
from .ergotropy import ergotropic_gap, passive_state
from .experiments import (
    SCHEMA_VERSION,
    ExperimentConfig,
    example_hamiltonian,
    example_state,
    run_examples,
    run_fig1,
    run_fig2,
)
from .qstate import BipartiteHamiltonian, BipartiteState


class StateFileError(ValidationError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def _parse_matrix(value, field: str, dim: int | None = None) -> np.ndarray:
    if not isinstance(value, list) or not value:
        raise StateFileError(field, "expected a non-empty list of rows")
    rows = []
    for i, row in enumerate(value):
        if not isinstance(row, list):
            raise StateFileError(f"{field}[{i}]", "expected a list of [re, im] pairs")
        out = []
        for j, entry in enumerate(row):
            ok = (
                isinstance(entry, list)
                and len(entry) == 2
                and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in entry)
            )
            if not ok:
                raise StateFileError(f"{field}[{i}][{j}]", f"expected a [re, im] pair of numbers, got {entry!r}")
            out.append(complex(entry[0], entry[1]))
        rows.append(out)
    n = len(rows)
    for i, row in enumerate(rows):
        if len(row) != n:
            raise StateFileError(f"{field}[{i}]", f"row has {len(row)} entries, expected {n} (square matrix)")
    if dim is not None and n != dim:
        raise StateFileError(field, f"matrix has dimension {n}, expected {dim}")
    return np.array(rows, dtype=complex)


def _parse_dim(doc: dict, key: str) -> int:
    v = doc.get(key)
    if not isinstance(v, int) or isinstance(v, bool) or v < 1:
        raise StateFileError(key, f"expected a positive integer, got {v!r}")
    return v


def parse_state_document(doc) -> tuple[BipartiteState, BipartiteHamiltonian]:
    if not isinstance(doc, dict):
        raise StateFileError("<root>", "expected a JSON object")
    d_a, d_b = _parse_dim(doc, "d_a"), _parse_dim(doc, "d_b")
    if "rho" not in doc:
        raise StateFileError("rho", "missing")
    rho = _parse_matrix(doc["rho"], "rho", d_a * d_b)
    hdoc = doc.get("H")
    if not isinstance(hdoc, dict):
        raise StateFileError("H", "expected an object with a 'kind' field")
    kind = hdoc.get("kind")
    try:
        state = BipartiteState(rho, d_a, d_b)
    except ValidationError as exc:
        raise StateFileError("rho", str(exc)) from exc
    if kind == "non_interacting":
        h_a = _parse_matrix(hdoc.get("h_a"), "H.h_a", d_a)
        h_b = _parse_matrix(hdoc.get("h_b"), "H.h_b", d_b)
        try:
            h = BipartiteHamiltonian.non_interacting(h_a, h_b)
        except ValidationError as exc:
            raise StateFileError("H", str(exc)) from exc
    elif kind == "general":
        try:
            h = BipartiteHamiltonian.general(_parse_matrix(hdoc.get("h"), "H.h", d_a * d_b), d_a, d_b)
        except StateFileError:
            raise
        except ValidationError as exc:
            raise StateFileError("H.h", str(exc)) from exc
    else:
        raise StateFileError("H.kind", f"expected 'non_interacting' or 'general', got {kind!r}")
    return state, h


def load_state_file(path: str) -> tuple[BipartiteState, BipartiteHamiltonian]:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise StateFileError("--state", f"cannot read {path!r}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise StateFileError("<root>", f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return parse_state_document(doc)


def matrix_to_json(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m, dtype=complex)]


# ---------------------------------------------------------------- output


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    return v


def render(records: list[dict], config: dict, fmt: str) -> str:
    """CSV (config echo comment, header, LF endings) or JSON."""
    if fmt == "json":
        doc = {"schema_version": SCHEMA_VERSION, "config": _jsonable(config), "records": _jsonable(records)}
        return json.dumps(doc, indent=2, sort_keys=False) + "\n"
    buf = io.StringIO()
    buf.write("# config: " + json.dumps(_jsonable(config), sort_keys=True) + "\n")
    columns = ["schema_version"]
    for r in records:
        columns.extend(k for k in r if k not in columns)
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for r in records:
        writer.writerow([SCHEMA_VERSION] + [_fmt(r.get(k)) for k in columns[1:]])
    return buf.getvalue()


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -------------------------------------------------------------- commands


def _config(args) -> ExperimentConfig:
    kw = {"seed": args.seed, "output_format": args.format}
    for name in ("n", "shards", "starts"):
        if getattr(args, name, None) is not None:
            kw[name] = getattr(args, name)
    if getattr(args, "R", None) is not None:
        kw["R"] = args.R
    if getattr(args, "beta", None) is not None:
        kw["beta"] = args.beta
    if getattr(args, "da", None) is not None:
        kw["d_a"] = args.da
    if getattr(args, "db", None) is not None:
        kw["db_values"] = tuple(args.db)
        kw["d_b"] = args.db[0]
    if getattr(args, "mu_grid", None) is not None:
        kw["mu_grid"] = tuple(args.mu_grid)
    if getattr(args, "epsilon", None) is not None:
        kw["epsilon"] = args.epsilon
    return ExperimentConfig(**kw)


def _input_state(args):
    if args.state:
        return load_state_file(args.state)
    mu = 0.3 if args.mu is None else args.mu
    return example_state(mu), example_hamiltonian(1.0 if args.R is None else args.R)


def cmd_ergotropy(args) -> int:
    s, h = _input_state(args)
    res = passive_state(s.rho, h)
    rec = {
        "ergotropy": res.ergotropy,
        "energy": res.energy_initial,
        "passive_energy": res.energy_passive,
    }
    if not h.is_interacting:
        rec["ergotropic_gap"] = ergotropic_gap(s, h)
    config = {"state": args.state, "mu": args.mu, "R": args.R}
    if args.format == "json":
        rec["passive_state"] = matrix_to_json(res.passive_state)
    _emit(render([rec], config, args.format), args.out)
    return 0


def cmd_report(args) -> int:
    s, h = _input_state(args)
    config = {"state": args.state, "mu": args.mu, "R": args.R, "beta": args.beta, "seed": args.seed}
    if h.is_interacting:
        t = tilde_contributions(s, h, seed=args.seed)
        rec = {"tilde_T": t.tilde_T, "tilde_D": t.tilde_D, "tilde_E": t.tilde_E}
    else:
        rep = contribution_report(s, h, args.beta, seed=args.seed)
        rec = rep.scalars()
        rec.update({f"flag_{k}": v for k, v in rep.flags.items()})
    _emit(render([rec], config, args.format), args.out)
    return 0


def cmd_fig1(args) -> int:
    cfg = _config(args)
    records, mu_c = run_fig1(cfg)
    config = cfg.echo() | {"mu_c": mu_c}
    _emit(render(records, config, cfg.output_format), args.out)
    return 0


def cmd_fig2(args) -> int:
    cfg = _config(args)
    records = run_fig2(cfg)
    _emit(render(records, cfg.echo(), cfg.output_format), args.out)
    return 0


def cmd_examples(args) -> int:
    cfg = _config(args)
    rows = run_examples(cfg)
    _emit(render(rows, cfg.echo(), cfg.output_format), args.out)
    return 0 if all(r["ok"] for r in rows) else 2


def cmd_selftest(args) -> int:
    """Worked examples plus a small Monte Carlo; exit 2 if any check fails."""
    cfg = ExperimentConfig(seed=args.seed, n=2000, starts=8)
    rows = [{"check": r["name"], "ok": r["ok"], "abs_error": r["abs_error"]} for r in run_examples(cfg)]
    fig2 = run_fig2(ExperimentConfig(seed=args.seed, n=2000, db_values=(2,)))
    rows.append({"check": "no negative delta_C for 2x2", "ok": fig2[0]["negatives"] == 0, "abs_error": 0.0})
    for r in rows:
        print(f"{'PASS' if r['ok'] else 'FAIL'}  {r['check']}", file=sys.stderr)
    _emit(render(rows, {"seed": args.seed}, args.format), args.out)
    return 0 if all(r["ok"] for r in rows) else 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--out", default=None, help="output file (default: stdout)")

    p = _Parser(prog="ergocorr", description="Correlation contributions to ergotropy.")
    sub = p.add_subparsers(dest="command", required=True)

    def state_args(sp):
        sp.add_argument("--state", help="JSON state file (see module docs)")
        sp.add_argument("--mu", type=float, help="two-qubit example parameter when no state file is given")
        sp.add_argument("--R", type=float, help="energy ratio of the example Hamiltonian")

    sp = sub.add_parser("ergotropy", parents=[common], help="ergotropy and passive energy")
    state_args(sp)
    sp.set_defaults(func=cmd_ergotropy)

    sp = sub.add_parser("report", parents=[common], help="all contributions, bounds and residuals")
    state_args(sp)
    sp.add_argument("--beta", type=float)
    sp.set_defaults(func=cmd_report)

    sp = sub.add_parser("fig1", parents=[common], help="two-qubit sweep over mu")
    sp.add_argument("--R", type=float, default=1.0)
    sp.add_argument("--beta", type=float)
    sp.add_argument("--epsilon", type=float, default=1.0)
    sp.add_argument("--mu-grid", type=float, nargs=3, metavar=("START", "STOP", "STEP"))
    sp.add_argument("--starts", type=int, help="discord multistarts per grid point")
    sp.set_defaults(func=cmd_fig1)

    sp = sub.add_parser("fig2", parents=[common], help="probability of negative delta_C")
    sp.add_argument("--n", type=int, default=10**4)
    sp.add_argument("--da", type=int, default=2)
    sp.add_argument("--db", type=int, nargs="+", default=[2, 3, 4, 5, 6])
    sp.add_argument("--shards", type=int, default=1)
    sp.set_defaults(func=cmd_fig2)

    sp = sub.add_parser("examples", parents=[common], help="quoted values against computed ones")
    sp.set_defaults(func=cmd_examples)

    sp = sub.add_parser("selftest", parents=[common], help="quick end-to-end check")
    sp.set_defaults(func=cmd_selftest)
    return p


def _report_error(exc: Exception, code: int) -> int:
    doc = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    if getattr(exc, "field", None):
        doc["field"] = exc.field
    sys.stderr.write(json.dumps(doc) + "\n")
    return code


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except ValidationError as exc:
        return _report_error(exc, 1)
    except NumericalError as exc:
        return _report_error(exc, 2)
    except ErgocorrError as exc:
        return _report_error(exc, 2)


def cli_main(argv: list[str] | None = None) -> int:
    return main(argv)


if __name__ == "__main__":
    sys.exit(main())
