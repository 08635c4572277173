"""twinspin command-line interface.

Usage:
    twinspin ck-table [--frame-a F] [--frame-b F]
    twinspin zones [--frame-a F] [--frame-b F] [--t1 T --t2 T --tau T]
    twinspin twin-circuit --variant {mm,mmc,xx,xxcf,mmw} [--frame F] [--w W] [--replicas M]
    twinspin decompose [--state upsilon]
    twinspin signed-sim [--trials N] [--seed S] [--workers K]
    twinspin roulette [--probs P1,P2,P3,P4] [--trials N]
    twinspin chain [--order A-first] [--trials N]
    twinspin ks-check [--file PATH]

Frames are nine numbers, rows separated by ``;`` (``"1,0,0; 0,1,0; 0,0,1"``),
or ``@path`` naming a direction-set file with three directions. Every
subcommand accepts ``--seed``, ``--trials``, ``--format {json,csv}`` and
``--tolerance``. Exit status: 0 success, 2 invalid input, 1 internal error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from .config import override
from .errors import ValidationError
from .hilbert import DensityOperator, basis, tensor
from .measure import JointDistribution, ProjectiveMeasurement, Zone, q_matrix, zone_of, zone_state
from .network import (
    VARIANTS,
    branches,
    fidelity,
    n_index,
    probability_of,
    reference_state,
    run_twin_circuit,
)
from .roulette import build_roulette, chain_samples, chain_tables, spin
from .signed import DEFAULT_SEED, counter_expectations, decompose, simulate, split, xi_basis
from .spin1 import Direction, Frame, ck_table, frame_basis, upsilon
from .spin1.kochen_specker import direction_list, ks_satisfiable, load_direction_set, peres33

SCHEMA = 1
FRAME_SNAP = 1e-3  # typed frames such as ".7071" are snapped to the nearest rotation

Report = tuple[dict[str, Any], list[list[Any]]]


def parse_frame(text: str) -> Frame:
    if text.startswith("@"):
        rows = direction_list(text[1:])
        if len(rows) != 3:
            raise ValidationError(f"frame file must list exactly 3 directions, found {len(rows)}")
    else:
        rows = []
        for part in text.split(";"):
            nums = part.replace(",", " ").split()
            if nums:
                try:
                    rows.append([float(x) for x in nums])
                except ValueError:
                    raise ValidationError(f"malformed frame {text!r}") from None
        if len(rows) != 3 or any(len(r) != 3 for r in rows):
            raise ValidationError(f"frame needs 3 rows of 3 numbers: {text!r}")
    return Frame.from_rows(rows, snap=FRAME_SNAP)


def parse_direction(text: str, F: Frame) -> Direction:
    key = text.strip().lower()
    if key in ("x", "y", "z"):
        return Direction(F.rows["xyz".index(key)])
    try:
        nums = [float(x) for x in text.replace(",", " ").split()]
    except ValueError:
        raise ValidationError(f"malformed direction {text!r}") from None
    if len(nums) != 3:
        raise ValidationError(f"direction needs 3 numbers: {text!r}")
    return Direction.normalize(nums)


def _state(name: str) -> DensityOperator:
    if name == "upsilon":
        return DensityOperator.from_state(upsilon())
    if name == "maximally-mixed":
        return DensityOperator.from_matrix((3, 3), np.eye(9) / 9)
    if name.startswith("product:"):
        try:
            k, j = (int(x) for x in name.split(":", 1)[1].split(","))
        except ValueError:
            raise ValidationError(f"product state needs 'product:K,J', got {name!r}") from None
        xb = xi_basis()
        if not (1 <= k <= 9 and 1 <= j <= 9):
            raise ValidationError("product indices run from 1 to 9")
        return DensityOperator.from_state(tensor(xb.states[k - 1], xb.states[j - 1]))
    raise ValidationError(f"unknown state {name!r}")


def _mat(m: np.ndarray) -> Any:
    m = np.asarray(m)
    m = np.where(np.abs(m) < 1e-15, 0, m)  # rounding debris such as 4e-33
    if np.iscomplexobj(m):
        if np.allclose(m.imag, 0, atol=1e-15):
            return m.real.tolist()
        return {"re": m.real.tolist(), "im": m.imag.tolist()}
    return m.tolist()


def _matrix_rows(name: str, m: np.ndarray) -> list[list[Any]]:
    rows = [["table", "row", "col", "value"]]
    for (i, j), v in np.ndenumerate(np.asarray(m)):
        rows.append([name, i, j, float(np.real(v))])
    return rows


# ---- subcommands -------------------------------------------------------------


def cmd_ck_table(args) -> Report:
    FA, FB = parse_frame(args.frame_a), parse_frame(args.frame_b)
    table = ck_table(FA, FB)
    basisA, basisB = frame_basis(FA), frame_basis(FB)
    q = q_matrix(upsilon(), basisA, basisB)
    agree = float(np.max(np.abs(q.probs - table.probs)))
    impossible = [[i, j] for (i, j), p in np.ndenumerate(table.probs) if p <= 1e-12]
    result = {
        "table": _mat(table.probs),
        "row_sums": _mat(table.probs.sum(axis=1)),
        "col_sums": _mat(table.probs.sum(axis=0)),
        "impossible_pairs": impossible,
        "q_matrix_max_difference": agree,
    }
    return result, _matrix_rows("ck_table", table.probs)


def cmd_zones(args) -> Report:
    FA, FB = parse_frame(args.frame_a), parse_frame(args.frame_b)
    psi = upsilon() if args.state == "upsilon" else tensor(basis(3, 0), basis(3, 1))
    mA = ProjectiveMeasurement.from_basis(frame_basis(FA))
    mB = ProjectiveMeasurement.from_basis(frame_basis(FB))
    q = q_matrix(psi, frame_basis(FA), frame_basis(FB))
    zones = {}
    for z in Zone:
        rho = zone_state(psi, mA, mB, z)
        zones[z.value] = {"rho": _mat(rho.matrix), "purity": float(rho.purity())}
    result: dict[str, Any] = {"q_matrix": _mat(q.probs), "zones": zones}
    if args.t1 is not None or args.t2 is not None:
        if args.t1 is None or args.t2 is None:
            raise ValidationError("--t1 and --t2 must be given together")
        z = zone_of(args.t1, args.t2, args.tau)
        result["zone_at"] = {"t1": args.t1, "t2": args.t2, "tau": args.tau, "zone": z.value}
    return result, _matrix_rows("q_matrix", q.probs)


def cmd_twin_circuit(args) -> Report:
    F = parse_frame(args.frame)
    w = parse_direction(args.w, F) if args.w is not None else None
    variant = args.variant
    if variant == "mmw" and w is None:
        raise ValidationError("--variant mmw needs --w")
    compare = variant == "mmw" and n_index(F, w) >= 0 and args.replicas == 1
    reg = run_twin_circuit(variant, F, w, compare=compare, replicas=args.replicas, limit=args.limit)
    result: dict[str, Any] = {
        "variant": variant,
        "subsystems": list(reg.names),
        "dims": list(reg.dims),
    }
    if args.replicas == 1:
        ref = reference_state(variant, F, w)
        state = reg.state
        if compare:
            # the comparison qubit factors out as |0>; compare the rest
            result["comparison_qubit_zero_probability"] = round(probability_of(reg, "cmp", 0), 12)
            (only,) = branches(reg, ["cmp"])
            state = only.relative_state
        result["fidelity"] = round(fidelity(ref, state), 12)
    if variant in ("mmc", "xxcf"):
        p0 = probability_of(reg, "carB" if args.replicas == 1 else "carB.0", 0)
        result["comparison_register"] = "|0>" if abs(p0 - 1) <= 1e-10 else "mixed"
        result["comparison_zero_probability"] = round(p0, 12)
    carriers = [n for n in reg.names if n.startswith("car")]
    rows = [["label", "weight"]]
    listing = []
    for br in branches(reg, carriers):
        listing.append({"label": list(br.label), "weight": round(br.weight, 12)})
        rows.append([" ".join(map(str, br.label)), round(br.weight, 12)])
    result["carriers"] = carriers
    result["branches"] = listing
    return result, rows


def cmd_decompose(args) -> Report:
    d = decompose(_state(args.state))
    src = split(d)
    terms = [{"k": k, "j": j, "lambda": lam} for lam, k, j in d.terms]
    result = {
        "state": args.state,
        "kappa": d.kappa,
        "n_plus": src.n_plus,
        "n_minus": src.n_minus,
        "n_terms": len(d.terms),
        "residual": d.residual,
        "table": _mat(d.table()),
        "terms": terms,
    }
    rows = [["k", "j", "lambda"]] + [[k, j, lam] for lam, k, j in d.terms]
    return result, rows


def cmd_signed_sim(args) -> Report:
    rho = _state(args.state)
    d = decompose(rho)
    FA, FB = parse_frame(args.frame_a), parse_frame(args.frame_b)
    bA, bB = frame_basis(FA), frame_basis(FB)
    trials = args.trials if args.trials is not None else 10**6
    res = simulate(d, bA, bB, trials, seed=args.seed, workers=args.workers)
    exp = counter_expectations(d, bA, bB)
    exact = exp.probabilities
    est = res.estimate
    negatives = [[i, j, float(est[i, j])] for (i, j), v in np.ndenumerate(est) if v < 0]
    result = {
        "trials": trials,
        "kappa": res.kappa,
        "n_plus_counts": _mat(res.tally.nplus),
        "n_minus_counts": _mat(res.tally.nminus),
        "net_counts": _mat(res.tally.net),
        "estimate": _mat(est),
        "exact": _mat(exact),
        "max_abs_error": res.error(exact),
        "negative_cells": negatives,
        "expected_n_plus": _mat(exp.plus),
        "expected_n_minus": _mat(exp.minus),
    }
    rows = [["row", "col", "estimate", "exact", "n_plus", "n_minus"]]
    for (i, j), v in np.ndenumerate(est):
        rows.append([i, j, float(v), float(exact[i, j]), int(res.tally.nplus[i, j]), int(res.tally.nminus[i, j])])
    return result, rows


def cmd_roulette(args) -> Report:
    if args.probs:
        try:
            p = [float(x) for x in args.probs.split(",")]
        except ValueError:
            raise ValidationError(f"malformed --probs {args.probs!r}") from None
        side = math.isqrt(len(p))
        if side * side != len(p):
            raise ValidationError("--probs needs a square number of entries")
        labels = (1, -1) if side == 2 else tuple(range(side))
        dist = JointDistribution(np.array(p).reshape(side, side), labels, labels)
    else:
        dist = ck_table(parse_frame(args.frame_a), parse_frame(args.frame_b))
    r = build_roulette(dist)
    trials = args.trials if args.trials is not None else 10**5
    rng = np.random.default_rng(args.seed)
    phis = rng.random(trials) * 2 * math.pi
    idx = {lab: i for i, lab in enumerate(r.labels)}
    counts = np.zeros(len(r.sectors), dtype=int)
    for phi in phis:
        counts[idx[spin(r, float(phi))]] += 1
    sectors = [
        {"label": list(lab), "width": w, "frequency": counts[i] / trials}
        for i, (lab, w) in enumerate(r.sectors)
    ]
    rows = [["a", "b", "width", "frequency"]] + [
        [lab[0], lab[1], w, counts[i] / trials] for i, (lab, w) in enumerate(r.sectors)
    ]
    return {"trials": trials, "sectors": sectors}, rows


def cmd_chain(args) -> Report:
    FA, FB = parse_frame(args.frame_a), parse_frame(args.frame_b)
    psi = upsilon()
    bA, bB = frame_basis(FA), frame_basis(FB)
    trials = args.trials if args.trials is not None else 10**5
    a, b = chain_samples(psi, bA, bB, args.order, trials, args.seed)
    freq = np.bincount(a * 3 + b, minlength=9).reshape(3, 3) / trials
    joint, _, _ = chain_tables(psi, bA, bB)
    result = {
        "order": args.order,
        "trials": trials,
        "frequencies": _mat(freq),
        "exact": _mat(joint),
        "max_abs_error": float(np.max(np.abs(freq - joint))),
    }
    return result, _matrix_rows("frequency", freq)


def cmd_ks_check(args) -> Report:
    ts = load_direction_set(args.file) if args.file else peres33()
    res = ks_satisfiable(ts, orthogonal_pairs=not args.triples_only)
    result = {
        "source": args.file or "bundled:peres33 (external data)",
        "directions": ts.size,
        "triples": len(ts.triples),
        "orthogonal_pairs_rule": not args.triples_only,
        "satisfiable": res.satisfiable,
        "search_nodes": res.nodes,
        "assignment": None if res.assignment is None else [res.assignment[i] for i in range(ts.size)],
    }
    rows = [["directions", "triples", "satisfiable", "search_nodes"],
            [ts.size, len(ts.triples), res.satisfiable, res.nodes]]
    return result, rows


COMMANDS: dict[str, tuple[Callable[[argparse.Namespace], Report], str]] = {
    "ck-table": (cmd_ck_table, "zone-IV outcome table for two frames"),
    "zones": (cmd_zones, "density operators of the four clock zones and the q matrix"),
    "twin-circuit": (cmd_twin_circuit, "no-collapse measurement circuits"),
    "decompose": (cmd_decompose, "signed product decomposition of a two-qutrit state"),
    "signed-sim": (cmd_signed_sim, "Monte-Carlo counter model"),
    "roulette": (cmd_roulette, "nonlocal roulette sampler"),
    "chain": (cmd_chain, "conditional-chain sampler"),
    "ks-check": (cmd_ks_check, "Kochen-Specker colourability of a direction set"),
}

IDENTITY = "1,0,0; 0,1,0; 0,0,1"
PRIMED = "0,1,0; 0.7071067811865476,0,0.7071067811865476; 0.7071067811865476,0,-0.7071067811865476"


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help=f"RNG seed (default {DEFAULT_SEED})")
    common.add_argument("--trials", type=int, default=None, help="sample count where applicable")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--tolerance", type=float, default=None, help="algebraic tolerance override")
    common.add_argument("-o", "--output", default=None, help="write the report here instead of stdout")

    p = argparse.ArgumentParser(prog="twinspin", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"twinspin {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    parsers = {}
    for name, (_, help_) in COMMANDS.items():
        parsers[name] = sub.add_parser(name, parents=[common], help=help_)

    for name in ("ck-table", "zones", "signed-sim", "chain", "roulette"):
        parsers[name].add_argument("--frame-a", default=IDENTITY)
    for name in ("ck-table", "zones", "chain", "roulette"):
        parsers[name].add_argument("--frame-b", default=PRIMED)
    parsers["signed-sim"].add_argument("--frame-b", default=IDENTITY)

    z = parsers["zones"]
    z.add_argument("--state", choices=("upsilon", "product"), default="upsilon")
    z.add_argument("--t1", type=float)
    z.add_argument("--t2", type=float)
    z.add_argument("--tau", type=float, default=1.0)

    t = parsers["twin-circuit"]
    t.add_argument("--variant", choices=VARIANTS, required=True)
    t.add_argument("--frame", default=IDENTITY)
    t.add_argument("--w", default=None, help="direction for mmw: x, y, z or three numbers")
    t.add_argument("--replicas", type=int, default=1)
    t.add_argument("--limit", type=int, default=3**10, help="register dimension bound")

    for name in ("decompose", "signed-sim"):
        parsers[name].add_argument(
            "--state", default="upsilon", help="upsilon, maximally-mixed or product:K,J"
        )
    parsers["signed-sim"].add_argument("--workers", type=int, default=1)

    parsers["roulette"].add_argument("--probs", default=None, help="row-major joint probabilities")
    parsers["chain"].add_argument("--order", choices=("A-first", "B-first"), default="A-first")

    ks = parsers["ks-check"]
    ks.add_argument("--file", default=None, help="direction-set file (default: bundled Peres 33)")
    ks.add_argument("--triples-only", action="store_true", help="drop the orthogonal-pair rule")
    return p


def _config_echo(args: argparse.Namespace) -> dict[str, Any]:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("output",)}


def render(args: argparse.Namespace, result: dict[str, Any], rows: list[list[Any]]) -> str:
    if args.format == "json":
        doc = {
            "schema": SCHEMA,
            "version": __version__,
            "command": args.command,
            "config": _config_echo(args),
            "result": result,
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    buf.write(f"# schema={SCHEMA} version={__version__} command={args.command}\n")
    for k, v in _config_echo(args).items():
        buf.write(f"# {k}={v}\n")
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    fn = COMMANDS[args.command][0]
    try:
        if args.trials is not None and args.trials < 1:
            raise ValidationError("--trials must be >= 1")
        if args.tolerance is not None:
            if args.tolerance <= 0:
                raise ValidationError("--tolerance must be positive")
            with override(algebraic=args.tolerance):
                result, rows = fn(args)
        else:
            result, rows = fn(args)
        text = render(args, result, rows)
    except ValidationError as exc:
        print(f"twinspin: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"twinspin: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
