"""Command line front end.

Subcommands cover single-state measurement, regeneration of the two
reference tables, best-separable-approximation runs, the randomised
monotonicity suites, and independent verification of exported witness
files.  All output is assembled in deterministic order: a fixed seed
reproduces results byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import InputError, InvariantBreach
from .mixed import MixedOptions, bsa, schmidt_measure_mixed
from .monotone import (mixing_suite, monotonicity_suite,
                       unitary_invariance_suite)
from .pure import FitOptions, schmidt_measure_pure
from .splits import Split, enumerate_splits, parse_split
from .states import (DensityOperator, Ensemble, PureState, load_state,
                     state_from_dict, state_to_dict)
from . import zoo

TABLE_SPLITS_4 = ("1|2|3|4", "12|3|4", "12|34", "13|24", "123|4")
TABLE_SPLITS_3 = ("1|2|3", "12|3", "13|2", "23|1")


# -- configuration ------------------------------------------------------------

@dataclass(frozen=True)
class RunConfig:
    """Everything one invocation needs, resolved from flags."""

    command: str
    state_path: Optional[str] = None
    zoo_name: Optional[str] = None
    params: tuple = ()
    splits: str = "all"
    tol: float = 1e-6
    seed: int = 0
    fmt: str = "human"
    emit_witness: Optional[str] = None
    witness_path: Optional[str] = None
    seeds: int = 200
    suite: str = "all"
    grid_step: float = 0.1

    def __post_init__(self):
        if self.fmt not in ("human", "json", "csv"):
            raise InputError(f"unknown format {self.fmt!r}")
        if self.tol <= 0:
            raise InputError("tolerance must be positive")
        if self.seeds < 1:
            raise InputError("need at least one seed")
        if not 0.0 < self.grid_step <= 0.5:
            raise InputError("grid step must lie in (0, 0.5]")


_PARAM_ALIASES = {"lambda": "lam", "λ": "lam", "μ": "mu"}


def _parse_params(pairs) -> dict:
    out = {}
    for pair in pairs or ():
        if "=" not in pair:
            raise InputError(f"parameter {pair!r} is not of the form k=v")
        key, raw = pair.split("=", 1)
        key = _PARAM_ALIASES.get(key.strip(), key.strip())
        raw = raw.strip()
        try:
            value = int(raw)
        except ValueError:
            try:
                value = float(raw)
            except ValueError:
                raise InputError(f"parameter {key}={raw!r} is not numeric") \
                    from None
        out[key] = value
    return out


def _load_input(config: RunConfig):
    if (config.state_path is None) == (config.zoo_name is None):
        raise InputError("exactly one of --state and --zoo is required")
    if config.state_path is not None:
        return load_state(config.state_path)
    return zoo.build(config.zoo_name, **dict(config.params))


def _resolve_splits(selector: str, n: int) -> list:
    selector = selector.strip()
    if selector == "all":
        return enumerate_splits(n)
    if selector == "table":
        keys = TABLE_SPLITS_4 if n == 4 else TABLE_SPLITS_3 if n == 3 \
            else None
        if keys is None:
            raise InputError("the table split set is defined for 3 or 4 "
                             "parties")
        return [parse_split(k, n) for k in keys]
    if selector.isdigit():
        k = int(selector)
        if not 2 <= k <= n:
            raise InputError(f"no {k}-block splits of {n} parties")
        return enumerate_splits(n, k=k)
    return [parse_split(token, n) for token in selector.split(",")]


# -- rendering ----------------------------------------------------------------

def value_form(x: float, tol: float = 1e-9) -> str:
    """Exact-looking rendering when one applies: integers, logarithms of
    small integers, and small fractions (as weight.1); six decimals
    otherwise."""
    if abs(x - round(x)) <= tol:
        return str(int(round(x)))
    for r in range(2, 65):
        if abs(x - math.log2(r)) <= tol:
            return f"log2({r})"
    frac = Fraction(x).limit_denominator(12)
    if frac.denominator > 1 and abs(float(frac) - x) <= tol:
        return f"{frac.numerator}/{frac.denominator}·1"
    return f"{x:.6f}"


def _bracket_form(lower: float, upper: float, tol: float = 1e-9) -> str:
    if upper - lower <= tol:
        return value_form(upper)
    return f"[{value_form(lower)}, {value_form(upper)}]"


def _render(rows, columns, fmt: str) -> str:
    if fmt == "json":
        return json.dumps({"rows": rows}, sort_keys=True, indent=2)
    if fmt == "csv":
        sink = io.StringIO()
        writer = csv.DictWriter(sink, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({c: row.get(c, "") for c in columns})
        return sink.getvalue().rstrip("\n")
    cells = [[_human_cell(row.get(c, "")) for c in columns] for row in rows]
    widths = [max(len(c), *(len(line[i]) for line in cells)) if cells
              else len(c) for i, c in enumerate(columns)]
    head = "  ".join(c.ljust(w) for c, w in zip(columns, widths))
    rule = "  ".join("-" * w for w in widths)
    body = ["  ".join(cell.ljust(w) for cell, w in zip(line, widths))
            for line in cells]
    return "\n".join([head, rule] + body)


def _human_cell(value) -> str:
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


# -- witness export and verification ------------------------------------------

def _ensemble_document(ensemble, target) -> dict:
    return {
        "kind": "ensemble",
        "dims": list(ensemble.layout.dims),
        "weights": [float(w) for w in ensemble.weights],
        "states": [[[float(z.real), float(z.imag)] for z in s.amplitudes]
                   for s in ensemble.states],
        "target": state_to_dict(target),
    }


def _decomposition_document(decomposition, psi) -> dict:
    doc = decomposition.to_dict()
    doc["kind"] = "product_decomposition"
    doc["state"] = state_to_dict(psi)
    return doc


def _write_witness(doc: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _verify_decomposition(doc: dict, tol: float) -> tuple:
    """Reassemble a product decomposition from scratch and measure the
    residual against the stored state, without touching the fitting
    code's own assembly helpers."""
    state = state_from_dict(doc["state"])
    if not isinstance(state, PureState):
        raise InputError("product decompositions verify against pure states")
    split = Split(doc["split"], state.layout.n_parties)
    order = split.axes_order()
    target = state.amplitudes.reshape(list(state.layout.dims))
    target = target.transpose(order).reshape(
        [int(np.prod([state.layout.dims[a] for a in block_axes]))
         for block_axes in [[p - 1 for p in b] for b in split.blocks]])
    total = np.zeros_like(target)
    for item in doc["terms"]:
        alpha = complex(item["alpha"][0], item["alpha"][1])
        piece = np.array([1.0 + 0.0j])
        for vec in item["vectors"]:
            factor = np.array([complex(re, im) for re, im in vec])
            piece = np.multiply.outer(piece, factor)
        total = total + alpha * piece.reshape(target.shape)
    residual = float(np.linalg.norm(target - total))
    return residual <= tol, residual, len(doc["terms"])


def _verify_ensemble(doc: dict, tol: float) -> tuple:
    """Reassemble a weighted ensemble and compare with the stored target
    operator, by direct summation."""
    target = state_from_dict(doc["target"])
    rho = target.matrix if isinstance(target, DensityOperator) \
        else np.outer(target.amplitudes, target.amplitudes.conj())
    weights = [float(w) for w in doc["weights"]]
    if any(w <= 0 for w in weights):
        raise InputError("ensemble weights must be positive")
    if abs(sum(weights) - 1.0) > 1e-8:
        raise InputError(f"ensemble weights sum to {sum(weights)!r}")
    d = rho.shape[0]
    acc = np.zeros((d, d), dtype=np.complex128)
    for w, pairs in zip(weights, doc["states"], strict=True):
        amp = np.array([complex(re, im) for re, im in pairs])
        if amp.size != d:
            raise InputError("ensemble member has the wrong dimension")
        nrm = float(np.linalg.norm(amp))
        if abs(nrm - 1.0) > 1e-8:
            raise InputError(f"ensemble member has norm {nrm!r}")
        acc += w * np.outer(amp, amp.conj())
    residual = float(np.linalg.norm(acc - rho))
    return residual <= tol, residual, len(weights)


# -- subcommands ---------------------------------------------------------------

def cmd_measure(config: RunConfig) -> tuple:
    state = _load_input(config)
    n = state.layout.n_parties
    splits = _resolve_splits(config.splits, n)
    fit = FitOptions(seed=config.seed)
    opts = MixedOptions(seed=config.seed, fit=fit)
    pure = isinstance(state, PureState)
    rows = []
    witnesses = []
    for split in splits:
        if pure:
            mv = schmidt_measure_pure(state, split, fit)
            lower, upper = mv.value_lo, mv.value_hi
            witnesses.append(mv.bracket.witness if mv.bracket else None)
        else:
            mv = schmidt_measure_mixed(state, split, opts)
            lower, upper = mv.lower, mv.upper
            witnesses.append(mv.witness)
        rows.append({"split": str(split), "lower": lower, "upper": upper,
                     "exact": upper - lower <= 1e-9,
                     "form": _bracket_form(lower, upper)})
    if config.emit_witness is not None:
        if len(splits) != 1:
            raise InputError("witness export needs exactly one split")
        witness = witnesses[0]
        if witness is None:
            raise InputError("no witness was produced for this input")
        doc = _decomposition_document(witness, state) if pure \
            else _ensemble_document(witness, state)
        _write_witness(doc, config.emit_witness)
    columns = ["split", "lower", "upper", "exact", "form"]
    return 0, _render(rows, columns, config.fmt)


def _table1_rows(seed: int) -> list:
    fit = FitOptions(seed=seed)
    rows = []
    for name, params in (("ghz", {"n": 4}), ("w", {"n": 4}),
                         ("cluster4", {}), ("bell_pair_product", {})):
        psi = zoo.build(name, **params)
        for key in TABLE_SPLITS_4:
            split = parse_split(key, 4)
            mv = schmidt_measure_pure(psi, split, fit)
            rows.append({"state": name, "split": key,
                         "rank_lo": mv.rank_lo, "rank_hi": mv.rank_hi,
                         "value": mv.value_hi, "exact": mv.exact,
                         "form": str(mv)})
    return rows


def cmd_table1(config: RunConfig) -> tuple:
    rows = _table1_rows(config.seed)
    columns = ["state", "split", "rank_lo", "rank_hi", "value", "exact",
               "form"]
    return 0, _render(rows, columns, config.fmt)


def _grid(step: float, upper: float = 1.0) -> list:
    count = int(round(upper / step)) - 1
    return [round(step * i, 10) for i in range(1, count + 1)]


def cmd_table2(config: RunConfig) -> tuple:
    opts = MixedOptions(seed=config.seed, extra_states=2, samples=32,
                        fit=FitOptions(seed=config.seed, max_iters=2500,
                                       restarts=8))
    rows = []

    def add(name, params, label):
        rho = zoo.build(name, **params)
        for key in TABLE_SPLITS_3:
            split = parse_split(key, 3)
            mv = schmidt_measure_mixed(rho, split, opts)
            rows.append({"state": label, "split": key,
                         "lower": mv.lower, "upper": mv.upper,
                         "exact": mv.upper - mv.lower <= 1e-9,
                         "form": _bracket_form(mv.lower, mv.upper)})

    for lam in _grid(config.grid_step):
        add("rho_g", {"lam": lam}, f"rho_g({lam:g})")
    add("rho_m", {}, "rho_m")
    for lam in _grid(config.grid_step):
        for mu in _grid(config.grid_step):
            if lam + mu < 1.0 - 1e-9:
                add("rho_lambda_mu", {"lam": lam, "mu": mu},
                    f"rho({lam:g},{mu:g})")
    open_cells = sum(1 for r in rows if not r["exact"])
    columns = ["state", "split", "lower", "upper", "exact", "form"]
    report = _render(rows, columns, config.fmt)
    if config.fmt == "human":
        report += f"\nopen cells: {open_cells} of {len(rows)}"
    return 0, report


def cmd_bsa(config: RunConfig) -> tuple:
    state = _load_input(config)
    if isinstance(state, PureState):
        state = DensityOperator.from_pure(state)
    n = state.layout.n_parties
    selector = config.splits
    if selector == "all":
        selector = "1|2" if n == 2 else selector
    splits = _resolve_splits(selector, n)
    if len(splits) != 1 or splits[0].k != 2:
        raise InputError("subtraction needs exactly one 2-split")
    split = splits[0]
    opts = MixedOptions(seed=config.seed)
    result = bsa(state, split, opts)
    rows = [{"split": str(split), "weight": result.s,
             "certified": result.certified_feasible,
             "n_products": len(result.separable_part),
             "entangled_weight": 1.0 - result.s}]
    if config.emit_witness is not None:
        members = list(result.separable_part)
        if result.remainder is not None:
            eig = result.remainder.eig_ensemble()
            members.extend(((1.0 - result.s) * w, s)
                           for w, s in zip(eig.weights, eig.states))
        total = sum(w for w, _ in members)
        ensemble = Ensemble(tuple(w / total for w, _ in members),
                            tuple(s for _, s in members))
        _write_witness(_ensemble_document(ensemble, state),
                       config.emit_witness)
    columns = ["split", "weight", "certified", "n_products",
               "entangled_weight"]
    return 0, _render(rows, columns, config.fmt)


def cmd_monotone(config: RunConfig) -> tuple:
    rows = []
    if config.suite in ("monotonicity", "all"):
        for row in monotonicity_suite(seeds=config.seeds):
            rows.append({"suite": "monotonicity", **row})
    if config.suite in ("unitary", "all"):
        for row in unitary_invariance_suite(seeds=min(config.seeds, 5)):
            rows.append({"suite": "unitary", **row})
    if config.suite in ("mixing", "all"):
        for row in mixing_suite():
            rows.append({"suite": "mixing", **row})
    if not rows:
        raise InputError(f"unknown suite {config.suite!r}")
    violations = sum(1 for r in rows if r["verdict"] == "violation")
    if config.fmt == "json":
        return 0, json.dumps({"rows": rows, "violations": violations},
                             sort_keys=True, indent=2)
    columns = sorted({key for row in rows for key in row})
    report = _render(rows, columns, config.fmt)
    if config.fmt == "human":
        report += f"\nviolations: {violations} of {len(rows)} cases"
    return 0, report


def cmd_verify(config: RunConfig) -> tuple:
    try:
        with open(config.witness_path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read witness file: {exc}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"witness file is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise InputError("witness document must be a JSON object")
    kind = doc.get("kind")
    try:
        if kind == "product_decomposition":
            ok, residual, size = _verify_decomposition(doc, config.tol)
        elif kind == "ensemble":
            ok, residual, size = _verify_ensemble(doc, config.tol)
        else:
            raise InputError(f"unknown witness kind {kind!r}")
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed witness document: {exc}") from None
    verdict = "verified" if ok else "failed"
    report = (f"{verdict}: {size} terms, reassembly residual "
              f"{residual:.3e} (tolerance {config.tol:g})")
    return (0, report) if ok else (2, report)


_DISPATCH = {
    "measure": cmd_measure,
    "table1": cmd_table1,
    "table2": cmd_table2,
    "bsa": cmd_bsa,
    "monotone": cmd_monotone,
    "verify": cmd_verify,
}


# -- argument parsing ----------------------------------------------------------

def _add_source_flags(sub):
    sub.add_argument("--state", metavar="FILE",
                     help="JSON state file to load")
    sub.add_argument("--zoo", metavar="NAME",
                     help="built-in state by registry name")
    sub.add_argument("--param", action="append", metavar="K=V",
                     help="zoo builder parameter, repeatable")


def _add_common_flags(sub, default_splits="all"):
    sub.add_argument("--splits", default=default_splits,
                     help="'all', 'table', a block count, or explicit "
                          "splits like 12|3|4 separated by commas")
    sub.add_argument("--tol", type=float, default=1e-6,
                     help="numeric tolerance where one applies")
    sub.add_argument("--seed", type=int, default=0,
                     help="seed for every stochastic component")
    sub.add_argument("--format", default="human",
                     choices=("human", "json", "csv"), dest="fmt",
                     help="output rendering")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="schmidt-measure",
        description="Certified multipartite entanglement measure "
                    "computations, tables and audits.")
    subs = parser.add_subparsers(dest="command", required=True)

    measure = subs.add_parser("measure",
                              help="measure brackets across splits")
    _add_source_flags(measure)
    _add_common_flags(measure)
    measure.add_argument("--emit-witness", metavar="PATH",
                         help="write the witness decomposition as JSON "
                              "(single split only)")

    table1 = subs.add_parser("table1",
                             help="regenerate the four-qubit reference "
                                  "table")
    _add_common_flags(table1)

    table2 = subs.add_parser("table2",
                             help="regenerate the mixed-state reference "
                                  "table on a parameter grid")
    _add_common_flags(table2)
    table2.add_argument("--grid-step", type=float, default=0.1,
                        dest="grid_step",
                        help="parameter grid spacing in (0, 0.5]")

    cbsa = subs.add_parser("bsa",
                           help="best separable approximation across a "
                                "2-split")
    _add_source_flags(cbsa)
    _add_common_flags(cbsa)
    cbsa.add_argument("--emit-witness", metavar="PATH",
                      help="write the subtraction ensemble as JSON")

    mono = subs.add_parser("monotone",
                           help="randomised monotonicity and mixing "
                                "suites")
    _add_common_flags(mono)
    mono.add_argument("--seeds", type=int, default=200,
                      help="random channels per state")
    mono.add_argument("--suite", default="all",
                      choices=("monotonicity", "unitary", "mixing", "all"))

    verify = subs.add_parser("verify",
                             help="independently recheck an exported "
                                  "witness file")
    verify.add_argument("witness", metavar="FILE")
    verify.add_argument("--tol", type=float, default=1e-6)
    verify.add_argument("--format", default="human",
                        choices=("human", "json", "csv"), dest="fmt")

    return parser


def _config_from_args(args) -> RunConfig:
    params = tuple(sorted(_parse_params(
        getattr(args, "param", None)).items()))
    return RunConfig(
        command=args.command,
        state_path=getattr(args, "state", None),
        zoo_name=getattr(args, "zoo", None),
        params=params,
        splits=getattr(args, "splits", "all"),
        tol=getattr(args, "tol", 1e-6),
        seed=getattr(args, "seed", 0),
        fmt=getattr(args, "fmt", "human"),
        emit_witness=getattr(args, "emit_witness", None),
        witness_path=getattr(args, "witness", None),
        seeds=getattr(args, "seeds", 200),
        suite=getattr(args, "suite", "all"),
        grid_step=getattr(args, "grid_step", 0.1),
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _config_from_args(args)
        code, report = _DISPATCH[config.command](config)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InvariantBreach as exc:
        print(f"internal invariant breached: {exc}", file=sys.stderr)
        return 3
    if report:
        print(report)
    return code


if __name__ == "__main__":
    sys.exit(main())
