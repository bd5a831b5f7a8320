"""Command-line entry point: ``monodic <command> [options] FILE``.

Exit status: 0 satisfiable, saturated or success; 1 unsatisfiable (or a
model that fails its problem); 2 usage or input error; 3 resource limit.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from typing import Optional

from .clauses import SchemeLimitExceeded, scheme_vocabulary
from .dsnf import DsnfError, ReductionLimit, flood_constants, reduce_extended, to_dsnf
from .graph import build, decide
from .loops import Loop, LoopLimit, bfs_loop, bfs_loop_ground
from .models import ModelError, check_problem, format_model, parse_model
from .oracle import OracleBudgetExceeded, OracleError
from .parser import ParseError, looks_like_problem, parse_formula, parse_problem
from .printer import problem_to_text, to_text
from .problem import ExtendedProblem, ProblemError, RenamingLedger, TemporalProblem
from .prover import Verdict, prove
from .quotient import QuotientOracle

COMMANDS = ("dsnf", "prove", "decide", "graph", "loop", "check-model")
EXIT_OK, EXIT_UNSAT, EXIT_USAGE, EXIT_LIMIT = 0, 1, 2, 3


class UsageError(Exception):
    pass


@dataclass
class JobConfig:
    command: str
    semantics: str = "constant"
    flood: bool = True
    max_iter: int = 1000
    max_schemes: int = 1 << 16
    oracle_budget: Optional[int] = None
    format: str = "text"
    trace: bool = False
    eventuality: Optional[int] = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command}")
        for name in ("max_iter", "max_schemes", "oracle_budget"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise UsageError(f"--{name.replace('_', '-')} must be positive")
        if self.format == "dot" and self.command not in ("graph", "decide"):
            raise UsageError("dot output is only available for graph and decide")


def load_problem(path: str, semantics: str = "constant") -> tuple:
    """Read a problem file and bring it to a plain problem; returns it with its renaming ledger."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"{path}: {exc.strerror}") from None
    ledger = RenamingLedger()
    if path.endswith(".fotl") or not looks_like_problem(text):
        res = to_dsnf(parse_formula(text), semantics, ledger)
        return res.problem, res.ledger
    p = parse_problem(text, semantics)
    if isinstance(p, ExtendedProblem):
        p = reduce_extended(p, ledger)
    return p, ledger


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _require_monadic(p: TemporalProblem):
    if not p.signature.is_monadic():
        raise UsageError("this command needs a monadic problem")


def run_dsnf(cfg: JobConfig, p: TemporalProblem, ledger: RenamingLedger) -> tuple:
    if cfg.format == "structured":
        return EXIT_OK, _dump({
            "semantics": p.semantics.value,
            "universal": [to_text(f) for f in p.universal],
            "initial": [to_text(f) for f in p.initial],
            "step": [str(s) for s in p.step],
            "eventuality": [str(e) for e in p.eventuality],
            "renamings": ledger.lines(),
        })
    out = problem_to_text(p)
    if ledger.lines():
        out += "".join(f"# {line}\n" for line in ledger.lines())
    return EXIT_OK, out


def run_prove(cfg: JobConfig, p: TemporalProblem) -> tuple:
    d = prove(p, flood=cfg.flood, max_iter=cfg.max_iter, max_schemes=cfg.max_schemes,
              oracle_budget=cfg.oracle_budget, induction=cfg.trace)
    if cfg.format == "structured":
        out = d.to_jsonl()
    else:
        out = d.text() + "\n"
        if cfg.trace:
            lines = []
            for i, s in enumerate(d.steps):
                for c in s.side_conditions:
                    base = "U+I" if c.initial else f"U{s.universal_index}"
                    status = "sat" if c.satisfiable else "unsat"
                    lines.append(f"  step {i + 1}: {base} with {to_text(c.query)}: {status}")
                if s.loop is not None:
                    lines.append(f"  step {i + 1}: loop formula {to_text(s.loop)}")
            out += "".join(line + "\n" for line in lines)
    code = {Verdict.UNSATISFIABLE: EXIT_UNSAT, Verdict.SATURATED: EXIT_OK, Verdict.RESOURCE_LIMIT: EXIT_LIMIT}
    return code[d.verdict], out


def run_decide(cfg: JobConfig, p: TemporalProblem) -> tuple:
    _require_monadic(p)
    stats = {"budget": cfg.oracle_budget} if cfg.oracle_budget else {}
    dec = decide(p, flood=cfg.flood, limit=cfg.max_schemes, stats=stats)
    code = EXIT_OK if dec.satisfiable else EXIT_UNSAT
    if cfg.format == "dot":
        g = dec.graph
        return code, g.to_dot(set(range(len(g))) - dec.alive)
    if cfg.format == "structured":
        g = dec.graph
        return code, _dump({
            "verdict": dec.verdict,
            "reason": dec.reason,
            "vertices": [g.name(v) for v in range(len(g))],
            "deleted": [{"vertex": g.name(v), "reason": why} for v, why in dec.deletions],
            "alive": [g.name(v) for v in sorted(dec.alive)],
        })
    return code, dec.certificate() + "\n"


def run_graph(cfg: JobConfig, p: TemporalProblem) -> tuple:
    _require_monadic(p)
    stats = {"budget": cfg.oracle_budget} if cfg.oracle_budget else {}
    g = build(flood_constants(p) if cfg.flood else p, cfg.max_schemes, stats)
    if cfg.format == "dot":
        return EXIT_OK, g.to_dot()
    rows = [(g.name(v), str(g.vertices[v]), v in g.initial, [g.name(w) for w in g.edges.get(v, ())])
            for v in range(len(g))]
    if cfg.format == "structured":
        return EXIT_OK, _dump([{"vertex": n, "scheme": s, "initial": i, "successors": e} for n, s, i, e in rows])
    out = [f"{n}{' (initial)' if i else ''}: {s} -> {' '.join(e) or '-'}" for n, s, i, e in rows]
    return EXIT_OK, "\n".join(out) + "\n"


def run_loop(cfg: JobConfig, p: TemporalProblem) -> tuple:
    _require_monadic(p)
    evs = list(p.eventuality)
    if cfg.eventuality is not None:
        if not 1 <= cfg.eventuality <= len(evs):
            raise UsageError(f"--eventuality must be between 1 and {len(evs)}")
        evs = [evs[cfg.eventuality - 1]]
    q = QuotientOracle(p.universal, *scheme_vocabulary(p))
    results = []
    try:
        for e in evs:
            search = bfs_loop_ground if e.ground else bfs_loop
            results.append((e, search(p, e, q, max_iter=cfg.max_iter)))
    finally:
        q.close()
    if cfg.format == "structured":
        return EXIT_OK, _dump([{
            "eventuality": str(e),
            "loop": to_text(r.formula) if isinstance(r, Loop) else None,
            "iterations": [{"iteration": s.iteration, "formula": to_text(s.formula), "candidates": s.candidates,
                            "kept": [str(c) for c in s.clauses]} for s in r.iterations],
        } for e, r in results])
    lines = []
    for e, r in results:
        lines.append(f"eventuality {e}")
        for s in r.iterations:
            lines.append(f"  H{s.iteration} = {to_text(s.formula)} ({len(s.clauses)} of {s.candidates} clauses)")
            if cfg.trace:
                lines += [f"    {c}" for c in s.clauses]
        lines.append(f"  loop: {to_text(r.formula)}" if isinstance(r, Loop) else "  no loop")
    return EXIT_OK, "\n".join(lines) + "\n"


def run_check_model(cfg: JobConfig, p: TemporalProblem, model_path: str) -> tuple:
    try:
        with open(model_path, encoding="utf-8") as fh:
            m = parse_model(fh.read())
    except OSError as exc:
        raise UsageError(f"{model_path}: {exc.strerror}") from None
    if m.semantics.value != p.semantics.value:
        raise UsageError(f"model semantics {m.semantics.value} differs from --semantics {p.semantics.value}")
    res = check_problem(m, p)
    if cfg.format == "structured":
        return (EXIT_OK if res else EXIT_UNSAT), _dump({"holds": res.ok, "failing": res.failing})
    out = "model satisfies the problem\n" if res else f"model fails: {res.failing}\n"
    if cfg.trace:
        out += format_model(m)
    return (EXIT_OK if res else EXIT_UNSAT), out


def run(cfg: JobConfig, inputs: list) -> tuple:
    """Execute one job; returns (exit status, standard output text)."""
    need = 2 if cfg.command == "check-model" else 1
    if len(inputs) != need:
        raise UsageError(f"{cfg.command} takes {need} input file{'s' if need > 1 else ''}")
    p, ledger = load_problem(inputs[0], cfg.semantics)
    if cfg.command == "dsnf":
        return run_dsnf(cfg, p, ledger)
    if cfg.command == "prove":
        return run_prove(cfg, p)
    if cfg.command == "decide":
        return run_decide(cfg, p)
    if cfg.command == "graph":
        return run_graph(cfg, p)
    if cfg.command == "loop":
        return run_loop(cfg, p)
    return run_check_model(cfg, p, inputs[1])


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="monodic", description="Temporal resolution for monodic first-order temporal logic.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("inputs", nargs="+", metavar="FILE", help="problem file (.tp) or formula (.fotl); check-model also takes a model file")
    ap.add_argument("--semantics", choices=("constant", "expanding"), default="constant")
    ap.add_argument("--no-flood", dest="flood", action="store_false", help="skip constant flooding")
    ap.add_argument("--max-iter", type=int, default=1000, help="prover rounds or loop-search iterations")
    ap.add_argument("--max-schemes", type=int, default=1 << 16, help="colour-scheme cap")
    ap.add_argument("--oracle-budget", type=int, default=None, help="cap on first-order oracle calls")
    ap.add_argument("--out", default=None, metavar="PATH", help="write the result here instead of standard output")
    ap.add_argument("--format", choices=("text", "structured", "dot"), default="text")
    ap.add_argument("--dot", action="store_const", const="dot", dest="format", help="same as --format dot")
    ap.add_argument("--trace", action="store_true", help="include side conditions and loop-search detail")
    ap.add_argument("--eventuality", type=int, default=None, help="loop: only the N-th eventuality (1-based)")
    return ap


def main(argv: Optional[list] = None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = JobConfig(args.command, args.semantics, args.flood, args.max_iter, args.max_schemes,
                        args.oracle_budget, args.format, args.trace, args.eventuality)
        code, out = run(cfg, args.inputs)
    except (UsageError, ParseError, ProblemError, DsnfError, ModelError, OracleError) as exc:
        if isinstance(exc, OracleBudgetExceeded):
            print(f"monodic: resource limit: {exc}", file=sys.stderr)
            return EXIT_LIMIT
        print(f"monodic: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SchemeLimitExceeded, LoopLimit, ReductionLimit) as exc:
        print(f"monodic: resource limit: {exc}", file=sys.stderr)
        return EXIT_LIMIT
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)
    return code


if __name__ == "__main__":
    sys.exit(main())
