"""Command-line entry point: run, baseline, simulate, ablate, report."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .backends.chat import HttpChatClient
from .backends.oracle import OracleWorld, OracleWorldConfig
from .backends.retrieval import HttpRetriever, LocalCorpus
from .backends.scripted import ScriptedWorld
from .baseline import run_baseline_with
from .config import ConfigError, LoadedConfig, RunConfig, load_config
from .engine import make_policy, search
from .reporting import aggregate, read_reports, write_reports
from .simulation import SweepSpec, not_below, run_sweep, sweep_document

log = logging.getLogger("budgettree")

ABLATION_MODES = {
    "full": {},
    "no-budget": {"use_budget": False},
    "no-value": {"use_value": False},
    "no-value-no-budget": {"use_value": False, "use_budget": False},
    "baseline": None,
}


def read_dataset(path: str | Path) -> list[dict]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh):
            if not line.strip():
                continue
            rec = json.loads(line)
            if "question" not in rec:
                raise ValueError(f"{path}:{i + 1}: record has no 'question'")
            golds = rec.get("golds", rec.get("answers", []))
            if isinstance(golds, str):
                golds = [golds]
            out.append({"id": str(rec.get("id", i)), "question": rec["question"], "golds": list(golds)})
    return out


def _parse_sets(pairs: list[str]) -> dict[str, str]:
    out = {}
    for pair in pairs or []:
        key, sep, value = pair.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {pair!r}")
        out[key.strip()] = value.strip()
    return out


def _overrides(args) -> dict:
    ov = _parse_sets(getattr(args, "set", None))
    for flag, key in (("tier", "tier"), ("family", "family"), ("seed", "seed"), ("n_max", "n_max"),
                      ("alpha_max", "alpha_max"), ("tau", "tau"), ("eta", "eta")):
        value = getattr(args, flag, None)
        if value is not None:
            ov[key] = value
    if getattr(args, "no_value", False):
        ov["use_value"] = False
    if getattr(args, "no_budget", False):
        ov["use_budget"] = False
    if getattr(args, "no_planner", False):
        ov["planner_enabled"] = False
    return ov


class Backends:
    """Builds one policy per question for the selected backend kind."""

    def __init__(self, kind: str, loaded: LoadedConfig, args):
        self.kind = kind
        self.loaded = loaded
        b = loaded.backends
        corpus = getattr(args, "corpus", None) or b.get("corpus")
        self.script = getattr(args, "script", None) or b.get("script")
        self.retriever = None
        self.chat = None
        if kind in ("live", "scripted"):
            if corpus:
                self.retriever = LocalCorpus.from_jsonl(corpus)
            elif kind == "live":
                self.retriever = HttpRetriever(b.get("retrieval_url"))
            else:
                raise ConfigError("the scripted backend needs --corpus")
        if kind == "live":
            self.chat = HttpChatClient(b.get("chat_url"), b.get("api_key"), b.get("model"))
        if kind == "scripted" and not self.script:
            raise ConfigError("the scripted backend needs --script")

    def policy(self, config: RunConfig):
        if self.kind == "oracle":
            return OracleWorld(OracleWorldConfig(), seed=config.seed)
        chat = self.chat if self.kind == "live" else ScriptedWorld.from_file(self.script)
        return make_policy(chat, self.retriever, config)


def _run_dataset(args, method_overrides: dict | None, baseline: bool, loaded: LoadedConfig, backends: Backends):
    items = read_dataset(args.dataset)
    dataset_name = Path(args.dataset).stem
    base = loaded.run.replace(**(method_overrides or {}))
    dump_dir = Path(args.dump_tree) if getattr(args, "dump_tree", None) else None
    if dump_dir:
        dump_dir.mkdir(parents=True, exist_ok=True)

    def one(index: int):
        item = items[index]
        config = base.replace(seed=base.seed + index)
        policy = backends.policy(config)
        kwargs = dict(question_id=item["id"], golds=item["golds"] or None, pricing=loaded.pricing, dataset=dataset_name)
        if baseline:
            return run_baseline_with(item["question"], config, policy, **kwargs).report
        result = search(item["question"], config, policy, **kwargs)
        if dump_dir:
            result.tree.dump(dump_dir / f"{item['id']}.tree.jsonl")
        return result.report

    if args.workers > 1:
        with ThreadPoolExecutor(args.workers) as pool:
            return list(pool.map(one, range(len(items))))
    return [one(i) for i in range(len(items))]


def _load(args) -> LoadedConfig:
    return load_config(args.config, _overrides(args))


def cmd_run(args, baseline: bool = False) -> int:
    loaded = _load(args)
    backends = Backends(args.backend, loaded, args)
    reports = _run_dataset(args, None, baseline, loaded, backends)
    write_reports(reports, args.out)
    failed = sum(r.failed for r in reports)
    print(f"wrote {len(reports)} reports to {args.out}" + (f" ({failed} failed)" if failed else ""))
    return 1 if failed else 0


def cmd_ablate(args) -> int:
    loaded = _load(args)
    backends = Backends(args.backend, loaded, args)
    modes = args.modes.split(",")
    all_reports = []
    for mode in modes:
        if mode not in ABLATION_MODES:
            raise ConfigError(f"unknown ablation mode {mode!r}; choose from {', '.join(ABLATION_MODES)}")
        ov = ABLATION_MODES[mode]
        reports = _run_dataset(args, ov or {}, ov is None, loaded, backends)
        for r in reports:
            r.method = "baseline" if ov is None else f"bavt:{mode}"
        all_reports.extend(reports)
    write_reports(all_reports, args.out)
    summary = aggregate(all_reports)
    csv_path, json_path = summary.write(Path(args.out).with_suffix(".summary"))
    print(summary.to_csv(), end="")
    print(f"wrote {len(all_reports)} reports to {args.out}; summary in {csv_path} and {json_path}")
    return 1 if any(r.failed for r in all_reports) else 0


def cmd_report(args) -> int:
    reports = []
    for path in args.reports:
        reports.extend(read_reports(path))
    summary = aggregate(reports)
    csv_path, json_path = summary.write(args.out)
    print(summary.to_csv(), end="")
    print(f"summary written to {csv_path} and {json_path}")
    return 0


def _budget_points(text: str) -> list:
    out = []
    for part in text.split(","):
        part = part.strip()
        out.append("M" if part.upper() == "M" else int(part))
    return out


def cmd_simulate(args) -> int:
    world = OracleWorldConfig(
        delta_per_oracle_step=args.delta,
        off_path_delta=args.off_path_delta,
        step_tokens=args.step_tokens,
    )
    spec = SweepSpec(
        budgets=_budget_points(args.budgets),
        trials=args.trials,
        eps=args.eps,
        tau=args.tau,
        n_max=args.n_max,
        alpha_max=args.alpha_max,
        base_seed=args.seed,
        world=world,
    )
    bound = spec.bound()
    print(f"analytic: K={bound.k} p_min={bound.p_min:.3e} M={bound.m:.4e} (eps={bound.eps})")
    points = run_sweep(spec)
    for p in points:
        budget = "M" if p.budget == bound.budget else p.budget
        verdict = ""
        if p.budget >= bound.m:
            verdict = "  ok" if not_below(p.successes, p.trials, 1 - spec.eps) else "  BELOW 1-eps"
        print(f"budget={budget:>6} success={p.rate:.3f} 95%CI=[{p.ci_low:.3f}, {p.ci_high:.3f}]{verdict}")
    Path(args.out).write_text(sweep_document(spec, points), encoding="utf-8")
    print(f"sweep results written to {args.out}")
    return 0


def _common(p: argparse.ArgumentParser, *, dataset: bool = True) -> None:
    p.add_argument("--config", default=None, help="INI configuration file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override any RunConfig or PricingModel field; repeatable")
    p.add_argument("--seed", type=int, default=None, help="base seed; question i uses seed+i (config default 0)")
    p.add_argument("--n-max", dest="n_max", type=int, default=None, help="candidate pool bound (config default 16)")
    p.add_argument("--alpha-max", dest="alpha_max", type=float, default=None,
                   help="annealing exponent cap (config default 50)")
    if dataset:
        p.add_argument("--dataset", required=True, help="JSONL file of {id, question, golds} records")
        p.add_argument("--tier", choices=("low", "middle", "high"), default=None,
                       help="budget tier (config default low)")
        p.add_argument("--family", choices=("reasoning", "instruct"), default=None,
                       help="model family selecting token budgets and sampling (config default reasoning)")
        p.add_argument("--backend", choices=("live", "scripted", "oracle"), default="live",
                       help="environment backing the agent")
        p.add_argument("--script", default=None, help="rule file for the scripted backend")
        p.add_argument("--corpus", default=None, help="JSONL corpus of {id, title, text} for local retrieval")
        p.add_argument("--out", required=True, help="output JSONL of per-question reports")
        p.add_argument("--workers", type=int, default=1, help="questions run in parallel")
        p.add_argument("--no-planner", action="store_true", help="skip the root planning call")


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="budgettree", description=__doc__, formatter_class=fmt)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="tree search over a dataset", formatter_class=fmt)
    _common(p)
    p.add_argument("--dump-tree", default=None, metavar="DIR", help="write one tree snapshot per question here")
    p.add_argument("--no-value", action="store_true", help="ablation: uniform node selection, no critic")
    p.add_argument("--no-budget", action="store_true", help="ablation: pin the annealing exponent to 1")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("baseline", help="parallel-sampling majority-vote baseline", formatter_class=fmt)
    _common(p)
    p.set_defaults(func=lambda a: cmd_run(a, baseline=True))

    p = sub.add_parser("ablate", help="run several ablation modes and summarize", formatter_class=fmt)
    _common(p)
    p.add_argument("--modes", default="full,no-budget,no-value,baseline",
                   help=f"comma-separated subset of {','.join(ABLATION_MODES)}")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("simulate", help="oracle-world convergence sweep", formatter_class=fmt)
    p.add_argument("--budgets", default="8,16,32,M", help="comma-separated tool budgets; M = analytic bound")
    p.add_argument("--trials", type=int, default=1000, help="seeded runs per budget point")
    p.add_argument("--eps", type=float, default=0.05, help="target failure probability")
    p.add_argument("--tau", type=float, default=0.8, help="answer threshold")
    p.add_argument("--n-max", dest="n_max", type=int, default=16, help="candidate pool bound")
    p.add_argument("--alpha-max", dest="alpha_max", type=float, default=50.0, help="annealing exponent cap")
    p.add_argument("--delta", type=int, default=1, help="raw critic delta per oracle step")
    p.add_argument("--off-path-delta", type=int, default=-1, help="raw critic delta off the oracle path")
    p.add_argument("--step-tokens", type=int, default=50, help="tokens charged per oracle step")
    p.add_argument("--seed", type=int, default=0, help="seed of the first trial")
    p.add_argument("--out", required=True, help="output JSON of per-budget success rates")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="aggregate report files into summary tables", formatter_class=fmt)
    p.add_argument("reports", nargs="+", help="per-question report JSONL files")
    p.add_argument("--out", required=True, help="output stem; writes <stem>.csv and <stem>.json")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
