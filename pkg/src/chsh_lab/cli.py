"""Command-line surface: simulate / analyze / pvalue / power / table / verify.

Every command echoes its fully resolved configuration (seeds included) in
its output, prints JSON on stdout (human-readable table by default for
``table``; pass --json there for machine output), and uses exit codes
0 = success, 1 = verification failure, 2 = usage error, 3 = I/O or schema
error. CHSH_LAB_SEED provides a default seed.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

from . import __version__
from ._backend import backend_name
from ._jsonfmt import dumps, sig_figs
from .harness import (
    SchemaError,
    analyze_log_file,
    write_log,
)
from .stats import (
    QUANTUM_MEAN,
    azuma_hoeffding_bound,
    chsh_pvalue,
    normal_approximations,
    observed_pvalue,
    power_beta,
    rejection_threshold,
)
from .trials import (
    FiniteLocalModel,
    LocalComponent,
    MemoryPolicy,
    QuantumSampler,
    simulate,
    strategy_from_json,
    strategy_to_json,
)
from .verify import (
    run_chsh_suite,
    run_conditional_cap_suite,
    run_dominance_suite,
    run_lambda_independence_suite,
)

PRESETS = {
    "quantum": lambda: QuantumSampler(),
    "boundary-local": lambda: MemoryPolicy.constant(0.75),
    "uniform-noise": lambda: FiniteLocalModel(
        [LocalComponent(1.0, (0.5, 0.5), (0.5, 0.5))]),
}


class UsageError(Exception):
    pass


def parse_z(text: str) -> float:
    """Decimal, or the literal token sqrt2/2 resolved at full precision."""
    if text.strip() == "sqrt2/2":
        return math.sqrt(2.0) / 2.0
    try:
        return float(text)
    except ValueError:
        raise UsageError(f"invalid z value {text!r} (use a decimal or sqrt2/2)") from None


def positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _default_seed() -> int | None:
    raw = os.environ.get("CHSH_LAB_SEED")
    if raw is None:
        return None
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"CHSH_LAB_SEED must be an integer, got {raw!r}") from None


def resolve_strategy(spec: str):
    """Preset name, inline JSON document, or path to a JSON file."""
    if spec in PRESETS:
        return PRESETS[spec]()
    if spec.lstrip().startswith("{"):
        try:
            doc = json.loads(spec)
        except json.JSONDecodeError as exc:
            raise UsageError(f"inline strategy is not valid JSON: {exc.msg}") from exc
        return strategy_from_json(doc)
    if os.path.exists(spec):
        with open(spec, "r", encoding="utf-8") as fh:
            return strategy_from_json(json.load(fh))
    raise UsageError(
        f"unknown strategy {spec!r}: not a preset ({', '.join(sorted(PRESETS))}), "
        "inline JSON, or existing file")


def _emit(doc: dict, stream=None) -> None:
    print(dumps(doc, indent=2), file=stream or sys.stdout)


def cmd_simulate(args) -> int:
    strategy = resolve_strategy(args.strategy)
    seed = args.seed if args.seed is not None else _default_seed()
    trials = simulate(strategy, args.n, seed)
    resolved_seed = seed if seed is not None else getattr(strategy, "rng_seed", None)
    echo = {
        "command": "simulate",
        "config": {
            "strategy": strategy_to_json(strategy),
            "n": args.n,
            "seed": resolved_seed,
            "out": args.out,
            "backend": backend_name(),
        },
        "result": {"records_written": len(trials)},
    }
    if args.out == "-":
        for t in trials:
            sys.stdout.write(
                f'{{"i":{t.index},"a":"{t.a}","b":"{t.b}","d1":{t.d1},"d2":{t.d2}}}\n')
        _emit(echo, stream=sys.stderr)
    else:
        write_log(trials, args.out)
        _emit(echo)
    return 0


def cmd_analyze(args) -> int:
    report = analyze_log_file(args.log, seed=args.seed)
    _emit({
        "command": "analyze",
        "config": {"log": args.log, "seed": args.seed},
        "result": report.to_dict(),
    })
    return 0


def cmd_pvalue(args) -> int:
    n = args.n
    if args.z is not None:
        z = parse_z(args.z)
        p = chsh_pvalue(n, z)
        k_star = rejection_threshold(n, z)
        mode = {"z": z, "rejection_threshold_count": k_star}
    else:
        k = args.count
        if k > n:
            raise UsageError(f"--count {k} exceeds --n {n}")
        p = observed_pvalue(n, k)
        z = (2 * k - n) / n
        mode = {"count": k, "implied_c_bar": z}
    ah = azuma_hoeffding_bound(n, z=z)
    normal = normal_approximations(n, z)
    _emit({
        "command": "pvalue",
        "config": {"n": n, **mode},
        "result": {
            "p_value": p.value,
            "p_value_log10": p.log10,
            "ah_bound": ah.value,
            "ah_bound_log10": ah.log10,
            "normal_alpha": normal.alpha,
            "normal_is_approximation": True,
            "display": {
                "p_value": sig_figs(p.value),
                "p_value_log10": sig_figs(p.log10),
                "ah_bound": sig_figs(ah.value),
                "normal_alpha": sig_figs(normal.alpha),
            },
        },
    })
    return 0


def cmd_power(args) -> int:
    z = parse_z(args.z)
    beta = power_beta(args.n, z)
    normal = normal_approximations(args.n, z)
    _emit({
        "command": "power",
        "config": {"n": args.n, "z": z},
        "result": {
            "beta": beta.value,
            "beta_log10": beta.log10,
            "power": 1.0 - beta.value,
            "normal_beta": normal.beta,
            "normal_is_approximation": True,
            "display": {
                "beta": sig_figs(beta.value),
                "power": sig_figs(1.0 - beta.value),
            },
        },
    })
    return 0


def cmd_table(args) -> int:
    n_values = args.n_list
    z = QUANTUM_MEAN
    columns = []
    for n in n_values:
        exact = chsh_pvalue(n, z)
        ah = azuma_hoeffding_bound(n)
        columns.append({
            "n": n,
            "exact_p_value": exact.value,
            "exact_p_value_log10": exact.log10,
            "ah_bound": ah.value,
            "ah_bound_log10": ah.log10,
        })
    if args.json:
        _emit({
            "command": "table",
            "config": {"n_list": n_values, "z": z},
            "result": {"columns": columns},
        })
        return 0
    width = 12
    print(f"# cut z = sqrt2/2 = {z:.17g}")
    print("".join(["n".ljust(14)] + [str(c["n"]).rjust(width) for c in columns]))
    print("".join(["exact p-value".ljust(14)]
                  + [sig_figs(c["exact_p_value"]).rjust(width) for c in columns]))
    print("".join(["a-h bound".ljust(14)]
                  + [sig_figs(c["ah_bound"]).rjust(width) for c in columns]))
    return 0


_SUITE_DEFAULTS = {
    # suite -> (runner, default samples, default seed)
    "chsh": (run_chsh_suite, 1000, 0),
    "dominance": (run_dominance_suite, 200, 7),
    "lemma4": (run_conditional_cap_suite, 100, 11),
    "lambda-indep": (run_lambda_independence_suite, 50, 3),
}


def _run_suite(name: str, samples: int | None, seed: int | None,
               fixture: str | None) -> dict:
    runner, default_samples, default_seed = _SUITE_DEFAULTS[name]
    kwargs = {
        "samples": samples if samples is not None else default_samples,
        "seed": seed if seed is not None else default_seed,
    }
    if name == "lemma4":
        kwargs["include_quantum_fixture"] = fixture == "quantum-p"
    return runner(**kwargs)


def cmd_verify(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    names = list(_SUITE_DEFAULTS) if args.suite == "all" else [args.suite]
    results = [_run_suite(name, args.samples, seed, args.fixture) for name in names]
    passed = all(r["passed"] for r in results)
    _emit({
        "command": "verify",
        "config": {
            "suite": args.suite,
            "samples": args.samples,
            "seed": seed,
            "fixture": args.fixture,
            "backend": backend_name(),
        },
        "result": {"passed": passed, "suites": results},
    })
    return 0 if passed else 1


def _csv_ints(text: str) -> list[int]:
    items = [part.strip() for part in text.split(",")]
    if not any(items):
        raise argparse.ArgumentTypeError("n-list must not be empty")
    try:
        values = [int(part) for part in items if part]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid n-list {text!r}") from None
    if not values or any(v < 1 for v in values):
        raise argparse.ArgumentTypeError("n-list entries must be positive integers")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chsh-lab",
        description="Simulate, analyze, and verify two-detector correlation "
                    "experiments with exact binomial statistics.",
    )
    parser.add_argument("--version", action="version", version=f"chsh-lab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a trial log from a strategy")
    p.add_argument("--strategy", required=True,
                   help="preset name (quantum, boundary-local, uniform-noise), "
                        "inline JSON, or path to a strategy JSON file")
    p.add_argument("--n", type=positive_int, required=True, help="number of trials")
    p.add_argument("--seed", type=int, default=None,
                   help="RNG seed (default: CHSH_LAB_SEED)")
    p.add_argument("--out", default="-", help="output JSONL path, or - for stdout")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="analyze a JSONL trial log")
    p.add_argument("--log", required=True, help="path to the JSONL trial log")
    p.add_argument("--seed", type=int, default=None,
                   help="seed to record in the report (metadata only)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("pvalue", help="exact p-value, bound, and approximations")
    p.add_argument("--n", type=positive_int, required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--z", help="decision cut (decimal or sqrt2/2)")
    group.add_argument("--count", type=int, help="observed success count")
    p.set_defaults(func=cmd_pvalue)

    p = sub.add_parser("power", help="type-II error and power at a cut z")
    p.add_argument("--n", type=positive_int, required=True)
    p.add_argument("--z", required=True, help="decision cut (decimal or sqrt2/2)")
    p.set_defaults(func=cmd_power)

    p = sub.add_parser("table", help="exact p-value vs closed-form bound table")
    p.add_argument("--n-list", type=_csv_ints, default=[10, 100, 1000, 10000],
                   help="comma-separated trial counts (default 10,100,1000,10000)")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("verify", help="run exhaustive verification suites")
    p.add_argument("--suite", required=True,
                   choices=["chsh", "dominance", "lemma4", "lambda-indep", "all"],
                   help="chsh: |K| bound over local models; dominance: count-tail "
                        "domination; lemma4: per-history success cap; "
                        "lambda-indep: settings independent of the hidden value")
    p.add_argument("--samples", type=positive_int, default=None,
                   help="number of random models/policies (suite default if omitted)")
    p.add_argument("--seed", type=int, default=None,
                   help="RNG seed (default: CHSH_LAB_SEED or suite default)")
    p.add_argument("--fixture", choices=["quantum-p"], default=None,
                   help="inject the inadmissible constant quantum-probability "
                        "fixture (lemma4 suite)")
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
