"""Command-line interface: ``ffsmbench <command> ...``.

Exit codes: 0 success, 1 validation or benchmark failure, 2 usage or parse
error.
"""

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .errors import BenchError, ParseError
from .feature_model import (
    Configuration,
    configuration_violations,
    enumerate_configurations,
    parse_feature_model,
    write_feature_model,
)
from .ffsm import derive_product, parse_ffsm_dot, validate_ffsm, write_ffsm_dot
from .generator import REFERENCE_OPTIONS, GenSpec, generate_ffsm
from .harness import analyze_rounds, dumps, load_products, product_filename, run_benchmark
from .learner import LearnerOptions, learn
from .mealy import equivalent, minimize, parse_dot, write_dot

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Usage(Exception):
    pass


def _read(path):
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise _Usage(f"cannot read {path}: {exc.strerror}") from None


def _write(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _symbols(text):
    items = [s.strip() for s in text.split(",") if s.strip()]
    if not items:
        raise argparse.ArgumentTypeError("expected a comma-separated list")
    return items


def _fraction(text):
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError("must lie in [0, 1]")
    return value


def _learner_options(args):
    try:
        return LearnerOptions(
            oracle=args.oracle,
            ce_handling=args.ce.replace("-", "_"),
            closing=args.closing.replace("-", "_"),
            cache=args.cache,
        )
    except ValueError as exc:
        raise _Usage(str(exc)) from None


def _add_learner_flags(p):
    p.add_argument("--oracle", default="perfect",
                   help="perfect | wmethod:<depth> | random:<count>,<min>,<max>,<seed>")
    p.add_argument("--ce", default="all-prefixes", choices=["all-prefixes", "rivest-schapire"])
    p.add_argument("--closing", default="close-first", choices=["close-first", "close-shortest"])
    p.add_argument("--cache", action="store_true")


def cmd_validate(args):
    fm = parse_feature_model(_read(args.fm))
    configs = enumerate_configurations(fm, args.limit)
    result = {"feature_model": {"features": len(fm.features), "configurations": len(configs)}}
    ok = bool(configs)
    if args.ffsm:
        f = parse_ffsm_dot(_read(args.ffsm), fm)
        report = validate_ffsm(f, configs=configs)
        result["ffsm"] = report.to_dict(fm)
        ok = ok and report.passed
    result["pass"] = ok
    sys.stdout.write(dumps(result))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_derive(args):
    fm = parse_feature_model(_read(args.fm))
    f = parse_ffsm_dot(_read(args.ffsm), fm)
    config = Configuration(s.strip() for s in args.config.split(",") if s.strip())
    problems = configuration_violations(fm, config)
    if problems:
        print("invalid configuration: " + "; ".join(problems), file=sys.stderr)
        return EXIT_FAIL
    _write(args.output, write_dot(derive_product(f, config)))
    return EXIT_OK


def cmd_generate(args):
    fm = parse_feature_model(_read(args.fm))
    spec = GenSpec(
        feature_model=fm,
        seed=args.seed,
        n_states=args.states,
        inputs=args.inputs,
        outputs=args.outputs,
        variability_degree=args.variability,
        state_pc_probability=args.state_pc,
        ensure_multiround=not args.no_multiround,
        config_limit=args.limit,
    )
    f = generate_ffsm(spec)
    out = Path(args.output)
    configs = enumerate_configurations(fm, args.limit)

    def product(item):
        i, c = item
        m = derive_product(f, c)
        _, metrics = learn(m, m.inputs, REFERENCE_OPTIONS)
        return i, c, m, metrics

    items = list(enumerate(configs))
    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(product, items))
    else:
        results = [product(it) for it in items]
    _write(out / "model.xml", write_feature_model(fm))
    _write(out / "ffsm.dot", write_ffsm_dot(f))
    entries = []
    for i, c, m, metrics in results:
        name = product_filename(i, fm, c)
        _write(out / name, write_dot(m))
        entries.append({
            "index": i,
            "file": name,
            "configuration": [x for x in fm.features if x in c.selected],
            "states": len(m.states),
            "minimal_states": len(minimize(m).states),
            "reference_rounds": metrics.rounds,
        })
    manifest = {
        "generator": {
            "seed": spec.seed,
            "states": spec.n_states,
            "inputs": list(spec.inputs),
            "outputs": list(spec.outputs),
            "variability_degree": spec.variability_degree,
            "state_pc_probability": spec.state_pc_probability,
            "ensure_multiround": spec.ensure_multiround,
        },
        "ffsm": "ffsm.dot",
        "feature_model": "model.xml",
        "products": entries,
    }
    _write(out / "manifest.json", dumps(manifest))
    return EXIT_OK


def cmd_learn(args):
    m = parse_dot(_read(args.fsm))
    opts = _learner_options(args)
    h, metrics = learn(m, m.inputs, opts)
    same = equivalent(h, m) is None
    print(f"states={len(h.states)} rounds={metrics.rounds} mq={metrics.mq_count} "
          f"eq={metrics.eq_count} mq_symbols={metrics.mq_symbols} "
          f"eq_symbols={metrics.eq_symbols} resets={metrics.resets} equivalent={same}")
    if args.report:
        _write(args.report, dumps({
            "metrics": metrics.counters(),
            "hypothesis_states": metrics.hypothesis_states,
            "ce_lengths": metrics.ce_lengths,
            "sul_states": len(minimize(m).states),
            "learned_states": len(h.states),
            "equivalent": same,
            "options": opts.to_dict(),
            "learned": write_dot(h),
        }))
    return EXIT_OK


def cmd_bench(args):
    opts = _learner_options(args)
    if args.products:
        report = run_benchmark(products=load_products(args.products), opts=opts, jobs=args.jobs)
    else:
        if not args.fm or not args.ffsm:
            raise _Usage("bench needs --fm and --ffsm, or --products")
        fm = parse_feature_model(_read(args.fm))
        f = parse_ffsm_dot(_read(args.ffsm), fm)
        report = run_benchmark(ffsm=f, opts=opts, limit=args.limit, jobs=args.jobs)
    _write(args.report, report.to_json())
    if args.csv:
        _write(args.csv, report.to_csv())
    fam = report.family
    print(f"products={fam['product_count']} multiround={fam['multiround_products']} "
          f"conciseness={fam['conciseness_ratio']} errors={len(report.errors)}")
    return EXIT_FAIL if report.errors else EXIT_OK


def cmd_analyze(args):
    m = parse_dot(_read(args.fsm))
    analysis = analyze_rounds(m)
    _write(args.report, dumps(analysis.to_dict()))
    print(f"rounds={analysis.rounds} merged_pairs={len(analysis.merged_pairs)} "
          f"signature_classes={analysis.one_step_signature_classes}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ffsmbench", description="Benchmark toolkit for active learning of product line behaviour.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a feature model and optionally an FFSM")
    p.add_argument("--fm", required=True)
    p.add_argument("--ffsm")
    p.add_argument("--limit", type=int, default=10_000)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("derive", help="derive the product FSM of one configuration")
    p.add_argument("--fm", required=True)
    p.add_argument("--ffsm", required=True)
    p.add_argument("--config", required=True, help="comma-separated selected features")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_derive)

    p = sub.add_parser("generate", help="generate a random FFSM and its products")
    p.add_argument("--fm", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--states", type=int, required=True)
    p.add_argument("--inputs", type=_symbols, required=True)
    p.add_argument("--outputs", type=_symbols, required=True)
    p.add_argument("--variability", type=_fraction, default=0.3)
    p.add_argument("--state-pc", type=_fraction, default=0.2)
    p.add_argument("--no-multiround", action="store_true")
    p.add_argument("--limit", type=int, default=10_000)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("learn", help="learn one FSM with L*")
    p.add_argument("--fsm", required=True)
    _add_learner_flags(p)
    p.add_argument("--report")
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("bench", help="learn every product of a family")
    p.add_argument("--fm")
    p.add_argument("--ffsm")
    p.add_argument("--products")
    _add_learner_flags(p)
    p.add_argument("--limit", type=int, default=10_000)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--report", required=True)
    p.add_argument("--csv")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("analyze", help="explain why an FSM needs several rounds")
    p.add_argument("--fsm", required=True)
    p.add_argument("--report", required=True)
    p.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, _Usage, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
