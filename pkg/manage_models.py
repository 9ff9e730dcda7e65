#!/usr/bin/env python3
"""
Model selection management script
"""
import sys
import json
import argparse
import logging
from pathlib import Path

# Add project root to path
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

from app.config import config
from app.core.criteria import CriterionConfig, KINDS, SIGNIFICANCE_KINDS
from app.core.estimate import DOF_CELLS, DOF_JOINT
from app.core.experiment import (
    describe_result,
    evaluate_model_spec,
    export_trace,
    gen_synthetic,
    run_experiment,
)
from app.core.chordal import format_notation
from app.core.schema import read_dataset, split, write_dataset
from app.core.search import DIRECTIONS, SearchConfig, select_model
from app.utils import error_payload, format_fraction

logger = logging.getLogger("manage_models")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Select decomposable models for categorical classification")
    parser.add_argument("--verbose", action="store_true", help="Log per-candidate criterion values")
    commands = parser.add_subparsers(dest="command", required=True)

    def data_options(p, multiple=False):
        if multiple:
            p.add_argument("--data", nargs="+", required=True, help="Delimited data files, one per dataset")
        else:
            p.add_argument("--data", required=True, help="Delimited data file with a header row")
        p.add_argument("--class-col", default=config.class_column, help="Name of the class column")
        p.add_argument("--delimiter", default=config.delimiter)
        p.add_argument("--split", default=str(config.split_fraction), help="Test share, e.g. 1/11")
        p.add_argument("--seed", type=int, default=config.seed)

    def search_options(p):
        p.add_argument("--mc-replicates", type=int, default=config.mc_replicates)
        p.add_argument("--literal-alpha-rule", action="store_true", default=config.literal_alpha_rule,
                       help="Flip the significance acceptance directions")
        p.add_argument("--dof-mode", choices=[DOF_CELLS, DOF_JOINT], default=config.dof_mode)
        p.add_argument("--workers", type=int, default=config.workers)

    select = commands.add_parser("select", help="Run one search and evaluate the selected model")
    data_options(select)
    search_options(select)
    select.add_argument("--direction", choices=DIRECTIONS, required=True)
    select.add_argument("--criterion", choices=KINDS, required=True)
    select.add_argument("--alpha", type=float, default=config.alpha)
    select.add_argument("--trace-out", help="Write the selection path as delimited text")
    select.add_argument("--report-out", help="Write the full result as JSON")

    experiment = commands.add_parser("experiment", help="Run every direction x criterion cell plus baselines")
    data_options(experiment, multiple=True)
    search_options(experiment)
    experiment.add_argument("--alpha", type=float, nargs="+", default=config.alphas,
                            help="One chi2 and one exact cell per value")
    experiment.add_argument("--report-out", help="Write the report as delimited text")

    gen = commands.add_parser("gen", help="Sample a synthetic dataset from a decomposable model")
    gen.add_argument("--model", required=True, help="Clique notation, e.g. '(F1 S)(F2 F3 S)'")
    gen.add_argument("--levels", required=True, help="Variables and levels, e.g. 'F1=2,F2=2,F3=2,S=2'")
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--seed", type=int, default=config.seed)
    gen.add_argument("--tables", help="JSON file mapping 'F2 F3 S' to row-major clique weights")
    gen.add_argument("--class-col", help="Class variable (default: last in --levels)")
    gen.add_argument("--delimiter", default=config.delimiter)
    gen.add_argument("--out", required=True)

    evaluate = commands.add_parser("eval", help="Evaluate a model notation or a baseline on the test share")
    data_options(evaluate)
    evaluate.add_argument("--model", required=True, help="Clique notation, 'naive_bayes' or 'default'")
    return parser


def cmd_select(args) -> int:
    dataset = read_dataset(args.data, args.class_col, args.delimiter)
    train, test = split(dataset, args.split, args.seed)
    criterion = CriterionConfig(
        kind=args.criterion,
        alpha=args.alpha if args.criterion in SIGNIFICANCE_KINDS else None,
        mc_replicates=args.mc_replicates,
        seed=args.seed,
        literal_alpha_rule=args.literal_alpha_rule,
        dof_mode=args.dof_mode,
    )
    result = select_model(train, SearchConfig(args.direction, criterion), test=test, workers=args.workers)
    summary = describe_result(result, train.schema)

    metrics = result.final_metrics
    print(f"✅ {summary['direction'].upper()} {summary['criterion']}: {summary['model']}")
    print(f"📈 Complexity: {summary['complexity']} ({summary['stop_reason']})")
    print(f"🎯 Accuracy {format_fraction(metrics.accuracy)}, recall {format_fraction(metrics.recall)} "
          f"on {metrics.n_test} test instances")
    print(f"📋 Dropped features: {' '.join(summary['dropped']) or 'none'}")

    if args.trace_out:
        path = Path(args.trace_out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(export_trace(result, train.schema, args.delimiter), encoding="utf-8")
        logger.info(f"Trace written to {path}")
    if args.report_out:
        path = Path(args.report_out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
        logger.info(f"Result written to {path}")
    return 0


def cmd_experiment(args) -> int:
    report = run_experiment(
        args.data, args.class_col, split_fraction=args.split, seed=args.seed, alphas=args.alpha,
        mc_replicates=args.mc_replicates, delimiter=args.delimiter, literal_alpha_rule=args.literal_alpha_rule,
        dof_mode=args.dof_mode, workers=args.workers,
    )
    print(report.to_text(), end="")
    if args.report_out:
        path = Path(args.report_out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(report.to_delimited(args.delimiter), encoding="utf-8")
        logger.info(f"Report written to {path}")
    return 0


def cmd_gen(args) -> int:
    tables = None
    if args.tables:
        with open(args.tables, "r", encoding="utf-8") as f:
            tables = json.load(f)
    dataset, graph = gen_synthetic(args.model, args.levels, args.n, args.seed, tables=tables,
                                   class_column=args.class_col)
    write_dataset(dataset, args.out, args.delimiter)
    schema = dataset.schema
    print(f"✅ Wrote {dataset.N} rows to {args.out}")
    print(f"🧬 Generating model: {format_notation(graph, schema.names, last=schema.class_var.name)}")
    return 0


def cmd_eval(args) -> int:
    dataset = read_dataset(args.data, args.class_col, args.delimiter)
    train, test = split(dataset, args.split, args.seed)
    metrics, notation, complexity = evaluate_model_spec(train, test, args.model)
    print(json.dumps({"model": notation, "complexity": complexity, **metrics.to_dict()}))
    return 0


COMMANDS = {
    "select": cmd_select,
    "experiment": cmd_experiment,
    "gen": cmd_gen,
    "eval": cmd_eval,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    # Setup logging
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')

    try:
        return COMMANDS[args.command](args)
    except (ValueError, OSError) as e:
        logger.error(f"{args.command} failed: {e}")
        print(json.dumps(error_payload(e)), file=sys.stderr)
        return 2
    except Exception as e:
        logger.error(f"Unexpected failure in {args.command}: {e}", exc_info=True)
        print(json.dumps(error_payload(e)), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
