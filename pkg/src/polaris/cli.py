"""Command-line interface.

Subcommands: parse, tvla, datagen, train, explain, mask, report.  Every
subcommand is deterministic given --seed: artifact files and stdout carry no
wall-clock values (stage timings go to stderr).  Exit codes: 0 success,
1 user error, 2 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
import traceback
from pathlib import Path

from . import __version__
from .datagen import DatagenConfig, cognition_generate, load_dataset, save_dataset
from .errors import PolarisError
from .masking import origin_map_names
from .ml import TrainConfig, load_model, predict_scores, save_model, train_adaboost, train_random_forest
from .netlist import Netlist, parse_bench, validate, write_bench
from .pipeline import (
    MaskBudget,
    polaris_mask,
    render_report_dict,
    render_timings,
    report_from_dict,
    report_json,
    report_to_dict,
)
from .sim import PowerModel
from .tvla import AcquisitionConfig, TvlaReport, leak_estimate
from .xai import RuleExtractConfig, extract_rules, load_rules, save_rules, shap_additive, waterfall_render


def _read_netlist(path: str) -> Netlist:
    text = Path(path).read_text(encoding="utf-8")
    return parse_bench(text, name=Path(path).stem)


def _secret_ids(netlist: Netlist, flag: str | None):
    if flag is None or flag == "auto":
        return None
    ids = []
    for name in flag.split(","):
        name = name.strip()
        try:
            ids.append(netlist.id_of(name))
        except KeyError:
            raise PolarisError(f"unknown secret input '{name}'")
    return tuple(ids)


def _acquisition(args, netlist: Netlist) -> AcquisitionConfig:
    pm = PowerModel() if args.noise_sigma is None else PowerModel(noise_sigma=args.noise_sigma)
    return AcquisitionConfig(
        n_traces=args.traces,
        secret_inputs=_secret_ids(netlist, args.secret_inputs),
        power_model=pm,
        seed=args.seed,
    )


def _add_acq_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--traces", type=int, default=10_000,
                   help="traces per group (default 10000)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--secret-inputs", default="auto",
                   help="comma-separated input names, or 'auto' (first quarter)")
    p.add_argument("--noise-sigma", type=float, default=None)


def _write(path: str, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")


# --- subcommands ---

def _cmd_parse(args) -> int:
    n = _read_netlist(args.netlist)
    violations = validate(n)
    if violations:
        for v in violations:
            print(f"violation [{v.code}] gate {v.gate_id}: {v.message}",
                  file=sys.stderr)
        return 1
    text = write_bench(n)
    if args.out:
        _write(args.out, text)
        print(f"parsed {n.name}: {n.n_gates} gates, {len(n.inputs)} inputs, "
              f"{len(n.outputs)} outputs -> {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def _tvla_text(rep: TvlaReport) -> str:
    s = rep.summary()
    lines = [
        f"design    : {rep.design}",
        f"traces    : {rep.n_traces} per group, threshold {rep.threshold:g}",
        f"mean |t|  : {s['mean_abs_t']:.4f} (median {s['median_abs_t']:.4f}, "
        "non-input gates)",
        f"leaky     : {s['leaky_count']} gate(s)",
        f"protected : {'yes (99.999% confidence)' if s['protected'] else 'no'}",
    ]
    for i in rep.leaky_ids:
        lines.append(f"  leaky gate {i} ({rep.names[i]}): t = {rep.t[i]:+.3f}")
    return "\n".join(lines) + "\n"


def _cmd_tvla(args) -> int:
    n = _read_netlist(args.netlist)
    rep = leak_estimate(n, _acquisition(args, n))
    if args.out:
        _write(args.out, rep.to_json())
    sys.stdout.write(rep.to_json() if args.format == "json" else _tvla_text(rep))
    return 0


def _cmd_datagen(args) -> int:
    paths = sorted(Path(args.designs).glob("*.bench"))
    if not paths:
        raise PolarisError(f"no .bench designs found in {args.designs}")
    designs = [parse_bench(p.read_text(encoding="utf-8"), name=p.stem)
               for p in paths]
    secrets = None
    if args.secret_inputs not in (None, "auto"):
        secrets = [_secret_ids(d, args.secret_inputs) for d in designs]
    cfg = DatagenConfig(m_size=args.mask_size, locality=args.locality,
                        iters=args.iters, theta_r=args.theta,
                        traces=args.traces, seed=args.seed,
                        noise_sigma=args.noise_sigma)
    ds = cognition_generate(designs, cfg, secret_inputs=secrets)
    save_dataset(ds, args.out)
    zeros, ones = ds.class_counts
    print(f"dataset: {len(ds.samples)} samples from {len(designs)} design(s) "
          f"(good={ones}, bad={zeros}) -> {args.out}")
    return 0


def _cmd_train(args) -> int:
    ds = load_dataset(args.dataset)
    cfg = TrainConfig(rounds=args.rounds, seed=args.seed)
    if args.kind == "adaboost":
        model = train_adaboost(ds, cfg)
        detail = f"{len(model.stumps)} stumps"
    else:
        model = train_random_forest(ds, cfg)
        detail = f"{len(model.trees)} trees"
        if model.oob_error is not None:
            detail += f", oob error {model.oob_error:.3f}"
    save_model(model, args.out)
    print(f"trained {args.kind} on {len(ds.samples)} samples ({detail}) "
          f"-> {args.out}")
    return 0


def _cmd_explain(args) -> int:
    model = load_model(args.model)
    ds = load_dataset(args.dataset)
    cfg = RuleExtractConfig(top_k=args.top_k, min_support=args.min_support,
                            score_cutoff=args.cutoff, quantile=args.quantile)
    rs = extract_rules(model, ds, cfg)
    if args.out:
        save_rules(rs, args.out)
    out = []
    if rs.rules:
        out.append(f"{len(rs.rules)} rule(s):")
        for k, rule in enumerate(rs.rules):
            out.append(f"  [{k}] (support {rule.support}) {rule.render(rs.schema)}")
    else:
        out.append("no rules met the support/cutoff bar")
    X, _ = ds.matrix()
    scores = predict_scores(model, X)
    top = int(scores.argmax())
    out.append("")
    out.append(f"waterfall for the most confident sample "
               f"(#{top}, score {scores[top]:.4f}):")
    out.append(waterfall_render(shap_additive(model, X[top], X),
                                top_k=args.top_k, schema=model.schema))
    sys.stdout.write("\n".join(out))
    return 0


def _cmd_mask(args) -> int:
    n = _read_netlist(args.netlist)
    model = load_model(args.model)
    rules = load_rules(args.rules) if args.rules else None
    budget = MaskBudget.parse(args.budget)
    masked, report = polaris_mask(
        n, model, budget, rules=rules, acquisition=_acquisition(args, n),
        rules_mode=args.rules_mode)
    out = Path(args.out)
    _write(out, write_bench(masked))
    _write(str(out) + ".origins.json",
           json.dumps(origin_map_names(masked), indent=2, sort_keys=True) + "\n")
    _write(str(out) + ".report.json", report_json(report))
    sys.stdout.write(report_json(report) if args.format == "json"
                     else render_report_dict(report_to_dict(report)))
    sys.stderr.write(render_timings(report.timings))
    return 0


def _cmd_report(args) -> int:
    d = report_from_dict(json.loads(Path(args.report_file).read_text(encoding="utf-8")))
    sys.stdout.write(json.dumps(d, indent=2, sort_keys=True) + "\n"
                     if args.format == "json" else render_report_dict(d))
    return 0


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="polaris",
        description="Gate-level power side-channel assessment and "
                    "model-guided masking")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("parse", help="parse and canonicalize a .bench netlist")
    sp.add_argument("--netlist", required=True)
    sp.add_argument("--out")
    sp.set_defaults(func=_cmd_parse)

    sp = sub.add_parser("tvla", help="fixed-vs-random leakage assessment")
    sp.add_argument("--netlist", required=True)
    _add_acq_flags(sp)
    sp.add_argument("--out")
    sp.add_argument("--format", choices=("text", "json"), default="text")
    sp.set_defaults(func=_cmd_tvla)

    sp = sub.add_parser("datagen", help="generate labeled training data")
    sp.add_argument("--designs", required=True, help="directory of .bench files")
    sp.add_argument("--mask-size", type=int, default=200)
    sp.add_argument("--locality", type=int, default=7)
    sp.add_argument("--iters", type=int, default=100)
    sp.add_argument("--theta", type=float, default=0.70)
    _add_acq_flags(sp)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=_cmd_datagen)

    sp = sub.add_parser("train", help="train the masking classifier")
    sp.add_argument("--dataset", required=True)
    sp.add_argument("--rounds", type=int, default=200)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--kind", choices=("adaboost", "forest"), default="adaboost")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=_cmd_train)

    sp = sub.add_parser("explain", help="extract rules and render a waterfall")
    sp.add_argument("--model", required=True)
    sp.add_argument("--dataset", required=True)
    sp.add_argument("--top-k", type=int, default=5)
    sp.add_argument("--min-support", type=int, default=10)
    sp.add_argument("--cutoff", type=float, default=0.9)
    sp.add_argument("--quantile", type=float, default=None)
    sp.add_argument("--out")
    sp.set_defaults(func=_cmd_explain)

    sp = sub.add_parser("mask", help="apply model-guided masking")
    sp.add_argument("--netlist", required=True)
    sp.add_argument("--model", required=True)
    sp.add_argument("--rules")
    sp.add_argument("--rules-mode", choices=("combined", "rules_only", "model_only"),
                    default="combined")
    sp.add_argument("--budget", required=True, help="e.g. '50%%' or '120'")
    _add_acq_flags(sp)
    sp.add_argument("--out", required=True, help="masked netlist path")
    sp.add_argument("--format", choices=("text", "json"), default="text")
    sp.set_defaults(func=_cmd_mask)

    sp = sub.add_parser("report", help="re-render a stored run report")
    sp.add_argument("report_file")
    sp.add_argument("--format", choices=("text", "json"), default="text")
    sp.set_defaults(func=_cmd_report)
    return p


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code in (0, None) else 1
    try:
        return args.func(args)
    except PolarisError as e:
        print(f"error [{e.code}]: {e}", file=sys.stderr)
        return 1
    except (OSError, ValueError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception:  # pragma: no cover
        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())
