"""Command-line entry point.

Exit codes: 0 success, 1 runtime failure (diagnostic on stderr), 2 usage
error. Settings resolve as command-line flag > config file > built-in
default. Config files hold ``key = value`` lines with ``#`` comments; keys
are the option names with dashes replaced by underscores, so the output of
``--print-config`` is itself a valid config file.
"""

from __future__ import annotations

import argparse
import dataclasses
import io
import sys
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import capacity, experiments, losses, scenarios, svg
from .losses import Dataset, ForgetSpec
from .numkit import RngHandle
from .unlearn import CertBudget, pipeline_noisy_minimizer, pipeline_trimgrad


class UsageError(Exception):
    pass


# --- option tables ---------------------------------------------------------------------


@dataclass(frozen=True)
class Opt:
    key: str  # config key and argparse dest
    kind: str  # "int", "float", "ints", "str", "optfloat"
    default: object
    help: str
    field: str | None = None  # target dataclass field when it differs from key


def _parse_value(opt: Opt, raw: str):
    raw = raw.strip()
    try:
        if opt.kind == "int":
            return int(raw)
        if opt.kind == "float":
            return float(raw)
        if opt.kind == "optfloat":
            return None if raw.lower() in ("", "none") else float(raw)
        if opt.kind == "ints":
            vals = tuple(int(v) for v in raw.split(",") if v.strip())
            if not vals:
                raise ValueError
            return vals
        return raw
    except ValueError:
        raise UsageError(f"invalid value for {opt.key}: {raw!r}") from None


def _show_value(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, tuple):
        return ",".join(str(x) for x in v)
    if isinstance(v, float):
        return format(v, ".12g")
    return str(v)


COMMON = [Opt("seed", "int", None, "base RNG seed (required)")]

ID_OPTS = COMMON + [
    Opt("n", "int", 10_000, "training points"),
    Opt("f", "int", 20, "points to forget"),
    Opt("epsilon", "float", 1.0, "unlearning budget"),
    Opt("q", "float", 2.0, "Renyi order"),
    Opt("alpha", "float", 0.1, "target excess empirical risk", "alpha_emp"),
    Opt("lam", "float", 0.5, "ridge regularization"),
    Opt("d", "ints", (25, 50, 100, 200), "comma-separated dimension sweep", "dims"),
    Opt("trials", "int", 5, "trials per dimension"),
    Opt("n_test", "int", 100_000, "test samples for excess risk"),
    Opt("response_noise", "float", 1.0, "label noise standard deviation"),
    Opt("clip_r", "float", 1.0, "Lipschitz radius for the lazy DP baseline"),
]

OOD_OPTS = COMMON + [
    Opt("n", "int", 1000, "training points"),
    Opt("d", "int", 100, "dimension"),
    Opt("f", "ints", (1, 100, 450), "comma-separated forget-set sizes", "fs"),
    Opt("offset", "float", 1e3, "label offset on forget points"),
    Opt("epsilon", "float", 10.0, "unlearning budget"),
    Opt("q", "float", 2.0, "Renyi order"),
    Opt("alpha", "float", 0.1, "target excess empirical risk", "alpha_emp"),
    Opt("lam", "float", 1.0, "ridge regularization"),
    Opt("response_noise", "float", 1.0, "label noise standard deviation"),
    Opt("threshold", "optfloat", None, "excess-risk threshold (default: alpha)"),
]

FORGET_OPTS = COMMON + [
    Opt("n", "int", 2000, "training points"),
    Opt("corruption", "float", 0.1, "fraction of flipped labels"),
    Opt("dim", "int", 1000, "feature dimension (without intercept)"),
    Opt("separation", "float", 2.0, "distance between class means"),
    Opt("minority", "float", 0.5, "fraction of class-1 points"),
    Opt("lam", "float", 1e-3, "logistic regularization"),
    Opt("microbatch", "int", 8, "points per micro-batch"),
    Opt("cohort", "int", 15, "micro-batches per step"),
    Opt("trim", "int", 3, "micro-batches trimmed from each side"),
    Opt("iters", "int", 2000, "training steps"),
    Opt("finetune_iters", "int", 500, "fine-tuning steps on the retain set"),
    Opt("stride", "int", 50, "evaluation stride"),
    Opt("n_test", "int", 2000, "test points"),
]

CERTIFY_OPTS = COMMON + [
    Opt("model", "str", "ridge", "anchor or ridge"),
    Opt("pipeline", "str", "noisy_minimizer", "noisy_minimizer or trimgrad"),
    Opt("n", "int", 200, "training points"),
    Opt("d", "int", 5, "dimension"),
    Opt("f", "int", 5, "points to forget"),
    Opt("epsilon", "float", 1.0, "unlearning budget"),
    Opt("q", "float", 2.0, "Renyi order"),
    Opt("alpha", "float", 0.1, "target excess empirical risk"),
    Opt("lam", "float", 1.0, "ridge regularization"),
    Opt("data", "str", "", "optional regression CSV (8 features + target) instead of synthetic data"),
]

CAPACITY_OPTS = [
    Opt("n", "int", 1000, "training points"),
    Opt("d", "int", 10, "dimension"),
    Opt("alpha", "float", 0.1, "target excess risk"),
    Opt("epsilon", "float", 1.0, "unlearning budget"),
    Opt("time_budget", "float", 0.0, "compute budget in per-sample gradient evaluations", "time_budget_t"),
    Opt("lipschitz_r", "float", 1.0, "Lipschitz radius"),
    Opt("init_dist", "float", 1.0, "initial distance to the minimizer"),
    Opt("interp_error", "float", 1.0, "retain-set interpolation error"),
]


def read_config(path: str, opts: list[Opt]) -> dict:
    table = {o.key: o for o in opts}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc.strerror}") from None
    out = {}
    for lineno, line in enumerate(lines, start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in body.split("=", 1))
        key = key.replace("-", "_")
        if key not in table:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = _parse_value(table[key], raw)
    return out


def resolve(args: argparse.Namespace, opts: list[Opt]) -> dict:
    values = {o.key: o.default for o in opts}
    if getattr(args, "config", None):
        values.update(read_config(args.config, opts))
    for o in opts:
        if o.key in vars(args):
            values[o.key] = vars(args)[o.key]
    return values


def to_config(cls, values: dict, opts: list[Opt]):
    names = {f.name for f in dataclasses.fields(cls)}
    kw = {(o.field or o.key): values[o.key] for o in opts if (o.field or o.key) in names}
    return cls(**kw)


# --- output helpers ------------------------------------------------------------------


def fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".12g")
    return str(v)


def csv_text(header: list[str], rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for r in rows:
        buf.write(",".join(fmt(getattr(r, h)) for h in header) + "\n")
    return buf.getvalue()


def emit(text: str, path: str | None) -> None:
    if path in (None, "", "-"):
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


# --- subcommands ---------------------------------------------------------------------

ID_HEADER = ["d", "method", "trial", "excess_risk"]
OOD_HEADER = ["f", "method", "iteration", "excess_retain_risk"]
OOD_SUMMARY_HEADER = [
    "f",
    "method",
    "train_iterations",
    "unlearn_iterations",
    "grad_evals_per_iteration",
    "iterations_to_threshold",
    "threshold",
]
STUDY_HEADER = ["iteration", "method", "retain_acc", "forget_acc", "test_acc"]
STUDY_SUMMARY_HEADER = ["method", "grad_evals", "forget_visits", "retain_acc", "forget_acc", "test_acc"]


def cmd_id_separation(args, values) -> int:
    cfg = to_config(experiments.IdSeparationConfig, values, ID_OPTS)
    rows = experiments.run_id_separation(cfg)
    emit(csv_text(ID_HEADER, rows), args.out)
    if args.plot:
        chart = svg.Chart("Excess test risk vs dimension", "d", "excess risk")
        for method in (experiments.NOISY_MINIMIZER, experiments.LAZY_DP):
            per_d = [[r.excess_risk for r in rows if r.method == method and r.d == d] for d in cfg.dims]
            chart.add(
                svg.Series(
                    method,
                    [float(d) for d in cfg.dims],
                    [float(np.mean(v)) for v in per_d],
                    [float(min(v)) for v in per_d],
                    [float(max(v)) for v in per_d],
                )
            )
        svg.write(chart, args.plot)
    return 0


def cmd_ood_iterations(args, values) -> int:
    cfg = to_config(experiments.OodConfig, values, OOD_OPTS)
    rows, summary = experiments.run_ood_iterations(cfg)
    emit(csv_text(OOD_HEADER, rows), args.out)
    if args.summary:
        emit(csv_text(OOD_SUMMARY_HEADER, summary), args.summary)
    if args.plot:
        chart = svg.Chart("Retain excess risk during unlearning", "iteration", "excess retain risk", log_y=True)
        for f in cfg.fs:
            for method in (experiments.NOISY_MINIMIZER, experiments.TRIMGRAD):
                pts = [r for r in rows if r.f == f and r.method == method]
                chart.add(
                    svg.Series(
                        f"{method} f={f}",
                        [float(r.iteration) for r in pts],
                        [r.excess_retain_risk for r in pts],
                    )
                )
        svg.write(chart, args.plot)
    return 0


def cmd_forget_study(args, values) -> int:
    cfg = to_config(experiments.ForgetStudyConfig, values, FORGET_OPTS)
    record = experiments.run_forget_study(cfg)
    emit(csv_text(STUDY_HEADER, record.rows), args.out)
    if args.summary:
        summary = [
            argparse.Namespace(
                method=m,
                grad_evals=record.grad_evals[m],
                forget_visits=record.forget_visits[m],
                retain_acc=row.retain_acc,
                forget_acc=row.forget_acc,
                test_acc=row.test_acc,
            )
            for m, row in record.final.items()
        ]
        emit(csv_text(STUDY_SUMMARY_HEADER, summary), args.summary)
    if args.plot:
        chart = svg.Chart("Forget-set accuracy", "iteration", "forget accuracy")
        for method in record.final:
            pts = [r for r in record.rows if r.method == method]
            chart.add(svg.Series(method, [float(r.iteration) for r in pts], [r.forget_acc for r in pts]))
        svg.write(chart, args.plot)
    return 0


def _certify_instance(values) -> tuple[losses.LossModel, Dataset, ForgetSpec]:
    rng = RngHandle(values["seed"])
    if values["model"] == "anchor":
        z = rng.child(0).generator.standard_normal((values["n"], values["d"]))
        ds = Dataset("anchor", z)
        model = losses.quadratic_anchor()
    elif values["model"] == "ridge":
        if values["data"]:
            ds = scenarios.load_housing_csv(values["data"])
        else:
            ds, _ = scenarios.synthetic_regression(values["n"], values["d"], rng.child(0))
        model = losses.ridge(ds, values["lam"])
    else:
        raise UsageError(f"unknown model {values['model']!r} (expected anchor or ridge)")
    f = values["f"]
    if not 0 <= f < ds.n:
        raise ValueError(f"need 0 <= f < n (f={f}, n={ds.n})")
    idx = rng.child(1).generator.choice(ds.n, f, replace=False)
    return model, ds, ForgetSpec.of(idx)


def cmd_certify(args, values) -> int:
    if values["pipeline"] not in ("noisy_minimizer", "trimgrad"):
        raise UsageError(f"unknown pipeline {values['pipeline']!r} (expected noisy_minimizer or trimgrad)")
    model, ds, forget = _certify_instance(values)
    budget = CertBudget(values["q"], values["epsilon"], values["alpha"])
    pipeline = pipeline_noisy_minimizer if values["pipeline"] == "noisy_minimizer" else pipeline_trimgrad
    rep = pipeline(model, ds, forget, budget, np.zeros(ds.d), RngHandle(values["seed"]).child(2), verify=True, stride=0)
    record = {
        "pipeline": values["pipeline"],
        "model": values["model"],
        "n": ds.n,
        "d": ds.d,
        "f": forget.f,
        **rep.certificate.as_dict(),
        "target": rep.target,
        "train_iterations": rep.train_report.iterations,
        "unlearn_iterations": rep.unlearn_report.iterations,
        "retain_excess_risk": rep.retain_excess_risk,
    }
    emit("".join(f"{k}={fmt(v)}\n" for k, v in record.items()), args.out)
    return 0


def cmd_capacity(args, values) -> int:
    inputs = to_config(capacity.CapacityInputs, values, CAPACITY_OPTS)
    ood = capacity.ood_computational_capacity(inputs)
    record = {
        "label": capacity.ORDER_LABEL,
        "id_utility": capacity.id_utility_capacity(inputs.n, inputs.alpha),
        "id_computational": capacity.id_computational_capacity(inputs),
        "ood_computational": ood.value,
        "ood_perfect_interpolation": ood.perfect_interpolation,
    }
    emit("".join(f"{k}={fmt(v)}\n" for k, v in record.items()), args.out)
    return 0


@dataclass(frozen=True)
class Command:
    name: str
    help: str
    opts: list[Opt]
    run: Callable[[argparse.Namespace, dict], int]
    needs_seed: bool = True
    plot: bool = True
    summary: bool = False


COMMANDS = [
    Command("id-separation", "excess risk vs dimension: certified release vs lazy DP", ID_OPTS, cmd_id_separation),
    Command(
        "ood-iterations",
        "unlearning iterations on label-offset forget data",
        OOD_OPTS,
        cmd_ood_iterations,
        summary=True,
    ),
    Command(
        "forget-study",
        "corrupted-label study: naive vs trimmed micro-batch SGD vs retrain",
        FORGET_OPTS,
        cmd_forget_study,
        summary=True,
    ),
    Command("certify", "run a pipeline and verify its certificate", CERTIFY_OPTS, cmd_certify, plot=False),
    Command(
        "capacity",
        "deletion-capacity order estimates",
        CAPACITY_OPTS,
        cmd_capacity,
        needs_seed=False,
        plot=False,
    ),
]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="certunlearn", description="Certified unlearning experiments and utilities.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True
    for cmd in COMMANDS:
        p = sub.add_parser(cmd.name, help=cmd.help, description=cmd.help)
        for o in cmd.opts:
            flag = "--" + o.key.replace("_", "-")
            default = "none" if o.default is None else _show_value(o.default)
            p.add_argument(
                flag,
                dest=o.key,
                type=lambda raw, o=o: _parse_value(o, raw),
                default=argparse.SUPPRESS,
                help=f"{o.help} (default: {default})",
            )
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--print-config", action="store_true", help="print the effective configuration and exit")
        p.add_argument("--out", help="output path (default: standard output)")
        if cmd.plot:
            p.add_argument("--plot", help="write an SVG line plot to this path")
        if cmd.summary:
            p.add_argument("--summary", help="write a per-method summary CSV to this path")
        p.set_defaults(_cmd=cmd)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cmd: Command = args._cmd
        for attr in ("plot", "summary"):
            if not hasattr(args, attr):
                setattr(args, attr, None)
        values = resolve(args, cmd.opts)
        if args.print_config:
            sys.stdout.write("".join(f"{o.key} = {_show_value(values[o.key])}\n" for o in cmd.opts))
            return 0
        if cmd.needs_seed and values.get("seed") is None:
            raise UsageError("--seed is required")
        return cmd.run(args, values)
    except UsageError as exc:
        print(f"certunlearn: error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except Exception as exc:  # noqa: BLE001 - every runtime failure maps to exit 1
        print(f"certunlearn: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
