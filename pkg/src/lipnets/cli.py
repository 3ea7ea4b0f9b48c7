"""Experiment harness: subcommands, config files, deterministic artifacts.

Four experiments are exposed (``approximate``, ``certify``, ``uniform-m``,
``sweep``) plus ``run --config FILE`` which replays a saved configuration.
All artifacts (JSON reports, CSV tables, gnuplot-ready .dat files) are
byte-deterministic for a fixed configuration and seed: keys are sorted,
floats use shortest round-trip repr, and nothing records wall-clock time.

Exit codes: 0 when every declared success holds, 1 when an experiment
ran but failed its goal, 2 for usage errors.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .certification import certify
from .core import BoxDomain, NormSpec, load_sampled_csv
from .covering import uniform_width_experiment, validate_uniform_width
from .network import ACTIVATIONS, load_net_json, save_net_json
from .pipeline import ApproximationProblem, approximate
from .smoothing import fidelity_curve
from .targets import TARGETS, builtin_target

__all__ = ["ExperimentConfig", "UsageError", "run", "main"]

_NORM_EXPONENTS = {"l1": 1.0, "l2": 2.0, "linf": math.inf}
_SUBCOMMANDS = ("approximate", "certify", "uniform-m", "sweep")


class UsageError(ValueError):
    """Invalid flags or config; mapped to exit code 2."""


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment invocation, losslessly serializable to JSON."""

    subcommand: str
    options: dict
    out: str = "."
    seed: int = 0
    formats: tuple = ("json", "csv", "dat")

    def __post_init__(self) -> None:
        if self.subcommand not in _SUBCOMMANDS:
            raise UsageError(
                f"unknown subcommand {self.subcommand!r}; "
                f"expected one of {', '.join(_SUBCOMMANDS)}"
            )

    def to_json_dict(self) -> dict:
        return {
            "subcommand": self.subcommand,
            "options": self.options,
            "out": self.out,
            "seed": self.seed,
            "formats": list(self.formats),
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict) or "subcommand" not in data:
            raise UsageError("config must be a JSON object with a 'subcommand' key")
        return cls(
            subcommand=data["subcommand"],
            options=dict(data.get("options", {})),
            out=str(data.get("out", ".")),
            seed=int(data.get("seed", 0)),
            formats=tuple(data.get("formats", ("json", "csv", "dat"))),
        )

    def save(self, path) -> None:
        Path(path).write_text(
            json.dumps(self.to_json_dict(), indent=2, sort_keys=True) + "\n"
        )

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        text = Path(path).read_text()
        if not text.strip():
            raise UsageError(f"config file {path} is empty")
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise UsageError(f"config file {path} is not valid JSON: {exc}") from exc
        return cls.from_json_dict(data)


def _norm_from_name(name: str, d: int) -> NormSpec:
    if name not in _NORM_EXPONENTS:
        raise UsageError(f"unknown norm {name!r}; expected one of l1, l2, linf")
    return NormSpec(p=_NORM_EXPONENTS[name], d=d)


def _parse_box(flat) -> BoxDomain:
    values = [float(v) for v in flat]
    if len(values) % 2 != 0 or not values:
        raise UsageError("--box expects lower/upper pairs, one pair per axis")
    lower = np.array(values[0::2])
    upper = np.array(values[1::2])
    if not (lower < upper).all():
        raise UsageError("--box lower bounds must be below upper bounds")
    return BoxDomain(lower, upper)


def _write_text(out_dir: Path, name: str, text: str) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    path.write_text(text)
    return path


def _resolve_problem(options: dict, seed: int, epsilon: float) -> ApproximationProblem:
    name = options.get("target")
    if not name:
        raise UsageError("--target is required")
    activation = options.get("activation", "relu")
    if activation not in ACTIVATIONS:
        raise UsageError(f"unknown activation {activation!r}")
    if name in TARGETS:
        spec = builtin_target(name)
        target = spec.make(seed)
        domain = spec.domain
        d = spec.d
        default_bound = spec.lipschitz_bound
        default_norm = spec.norm
    elif Path(str(name)).exists():
        sampled = load_sampled_csv(name)
        target = sampled
        domain = sampled.domain
        d = domain.d
        default_bound = None
        default_norm = None
    else:
        raise UsageError(
            f"target {name!r} is neither a builtin ({', '.join(sorted(TARGETS))}) "
            f"nor an existing sample file"
        )
    dim = options.get("dim")
    if dim is not None and int(dim) != d:
        raise UsageError(f"--dim {dim} does not match target dimension {d}")
    bound = options.get("lipschitz", default_bound)
    if bound is None:
        raise UsageError("--L is required for sample-file targets")
    norm_name = options.get("norm")
    norm = _norm_from_name(norm_name, d) if norm_name else default_norm
    if norm is None:
        norm = NormSpec(p=math.inf, d=d)
    return ApproximationProblem(
        target=target,
        lipschitz_bound=float(bound),
        domain=domain,
        epsilon=float(epsilon),
        norm=norm,
        activation=activation,
        seed=seed,
    )


def _run_approximate(config: ExperimentConfig) -> int:
    options = config.options
    if "eps" not in options:
        raise UsageError("--eps is required")
    problem = _resolve_problem(options, config.seed, float(options["eps"]))
    report = approximate(problem, int(options.get("m_max", 256)))
    out = Path(config.out)
    _write_text(out, "report.json", report.to_json())
    save_net_json(report.net, out / "net.json")
    if not report.success:
        print(f"approximate failed: {report.failure_reason}", file=sys.stderr)
    return 0 if report.success else 1


def _run_certify(config: ExperimentConfig) -> int:
    options = config.options
    for key in ("net", "lipschitz", "box"):
        if key not in options:
            raise UsageError(f"certify requires --{'L' if key == 'lipschitz' else key}")
    net = load_net_json(options["net"])
    box = _parse_box(options["box"])
    if box.d != net.d:
        raise UsageError(f"--box has dimension {box.d} but the net expects {net.d}")
    norm = _norm_from_name(options.get("norm", "linf"), box.d)
    certificate = certify(
        net,
        float(options["lipschitz"]),
        box,
        norm,
        seed=config.seed,
    )
    out = Path(config.out)
    _write_text(out, "certificate.json", certificate.to_json())
    print(certificate.to_json(), end="")
    return 0 if certificate.verdict == "certified" else 1


def _run_uniform_m(config: ExperimentConfig) -> int:
    options = config.options
    if "eps" not in options:
        raise UsageError("--eps is required")
    epsilon = float(options["eps"])
    box = _parse_box(options.get("box", (0.0, 1.0)))
    hat_flat = options.get("hat_box")
    hat_box = _parse_box(hat_flat) if hat_flat else box
    bound = float(options.get("lipschitz", 1.0))
    result = uniform_width_experiment(
        bound,
        box,
        hat_box,
        epsilon,
        activation=options.get("activation", "relu"),
        seed=config.seed,
        max_width=int(options.get("m_max", 256)),
        radius_trials=int(options.get("trials", 500)),
    )
    count = int(options.get("validate", 50))
    errors = validate_uniform_width(result, count=count, seed=config.seed)
    out = Path(config.out)
    rows = ["element,width,sup_error,certified_bound"]
    for index, report in enumerate(result.element_reports):
        rows.append(
            f"{index},{report.stages['width']},{report.sup_error!r},"
            f"{report.certificate.upper_bound!r}"
        )
    _write_text(out, "uniform_width.csv", "\n".join(rows) + "\n")
    summary = result.summary_json_dict()
    summary["validation_count"] = count
    summary["validation_max_error"] = float(errors.max())
    summary["validation_all_within_epsilon"] = bool((errors <= epsilon).all())
    _write_text(
        out,
        "uniform_width.json",
        json.dumps(summary, indent=2, sort_keys=True) + "\n",
    )
    ok = summary["validation_all_within_epsilon"]
    if not ok:
        print(
            f"uniform-m failed: validation error {errors.max():.6g} > {epsilon:.6g}",
            file=sys.stderr,
        )
    return 0 if ok else 1


def _run_sweep(config: ExperimentConfig) -> int:
    options = config.options
    eps_raw = options.get("eps_list")
    if not eps_raw:
        raise UsageError("--eps-list is required")
    if isinstance(eps_raw, str):
        eps_values = [float(tok) for tok in eps_raw.split(",") if tok.strip()]
    else:
        eps_values = [float(v) for v in eps_raw]
    if not eps_values:
        raise UsageError("--eps-list must contain at least one value")
    if any(b >= a for a, b in zip(eps_values, eps_values[1:])):
        raise UsageError("--eps-list values must be strictly decreasing")
    rows = []
    all_ok = True
    for epsilon in eps_values:
        problem = _resolve_problem(options, config.seed, epsilon)
        report = approximate(problem, int(options.get("m_max", 256)))
        rows.append(
            (
                epsilon,
                int(report.stages["width"]),
                float(report.sup_error),
                float(report.certificate.upper_bound),
                report.success,
            )
        )
        all_ok = all_ok and report.success
    out = Path(config.out)
    csv_rows = ["epsilon,width,sup_error,certified_bound,success"]
    for eps, width, err, bound, ok in rows:
        csv_rows.append(f"{eps!r},{width},{err!r},{bound!r},{str(ok).lower()}")
    _write_text(out, "sweep.csv", "\n".join(csv_rows) + "\n")
    _write_text(
        out,
        "eps_vs_error.dat",
        "# epsilon sup_error\n"
        + "".join(f"{eps!r} {err!r}\n" for eps, _, err, _, _ in rows),
    )
    _write_text(
        out,
        "eps_vs_m.dat",
        "# epsilon width\n" + "".join(f"{eps!r} {width}\n" for eps, width, *_ in rows),
    )
    d = 1
    if options.get("dim"):
        d = int(options["dim"])
    elif options.get("target") in TARGETS:
        d = builtin_target(options["target"]).d
    curve = fidelity_curve(d)
    _write_text(
        out,
        "kappa_vs_lambda.dat",
        "# radius gradient_deviation\n"
        + "".join(f"{r!r} {dev!r}\n" for r, dev in curve),
    )
    return 0 if all_ok else 1


_RUNNERS = {
    "approximate": _run_approximate,
    "certify": _run_certify,
    "uniform-m": _run_uniform_m,
    "sweep": _run_sweep,
}


def run(config: ExperimentConfig) -> int:
    """Execute one experiment; returns the process exit status."""
    return _RUNNERS[config.subcommand](config)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lipnets",
        description="Certified Lipschitz network approximation experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=".", help="output directory")

    p_approx = sub.add_parser("approximate", help="fit and certify one target")
    p_approx.add_argument("--target", required=True,
                          help="builtin target name or sampled-function CSV path")
    p_approx.add_argument("--L", "--lipschitz", dest="lipschitz", type=float)
    p_approx.add_argument("--eps", type=float, required=True)
    p_approx.add_argument("--norm", choices=sorted(_NORM_EXPONENTS))
    p_approx.add_argument("--dim", type=int)
    p_approx.add_argument("--activation", choices=sorted(ACTIVATIONS), default="relu")
    p_approx.add_argument("--m-max", dest="m_max", type=int, default=256)
    common(p_approx)

    p_cert = sub.add_parser("certify", help="certify a stored network")
    p_cert.add_argument("--net", required=True, help="network JSON file")
    p_cert.add_argument("--L", "--lipschitz", dest="lipschitz", type=float,
                        required=True)
    p_cert.add_argument("--norm", choices=sorted(_NORM_EXPONENTS), default="linf")
    p_cert.add_argument("--box", type=float, nargs="+", required=True,
                        help="lower/upper pairs, one pair per axis")
    common(p_cert)

    p_uni = sub.add_parser("uniform-m", help="uniform-width covering experiment")
    p_uni.add_argument("--L", "--lipschitz", dest="lipschitz", type=float, default=1.0)
    p_uni.add_argument("--eps", type=float, required=True)
    p_uni.add_argument("--box", type=float, nargs="+", default=(0.0, 1.0))
    p_uni.add_argument("--hat-box", dest="hat_box", type=float, nargs="+")
    p_uni.add_argument("--activation", choices=sorted(ACTIVATIONS), default="relu")
    p_uni.add_argument("--m-max", dest="m_max", type=int, default=256)
    p_uni.add_argument("--trials", type=int, default=500)
    p_uni.add_argument("--validate", type=int, default=50)
    common(p_uni)

    p_sweep = sub.add_parser("sweep", help="accuracy sweep over epsilon values")
    p_sweep.add_argument("--target", required=True)
    p_sweep.add_argument("--L", "--lipschitz", dest="lipschitz", type=float)
    p_sweep.add_argument("--eps-list", dest="eps_list", required=True,
                         help="comma-separated, strictly decreasing")
    p_sweep.add_argument("--norm", choices=sorted(_NORM_EXPONENTS))
    p_sweep.add_argument("--dim", type=int)
    p_sweep.add_argument("--activation", choices=sorted(ACTIVATIONS), default="relu")
    p_sweep.add_argument("--m-max", dest="m_max", type=int, default=256)
    common(p_sweep)

    p_run = sub.add_parser("run", help="replay a saved experiment config")
    p_run.add_argument("--config", required=True)
    return parser


_OPTION_KEYS = {
    "approximate": ("target", "lipschitz", "eps", "norm", "dim", "activation", "m_max"),
    "certify": ("net", "lipschitz", "norm", "box"),
    "uniform-m": ("lipschitz", "eps", "box", "hat_box", "activation", "m_max",
                  "trials", "validate"),
    "sweep": ("target", "lipschitz", "eps_list", "norm", "dim", "activation",
              "m_max"),
}


def _config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    if args.command == "run":
        return ExperimentConfig.load(args.config)
    keys = _OPTION_KEYS[args.command]
    options = {}
    for key in keys:
        value = getattr(args, key, None)
        if value is None:
            continue
        if isinstance(value, (list, tuple)):
            value = list(value)
        options[key] = value
    return ExperimentConfig(
        subcommand=args.command,
        options=options,
        out=args.out if args.command != "run" else ".",
        seed=getattr(args, "seed", 0),
    )


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits on --help and usage errors
        return int(exc.code) if exc.code else 0
    try:
        config = _config_from_args(args)
        return run(config)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # experiment-level failure
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
