"""Command-line front end.

Exit codes: 0 accept, 3 reject, 64 usage, 65 data, 70 numeric failure,
73 output not writable.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from ._rng import substream
from .calibration import CalibrationMethod, CalibrationResult, calibrate
from .errors import DataFormatError, InvalidInputError, KFDAError
from .kernels import KernelFamily, KernelSpec
from .power import (
    AlternativeModel,
    empirical_power_curve,
    gaussian_mixture_scenario,
    gaussian_null,
    roc_curve,
    uniform_null,
)
from .spectrum import TwoSample, build_bundle
from .statistics import GammaSchedule, TestStatisticValue, decaying_gamma, kfda_from_bundle

EXIT_ACCEPT = 0
EXIT_REJECT = 3
EXIT_USAGE = 64
EXIT_DATA = 65
EXIT_NUMERIC = 70
EXIT_CANTCREAT = 73


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers: {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="kfda", description="Regularized kernel Fisher discriminant two-sample test.")
    p.add_argument("--command", choices=["test", "power", "roc", "calibrate"], default="test")
    p.add_argument("--version", action="version", version=f"kfda {__version__}")

    io = p.add_argument_group("input/output")
    io.add_argument("--input", help="CSV with both samples and a label column")
    io.add_argument("--sample1", help="CSV of the first sample")
    io.add_argument("--sample2", help="CSV of the second sample")
    io.add_argument("--label-column", default="sample", help="label column name (values 1/2)")
    io.add_argument("--out", help="output path (default stdout)")
    io.add_argument("--format", choices=["json", "tsv"], default=None)

    k = p.add_argument_group("kernel")
    k.add_argument("--kernel", choices=[f.value for f in KernelFamily], default=None)
    k.add_argument("--bandwidth", type=float, default=None)
    k.add_argument("--spline-order", type=int, default=2)

    t = p.add_argument_group("test")
    t.add_argument("--gamma", type=float, default=None,
                   help="fixed gamma, or the scale c of c * n^-a under a decaying schedule")
    t.add_argument("--gamma-schedule", default="fixed", help="'fixed' or 'decaying[:a]' (a in (0, 1/2))")
    t.add_argument("--alpha", type=float, default=0.05)
    t.add_argument("--calibration", choices=[m.value for m in CalibrationMethod], default=None)
    t.add_argument("--block-length", type=int, default=None)
    t.add_argument("--replicates", type=int, default=None,
                   help="Monte Carlo draws or resamples per calibration")
    t.add_argument("--seed", type=int, default=0)

    s = p.add_argument_group("simulation (power, roc, calibrate)")
    s.add_argument("--alternative", choices=["directional", "fixed"], default="directional")
    s.add_argument("--q", type=int, default=1, help="contaminated Fourier component")
    s.add_argument("--eta", type=float, default=0.0,
                   help="amplitude: A in A/sqrt(n) (directional) or eta (fixed)")
    s.add_argument("--n1", type=int, default=200)
    s.add_argument("--n2", type=int, default=200)
    s.add_argument("--gammas", type=_float_list, default=None, help="comma-separated gamma grid")
    s.add_argument("--alphas", type=_float_list, default=None, help="comma-separated alpha grid (roc)")
    s.add_argument("--replications", type=int, default=200)
    s.add_argument("--shift", type=float, default=0.5, help="mixture displacement (roc)")
    return p


# --------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class RunConfig:
    command: str
    kernel: KernelSpec
    gamma: float | None
    schedule: GammaSchedule
    decay_exponent: float
    alpha: float
    calibration: CalibrationMethod | None
    replicates: int | None
    block_length: int | None
    seed: int
    out: str | None
    format: str
    input: str | None = None
    sample1: str | None = None
    sample2: str | None = None
    label_column: str = "sample"
    alternative: str = "directional"
    q: int = 1
    eta: float = 0.0
    n1: int = 200
    n2: int = 200
    gammas: tuple = ()
    alphas: tuple = ()
    replications: int = 200
    shift: float = 0.5

    def resolve_gamma(self, n: int) -> float:
        if self.schedule is GammaSchedule.DECAYING:
            return decaying_gamma(n, self.gamma or 1.0, self.decay_exponent)
        return 0.1 if self.gamma is None else self.gamma

    def method(self) -> CalibrationMethod:
        if self.calibration is not None:
            return self.calibration
        if self.schedule is GammaSchedule.DECAYING:
            return CalibrationMethod.NORMAL
        return CalibrationMethod.MIXTURE


def _parse_schedule(text: str) -> tuple[GammaSchedule, float]:
    name, _, exponent = text.partition(":")
    try:
        schedule = GammaSchedule(name)
    except ValueError:
        raise UsageError(f"unknown gamma schedule {name!r}") from None
    if schedule is GammaSchedule.FIXED:
        if exponent:
            raise UsageError("a fixed schedule takes no exponent")
        return schedule, 0.25
    try:
        a = float(exponent) if exponent else 0.25
    except ValueError:
        raise UsageError(f"bad decay exponent {exponent!r}") from None
    if not 0 < a < 0.5:
        raise UsageError(f"decay exponent must lie in (0, 1/2), got {a}")
    return schedule, a


def parse_config(argv=None) -> RunConfig:
    ns = build_parser().parse_args(argv)
    schedule, exponent = _parse_schedule(ns.gamma_schedule)
    if ns.gamma is not None and not (math.isfinite(ns.gamma) and ns.gamma > 0):
        raise UsageError(f"--gamma must be positive, got {ns.gamma}")
    if not 0 < ns.alpha < 1:
        raise UsageError(f"--alpha must lie in (0, 1), got {ns.alpha}")
    method = CalibrationMethod(ns.calibration) if ns.calibration else None
    if ns.block_length is not None and method is not CalibrationMethod.BLOCK_BOOTSTRAP:
        raise UsageError("--block-length requires --calibration block-bootstrap")
    if ns.replicates is not None and ns.replicates < 1:
        raise UsageError("--replicates must be positive")
    if ns.replications < 100 and ns.command != "test":
        raise UsageError(f"--replications must be >= 100, got {ns.replications}")

    family = ns.kernel or ("spline" if ns.command == "power" else "gaussian")
    kernel = KernelSpec(
        KernelFamily(family),
        bandwidth=ns.bandwidth if family == "gaussian" else None,
        spline_order=ns.spline_order if family == "spline" else None,
    )

    if ns.command == "test":
        if ns.input and (ns.sample1 or ns.sample2):
            raise UsageError("use either --input or --sample1/--sample2")
        if not ns.input and not (ns.sample1 and ns.sample2):
            raise UsageError("test needs --input or both --sample1 and --sample2")
    if ns.command == "power" and kernel.family is not KernelFamily.PERIODIC_SPLINE:
        raise UsageError("power studies use the Fourier alternatives on [0, 1]; pick --kernel spline")

    default_format = "json" if ns.command in ("test", "calibrate") else "tsv"
    return RunConfig(
        command=ns.command,
        kernel=kernel,
        gamma=ns.gamma,
        schedule=schedule,
        decay_exponent=exponent,
        alpha=ns.alpha,
        calibration=method,
        replicates=ns.replicates,
        block_length=ns.block_length,
        seed=ns.seed,
        out=ns.out,
        format=ns.format or default_format,
        input=ns.input,
        sample1=ns.sample1,
        sample2=ns.sample2,
        label_column=ns.label_column,
        alternative=ns.alternative,
        q=ns.q,
        eta=ns.eta,
        n1=ns.n1,
        n2=ns.n2,
        gammas=tuple(ns.gammas or (1.0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9)),
        alphas=tuple(ns.alphas or (0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9)),
        replications=ns.replications,
        shift=ns.shift,
    )


# --------------------------------------------------------------------------
# CSV input


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def read_table(path: str) -> tuple[list[str] | None, list[tuple[int, list[str]]]]:
    """(header or None, [(line number, cells)]) with blank lines skipped."""
    try:
        with open(path, newline="") as fh:
            rows = [(i, row) for i, row in enumerate(csv.reader(fh), start=1)
                    if row and any(c.strip() for c in row)]
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except (csv.Error, UnicodeDecodeError) as exc:
        raise DataFormatError(f"{path}: not a readable CSV ({exc})") from exc
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    header = None
    if not all(_is_number(c) for c in rows[0][1]):
        header = [c.strip() for c in rows[0][1]]
        rows = rows[1:]
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    return header, rows


def _parse_rows(path, header, rows, label_index):
    width = len(header) if header else len(rows[0][1])
    feats, labels = [], []
    for line, cells in rows:
        if len(cells) != width:
            raise DataFormatError(f"{path}:{line}: expected {width} fields, found {len(cells)}")
        try:
            values = [float(c) for c in cells]
        except ValueError:
            bad = next(c for c in cells if not _is_number(c))
            raise DataFormatError(f"{path}:{line}: non-numeric field {bad!r}") from None
        if not all(math.isfinite(v) for v in values):
            raise DataFormatError(f"{path}:{line}: non-finite value")
        if label_index is not None:
            lab = values.pop(label_index)
            if lab not in (1.0, 2.0):
                raise DataFormatError(f"{path}:{line}: sample label must be 1 or 2, got {lab:g}")
            labels.append(int(lab))
        if not values:
            raise DataFormatError(f"{path}:{line}: no feature columns")
        feats.append(values)
    return np.array(feats), np.array(labels, dtype=int)


def load_samples(cfg: RunConfig) -> TwoSample:
    if cfg.input:
        header, rows = read_table(cfg.input)
        if header is None or cfg.label_column not in header:
            raise DataFormatError(f"{cfg.input}: header lacks label column {cfg.label_column!r}")
        x, labels = _parse_rows(cfg.input, header, rows, header.index(cfg.label_column))
        x1, x2 = x[labels == 1], x[labels == 2]
    else:
        parts = []
        for path in (cfg.sample1, cfg.sample2):
            header, rows = read_table(path)
            idx = header.index(cfg.label_column) if header and cfg.label_column in header else None
            parts.append(_parse_rows(path, header, rows, idx)[0])
        x1, x2 = parts
        if x1.shape[1] != x2.shape[1]:
            raise DataFormatError(f"feature dimension differs: {x1.shape[1]} vs {x2.shape[1]}")
    try:
        return TwoSample.from_samples(x1, x2)
    except InvalidInputError as exc:
        raise DataFormatError(str(exc)) from exc


# --------------------------------------------------------------------------
# commands


@dataclass(frozen=True)
class TestOutcome:
    __test__ = False

    statistic: TestStatisticValue
    calibration: CalibrationResult
    metadata: dict = field(default_factory=dict)

    @property
    def decision(self) -> str:
        return "reject" if self.calibration.rejects() else "accept"

    def as_dict(self) -> dict:
        return {
            "statistic": self.statistic.as_dict(),
            "calibration": self.calibration.as_dict(),
            "decision": self.decision,
            "metadata": self.metadata,
        }


def cmd_test(cfg: RunConfig) -> TestOutcome:
    sample = load_samples(cfg)
    if cfg.kernel.family is KernelFamily.LINEAR:
        print("kfda: warning: linear kernel: only mean differences are detectable",
              file=sys.stderr)
    bundle = build_bundle(sample, cfg.kernel)
    gamma = cfg.resolve_gamma(sample.n)
    value = kfda_from_bundle(bundle, gamma)
    cal = calibrate(bundle, value, gamma, cfg.method(), cfg.alpha, cfg.replicates, cfg.seed,
                    cfg.block_length)
    meta = {
        "n1": sample.n1,
        "n2": sample.n2,
        "kernel": bundle.spec.describe(),
        "gamma": gamma,
        "gamma_schedule": cfg.schedule.value,
        "seed": cfg.seed,
        "version": __version__,
    }
    return TestOutcome(value, cal, meta)


def _model(cfg: RunConfig) -> AlternativeModel:
    if cfg.alternative == "fixed":
        return AlternativeModel.fixed(cfg.q, cfg.eta)
    return AlternativeModel.directional(cfg.q, cfg.eta)


def cmd_power(cfg: RunConfig) -> list[dict]:
    model = _model(cfg)
    model.contamination(cfg.n1 + cfg.n2)
    points = empirical_power_curve(
        model, cfg.kernel, cfg.gammas, cfg.n1, cfg.n2, cfg.alpha, cfg.replications,
        cfg.method(), cfg.seed, max(cfg.replicates or 10_000, 10_000),
    )
    return [
        {
            "gamma": p.gamma,
            "q": p.q,
            "n": p.n,
            "theoretical_power": p.theoretical_power,
            "empirical_power_kfda": p.empirical_power,
            "empirical_power_mmd": p.empirical_power_mmd,
            "se": p.se,
        }
        for p in points
    ]


def cmd_roc(cfg: RunConfig) -> list[dict]:
    gamma = cfg.resolve_gamma(cfg.n1 + cfg.n2)
    curve = roc_curve(
        gaussian_mixture_scenario(cfg.shift), cfg.kernel, gamma, cfg.n1, cfg.n2, cfg.alphas,
        cfg.replications, cfg.seed, cfg.method(), cfg.replicates,
    )
    return [{"alpha": a, "fpr": f, "tpr": t} for a, f, t in curve]


def cmd_calibrate(cfg: RunConfig) -> dict:
    """Empirical level of each calibration method under a built-in null."""
    gen = uniform_null if cfg.kernel.family is KernelFamily.PERIODIC_SPLINE else gaussian_null
    methods = [cfg.calibration] if cfg.calibration else [
        CalibrationMethod.MIXTURE, CalibrationMethod.NORMAL
    ]
    n = cfg.n1 + cfg.n2
    gamma = cfg.resolve_gamma(n)
    rejections = {m: 0 for m in methods}
    for r in range(cfg.replications):
        sample = gen(cfg.n1, cfg.n2, substream(cfg.seed, "calibrate-data", r))
        bundle = build_bundle(sample, cfg.kernel)
        value = kfda_from_bundle(bundle, gamma)
        for m in methods:
            reps = cfg.replicates or (20_000 if m is CalibrationMethod.MIXTURE else 200)
            cal_seed = int(substream(cfg.seed, "calibrate-mc", m.value, r).integers(2**63))
            res = calibrate(bundle, value, gamma, m, cfg.alpha, reps, cal_seed, cfg.block_length)
            rejections[m] += res.rejects()
    rows = []
    for m in methods:
        level = rejections[m] / cfg.replications
        rows.append({
            "method": m.value,
            "level": level,
            "se": math.sqrt(level * (1 - level) / cfg.replications),
            "rejections": rejections[m],
        })
    return {
        "alpha": cfg.alpha,
        "gamma": gamma,
        "n1": cfg.n1,
        "n2": cfg.n2,
        "kernel": cfg.kernel.describe(),
        "replications": cfg.replications,
        "seed": cfg.seed,
        "version": __version__,
        "methods": rows,
    }


# --------------------------------------------------------------------------
# serialization


def _cell(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def to_tsv(rows: list[dict]) -> str:
    header = list(rows[0])
    lines = ["\t".join(header)] + ["\t".join(_cell(r[k]) for k in header) for r in rows]
    return "\n".join(lines) + "\n"


def _flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


def to_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def render(obj, fmt: str) -> str:
    if fmt == "json":
        return to_json(obj)
    if isinstance(obj, dict):
        if "methods" in obj:
            common = {k: v for k, v in _flatten(obj).items() if k != "methods"}
            return to_tsv([{**common, **row} for row in obj["methods"]])
        return to_tsv([_flatten(obj)])
    return to_tsv(obj)


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(text)


def run(cfg: RunConfig) -> int:
    code = EXIT_ACCEPT
    if cfg.command == "test":
        outcome = cmd_test(cfg)
        payload = outcome.as_dict()
        code = EXIT_REJECT if outcome.decision == "reject" else EXIT_ACCEPT
    elif cfg.command == "power":
        payload = cmd_power(cfg)
    elif cfg.command == "roc":
        payload = cmd_roc(cfg)
    else:
        payload = cmd_calibrate(cfg)
    try:
        _emit(render(payload, cfg.format), cfg.out)
    except OSError as exc:
        print(f"kfda: cannot write {cfg.out}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_CANTCREAT
    return code


def main(argv=None) -> int:
    try:
        cfg = parse_config(argv)
        return run(cfg)
    except UsageError as exc:
        print(f"kfda: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataFormatError as exc:
        print(f"kfda: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except InvalidInputError as exc:
        print(f"kfda: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except KFDAError as exc:
        print(f"kfda: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
