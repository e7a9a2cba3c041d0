"""Command-line entry point: ``finder {run,synth,impute,bounds}``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
Every output file starts with ``# key = value`` lines echoing the full run
configuration, so :func:`config_from_output` can rebuild it.
"""
from __future__ import annotations

import argparse
import csv
import io as _io
import logging
import sys
from dataclasses import MISSING, asdict, dataclass, fields
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from . import dataio as io
from .bounds import markov_rhs, tail_bound
from .errors import DataError, DimensionError, FinderError, NumericError, RoundError
from .evaluation import PipelineConfig, class_rows, grid_search, run_lpocv, standardize
from .kle import empirical_covariance, empirical_mean, energy_truncation, estimate_eigensystem
from .subspace import Variant, build_transform
from .synth import SynthSpec, sample, scenario_dataset, two_class_scenario

log = logging.getLogger("finder")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(FinderError):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Experiment settings. Only ``input_path`` and ``label_column`` lack defaults."""

    input_path: str
    label_column: str
    positive_label: str = ""  # empty = minority class
    variant: str = "aca-l"
    m_a: str = "5"  # integer count, or a fraction in (0, 1) for energy truncation
    m_res_list: Tuple[int, ...] = (5,)
    regime: str = "unbalanced"
    kernel: str = "rbf"
    cost: float = 1.0
    gamma: str = "auto"
    seed: int = 0
    shuffle: bool = False
    grid: bool = False
    impute_k: int = 5
    n_jobs: int = 1
    output_dir: str = "finder-out"

    def m_a_value(self):
        text = str(self.m_a).strip()
        if "." in text or "e" in text.lower():
            val = float(text)
            return val if 0 < val < 1 else int(val)
        return int(text)

    def pipeline(self, m_res: int) -> PipelineConfig:
        return PipelineConfig(
            variant=self.variant, m_a=self.m_a_value(), m_res=m_res, kernel=self.kernel,
            cost=self.cost, gamma=None if self.gamma == "auto" else float(self.gamma),
            regime=self.regime, seed=self.seed, shuffle=self.shuffle, n_jobs=self.n_jobs,
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["m_res_list"] = ",".join(str(m) for m in self.m_res_list)
        return {k: str(v).lower() if isinstance(v, bool) else str(v) for k, v in d.items()}

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        kinds = {f.name: f for f in fields(cls)}
        kw = {}
        for key, value in raw.items():
            key = key.strip().lower().replace("-", "_")
            if key not in kinds:
                raise UsageError(f"unknown config key {key!r}")
            value = str(value).strip()
            default = kinds[key].default
            try:
                if key == "m_res_list":
                    kw[key] = tuple(int(t) for t in value.split(",") if t.strip())
                elif isinstance(default, bool):
                    if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
                        raise ValueError(value)
                    kw[key] = value.lower() in ("true", "1", "yes")
                elif isinstance(default, int):
                    kw[key] = int(value)
                elif isinstance(default, float):
                    kw[key] = float(value)
                else:
                    kw[key] = value
            except ValueError:
                raise UsageError(f"bad value for {key}: {value!r}") from None
        for req in ("input_path", "label_column"):
            if not kw.get(req):
                raise UsageError(f"missing required setting {req!r}")
        cfg = cls(**kw)
        cfg.validate()
        return cfg

    def validate(self):
        try:
            Variant.parse(self.variant)
            self.m_a_value()
            PipelineConfig(variant=self.variant, kernel=self.kernel, regime=self.regime)
            if self.gamma != "auto" and not float(self.gamma) > 0:
                raise ValueError("gamma must be positive or 'auto'")
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        if not self.m_res_list:
            raise UsageError("m_res_list is empty")
        if self.cost <= 0 or self.impute_k < 1 or self.n_jobs < 1:
            raise UsageError("cost, impute_k and n_jobs must be positive")


def _echo_header(cfg: RunConfig) -> str:
    return "".join(f"# {k} = {v}\n" for k, v in cfg.to_dict().items())


def config_from_output(path) -> RunConfig:
    """Rebuild the RunConfig echoed at the top of an output file."""
    raw = {}
    for line in Path(path).read_text().splitlines():
        if not line.startswith("# "):
            break
        key, _, value = line[2:].partition(" = ")
        raw[key] = value
    return RunConfig.from_dict(raw)


def _fmt(x) -> str:
    return f"{x:.6g}" if isinstance(x, float) else str(x)


def _write_table(path: Path, cfg: RunConfig, header, rows) -> None:
    buf = _io.StringIO()
    buf.write(_echo_header(cfg))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    path.write_text(buf.getvalue())


def _load(cfg: RunConfig):
    data = io.load_csv(cfg.input_path, cfg.label_column)
    log.info("loaded %s: %d rows, %d features, %d missing cells", cfg.input_path,
             data.n_samples, data.n_features, int(data.missing_mask.sum()))
    if data.missing_mask.any():
        data = io.knn_impute(data, cfg.impute_k)
    return data


def _check_m_res(cfg: RunConfig, n_features: int):
    m_a = cfg.m_a_value()
    fixed = m_a if isinstance(m_a, int) else 0
    bound = n_features - fixed
    for m in cfg.m_res_list:
        if m < 1 or m > bound:
            raise DataError(f"m_res={m} outside [1, F - M_A] = [1, {bound}] (F={n_features}, M_A={fixed})")


def run(cfg: RunConfig) -> int:
    """Run the LPOCV sweep and write metrics, per-round, sweep and timing files."""
    data = _load(cfg)
    _check_m_res(cfg, data.n_features)
    positive = cfg.positive_label or None
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    metrics, rounds, sweep, timing = [], [], [], []
    for m_res in cfg.m_res_list:
        base = cfg.pipeline(m_res)
        if cfg.grid:
            results = grid_search(data, base, positive)
        else:
            results = [(base, run_lpocv(data, base, positive))]
        best = None
        for pc, rep in results:
            out_dim = rep.per_round[0].output_dim
            gamma = "auto" if pc.gamma is None else pc.gamma
            metrics.append((pc.variant, pc.regime, pc.kernel, pc.cost, gamma, pc.gamma_scale,
                            cfg.m_a, m_res, out_dim, rep.auc, rep.accuracy, rep.pooled_auc,
                            len(rep.per_round)))
            timing.append((m_res, pc.cost, pc.gamma_scale, rep.mean_round_ms,
                           1000.0 * sum(r.seconds for r in rep.per_round)))
            for r in rep.per_round:
                rounds.append((m_res, pc.cost, pc.gamma_scale, r.split_index, r.test_a,
                               r.test_b, r.score_a, r.score_b, r.m_a))
            if best is None or rep.auc > best.auc:
                best = rep
        sweep.append((m_res, best.auc, best.accuracy))
        log.info("M_res=%d AUC=%.4f accuracy=%.4f", m_res, best.auc, best.accuracy)
    _write_table(out / "metrics.csv", cfg,
                 ("variant", "regime", "kernel", "cost", "gamma", "gamma_scale", "M_A", "M_res",
                  "output_dim", "AUC", "accuracy", "pooled_AUC", "rounds"), metrics)
    _write_table(out / "rounds.csv", cfg,
                 ("M_res", "cost", "gamma_scale", "round", "test_a", "test_b", "score_a",
                  "score_b", "M_A_used"), rounds)
    _write_table(out / "sweep.csv", cfg, ("M_res", "AUC", "accuracy"), sweep)
    _write_table(out / "timing.csv", cfg,
                 ("M_res", "cost", "gamma_scale", "mean_round_ms", "total_ms"), timing)
    (out / "config.txt").write_text(io.format_config(cfg.to_dict()))
    return EXIT_OK


def bounds_table(cfg: RunConfig, epsilon: float):
    """Markov bounds per M_res for the whole dataset (standardised on all rows)."""
    data = _load(cfg)
    _check_m_res(cfg, data.n_features)
    idx_a, idx_b = class_rows(data, cfg.positive_label or None)
    mu, sd = standardize(data.values)
    z = (data.values - mu) / sd
    za, zb = z[idx_a], z[idx_b]
    mean_a = empirical_mean(za)
    eig_a = estimate_eigensystem(za - mean_a, mean=mean_a)
    mean_b = empirical_mean(zb)
    eig_b = estimate_eigensystem(zb - mean_b, mean=mean_b)
    m_a = cfg.m_a_value()
    if isinstance(m_a, float):
        m_a = energy_truncation(eig_a, m_a)
    cov_b = empirical_covariance(zb, None)
    rows = []
    for m_res in cfg.m_res_list:
        t = build_transform(cfg.variant, eig_a, m_a, m_res, cov_b)
        ra = markov_rhs(eig_a, t.basis, epsilon)
        rb = markov_rhs(eig_b, t.basis, epsilon)
        rows.append((Variant.parse(cfg.variant).value, m_a, m_res, t.output_dim, epsilon,
                     ra.rhs, tail_bound(eig_a, m_a) / epsilon**2, rb.rhs))
    header = ("variant", "M_A", "M_res", "output_dim", "epsilon", "markov_A", "tail_A", "markov_B")
    return header, rows


def synth(spec_path, output_dir, n_a: Optional[int], n_b: Optional[int]) -> int:
    """Generate a CSV from a scenario file or a single SynthSpec file."""
    raw = io.read_config(spec_path)
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if "eigenvalues" in raw:
        spec = SynthSpec.from_config(raw)
        n = int(raw.get("n", n_a or 100))
        io.write_csv(sample(spec, n), out / "data.csv")
        return EXIT_OK
    try:
        f = int(raw["f"])
        lists = lambda key: [float(t) for t in raw.get(key, "").split(",") if t.strip()]
        mean = lists("shared_mean") or None
        spec_a, spec_b = two_class_scenario(
            f, mean, lists("a_spectrum"), lists("b_spectrum"), int(raw.get("overlap_dims", 0)),
            int(raw.get("seed", 0)), raw.get("law", "gaussian").strip(),
            noise=float(raw.get("noise", 0.0)),
            rotation_seed=int(raw["rotation_seed"]) if raw.get("rotation_seed", "").strip() else None,
        )
        n_a = n_a or int(raw.get("n_a", 60))
        n_b = n_b or int(raw.get("n_b", 20))
    except KeyError as exc:
        raise UsageError(f"scenario file lacks key {exc}") from None
    data = scenario_dataset(spec_a, spec_b, n_a, n_b, raw.get("label_a", "A"), raw.get("label_b", "B"))
    io.write_csv(data, out / "data.csv")
    (out / "spec_a.cfg").write_text(io.format_config(spec_a.to_config()))
    (out / "spec_b.cfg").write_text(io.format_config(spec_b.to_config()))
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_run_flags(p):
    p.add_argument("--config", help="key = value settings file; flags override it")
    for f in fields(RunConfig):
        flag = "--" + f.name.replace("_", "-")
        p.add_argument(flag, dest=f.name, default=None,
                       help="required" if f.default is MISSING else f"default: {f.default!r}")


def _run_config(args) -> RunConfig:
    raw = io.read_config(args.config) if args.config else {}
    for f in fields(RunConfig):
        val = getattr(args, f.name, None)
        if val is not None:
            raw[f.name] = val
    return RunConfig.from_dict(raw)


def build_parser():
    parser = _Parser(prog="finder", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    _add_run_flags(sub.add_parser("run", help="LPOCV experiment over m_res_list"))
    b = sub.add_parser("bounds", help="print Markov / tail bounds per M_res")
    _add_run_flags(b)
    b.add_argument("--epsilon", type=float, default=1.0)
    s = sub.add_parser("synth", help="generate scenario CSVs from a spec file")
    s.add_argument("spec")
    s.add_argument("--output-dir", default="synth-out")
    s.add_argument("--n-a", type=int)
    s.add_argument("--n-b", type=int)
    i = sub.add_parser("impute", help="k-NN imputation of missing cells")
    i.add_argument("--input-path", required=True)
    i.add_argument("--label-column")
    i.add_argument("--impute-k", type=int, default=5)
    i.add_argument("--output", required=True)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.command == "run":
            return run(_run_config(args))
        if args.command == "bounds":
            if not args.epsilon > 0:
                raise UsageError("epsilon must be positive")
            header, rows = bounds_table(_run_config(args), args.epsilon)
            w = csv.writer(sys.stdout, lineterminator="\n")
            w.writerow(header)
            w.writerows([[_fmt(v) for v in row] for row in rows])
            return EXIT_OK
        if args.command == "synth":
            return synth(args.spec, args.output_dir, args.n_a, args.n_b)
        if args.command == "impute":
            data = io.load_csv(args.input_path, args.label_column)
            io.write_csv(io.knn_impute(data, args.impute_k), args.output, args.label_column or "label")
            return EXIT_OK
    except UsageError as exc:
        print(f"finder: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RoundError as exc:
        code = EXIT_NUMERIC if isinstance(exc.cause, (NumericError, np.linalg.LinAlgError)) else EXIT_DATA
        print(f"finder: {exc}", file=sys.stderr)
        return code
    except (NumericError, np.linalg.LinAlgError) as exc:
        print(f"finder: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, DimensionError, FinderError, OSError, ValueError) as exc:
        print(f"finder: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
