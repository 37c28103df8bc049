"""Experiment runner: every module behind one seeded, manifest-writing CLI.

Each run resolves its configuration (flags, optionally merged over a JSON
config file), executes, writes machine-readable artifacts plus a run manifest
(resolved config, config hash, seed, versions), and exits 0. Exit codes:
2 config error, 3 budget exceeded, 4 verification failure. A run directory
without manifest.json is incomplete and must be treated as failed.

Scientific parameters (n, k, delta or c, reps, seed) have no defaults and
must be stated; only budgets, paths, and solver knobs carry defaults.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import math
import os
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .core import DiscreteDistribution, SampleBatch
from .errors import (
    BudgetExceededError,
    CheckFailedError,
    SympropError,
    ValidationError,
)
from .estimators import constant_estimator, empirical_estimator, oracle_estimator
from .fano import FanoInputs, experiment_from_packing, fano_bound, verify_lemma
from .packing import (
    PackingInstance,
    build_packing,
    choose_delta,
    covers_center_intervals,
    perturb,
    separation_check,
    separation_threshold,
)
from .pml import pml_plugin_estimator, solve as pml_solve
from .profiles import Profile, enumerate_profiles, profile_of, profile_probability, profile_space_bounds
from .properties import builtin
from .risk import (
    adaptive_risk,
    assumption1_check,
    competitive_tail_check,
    exact_risk,
    mc_risk,
    rate_curve,
)
from .rng import RNG_SCHEME

RISK_CSV_COLUMNS = [
    "experiment",
    "estimator",
    "n",
    "k",
    "delta",
    "M",
    "value",
    "stderr",
    "seed",
    "method",
]
CSV_SCHEMA = "risk-report/1"
MANIFEST_SCHEMA = "run-manifest/1"
OUTDIR_ENV = "SYMPROP_OUTDIR"


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return "" if x is None else str(x)


def _write_csv(path: Path, columns: list[str], rows: list[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row.get(col)) for col in columns])


def _write_jsonl(path: Path, records: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def _write_json(path: Path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _config_hash(config: dict) -> str:
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def _get(config: dict, key: str, default):
    value = config.get(key)
    return default if value is None else value


def _require(config: dict, keys: list[str], subcommand: str) -> None:
    missing = [key for key in keys if config.get(key) is None]
    if missing:
        raise ValidationError(
            f"{subcommand}: missing required parameter(s) {', '.join(missing)} "
            "(scientific parameters have no defaults)"
        )


def _parse_vector(text: str) -> list[float]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"could not parse {text!r} as a JSON array") from exc
    if not isinstance(data, list):
        raise ValidationError("expected a JSON array")
    return [float(x) for x in data]


def _parse_profile(text: str, k: int) -> Profile:
    """Parse profile counts; the unseen-symbol slot is reconciled with k.

    Trailing zeros beyond the implied n are trimmed. If the counts do not sum
    to k, the slot-0 entry is recomputed from k and a note goes to stderr.
    """
    raw = [int(x) for x in _parse_vector(text)]
    if not raw or any(c < 0 for c in raw):
        raise ValidationError("profile counts must be nonnegative integers")
    n = sum(i * c for i, c in enumerate(raw))
    if n < 1:
        raise ValidationError("profile must contain at least one observation")
    counts = (raw + [0] * (n + 1))[: n + 1]
    if sum(i * c for i, c in enumerate(counts)) != n:
        raise ValidationError("profile counts beyond index n must be zero")
    seen = sum(counts[1:])
    if sum(counts) != k:
        if seen > k:
            raise ValidationError(f"profile shows {seen} seen symbols but k={k}")
        print(
            f"note: adjusting unseen-symbol count to {k - seen} to match k={k}",
            file=sys.stderr,
        )
        counts[0] = k - seen
    return Profile(counts=tuple(counts), n=n, k=k)


def _resolve_packing(config: dict, subcommand: str) -> tuple[PackingInstance, bool]:
    _require(config, ["k"], subcommand)
    k = int(config["k"])
    clamped = False
    if config.get("delta") is not None:
        delta = float(config["delta"])
    elif config.get("c") is not None:
        _require(config, ["n"], subcommand)
        choice = choose_delta(int(config["n"]), k, float(config["c"]))
        delta, clamped = choice.delta, choice.clamped
    else:
        raise ValidationError(f"{subcommand}: state either delta or c explicitly")
    return build_packing(k, delta), clamped


def _build_estimator(name: str, config: dict, packing: PackingInstance | None):
    if name == "empirical":
        return empirical_estimator()
    if name == "oracle":
        return oracle_estimator()
    if name == "constant-center":
        if packing is None:
            raise ValidationError("constant-center estimator needs a packing context")
        return constant_estimator(packing.center, name="constant-center")
    if name in ("pml", "pml-approx"):
        return pml_plugin_estimator(solver="approx")
    if name == "pml-exact":
        return pml_plugin_estimator(
            solver="exact", resolution=int(_get(config, "resolution", 200))
        )
    raise ValidationError(f"unknown estimator {name!r}")


def _build_property(config: dict, k: int):
    name = config.get("property")
    if name is None:
        raise ValidationError("state a property name")
    alpha = config.get("alpha")
    return builtin(name, k=k, alpha=float(alpha) if alpha is not None else None)


def _risk_row(experiment: str, estimator: str, report, delta=None, m=None) -> dict:
    return {
        "experiment": experiment,
        "estimator": estimator,
        "n": report.n,
        "k": report.k,
        "delta": delta,
        "M": m,
        "value": report.value,
        "stderr": report.stderr,
        "seed": getattr(report, "seed", None),
        "method": report.method,
    }


# ---------------------------------------------------------------------------
# subcommand runners: config dict in, artifact names out
# ---------------------------------------------------------------------------


def run_profile(config: dict, outdir: Path) -> list[str]:
    mode = config.get("mode")
    if mode == "extract":
        _require(config, ["k"], "profile extract")
        k = int(config["k"])
        if config.get("batch_csv"):
            batch = SampleBatch.read_csv(config["batch_csv"], k=k)
        elif config.get("draws"):
            draws = [int(x) for x in str(config["draws"]).split(",")]
            batch = SampleBatch(draws=np.asarray(draws), n=len(draws), k=k)
        else:
            raise ValidationError("profile extract: provide batch_csv or draws")
        phi = profile_of(batch)
        _write_json(outdir / "profile.json", json.loads(phi.to_json()))
        return ["profile.json"]
    if mode == "enumerate":
        _require(config, ["n", "k"], "profile enumerate")
        n, k = int(config["n"]), int(config["k"])
        space = enumerate_profiles(n, k)
        space.write_jsonl(outdir / "profiles.jsonl")
        bounds = profile_space_bounds(n, k)
        _write_json(
            outdir / "profile_space.json",
            {
                "schema": "profile-space/1",
                "n": n,
                "k": k,
                "cardinality": len(space),
                "bound_poly": bounds.bound_poly,
                "bound_exp": bounds.bound_exp,
                "log_bound_poly": bounds.log_bound_poly,
                "log_bound_exp": bounds.log_bound_exp,
            },
        )
        return ["profiles.jsonl", "profile_space.json"]
    if mode == "probability":
        _require(config, ["p", "profile"], "profile probability")
        p = DiscreteDistribution(np.asarray(_parse_vector(config["p"])))
        phi = _parse_profile(config["profile"], p.k)
        value = profile_probability(p, phi)
        _write_json(
            outdir / "probability.json",
            {"schema": "profile-probability/1", "value": value, "profile": list(phi.counts)},
        )
        print(repr(value))
        return ["probability.json"]
    raise ValidationError(f"unknown profile mode {mode!r}")


def run_pml(config: dict, outdir: Path) -> list[str]:
    _require(config, ["k", "profile"], "pml")
    k = int(config["k"])
    phi = _parse_profile(config["profile"], k)
    solver = "exact" if config.get("exact") else "approx"
    solution = pml_solve(
        phi,
        solver=solver,
        resolution=int(_get(config, "resolution", 200)),
        step_tol=float(_get(config, "step_tol", 1e-8)),
        max_sweeps=int(_get(config, "max_sweeps", 500)),
    )
    _write_json(
        outdir / "pml.json",
        {
            "schema": "pml-solution/1",
            "profile": list(phi.counts),
            "n": phi.n,
            "k": phi.k,
            "distribution": [float(x) for x in solution.distribution.probs],
            "attained_likelihood": solution.attained_likelihood,
            "method": solution.method,
            "certificate": solution.certificate,
            "converged": solution.converged,
        },
    )
    print(json.dumps([float(x) for x in solution.distribution.probs]))
    return ["pml.json"]


def run_packing(config: dict, outdir: Path) -> list[str]:
    packing, clamped = _resolve_packing(config, "packing")
    _write_json(outdir / "packing.json", json.loads(packing.to_json()))
    artifacts = ["packing.json"]
    if config.get("verify"):
        _require(config, ["trials", "seed"], "packing --verify")
        trials, seed = int(config["trials"]), int(config["seed"])
        hypotheses_valid = all(
            bool(np.all(np.diff(perturb(packing, u).probs) > 0))
            and covers_center_intervals(perturb(packing, u), packing)
            for u in packing.sign_vectors
        )
        minimum = separation_check(packing, trials, seed)
        threshold = separation_threshold(packing)
        ok = hypotheses_valid and minimum >= threshold
        _write_json(
            outdir / "verification.json",
            {
                "schema": "packing-verification/1",
                "k": packing.k,
                "delta": packing.delta,
                "delta_clamped": clamped,
                "m": packing.m,
                "min_hamming": packing.min_hamming,
                "certified_lower": packing.certified_lower,
                "meets_exp_target": packing.meets_exp_target,
                "hypotheses_valid": hypotheses_valid,
                "separation_min": minimum,
                "separation_threshold": threshold,
                "trials": trials,
                "seed": seed,
                "ok": ok,
            },
        )
        artifacts.append("verification.json")
        if not ok:
            raise CheckFailedError(
                f"packing verification failed: min separation {minimum!r} "
                f"vs threshold {threshold!r}"
            )
    return artifacts


def run_fano(config: dict, outdir: Path) -> list[str]:
    if config.get("verify"):
        _require(config, ["n", "k", "m", "estimator", "seed"], "fano --verify")
        packing, _ = _resolve_packing(config, "fano --verify")
        exp = experiment_from_packing(packing, int(config["n"]), m=int(config["m"]))
        est = _build_estimator(str(config["estimator"]), config, packing)
        report = verify_lemma(
            exp,
            est,
            int(config["seed"]),
            method=str(_get(config, "method", "auto")),
            reps=int(_get(config, "reps", 10_000)),
        )
        payload = {"schema": "lemma-verification/1", **json.loads(report.to_json())}
        _write_json(outdir / "verify.json", payload)
        if not report.satisfied:
            raise CheckFailedError(
                f"bound violated: lhs {report.lhs_risk!r} < bound {report.fano_bound!r}"
            )
        return ["verify.json"]
    _require(config, ["separation", "p_min", "m", "mi"], "fano")
    value = fano_bound(
        FanoInputs(
            separation=float(config["separation"]),
            p_min=float(config["p_min"]),
            m=int(config["m"]),
            mi=float(config["mi"]),
        )
    )
    _write_json(
        outdir / "bound.json",
        {"schema": "fano-bound/1", "value": value, "clamped_at_zero": max(value, 0.0)},
    )
    print(repr(value))
    return ["bound.json"]


def run_risk(config: dict, outdir: Path) -> list[str]:
    mode = config.get("mode")
    rows: list[dict] = []
    records: list[dict] = []
    artifacts: list[str] = []
    if mode == "mc":
        _require(config, ["p", "n", "reps", "seed", "estimator"], "risk mc")
        p = DiscreteDistribution(np.asarray(_parse_vector(config["p"])))
        prop = _build_property(config, p.k)
        est = _build_estimator(str(config["estimator"]), config, None)
        report = mc_risk(
            est, prop, p, int(config["n"]), int(config["reps"]), int(config["seed"])
        )
        rows.append(_risk_row("mc", est.name, report))
        records.append({"schema": CSV_SCHEMA, **dataclasses.asdict(report)})
    elif mode == "exact":
        _require(config, ["p", "n", "estimator"], "risk exact")
        p = DiscreteDistribution(np.asarray(_parse_vector(config["p"])))
        prop = _build_property(config, p.k)
        est = _build_estimator(str(config["estimator"]), config, None)
        report = exact_risk(est, prop, p, int(config["n"]))
        rows.append(_risk_row("exact", est.name, report))
        records.append({"schema": CSV_SCHEMA, **dataclasses.asdict(report)})
    elif mode == "adaptive":
        _require(config, ["n", "reps", "seed", "estimator"], "risk adaptive")
        packing, _ = _resolve_packing(config, "risk adaptive")
        est = _build_estimator(str(config["estimator"]), config, packing)
        report = adaptive_risk(
            est, packing, int(config["n"]), int(config["reps"]), int(config["seed"])
        )
        rows.append(
            _risk_row("adaptive", est.name, report, delta=packing.delta, m=packing.m)
        )
        records.append({"schema": "adaptive-risk/1", **dataclasses.asdict(report)})
    elif mode == "assumption1":
        _require(config, ["n", "reps", "seed", "estimator"], "risk assumption1")
        packing, _ = _resolve_packing(config, "risk assumption1")
        est = _build_estimator(str(config["estimator"]), config, packing)
        report = assumption1_check(
            est, packing, int(config["n"]), int(config["reps"]), int(config["seed"])
        )
        rows.append(
            {
                "experiment": "assumption1",
                "estimator": est.name,
                "n": report.n,
                "k": report.k,
                "delta": packing.delta,
                "M": packing.m,
                "value": report.sup_risk,
                "stderr": report.sup_stderr,
                "seed": report.seed,
                "method": "monte_carlo",
            }
        )
        records.append({"schema": "quality-gate/1", **dataclasses.asdict(report)})
    elif mode == "competitive":
        _require(config, ["n", "seed", "eps"], "risk competitive")
        packing, _ = _resolve_packing(config, "risk competitive")
        eps_values = [float(x) for x in str(config["eps"]).split(",")]
        for eps in eps_values:
            report = competitive_tail_check(
                packing,
                int(config["n"]),
                eps,
                int(_get(config, "reps", 10_000)),
                int(config["seed"]),
                resolution=int(_get(config, "resolution", 200)),
            )
            rows.append(
                {
                    "experiment": f"competitive(eps={eps})",
                    "estimator": "pml-plugin[exact]",
                    "n": report.n,
                    "k": report.k,
                    "delta": packing.delta,
                    "M": packing.m,
                    "value": report.sup_pml_tail,
                    "stderr": 0.0 if report.method == "exact_enum" else None,
                    "seed": report.seed,
                    "method": report.method,
                }
            )
            records.append({"schema": "competitive-tail/1", **dataclasses.asdict(report)})
            if not (report.holds and report.mcdiarmid_holds):
                raise CheckFailedError(f"competitive tail check failed at eps={eps}")
    elif mode == "rate-curve":
        _require(config, ["n_list", "k_rule", "c", "reps", "seed", "estimator"], "risk rate-curve")
        est = _build_estimator(str(config["estimator"]), config, None)
        n_list = [int(x) for x in str(config["n_list"]).split(",")]
        k_rule = _parse_k_rule(str(config["k_rule"]))
        curve = rate_curve(
            est, n_list, k_rule, int(config["reps"]), int(config["seed"]), float(config["c"])
        )
        curve_rows = [dataclasses.asdict(row) for row in curve]
        _write_csv(
            outdir / "rate_curve.csv",
            [
                "n",
                "k",
                "delta",
                "clamped",
                "m",
                "value",
                "stderr",
                "ratio_sqrt_kn",
                "ratio_sqrt_klogn",
            ],
            curve_rows,
        )
        artifacts.append("rate_curve.csv")
        for row in curve:
            rows.append(
                {
                    "experiment": "rate-curve",
                    "estimator": est.name,
                    "n": row.n,
                    "k": row.k,
                    "delta": row.delta,
                    "M": row.m,
                    "value": row.value,
                    "stderr": row.stderr,
                    "seed": int(config["seed"]),
                    "method": "monte_carlo",
                }
            )
            records.append({"schema": "rate-row/1", **dataclasses.asdict(row)})
    else:
        raise ValidationError(f"unknown risk mode {mode!r}")
    _write_csv(outdir / "report.csv", RISK_CSV_COLUMNS, rows)
    _write_jsonl(outdir / "reports.jsonl", records)
    return artifacts + ["report.csv", "reports.jsonl"]


def _parse_k_rule(spec: str):
    """k rules: 'fixed:8' or 'power:coef,exponent' meaning 2*floor(coef*n**e/2)+2."""
    kind, _, rest = spec.partition(":")
    if kind == "fixed":
        k = int(rest)
        return lambda n: k
    if kind == "power":
        coef_s, _, exp_s = rest.partition(",")
        coef, exponent = float(coef_s), float(exp_s)
        return lambda n: 2 * math.floor(coef * n**exponent / 2) + 2
    raise ValidationError(f"unknown k rule {spec!r}")


RUNNERS = {
    "profile": run_profile,
    "pml": run_pml,
    "packing": run_packing,
    "fano": run_fano,
    "risk": run_risk,
}

# stream labels each subcommand derives from the top-level seed
STREAM_LABELS = {
    "profile": [],
    "pml": [],
    "packing": ["membership"],
    "fano": ["(hyp, i, rep, r)"],
    "risk": ["(u, i)", "(dist, i)", "(n, v)", "(tail, i)", "(rep, r)", "(counts,)"],
}


def execute(subcommand: str, config: dict, outdir: Path, threads: int = 1) -> Path:
    """Run a subcommand and write its manifest; returns the outdir."""
    if threads < 1:
        raise ValidationError("--threads must be >= 1")
    outdir.mkdir(parents=True, exist_ok=True)
    artifacts = RUNNERS[subcommand](config, outdir)
    manifest = {
        "schema": MANIFEST_SCHEMA,
        "subcommand": subcommand,
        "config": config,
        "config_sha256": _config_hash(config),
        "seed": config.get("seed"),
        "rng": {
            "scheme": RNG_SCHEME,
            "top_level_seed": config.get("seed"),
            "stream_labels": STREAM_LABELS.get(subcommand, []),
        },
        "threads": threads,
        "versions": {
            "symprop": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
        },
        "artifacts": artifacts,
        "status": "ok",
    }
    _write_json(outdir / "manifest.json", manifest)
    return outdir


def replay(manifest_path: Path, outdir: Path, threads: int = 1) -> Path:
    with open(manifest_path, encoding="utf-8") as fh:
        manifest = json.load(fh)
    if manifest.get("schema") != MANIFEST_SCHEMA:
        raise ValidationError(f"not a run manifest: {manifest_path}")
    return execute(manifest["subcommand"], manifest["config"], outdir, threads)


def _add_packing_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--k", type=int)
    sub.add_argument("--delta", type=float)
    sub.add_argument("--c", type=float)
    sub.add_argument("--n", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="symprop",
        description="Profiles, PML, adversarial packings, and Fano lower bounds.",
    )
    parser.add_argument("--out", type=str, default=None, help="output directory")
    parser.add_argument("--config", type=str, default=None, help="JSON config file")
    parser.add_argument("--threads", type=int, default=1, help="global thread cap")
    subs = parser.add_subparsers(dest="subcommand", required=True)

    prof = subs.add_parser("profile", help="extract, enumerate, or score profiles")
    prof.add_argument("mode", choices=["extract", "enumerate", "probability"])
    prof.add_argument("--k", type=int)
    prof.add_argument("--n", type=int)
    prof.add_argument("--batch-csv", dest="batch_csv", type=str)
    prof.add_argument("--draws", type=str, help="comma-separated 1-based symbols")
    prof.add_argument("--p", type=str, help="JSON array of probabilities")
    prof.add_argument("--profile", type=str, help="JSON array of profile counts")

    pml = subs.add_parser("pml", help="solve one profile")
    pml.add_argument("--profile", type=str)
    pml.add_argument("--k", type=int)
    pml.add_argument("--exact", action="store_true")
    pml.add_argument("--resolution", type=int)
    pml.add_argument("--max-sweeps", dest="max_sweeps", type=int)
    pml.add_argument("--step-tol", dest="step_tol", type=float)

    pack = subs.add_parser("packing", help="build and verify a packing")
    _add_packing_args(pack)
    pack.add_argument("--verify", action="store_true")
    pack.add_argument("--trials", type=int)
    pack.add_argument("--seed", type=int)

    fano = subs.add_parser("fano", help="bound evaluation or lemma verification")
    _add_packing_args(fano)
    fano.add_argument("--verify", action="store_true")
    fano.add_argument("--M", dest="m", type=int)
    fano.add_argument("--estimator", type=str)
    fano.add_argument("--seed", type=int)
    fano.add_argument("--reps", type=int)
    fano.add_argument("--method", type=str, choices=["auto", "exact", "monte_carlo"])
    fano.add_argument("--separation", type=float)
    fano.add_argument("--p-min", dest="p_min", type=float)
    fano.add_argument("--mi", type=float)
    fano.add_argument("--resolution", type=int)

    risk = subs.add_parser("risk", help="risk experiments")
    risk.add_argument(
        "mode",
        choices=["mc", "exact", "adaptive", "assumption1", "competitive", "rate-curve"],
    )
    _add_packing_args(risk)
    risk.add_argument("--p", type=str)
    risk.add_argument("--property", type=str)
    risk.add_argument("--alpha", type=float)
    risk.add_argument("--estimator", type=str)
    risk.add_argument("--reps", type=int)
    risk.add_argument("--seed", type=int)
    risk.add_argument("--eps", type=str, help="comma-separated accuracy values")
    risk.add_argument("--resolution", type=int)
    risk.add_argument("--n-list", dest="n_list", type=str)
    risk.add_argument("--k-rule", dest="k_rule", type=str)

    rep = subs.add_parser("replay", help="re-run a manifest byte-identically")
    rep.add_argument("manifest", type=str)
    return parser


_SKIP_KEYS = {"subcommand", "out", "config", "threads", "manifest"}


def _resolve_config(args: argparse.Namespace) -> dict:
    config: dict = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            loaded = json.load(fh)
        if not isinstance(loaded, dict):
            raise ValidationError("config file must hold a JSON object")
        config.update(loaded)
    for key, value in vars(args).items():
        if key in _SKIP_KEYS or value is None:
            continue
        if value is False and key in config:
            continue  # absent store_true flags never override a config file
        config[key] = value
    return config


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    outdir = Path(args.out or os.environ.get(OUTDIR_ENV) or "runs")
    try:
        if args.subcommand == "replay":
            replay(Path(args.manifest), outdir, threads=args.threads)
        else:
            config = _resolve_config(args)
            execute(args.subcommand, config, outdir, threads=args.threads)
        return 0
    except ValidationError as exc:
        _print_error("config", exc, 2)
        return 2
    except BudgetExceededError as exc:
        _print_error("budget", exc, 3)
        return 3
    except CheckFailedError as exc:
        _print_error("check", exc, 4)
        return 4
    except SympropError as exc:
        _print_error("runtime", exc, 4)
        return 4


def _print_error(kind: str, exc: Exception, code: int) -> None:
    print(
        json.dumps({"error": kind, "message": str(exc), "exit_code": code}),
        file=sys.stderr,
    )


if __name__ == "__main__":
    raise SystemExit(main())
