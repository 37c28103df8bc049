"""Published JSON schemas for every CLI artifact, keyed by schema tag.

Artifacts embed their tag in a "schema" field (JSON) or are documented by
column list (CSV). Versions bump the suffix; consumers should dispatch on the
full tag string.
"""

from __future__ import annotations

_NUMBER = {"type": "number"}
_INT = {"type": "integer"}
_STR = {"type": "string"}
_BOOL = {"type": "boolean"}


def _obj(required: dict, optional: dict | None = None) -> dict:
    props = dict(required)
    if optional:
        props.update(optional)
    return {
        "type": "object",
        "properties": props,
        "required": sorted(required),
    }


SCHEMAS: dict[str, dict] = {
    "run-manifest/1": _obj(
        {
            "schema": _STR,
            "subcommand": _STR,
            "config": {"type": "object"},
            "config_sha256": _STR,
            "rng": {"type": "object"},
            "threads": _INT,
            "versions": {"type": "object"},
            "artifacts": {"type": "array", "items": _STR},
            "status": _STR,
        },
        {"seed": {"type": ["integer", "null"]}},
    ),
    "packing/1": _obj(
        {
            "schema": _STR,
            "k": _INT,
            "delta": _NUMBER,
            "min_hamming": _INT,
            "certified_lower": _INT,
            "sign_vectors": {"type": "array", "items": _STR},
        }
    ),
    "packing-verification/1": _obj(
        {
            "schema": _STR,
            "k": _INT,
            "delta": _NUMBER,
            "m": _INT,
            "hypotheses_valid": _BOOL,
            "separation_min": _NUMBER,
            "separation_threshold": _NUMBER,
            "trials": _INT,
            "seed": _INT,
            "ok": _BOOL,
        },
        {
            "delta_clamped": _BOOL,
            "min_hamming": _INT,
            "certified_lower": _INT,
            "meets_exp_target": _BOOL,
        },
    ),
    "profile/1": _obj({"n": _INT, "k": _INT, "counts": {"type": "array", "items": _INT}}),
    "profile-space/1": _obj(
        {
            "schema": _STR,
            "n": _INT,
            "k": _INT,
            "cardinality": _INT,
            "bound_poly": _NUMBER,
            "bound_exp": _NUMBER,
            "log_bound_poly": _NUMBER,
            "log_bound_exp": _NUMBER,
        }
    ),
    "profile-probability/1": _obj(
        {"schema": _STR, "value": _NUMBER, "profile": {"type": "array", "items": _INT}}
    ),
    "pml-solution/1": _obj(
        {
            "schema": _STR,
            "profile": {"type": "array", "items": _INT},
            "n": _INT,
            "k": _INT,
            "distribution": {"type": "array", "items": _NUMBER},
            "attained_likelihood": _NUMBER,
            "method": _STR,
            "converged": _BOOL,
        },
        {"certificate": {"type": ["number", "null"]}},
    ),
    "fano-bound/1": _obj({"schema": _STR, "value": _NUMBER, "clamped_at_zero": _NUMBER}),
    "lemma-verification/1": _obj(
        {
            "p_min": _NUMBER,
            "mi": _NUMBER,
            "delta": _NUMBER,
            "lhs_risk": _NUMBER,
            "fano_bound": _NUMBER,
            "satisfied": _BOOL,
        },
        {
            "applicable": _BOOL,
            "method": _STR,
            "reps": _INT,
            "seed": _INT,
            "lhs_stderr": _NUMBER,
        },
    ),
}

#: Column order of report.csv, schema tag risk-report/1.
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
