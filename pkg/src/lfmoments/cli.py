"""Command-line front end: configuration, serialization, eigen-data cache.

Exit codes: 0 success, 2 usage/argument errors, 3 numeric precision
failures, 4 cache corruption.  All numbers are serialized as decimal
strings (midpoint and radius separately) so readers in any language can
reproduce values exactly; cache files are JSON-lines with one checksummed
record per weight, written atomically (temp file + rename).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
from dataclasses import dataclass, field

from mpmath import mp, mpf

from .precision import (
    Ball, DomainError, PoleError, PrecisionContext, PrecisionError,
    make_context,
)
from .forms import HeckeEigenform, hecke_eigendata, cusp_dim, DiagonalizationError
from .kernels import (
    KernelValue, hecke_afe_weight, psi_kernel, phi_kernel, phi_lg,
    sym2_afe_weight,
)
from .lvalues import (
    NumericFailure, attach_harmonic_weights, eigendata_with_weights,
    hecke_central, sym2_value, required_n_terms,
)
from .quadl import CalibrationError, curly_L
from . import moments

__all__ = [
    "RunConfig",
    "CacheError",
    "parse_cli",
    "dispatch",
    "emit",
    "cache_roundtrip",
    "main",
]

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PRECISION = 3
EXIT_CACHE = 4


class CacheError(RuntimeError):
    """Checksum or schema failure in the eigen-data cache."""


@dataclass
class RunConfig:
    subcommand: str
    prec_bits: int = 192
    target_error: float = 1e-12
    max_weight: int = 200
    cache_dir: str = ".lfmoments-cache"
    output_format: str = "json"
    output: str | None = None
    args: dict = field(default_factory=dict)

    def context(self) -> PrecisionContext:
        return make_context(self.prec_bits, self.target_error)


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

_DEFAULTS = {
    "prec_bits": 192,
    "target_error": 1e-12,
    "max_weight": 200,
    "cache_dir": ".lfmoments-cache",
    "output_format": "json",
}


def _read_config_file(path: str) -> dict:
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise DomainError(f"bad config line: {line!r}")
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out


def parse_cli(argv) -> RunConfig:
    common = argparse.ArgumentParser(add_help=False)
    for args, kw in (
            (("--config",), dict(help="flat key=value configuration file")),
            (("--prec-bits",), dict(type=int)),
            (("--target-error",), dict(type=float)),
            (("--max-weight",), dict(type=int)),
            (("--cache-dir",), dict()),
            (("--format",), dict(choices=("json", "csv"))),
            (("--output",), dict(help="destination file (default stdout)"))):
        common.add_argument(*args, default=argparse.SUPPRESS, **kw)
    p = argparse.ArgumentParser(
        prog="lfmoments", parents=[common],
        description="Verify moment identities for Hecke x symmetric-square "
                    "L-functions at arbitrary precision.")
    sub = p.add_subparsers(dest="subcommand")

    sp = sub.add_parser("eigen", parents=[common],
                        help="Hecke eigen-data for one weight")
    sp.add_argument("--weight", type=int, required=True)
    sp.add_argument("--n-terms", type=int, default=None)

    sp = sub.add_parser("lvals", parents=[common],
                        help="central L-values and omega per form")
    sp.add_argument("--weight", type=int, required=True)
    sp.add_argument("--quantity", choices=("hecke_central", "sym2_half",
                                           "sym2_one", "omega", "all"),
                    default="all")
    sp.add_argument("--u", type=float, default=0.0)

    sp = sub.add_parser("quadl", parents=[common], help="quadratic series value")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--s", type=float, required=True)
    sp.add_argument("--route", choices=("auto", "direct", "decomposition"),
                    default="auto")

    sp = sub.add_parser("kernel", parents=[common], help="special-function kernels")
    sp.add_argument("--kind", choices=("psi", "phi", "phi-lg", "afe-v", "afe-g"),
                    required=True)
    sp.add_argument("--weight", type=int, required=True, help="even weight 2m")
    sp.add_argument("--x", type=float, default=None)
    sp.add_argument("--n", type=int, default=None)
    sp.add_argument("--l", type=int, default=None)
    sp.add_argument("--order", type=int, default=1)
    sp.add_argument("--u", type=float, default=0.0)
    sp.add_argument("--s0", type=float, default=0.5)

    sp = sub.add_parser("verify-lemma", parents=[common],
                        help="twisted-moment residual")
    sp.add_argument("--weight", type=int, required=True)
    sp.add_argument("--l", type=int, required=True)

    sp = sub.add_parser("moment", parents=[common],
                        help="per-weight moment breakdown")
    sp.add_argument("--weight", type=int, required=True)
    sp.add_argument("--kernel-policy", choices=("direct", "mixed"),
                    default="direct")

    sp = sub.add_parser("theorem1", parents=[common],
                        help="averaged main-term report")
    sp.add_argument("--K", type=float, required=True)
    sp.add_argument("--theta1", type=float, default=1.0)
    sp.add_argument("--theta2", type=float, default=2.0)
    sp.add_argument("--fit-grid", default=None,
                    help="comma-separated K values for the residual fit")
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--kernel-policy", choices=("direct", "mixed"),
                    default="mixed")

    sp = sub.add_parser("cache", parents=[common], help="cache maintenance")
    sp.add_argument("action", choices=("status", "clear"))

    ns = p.parse_args(argv)
    if ns.subcommand is None:
        p.print_help()
        raise SystemExit(EXIT_OK)

    settings = dict(_DEFAULTS)
    if getattr(ns, "config", None):
        raw = _read_config_file(ns.config)
        for k, v in raw.items():
            if k not in _DEFAULTS:
                raise DomainError(f"unknown config key {k!r}")
            settings[k] = type(_DEFAULTS[k])(v)
    for k in _DEFAULTS:
        flag = getattr(ns, k if k != "output_format" else "format", None)
        if flag is not None:
            settings[k] = flag

    args = {k: v for k, v in vars(ns).items()
            if k not in ("config", "prec_bits", "target_error", "max_weight",
                         "cache_dir", "format", "subcommand", "output")}
    return RunConfig(subcommand=ns.subcommand,
                     output=getattr(ns, "output", None),
                     args=args, **settings)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def _dps(prec_bits: int) -> int:
    return int(prec_bits * 0.30103) + 12


def ball_payload(b: Ball, prec_bits: int, **extra) -> dict:
    with mp.workprec(prec_bits + 16):
        out = {
            "midpoint": mp.nstr(b.mid, _dps(prec_bits), strip_zeros=False),
            "radius": mp.nstr(b.rad, 8),
        }
    out.update(extra)
    return out


def parse_ball(payload: dict, prec_bits: int) -> Ball:
    digits = len(payload["midpoint"])
    with mp.workprec(max(prec_bits + 16, int(digits * 3.33) + 16)):
        mid = mpf(payload["midpoint"])
        rad = mpf(payload["radius"])
        slack = abs(mid) * mpf(10) ** (2 - _dps(prec_bits))
        return Ball(mid, rad + slack)


CSV_HEADER = "record,quantity,midpoint,radius,method,extra"


def _flatten(report: dict, prefix: str = "") -> list:
    rows = []
    for k, v in report.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict) and "midpoint" in v:
            extra = {a: b for a, b in v.items()
                     if a not in ("midpoint", "radius", "method")}
            rows.append((key, v["midpoint"], v["radius"],
                         v.get("method", ""), json.dumps(extra, sort_keys=True)))
        elif isinstance(v, dict):
            rows.extend(_flatten(v, key + "."))
        elif isinstance(v, list):
            for i, item in enumerate(v):
                if isinstance(item, dict):
                    rows.extend(_flatten(item, f"{key}[{i}]."))
                else:
                    rows.append((f"{key}[{i}]", str(item), "", "", ""))
        else:
            rows.append((key, str(v), "", "", ""))
    return rows


def emit(report: dict, output_format: str = "json", destination=None) -> str:
    """Serialize a report; returns the text and writes it if asked."""
    if output_format == "json":
        text = json.dumps(report, indent=1, sort_keys=True) + "\n"
    elif output_format == "csv":
        lines = [CSV_HEADER]
        name = report.get("record", "report")
        for (q, midv, rad, meth, extra) in _flatten(
                {k: v for k, v in report.items() if k != "record"}):
            lines.append(",".join([name, q, str(midv), str(rad), meth,
                                   '"' + extra.replace('"', "'") + '"']))
        text = "\n".join(lines) + "\n"
    else:
        raise DomainError(f"unknown format {output_format!r}")
    if destination:
        try:
            with open(destination, "w") as fh:
                fh.write(text)
        except OSError as exc:
            raise IOError(f"cannot write {destination}: {exc}") from exc
    return text


# ---------------------------------------------------------------------------
# eigen-data cache
# ---------------------------------------------------------------------------

def _cache_path(cache_dir: str) -> str:
    return os.path.join(cache_dir, "eigendata.jsonl")


def _record_checksum(record: dict) -> str:
    body = {k: v for k, v in record.items() if k != "checksum"}
    blob = json.dumps(body, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def _serialize_forms(weight: int, prec_bits: int, n_terms: int,
                     forms: list[HeckeEigenform]) -> dict:
    per_form = []
    for f in forms:
        per_form.append({
            "tag": f.conjugacy_tag,
            "theta2": ball_payload(f.theta2, prec_bits),
            "lambda": [ball_payload(f.lam_at(n), prec_bits)
                       for n in range(1, n_terms + 1)],
            "omega": ball_payload(f.omega, prec_bits) if f.omega else None,
        })
    record = {
        "schema_version": SCHEMA_VERSION,
        "weight": weight,
        "prec_bits": prec_bits,
        "n_terms": n_terms,
        "forms": per_form,
    }
    record["checksum"] = _record_checksum(record)
    return record


def _deserialize_forms(record: dict) -> list[HeckeEigenform]:
    prec_bits = record["prec_bits"]
    out = []
    for pf in record["forms"]:
        lam = [None] + [parse_ball(p, prec_bits) for p in pf["lambda"]]
        f = HeckeEigenform(record["weight"], record["n_terms"], lam,
                           pf["tag"], parse_ball(pf["theta2"], prec_bits))
        if pf.get("omega"):
            f.omega = parse_ball(pf["omega"], prec_bits)
        out.append(f)
    return out


def cache_roundtrip(weight: int, ctx: PrecisionContext,
                    cache_dir: str) -> list[HeckeEigenform]:
    """Load eigen-data if a valid record dominates the request, else build.

    A stored record serves the request when its prec_bits and n_terms are at
    least the requested ones; version mismatches regenerate, checksum
    failures raise (exit-4 class).
    """
    os.makedirs(cache_dir, exist_ok=True)
    path = _cache_path(cache_dir)
    need_n = required_n_terms(weight, ctx)
    records = []
    if os.path.exists(path):
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                if rec.get("checksum") != _record_checksum(rec):
                    raise CacheError(
                        f"cache checksum mismatch in {path}; delete the file "
                        f"or run 'lfmoments cache clear' to regenerate")
                if rec.get("schema_version") != SCHEMA_VERSION:
                    continue  # regenerate, never reinterpret
                records.append(rec)
    for rec in records:
        if (rec["weight"] == weight and rec["prec_bits"] >= ctx.working_bits
                and rec["n_terms"] >= need_n):
            return _deserialize_forms(rec)
    forms = eigendata_with_weights(weight, ctx, n_terms=need_n)
    record = _serialize_forms(weight, ctx.working_bits, need_n, forms)
    records = [r for r in records if r["weight"] != weight] + [record]
    fd, tmp = tempfile.mkstemp(dir=cache_dir, suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        for rec in sorted(records, key=lambda r: r["weight"]):
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    os.replace(tmp, path)
    return forms


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

def _cmd_eigen(cfg: RunConfig) -> dict:
    ctx = cfg.context()
    weight = cfg.args["weight"]
    forms = cache_roundtrip(weight, ctx, cfg.cache_dir)
    n_show = cfg.args.get("n_terms") or min(16, forms[0].n_terms if forms else 0)
    return {
        "record": "eigen",
        "schema_version": SCHEMA_VERSION,
        "weight": weight,
        "dim": cusp_dim(weight),
        "forms": [{
            "tag": f.conjugacy_tag,
            "lambda": {str(n): ball_payload(f.lam_at(n), cfg.prec_bits)
                       for n in range(2, n_show + 1)},
            "omega": ball_payload(f.omega, cfg.prec_bits) if f.omega else None,
        } for f in forms],
    }


def _cmd_lvals(cfg: RunConfig) -> dict:
    ctx = cfg.context()
    weight = cfg.args["weight"]
    forms = cache_roundtrip(weight, ctx, cfg.cache_dir)
    want = cfg.args.get("quantity", "all")
    out_forms = []
    for f in forms:
        entry = {"tag": f.conjugacy_tag}
        if want in ("omega", "all"):
            entry["omega"] = ball_payload(f.omega, cfg.prec_bits,
                                          method="petersson")
        if want in ("hecke_central", "all"):
            entry["hecke_central"] = ball_payload(
                hecke_central(f, cfg.args.get("u", 0.0), ctx), cfg.prec_bits,
                method="afe_closed_v")
        if want in ("sym2_half", "all"):
            entry["sym2_half"] = ball_payload(sym2_value(f, 0.5, ctx),
                                              cfg.prec_bits,
                                              method="gamma_kernel_afe")
        if want in ("sym2_one", "all"):
            entry["sym2_one"] = ball_payload(sym2_value(f, 1.0, ctx),
                                             cfg.prec_bits,
                                             method="gamma_kernel_afe")
        out_forms.append(entry)
    return {"record": "lvals", "schema_version": SCHEMA_VERSION,
            "weight": weight, "forms": out_forms}


def _cmd_quadl(cfg: RunConfig) -> dict:
    ctx = cfg.context()
    v = curly_L(cfg.args["n"], cfg.args["s"], ctx, route=cfg.args.get("route", "auto"))
    return {"record": "quadl", "schema_version": SCHEMA_VERSION,
            "n": v.n, "s": str(cfg.args["s"]),
            "value": ball_payload(v.value, cfg.prec_bits, method=v.route)}


def _cmd_kernel(cfg: RunConfig) -> dict:
    ctx = cfg.context()
    weight = cfg.args["weight"]
    if weight % 2:
        raise DomainError("even weight required")
    m = weight // 2
    kind = cfg.args["kind"]
    if kind == "psi":
        kv = psi_kernel(m, cfg.args["x"], ctx)
    elif kind == "phi":
        kv = phi_kernel(m, cfg.args["x"], ctx)
    elif kind == "phi-lg":
        kv = phi_lg(m, cfg.args["n"], cfg.args["l"], cfg.args.get("order", 1), ctx)
    elif kind == "afe-v":
        kv = hecke_afe_weight(m, cfg.args["l"], cfg.args.get("u", 0.0), ctx)
    elif kind == "afe-g":
        kv = sym2_afe_weight(m, cfg.args["x"], cfg.args.get("s0", 0.5), ctx)
    else:
        raise DomainError(f"unknown kernel {kind!r}")
    payload = ball_payload(kv.value, cfg.prec_bits, method=kv.method)
    if kv.lg_order is not None:
        payload["lg_order"] = kv.lg_order
    return {"record": "kernel", "schema_version": SCHEMA_VERSION,
            "kind": kind, "weight": weight, "value": payload}


def _cmd_verify_lemma(cfg: RunConfig) -> dict:
    ctx = cfg.context()
    weight = cfg.args["weight"]
    if weight % 2:
        raise DomainError("even weight required")
    chk = moments.twisted_moment_check(weight // 2, cfg.args["l"], ctx)
    out = {
        "record": "verify_lemma", "schema_version": SCHEMA_VERSION,
        "weight": weight, "m": chk.m, "l": chk.l,
        "lhs": ball_payload(chk.lhs, cfg.prec_bits),
        "rhs": ball_payload(chk.rhs, cfg.prec_bits),
        "residual": ball_payload(chk.residual, cfg.prec_bits),
    }
    if chk.exploratory is not None:
        out["exploratory"] = {name: ball_payload(r, cfg.prec_bits)
                              for name, r in chk.exploratory.items()}
        out["matched"] = chk.matched
    return out


def _cmd_moment(cfg: RunConfig) -> dict:
    ctx = cfg.context()
    weight = cfg.args["weight"]
    if weight % 2:
        raise DomainError("even weight required")
    bd = moments.moment_breakdown(weight // 2, ctx,
                                  kernel_policy=cfg.args.get("kernel_policy", "direct"))
    pb = lambda b: ball_payload(b, cfg.prec_bits)
    return {"record": "moment", "schema_version": SCHEMA_VERSION,
            "m": bd.m, "weight": weight,
            "M_D": pb(bd.M_D), "M_ND": pb(bd.M_ND),
            "ET1": pb(bd.ET1), "ET2": pb(bd.ET2),
            "lhs_brute": pb(bd.lhs_brute), "residual": pb(bd.residual),
            "lg_extract": pb(bd.lg_extract),
            "truncation": {"kernel_policy": cfg.args.get("kernel_policy", "direct")}}


def _cmd_theorem1(cfg: RunConfig) -> dict:
    ctx = cfg.context()
    h = moments.bump(cfg.args.get("theta1", 1.0), cfg.args.get("theta2", 2.0), ctx)
    fit_grid = None
    if cfg.args.get("fit_grid"):
        fit_grid = [float(x) for x in str(cfg.args["fit_grid"]).split(",")]
    rep = moments.theorem1_report(
        cfg.args["K"], h, ctx,
        kernel_policy=cfg.args.get("kernel_policy", "mixed"),
        fit_grid=fit_grid, max_weight=cfg.max_weight,
        jobs=cfg.args.get("jobs", 1))
    pb = lambda b: ball_payload(b, cfg.prec_bits)
    with mp.workprec(cfg.prec_bits):
        ratio = rep.lhs_avg.mid / rep.diag_main.mid
    return {"record": "theorem1", "schema_version": SCHEMA_VERSION,
            "K": rep.K, "lhs_avg": pb(rep.lhs_avg),
            "diag_main": pb(rep.diag_main),
            "nondiag_main": pb(rep.nondiag_main),
            "lg_extract": pb(rep.lg_extract),
            "lhs_over_diag": mp.nstr(ratio, 12),
            "residual_fit": [{"power": p, "coefficient": mp.nstr(c, 15)}
                             for p, c in rep.residual_fit],
            "weights": sorted(4 * k for k in rep.breakdowns)}


def _cmd_cache(cfg: RunConfig) -> dict:
    path = _cache_path(cfg.cache_dir)
    if cfg.args["action"] == "clear":
        removed = 0
        if os.path.exists(path):
            os.remove(path)
            removed = 1
        return {"record": "cache", "action": "clear", "removed_files": removed}
    records = []
    if os.path.exists(path):
        with open(path) as fh:
            for line in fh:
                if not line.strip():
                    continue
                rec = json.loads(line)
                if rec.get("checksum") != _record_checksum(rec):
                    raise CacheError(f"cache checksum mismatch in {path}")
                records.append({"weight": rec["weight"],
                                "prec_bits": rec["prec_bits"],
                                "n_terms": rec["n_terms"],
                                "forms": len(rec["forms"])})
    return {"record": "cache", "action": "status", "path": path,
            "records": records, "count": len(records)}


_COMMANDS = {
    "eigen": _cmd_eigen,
    "lvals": _cmd_lvals,
    "quadl": _cmd_quadl,
    "kernel": _cmd_kernel,
    "verify-lemma": _cmd_verify_lemma,
    "moment": _cmd_moment,
    "theorem1": _cmd_theorem1,
    "cache": _cmd_cache,
}


def dispatch(cfg: RunConfig) -> dict:
    handler = _COMMANDS.get(cfg.subcommand)
    if handler is None:
        raise DomainError(f"unknown subcommand {cfg.subcommand!r}")
    return handler(cfg)


def main(argv=None) -> int:
    try:
        cfg = parse_cli(sys.argv[1:] if argv is None else argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        report = dispatch(cfg)
        text = emit(report, cfg.output_format, cfg.output)
        if not cfg.output:
            sys.stdout.write(text)
        return EXIT_OK
    except (PrecisionError, NumericFailure, CalibrationError,
            DiagonalizationError) as exc:
        print(f"precision failure: {exc}", file=sys.stderr)
        return EXIT_PRECISION
    except CacheError as exc:
        print(f"cache error: {exc}", file=sys.stderr)
        return EXIT_CACHE
    except (DomainError, PoleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
