import json
import os

import pytest
from mpmath import mp, mpf

from lfmoments.cli import (
    CacheError, RunConfig, parse_cli, dispatch, emit, cache_roundtrip,
    ball_payload, parse_ball, main, CSV_HEADER, _cache_path,
)
from lfmoments.precision import Ball, make_context


def test_parse_echo():
    cfg = parse_cli(["moment", "--weight", "12"])
    assert cfg.subcommand == "moment"
    assert cfg.args["weight"] == 12
    assert cfg.prec_bits == 192
    assert cfg.target_error == 1e-12
    assert cfg.output_format == "json"


def test_parse_flags_after_subcommand():
    cfg = parse_cli(["quadl", "--n", "-4", "--s", "0.5", "--prec-bits", "96"])
    assert cfg.prec_bits == 96
    assert cfg.args["n"] == -4


def test_parse_bogus_flag_exits_2():
    with pytest.raises(SystemExit) as exc:
        parse_cli(["--bogus"])
    assert exc.value.code == 2


def test_no_args_help_exit_0():
    assert main([]) == 0


def test_config_file_precedence(tmp_path):
    cfgfile = tmp_path / "lf.conf"
    cfgfile.write_text("prec_bits=96\ntarget_error=1e-8\n")
    cfg = parse_cli(["--config", str(cfgfile), "quadl", "--n", "5", "--s", "2.0"])
    assert cfg.prec_bits == 96 and cfg.target_error == 1e-8
    # CLI flag overrides config
    cfg2 = parse_cli(["--config", str(cfgfile), "--prec-bits", "128",
                      "quadl", "--n", "5", "--s", "2.0"])
    assert cfg2.prec_bits == 128 and cfg2.target_error == 1e-8


def test_ball_payload_roundtrip():
    with mp.workprec(160):
        b = Ball(mpf(2) / 3, mpf(1e-30))
    p = ball_payload(b, 128)
    b2 = parse_ball(p, 128)
    assert abs(b2.mid - b.mid) <= b2.rad
    # re-emission of the parsed value is byte-identical
    p2 = ball_payload(Ball(b2.mid, mpf(p["radius"])), 128)
    assert p2["midpoint"] == p["midpoint"]


def test_emit_json_roundtrip(tmp_path):
    report = {"record": "kernel", "value": {"midpoint": "1.25", "radius": "1.0e-30"}}
    text = emit(report, "json")
    parsed = json.loads(text)
    assert emit(parsed, "json") == text
    dest = tmp_path / "out.json"
    emit(report, "json", str(dest))
    assert json.loads(dest.read_text()) == parsed


def test_emit_csv_header_fixed():
    report = {"record": "kernel", "value": {"midpoint": "1.25", "radius": "0",
                                            "method": "direct_series"}}
    text = emit(report, "csv")
    assert text.splitlines()[0] == CSV_HEADER
    assert "direct_series" in text


def test_quadl_end_to_end_matches_library():
    cfg = parse_cli(["quadl", "--n", "-4", "--s", "0.5",
                     "--prec-bits", "128", "--target-error", "1e-20"])
    report = dispatch(cfg)
    from lfmoments.quadl import curly_L
    lib = curly_L(-4, 0.5, make_context(128, 1e-20))
    with mp.workprec(160):
        assert abs(mpf(report["value"]["midpoint"]) - lib.mid) < mpf(1e-35)


def test_verify_lemma_end_to_end(tmp_path):
    cfg = parse_cli(["verify-lemma", "--weight", "12", "--l", "3",
                     "--prec-bits", "128", "--target-error", "1e-8",
                     "--cache-dir", str(tmp_path)])
    report = dispatch(cfg)
    with mp.workprec(120):
        assert abs(mpf(report["residual"]["midpoint"])) < 1e-8
    assert report["m"] == 6 and report["l"] == 3


def test_kernel_lg_order_in_payload():
    cfg = parse_cli(["kernel", "--kind", "phi-lg", "--weight", "40",
                     "--n", "31", "--l", "1000", "--order", "2",
                     "--prec-bits", "96", "--target-error", "1e-8"])
    report = dispatch(cfg)
    assert report["value"]["lg_order"] == 2
    assert report["value"]["method"] == "liouville_green"


def test_cache_cold_then_warm_identical(tmp_path):
    ctx = make_context(96, 1e-8)
    f1 = cache_roundtrip(12, ctx, str(tmp_path))
    path = _cache_path(str(tmp_path))
    assert os.path.exists(path)
    payload1 = open(path).read()
    f2 = cache_roundtrip(12, ctx, str(tmp_path))
    payload2 = open(path).read()
    assert payload1 == payload2
    assert f1[0].lam_at(2).mid is not None
    with mp.workprec(140):
        assert abs(f1[0].lam_at(2).mid - f2[0].lam_at(2).mid) <= \
            f1[0].lam_at(2).rad + f2[0].lam_at(2).rad
    assert f2[0].omega is not None


def test_cache_precision_dominance(tmp_path):
    hi = make_context(160, 1e-12)
    lo = make_context(96, 1e-8)
    cache_roundtrip(12, hi, str(tmp_path))
    before = open(_cache_path(str(tmp_path))).read()
    cache_roundtrip(12, lo, str(tmp_path))  # served from cache, no rewrite
    after = open(_cache_path(str(tmp_path))).read()
    assert before == after


def test_cache_corruption_detected(tmp_path):
    ctx = make_context(96, 1e-8)
    cache_roundtrip(12, ctx, str(tmp_path))
    path = _cache_path(str(tmp_path))
    blob = open(path).read()
    # flip one digit inside the record body
    idx = blob.index('"weight": 12')
    corrupted = blob[:idx] + '"weight": 13' + blob[idx + len('"weight": 12'):]
    open(path, "w").write(corrupted)
    with pytest.raises(CacheError):
        cache_roundtrip(12, ctx, str(tmp_path))


def test_cache_transparency(tmp_path):
    # results with and without cache agree within radii
    ctx = make_context(96, 1e-8)
    from lfmoments.lvalues import eigendata_with_weights
    fresh = eigendata_with_weights(12, ctx)
    cached = cache_roundtrip(12, ctx, str(tmp_path))
    cached2 = cache_roundtrip(12, ctx, str(tmp_path))
    for n in (2, 5, 10):
        with mp.workprec(140):
            assert abs(fresh[0].lam_at(n).mid - cached2[0].lam_at(n).mid) <= \
                fresh[0].lam_at(n).rad + cached2[0].lam_at(n).rad


def test_exit_codes(tmp_path):
    # precision failure -> 3 (sym2 truncation cap unreachable at 1e-280)
    rc = main(["lvals", "--weight", "12", "--quantity", "sym2_half",
               "--target-error", "1e-280", "--prec-bits", "192",
               "--cache-dir", str(tmp_path / "c3")])
    assert rc == 3
    # cache corruption -> 4
    ctx_args = ["eigen", "--weight", "12", "--prec-bits", "96",
                "--target-error", "1e-8", "--cache-dir", str(tmp_path)]
    assert main(ctx_args + ["--output", str(tmp_path / "o.json")]) == 0
    path = _cache_path(str(tmp_path))
    blob = open(path).read()
    idx = blob.index('"weight": 12')
    open(path, "w").write(blob[:idx] + '"weight": 13' + blob[idx + len('"weight": 12'):])
    assert main(ctx_args) == 4
    # odd weight -> usage error 2
    assert main(["moment", "--weight", "13"]) == 2


def test_end_to_end_determinism(tmp_path):
    args = ["quadl", "--n", "12", "--s", "0.75", "--prec-bits", "96",
            "--target-error", "1e-10"]
    cfg = parse_cli(args)
    t1 = emit(dispatch(cfg), "json")
    t2 = emit(dispatch(parse_cli(args)), "json")
    assert t1 == t2
