import math

import pytest

import isosr


def test_parse_render_and_complexity():
    e = isosr.Expr("c1*p/(c2+p)")
    assert str(e) == "(c1 * p) / (c2 + p)"
    assert e.complexity == 7
    assert e.parameters == 2
    assert e([5.0, 2.0], 2.0) == pytest.approx(2.5)


def test_parse_error_is_value_error():
    with pytest.raises(ValueError):
        isosr.parse("p +* 2")


def test_catalog_complexities():
    got = {m["name"]: m["complexity"] for m in isosr.catalog()}
    assert [got[k] for k in ("Langmuir", "Dual-Site Langmuir", "BET", "Freundlich", "Sips")] == [7, 15, 13, 5, 9]


def test_check_langmuir():
    v = isosr.check(isosr.Expr("c1*p/(c2+p)"), [5.0, 2.0])
    assert v["c1"] and v["c2"] and v["c3"]
    assert v["slope_limit"] == pytest.approx(2.5)
    assert v["value_limit"] == 0.0


def test_check_failures():
    assert not isosr.check(isosr.Expr("c1*p + c2"), [1.0, 1.0])["c1"]
    v = isosr.check(isosr.Expr("sqrt(p)"))
    assert not v["c2"]
    assert v["slope_limit"] == math.inf


def test_canonical_monic_denominator():
    c = isosr.canonical_form(isosr.Expr("2*p/(3*p^2+4*p+5)"))
    assert c["text"] == "(c1 * p) / ((c2 + (c3 * p)) + (p ^ 2))"
    assert c["exact_coefficients"] == ["2/3", "5/3", "4/3"]
    assert c["rational"]


def test_canonical_reduces_parameters():
    c = isosr.canonical_form(isosr.Expr("c1*p/(c2*p^2+c3*p+c4)"))
    assert c["parameters"] == 3


def test_fit_recovers_langmuir():
    ps, ys = isosr.synthesize("langmuir", [5.0, 2.0], sigma=0.0)
    r = isosr.fit(isosr.Expr("c1*p/(c2+p)"), ps, ys, restarts=8, seed=3)
    assert r["loss"] <= 1e-12
    assert r["params"][0] == pytest.approx(5.0, rel=1e-2)
    assert r["params"][1] == pytest.approx(2.0, rel=1e-2)


def test_search_roundtrip(tmp_path):
    cfg = "engine = ga\nruns = 1\ndeterministic = true\n[ga]\ngenerations = 3\npopulation = 16\n"
    a = isosr.search(cfg, str(tmp_path))
    b = isosr.search(cfg)
    assert a["merged"] == b["merged"]
    assert (tmp_path / "merged_front.csv").exists()
    assert (tmp_path / "manifest.ini").exists()
    assert 0.0 <= a["pass_rates"]["c1"] <= 1.0


def test_bad_config_key():
    with pytest.raises(ValueError):
        isosr.search("nonsense = 1\n")


def test_default_config_parses():
    text = isosr.default_config()
    assert "[ga]" in text and "[bsr]" in text
