import json
import math
from fractions import Fraction

import pytest

from modinv import estimate as E
from modinv.numtheory import C_CONSTANT


def test_c_constant():
    assert C_CONSTANT == pytest.approx(1 / math.log2((1 + 5 ** 0.5) / 2))
    assert C_CONSTANT == pytest.approx(1.44042, abs=1e-5)


def test_block_coefficients_sum():
    assert E.coefficient_sum() == (80, -13)
    assert E.total_coefficient() == pytest.approx(2 * (80 * C_CONSTANT - 13))
    assert round(E.total_coefficient()) == E.INVERSION_COEFFICIENT_ROUNDED == 204


def test_point_addition_composition():
    assert E.point_addition_coefficient() == 4 * 204 + 4 * 32 + 32 == 976


def test_ecdlp_n3_coefficient():
    assert E.ecdlp_n3_coefficient() == Fraction(976)
    assert E.ecdlp_n3_coefficient(Fraction(4)) == Fraction(488)


def test_ecdlp_total_scales_as_n3():
    n = 256
    t = E.ecdlp_totals(n, w=2 * int(math.log2(n)))
    assert t["toffoli_leading"] == pytest.approx(976 * n ** 3)
    assert t["window"] == 16


@pytest.mark.parametrize("n,want", sorted(E.REFERENCE_ECDLP_WIDTH.items()))
def test_ecdlp_width_reference(n, want):
    assert E.ecdlp_width(n) == want


@pytest.mark.parametrize("n", [8, 16, 32, 64, 128, 256])
def test_inversion_width(n):
    assert E.inversion_width(n) == 3 * n + 4 * int(math.log2(n)) + 20


def test_per_block_breakdown_sums_to_total():
    n = 128
    assert sum(E.per_block_breakdown(n).values()) == pytest.approx(E.inversion_toffoli_leading(n))
    assert E.inversion_cnot_leading(n) == pytest.approx(E.inversion_toffoli_leading(n) / 2)


@pytest.mark.parametrize("fn,n", [(E.inversion_width, 2), (E.ecdlp_width, 0), (E.inversion_toffoli_leading, 4)])
def test_domain_errors(fn, n):
    with pytest.raises(ValueError):
        fn(n)


def test_window_must_be_positive():
    with pytest.raises(ValueError):
        E.ecdlp_totals(64, w=0)


def test_table_report_sources():
    rows = E.table_report({64: {"toffoli": 123}})
    by_n = {r.n: r for r in rows}
    assert by_n[64].cells["toffoli_ref"] == {"value": 10_000_000, "source": "published"}
    assert by_n[64].cells["toffoli_measured"] == {"value": 123, "source": "measured"}
    assert by_n[256].cells["ecdlp_width"]["source"] == "model"
    assert {c["source"] for r in rows for c in r.cells.values()} <= {"published", "model", "measured"}


def test_report_formats():
    rows = E.table_report()
    data = json.loads(E.report_json(rows))
    assert [d["n"] for d in data] == list(E.REPORT_SIZES)
    tsv = E.report_tsv(rows).splitlines()
    header = tsv[0].split("\t")
    assert header[0] == "n" and "ecdlp_width_source" in header
    assert len(tsv) == 1 + len(E.REPORT_SIZES)


def test_estimate_report():
    rep = E.estimate_report(256, ecdlp=True)
    assert rep["inversion_width"]["value"] == 820
    assert rep["ecdlp_width"]["value"] == 1333
    assert rep["ecdlp_width_ref"]["value"] == 1333
    assert rep["toffoli_ref"]["source"] == "published"
    assert set(rep["per_block"]) == set(E.BLOCK_COEFFICIENTS)
