import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lpdissip import harness
from lpdissip.harness import RunOptions, parse_range, parse_sweep, run_spec, sweep
from lpdissip.io import SpecParseError, decode_complex, dump_json, encode_complex, spec_from_dict, spec_to_dict
from lpdissip.model import DissipError, Status


@settings(max_examples=50)
@given(st.lists(st.complex_numbers(allow_nan=False, allow_infinity=False, max_magnitude=1e6),
                min_size=1, max_size=9))
def test_complex_roundtrip(zs):
    a = np.array(zs)
    assert np.array_equal(decode_complex(json.loads(json.dumps(encode_complex(a)))), a)


def test_bare_number_is_complex_scalar():
    assert decode_complex(2.5) == 2.5 + 0j


def test_schema_errors_carry_pointer():
    with pytest.raises(SpecParseError) as exc:
        spec_from_dict({"kind": "scalar", "n": "two"})
    assert exc.value.pointer == "/n"
    with pytest.raises(SpecParseError) as exc:
        spec_from_dict({"kind": "scalar", "n": 1, "A": [[[1, 2, 3]]]})
    assert exc.value.pointer == "/A"
    with pytest.raises(SpecParseError):
        spec_from_dict({"kind": "scalar", "surprise": 1})


def test_spec_roundtrip_all_corpus():
    for name in harness.corpus_names():
        doc = harness.load_corpus_entry(name)
        spec = spec_from_dict(doc)
        again = spec_from_dict(spec_to_dict(spec))
        assert spec_to_dict(again) == spec_to_dict(spec)


def test_corpus_expectations():
    for name in harness.corpus_names():
        doc = harness.load_corpus_entry(name)
        exp = doc["expect"]
        rep = run_spec(doc, exp["p"], RunOptions())
        for crit, want in exp.items():
            if crit in ("p", "probe"):
                continue
            found = [v for v in rep.verdicts if v.criterion in (crit, "field:" + crit)]
            assert found, (name, crit)
            v = found[0]
            if want == "holds":
                assert v.margin >= 0, (name, crit)
            elif want == "fails":
                assert v.status.fails, (name, crit)
            else:
                assert v.status.value == want, (name, crit)


def test_reports_are_byte_identical():
    doc = harness.load_corpus_entry("example-gamma")
    opts = RunOptions(probe=True)
    a = dump_json(run_spec(doc, 4, opts).to_dict(timings=False))
    b = dump_json(run_spec(doc, 4, opts).to_dict(timings=False))
    assert a == b


def test_probe_agreement_labels():
    rep = run_spec(harness.load_corpus_entry("example-gamma"), 4, RunOptions(probe=True))
    assert set(rep.agreement.values()) <= {"agree", "conflict", "unconfirmed", "counterexample", "no-counterexample"}


def test_parse_range_and_sweep():
    assert parse_range("1:2:0.5") == [1.0, 1.5, 2.0]
    assert parse_range("0.1,0.2") == [0.1, 0.2]
    assert set(parse_sweep("nu=0:0.2:0.1,p=2:3:1")) == {"nu", "p"}
    with pytest.raises(DissipError):
        parse_range("1:2:0")


def test_sweep_deterministic_order_under_threads():
    tmpl = {"id": "planar", "kind": "elasticity", "n": 2, "m": 2, "nu": 0.0}
    ranges = parse_sweep("nu=-1:0.45:0.05,p=1.5:6:0.5")
    a = sweep(ranges, tmpl, threads=1)
    b = sweep(ranges, tmpl, threads=4)
    assert a == b and len(a) == 30 * 10
    assert {r["status"] for r in a} <= {Status.PROVEN_DISSIPATIVE.value, Status.PROVEN_NOT_DISSIPATIVE.value}


def test_csv_columns():
    rep = run_spec(harness.load_corpus_entry("elasticity-planar-violating"), 4)
    text = harness.rows_to_csv(rep.csv_rows())
    assert text.splitlines()[0] == "spec_id,p,criterion,status,margin,certificate_ref"
    assert rep.exit_code == harness.EXIT_FAILS
