import json
import os
from fractions import Fraction

import pytest

from fracinv.io import (
    SystemFileError,
    atomic_write,
    config_hash,
    corpus_names,
    dump_system,
    load_system,
    parse_system,
    write_csv,
)
from fracinv.scalar import QuadNum

BASE = {"degree": 2, "a": {"1,0": "1"}, "b": {"0,1": "-1"}}


def with_(**kw):
    d = json.loads(json.dumps(BASE))
    d.update(kw)
    return d


def test_corpus_complete():
    names = set(corpus_names())
    expected = {"3.1", "3.2", "3.3", "3.4", "3.5", "4.5", "4.6", "4.7", "4.8", "4.9", "4.4*", "4.44",
                "4.7.1", "table1-i", "table1-ii", "table1-iii", "table1-iv",
                "table2-v", "table2-vi", "table2-vii", "table2-viii", "zero"}
    assert expected <= names


@pytest.mark.parametrize("name", corpus_names())
def test_round_trip(name):
    spec = load_system(name)
    back = parse_system(json.loads(json.dumps(dump_system(spec))))
    assert back.field.P == spec.field.P and back.field.Q == spec.field.Q
    assert back.field.degree == spec.field.degree
    assert back.alpha == spec.alpha and back.x0 == spec.x0
    assert [(lab, g) for lab, g in back.reference_curves] == list(spec.reference_curves)


def test_quadratic_extension_coefficient():
    spec = parse_system(with_(a={"1,0": {"rat": "1/2", "irr": "-3", "d": 2}}))
    c = spec.field.P.coeff(1, 0)
    assert isinstance(c, QuadNum) and c.d == 2 and c.b == -3 and c.a == Fraction(1, 2)


def test_rational_strings_exact():
    spec = parse_system(with_(a={"1,0": "-7/3", "0,0": 4}, alpha="3/4", x0=["1/10", "3/10"]))
    assert spec.field.P.coeff(1, 0) == Fraction(-7, 3)
    assert spec.alpha == Fraction(3, 4)
    assert spec.x0 == (Fraction(1, 10), Fraction(3, 10))


@pytest.mark.parametrize("doc,pointer", [
    ({"degree": 2, "a": {}}, "/"),
    (with_(degree=0), "/degree"),
    (with_(a={"1,0": "x"}), "/a/1,0"),
    (with_(a={"1;0": "1"}), "/a"),
    (with_(b={"0,1": "1/0"}), "/b/0,1"),
    (with_(a={"3,0": "1"}), "/a/3,0"),
    (with_(x0=["1"]), "/x0"),
    (with_(extra=1), "/"),
    (with_(reference_curves=[{"label": "c", "g": {"1,1": "2.5"}}]), "/reference_curves/0/g/1,1"),
])
def test_schema_errors_carry_pointer(doc, pointer):
    with pytest.raises(SystemFileError) as info:
        parse_system(doc)
    assert info.value.pointer == pointer
    assert str(info.value).startswith(pointer)


def test_load_sources(tmp_path):
    p = tmp_path / "sys.json"
    p.write_text(json.dumps(with_(name="mine")))
    assert load_system(p).name == "mine"
    assert load_system(BASE).field.P.coeff(1, 0) == 1
    with pytest.raises(FileNotFoundError):
        load_system("no-such-system")
    bad = tmp_path / "bad.json"
    bad.write_text("{ not json")
    with pytest.raises(SystemFileError, match="invalid JSON"):
        load_system(bad)


def test_atomic_write_leaves_no_temp(tmp_path):
    target = tmp_path / "sub" / "out.txt"
    atomic_write(target, "one")
    atomic_write(target, "two")
    assert target.read_text() == "two"
    assert os.listdir(target.parent) == ["out.txt"]


def test_atomic_write_failure_keeps_old(tmp_path):
    target = tmp_path / "out.txt"
    atomic_write(target, "old")
    with pytest.raises(TypeError):
        atomic_write(target, 12345)
    assert target.read_text() == "old"
    assert os.listdir(tmp_path) == ["out.txt"]


def test_csv_full_precision(tmp_path):
    p = write_csv(tmp_path / "v.csv", ["t", "x"], [[0.1, 1 / 3], [2.0, -1e-300]])
    lines = p.read_text().splitlines()
    assert lines[0] == "t,x"
    t, x = lines[1].split(",")
    assert float(x) == 1 / 3 and float(t) == 0.1
    assert float(lines[2].split(",")[1]) == -1e-300


def test_config_hash_stable():
    a = config_hash({"h": 0.5, "alpha": 0.7})
    assert a == config_hash({"alpha": 0.7, "h": 0.5})
    assert a != config_hash({"alpha": 0.7, "h": 0.25})
    assert len(a) == 64
