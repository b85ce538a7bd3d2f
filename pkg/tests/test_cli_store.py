import json
import logging

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import DATA, table
from lcsq import cli
from lcsq.emit import emit_csv, emit_latex, emit_text, format_cell_latex, format_cell_text, latex_cells, parse_csv
from lcsq.exact_linalg import GroupInvariants
from lcsq.lcs_engine import AlgebraPresentation, BigradedTable, Ring, Z, n_table
from lcsq.store import CacheRecord, ComputationKey, ResultStore, cache_get, cache_put, table_from_json, table_to_json

PRES = AlgebraPresentation.from_strings(2, "Z", "x1^3,x2^4")


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


# -- cell formats ---------------------------------------------------------------------


def test_cell_formats():
    assert format_cell_text(None) == ""
    assert format_cell_text(GroupInvariants()) == "0"
    assert format_cell_text(GroupInvariants.from_cyclic_orders(1, [3, 4])) == "1 (3·4)"
    assert format_cell_text(GroupInvariants.from_cyclic_orders(0, [3, 3])) == "0 (3^2)"
    assert format_cell_text(5) == "5"
    assert format_cell_latex(GroupInvariants()) == r"{\tiny $0$ }"
    assert format_cell_latex(GroupInvariants(2)) == "$2$"
    assert format_cell_latex(GroupInvariants.from_cyclic_orders(0, [2, 3])) == r"{\tiny $0$ }{  $(2 \cdot 3)$}"
    assert format_cell_latex(GroupInvariants.from_cyclic_orders(0, [3, 3])) == r"{\tiny $0$ }{  $(3^{2})$}"


def test_latex_table_matches_reference_layout():
    t = table("Z", "x1^3,x2^7", 2, 11)
    text = (DATA / "reference_tables.tex").read_text()
    ref = text.split("%% N2 Z x1^3,x2^7\n", 1)[1].split("\\end{tabular}", 1)[0]
    assert latex_cells(emit_latex(t)) == latex_cells(ref)


def test_text_grid():
    t = table("Z", "x1^3,x2^4", 3, 9)
    lines = emit_text(t).splitlines()
    assert lines[0] == "N_3 of Z<x1,x2>/(x1^3, x2^4), total degree <= 9"
    row3 = lines[2 + 3].split()
    assert row3[:6] == ["3", "0", "1", "2", "(3)", "2"]
    three = emit_text(n_table(AlgebraPresentation.from_strings(3, "Z", "x1^2"), 2, 2))
    assert "(1, 1, 0): 1" in three


# -- CSV ------------------------------------------------------------------------------


def test_csv_round_trip_z():
    t = n_table(PRES, 3, 8, max_dim=60)
    assert t.skipped()
    back = parse_csv(emit_csv(t), Z, 3)
    assert back.cells == t.cells and back.bound == 8


def test_csv_round_trip_fp():
    t = table("Fp:3", "x1^3,x2^4", 3, 9)
    assert parse_csv(emit_csv(t), Ring(3), 3).cells == t.cells


def test_csv_rows():
    t = table("Z", "x1^3,x2^4", 3, 9)
    rows = emit_csv(t).splitlines()
    assert rows[0] == "deg_x1,deg_x2,rank,torsion"
    assert "3,4,1,3;4" in rows and "4,2,0,3;3" in rows


@pytest.mark.parametrize("bad", ["", "a,b\n", "deg_x1,rank,torsion\n0,1\n", "deg_x1,rank,torsion\n0,,\n1,0,5\n2,1,x\n"])
def test_csv_rejects_garbage(bad):
    with pytest.raises(ValueError):
        parse_csv(bad, Z)


@settings(max_examples=100, deadline=None)
@given(st.dictionaries(
    st.tuples(st.integers(0, 3), st.integers(0, 3)),
    st.tuples(st.integers(0, 3), st.lists(st.sampled_from([2, 3, 4, 5, 8, 9, 12]), max_size=3)),
))
def test_csv_round_trip_random(raw):
    cells = {d: GroupInvariants.from_cyclic_orders(r, o) for d, (r, o) in raw.items()}
    t = BigradedTable(2, 6, cells)
    assert parse_csv(emit_csv(t), Z).cells == cells


# -- cache ----------------------------------------------------------------------------


def record(bound=6):
    t = n_table(PRES, 3, bound)
    return CacheRecord(ComputationKey.for_run(PRES, 3, bound), t, 0.5, 10.0)


def test_key_is_order_insensitive():
    a = ComputationKey("Z", 2, ("x2^4", "x1^3"), 3, 6)
    b = ComputationKey("Z", 2, ("x1^3", "x2^4"), 3, 6)
    assert a == b and a.digest() == b.digest()
    assert a.digest() != ComputationKey("Z", 2, ("x1^3", "x2^4"), 2, 6).digest()
    assert a.digest() != ComputationKey("Z", 3, ("x1^3", "x2^4"), 3, 6).digest()
    assert a.digest() != ComputationKey("Fp:3", 2, ("x1^3", "x2^4"), 3, 6).digest()


def test_json_round_trip():
    for t in (table("Z", "x1^3,x2^4", 3, 9), table("Fp:3", "x1^3,x2^4", 3, 9)):
        doc = json.loads(json.dumps(table_to_json(t)))
        assert table_from_json(doc) == t


def test_put_then_get(tmp_path):
    rec = record()
    path = cache_put(tmp_path, rec.key, rec)
    assert path.exists() and not [p for p in tmp_path.iterdir() if p.name.startswith(".tmp")]
    hit = cache_get(tmp_path, rec.key, PRES)
    assert hit.table == rec.table and hit.wall_time == 0.5 and hit.peak_memory_mb == 10.0


def test_unknown_key_misses(tmp_path):
    assert cache_get(tmp_path, ComputationKey("Z", 2, ("x1^9",), 2, 3)) is None


def test_put_under_wrong_key(tmp_path):
    rec = record()
    with pytest.raises(ValueError):
        cache_put(tmp_path, ComputationKey("Z", 2, ("x1^9",), 2, 3), rec)


def test_stale_version_is_ignored(tmp_path):
    rec = record()
    store = ResultStore(tmp_path)
    path = store.put(rec)
    doc = json.loads(path.read_text())
    doc["key"]["version"] = "0"
    path.write_text(json.dumps(doc))
    assert store.get(rec.key) is None


def test_corrupt_file_warns_and_misses(tmp_path, caplog):
    rec = record()
    store = ResultStore(tmp_path)
    store.put(rec).write_text("{ not json")
    with caplog.at_level(logging.WARNING):
        assert store.get(rec.key) is None
    assert "unreadable cache file" in caplog.text


def test_cache_hit_gives_identical_output(tmp_path, capsys):
    args = ["compute", "--relations", "x1^3,x2^4", "--i", "3", "--max-degree", "7", "--format", "csv",
            "--cache-dir", str(tmp_path)]
    code1, first, _ = run(capsys, *args)
    assert len(list(tmp_path.glob("*.json"))) == 1
    code2, second, _ = run(capsys, *args)
    assert code1 == code2 == 0 and first == second


def test_cache_dir_from_environment(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("LCSQ_CACHE_DIR", str(tmp_path))
    assert run(capsys, "compute", "--relations", "x1^2", "--i", "2", "--max-degree", "3")[0] == 0
    assert len(list(tmp_path.glob("*.json"))) == 1


# -- command line ---------------------------------------------------------------------


def test_compute_text(capsys):
    code, out, _ = run(capsys, "compute", "--ring", "Z", "--relations", "x1^3,x2^7", "--i", "2", "--max-degree", "10")
    assert code == 0 and out.startswith("N_2 of Z<x1,x2>/(x1^3, x2^7)")


def test_compute_fp_and_one_generator(capsys, tmp_path):
    out_file = tmp_path / "t.csv"
    code, _, _ = run(capsys, "compute", "--ring", "Fp:3", "--relations", "x1^3,x2^4", "--i", "3",
                     "--max-degree", "8", "--format", "csv", "--out", str(out_file))
    assert code == 0 and "3,2,3," in out_file.read_text()
    code, out, _ = run(capsys, "compute", "--gens", "1", "--i", "2", "--max-degree", "5")
    assert code == 0 and all(line.endswith(": 0") for line in out.splitlines()[1:])


def test_compute_latex_caption(capsys):
    code, out, _ = run(capsys, "compute", "--relations", "x1^3,x2^4", "--i", "3", "--max-degree", "5",
                       "--format", "latex")
    assert code == 0 and r"\caption{$N_{3}:\ \mathbb{Z} \langle x_1,x_2\rangle /(x_{1}^{3}, x_{2}^{4})$, Time:" in out


@pytest.mark.parametrize("argv", [
    ["compute", "--ring", "Q", "--relations", "x1^3", "--i", "2", "--max-degree", "3"],
    ["compute", "--ring", "Fp:6", "--relations", "x1^3", "--i", "2", "--max-degree", "3"],
    ["compute", "--relations", "x1^3 + x2", "--i", "2", "--max-degree", "3"],
    ["compute", "--relations", "x1^", "--i", "2", "--max-degree", "3"],
    ["compute", "--relations", "x3^2", "--i", "2", "--max-degree", "3"],
    ["compute", "--relations", "x1^2", "--max-degree", "3"],
    ["compute", "--relations", "x1^2", "--i", "2"],
    ["compute", "--gens", "3", "--i", "2", "--max-degree", "2", "--format", "latex"],
    ["verify", "--against", "n3", "--relations", "x1^2,x2^5"],
    ["verify", "--against", "n2", "--relations", "x1^2*x2,x2^5"],
    ["verify", "--against", "fp-conjecture", "--relations", "x1^3", "--i", "3", "--max-degree", "4"],
    ["check", "divisibility", "--ring", "Fp:3", "--relations", "x1^3,x2^4", "--i", "3", "--exps", "1,1"],
    ["check", "divisibility", "--ring", "Z", "--relations", "x1^3,x2^4", "--i", "3"],
    ["check", "divisibility", "--ring", "Fp:3", "--relations", "x1^3,x2^4", "--i", "3", "--max-degree", "5"],
    ["check", "hilbert", "--ring", "Fp:3", "--relations", "x1^3,x2^4", "--i", "3", "--variable", "3"],
    ["check", "weyl", "--p", "4", "--n", "1"],
    ["frobnicate"],
])
def test_bad_input_exits_2(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_help_exits_0(capsys):
    assert run(capsys, "--help")[0] == 0


def test_resource_guard_exits_3(capsys, caplog):
    with caplog.at_level(logging.WARNING):
        code, out, _ = run(capsys, "compute", "--relations", "x1^3,x2^4", "--i", "2", "--max-degree", "7",
                           "--max-dim", "20")
    assert code == 3 and "exceeded" in caplog.text


def test_verify_n2_passes(capsys):
    code, out, _ = run(capsys, "verify", "--against", "n2", "--relations", "x1^4,x2^6", "--max-degree", "10")
    assert code == 0 and "0 mismatch" in out


def test_verify_n3_flags_two_cells(capsys):
    code, out, _ = run(capsys, "verify", "--against", "n3", "--relations", "x1^3,x2^4", "--max-degree", "9")
    assert code == 1
    flagged = [line for line in out.splitlines() if "mismatch at" in line]
    assert len(flagged) == 2 and "(3, 4)" in flagged[0] and "(3, 5)" in flagged[1]


def test_verify_fp_conjecture(capsys):
    code, out, _ = run(capsys, "verify", "--against", "fp-conjecture", "--relations", "x1^3,x2^4",
                       "--i", "3", "--max-degree", "8", "--p", "3")
    assert code == 0


def test_check_commands(capsys):
    code, out, _ = run(capsys, "check", "divisibility", "--ring", "Fp:3", "--relations", "x1^3,x2^4", "--i", "3")
    assert code == 0 and "total=27" in out
    code, out, _ = run(capsys, "check", "hilbert", "--ring", "Fp:3", "--relations", "x1^3,x2^4", "--i", "3")
    assert code == 0 and "quotient=[0, 3, 6]" in out
    code, out, _ = run(capsys, "check", "hilbert", "--ring", "Fp:3", "--relations", "x1^3,x2^4", "--i", "3",
                       "--max-degree", "5")
    assert code == 0 and "mode=truncated" in out
    code, out, _ = run(capsys, "check", "weyl", "--p", "2", "--n", "2")
    assert code == 0 and "18/18" in out
