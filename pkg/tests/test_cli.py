import csv
import io
import json

import jsonschema
import pytest

from alphatree.cli import argv_from_config, main, read_config
from alphatree.schemas import DIMS_SIDECAR, RECORDS, VALIDATION_REPORT


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    lines = [l for l in text.splitlines() if not l.startswith("#")]
    return list(csv.reader(io.StringIO("\n".join(lines))))


def test_exact_example(capsys):
    code, out, _ = run(["exact", "--n", "4", "--alpha", "0.5"], capsys)
    assert code == 0
    table = rows(out)
    assert table[0] == ["tree", "exact_pi", "oracle_pi"]
    assert len(table) == 6
    for r in table[1:]:
        assert float(r[1]) == pytest.approx(0.2, abs=1e-12)
        assert float(r[2]) == pytest.approx(0.2, abs=1e-12)


def test_ball_limit_example(capsys):
    code, out, _ = run(["ball-limit", "--shape", "(oo)", "--radius", "2", "--alpha", "0.5"], capsys)
    assert code == 0
    (r,) = rows(out)[1:]
    lower, upper = float(r[4]), float(r[5])
    assert lower <= 1.0 <= upper


def test_ball_finite(capsys):
    code, out, _ = run(["ball-finite", "--shape", "((oo)o)", "--radius", "3", "--n", "3",
                        "--alpha", "0.5"], capsys)
    assert code == 0 and float(rows(out)[1][-1]) == pytest.approx(0.5)


def test_usage_errors_exit_1(capsys):
    assert run(["grow", "--n", "3", "--alpha", "0.5", "--bogus"], capsys)[0] == 1
    assert run(["nonsense"], capsys)[0] == 1
    assert run(["grow", "--n", "3", "--alpha", "1.5"], capsys)[0] == 1
    assert run(["grow", "--n", "3", "--alpha", "abc"], capsys)[0] == 1
    code, _, err = run(["dims", "hausdorff", "--alpha", "0.5", "--window", "9"], capsys)
    assert code == 1 and "usage" in err


def test_parse_error_offset(capsys):
    code, _, err = run(["ball-limit", "--shape", "(oo", "--alpha", "0.5"], capsys)
    assert code == 1 and "offset 3" in err


def test_limit_commands_reject_alpha_zero(capsys):
    for argv in (["ball-limit", "--shape", "(oo)"], ["sample-env"], ["dims", "spectral"]):
        code, _, err = run(argv + ["--alpha", "0"], capsys)
        assert code == 1 and "0 < alpha" in err
    assert run(["grow", "--n", "5", "--alpha", "0"], capsys)[0] == 0


def test_validate_quick(capsys):
    code, out, _ = run(["validate", "--quick", "--format", "json"], capsys)
    assert code == 0
    doc = json.loads(out)
    jsonschema.validate(doc, VALIDATION_REPORT)
    assert doc["passed"]


def test_validate_failure_exit_2(capsys, monkeypatch):
    import alphatree.cli as cli
    from alphatree.validate import tampered_q_alpha, validate

    monkeypatch.setattr(cli, "validate", lambda level, a, s: validate(level, a, s, q=tampered_q_alpha))
    assert run(["validate", "--quick"], capsys)[0] == 2


def test_config_header_and_round_trip(tmp_path, capsys):
    argv = ["grow", "--n", "500", "--alpha", "0.35", "--seed", "17", "--samples", "3",
            "--radius", "5", "--out", str(tmp_path / "a.csv")]
    assert main(argv) == 0
    first = (tmp_path / "a.csv").read_text()
    cfg = read_config(first)
    assert cfg["alpha"] == 0.35 and cfg["seed"] == 17 and cfg["rng_version"] == 1
    again = argv_from_config(cfg) + ["--out", str(tmp_path / "b.csv")]
    assert main(again) == 0
    assert (tmp_path / "b.csv").read_text() == first


@pytest.mark.parametrize("argv", [
    ["sample-env", "--alpha", "0.5", "--radius", "5", "--samples", "4", "--seed", "3"],
    ["dims", "finite-scaling", "--alpha", "0.5", "--sizes", "64,128,256,512,1024,2048",
     "--samples", "3", "--window", "64,2048"],
    ["dims", "spectral", "--alpha", "0.5", "--tmax", "64", "--samples", "3", "--format", "json"],
    ["exact", "--n", "5", "--alpha", "0.25", "--format", "json"],
])
def test_round_trip_other_commands(argv, tmp_path):
    assert main(argv + ["--out", str(tmp_path / "a")]) == 0
    first = (tmp_path / "a").read_text()
    assert main(argv_from_config(read_config(first)) + ["--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "b").read_text() == first


def test_grow_schema_and_seeds(capsys):
    _, a, _ = run(["grow", "--n", "300", "--alpha", "0.5", "--seed", "1"], capsys)
    _, b, _ = run(["grow", "--n", "300", "--alpha", "0.5", "--seed", "2"], capsys)
    ta, tb = rows(a), rows(b)
    assert ta[0] == tb[0] == ["sample", "n", "alpha", "seed", "height", "mean_leaf_depth"] + [
        f"V_{r}" for r in range(1, 9)]
    assert ta[1][4:] != tb[1][4:]
    _, c, _ = run(["grow", "--n", "6", "--alpha", "0.5", "--emit", "code"], capsys)
    assert rows(c)[1][-1].count("o") == 6


def test_dims_sidecar(tmp_path):
    out = tmp_path / "h.csv"
    assert main(["dims", "hausdorff", "--alpha", "1", "--radius", "32", "--samples", "3",
                 "--out", str(out)]) == 0
    table = rows(out.read_text())
    assert table[0] == ["x", "y", "stderr"]
    assert [float(r[1]) for r in table[1:]] == [2 * r - 1 for r in range(1, 33)]
    side = json.loads((tmp_path / "h.csv.json").read_text())
    jsonschema.validate(side, DIMS_SIDECAR)
    assert side["fit"]["window"] == [16.0, 32.0]
    assert abs(side["fit"]["dimension"] - 1) < 0.05


def test_json_outputs_match_schema(capsys):
    _, out, _ = run(["ball-limit", "--shape", "((oo)o)", "--alpha", "0.5", "--format", "json"], capsys)
    jsonschema.validate(json.loads(out), RECORDS)
    _, out, _ = run(["dims", "spectral", "--alpha", "1", "--tmax", "128", "--samples", "2",
                     "--format", "json"], capsys)
    doc = json.loads(out)
    jsonschema.validate(doc, RECORDS)
    jsonschema.validate(doc, DIMS_SIDECAR)
