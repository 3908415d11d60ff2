import json

import pytest

from conftest import PROGRAMS, program
from mvr.cli import main

NEGATIVE = sorted((PROGRAMS / "negative").iterdir())


def cli(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def expected_rule(path):
    first = path.read_text().splitlines()[0]
    return first.split("expect-rule:")[1].strip()


class TestCheck:
    def test_ok_calculus(self, capsys):
        code, out, _ = cli(capsys, "check", program("calculus/add.mvc"))
        assert code == 0 and ": ok; exec-linear int;" in out

    def test_alias_program(self, capsys, tmp_path):
        report = tmp_path / "r.json"
        code, out, _ = cli(capsys, "check", program("surface/sec8_alias.mvr"), "--json", report)
        assert code == 1 and "cannot borrow `acct1` as mutable more than once" in out
        data = json.loads(report.read_text())
        assert data["command"] == "check"
        assert data["files"][0]["diagnostics"][0]["rule"] == "Sec8.alias"

    def test_missing_file(self, capsys):
        code, _, err = cli(capsys, "check", "/nonexistent/x.mvc")
        assert code == 2 and "mvr:" in err

    def test_unknown_extension(self, capsys, tmp_path):
        f = tmp_path / "x.txt"
        f.write_text("(expr 1)")
        assert cli(capsys, "check", f)[0] == 2
        assert cli(capsys, "check", f, "--dialect", "calculus")[0] == 0

    def test_bad_flag_is_usage_error(self):
        with pytest.raises(SystemExit) as info:
            main(["check"])
        assert info.value.code == 2


@pytest.mark.parametrize("path", NEGATIVE, ids=lambda p: p.name)
def test_negative_corpus(capsys, path):
    code, out, _ = cli(capsys, "check", path)
    assert code == 1
    assert f"[{expected_rule(path)}]" in out or expected_rule(path) in out


def test_negative_corpus_size():
    assert len(NEGATIVE) >= 12


class TestRun:
    def test_calculus_value(self, capsys):
        code, out, _ = cli(capsys, "run", program("calculus/add.mvc"))
        assert (code, out) == (0, "3\n")

    def test_trace(self, capsys):
        code, out, _ = cli(capsys, "run", program("calculus/add.mvc"), "--trace")
        assert code == 0 and out.splitlines() == ["0 add (+ 1 2)", "3"]

    def test_budget(self, capsys):
        code, out, _ = cli(capsys, "run", program("calculus/self_application.mvc"), "--budget", "200")
        assert code == 1 and "budget exhausted" in out

    def test_fibo_impl(self, capsys):
        code, out, _ = cli(capsys, "run", program("surface/fig1_fibo.mvr"), "--entry", "fibo_impl", "10")
        assert (code, out) == (0, "55\n")

    def test_bad_input(self, capsys):
        code, _, err = cli(capsys, "run", program("surface/fig1_fibo.mvr"), "--entry", "fibo_impl", "x")
        assert code == 2


class TestVerify:
    def test_fig4(self, capsys, tmp_path):
        report = tmp_path / "v.json"
        code, out, _ = cli(capsys, "verify", program("surface/fig4_swap_odd.mvr"), "--no-solver", "--json", report)
        assert code == 0 and out.splitlines()[-1] == "4/4 obligations valid"
        data = json.loads(report.read_text())
        assert data["ok"] and [f["name"] for f in data["functions"]] == ["swap_odd", "main"]
        ob = data["functions"][1]["obligations"][0]
        assert set(ob) >= {"name", "kind", "span", "status", "decided_by", "oracle"}

    def test_sec8_precondition(self, capsys):
        code, out, _ = cli(capsys, "verify", program("surface/sec8_transfer_20000.mvr"), "--no-solver")
        assert code == 1
        line = next(l for l in out.splitlines() if l.startswith("main.req.0"))
        assert "precondition not satisfied" in line and "14:5" in line

    def test_unknown_function(self, capsys):
        assert cli(capsys, "verify", program("surface/fig4_swap_odd.mvr"), "--function", "nope")[0] == 2


class TestVcAndErase:
    def test_vc_files(self, capsys, tmp_path):
        code, out, _ = cli(capsys, "vc", program("surface/fig4_swap_odd.mvr"), "--out", tmp_path)
        assert code == 0
        names = sorted(p.name for p in tmp_path.iterdir())
        assert names == ["main.assert.0.smt2", "main.req.0.smt2", "swap_odd.overflow.0.smt2", "swap_odd.post.0.smt2"]
        assert "(push)" in (tmp_path / "main.req.0.smt2").read_text()

    def test_erase(self, capsys, tmp_path):
        out_file = tmp_path / "e.mvr"
        code, _, _ = cli(capsys, "erase", program("surface/fig1_fibo.mvr"), "--out", out_file)
        text = out_file.read_text()
        assert code == 0 and "invariant" not in text and "fn fibo_impl" in text


class TestMeta:
    def test_size_zero(self, capsys, tmp_path):
        report = tmp_path / "m.json"
        code, out, _ = cli(capsys, "meta", "--size", "0", "--json", report)
        assert code == 0
        data = json.loads(report.read_text())
        assert data["sweep"]["cases"] == 0

    def test_size_four_reports_counterexample(self, capsys):
        code, out, _ = cli(capsys, "meta", "--size", "4")
        assert code == 1 and "preservation trace:" in out


class TestDeterminism:
    def test_vc_byte_identical(self, capsys, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        cli(capsys, "vc", program("surface/fig1_fibo.mvr"), "--out", a)
        cli(capsys, "vc", program("surface/fig1_fibo.mvr"), "--out", b)
        files = sorted(p.name for p in a.iterdir())
        assert files == sorted(p.name for p in b.iterdir())
        assert all((a / f).read_bytes() == (b / f).read_bytes() for f in files)

    def test_check_byte_identical(self, capsys, tmp_path):
        paths = [program("calculus/snapshot.mvc"), program("surface/sec8_alias.mvr"), program("surface/fig1_fibo.mvr")]
        runs = []
        for i in range(2):
            report = tmp_path / f"c{i}.json"
            _, out, _ = cli(capsys, "check", *paths, "--json", report)
            runs.append((out, report.read_bytes()))
        assert runs[0] == runs[1]
