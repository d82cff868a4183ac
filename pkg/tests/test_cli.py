import json
import os

import pytest

from tkgqa.cli import build_parser, load_config, main


def run_cli(*argv) -> int:
    return main(list(argv))


@pytest.fixture
def workspace(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def gen_graph(workspace, seed=7, facts=120, name="g.jsonl"):
    assert run_cli(
        "gen-graph", "--seed", str(seed), "--entities", "50", "--relations", "8",
        "--facts", str(facts), "--out", str(workspace / name),
    ) == 0
    return workspace / name


def gen_dataset(workspace, graph, per_type=2, seed=3, name="d.jsonl"):
    assert run_cli(
        "gen-dataset", "--graph", str(graph), "--per-type", str(per_type),
        "--seed", str(seed), "--out", str(workspace / name),
    ) == 0
    return workspace / name


class TestGenGraph:
    def test_deterministic_bytes(self, workspace, capsys):
        a = gen_graph(workspace, name="a.jsonl")
        b = gen_graph(workspace, name="b.jsonl")
        assert a.read_bytes() == b.read_bytes()

    def test_summary_matches_line_count(self, workspace, capsys):
        path = gen_graph(workspace, facts=77)
        out = capsys.readouterr().out
        assert "facts=77" in out
        assert len(path.read_text().strip().splitlines()) == 77

    def test_missing_seed_usage_error(self, workspace):
        with pytest.raises(SystemExit) as err:
            run_cli("gen-graph", "--out", "g.jsonl")
        assert err.value.code == 2


class TestGenDataset:
    def test_counts(self, workspace, capsys):
        graph = gen_graph(workspace)
        dataset = gen_dataset(workspace, graph, per_type=2)
        assert len(dataset.read_text().strip().splitlines()) == 34
        assert "instances=34" in capsys.readouterr().out

    def test_type_subset_arithmetic(self, workspace):
        graph = gen_graph(workspace)
        assert run_cli(
            "gen-dataset", "--graph", str(graph), "--per-type", "5", "--seed", "3",
            "--types", "timeline,before_after", "--out", str(workspace / "sub.jsonl"),
        ) == 0
        lines = (workspace / "sub.jsonl").read_text().strip().splitlines()
        assert len(lines) == 10

    def test_deterministic_bytes(self, workspace):
        graph = gen_graph(workspace)
        a = gen_dataset(workspace, graph, name="a.jsonl")
        b = gen_dataset(workspace, graph, name="b.jsonl")
        assert a.read_bytes() == b.read_bytes()

    def test_corrupted_graph_nonzero(self, workspace, capsys):
        bad = workspace / "bad.jsonl"
        bad.write_text("not json\n")
        code = run_cli("gen-dataset", "--graph", str(bad), "--seed", "1", "--out", str(workspace / "d.jsonl"))
        assert code == 1
        assert "error" in capsys.readouterr().err


class TestVerify:
    def test_green_dataset(self, workspace, capsys):
        dataset = gen_dataset(workspace, gen_graph(workspace))
        assert run_cli("verify", "--dataset", str(dataset)) == 0
        assert "verified 34/34" in capsys.readouterr().out

    def test_corrupted_gold_detected(self, workspace, capsys):
        dataset = gen_dataset(workspace, gen_graph(workspace))
        lines = dataset.read_text().strip().splitlines()
        first = json.loads(lines[0])
        first["gold"] = {"type": "entity", "value": "E999"}
        first["answer_type"] = "entity"
        lines[0] = json.dumps(first, sort_keys=True)
        dataset.write_text("\n".join(lines) + "\n")
        assert run_cli("verify", "--dataset", str(dataset)) == 1
        assert "VERIFY FAIL" in capsys.readouterr().out


class TestEval:
    def test_oracle_mock_full_marks(self, workspace, capsys):
        dataset = gen_dataset(workspace, gen_graph(workspace))
        code = run_cli(
            "eval", "--dataset", str(dataset), "--technique", "cotapi",
            "--mock", "oracle", "--format", "csv",
        )
        assert code == 0
        assert "cotapi,100.0" in capsys.readouterr().out

    def test_two_technique_rows(self, workspace, capsys):
        dataset = gen_dataset(workspace, gen_graph(workspace))
        code = run_cli(
            "eval", "--dataset", str(dataset), "--technique", "direct,cotapi",
            "--mock", "oracle", "--format", "csv",
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "direct,100.0" in out and "cotapi,100.0" in out

    def test_transcripts_deterministic(self, workspace):
        dataset = gen_dataset(workspace, gen_graph(workspace))
        for name in ("t1.jsonl", "t2.jsonl"):
            assert run_cli(
                "eval", "--dataset", str(dataset), "--technique", "cotapi",
                "--mock", "oracle", "--transcripts", str(workspace / name),
                "--report", str(workspace / "r.txt"),
            ) == 0
        assert (workspace / "t1.jsonl").read_bytes() == (workspace / "t2.jsonl").read_bytes()

    def test_live_without_api_key_fails_before_requests(self, workspace, capsys, monkeypatch):
        monkeypatch.delenv("TKGQA_API_KEY", raising=False)
        dataset = gen_dataset(workspace, gen_graph(workspace))
        code = run_cli(
            "eval", "--dataset", str(dataset), "--technique", "direct",
            "--base-url", "http://localhost:1", "--model", "m",
        )
        assert code == 1
        assert "TKGQA_API_KEY" in capsys.readouterr().err

    def test_mock_and_endpoint_is_usage_error(self, workspace, capsys):
        dataset = gen_dataset(workspace, gen_graph(workspace))
        code = run_cli(
            "eval", "--dataset", str(dataset), "--technique", "direct",
            "--mock", "oracle", "--base-url", "http://x", "--model", "m",
        )
        assert code == 2

    def test_neither_mock_nor_endpoint_is_usage_error(self, workspace):
        dataset = gen_dataset(workspace, gen_graph(workspace))
        code = run_cli("eval", "--dataset", str(dataset), "--technique", "direct")
        assert code == 2

    def test_unknown_technique_usage_error(self, workspace):
        dataset = gen_dataset(workspace, gen_graph(workspace))
        code = run_cli("eval", "--dataset", str(dataset), "--technique", "bogus", "--mock", "oracle")
        assert code == 2

    def test_rows_persist_and_report_reaggregates(self, workspace, capsys):
        dataset = gen_dataset(workspace, gen_graph(workspace))
        rows = workspace / "rows.jsonl"
        assert run_cli(
            "eval", "--dataset", str(dataset), "--technique", "cotapi",
            "--mock", "oracle", "--rows", str(rows), "--report", str(workspace / "r.txt"),
        ) == 0
        assert run_cli("report", "--rows", str(rows), "--format", "csv") == 0
        assert "cotapi,100.0" in capsys.readouterr().out


class TestConfidence:
    def _write_tasks(self, workspace):
        tasks = workspace / "tasks.jsonl"
        rows = [
            {"question": "When did E1 hold R1 with E2?", "data": "facts", "actual": "temporal"},
            {"question": "What is the capital?", "data": "facts", "actual": "knowledge"},
        ]
        tasks.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
        return tasks

    def test_separable_mock(self, workspace, capsys):
        tasks = self._write_tasks(workspace)
        script = workspace / "mock.json"
        script.write_text(json.dumps({"When did": '```json\n{"score": 0.96}\n```', "": '```json\n{"score": 0.05}\n```'}))
        assert run_cli("confidence", "--input", str(tasks), "--mock", str(script)) == 0
        assert "Accuracy: 100.0%" in capsys.readouterr().out

    def test_default_threshold_honored(self, workspace, capsys):
        tasks = self._write_tasks(workspace)
        script = workspace / "mock.json"
        # exactly 0.8 must classify as temporal under the default threshold
        script.write_text(json.dumps({"When did": '```json\n{"score": 0.8}\n```', "": '```json\n{"score": 0.0}\n```'}))
        assert run_cli("confidence", "--input", str(tasks), "--mock", str(script)) == 0
        assert "Accuracy: 100.0%" in capsys.readouterr().out

    def test_missing_actual_label(self, workspace, capsys):
        tasks = workspace / "tasks.jsonl"
        tasks.write_text(json.dumps({"question": "x"}) + "\n")
        assert run_cli("confidence", "--input", str(tasks), "--mock", "oracle") == 1
        assert "actual" in capsys.readouterr().err


class TestHelpDocSync:
    EXPECTED = {
        "gen-graph": ["--seed", "--entities", "--relations", "--facts", "--time-start", "--time-end", "--max-episodes", "--out"],
        "gen-dataset": ["--graph", "--per-type", "--types", "--seed", "--out"],
        "verify": ["--dataset"],
        "eval": ["--dataset", "--technique", "--mock", "--base-url", "--model", "--temperature", "--seed", "--parallelism", "--rows", "--transcripts", "--report", "--format", "--bin-width", "--config"],
        "confidence": ["--input", "--mock", "--base-url", "--model", "--threshold", "--parallelism", "--format", "--config"],
        "report": ["--rows", "--format", "--bin-width"],
    }

    @pytest.mark.parametrize("command", sorted(EXPECTED))
    def test_flags_documented(self, command, capsys):
        with pytest.raises(SystemExit) as err:
            build_parser().parse_args([command, "--help"])
        assert err.value.code == 0
        text = capsys.readouterr().out
        for flag in self.EXPECTED[command]:
            assert flag in text, (command, flag)

    def test_all_subcommands_listed(self, capsys):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["--help"])
        text = capsys.readouterr().out
        for command in self.EXPECTED:
            assert command in text


class TestConfig:
    def test_parse_and_precedence(self, tmp_path):
        path = tmp_path / "conf.txt"
        path.write_text("model = gpt-test  # comment\nparallelism = 2\n\n# full comment line\n")
        config = load_config(path)
        assert config["model"] == "gpt-test"
        assert config["parallelism"] == "2"
        assert config["threshold"] == "0.8"  # default survives

    def test_bad_line_rejected(self, tmp_path):
        path = tmp_path / "conf.txt"
        path.write_text("just a line\n")
        from tkgqa.errors import TkgqaError

        with pytest.raises(TkgqaError):
            load_config(path)
