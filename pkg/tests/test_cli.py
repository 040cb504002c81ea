"""End-to-end command-line coverage, in-process via main().

The serve subcommand is exercised as a real subprocess at heavy time
compression so the whole day fits in a few seconds of wall clock.
"""

import hashlib
import json
import os
import socket
import subprocess
import sys

import pytest

from pmt import analytics
from pmt.cli import CliError, _parse_sweep, main


@pytest.fixture(scope="module")
def finished_run(tmp_path_factory):
    """One perfect scored session reused by the replay tests."""
    out = tmp_path_factory.mktemp("run")
    code = main(["run", "--session", "5", "--seed", "3", "--out", str(out)])
    assert code == 0
    return out / "session5_seed3.pmtlog"


def rewrite_log(src, dst, mutate):
    """Apply mutate(entry_lines) and re-stamp the checksum line."""
    lines = src.read_text().splitlines()
    header, body, _ = lines[0], lines[1:-1], lines[-1]
    body = mutate(body)
    digest = hashlib.sha256()
    for line in body:
        digest.update((line + "\n").encode("utf-8"))
    checksum = json.dumps(
        {"checksum": f"sha256:{digest.hexdigest()}"}, separators=(",", ":")
    )
    dst.write_text("\n".join([header, *body, checksum]) + "\n")


class TestValidate:
    def test_packaged_content_is_consistent(self, capsys):
        assert main(["validate"]) == 0
        out = capsys.readouterr().out
        assert "world: 11 locations, 2 npcs" in out
        assert "catalog: 5 regular + 13 irregular tasks" in out
        assert out.rstrip().endswith("ok")

    def test_content_dir_env_is_picked_up(self, tmp_path, monkeypatch, capsys):
        import pmt

        packaged_path = os.path.join(
            pmt.__path__[0], "content", "default.world.json"
        )
        with open(packaged_path, encoding="utf-8") as fh:
            packaged = json.load(fh)
        packaged["areas"][0]["locations"].append(
            {"id": "attic", "label": "Attic", "objects": []}
        )
        packaged["edges"].append(["bedroom", "attic", 1])
        (tmp_path / "default.world.json").write_text(json.dumps(packaged))
        monkeypatch.setenv("PMT_CONTENT_DIR", str(tmp_path))
        assert main(["validate"]) == 0
        assert "12 locations" in capsys.readouterr().out

    def test_broken_world_file_fails(self, tmp_path, capsys):
        bad = tmp_path / "w.json"
        bad.write_text('{"areas": []}')
        assert main(["validate", "--world", str(bad)]) == 2
        assert "error:" in capsys.readouterr().err


class TestRun:
    def test_writes_log_and_record(self, finished_run, capsys):
        record_path = finished_run.with_suffix(".record.json")
        assert finished_run.exists() and record_path.exists()
        record = json.loads(record_path.read_text())
        assert record["session_number"] == 5
        assert record["rates"]["total"] == 1.0

    def test_prints_rate_table(self, tmp_path, capsys):
        assert (
            main(
                ["run", "--session", "6", "--seed", "1", "--out", str(tmp_path)]
            )
            == 0
        )
        out = capsys.readouterr().out
        assert "session 6" in out
        assert "total" in out and "rate 1.000" in out

    def test_session_and_seed_required(self, capsys):
        assert main(["run"]) == 2
        assert "needs --session and --seed" in capsys.readouterr().err

    def test_unknown_agent_rejected(self, tmp_path, capsys):
        code = main(
            [
                "run",
                "--session",
                "5",
                "--seed",
                "1",
                "--agent",
                "procrastinator",
                "--out",
                str(tmp_path),
            ]
        )
        assert code == 2
        assert "procrastinator" in capsys.readouterr().err


class TestReplay:
    def test_clean_log_matches(self, finished_run, capsys):
        assert main(["run", "--replay", str(finished_run)]) == 0
        assert "matches the recorded session" in capsys.readouterr().out

    def test_tampered_record_diverges(self, finished_run, tmp_path, capsys):
        def bend_rates(body):
            out = []
            for line in body:
                if '"session_end"' in line:
                    doc = json.loads(line)
                    doc["payload"]["record"]["rates"]["total"] = 0.123
                    line = json.dumps(doc, sort_keys=True, separators=(",", ":"))
                out.append(line)
            return out

        bent = tmp_path / "bent.pmtlog"
        rewrite_log(finished_run, bent, bend_rates)
        assert main(["run", "--replay", str(bent)]) == 2
        out = capsys.readouterr().out
        assert "DIVERGES" in out
        assert "rates" in out

    def test_log_without_ending_is_refused(self, finished_run, tmp_path, capsys):
        bent = tmp_path / "cut.pmtlog"
        rewrite_log(finished_run, bent, lambda body: body[:-1])
        assert main(["run", "--replay", str(bent)]) == 2
        assert "no session_end" in capsys.readouterr().err

    def test_corrupted_checksum_is_refused(self, finished_run, tmp_path, capsys):
        lines = finished_run.read_text().splitlines()
        lines[-1] = '{"checksum":"sha256:' + "0" * 64 + '"}'
        bad = tmp_path / "bad.pmtlog"
        bad.write_text("\n".join(lines) + "\n")
        assert main(["run", "--replay", str(bad)]) == 2
        assert "checksum mismatch" in capsys.readouterr().err


class TestSweepParsing:
    def test_range_and_step(self):
        name, param, values, fixed = _parse_sweep(
            "retention:p=0.5..1.0:step0.25"
        )
        assert (name, param, fixed) == ("retention", "p", [])
        assert values == [0.5, 0.75, 1.0]

    def test_fixed_segments_pass_through(self):
        name, param, values, fixed = _parse_sweep(
            "retention:p=0.2..0.4:step0.2:bonus_enabled=off"
        )
        assert fixed == ["bonus_enabled=off"]
        assert values == [0.2, 0.4]

    def test_integer_steps(self):
        _, param, values, _ = _parse_sweep("clock_checker:period=15..60:step15")
        assert values == [15.0, 30.0, 45.0, 60.0]

    @pytest.mark.parametrize(
        "spec",
        [
            "retention",
            "retention:p=0.5..1.0",
            "retention:step0.1",
            "retention:p=0.5..1.0:step0",
            "retention:p=0.1..0.2:q=0.3..0.4:step0.1",
        ],
    )
    def test_malformed_specs(self, spec):
        with pytest.raises(CliError):
            _parse_sweep(spec)

    def test_malformed_spec_exits_2(self, capsys):
        assert main(["run", "--sweep", "retention:p=0.5..1.0"]) == 2
        assert "sweep spec" in capsys.readouterr().err


class TestSweepRun:
    def test_small_sweep_table(self, tmp_path, capsys):
        table = tmp_path / "sweep.json"
        code = main(
            [
                "run",
                "--sweep",
                "retention:p=0.6..1.0:step0.4",
                "--seeds",
                "2",
                "--out-json",
                str(table),
            ]
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "retention sweep over p" in out
        doc = json.loads(table.read_text())
        assert [row["value"] for row in doc["rows"]] == [0.6, 1.0]
        # retention with p=1 never drops a task
        assert doc["rows"][-1]["rates"]["total"] == 1.0
        assert doc["rows"][0]["rates"]["total"] <= 1.0


class TestAnalyze:
    def test_check_fixtures_ok(self, capsys):
        assert main(["analyze", "--check-fixtures"]) == 0
        out = capsys.readouterr().out
        for name in ("table4", "table5", "table7"):
            assert f"{name}:" in out
        assert "MISMATCH" not in out

    def test_check_fixtures_mismatch_exits_3(self, monkeypatch, capsys):
        def doctored():
            return {
                "ok": False,
                "checks": {
                    "table4": {
                        "rows": 10,
                        "problems": ["row 3: r recomputes to 0.5"],
                    }
                },
            }

        monkeypatch.setattr(analytics, "check_fixtures", doctored)
        assert main(["analyze", "--check-fixtures"]) == 3
        out = capsys.readouterr().out
        assert "table4: 10 rows MISMATCH" in out
        assert "row 3" in out

    def test_logs_required(self, capsys):
        assert main(["analyze"]) == 2
        assert "needs --logs" in capsys.readouterr().err

    def test_empty_directory_exits_2(self, tmp_path, capsys):
        assert main(["analyze", "--logs", str(tmp_path)]) == 2
        assert "no .pmtlog files" in capsys.readouterr().err

    def test_report_from_logs(self, tmp_path, capsys):
        logs = tmp_path / "logs"
        logs.mkdir()
        for pid, seed in (("A", 1), ("B", 2)):
            main(
                [
                    "run",
                    "--session",
                    "5",
                    "--seed",
                    str(seed),
                    "--log",
                    str(logs / f"{pid}_s5.pmtlog"),
                ]
            )
        capsys.readouterr()
        report_path = tmp_path / "report.json"
        code = main(
            ["analyze", "--logs", str(logs), "--out", str(report_path)]
        )
        assert code == 0
        assert "report written" in capsys.readouterr().out
        report = json.loads(report_path.read_text())
        assert set(report["achievement"]) == {"A", "B"}
        for pid in ("A", "B"):
            entry = report["achievement"][pid]
            assert entry["sessions"]["5"]["total"]["rate"] == 1.0
            assert 5 not in entry["missing_sessions"]


class TestServeSubprocess:
    def test_one_session_over_a_socket(self, tmp_path):
        proc = subprocess.Popen(
            [
                sys.executable,
                "-m",
                "pmt.cli",
                "serve",
                "--session",
                "4",
                "--seed",
                "2",
                "--port",
                "0",
                "--factor",
                "9600",
                "--out",
                str(tmp_path),
            ],
            stdout=subprocess.PIPE,
            text=True,
        )
        try:
            banner = proc.stdout.readline()
            assert "session 4 on http://127.0.0.1:" in banner
            port = int(banner.split(":")[2].split("/")[0])
            sock = socket.create_connection(("127.0.0.1", port), timeout=10)
            writer = sock.makefile("w", encoding="utf-8")
            reader = sock.makefile("r", encoding="utf-8")
            for seq, kind in ((1, "join"), (2, "ack_briefing")):
                writer.write(
                    json.dumps({"kind": kind, "seq": seq, "payload": {}}) + "\n"
                )
                writer.flush()
            ended = False
            for line in reader:
                if json.loads(line)["kind"] == "session_end":
                    ended = True
                    break
            assert ended
            sock.close()
            assert proc.wait(timeout=30) == 0
        finally:
            if proc.poll() is None:
                proc.kill()
                proc.wait()
        log = tmp_path / "session4.pmtlog"
        record = tmp_path / "session4.record.json"
        assert log.exists() and record.exists()
        assert json.loads(record.read_text())["session_number"] == 4
