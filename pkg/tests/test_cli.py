"""Command-line harness: exit codes, bulk import, simulation, and serving."""

from __future__ import annotations

import json
import signal
import socket
import subprocess
import sys
import threading
import time

import httpx
import pytest
import uvicorn

from revbib.api import create_app
from revbib.cli import main

from conftest import TEST_PASSWORD, draft


def free_port() -> int:
    sock = socket.socket()
    sock.bind(("127.0.0.1", 0))
    port = sock.getsockname()[1]
    sock.close()
    return port


@pytest.fixture
def live_server(services):
    service = services(1, bootstrap_roles={"assoc": "associate_user"})
    port = free_port()
    config = uvicorn.Config(
        create_app(service), host="127.0.0.1", port=port, log_level="error"
    )
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 10
    while not server.started:
        if time.time() > deadline:
            raise RuntimeError("server did not start")
        time.sleep(0.01)
    yield f"http://127.0.0.1:{port}"
    server.should_exit = True
    thread.join(timeout=5)


def cli(*argv) -> int:
    return main(list(argv))


def register_and_token(url, username, capsys) -> str:
    assert cli(
        "register",
        "--url", url,
        "--username", username,
        "--password", TEST_PASSWORD,
        "--email", f"{username}@example.org",
    ) == 0
    assert cli(
        "login", "--url", url, "--username", username, "--password", TEST_PASSWORD
    ) == 0
    token = capsys.readouterr().out.strip().splitlines()[-1]
    assert len(token) > 20
    return token


class TestAccountCommands:
    def test_register_login_submit_rate_flow(self, live_server, capsys):
        token = register_and_token(live_server, "alice", capsys)
        code = cli(
            "submit",
            "--url", live_server,
            "--token", token,
            "--area", "computing",
            "--title", "Wireless Sensor Networks: A Survey",
            "--authors", "A. Author; B. Writer",
            "--year", "2012",
            "--field", "networks",
            "--subfield", "network-types",
            "--json",
        )
        assert code == 0
        record = json.loads(capsys.readouterr().out)["record"]
        assert record["status"] == "approved"
        code = cli(
            "rate",
            "--url", live_server,
            "--token", token,
            "--record", record["record_id"],
            "--quality", "high",
            "--familiarity", "expert",
        )
        assert code == 0
        assert "100.00" in capsys.readouterr().out
        assert cli("capabilities", "--url", live_server) == 0
        assert "U6: no" in capsys.readouterr().out

    def test_operation_failure_exits_1(self, live_server, capsys):
        code = cli(
            "login", "--url", live_server, "--username", "ghost", "--password", "nope"
        )
        assert code == 1
        assert "unauthorized" in capsys.readouterr().err

    def test_usage_error_exits_2(self):
        with pytest.raises(SystemExit) as excinfo:
            cli("submit", "--definitely-not-a-flag")
        assert excinfo.value.code == 2

    def test_taxonomy_roundtrip(self, live_server, capsys):
        token = register_and_token(live_server, "assoc", capsys)
        assert cli(
            "taxonomy", "add-subfield",
            "--url", live_server, "--token", token,
            "--area", "computing", "--field", "networks", "--name", "Ad-hoc Networks",
        ) == 0
        capsys.readouterr()
        assert cli(
            "taxonomy", "show", "--url", live_server, "--token", token, "--area", "computing"
        ) == 0
        assert "ad-hoc-networks" in capsys.readouterr().out


class TestImport:
    def write_lines(self, tmp_path, lines):
        path = tmp_path / "batch.jsonl"
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path

    def test_ten_valid_lines_all_approved(self, live_server, tmp_path, capsys):
        token = register_and_token(live_server, "importer", capsys)
        path = self.write_lines(
            tmp_path, [json.dumps(draft(i)) for i in range(10)]
        )
        code = cli(
            "import", str(path),
            "--url", live_server, "--token", token, "--area", "computing", "--json",
        )
        assert code == 0
        report = json.loads(capsys.readouterr().out)
        assert report["imported"] == 10
        assert report["failed"] == 0
        assert all(entry["status"] == "approved" for entry in report["lines"])

    def test_bad_line_reported_with_number_and_continues(
        self, live_server, tmp_path, capsys
    ):
        token = register_and_token(live_server, "importer2", capsys)
        lines = [json.dumps(draft(i + 20)) for i in range(10)]
        lines[4] = json.dumps({**draft(99), "title": ""})  # invalid: empty title
        path = self.write_lines(tmp_path, lines)
        code = cli(
            "import", str(path),
            "--url", live_server, "--token", token, "--area", "computing", "--json",
        )
        assert code == 0
        report = json.loads(capsys.readouterr().out)
        assert report["imported"] == 9
        assert report["failed"] == 1
        bad = [entry for entry in report["lines"] if not entry["ok"]]
        assert bad[0]["line"] == 5

    def test_empty_file_zero_submissions(self, live_server, tmp_path, capsys):
        token = register_and_token(live_server, "importer3", capsys)
        path = tmp_path / "empty.jsonl"
        path.write_text("", encoding="utf-8")
        code = cli(
            "import", str(path),
            "--url", live_server, "--token", token, "--area", "computing", "--json",
        )
        assert code == 0
        report = json.loads(capsys.readouterr().out)
        assert report["imported"] == 0

    def test_unreadable_file_exits_2(self, live_server, capsys):
        code = cli(
            "import", "/nonexistent/batch.jsonl",
            "--url", live_server, "--token", "whatever", "--area", "computing",
        )
        assert code == 2


class TestSimulateLoadCommand:
    def test_scenario_1_zero_load(self, capsys):
        code = cli(
            "simulate-load", "--scenario", "1",
            "--records", "6", "--users", "4", "--threshold", "3", "--seed", "7", "--json",
        )
        assert code == 0
        report = json.loads(capsys.readouterr().out)[0]
        assert report["moderator_decision_actions"] == 0
        assert report["user_evaluation_actions"] == 0
        assert report["complete"] is True

    def test_determinism(self, capsys):
        argv = [
            "simulate-load", "--scenario", "2",
            "--records", "6", "--users", "6", "--threshold", "3", "--seed", "11", "--json",
        ]
        assert cli(*argv) == 0
        first = capsys.readouterr().out
        assert cli(*argv) == 0
        second = capsys.readouterr().out
        assert first == second

    def test_out_dir_writes_csv_and_figure(self, tmp_path, capsys):
        code = cli(
            "simulate-load", "--scenario", "3",
            "--records", "5", "--users", "4", "--threshold", "3", "--seed", "3",
            "--out-dir", str(tmp_path / "reports"),
        )
        assert code == 0
        csv_path = tmp_path / "reports" / "load_report.csv"
        png_path = tmp_path / "reports" / "load_report.png"
        assert csv_path.exists() and png_path.exists()
        text = csv_path.read_text()
        assert text.startswith("#")
        assert "low" in text or "medium" in text or "high" in text
        assert png_path.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"

    def test_invalid_scenario_exits_2(self):
        with pytest.raises(SystemExit) as excinfo:
            cli("simulate-load", "--scenario", "9")
        assert excinfo.value.code == 2


class TestServeCommand:
    def test_malformed_config_exits_2(self, tmp_path):
        config = tmp_path / "bad.json"
        config.write_text("{not json", encoding="utf-8")
        assert cli("serve", "--config", str(config)) == 2

    def test_missing_config_exits_2(self, tmp_path):
        assert cli("serve", "--config", str(tmp_path / "missing.json")) == 2

    def test_serve_subprocess_end_to_end(self, tmp_path):
        port = free_port()
        config_path = tmp_path / "config.json"
        config_path.write_text(
            json.dumps(
                {
                    "scenario": 4,
                    "consensus_threshold": 10,
                    "data_dir": str(tmp_path / "data"),
                    "bind": f"127.0.0.1:{port}",
                    "pbkdf2_iterations": 600,
                }
            ),
            encoding="utf-8",
        )
        assert not (tmp_path / "data").exists()
        proc = subprocess.Popen(
            [sys.executable, "-m", "revbib.cli", "serve", "--config", str(config_path)],
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
        )
        try:
            body = None
            deadline = time.time() + 20
            while time.time() < deadline:
                try:
                    body = httpx.get(
                        f"http://127.0.0.1:{port}/api/v1/capabilities", timeout=1
                    ).json()
                    break
                except httpx.HTTPError:
                    if proc.poll() is not None:
                        raise RuntimeError(proc.stderr.read().decode())
                    time.sleep(0.1)
            assert body is not None, "service never came up"
            assert body["scenario"] == 4
            assert (tmp_path / "data").is_dir()  # created on first boot
            proc.send_signal(signal.SIGINT)
            assert proc.wait(timeout=15) == 0  # clean shutdown
        finally:
            if proc.poll() is None:
                proc.kill()


class TestEnvOverrides:
    def test_bind_and_data_dir_env_vars(self, tmp_path, monkeypatch):
        from revbib.cli import _load_config

        config_path = tmp_path / "config.json"
        config_path.write_text(
            json.dumps({"scenario": 1, "data_dir": str(tmp_path / "a"), "bind": "0.0.0.0:9"}),
            encoding="utf-8",
        )
        monkeypatch.setenv("REVBIB_BIND", "127.0.0.1:7171")
        monkeypatch.setenv("REVBIB_DATA_DIR", str(tmp_path / "b"))

        class Args:
            config = str(config_path)

        config = _load_config(Args())
        assert (config.bind_host, config.bind_port) == ("127.0.0.1", 7171)
        assert config.data_dir == tmp_path / "b"


class TestExportCommand:
    def test_export_writes_jsonl(self, tmp_path, capsys):
        config_path = tmp_path / "config.json"
        config_path.write_text(
            json.dumps(
                {"scenario": 1, "data_dir": str(tmp_path / "data"), "pbkdf2_iterations": 600}
            ),
            encoding="utf-8",
        )
        # boot once so the seeded area exists
        from revbib.service import BibService, ServiceConfig

        service = BibService(ServiceConfig.from_file(config_path))
        service.close()
        code = cli(
            "export", "--config", str(config_path), "--area", "computing",
            "--out", str(tmp_path / "backup"),
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "review_articles.jsonl" in out
        assert (tmp_path / "backup" / "classification_fields.jsonl").exists()
