import json
import os
import re
import socket
import subprocess
import time
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[2]
DATA = ROOT / "data"
BIN = os.environ.get("COTOUR_BIN", str(ROOT / "build" / "tools" / "cotour"))
SERVING = re.compile(r"serving on [\d.]+:(\d+) \(tcp\)(?:, (\d+) \(ws\))?")


def run(*args, env=None, timeout=60):
    return subprocess.run([BIN, *map(str, args)], capture_output=True, text=True, env=env, timeout=timeout)


def free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


class Server:
    """A `cotour serve` child process; ports are read from its startup line."""

    def __init__(self, *args, env=None):
        self.proc = subprocess.Popen(
            [BIN, "serve", *map(str, args)],
            stdout=subprocess.PIPE,
            stderr=subprocess.STDOUT,
            text=True,
            env=env,
        )
        self.port = self.ws_port = None
        deadline = time.monotonic() + 10
        self.output = []
        while time.monotonic() < deadline:
            line = self.proc.stdout.readline()
            if not line:
                break
            self.output.append(line)
            m = SERVING.search(line)
            if m:
                self.port = int(m.group(1))
                self.ws_port = int(m.group(2)) if m.group(2) else None
                return
        self.stop()
        raise RuntimeError("server did not start: " + "".join(self.output))

    def stop(self):
        if self.proc.poll() is None:
            self.proc.terminate()
            try:
                self.proc.wait(timeout=10)
            except subprocess.TimeoutExpired:
                self.proc.kill()
                self.proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.stop()


def world_args(port=0, ws_port=0):
    return ["--world", DATA / "worlds" / "test_city.json", "--port", port, "--ws-port", ws_port]


def test_invalid_world_exits_2(tmp_path):
    world = json.loads((DATA / "worlds" / "test_city.json").read_text())
    world["calibration"]["map_scale"] = -1
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(world))
    r = run("serve", "--world", bad, "--port", 0)
    assert r.returncode == 2
    assert "map_scale" in r.stderr

    r = run("serve", "--world", tmp_path / "missing.json")
    assert r.returncode == 2


def test_unknown_config_key_exits_2(tmp_path):
    cfg = tmp_path / "server.json"
    cfg.write_text(json.dumps({"world": str(DATA / "worlds" / "test_city.json"), "prot": 1}))
    r = run("serve", "--config", cfg)
    assert r.returncode == 2
    assert "/prot" in r.stderr


def test_second_server_on_the_same_port_fails_cleanly():
    with Server(*world_args(ws_port=0)) as first:
        r = run("serve", *world_args(port=first.port), timeout=20)
        assert r.returncode == 1
        assert "error" in r.stderr.lower()
        assert first.proc.poll() is None


def test_environment_overrides_the_port():
    port = free_port()
    env = dict(os.environ, COTOUR_PORT=str(port), COTOUR_TICK_RATE="20")
    with Server("--config", DATA / "config" / "server.json", "--ws-port", 0, env=env) as s:
        assert s.port == port
        assert "20 Hz" in "".join(s.output)

    bad = dict(os.environ, COTOUR_PORT="eighty")
    r = run("serve", "--config", DATA / "config" / "server.json", env=bad)
    assert r.returncode == 2
    assert "COTOUR_PORT" in r.stderr


def test_snapshot_of_a_running_server_lists_five_props():
    with Server(*world_args()) as s:
        for extra in ([], ["--ws"]):
            port = s.port if not extra else s.ws_port
            r = run("snapshot", f"127.0.0.1:{port}", *extra)
            assert r.returncode == 0, r.stderr
            snap = json.loads(r.stdout)
            assert len(snap["augmentation"]) == 5
    r = run("snapshot", f"127.0.0.1:{free_port()}")
    assert r.returncode == 1
    assert run("snapshot", "nonsense").returncode == 2


def test_scenario_exit_codes(tmp_path):
    ok = run("scenario", "run", DATA / "scenarios" / "staged_tour.json", "--out", tmp_path / "report.json")
    assert ok.returncode == 0, ok.stdout
    assert ok.stdout.startswith("PASS staged_tour")
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["passed"] and report["simulated_seconds"] < 10

    bad = run("scenario", "run", DATA / "scenarios" / "wrong_expectation.json")
    assert bad.returncode == 1
    assert "FAIL step 2" in bad.stdout

    broken = tmp_path / "broken.json"
    broken.write_text('{"name": "x", "world": "nowhere.json", "clients": [], "steps": []}')
    assert run("scenario", "run", broken).returncode == 2
    assert run("scenario", "run", tmp_path / "absent.json").returncode == 2


def test_recorded_tour_replays_to_the_same_hash(tmp_path):
    log = tmp_path / "tour.jsonl"
    r = run("scenario", "run", DATA / "scenarios" / "staged_tour.json", "--record", log, "--json")
    assert r.returncode == 0
    live_hash = json.loads(r.stdout)["final_snapshot_hash"]
    first = run("replay", log)
    second = run("replay", log)
    assert first.returncode == 0
    assert first.stdout.splitlines()[0] == live_hash
    assert second.stdout == first.stdout

    lines = log.read_text().splitlines(keepends=True)
    cut = tmp_path / "cut.jsonl"
    cut.write_text("".join(lines[: len(lines) // 2]) + lines[len(lines) // 2][:10])
    truncated = run("replay", cut, "--json")
    assert truncated.returncode == 0
    result = json.loads(truncated.stdout)
    assert result["truncated"] is True
    assert "stopped at line" in result["note"]

    empty = tmp_path / "empty.jsonl"
    empty.write_text("")
    assert run("replay", empty).returncode == 2


def test_scenario_against_a_live_server():
    with Server(*world_args()) as s:
        r = run("scenario", "run", DATA / "scenarios" / "wrong_expectation.json", "--endpoint", f"127.0.0.1:{s.port}")
        assert r.returncode == 1
        assert "FAIL step 2" in r.stdout
