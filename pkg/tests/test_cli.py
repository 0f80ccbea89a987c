from __future__ import annotations

import asyncio
import json
import logging

import httpx
import pytest

from apps.pgd_cli import main as cli
from apps.pgd_cli.service_client import DivisionServiceClient, ServiceError
from services.pan_division.codec import dumps, instance_from_json, instance_to_json, loads
from services.pan_division.core import Card, NotStable
from services.pan_division.generator import generate
from services.pan_division.server import app


@pytest.fixture
def instance_file(tmp_path, walkthrough_two_players):
    path = tmp_path / "instance.json"
    path.write_text(dumps(instance_to_json(walkthrough_two_players)), encoding="utf-8")
    return path


def asgi_client(url: str) -> DivisionServiceClient:
    return DivisionServiceClient(url, transport=httpx.ASGITransport(app=app))


def test_generate_writes_a_seeded_instance(tmp_path):
    out = tmp_path / "gen.json"
    assert cli.main(["generate", "--players", "5", "--pictures", "6", "--suits", "3", "--seed", "1", "--out", str(out)]) == 0
    assert instance_from_json(loads(out.read_text(encoding="utf-8"))) == generate(5, 6, 3, 1)


def test_divide_writes_result_trace_and_report(tmp_path, instance_file):
    out, trace, report = tmp_path / "r.json", tmp_path / "t.jsonl", tmp_path / "rep.json"
    code = cli.main(["divide", "--in", str(instance_file), "--out", str(out), "--trace", str(trace), "--report", str(report)])
    assert code == 0
    assert json.loads(out.read_text(encoding="utf-8")) == {"p0": "Chicken", "p1": "Ape"}
    lines = trace.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 4
    assert all(json.loads(line)["n"] == 4 for line in lines)
    assert [s["n"] for s in json.loads(report.read_text(encoding="utf-8"))["steps"]] == [4, 3, 2]


def test_divide_output_is_byte_identical_across_runs(tmp_path):
    source = tmp_path / "big.json"
    source.write_text(dumps(instance_to_json(generate(30, 40, 4, seed=8))), encoding="utf-8")
    outputs = []
    for i in range(2):
        out, trace = tmp_path / f"r{i}.json", tmp_path / f"t{i}.jsonl"
        assert cli.main(["divide", "--in", str(source), "--out", str(out), "--trace", str(trace)]) == 0
        outputs.append((out.read_bytes(), trace.read_bytes()))
    assert outputs[0] == outputs[1]


def test_run_writes_the_reduced_instance(tmp_path, instance_file):
    out = tmp_path / "reduced.json"
    assert cli.main(["run", "--in", str(instance_file), "--out", str(out)]) == 0
    reduced = instance_from_json(loads(out.read_text(encoding="utf-8")))
    assert reduced.n_suits == 3
    assert reduced.deal.hand("p0") == (Card("Bolt", 2), Card("Chicken", 1), Card("Chicken", 0))
    assert reduced.deal.hand("p1") == (Card("Ape", 2), Card("Ape", 1), Card("Ape", 0))


def test_verify_accepts_the_division_result(tmp_path, instance_file, capsys):
    claimed = tmp_path / "claimed.json"
    claimed.write_text('{"p0": "Chicken", "p1": "Ape"}', encoding="utf-8")
    assert cli.main(["verify", "--in", str(instance_file), "--claimed", str(claimed)]) == 0
    assert capsys.readouterr().out == "ok\n"


def test_verify_rejects_a_tampered_claim(tmp_path, instance_file):
    claimed = tmp_path / "claimed.json"
    claimed.write_text('{"p0": "Bolt", "p1": "Ape"}', encoding="utf-8")
    assert cli.main(["verify", "--in", str(instance_file), "--claimed", str(claimed)]) == 1


def test_invalid_instance_exits_1(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"n_suits": 2, "players": ["a"], "pictures": ["x"], "deal": {"a": [["x", 1], ["x", 1]]}}', encoding="utf-8")
    assert cli.main(["divide", "--in", str(bad)]) == 1
    assert cli.main(["generate", "--players", "4", "--pictures", "2"]) == 1


@pytest.mark.parametrize("text", ["{not json", '{"n_suits": 2}', "[1, 2]"])
def test_malformed_input_exits_2(tmp_path, text):
    bad = tmp_path / "bad.json"
    bad.write_text(text, encoding="utf-8")
    assert cli.main(["divide", "--in", str(bad)]) == 2


def test_undecodable_input_exits_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_bytes(b'{"n_suits": 2, "players": ["\xff"]}')
    assert cli.main(["divide", "--in", str(bad)]) == 2


@pytest.mark.parametrize("cap", ["0", "-3"])
def test_non_positive_round_cap_exits_2(instance_file, cap):
    assert cli.main(["divide", "--in", str(instance_file), "--max-round-pairs", cap]) == 2


def test_missing_arguments_exit_2(tmp_path):
    assert cli.main(["generate"]) == 2
    assert cli.main(["divide", "--in", str(tmp_path / "missing.json")]) == 2
    assert cli.main(["verify", "--players", "2", "--pictures", "3"]) == 2


def test_engine_failure_exits_3(instance_file, monkeypatch):
    def broken(*args, **kwargs):
        raise NotStable("forced")

    monkeypatch.setattr(cli, "divide_instance", broken)
    assert cli.main(["divide", "--in", str(instance_file)]) == 3


def test_round_cap_exits_3(instance_file):
    assert cli.main(["divide", "--in", str(instance_file), "--max-round-pairs", "1"]) == 3


def test_stats_for_one_instance(instance_file, capsys):
    assert cli.main(["stats", "--in", str(instance_file)]) == 0
    stats = json.loads(capsys.readouterr().out)
    assert stats["round_pairs_used"] == 2
    assert stats["players"]["p1"]["ship_out_count"] == 1


def test_stats_over_a_seed_range(capsys):
    assert cli.main(["stats", "--players", "5", "--pictures", "7", "--seed", "10", "--count", "3"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("seed")
    assert [line.split()[0] for line in lines[1:]] == ["10", "11", "12", "max"]


def test_remote_divide_matches_local(tmp_path, instance_file, monkeypatch):
    monkeypatch.setattr(cli, "_service_client", asgi_client)
    local, remote = tmp_path / "local.json", tmp_path / "remote.json"
    local_trace, remote_trace = tmp_path / "local.jsonl", tmp_path / "remote.jsonl"
    assert cli.main(["divide", "--in", str(instance_file), "--out", str(local), "--trace", str(local_trace)]) == 0
    code = cli.main(
        ["divide", "--in", str(instance_file), "--out", str(remote), "--trace", str(remote_trace), "--remote", "http://testserver/"]
    )
    assert code == 0
    assert remote.read_bytes() == local.read_bytes()
    assert remote_trace.read_bytes() == local_trace.read_bytes()


def test_remote_engine_error_exits_3(instance_file, monkeypatch):
    monkeypatch.setattr(cli, "_service_client", asgi_client)
    assert cli.main(["divide", "--in", str(instance_file), "--max-round-pairs", "1", "--remote", "http://testserver/"]) == 3


def test_client_surfaces_rpc_errors():
    client = asgi_client("http://testserver/")
    with pytest.raises(ServiceError) as err:
        asyncio.run(client.call("division/guess", {}))
    assert err.value.code == -32601
    answer = asyncio.run(client.call("instances/generate", {"players": 1, "pictures": 1, "suits": 1}))
    assert answer["instance"]["deal"] == {"p0": [["b0", 0]]}


def test_verify_rejects_a_colliding_claim(tmp_path, instance_file):
    claimed = tmp_path / "claimed.json"
    claimed.write_text('{"p0": "Ape", "p1": "Ape"}', encoding="utf-8")
    assert cli.main(["verify", "--in", str(instance_file), "--claimed", str(claimed)]) == 1


def test_run_logs_the_walkthrough_moves(tmp_path, walkthrough, caplog):
    source = tmp_path / "walkthrough.json"
    source.write_text(dumps(instance_to_json(walkthrough)), encoding="utf-8")
    caplog.set_level(logging.INFO, logger="pgd_cli")
    trace = tmp_path / "trace.jsonl"
    assert cli.main(["run", "--in", str(source), "--out", str(tmp_path / "r.json"), "--trace", str(trace)]) == 0
    moves = [r.getMessage() for r in caplog.records if "Ship" in r.getMessage() or "Shape" in r.getMessage()]
    assert moves == ["round 1 p0: ShapeUp(Chicken♠ ↔ Ape♣)", "round 2 p0: ShipOut(Two♠ → Chicken♣)"]
    assert len(trace.read_text(encoding="utf-8").splitlines()) == 2
