import json
import math
from pathlib import Path

import pytest

import cotour

DATA = Path(__file__).resolve().parents[2] / "data"


def world():
    return json.loads((DATA / "worlds" / "test_city.json").read_text())


def test_message_types_cover_the_protocol():
    names = cotour.message_types()
    assert names[0] == "Join"
    assert "StateSnapshot" in names and "HandMapToggle" in names
    assert len(names) == len(set(names))


def test_codec_round_trip():
    msg = {
        "seq": 7,
        "sender": 1,
        "type": "MarkerPose",
        "body": {"marker_id": "map-hub", "pose": {"position": [0.0, 0.75, 0.0]}},
    }
    back = cotour.decode(cotour.encode(msg))
    assert back["type"] == "MarkerPose"
    assert back["body"]["pose"]["position"] == [0.0, 0.75, 0.0]
    assert cotour.decode(cotour.encode(back)) == back


def test_decode_rejects_garbage():
    with pytest.raises(ValueError):
        cotour.decode('{"seq": 1}')


def test_session_roles_dr2_4():
    s = cotour.Session(world())
    primary = s.join("primary", 1)
    a = s.join("secondary", 1)
    b = s.join("secondary", 1)
    assert len({primary, a, b}) == 3
    snap = s.snapshot()
    assert len(snap["augmentation"]) == 5
    assert len(snap["secondaries"]) == 2
    with pytest.raises(cotour.Rejected) as err:
        s.join("primary", 1)
    assert err.value.args[0] == "role_occupied"
    assert s.check_invariants() == []


def test_teleport_poi_dr3_1():
    s = cotour.Session(world())
    c = s.join("secondary", 1)
    avatar = s.snapshot()["secondaries"][0]["avatar"]
    s.handle(c, {"seq": 2, "sender": c, "type": "TeleportPoi", "body": {"avatar": avatar, "poi": "basilica"}})
    pos = s.snapshot()["secondaries"][0]["city_pose"]["position"]
    assert pos == pytest.approx([210.0, 0.0, 40.0])


def test_compose_to_local_round_trip():
    parent = {"position": [1.0, 2.0, 3.0], "rotation": [math.cos(0.3), 0.0, math.sin(0.3), 0.0], "scale": [2.0, 2.0, 2.0]}
    child = {"position": [0.5, -1.0, 4.0]}
    world_pose = cotour.compose(parent, child)
    assert cotour.to_local(world_pose, parent)["position"] == pytest.approx(child["position"], abs=1e-9)


def test_radial_layout_first_button():
    pts = cotour.radial_button_layout(5, 12.0, 1000.0, 500.0)
    assert len(pts) == 5
    assert pts[0] == pytest.approx((120.0, 0.0))
    for x, y in pts:
        assert (x / 120.0) ** 2 + (y / 60.0) ** 2 == pytest.approx(1.0)


def test_map_hub_position_of_origin():
    assert cotour.map_hub_position(world(), [0.0, 0.0, 0.0]) == pytest.approx([-0.1, 0.0, 0.05])


def test_staged_tour_passes():
    report = cotour.run_scenario(DATA / "scenarios" / "staged_tour.json")
    assert report["passed"], report["failures"]
    assert report["simulated_seconds"] < 10.0
    for tag in ["DR1.1", "DR1.2", "DR1.3", "DR2.1", "DR2.2", "DR2.3", "DR2.4", "DR3.1", "DR3.2"]:
        assert report["tags"][tag]["passed"]


def test_replay_rejects_foreign_log():
    with pytest.raises(cotour.ReplayError):
        cotour.replay('{"log": "cotour-session", "version": 99}\n')


def test_canonical_hash_accepts_dict_or_text():
    s = cotour.Session(world())
    s.join("primary")
    snap = s.snapshot()
    digest = cotour.canonical_hash(snap)
    assert len(digest) == 64
    assert digest == cotour.canonical_hash(json.dumps(snap))
