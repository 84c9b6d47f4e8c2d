"""Smoke test for the hybridsense_py extension.

Build first:  pip install --no-build-isolation -e crates/python
Run:          python python/smoke_test.py
"""

import json
import math
import pathlib
import tempfile

import hybridsense_py as hs

ROOT = pathlib.Path(__file__).resolve().parent.parent
FIXTURE = ROOT / "crates" / "core" / "tests" / "fixtures" / "session.events.jsonl"


def graph_ops():
    g = hs.Graph()
    g.apply(json.dumps({"kind": "addDocument", "documentId": "dt-01", "title": "Port Seizure"}))
    a = json.loads(g.apply(json.dumps({"kind": "createNode", "label": "Carlos", "position": [0, 1, 0]})))
    b = json.loads(g.apply(json.dumps({"kind": "createNode", "label": "2007-02-20", "position": [1, 1, 0]})))
    na, nb = a["nodes"][0], b["nodes"][0]
    g.apply(json.dumps({"kind": "createLink", "source": na, "target": nb, "label": "met"}))
    g.select(json.dumps({"documentId": "dt-01", "nodeIds": [na]}), device="pc-1")
    assert len(g.link_ids) >= 1
    try:
        g.apply(json.dumps({"kind": "deleteNode", "id": "missing"}))
    except hs.HybridsenseError as e:
        assert "UnknownNode" in str(e)
    else:
        raise AssertionError("deleting an unknown node should fail")

    copy = hs.Graph.from_json(g.to_json())
    assert copy.snapshot_hash() == g.snapshot_hash()
    positions = dict(g.layout())
    assert set(positions) == set(g.node_ids)
    print("graph ok:", g)


def replay():
    g = hs.replay_log(str(FIXTURE))
    assert g.seq == 18, g.seq
    assert g.snapshot_hash() == hs.replay_log(str(FIXTURE)).snapshot_hash()
    report = json.loads(hs.analyze(str(FIXTURE)))
    assert isinstance(report, dict)
    print("replay ok:", g.snapshot_hash()[:16])


def geometry():
    assert hs.parse_time_label("2007-02-20").startswith("2007-02-20")
    assert hs.parse_time_label("Carlos") is None
    deg = hs.visual_angle_per_pixel(32.0, 2560, 1440)
    assert math.isclose(deg, 0.01524, abs_tol=5e-5), deg
    poses = hs.semicircle_placement(5)
    assert len(poses) == 5
    crossing = [(0, 0), (1, 1), (1, 0), (0, 1)]
    edges = [(0, 1), (2, 3)]
    assert hs.clutter_metric(crossing, edges) >= 1
    refined = hs.force_refine(crossing, edges)
    assert hs.clutter_metric(refined, edges) <= hs.clutter_metric(crossing, edges)
    print("geometry ok")


def classifiers():
    assert hs.classify_temporal(0.9, 2) == "PCDominant"
    assert hs.spatial_strategy(0.0, 0.0) == "StationaryUserAndPC"
    assert hs.spatial_strategy(300.0, 6.0) == "Carrying"
    print("classifiers ok")


def corpus():
    with tempfile.TemporaryDirectory() as d:
        manifest = json.loads(hs.generate_corpus(0, d))
        assert (pathlib.Path(d) / "manifest.json").exists()
    assert manifest == json.loads(hs.generate_corpus(0))
    print("corpus ok:", manifest["totalWordCounts"])


if __name__ == "__main__":
    graph_ops()
    replay()
    geometry()
    classifiers()
    corpus()
    print("all smoke checks passed")
