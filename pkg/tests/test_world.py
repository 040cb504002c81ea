from __future__ import annotations

import itertools

import pytest

from pmt.world import World, WorldError, load_default_world


@pytest.fixture(scope="module")
def world() -> World:
    return load_default_world()


def minimal_doc() -> dict:
    return {
        "areas": [
            {
                "id": "home",
                "locations": [
                    {"id": "a", "objects": [{"id": "o1", "actions": ["use"]}]},
                    {"id": "b", "objects": []},
                ],
                "distractor_points": [
                    {"id": "dp", "location_id": "a", "game_kind": "generic"}
                ],
            }
        ],
        "edges": [["a", "b", 2]],
    }


def test_default_world_shape(world: World):
    assert set(world.areas) == {"home", "street"}
    assert len(world.objects_in_area("home")) == 11
    assert len(world.objects_in_area("street")) == 6
    assert len(world.objects) == 17


def test_default_distractor_games(world: World):
    kinds = {
        p.game_kind: p.area_id
        for area in world.areas.values()
        for p in area.distractor_points
    }
    assert kinds["whack_a_mole"] == "home"
    assert kinds["shooting_gallery"] == "street"


def test_travel_time_identity_and_symmetry(world: World):
    for loc in world.locations:
        assert world.travel_time(loc, loc) == 0
    for a, b in itertools.combinations(world.locations, 2):
        assert world.travel_time(a, b) == world.travel_time(b, a)
        assert world.travel_time(a, b) > 0


def test_adjacent_rooms_cost_single_edge(world: World):
    assert world.travel_time("bedroom", "living_room") == 2


def test_bedroom_to_dry_cleaner_is_ten_minutes(world: World):
    # oracle: exhaustive simple-path enumeration on the default graph
    adjacency: dict[str, list[tuple[str, int]]] = {}
    for a, b, cost in world.edges:
        adjacency.setdefault(a, []).append((b, cost))
        adjacency.setdefault(b, []).append((a, cost))

    best = {"cost": None, "hops": None}

    def explore(node: str, seen: set[str], cost: int, hops: int) -> None:
        if node == "dry_cleaner":
            if best["cost"] is None or cost < best["cost"]:
                best["cost"], best["hops"] = cost, hops
            return
        for nxt, step in adjacency[node]:
            if nxt not in seen:
                explore(nxt, seen | {nxt}, cost + step, hops + 1)

    explore("bedroom", {"bedroom"}, 0, 0)
    assert best["cost"] == 10
    assert best["hops"] == 3
    assert world.travel_time("bedroom", "dry_cleaner") == 10


def test_triangle_inequality(world: World):
    locs = list(world.locations)
    for a, b, c in itertools.permutations(locs, 3):
        assert world.travel_time(a, c) <= (
            world.travel_time(a, b) + world.travel_time(b, c)
        )


def test_diameter_within_plan_budget(world: World):
    assert world.diameter() <= 15


def test_unknown_location_rejected(world: World):
    with pytest.raises(WorldError):
        world.travel_time("bedroom", "warehouse")
    with pytest.raises(WorldError):
        world.interaction_target("ghost")


def test_npc_presence_schedule(world: World):
    shimizu = world.npcs["npc_shimizu"]
    assert shimizu.location_at(9 * 60 + 59) is None
    assert shimizu.location_at(10 * 60) == "plaza"
    assert shimizu.location_at(14 * 60) == "plaza"
    assert shimizu.location_at(14 * 60 + 1) is None
    assert world.interaction_target("npc_matsuda").label == "Matsuda-san"


def test_npcs_attached_to_their_area(world: World):
    assert "npc_shimizu" in world.areas["street"].npc_ids
    assert "npc_shimizu" not in world.areas["home"].npc_ids


def test_area_without_distractor_point_rejected():
    doc = minimal_doc()
    doc["areas"][0]["distractor_points"] = []
    with pytest.raises(WorldError, match="distractor"):
        World.from_dict(doc)


def test_disconnected_graph_rejected():
    doc = minimal_doc()
    doc["edges"] = []
    with pytest.raises(WorldError, match="unreachable"):
        World.from_dict(doc)


def test_oversized_diameter_rejected():
    doc = minimal_doc()
    doc["edges"] = [["a", "b", 75]]
    with pytest.raises(WorldError, match="75"):
        World.from_dict(doc)


def test_duplicate_object_id_rejected():
    doc = minimal_doc()
    doc["areas"][0]["locations"][1]["objects"] = [
        {"id": "o1", "actions": ["use"]}
    ]
    with pytest.raises(WorldError, match="o1"):
        World.from_dict(doc)


def test_choice_options_must_be_supported():
    doc = minimal_doc()
    doc["areas"][0]["locations"][0]["objects"][0]["choice_options"] = [
        "use", "juggle"
    ]
    with pytest.raises(WorldError, match="juggle"):
        World.from_dict(doc)


def test_unknown_game_kind_rejected():
    doc = minimal_doc()
    doc["areas"][0]["distractor_points"][0]["game_kind"] = "pinball"
    with pytest.raises(WorldError, match="pinball"):
        World.from_dict(doc)
