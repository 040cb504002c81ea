"""Static world model: areas, locations, objects, characters, travel graph.

The continuous scene is abstracted to a location graph whose edges cost
whole virtual minutes to walk. Everything here is immutable after load;
the session engine is the only mutable party.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass
from pathlib import Path

from .vclock import parse_vtime

GAME_KINDS = ("whack_a_mole", "shooting_gallery", "generic")

# Validation bound: the farthest traversal must fit inside the one-hour
# task interval with room left to execute the task itself.
MAX_DIAMETER = 59


class WorldError(ValueError):
    """Raised when a world document violates the schema or an invariant."""


@dataclass(frozen=True, slots=True)
class InteractableObject:
    id: str
    label: str
    location_id: str
    supported_actions: tuple[str, ...]
    choice_options: tuple[str, ...] | None = None


@dataclass(frozen=True, slots=True)
class Location:
    id: str
    label: str
    area_id: str
    object_ids: tuple[str, ...]


@dataclass(frozen=True, slots=True)
class DistractorPoint:
    id: str
    area_id: str
    location_id: str
    game_kind: str


@dataclass(frozen=True, slots=True)
class Area:
    id: str
    label: str
    location_ids: tuple[str, ...]
    distractor_points: tuple[DistractorPoint, ...]
    npc_ids: tuple[str, ...]


@dataclass(frozen=True, slots=True)
class PresenceSpan:
    location_id: str
    start: int   # virtual minutes, inclusive
    end: int     # virtual minutes, inclusive


@dataclass(frozen=True, slots=True)
class Npc:
    """A character the participant can meet and interact with.

    Characters are interaction targets like objects but are not anchored
    to a location: they are only reachable while a presence span puts
    them where the participant is. They do not count toward an area's
    object total.
    """

    id: str
    label: str
    supported_actions: tuple[str, ...]
    presence: tuple[PresenceSpan, ...]
    choice_options: tuple[str, ...] | None = None

    def location_at(self, vtime: int) -> str | None:
        for span in self.presence:
            if span.start <= vtime <= span.end:
                return span.location_id
        return None


class World:
    def __init__(
        self,
        areas: dict[str, Area],
        locations: dict[str, Location],
        objects: dict[str, InteractableObject],
        npcs: dict[str, Npc],
        edges: tuple[tuple[str, str, int], ...],
        raw: dict,
    ):
        self.areas = areas
        self.locations = locations
        self.objects = objects
        self.npcs = npcs
        self.edges = edges
        self.raw = raw
        self._adjacency: dict[str, list[tuple[str, int]]] = {
            loc: [] for loc in locations
        }
        for a, b, cost in edges:
            self._adjacency[a].append((b, cost))
            self._adjacency[b].append((a, cost))
        self._distances = {loc: self._dijkstra(loc) for loc in locations}
        self._validate()

    @classmethod
    def from_dict(cls, doc: dict) -> "World":
        try:
            areas: dict[str, Area] = {}
            locations: dict[str, Location] = {}
            objects: dict[str, InteractableObject] = {}
            for area_doc in doc["areas"]:
                area_id = area_doc["id"]
                loc_ids = []
                for loc_doc in area_doc.get("locations", []):
                    loc_id = loc_doc["id"]
                    obj_ids = []
                    for obj_doc in loc_doc.get("objects", []):
                        obj = InteractableObject(
                            id=obj_doc["id"],
                            label=obj_doc.get("label", obj_doc["id"]),
                            location_id=loc_id,
                            supported_actions=tuple(obj_doc["actions"]),
                            choice_options=(
                                tuple(obj_doc["choice_options"])
                                if "choice_options" in obj_doc
                                else None
                            ),
                        )
                        if obj.id in objects:
                            raise WorldError(f"duplicate object id {obj.id!r}")
                        objects[obj.id] = obj
                        obj_ids.append(obj.id)
                    if loc_id in locations:
                        raise WorldError(f"duplicate location id {loc_id!r}")
                    locations[loc_id] = Location(
                        id=loc_id,
                        label=loc_doc.get("label", loc_id),
                        area_id=area_id,
                        object_ids=tuple(obj_ids),
                    )
                    loc_ids.append(loc_id)
                points = tuple(
                    DistractorPoint(
                        id=p["id"],
                        area_id=area_id,
                        location_id=p["location_id"],
                        game_kind=p["game_kind"],
                    )
                    for p in area_doc.get("distractor_points", [])
                )
                if area_id in areas:
                    raise WorldError(f"duplicate area id {area_id!r}")
                areas[area_id] = Area(
                    id=area_id,
                    label=area_doc.get("label", area_id),
                    location_ids=tuple(loc_ids),
                    distractor_points=points,
                    npc_ids=(),
                )
            npcs: dict[str, Npc] = {}
            for npc_doc in doc.get("npcs", []):
                spans = tuple(
                    PresenceSpan(
                        location_id=s["location_id"],
                        start=_as_minute(s["from"]),
                        end=_as_minute(s["to"]),
                    )
                    for s in npc_doc["presence"]
                )
                npc = Npc(
                    id=npc_doc["id"],
                    label=npc_doc.get("label", npc_doc["id"]),
                    supported_actions=tuple(npc_doc["actions"]),
                    presence=spans,
                    choice_options=(
                        tuple(npc_doc["choice_options"])
                        if "choice_options" in npc_doc
                        else None
                    ),
                )
                if npc.id in npcs or npc.id in objects:
                    raise WorldError(f"duplicate interactable id {npc.id!r}")
                npcs[npc.id] = npc
            # attach npc ids to the areas their presence spans fall in
            for area_id, area in areas.items():
                present = tuple(
                    npc.id
                    for npc in npcs.values()
                    if any(
                        locations[s.location_id].area_id == area_id
                        for s in npc.presence
                        if s.location_id in locations
                    )
                )
                areas[area_id] = Area(
                    area.id, area.label, area.location_ids,
                    area.distractor_points, present,
                )
            edges = tuple(
                (e[0], e[1], int(e[2])) for e in doc.get("edges", [])
            )
        except KeyError as exc:
            raise WorldError(f"world document missing key {exc}") from exc
        return cls(areas, locations, objects, npcs, edges, doc)

    @classmethod
    def load(cls, path: str | Path) -> "World":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def _validate(self) -> None:
        if not self.areas:
            raise WorldError("world has no areas")
        for area in self.areas.values():
            if not area.distractor_points:
                raise WorldError(f"area {area.id!r} has no distractor point")
            for point in area.distractor_points:
                if point.game_kind not in GAME_KINDS:
                    raise WorldError(
                        f"distractor point {point.id!r} has unknown game "
                        f"kind {point.game_kind!r}"
                    )
                if point.location_id not in self.locations:
                    raise WorldError(
                        f"distractor point {point.id!r} references unknown "
                        f"location {point.location_id!r}"
                    )
        for a, b, cost in self.edges:
            for end in (a, b):
                if end not in self.locations:
                    raise WorldError(f"edge endpoint {end!r} is not a location")
            if cost <= 0:
                raise WorldError(f"edge {a!r}-{b!r} has non-positive cost")
        for obj in self.objects.values():
            if not obj.supported_actions:
                raise WorldError(f"object {obj.id!r} supports no actions")
            if obj.choice_options is not None:
                if len(set(obj.choice_options)) != len(obj.choice_options):
                    raise WorldError(f"object {obj.id!r} repeats choice options")
                missing = set(obj.choice_options) - set(obj.supported_actions)
                if missing:
                    raise WorldError(
                        f"object {obj.id!r} offers choices {sorted(missing)} "
                        "outside its supported actions"
                    )
        for npc in self.npcs.values():
            for span in npc.presence:
                if span.location_id not in self.locations:
                    raise WorldError(
                        f"character {npc.id!r} scheduled at unknown "
                        f"location {span.location_id!r}"
                    )
                if span.end < span.start:
                    raise WorldError(
                        f"character {npc.id!r} has an empty presence span"
                    )
        reachable = self._distances[next(iter(self.locations))]
        unreachable = sorted(set(self.locations) - set(reachable))
        if unreachable:
            raise WorldError(f"locations unreachable: {unreachable}")
        diameter = self.diameter()
        if diameter > MAX_DIAMETER:
            raise WorldError(
                f"farthest traversal costs {diameter} virtual minutes, "
                f"over the {MAX_DIAMETER} limit"
            )

    def _dijkstra(self, start: str) -> dict[str, int]:
        dist = {start: 0}
        heap = [(0, start)]
        while heap:
            d, node = heapq.heappop(heap)
            if d > dist.get(node, 1 << 30):
                continue
            for nxt, cost in self._adjacency[node]:
                nd = d + cost
                if nd < dist.get(nxt, 1 << 30):
                    dist[nxt] = nd
                    heapq.heappush(heap, (nd, nxt))
        return dist

    def travel_time(self, from_id: str, to_id: str) -> int:
        for loc in (from_id, to_id):
            if loc not in self.locations:
                raise WorldError(f"unknown location {loc!r}")
        return self._distances[from_id][to_id]

    def diameter(self) -> int:
        return max(
            max(dists.values()) for dists in self._distances.values()
        )

    def area_of(self, location_id: str) -> Area:
        return self.areas[self.locations[location_id].area_id]

    def objects_in_area(self, area_id: str) -> list[InteractableObject]:
        return [
            obj for obj in self.objects.values()
            if self.locations[obj.location_id].area_id == area_id
        ]

    def interaction_target(self, target_id: str) -> InteractableObject | Npc:
        """Resolve an object or character id. PM task targets may be either."""
        if target_id in self.objects:
            return self.objects[target_id]
        if target_id in self.npcs:
            return self.npcs[target_id]
        raise WorldError(f"unknown interaction target {target_id!r}")

    def distractor_at(self, location_id: str) -> DistractorPoint | None:
        for area in self.areas.values():
            for point in area.distractor_points:
                if point.location_id == location_id:
                    return point
        return None

    def action_ids(self) -> set[str]:
        actions: set[str] = set()
        for obj in self.objects.values():
            actions.update(obj.supported_actions)
        for npc in self.npcs.values():
            actions.update(npc.supported_actions)
        return actions

    def to_dict(self) -> dict:
        """The validated source document, suitable for sending to clients."""
        return self.raw


def _as_minute(value: int | str) -> int:
    if isinstance(value, int):
        return value
    return parse_vtime(value)


def default_world_path() -> Path:
    return Path(__file__).parent / "content" / "default.world.json"


def load_default_world() -> World:
    return World.load(default_world_path())
