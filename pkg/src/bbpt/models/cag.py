"""Component activity graphs: one DAG of activities per request."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Optional, Tuple

import networkx as nx

from .activity import Activity, ActivityRef, ActivityType


class EdgeKind(str, Enum):
    CONTEXT = "context"
    MESSAGE = "message"


class CagStatus(str, Enum):
    IN_PROGRESS = "in-progress"
    COMPLETE = "complete"
    INCOMPLETE = "incomplete-at-flush"


@dataclass(eq=False)
class Vertex:
    """An activity in a CAG, possibly merged from several message parts.

    SEND vertices are represented by their first part; RECEIVE vertices by
    the part that completed the message, with the first part's timestamp
    kept as ``first_timestamp``.
    """

    activity: Activity
    timestamp: int
    size: int
    parts: List[ActivityRef]
    first_timestamp: int
    cag: Optional["CAG"] = field(default=None, repr=False)
    context_parent: Optional["Vertex"] = field(default=None, repr=False)
    message_parent: Optional["Vertex"] = field(default=None, repr=False)
    context_child: Optional["Vertex"] = field(default=None, repr=False)
    message_child: Optional["Vertex"] = field(default=None, repr=False)

    @classmethod
    def of(cls, activity: Activity) -> "Vertex":
        return cls(
            activity=activity,
            timestamp=activity.timestamp,
            size=activity.size,
            parts=[activity.ref],
            first_timestamp=activity.timestamp,
        )

    @property
    def activity_type(self) -> ActivityType:
        return self.activity.activity_type

    @property
    def source(self) -> str:
        return self.activity.source

    @property
    def label(self) -> Tuple[str, str, str]:
        """Pattern label: type with the host/program part of the context."""
        ctx = self.activity.context
        return (self.activity_type.name, ctx.hostname, ctx.program_name)

    @property
    def parent_count(self) -> int:
        return (self.context_parent is not None) + (self.message_parent is not None)

    def absorb(self, activity: Activity, completes: bool = False) -> None:
        """Merge another part of the same message into this vertex."""
        self.size += activity.size
        self.parts.append(activity.ref)
        if completes:
            self.activity = activity
            self.timestamp = activity.timestamp


@dataclass(eq=False)
class CAG:
    """Directed acyclic graph of the activities caused by one request."""

    root: Vertex
    vertices: List[Vertex] = field(default_factory=list)
    context_edges: List[Tuple[Vertex, Vertex]] = field(default_factory=list)
    message_edges: List[Tuple[Vertex, Vertex]] = field(default_factory=list)
    status: CagStatus = CagStatus.IN_PROGRESS
    end: Optional[Vertex] = None

    @classmethod
    def rooted_at(cls, root: Vertex) -> "CAG":
        cag = cls(root=root)
        cag.add_vertex(root)
        return cag

    @property
    def id(self) -> str:
        return str(self.root.activity.ref)

    @property
    def sort_key(self) -> Tuple[str, int]:
        ref = self.root.activity.ref
        return (ref.source, ref.ingest_seq)

    @property
    def in_progress(self) -> bool:
        return self.status is CagStatus.IN_PROGRESS

    @property
    def is_complete(self) -> bool:
        return self.status is CagStatus.COMPLETE

    def add_vertex(self, vertex: Vertex) -> None:
        vertex.cag = self
        self.vertices.append(vertex)

    def add_context_edge(self, parent: Vertex, child: Vertex) -> None:
        parent.context_child = child
        child.context_parent = parent
        self.context_edges.append((parent, child))

    def add_message_edge(self, send: Vertex, receive: Vertex) -> None:
        send.message_child = receive
        receive.message_parent = send
        self.message_edges.append((send, receive))

    def activity_refs(self) -> List[ActivityRef]:
        """Every logged activity the CAG covers, merged parts expanded."""
        return sorted(ref for vertex in self.vertices for ref in vertex.parts)

    def canonical_order(self) -> List[Vertex]:
        """Vertices in depth-first order from the root, context child first.

        A vertex has at most one child of each edge kind, so the order only
        depends on the graph's shape.
        """
        order: List[Vertex] = []
        seen = set()
        stack = [self.root]
        while stack:
            vertex = stack.pop()
            if id(vertex) in seen:
                continue
            seen.add(id(vertex))
            order.append(vertex)
            if vertex.message_child is not None and vertex.message_child.cag is self:
                stack.append(vertex.message_child)
            if vertex.context_child is not None and vertex.context_child.cag is self:
                stack.append(vertex.context_child)
        # Vertices not reachable from the root only appear in broken graphs.
        stray = [v for v in self.vertices if id(v) not in seen]
        stray.sort(key=lambda v: v.parts[0])
        return order + stray

    def typed_edges(self, index: Dict[int, int]) -> List[Tuple[int, int, EdgeKind]]:
        edges = [(index[id(p)], index[id(c)], EdgeKind.CONTEXT) for p, c in self.context_edges]
        edges += [(index[id(s)], index[id(r)], EdgeKind.MESSAGE) for s, r in self.message_edges]
        return sorted(edges, key=lambda e: (e[0], e[1], e[2].value))

    def to_networkx(self) -> nx.DiGraph:
        graph = nx.DiGraph()
        order = self.canonical_order()
        index = {id(v): i for i, v in enumerate(order)}
        for i, vertex in enumerate(order):
            graph.add_node(i, label=vertex.label, type=vertex.activity_type)
        for parent, child, kind in self.typed_edges(index):
            graph.add_edge(parent, child, kind=kind.value)
        return graph

    def to_dict(self) -> dict:
        order = self.canonical_order()
        index = {id(v): i for i, v in enumerate(order)}
        return {
            "id": self.id,
            "status": self.status.value,
            "vertices": [
                {
                    "id": i,
                    **vertex.activity.to_dict(),
                    "timestamp": vertex.timestamp,
                    "first_timestamp": vertex.first_timestamp,
                    "size": vertex.size,
                    "parts": [str(ref) for ref in vertex.parts],
                }
                for i, vertex in enumerate(order)
            ],
            "edges": [
                {"kind": kind.value, "parent": parent, "child": child}
                for parent, child, kind in self.typed_edges(index)
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CAG":
        vertices = []
        for entry in data["vertices"]:
            activity = Activity.from_dict(entry)
            vertices.append(
                Vertex(
                    activity=activity,
                    timestamp=int(entry["timestamp"]),
                    size=int(entry["size"]),
                    parts=[ActivityRef.parse(ref) for ref in entry["parts"]],
                    first_timestamp=int(entry["first_timestamp"]),
                )
            )
        cag = cls(root=vertices[0], status=CagStatus(data["status"]))
        for vertex in vertices:
            cag.add_vertex(vertex)
            if vertex.activity_type is ActivityType.END:
                cag.end = vertex
        for edge in data["edges"]:
            parent, child = vertices[edge["parent"]], vertices[edge["child"]]
            if edge["kind"] == EdgeKind.CONTEXT.value:
                cag.add_context_edge(parent, child)
            else:
                cag.add_message_edge(parent, child)
        return cag


def validate_cag(cag: CAG) -> List[str]:
    """Return the CAG invariants the graph violates (empty when valid)."""
    problems: List[str] = []
    graph = cag.to_networkx()
    if not nx.is_directed_acyclic_graph(graph):
        problems.append("graph has a cycle")

    begins = [v for v in cag.vertices if v.activity_type is ActivityType.BEGIN]
    ends = [v for v in cag.vertices if v.activity_type is ActivityType.END]
    if len(begins) != 1 or begins[0] is not cag.root:
        problems.append(f"expected exactly one BEGIN at the root, found {len(begins)}")
    if cag.is_complete and len(ends) != 1:
        problems.append(f"complete CAG has {len(ends)} END vertices")

    for vertex in cag.vertices:
        parents = vertex.parent_count
        if parents > 2:
            problems.append(f"{vertex.parts[0]} has {parents} parents")
        if parents == 2 and vertex.activity_type is not ActivityType.RECEIVE:
            problems.append(f"{vertex.parts[0]} is a {vertex.activity_type.name} with two parents")

    for parent, child in cag.context_edges + cag.message_edges:
        if parent.source == child.source and parent.timestamp > child.timestamp:
            problems.append(f"edge {parent.parts[0]} -> {child.parts[0]} goes back in local time")

    for send, receive in cag.message_edges:
        if send.size != receive.size:
            problems.append(
                f"message {send.parts[0]} -> {receive.parts[0]} carries {send.size} "
                f"bytes sent but {receive.size} received"
            )
    return problems


def cag_digest(cag: CAG) -> str:
    """Structural digest that ignores timestamps (stable across clock skew)."""
    order = cag.canonical_order()
    index = {id(v): i for i, v in enumerate(order)}
    shape = {
        "status": cag.status.value,
        "vertices": [
            [v.activity_type.name, [str(r) for r in v.parts], v.size] for v in order
        ],
        "edges": [[p, c, k.value] for p, c, k in cag.typed_edges(index)],
    }
    encoded = json.dumps(shape, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(encoded).hexdigest()


def cags_to_document(cags: Iterable[CAG]) -> dict:
    ordered = sorted(cags, key=lambda c: c.sort_key)
    return {"cags": [cag.to_dict() for cag in ordered]}


def cags_from_document(document: dict) -> List[CAG]:
    return [CAG.from_dict(entry) for entry in document.get("cags", [])]
