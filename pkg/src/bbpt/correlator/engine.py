"""Builds CAGs from ranked activities.

The engine keeps two index maps. The message index (mmap) maps a channel to
the unmatched SEND vertex on it and the bytes still owed to the receiver;
the context index (cmap) maps an execution entity to its latest vertex.
SEND parts from one context on one channel merge into one vertex, and
RECEIVE parts are held back until they account for every byte sent.
"""

import logging
from dataclasses import asdict, dataclass, field
from typing import Dict, Iterable, Iterator, List, Optional, Protocol, Set

from ..models.activity import Activity, ActivityType, Channel, ContextId
from ..models.cag import CAG, CagStatus, Vertex

logger = logging.getLogger(__name__)


class MessageIndexView(Protocol):
    """What the ranker may read from the engine's message index."""

    def outstanding(self, channel: Channel) -> int: ...


@dataclass(eq=False)
class MessageEntry:
    send: Vertex
    outstanding: int
    pending: List[Activity] = field(default_factory=list)


class MessageIndex:
    """mmap: channel -> unmatched SEND vertex with outstanding bytes."""

    def __init__(self):
        self._entries: Dict[Channel, MessageEntry] = {}
        self._by_cag: Dict[int, Set[Channel]] = {}

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, channel: Channel) -> bool:
        return channel in self._entries

    def outstanding(self, channel: Channel) -> int:
        entry = self._entries.get(channel)
        return entry.outstanding if entry is not None else 0

    def get(self, channel: Channel) -> Optional[MessageEntry]:
        return self._entries.get(channel)

    def open(self, channel: Channel, send: Vertex, size: int) -> Optional[MessageEntry]:
        """Owe ``size`` more bytes on ``channel`` from ``send``.

        Returns the entry this replaced when another SEND still owed bytes
        on the channel.
        """
        entry = self._entries.get(channel)
        if entry is not None and entry.send is send:
            entry.outstanding += size
            return None
        self._entries[channel] = MessageEntry(send, size)
        self._by_cag.setdefault(id(send.cag), set()).add(channel)
        if entry is not None:
            self._forget(channel, entry)
        return entry

    def remove(self, channel: Channel) -> Optional[MessageEntry]:
        entry = self._entries.pop(channel, None)
        if entry is not None:
            self._forget(channel, entry)
        return entry

    def purge(self, cag: CAG) -> List[MessageEntry]:
        """Drop every entry whose SEND belongs to ``cag``."""
        stale = []
        for channel in self._by_cag.pop(id(cag), set()):
            entry = self._entries.get(channel)
            if entry is not None and entry.send.cag is cag:
                del self._entries[channel]
                stale.append(entry)
        return stale

    def entries(self) -> List[MessageEntry]:
        return list(self._entries.values())

    def _forget(self, channel: Channel, entry: MessageEntry) -> None:
        current = self._entries.get(channel)
        if current is not None and current.send.cag is entry.send.cag:
            return
        channels = self._by_cag.get(id(entry.send.cag))
        if channels is not None:
            channels.discard(channel)
            if not channels:
                del self._by_cag[id(entry.send.cag)]


class ContextIndex:
    """cmap: execution entity -> its latest vertex."""

    def __init__(self):
        self._latest: Dict[ContextId, Vertex] = {}

    def latest(self, context: ContextId) -> Optional[Vertex]:
        return self._latest.get(context)

    def set(self, context: ContextId, vertex: Vertex) -> None:
        self._latest[context] = vertex

    def clear(self, context: ContextId) -> None:
        self._latest.pop(context, None)


@dataclass
class EngineStats:
    begins: int = 0
    orphan_end: int = 0
    orphan_send: int = 0
    unmatched_receive: int = 0
    byte_violations: int = 0
    overlapped_requests: int = 0
    replaced_messages: int = 0
    merged_sends: int = 0
    merged_receives: int = 0
    cags_emitted: int = 0
    incomplete_flushed: int = 0
    # every delivered activity ends up in exactly one of these two
    correlated: int = 0
    orphaned: int = 0

    def to_dict(self) -> Dict[str, int]:
        return asdict(self)


class CorrelationEngine:
    """Consumes candidate activities and emits CAGs as their END arrives."""

    def __init__(self):
        self.mmap = MessageIndex()
        self.cmap = ContextIndex()
        self.stats = EngineStats()
        self._in_progress: Dict[int, CAG] = {}

    @property
    def in_progress(self) -> List[CAG]:
        return list(self._in_progress.values())

    def correlate(self, candidates: Iterable[Activity]) -> Iterator[CAG]:
        """Yield each CAG when it completes, then the unfinished ones at end of stream."""
        for activity in candidates:
            cag = self.handle(activity)
            if cag is not None:
                yield cag
        yield from self.flush()

    def handle(self, activity: Activity) -> Optional[CAG]:
        kind = activity.activity_type
        if kind is ActivityType.BEGIN:
            self.handle_begin(activity)
        elif kind is ActivityType.END:
            return self.handle_end(activity)
        elif kind is ActivityType.SEND:
            self.handle_send(activity)
        else:
            self.handle_receive(activity)
        return None

    def _parent_in_progress(self, context: ContextId) -> Optional[Vertex]:
        parent = self.cmap.latest(context)
        if parent is None or parent.cag is None or not parent.cag.in_progress:
            return None
        return parent

    def handle_begin(self, current: Activity) -> CAG:
        previous = self._parent_in_progress(current.context)
        if previous is not None and previous.activity_type is not ActivityType.END:
            self.stats.overlapped_requests += 1
            logger.debug("BEGIN %s overlaps request %s in the same context", current.ref, previous.cag.id)
        root = Vertex.of(current)
        cag = CAG.rooted_at(root)
        self._in_progress[id(cag)] = cag
        self.cmap.set(current.context, root)
        self.stats.begins += 1
        self.stats.correlated += 1
        return cag

    def handle_end(self, current: Activity) -> Optional[CAG]:
        parent = self._parent_in_progress(current.context)
        if parent is None:
            self.stats.orphan_end += 1
            self.stats.orphaned += 1
            logger.debug("orphan END %s", current.ref)
            return None
        cag = parent.cag
        vertex = Vertex.of(current)
        cag.add_vertex(vertex)
        cag.add_context_edge(parent, vertex)
        cag.end = vertex
        cag.status = CagStatus.COMPLETE
        self.cmap.clear(current.context)
        self.stats.correlated += 1
        return self._emit(cag)

    def handle_send(self, current: Activity) -> None:
        parent = self._parent_in_progress(current.context)
        if parent is None:
            self.stats.orphan_send += 1
            self.stats.orphaned += 1
            logger.debug("orphan SEND %s", current.ref)
            return
        self.stats.correlated += 1
        if parent.activity_type is ActivityType.SEND and parent.activity.channel == current.channel:
            parent.absorb(current)
            self._open(current.channel, parent, current.size)
            self.stats.merged_sends += 1
            return
        vertex = Vertex.of(current)
        parent.cag.add_vertex(vertex)
        parent.cag.add_context_edge(parent, vertex)
        self._open(current.channel, vertex, current.size)
        self.cmap.set(current.context, vertex)

    def _open(self, channel: Channel, send: Vertex, size: int) -> None:
        replaced = self.mmap.open(channel, send, size)
        if replaced is not None:
            self.stats.replaced_messages += 1
            self._orphan_pending(replaced)

    def _orphan_pending(self, entry) -> None:
        self.stats.correlated -= len(entry.pending)
        self.stats.orphaned += len(entry.pending)

    def handle_receive(self, current: Activity) -> None:
        channel = current.channel
        entry = self.mmap.get(channel)
        if entry is None:
            self.stats.unmatched_receive += 1
            self.stats.orphaned += 1
            logger.debug("unmatched RECEIVE %s", current.ref)
            return
        if current.size > entry.outstanding:
            self.stats.byte_violations += 1
            self.stats.orphaned += 1
            self._orphan_pending(entry)
            self.mmap.remove(channel)
            logger.debug("RECEIVE %s takes %d bytes but only %d are owed",
                         current.ref, current.size, entry.outstanding)
            return

        self.stats.correlated += 1
        entry.outstanding -= current.size
        if entry.outstanding > 0:
            entry.pending.append(current)
            return

        self.mmap.remove(channel)
        send = entry.send
        cag = send.cag
        parts = entry.pending + [current]
        parent = self._parent_in_progress(current.context)

        # The rest of a message whose first bytes already formed this vertex.
        if (
            parent is not None
            and parent.activity_type is ActivityType.RECEIVE
            and parent.message_parent is send
        ):
            for part in parts:
                parent.absorb(part, completes=part is current)
            self.stats.merged_receives += len(parts)
            return

        vertex = Vertex(
            activity=current,
            timestamp=current.timestamp,
            size=sum(part.size for part in parts),
            parts=[part.ref for part in parts],
            first_timestamp=parts[0].timestamp,
        )
        self.stats.merged_receives += len(parts) - 1
        cag.add_vertex(vertex)
        cag.add_message_edge(send, vertex)
        # A recycled thread still points at its previous request's CAG.
        if parent is not None and parent.cag is cag:
            cag.add_context_edge(parent, vertex)
        self.cmap.set(current.context, vertex)

    def _emit(self, cag: CAG) -> CAG:
        del self._in_progress[id(cag)]
        for stale in self.mmap.purge(cag):
            self._orphan_pending(stale)
        self.stats.cags_emitted += 1
        return cag

    def flush(self) -> List[CAG]:
        """Close every unfinished CAG at end of stream."""
        for entry in self.mmap.entries():
            self._orphan_pending(entry)
            entry.pending.clear()
        flushed = sorted(self._in_progress.values(), key=lambda c: c.sort_key)
        for cag in flushed:
            cag.status = CagStatus.INCOMPLETE
            self.stats.incomplete_flushed += 1
        self._in_progress.clear()
        return flushed
