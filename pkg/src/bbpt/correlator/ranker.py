"""Chooses the next candidate activity from per-node queues.

Activities are buffered per log source under a sliding time window. A head
RECEIVE whose SEND the engine already holds is taken first; otherwise the
head with the lowest type priority goes. When every head is a RECEIVE that
cannot be matched yet, the ranker works through its stall handling: widen
the window, swap a matching SEND forward, discard noise, read further, and
at end of stream give up on the oldest head.
"""

import logging
from collections import Counter, deque
from dataclasses import asdict, dataclass
from typing import Deque, Dict, Iterable, Iterator, List, Mapping, Optional, Tuple

from ..models.activity import Activity, ActivityType
from ..models.config import RankerConfig
from .engine import MessageIndexView

logger = logging.getLogger(__name__)


@dataclass
class RankerStats:
    enqueued: int = 0
    filtered: int = 0
    delivered: int = 0
    noise_discarded: int = 0
    dangling_discarded: int = 0
    stalls: int = 0
    swaps: int = 0
    horizon_extensions: int = 0
    max_buffered: int = 0

    def to_dict(self) -> Dict[str, int]:
        return asdict(self)


class ActivityQueues:
    """One FIFO queue per log source, in sorted source order.

    ``window_start`` is the smallest local timestamp not yet delivered,
    ``window_end`` the furthest local timestamp fetched so far.
    """

    def __init__(self, streams: Mapping[str, Iterable[Activity]]):
        self.nodes: List[str] = sorted(streams)
        self.queues: List[Deque[Activity]] = [deque() for _ in self.nodes]
        self._streams: List[Iterator[Activity]] = [iter(streams[node]) for node in self.nodes]
        self._next: List[Optional[Activity]] = [next(stream, None) for stream in self._streams]
        self.window_start: Optional[int] = None
        self.window_end: Optional[int] = None
        # SEND-like activities buffered per channel, for the noise check
        self.buffered_sends: Counter = Counter()
        self.buffered = 0

    def __len__(self) -> int:
        return self.buffered

    def heads(self) -> List[Tuple[int, Activity]]:
        return [(i, q[0]) for i, q in enumerate(self.queues) if q]

    @property
    def exhausted(self) -> bool:
        return all(a is None for a in self._next)

    def earliest_pending(self, empty_only: bool = False) -> Optional[int]:
        """Timestamp of the next unread activity, optionally only for empty queues."""
        stamps = [
            a.timestamp for i, a in enumerate(self._next)
            if a is not None and not (empty_only and self.queues[i])
        ]
        return min(stamps, default=None)

    def lowest_timestamp(self) -> Optional[int]:
        stamps = [q[0].timestamp for q in self.queues if q]
        stamps.extend(a.timestamp for a in self._next if a is not None)
        return min(stamps, default=None)

    def pop(self, index: int, depth: int = 0) -> Activity:
        queue = self.queues[index]
        if depth == 0:
            activity = queue.popleft()
        else:
            activity = queue[depth]
            del queue[depth]
        self.buffered -= 1
        if activity.activity_type.is_send_like:
            channel = activity.channel
            self.buffered_sends[channel] -= 1
            if self.buffered_sends[channel] <= 0:
                del self.buffered_sends[channel]
        return activity

    def move_to_head(self, index: int, depth: int) -> None:
        queue = self.queues[index]
        activity = queue[depth]
        del queue[depth]
        queue.appendleft(activity)

    def _take(self, index: int) -> Activity:
        activity = self._next[index]
        self._next[index] = next(self._streams[index], None)
        return activity

    def _enqueue(self, index: int, activity: Activity) -> None:
        self.queues[index].append(activity)
        self.buffered += 1
        if activity.activity_type.is_send_like:
            self.buffered_sends[activity.channel] += 1


def fetch_window(
    queues: ActivityQueues,
    config: RankerConfig,
    stats: Optional[RankerStats] = None,
    until: Optional[int] = None,
) -> int:
    """Buffer every unread activity up to the window end.

    The window end is ``window_start + window_ns``, or ``until`` when that
    is later; it never moves back. Activities matching an attribute filter
    are dropped instead of enqueued. Returns the number of activities read.
    """
    stats = stats if stats is not None else RankerStats()
    if queues.window_start is None:
        queues.window_start = queues.earliest_pending()
        if queues.window_start is None:
            return 0
    target = queues.window_start + config.window_ns
    if until is not None:
        target = max(target, until)
    queues.window_end = target if queues.window_end is None else max(queues.window_end, target)

    fetched = 0
    for index in range(len(queues.nodes)):
        while queues._next[index] is not None and queues._next[index].timestamp <= queues.window_end:
            activity = queues._take(index)
            fetched += 1
            if config.is_filtered(activity):
                stats.filtered += 1
                continue
            queues._enqueue(index, activity)
            stats.enqueued += 1
    stats.max_buffered = max(stats.max_buffered, queues.buffered)
    return fetched


class Ranker:
    """Yields candidate activities in an order the engine can correlate."""

    def __init__(
        self,
        streams: Mapping[str, Iterable[Activity]],
        config: RankerConfig,
        mmap_view: MessageIndexView,
    ):
        self.config = config
        self.mmap = mmap_view
        self.stats = RankerStats()
        self.queues = ActivityQueues(streams)
        fetch_window(self.queues, config, self.stats)

    def __iter__(self) -> Iterator[Activity]:
        while True:
            activity = self.rank()
            if activity is None:
                return
            yield activity

    def rank(self) -> Optional[Activity]:
        """Pop and return the next candidate, or None at end of stream."""
        while True:
            index = self._select()
            if index is not None:
                activity = self.queues.pop(index)
                self.stats.delivered += 1
                self._slide()
                return activity
            if not self._handle_stall():
                return None

    def _matched(self, activity: Activity) -> bool:
        return self.mmap.outstanding(activity.channel) >= activity.size

    def _select(self) -> Optional[int]:
        matched: Optional[Tuple[int, int]] = None
        lowest: Optional[Tuple[int, int, int]] = None
        for index, head in self.queues.heads():
            if head.activity_type is ActivityType.RECEIVE:
                if self._matched(head):
                    key = (head.timestamp, index)
                    if matched is None or key < matched:
                        matched = key
                continue
            key = (head.activity_type.priority, head.timestamp, index)
            if lowest is None or key < lowest:
                lowest = key
        if matched is not None:
            return matched[1]
        if lowest is not None:
            return lowest[2]
        return None

    def _slide(self) -> None:
        start = self.queues.lowest_timestamp()
        if start is None:
            return
        self.queues.window_start = start
        fetch_window(self.queues, self.config, self.stats)

    def _handle_stall(self) -> bool:
        """Make progress when no head can be delivered. False at end of stream."""
        queues = self.queues
        heads = queues.heads()
        if not heads and queues.exhausted:
            return False
        self.stats.stalls += 1

        pending = queues.earliest_pending(empty_only=True)
        if pending is not None:
            fetch_window(queues, self.config, self.stats, until=pending)
            return True

        horizon = max(head.timestamp for _, head in heads) + self.config.skew_tolerance_ns
        if queues.window_end is None or queues.window_end < horizon:
            self.stats.horizon_extensions += 1
            if fetch_window(queues, self.config, self.stats, until=horizon):
                return True

        if self.config.resolve_stalls and self.resolve_stall(self.config.swap_lookahead):
            return True

        for index, head in heads:
            if self.is_noise(head):
                queues.pop(index)
                self.stats.noise_discarded += 1
                logger.debug("discarded noise %s", head.ref)
                self._slide()
                return True

        pending = queues.earliest_pending()
        if pending is not None:
            fetch_window(queues, self.config, self.stats, until=pending)
            return True

        index, head = heads[0]
        queues.pop(index)
        self.stats.dangling_discarded += 1
        logger.debug("discarded dangling receive %s", head.ref)
        self._slide()
        return True

    def resolve_stall(self, lookahead: int) -> bool:
        """Move a SEND matching a stalled head RECEIVE to the head of its queue.

        Only activities within ``lookahead`` positions behind a queue head
        are considered, and a SEND never moves ahead of an activity of its
        own context. Returns whether a swap was made.
        """
        queues = self.queues
        heads = queues.heads()
        if not heads or any(head.activity_type is not ActivityType.RECEIVE for _, head in heads):
            return False
        for _, head in heads:
            for index, queue in enumerate(queues.queues):
                for depth in range(1, min(lookahead, len(queue) - 1) + 1):
                    candidate = queue[depth]
                    if not candidate.activity_type.is_send_like or candidate.channel != head.channel:
                        continue
                    if any(queue[k].context == candidate.context for k in range(depth)):
                        break
                    queues.move_to_head(index, depth)
                    self.stats.swaps += 1
                    logger.debug("moved %s ahead of %s", candidate.ref, queue[1].ref)
                    return True
        return False

    def is_noise(self, activity: Activity) -> bool:
        """A RECEIVE nothing in the engine or the buffer could ever match."""
        if activity.activity_type is not ActivityType.RECEIVE:
            return False
        channel = activity.channel
        return self.mmap.outstanding(channel) == 0 and self.queues.buffered_sends.get(channel, 0) == 0
