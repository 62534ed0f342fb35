"""Activity records and the node log line format."""

from __future__ import annotations

import ipaddress
import re
from dataclasses import dataclass, field, replace
from enum import IntEnum
from typing import AbstractSet, Iterable, Iterator, NamedTuple, Optional, Tuple

from ..errors import MalformedLine


class ActivityType(IntEnum):
    """Activity types, valued by their ranking priority."""

    BEGIN = 0
    SEND = 1
    END = 2
    RECEIVE = 3

    @property
    def priority(self) -> int:
        return int(self)

    @property
    def wire_token(self) -> str:
        """Token written to a log line; BEGIN/END are correlator-side views."""
        if self is ActivityType.BEGIN:
            return "RECEIVE"
        if self is ActivityType.END:
            return "SEND"
        return self.name

    @property
    def is_send_like(self) -> bool:
        return self in (ActivityType.SEND, ActivityType.END)

    @property
    def is_receive_like(self) -> bool:
        return self in (ActivityType.RECEIVE, ActivityType.BEGIN)


# Empty-queue sentinel above every activity type.
MAX_PRIORITY = 4

Channel = Tuple[str, int, str, int]


class ActivityRef(NamedTuple):
    """Identity of one logged activity: its node log and line index."""

    source: str
    ingest_seq: int

    def __str__(self) -> str:
        return f"{self.source}:{self.ingest_seq}"

    @classmethod
    def parse(cls, text: str) -> "ActivityRef":
        source, _, seq = text.rpartition(":")
        return cls(source, int(seq))


@dataclass(frozen=True)
class ContextId:
    """Execution entity that produced an activity."""

    hostname: str
    program_name: str
    process_id: int
    thread_id: int

    def to_dict(self) -> dict:
        return {
            "hostname": self.hostname,
            "program_name": self.program_name,
            "process_id": self.process_id,
            "thread_id": self.thread_id,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ContextId":
        return cls(
            hostname=data["hostname"],
            program_name=data["program_name"],
            process_id=int(data["process_id"]),
            thread_id=int(data["thread_id"]),
        )


@dataclass(frozen=True)
class MessageId:
    """One TCP message (or message part) between two endpoints."""

    sender_ip: str
    sender_port: int
    receiver_ip: str
    receiver_port: int
    message_size: int

    def __post_init__(self):
        if self.message_size <= 0:
            raise ValueError(f"message_size must be positive, got {self.message_size}")
        for port in (self.sender_port, self.receiver_port):
            if not 0 <= port <= 65535:
                raise ValueError(f"port out of range: {port}")

    def channel(self) -> Channel:
        return (self.sender_ip, self.sender_port, self.receiver_ip, self.receiver_port)

    def reverse_channel(self) -> Channel:
        return (self.receiver_ip, self.receiver_port, self.sender_ip, self.sender_port)

    def to_dict(self) -> dict:
        return {
            "sender_ip": self.sender_ip,
            "sender_port": self.sender_port,
            "receiver_ip": self.receiver_ip,
            "receiver_port": self.receiver_port,
            "message_size": self.message_size,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MessageId":
        return cls(
            sender_ip=data["sender_ip"],
            sender_port=int(data["sender_port"]),
            receiver_ip=data["receiver_ip"],
            receiver_port=int(data["receiver_port"]),
            message_size=int(data["message_size"]),
        )


@dataclass(frozen=True)
class Activity:
    """One logged kernel send/receive interaction.

    ``source`` and ``ingest_seq`` locate the record in its node log and are
    not part of the activity's value.
    """

    activity_type: ActivityType
    timestamp: int
    context: ContextId
    message: MessageId
    source: str = field(default="", compare=False)
    ingest_seq: int = field(default=-1, compare=False)

    @property
    def ref(self) -> ActivityRef:
        return ActivityRef(self.source, self.ingest_seq)

    @property
    def channel(self) -> Channel:
        return self.message.channel()

    @property
    def size(self) -> int:
        return self.message.message_size

    def located(self, source: str, ingest_seq: int) -> "Activity":
        return replace(self, source=source, ingest_seq=ingest_seq)

    def with_type(self, activity_type: ActivityType) -> "Activity":
        return replace(self, activity_type=activity_type)

    def with_timestamp(self, timestamp: int) -> "Activity":
        return replace(self, timestamp=timestamp)

    def to_dict(self) -> dict:
        return {
            "type": self.activity_type.name,
            "timestamp": self.timestamp,
            "context": self.context.to_dict(),
            "message": self.message.to_dict(),
            "ref": str(self.ref),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Activity":
        ref = ActivityRef.parse(data["ref"])
        return cls(
            activity_type=ActivityType[data["type"]],
            timestamp=int(data["timestamp"]),
            context=ContextId.from_dict(data["context"]),
            message=MessageId.from_dict(data["message"]),
            source=ref.source,
            ingest_seq=ref.ingest_seq,
        )


_NUMBER = re.compile(r"\d+")
_ENDPOINTS = re.compile(r"([0-9.]+):(\d+)-([0-9.]+):(\d+)")
_FIELD_COUNT = 8


def _number(line: str, text: str, what: str) -> int:
    if not _NUMBER.fullmatch(text):
        raise MalformedLine(line, f"non-numeric {what}")
    return int(text)


def _ip(line: str, text: str) -> str:
    try:
        ipaddress.IPv4Address(text)
    except ValueError:
        raise MalformedLine(line, f"bad IPv4 address {text!r}") from None
    return text


def parse_activity(line: str) -> Activity:
    """Parse one record ``timestamp host program pid tid TYPE sip:sport-rip:rport size``."""
    try:
        line.encode("utf-8")
    except UnicodeEncodeError:
        raise MalformedLine(line, "undecodable bytes") from None
    fields = line.rstrip("\r\n").split(" ")
    if len(fields) != _FIELD_COUNT:
        raise MalformedLine(line, f"expected {_FIELD_COUNT} fields, got {len(fields)}")

    timestamp, hostname, program, pid, tid, type_token, endpoints, size = fields
    if type_token not in ("SEND", "RECEIVE"):
        raise MalformedLine(line, f"unknown activity type {type_token!r}")
    if not hostname or not program:
        raise MalformedLine(line, "empty hostname or program name")

    match = _ENDPOINTS.fullmatch(endpoints)
    if match is None:
        raise MalformedLine(line, "bad ip:port-ip:port channel")
    sender_ip, sender_port, receiver_ip, receiver_port = match.groups()

    message_size = _number(line, size, "message size")
    try:
        message = MessageId(
            sender_ip=_ip(line, sender_ip),
            sender_port=int(sender_port),
            receiver_ip=_ip(line, receiver_ip),
            receiver_port=int(receiver_port),
            message_size=message_size,
        )
    except ValueError as exc:
        raise MalformedLine(line, str(exc)) from None

    return Activity(
        activity_type=ActivityType[type_token],
        timestamp=_number(line, timestamp, "timestamp"),
        context=ContextId(
            hostname=hostname,
            program_name=program,
            process_id=_number(line, pid, "process id"),
            thread_id=_number(line, tid, "thread id"),
        ),
        message=message,
    )


def serialize_activity(activity: Activity) -> str:
    """Render an activity as one log line (without the newline)."""
    ctx = activity.context
    msg = activity.message
    return (
        f"{activity.timestamp} {ctx.hostname} {ctx.program_name} "
        f"{ctx.process_id} {ctx.thread_id} {activity.activity_type.wire_token} "
        f"{msg.sender_ip}:{msg.sender_port}-{msg.receiver_ip}:{msg.receiver_port} "
        f"{msg.message_size}"
    )


def classify_boundary(
    activity: Activity,
    entry_ports: AbstractSet[int],
    internal_hosts: AbstractSet[str],
) -> Activity:
    """Turn request-entry RECEIVEs into BEGIN and their replies into END.

    A RECEIVE on an entry port from a host outside the data center starts a
    request; a SEND from an entry port back to such a host stops it.
    """
    msg = activity.message
    if (
        activity.activity_type is ActivityType.RECEIVE
        and msg.receiver_port in entry_ports
        and msg.sender_ip not in internal_hosts
    ):
        return activity.with_type(ActivityType.BEGIN)
    if (
        activity.activity_type is ActivityType.SEND
        and msg.sender_port in entry_ports
        and msg.receiver_ip not in internal_hosts
    ):
        return activity.with_type(ActivityType.END)
    return activity


class LogReader:
    """Streams the activities of one node log file.

    Each yielded activity carries the file's node name as ``source`` and its
    0-based line index as ``ingest_seq``. Malformed lines are skipped and
    counted.
    """

    def __init__(
        self,
        source: str,
        lines: Iterable[str],
        entry_ports: AbstractSet[int] = frozenset(),
        internal_hosts: AbstractSet[str] = frozenset(),
    ):
        self.source = source
        self._lines = lines
        self.entry_ports = entry_ports
        self.internal_hosts = internal_hosts
        self.read = 0
        self.malformed = 0
        self.last_error: Optional[MalformedLine] = None

    def __iter__(self) -> Iterator[Activity]:
        for index, line in enumerate(self._lines):
            if not line.strip():
                continue
            try:
                activity = parse_activity(line)
            except MalformedLine as exc:
                self.malformed += 1
                self.last_error = exc
                continue
            self.read += 1
            activity = classify_boundary(activity, self.entry_ports, self.internal_hosts)
            yield activity.located(self.source, index)
