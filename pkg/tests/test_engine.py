import pytest

from conftest import activity, two_tier_request

from bbpt.correlator.engine import CorrelationEngine, MessageIndex
from bbpt.models.activity import ActivityType
from bbpt.models.cag import CAG, CagStatus, Vertex, validate_cag

B, S, E, R = ActivityType.BEGIN, ActivityType.SEND, ActivityType.END, ActivityType.RECEIVE
CLIENT = ('172.16.0.1', 51234, '10.0.0.1', 80)
REPLY = ('10.0.0.1', 80, '172.16.0.1', 51234)
CALL = ('10.0.0.1', 45000, '10.0.0.2', 8080)


def in_time_order(*requests):
    merged = []
    for request in requests:
        for activities in request.values():
            merged.extend(activities)
    return sorted(merged, key=lambda a: a.timestamp)


def run(activities):
    engine = CorrelationEngine()
    cags = list(engine.correlate(activities))
    return engine, cags


def web(kind, ts, channel, size, seq, tid=11):
    return activity(kind, ts, 'web1', 'httpd', tid, channel, size, seq)


def app(kind, ts, channel, size, seq, tid=21):
    return activity(kind, ts, 'app1', 'java', tid, channel, size, seq)


def assert_balanced(engine, delivered):
    assert engine.stats.correlated + engine.stats.orphaned == delivered


class TestTwoTierRequest:

    def test_edges(self):
        engine, cags = run(in_time_order(two_tier_request()))
        assert len(cags) == 1
        cag = cags[0]
        assert cag.status is CagStatus.COMPLETE
        assert len(cag.vertices) == 6
        assert len(cag.context_edges) == 4
        assert len(cag.message_edges) == 2
        assert validate_cag(cag) == []
        assert_balanced(engine, 6)

    def test_root_and_end(self):
        _, (cag,) = run(in_time_order(two_tier_request()))
        assert cag.root.activity_type is B
        assert cag.end.activity_type is E
        assert cag.id == 'web1:0'
        assert [v.activity_type for v in cag.canonical_order()] == [B, S, R, E, R, S]

    def test_response_receive_has_both_parents(self):
        _, (cag,) = run(in_time_order(two_tier_request()))
        response = [v for v in cag.vertices if v.activity_type is R and v.source == 'web1'][0]
        assert response.parent_count == 2
        assert response.message_parent.source == 'app1'
        assert response.context_parent.activity_type is S


class TestMessageParts:

    def test_split_send_and_receive_merge(self):
        activities = [
            web(B, 100, CLIENT, 50, 0),
            web(S, 200, CALL, 300, 1),
            web(S, 210, CALL, 212, 2),
            app(R, 300, CALL, 200, 0),
            app(R, 305, CALL, 200, 1),
            app(R, 310, CALL, 112, 2),
        ]
        engine, (cag,) = run(activities)
        assert cag.status is CagStatus.INCOMPLETE
        send, receive = cag.message_edges[0]
        assert len(cag.message_edges) == 1
        assert send.size == receive.size == 512
        assert len(send.parts) == 2 and len(receive.parts) == 3
        assert send.timestamp == 200
        assert receive.timestamp == 310 and receive.first_timestamp == 300
        assert len(cag.vertices) == 3
        assert engine.stats.merged_sends == 1
        assert engine.stats.merged_receives == 2
        assert_balanced(engine, 6)

    def test_send_continued_after_its_first_bytes_arrived(self):
        activities = [
            web(B, 100, CLIENT, 50, 0),
            web(S, 200, CALL, 300, 1),
            app(R, 300, CALL, 300, 0),
            web(S, 400, CALL, 212, 2),
            app(R, 500, CALL, 212, 1),
        ]
        engine, (cag,) = run(activities)
        assert len(cag.vertices) == 3
        assert len(cag.message_edges) == 1
        send, receive = cag.message_edges[0]
        assert send.size == receive.size == 512
        assert [str(r) for r in receive.parts] == ['app1:0', 'app1:1']
        assert validate_cag(cag) == []
        assert_balanced(engine, 5)

    def test_unfinished_message_parts_are_orphaned_at_flush(self):
        activities = [
            web(B, 100, CLIENT, 50, 0),
            web(S, 200, CALL, 300, 1),
            app(R, 300, CALL, 200, 0),
        ]
        engine, (cag,) = run(activities)
        assert cag.status is CagStatus.INCOMPLETE
        assert engine.stats.correlated == 2
        assert engine.stats.orphaned == 1
        assert engine.stats.incomplete_flushed == 1


class TestContexts:

    def test_recycled_thread_gets_no_context_edge(self):
        first = two_tier_request(start=1000, tid=11, client_port=51000, call_port=45000, seq0=0)
        second = two_tier_request(start=1700, tid=12, client_port=51001, call_port=45001, seq0=10)
        engine, cags = run(in_time_order(first, second))
        assert [c.status for c in cags] == [CagStatus.COMPLETE, CagStatus.COMPLETE]
        later = next(c for c in cags if c.id == 'web1:10')
        app_receive = next(v for v in later.vertices if v.source == 'app1' and v.activity_type is R)
        assert app_receive.context_parent is None
        assert app_receive.message_parent is not None
        for cag in cags:
            assert validate_cag(cag) == []
            assert len(cag.vertices) == 6
        assert_balanced(engine, 12)

    def test_overlapping_begin_in_same_context(self):
        activities = [
            web(B, 100, CLIENT, 50, 0),
            web(B, 200, ('172.16.0.2', 40000, '10.0.0.1', 80), 50, 1),
            web(E, 300, ('10.0.0.1', 80, '172.16.0.2', 40000), 90, 2),
        ]
        engine, cags = run(activities)
        assert engine.stats.overlapped_requests == 1
        complete = [c for c in cags if c.is_complete]
        assert [c.id for c in complete] == ['web1:1']
        assert [c.id for c in cags if not c.is_complete] == ['web1:0']


class TestOrphans:

    def test_end_without_begin(self):
        engine, cags = run([web(E, 100, REPLY, 10, 0)])
        assert cags == []
        assert engine.stats.orphan_end == 1
        assert_balanced(engine, 1)

    def test_send_without_begin(self):
        engine, cags = run([web(S, 100, CALL, 10, 0)])
        assert cags == []
        assert engine.stats.orphan_send == 1
        assert len(engine.mmap) == 0

    def test_receive_without_send(self):
        engine, cags = run([app(R, 100, CALL, 10, 0)])
        assert cags == []
        assert engine.stats.unmatched_receive == 1
        assert_balanced(engine, 1)

    def test_receive_larger_than_owed(self):
        activities = [
            web(B, 100, CLIENT, 50, 0),
            web(S, 200, CALL, 100, 1),
            app(R, 300, CALL, 200, 0),
        ]
        engine, (cag,) = run(activities)
        assert engine.stats.byte_violations == 1
        assert CALL not in engine.mmap
        assert len(cag.vertices) == 2
        assert_balanced(engine, 3)

    def test_empty_input(self):
        engine, cags = run([])
        assert cags == []
        assert engine.stats.correlated == engine.stats.orphaned == 0


class TestMessageIndex:

    def make_send(self, ts=0):
        vertex = Vertex.of(web(S, ts, CALL, 100, ts))
        CAG.rooted_at(Vertex.of(web(B, ts, CLIENT, 10, ts + 1))).add_vertex(vertex)
        return vertex

    def test_open_accumulates_for_same_send(self):
        mmap = MessageIndex()
        send = self.make_send()
        assert mmap.open(CALL, send, 100) is None
        assert mmap.open(CALL, send, 50) is None
        assert mmap.outstanding(CALL) == 150

    def test_open_returns_replaced_entry(self):
        mmap = MessageIndex()
        first, second = self.make_send(0), self.make_send(10)
        mmap.open(CALL, first, 100)
        replaced = mmap.open(CALL, second, 40)
        assert replaced.send is first
        assert mmap.get(CALL).send is second
        assert mmap.outstanding(CALL) == 40

    def test_purge_drops_entries_of_a_cag(self):
        mmap = MessageIndex()
        send = self.make_send()
        mmap.open(CALL, send, 100)
        other = ('10.0.0.1', 45001, '10.0.0.2', 8080)
        mmap.open(other, self.make_send(10), 10)
        stale = mmap.purge(send.cag)
        assert [e.send for e in stale] == [send]
        assert CALL not in mmap and other in mmap

    def test_unknown_channel(self):
        mmap = MessageIndex()
        assert mmap.outstanding(CALL) == 0
        assert mmap.remove(CALL) is None


@pytest.mark.parametrize('start', [0, 10**12])
def test_correlate_yields_complete_cags_before_flush(start):
    engine = CorrelationEngine()
    stream = engine.correlate(in_time_order(two_tier_request(start=start)))
    first = next(stream)
    assert first.is_complete
    assert engine.in_progress == []
    assert list(stream) == []
