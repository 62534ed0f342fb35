import pytest

from conftest import FakeMessageIndex, activity

from bbpt.correlator.ranker import ActivityQueues, Ranker, RankerStats, fetch_window
from bbpt.models.activity import ActivityType
from bbpt.models.config import AttributeFilter, RankerConfig
from bbpt.utils.constants import NS_PER_MS, NS_PER_S

B, S, E, R = ActivityType.BEGIN, ActivityType.SEND, ActivityType.END, ActivityType.RECEIVE
N1_TO_N2 = ('10.0.0.1', 40000, '10.0.0.2', 8080)
N2_TO_N1 = ('10.0.0.2', 41000, '10.0.0.1', 8080)
CLIENT = ('172.16.0.1', 50000, '10.0.0.1', 80)


def act(kind, ts, node, channel, seq, tid=1, size=100, program='prog'):
    return activity(kind, ts, node, program, tid, channel, size, seq)


def drain(ranker):
    return list(ranker)


def fig6_streams():
    """Each node's head RECEIVE waits for the SEND second in the other node's queue."""
    return {
        'n1': [
            act(R, 11, 'n1', N2_TO_N1, 0, tid=2),
            act(S, 12, 'n1', N1_TO_N2, 1, tid=1),
        ],
        'n2': [
            act(R, 11, 'n2', N1_TO_N2, 0, tid=2),
            act(S, 12, 'n2', N2_TO_N1, 1, tid=1),
        ],
    }


class TestFetchWindow:

    def test_window_starts_at_minimum(self):
        streams = {
            'n1': [act(S, 5000, 'n1', N1_TO_N2, 0)],
            'n2': [act(S, 9000, 'n2', N2_TO_N1, 0)],
        }
        queues = ActivityQueues(streams)
        fetch_window(queues, RankerConfig(window_ns=10 * NS_PER_MS))
        assert queues.window_start == 5000
        assert len(queues) == 2

    def test_only_activities_inside_the_window_are_buffered(self):
        streams = {'n1': [act(S, t, 'n1', N1_TO_N2, i) for i, t in enumerate((0, 500, 1000, 1001))]}
        queues = ActivityQueues(streams)
        fetch_window(queues, RankerConfig(window_ns=1000))
        assert [a.timestamp for a in queues.queues[0]] == [0, 500, 1000]

    def test_filtered_activity_is_never_enqueued(self):
        streams = {'n1': [
            act(R, 1, 'n1', N2_TO_N1, 0, program='ssh'),
            act(S, 2, 'n1', N1_TO_N2, 1),
        ]}
        config = RankerConfig(attribute_filters=[AttributeFilter('program_name', 'ssh')])
        stats = RankerStats()
        queues = ActivityQueues(streams)
        fetch_window(queues, config, stats)
        assert [a.context.program_name for a in queues.queues[0]] == ['prog']
        assert stats.filtered == 1 and stats.enqueued == 1

    @pytest.mark.parametrize('streams', [{}, {'n1': [], 'n2': []}])
    def test_empty_streams(self, streams):
        ranker = Ranker(streams, RankerConfig(), FakeMessageIndex())
        assert ranker.rank() is None


class TestRank:

    def test_rule_two_prefers_send_over_unmatched_receive(self):
        streams = {
            'n1': [act(S, 50, 'n1', N1_TO_N2, 0)],
            'n2': [act(R, 10, 'n2', N2_TO_N1, 0)],
        }
        ranker = Ranker(streams, RankerConfig(), FakeMessageIndex())
        assert ranker.rank().activity_type is S

    def test_rule_one_takes_matched_receive_first(self):
        streams = {
            'n1': [act(S, 10, 'n1', N1_TO_N2, 0)],
            'n2': [act(R, 50, 'n2', N2_TO_N1, 0)],
        }
        ranker = Ranker(streams, RankerConfig(), FakeMessageIndex({N2_TO_N1: 100}))
        assert ranker.rank().activity_type is R

    def test_rule_one_needs_enough_outstanding_bytes(self):
        streams = {
            'n1': [act(S, 10, 'n1', N1_TO_N2, 0)],
            'n2': [act(R, 5, 'n2', N2_TO_N1, 0, size=300)],
        }
        ranker = Ranker(streams, RankerConfig(), FakeMessageIndex({N2_TO_N1: 200}))
        assert ranker.rank().activity_type is S

    def test_begin_before_send(self):
        streams = {
            'n1': [act(S, 1, 'n1', N1_TO_N2, 0)],
            'n2': [act(B, 9, 'n2', CLIENT, 0)],
        }
        ranker = Ranker(streams, RankerConfig(), FakeMessageIndex())
        assert ranker.rank().activity_type is B

    def test_tie_goes_to_earlier_timestamp_then_queue_order(self):
        streams = {
            'n2': [act(S, 7, 'n2', N2_TO_N1, 0), act(S, 20, 'n2', N2_TO_N1, 1)],
            'n1': [act(S, 9, 'n1', N1_TO_N2, 0), act(S, 20, 'n1', N1_TO_N2, 1)],
        }
        ranker = Ranker(streams, RankerConfig(), FakeMessageIndex())
        order = [(a.source, a.timestamp) for a in drain(ranker)]
        assert order == [('n2', 7), ('n1', 9), ('n1', 20), ('n2', 20)]

    def test_empty_queue_is_refilled_beyond_the_window(self):
        streams = {
            'n1': [act(B, 0, 'n1', CLIENT, 0), act(S, 100, 'n1', N1_TO_N2, 1)],
            'n2': [act(R, 5 * NS_PER_S, 'n2', N1_TO_N2, 0)],
        }
        mmap = FakeMessageIndex({N1_TO_N2: 100})
        ranker = Ranker(streams, RankerConfig(window_ns=NS_PER_MS), mmap)
        assert [a.activity_type for a in drain(ranker)] == [B, S, R]

    def test_every_enqueued_activity_is_delivered_or_discarded(self):
        streams = fig6_streams()
        streams['n1'].append(act(R, 30, 'n1', ('198.51.100.7', 1, '10.0.0.1', 22), 2))
        ranker = Ranker(streams, RankerConfig(), FakeMessageIndex())
        delivered = drain(ranker)
        stats = ranker.stats
        assert stats.delivered == len(delivered)
        assert stats.enqueued == stats.delivered + stats.noise_discarded + stats.dangling_discarded


class TestResolveStall:

    def test_swap_moves_matching_send_to_head(self):
        ranker = Ranker(fig6_streams(), RankerConfig(), FakeMessageIndex())
        first = ranker.rank()
        assert first.activity_type is S and first.source == 'n2'
        assert ranker.stats.swaps == 1
        assert ranker.stats.dangling_discarded == 0

    def test_no_swap_without_a_stall(self):
        streams = fig6_streams()
        streams['n1'].insert(0, act(S, 1, 'n1', N1_TO_N2, 9, tid=5))
        ranker = Ranker(streams, RankerConfig(), FakeMessageIndex())
        assert ranker.resolve_stall(1) is False

    def test_send_beyond_lookahead_is_not_swapped(self):
        unrelated = ('10.0.0.2', 3, '10.0.0.9', 4)
        streams = {
            'n1': [act(R, 11, 'n1', N2_TO_N1, 0, tid=2)],
            'n2': [
                act(R, 11, 'n2', ('10.0.0.9', 4, '10.0.0.2', 3), 0, tid=2),
                act(S, 12, 'n2', unrelated, 1, tid=3),
                act(S, 13, 'n2', N2_TO_N1, 2, tid=1),
            ],
        }
        ranker = Ranker(streams, RankerConfig(), FakeMessageIndex())
        assert ranker.resolve_stall(1) is False
        assert ranker.resolve_stall(2) is True
        assert ranker.queues.queues[1][0].channel == N2_TO_N1

    def test_send_never_jumps_its_own_context(self):
        streams = {
            'n1': [act(R, 11, 'n1', N2_TO_N1, 0, tid=2)],
            'n2': [act(R, 11, 'n2', N1_TO_N2, 0, tid=1), act(S, 12, 'n2', N2_TO_N1, 1, tid=1)],
        }
        ranker = Ranker(streams, RankerConfig(), FakeMessageIndex())
        assert ranker.resolve_stall(1) is False

    def test_disabled_resolution_discards_a_dangling_head(self):
        config = RankerConfig(resolve_stalls=False)
        ranker = Ranker(fig6_streams(), config, FakeMessageIndex())
        first = ranker.rank()
        assert ranker.stats.swaps == 0
        assert ranker.stats.dangling_discarded == 1
        assert first.activity_type is S and first.source == 'n1'


class TestIsNoise:

    def test_receive_with_send_in_mmap(self):
        head = act(R, 1, 'n1', N2_TO_N1, 0)
        ranker = Ranker({'n1': [head]}, RankerConfig(), FakeMessageIndex({N2_TO_N1: 100}))
        assert ranker.is_noise(head) is False

    def test_receive_nobody_sent(self):
        head = act(R, 1, 'n1', N2_TO_N1, 0)
        ranker = Ranker({'n1': [head]}, RankerConfig(), FakeMessageIndex())
        assert ranker.is_noise(head) is True

    def test_receive_with_send_in_buffer(self):
        head = act(R, 1, 'n1', N2_TO_N1, 0)
        streams = {'n1': [head], 'n2': [act(R, 1, 'n2', CLIENT, 0), act(S, 2, 'n2', N2_TO_N1, 1)]}
        ranker = Ranker(streams, RankerConfig(), FakeMessageIndex())
        assert ranker.is_noise(head) is False

    def test_send_is_never_noise(self):
        send = act(S, 1, 'n1', N1_TO_N2, 0)
        ranker = Ranker({'n1': [send]}, RankerConfig(), FakeMessageIndex())
        assert ranker.is_noise(send) is False

    def test_stalled_noise_is_discarded(self):
        noise = act(R, 1, 'n1', ('198.51.100.7', 1, '10.0.0.1', 22), 0)
        send = act(S, 5, 'n1', N1_TO_N2, 1)
        ranker = Ranker({'n1': [noise, send]}, RankerConfig(), FakeMessageIndex())
        assert drain(ranker) == [send]
        assert ranker.stats.noise_discarded == 1
