import copy
from pathlib import Path

import pytest

from bbpt.errors import ConfigError
from bbpt.models.config import CorrelatorConfig, FaultKind, SimulationConfig, WorkerModel
from bbpt.utils.file_utils import read_yaml
from bbpt.validation import validate_correlator_config, validate_simulation_config

EXAMPLE_CONFIG = Path(__file__).parent.parent / 'configs' / 'three_tier.yaml'


@pytest.fixture
def document():
    return read_yaml(EXAMPLE_CONFIG)


def test_example_config_is_valid(document):
    validate_simulation_config(document)
    config = SimulationConfig.from_dict(document)
    assert [t.hostname for t in config.topology.tiers] == ['web1', 'app1', 'db1']
    assert config.topology.tiers[0].worker_model is WorkerModel.PROCESS_POOL
    assert config.seed == 42
    assert config.workload.total_requests == 1000
    assert config.disturbance.clock_skew_per_node == {'app1': 1_000_000}
    assert [c.name for c in config.workload.request_classes] == ['view', 'browse']


def test_delay_injection_is_a_fault(document):
    document['disturbance']['delay_injection'] = {'tier': 1, 'added_ns': 1000}
    validate_simulation_config(document)
    fault = SimulationConfig.from_dict(document).disturbance.faults[0]
    assert (fault.tier, fault.added_ns, fault.kind) == (1, 1000, FaultKind.PROCESSING)


def test_minimal_document():
    document = {
        'topology': {'tiers': [{'hostname': 'web1', 'ip': '10.0.0.1', 'program_name': 'httpd'}]},
        'workload': {'num_clients': 1, 'requests_per_client': 1, 'service_times': [{'base_ns': 1000}]},
    }
    validate_simulation_config(document)
    config = SimulationConfig.from_dict(document)
    assert config.topology.inter_tier_ports == []
    assert config.disturbance.noise_activity_count == 0


def _broken(document, path, value):
    document = copy.deepcopy(document)
    *parents, leaf = path
    target = document
    for key in parents:
        target = target[key]
    if value is KeyError:
        del target[leaf]
    else:
        target[leaf] = value
    return document


@pytest.mark.parametrize('path,value,message', [
    (('topology',), KeyError, 'Missing required fields: topology'),
    (('topology', 'tiers'), [], 'non-empty list'),
    (('topology', 'tiers', 0, 'ip'), '10.0.0', 'IPv4'),
    (('topology', 'tiers', 1, 'hostname'), 'web1', 'repeats'),
    (('topology', 'tiers', 0, 'worker_model'), 'forking', 'worker_model'),
    (('topology', 'tiers', 0, 'pool_size'), 0, 'at least 1'),
    (('topology', 'entry_port'), 70000, 'not a port'),
    (('topology', 'inter_tier_ports'), [8080], 'needs 2 ports'),
    (('workload', 'num_clients'), 0, 'at least 1'),
    (('workload', 'requests_per_client'), True, 'integer'),
    (('workload', 'service_times'), [{'base_ns': 1}], 'one distribution per tier'),
    (('workload', 'think_time'), {'jitter_ns': 5}, 'base_ns'),
    (('workload', 'request_size'), [10, 5], 'min <= max'),
    (('workload', 'request_classes', 1, 'depth'), 4, 'exceeds'),
    (('workload', 'request_classes', 0, 'weight'), 0, 'positive'),
    (('disturbance', 'clock_skew_per_node'), {'db9': 5}, 'unknown host'),
    (('disturbance', 'noise_activity_count'), -1, 'at least 0'),
    (('disturbance', 'drop_probability'), 1.5, 'within [0, 1]'),
    (('disturbance', 'max_split_parts'), 0, 'at least 1'),
    (('disturbance', 'faults'), [{'tier': 3, 'added_ns': 1}], 'outside the topology'),
    (('disturbance', 'faults'), [{'tier': 2, 'added_ns': 1, 'kind': 'link'}], 'outside the topology'),
    (('disturbance', 'faults'), [{'tier': 0, 'added_ns': 1, 'kind': 'gc'}], 'kind'),
    (('disturbance', 'faults'), [{'added_ns': 1}], "'tier'"),
])
def test_invalid_simulation_config(document, path, value, message):
    with pytest.raises(ConfigError, match=message.replace('[', r'\[').replace(']', r'\]')):
        validate_simulation_config(_broken(document, path, value))


def test_interleaving_needs_two_tiers():
    document = {
        'topology': {'tiers': [{'hostname': 'web1', 'ip': '10.0.0.1', 'program_name': 'httpd'}]},
        'workload': {'num_clients': 1, 'requests_per_client': 1, 'service_times': [{'base_ns': 1}]},
        'disturbance': {'concurrency_interleave': True},
    }
    with pytest.raises(ConfigError, match='two tiers'):
        validate_simulation_config(document)


def test_not_a_mapping():
    with pytest.raises(ConfigError):
        validate_simulation_config(['topology'])


class TestCorrelatorConfig:

    def test_empty_document_uses_defaults(self):
        validate_correlator_config({})
        config = CorrelatorConfig.from_dict({})
        assert config.entry_ports == frozenset()
        assert config.ranker.resolve_stalls is True

    def test_round_trip(self):
        document = {
            'entry_ports': [80, 443],
            'internal_hosts': ['10.0.0.1', '10.0.0.2'],
            'window_ns': 1_000_000,
            'filters': [{'program_name': 'sshd'}, {'port': 22}],
            'lookahead': 2,
            'skew_tolerance_ns': 0,
            'resolve_stalls': False,
            'deformed_frequency': 0.05,
            'require_shape_anomaly': False,
        }
        validate_correlator_config(document)
        config = CorrelatorConfig.from_dict(document)
        assert config.to_dict() == document
        validate_correlator_config(config.to_dict())

    @pytest.mark.parametrize('document,message', [
        ({'entry_ports': 80}, 'must be a list'),
        ({'entry_ports': [-1]}, 'at least 0'),
        ({'internal_hosts': ['web1']}, 'IPv4'),
        ({'window_ns': 0}, 'at least 1'),
        ({'lookahead': 0}, 'at least 1'),
        ({'deformed_frequency': 2}, 'within'),
        ({'resolve_stalls': 'yes'}, 'true or false'),
        ({'filters': [{'uid': 0}]}, 'attribute must be one of'),
        ({'filters': [{'port': 22, 'ip': '10.0.0.1'}]}, 'exactly one'),
        ({'filters': [{'port': 'ssh'}]}, 'integer'),
    ])
    def test_invalid(self, document, message):
        with pytest.raises(ConfigError, match=message):
            validate_correlator_config(document)
