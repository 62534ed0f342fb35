"""Validation functions for configuration documents."""

import ipaddress
from typing import Any, Dict

from .errors import ConfigError
from .models.config import FaultKind, WorkerModel

_FILTER_KEYS = ('program_name', 'ip', 'port')


def _require_mapping(value: Any, where: str) -> Dict:
    if not isinstance(value, dict):
        raise ConfigError(f"'{where}' must be a mapping")
    return value


def _require_int(value: Any, where: str, minimum: int = None) -> None:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"'{where}' must be an integer")
    if minimum is not None and value < minimum:
        raise ConfigError(f"'{where}' must be at least {minimum}, got {value}")


def _require_probability(value: Any, where: str) -> None:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not 0 <= value <= 1:
        raise ConfigError(f"'{where}' must be a number within [0, 1]")


def _require_port(value: Any, where: str) -> None:
    _require_int(value, where, minimum=0)
    if value > 65535:
        raise ConfigError(f"'{where}' is not a port: {value}")


def _require_ip(value: Any, where: str) -> None:
    try:
        ipaddress.IPv4Address(value)
    except (ipaddress.AddressValueError, ValueError):
        raise ConfigError(f"'{where}' must be an IPv4 address, got {value!r}") from None


def _validate_distribution(dist: Any, where: str) -> None:
    dist = _require_mapping(dist, where)
    if 'base_ns' not in dist:
        raise ConfigError(f"'{where}' missing required 'base_ns' field")
    _require_int(dist['base_ns'], f"{where}.base_ns", minimum=0)
    if 'jitter_ns' in dist:
        _require_int(dist['jitter_ns'], f"{where}.jitter_ns", minimum=0)


def validate_simulation_config(document: Any) -> None:
    """Validate the simulation document structure and content."""
    document = _require_mapping(document, 'simulation config')

    required_fields = ['topology', 'workload']
    missing_fields = [name for name in required_fields if name not in document]
    if missing_fields:
        raise ConfigError(f"Missing required fields: {', '.join(missing_fields)}")

    if 'seed' in document:
        _require_int(document['seed'], 'seed', minimum=0)

    # Validate topology
    topology = _require_mapping(document['topology'], 'topology')
    tiers = topology.get('tiers')
    if not isinstance(tiers, list) or not tiers:
        raise ConfigError("'topology.tiers' must be a non-empty list")
    hostnames = set()
    for i, tier in enumerate(tiers):
        where = f"topology.tiers[{i}]"
        tier = _require_mapping(tier, where)
        for name in ('hostname', 'ip', 'program_name'):
            if not isinstance(tier.get(name), str) or not tier[name].strip():
                raise ConfigError(f"'{where}.{name}' must be a non-empty string")
        if tier['hostname'] in hostnames:
            raise ConfigError(f"'{where}.hostname' repeats {tier['hostname']!r}")
        hostnames.add(tier['hostname'])
        _require_ip(tier['ip'], f"{where}.ip")
        model = tier.get('worker_model', WorkerModel.THREAD_POOL.value)
        if model not in {m.value for m in WorkerModel}:
            raise ConfigError(f"'{where}.worker_model' must be one of {[m.value for m in WorkerModel]}")
        if 'pool_size' in tier:
            _require_int(tier['pool_size'], f"{where}.pool_size", minimum=1)
    if 'entry_port' in topology:
        _require_port(topology['entry_port'], 'topology.entry_port')
    ports = topology.get('inter_tier_ports', [])
    if not isinstance(ports, list):
        raise ConfigError("'topology.inter_tier_ports' must be a list")
    if ports and len(ports) != len(tiers) - 1:
        raise ConfigError(f"'topology.inter_tier_ports' needs {len(tiers) - 1} ports, got {len(ports)}")
    for i, port in enumerate(ports):
        _require_port(port, f"topology.inter_tier_ports[{i}]")

    # Validate workload
    workload = _require_mapping(document['workload'], 'workload')
    for name in ('num_clients', 'requests_per_client'):
        if name not in workload:
            raise ConfigError(f"'workload' missing required '{name}' field")
        _require_int(workload[name], f"workload.{name}", minimum=1)
    service_times = workload.get('service_times')
    if not isinstance(service_times, list) or len(service_times) != len(tiers):
        raise ConfigError(f"'workload.service_times' must list one distribution per tier ({len(tiers)})")
    for i, dist in enumerate(service_times):
        _validate_distribution(dist, f"workload.service_times[{i}]")
    for name in ('think_time', 'network_delay'):
        if name in workload:
            _validate_distribution(workload[name], f"workload.{name}")
    for name in ('request_size', 'reply_size'):
        if name in workload:
            bounds = workload[name]
            if (not isinstance(bounds, list) or len(bounds) != 2
                    or any(isinstance(b, bool) or not isinstance(b, int) for b in bounds)
                    or not 1 <= bounds[0] <= bounds[1]):
                raise ConfigError(f"'workload.{name}' must be [min, max] with 1 <= min <= max")
    if 'part_gap_ns' in workload:
        _require_int(workload['part_gap_ns'], 'workload.part_gap_ns', minimum=0)
    for i, request_class in enumerate(workload.get('request_classes', [])):
        where = f"workload.request_classes[{i}]"
        request_class = _require_mapping(request_class, where)
        if not isinstance(request_class.get('name'), str):
            raise ConfigError(f"'{where}.name' must be a string")
        weight = request_class.get('weight', 1.0)
        if isinstance(weight, bool) or not isinstance(weight, (int, float)) or weight <= 0:
            raise ConfigError(f"'{where}.weight' must be a positive number")
        if request_class.get('depth') is not None:
            _require_int(request_class['depth'], f"{where}.depth", minimum=1)
            if request_class['depth'] > len(tiers):
                raise ConfigError(f"'{where}.depth' exceeds the {len(tiers)} tiers")
        if 'calls' in request_class:
            _require_int(request_class['calls'], f"{where}.calls", minimum=1)

    # Validate disturbance
    disturbance = document.get('disturbance') or {}
    disturbance = _require_mapping(disturbance, 'disturbance')
    skews = _require_mapping(disturbance.get('clock_skew_per_node', {}), 'disturbance.clock_skew_per_node')
    for host, skew in skews.items():
        if host not in hostnames:
            raise ConfigError(f"'disturbance.clock_skew_per_node' names unknown host {host!r}")
        _require_int(skew, f"disturbance.clock_skew_per_node.{host}")
    if 'noise_activity_count' in disturbance:
        _require_int(disturbance['noise_activity_count'], 'disturbance.noise_activity_count', minimum=0)
    for name in ('message_split_probability', 'shared_noise_fraction', 'drop_probability'):
        if name in disturbance:
            _require_probability(disturbance[name], f"disturbance.{name}")
    if 'max_split_parts' in disturbance:
        _require_int(disturbance['max_split_parts'], 'disturbance.max_split_parts', minimum=1)
    if disturbance.get('concurrency_interleave') and len(tiers) < 2:
        raise ConfigError("'disturbance.concurrency_interleave' needs at least two tiers")

    faults = list(disturbance.get('faults', []))
    if disturbance.get('delay_injection'):
        faults.append(disturbance['delay_injection'])
    for i, fault in enumerate(faults):
        where = f"disturbance.faults[{i}]"
        fault = _require_mapping(fault, where)
        for name in ('tier', 'added_ns'):
            if name not in fault:
                raise ConfigError(f"'{where}' missing required '{name}' field")
        _require_int(fault['added_ns'], f"{where}.added_ns", minimum=0)
        kind = fault.get('kind', FaultKind.PROCESSING.value)
        if kind not in {k.value for k in FaultKind}:
            raise ConfigError(f"'{where}.kind' must be one of {[k.value for k in FaultKind]}")
        limit = len(tiers) - 1 if kind == FaultKind.LINK.value else len(tiers)
        _require_int(fault['tier'], f"{where}.tier", minimum=0)
        if fault['tier'] >= limit:
            raise ConfigError(f"'{where}.tier' is outside the topology")


def validate_correlator_config(document: Any) -> None:
    """Validate the correlator document structure and content."""
    document = _require_mapping(document, 'correlator config')

    ports = document.get('entry_ports', [])
    if not isinstance(ports, list):
        raise ConfigError("'entry_ports' must be a list")
    for i, port in enumerate(ports):
        _require_port(port, f"entry_ports[{i}]")
    hosts = document.get('internal_hosts', [])
    if not isinstance(hosts, list):
        raise ConfigError("'internal_hosts' must be a list")
    for i, host in enumerate(hosts):
        _require_ip(host, f"internal_hosts[{i}]")

    if 'window_ns' in document:
        _require_int(document['window_ns'], 'window_ns', minimum=1)
    if 'lookahead' in document:
        _require_int(document['lookahead'], 'lookahead', minimum=1)
    if 'skew_tolerance_ns' in document:
        _require_int(document['skew_tolerance_ns'], 'skew_tolerance_ns', minimum=0)
    if 'deformed_frequency' in document:
        _require_probability(document['deformed_frequency'], 'deformed_frequency')
    for name in ('resolve_stalls', 'require_shape_anomaly'):
        if name in document and not isinstance(document[name], bool):
            raise ConfigError(f"'{name}' must be true or false")

    filters = document.get('filters', [])
    if not isinstance(filters, list):
        raise ConfigError("'filters' must be a list")
    for i, entry in enumerate(filters):
        if not isinstance(entry, dict) or len(entry) != 1:
            raise ConfigError(f"'filters[{i}]' must map exactly one attribute to a value")
        (attribute, value), = entry.items()
        if attribute not in _FILTER_KEYS:
            raise ConfigError(f"'filters[{i}]' attribute must be one of {list(_FILTER_KEYS)}")
        if attribute == 'port':
            _require_port(value, f"filters[{i}].port")
