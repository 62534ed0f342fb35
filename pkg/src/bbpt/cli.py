import argparse
import asyncio
import logging
import re
import sys
from pathlib import Path
from typing import List, Optional

from .analysis.accuracy import score_accuracy
from .analysis.report import analyze
from .correlator.session import correlate_directory
from .errors import ConfigError, TracerError
from .exporters.cags import CagExporter, FlushReportExporter
from .exporters.manifest import ManifestExporter
from .exporters.reports import DotExporter, PatternsExporter, SegmentsCsvExporter, TextReportExporter
from .models.cag import cags_from_document
from .models.config import AttributeFilter, CorrelatorConfig, SimulationConfig
from .models.ground_truth import GroundTruth
from .models.manifest import RunManifest
from .simulator.noise import SHARED_NOISE_CLIENT_IP
from .simulator.workload import generate
from .utils.constants import (
    CORRELATOR_CONFIG_FILE,
    GROUND_TRUTH_FILE,
    MISMATCH_FILE,
    SCORE_MANIFEST_FILE,
    NS_PER_MS,
    NS_PER_S,
    NS_PER_US,
)
from .utils.file_utils import (
    ensure_directory,
    read_json,
    read_yaml,
    write_node_logs,
    write_text,
    write_yaml,
)
from .validation import validate_correlator_config, validate_simulation_config

logger = logging.getLogger(__name__)

_DURATION = re.compile(r'^\s*(\d+)\s*(ns|us|ms|s)?\s*$')
_UNITS = {None: 1, 'ns': 1, 'us': NS_PER_US, 'ms': NS_PER_MS, 's': NS_PER_S}


def parse_duration(text: str) -> int:
    """Parse ``10ms``, ``1s``, ``500us`` or a bare number of nanoseconds."""
    match = _DURATION.match(text)
    if not match:
        raise argparse.ArgumentTypeError(f"not a duration: {text!r}")
    value = int(match.group(1)) * _UNITS[match.group(2)]
    if value <= 0:
        raise argparse.ArgumentTypeError("duration must be positive")
    return value


def load_simulation_config(config_path: Path, seed: Optional[int] = None) -> SimulationConfig:
    document = read_yaml(config_path)
    validate_simulation_config(document)
    if seed is not None:
        document['seed'] = seed
        document['workload'] = {**document['workload'], 'seed': seed}
    return SimulationConfig.from_dict(document)


def load_correlator_config(config_path: Optional[Path]) -> CorrelatorConfig:
    document = read_yaml(config_path) if config_path is not None else {}
    validate_correlator_config(document)
    return CorrelatorConfig.from_dict(document)


async def write_generated_run(config: SimulationConfig, out_dir: Path) -> List[Path]:
    """Simulate and write node logs, ground truth and the matching correlator config."""
    result = generate(config.topology, config.workload, config.disturbance)
    paths = await write_node_logs({node: result.log_lines(node) for node in result.logs}, out_dir)

    result.ground_truth.write(out_dir / GROUND_TRUTH_FILE)
    correlator = CorrelatorConfig(
        entry_ports=frozenset([config.topology.entry_port]),
        internal_hosts=frozenset(config.topology.host_ips + [SHARED_NOISE_CLIENT_IP]),
    )
    write_yaml(correlator.to_dict(), out_dir / CORRELATOR_CONFIG_FILE)
    logger.info("wrote %d activities for %d requests",
                result.activity_count, len(result.ground_truth.requests))
    return paths + [out_dir / GROUND_TRUTH_FILE, out_dir / CORRELATOR_CONFIG_FILE]


def cmd_generate(config_path: Path, out_dir: Path, seed: Optional[int] = None) -> RunManifest:
    config = load_simulation_config(config_path, seed)
    ensure_directory(out_dir)
    paths = asyncio.run(write_generated_run(config, out_dir))

    truth = GroundTruth.read(out_dir / GROUND_TRUTH_FILE)
    manifest = RunManifest(
        command='generate',
        config_paths={'simulation': str(config_path)},
        config=config.to_dict(),
        seed=config.seed,
        counters={
            'activities': len(truth.assignments),
            'requests': len(truth.requests),
            'noise_activities': truth.noise_count,
        },
        outputs=[p.name for p in paths],
    )
    ManifestExporter(manifest).write_to_file(out_dir)
    print(f"Generated {manifest.counters['requests']} requests "
          f"({manifest.counters['activities']} activities) in {out_dir}")
    return manifest


def cmd_correlate(
    log_dir: Path,
    config_path: Optional[Path],
    out_dir: Path,
    overrides: Optional[argparse.Namespace] = None,
) -> RunManifest:
    if config_path is None and (log_dir / CORRELATOR_CONFIG_FILE).exists():
        config_path = log_dir / CORRELATOR_CONFIG_FILE
    config = load_correlator_config(config_path)
    if overrides is not None:
        _apply_overrides(config, overrides)

    result = correlate_directory(log_dir, config)
    ensure_directory(out_dir)
    outputs = [
        CagExporter(result.cags).write_to_file(out_dir),
        FlushReportExporter(result.flush_report()).write_to_file(out_dir),
    ]
    manifest = RunManifest(
        command='correlate',
        config_paths={'correlator': str(config_path)} if config_path else {},
        counters=result.counters(),
        outputs=[p.name for p in outputs],
    )
    ManifestExporter(manifest).write_to_file(out_dir)
    if not manifest.consistent:
        logger.warning("activity counters do not add up: %s", manifest.counters)
    print(f"Correlated {manifest.counters['correlated']} activities into "
          f"{len(result.cags)} CAGs ({len(result.incomplete)} incomplete)")
    return manifest


def _apply_overrides(config: CorrelatorConfig, args: argparse.Namespace) -> None:
    if getattr(args, 'window', None) is not None:
        config.ranker.window_ns = args.window
    if getattr(args, 'entry_ports', None):
        config.entry_ports = frozenset(args.entry_ports)
    if getattr(args, 'filter', None):
        config.ranker.attribute_filters.extend(args.filter)
    if getattr(args, 'lookahead', None) is not None:
        config.ranker.swap_lookahead = args.lookahead
    if getattr(args, 'no_stall_resolution', False):
        config.ranker.resolve_stalls = False


def cmd_analyze(cag_file: Path, out_dir: Path, config_path: Optional[Path] = None) -> RunManifest:
    config = load_correlator_config(config_path)
    cags = cags_from_document(read_json(cag_file))
    result = analyze(cags, config.deformed_frequency, config.require_shape_anomaly)

    ensure_directory(out_dir)
    exporters = [PatternsExporter(result), TextReportExporter(result), SegmentsCsvExporter(result)]
    exporters += [DotExporter(result.averages[pid], report) for pid, report in result.reports.items()]
    outputs = [exporter.write_to_file(out_dir) for exporter in exporters]

    manifest = RunManifest(
        command='analyze',
        config_paths={'cags': str(cag_file), **({'correlator': str(config_path)} if config_path else {})},
        counters={'cags': len(cags), **result.counters()},
        outputs=[p.name for p in outputs],
    )
    ManifestExporter(manifest).write_to_file(out_dir)
    print(f"Found {len(result.patterns)} patterns ({len(result.deformed)} deformed) in {len(cags)} CAGs")
    return manifest


def cmd_score(cag_file: Path, ground_truth: Path, out_dir: Optional[Path] = None) -> RunManifest:
    if not ground_truth.is_file():
        raise FileNotFoundError(f"ground truth file '{ground_truth}' does not exist")
    cags = cags_from_document(read_json(cag_file))
    report = score_accuracy(cags, GroundTruth.read(ground_truth))

    out_dir = out_dir or cag_file.parent
    mismatches = out_dir / MISMATCH_FILE
    lines = report.mismatch_lines()
    write_text("".join(f"{line}\n" for line in lines), mismatches)
    print(f"accuracy {report.accuracy:.3f}")
    if lines:
        print(f"{len(lines)} mismatches written to {mismatches}", file=sys.stderr)
    manifest = RunManifest(
        command='score',
        config_paths={'cags': str(cag_file), 'ground_truth': str(ground_truth)},
        counters=report.to_dict(),
        outputs=[mismatches.name],
    )
    ManifestExporter(manifest, SCORE_MANIFEST_FILE).write_to_file(out_dir)
    return manifest


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='bbpt',
        description="Reconstruct request causal paths from kernel-level SEND/RECEIVE logs"
    )
    parser.add_argument('-v', '--verbose', action='store_true', help='log debug output to stderr')
    commands = parser.add_subparsers(dest='command', required=True)

    gen = commands.add_parser('generate', help='simulate a multi-tier service and write its logs')
    gen.add_argument('config', type=Path, help='simulation config (YAML)')
    gen.add_argument('out_dir', type=Path)
    gen.add_argument('--seed', type=int, help='override the config seed')

    cor = commands.add_parser('correlate', help='build CAGs from a directory of node logs')
    cor.add_argument('log_dir', type=Path)
    cor.add_argument('out_dir', type=Path)
    cor.add_argument('--config', type=Path, help=f'correlator config (default: <log_dir>/{CORRELATOR_CONFIG_FILE})')
    cor.add_argument('--window', type=parse_duration, help='sliding window, e.g. 10ms, 1s, 500us')
    cor.add_argument('--entry-ports', type=lambda s: [int(p) for p in s.split(',')],
                     help='comma-separated service entry ports')
    cor.add_argument('--filter', type=AttributeFilter.parse, action='append',
                     help='drop activities where KEY=VALUE (program_name, ip or port); repeatable')
    cor.add_argument('--lookahead', type=int, help='queue depth searched when heads stall')
    cor.add_argument('--no-stall-resolution', action='store_true', help='disable the head swap')

    ana = commands.add_parser('analyze', help='classify CAGs and report latency percentages')
    ana.add_argument('cag_file', type=Path)
    ana.add_argument('out_dir', type=Path)
    ana.add_argument('--config', type=Path, help='correlator config holding the deformity thresholds')

    sco = commands.add_parser('score', help='compare CAGs with ground truth')
    sco.add_argument('cag_file', type=Path)
    sco.add_argument('ground_truth', type=Path)
    sco.add_argument('--out-dir', type=Path, help='where to write mismatches (default: next to the CAG file)')
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI entry point."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        stream=sys.stderr,
        format='%(levelname)s %(name)s: %(message)s',
    )

    try:
        if args.command == 'generate':
            cmd_generate(args.config, args.out_dir, args.seed)
        elif args.command == 'correlate':
            cmd_correlate(args.log_dir, args.config, args.out_dir, args)
        elif args.command == 'analyze':
            cmd_analyze(args.cag_file, args.out_dir, args.config)
        else:
            cmd_score(args.cag_file, args.ground_truth, args.out_dir)
    except ConfigError as e:
        print(f"Error: invalid configuration: {e}", file=sys.stderr)
        return 1
    except (TracerError, OSError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == '__main__':
    sys.exit(main())
