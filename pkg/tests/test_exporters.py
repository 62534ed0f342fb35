from conftest import one_tier_cag, two_tier_cag

from bbpt.analysis.report import analyze
from bbpt.exporters.cags import CagExporter, FlushReportExporter
from bbpt.exporters.manifest import ManifestExporter
from bbpt.exporters.reports import DotExporter, PatternsExporter, SegmentsCsvExporter, TextReportExporter
from bbpt.models.manifest import RunManifest
from bbpt.utils.file_utils import read_json


def mixed_result():
    cags = [two_tier_cag(n=n) for n in range(120)] + [two_tier_cag(n=120, keep_end=False)]
    return analyze(cags)


def test_text_report_lists_deformed_patterns():
    text = TextReportExporter(mixed_result()).generate()
    assert 'count 120' in text
    assert 'java2java' in text
    assert 'overlapped' in text and 'cross-node' in text
    assert 'deformed patterns: 1' in text
    assert 'no END' in text


def test_text_report_without_deformed_patterns():
    text = TextReportExporter(analyze([one_tier_cag(100)])).generate()
    assert text.endswith('deformed patterns: 0\n')
    assert '100.0%' in text


def test_segments_csv():
    rows = SegmentsCsvExporter(mixed_result()).generate().splitlines()
    assert rows[0] == 'pattern,segment,kind,mean_ns,pct,critical,cross_node'
    assert len(rows) == 1 + 6
    assert any(row.split(',')[4] == '' for row in rows[1:])


def test_dot_marks_message_edges_dashed():
    result = mixed_result()
    pattern_id = result.patterns[0].id
    exporter = DotExporter(result.averages[pattern_id], result.reports[pattern_id])
    source = exporter.generate()
    assert exporter.get_output_filename() == f'pattern-{pattern_id}.dot'
    assert source.count('style=dashed') == 2
    assert source.count('style=solid') == 4
    assert '46.0%' in source


def test_json_exporters_write_files(tmp_path):
    result = mixed_result()
    path = PatternsExporter(result).write_to_file(tmp_path)
    document = read_json(path)
    assert document['counters']['deformed_patterns'] == 1
    assert document['counters']['patterns'] == len(document['patterns']) == 2
    assert [p['count'] for p in document['patterns']] == [120, 1]
    assert 'latency' in document['patterns'][0]
    assert 'latency' not in document['patterns'][1]

    cags = [two_tier_cag(n=1), two_tier_cag(n=0)]
    assert [c['id'] for c in read_json(CagExporter(cags).write_to_file(tmp_path))['cags']] == ['web1:0', 'web1:6']
    assert read_json(FlushReportExporter({'cags_complete': 2}).write_to_file(tmp_path)) == {'cags_complete': 2}


def test_manifest_flags_inconsistent_counters(tmp_path):
    counters = {'activities_read': 10, 'correlated': 6, 'noise_discarded': 2, 'orphaned': 1}
    document = read_json(ManifestExporter(RunManifest('correlate', counters=counters)).write_to_file(tmp_path))
    assert document['counters_consistent'] is False
    assert document['tool_version']
