import json
import pytest
import numpy as np
from pathlib import Path

from quadomain.storage.handler import REPORT_FILE, SUMMARY_FILE, TIMING_FILE, ReportStorage, to_jsonable


@pytest.fixture
def storage(tmp_path):
    return ReportStorage(tmp_path / "runs")


def create_finished_run(storage, kind, passed=True, stage=None):
    """Helper to create a run directory with a report and a summary."""
    run = storage.create_run(kind)
    storage.write_report(run, {'kind': kind})
    storage.write_summary(run, passed, stage)
    return run


def test_to_jsonable():
    value = {'z': 1 + 2j, 'array': np.array([1.5, 2.5]), 'flag': np.bool_(True),
             'count': np.int64(3), 'bad': float('nan'), 'nested': [(np.float64(0.5), 1j)]}
    assert to_jsonable(value) == {'z': [1.0, 2.0], 'array': [1.5, 2.5], 'flag': True, 'count': 3,
                                  'bad': 'nan', 'nested': [[0.5, [0.0, 1.0]]]}
    json.dumps(to_jsonable(value))


def test_root_created_lazily(storage):
    assert not storage.root.exists()
    assert storage.list_runs() == []
    run = storage.create_run('construct')
    assert run.parent == storage.root
    assert run.name.startswith('construct_')


def test_run_names_unique(storage):
    first = storage.create_run('onepoint')
    second = storage.create_run('onepoint')
    assert first != second
    assert first.exists() and second.exists()


def test_report_is_sorted_json(storage):
    run = storage.create_run('construct')
    path = storage.write_report(run, {'b': 1, 'a': {'d': 1j, 'c': 2}})
    assert path == run / REPORT_FILE
    text = path.read_text()
    assert text.index('"a"') < text.index('"b"')
    assert json.loads(text) == {'a': {'c': 2, 'd': [0.0, 1.0]}, 'b': 1}


def test_timing_and_summary(storage):
    run = storage.create_run('onepoint')
    timing = json.loads(storage.write_timing(run, {'pullback': 1.25}).read_text())
    assert timing['stages'] == {'pullback': 1.25}
    assert 'finished' in timing
    assert (run / TIMING_FILE).exists()

    storage.write_summary(run, False, 'jacobian')
    assert (run / SUMMARY_FILE).read_text() == 'FAIL jacobian\n'
    storage.write_summary(run, True)
    assert (run / SUMMARY_FILE).read_text() == 'PASS\n'


def test_point_csv(storage):
    run = storage.create_run('construct')
    points = np.array([[0.5 + 0.25j, -1j], [0.0, 2.0]])
    path = storage.write_points(run, 'source', points)
    lines = path.read_text().splitlines()
    assert lines[0] == 're(z1),im(z1),re(z2),im(z2)'
    data = np.loadtxt(path, delimiter=',', skiprows=1)
    assert np.allclose(data, [[0.5, 0.25, 0.0, -1.0], [0.0, 0.0, 2.0, 0.0]])


def test_list_runs_with_verdicts(storage):
    create_finished_run(storage, 'construct', False, 'fit')
    create_finished_run(storage, 'onepoint')
    incomplete = storage.create_run('selftest')
    storage.write_report(incomplete, {})
    (storage.root / 'notes').mkdir()

    runs = storage.list_runs()
    assert len(runs) == 3
    verdicts = {Path(r['path']).name.split('_')[0]: r['verdict'] for r in runs}
    assert verdicts == {'construct': 'FAIL fit', 'onepoint': 'PASS', 'selftest': 'INCOMPLETE'}
    assert all(r['age_days'] == 0 for r in runs)


def test_prune_keeps_newest(storage):
    for _ in range(3):
        create_finished_run(storage, 'construct')
    newest = storage.list_runs()[0]['path']
    result = storage.prune(1)
    assert result['deleted'] == 2
    remaining = storage.list_runs()
    assert [r['path'] for r in remaining] == [newest]


def test_retention_default(tmp_path):
    storage = ReportStorage(tmp_path / "runs", retention=2)
    for _ in range(4):
        create_finished_run(storage, 'onepoint')
    assert storage.prune()['deleted'] == 2
    assert ReportStorage(tmp_path / "runs").prune() == {'deleted': 0, 'freed_kb': 0}


def test_storage_info(storage):
    create_finished_run(storage, 'construct')
    info = storage.get_storage_info()
    assert info['runs'] == 1
    assert info['free_gb'] >= 0
    assert ReportStorage(storage.root / 'missing').get_storage_info() is None
