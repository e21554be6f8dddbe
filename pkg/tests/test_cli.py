import json
from pathlib import Path
import pytest

from quadomain.main import EXIT_CONFIG, EXIT_FAIL, EXIT_PASS, build_parser, main
from quadomain.storage.handler import REPORT_FILE, SUMMARY_FILE, TIMING_FILE, ReportStorage

HENON = {'schema_version': 1, 'kind': 'onepoint', 'mc_samples': 200_000,
         'automorphism': {'kind': 'henon', 'coefficients': [0, 0, 1]}}


def test_parser_requires_command():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])
    args = build_parser().parse_args(['onepoint', '--config', 'x.json', '--seed', '4'])
    assert args.seed == 4
    assert args.tolerance_scale == 1.0


def test_malformed_config_exits_before_output(write_config, tmp_path):
    out = tmp_path / "runs"
    config = write_config('{"schema_version": 1, "kind": ')
    assert main(['construct', '--config', str(config), '--out', str(out)]) == EXIT_CONFIG
    assert not out.exists()


def test_missing_config(tmp_path):
    out = tmp_path / "runs"
    assert main(['onepoint', '--config', str(tmp_path / "none.json"), '--out', str(out)]) == EXIT_CONFIG
    assert not out.exists()


def test_kind_mismatch(write_config, tmp_path):
    out = tmp_path / "runs"
    config = write_config(HENON)
    assert main(['construct', '--config', str(config), '--out', str(out)]) == EXIT_CONFIG
    assert not out.exists()


def test_empty_selftest_selection():
    assert main(['selftest', '--suites']) == EXIT_CONFIG


def test_selftest_prints_report(capsys, tmp_path):
    out = tmp_path / "runs"
    assert main(['selftest', '--suites', 'symmetry', '--out', str(out)]) == EXIT_PASS
    report = json.loads(capsys.readouterr().out)
    assert report['status'] == 'PASS'
    assert {c['domain'] for c in report['checks']} == {'disc', 'annulus', 'ball', 'polydisc'}
    runs = ReportStorage(out).list_runs()
    assert len(runs) == 1
    assert runs[0]['verdict'] == 'PASS'


def test_runs_listing(capsys, tmp_path):
    out = tmp_path / "runs"
    assert main(['runs', '--out', str(out)]) == EXIT_PASS
    assert capsys.readouterr().out == ''

    storage = ReportStorage(out)
    run = storage.create_run('construct')
    storage.write_report(run, {})
    storage.write_summary(run, False, 'injectivity')
    assert main(['runs', '--out', str(out)]) == EXIT_PASS
    line = capsys.readouterr().out.strip()
    assert 'construct' in line and 'FAIL injectivity' in line


@pytest.mark.slow
def test_onepoint_run_outputs(write_config, tmp_path):
    out = tmp_path / "runs"
    config = write_config(HENON)
    assert main(['onepoint', '--config', str(config), '--out', str(out)]) == EXIT_PASS
    assert main(['onepoint', '--config', str(config), '--out', str(out)]) == EXIT_PASS

    runs = sorted(p for p in out.iterdir() if p.is_dir())
    assert len(runs) == 2
    for run in runs:
        for name in (REPORT_FILE, TIMING_FILE, SUMMARY_FILE, 'points_source.csv', 'points_image.csv'):
            assert (run / name).exists()
        assert (run / SUMMARY_FILE).read_text() == 'PASS\n'
    # nothing clock dependent goes into the report
    assert (runs[0] / REPORT_FILE).read_text() == (runs[1] / REPORT_FILE).read_text()
    report = json.loads((runs[0] / REPORT_FILE).read_text())
    assert report['status'] == 'PASS'
    assert report['stages']['result']['identity']['passed']


@pytest.mark.slow
def test_onepoint_failure_is_reported(write_config, tmp_path):
    out = tmp_path / "runs"
    document = dict(HENON, automorphism={'kind': 'henon', 'coefficients': [0, 0, 1],
                                         'inject_jacobian_error': 1e-3})
    config = write_config(document)
    assert main(['onepoint', '--config', str(config), '--out', str(out), '--keep', '5']) == EXIT_FAIL
    run = next(out.iterdir())
    assert (run / SUMMARY_FILE).read_text() == 'FAIL jacobian\n'
    report = json.loads((run / REPORT_FILE).read_text())
    assert report['failure']['stage'] == 'jacobian'
    assert 'identity' not in report['stages']


@pytest.mark.slow
def test_construct_run_outputs_are_deterministic(tmp_path):
    out = tmp_path / "runs"
    config = Path(__file__).resolve().parent.parent / "configs" / "disc_disc.json"
    assert main(['construct', '--config', str(config), '--out', str(out)]) == EXIT_PASS
    assert main(['construct', '--config', str(config), '--out', str(out)]) == EXIT_PASS

    runs = sorted(p for p in out.iterdir() if p.is_dir())
    assert len(runs) == 2
    for name in (REPORT_FILE, 'points_source.csv', 'points_image.csv'):
        assert (runs[0] / name).read_text() == (runs[1] / name).read_text()
    assert (runs[0] / SUMMARY_FILE).read_text() == 'PASS\n'
    report = json.loads((runs[0] / REPORT_FILE).read_text())
    assert report['stages']['identity']['passed']
    assert set(json.loads((runs[0] / TIMING_FILE).read_text())['stages']) >= {'fit', 'collocation', 'identity'}
