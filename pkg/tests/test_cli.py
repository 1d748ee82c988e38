import json
from pathlib import Path

import pytest

from scripts.run_fedocheck import EXIT_PASS, EXIT_USAGE, main

CORPUS = Path(__file__).resolve().parents[1] / 'scripts' / 'exprlang' / 'corpus'


def _report(path):
    with open(path, 'r', encoding='utf-8') as f:
        return json.load(f)


def test_dims_writes_json_report(tmp_path):
    out = tmp_path / 'dims.json'
    code = main(['dims', '--p', '2', '--weight', '2', '--dim', '2', '--threads', '1', '--seed', '7',
                 '--out', str(out)])
    assert code == EXIT_PASS
    report = _report(out)
    assert report['passed'] is True
    assert report['seeds'] == [7]
    check = report['checks'][0]
    assert check['name'] == 'dims.T(p=2, delta=2)[2]'
    assert check['status'] == 'measured'
    assert check['payload']['total'] == 1


def test_odd_weight_is_a_usage_error(tmp_path):
    out = tmp_path / 'odd.json'
    assert main(['dims', '--p', '0', '--weight', '-3', '--dim', '2', '--out', str(out)]) == EXIT_USAGE
    report = _report(out)
    assert report['checks'][-1]['name'] == 'dims.error'
    assert report['checks'][-1]['payload']['error'] == 'UsageError'


def test_odd_dimension_and_float_ranks_are_rejected():
    assert main(['dims', '--p', '0', '--weight', '-4', '--dim', '3']) == EXIT_USAGE
    assert main(['dims', '--p', '0', '--weight', '-4', '--dim', '2', '--field', 'float']) == EXIT_USAGE


def test_missing_required_flag_exits_from_argparse():
    with pytest.raises(SystemExit):
        main(['dims', '--p', '0'])


def test_verify_suites_in_dimension_two():
    assert main(['verify', '--suite', 'scalar', '--dim', '2', '--trials', '2', '--threads', '1']) == EXIT_PASS
    assert main(['verify', '--suite', 'chern', '--dim', '2', '--trials', '2', '--threads', '1']) == EXIT_PASS


def test_eval_reports_components(tmp_path):
    out = tmp_path / 'eval.json'
    code = main(['eval', str(CORPUS / 'omega.ten'), '--dim', '2', '--structure', 'flat', '--out', str(out)])
    assert code == EXIT_PASS
    check = _report(out)['checks'][0]
    assert check['name'] == 'eval.omega'
    assert (check['payload']['p'], check['payload']['delta']) == (2, 2)
    assert check['payload']['components'] == {'0,1': '1', '1,0': '-1'}


def test_eval_rejects_bad_inputs(tmp_path):
    omega = str(CORPUS / 'omega.ten')
    assert main(['eval', omega, '--dim', '2', '--structure', 'curved']) == EXIT_USAGE
    assert main(['eval', str(tmp_path / 'missing.ten'), '--dim', '2']) == EXIT_USAGE
    bad = tmp_path / 'bad.ten'
    bad.write_text('omega[_a]\n', encoding='utf-8')
    assert main(['eval', str(bad), '--dim', '2']) == EXIT_USAGE


def test_reduce_accepts_aliases():
    assert main(['reduce', 'eq2', '--dim', '2', '--trials', '1', '--seed', '3']) == EXIT_PASS


def test_identities_without_identities_exits_cleanly(tmp_path):
    out = tmp_path / 'identities.json'
    code = main(['identities', '--p', '1', '--weight', '-2', '--dim', '2', '--threads', '1',
                 '--cert-dir', str(tmp_path / 'certs'), '--out', str(out)])
    assert code == EXIT_PASS
    check = _report(out)['checks'][0]
    assert check['payload']['dimension'] == 0
    assert not (tmp_path / 'certs').exists()


def test_reduce_asserts_the_restriction_where_the_identity_vanishes(tmp_path):
    out = tmp_path / 'reduce.json'
    assert main(['reduce', 'eq2', '--dim', '2', '--trials', '1', '--seed', '3', '--out', str(out)]) == EXIT_PASS
    checks = {c['name']: c for c in _report(out)['checks']}
    restriction = checks['reduce.scalar_identity_restriction_dim4_to_2']
    assert restriction['status'] == 'pass'
    assert restriction['payload']['zero'] == 1


def test_reduce_only_measures_the_restriction_elsewhere(tmp_path):
    out = tmp_path / 'reduce.json'
    assert main(['reduce', 'omega', '--dim', '2', '--trials', '1', '--seed', '3', '--out', str(out)]) == EXIT_PASS
    checks = {c['name']: c for c in _report(out)['checks']}
    assert checks['reduce.omega_restriction_dim4_to_2']['status'] == 'measured'


def test_unknown_builtin_is_a_usage_error(tmp_path):
    out = tmp_path / 'unknown.json'
    assert main(['reduce', 'pontryagin', '--dim', '2', '--out', str(out)]) == EXIT_USAGE
    assert _report(out)['checks'][-1]['payload']['error'] == 'UnknownNameError'


def test_internal_errors_are_not_reported_as_usage_errors(monkeypatch):
    def broken(args, settings):
        raise ValueError('internal failure')

    monkeypatch.setattr('scripts.run_fedocheck.cmd_dims', broken)
    with pytest.raises(ValueError, match='internal failure'):
        main(['dims', '--p', '0', '--weight', '-4', '--dim', '2'])
