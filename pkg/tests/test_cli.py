"""Tests for argument parsing, exit codes and artifacts of the command-line application."""

import json
import os

import pytest

from app import build_parser, main, solver_settings
from config import get_config
from handlers.command_handler import parse_complex, parse_extension, parse_grid, parse_int_list
from services.errors import UsageError


def run(capsys, *argv):
    code = main(['--env', 'testing', *argv])
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 1
    return code, json.loads(lines[0])


class TestParsing:

    def test_grids(self):
        assert parse_grid('0.5, 0.25') == [0.5, 0.25]
        assert parse_grid('geom:1:0.01:3') == pytest.approx([1.0, 0.1, 0.01])
        assert parse_grid('harmonic:10:2') == pytest.approx([0.1, 0.05])

    @pytest.mark.parametrize('text', ['', 'geom:1:2', 'geom:1:0:3', '-1,0.5', 'harmonic:10:0', 'a,b', '0.1,inf'])
    def test_invalid_grids(self, text):
        with pytest.raises(UsageError):
            parse_grid(text)

    def test_complex(self):
        assert parse_complex('i') == 1j
        assert parse_complex('-i') == -1j
        assert parse_complex('0.5+1i') == 0.5 + 1j
        assert parse_complex('2') == 2
        with pytest.raises(UsageError):
            parse_complex('abc')

    def test_lists_and_extensions(self):
        assert parse_int_list('5,20, 50') == [5, 20, 50]
        with pytest.raises(UsageError):
            parse_int_list(',')
        assert parse_extension('inf').is_infinite
        with pytest.raises(UsageError):
            parse_extension('nan')

    def test_solver_overrides(self, tmp_path):
        args = build_parser().parse_args(['--weyl-tol', '1e-10', '--out', str(tmp_path), 'validate'])
        settings = solver_settings(get_config('testing'), args)
        assert settings['weyl_tol'] == 1e-10
        assert settings['output_dir'] == str(tmp_path)
        assert settings['quad_tol'] == get_config('testing').QUAD_TOL

    def test_subcommand_required(self):
        with pytest.raises(UsageError):
            build_parser().parse_args([])

    def test_extension_flag_is_not_a_prefix(self):
        args = build_parser().parse_args(['select', '--t', '0', '--E', '0', '--count', '1'])
        assert args.t == '0'
        assert args.solver_truncation_start is None
        assert args.solver_truncation_max is None

    def test_prefixes_are_rejected(self):
        with pytest.raises(UsageError):
            build_parser().parse_args(['--truncation', '100', 'validate'])
        with pytest.raises(UsageError):
            build_parser().parse_args(['squeeze', '--t-tar', '0'])


class TestExitCodes:

    def test_validate(self, capsys, tmp_path):
        code, payload = run(capsys, '--out', str(tmp_path), 'validate')
        assert code == 0
        assert payload['success'] is True
        assert payload['all_passed'] is True
        assert sorted(os.listdir(tmp_path)) == ['validate.csv', 'validate.json']
        with open(tmp_path / 'validate.json', encoding='utf-8') as file:
            sidecar = json.load(file)
        assert sidecar['command'] == 'validate'
        assert sidecar['family']['name'] == payload['family']

    def test_window_override(self, capsys, tmp_path):
        code, payload = run(capsys, '--hypothesis-window', '50', '--out', str(tmp_path), 'validate')
        assert code == 0
        assert payload['report']['window'] == 50

    def test_usage_error(self, capsys, tmp_path):
        code, payload = run(capsys, '--out', str(tmp_path), 'spiral', '--lambda-points', '0')
        assert code == 2
        assert payload['success'] is False
        assert payload['error'] == 'Usage Error'
        assert not os.path.exists(tmp_path / 'spiral.csv')

    def test_unknown_flag(self, capsys):
        code, payload = run(capsys, 'validate', '--bogus')
        assert code == 2
        assert payload['error'] == 'Usage Error'

    def test_invalid_override(self, capsys, tmp_path):
        code, payload = run(capsys, '--weyl-tol', '-1', '--out', str(tmp_path), 'validate')
        assert code == 2
        assert payload['error'] == 'Invalid Value'
        assert 'WEYL_TOL' in payload['message']
        assert not os.path.exists(tmp_path / 'validate.csv')

    def test_override_cannot_break_truncation_caps(self, capsys):
        code, payload = run(capsys, '--truncation-max', '1', 'validate')
        assert code == 2
        assert 'truncation' in payload['message']

    def test_missing_family_file(self, capsys, tmp_path):
        code, payload = run(capsys, '--family-file', str(tmp_path / 'absent.txt'), 'validate')
        assert code == 2
        assert payload['error'] == 'Family Definition Error'

    def test_computational_failure(self, capsys, tmp_path):
        code, payload = run(capsys, '--out', str(tmp_path), 'select', '--t', '0', '--E', '0', '--count', '1')
        assert code == 1
        assert payload['error'] == 'Hypothesis Violation'
        assert payload['details']['recomputed_t'] == 'inf'


class TestArtifacts:

    def test_bound_table(self, capsys, tmp_path):
        code, payload = run(capsys, '--out', str(tmp_path), '--family-file', 'families/squeezing_k4_h3_m0.txt',
                            'bound', '--n0', '5,20', '--lambda-grid', '0.05,0.02')
        assert code == 0
        with open(tmp_path / 'bound.csv', encoding='utf-8') as file:
            lines = file.read().splitlines()
        assert lines[0] == 'index,lambda,h,sup_r_5,sup_r_20,argmax,argmax_scaled,x0'
        assert len(lines) == 3
        assert set(payload['sup_r']) == {'5', '20'}
        for i, lam in enumerate([0.05, 0.02]):
            with open(tmp_path / f'bound_{i}.csv', encoding='utf-8') as file:
                profile = file.read().splitlines()
            assert profile[0] == 'n,abs_u,abs_psi_r,abs_w_r,r'
            assert profile[1].startswith('0,')
            with open(tmp_path / f'bound_{i}.json', encoding='utf-8') as file:
                assert json.load(file)['lam'] == lam
            assert str(tmp_path / f'bound_{i}.csv') in payload['files']

    def test_turning_profiles(self, capsys, tmp_path):
        code, payload = run(capsys, '--out', str(tmp_path), 'turning', '--lambda-grid', '0.01,0.005')
        assert code == 0
        assert sorted(name for name in os.listdir(tmp_path) if name.endswith('.csv')) == [
            'turning.csv', 'turning_0.csv', 'turning_1.csv']
        with open(tmp_path / 'turning_1.csv', encoding='utf-8') as file:
            rows = [line.split(',') for line in file.read().splitlines()[1:]]
        assert rows[0][2] == ''
        assert any(row[2] != '' for row in rows)

    def test_wigner_grids_are_matrices(self, capsys, tmp_path):
        code, payload = run(capsys, '--out', str(tmp_path), 'squeeze', '--count', '1', '--T', '0.5',
                            '--wigner-points', '11', '--wigner-extent', '4')
        assert code == 0
        for name in ('squeeze_wigner_limit', 'squeeze_wigner_final'):
            with open(tmp_path / f'{name}.csv', encoding='utf-8') as file:
                matrix = [line.split(',') for line in file.read().splitlines()]
            assert len(matrix) == 11
            assert all(len(row) == 11 for row in matrix)
            with open(tmp_path / f'{name}.json', encoding='utf-8') as file:
                sidecar = json.load(file)
            assert sidecar['shape'] == [11, 11]
            assert sidecar['x_range'] == [-4.0, 4.0]
            assert sidecar['p_range'] == [-4.0, 4.0]
            assert sidecar['resolution'] == pytest.approx([0.8, 0.8])
            assert sidecar['row_axis'] == 'x'
            assert 'vacuum variance 1/2' in sidecar['convention']

    def test_reruns_are_byte_identical(self, capsys, tmp_path):
        first, second = tmp_path / 'first', tmp_path / 'second'
        for out in (first, second):
            code, _ = run(capsys, '--out', str(out), 'eigencurves', '--levels', '0,1', '--lambda-grid', '0.5,0.1')
            assert code == 0
        for name in ('eigencurves.csv', 'eigencurves.json'):
            with open(first / name, 'rb') as a, open(second / name, 'rb') as b:
                assert a.read() == b.read()
