"""Tests for CSV tables and JSON sidecars."""

import json
import math

import numpy as np
import pytest

from services.artifact_service import complex_cells, complex_columns, format_value, to_jsonable


class TestFormatting:

    @pytest.mark.parametrize('value, text', [
        (None, ''),
        (True, 'true'),
        (np.bool_(False), 'false'),
        (7, '7'),
        (np.int64(-3), '-3'),
        (0.1, '0.1'),
        (np.float64(1e-300), '1e-300'),
        (math.nan, 'nan'),
        (-math.inf, '-inf'),
        ('even', 'even'),
    ])
    def test_format_value(self, value, text):
        assert format_value(value) == text

    def test_repr_round_trips(self):
        value = 1.0 / 3.0
        assert float(format_value(value)) == value

    def test_to_jsonable(self):
        data = to_jsonable({
            'z': 1 + 2j,
            'values': np.array([1.0, np.inf]),
            'count': np.int32(4),
            1: (None, 'x'),
        })
        assert data == {'z': {'re': 1.0, 'im': 2.0}, 'values': [1.0, 'inf'], 'count': 4, '1': [None, 'x']}
        json.dumps(data)

    def test_complex_columns(self):
        assert complex_columns('M') == ['M_re', 'M_im']
        assert complex_cells(0.5 - 2j) == [0.5, -2.0]


class TestWriteTable:

    def test_csv_and_sidecar(self, artifacts, settings):
        written = artifacts.write_table('demo', ['index', 'value'], [[0, 0.25], [1, math.inf]],
                                        {'command': 'demo', 'truncations': [64, 128]})
        with open(written['csv'], encoding='utf-8') as file:
            assert file.read() == 'index,value\n0,0.25\n1,inf\n'
        with open(written['json'], encoding='utf-8') as file:
            sidecar = json.load(file)
        assert sidecar['table'] == 'demo.csv'
        assert sidecar['columns'] == ['index', 'value']
        assert sidecar['rows'] == 2
        assert sidecar['truncations'] == [64, 128]
        assert 'output_dir' not in sidecar['settings']
        assert sidecar['settings']['truncation_max'] == settings['truncation_max']

    def test_row_length_mismatch(self, artifacts):
        with pytest.raises(ValueError):
            artifacts.write_table('broken', ['a', 'b'], [[1, 2], [3]])

    def test_identical_input_gives_identical_bytes(self, artifacts):
        first = artifacts.write_table('first', ['x'], [[0.1], [0.2]], {'flags': {'b': 1, 'a': 2}})
        second = artifacts.write_table('second', ['x'], [[0.1], [0.2]], {'flags': {'a': 2, 'b': 1}})
        with open(first['csv'], 'rb') as a, open(second['csv'], 'rb') as b:
            assert a.read() == b.read()
        with open(first['json'], encoding='utf-8') as a, open(second['json'], encoding='utf-8') as b:
            left, right = json.load(a), json.load(b)
        left.pop('table')
        right.pop('table')
        assert left == right

    def test_matrix_has_no_header(self, artifacts):
        written = artifacts.write_matrix('grid', np.array([[0.5, 1.0], [-0.25, 0.0]]), {'x_range': [-1.0, 1.0]})
        with open(written['csv'], encoding='utf-8') as file:
            assert file.read() == '0.5,1.0\n-0.25,0.0\n'
        with open(written['json'], encoding='utf-8') as file:
            sidecar = json.load(file)
        assert sidecar['shape'] == [2, 2]
        assert sidecar['x_range'] == [-1.0, 1.0]
        with pytest.raises(ValueError):
            artifacts.write_matrix('flat', np.zeros(3))
