"""
Artifact Service Module for CSV tables and their JSON sidecars.

Every experiment writes ``<name>.csv`` (one header row, then data rows)
and ``<name>.json`` describing how the table was produced: command,
flags, solver tolerances, truncation sizes and family parameters.
Phase-space grids are written as bare matrices whose axes are described
in the sidecar.

WHY: Tables are plot inputs and regression fixtures, so identical runs
must produce byte-identical files; floats are written with repr and
nothing time- or host-dependent enters either file.
"""

import csv
import json
import logging
import math
import os
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np


def format_value(value: Any) -> str:
    """Deterministic text form of one CSV cell."""
    if value is None:
        return ''
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return 'nan'
        if math.isinf(value):
            return 'inf' if value > 0 else '-inf'
        return repr(value)
    return str(value)


def complex_columns(name: str) -> List[str]:
    return [f'{name}_re', f'{name}_im']


def complex_cells(value: complex) -> List[float]:
    value = complex(value)
    return [value.real, value.imag]


def to_jsonable(value: Any) -> Any:
    """Convert numpy scalars, arrays and complex numbers for json.dumps."""
    if isinstance(value, dict):
        return {str(key): to_jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(item) for item in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(item) for item in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isfinite(value):
            return value
        return 'nan' if math.isnan(value) else ('inf' if value > 0 else '-inf')
    if isinstance(value, (complex, np.complexfloating)):
        return {'re': to_jsonable(value.real), 'im': to_jsonable(value.imag)}
    if value is None or isinstance(value, str):
        return value
    return str(value)


class ArtifactService:
    """
    Service class for writing experiment tables.

    Owns the output directory and the settings recorded in every sidecar.
    """

    def __init__(self, config: Dict[str, Any]):
        """
        Initialize artifact service.

        Args:
            config: Dictionary from Config.get_solver_config()
                   - output_dir: directory receiving CSV and JSON files
                   Remaining keys are copied into every sidecar as settings.
        """
        self.config = config
        self.output_dir = config.get('output_dir', 'output')
        self.logger = logging.getLogger(__name__)

    def settings(self) -> Dict[str, Any]:
        return {key: value for key, value in sorted(self.config.items()) if key != 'output_dir'}

    def write_table(self, name: str, header: Sequence[str], rows: Iterable[Sequence[Any]],
                    metadata: Optional[Dict[str, Any]] = None) -> Dict[str, str]:
        """
        Write ``<name>.csv`` and its ``<name>.json`` sidecar.

        Args:
            name: Base file name (no extension)
            header: Column names
            rows: Data rows in output order
            metadata: Extra sidecar content (command, flags, family, truncations)

        Returns:
            Dict with the csv and json paths

        Raises:
            ValueError: If a row length differs from the header
        """
        os.makedirs(self.output_dir, exist_ok=True)
        csv_path = os.path.join(self.output_dir, f'{name}.csv')
        json_path = os.path.join(self.output_dir, f'{name}.json')

        count = 0
        with open(csv_path, 'w', newline='', encoding='utf-8') as file:
            writer = csv.writer(file, lineterminator='\n')
            writer.writerow(header)
            for row in rows:
                if len(row) != len(header):
                    raise ValueError(f"Row {count} of {name} has {len(row)} cells, header has {len(header)}")
                writer.writerow([format_value(cell) for cell in row])
                count += 1

        sidecar = {'table': f'{name}.csv', 'columns': list(header), 'rows': count}
        self._write_sidecar(json_path, sidecar, metadata)

        self.logger.info(f"Wrote {count} rows to {csv_path}")
        return {'csv': csv_path, 'json': json_path}

    def write_matrix(self, name: str, matrix: np.ndarray, metadata: Optional[Dict[str, Any]] = None) -> Dict[str, str]:
        """
        Write a 2-D array as a header-less ``<name>.csv`` plus its sidecar.

        Row i of the file is matrix[i]; axis ranges and conventions belong
        in metadata.

        Raises:
            ValueError: If matrix is not two-dimensional
        """
        matrix = np.asarray(matrix)
        if matrix.ndim != 2:
            raise ValueError(f"{name} needs a 2-D array, got shape {matrix.shape}")
        os.makedirs(self.output_dir, exist_ok=True)
        csv_path = os.path.join(self.output_dir, f'{name}.csv')
        json_path = os.path.join(self.output_dir, f'{name}.json')

        with open(csv_path, 'w', newline='', encoding='utf-8') as file:
            writer = csv.writer(file, lineterminator='\n')
            for row in matrix:
                writer.writerow([format_value(cell) for cell in row])

        self._write_sidecar(json_path, {'table': f'{name}.csv', 'shape': list(matrix.shape)}, metadata)
        self.logger.info(f"Wrote {matrix.shape[0]}x{matrix.shape[1]} matrix to {csv_path}")
        return {'csv': csv_path, 'json': json_path}

    def _write_sidecar(self, path: str, sidecar: Dict[str, Any], metadata: Optional[Dict[str, Any]]) -> None:
        sidecar = dict(sidecar, settings=self.settings())
        sidecar.update(metadata or {})
        with open(path, 'w', encoding='utf-8') as file:
            json.dump(to_jsonable(sidecar), file, sort_keys=True, indent=2)
            file.write('\n')
