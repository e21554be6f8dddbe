import json
import shutil
import logging
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

logger = logging.getLogger(__name__)

REPORT_FILE = 'report.json'
TIMING_FILE = 'timing.json'
SUMMARY_FILE = 'summary.txt'
TIMESTAMP_FORMAT = '%Y%m%d_%H%M%S'


def to_jsonable(value: Any) -> Any:
    """Convert numpy scalars, arrays and complex numbers into plain JSON values."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        value = float(value)
    if isinstance(value, float) and not np.isfinite(value):
        return str(value)
    return value


class ReportStorage:
    """Owns the output directory of quadomain runs.

    Layout:
    - ``<root>/<kind>_<timestamp>/report.json``: deterministic report, sorted keys
    - ``timing.json``: wall-clock stage timings and the run timestamp
    - ``points_source.csv`` / ``points_image.csv``: point clouds for plotting
    - ``summary.txt``: one line, ``PASS`` or ``FAIL`` plus the failing stage

    Nothing in ``report.json`` depends on the clock, so repeated runs with the
    same configuration and seed produce identical files.
    """

    def __init__(self, root, retention: Optional[int] = None):
        self.root = Path(root)
        self.retention = retention

    def _ensure_root(self):
        self.root.mkdir(parents=True, exist_ok=True)
        logger.debug(f"Ensured report storage at {self.root}")

    def create_run(self, kind: str) -> Path:
        """Create a fresh run directory named after ``kind`` and the current time."""
        self._ensure_root()
        stem = f"{kind}_{datetime.now().strftime(TIMESTAMP_FORMAT)}"
        path = self.root / stem
        suffix = 1
        while path.exists():
            path = self.root / f"{stem}_{suffix}"
            suffix += 1
        path.mkdir()
        logger.info(f"Writing run outputs to {path}")
        return path

    def write_report(self, run: Path, report: Dict) -> Path:
        path = Path(run) / REPORT_FILE
        with open(path, 'w') as f:
            json.dump(to_jsonable(report), f, sort_keys=True, indent=2)
            f.write('\n')
        logger.info(f"Report written to {path}")
        return path

    def write_timing(self, run: Path, timings: Dict[str, float]) -> Path:
        path = Path(run) / TIMING_FILE
        with open(path, 'w') as f:
            json.dump({'finished': datetime.now().isoformat(), 'stages': to_jsonable(timings)}, f,
                      sort_keys=True, indent=2)
        return path

    def write_points(self, run: Path, name: str, points: np.ndarray) -> Path:
        """CSV with columns ``re(z1), im(z1), ...`` for one point cloud."""
        points = np.atleast_2d(np.asarray(points, dtype=complex))
        columns = np.empty((len(points), 2 * points.shape[1]))
        columns[:, 0::2] = points.real
        columns[:, 1::2] = points.imag
        header = ','.join(f"re(z{i + 1}),im(z{i + 1})" for i in range(points.shape[1]))
        path = Path(run) / f"points_{name}.csv"
        np.savetxt(path, columns, delimiter=',', header=header, comments='', fmt='%.17g')
        logger.debug(f"Wrote {len(points)} {name} points to {path}")
        return path

    def write_summary(self, run: Path, passed: bool, stage: Optional[str] = None) -> Path:
        path = Path(run) / SUMMARY_FILE
        line = 'PASS' if passed else f"FAIL {stage or 'unknown'}"
        path.write_text(line + '\n')
        return path

    def list_runs(self) -> List[Dict[str, Any]]:
        """All run directories with their verdicts, newest first."""
        runs = []
        try:
            for run in self.root.iterdir():
                if not run.is_dir() or not (run / REPORT_FILE).exists():
                    continue
                kind, _, stamp = run.name.partition('_')
                try:
                    timestamp = datetime.strptime(stamp[:15], TIMESTAMP_FORMAT)
                except ValueError:
                    continue
                summary = run / SUMMARY_FILE
                runs.append({
                    'path': str(run),
                    'kind': kind,
                    'timestamp': timestamp.isoformat(),
                    'age_days': (datetime.now() - timestamp).days,
                    'verdict': summary.read_text().strip() if summary.exists() else 'INCOMPLETE',
                })
        except OSError:
            return []
        return sorted(runs, key=lambda r: (r['timestamp'], r['path']), reverse=True)

    def prune(self, keep: Optional[int] = None) -> Dict[str, int]:
        """Delete the oldest runs beyond ``keep`` (the retention count by default)."""
        keep = self.retention if keep is None else keep
        result = {'deleted': 0, 'freed_kb': 0}
        if keep is None:
            return result
        for run in self.list_runs()[keep:]:
            path = Path(run['path'])
            try:
                size = sum(f.stat().st_size for f in path.rglob('*') if f.is_file())
                shutil.rmtree(path)
                result['deleted'] += 1
                result['freed_kb'] += size // 1024
            except OSError as e:
                logger.error(f"Failed to remove run {path}: {e}")
        if result['deleted']:
            logger.info(f"Pruned {result['deleted']} old runs ({result['freed_kb']} KB)")
        return result

    def get_storage_info(self) -> Optional[Dict[str, Any]]:
        """Disk usage of the output directory and the number of stored runs."""
        try:
            total, used, free = shutil.disk_usage(self.root)
        except OSError as e:
            logger.error(f"Failed to get storage info for {self.root}: {e}")
            return None
        return {'path': str(self.root), 'total_gb': total // (2 ** 30), 'free_gb': free // (2 ** 30),
                'runs': len(self.list_runs())}
