import csv
import io
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Tuple

from app.data.repositories.base_repository import BaseFileRepository, PathLike
from app.data.schemas.enums.enums import CoverageTarget
from app.data.schemas.experiment_schema import AggregateReport, RiskRow, RunManifest, SweepPoint
from app.data.schemas.tensor_schema import CanonicalTriple
from app.data.schemas.uq_schema import ConfidenceInterval
from app.utils.json_util import to_json
from app.utils.string_util import round_trip


class ResultRepository(BaseFileRepository):
    """CSV and JSON outputs of the commands. Floats are written as shortest round-trip decimals."""

    def save_csv(self, path: PathLike, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([round_trip(value) if isinstance(value, float) else value for value in row])
        return self.write_text(path, buffer.getvalue())

    def save_json(self, path: PathLike, content: Dict) -> Path:
        return self.write_text(path, to_json(content) + '\n')

    def save_trajectory(self, path: PathLike, trajectory: Sequence[float]) -> Path:
        return self.save_csv(path, ('iteration', 'loss'), ((t, float(v)) for t, v in enumerate(trajectory)))

    def save_factor_intervals(self, path: PathLike, intervals: Dict[Tuple[int, int], ConfidenceInterval]) -> Path:
        rows = ((l, k, ci.center, ci.half_width) for (l, k), ci in sorted(intervals.items()))
        return self.save_csv(path, ('l', 'k', 'center', 'half_width'), rows)

    def save_entry_intervals(self, path: PathLike,
                             intervals: Sequence[Tuple[CanonicalTriple, ConfidenceInterval]]) -> Path:
        rows = ((t.i, t.j, t.k, ci.center, ci.half_width) for t, ci in intervals)
        return self.save_csv(path, ('i', 'j', 'k', 'center', 'half_width'), rows)

    def save_experiment(self, out_dir: PathLike, aggregate: AggregateReport, risk_rows: Sequence[RiskRow]) -> List[Path]:
        out_dir = Path(out_dir)
        r = len(aggregate.factor_coverage)
        d = len(aggregate.factor_coverage[0]) if r else 0
        written = [
            self.save_csv(out_dir / 'coverage.csv', ('target', 'mean_cr', 'std_cr', 'locations'), [
                (CoverageTarget.Factor.value, aggregate.mean_cr_factor, aggregate.std_cr_factor, r * d),
                (CoverageTarget.Entry.value, aggregate.mean_cr_entry, aggregate.std_cr_entry,
                 len(aggregate.entry_coverage)),
            ]),
            self.save_csv(out_dir / 'factor_coverage.csv', ('l', 'k', 'cr'),
                          ((l + 1, k + 1, aggregate.factor_coverage[l][k]) for l in range(r) for k in range(d))),
            self.save_csv(out_dir / 'entry_coverage.csv', ('i', 'j', 'k', 'cr'),
                          ((*t, cr) for t, cr in zip(aggregate.tracked_entries, aggregate.entry_coverage))),
        ]
        for name, points in sorted(aggregate.qq_points.items()):
            written.append(self.save_csv(out_dir / f'qq_{name}.csv', ('theoretical', 'empirical'), points))
        written.append(self.save_csv(out_dir / 'ks.csv', ('statistic', 'n', 'ks'),
                                     ((name, aggregate.ks_sizes[name], aggregate.ks_stats[name])
                                      for name in sorted(aggregate.ks_stats))))
        written.append(self.save_csv(out_dir / 'risk.csv', ('quantity', 'empirical', 'theoretical', 'ratio'),
                                     ((row.quantity, row.empirical, row.theoretical, row.ratio)
                                      for row in risk_rows)))
        written.append(self.save_json(out_dir / 'aggregate.json', aggregate.model_dump(mode='json')))
        return written

    def save_sweep(self, out_dir: PathLike, points: Sequence[SweepPoint]) -> List[Path]:
        """One experiment directory per noise level plus the risk and coverage curves against sigma."""
        out_dir = Path(out_dir)
        written = []
        risk_rows, coverage_rows = [], []
        for point in points:
            written.extend(self.save_experiment(out_dir / f"sigma_{round_trip(point.sigma)}", point.aggregate,
                                                point.risk))
            risk_rows.extend((point.sigma, row.quantity, row.empirical, row.theoretical, row.ratio)
                             for row in point.risk)
            aggregate = point.aggregate
            coverage_rows.append((point.sigma, CoverageTarget.Factor.value, aggregate.mean_cr_factor,
                                  aggregate.std_cr_factor))
            coverage_rows.append((point.sigma, CoverageTarget.Entry.value, aggregate.mean_cr_entry,
                                  aggregate.std_cr_entry))
        written.append(self.save_csv(out_dir / 'risk_sweep.csv',
                                     ('sigma', 'quantity', 'empirical', 'theoretical', 'ratio'), risk_rows))
        written.append(self.save_csv(out_dir / 'coverage_sweep.csv', ('sigma', 'target', 'mean_cr', 'std_cr'),
                                     coverage_rows))
        return written

    def save_manifest(self, out_dir: PathLike, manifest: RunManifest) -> Path:
        return self.save_json(Path(out_dir) / 'manifest.json', manifest.model_dump(mode='json'))
