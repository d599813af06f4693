"""Campaign artifact directory layout.

Every stage reads and writes under one root so a campaign is portable: copy
the directory and every later stage still works.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path


@dataclass(frozen=True)
class ArtifactPaths:
    root: Path

    @property
    def binding_map(self) -> Path:
        return self.root / "binding_map.tsv"

    @property
    def logs(self) -> Path:
        return self.root / "logs"

    @property
    def crashes(self) -> Path:
        return self.root / "crashes"

    @property
    def reports(self) -> Path:
        return self.root / "reports"

    @property
    def povs(self) -> Path:
        return self.root / "povs"

    @property
    def results_csv(self) -> Path:
        return self.root / "results.csv"

    @property
    def timing(self) -> Path:
        return self.root / "timing"

    @property
    def summary(self) -> Path:
        return self.root / "summary"

    @property
    def done(self) -> Path:
        return self.root / "done"

    @property
    def config_file(self) -> Path:
        return self.root / "config.ini"

    @property
    def fault_log(self) -> Path:
        return self.root / "faults.log"

    @property
    def synthesis_log(self) -> Path:
        return self.povs / "synthesis.log"

    def ensure(self) -> "ArtifactPaths":
        for d in (self.root, self.logs, self.crashes, self.reports,
                  self.povs, self.timing, self.summary, self.done):
            d.mkdir(parents=True, exist_ok=True)
        return self


def artifact_paths(root: str | Path) -> ArtifactPaths:
    return ArtifactPaths(root=Path(root))
