"""Configuration grid over interaction mode, branches, bank and depth."""
import csv
import itertools
import logging
from dataclasses import dataclass, field
from typing import IO, Dict, List, Sequence, Tuple

import numpy as np

from harness.config import DataShape, RunConfig
from harness.evaluation import evaluate
from harness.training import train
from synth_data.structures import SceneSample

logger = logging.getLogger(__name__)

TABLE_HEADER = (
    "section", "mode", "use_local", "use_global", "use_bank", "depth",
    "seeds", "map_mean", "map_std",
)


@dataclass(frozen=True)
class AblationGrid:
    modes: Tuple[str, ...] = ("cycle", "c2a", "a2c")
    branches: Tuple[Tuple[bool, bool], ...] = (
        (True, False), (False, True), (True, True),
    )
    banks: Tuple[bool, ...] = (False, True)
    depths: Tuple[int, ...] = (1, 2, 3)
    seeds: Tuple[int, ...] = (0, 1, 2)

    def cells(self) -> List[Tuple[str, bool, bool, bool, int]]:
        return [
            (mode, local, global_, bank, depth)
            for mode, (local, global_), bank, depth in itertools.product(
                self.modes, self.branches, self.banks, self.depths
            )
        ]


@dataclass
class AblationCell:
    mode: str
    use_local: bool
    use_global: bool
    use_bank: bool
    depth: int
    maps: List[float] = field(default_factory=list)

    @property
    def key(self) -> Tuple[str, bool, bool, bool, int]:
        return self.mode, self.use_local, self.use_global, self.use_bank, self.depth

    @property
    def mean(self) -> float:
        return float(np.mean(self.maps))

    @property
    def std(self) -> float:
        return float(np.std(self.maps))


def cell_config(base: RunConfig, cell, seed: int) -> RunConfig:
    mode, local, global_, bank, depth = cell
    return base.variant(
        seed=seed,
        name=f"{base.name}-{mode}-l{int(local)}g{int(global_)}b{int(bank)}-d{depth}-s{seed}",
        cycle={"mode": mode, "use_local": local, "use_global": global_, "depth": depth},
        head={"use_bank": bank},
    )


def run_cell(
    base: RunConfig,
    cell,
    seeds: Sequence[int],
    train_samples: Sequence[SceneSample],
    val_samples: Sequence[SceneSample],
    data: DataShape,
) -> AblationCell:
    result = AblationCell(*cell)
    for seed in seeds:
        config = cell_config(base, cell, seed)
        trained = train(config, train_samples, data)
        result.maps.append(evaluate(trained.model, val_samples).map)
    logger.info(
        "cell %s: mAP %.4f +- %.4f over %d seeds",
        result.key, result.mean, result.std, len(seeds),
    )
    return result


def ablation_suite(
    base: RunConfig,
    grid: AblationGrid,
    train_samples: Sequence[SceneSample],
    val_samples: Sequence[SceneSample],
    data: DataShape,
) -> List[AblationCell]:
    return [
        run_cell(base, cell, grid.seeds, train_samples, val_samples, data)
        for cell in grid.cells()
    ]


def table_sections(
    cells: Sequence[AblationCell], base: RunConfig
) -> Dict[str, List[AblationCell]]:
    """Slices varying one axis with the others held at the base config."""
    reference = {
        "mode": base.cycle.mode,
        "branches": (base.cycle.use_local, base.cycle.use_global),
        "bank": base.head.use_bank,
        "depth": base.cycle.depth,
    }

    def axes(cell):
        return {
            "mode": cell.mode,
            "branches": (cell.use_local, cell.use_global),
            "bank": cell.use_bank,
            "depth": cell.depth,
        }

    sections = {
        "interaction_mode": "mode",
        "components": "branches",
        "memory_bank": "bank",
        "depth": "depth",
    }
    return {
        section: [
            cell for cell in cells
            if all(
                value == reference[axis]
                for axis, value in axes(cell).items()
                if axis != varied
            )
        ]
        for section, varied in sections.items()
    }


def write_table(
    stream: IO[str], cells: Sequence[AblationCell], base: RunConfig
) -> None:
    writer = csv.writer(stream)
    writer.writerow(TABLE_HEADER)
    for section, rows in table_sections(cells, base).items():
        for cell in rows:
            writer.writerow(_row(section, cell))
    for cell in cells:
        writer.writerow(_row("grid", cell))


def _row(section: str, cell: AblationCell) -> tuple:
    return (
        section, cell.mode, int(cell.use_local), int(cell.use_global),
        int(cell.use_bank), cell.depth, len(cell.maps),
        f"{cell.mean:.6f}", f"{cell.std:.6f}",
    )
