"""Checkpoint directories: config.json, params.npz, bank/ and metrics.csv."""
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from harness.config import DataShape, RunConfig
from harness.detector import ActionDetector
from harness.serializers import parse_run_config
from harness.training import MetricRow, write_metrics
from interaction_head.bank import INDEX_FILE, MemoryBank
from tensor_core.exceptions import FormatError

logger = logging.getLogger(__name__)

CONFIG_FILE = "config.json"
PARAMS_FILE = "params.npz"
BANK_DIR = "bank"
METRICS_FILE = "metrics.csv"


@dataclass
class Checkpoint:
    config: RunConfig
    data: DataShape
    model: ActionDetector
    bank: Optional[MemoryBank]


def save_checkpoint(
    directory: Union[str, Path],
    config: RunConfig,
    data: DataShape,
    model: ActionDetector,
    bank: Optional[MemoryBank] = None,
    metrics: Sequence[MetricRow] = (),
) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / CONFIG_FILE, "w") as stream:
        json.dump({"run": config.to_dict(), "data": data.to_dict()}, stream, indent=2)
    np.savez(directory / PARAMS_FILE, **model.state_dict())
    if bank is not None:
        bank.save(directory / BANK_DIR)
    write_metrics(directory / METRICS_FILE, metrics)
    logger.info("saved checkpoint %s", directory)
    return directory


def load_checkpoint(directory: Union[str, Path]) -> Checkpoint:
    directory = Path(directory)
    try:
        with open(directory / CONFIG_FILE) as stream:
            stored = json.load(stream)
        with np.load(directory / PARAMS_FILE) as archive:
            state = {name: archive[name] for name in archive.files}
    except FileNotFoundError as error:
        raise FormatError(f"{directory} is not a checkpoint directory") from error
    config = parse_run_config(stored["run"])
    data = DataShape(**stored["data"])
    model = ActionDetector(config, data)
    model.load_state_dict(state)
    model.eval()
    bank = None
    if (directory / BANK_DIR / INDEX_FILE).exists():
        bank = MemoryBank.load(directory / BANK_DIR)
    return Checkpoint(config=config, data=data, model=model, bank=bank)
