from functools import lru_cache

from harness.config import DataShape, RunConfig
from harness.serializers import parse_run_config
from synth_data.generator import generate
from synth_data.serializers import parse_scene_spec


def sample_spec(**overrides):
    return parse_scene_spec(overrides)


@lru_cache(maxsize=None)
def _samples(count: int, spec_items: tuple):
    return tuple(generate(sample_spec(**dict(spec_items)), count))


def sample_scenes(count: int = 4, **overrides):
    spec = sample_spec(**overrides)
    return spec, list(_samples(count, tuple(sorted(overrides.items()))))


def sample_data(spec) -> DataShape:
    return DataShape.from_scene_spec(spec)


def sample_config(**overrides) -> RunConfig:
    """Small model with no dropout, warmup or decay steps."""
    data = {
        "name": "test",
        "batch_size": 2,
        "max_steps": 4,
        "eval_every": 0,
        "model": {
            "reduced_dim": 8,
            "attention_dim": 8,
            "roi_size": [2, 2],
            "p_drop": 0.0,
        },
        "cycle": {"depth": 2},
        "head": {"depth": 1},
        "optimizer": {
            "lr": 0.05,
            "warmup_steps": 0,
            "milestones": [],
            "weight_decay": 0.0,
        },
    }
    for key, value in overrides.items():
        if isinstance(value, dict):
            data[key] = {**data.get(key, {}), **value}
        else:
            data[key] = value
    return parse_run_config(data)
