"""Full training runs on the default synthetic datasets.

Tagged ``slow``; run them with ``python manage.py test --tag slow``.
"""
from functools import lru_cache

import numpy as np
from django.test import SimpleTestCase, tag

from harness.ablation import run_cell
from harness.detector import ActionDetector
from harness.diagnostics import similarity_diagnostic, stage_means
from harness.serializers import parse_run_config
from harness.tests.fixtures import sample_data, sample_scenes, sample_spec
from harness.training import train
from synth_data.generator import generate, split

SEEDS = (0, 1, 2)


def acceptance_config(**overrides):
    data = {"name": "acceptance", "max_steps": 1500, "eval_every": 0}
    data.update(overrides)
    return parse_run_config(data)


def differing_actors(sample) -> bool:
    looks = [(actor["pattern"], actor["item"]) for actor in sample.layout["actors"]]
    return len(set(looks)) == len(looks)


@lru_cache(maxsize=None)
def _default_split(count: int):
    spec, samples = sample_scenes(count)
    train_samples, val_samples = split(samples, (5 / 6, 1 / 6))
    return spec, train_samples, val_samples


@tag("slow")
class InteractionAcceptanceTest(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        spec, train_samples, val_samples = _default_split(1200)
        base = acceptance_config(head={"use_bank": False})
        cells = {
            "cycle": ("cycle", True, True, False, 2),
            "c2a": ("c2a", True, True, False, 2),
            "local": ("cycle", True, False, False, 2),
            "global": ("cycle", False, True, False, 2),
        }
        cls.maps = {
            name: run_cell(
                base, cell, SEEDS, train_samples, val_samples, sample_data(spec)
            ).mean
            for name, cell in cells.items()
        }

    def test_cycle_beats_c2a(self):
        self.assertGreaterEqual(self.maps["cycle"] - self.maps["c2a"], 0.02)

    def test_both_branches_match_either_branch(self):
        for single in ("local", "global"):
            self.assertGreaterEqual(self.maps["cycle"], self.maps[single] - 0.005)


@tag("slow")
class BankAcceptanceTest(SimpleTestCase):
    def test_bank_lifts_memory_labels(self):
        spec, samples = sample_scenes(
            1200, n_memory_tokens=1, clips_per_video=5, n_actors=1
        )
        train_samples, val_samples = split(samples, (5 / 6, 1 / 6))
        maps = {}
        for use_bank in (False, True):
            cell = ("cycle", True, True, use_bank, 2)
            maps[use_bank] = run_cell(
                acceptance_config(), cell, SEEDS, train_samples, val_samples,
                sample_data(spec),
            ).mean
        self.assertGreaterEqual(maps[True] - maps[False], 0.02)


@tag("slow")
class ContextSimilarityAcceptanceTest(SimpleTestCase):
    def test_training_separates_actor_contexts(self):
        spec, samples = sample_scenes(600)
        config = acceptance_config(head={"use_bank": False})
        model = train(config, samples, sample_data(spec)).model
        scenes = [
            sample
            for sample in generate(
                sample_spec(n_actors=3, min_actors=3, seed=101), 60
            )
            if differing_actors(sample)
        ][:20]
        self.assertEqual(len(scenes), 20)
        drops = []
        for sample in scenes:
            means = stage_means(similarity_diagnostic(model, sample))
            drops.append(
                means[("context", "before_M0")] - means[("context", "after_M2")]
            )
        self.assertGreaterEqual(float(np.mean(drops)), 0.1)

    def test_untrained_contexts_start_identical(self):
        spec, samples = sample_scenes(1, n_actors=3, min_actors=3)
        model = ActionDetector(acceptance_config(), sample_data(spec))
        means = stage_means(similarity_diagnostic(model, samples[0]))
        self.assertAlmostEqual(means[("context", "before_M0")], 1.0, places=9)
