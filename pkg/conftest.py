import os

import pytest

# Mirror `manage.py test` under pytest: tests run in float64 (settings picks
# float64 only when argv[1] is "test"), and "slow" tagged tests are left out
# unless RUN_SLOW_TESTS is set, like actiondetect.test_runner.ActionTestRunner.

SLOW_TAG = "slow"


def pytest_configure(config):
    from django.conf import settings

    settings.TENSOR_DTYPE = os.environ.get("TENSOR_DTYPE", "float64")


def _tags(item):
    tags = set(getattr(getattr(item, "cls", None), "tags", ()) or ())
    tags |= set(getattr(getattr(item, "obj", None), "tags", ()) or ())
    return tags


def pytest_collection_modifyitems(config, items):
    if os.environ.get("RUN_SLOW_TESTS"):
        return
    skip_slow = pytest.mark.skip(reason="slow; set RUN_SLOW_TESTS=1 to run")
    for item in items:
        if SLOW_TAG in _tags(item):
            item.add_marker(skip_slow)
