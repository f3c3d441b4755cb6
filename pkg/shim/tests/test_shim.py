"""Secondary-component suite: builds emitted units against the C++ shim.

Needs a host g++; run as `pytest shim/tests` (the primary suite under
tests/ never builds or requires the shim).
"""

import shutil
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))
import shimtest  # noqa: E402

pytestmark = pytest.mark.skipif(
    shutil.which(shimtest.CXX) is None,
    reason="no host C++ toolchain; the shim is the secondary component")


@pytest.fixture(scope="module")
def hr_driver():
    if shimtest.BUILD.exists():
        shutil.rmtree(shimtest.BUILD)
    shimtest.BUILD.mkdir(parents=True)
    yield shimtest.compile_hr_driver()
    shutil.rmtree(shimtest.BUILD, ignore_errors=True)


def test_tri_engine_agreement(hr_driver):
    shimtest.check_heart_rate_fixtures(hr_driver)


def test_identity_unit(hr_driver):
    shimtest.check_identity_unit()


def test_negative_linkage(hr_driver):
    shimtest.check_negative_linkage()
