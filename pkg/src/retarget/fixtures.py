"""Canonical synthetic validation fixtures.

Each fixture is a reproducible generator input: schedule spans, sampling
rate, white-noise amplitude (as a fraction of the unit QRS amplitude), and
seed. The grid spans 40-180 bpm at 200/360/500 Hz with noise up to 5%,
plus the two-phase rest-then-activity fixture.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import dsp


@dataclass(frozen=True)
class Fixture:
    name: str
    schedule: tuple  # (start_s, end_s, bpm) spans
    fs: int
    noise: float = 0.0
    seed: int = 0


def _grid() -> list:
    fixtures = []
    for bpm in (40, 60, 75, 90, 110, 140, 180):
        for fs in (200, 360, 500):
            fixtures.append(Fixture(f"steady_{bpm}bpm_{fs}hz", ((0.0, 20.0, bpm),), fs))
    fixtures += [
        Fixture("noisy2_75bpm_500hz", ((0.0, 20.0, 75),), 500, noise=0.02, seed=11),
        Fixture("noisy5_60bpm_360hz", ((0.0, 20.0, 60),), 360, noise=0.05, seed=12),
        Fixture("noisy5_90bpm_200hz", ((0.0, 20.0, 90),), 200, noise=0.05, seed=13),
        Fixture("noisy5_140bpm_500hz", ((0.0, 20.0, 140),), 500, noise=0.05, seed=14),
        TWO_PHASE,
    ]
    return fixtures


TWO_PHASE = Fixture("two_phase_70_120", ((0.0, 120.0, 70), (120.0, 210.0, 120)), 360)

FIXTURES = tuple(_grid())


def generate(fixture: Fixture):
    """Signal and planted ground-truth peaks for a fixture."""
    return dsp.synth_ecg(fixture.schedule, fixture.fs, fixture.noise, fixture.seed)
