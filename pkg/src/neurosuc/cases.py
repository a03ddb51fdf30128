"""Access to the bundled test-system data files."""

from importlib import resources

from . import grid


def case5_text():
    ref = resources.files("neurosuc").joinpath("data/case5.m")
    return ref.read_text()


def case5_uc_text():
    ref = resources.files("neurosuc").joinpath("data/case5.uc")
    return ref.read_text()


def case5(horizon=24, profile=None, segments=3):
    """The bundled 5-bus system as a ready GridSpec."""
    return grid.parse_matpower(case5_text(), case5_uc_text(), horizon=horizon,
                               profile=profile, segments=segments, name="case5")
