"""Bundled example systems."""
from importlib import resources


def names():
    return sorted(p.name[:-5] for p in resources.files(__name__).iterdir() if p.name.endswith(".claw"))


def read(name):
    return resources.files(__name__).joinpath(f"{name}.claw").read_text(encoding="utf-8")


def path(name):
    return resources.files(__name__).joinpath(f"{name}.claw")
