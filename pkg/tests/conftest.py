from pathlib import Path

import pytest
from hypothesis import settings

from odsim import elaborate, parse_design

settings.register_profile("suite", deadline=None)
settings.load_profile("suite")

DESIGNS = Path(__file__).resolve().parent.parent / "designs"

CORPUS = sorted(p.stem for p in DESIGNS.glob("*.od"))

# per-design depth assignments exercised by equivalence and soundness tests
def depth_grid(design):
    names = [f.name for f in design.fifos]
    return [
        {},                       # declared depths
        {n: 1 for n in names},
        {n: 2 for n in names},
        {n: 5 for n in names},
    ]


def corpus_path(name: str) -> Path:
    return DESIGNS / f"{name}.od"


@pytest.fixture(scope="session")
def corpus_designs():
    return {name: parse_design(corpus_path(name).read_text()) for name in CORPUS}


@pytest.fixture(scope="session")
def corpus_elaborated(corpus_designs):
    return {name: elaborate(d) for name, d in corpus_designs.items()}


def parse_elaborate(text: str):
    return elaborate(parse_design(text))
