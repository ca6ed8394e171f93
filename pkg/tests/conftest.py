import math

import pytest

from metaglyph import metaphor
from metaglyph.metaphor import ImageSource, MetaphorCandidate

SVG_OPEN = '<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 100 100">'


def svg_doc(*shapes: str, viewbox: str = "0 0 100 100") -> bytes:
    body = "".join(shapes)
    return f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{viewbox}">{body}</svg>'.encode()


def candidate(svg: bytes, cid: str = "fixture.svg") -> MetaphorCandidate:
    return MetaphorCandidate(id=cid, source=ImageSource.LOCAL_CORPUS, svg_bytes=svg)


def stacked_svg(scale: float = 1.0, dx: float = 0.0, dy: float = 0.0) -> bytes:
    """Four stacked layers plus two tiny seeds, a vertical non-radial image."""
    def r(v):
        return v * scale

    return svg_doc(
        f'<ellipse id="top-bun" cx="{r(50) + dx}" cy="{r(25) + dy}" rx="{r(35)}" ry="{r(12)}" fill="#e0a050"/>',
        f'<rect id="lettuce" x="{r(15) + dx}" y="{r(38) + dy}" width="{r(70)}" height="{r(8)}" fill="#70c050"/>',
        f'<rect id="patty" x="{r(15) + dx}" y="{r(48) + dy}" width="{r(70)}" height="{r(12)}" fill="#905030"/>',
        f'<rect id="bottom-bun" x="{r(15) + dx}" y="{r(62) + dy}" width="{r(70)}" height="{r(10)}" fill="#e0a050"/>',
        f'<circle id="seed1" cx="{r(40) + dx}" cy="{r(20) + dy}" r="{r(1)}" fill="#fff8e0"/>',
        f'<circle id="seed2" cx="{r(60) + dx}" cy="{r(22) + dy}" r="{r(1)}" fill="#fff8e0"/>',
        viewbox=f"{dx} {dy} {r(100)} {r(100)}",
    )


def radial_svg(scale: float = 1.0, dx: float = 0.0, dy: float = 0.0,
               tiny: bool = True) -> bytes:
    """Concentric filled circles (radial) with optional tiny overlapped bits."""
    def r(v):
        return v * scale

    shapes = [
        f'<circle id="ring-a" cx="{r(50) + dx}" cy="{r(50) + dy}" r="{r(45)}" fill="#d04040"/>',
        f'<circle id="ring-b" cx="{r(50) + dx}" cy="{r(50) + dy}" r="{r(36)}" fill="#f0f0f0"/>',
        f'<circle id="ring-c" cx="{r(50) + dx}" cy="{r(50) + dy}" r="{r(28)}" fill="#4060c0"/>',
        f'<circle id="ring-d" cx="{r(50) + dx}" cy="{r(50) + dy}" r="{r(20)}" fill="#f0c040"/>',
    ]
    if tiny:
        shapes += [
            f'<circle id="dot-a" cx="{r(50) + dx}" cy="{r(12) + dy}" r="{r(1)}" fill="#111111"/>',
            f'<circle id="dot-b" cx="{r(58) + dx}" cy="{r(14) + dy}" r="{r(1)}" fill="#111111"/>',
        ]
    return svg_doc(*shapes, viewbox=f"{dx} {dy} {r(100)} {r(100)}")


def collinear_svg(scale: float = 1.0, dx: float = 0.0, dy: float = 0.0) -> bytes:
    """Three squares whose centers sit on an exact horizontal line."""
    def r(v):
        return v * scale

    return svg_doc(
        f'<rect x="{r(0) + dx}" y="{r(0) + dy}" width="{r(4)}" height="{r(4)}" fill="#333"/>',
        f'<rect x="{r(10) + dx}" y="{r(0) + dy}" width="{r(4)}" height="{r(4)}" fill="#666"/>',
        f'<rect x="{r(20) + dx}" y="{r(0) + dy}" width="{r(4)}" height="{r(4)}" fill="#999"/>',
        viewbox=f"{dx} {dy} {r(24)} {r(4)}",
    )


def pruning_svg(small_fractions=(0.004, 0.006)) -> bytes:
    """An 80x80 body plus one square per fraction, all overlapping the body.

    The whole-image bbox is exactly the body, so each square's area is an
    exact fraction of it.
    """
    shapes = [f'<rect id="body" x="10" y="10" width="80" height="80" fill="#cccccc"/>']
    for i, frac in enumerate(small_fractions):
        side = math.sqrt(frac * 6400.0)
        shapes.append(
            f'<rect id="small-{i}" x="{20 + 12 * i}" y="20" '
            f'width="{side}" height="{side}" fill="#aa0000"/>')
    return svg_doc(*shapes)


def many_elements_svg(n: int) -> bytes:
    """n disjoint equal circles in a grid (no pruning, no dominance)."""
    shapes = []
    cols = max(1, math.ceil(math.sqrt(n)))
    for i in range(n):
        row, col = divmod(i, cols)
        shapes.append(f'<circle cx="{8 + col * 12}" cy="{8 + row * 12}" r="4" '
                      f'fill="#3a6ea5"/>')
    return svg_doc(*shapes)


BURGER_CSV = (
    b"name,calories,sugars,protein,fat,rating\n"
    b"Classic,550,9,25,30,4\n"
    b"Slim,300,5,12,10,3\n"
    b"Veggie,400,7,18,15,5\n"
    b"Double,780,11,40,45,4\n"
    b"Spicy,610,8,28,33,5\n"
)


@pytest.fixture
def burger_candidate():
    return candidate(stacked_svg(), "burger.svg")


@pytest.fixture
def radial_candidate():
    return candidate(radial_svg(), "badge.svg")


@pytest.fixture
def corpus_dir(tmp_path):
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    (corpus / "burger.svg").write_bytes(stacked_svg())
    (corpus / "badge.svg").write_bytes(radial_svg())
    (corpus / "rail.svg").write_bytes(collinear_svg())
    corpus_obj = metaphor.LocalCorpus(corpus)
    corpus_obj.write_tags({
        "burger.svg": ["burger", "food"],
        "badge.svg": ["badge", "medal", "burger"],
        "rail.svg": ["rail", "burger"],
    })
    return corpus


@pytest.fixture
def burger_csv_path(tmp_path):
    path = tmp_path / "burger.csv"
    path.write_bytes(BURGER_CSV)
    return path
