#!/usr/bin/env python3
"""Build a small demo corpus plus a spreadsheet and run the full pipeline.

Writes ranked SVGs, legends, mapping JSON, and report.json to --out
(default ./demo-out).  Everything is synthesized on the fly, so the demo
runs offline.
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from metaglyph import cli  # noqa: E402

BURGER = """<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 100 100">
  <ellipse id="top-bun" cx="50" cy="25" rx="35" ry="12" fill="#e8a33d"/>
  <rect id="lettuce" x="15" y="38" width="70" height="8" fill="#6cbf4c"/>
  <rect id="patty" x="15" y="48" width="70" height="12" fill="#8a4b2d"/>
  <rect id="bottom-bun" x="15" y="62" width="70" height="10" fill="#e8a33d"/>
  <circle id="seed-a" cx="40" cy="20" r="1" fill="#fff4da"/>
  <circle id="seed-b" cx="60" cy="22" r="1" fill="#fff4da"/>
</svg>
"""

BADGE = """<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 100 100">
  <circle id="outer" cx="50" cy="50" r="45" fill="#c94f4f"/>
  <circle id="band" cx="50" cy="50" r="34" fill="#f2ede4"/>
  <circle id="core" cx="50" cy="50" r="22" fill="#3b6bb5"/>
  <circle id="pin" cx="50" cy="50" r="9" fill="#f0c33c"/>
</svg>
"""

SKEWERS = """<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 120 40">
  <circle id="bite-1" cx="20" cy="20" r="9" fill="#b5542e"/>
  <circle id="bite-2" cx="50" cy="20" r="9" fill="#cf7f3e"/>
  <circle id="bite-3" cx="80" cy="20" r="9" fill="#b5542e"/>
  <rect id="stick" x="5" y="18.5" width="110" height="3" fill="#8a6f4d"/>
</svg>
"""

CSV = """name,calories,sugars,protein,fat,rating
Classic,550,9,25,30,4
Slim,300,5,12,10,3
Veggie,400,7,18,15,5
Double,780,11,40,45,4
Spicy,610,8,28,33,5
Bacon,700,10,35,42,4
Fish,430,6,20,18,3
Chicken,510,7,27,22,4
Deluxe,820,12,42,48,5
Mini,260,4,10,9,2
"""


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="demo-out")
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--work", default="demo-work",
                        help="where the corpus and CSV are materialized")
    args = parser.parse_args()

    work = Path(args.work)
    corpus = work / "corpus"
    corpus.mkdir(parents=True, exist_ok=True)
    (corpus / "burger.svg").write_text(BURGER)
    (corpus / "badge.svg").write_text(BADGE)
    (corpus / "skewer.svg").write_text(SKEWERS)
    csv_path = work / "burger.csv"
    csv_path.write_text(CSV)
    cli.main(["corpus", "--corpus", str(corpus), "tag", "burger.svg",
              "burger", "food", "meal"])
    cli.main(["corpus", "--corpus", str(corpus), "tag", "badge.svg", "burger"])
    cli.main(["corpus", "--corpus", str(corpus), "tag", "skewer.svg", "burger"])
    return cli.main(["generate", str(csv_path), "--corpus", str(corpus),
                     "--out", args.out, "--seed", str(args.seed)])


if __name__ == "__main__":
    raise SystemExit(main())
