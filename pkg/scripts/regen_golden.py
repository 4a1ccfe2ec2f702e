"""Rewrite the golden SVG fixtures. Review the diff before committing."""

import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))

from builders import golden_artifacts  # noqa: E402
from clxids.svg import render_svg  # noqa: E402


def main():
    out = ROOT / "tests" / "golden"
    out.mkdir(exist_ok=True)
    for name, art in golden_artifacts().items():
        path = out / f"{name}.svg"
        path.write_text(render_svg(art), encoding="utf-8")
        print(path)


if __name__ == "__main__":
    main()
