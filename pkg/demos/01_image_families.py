"""Generate the structured image families, look at a few members, and
round-trip a family through its text file format."""

import tempfile
from pathlib import Path

from pixelrank import (
    gen_random_family,
    gen_rectangle_outlines,
    gen_stacked_outlines,
    gen_vertical_bars,
    load_family,
    save_family,
)


def show(title, img):
    print(f"--- {title}")
    print(img.to_ascii())


def main():
    rect = gen_rectangle_outlines(6, 3)
    print(f"rectangle outlines, n=6: {len(rect)} members")
    show("first member", rect.members[0])
    show("last member", rect.members[-1])

    bars = gen_vertical_bars(6, 2)
    print(f"\nvertical bars, n=6: {len(bars)} members")
    show("a bar", bars.members[7])

    stacked = gen_stacked_outlines(5, 3)
    print(f"\nstacked outlines, n=5: {len(stacked)} members")
    show("a figure-eight", stacked.members[0])

    rnd = gen_random_family(4, 9, seed=7)
    print(f"\nrandom family, n=4, m=9, seed=7: {len(rnd)} members")
    show("a random image", rnd.members[0])

    # Families round-trip through a one-member-per-line text format.
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "rect6.fam"
        save_family(rect, path)
        print(f"\nsaved to {path.name}; first lines:")
        for line in path.read_text().splitlines()[:3]:
            print(" ", line)
        assert load_family(path) == rect
        print("round trip exact:", load_family(path) == rect)


if __name__ == "__main__":
    main()
