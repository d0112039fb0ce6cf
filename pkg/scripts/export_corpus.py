#!/usr/bin/env python3
"""Write the bundled programs to corpus/*.ir so the CLI can run on them.

The embedded sources in nullgvn.corpus are authoritative; a test keeps the
exported files in sync.
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from nullgvn.corpus import bundled_sources


def main() -> int:
    out_dir = Path(__file__).resolve().parents[1] / "corpus"
    out_dir.mkdir(exist_ok=True)
    for name, text in bundled_sources().items():
        (out_dir / f"{name}.ir").write_text(text, encoding="utf-8")
    print(f"wrote {len(bundled_sources())} programs to {out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
