"""Write tests/golden/<scenario>.json from the current build.

Each golden is exactly what `catbox run <scenario>` prints with the bundled
defaults. `tests/test_cli.py` compares them key for key, numbers to 1e-9.
Review the diff before committing regenerated files. Run:

    uv run scripts/generate_goldens.py
"""

import io
import os
import sys
from pathlib import Path

from catbox._runner import resolve_config, run
from catbox._scenarios import SCENARIOS

GOLDEN_DIR = Path(__file__).resolve().parent.parent / "tests" / "golden"


def main() -> int:
    os.environ.pop("CATBOX_FOCK_DIM", None)
    GOLDEN_DIR.mkdir(parents=True, exist_ok=True)
    for name in SCENARIOS:
        buf = io.StringIO()
        code = run(resolve_config(scenario=name), stream=buf)
        if code != 0:
            print(f"  ✗ {name}: exit {code}", file=sys.stderr)
            return code
        path = GOLDEN_DIR / f"{name}.json"
        path.write_text(buf.getvalue(), encoding="utf-8")
        print(f"  ✔ {path.relative_to(GOLDEN_DIR.parent.parent)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
