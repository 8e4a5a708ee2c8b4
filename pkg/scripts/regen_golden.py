"""Regenerate tests/golden from the bundled scenarios via the CLI subcommands.

Run after an intentional output change and review the diff before committing.
"""

import json
import shutil
import sys
from pathlib import Path

from emx.cli import main

ROOT = Path(__file__).resolve().parents[1]
COMMAND = {"trajectory": "simulate", "spectrum": "stability",
           "equilibrium": "equilibrium", "dispatch": "dispatch"}


def regen(out: Path) -> int:
    shutil.rmtree(out, ignore_errors=True)
    out.mkdir(parents=True)
    for path in sorted((ROOT / "scenarios").glob("*.json")):
        for artifact in json.loads(path.read_text())["outputs"]:
            code = main([COMMAND[artifact], "--scenario", str(path), "--out", str(out)])
            if code:
                return code
    return 0


if __name__ == "__main__":
    sys.exit(regen(ROOT / "tests" / "golden"))
