"""Single source for the package version and its git-style display form."""

from __future__ import annotations

import subprocess
from pathlib import Path

__version__ = "0.1.0"


def version_string() -> str:
    """Git-describe form when a repository is available, `v<version>` otherwise."""
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            cwd=Path(__file__).parent,
            capture_output=True,
            text=True,
            timeout=5,
        )
        if out.returncode == 0 and out.stdout.strip():
            return f"v{__version__}+g{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return f"v{__version__}"
