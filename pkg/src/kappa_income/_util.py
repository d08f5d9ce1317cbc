"""Small internal helpers shared across modules."""

import os
import tempfile
from pathlib import Path


def atomic_write_text(path, text):
    """Write a text file atomically: temp file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=str(path.parent), suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def format_float(value):
    """Canonical 9-significant-digit rendering used in emitted artifacts."""
    return f"{value:.9g}"
