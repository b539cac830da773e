"""Small file-writing helpers shared by persistence and the CLI."""

import os
import tempfile

__all__ = ["atomic_write_text", "fmt_float"]


def atomic_write_text(path, text: str) -> None:
    """Write via a temp file in the target directory plus rename, so a
    failure partway never leaves a truncated output file."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-",
                               suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def fmt_float(v: float) -> str:
    """17 significant digits: enough to reproduce any float64 exactly."""
    return f"{v:.17g}"
