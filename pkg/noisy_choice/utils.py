"""
Path helpers for noisy_choice input and output files.
"""

import logging
import os
from pathlib import Path

logger = logging.getLogger(__name__)


def validate_file_path(path: str, must_exist: bool = True) -> Path:
    """
    Resolve a table, config or sweep file path.

    Raises:
        FileNotFoundError: If must_exist is set and no such file exists
    """
    resolved = Path(path).resolve()
    if must_exist and not resolved.is_file():
        raise FileNotFoundError(f"File not found: {path} (resolved to: {resolved})")

    logger.debug(f"Validated path: {path} -> {resolved}")
    return resolved


def prepare_output_path(path: str) -> Path:
    """
    Check that an output file can be written before any work is done.

    Raises:
        PermissionError: If the parent directory is missing or not writable,
            or the path names a directory
    """
    resolved = validate_file_path(path, must_exist=False)
    parent = resolved.parent
    if resolved.is_dir():
        raise PermissionError(f"Output path is a directory: {resolved}")
    if not parent.is_dir():
        raise PermissionError(f"Output directory does not exist: {parent}")
    if not os.access(parent, os.W_OK) or (resolved.exists() and not os.access(resolved, os.W_OK)):
        raise PermissionError(f"Output path is not writable: {resolved}")
    return resolved


def write_text(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8", newline="")
    logger.info(f"Wrote {len(text)} chars to {path}")
