from __future__ import annotations

import os
import sys

_DEBUG = os.getenv("RICEHSI_DEBUG", "0").strip().lower() in {"1", "true", "yes", "on"}


def _format_value(value: object) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    text = str(value)
    if not text or any(ch.isspace() for ch in text):
        return repr(text)
    return text


def _format(tag: str, message: str, fields: dict[str, object]) -> str:
    tail = " ".join(f"{key}={_format_value(value)}" for key, value in fields.items())
    line = f"[{tag}] {message}"
    return f"{line} {tail}" if tail else line


def log(tag: str, message: str, **fields: object) -> None:
    print(_format(tag, message, fields), flush=True)


def debug(tag: str, message: str, **fields: object) -> None:
    if _DEBUG:
        print(_format(tag, message, fields), flush=True)


def error(tag: str, message: str, **fields: object) -> None:
    print(_format(tag, message, fields), file=sys.stderr, flush=True)


def set_debug(enabled: bool) -> None:
    global _DEBUG
    _DEBUG = enabled
