"""
output.py — console output primitives for the congestlab commands.

Glyph vocabulary (foreground glyph on the default background; block only for hard fail):
    ok(...)           ✅              success, invariant verified
    partial(...)      yellow ✓        passed with a caveat (check not applicable, rate only reported)
    fail(...)         white ✗ / red   failure (block)
    info(...)         ·               passive info

Structure:
    section("Simulate")                 -> "--- Simulate"
    step("Integrating N=64")            -> "  ▶ Integrating N=64..."
    done(GLYPH_OK, "K=100 steps")       -> "  ✅ K=100 steps"
    error("Scenario not found: x\n· …") -> "❌ Scenario not found: x" + "  · …" (stderr)

Version: 1.0.0
"""

from __future__ import annotations

import sys

# Colour only when stdout is a TTY; captured output (tests, pipes) stays plain.
_TTY = sys.stdout.isatty()


def _wrap(code: str, text: str) -> str:
    return f"\033[{code}m{text}\033[0m" if _TTY else text


GLYPH_OK = "✅"
GLYPH_PARTIAL = _wrap("93", "✓")
GLYPH_FAIL = _wrap("97;101", " ✗ ")

_TRIANGLE = "▶"


def section(name: str) -> None:
    print(f"--- {name}")


def step(msg: str, *, indent: int = 2) -> None:
    """An activity START: triangle + trailing ellipsis."""
    print(f"{' ' * indent}{_TRIANGLE} {msg}...", flush=True)


def info(msg: str, *, indent: int = 2) -> None:
    print(f"{' ' * indent}· {msg}")


def done(glyph: str, msg: str, *, indent: int = 2) -> None:
    print(f"{' ' * indent}{glyph} {msg}")


def ok(msg: str, *, indent: int = 2) -> None:
    done(GLYPH_OK, msg, indent=indent)


def partial(msg: str, *, indent: int = 2) -> None:
    done(GLYPH_PARTIAL, msg, indent=indent)


def fail(msg: str, *, indent: int = 2) -> None:
    done(GLYPH_FAIL, msg, indent=indent)


def verdict(passed: bool, msg: str, *, applies: bool = True, indent: int = 2) -> None:
    """ok / fail by outcome; partial when the check did not apply."""
    if not applies:
        partial(f"{msg} (not applicable)", indent=indent)
    elif passed:
        ok(msg, indent=indent)
    else:
        fail(msg, indent=indent)


def error(message: str) -> None:
    """A hard stop on stderr: first line after ❌, remaining lines as `·` remediation bullets."""
    head, *rest = message.splitlines() or [""]
    print(f"❌ {head}", file=sys.stderr)
    for line in rest:
        line = line.strip()
        if line:
            print(f"  {line if line.startswith('·') else '· ' + line}", file=sys.stderr)


def list_item(
    text: str, *, index: int | None = None, total: int | None = None, indent: int = 2
) -> None:
    """One aligned list line. Ordered when `index` is given ("N."), unordered otherwise ("*");
    the marker is right-aligned in a field sized by `total` so the text column stays put."""
    width = len(str(total)) if total else 1
    marker = f"{index:>{width}}." if index is not None else f"{'*':>{width + 1}}"
    print(f"{' ' * indent}{marker} {text}")


def numbered_list(items: list[str], *, indent: int = 2) -> None:
    total = len(items)
    for i, text in enumerate(items, 1):
        list_item(text, index=i, total=total, indent=indent)
