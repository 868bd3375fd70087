"""Caps, seeds and cancellation shared by the enumeration-heavy operations."""

from __future__ import annotations

import threading
from dataclasses import dataclass, field, replace
from typing import Optional

from .errors import Cancelled


@dataclass(frozen=True)
class Limits:
    monoid_cap: int = 64
    alphabet_cap: int = 4096
    product_cap: int = 1024
    division_cap: int = 12
    enumeration_cap: int = 2_000_000
    safe_check_cap: int = 12
    seed: int = 0
    cancel: Optional[threading.Event] = field(default=None, compare=False)

    def with_(self, **changes) -> "Limits":
        return replace(self, **changes)

    def checkpoint(self) -> None:
        """Raise :class:`Cancelled` if the cancellation token has been set."""
        if self.cancel is not None and self.cancel.is_set():
            raise Cancelled("operation cancelled")


DEFAULT_LIMITS = Limits()
