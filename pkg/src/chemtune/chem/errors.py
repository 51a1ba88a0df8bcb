from __future__ import annotations

from typing import Optional


class ChemError(ValueError):
    """Structured chemistry failure.

    ``kind`` is one of ``grammar``, ``ring_closure``, ``unknown_element``,
    ``kekulization`` or ``valence``. ``position`` is a byte offset into the
    parsed text, ``atom_index`` the offending atom, when known.
    """

    kind = "grammar"

    def __init__(
        self,
        message: str,
        position: Optional[int] = None,
        atom_index: Optional[int] = None,
        kind: Optional[str] = None,
    ):
        if kind is not None:
            self.kind = kind
        self.message = message
        self.position = position
        self.atom_index = atom_index
        where = f" at byte {position}" if position is not None else ""
        super().__init__(f"{self.kind}: {message}{where}")


class SmilesSyntaxError(ChemError):
    kind = "grammar"


class RingClosureError(ChemError):
    kind = "ring_closure"


class UnknownElementError(ChemError):
    kind = "unknown_element"


class KekulizationError(ChemError):
    kind = "kekulization"


class ValenceError(ChemError):
    kind = "valence"
