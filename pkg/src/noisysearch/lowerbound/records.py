"""Record strings that purify the noisy oracle calls.

After t calls the record is a length-t string over an alphabet of n+1
symbols: code 0 means "no error this call", code x+1 means "the query-input
register dephased to basis value x".  Records flatten row-major with the
most recent entry fastest, so appending a symbol maps index r to
r*(n+1) + code.
"""

from __future__ import annotations

from dataclasses import dataclass

__all__ = ["Record", "record_count", "all_records", "record_input_sets"]

BLANK = 0  # the no-error symbol


@dataclass(frozen=True)
class Record:
    """A record string, stored as symbol codes (0 = no error, x+1 = input x)."""

    codes: tuple[int, ...]

    @property
    def length(self) -> int:
        return len(self.codes)

    def inputs(self) -> frozenset[int]:
        """The set of inputs appearing in the record (the blank is ignored)."""
        return frozenset(c - 1 for c in self.codes if c != BLANK)

    def n_remaining(self, n: int) -> int:
        """n minus the number of distinct recorded inputs."""
        return n - len(self.inputs())

    def appended(self, code: int) -> "Record":
        return Record(self.codes + (int(code),))

    def index(self, n: int) -> int:
        idx = 0
        for c in self.codes:
            if not (0 <= c <= n):
                raise ValueError(f"symbol code {c} outside [0, {n}]")
            idx = idx * (n + 1) + c
        return idx

    @classmethod
    def from_index(cls, idx: int, n: int, t: int) -> "Record":
        codes = []
        for _ in range(t):
            idx, c = divmod(idx, n + 1)
            codes.append(c)
        return cls(tuple(reversed(codes)))


def record_count(n: int, t: int) -> int:
    return (n + 1) ** t


def all_records(n: int, t: int) -> list[Record]:
    """All records of length t, in index order."""
    return [Record.from_index(i, n, t) for i in range(record_count(n, t))]


def record_input_sets(n: int, t: int) -> list[frozenset[int]]:
    """For each record index, the set of inputs appearing in it."""
    return [r.inputs() for r in all_records(n, t)]
