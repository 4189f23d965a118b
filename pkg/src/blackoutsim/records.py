"""Cascade event records and their tab-separated file format."""

from __future__ import annotations

from dataclasses import dataclass

RECORD_COLUMNS = ("day", "step", "load_shed", "total_demand",
                  "n_failed_lines", "n_overloaded_lines", "is_blackout")


@dataclass
class BlackoutRecord:
    day: int
    step: int
    load_shed: float
    total_demand: float
    n_failed_lines: int
    n_overloaded_lines: int
    is_blackout: bool

    @property
    def size(self) -> float:
        """Normalized blackout size L_S / P_D."""
        return self.load_shed / self.total_demand if self.total_demand > 0 else 0.0


def write_records(records, target) -> None:
    if isinstance(target, (str, bytes)) or hasattr(target, "__fspath__"):
        with open(target, "w") as fh:
            write_records(records, fh)
        return
    target.write("\t".join(RECORD_COLUMNS) + "\n")
    for r in records:
        target.write(f"{r.day}\t{r.step}\t{r.load_shed!r}\t{r.total_demand!r}"
                     f"\t{r.n_failed_lines}\t{r.n_overloaded_lines}"
                     f"\t{int(r.is_blackout)}\n")


def read_records(source) -> list[BlackoutRecord]:
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source) as fh:
            return read_records(fh)
    lines = source.read().splitlines()
    if not lines:
        raise ValueError("empty records file")
    header = tuple(lines[0].split("\t"))
    if header != RECORD_COLUMNS:
        raise ValueError(f"unexpected records header: {lines[0]!r}")
    out = []
    for k, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        p = line.split("\t")
        if len(p) != len(RECORD_COLUMNS):
            raise ValueError(f"line {k}: expected {len(RECORD_COLUMNS)} fields")
        out.append(BlackoutRecord(int(p[0]), int(p[1]), float(p[2]),
                                  float(p[3]), int(p[4]), int(p[5]),
                                  bool(int(p[6]))))
    return out
