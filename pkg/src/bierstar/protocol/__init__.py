"""Cell-encoded stateless multicast: encoding, codec, tables, forwarding."""

from .codec import header_bit_length, parse, serialize
from .encode import encode, snapshot_cells
from .forward import (
    DEFAULT_TTL,
    BranchFailure,
    DeliveryReport,
    ForwardResult,
    Packet,
    TableCache,
    forward,
    run_multicast,
)
from .spt import SptResult, reconstruct_path, shortest_path_tree, spt_for_snapshot
from .tables import TableEntry, TargetCellTable, build_target_cell_table, cell_center_unit
from .tree import HEADER_VERSION, MAX_TREE_CHILDREN, CellTree, Header, HeaderShell, tree_from_paths

__all__ = [
    "DEFAULT_TTL",
    "HEADER_VERSION",
    "MAX_TREE_CHILDREN",
    "BranchFailure",
    "CellTree",
    "DeliveryReport",
    "ForwardResult",
    "Header",
    "HeaderShell",
    "Packet",
    "SptResult",
    "TableCache",
    "TableEntry",
    "TargetCellTable",
    "build_target_cell_table",
    "cell_center_unit",
    "encode",
    "forward",
    "header_bit_length",
    "parse",
    "reconstruct_path",
    "run_multicast",
    "serialize",
    "shortest_path_tree",
    "snapshot_cells",
    "spt_for_snapshot",
    "tree_from_paths",
]
