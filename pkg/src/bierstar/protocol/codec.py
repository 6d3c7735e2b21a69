"""Bit-exact header codec.

Layout, most-significant bit first:

    version(4) | group_id(32) | shell_count(4)
    per shell block: shell_id(4) resolution(4) node_count(16)
    per node, pre-order: cell_index(ceil(log2 cell_count(r))) child_count(3) dest_flag(1)

The stream is zero-padded to a byte boundary; padding bits must be zero on
parse. Multiple blocks may share a shell id (forest headers).
"""
from __future__ import annotations

from ..errors import HeaderFormatError
from ..geogrid import HEX_HIER, CellId, bits_per_cell, cell_count
from .tree import HEADER_VERSION, MAX_TREE_CHILDREN, CellTree, Header, HeaderShell

_FIXED_BITS = 4 + 32 + 4
_BLOCK_BITS = 4 + 4 + 16


class _BitWriter:
    def __init__(self):
        self.buf = bytearray()
        self.acc = 0
        self.nbits = 0

    def write(self, value: int, width: int) -> None:
        if value < 0 or value >> width:
            raise HeaderFormatError(f"value {value} does not fit {width} bits")
        self.acc = (self.acc << width) | value
        self.nbits += width
        while self.nbits >= 8:
            self.nbits -= 8
            self.buf.append((self.acc >> self.nbits) & 0xFF)
        self.acc &= (1 << self.nbits) - 1

    def finish(self) -> bytes:
        if self.nbits:
            self.buf.append((self.acc << (8 - self.nbits)) & 0xFF)
            self.acc = 0
            self.nbits = 0
        return bytes(self.buf)


class _BitReader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0
        self.total = len(data) * 8

    def read(self, width: int) -> int:
        if self.pos + width > self.total:
            raise HeaderFormatError("truncated header")
        value = 0
        pos = self.pos
        for _ in range(width):
            byte = self.data[pos >> 3]
            value = (value << 1) | ((byte >> (7 - (pos & 7))) & 1)
            pos += 1
        self.pos = pos
        return value


def header_bit_length(header: Header) -> int:
    """Exact serialized length in bits, before byte padding."""
    total = _FIXED_BITS
    for sh in header.shells:
        per_node = bits_per_cell(HEX_HIER, sh.resolution) + 4
        total += _BLOCK_BITS + sh.tree.node_count * per_node
    return total


def serialize(header: Header) -> bytes:
    if header.version != HEADER_VERSION:
        raise HeaderFormatError(f"unsupported version {header.version}")
    if not header.shells:
        raise HeaderFormatError("header needs at least one shell block")
    if not 0 <= header.group_id < 1 << 32:
        raise HeaderFormatError(f"group id {header.group_id} does not fit 32 bits")
    if len(header.shells) >= 1 << 4:
        raise HeaderFormatError("too many shell blocks")
    w = _BitWriter()
    w.write(header.version, 4)
    w.write(header.group_id, 32)
    w.write(len(header.shells), 4)
    for sh in header.shells:
        if not 0 <= sh.shell_id < 1 << 4:
            raise HeaderFormatError(f"shell id {sh.shell_id} does not fit 4 bits")
        if not 0 <= sh.resolution <= 5:
            raise HeaderFormatError(f"resolution {sh.resolution} outside 0..5")
        tree = sh.tree
        tree.validate()
        nodes = tree.nodes()
        if len(nodes) >= 1 << 16:
            raise HeaderFormatError(f"node count {len(nodes)} does not fit 16 bits")
        cell_bits = bits_per_cell(HEX_HIER, sh.resolution)
        w.write(sh.shell_id, 4)
        w.write(sh.resolution, 4)
        w.write(len(nodes), 16)
        for cell in nodes:
            if cell.resolution != sh.resolution:
                raise HeaderFormatError("tree resolution differs from shell block")
            kids = tree.children.get(cell, ())
            if len(kids) > MAX_TREE_CHILDREN:
                raise HeaderFormatError(
                    f"cell {cell.index} has {len(kids)} children, max {MAX_TREE_CHILDREN}"
                )
            w.write(cell.index, cell_bits)
            w.write(len(kids), 3)
            w.write(1 if cell in tree.dest_flags else 0, 1)
    return w.finish()


def parse(data: bytes) -> Header:
    r = _BitReader(data)
    version = r.read(4)
    if version != HEADER_VERSION:
        raise HeaderFormatError(f"unsupported version {version}")
    group_id = r.read(32)
    shell_count = r.read(4)
    if shell_count == 0:
        raise HeaderFormatError("header has zero shell blocks")
    shells = []
    for _ in range(shell_count):
        shell_id = r.read(4)
        resolution = r.read(4)
        if resolution > 5:
            raise HeaderFormatError(f"resolution {resolution} outside 0..5")
        node_count = r.read(16)
        if node_count == 0:
            raise HeaderFormatError("empty tree block")
        cell_bits = bits_per_cell(HEX_HIER, resolution)
        total = cell_count(HEX_HIER, resolution)

        def read_node():
            idx = r.read(cell_bits)
            if idx >= total:
                raise HeaderFormatError(f"cell index {idx} >= {total}")
            n_kids = r.read(3)
            flag = r.read(1)
            return CellId(HEX_HIER, resolution, idx), n_kids, flag

        children: dict[CellId, list[CellId]] = {}
        flags: set[CellId] = set()
        consumed = 0
        root, root_kids, root_flag = read_node()
        consumed += 1
        if root_flag:
            flags.add(root)
        # Stack of (parent, children still to read) drives the pre-order walk.
        stack: list[list] = [[root, root_kids]]
        while stack:
            if stack[-1][1] == 0:
                stack.pop()
                continue
            stack[-1][1] -= 1
            if consumed >= node_count:
                raise HeaderFormatError("tree walk exceeds node count")
            cell, n_kids, flag = read_node()
            consumed += 1
            if flag:
                flags.add(cell)
            children.setdefault(stack[-1][0], []).append(cell)
            if n_kids:
                stack.append([cell, n_kids])
        if consumed != node_count:
            raise HeaderFormatError(
                f"node count {node_count} does not match tree walk ({consumed})"
            )
        children = {c: tuple(k) for c, k in children.items()}
        tree = CellTree(root, children, frozenset(flags))
        tree.validate()
        shells.append(HeaderShell(shell_id, resolution, tree))
    if r.total - r.pos >= 8:
        raise HeaderFormatError("trailing bytes after header")
    while r.pos < r.total:
        if r.read(1):
            raise HeaderFormatError("nonzero padding bits")
    return Header(group_id, tuple(shells), version)
