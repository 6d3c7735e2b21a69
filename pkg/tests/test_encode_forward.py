"""Encoding, target-cell tables, and stateless forwarding."""
import random

import pytest

from bierstar.errors import BierStarError, Unreachable
from bierstar.geogrid import HEX_HIER, CellId, cell_count, parent
from bierstar.orbit import Pattern, SatId, ShellSpec, build_walker, propagate
from bierstar.protocol import (
    Packet,
    TableCache,
    build_target_cell_table,
    encode,
    forward,
    run_multicast,
    serialize,
    snapshot_cells,
    spt_for_snapshot,
)
from bierstar.protocol.tables import anycast_distance


def walker_snapshot(rng):
    planes = rng.randint(2, 8)
    slots = rng.randint(3, 8)
    spec = ShellSpec(0, rng.choice([550.0, 780.0, 1200.0]), rng.uniform(40, 89),
                     planes, slots, rng.randrange(planes),
                     rng.choice([Pattern.DELTA, Pattern.STAR]))
    return propagate(build_walker(spec), rng.uniform(0, 6000.0))


def test_encode_same_cell_degenerate():
    # Coarse cells on a dense grid guarantee a same-cell source/destination.
    snap = propagate(build_walker(ShellSpec(0, 550, 53, 12, 12, 1, Pattern.DELTA)), 0.0)
    cells = snapshot_cells(snap, 0)
    src, partner = None, None
    for s in snap.sats:
        for t in snap.sats:
            if t != s and cells[t] == cells[s]:
                src, partner = s, t
                break
        if src:
            break
    assert src is not None, "dense r0 grid must contain a same-cell pair"
    hdr = encode(snap, src, {partner}, 0, 9)
    assert len(hdr.shells) == 1
    tree = hdr.shells[0].tree
    assert tree.node_count == 1
    assert tree.root == cells[src]
    assert tree.dest_flags == frozenset({cells[src]})


def test_encode_line_path_cells():
    snap = propagate(build_walker(ShellSpec(0, 550, 53, 6, 6, 1, Pattern.DELTA)), 0.0)
    r = 2
    cells = snapshot_cells(snap, r)
    src = snap.sats[0]
    spt = spt_for_snapshot(snap, src)
    # Find a destination whose SPT path crosses >= 3 distinct cells.
    from bierstar.protocol import reconstruct_path
    for dst in snap.sats[::-1]:
        path = reconstruct_path(src, dst, spt.parents)
        cpath = []
        for s in path:
            if not cpath or cpath[-1] != cells[s]:
                cpath.append(cells[s])
        if len(set(cpath)) == len(cpath) >= 3:
            hdr = encode(snap, src, {dst}, r, 1)
            tree = hdr.shells[0].tree
            assert tree.root == cpath[0]
            walk = [tree.root]
            while tree.children.get(walk[-1]):
                kids = tree.children[walk[-1]]
                assert len(kids) == 1
                walk.append(kids[0])
            assert walk == cpath
            assert tree.dest_flags == frozenset({cpath[-1]})
            return
    pytest.skip("no multi-cell simple path found")


def test_encode_branching_replication_topology():
    # Destinations on opposite sides force a branch node with two children
    # whose subtrees both carry flags (the decode-and-replicate picture).
    snap = propagate(build_walker(ShellSpec(0, 550, 53, 8, 8, 1, Pattern.DELTA)), 0.0)
    r = 1
    src = snap.sats[0]
    spt = spt_for_snapshot(snap, src)
    dests = {snap.sats[20], snap.sats[45]}
    hdr = encode(snap, src, dests, r, 1, spt)
    assert sum(len(sh.tree.dest_flags) for sh in hdr.shells) >= 1
    assert all(sh.tree.root == snapshot_cells(snap, r)[src] for sh in hdr.shells)
    # children ordering canonical: ascending cell index
    for sh in hdr.shells:
        for kids in sh.tree.children.values():
            assert list(kids) == sorted(kids, key=lambda c: c.index)


def test_encode_empty_and_unreachable():
    snap = propagate(build_walker(ShellSpec(0, 550, 53, 3, 4, 0, Pattern.DELTA)), 0.0)
    with pytest.raises(BierStarError):
        encode(snap, snap.sats[0], set(), 1, 1)
    lonely = propagate(build_walker(ShellSpec(1, 550, 53, 1, 1)), 0.0)
    # Two islands: merge the adjacency maps to build an unreachable pair.
    adjacency = dict(snap.adjacency)
    adjacency.update(lonely.adjacency)

    class TwoIslands:
        sats = snap.sats + lonely.sats
        pass

    # Simpler: ask for a destination missing from the SPT by doctoring dests.
    with pytest.raises(Unreachable) as err:
        encode(snap, snap.sats[0], {SatId(9, 9, 9)}, 1, 1)
    assert SatId(9, 9, 9) in err.value.satellites


def test_table_primary_matches_anycast_oracle():
    rng = random.Random(10)
    for _ in range(6):
        snap = walker_snapshot(rng)
        r = rng.randint(0, 2)
        cells = snapshot_cells(snap, r)
        target = cells[rng.choice(snap.sats)]
        dist = anycast_distance(snap, target)
        for sat in rng.sample(snap.sats, min(10, len(snap.sats))):
            table = build_target_cell_table(sat, snap, r, {target})
            entry = table.entries.get(target)
            own = dist[sat]
            # Oracle: brute-force argmin over strictly-downstream neighbors.
            cands = [(dist[n] + w, n) for n, w in snap.neighbors_of(sat)
                     if dist[n] < own]
            if cells[sat] == target or not cands:
                assert entry is None
            else:
                cands.sort()
                assert entry.primary == cands[0][1]
                assert list(entry.backups) == [n for _, n in cands[1:3]]


def test_table_own_cell_no_entry():
    snap = propagate(build_walker(ShellSpec(0, 550, 53, 4, 4, 1, Pattern.DELTA)), 0.0)
    cells = snapshot_cells(snap, 0)
    sat = snap.sats[0]
    table = build_target_cell_table(sat, snap, 0, {cells[sat]})
    assert cells[sat] not in table.entries


def test_forward_is_pure():
    rng = random.Random(3)
    snap = walker_snapshot(rng)
    dests = set(rng.sample(snap.sats, 4))
    src = snap.sats[0]
    hdr = encode(snap, src, dests, 1, 5)
    flagged = set()
    for sh in hdr.shells:
        flagged.update(sh.tree.dest_flags)
    tables = TableCache(snap, 1, hdr.cells(), flagged)
    pkt = Packet(hdr)
    r1 = forward(src, pkt, tables.get(src), snap, member_sats=frozenset(dests))
    r2 = forward(src, pkt, tables.get(src), snap, member_sats=frozenset(dests))
    assert r1 == r2


def test_ttl_drops_short_leash():
    snap = propagate(build_walker(ShellSpec(0, 550, 53, 6, 6, 1, Pattern.DELTA)), 0.0)
    src = snap.sats[0]
    far = snap.sats[18]  # several hops away
    hdr = encode(snap, src, {far}, 2, 1)
    rep = run_multicast(snap, hdr, src, {far}, ttl=1)
    assert far not in rep.delivered_sats
    assert rep.ttl_drops >= 1
    rep_full = run_multicast(snap, hdr, src, {far})
    assert far in rep_full.delivered_sats


def test_delivery_equals_spt_reachability_oracle():
    # 40 random walker graphs here; the acceptance suite runs 100.
    rng = random.Random(2024)
    for trial in range(40):
        snap = walker_snapshot(rng)
        r = rng.randint(0, 2)
        sats = snap.sats
        src = sats[rng.randrange(len(sats))]
        dests = set(rng.sample(sats, rng.randint(1, max(2, len(sats) // 3))))
        hdr = encode(snap, src, dests, r, 1)
        rep = run_multicast(snap, hdr, src, dests,
                            ttl=256, collect_trace=True)
        assert rep.delivered_sats == dests, (trial, snap.constellation.shells)
        # loop freedom: no (sat, tree) pair processed twice, no transit dedups
        assert len(rep.trace) == len(set(rep.trace))
        assert rep.dedup_drops_transit == 0
        assert not rep.branch_failures


def test_failure_differential_primary_down_backup_live():
    rng = random.Random(99)
    done = 0
    trial = 0
    while done < 12 and trial < 60:
        trial += 1
        snap = walker_snapshot(rng)
        r = rng.randint(0, 1)
        src = snap.sats[rng.randrange(len(snap.sats))]
        dests = set(rng.sample(snap.sats, rng.randint(2, 6)))
        hdr = encode(snap, src, dests, r, 1)
        flagged = set()
        for sh in hdr.shells:
            flagged.update(sh.tree.dest_flags)
        tables = TableCache(snap, r, hdr.cells(), flagged)
        base = run_multicast(snap, hdr, src, dests, tables=tables, ttl=256)
        assert base.delivered_sats == dests
        relay_edges = set()
        for cell, adj in tables._relays.items():
            for a, nbrs in adj.items():
                for b in nbrs:
                    relay_edges.add((a, b) if a < b else (b, a))
        # A link is failable iff every table entry using it keeps a live
        # alternative (the criterion's premise: the backup exists) and it is
        # not part of any in-cell relay tree.
        entry_count: dict = {}
        sole: set = set()
        primaries: set = set()
        for sat in snap.sats:
            t = tables.get(sat)
            for cell, entry in t.entries.items():
                cands = entry.candidates()
                for c in cands:
                    e = (sat, c) if sat < c else (c, sat)
                    entry_count[e] = entry_count.get(e, 0) + 1
                    if len(cands) == 1:
                        sole.add(e)
                e0 = ((sat, entry.primary) if sat < entry.primary
                      else (entry.primary, sat))
                if entry.backups:
                    primaries.add(e0)
        candidates = sorted(primaries - sole - relay_edges)
        if not candidates:
            continue
        failed = frozenset({candidates[rng.randrange(len(candidates))]})
        rep = run_multicast(snap, hdr, src, dests, failed_links=failed,
                            tables=tables, ttl=256)
        assert rep.delivered_sats == dests, (trial, failed)
        done += 1
    assert done == 12


def test_forest_split_keeps_wire_child_limit():
    # Stress the encoder into wide fan-out and verify serialization succeeds.
    rng = random.Random(8)
    snap = propagate(build_walker(ShellSpec(0, 1200, 80, 8, 8, 3, Pattern.DELTA)), 0.0)
    dests = set(rng.sample(snap.sats, 40))
    hdr = encode(snap, snap.sats[0], dests, 3, 1)
    data = serialize(hdr)  # raises if any node exceeds the 3-bit child field
    assert data
    for sh in hdr.shells:
        for kids in sh.tree.children.values():
            assert len(kids) <= 7
    rep = run_multicast(snap, hdr, snap.sats[0], dests, ttl=256)
    assert rep.delivered_sats == dests


def test_statelessness_no_cross_packet_state():
    # Interleave two different multicasts over the same tables: reports match
    # the isolated runs exactly.
    rng = random.Random(55)
    snap = walker_snapshot(rng)
    src = snap.sats[0]
    d1 = set(rng.sample(snap.sats, 3))
    d2 = set(rng.sample(snap.sats, 3))
    h1 = encode(snap, src, d1, 1, 1)
    h2 = encode(snap, src, d2, 1, 2)
    a1 = run_multicast(snap, h1, src, d1, ttl=256)
    a2 = run_multicast(snap, h2, src, d2, ttl=256)
    b1 = run_multicast(snap, h1, src, d1, ttl=256)
    b2 = run_multicast(snap, h2, src, d2, ttl=256)
    assert a1.delivered == b1.delivered and a2.delivered == b2.delivered


def test_leaf_delivery_sole_occupant_zero_copies():
    # Sparse constellation at fine resolution: each satellite alone in its
    # cell, so a flagged leaf at the member emits nothing.
    snap = propagate(build_walker(ShellSpec(0, 1200, 70, 3, 4, 0, Pattern.DELTA)), 0.0)
    r = 3
    cells = snapshot_cells(snap, r)
    assert len(set(cells.values())) == len(snap.sats)  # all sole occupants
    dest = snap.sats[5]
    from bierstar.protocol.tree import CellTree, Header, HeaderShell
    leaf = CellTree(cells[dest], {}, frozenset({cells[dest]}))
    hdr = Header(1, (HeaderShell(0, r, leaf),))
    flagged = {cells[dest]}
    tables = TableCache(snap, r, {cells[dest]}, flagged)
    res = forward(dest, Packet(hdr), tables.get(dest), snap,
                  member_sats=frozenset({dest}))
    assert res.delivered
    assert res.emissions == []


def test_branch_replicates_one_copy_per_next_hop():
    # A processing node with two children in distinct directions emits
    # exactly two copies carrying disjoint subtrees.
    snap = propagate(build_walker(ShellSpec(0, 550, 53, 8, 8, 1, Pattern.DELTA)), 0.0)
    r = 1
    cells = snapshot_cells(snap, r)
    src = snap.sats[0]
    # Destinations in opposite directions so the root must branch.
    spt = spt_for_snapshot(snap, src)
    from bierstar.protocol import reconstruct_path
    from bierstar.protocol.tree import Header
    hdr = None
    for d1 in snap.sats[10:]:
        for d2 in reversed(snap.sats):
            if d1 == d2 or cells[d1] == cells[d2]:
                continue
            cand = encode(snap, src, {d1, d2}, r, 1, spt)
            if len(cand.shells) == 1:
                tree = cand.shells[0].tree
                kids = tree.children.get(tree.root, ())
                if len(kids) == 2:
                    hdr = cand
                    break
        if hdr:
            break
    assert hdr is not None
    tree = hdr.shells[0].tree
    flagged = set(tree.dest_flags)
    tables = TableCache(snap, r, hdr.cells(), flagged)
    res = forward(src, Packet(hdr), tables.get(src), snap, member_sats=frozenset())
    # one copy per distinct next hop; if hops differ there are exactly two
    hops = [h for h, _ in res.emissions]
    assert len(hops) == len(set(hops))
    carried = [frozenset(sh.tree.nodes()[0].index for sh in pkt.header.shells)
               for _, pkt in res.emissions]
    if len(res.emissions) == 2:
        roots = [set(sh.tree.nodes()) for _, pkt in res.emissions
                 for sh in pkt.header.shells]
        assert not roots[0] & roots[1]  # disjoint subtrees
    else:
        # both children shared one next hop: the single packet carries both
        assert len(res.emissions) == 1
        assert len(res.emissions[0][1].header.shells) == 2
