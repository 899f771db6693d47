// invariants.hpp - executable library of the heap predicates, evaluated over
// (heap, ghost, collector-state) snapshots; each check names the violated
// predicate and the first offending address
#pragma once

#include <string>
#include <vector>

#include "gclab/copy_collector.hpp"
#include "gclab/ms_collector.hpp"
#include "gclab/mutator.hpp"

namespace gclab {

struct Violation {
    std::string predicate;
    std::uint64_t where = 0;  // address or node id
    std::string detail;
};

struct CheckReport {
    bool passed = true;
    std::vector<Violation> violations;

    void fail(std::string predicate, std::uint64_t where, std::string detail) {
        passed = false;
        if (violations.size() < 32) violations.push_back({std::move(predicate), where, std::move(detail)});
    }

    void merge(const CheckReport& other) {
        if (other.passed) return;
        for (const Violation& v : other.violations) fail(v.predicate, v.where, v.detail);
    }

    std::string summary() const {
        if (passed) return "ok";
        std::string out;
        for (const Violation& v : violations) {
            out += v.predicate + " @ " + std::to_string(v.where) + ": " + v.detail + "\n";
        }
        return out;
    }
};

inline CheckReport check_well_formed(const RegionMap& r, const char* name = "WellFormed") {
    CheckReport rep;
    std::unordered_map<AbsNodeId, Address> seen;
    for (Address a : r.mapped_addresses()) {
        AbsNodeId id = r.get(a);
        auto [it, fresh] = seen.emplace(id, a);
        if (!fresh)
            rep.fail(name, a,
                     "node " + std::to_string(id) + " also mapped at " + std::to_string(it->second));
    }
    return rep;
}

// Object invariant over regions: if the source region claims an object at
// base, every field word must decode under the target region to exactly the
// abstract value stored in the ghost graph.
inline CheckReport check_obj_inv(Address base, const RegionMap& rs, const RegionMap& rt,
                                 const AbstractHeap& abs, const HeapImage& heap) {
    CheckReport rep;
    AbsNodeId node = rs.get(base);
    if (node == kNoAbs) return rep;
    if (!abs.contains(node)) {
        rep.fail("ObjInv", base, "maps to unknown node " + std::to_string(node));
        return rep;
    }
    const AbsNode& n = abs.node(node);
    for (std::size_t j = 2; j < n.shape.num_fields(); ++j) {
        Word w = heap.load(base + static_cast<Address>(j) * kWordSize);
        DecodeResult dr = value_decode(n.shape.kinds[j] == FieldKind::Ptr, w, rt, heap);
        if (!dr.ok) {
            rep.fail("ObjInv", base, "field " + std::to_string(j) + ": " + dr.detail);
        } else if (!(dr.value == n.fields[j])) {
            rep.fail("ObjInv", base,
                     "field " + std::to_string(j) + " decodes to the wrong abstract value");
        }
    }
    return rep;
}

// Partial-scan form for the object at the head of the copy queue: fields
// below the scan cursor are already fixed (decode under r2), fields at or
// beyond it still point into from-space (decode under r1).
inline CheckReport check_obj_inv_split(Address base, const RegionMap& r2, const RegionMap& r1,
                                       Address cursor, const AbstractHeap& abs,
                                       const HeapImage& heap) {
    CheckReport rep;
    AbsNodeId node = r2.get(base);
    if (node == kNoAbs) {
        rep.fail("ObjInv", base, "queue head not in r2");
        return rep;
    }
    const AbsNode& n = abs.node(node);
    for (std::size_t j = 2; j < n.shape.num_fields(); ++j) {
        Address field_addr = base + static_cast<Address>(j) * kWordSize;
        const RegionMap& rt = field_addr < cursor ? r2 : r1;
        Word w = heap.load(field_addr);
        DecodeResult dr = value_decode(n.shape.kinds[j] == FieldKind::Ptr, w, rt, heap);
        if (!dr.ok) {
            rep.fail("ObjInv", base, "head field " + std::to_string(j) + ": " + dr.detail);
        } else if (!(dr.value == n.fields[j])) {
            rep.fail("ObjInv", base,
                     "head field " + std::to_string(j) + " decodes to the wrong abstract value");
        }
    }
    return rep;
}

// An unforwarded live object's header must name a descriptor that agrees
// with the ghost node's shape.
inline CheckReport check_layout(Address base, AbsNodeId node, const AbstractHeap& abs,
                                const DescriptorTable& descriptors, const HeapImage& heap) {
    CheckReport rep;
    Word header = heap.load(base + kWordSize);
    if (!descriptors.known(header)) {
        rep.fail("LayoutInv", base, "header word " + std::to_string(header) + " is not a descriptor");
        return rep;
    }
    if (!(descriptors.object_layout(header) == abs.node(node).shape))
        rep.fail("LayoutInv", base, "descriptor shape disagrees with ghost node shape");
    return rep;
}

// Free-list ghost invariants: entry sizing and separation, next-pointer
// ordering, and agreement between the ghost maps and the heap words.
inline CheckReport check_free_list(const MsCollector& ms) {
    CheckReport rep;
    const HeapImage& heap = ms.heap();
    const RegionMap& to_abs = ms.ghost().to_abs;
    Address hi = heap.mem_hi();

    for (const auto& [i, size] : ms.fs()) {
        if (size < kMinFreeEntry || static_cast<std::uint64_t>(i) + size > hi) {
            rep.fail("FreeListInv", i, "entry size " + std::to_string(size) + " out of bounds");
            continue;
        }
        if (to_abs.get(i) != kNoAbs) rep.fail("FreeListInv", i, "entry start maps to a node");
        for (Address j = i + kWordSize; j < i + size; j += kWordSize) {
            if (to_abs.get(j) != kNoAbs) {
                rep.fail("FreeListInv", i, "entry interior word " + std::to_string(j) + " maps to a node");
                break;
            }
            if (ms.fs().count(j)) {
                rep.fail("FreeListInv", i, "entry overlaps entry at " + std::to_string(j));
                break;
            }
        }
        Address next = ms.fn().count(i) ? ms.fn().at(i) : 0;
        if (heap.load(i) != next) rep.fail("FreeListInv", i, "next word disagrees with ghost");
        if (heap.load(i + kWordSize) != size) rep.fail("FreeListInv", i, "size word disagrees with ghost");
        if (next != 0) {
            if (!(i + size < next && next <= hi))
                rep.fail("FreeListInv", i, "next entry " + std::to_string(next) + " not beyond this entry");
            else if (!ms.fs().count(next))
                rep.fail("FreeListInv", i, "next pointer targets a non-entry");
            else {
                for (Address j = i + kWordSize; j < next; j += kWordSize) {
                    if (ms.fs().count(j) && ms.fn().count(j) && ms.fn().at(j) != 0) {
                        rep.fail("FreeListInv", i,
                                 "intervening linked entry at " + std::to_string(j));
                        break;
                    }
                }
            }
        }
    }
    // the head must reach every linked entry in ascending order
    Address cur = ms.free_head();
    Address prev = 0;
    while (cur != 0) {
        if (!ms.fs().count(cur)) {
            rep.fail("FreeListInv", cur, "list walk reached a non-entry");
            break;
        }
        if (prev != 0 && cur <= prev) {
            rep.fail("FreeListInv", cur, "list walk not ascending");
            break;
        }
        prev = cur;
        cur = ms.fn().count(cur) ? ms.fn().at(cur) : 0;
    }
    return rep;
}

// The local cache region is allocator-owned free space: unallocated color,
// no ghost node, no free-list entry inside it.
inline CheckReport check_cache(const MsCollector& ms) {
    CheckReport rep;
    if (ms.cache_size() == 0) return rep;
    const HeapImage& heap = ms.heap();
    Address lo = ms.cache_ptr();
    if (!heap.gc_addr(lo) || static_cast<std::uint64_t>(lo) + ms.cache_size() > heap.mem_hi()) {
        rep.fail("CacheInv", lo, "cache region out of bounds");
        return rep;
    }
    for (Address a = lo; a < lo + ms.cache_size(); a += kWordSize) {
        if (heap.color_of(a) != Color::Unalloc) rep.fail("CacheInv", a, "cache word has a color");
        if (ms.ghost().to_abs.get(a) != kNoAbs) rep.fail("CacheInv", a, "cache word maps to a node");
        if (ms.fs().count(a)) rep.fail("CacheInv", a, "free-list entry inside the cache");
        if (!rep.passed) return rep;
    }
    return rep;
}

// Mark-sweep mutator-boundary invariant: colors in {unalloc, white}, the
// color/region correspondence, per-object invariants, free list and cache.
inline CheckReport check_mutator_inv_ms(const MsCollector& ms) {
    CheckReport rep;
    const HeapImage& heap = ms.heap();
    const GhostState& ghost = ms.ghost();
    rep.merge(check_well_formed(ghost.to_abs, "MutatorInvMS.WellFormed"));
    for (Address i = heap.mem_lo(); i < heap.mem_hi(); i += kWordSize) {
        Color c = heap.color_of(i);
        if (c != Color::Unalloc && c != Color::White)
            rep.fail("MutatorInvMS", i, "color out of mutator range");
        bool live = ghost.to_abs.get(i) != kNoAbs;
        if (live != (c != Color::Unalloc))
            rep.fail("MutatorInvMS", i, "allocation/color correspondence broken");
        if (live) {
            rep.merge(check_obj_inv(i, ghost.to_abs, ghost.to_abs, ghost.abs, heap));
            rep.merge(check_layout(i, ghost.to_abs.get(i), ghost.abs, ms.descriptors(), heap));
        }
        if (!rep.passed && rep.violations.size() >= 8) return rep;
    }
    rep.merge(check_free_list(ms));
    rep.merge(check_cache(ms));
    return rep;
}

// Mark-sweep collection invariant. During the mark phase this is the
// region-based color correspondence plus the tri-color ban; during the
// sweep it is the sweep loop invariant split at the sweep cursor. At a
// mutator boundary it degenerates to the region-free form.
inline CheckReport check_gc_inv_ms(const MsCollector& ms) {
    CheckReport rep;
    const HeapImage& heap = ms.heap();
    const GhostState& ghost = ms.ghost();
    const RegionMap& to_abs = ghost.to_abs;
    rep.merge(check_well_formed(to_abs, "GcInvMS.WellFormed"));

    auto tri_color = [&](Address i, const char* pred) {
        AbsNodeId node = to_abs.get(i);
        if (node == kNoAbs || !ghost.abs.contains(node)) return;
        const AbsNode& n = ghost.abs.node(node);
        for (std::size_t j = 2; j < n.shape.num_fields(); ++j) {
            if (n.shape.kinds[j] != FieldKind::Ptr) continue;
            Word w = heap.load(i + static_cast<Address>(j) * kWordSize);
            if (!gc_addr_ex(heap, w) || !aligned(w)) continue;
            if (heap.color_of(w - kWordSize) == Color::White)
                rep.fail(pred, i, "black object points to white object at " + std::to_string(w - kWordSize));
        }
    };

    if (!ms.in_collection()) {
        for (Address i = heap.mem_lo(); i < heap.mem_hi(); i += kWordSize) {
            bool live = to_abs.get(i) != kNoAbs;
            Color c = heap.color_of(i);
            if (live != (c != Color::Unalloc))
                rep.fail("GcInvMS", i, "allocation/color correspondence broken");
            if (live) rep.merge(check_obj_inv(i, to_abs, to_abs, ghost.abs, heap));
            if (c == Color::Black) tri_color(i, "TriColor");
            if (!rep.passed && rep.violations.size() >= 8) return rep;
        }
        return rep;
    }

    const RegionMap& r1 = ms.r1();
    const RegionMap& r2 = ms.r2();

    if (ms.phase() == Phase::Mark) {
        for (Address i = heap.mem_lo(); i < heap.mem_hi(); i += kWordSize) {
            if (r1.get(i) != to_abs.get(i))
                rep.fail("GcInvMS", i, "r1 must equal toAbs throughout the mark phase");
            Color c = heap.color_of(i);
            bool live = to_abs.get(i) != kNoAbs;
            if (live != (c != Color::Unalloc))
                rep.fail("GcInvMS", i, "allocation/color correspondence broken");
            switch (c) {
                case Color::Unalloc:
                    break;
                case Color::White:
                    if (r1.get(i) == kNoAbs || r2.get(i) != kNoAbs)
                        rep.fail("GcInvMS", i, "white object must be in r1 and not in r2");
                    rep.merge(check_obj_inv(i, r1, r1, ghost.abs, heap));
                    break;
                case Color::Gray:
                    if (r1.get(i) == kNoAbs || r1.get(i) != r2.get(i))
                        rep.fail("GcInvMS", i, "gray object must be in r1 and r2 identically");
                    rep.merge(check_obj_inv(i, r1, r1, ghost.abs, heap));
                    break;
                case Color::Black:
                    if (r1.get(i) == kNoAbs || r1.get(i) != r2.get(i))
                        rep.fail("GcInvMS", i, "black object must be in r1 and r2 identically");
                    rep.merge(check_obj_inv(i, r2, r2, ghost.abs, heap));
                    tri_color(i, "TriColor");
                    break;
            }
            if (!rep.passed && rep.violations.size() >= 8) return rep;
        }
        // every stack member is gray; every gray is on the stack or in hand
        for (Address a : ms.mark_stack()) {
            if (heap.color_of(a) != Color::Gray)
                rep.fail("MarkStackInv", a, "stack member is not gray");
        }
        std::unordered_set<Address> on_stack(ms.mark_stack().begin(), ms.mark_stack().end());
        for (Address a : r2.mapped_addresses()) {
            if (heap.color_of(a) == Color::Gray && !on_stack.count(a) && a != ms.scanning())
                rep.fail("MarkStackInv", a, "gray object missing from the mark stack");
        }
        return rep;
    }

    // sweep: below the cursor everything is mutator-colored; above it the
    // mark-phase coloring still stands, minus gray objects
    Address cursor = ms.sweep_cursor();
    for (Address i = heap.mem_lo(); i < heap.mem_hi(); i += kWordSize) {
        Color c = heap.color_of(i);
        bool live = to_abs.get(i) != kNoAbs;
        if (c == Color::Gray) rep.fail("GcInvMS", i, "gray object during sweep");
        if (live != (c != Color::Unalloc))
            rep.fail("GcInvMS", i, "allocation/color correspondence broken");
        if (i < cursor) {
            if (c == Color::Black) rep.fail("GcInvMS", i, "black object below the sweep cursor");
            if (c == Color::White) {
                if (r2.get(i) == kNoAbs) rep.fail("GcInvMS", i, "survivor below cursor not in r2");
                rep.merge(check_obj_inv(i, r2, r2, ghost.abs, heap));
            }
        } else {
            if (c == Color::White && r2.get(i) != kNoAbs)
                rep.fail("GcInvMS", i, "doomed white object above cursor is in r2");
            if (c == Color::Black && r2.get(i) == kNoAbs)
                rep.fail("GcInvMS", i, "black object above cursor not in r2");
        }
        if (!rep.passed && rep.violations.size() >= 8) return rep;
    }
    rep.merge(check_free_list(ms));  // the list built so far must already be valid
    return rep;
}

// Copying mutator-boundary invariant: bounds chain with an empty to-space,
// live objects tile exactly [Fi, Fk) with start bits set, headers are never
// forwarding pointers.
inline CheckReport check_mutator_inv_copy(const CopyCollector& cc) {
    CheckReport rep;
    const HeapImage& heap = cc.heap();
    const GhostState& ghost = cc.ghost();
    SpaceBounds b = cc.bounds();
    Address lo = heap.mem_lo(), hi = heap.mem_hi();
    rep.merge(check_well_formed(ghost.to_abs, "MutatorInvCopy.WellFormed"));
    if (!(lo <= b.fi && b.fi <= b.fk && b.fk <= b.fl && b.fl <= hi))
        rep.fail("MutatorInvCopy", b.fi, "from-space bound chain broken");
    if (!(lo <= b.ti && b.ti == b.tj && b.tj == b.tk && b.tk <= b.tl && b.tl <= hi))
        rep.fail("MutatorInvCopy", b.ti, "to-space must be empty at a mutator boundary");
    if (!(b.fl <= b.ti || b.tl <= b.fi)) rep.fail("MutatorInvCopy", b.fi, "spaces overlap");
    if (!rep.passed) return rep;

    for (Address i = lo; i < hi; i += kWordSize) {
        bool live = ghost.to_abs.get(i) != kNoAbs;
        bool in_from = b.fi <= i && i < b.fk;
        if (live != (in_from && heap.start_bit(i))) {
            rep.fail("MutatorInvCopy", i, live ? "live base outside from-space or missing start bit"
                                               : "start bit on a dead word");
            if (rep.violations.size() >= 8) return rep;
        }
        if (!in_from && heap.start_bit(i)) rep.fail("MutatorInvCopy", i, "stray start bit");
        if (live) {
            Word header = heap.load(i + kWordSize);
            if (cc.is_forwarded(header))
                rep.fail("MutatorInvCopy", i, "live object header is a forwarding pointer");
            rep.merge(check_obj_inv(i, ghost.to_abs, ghost.to_abs, ghost.abs, heap));
            rep.merge(check_layout(i, ghost.to_abs.get(i), ghost.abs, cc.descriptors(), heap));
        }
        if (!rep.passed && rep.violations.size() >= 8) return rep;
    }

    // allocated from-space must tile exactly
    Address i = b.fi;
    while (i < b.fk) {
        AbsNodeId node = ghost.to_abs.get(i);
        if (node == kNoAbs) {
            rep.fail("MutatorInvCopy", i, "gap in the allocated from-space");
            return rep;
        }
        i += static_cast<Address>(ghost.abs.node(node).shape.size_bytes());
    }
    if (i != b.fk) rep.fail("MutatorInvCopy", i, "allocation frontier does not match object sizes");
    return rep;
}

// Copying collection invariant: the Fig-8-style three-zone discipline.
// Fixed to-space objects point r2->r2, queued ones r2->r1 (the queue head
// split at the scan cursor), unforwarded from-space objects r1->r1, and
// forwarding headers map old base and new base to the same node.
inline CheckReport check_gc_inv_copy(const CopyCollector& cc) {
    CheckReport rep;
    const HeapImage& heap = cc.heap();
    const GhostState& ghost = cc.ghost();
    SpaceBounds b = cc.bounds();
    Address lo = heap.mem_lo(), hi = heap.mem_hi();

    rep.merge(check_well_formed(ghost.to_abs, "GcInvCopy.WellFormed"));
    if (!(lo <= b.fi && b.fi <= b.fk && b.fk <= b.fl && b.fl <= hi))
        rep.fail("GcInvCopy", b.fi, "from-space bound chain broken");
    if (!(lo <= b.ti && b.ti <= b.tj && b.tj <= b.tk && b.tk <= b.tl && b.tl <= hi))
        rep.fail("GcInvCopy", b.ti, "to-space bound chain broken");
    if (!(b.fl <= b.ti || b.tl <= b.fi)) rep.fail("GcInvCopy", b.fi, "spaces overlap");
    if (!rep.passed) return rep;

    RegionMap empty(lo, hi);
    const RegionMap& r1 = cc.in_collection() ? cc.r1() : ghost.to_abs;
    const RegionMap& r2 = cc.in_collection() ? cc.r2() : empty;

    for (Address i = lo; i < hi; i += kWordSize) {
        bool in_from = b.fi <= i && i < b.fk;
        bool in_to = b.ti <= i && i < b.tk;
        if (r2.get(i) != kNoAbs && ghost.to_abs.get(i) != r2.get(i))
            rep.fail("GcInvCopy", i, "r2 disagrees with toAbs");
        if ((r1.get(i) != kNoAbs) != (in_from && heap.start_bit(i)))
            rep.fail("GcInvCopy", i, "r1 domain must be the started from-space bases");
        if ((r2.get(i) != kNoAbs) != (in_to && heap.start_bit(i)))
            rep.fail("GcInvCopy", i, "r2 domain must be the started to-space bases");
        if (!rep.passed && rep.violations.size() >= 8) return rep;

        if (in_from && r1.get(i) != kNoAbs) {
            Word header = heap.load(i + kWordSize);
            bool fwd = cc.is_forwarded(header);
            bool live_here = ghost.to_abs.get(i) != kNoAbs;
            if (fwd == live_here)
                rep.fail("GcInvCopy", i, "forwarding state disagrees with toAbs");
            if (fwd) {
                if (r2.get(header - kWordSize) != r1.get(i))
                    rep.fail("GcInvCopy", i, "forwarding pointer targets the wrong node");
            } else {
                if (ghost.to_abs.get(i) != r1.get(i))
                    rep.fail("GcInvCopy", i, "unforwarded object left r1");
                rep.merge(check_obj_inv(i, r1, r1, ghost.abs, heap));
                rep.merge(check_layout(i, r1.get(i), ghost.abs, cc.descriptors(), heap));
            }
        }
        if (in_to && r2.get(i) != kNoAbs) {
            Word header = heap.load(i + kWordSize);
            if (cc.is_forwarded(header))
                rep.fail("GcInvCopy", i, "to-space object header is a forwarding pointer");
            if (ghost.to_abs.get(i) == kNoAbs)
                rep.fail("GcInvCopy", i, "to-space object missing from toAbs");
            rep.merge(check_layout(i, r2.get(i), ghost.abs, cc.descriptors(), heap));
            if (i < b.tj) {
                rep.merge(check_obj_inv(i, r2, r2, ghost.abs, heap));
            } else if (i == b.tj) {
                rep.merge(check_obj_inv_split(i, r2, r1, cc.scan_cursor(), ghost.abs, heap));
            } else {
                rep.merge(check_obj_inv(i, r2, r1, ghost.abs, heap));
            }
        }
        if (!rep.passed && rep.violations.size() >= 8) return rep;
    }
    return rep;
}

// Collection effectiveness: every address still mapped after a collection
// names a node that was recorded reached during that collection's epoch.
inline CheckReport check_effectiveness(const GhostState& ghost, std::uint64_t epoch) {
    CheckReport rep;
    for (Address a : ghost.to_abs.mapped_addresses()) {
        AbsNodeId node = ghost.to_abs.get(a);
        if (!ghost.reached.reached_since(node, epoch))
            rep.fail("Effectiveness", a,
                     "survivor node " + std::to_string(node) + " was never reached in epoch " +
                         std::to_string(epoch));
    }
    return rep;
}

// Byte conservation for mark-sweep: the live/free-list/cache/fragment walk
// must tile the GC space exactly.
inline CheckReport check_conservation_ms(const MsCollector& ms) {
    CheckReport rep;
    MsAccounting acct = ms.accounting();
    if (!acct.walk_ok) {
        rep.fail("Conservation", 0, "accounting walk did not tile the heap");
        return rep;
    }
    if (acct.total() != ms.config().heap_bytes)
        rep.fail("Conservation", 0,
                 "live+freed+cache+fragments = " + std::to_string(acct.total()) + " != " +
                     std::to_string(ms.config().heap_bytes));
    return rep;
}

// Phase-appropriate dispatch used by the runner and by `check` on restored
// snapshots.
inline CheckReport check_boundary(const ManagedHeap& backend) {
    CheckReport rep;
    if (backend.kind() == CollectorKind::MarkSweep) {
        const auto& ms = static_cast<const MsCollector&>(backend);
        rep.merge(check_mutator_inv_ms(ms));
        rep.merge(check_gc_inv_ms(ms));
        rep.merge(check_conservation_ms(ms));
    } else {
        const auto& cc = static_cast<const CopyCollector&>(backend);
        rep.merge(check_mutator_inv_copy(cc));
        rep.merge(check_gc_inv_copy(cc));
    }
    return rep;
}

inline CheckReport check_collection_step(const ManagedHeap& backend) {
    if (backend.kind() == CollectorKind::MarkSweep)
        return check_gc_inv_ms(static_cast<const MsCollector&>(backend));
    return check_gc_inv_copy(static_cast<const CopyCollector&>(backend));
}

}  // namespace gclab
