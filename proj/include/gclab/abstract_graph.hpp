// abstract_graph.hpp - ghost state: abstract nodes, regions, reachability
#pragma once

#include <algorithm>
#include <cstdint>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "gclab/types.hpp"

namespace gclab {

// Abstract node identity. 0 is the NO_ABS sentinel: it never names a node
// and never appears inside the abstract heap.
using AbsNodeId = std::uint32_t;
constexpr AbsNodeId kNoAbs = 0;

enum class FieldKind : std::uint8_t { Prim = 0, Ptr = 1 };

// A field value in the ghost graph: either a reference to another node or
// a 32-bit primitive word.
struct AbsValue {
    bool is_node = false;
    std::uint32_t bits = 0;  // node id when is_node, raw word otherwise

    static AbsValue node(AbsNodeId id) { return {true, id}; }
    static AbsValue prim(Word w) { return {false, w}; }

    bool operator==(const AbsValue&) const = default;
};

// Per-node shape: word count including pre-header and header, plus the
// pointer/primitive flag for every index. Indices 0 and 1 are always
// primitive (pre-header, header).
struct ObjectShape {
    std::vector<FieldKind> kinds;

    std::size_t num_fields() const { return kinds.size(); }
    std::uint32_t size_bytes() const { return static_cast<std::uint32_t>(kinds.size()) * kWordSize; }

    static ObjectShape with_ptr_fields(std::size_t num_fields, const std::vector<std::size_t>& ptr_fields) {
        ObjectShape s;
        s.kinds.assign(num_fields, FieldKind::Prim);
        for (std::size_t j : ptr_fields) s.kinds.at(j) = FieldKind::Ptr;
        return s;
    }

    bool operator==(const ObjectShape&) const = default;
};

struct AbsNode {
    ObjectShape shape;
    std::vector<AbsValue> fields;
};

// The mutator-defined ghost graph. Fresh nodes zero-initialize every
// field; writes must respect the field's kind. Pointer-kind fields accept
// node references, null, and primitives outside the GC byte range (those
// decode as primitives at the concrete level too).
class AbstractHeap {
public:
    AbstractHeap(Address gc_lo, Address gc_hi) : gc_lo_(gc_lo), gc_hi_(gc_hi) {}

    AbsNodeId fresh_node(const ObjectShape& shape) {
        if (shape.num_fields() < kMinObjectWords)
            throw ContractViolation("node needs at least pre-header and header words");
        if (shape.kinds[0] != FieldKind::Prim || shape.kinds[1] != FieldKind::Prim)
            throw ContractViolation("pre-header and header must be primitive-kind");
        AbsNodeId id = ++next_id_;
        AbsNode node;
        node.shape = shape;
        node.fields.assign(shape.num_fields(), AbsValue::prim(0));
        nodes_.emplace(id, std::move(node));
        return id;
    }

    bool contains(AbsNodeId id) const { return nodes_.count(id) != 0; }

    const AbsNode& node(AbsNodeId id) const {
        auto it = nodes_.find(id);
        if (it == nodes_.end()) throw ContractViolation("unknown abstract node");
        return it->second;
    }

    std::size_t num_fields(AbsNodeId id) const { return node(id).shape.num_fields(); }

    FieldKind field_kind(AbsNodeId id, std::size_t field) const {
        const AbsNode& n = node(id);
        if (field >= n.shape.num_fields()) throw ContractViolation("field index out of range");
        return n.shape.kinds[field];
    }

    AbsValue read(AbsNodeId id, std::size_t field) const {
        const AbsNode& n = node(id);
        if (field < 2 || field >= n.shape.num_fields())
            throw ContractViolation("field index out of range");
        return n.fields[field];
    }

    void write(AbsNodeId id, std::size_t field, AbsValue value) {
        auto it = nodes_.find(id);
        if (it == nodes_.end()) throw ContractViolation("unknown abstract node");
        AbsNode& n = it->second;
        if (field < 2 || field >= n.shape.num_fields())
            throw ContractViolation("field index out of range");
        check_kind(n.shape.kinds[field], value);
        n.fields[field] = value;
    }

    // Least fixed point of the child relation from the given roots,
    // computed by an explicit worklist. This is the brute-force oracle the
    // collectors' mark/copy phases are judged against.
    std::unordered_set<AbsNodeId> reachable_set(const std::vector<AbsNodeId>& roots) const {
        std::unordered_set<AbsNodeId> seen;
        std::vector<AbsNodeId> work;
        for (AbsNodeId r : roots) {
            if (r == kNoAbs) continue;
            if (!contains(r)) throw ContractViolation("root names an unknown node");
            if (seen.insert(r).second) work.push_back(r);
        }
        while (!work.empty()) {
            AbsNodeId cur = work.back();
            work.pop_back();
            for (const AbsValue& v : node(cur).fields) {
                if (v.is_node && seen.insert(v.bits).second) work.push_back(v.bits);
            }
        }
        return seen;
    }

    const std::unordered_map<AbsNodeId, AbsNode>& nodes() const { return nodes_; }
    AbsNodeId last_issued() const { return next_id_; }
    Address gc_lo() const { return gc_lo_; }
    Address gc_hi() const { return gc_hi_; }

private:
    void check_kind(FieldKind kind, AbsValue value) const {
        if (kind == FieldKind::Prim) {
            if (value.is_node)
                throw ContractViolation("node reference written to primitive-kind field");
            return;
        }
        if (value.is_node) {
            if (value.bits == kNoAbs || !contains(value.bits))
                throw ContractViolation("pointer field written with unknown node");
            return;
        }
        // Null and non-GC words are legal primitives in pointer fields.
        if (value.bits != 0 && value.bits > gc_lo_ && value.bits <= gc_hi_)
            throw ContractViolation("GC-range primitive written to pointer-kind field");
    }

    Address gc_lo_;
    Address gc_hi_;
    AbsNodeId next_id_ = 0;
    std::unordered_map<AbsNodeId, AbsNode> nodes_;
};

// Concrete-address -> abstract-node mapping over [mem_lo, mem_hi), one
// entry per aligned word. Unmapped and out-of-range addresses read as
// NO_ABS. Backs $toAbs as well as the per-collection regions.
class RegionMap {
public:
    RegionMap() = default;
    RegionMap(Address mem_lo, Address mem_hi)
        : mem_lo_(mem_lo), mem_hi_(mem_hi), slots_((mem_hi - mem_lo) / kWordSize, kNoAbs) {}

    Address mem_lo() const { return mem_lo_; }
    Address mem_hi() const { return mem_hi_; }

    bool in_domain(Address a) const { return aligned(a) && a >= mem_lo_ && a < mem_hi_; }

    AbsNodeId get(Address a) const {
        if (!in_domain(a)) return kNoAbs;
        return slots_[(a - mem_lo_) / kWordSize];
    }

    void set(Address a, AbsNodeId id) {
        if (!in_domain(a)) throw HeapFault("region map update outside domain");
        slots_[(a - mem_lo_) / kWordSize] = id;
    }

    void clear() { std::fill(slots_.begin(), slots_.end(), kNoAbs); }

    // True iff the map restricted to non-NO_ABS values is injective.
    bool well_formed() const {
        std::unordered_set<AbsNodeId> seen;
        for (AbsNodeId id : slots_) {
            if (id == kNoAbs) continue;
            if (!seen.insert(id).second) return false;
        }
        return true;
    }

    // Addresses mapped by this map, in ascending order.
    std::vector<Address> mapped_addresses() const {
        std::vector<Address> out;
        for (std::size_t i = 0; i < slots_.size(); ++i) {
            if (slots_[i] != kNoAbs) out.push_back(mem_lo_ + static_cast<Address>(i) * kWordSize);
        }
        return out;
    }

    std::size_t mapped_count() const {
        std::size_t n = 0;
        for (AbsNodeId id : slots_) n += (id != kNoAbs);
        return n;
    }

    bool operator==(const RegionMap&) const = default;

    // Monotone-growth predicate between two states of one region: every
    // established mapping must survive unchanged.
    static bool r_extend(const RegionMap& r_old, const RegionMap& r_new) {
        if (r_old.mem_lo_ != r_new.mem_lo_ || r_old.mem_hi_ != r_new.mem_hi_)
            throw ContractViolation("r_extend over mismatched domains");
        for (std::size_t i = 0; i < r_old.slots_.size(); ++i) {
            if (r_old.slots_[i] != kNoAbs && r_old.slots_[i] != r_new.slots_[i]) return false;
        }
        return true;
    }

private:
    Address mem_lo_ = 0;
    Address mem_hi_ = 0;
    std::vector<AbsNodeId> slots_;
};

// Which nodes were reached during which collection. The epoch counter
// advances once per collection; entries are append-only within an epoch.
class ReachedRecord {
public:
    std::uint64_t epoch() const { return epoch_; }
    void advance_epoch() { ++epoch_; }

    void record_reached(AbsNodeId abs) {
        if (abs == kNoAbs) throw ContractViolation("cannot record NO_ABS as reached");
        entries_.insert(key(abs, epoch_));
    }

    bool reached_since(AbsNodeId abs, std::uint64_t epoch) const {
        return entries_.count(key(abs, epoch)) != 0;
    }

    std::size_t entry_count() const { return entries_.size(); }

private:
    static std::uint64_t key(AbsNodeId abs, std::uint64_t epoch) {
        return (epoch << 32) | abs;
    }

    std::uint64_t epoch_ = 0;
    std::unordered_set<std::uint64_t> entries_;
};

}  // namespace gclab
