// mutator.hpp - the collector-independent mutator/memory-manager contract:
// initialize, alloc, readField, writeField, collect over an explicit root array
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "gclab/abstract_graph.hpp"
#include "gclab/heap_model.hpp"
#include "gclab/types.hpp"

namespace gclab {

// Ghost state shared by the mutator interface and the collectors. Used
// only for checking; the collectors' functional behavior never reads the
// abstract heap.
struct GhostState {
    AbstractHeap abs;
    RegionMap to_abs;
    ReachedRecord reached;

    GhostState(Address lo, Address hi) : abs(lo, hi), to_abs(lo, hi) {}
};

// Fixed-capacity array of root slots. A slot is null (0) or a canonical
// object pointer; a moving collection may rewrite the non-null slots.
class RootArray {
public:
    explicit RootArray(std::size_t slots) : slots_(slots, 0) {}

    std::size_t size() const { return slots_.size(); }

    Address get(std::size_t i) const {
        if (i >= slots_.size()) throw ContractViolation("root slot out of range");
        return slots_[i];
    }

    void set(std::size_t i, Address p) {
        if (i >= slots_.size()) throw ContractViolation("root slot out of range");
        slots_[i] = p;
    }

    std::vector<Address> non_null() const {
        std::vector<Address> out;
        for (Address p : slots_)
            if (p != 0) out.push_back(p);
        return out;
    }

private:
    std::vector<Address> slots_;
};

// Per-collection metrics row, shared across backends so the CLI can emit
// one CSV schema.
struct CollectionStats {
    std::uint64_t epoch = 0;
    std::uint64_t live_bytes = 0;
    std::uint64_t freed_or_copied_bytes = 0;
    std::uint64_t pause_steps = 0;
    std::uint64_t free_list_entries = 0;
    double occupancy_pct = 0.0;
    // mark-sweep extras
    std::uint64_t largest_free_entry = 0;
    std::uint64_t mark_stack_high_water = 0;
    std::uint64_t fragment_bytes = 0;
    std::uint64_t cache_bytes = 0;
    // copying extras
    std::uint64_t objects_copied = 0;
    std::uint64_t queue_high_water = 0;
    double survival_ratio = 0.0;
};

// Injectable collector defects for the fault-injection tests. All default
// to off; the differential harness flips one at a time to prove the
// checkers catch it.
struct FaultHooks {
    bool skip_last_root = false;      // tracing ignores the highest non-null root slot
    bool skip_one_field_fix = false;  // copying scan leaves one pointer field stale
    bool skip_ghost_write = false;    // writeField forgets the abstract-heap update
};

enum class Phase { Mutator, Mark, Sweep, Scan };

// The memory manager half of the contract. Both practical collectors
// derive from this; readField/writeField are shared because their
// specifications are identical across backends.
class ManagedHeap {
public:
    explicit ManagedHeap(const HeapConfig& config)
        : config_(config),
          heap_(config.mem_lo, config.mem_hi()),
          descriptors_(config.mem_lo),
          ghost_(config.mem_lo, config.mem_hi()) {
        config_.validate();
    }

    virtual ~ManagedHeap() = default;
    ManagedHeap(const ManagedHeap&) = delete;
    ManagedHeap& operator=(const ManagedHeap&) = delete;

    virtual CollectorKind kind() const = 0;
    virtual void collect(RootArray& roots) = 0;

    // Registers a fresh abstract node, finds space (collecting if needed,
    // which may rewrite roots), and returns the canonical pointer.
    std::pair<Address, AbsNodeId> allocate(const ObjectShape& shape, RootArray& roots) {
        if (shape.num_fields() < kMinObjectWords)
            throw ContractViolation("allocation needs at least 2 words");
        AbsNodeId node = ghost_.abs.fresh_node(shape);
        Address ptr = allocate_impl(shape, roots, node);
        return {ptr, node};
    }

    Word read_field(Address ptr, std::size_t field) {
        AbsNodeId node = require_pointer(ptr);
        require_field(node, field);
        return heap_.load(ptr - kWordSize + static_cast<Address>(field) * kWordSize);
    }

    void write_field(Address ptr, std::size_t field, Word v) {
        AbsNodeId node = require_pointer(ptr);
        require_field(node, field);
        FieldKind kind = ghost_.abs.field_kind(node, field);
        AbsValue decoded = value_decode_or_throw(kind == FieldKind::Ptr, v, ghost_.to_abs, heap_);
        heap_.store(ptr - kWordSize + static_cast<Address>(field) * kWordSize, v);
        if (!faults.skip_ghost_write) ghost_.abs.write(node, field, decoded);
    }

    // The abstract node a canonical pointer denotes, or NO_ABS.
    AbsNodeId node_at(Address ptr) const {
        if (ptr < kWordSize) return kNoAbs;
        return ghost_.to_abs.get(ptr - kWordSize);
    }

    const HeapConfig& config() const { return config_; }
    const HeapImage& heap() const { return heap_; }
    const GhostState& ghost() const { return ghost_; }
    const DescriptorTable& descriptors() const { return descriptors_; }
    Phase phase() const { return phase_; }
    const std::vector<CollectionStats>& collection_stats() const { return stats_; }

    // Mutable access for tests, fault injection, and snapshot restore.
    HeapImage& debug_heap() { return heap_; }
    GhostState& debug_ghost() { return ghost_; }

    FaultHooks faults;

    // Invoked after each collector micro-step (root push, object scan,
    // sweep iteration, field fix). Drives step-intensity checking.
    std::function<void(Phase)> on_step;

protected:
    virtual Address allocate_impl(const ObjectShape& shape, RootArray& roots, AbsNodeId node) = 0;

    AbsNodeId require_pointer(Address ptr) const {
        AbsNodeId node = node_at(ptr);
        if (node == kNoAbs)
            throw ContractViolation("not a live canonical pointer: " + std::to_string(ptr));
        return node;
    }

    void require_field(AbsNodeId node, std::size_t field) const {
        if (field < 2 || field >= ghost_.abs.num_fields(node))
            throw ContractViolation("field index " + std::to_string(field) + " out of range");
    }

    // Lays down pre-header, header, and zeroed payload for a new object,
    // and binds its base address to the abstract node.
    void paint_object(Address base, const ObjectShape& shape, AbsNodeId node) {
        Word header = descriptors_.intern(shape);
        heap_.store(base, 0);
        heap_.store(base + kWordSize, header);
        for (std::size_t j = 2; j < shape.num_fields(); ++j)
            heap_.store(base + static_cast<Address>(j) * kWordSize, 0);
        ghost_.to_abs.set(base, node);
    }

    void step(Phase p) {
        ++step_count_;
        if (on_step) on_step(p);
    }

    HeapConfig config_;
    HeapImage heap_;
    DescriptorTable descriptors_;
    GhostState ghost_;
    Phase phase_ = Phase::Mutator;
    std::uint64_t step_count_ = 0;
    std::vector<CollectionStats> stats_;
};

// One mutator operation as seen by the trace hook: op name, arguments,
// result, collection epoch.
struct OpRecord {
    std::string op;
    std::vector<std::uint64_t> args;
    std::uint64_t result = 0;
    std::uint64_t epoch = 0;
};

// The mutator's handle on a managed heap: the root array plus the four
// memory-management operations routed through the backend.
class Mutator {
public:
    explicit Mutator(std::unique_ptr<ManagedHeap> backend)
        : backend_(std::move(backend)), roots_(backend_->config().root_slots) {}

    ManagedHeap& backend() { return *backend_; }
    const ManagedHeap& backend() const { return *backend_; }
    RootArray& roots() { return roots_; }
    const RootArray& roots() const { return roots_; }

    std::pair<Address, AbsNodeId> alloc(const ObjectShape& shape) {
        auto [ptr, node] = backend_->allocate(shape, roots_);
        trace("alloc", {shape.num_fields()}, ptr);
        return {ptr, node};
    }

    std::pair<Address, AbsNodeId> alloc_into(std::size_t slot, const ObjectShape& shape) {
        auto [ptr, node] = backend_->allocate(shape, roots_);
        roots_.set(slot, ptr);
        trace("alloc", {slot, shape.num_fields()}, ptr);
        return {ptr, node};
    }

    Word read_field(Address ptr, std::size_t field) {
        Word v = backend_->read_field(ptr, field);
        trace("read", {ptr, field}, v);
        return v;
    }

    void write_field(Address ptr, std::size_t field, Word v) {
        backend_->write_field(ptr, field, v);
        trace("write", {ptr, field, v}, 0);
    }

    void collect() {
        backend_->collect(roots_);
        trace("collect", {}, 0);
    }

    Address root(std::size_t slot) const { return roots_.get(slot); }

    void set_root(std::size_t slot, Address p) {
        if (p != 0 && backend_->node_at(p) == kNoAbs)
            throw ContractViolation("root slot must hold null or a live canonical pointer");
        roots_.set(slot, p);
        trace("set_root", {slot, p}, 0);
    }

    void drop_root(std::size_t slot) {
        roots_.set(slot, 0);
        trace("drop_root", {slot}, 0);
    }

    void dup_root(std::size_t from, std::size_t to) {
        roots_.set(to, roots_.get(from));
        trace("dup_root", {from, to}, 0);
    }

    // Abstract nodes currently designated by the roots.
    std::vector<AbsNodeId> root_nodes() const {
        std::vector<AbsNodeId> out;
        for (std::size_t i = 0; i < roots_.size(); ++i) {
            Address p = roots_.get(i);
            out.push_back(p == 0 ? kNoAbs : backend_->node_at(p));
        }
        return out;
    }

    std::function<void(const OpRecord&)> trace_hook;

private:
    void trace(const char* op, std::vector<std::uint64_t> args, std::uint64_t result) {
        if (!trace_hook) return;
        OpRecord rec;
        rec.op = op;
        rec.args = std::move(args);
        rec.result = result;
        rec.epoch = backend_->ghost().reached.epoch();
        trace_hook(rec);
    }

    std::unique_ptr<ManagedHeap> backend_;
    RootArray roots_;
};

}  // namespace gclab
