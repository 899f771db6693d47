// copy_collector.hpp - Cheney semispace copying collector: bump allocation,
// breadth-first copy through a to-space scan queue, forwarding pointers in
// header words, start-bit maintenance, space swap
#pragma once

#include "gclab/mutator.hpp"

namespace gclab {

struct SpaceBounds {
    Address fi = 0, fk = 0, fl = 0;
    Address ti = 0, tj = 0, tk = 0, tl = 0;
};

class CopyCollector final : public ManagedHeap {
public:
    explicit CopyCollector(const HeapConfig& config)
        : ManagedHeap(config),
          r1_(config.mem_lo, config.mem_hi()),
          r2_(config.mem_lo, config.mem_hi()) {
        Address lo = config_.mem_lo;
        Address hi = config_.mem_hi();
        mem_mid_ = lo + align_down((hi - lo) / 2);
        fi_ = fk_ = lo;
        fl_ = ti_ = tj_ = tk_ = mem_mid_;
        tl_ = hi;
        scan_cursor_ = mem_mid_;
    }

    CollectorKind kind() const override { return CollectorKind::Copying; }

    void collect(RootArray& roots) override {
        std::uint64_t steps_before = step_count_;
        std::uint64_t from_used = fk_ - fi_;
        ghost_.reached.advance_epoch();
        r1_ = ghost_.to_abs;
        r2_.clear();
        in_collection_ = true;
        phase_ = Phase::Scan;
        objects_copied_ = 0;
        queue_high_water_ = 0;
        fault_fired_ = false;

        // Forward the roots first; an interior root keeps its displacement
        // from the header across the move.
        std::size_t skip_slot = roots.size();
        if (faults.skip_last_root) {
            for (std::size_t i = roots.size(); i-- > 0;) {
                if (roots.get(i) != 0) {
                    skip_slot = i;
                    break;
                }
            }
        }
        for (std::size_t i = 0; i < roots.size(); ++i) {
            Address p = roots.get(i);
            if (p == 0 || i == skip_slot) continue;
            Address header = interior_to_base(heap_, p, BaseLookup::StartBits);
            Address disp = p - header;
            roots.set(i, forward_pointer(header) + disp);
            step(Phase::Scan);
        }

        while (tj_ < tk_) scan_step();

        // Swap spaces; to-space collapses to empty and becomes the target of
        // the next collection.
        std::swap(fi_, ti_);
        std::swap(fl_, tl_);
        fk_ = tk_;
        tj_ = ti_;
        tk_ = ti_;
        scan_cursor_ = ti_;
        ghost_.to_abs = r2_;
        heap_.clear_start_range(ti_, tl_);
        in_collection_ = false;
        phase_ = Phase::Mutator;

        CollectionStats row;
        row.epoch = ghost_.reached.epoch();
        row.live_bytes = fk_ - fi_;
        row.freed_or_copied_bytes = fk_ - fi_;
        row.pause_steps = step_count_ - steps_before;
        row.objects_copied = objects_copied_;
        row.queue_high_water = queue_high_water_;
        row.occupancy_pct = 100.0 * static_cast<double>(fk_ - fi_) / (fl_ - fi_);
        row.survival_ratio =
            from_used == 0 ? 0.0 : static_cast<double>(fk_ - fi_) / static_cast<double>(from_used);
        stats_.push_back(row);
    }

    // Process at most one pointer field of the object at the queue head.
    // Between calls the head object may be partially forwarded; the scan
    // cursor records how far fixing has progressed.
    void scan_step() {
        if (tj_ >= tk_) return;
        if (scan_cursor_ < tj_ + 2 * kWordSize) scan_cursor_ = tj_ + 2 * kWordSize;
        ObjectShape shape = descriptors_.object_layout(heap_.load(tj_ + kWordSize));
        Address end = tj_ + shape.size_bytes();
        while (scan_cursor_ < end) {
            std::size_t j = (scan_cursor_ - tj_) / kWordSize;
            Address field_addr = scan_cursor_;
            scan_cursor_ += kWordSize;
            if (shape.kinds[j] != FieldKind::Ptr) continue;
            Word w = heap_.load(field_addr);
            if (gc_addr_ex(heap_, w)) {
                if (faults.skip_one_field_fix && !fault_fired_) {
                    fault_fired_ = true;
                } else {
                    heap_.store(field_addr, forward_pointer(w));
                }
            }
            step(Phase::Scan);
            return;
        }
        tj_ = end;
        scan_cursor_ = tj_;
        step(Phase::Scan);
    }

    // Canonical from-space pointer -> canonical to-space pointer, copying
    // the object on first contact.
    Address forward_pointer(Word ptr) {
        if (!aligned(ptr) || ptr < fi_ + kWordSize || ptr >= fk_ + kWordSize)
            throw CollectorFault("forward target is not a from-space pointer: " + std::to_string(ptr));
        Address from_base = ptr - kWordSize;
        AbsNodeId node = r1_.get(from_base);
        if (node == kNoAbs) throw CollectorFault("from-space object has no abstract node");
        ghost_.reached.record_reached(node);
        Word header = heap_.load(from_base + kWordSize);
        if (is_forwarded(header)) return header;
        return copy_and_forward(ptr);
    }

    // All words are copied (pre-header included) before the old header is
    // overwritten with the new canonical pointer; the copied fields still
    // point at from-space until the scan fixes them.
    Address copy_and_forward(Word ptr) {
        Address from_base = ptr - kWordSize;
        Word header = heap_.load(from_base + kWordSize);
        ObjectShape shape = descriptors_.object_layout(header);
        std::uint32_t size = shape.size_bytes();
        std::uint64_t new_tk = static_cast<std::uint64_t>(tk_) + size;
        if (new_tk > tl_) throw CollectorFault("to-space exhausted during copy");
        Address to_base = tk_;
        for (std::size_t j = 0; j < shape.num_fields(); ++j) {
            Address off = static_cast<Address>(j) * kWordSize;
            heap_.store(to_base + off, heap_.load(from_base + off));
        }
        heap_.store(from_base + kWordSize, to_base + kWordSize);
        heap_.set_start_bit(to_base);
        AbsNodeId node = r1_.get(from_base);
        r2_.set(to_base, node);
        ghost_.to_abs.set(to_base, node);
        ghost_.to_abs.set(from_base, kNoAbs);
        tk_ = static_cast<Address>(new_tk);
        ++objects_copied_;
        queue_high_water_ = std::max<std::uint64_t>(queue_high_water_, tk_ - tj_);
        step(Phase::Scan);
        return to_base + kWordSize;
    }

    // A header word is a forwarding pointer iff it addresses to-space;
    // descriptor ids live below mem_lo, so the two can never be confused.
    bool is_forwarded(Word header) const { return header > ti_ && header <= tl_; }

    SpaceBounds bounds() const { return {fi_, fk_, fl_, ti_, tj_, tk_, tl_}; }
    Address mem_mid() const { return mem_mid_; }
    const RegionMap& r1() const { return r1_; }
    const RegionMap& r2() const { return r2_; }
    bool in_collection() const { return in_collection_; }
    Address scan_cursor() const { return scan_cursor_; }

protected:
    Address allocate_impl(const ObjectShape& shape, RootArray& roots, AbsNodeId node) override {
        std::uint32_t size = shape.size_bytes();
        if (static_cast<std::uint64_t>(fk_) + size > fl_) {
            collect(roots);
            if (static_cast<std::uint64_t>(fk_) + size > fl_)
                throw OutOfMemory("from-space cannot fit " + std::to_string(size) + " bytes");
        }
        Address base = fk_;
        fk_ += size;
        heap_.set_start_bit(base);
        paint_object(base, shape, node);
        return base + kWordSize;
    }

private:
    Address mem_mid_ = 0;
    Address fi_, fk_, fl_, ti_, tj_, tk_, tl_;
    Address scan_cursor_ = 0;
    RegionMap r1_;
    RegionMap r2_;
    bool in_collection_ = false;
    bool fault_fired_ = false;
    std::uint64_t objects_copied_ = 0;
    std::uint64_t queue_high_water_ = 0;
};

}  // namespace gclab
