// ms_collector.hpp - practical mark-sweep collector: iterative mark with an
// explicit mark stack, linear sweep rebuilding the free list, local-cache
// allocator with a first-fit large-object path and a wilderness fallback
#pragma once

#include <map>
#include <vector>

#include "gclab/mutator.hpp"

namespace gclab {

// Byte accounting over the whole GC space. The walk must land exactly on
// mem_hi; a free entry or object that overlaps anything else derails it.
struct MsAccounting {
    std::uint64_t live_bytes = 0;
    std::uint64_t free_list_bytes = 0;
    std::uint64_t cache_bytes = 0;
    std::uint64_t fragment_bytes = 0;
    bool walk_ok = false;

    std::uint64_t total() const {
        return live_bytes + free_list_bytes + cache_bytes + fragment_bytes;
    }
};

class MsCollector final : public ManagedHeap {
public:
    explicit MsCollector(const HeapConfig& config)
        : ManagedHeap(config),
          r1_(config.mem_lo, config.mem_hi()),
          r2_(config.mem_lo, config.mem_hi()) {
        Address lo = config_.mem_lo;
        Address hi = config_.mem_hi();
        wild_lo_ = hi - align_down(config_.heap_bytes / 16);
        wild_next_ = wild_lo_;
        if (wild_lo_ - lo < kMinCacheSize)
            throw ConfigError("heap too small for a usable free list");
        append_entry_initial(lo, wild_lo_ - lo);
    }

    CollectorKind kind() const override { return CollectorKind::MarkSweep; }

    void collect(RootArray& roots) override {
        std::uint64_t steps_before = step_count_;
        ghost_.reached.advance_epoch();
        r1_ = ghost_.to_abs;
        r2_.clear();
        in_collection_ = true;

        phase_ = Phase::Mark;
        mark_phase(roots);
        phase_ = Phase::Sweep;
        CollectionStats row = sweep_phase();
        phase_ = Phase::Mutator;
        in_collection_ = false;

        row.epoch = ghost_.reached.epoch();
        row.pause_steps = step_count_ - steps_before;
        row.mark_stack_high_water = mark_high_water_;
        stats_.push_back(row);
    }

    // Marks exactly the objects whose abstract nodes are reachable from the
    // roots; interior root pointers are resolved to object bases first.
    void mark_phase(const RootArray& roots) {
        mark_stack_.clear();
        mark_high_water_ = 0;
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
            Address header = interior_to_base(heap_, p, BaseLookup::ColorTable);
            shade(header - kWordSize);
        }
        while (!mark_stack_.empty()) {
            Address obj = mark_stack_.back();
            mark_stack_.pop_back();
            scanning_ = obj;
            ObjectShape shape = descriptors_.object_layout(heap_.load(obj + kWordSize));
            for (std::size_t j = 2; j < shape.num_fields(); ++j) {
                if (shape.kinds[j] != FieldKind::Ptr) continue;
                Word w = heap_.load(obj + static_cast<Address>(j) * kWordSize);
                if (!gc_addr_ex(heap_, w)) continue;  // null or non-GC primitive
                if (!aligned(w) || r1_.get(w - kWordSize) == kNoAbs)
                    throw CollectorFault("dangling pointer field found during mark");
                shade(w - kWordSize);
            }
            heap_.set_color(obj, Color::Black);
            scanning_ = 0;
            step(Phase::Mark);
        }
    }

    // Black -> White and kept; White -> freed; contiguous free regions of at
    // least kMinCacheSize bytes go onto the free list in address order.
    CollectionStats sweep_phase() {
        cache_ptr_ = 0;
        cache_size_ = 0;
        free_head_ = 0;
        tail_ = 0;
        fs_.clear();
        fn_.clear();

        CollectionStats row;
        Address addr = config_.mem_lo;
        Address region_start = addr;
        while (addr < wild_lo_) {
            Color c = heap_.color_of(addr);
            if (c == Color::Gray) throw CollectorFault("gray object survived the mark phase");
            if (c == Color::Black) {
                flush_region(region_start, addr);
                std::uint32_t sz = object_size_at(addr);
                heap_.set_color(addr, Color::White);
                row.live_bytes += sz;
                addr += sz;
                region_start = addr;
            } else if (c == Color::White) {
                std::uint32_t sz = object_size_at(addr);
                ghost_.to_abs.set(addr, kNoAbs);
                heap_.set_color(addr, Color::Unalloc);
                addr += sz;
            } else {
                addr += kWordSize;  // step over free space
            }
            sweep_cursor_ = addr;
            step(Phase::Sweep);
        }
        flush_region(region_start, wild_lo_);

        // Wilderness tail: live objects stay, dead space is reclaimed by
        // moving the bump pointer down to the end of the last survivor.
        wild_next_ = wild_lo_;
        while (addr < config_.mem_hi()) {
            Color c = heap_.color_of(addr);
            if (c == Color::Gray) throw CollectorFault("gray object survived the mark phase");
            if (c == Color::Black) {
                std::uint32_t sz = object_size_at(addr);
                heap_.set_color(addr, Color::White);
                row.live_bytes += sz;
                addr += sz;
                wild_next_ = addr;
            } else if (c == Color::White) {
                std::uint32_t sz = object_size_at(addr);
                ghost_.to_abs.set(addr, kNoAbs);
                heap_.set_color(addr, Color::Unalloc);
                addr += sz;
            } else {
                addr += kWordSize;
            }
            sweep_cursor_ = addr;
            step(Phase::Sweep);
        }

        row.free_list_entries = fs_.size();
        std::uint64_t freed = 0, largest = 0;
        for (const auto& [a, sz] : fs_) {
            freed += sz;
            largest = std::max<std::uint64_t>(largest, sz);
        }
        row.freed_or_copied_bytes = freed;
        row.largest_free_entry = largest;
        row.occupancy_pct = 100.0 * static_cast<double>(row.live_bytes) / config_.heap_bytes;
        MsAccounting acct = accounting();
        row.fragment_bytes = acct.fragment_bytes;
        row.cache_bytes = acct.cache_bytes;
        return row;
    }

    const RegionMap& r1() const { return r1_; }
    const RegionMap& r2() const { return r2_; }
    bool in_collection() const { return in_collection_; }
    const std::vector<Address>& mark_stack() const { return mark_stack_; }
    Address scanning() const { return scanning_; }
    Address sweep_cursor() const { return sweep_cursor_; }

    Address free_head() const { return free_head_; }
    const std::map<Address, std::uint32_t>& fs() const { return fs_; }
    const std::map<Address, Address>& fn() const { return fn_; }
    Address cache_ptr() const { return cache_ptr_; }
    std::uint32_t cache_size() const { return cache_size_; }
    Address wild_lo() const { return wild_lo_; }
    Address wild_next() const { return wild_next_; }

    MsAccounting accounting() const {
        MsAccounting acct;
        Address addr = config_.mem_lo;
        Address hi = config_.mem_hi();
        while (addr < hi) {
            if (ghost_.to_abs.get(addr) != kNoAbs) {
                std::uint32_t sz = object_size_at(addr);
                if (static_cast<std::uint64_t>(addr) + sz > hi) return acct;
                acct.live_bytes += sz;
                addr += sz;
            } else if (auto it = fs_.find(addr); it != fs_.end()) {
                if (static_cast<std::uint64_t>(addr) + it->second > hi) return acct;
                acct.free_list_bytes += it->second;
                addr += it->second;
            } else if (cache_size_ != 0 && addr == cache_ptr_) {
                if (static_cast<std::uint64_t>(addr) + cache_size_ > hi) return acct;
                acct.cache_bytes += cache_size_;
                addr += cache_size_;
            } else {
                acct.fragment_bytes += kWordSize;
                addr += kWordSize;
            }
        }
        acct.walk_ok = addr == hi;
        return acct;
    }

    // Test hook: place the local cache at a known position.
    void testonly_set_cache(Address ptr, std::uint32_t size) {
        cache_ptr_ = ptr;
        cache_size_ = size;
    }

    std::map<Address, std::uint32_t>& debug_fs() { return fs_; }
    std::map<Address, Address>& debug_fn() { return fn_; }

protected:
    Address allocate_impl(const ObjectShape& shape, RootArray& roots, AbsNodeId node) override {
        std::uint32_t size = shape.size_bytes();
        Address base;
        if (size < kLargeObject) {
            if (size > cache_size_) refill_cache(roots);
            base = cache_ptr_ + cache_size_ - size;
            cache_size_ -= size;
            if (cache_size_ < kMinFreeEntry) {
                // remainder too small for any object; abandon as a fragment
                cache_ptr_ = 0;
                cache_size_ = 0;
            }
        } else {
            base = large_alloc(size);
            if (base == 0) {
                collect(roots);
                base = large_alloc(size);
            }
            if (base == 0) base = wilderness_alloc(size);
            if (base == 0) throw OutOfMemory("no chunk fits " + std::to_string(size) + " bytes");
        }
        heap_.set_color(base, Color::White);
        paint_object(base, shape, node);
        return base + kWordSize;
    }

private:
    void shade(Address base) {
        if (heap_.color_of(base) != Color::White) return;
        heap_.set_color(base, Color::Gray);
        AbsNodeId abs = r1_.get(base);
        if (abs == kNoAbs) throw CollectorFault("colored word with no abstract node");
        r2_.set(base, abs);
        ghost_.reached.record_reached(abs);
        if (config_.mark_stack_limit != 0 && mark_stack_.size() >= config_.mark_stack_limit)
            throw CollectorFault("mark stack overflow");
        mark_stack_.push_back(base);
        mark_high_water_ = std::max(mark_high_water_, mark_stack_.size());
        step(Phase::Mark);
    }

    std::uint32_t object_size_at(Address base) const {
        Word header = heap_.load(base + kWordSize);
        return descriptors_.lookup(header).num_fields * kWordSize;
    }

    void flush_region(Address lo, Address hi) {
        std::uint32_t sz = hi - lo;
        if (sz < kMinCacheSize) return;  // small gaps stay off the list
        append_entry(lo, sz);
    }

    void append_entry_initial(Address lo, std::uint32_t sz) { append_entry(lo, sz); }

    void append_entry(Address lo, std::uint32_t sz) {
        heap_.store(lo, 0);
        heap_.store(lo + kWordSize, sz);
        fs_[lo] = sz;
        fn_[lo] = 0;
        if (tail_ != 0) {
            fn_[tail_] = lo;
            heap_.store(tail_, lo);
        } else {
            free_head_ = lo;
        }
        tail_ = lo;
    }

    void unlink_entry(Address prev, Address cur) {
        Address next = fn_.at(cur);
        if (prev != 0) {
            fn_[prev] = next;
            heap_.store(prev, next);
        } else {
            free_head_ = next;
        }
        if (tail_ == cur) tail_ = prev;
        fs_.erase(cur);
        fn_.erase(cur);
    }

    void refill_cache(RootArray& roots) {
        if (free_head_ == 0) {
            collect(roots);
            if (free_head_ == 0) throw OutOfMemory("free list empty after collection");
        }
        Address c = free_head_;
        std::uint32_t csz = fs_.at(c);
        if (csz < kMaxCacheSize + kMinCacheSize) {
            // taking less would strand a sub-minimum entry
            cache_ptr_ = c;
            cache_size_ = csz;
            unlink_entry(0, c);
        } else {
            cache_ptr_ = c + csz - kMaxCacheSize;
            cache_size_ = kMaxCacheSize;
            fs_[c] = csz - kMaxCacheSize;
            heap_.store(c + kWordSize, csz - kMaxCacheSize);
        }
    }

    // First fit; the object is carved from the chunk's high end. A chunk
    // whose remainder drops below kMinCacheSize leaves the list.
    Address large_alloc(std::uint32_t size) {
        Address prev = 0;
        Address cur = free_head_;
        while (cur != 0 && fs_.at(cur) < size) {
            prev = cur;
            cur = fn_.at(cur);
        }
        if (cur == 0) return 0;
        std::uint32_t rem = fs_.at(cur) - size;
        Address base = cur + rem;
        if (rem < kMinCacheSize) {
            unlink_entry(prev, cur);
        } else {
            fs_[cur] = rem;
            heap_.store(cur + kWordSize, rem);
        }
        return base;
    }

    Address wilderness_alloc(std::uint32_t size) {
        if (static_cast<std::uint64_t>(wild_next_) + size > config_.mem_hi()) return 0;
        Address base = wild_next_;
        wild_next_ += size;
        return base;
    }

    RegionMap r1_;
    RegionMap r2_;
    bool in_collection_ = false;

    std::vector<Address> mark_stack_;
    std::size_t mark_high_water_ = 0;
    Address scanning_ = 0;
    Address sweep_cursor_ = 0;

    Address free_head_ = 0;
    Address tail_ = 0;
    std::map<Address, std::uint32_t> fs_;  // entry -> size in bytes
    std::map<Address, Address> fn_;        // entry -> next entry (0 = end)

    Address cache_ptr_ = 0;
    std::uint32_t cache_size_ = 0;
    Address wild_lo_ = 0;
    Address wild_next_ = 0;
};

}  // namespace gclab
