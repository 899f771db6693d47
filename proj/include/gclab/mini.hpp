// mini.hpp - miniature object-addressed reference collectors: a recursive
// mark-sweep and a Cheney copier over the 2-field, 1-root memory model.
// These are deliberately naive transcriptions; they serve as brute-force
// oracles for the practical collectors.
#pragma once

#include <array>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "gclab/abstract_graph.hpp"
#include "gclab/types.hpp"

namespace gclab::mini {

// Every object has exactly two pointer fields. Abstract values are always
// node ids; fresh nodes point at themselves.
struct AbsGraph {
    std::unordered_map<AbsNodeId, std::array<AbsNodeId, 2>> fields;

    bool contains(AbsNodeId id) const { return fields.count(id) != 0; }

    void register_fresh(AbsNodeId id) {
        if (id == kNoAbs || contains(id)) throw ContractViolation("mini node id not fresh");
        fields[id] = {id, id};
    }

    AbsNodeId get(AbsNodeId id, int field) const { return fields.at(id)[field]; }
    void set(AbsNodeId id, int field, AbsNodeId val) { fields.at(id)[field] = val; }

    std::unordered_set<AbsNodeId> reachable(AbsNodeId root) const {
        std::unordered_set<AbsNodeId> seen;
        if (root == kNoAbs) return seen;
        std::vector<AbsNodeId> work{root};
        seen.insert(root);
        while (!work.empty()) {
            AbsNodeId cur = work.back();
            work.pop_back();
            for (AbsNodeId next : fields.at(cur)) {
                if (seen.insert(next).second) work.push_back(next);
            }
        }
        return seen;
    }
};

// Miniature mark-sweep: linear-search allocator, recursive mark, linear
// sweep. Memory is object addressed over [mem_lo, mem_hi).
class MarkSweep {
public:
    MarkSweep(int mem_lo, int mem_hi) : mem_lo_(mem_lo), mem_hi_(mem_hi) {
        if (!(0 < mem_lo && mem_lo <= mem_hi)) throw ConfigError("need 0 < memLo <= memHi");
        mem_.assign(mem_hi, {0, 0});
        color_.assign(mem_hi, 0);
        to_abs_.assign(mem_hi, kNoAbs);
        initialize();
    }

    void initialize() {
        for (int ptr = mem_lo_; ptr < mem_hi_; ++ptr) {
            color_[ptr] = 0;
            to_abs_[ptr] = kNoAbs;
        }
    }

    int read_field(int ptr, int field) const {
        require_pointer(ptr);
        require_field(field);
        return mem_[ptr][field];
    }

    void write_field(int ptr, int field, int val) {
        require_pointer(ptr);
        require_pointer(val);
        require_field(field);
        mem_[ptr][field] = val;
        abs_mem_.set(to_abs_[ptr], field, to_abs_[val]);
    }

    void garbage_collect(int root) {
        mark_visits_.clear();
        if (root != 0) {
            require_pointer(root);
            mark(root);
        }
        sweep();
    }

    // Linear search for a free slot; collects and retries on failure. The
    // abstract node must be fresh and self-pointing before the call.
    std::pair<int, int> alloc(int root, AbsNodeId abs) {
        if (abs == kNoAbs || !abs_mem_.contains(abs))
            throw ContractViolation("mini alloc needs a registered fresh node");
        if (abs_mem_.get(abs, 0) != abs || abs_mem_.get(abs, 1) != abs)
            throw ContractViolation("mini alloc needs self-pointing fields");
        for (int attempt = 0; attempt < 2; ++attempt) {
            for (int ptr = mem_lo_; ptr < mem_hi_; ++ptr) {
                if (color_[ptr] == 0) {
                    color_[ptr] = 1;  // make white
                    to_abs_[ptr] = abs;
                    mem_[ptr][0] = ptr;
                    mem_[ptr][1] = ptr;
                    return {root, ptr};
                }
            }
            if (attempt == 0) garbage_collect(root);
        }
        throw OutOfMemory("miniature heap full");
    }

    std::unordered_set<AbsNodeId> live_nodes() const {
        std::unordered_set<AbsNodeId> out;
        for (int ptr = mem_lo_; ptr < mem_hi_; ++ptr)
            if (to_abs_[ptr] != kNoAbs) out.insert(to_abs_[ptr]);
        return out;
    }

    std::unordered_set<AbsNodeId> black_nodes() const {
        std::unordered_set<AbsNodeId> out;
        for (int ptr = mem_lo_; ptr < mem_hi_; ++ptr)
            if (color_[ptr] == 3) out.insert(to_abs_[ptr]);
        return out;
    }

    // Runs only the mark phase, for oracle-equivalence tests.
    void mark_only(int root) {
        mark_visits_.clear();
        if (root != 0) mark(root);
    }

    int color(int ptr) const { return color_[ptr]; }
    AbsNodeId to_abs(int ptr) const { return to_abs_[ptr]; }
    const AbsGraph& abs_mem() const { return abs_mem_; }
    AbsGraph& abs_mem() { return abs_mem_; }
    int mem_lo() const { return mem_lo_; }
    int mem_hi() const { return mem_hi_; }
    const std::unordered_map<int, int>& mark_visits() const { return mark_visits_; }

    // Address of the object an abstract node lives at, or 0.
    int address_of(AbsNodeId abs) const {
        for (int ptr = mem_lo_; ptr < mem_hi_; ++ptr)
            if (to_abs_[ptr] == abs) return ptr;
        return 0;
    }

private:
    void require_pointer(int ptr) const {
        if (ptr < mem_lo_ || ptr >= mem_hi_ || to_abs_[ptr] == kNoAbs)
            throw ContractViolation("mini pointer invalid: " + std::to_string(ptr));
    }

    static void require_field(int field) {
        if (field != 0 && field != 1) throw ContractViolation("mini field must be 0 or 1");
    }

    void mark(int ptr) {
        if (color_[ptr] == 1) {
            ++mark_visits_[ptr];
            color_[ptr] = 2;  // make gray
            mark(mem_[ptr][0]);
            mark(mem_[ptr][1]);
            color_[ptr] = 3;  // make black
        }
    }

    void sweep() {
        for (int ptr = mem_lo_; ptr < mem_hi_; ++ptr) {
            if (color_[ptr] == 1) {
                color_[ptr] = 0;  // deallocate
                to_abs_[ptr] = kNoAbs;
            } else if (color_[ptr] == 3) {
                color_[ptr] = 1;  // make white
            }
        }
    }

    int mem_lo_;
    int mem_hi_;
    std::vector<std::array<int, 2>> mem_;
    std::vector<int> color_;
    std::vector<AbsNodeId> to_abs_;
    AbsGraph abs_mem_;
    std::unordered_map<int, int> mark_visits_;
};

// Miniature Cheney copier with an explicit forwarding-pointer array and
// the two regions threaded through the collection.
class Copying {
public:
    Copying(int mem_lo, int mem_hi) : mem_lo_(mem_lo), mem_hi_(mem_hi) {
        if (!(0 < mem_lo && mem_lo <= mem_hi)) throw ConfigError("need 0 < memLo <= memHi");
        mem_mid_ = mem_lo + (mem_hi - mem_lo) / 2;
        mem_.assign(mem_hi, {0, 0});
        fwd_ptr_.assign(mem_hi, 0);
        to_abs_.assign(mem_hi, kNoAbs);
        r1_.assign(mem_hi, kNoAbs);
        r2_.assign(mem_hi, kNoAbs);
        initialize();
    }

    void initialize() {
        for (int i = mem_lo_; i < mem_hi_; ++i) to_abs_[i] = kNoAbs;
        fi_ = mem_lo_;
        fk_ = mem_lo_;
        fl_ = mem_mid_;
        ti_ = mem_mid_;
        tj_ = mem_mid_;
        tk_ = mem_mid_;
        tl_ = mem_hi_;
    }

    int read_field(int ptr, int field) const {
        require_pointer(ptr);
        require_field(field);
        return mem_[ptr][field];
    }

    void write_field(int ptr, int field, int val) {
        require_pointer(ptr);
        require_pointer(val);
        require_field(field);
        mem_[ptr][field] = val;
        abs_mem_.set(to_abs_[ptr], field, to_abs_[val]);
    }

    int garbage_collect(int root) {
        for (int i = mem_lo_; i < mem_hi_; ++i) {
            r1_[i] = to_abs_[i];
            r2_[i] = kNoAbs;
        }
        int new_root = root;
        if (root != 0) new_root = forward_fromspace_ptr(root);
        while (tj_ < tk_) {
            int fwd0 = forward_fromspace_ptr(mem_[tj_][0]);
            int fwd1 = forward_fromspace_ptr(mem_[tj_][1]);
            mem_[tj_][0] = fwd0;
            mem_[tj_][1] = fwd1;
            ++tj_;
        }
        std::swap(fi_, ti_);
        std::swap(fl_, tl_);
        fk_ = tk_;
        tj_ = ti_;
        tk_ = ti_;
        for (int i = mem_lo_; i < mem_hi_; ++i) to_abs_[i] = r2_[i];
        return new_root;
    }

    std::pair<int, int> alloc(int root, AbsNodeId abs) {
        if (abs == kNoAbs || !abs_mem_.contains(abs))
            throw ContractViolation("mini alloc needs a registered fresh node");
        if (abs_mem_.get(abs, 0) != abs || abs_mem_.get(abs, 1) != abs)
            throw ContractViolation("mini alloc needs self-pointing fields");
        int new_root = root;
        if (fk_ >= fl_) new_root = garbage_collect(root);
        if (fk_ >= fl_) throw OutOfMemory("miniature from-space full");
        int ptr = fk_;
        to_abs_[ptr] = abs;
        r1_[ptr] = abs;
        mem_[ptr][0] = ptr;
        mem_[ptr][1] = ptr;
        fwd_ptr_[ptr] = 0;
        ++fk_;
        return {new_root, ptr};
    }

    std::unordered_set<AbsNodeId> live_nodes() const {
        std::unordered_set<AbsNodeId> out;
        for (int i = mem_lo_; i < mem_hi_; ++i)
            if (to_abs_[i] != kNoAbs) out.insert(to_abs_[i]);
        return out;
    }

    const AbsGraph& abs_mem() const { return abs_mem_; }
    AbsGraph& abs_mem() { return abs_mem_; }
    AbsNodeId to_abs(int ptr) const { return to_abs_[ptr]; }
    int fi() const { return fi_; }
    int fk() const { return fk_; }
    int ti() const { return ti_; }
    const std::unordered_map<AbsNodeId, int>& copies_per_node() const { return copies_; }
    void reset_copy_counts() { copies_.clear(); }

private:
    void require_pointer(int ptr) const {
        if (ptr < mem_lo_ || ptr >= mem_hi_ || to_abs_[ptr] == kNoAbs)
            throw ContractViolation("mini pointer invalid: " + std::to_string(ptr));
    }

    static void require_field(int field) {
        if (field != 0 && field != 1) throw ContractViolation("mini field must be 0 or 1");
    }

    int forward_fromspace_ptr(int ptr) {
        if (fwd_ptr_[ptr] != 0) return fwd_ptr_[ptr];  // object already copied
        if (tk_ >= tl_) throw CollectorFault("miniature to-space full");
        int ret = tk_;
        mem_[ret][0] = mem_[ptr][0];
        mem_[ret][1] = mem_[ptr][1];
        fwd_ptr_[ret] = 0;
        to_abs_[ret] = r1_[ptr];
        r2_[ret] = r1_[ptr];
        to_abs_[ptr] = kNoAbs;
        fwd_ptr_[ptr] = ret;
        ++tk_;
        ++copies_[r1_[ptr]];
        return ret;
    }

    int mem_lo_;
    int mem_hi_;
    int mem_mid_;
    std::vector<std::array<int, 2>> mem_;
    std::vector<int> fwd_ptr_;
    std::vector<AbsNodeId> to_abs_;
    std::vector<AbsNodeId> r1_;
    std::vector<AbsNodeId> r2_;
    int fi_ = 0, fk_ = 0, fl_ = 0, ti_ = 0, tj_ = 0, tk_ = 0, tl_ = 0;
    AbsGraph abs_mem_;
    std::unordered_map<AbsNodeId, int> copies_;
};

}  // namespace gclab::mini
