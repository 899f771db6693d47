// heap_model.hpp - simulated 32-bit word heap: memory, colors, start bits,
// object descriptors, value correspondence
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "gclab/abstract_graph.hpp"
#include "gclab/types.hpp"

namespace gclab {

// Color codes for the mark-sweep side. 2 bits per 4-byte word; only object
// base words ever carry a non-Unalloc color.
enum class Color : std::uint8_t { Unalloc = 0, White = 1, Gray = 2, Black = 3 };

// Packed 2-bit-per-word table. Kept genuinely packed so the 6.25% space
// overhead is an arithmetic fact, not a comment.
class ColorTable {
public:
    ColorTable() = default;
    explicit ColorTable(std::size_t words) : words_(words), bits_((words + 15) / 16, 0) {}

    Color get(std::size_t word_index) const {
        std::uint32_t cell = bits_[word_index / 16];
        return static_cast<Color>((cell >> ((word_index % 16) * 2)) & 3u);
    }

    void set(std::size_t word_index, Color c) {
        std::uint32_t& cell = bits_[word_index / 16];
        unsigned shift = (word_index % 16) * 2;
        cell = (cell & ~(3u << shift)) | (static_cast<std::uint32_t>(c) << shift);
    }

    std::size_t storage_bytes() const { return bits_.size() * sizeof(std::uint32_t); }
    std::size_t size() const { return words_; }
    bool operator==(const ColorTable&) const = default;

private:
    std::size_t words_ = 0;
    std::vector<std::uint32_t> bits_;
};

// 1 bit per word; the copying collector's object-start vector.
class BitVector {
public:
    BitVector() = default;
    explicit BitVector(std::size_t bits) : size_(bits), cells_((bits + 31) / 32, 0) {}

    bool get(std::size_t i) const { return (cells_[i / 32] >> (i % 32)) & 1u; }
    void set(std::size_t i) { cells_[i / 32] |= (1u << (i % 32)); }
    void clear(std::size_t i) { cells_[i / 32] &= ~(1u << (i % 32)); }
    std::size_t size() const { return size_; }
    std::size_t storage_bytes() const { return cells_.size() * sizeof(std::uint32_t); }
    bool operator==(const BitVector&) const = default;

private:
    std::size_t size_ = 0;
    std::vector<std::uint32_t> cells_;
};

// Dense pointer-map descriptor. The low 4 bits of the mask are the format
// tag; payload field j (2 <= j < num_fields) is a pointer iff j < 30 and
// bit (2+j) of the mask is set. Fields at j >= 30 are primitive.
constexpr std::uint32_t kDenseTag = 1;

struct Descriptor {
    std::uint32_t mask = kDenseTag;
    std::uint32_t num_fields = kMinObjectWords;

    static std::uint32_t tag_of(std::uint32_t mask) { return mask & 15u; }
    static bool get_bit(std::uint32_t x, unsigned i) { return ((x >> i) & 1u) == 1u; }

    bool field_is_ptr(std::size_t j) const {
        if (j < 2 || j >= num_fields) return false;
        return j < 30 && get_bit(mask, static_cast<unsigned>(2 + j));
    }

    ObjectShape shape() const {
        ObjectShape s;
        s.kinds.resize(num_fields, FieldKind::Prim);
        for (std::size_t j = 2; j < num_fields; ++j) {
            if (field_is_ptr(j)) s.kinds[j] = FieldKind::Ptr;
        }
        return s;
    }

    static Descriptor from_shape(const ObjectShape& shape) {
        Descriptor d;
        d.num_fields = static_cast<std::uint32_t>(shape.num_fields());
        d.mask = kDenseTag;
        for (std::size_t j = 2; j < shape.num_fields(); ++j) {
            if (shape.kinds[j] == FieldKind::Ptr) {
                if (j >= 30)
                    throw ContractViolation("dense descriptor cannot mark field >= 30 as pointer");
                d.mask |= (1u << (2 + j));
            }
        }
        return d;
    }
};

// Immutable registry of descriptors, modelling vtables in read-only memory
// outside GC space. Header words hold registry ids; ids stay below mem_lo
// so they can never be confused with heap pointers.
class DescriptorTable {
public:
    explicit DescriptorTable(Address mem_lo) : mem_lo_(mem_lo) {}

    Word intern(const ObjectShape& shape) {
        Descriptor d = Descriptor::from_shape(shape);
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            if (entries_[i].mask == d.mask && entries_[i].num_fields == d.num_fields)
                return static_cast<Word>(i + 1);
        }
        Word id = static_cast<Word>(entries_.size() + 1);
        if (id >= mem_lo_)
            throw ConfigError("descriptor id would collide with GC address space");
        entries_.push_back(d);
        return id;
    }

    const Descriptor& lookup(Word header) const {
        if (header == 0 || header > entries_.size())
            throw ContractViolation("unknown descriptor id in header word");
        return entries_[header - 1];
    }

    bool known(Word header) const { return header >= 1 && header <= entries_.size(); }

    // (numFields, fieldKinds) for a header word, per the dense rule.
    ObjectShape object_layout(Word header) const { return lookup(header).shape(); }

    std::size_t size() const { return entries_.size(); }

private:
    Address mem_lo_;
    std::vector<Descriptor> entries_;
};

// The simulated concrete machine: words over [mem_lo, mem_hi) indexed by
// aligned byte address, a color table, and an object-start bit vector.
// Out-of-range or unaligned access is a hard fault, never a wrap.
class HeapImage {
public:
    HeapImage() = default;
    HeapImage(Address mem_lo, Address mem_hi)
        : mem_lo_(mem_lo),
          mem_hi_(mem_hi),
          words_((mem_hi - mem_lo) / kWordSize, 0),
          colors_((mem_hi - mem_lo) / kWordSize),
          start_bits_((mem_hi - mem_lo) / kWordSize) {}

    Address mem_lo() const { return mem_lo_; }
    Address mem_hi() const { return mem_hi_; }
    std::size_t word_count() const { return words_.size(); }

    bool gc_addr(Address a) const { return aligned(a) && a >= mem_lo_ && a < mem_hi_; }

    Word load(Address a) const {
        check(a, "load");
        return words_[index(a)];
    }

    void store(Address a, Word v) {
        check(a, "store");
        words_[index(a)] = v;
    }

    Color color_of(Address a) const {
        check(a, "color read");
        return colors_.get(index(a));
    }

    void set_color(Address a, Color c) {
        check(a, "color write");
        colors_.set(index(a), c);
    }

    bool start_bit(Address a) const {
        check(a, "start bit read");
        return start_bits_.get(index(a));
    }

    void set_start_bit(Address a) {
        check(a, "start bit write");
        start_bits_.set(index(a));
    }

    void clear_start_range(Address lo, Address hi) {
        if (lo > hi || !aligned(lo) || !aligned(hi) || lo < mem_lo_ || hi > mem_hi_)
            throw HeapFault("start bit clear outside heap");
        for (Address a = lo; a < hi; a += kWordSize) start_bits_.clear(index(a));
    }

    const ColorTable& colors() const { return colors_; }
    const BitVector& start_bits() const { return start_bits_; }

private:
    std::size_t index(Address a) const { return (a - mem_lo_) / kWordSize; }

    void check(Address a, const char* what) const {
        if (!aligned(a))
            throw HeapFault(std::string(what) + " at unaligned address " + std::to_string(a));
        if (a < mem_lo_ || a >= mem_hi_)
            throw HeapFault(std::string(what) + " outside heap at " + std::to_string(a));
    }

    Address mem_lo_ = 0;
    Address mem_hi_ = 0;
    std::vector<Word> words_;
    ColorTable colors_;
    BitVector start_bits_;
};

// Pointer values live in (mem_lo, mem_hi]: a canonical pointer addresses a
// header word, so subtracting the pre-header offset lands inside the heap.
inline bool gc_addr_ex(const HeapImage& heap, Word v) {
    return v > heap.mem_lo() && v <= heap.mem_hi();
}

struct DecodeResult {
    bool ok = false;
    AbsValue value;
    std::string detail;

    static DecodeResult success(AbsValue v) { return {true, v, {}}; }
    static DecodeResult failure(std::string why) { return {false, {}, std::move(why)}; }
};

// Concrete-word -> abstract-value correspondence. A pointer-kind word in
// the GC value range must name a live object base through the region map;
// anything outside that range (null included) is a primitive.
inline DecodeResult value_decode(bool is_ptr, Word v, const RegionMap& r, const HeapImage& heap) {
    if (!is_ptr) return DecodeResult::success(AbsValue::prim(v));
    if (!gc_addr_ex(heap, v)) return DecodeResult::success(AbsValue::prim(v));
    AbsNodeId abs = r.get(v - kWordSize);
    if (abs == kNoAbs)
        return DecodeResult::failure("pointer word " + std::to_string(v) + " has no live object base");
    return DecodeResult::success(AbsValue::node(abs));
}

inline AbsValue value_decode_or_throw(bool is_ptr, Word v, const RegionMap& r, const HeapImage& heap) {
    DecodeResult res = value_decode(is_ptr, v, r, heap);
    if (!res.ok) throw ContractViolation("dangling pointer: " + res.detail);
    return res.value;
}

// Resolve an interior pointer to the canonical (header) pointer of the
// object it lands in, by scanning backwards for the nearest strictly
// preceding live base word. The scan predicate is the color table for the
// mark-sweep heap and the start-bit vector for the copying heap. Interior
// pointers range from the header word up to and including the object-end
// address, so the base word itself (the pre-header) is excluded: a == base
// resolves to the *previous* object's end, never to this object.
enum class BaseLookup { ColorTable, StartBits };

inline Address interior_to_base(const HeapImage& heap, Address a, BaseLookup how) {
    if (!aligned(a) || a <= heap.mem_lo() || a > heap.mem_hi())
        throw HeapFault("interior pointer outside heap: " + std::to_string(a));
    Address b = a - kWordSize;
    while (true) {
        bool is_base = how == BaseLookup::ColorTable ? heap.color_of(b) != Color::Unalloc
                                                     : heap.start_bit(b);
        if (is_base) return b + kWordSize;
        if (b == heap.mem_lo())
            throw ContractViolation("dangling interior pointer: no live base precedes " +
                                    std::to_string(a));
        b -= kWordSize;
    }
}

}  // namespace gclab
