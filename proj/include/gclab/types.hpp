// types.hpp - words, addresses, error types shared by the whole heap lab
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace gclab {

// Simulated machine: 32-bit words, byte addressing, 4-byte alignment.
using Word = std::uint32_t;
using Address = std::uint32_t;

constexpr Address kWordSize = 4;

// Allocator tuning constants. See the unit tests that pin these down;
// changing any of them breaks the free-list/cache contract.
constexpr std::uint32_t kMinCacheSize = 256;   // smallest chunk kept on the free list
constexpr std::uint32_t kLargeObject = 192;    // allocations >= this bypass the cache
constexpr std::uint32_t kMaxCacheSize = 4096;  // cap on bytes taken per cache refill
constexpr std::uint32_t kMinFreeEntry = 8;     // next word + size word
constexpr std::uint32_t kMinObjectWords = 2;   // pre-header + header

inline bool aligned(Address a) { return (a & 3u) == 0; }
inline Address align_down(Address a) { return a & ~3u; }

enum class CollectorKind { MarkSweep, Copying, RefMarkSweep, RefCopying };

enum class CheckLevel { Off, GcBoundary, Step };

// Base for everything this library throws. The invariant checkers never
// throw; they return reports. Exceptions are for contract violations,
// heap safety faults, and resource exhaustion.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Misuse of the mutator interface: bad pointer, bad field index, value
// that does not decode under the field's kind.
class ContractViolation : public Error {
public:
    explicit ContractViolation(const std::string& what) : Error(what) {}
};

// Unaligned or out-of-range memory access. Never silently wrapped.
class HeapFault : public Error {
public:
    explicit HeapFault(const std::string& what) : Error(what) {}
};

// Allocation failed even after a full collection.
class OutOfMemory : public Error {
public:
    explicit OutOfMemory(const std::string& what) : Error(what) {}
};

// Internal collector failure (mark-stack overflow in bounded mode,
// to-space exhaustion mid-copy).
class CollectorFault : public Error {
public:
    explicit CollectorFault(const std::string& what) : Error(what) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(what) {}
};

struct HeapConfig {
    Address mem_lo = 4096;      // 0 and small words stay unambiguous non-GC values
    std::uint32_t heap_bytes = 65536;
    CollectorKind collector = CollectorKind::MarkSweep;
    CheckLevel check_level = CheckLevel::GcBoundary;
    std::size_t root_slots = 64;
    std::size_t mark_stack_limit = 0;  // 0 = unbounded

    Address mem_hi() const { return mem_lo + heap_bytes; }

    void validate() const {
        if (mem_lo == 0 || !aligned(mem_lo))
            throw ConfigError("mem_lo must be positive and 4-byte aligned");
        if (heap_bytes % kWordSize != 0)
            throw ConfigError("heap size must be a multiple of 4 bytes");
        if (heap_bytes < 1024)
            throw ConfigError("heap too small for minimum spaces (need >= 1024 bytes)");
        if (collector == CollectorKind::Copying && (heap_bytes / kWordSize) % 2 != 0)
            throw ConfigError("copying collector needs an even word count for the space split");
        if (root_slots == 0)
            throw ConfigError("need at least one root slot");
    }
};

}  // namespace gclab
