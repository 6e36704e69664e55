#pragma once

#include <array>
#include <compare>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "vsmactr/sim_time.hpp"

namespace vsmactr {

/// Interned symbol. Two symbols compare equal iff their text is equal; the
/// comparison itself is a pointer compare.
class Symbol {
public:
    Symbol();
    explicit Symbol(std::string_view text);

    const std::string& str() const noexcept { return *text_; }

    friend bool operator==(Symbol a, Symbol b) noexcept { return a.text_ == b.text_; }
    friend std::strong_ordering operator<=>(Symbol a, Symbol b) noexcept { return a.str() <=> b.str(); }

private:
    const std::string* text_;
};

/// Contents of one chunk slot: a symbol, a number or nil.
class SlotValue {
public:
    SlotValue() = default;
    SlotValue(Symbol s) : v_(s) {}
    SlotValue(const char* s) : v_(Symbol(s)) {}
    SlotValue(std::string_view s) : v_(Symbol(s)) {}
    SlotValue(double x) : v_(x) {}

    static SlotValue nil() { return {}; }

    bool is_nil() const noexcept { return std::holds_alternative<std::monostate>(v_); }
    bool is_symbol() const noexcept { return std::holds_alternative<Symbol>(v_); }
    bool is_number() const noexcept { return std::holds_alternative<double>(v_); }

    Symbol symbol() const { return std::get<Symbol>(v_); }
    double number() const { return std::get<double>(v_); }

    // NIL, the symbol text, or the shortest round-trip number
    std::string to_string() const;

    friend bool operator==(const SlotValue&, const SlotValue&) = default;

private:
    std::variant<std::monostate, Symbol, double> v_;
};

enum class ChunkType { decision, decision_merits, goal };

std::string_view chunk_type_name(ChunkType t) noexcept;

/// Slot names every decision chunk carries, in canonical order.
inline constexpr std::array<std::string_view, 8> kDecisionSlots = {
    "goal", "reduction-time", "decision-state", "ct-pre", "ct-asm", "oee-pre", "oee-asm", "chosen-section",
};

using SlotPair = std::pair<Symbol, SlotValue>;

/// Immutable typed slot/value record. Build with make_chunk().
class Chunk {
public:
    ChunkType type() const noexcept { return type_; }
    const std::string& name() const noexcept { return name_; }
    const std::vector<SlotPair>& slots() const noexcept { return slots_; }

    bool has(Symbol slot) const noexcept;
    // nil when the slot is absent
    SlotValue get(Symbol slot) const;
    SlotValue get(std::string_view slot) const { return get(Symbol(slot)); }

    // Copy with `slot` replaced (or appended when absent). Decision chunks
    // reject unknown slot names.
    Chunk with(Symbol slot, SlotValue value) const;
    Chunk with(std::string_view slot, SlotValue value) const { return with(Symbol(slot), std::move(value)); }

    friend bool operator==(const Chunk&, const Chunk&) = default;

private:
    friend Chunk make_chunk(ChunkType, std::vector<std::pair<std::string, SlotValue>>, std::string);

    ChunkType type_ = ChunkType::goal;
    std::string name_;
    std::vector<SlotPair> slots_;
};

/// Builds a chunk, preserving slot order.
/// Throws Error{duplicate_slot} on repeated names; decision chunks also throw
/// missing_required_slot / unknown_slot / invalid_slot_value.
Chunk make_chunk(ChunkType type, std::vector<std::pair<std::string, SlotValue>> slot_pairs,
                 std::string name = {});

enum class BufferName { goal, imaginal, retrieval };

std::string_view buffer_label(BufferName b) noexcept;

/// Single-chunk workspace. A write with a delay leaves the buffer busy (and its
/// new content invisible to matching) until busy_until.
struct Buffer {
    BufferName name = BufferName::goal;
    std::optional<Chunk> content;
    SimTime busy_until{};

    bool busy(SimTime now) const noexcept { return busy_until > now; }
    const Chunk* visible(SimTime now) const noexcept
    {
        return (content && !busy(now)) ? &*content : nullptr;
    }
};

/// Returns the buffer with `chunk` installed and busy_until = now + delay.
/// Throws Error{buffer_busy} when the buffer is still busy at `now`.
Buffer buffer_write(const Buffer& buffer, Chunk chunk, SimTime now, SimTime delay);

} // namespace vsmactr
