#include "vsmactr/memory.hpp"

#include <algorithm>
#include <mutex>
#include <unordered_set>

#include "vsmactr/error.hpp"
#include "vsmactr/numfmt.hpp"

namespace vsmactr {

namespace {

const std::string* intern(std::string_view text)
{
    static std::mutex mu;
    static std::unordered_set<std::string> pool;
    std::lock_guard lock(mu);
    return &*pool.emplace(text).first;
}

const Symbol& decision_state_symbol()
{
    static const Symbol s("decision-state");
    return s;
}

bool is_decision_slot(const Symbol& s)
{
    return std::find(kDecisionSlots.begin(), kDecisionSlots.end(), s.str()) != kDecisionSlots.end();
}

void check_decision_state(const SlotValue& v)
{
    if (v.is_nil()) return;
    if (v.is_symbol()) {
        const auto& t = v.symbol().str();
        if (t == "novice" || t == "intermediate" || t == "expert") return;
    }
    throw Error(Errc::invalid_slot_value, "decision-state must be novice, intermediate or expert, got " + v.to_string());
}

} // namespace

Symbol::Symbol() : text_(intern("")) {}

Symbol::Symbol(std::string_view text) : text_(intern(text)) {}

std::string SlotValue::to_string() const
{
    if (is_nil()) return "NIL";
    if (is_symbol()) return symbol().str();
    return numfmt::shortest(number());
}

std::string_view chunk_type_name(ChunkType t) noexcept
{
    switch (t) {
    case ChunkType::decision: return "decision";
    case ChunkType::decision_merits: return "decision-merits";
    case ChunkType::goal: return "goal";
    }
    return "?";
}

bool Chunk::has(Symbol slot) const noexcept
{
    return std::any_of(slots_.begin(), slots_.end(), [&](const SlotPair& p) { return p.first == slot; });
}

SlotValue Chunk::get(Symbol slot) const
{
    for (const auto& [k, v] : slots_) {
        if (k == slot) return v;
    }
    return SlotValue::nil();
}

Chunk Chunk::with(Symbol slot, SlotValue value) const
{
    if (type_ == ChunkType::decision) {
        if (!is_decision_slot(slot)) {
            throw Error(Errc::unknown_slot, "decision chunk has no slot " + slot.str());
        }
        if (slot == decision_state_symbol()) check_decision_state(value);
    }
    Chunk out = *this;
    for (auto& [k, v] : out.slots_) {
        if (k == slot) {
            v = std::move(value);
            return out;
        }
    }
    out.slots_.emplace_back(slot, std::move(value));
    return out;
}

Chunk make_chunk(ChunkType type, std::vector<std::pair<std::string, SlotValue>> slot_pairs, std::string name)
{
    Chunk c;
    c.type_ = type;
    c.name_ = std::move(name);
    c.slots_.reserve(slot_pairs.size());
    for (auto& [k, v] : slot_pairs) {
        Symbol key(k);
        if (c.has(key)) {
            throw Error(Errc::duplicate_slot, "slot " + k + " given twice");
        }
        c.slots_.emplace_back(key, std::move(v));
    }
    if (type == ChunkType::decision) {
        for (auto required : kDecisionSlots) {
            if (!c.has(Symbol(required))) {
                throw Error(Errc::missing_required_slot, "decision chunk lacks slot " + std::string(required));
            }
        }
        for (const auto& [k, v] : c.slots_) {
            if (!is_decision_slot(k)) {
                throw Error(Errc::unknown_slot, "decision chunk has no slot " + k.str());
            }
        }
        check_decision_state(c.get(decision_state_symbol()));
    }
    return c;
}

std::string_view buffer_label(BufferName b) noexcept
{
    switch (b) {
    case BufferName::goal: return "GOAL";
    case BufferName::imaginal: return "IMAGINAL";
    case BufferName::retrieval: return "RETRIEVAL";
    }
    return "?";
}

Buffer buffer_write(const Buffer& buffer, Chunk chunk, SimTime now, SimTime delay)
{
    if (buffer.busy(now)) {
        throw Error(Errc::buffer_busy, std::string(buffer_label(buffer.name)) + " busy until " +
                                           numfmt::seconds3(buffer.busy_until));
    }
    if (delay.ms < 0) {
        throw Error(Errc::invalid_argument, "negative buffer delay");
    }
    Buffer out = buffer;
    out.content = std::move(chunk);
    out.busy_until = now + delay;
    return out;
}

} // namespace vsmactr
