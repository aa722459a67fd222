#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <ldseq/errors.hpp>

namespace ldseq {

using SymbolId = std::uint32_t;

// Bijective label <-> dense index mapping. Ids are assigned in first-seen
// order and are stable for the lifetime of the table.
class SymbolTable {
public:
    SymbolId intern(std::string_view label) {
        auto it = ids_.find(std::string(label));
        if (it != ids_.end()) return it->second;
        const auto id = static_cast<SymbolId>(labels_.size());
        labels_.emplace_back(label);
        ids_.emplace(labels_.back(), id);
        return id;
    }

    std::optional<SymbolId> find(std::string_view label) const {
        auto it = ids_.find(std::string(label));
        if (it == ids_.end()) return std::nullopt;
        return it->second;
    }

    const std::string& label(SymbolId id) const {
        if (id >= labels_.size()) throw error("unknown symbol id " + std::to_string(id));
        return labels_[id];
    }

    std::size_t size() const { return labels_.size(); }

private:
    std::vector<std::string> labels_;
    std::unordered_map<std::string, SymbolId> ids_;
};

} // namespace ldseq
