#pragma once

#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "gridreduce/expansion.hpp"
#include "gridreduce/ledger.hpp"
#include "gridreduce/network.hpp"

namespace gridreduce {

// One analyst's exploration state: current network, remaining ledger, undo stack.
class Session {
public:
    Session(Network network, ReductionLedger ledger);

    const Network& network() const noexcept { return network_; }
    const ReductionLedger& ledger() const noexcept { return ledger_; }
    const Network& original() const noexcept { return original_; }
    std::size_t undo_depth() const noexcept { return undo_.size(); }
    const std::string& id() const noexcept { return id_; }

    nlohmann::ordered_json network_document() const;
    nlohmann::ordered_json stats_document() const;

    // Throws NotFoundError / DependencyError / ValidationError.
    nlohmann::ordered_json expand(const std::string& target);
    // Throws DependencyError when there is nothing to undo.
    nlohmann::ordered_json undo();

private:
    Network network_;
    ReductionLedger ledger_;
    Network original_;
    std::vector<std::pair<Network, ReductionLedger>> undo_;
    std::string id_;
};

nlohmann::ordered_json delta_document(const ExpansionResult& result);

}  // namespace gridreduce
