#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gridreduce/ledger.hpp"
#include "gridreduce/network.hpp"

namespace gridreduce {

enum class ExpansionKind { WholeField, SingleLeaf, SingleEdgeNode, SingleAbsorbedNode, All };

struct ExpansionTarget {
    ExpansionKind kind = ExpansionKind::WholeField;
    FieldKey key;
    std::optional<BusId> member;

    std::string str() const;
};

// Parses "ALL", "KEY" or "KEY:MEMBER" against the keys present in the ledger.
ExpansionTarget parse_target(const std::string& text, const ReductionLedger& ledger);

struct ExpansionResult {
    Network network;
    ReductionLedger ledger;
    std::vector<BusId> added_nodes;
    std::vector<EdgeKey> added_edges;
    std::vector<EdgeKey> removed_edges;
    std::optional<BusId> anchor;
};

ExpansionResult expand(const Network& net, const ReductionLedger& ledger, const ExpansionTarget& target);
ExpansionResult expand_all(const Network& net, const ReductionLedger& ledger);

// Differences between two networks, as reported to clients.
void diff_networks(const Network& before, const Network& after, ExpansionResult& out);

// Expansion target that would reveal the hidden bus, e.g. "t_b1:b4".
std::optional<std::string> home_target(const ReductionLedger& ledger, const BusId& id);

// Buses represented by each present bus, itself included.
std::map<BusId, std::size_t> cluster_sizes(const Network& net, const ReductionLedger& ledger);

// Top-level fields a present bus anchors.
std::map<BusId, std::vector<std::string>> expandable_fields(const Network& net, const ReductionLedger& ledger);

}  // namespace gridreduce
