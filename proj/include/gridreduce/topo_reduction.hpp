#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "gridreduce/ledger.hpp"
#include "gridreduce/network.hpp"

namespace gridreduce {

struct LeafCollapse {
    BusId leaf;
    BusId root;
    Stage stage = Stage::D1;
};

struct SeriesElimination {
    BusId node;
    BusId lo;
    BusId hi;
    bool created_line = false;
};

struct TriangleCollapse {
    BusId base;
    BusId second;
    BusId third;
    std::array<std::size_t, 3> degrees_before{};
    std::size_t degree_after = 0;
};

using ReductionStep = std::variant<LeafCollapse, SeriesElimination, TriangleCollapse>;

struct ReductionState {
    Network network;
    ReductionLedger ledger;
    std::vector<ReductionStep> trace;
};

ReductionState reduce_degree_one(ReductionState state);
ReductionState reduce_degree_two(ReductionState state);

std::vector<BusId> eligible_nodes(const Network& net, const ReductionLedger& ledger, std::optional<double> vthr);

ReductionState greedy_triangle_reduce(ReductionState state, const Thresholds& thresholds, std::uint64_t seed);

}  // namespace gridreduce
