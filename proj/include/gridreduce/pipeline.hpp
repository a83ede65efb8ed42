#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gridreduce/kron.hpp"
#include "gridreduce/ledger.hpp"
#include "gridreduce/metrics.hpp"
#include "gridreduce/topo_reduction.hpp"

namespace gridreduce {

// "d1,d2,tri"; stages must form a prefix of that order. "" and "none" give no stages.
std::vector<Stage> parse_stages(const std::string& text);

struct TopologicalRun {
    ReductionState state;
    std::vector<StageSnapshot> history;  // input first, then one snapshot per stage
    ReductionReport report;
};

TopologicalRun run_topological(const Network& net, const std::vector<Stage>& stages, const Thresholds& thresholds,
                               std::uint64_t seed);

struct NumericResult {
    LoopyLaplacian q;
    CurrentVector c;
    ReductionLedger ledger;
    ReductionReport report;
    Network network;  // topological result
    std::vector<ReductionStep> trace;
};

NumericResult numeric_reduction_pipeline(const Network& net, const CurrentVector& c, const std::vector<Stage>& stages,
                                         const Thresholds& thresholds, std::uint64_t seed);

}  // namespace gridreduce
