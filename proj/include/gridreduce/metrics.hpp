#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "gridreduce/ledger.hpp"
#include "gridreduce/network.hpp"

namespace gridreduce {

struct DegreeDistribution {
    std::map<std::size_t, double> bins;

    bool valid() const;
};

DegreeDistribution degree_distribution(const Network& net);
double wasserstein1(const DegreeDistribution& p, const DegreeDistribution& q);

using Histogram = std::map<std::size_t, std::size_t>;

struct StageStats {
    std::string stage;
    std::size_t nodes = 0;
    std::size_t edges = 0;
    double density = 0.0;
    double mean_degree = 0.0;
    double std_degree = 0.0;
    std::size_t max_degree = 0;
    DegreeDistribution distribution;
};

StageStats stage_stats(const std::string& stage, const Network& net);

struct LedgerHistograms {
    Histogram tree_lengths;              // degree-one trees, root included
    Histogram generalized_tree_lengths;  // trees touched by the degree-two stage, root included
    Histogram meta_edge_interior;        // hidden buses per edge field
    Histogram triangle_cluster_sizes;    // base included
    std::size_t accounted_removals = 0;
};

LedgerHistograms ledger_histograms(const ReductionLedger& ledger);

struct WassersteinEntry {
    std::string from;
    std::string to;
    double value = 0.0;
};

struct ReductionReport {
    std::vector<StageStats> stages;
    LedgerHistograms histograms;
    std::vector<WassersteinEntry> wasserstein;
    std::size_t removed_nodes = 0;

    bool conserved() const { return histograms.accounted_removals == removed_nodes; }
};

struct StageSnapshot {
    std::string stage;
    Network network;
};

ReductionReport reduction_report(const std::vector<StageSnapshot>& history, const ReductionLedger& ledger);

nlohmann::ordered_json to_json(const StageStats& stats);
nlohmann::ordered_json to_json(const LedgerHistograms& histograms);
nlohmann::ordered_json to_json(const ReductionReport& report);

// Summary of a network, optionally against its ledger and a comparison network.
nlohmann::ordered_json stats_document(const Network& net, const ReductionLedger* ledger, const Network* compare);
std::string format_stats_table(const nlohmann::ordered_json& document);

}  // namespace gridreduce
