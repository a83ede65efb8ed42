#include "gridreduce/pipeline.hpp"

#include <algorithm>
#include <sstream>

#include "gridreduce/errors.hpp"
#include "gridreduce/grid_core.hpp"

namespace gridreduce {

std::vector<Stage> parse_stages(const std::string& text) {
    std::vector<Stage> out;
    if (text.empty() || text == "none") return out;
    std::stringstream ss(text);
    std::string token;
    while (std::getline(ss, token, ',')) {
        token.erase(0, token.find_first_not_of(" \t"));
        token.erase(token.find_last_not_of(" \t") + 1);
        out.push_back(stage_from_string(token));
    }
    const Stage order[] = {Stage::D1, Stage::D2, Stage::Tri};
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (i >= 3 || out[i] != order[i]) throw ValidationError("stages must be a prefix of d1,d2,tri, got '" + text + "'");
    }
    return out;
}

TopologicalRun run_topological(const Network& net, const std::vector<Stage>& stages, const Thresholds& thresholds,
                               std::uint64_t seed) {
    TopologicalRun run;
    run.state.network = net;
    run.state.ledger.seed = seed;
    run.state.ledger.thresholds = thresholds;
    run.history.push_back({"input", net});
    run.state.ledger.stage_counts.push_back({"input", net.bus_count(), net.line_count()});
    for (Stage stage : stages) {
        switch (stage) {
            case Stage::D1: run.state = reduce_degree_one(std::move(run.state)); break;
            case Stage::D2: run.state = reduce_degree_two(std::move(run.state)); break;
            case Stage::Tri: run.state = greedy_triangle_reduce(std::move(run.state), thresholds, seed); break;
        }
        const auto& n = run.state.network;
        run.history.push_back({to_string(stage), n});
        run.state.ledger.stage_counts.push_back({to_string(stage), n.bus_count(), n.line_count()});
    }
    run.report = reduction_report(run.history, run.state.ledger);
    return run;
}

NumericResult numeric_reduction_pipeline(const Network& net, const CurrentVector& c, const std::vector<Stage>& stages,
                                         const Thresholds& thresholds, std::uint64_t seed) {
    require_inductive(net);
    auto run = run_topological(net, stages, thresholds, seed);

    LoopyLaplacian q = build_loopy_laplacian(net);
    if (c.index.size() != q.size() || c.values.size() != static_cast<Eigen::Index>(q.size())) {
        throw IndexError("current vector does not cover the network");
    }
    std::map<BusId, Complex> by_id;
    for (std::size_t i = 0; i < c.index.size(); ++i) {
        if (!q.contains(c.index[i]) || !by_id.emplace(c.index[i], c.values[static_cast<Eigen::Index>(i)]).second) {
            throw IndexError("current vector is not a permutation of the buses");
        }
    }
    CurrentVector cur;
    cur.index = q.index();
    cur.values.resize(static_cast<Eigen::Index>(q.size()));
    for (std::size_t i = 0; i < q.size(); ++i) cur.values[static_cast<Eigen::Index>(i)] = by_id.at(q.index()[i]);

    // The last degree-one/two snapshot fixes the Kron reference set.
    const Network* survivors = nullptr;
    for (std::size_t i = 0; i < stages.size(); ++i) {
        if (stages[i] != Stage::Tri) survivors = &run.history[i + 1].network;
    }
    if (survivors && survivors->bus_count() < q.size()) {
        auto kr = kron_reduce(q, survivors->bus_ids());
        cur = reduced_currents(kr, cur);
        q = std::move(kr.reduced);
    }
    for (const auto& step : run.state.trace) {
        if (const auto* tri = std::get_if<TriangleCollapse>(&step)) {
            auto agg = aggregate_triangle_laplacian(q, cur, {tri->base, tri->second, tri->third});
            q = std::move(agg.q);
            cur = std::move(agg.c);
        }
    }

    NumericResult out;
    out.q = std::move(q);
    out.c = std::move(cur);
    out.ledger = std::move(run.state.ledger);
    out.report = std::move(run.report);
    out.network = std::move(run.state.network);
    out.trace = std::move(run.state.trace);
    return out;
}

}  // namespace gridreduce
