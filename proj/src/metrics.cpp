#include "gridreduce/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "gridreduce/errors.hpp"
#include "gridreduce/grid_core.hpp"

namespace gridreduce {

using ojson = nlohmann::ordered_json;

bool DegreeDistribution::valid() const {
    if (bins.empty()) return false;
    double total = 0.0;
    for (const auto& [degree, mass] : bins) {
        if (!(mass >= 0.0) || !std::isfinite(mass)) return false;
        total += mass;
    }
    return std::abs(total - 1.0) <= 1e-12;
}

DegreeDistribution degree_distribution(const Network& net) {
    if (net.bus_count() == 0) throw DomainError("degree distribution of an empty network");
    std::map<std::size_t, std::size_t> counts;
    for (const auto& [id, bus] : net.buses()) ++counts[net.degree(id)];
    DegreeDistribution out;
    const double n = static_cast<double>(net.bus_count());
    for (const auto& [degree, count] : counts) out.bins[degree] = static_cast<double>(count) / n;
    return out;
}

double wasserstein1(const DegreeDistribution& p, const DegreeDistribution& q) {
    if (!p.valid() || !q.valid()) throw DomainError("wasserstein1 needs valid degree distributions");
    std::set<std::size_t> support;
    for (const auto& [k, m] : p.bins) support.insert(k);
    for (const auto& [k, m] : q.bins) support.insert(k);
    std::vector<std::size_t> ks(support.begin(), support.end());
    double fp = 0.0, fq = 0.0, total = 0.0;
    for (std::size_t i = 0; i + 1 < ks.size(); ++i) {
        if (auto it = p.bins.find(ks[i]); it != p.bins.end()) fp += it->second;
        if (auto it = q.bins.find(ks[i]); it != q.bins.end()) fq += it->second;
        total += std::abs(fp - fq) * static_cast<double>(ks[i + 1] - ks[i]);
    }
    return total;
}

StageStats stage_stats(const std::string& stage, const Network& net) {
    StageStats s;
    s.stage = stage;
    s.nodes = net.bus_count();
    s.edges = net.line_count();
    if (s.nodes == 0) return s;
    s.density = s.nodes >= 2 ? graph_density(net) : 0.0;
    double sum = 0.0, sq = 0.0;
    for (const auto& [id, bus] : net.buses()) {
        const auto d = net.degree(id);
        sum += static_cast<double>(d);
        sq += static_cast<double>(d) * static_cast<double>(d);
        s.max_degree = std::max(s.max_degree, d);
    }
    const double n = static_cast<double>(s.nodes);
    s.mean_degree = sum / n;
    s.std_degree = std::sqrt(std::max(0.0, sq / n - s.mean_degree * s.mean_degree));
    s.distribution = degree_distribution(net);
    return s;
}

namespace {

bool has_stage(const FieldItems& items, Stage stage) {
    for (const auto& item : items) {
        if (item.stage == stage) return true;
        if (const auto* nested = std::get_if<NestedItem>(&item.body)) {
            if (has_stage(nested->items, stage)) return true;
        }
    }
    return false;
}

ojson histogram_json(const Histogram& h) {
    ojson out = ojson::object();
    for (const auto& [k, v] : h) out[std::to_string(k)] = v;
    return out;
}

ojson summary_json(const Histogram& h) {
    std::size_t count = 0, max = 0;
    double sum = 0.0, sq = 0.0;
    for (const auto& [k, v] : h) {
        count += v;
        sum += static_cast<double>(k * v);
        sq += static_cast<double>(k * k * v);
        max = std::max(max, k);
    }
    const double mean = count ? sum / static_cast<double>(count) : 0.0;
    const double sd = count ? std::sqrt(std::max(0.0, sq / static_cast<double>(count) - mean * mean)) : 0.0;
    return ojson{{"count", count}, {"mean", mean}, {"std", sd}, {"max", max}, {"histogram", histogram_json(h)}};
}

}  // namespace

LedgerHistograms ledger_histograms(const ReductionLedger& ledger) {
    LedgerHistograms out;
    const auto hidden = index_hidden(ledger);
    std::map<FieldKey, std::size_t> counts;
    for (const auto& [id, key] : hidden.field_of) ++counts[key];
    for (const auto& [key, items] : ledger.entries) {
        const std::size_t n = counts.count(key) ? counts.at(key) : 0;
        out.accounted_removals += n;
        switch (key.kind) {
            case FieldKind::Tree:
                if (has_stage(items, Stage::D2)) {
                    ++out.generalized_tree_lengths[n + 1];
                } else {
                    ++out.tree_lengths[n + 1];
                }
                break;
            case FieldKind::Edge: ++out.meta_edge_interior[n]; break;
            case FieldKind::Triangle: ++out.triangle_cluster_sizes[n + 1]; break;
        }
    }
    return out;
}

ReductionReport reduction_report(const std::vector<StageSnapshot>& history, const ReductionLedger& ledger) {
    ReductionReport report;
    for (const auto& snap : history) report.stages.push_back(stage_stats(snap.stage, snap.network));
    report.histograms = ledger_histograms(ledger);
    if (!history.empty()) report.removed_nodes = history.front().network.bus_count() - history.back().network.bus_count();
    auto find = [&](const std::string& name) -> const StageStats* {
        for (const auto& s : report.stages) {
            if (s.stage == name) return &s;
        }
        return nullptr;
    };
    for (auto [from, to] : {std::pair{"d1", "input"}, std::pair{"d2", "input"}, std::pair{"tri", "d2"}}) {
        const auto* a = find(from);
        const auto* b = find(to);
        if (a && b && a->nodes && b->nodes) report.wasserstein.push_back({from, to, wasserstein1(a->distribution, b->distribution)});
    }
    return report;
}

ojson to_json(const StageStats& s) {
    ojson dist = ojson::object();
    for (const auto& [k, m] : s.distribution.bins) dist[std::to_string(k)] = m;
    return ojson{{"stage", s.stage},           {"nodes", s.nodes},
                 {"edges", s.edges},           {"density", s.density},
                 {"mean_degree", s.mean_degree}, {"std_degree", s.std_degree},
                 {"max_degree", s.max_degree}, {"degree_distribution", dist}};
}

ojson to_json(const LedgerHistograms& h) {
    return ojson{{"tree_lengths", summary_json(h.tree_lengths)},
                 {"generalized_tree_lengths", summary_json(h.generalized_tree_lengths)},
                 {"meta_edge_interior", summary_json(h.meta_edge_interior)},
                 {"triangle_cluster_sizes", summary_json(h.triangle_cluster_sizes)},
                 {"accounted_removals", h.accounted_removals}};
}

ojson to_json(const ReductionReport& r) {
    ojson stages = ojson::array();
    for (const auto& s : r.stages) stages.push_back(to_json(s));
    ojson w = ojson::array();
    for (const auto& e : r.wasserstein) w.push_back(ojson{{"from", e.from}, {"to", e.to}, {"value", e.value}});
    return ojson{{"stages", stages},
                 {"histograms", to_json(r.histograms)},
                 {"wasserstein", w},
                 {"removed_nodes", r.removed_nodes},
                 {"conserved", r.conserved()}};
}

ojson stats_document(const Network& net, const ReductionLedger* ledger, const Network* compare) {
    ojson doc;
    const auto current = stage_stats("current", net);
    doc["network"] = to_json(current);
    if (ledger) {
        const Network original = reconstruct_original(net, *ledger);
        const auto orig = stage_stats("original", original);
        doc["original"] = to_json(orig);
        doc["wasserstein_to_original"] = current.nodes ? wasserstein1(current.distribution, orig.distribution) : 0.0;
        ojson counts = ojson::array();
        for (const auto& sc : ledger->stage_counts) {
            counts.push_back(ojson{{"stage", sc.stage}, {"nodes", sc.nodes}, {"edges", sc.edges}});
        }
        doc["stage_counts"] = counts;
        doc["fields"] = ledger->entries.size();
        doc["ledger"] = to_json(ledger_histograms(*ledger));
    }
    if (compare) {
        const auto other = stage_stats("compare", *compare);
        doc["compare"] = to_json(other);
        doc["wasserstein_to_compare"] =
            current.nodes && other.nodes ? wasserstein1(current.distribution, other.distribution) : 0.0;
    }
    return doc;
}

std::string format_stats_table(const ojson& doc) {
    std::ostringstream os;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-10s %9s %9s %9s %9s %8s %12s\n", "network", "nodes", "edges", "mean deg", "std deg",
                  "max deg", "density");
    os << buf;
    auto row = [&](const ojson& s, const std::string& label) {
        std::snprintf(buf, sizeof buf, "%-10s %9zu %9zu %9.3f %9.3f %8zu %12.4e\n", label.c_str(),
                      s.at("nodes").get<std::size_t>(), s.at("edges").get<std::size_t>(), s.at("mean_degree").get<double>(),
                      s.at("std_degree").get<double>(), s.at("max_degree").get<std::size_t>(), s.at("density").get<double>());
        os << buf;
    };
    row(doc.at("network"), "current");
    if (doc.contains("original")) row(doc.at("original"), "original");
    if (doc.contains("compare")) row(doc.at("compare"), "compare");
    if (doc.contains("stage_counts") && !doc.at("stage_counts").empty()) {
        os << "\nstage          nodes     edges\n";
        for (const auto& sc : doc.at("stage_counts")) {
            std::snprintf(buf, sizeof buf, "%-10s %9zu %9zu\n", sc.at("stage").get<std::string>().c_str(),
                          sc.at("nodes").get<std::size_t>(), sc.at("edges").get<std::size_t>());
            os << buf;
        }
    }
    if (doc.contains("ledger")) {
        std::snprintf(buf, sizeof buf, "\n%-24s %6s %9s %9s %6s\n", "record", "count", "mean", "std", "max");
        os << buf;
        for (const auto* name : {"tree_lengths", "generalized_tree_lengths", "meta_edge_interior", "triangle_cluster_sizes"}) {
            const auto& h = doc.at("ledger").at(name);
            std::snprintf(buf, sizeof buf, "%-24s %6zu %9.3f %9.3f %6zu\n", name, h.at("count").get<std::size_t>(),
                          h.at("mean").get<double>(), h.at("std").get<double>(), h.at("max").get<std::size_t>());
            os << buf;
        }
    }
    if (doc.contains("wasserstein_to_original")) {
        std::snprintf(buf, sizeof buf, "\nW1(current, original) = %.4f\n", doc.at("wasserstein_to_original").get<double>());
        os << buf;
    }
    if (doc.contains("wasserstein_to_compare")) {
        std::snprintf(buf, sizeof buf, "W1(current, compare) = %.4f\n", doc.at("wasserstein_to_compare").get<double>());
        os << buf;
    }
    return os.str();
}

}  // namespace gridreduce
