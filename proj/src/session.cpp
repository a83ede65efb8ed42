#include "gridreduce/session.hpp"

#include <random>

#include "gridreduce/errors.hpp"
#include "gridreduce/metrics.hpp"

namespace gridreduce {

using nlohmann::ordered_json;

namespace {

std::string make_token() {
    std::random_device rd;
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (int i = 0; i < 16; ++i) out += hex[rd() % 16];
    return out;
}

ordered_json edge_json(const EdgeKey& e) { return {{"a", e.a.str()}, {"b", e.b.str()}}; }

}  // namespace

Session::Session(Network network, ReductionLedger ledger)
    : network_(std::move(network)), ledger_(std::move(ledger)), id_(make_token()) {
    original_ = reconstruct_original(network_, ledger_);
    if (!(materialize(original_, ledger_) == network_)) {
        throw IntegrityError("network is not consistent with its ledger");
    }
}

ordered_json Session::network_document() const {
    const auto sizes = cluster_sizes(network_, ledger_);
    const auto fields = expandable_fields(network_, ledger_);
    ordered_json doc;
    doc["session"] = id_;
    doc["nodes"] = ordered_json::array();
    for (const auto& [id, bus] : network_.buses()) {
        ordered_json node;
        node["id"] = id.str();
        node["voltage_kv"] = bus.nominal_voltage_kv;
        node["degree"] = network_.degree(id);
        const auto s = sizes.find(id);
        node["cluster_size"] = s == sizes.end() ? 1 : s->second;
        node["expandable_fields"] = ordered_json::array();
        if (const auto f = fields.find(id); f != fields.end()) {
            for (const auto& key : f->second) node["expandable_fields"].push_back(key);
        }
        doc["nodes"].push_back(std::move(node));
    }
    doc["edges"] = ordered_json::array();
    for (const auto& line : network_.lines()) {
        doc["edges"].push_back({{"a", line.a.str()}, {"b", line.b.str()}, {"is_meta", line.meta}});
    }
    return doc;
}

ordered_json Session::stats_document() const { return gridreduce::stats_document(network_, &ledger_, nullptr); }

ordered_json Session::expand(const std::string& target) {
    const auto parsed = parse_target(target, ledger_);
    auto result = parsed.kind == ExpansionKind::All ? expand_all(network_, ledger_) : gridreduce::expand(network_, ledger_, parsed);
    undo_.emplace_back(network_, ledger_);
    network_ = result.network;
    ledger_ = result.ledger;
    return delta_document(result);
}

ordered_json Session::undo() {
    if (undo_.empty()) throw DependencyError("nothing to undo", {});
    ExpansionResult result;
    auto [net, ledger] = std::move(undo_.back());
    undo_.pop_back();
    diff_networks(network_, net, result);
    auto doc = delta_document(result);
    doc["removed_nodes"] = ordered_json::array();
    for (const auto& [id, bus] : network_.buses()) {
        if (!net.has_bus(id)) doc["removed_nodes"].push_back(id.str());
    }
    network_ = std::move(net);
    ledger_ = std::move(ledger);
    return doc;
}

ordered_json delta_document(const ExpansionResult& result) {
    ordered_json doc;
    doc["added_nodes"] = ordered_json::array();
    for (const auto& id : result.added_nodes) doc["added_nodes"].push_back(id.str());
    doc["added_edges"] = ordered_json::array();
    for (const auto& e : result.added_edges) doc["added_edges"].push_back(edge_json(e));
    doc["removed_edges"] = ordered_json::array();
    for (const auto& e : result.removed_edges) doc["removed_edges"].push_back(edge_json(e));
    doc["anchor"] = result.anchor ? ordered_json(result.anchor->str()) : ordered_json(nullptr);
    return doc;
}

}  // namespace gridreduce
