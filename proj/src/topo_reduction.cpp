#include "gridreduce/topo_reduction.hpp"

#include <algorithm>
#include <set>

#include "gridreduce/errors.hpp"
#include "gridreduce/random.hpp"

namespace gridreduce {

namespace {

void append(ReductionLedger& ledger, const FieldKey& key, FieldItems items) {
    auto& field = ledger.entries[key];
    field.insert(field.end(), std::make_move_iterator(items.begin()), std::make_move_iterator(items.end()));
}

void append(ReductionLedger& ledger, const FieldKey& key, LedgerItem item) {
    ledger.entries[key].push_back(std::move(item));
}

FieldItems take(ReductionLedger& ledger, const FieldKey& key) {
    auto it = ledger.entries.find(key);
    if (it == ledger.entries.end()) return {};
    FieldItems out = std::move(it->second);
    ledger.entries.erase(it);
    return out;
}

LedgerItem make_item(ReductionLedger& ledger, decltype(LedgerItem::body) body, Stage stage) {
    return LedgerItem{std::move(body), stage, ledger.take_step()};
}

void remove_bus_recorded(ReductionState& state, const BusId& id) {
    for (const auto& [other, data] : state.network.neighbors(id)) {
        if (!data.meta) state.ledger.catalog.lines.emplace(make_edge(id, other), data.admittance);
    }
    state.ledger.catalog.buses.emplace(id, state.network.bus(id));
    state.network.remove_bus(id);
}

// Collapses a degree-one bus into its neighbour. An edge field on the removed
// line goes to `pending` when given, otherwise to the front of the root's tree.
BusId collapse_leaf(ReductionState& state, const BusId& leaf, Stage stage, FieldItems* pending) {
    auto& ledger = state.ledger;
    const auto& nbrs = state.network.neighbors(leaf);
    if (nbrs.size() != 1) throw IntegrityError("bus " + leaf.str() + " is not a leaf");
    const BusId root = nbrs.begin()->first;

    const auto edge_key = FieldKey::edge(leaf, root);
    const auto tree_key = FieldKey::tree(root);
    if (ledger.has(edge_key)) {
        auto nested = make_item(ledger, NestedItem{edge_key, take(ledger, edge_key)}, stage);
        if (pending) {
            pending->push_back(std::move(nested));
        } else {
            auto& field = ledger.entries[tree_key];
            field.insert(field.begin(), std::move(nested));
        }
    }
    remove_bus_recorded(state, leaf);

    const auto own = FieldKey::tree(leaf);
    if (ledger.has(own)) {
        auto items = take(ledger, own);
        for (auto& item : items) {
            if (auto* path = std::get_if<PathItem>(&item.body)) path->nodes.push_back(root);
        }
        append(ledger, tree_key, std::move(items));
    } else {
        append(ledger, tree_key, make_item(ledger, PathItem{{leaf, root}}, stage));
    }
    state.trace.push_back(LeafCollapse{leaf, root, stage});
    return root;
}

}  // namespace

ReductionState reduce_degree_one(ReductionState state) {
    auto& net = state.network;
    std::set<BusId> low;
    for (const auto& [id, bus] : net.buses()) {
        if (net.degree(id) < 2) low.insert(id);
    }
    while (!low.empty()) {
        const BusId leaf = *low.begin();
        low.erase(low.begin());
        if (net.bus_count() <= 1 || net.degree(leaf) == 0) throw DegenerateNetworkError("degenerate tree network");
        const BusId root = collapse_leaf(state, leaf, Stage::D1, nullptr);
        if (net.bus_count() <= 1) throw DegenerateNetworkError("degenerate tree network");
        if (net.degree(root) < 2) low.insert(root);
    }
    return state;
}

ReductionState reduce_degree_two(ReductionState state) {
    auto& net = state.network;
    auto& ledger = state.ledger;
    if (net.bus_count() < 3) throw DegenerateNetworkError("degenerate ring network");

    std::set<BusId> low;
    for (const auto& [id, bus] : net.buses()) {
        if (net.degree(id) < 3) low.insert(id);
    }
    auto refresh = [&](const BusId& id) {
        if (net.has_bus(id) && net.degree(id) < 3) {
            low.insert(id);
        } else {
            low.erase(id);
        }
    };

    // Collapses the degree-one buses left behind, smallest first.
    auto collapse_leaves = [&](std::set<BusId> leaves) {
        FieldItems pending;
        std::optional<BusId> last_root;
        while (!leaves.empty()) {
            const BusId leaf = *leaves.begin();
            leaves.erase(leaves.begin());
            if (!net.has_bus(leaf) || net.degree(leaf) >= 2) {
                refresh(leaf);
                continue;
            }
            if (net.bus_count() <= 1 || net.degree(leaf) == 0) throw DegenerateNetworkError("degenerate ring network");
            const BusId root = collapse_leaf(state, leaf, Stage::D2, &pending);
            low.erase(leaf);
            last_root = root;
            if (net.degree(root) < 2) leaves.insert(root);
            refresh(root);
        }
        if (!pending.empty()) {
            auto& field = ledger.entries[FieldKey::tree(*last_root)];
            field.insert(field.begin(), std::make_move_iterator(pending.begin()), std::make_move_iterator(pending.end()));
        }
    };

    while (!low.empty()) {
        const BusId x = *low.begin();
        low.erase(low.begin());
        if (net.bus_count() < 3) throw DegenerateNetworkError("degenerate ring network");
        const auto degree = net.degree(x);
        if (degree < 2) {
            collapse_leaves({x});
        } else {
            auto it = net.neighbors(x).begin();
            const BusId lo = it->first;
            const BusId hi = std::next(it)->first;

            FieldItems items;
            for (const auto& j : {lo, hi}) {
                auto merged = take(ledger, FieldKey::edge(x, j));
                items.insert(items.end(), std::make_move_iterator(merged.begin()), std::make_move_iterator(merged.end()));
            }
            remove_bus_recorded(state, x);
            const bool created = !net.has_line(lo, hi);
            if (created) net.add_line(lo, hi, Complex{}, true);

            items.push_back(make_item(ledger, PathItem{{lo, x, hi}}, Stage::D2));
            const auto tree_key = FieldKey::tree(x);
            if (ledger.has(tree_key)) {
                items.push_back(make_item(ledger, NestedItem{tree_key, take(ledger, tree_key)}, Stage::D2));
            }
            append(ledger, FieldKey::edge(lo, hi), std::move(items));
            state.trace.push_back(SeriesElimination{x, lo, hi, created});

            refresh(lo);
            refresh(hi);
            std::set<BusId> leaves;
            for (const auto& j : {lo, hi}) {
                if (net.degree(j) < 2) leaves.insert(j);
            }
            if (!leaves.empty()) collapse_leaves(std::move(leaves));
        }
        if (net.bus_count() < 3) throw DegenerateNetworkError("degenerate ring network");
    }
    return state;
}

std::vector<BusId> eligible_nodes(const Network& net, const ReductionLedger& ledger, std::optional<double> vthr) {
    if (!vthr) return net.bus_ids();
    auto voltage = [&](const BusId& id) {
        if (net.has_bus(id)) return net.bus(id).nominal_voltage_kv;
        auto it = ledger.catalog.buses.find(id);
        if (it == ledger.catalog.buses.end()) throw IntegrityError("ledger references unknown bus " + id.str());
        return it->second.nominal_voltage_kv;
    };
    auto exceeds = [&](const FieldKey& key, const FieldItems& items) {
        for (const auto& id : referenced_buses(key, items)) {
            if (voltage(id) > *vthr) return true;
        }
        return false;
    };
    std::set<BusId> excluded;
    for (const auto& [key, items] : ledger.entries) {
        if (key.kind == FieldKind::Triangle || !exceeds(key, items)) continue;
        for (const auto& id : key.anchors()) excluded.insert(id);
    }
    std::vector<BusId> out;
    for (const auto& [id, bus] : net.buses()) {
        if (bus.nominal_voltage_kv <= *vthr && !excluded.count(id)) out.push_back(id);
    }
    return out;
}

ReductionState greedy_triangle_reduce(ReductionState state, const Thresholds& thresholds, std::uint64_t seed) {
    if (thresholds.dthr < 4) throw DomainError("degree threshold must be at least 4");
    auto& net = state.network;
    auto& ledger = state.ledger;
    const auto dthr = static_cast<std::size_t>(thresholds.dthr);

    std::vector<BusId> order = eligible_nodes(net, ledger, thresholds.vthr);
    if (order.size() < 3) return state;
    std::set<BusId> listed(order.begin(), order.end());
    Rng rng(seed);
    rng.shuffle(order);

    auto find_triangle = [&](const BusId& b1) -> std::optional<std::pair<BusId, BusId>> {
        if (net.degree(b1) >= dthr) return std::nullopt;
        std::vector<BusId> cand;
        for (const auto& [id, data] : net.neighbors(b1)) {
            if (listed.count(id) && net.degree(id) < dthr) cand.push_back(id);
        }
        for (std::size_t i = 0; i < cand.size(); ++i) {
            for (std::size_t j = i + 1; j < cand.size(); ++j) {
                if (net.has_line(cand[i], cand[j])) return std::pair{cand[i], cand[j]};
            }
        }
        return std::nullopt;
    };

    std::set<BusId> bases;
    std::size_t k = 0;
    while (k < order.size()) {
        const BusId b1 = order[k];
        ++k;
        if (net.degree(b1) >= dthr) continue;
        while (auto found = find_triangle(b1)) {
            const auto [b2, b3] = *found;
            TriangleCollapse record{b1, b2, b3, {net.degree(b1), net.degree(b2), net.degree(b3)}, 0};
            const auto key = FieldKey::triangle(b1);
            for (const auto& bi : {b2, b3}) {
                std::vector<EdgeKey> lines;
                for (const auto& [bj, data] : net.neighbors(bi)) lines.push_back(make_edge(bi, bj));
                append(ledger, key, make_item(ledger, AbsorbedItem{bi, std::move(lines)}, Stage::Tri));
                append(ledger, key, take(ledger, FieldKey::triangle(bi)));
                bases.erase(bi);
                const auto nbrs = net.neighbors(bi);
                for (const auto& [bj, data] : nbrs) {
                    if (bj != b1 && !net.has_line(b1, bj)) net.add_line(b1, bj, Complex{}, true);
                }
                remove_bus_recorded(state, bi);
                listed.erase(bi);
            }
            order.erase(std::remove_if(order.begin(), order.end(), [&](const BusId& id) { return !listed.count(id); }),
                        order.end());
            bases.insert(b1);
            record.degree_after = net.degree(b1);
            state.trace.push_back(record);
            k = 0;
            rng.shuffle(order);
        }
    }
    for (const auto& base : bases) {
        std::vector<EdgeKey> lines;
        for (const auto& [bj, data] : net.neighbors(base)) lines.push_back(make_edge(base, bj));
        append(ledger, FieldKey::triangle(base), make_item(ledger, AbsorbedItem{base, std::move(lines)}, Stage::Tri));
    }
    return state;
}

}  // namespace gridreduce
