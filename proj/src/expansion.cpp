#include "gridreduce/expansion.hpp"

#include <algorithm>
#include <set>

#include "gridreduce/errors.hpp"

namespace gridreduce {

namespace {

struct View {
    const Network& original;
    HiddenIndex hidden;

    bool present(const BusId& id) const { return original.has_bus(id) && !hidden.hidden(id); }
};

void append(ReductionLedger& ledger, const FieldKey& key, FieldItems items) {
    auto& field = ledger.entries[key];
    field.insert(field.end(), std::make_move_iterator(items.begin()), std::make_move_iterator(items.end()));
}

void hoist(ReductionLedger& ledger, NestedItem nested) { append(ledger, nested.key, std::move(nested.items)); }

// Lifts nested maps whose anchors are all present to the top level.
void hoist_ready(ReductionLedger& ledger, const View& view) {
    for (bool changed = true; changed;) {
        changed = false;
        std::vector<NestedItem> lifted;
        for (auto it = ledger.entries.begin(); it != ledger.entries.end();) {
            auto& items = it->second;
            for (auto jt = items.begin(); jt != items.end();) {
                auto* nested = std::get_if<NestedItem>(&jt->body);
                bool ready = nested != nullptr;
                if (ready) {
                    for (const auto& id : nested->key.anchors()) ready = ready && view.present(id);
                }
                if (ready) {
                    lifted.push_back(std::move(*nested));
                    jt = items.erase(jt);
                } else {
                    ++jt;
                }
            }
            it = items.empty() ? ledger.entries.erase(it) : std::next(it);
        }
        for (auto& nested : lifted) {
            hoist(ledger, std::move(nested));
            changed = true;
        }
    }
}

std::vector<std::string> missing_prerequisites(const ReductionLedger& ledger, const View& view,
                                               const std::vector<BusId>& needed) {
    std::vector<std::string> out;
    for (const auto& id : needed) {
        if (view.present(id)) continue;
        auto target = home_target(ledger, id);
        out.push_back(target ? *target : id.str());
    }
    return out;
}

[[noreturn]] void throw_dependency(const ExpansionTarget& target, std::vector<std::string> prereqs) {
    std::string list;
    for (const auto& p : prereqs) list += (list.empty() ? "" : ", ") + p;
    throw DependencyError("cannot expand " + target.str() + " before " + list, std::move(prereqs));
}

void expand_whole(ReductionLedger& ledger, const FieldKey& key) {
    auto items = std::move(ledger.entries.at(key));
    ledger.entries.erase(key);
    for (auto& item : items) {
        if (auto* nested = std::get_if<NestedItem>(&item.body)) hoist(ledger, std::move(*nested));
    }
}

void expand_leaf(ReductionLedger& ledger, const FieldKey& key, const BusId& member) {
    auto& items = ledger.entries.at(key);
    std::set<BusId> restored;
    for (const auto& item : items) {
        const auto* path = std::get_if<PathItem>(&item.body);
        if (!path) continue;
        auto pos = std::find(path->nodes.begin(), path->nodes.end() - 1, member);
        if (pos != path->nodes.end() - 1) {
            restored.insert(pos, path->nodes.end() - 1);
            break;
        }
    }
    if (restored.empty()) throw NotFoundError(member.str() + " is not a branch bus of " + key.str());

    FieldItems keep;
    std::vector<std::pair<BusId, LedgerItem>> moved;
    for (auto& item : items) {
        auto* path = std::get_if<PathItem>(&item.body);
        if (!path) {
            keep.push_back(std::move(item));
            continue;
        }
        if (restored.count(path->nodes.front())) continue;
        auto hit = std::find_if(path->nodes.begin(), path->nodes.end() - 1, [&](const BusId& id) { return restored.count(id); });
        if (hit == path->nodes.end() - 1) {
            keep.push_back(std::move(item));
            continue;
        }
        BusId anchor = *hit;
        path->nodes.erase(std::next(hit), path->nodes.end());
        moved.emplace_back(anchor, std::move(item));
    }
    if (keep.empty()) {
        ledger.entries.erase(key);
    } else {
        items = std::move(keep);
    }
    for (auto& [anchor, item] : moved) ledger.entries[FieldKey::tree(anchor)].push_back(std::move(item));
}

void expand_edge_node(ReductionLedger& ledger, const View& view, const ExpansionTarget& target) {
    const auto& key = target.key;
    const BusId& x = *target.member;
    auto items = std::move(ledger.entries.at(key));

    // Replay the merged records as a forest: a record hangs below the first
    // later record that eliminated one of its endpoints.
    const std::size_t n = items.size();
    std::map<BusId, std::size_t> unit_of_middle;
    std::vector<long> parent(n, -1), owner(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
        if (const auto* path = std::get_if<PathItem>(&items[i].body)) {
            unit_of_middle[path->nodes[1]] = i;
            owner[i] = static_cast<long>(i);
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        const auto* path = std::get_if<PathItem>(&items[i].body);
        if (!path) {
            const auto* nested = std::get_if<NestedItem>(&items[i].body);
            if (nested && nested->key.kind == FieldKind::Tree) {
                auto it = unit_of_middle.find(nested->key.first);
                if (it != unit_of_middle.end()) owner[i] = static_cast<long>(it->second);
            }
            continue;
        }
        for (std::size_t j = i + 1; j < n; ++j) {
            const auto* later = std::get_if<PathItem>(&items[j].body);
            if (later && (later->nodes[1] == path->nodes[0] || later->nodes[1] == path->nodes[2])) {
                parent[i] = static_cast<long>(j);
                break;
            }
        }
    }

    auto unit = unit_of_middle.find(x);
    if (unit == unit_of_middle.end()) {
        ledger.entries[key] = std::move(items);
        throw NotFoundError(x.str() + " is not an edge bus of " + key.str());
    }
    const std::size_t ux = unit->second;
    const auto xs = std::get<PathItem>(items[ux].body).nodes;
    if (!view.present(xs[0]) || !view.present(xs[2])) {
        ledger.entries[key] = std::move(items);
        throw_dependency(target, missing_prerequisites(ledger, view, {xs[0], xs[2]}));
    }

    // Group of each record: the new edge field it moves to, if any.
    auto top_of = [&](std::size_t i) {
        std::size_t cur = i;
        while (parent[cur] >= 0 && static_cast<std::size_t>(parent[cur]) != ux) cur = static_cast<std::size_t>(parent[cur]);
        return std::pair{cur, parent[cur] >= 0};
    };
    std::vector<std::optional<FieldKey>> group_of(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (i == ux || owner[i] < 0 || owner[i] == static_cast<long>(ux)) continue;
        auto [top, under_x] = top_of(static_cast<std::size_t>(owner[i]));
        if (!under_x) continue;
        const auto& tn = std::get<PathItem>(items[top].body).nodes;
        group_of[i] = FieldKey::edge(x, tn[0] == x ? tn[2] : tn[0]);
    }
    FieldItems keep;
    std::map<FieldKey, FieldItems> groups;
    std::vector<NestedItem> lifted;
    for (std::size_t i = 0; i < n; ++i) {
        if (i == ux) continue;
        if (owner[i] == static_cast<long>(ux)) {
            lifted.push_back(std::move(std::get<NestedItem>(items[i].body)));
        } else if (group_of[i]) {
            groups[*group_of[i]].push_back(std::move(items[i]));
        } else {
            keep.push_back(std::move(items[i]));
        }
    }
    if (keep.empty()) {
        ledger.entries.erase(key);
    } else {
        ledger.entries[key] = std::move(keep);
    }
    for (auto& [gk, gi] : groups) append(ledger, gk, std::move(gi));
    for (auto& nested : lifted) hoist(ledger, std::move(nested));
}

void expand_absorbed(ReductionLedger& ledger, const FieldKey& key, const BusId& member) {
    auto& items = ledger.entries.at(key);
    auto it = std::find_if(items.begin(), items.end(), [&](const LedgerItem& item) {
        const auto* ab = std::get_if<AbsorbedItem>(&item.body);
        return ab && ab->node == member && member != key.first;
    });
    if (it == items.end()) throw NotFoundError(member.str() + " is not absorbed in " + key.str());
    items.erase(it);
    const bool others = std::any_of(items.begin(), items.end(), [&](const LedgerItem& item) {
        const auto* ab = std::get_if<AbsorbedItem>(&item.body);
        return !ab || ab->node != key.first;
    });
    if (!others) ledger.entries.erase(key);
}

ExpansionResult finish(const Network& before, const Network& original, ReductionLedger ledger, std::optional<BusId> anchor) {
    ExpansionResult out;
    out.network = materialize(original, ledger);
    refresh_catalog(ledger, original, out.network);
    out.ledger = std::move(ledger);
    out.anchor = std::move(anchor);
    diff_networks(before, out.network, out);
    return out;
}

}  // namespace

std::string ExpansionTarget::str() const {
    if (kind == ExpansionKind::All) return "ALL";
    return member ? key.str() + ":" + member->str() : key.str();
}

ExpansionTarget parse_target(const std::string& text, const ReductionLedger& ledger) {
    if (text == "ALL") return {ExpansionKind::All, {}, std::nullopt};
    if (auto key = ledger.find_key(text)) return {ExpansionKind::WholeField, *key, std::nullopt};
    std::optional<FieldKey> best;
    for (const auto& [key, items] : ledger.entries) {
        const auto prefix = key.str() + ":";
        if (text.size() > prefix.size() && text.compare(0, prefix.size(), prefix) == 0 &&
            (!best || best->str().size() < key.str().size())) {
            best = key;
        }
    }
    if (!best) throw NotFoundError("unknown expansion target '" + text + "'");
    BusId member(text.substr(best->str().size() + 1));
    const auto hidden = index_hidden(ledger);
    const auto home = hidden.field_of.find(member);
    if (home == hidden.field_of.end() || home->second != *best) {
        throw NotFoundError(member.str() + " is not held by " + best->str());
    }
    switch (best->kind) {
        case FieldKind::Tree: return {ExpansionKind::SingleLeaf, *best, member};
        case FieldKind::Edge: return {ExpansionKind::SingleEdgeNode, *best, member};
        case FieldKind::Triangle: return {ExpansionKind::SingleAbsorbedNode, *best, member};
    }
    throw NotFoundError("unknown expansion target '" + text + "'");
}

ExpansionResult expand(const Network& net, const ReductionLedger& ledger, const ExpansionTarget& target) {
    if (target.kind == ExpansionKind::All) return expand_all(net, ledger);
    if (!ledger.has(target.key)) throw NotFoundError("unknown field " + target.key.str());

    const Network original = reconstruct_original(net, ledger);
    ReductionLedger next = ledger;
    const View view{original, index_hidden(ledger)};

    std::optional<BusId> anchor = target.key.first;
    switch (target.kind) {
        case ExpansionKind::WholeField: {
            auto prereqs = missing_prerequisites(ledger, view, target.key.anchors());
            if (!prereqs.empty()) throw_dependency(target, std::move(prereqs));
            expand_whole(next, target.key);
            break;
        }
        case ExpansionKind::SingleLeaf: {
            auto prereqs = missing_prerequisites(ledger, view, {target.key.first});
            if (!prereqs.empty()) throw_dependency(target, std::move(prereqs));
            expand_leaf(next, target.key, *target.member);
            break;
        }
        case ExpansionKind::SingleEdgeNode: expand_edge_node(next, view, target); break;
        case ExpansionKind::SingleAbsorbedNode: expand_absorbed(next, target.key, *target.member); break;
        case ExpansionKind::All: break;
    }
    const View after{original, index_hidden(next)};
    hoist_ready(next, after);
    return finish(net, original, std::move(next), std::move(anchor));
}

ExpansionResult expand_all(const Network& net, const ReductionLedger& ledger) {
    const Network original = reconstruct_original(net, ledger);
    materialize(original, ledger);
    ReductionLedger next = ledger;
    while (!next.entries.empty()) {
        const View view{original, index_hidden(next)};
        std::vector<FieldKey> ready;
        for (const auto& [key, items] : next.entries) {
            const auto anchors = key.anchors();
            if (std::all_of(anchors.begin(), anchors.end(), [&](const BusId& id) { return view.present(id); })) {
                ready.push_back(key);
            }
        }
        if (ready.empty()) {
            throw IntegrityError("ledger cannot be inverted: field " + next.entries.begin()->first.str() +
                                 " is anchored on hidden buses");
        }
        for (const auto& key : ready) {
            if (next.has(key)) expand_whole(next, key);
        }
    }
    return finish(net, original, std::move(next), std::nullopt);
}

void diff_networks(const Network& before, const Network& after, ExpansionResult& out) {
    out.added_nodes.clear();
    out.added_edges.clear();
    out.removed_edges.clear();
    for (const auto& [id, bus] : after.buses()) {
        if (!before.has_bus(id)) out.added_nodes.push_back(id);
    }
    auto same = [](const Network& x, const Line& line) {
        return x.has_bus(line.a) && x.has_bus(line.b) && x.has_line(line.a, line.b) && x.line(line.a, line.b).meta == line.meta;
    };
    for (const auto& line : after.lines()) {
        if (!same(before, line)) out.added_edges.push_back(line.key());
    }
    for (const auto& line : before.lines()) {
        if (!same(after, line)) out.removed_edges.push_back(line.key());
    }
}

std::optional<std::string> home_target(const ReductionLedger& ledger, const BusId& id) {
    const auto hidden = index_hidden(ledger);
    auto it = hidden.field_of.find(id);
    if (it == hidden.field_of.end()) return std::nullopt;
    const auto& key = it->second;
    for (const auto& item : ledger.entries.at(key)) {
        if (const auto* path = std::get_if<PathItem>(&item.body)) {
            const bool own = key.kind == FieldKind::Edge
                                 ? path->nodes[1] == id
                                 : std::find(path->nodes.begin(), path->nodes.end() - 1, id) != path->nodes.end() - 1;
            if (own) return key.str() + ":" + id.str();
        } else if (const auto* ab = std::get_if<AbsorbedItem>(&item.body)) {
            if (ab->node == id) return key.str() + ":" + id.str();
        }
    }
    return key.str();
}

std::map<BusId, std::size_t> cluster_sizes(const Network& net, const ReductionLedger& ledger) {
    const auto hidden = index_hidden(ledger);
    std::map<BusId, BusId> home;
    for (const auto& [id, bus] : net.buses()) home[id] = id;
    for (const auto& [id, base] : hidden.absorbed) home[id] = base;

    std::map<FieldKey, std::vector<BusId>> members;
    for (const auto& [id, key] : hidden.field_of) {
        if (hidden.eliminated.count(id)) members[key].push_back(id);
    }
    for (bool changed = true; changed;) {
        changed = false;
        for (const auto& [key, ids] : members) {
            if (key.kind == FieldKind::Triangle || home.count(ids.front())) continue;
            std::optional<BusId> target;
            if (key.kind == FieldKind::Tree) {
                auto it = home.find(key.first);
                if (it != home.end()) target = it->second;
            } else {
                auto a = home.find(key.first);
                auto c = home.find(key.second);
                if (a != home.end() && c != home.end() && a->second == c->second) target = a->second;
            }
            if (!target) continue;
            for (const auto& id : ids) home[id] = *target;
            changed = true;
        }
    }
    std::map<BusId, std::size_t> out;
    for (const auto& [id, bus] : net.buses()) out[id] = 0;
    for (const auto& [id, h] : home) {
        auto it = out.find(h);
        if (it != out.end()) ++it->second;
    }
    return out;
}

std::map<BusId, std::vector<std::string>> expandable_fields(const Network& net, const ReductionLedger& ledger) {
    std::map<BusId, std::vector<std::string>> out;
    for (const auto& [id, bus] : net.buses()) out[id];
    for (const auto& [key, items] : ledger.entries) {
        for (const auto& id : key.anchors()) {
            auto it = out.find(id);
            if (it != out.end()) it->second.push_back(key.str());
        }
    }
    return out;
}

}  // namespace gridreduce
