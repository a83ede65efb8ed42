#include "gridreduce/ledger.hpp"

#include <algorithm>
#include <queue>

#include "json.hpp"

#include "gridreduce/errors.hpp"

namespace gridreduce {

using ojson = nlohmann::ordered_json;

const char* to_string(Stage stage) {
    switch (stage) {
        case Stage::D1: return "d1";
        case Stage::D2: return "d2";
        case Stage::Tri: return "tri";
    }
    return "?";
}

Stage stage_from_string(const std::string& text) {
    if (text == "d1") return Stage::D1;
    if (text == "d2") return Stage::D2;
    if (text == "tri") return Stage::Tri;
    throw ValidationError("unknown stage '" + text + "'");
}

FieldKey FieldKey::edge(const BusId& x, const BusId& y) {
    auto e = make_edge(x, y);
    return {FieldKind::Edge, e.a, e.b};
}

std::string FieldKey::str() const {
    switch (kind) {
        case FieldKind::Tree: return "t_" + first.str();
        case FieldKind::Edge: return "e_" + first.str() + "_" + second.str();
        case FieldKind::Triangle: return "tri_" + first.str();
    }
    return {};
}

std::vector<BusId> FieldKey::anchors() const {
    if (kind == FieldKind::Edge) return {first, second};
    return {first};
}

std::optional<FieldKey> ReductionLedger::find_key(const std::string& text) const {
    for (const auto& [key, items] : entries) {
        if (key.str() == text) return key;
    }
    return std::nullopt;
}

namespace {

void collect(FieldKind kind, const FieldKey& key, const FieldItems& items, std::vector<BusId>& hidden,
             std::vector<std::pair<BusId, BusId>>& absorbed) {
    for (const auto& item : items) {
        if (const auto* path = std::get_if<PathItem>(&item.body)) {
            if (kind == FieldKind::Tree) {
                if (path->nodes.size() < 2) throw IntegrityError("tree branch shorter than two buses in " + key.str());
                hidden.insert(hidden.end(), path->nodes.begin(), path->nodes.end() - 1);
            } else if (kind == FieldKind::Edge) {
                if (path->nodes.size() != 3) throw IntegrityError("edge record is not a triple in " + key.str());
                hidden.push_back(path->nodes[1]);
            } else {
                throw IntegrityError("branch record inside triangle field " + key.str());
            }
        } else if (const auto* nested = std::get_if<NestedItem>(&item.body)) {
            collect(nested->key.kind, nested->key, nested->items, hidden, absorbed);
        } else {
            const auto& ab = std::get<AbsorbedItem>(item.body);
            if (kind != FieldKind::Triangle) throw IntegrityError("absorbed record outside a triangle field in " + key.str());
            if (ab.node != key.first) absorbed.emplace_back(ab.node, key.first);
        }
    }
}

}  // namespace

HiddenIndex index_hidden(const ReductionLedger& ledger) {
    HiddenIndex out;
    for (const auto& [key, items] : ledger.entries) {
        std::vector<BusId> hidden;
        std::vector<std::pair<BusId, BusId>> absorbed;
        collect(key.kind, key, items, hidden, absorbed);
        auto claim = [&](const BusId& id) {
            auto [it, fresh] = out.field_of.emplace(id, key);
            if (!fresh && it->second != key) {
                throw IntegrityError("bus " + id.str() + " is recorded in both " + it->second.str() + " and " + key.str());
            }
        };
        for (const auto& id : hidden) {
            claim(id);
            out.eliminated.insert(id);
        }
        for (const auto& [id, base] : absorbed) {
            claim(id);
            if (out.eliminated.count(id) || !out.absorbed.emplace(id, base).second) {
                throw IntegrityError("bus " + id.str() + " is recorded twice in " + key.str());
            }
        }
    }
    for (const auto& [id, base] : out.absorbed) {
        if (out.hidden(base)) throw IntegrityError("triangle base " + base.str() + " is itself hidden");
    }
    return out;
}

std::vector<BusId> referenced_buses(const FieldKey& key, const FieldItems& items) {
    std::vector<BusId> out = key.anchors();
    for (const auto& item : items) {
        if (const auto* path = std::get_if<PathItem>(&item.body)) {
            out.insert(out.end(), path->nodes.begin(), path->nodes.end());
        } else if (const auto* nested = std::get_if<NestedItem>(&item.body)) {
            auto inner = referenced_buses(nested->key, nested->items);
            out.insert(out.end(), inner.begin(), inner.end());
        } else {
            const auto& ab = std::get<AbsorbedItem>(item.body);
            out.push_back(ab.node);
            for (const auto& e : ab.lines) {
                out.push_back(e.a);
                out.push_back(e.b);
            }
        }
    }
    return out;
}

Network reconstruct_original(const Network& reduced, const ReductionLedger& ledger) {
    const auto hidden = index_hidden(ledger);
    for (const auto& [id, key] : hidden.field_of) {
        if (!ledger.catalog.buses.count(id)) throw IntegrityError(key.str() + " hides " + id.str() + ", which has no catalog record");
    }
    Network out;
    for (const auto& [id, bus] : reduced.buses()) out.add_bus(bus);
    for (const auto& [id, bus] : ledger.catalog.buses) {
        if (out.has_bus(id)) throw IntegrityError("catalog bus " + id.str() + " is also present in the network");
        out.add_bus(bus);
    }
    for (const auto& line : reduced.lines()) {
        if (!line.meta) out.add_line(line.a, line.b, line.admittance, false);
    }
    for (const auto& [key, adm] : ledger.catalog.lines) {
        if (!out.has_bus(key.a) || !out.has_bus(key.b)) {
            throw IntegrityError("catalog line " + key.a.str() + "-" + key.b.str() + " references an unknown bus");
        }
        if (out.has_line(key.a, key.b)) {
            throw IntegrityError("catalog line " + key.a.str() + "-" + key.b.str() + " is also present in the network");
        }
        out.add_line(key.a, key.b, adm, false);
    }
    return out;
}

Network materialize(const Network& original, const ReductionLedger& ledger) {
    const auto hidden = index_hidden(ledger);
    for (const auto& [id, key] : hidden.field_of) {
        if (!original.has_bus(id)) throw IntegrityError(key.str() + " references unknown bus " + id.str());
    }
    for (const auto& [key, items] : ledger.entries) {
        for (const auto& id : referenced_buses(key, items)) {
            if (!original.has_bus(id)) throw IntegrityError(key.str() + " references unknown bus " + id.str());
        }
    }
    auto rep = [&](const BusId& id) -> const BusId& {
        auto it = hidden.absorbed.find(id);
        return it == hidden.absorbed.end() ? id : it->second;
    };

    std::map<BusId, std::set<BusId>> contracted;
    for (const auto& line : original.lines()) {
        const BusId& u = rep(line.a);
        const BusId& v = rep(line.b);
        if (u == v) continue;
        contracted[u].insert(v);
        contracted[v].insert(u);
    }

    Network out;
    for (const auto& [id, bus] : original.buses()) {
        if (!hidden.hidden(id)) out.add_bus(bus);
    }
    auto add = [&](const BusId& u, const BusId& v) {
        if (out.has_line(u, v)) return;
        if (original.has_line(u, v)) {
            out.add_line(u, v, original.line(u, v).admittance, false);
        } else {
            out.add_line(u, v, Complex{}, true);
        }
    };
    for (const auto& [u, nbrs] : contracted) {
        if (!out.has_bus(u)) continue;
        for (const auto& v : nbrs) {
            if (u < v && out.has_bus(v)) add(u, v);
        }
    }

    // Each component of eliminated buses joins its surviving neighbours pairwise.
    std::set<BusId> seen;
    for (const auto& start : hidden.eliminated) {
        if (seen.count(start)) continue;
        std::set<BusId> boundary;
        std::queue<BusId> queue;
        queue.push(start);
        seen.insert(start);
        while (!queue.empty()) {
            BusId cur = queue.front();
            queue.pop();
            auto it = contracted.find(cur);
            if (it == contracted.end()) continue;
            for (const auto& next : it->second) {
                if (hidden.eliminated.count(next)) {
                    if (seen.insert(next).second) queue.push(next);
                } else {
                    boundary.insert(next);
                }
            }
        }
        std::vector<BusId> b(boundary.begin(), boundary.end());
        for (std::size_t i = 0; i < b.size(); ++i) {
            for (std::size_t j = i + 1; j < b.size(); ++j) add(b[i], b[j]);
        }
    }
    return out;
}

void refresh_catalog(ReductionLedger& ledger, const Network& original, const Network& visible) {
    ledger.catalog = Catalog{};
    for (const auto& [id, bus] : original.buses()) {
        if (!visible.has_bus(id)) ledger.catalog.buses.emplace(id, bus);
    }
    for (const auto& line : original.lines()) {
        const bool shown = visible.has_bus(line.a) && visible.has_bus(line.b) && visible.has_line(line.a, line.b) &&
                           !visible.line(line.a, line.b).meta;
        if (!shown) ledger.catalog.lines.emplace(line.key(), line.admittance);
    }
}

namespace {

struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

ojson complex_json(Complex z) { return ojson::array({z.real(), z.imag()}); }

Complex complex_from(const ojson& j) {
    if (!j.is_array() || j.size() != 2) throw SchemaError("expected [re, im]");
    return {j.at(0).get<double>(), j.at(1).get<double>()};
}

ojson key_json(const FieldKey& key) {
    ojson j;
    j["key"] = key.str();
    ojson buses = ojson::array();
    for (const auto& id : key.anchors()) buses.push_back(id.str());
    j["buses"] = buses;
    return j;
}

FieldKey key_from(const ojson& j) {
    const auto text = j.at("key").get<std::string>();
    const auto& buses = j.at("buses");
    FieldKey key;
    if (text.rfind("tri_", 0) == 0 && buses.size() == 1) {
        key = FieldKey::triangle(BusId(buses.at(0).get<std::string>()));
    } else if (text.rfind("t_", 0) == 0 && buses.size() == 1) {
        key = FieldKey::tree(BusId(buses.at(0).get<std::string>()));
    } else if (text.rfind("e_", 0) == 0 && buses.size() == 2) {
        key = FieldKey::edge(BusId(buses.at(0).get<std::string>()), BusId(buses.at(1).get<std::string>()));
    } else {
        throw SchemaError("malformed field key '" + text + "'");
    }
    if (key.str() != text) throw SchemaError("field key '" + text + "' does not match its buses");
    return key;
}

ojson items_json(const FieldItems& items);

ojson item_json(const LedgerItem& item) {
    ojson j;
    if (const auto* path = std::get_if<PathItem>(&item.body)) {
        ojson nodes = ojson::array();
        for (const auto& id : path->nodes) nodes.push_back(id.str());
        j["path"] = nodes;
    } else if (const auto* nested = std::get_if<NestedItem>(&item.body)) {
        ojson map = key_json(nested->key);
        map["items"] = items_json(nested->items);
        j["map"] = map;
    } else {
        const auto& ab = std::get<AbsorbedItem>(item.body);
        j["node"] = ab.node.str();
        ojson lines = ojson::array();
        for (const auto& e : ab.lines) lines.push_back(ojson::array({e.a.str(), e.b.str()}));
        j["lines"] = lines;
    }
    j["stage"] = to_string(item.stage);
    j["step"] = item.step;
    return j;
}

ojson items_json(const FieldItems& items) {
    ojson out = ojson::array();
    for (const auto& item : items) out.push_back(item_json(item));
    return out;
}

FieldItems items_from(const ojson& j);

LedgerItem item_from(const ojson& j) {
    LedgerItem item;
    if (j.contains("path")) {
        PathItem path;
        for (const auto& id : j.at("path")) path.nodes.emplace_back(id.get<std::string>());
        item.body = std::move(path);
    } else if (j.contains("map")) {
        const auto& map = j.at("map");
        item.body = NestedItem{key_from(map), items_from(map.at("items"))};
    } else if (j.contains("node")) {
        AbsorbedItem ab;
        ab.node = BusId(j.at("node").get<std::string>());
        for (const auto& e : j.at("lines")) {
            if (!e.is_array() || e.size() != 2) throw SchemaError("expected a bus pair");
            ab.lines.push_back(make_edge(BusId(e.at(0).get<std::string>()), BusId(e.at(1).get<std::string>())));
        }
        item.body = std::move(ab);
    } else {
        throw SchemaError("ledger item needs path, map or node");
    }
    try {
        item.stage = stage_from_string(j.at("stage").get<std::string>());
    } catch (const ValidationError& e) {
        throw SchemaError(e.what());
    }
    item.step = j.at("step").get<std::uint64_t>();
    return item;
}

FieldItems items_from(const ojson& j) {
    if (!j.is_array()) throw SchemaError("items must be an array");
    FieldItems out;
    for (const auto& item : j) out.push_back(item_from(item));
    return out;
}

std::pair<std::size_t, std::size_t> line_col(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

}  // namespace

std::string serialize(const ReductionLedger& ledger) {
    ojson doc;
    doc["format_version"] = 1;
    doc["seed"] = ledger.seed;
    if (ledger.thresholds) {
        ojson thr;
        if (ledger.thresholds->vthr) {
            thr["vthr"] = *ledger.thresholds->vthr;
        } else {
            thr["vthr"] = "none";
        }
        thr["dthr"] = ledger.thresholds->dthr;
        doc["thresholds"] = thr;
    } else {
        doc["thresholds"] = nullptr;
    }
    ojson counts = ojson::array();
    for (const auto& sc : ledger.stage_counts) {
        counts.push_back(ojson{{"stage", sc.stage}, {"nodes", sc.nodes}, {"edges", sc.edges}});
    }
    doc["stage_counts"] = counts;
    doc["next_step"] = ledger.next_step;
    ojson entries = ojson::array();
    for (const auto& [key, items] : ledger.entries) {
        ojson e = key_json(key);
        e["items"] = items_json(items);
        entries.push_back(e);
    }
    doc["entries"] = entries;
    ojson buses = ojson::array();
    for (const auto& [id, bus] : ledger.catalog.buses) {
        buses.push_back(ojson{{"id", id.str()},
                              {"voltage_kv", bus.nominal_voltage_kv},
                              {"shunt", complex_json(bus.shunt)},
                              {"current", complex_json(bus.current)}});
    }
    ojson lines = ojson::array();
    for (const auto& [key, adm] : ledger.catalog.lines) {
        lines.push_back(ojson{{"a", key.a.str()}, {"b", key.b.str()}, {"admittance", complex_json(adm)}});
    }
    doc["catalog"] = ojson{{"buses", buses}, {"lines", lines}};
    return doc.dump(1) + "\n";
}

ReductionLedger deserialize(const std::string& text, const std::string& source) {
    ojson doc;
    try {
        doc = ojson::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        auto [line, col] = line_col(text, e.byte == 0 ? 0 : e.byte - 1);
        throw ParseError(source, line, col, e.what());
    }
    try {
        if (doc.at("format_version").get<int>() != 1) throw ParseError(source, 0, 0, "unsupported format_version");
        ReductionLedger ledger;
        ledger.seed = doc.at("seed").get<std::uint64_t>();
        const auto& thr = doc.at("thresholds");
        if (!thr.is_null()) {
            Thresholds t;
            const auto& v = thr.at("vthr");
            if (v.is_string()) {
                if (v.get<std::string>() != "none") throw ParseError(source, 0, 0, "vthr must be a number or \"none\"");
            } else {
                t.vthr = v.get<double>();
            }
            t.dthr = thr.at("dthr").get<int>();
            ledger.thresholds = t;
        }
        for (const auto& sc : doc.at("stage_counts")) {
            ledger.stage_counts.push_back(
                {sc.at("stage").get<std::string>(), sc.at("nodes").get<std::size_t>(), sc.at("edges").get<std::size_t>()});
        }
        ledger.next_step = doc.at("next_step").get<std::uint64_t>();
        for (const auto& e : doc.at("entries")) {
            auto key = key_from(e);
            if (!ledger.entries.emplace(key, items_from(e.at("items"))).second) {
                throw ParseError(source, 0, 0, "duplicate field " + key.str());
            }
        }
        const auto& catalog = doc.at("catalog");
        for (const auto& b : catalog.at("buses")) {
            Bus bus{BusId(b.at("id").get<std::string>()), b.at("voltage_kv").get<double>(), complex_from(b.at("shunt")),
                    complex_from(b.at("current"))};
            ledger.catalog.buses.emplace(bus.id, bus);
        }
        for (const auto& l : catalog.at("lines")) {
            ledger.catalog.lines.emplace(make_edge(BusId(l.at("a").get<std::string>()), BusId(l.at("b").get<std::string>())),
                                         complex_from(l.at("admittance")));
        }
        return ledger;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(source, 0, 0, std::string("malformed ledger: ") + e.what());
    } catch (const SchemaError& e) {
        throw ParseError(source, 0, 0, std::string("malformed ledger: ") + e.what());
    }
}

}  // namespace gridreduce
