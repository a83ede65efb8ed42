#include "gridreduce/synthetic.hpp"

#include <cstdio>
#include <set>

#include "gridreduce/errors.hpp"
#include "gridreduce/random.hpp"

namespace gridreduce {

using nlohmann::ordered_json;

namespace {

constexpr std::size_t kMaxBuses = 5'000'000;

std::size_t tree_size(const TreeSpec& t) {
    std::size_t total = 0;
    std::size_t level = 1;
    for (std::size_t d = 0; d < t.depth; ++d) {
        if (level > kMaxBuses / t.branching) throw SpecError("tree too large");
        level *= t.branching;
        total += level;
        if (total > kMaxBuses) throw SpecError("tree too large");
    }
    return total;
}

std::size_t get_size(const ordered_json& obj, const char* name, std::size_t fallback) {
    if (!obj.contains(name)) return fallback;
    const auto& v = obj.at(name);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
        throw SpecError(std::string("'") + name + "' must be a non-negative integer");
    }
    return v.get<std::size_t>();
}

std::optional<double> get_voltage(const ordered_json& obj) {
    if (!obj.contains("voltage_kv")) return std::nullopt;
    const auto& v = obj.at("voltage_kv");
    if (!v.is_number() || v.get<double>() <= 0.0) throw SpecError("'voltage_kv' must be a positive number");
    return v.get<double>();
}

void check_keys(const ordered_json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) throw SpecError(where + " must be an object");
    for (const auto& [key, value] : obj.items()) {
        if (!allowed.count(key)) throw SpecError("unknown key '" + key + "' in " + where);
    }
}

const ordered_json& array_of(const ordered_json& doc, const char* name) {
    static const ordered_json empty = ordered_json::array();
    if (!doc.contains(name)) return empty;
    if (!doc.at(name).is_array()) throw SpecError(std::string("'") + name + "' must be an array");
    return doc.at(name);
}

void validate(const SyntheticSpec& spec) {
    if (spec.backbone < 6 || spec.backbone % 2 != 0) throw SpecError("backbone must be an even number of at least 6 buses");
    auto attach_ok = [&](std::size_t a, const char* what) {
        if (a >= spec.backbone) throw SpecError(std::string(what) + " attach index out of range");
    };
    for (const auto& t : spec.trees) {
        attach_ok(t.attach, "tree");
        if (t.depth < 1 || t.branching < 1) throw SpecError("tree depth and branching must be at least 1");
        tree_size(t);
    }
    for (const auto& s : spec.strings) {
        attach_ok(s.attach, "string");
        if (s.length < 3) throw SpecError("string length must be at least 3 including endpoints");
    }
    for (const auto& m : spec.meshes) {
        attach_ok(m.attach, "mesh");
        if (m.size < 2) throw SpecError("mesh size must be at least 2");
    }
    for (const auto& l : spec.lattices) {
        attach_ok(l.attach, "lattice");
        if (l.rows < 2 || l.cols < 2) throw SpecError("lattice needs at least 2 rows and 2 columns");
        if (l.rows * l.cols > kMaxBuses) throw SpecError("lattice too large");
    }
    auto check_tier = [](double v) {
        if (!(v > 0.0)) throw SpecError("voltage tiers must be positive");
    };
    for (double v : {spec.tiers.backbone, spec.tiers.tree, spec.tiers.string, spec.tiers.mesh, spec.tiers.pocket,
                     spec.tiers.lattice}) {
        check_tier(v);
    }
}

bool mobius_adjacent(std::size_t r, std::size_t i, std::size_t j) {
    const std::size_t d = i > j ? i - j : j - i;
    return d == 1 || d == r - 1 || d == r / 2;
}

// Three pairwise non-adjacent backbone buses per pocket.
std::vector<std::array<std::size_t, 3>> pocket_ties(const SyntheticSpec& spec) {
    std::vector<std::array<std::size_t, 3>> out;
    const std::size_t r = spec.backbone;
    for (std::size_t p = 0; p < spec.pockets.size(); ++p) {
        std::vector<std::size_t> chosen;
        for (std::size_t k = 0; k < r && chosen.size() < 3; ++k) {
            const std::size_t cand = (3 * p + k) % r;
            bool ok = true;
            for (auto c : chosen) ok = ok && c != cand && !mobius_adjacent(r, c, cand);
            if (ok) chosen.push_back(cand);
        }
        if (chosen.size() < 3) throw SpecError("backbone too small to tie a pocket to three non-adjacent buses");
        out.push_back({chosen[0], chosen[1], chosen[2]});
    }
    return out;
}

}  // namespace

SyntheticSpec parse_synthetic_spec(const ordered_json& doc) {
    check_keys(doc, {"backbone", "trees", "strings", "meshes", "pockets", "lattices", "tiers", "seed"}, "spec");
    SyntheticSpec spec;
    spec.backbone = get_size(doc, "backbone", spec.backbone);
    for (const auto& t : array_of(doc, "trees")) {
        check_keys(t, {"attach", "depth", "branching", "voltage_kv"}, "tree");
        spec.trees.push_back({get_size(t, "attach", 0), get_size(t, "depth", 1), get_size(t, "branching", 1), get_voltage(t)});
    }
    for (const auto& s : array_of(doc, "strings")) {
        check_keys(s, {"attach", "length", "voltage_kv"}, "string");
        spec.strings.push_back({get_size(s, "attach", 0), get_size(s, "length", 3), get_voltage(s)});
    }
    for (const auto& m : array_of(doc, "meshes")) {
        check_keys(m, {"attach", "size", "voltage_kv"}, "mesh");
        spec.meshes.push_back({get_size(m, "attach", 0), get_size(m, "size", 2), get_voltage(m)});
    }
    if (doc.contains("pockets") && doc.at("pockets").is_number()) {
        spec.pockets.resize(get_size(doc, "pockets", 0));
    } else {
        for (const auto& p : array_of(doc, "pockets")) {
            check_keys(p, {"voltage_kv"}, "pocket");
            spec.pockets.push_back({get_voltage(p)});
        }
    }
    for (const auto& l : array_of(doc, "lattices")) {
        check_keys(l, {"attach", "rows", "cols", "voltage_kv"}, "lattice");
        spec.lattices.push_back({get_size(l, "attach", 0), get_size(l, "rows", 3), get_size(l, "cols", 3), get_voltage(l)});
    }
    if (doc.contains("tiers")) {
        const auto& t = doc.at("tiers");
        check_keys(t, {"backbone", "tree", "string", "mesh", "pocket", "lattice"}, "tiers");
        auto tier = [&](const char* name, double& slot) {
            if (!t.contains(name)) return;
            if (!t.at(name).is_number()) throw SpecError(std::string("tier '") + name + "' must be a number");
            slot = t.at(name).get<double>();
        };
        tier("backbone", spec.tiers.backbone);
        tier("tree", spec.tiers.tree);
        tier("string", spec.tiers.string);
        tier("mesh", spec.tiers.mesh);
        tier("pocket", spec.tiers.pocket);
        tier("lattice", spec.tiers.lattice);
    }
    if (doc.contains("seed")) {
        if (!doc.at("seed").is_number_unsigned()) throw SpecError("'seed' must be a non-negative integer");
        spec.seed = doc.at("seed").get<std::uint64_t>();
    }
    validate(spec);
    return spec;
}

ordered_json to_json(const SyntheticSpec& spec) {
    ordered_json doc;
    doc["backbone"] = spec.backbone;
    auto voltage = [](ordered_json& j, const std::optional<double>& v) {
        if (v) j["voltage_kv"] = *v;
    };
    doc["trees"] = ordered_json::array();
    for (const auto& t : spec.trees) {
        ordered_json j{{"attach", t.attach}, {"depth", t.depth}, {"branching", t.branching}};
        voltage(j, t.voltage_kv);
        doc["trees"].push_back(j);
    }
    doc["strings"] = ordered_json::array();
    for (const auto& s : spec.strings) {
        ordered_json j{{"attach", s.attach}, {"length", s.length}};
        voltage(j, s.voltage_kv);
        doc["strings"].push_back(j);
    }
    doc["meshes"] = ordered_json::array();
    for (const auto& m : spec.meshes) {
        ordered_json j{{"attach", m.attach}, {"size", m.size}};
        voltage(j, m.voltage_kv);
        doc["meshes"].push_back(j);
    }
    doc["pockets"] = ordered_json::array();
    for (const auto& p : spec.pockets) {
        ordered_json j = ordered_json::object();
        voltage(j, p.voltage_kv);
        doc["pockets"].push_back(j);
    }
    doc["lattices"] = ordered_json::array();
    for (const auto& l : spec.lattices) {
        ordered_json j{{"attach", l.attach}, {"rows", l.rows}, {"cols", l.cols}};
        voltage(j, l.voltage_kv);
        doc["lattices"].push_back(j);
    }
    doc["tiers"] = {{"backbone", spec.tiers.backbone}, {"tree", spec.tiers.tree},     {"string", spec.tiers.string},
                    {"mesh", spec.tiers.mesh},         {"pocket", spec.tiers.pocket}, {"lattice", spec.tiers.lattice}};
    if (spec.seed) doc["seed"] = *spec.seed;
    return doc;
}

Network generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
    validate(spec);
    const auto ties = pocket_ties(spec);
    Rng rng(seed);
    Network net;
    std::size_t counter = 0;
    auto new_bus = [&](double kv, Complex shunt = {}) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "b%06zu", counter++);
        Bus bus{BusId(buf), kv, shunt, {}};
        net.add_bus(bus);
        return bus.id;
    };
    auto connect = [&](const BusId& a, const BusId& b) { net.add_line(a, b, Complex(0.0, -rng.uniform(0.5, 5.0))); };

    const std::size_t r = spec.backbone;
    std::vector<BusId> backbone;
    for (std::size_t i = 0; i < r; ++i) backbone.push_back(new_bus(spec.tiers.backbone, Complex(0.0, -rng.uniform(0.01, 0.1))));
    for (std::size_t i = 0; i < r; ++i) connect(backbone[i], backbone[(i + 1) % r]);
    for (std::size_t i = 0; i < r / 2; ++i) connect(backbone[i], backbone[i + r / 2]);

    for (const auto& t : spec.trees) {
        const double kv = t.voltage_kv.value_or(spec.tiers.tree);
        std::vector<BusId> level{backbone[t.attach]};
        for (std::size_t d = 0; d < t.depth; ++d) {
            std::vector<BusId> next;
            for (const auto& parent : level) {
                for (std::size_t k = 0; k < t.branching; ++k) {
                    auto child = new_bus(kv);
                    connect(parent, child);
                    next.push_back(child);
                }
            }
            level = std::move(next);
        }
    }
    for (const auto& s : spec.strings) {
        const double kv = s.voltage_kv.value_or(spec.tiers.string);
        BusId prev = backbone[s.attach];
        for (std::size_t k = 0; k + 2 < s.length; ++k) {
            auto cur = new_bus(kv);
            connect(prev, cur);
            prev = cur;
        }
        connect(prev, backbone[(s.attach + 1) % r]);
    }
    for (const auto& m : spec.meshes) {
        const double kv = m.voltage_kv.value_or(spec.tiers.mesh);
        std::vector<BusId> strip{backbone[m.attach]};
        for (std::size_t k = 0; k < m.size; ++k) {
            auto cur = new_bus(kv);
            connect(strip.back(), cur);
            if (strip.size() >= 2) connect(strip[strip.size() - 2], cur);
            strip.push_back(cur);
        }
    }
    for (std::size_t p = 0; p < spec.pockets.size(); ++p) {
        const double kv = spec.pockets[p].voltage_kv.value_or(spec.tiers.pocket);
        std::array<BusId, 3> corner{new_bus(kv), new_bus(kv), new_bus(kv)};
        connect(corner[0], corner[1]);
        connect(corner[1], corner[2]);
        connect(corner[0], corner[2]);
        for (std::size_t k = 0; k < 3; ++k) connect(corner[k], backbone[ties[p][k]]);
    }
    for (const auto& l : spec.lattices) {
        const double kv = l.voltage_kv.value_or(spec.tiers.lattice);
        std::vector<BusId> grid;
        for (std::size_t i = 0; i < l.rows * l.cols; ++i) grid.push_back(new_bus(kv));
        auto at = [&](std::size_t row, std::size_t col) { return grid[row * l.cols + col]; };
        for (std::size_t row = 0; row < l.rows; ++row) {
            for (std::size_t col = 0; col < l.cols; ++col) {
                if (col + 1 < l.cols) connect(at(row, col), at(row, col + 1));
                if (row + 1 < l.rows) connect(at(row, col), at(row + 1, col));
                if (row + 1 < l.rows && col + 1 < l.cols) connect(at(row, col), at(row + 1, col + 1));
            }
        }
        connect(at(0, 0), backbone[l.attach]);
    }
    return net;
}

std::optional<PredictedCounts> predict_counts(const SyntheticSpec& spec, const Thresholds& thresholds) {
    validate(spec);
    if (!spec.lattices.empty()) return std::nullopt;
    pocket_ties(spec);
    const std::size_t r = spec.backbone;
    std::size_t nodes = r + 3 * spec.pockets.size();
    std::size_t edges = r + r / 2 + 6 * spec.pockets.size();
    std::size_t d1_nodes = 0;
    for (const auto& t : spec.trees) d1_nodes += tree_size(t);
    std::size_t d2_nodes = 0;
    std::size_t d2_edges = 0;
    for (const auto& s : spec.strings) {
        d2_nodes += s.length - 2;
        d2_edges += s.length - 1;
    }
    for (const auto& m : spec.meshes) {
        d2_nodes += m.size;
        d2_edges += 2 * m.size - 1;
    }
    std::size_t collapsing = 0;
    if (thresholds.dthr >= 4) {
        for (const auto& p : spec.pockets) {
            const double kv = p.voltage_kv.value_or(spec.tiers.pocket);
            if (!thresholds.vthr || kv <= *thresholds.vthr) ++collapsing;
        }
    }
    nodes += d1_nodes + d2_nodes;
    edges += d1_nodes + d2_edges;

    PredictedCounts out;
    out.stages.push_back({"input", nodes, edges});
    nodes -= d1_nodes;
    edges -= d1_nodes;
    out.stages.push_back({"d1", nodes, edges});
    nodes -= d2_nodes;
    edges -= d2_edges;
    out.stages.push_back({"d2", nodes, edges});
    out.stages.push_back({"tri", nodes - 2 * collapsing, edges - 3 * collapsing});
    return out;
}

}  // namespace gridreduce
