#include "gridreduce/grid_core.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>

#include "gridreduce/errors.hpp"
#include "gridreduce/kron.hpp"

namespace gridreduce {

namespace {

constexpr double kImagTol = 1e-9;

std::string line_name(const BusId& a, const BusId& b) { return a.str() + "-" + b.str(); }

bool shunt_ok(Complex y) {
    return std::abs(y.real()) <= kImagTol * std::max(1.0, std::abs(y.imag())) && y.imag() <= 0.0;
}

bool is_h1_kind(ViolationKind kind) {
    return kind == ViolationKind::NonInductiveLine || kind == ViolationKind::NonInductiveShunt ||
           kind == ViolationKind::NoNonzeroShunt || kind == ViolationKind::Disconnected;
}

}  // namespace

const char* to_string(ViolationKind kind) {
    switch (kind) {
        case ViolationKind::NonInductiveLine: return "non-inductive line";
        case ViolationKind::NonInductiveShunt: return "non-inductive shunt";
        case ViolationKind::NoNonzeroShunt: return "no non-zero diagonal";
        case ViolationKind::Disconnected: return "disconnected";
        case ViolationKind::VoltageOutOfRange: return "voltage out of range";
        case ViolationKind::NetPowerImbalance: return "net-power imbalance";
        case ViolationKind::SingularLaplacian: return "singular laplacian";
    }
    return "unknown";
}

bool ValidationReport::inductive_ok() const {
    return std::none_of(violations.begin(), violations.end(),
                        [](const Violation& v) { return is_h1_kind(v.kind); });
}

bool is_inductive(Complex y) {
    return y.imag() < 0.0 && std::abs(y.real()) <= kImagTol * std::max(1.0, std::abs(y.imag()));
}

Network preprocess_degree_zero(const RawNetwork& raw) {
    std::map<BusId, Bus> buses;
    std::set<BusId> known;
    for (const auto& bus : raw.buses) {
        if (!known.insert(bus.id).second) throw ValidationError("duplicate bus id " + bus.id.str());
        if (bus.nominal_voltage_kv > 0.0) buses.emplace(bus.id, bus);
    }

    std::map<EdgeKey, LineData> merged;
    for (const auto& line : raw.lines) {
        for (const auto* id : {&line.a, &line.b}) {
            if (!known.count(*id)) throw NotFoundError("line references unknown bus " + id->str());
        }
        if (!buses.count(line.a) || !buses.count(line.b)) continue;
        if (line.a == line.b) {
            buses[line.a].shunt += line.admittance;
            continue;
        }
        auto [it, fresh] = merged.emplace(make_edge(line.a, line.b), LineData{line.admittance, line.meta});
        if (!fresh) {
            it->second.admittance += line.admittance;
            it->second.meta = it->second.meta && line.meta;
        }
    }

    Network all;
    for (const auto& [id, bus] : buses) all.add_bus(bus);
    for (const auto& [key, data] : merged) all.add_line(key.a, key.b, data.admittance, data.meta);

    auto components = connected_components(all);
    if (components.empty()) throw DomainError("no usable component");
    // Components come out ordered by their smallest id, so the first maximum wins ties.
    const auto best = std::max_element(components.begin(), components.end(),
                                       [](const auto& x, const auto& y) { return x.size() < y.size(); });
    std::set<BusId> keep(best->begin(), best->end());

    Network out;
    for (const auto& id : keep) out.add_bus(all.bus(id));
    for (const auto& line : all.lines()) {
        if (keep.count(line.a)) out.add_line(line.a, line.b, line.admittance, line.meta);
    }
    return out;
}

RawNetwork to_raw(const Network& net) {
    RawNetwork raw;
    for (const auto& [id, bus] : net.buses()) raw.buses.push_back(bus);
    raw.lines = net.lines();
    return raw;
}

ValidationReport validate(const Network& net, ValidationMode mode) {
    ValidationReport report;
    auto add = [&](ViolationKind kind, std::string subject, std::string message) {
        report.violations.push_back({kind, std::move(subject), std::move(message)});
    };

    bool any_shunt = false;
    for (const auto& [id, bus] : net.buses()) {
        if (!(bus.nominal_voltage_kv > 0.0 && bus.nominal_voltage_kv < 1000.0)) {
            add(ViolationKind::VoltageOutOfRange, id.str(),
                "bus " + id.str() + " nominal voltage " + std::to_string(bus.nominal_voltage_kv) + " kV outside (0, 1000)");
        }
        if (bus.shunt != Complex{}) {
            any_shunt = true;
            if (!shunt_ok(bus.shunt)) {
                add(ViolationKind::NonInductiveShunt, id.str(), "bus " + id.str() + " shunt is not inductive");
            }
        }
    }
    for (const auto& line : net.lines()) {
        if (line.meta) continue;
        if (!is_inductive(line.admittance)) {
            add(ViolationKind::NonInductiveLine, line_name(line.a, line.b),
                "line " + line_name(line.a, line.b) + " admittance is not pure-imaginary and negative");
        }
    }
    if (!any_shunt) add(ViolationKind::NoNonzeroShunt, "", "no non-zero diagonal: every shunt admittance is zero");
    if (net.bus_count() > 0 && !is_connected(net)) add(ViolationKind::Disconnected, "", "network is not connected");

    const bool any_current = std::any_of(net.buses().begin(), net.buses().end(),
                                         [](const auto& kv) { return kv.second.current != Complex{}; });
    if (any_current && report.inductive_ok()) {
        try {
            auto q = build_loopy_laplacian(net);
            auto c = current_vector(net, q.index());
            auto s = power_injections(solve_voltages(q, c), c);
            const double total = std::abs(s.values.sum());
            const double scale = s.values.cwiseAbs().sum();
            if (total > 1e-9 * scale) {
                add(ViolationKind::NetPowerImbalance, "",
                    "net-power imbalance |sum S| = " + std::to_string(total) + " exceeds 1e-9 * sum |S|");
            }
        } catch (const NumericalError& e) {
            add(ViolationKind::SingularLaplacian, "", e.what());
        }
    }

    if (mode == ValidationMode::Strict && !report.ok()) {
        throw ValidationError(report.violations.front().message);
    }
    return report;
}

void require_inductive(const Network& net) {
    auto report = validate(net, ValidationMode::Lenient);
    for (const auto& v : report.violations) {
        if (is_h1_kind(v.kind)) throw ValidationError(v.message);
    }
}

DegreeMap degree_map(const Network& net) {
    DegreeMap out;
    for (const auto& [id, bus] : net.buses()) out.emplace(id, net.degree(id));
    return out;
}

double graph_density(const Network& net) {
    const double n = static_cast<double>(net.bus_count());
    if (net.bus_count() < 2) throw DomainError("graph density needs at least two buses");
    return 2.0 * static_cast<double>(net.line_count()) / (n * (n - 1.0));
}

std::vector<std::vector<BusId>> connected_components(const Network& net) {
    std::set<BusId> seen;
    std::vector<std::vector<BusId>> out;
    for (const auto& [start, bus] : net.buses()) {
        if (seen.count(start)) continue;
        std::vector<BusId> component;
        std::queue<BusId> queue;
        queue.push(start);
        seen.insert(start);
        while (!queue.empty()) {
            BusId cur = queue.front();
            queue.pop();
            component.push_back(cur);
            for (const auto& [next, data] : net.neighbors(cur)) {
                if (seen.insert(next).second) queue.push(next);
            }
        }
        std::sort(component.begin(), component.end());
        out.push_back(std::move(component));
    }
    return out;
}

bool is_connected(const Network& net) { return connected_components(net).size() <= 1; }

BinaryMatrix::BinaryMatrix(std::vector<BusId> index)
    : index_(std::move(index)), data_(index_.size() * index_.size(), 0) {}

BinaryMatrix topological_connectivity(const Network& net) { return topological_connectivity(net, net.bus_ids()); }

BinaryMatrix topological_connectivity(const Network& net, const std::vector<BusId>& ordering) {
    if (ordering.size() != net.bus_count()) throw IndexError("ordering does not cover the network");
    std::map<BusId, std::size_t> pos;
    for (std::size_t i = 0; i < ordering.size(); ++i) {
        if (!net.has_bus(ordering[i]) || !pos.emplace(ordering[i], i).second) {
            throw IndexError("ordering is not a permutation of the buses: " + ordering[i].str());
        }
    }
    BinaryMatrix t(ordering);
    for (const auto& line : net.lines()) {
        t.set(pos[line.a], pos[line.b], 1);
        t.set(pos[line.b], pos[line.a], 1);
    }
    return t;
}

}  // namespace gridreduce
