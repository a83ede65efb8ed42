#include "gridreduce/network.hpp"

#include "gridreduce/errors.hpp"

namespace gridreduce {

EdgeKey make_edge(const BusId& x, const BusId& y) {
    return x < y ? EdgeKey{x, y} : EdgeKey{y, x};
}

void Network::add_bus(const Bus& bus) {
    if (bus.id.empty()) throw ValidationError("empty bus id");
    if (!buses_.emplace(bus.id, bus).second) throw ValidationError("duplicate bus id " + bus.id.str());
    adjacency_[bus.id];
}

void Network::remove_bus(const BusId& id) {
    auto it = adjacency_.find(id);
    if (it == adjacency_.end()) throw NotFoundError("unknown bus " + id.str());
    for (const auto& [other, data] : it->second) {
        adjacency_[other].erase(id);
        --line_count_;
    }
    adjacency_.erase(it);
    buses_.erase(id);
}

const Bus& Network::bus(const BusId& id) const {
    auto it = buses_.find(id);
    if (it == buses_.end()) throw NotFoundError("unknown bus " + id.str());
    return it->second;
}

Bus& Network::bus(const BusId& id) {
    auto it = buses_.find(id);
    if (it == buses_.end()) throw NotFoundError("unknown bus " + id.str());
    return it->second;
}

void Network::add_line(const BusId& x, const BusId& y, Complex admittance, bool meta) {
    if (x == y) throw ValidationError("self line at " + x.str());
    if (!has_bus(x)) throw NotFoundError("line references unknown bus " + x.str());
    if (!has_bus(y)) throw NotFoundError("line references unknown bus " + y.str());
    auto& ax = adjacency_[x];
    if (ax.count(y)) throw ValidationError("duplicate line " + x.str() + "-" + y.str());
    ax.emplace(y, LineData{admittance, meta});
    adjacency_[y].emplace(x, LineData{admittance, meta});
    ++line_count_;
}

void Network::remove_line(const BusId& x, const BusId& y) {
    auto it = adjacency_.find(x);
    if (it == adjacency_.end() || !it->second.erase(y)) {
        throw NotFoundError("unknown line " + x.str() + "-" + y.str());
    }
    adjacency_[y].erase(x);
    --line_count_;
}

bool Network::has_line(const BusId& x, const BusId& y) const {
    auto it = adjacency_.find(x);
    return it != adjacency_.end() && it->second.count(y) != 0;
}

const LineData& Network::line(const BusId& x, const BusId& y) const {
    auto it = adjacency_.find(x);
    if (it != adjacency_.end()) {
        auto jt = it->second.find(y);
        if (jt != it->second.end()) return jt->second;
    }
    throw NotFoundError("unknown line " + x.str() + "-" + y.str());
}

const Network::Adjacency& Network::neighbors(const BusId& id) const {
    auto it = adjacency_.find(id);
    if (it == adjacency_.end()) throw NotFoundError("unknown bus " + id.str());
    return it->second;
}

std::vector<BusId> Network::bus_ids() const {
    std::vector<BusId> ids;
    ids.reserve(buses_.size());
    for (const auto& [id, bus] : buses_) ids.push_back(id);
    return ids;
}

std::vector<Line> Network::lines() const {
    std::vector<Line> out;
    out.reserve(line_count_);
    for (const auto& [a, adj] : adjacency_) {
        for (auto it = adj.upper_bound(a); it != adj.end(); ++it) {
            out.push_back(Line{a, it->first, it->second.admittance, it->second.meta});
        }
    }
    return out;
}

}  // namespace gridreduce
