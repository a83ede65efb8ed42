#pragma once

#include <complex>
#include <cstddef>
#include <map>
#include <vector>

#include "gridreduce/bus_id.hpp"

namespace gridreduce {

using Complex = std::complex<double>;

struct Bus {
    BusId id;
    double nominal_voltage_kv = 0.0;
    Complex shunt{};    // self-loop admittance A_ii
    Complex current{};  // injected current C_i

    friend bool operator==(const Bus&, const Bus&) = default;
};

// Unordered pair stored with a < b.
struct EdgeKey {
    BusId a;
    BusId b;

    friend bool operator==(const EdgeKey&, const EdgeKey&) = default;
    friend auto operator<=>(const EdgeKey&, const EdgeKey&) = default;
};

EdgeKey make_edge(const BusId& x, const BusId& y);

struct Line {
    BusId a;
    BusId b;
    Complex admittance{};
    bool meta = false;  // created by a reduction, not present in the source grid

    EdgeKey key() const { return make_edge(a, b); }
    friend bool operator==(const Line&, const Line&) = default;
};

// Unvalidated input: may hold parallel lines, self lines, several components.
struct RawNetwork {
    std::vector<Bus> buses;
    std::vector<Line> lines;
};

struct LineData {
    Complex admittance{};
    bool meta = false;

    friend bool operator==(const LineData&, const LineData&) = default;
};

class Network {
public:
    using Adjacency = std::map<BusId, LineData>;

    void add_bus(const Bus& bus);
    void remove_bus(const BusId& id);
    bool has_bus(const BusId& id) const { return buses_.count(id) != 0; }
    const Bus& bus(const BusId& id) const;
    Bus& bus(const BusId& id);

    void add_line(const BusId& x, const BusId& y, Complex admittance, bool meta = false);
    void remove_line(const BusId& x, const BusId& y);
    bool has_line(const BusId& x, const BusId& y) const;
    const LineData& line(const BusId& x, const BusId& y) const;

    std::size_t degree(const BusId& id) const { return neighbors(id).size(); }
    const Adjacency& neighbors(const BusId& id) const;

    std::size_t bus_count() const noexcept { return buses_.size(); }
    std::size_t line_count() const noexcept { return line_count_; }
    const std::map<BusId, Bus>& buses() const noexcept { return buses_; }
    std::vector<BusId> bus_ids() const;
    // Canonical order: by (min id, max id).
    std::vector<Line> lines() const;

    friend bool operator==(const Network& x, const Network& y) {
        return x.buses_ == y.buses_ && x.adjacency_ == y.adjacency_;
    }

private:
    std::map<BusId, Bus> buses_;
    std::map<BusId, Adjacency> adjacency_;
    std::size_t line_count_ = 0;
};

}  // namespace gridreduce
