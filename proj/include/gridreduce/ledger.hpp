#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "gridreduce/network.hpp"

namespace gridreduce {

enum class FieldKind { Tree, Edge, Triangle };
enum class Stage { D1, D2, Tri };

const char* to_string(Stage stage);
Stage stage_from_string(const std::string& text);

// t_<id>, e_<lo>_<hi>, tri_<id>
struct FieldKey {
    FieldKind kind = FieldKind::Tree;
    BusId first;
    BusId second;  // Edge only

    static FieldKey tree(BusId root) { return {FieldKind::Tree, std::move(root), {}}; }
    static FieldKey edge(const BusId& x, const BusId& y);
    static FieldKey triangle(BusId base) { return {FieldKind::Triangle, std::move(base), {}}; }

    std::string str() const;
    std::vector<BusId> anchors() const;

    friend bool operator==(const FieldKey&, const FieldKey&) = default;
    friend auto operator<=>(const FieldKey&, const FieldKey&) = default;
};

struct LedgerItem;

// Tree branch [leaf, ..., root] or edge triple [b2, b, b3].
struct PathItem {
    std::vector<BusId> nodes;
    friend bool operator==(const PathItem&, const PathItem&) = default;
};

struct NestedItem {
    FieldKey key;
    std::vector<LedgerItem> items;
    friend bool operator==(const NestedItem&, const NestedItem&);
};

// {b_j : lines(b_j)} of a triangle collapse.
struct AbsorbedItem {
    BusId node;
    std::vector<EdgeKey> lines;
    friend bool operator==(const AbsorbedItem&, const AbsorbedItem&) = default;
};

struct LedgerItem {
    std::variant<PathItem, NestedItem, AbsorbedItem> body;
    Stage stage = Stage::D1;
    std::uint64_t step = 0;

    friend bool operator==(const LedgerItem&, const LedgerItem&) = default;
};

inline bool operator==(const NestedItem& x, const NestedItem& y) { return x.key == y.key && x.items == y.items; }

using FieldItems = std::vector<LedgerItem>;

struct Thresholds {
    std::optional<double> vthr;  // kV; empty means no voltage filter
    int dthr = 6;

    friend bool operator==(const Thresholds&, const Thresholds&) = default;
};

struct StageCount {
    std::string stage;
    std::size_t nodes = 0;
    std::size_t edges = 0;
    friend bool operator==(const StageCount&, const StageCount&) = default;
};

// Source attributes of every bus and line not visible in the reduced network.
struct Catalog {
    std::map<BusId, Bus> buses;
    std::map<EdgeKey, Complex> lines;
    friend bool operator==(const Catalog&, const Catalog&) = default;
};

struct ReductionLedger {
    std::uint64_t seed = 0;
    std::optional<Thresholds> thresholds;
    std::vector<StageCount> stage_counts;
    std::map<FieldKey, FieldItems> entries;
    Catalog catalog;
    std::uint64_t next_step = 0;

    bool has(const FieldKey& key) const { return entries.count(key) != 0; }
    std::uint64_t take_step() { return next_step++; }
    std::optional<FieldKey> find_key(const std::string& text) const;

    friend bool operator==(const ReductionLedger&, const ReductionLedger&) = default;
};

// Where each hidden bus sits in the ledger.
struct HiddenIndex {
    std::set<BusId> eliminated;                // removed by degree-one/two steps
    std::map<BusId, BusId> absorbed;           // absorbed bus -> triangle base
    std::map<BusId, FieldKey> field_of;        // top-level field holding the bus

    bool hidden(const BusId& id) const { return eliminated.count(id) || absorbed.count(id); }
};

HiddenIndex index_hidden(const ReductionLedger& ledger);

// Visits every bus referenced by the items of a field, recursively.
std::vector<BusId> referenced_buses(const FieldKey& key, const FieldItems& items);

// Rebuilds the source network from a reduced network and its catalog.
Network reconstruct_original(const Network& reduced, const ReductionLedger& ledger);

// Reduced network implied by the ledger on top of the source network.
Network materialize(const Network& original, const ReductionLedger& ledger);

// Recomputes the catalog as source minus visible.
void refresh_catalog(ReductionLedger& ledger, const Network& original, const Network& visible);

std::string serialize(const ReductionLedger& ledger);
ReductionLedger deserialize(const std::string& text, const std::string& source = "ledger");

}  // namespace gridreduce
