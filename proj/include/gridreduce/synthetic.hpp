#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "gridreduce/ledger.hpp"
#include "gridreduce/network.hpp"

namespace gridreduce {

struct TreeSpec {
    std::size_t attach = 0;
    std::size_t depth = 1;
    std::size_t branching = 1;
    std::optional<double> voltage_kv;
};

// Path of `length` buses including the two backbone endpoints attach and attach+1.
struct StringSpec {
    std::size_t attach = 0;
    std::size_t length = 3;
    std::optional<double> voltage_kv;
};

// Triangle strip hung off a single backbone bus.
struct MeshSpec {
    std::size_t attach = 0;
    std::size_t size = 2;
    std::optional<double> voltage_kv;
};

// Isolated triangle, each corner tied to a distinct backbone bus.
struct PocketSpec {
    std::optional<double> voltage_kv;
};

// Triangular lattice block tied to one backbone bus; its reduction depends on the seed.
struct LatticeSpec {
    std::size_t attach = 0;
    std::size_t rows = 3;
    std::size_t cols = 3;
    std::optional<double> voltage_kv;
};

struct VoltageTiers {
    double backbone = 345.0;
    double tree = 69.0;
    double string = 138.0;
    double mesh = 69.0;
    double pocket = 69.0;
    double lattice = 69.0;
};

struct SyntheticSpec {
    std::size_t backbone = 6;
    std::vector<TreeSpec> trees;
    std::vector<StringSpec> strings;
    std::vector<MeshSpec> meshes;
    std::vector<PocketSpec> pockets;
    std::vector<LatticeSpec> lattices;
    VoltageTiers tiers;
    std::optional<std::uint64_t> seed;
};

SyntheticSpec parse_synthetic_spec(const nlohmann::ordered_json& doc);
nlohmann::ordered_json to_json(const SyntheticSpec& spec);

Network generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

struct PredictedCounts {
    std::vector<StageCount> stages;  // input, d1, d2, tri
};

// Closed-form stage counts; empty when the spec holds a lattice block.
std::optional<PredictedCounts> predict_counts(const SyntheticSpec& spec, const Thresholds& thresholds);

}  // namespace gridreduce
