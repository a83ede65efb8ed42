#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gridreduce/network.hpp"

namespace gridreduce {

using DegreeMap = std::map<BusId, std::size_t>;

enum class ValidationMode { Strict, Lenient };

enum class ViolationKind {
    NonInductiveLine,
    NonInductiveShunt,
    NoNonzeroShunt,
    Disconnected,
    VoltageOutOfRange,
    NetPowerImbalance,
    SingularLaplacian,
};

const char* to_string(ViolationKind kind);

struct Violation {
    ViolationKind kind;
    std::string subject;  // offending bus or line, empty for global violations
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;

    bool ok() const { return violations.empty(); }
    // Only the Hypothesis 1 part: inductive, connected, some shunt.
    bool inductive_ok() const;
};

// Tolerance for "purely imaginary": |Re| <= 1e-9 * max(1, |Im|).
bool is_inductive(Complex y);

Network preprocess_degree_zero(const RawNetwork& raw);
RawNetwork to_raw(const Network& net);

ValidationReport validate(const Network& net, ValidationMode mode);
// Throws ValidationError naming the first Hypothesis 1 violation.
void require_inductive(const Network& net);

DegreeMap degree_map(const Network& net);
double graph_density(const Network& net);

std::vector<std::vector<BusId>> connected_components(const Network& net);
bool is_connected(const Network& net);

class BinaryMatrix {
public:
    explicit BinaryMatrix(std::vector<BusId> index);
    std::size_t size() const noexcept { return index_.size(); }
    const std::vector<BusId>& index() const noexcept { return index_; }
    std::uint8_t operator()(std::size_t i, std::size_t j) const { return data_[i * index_.size() + j]; }
    void set(std::size_t i, std::size_t j, std::uint8_t v) { data_[i * index_.size() + j] = v; }

private:
    std::vector<BusId> index_;
    std::vector<std::uint8_t> data_;
};

BinaryMatrix topological_connectivity(const Network& net);
BinaryMatrix topological_connectivity(const Network& net, const std::vector<BusId>& ordering);

}  // namespace gridreduce
