#pragma once

#include <array>
#include <map>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "gridreduce/network.hpp"

namespace gridreduce {

using SparseMatrixC = Eigen::SparseMatrix<Complex>;

// Nodal admittance matrix Q = D - A + diag(A_ii) with row/column labels.
class LoopyLaplacian {
public:
    LoopyLaplacian() = default;
    LoopyLaplacian(SparseMatrixC q, std::vector<BusId> index);

    const SparseMatrixC& matrix() const noexcept { return q_; }
    const std::vector<BusId>& index() const noexcept { return index_; }
    std::size_t size() const noexcept { return index_.size(); }
    std::size_t position(const BusId& id) const;
    bool contains(const BusId& id) const { return position_.count(id) != 0; }
    Complex at(const BusId& i, const BusId& j) const;
    Eigen::MatrixXcd dense() const { return Eigen::MatrixXcd(q_); }

private:
    SparseMatrixC q_;
    std::vector<BusId> index_;
    std::map<BusId, std::size_t> position_;
};

struct CurrentTag {};
struct VoltageTag {};
struct PowerTag {};

template <class Tag>
struct PhasorVector {
    std::vector<BusId> index;
    Eigen::VectorXcd values;

    Complex sum() const { return values.sum(); }
};

using CurrentVector = PhasorVector<CurrentTag>;
using VoltageVector = PhasorVector<VoltageTag>;
using PowerVector = PhasorVector<PowerTag>;

LoopyLaplacian build_loopy_laplacian(const Network& net);
LoopyLaplacian build_loopy_laplacian(const Network& net, const std::vector<BusId>& ordering);

struct AdjacencyData {
    std::vector<BusId> index;
    std::vector<Complex> shunts;
    std::vector<Line> lines;
};

AdjacencyData adjacency_from_laplacian(const LoopyLaplacian& q);

// Network carrying the admittances of q; voltages taken from reference.
Network network_from_laplacian(const LoopyLaplacian& q, const CurrentVector& c, const Network& reference);

struct KronResult {
    LoopyLaplacian reduced;
    SparseMatrixC accompanying;  // |alpha| x |interior|
    std::vector<BusId> alpha;
    std::vector<BusId> interior;
    std::vector<BusId> source_index;
};

KronResult kron_reduce(const LoopyLaplacian& q, const std::vector<BusId>& alpha);

struct SparseTriangle {
    BusId root;
    BusId first;
    BusId second;
};

LoopyLaplacian closed_form_eliminate(const LoopyLaplacian& q, const BusId& node);
LoopyLaplacian closed_form_eliminate(const LoopyLaplacian& q, const SparseTriangle& triangle);

CurrentVector current_vector(const Network& net, const std::vector<BusId>& index);
CurrentVector reduced_currents(const KronResult& kr, const CurrentVector& c);
VoltageVector solve_voltages(const LoopyLaplacian& q, const CurrentVector& c);
PowerVector power_injections(const VoltageVector& v, const CurrentVector& c);

struct TriangleAggregate {
    LoopyLaplacian q;
    CurrentVector c;
};

// Linear aggregation of the triangle into triple[0].
TriangleAggregate aggregate_triangle_laplacian(const LoopyLaplacian& q, const CurrentVector& c,
                                               const std::array<BusId, 3>& triple);

}  // namespace gridreduce
