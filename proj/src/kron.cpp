#include "gridreduce/kron.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>

#include <Eigen/SparseLU>

#include "gridreduce/errors.hpp"

namespace gridreduce {

namespace {

using Triplet = Eigen::Triplet<Complex>;

constexpr std::size_t kDenseLimit = 64;
constexpr double kMinRcond = 1e-14;
constexpr double kResidualTol = 1e-9;
constexpr double kSymmetryTol = 1e-12;
constexpr double kShuntCancelTol = 1e-12;

double max_abs(const SparseMatrixC& m) {
    double out = 0.0;
    for (int k = 0; k < m.outerSize(); ++k) {
        for (SparseMatrixC::InnerIterator it(m, k); it; ++it) out = std::max(out, std::abs(it.value()));
    }
    return out;
}

std::vector<std::pair<std::size_t, Complex>> column_entries(const SparseMatrixC& m, std::size_t col) {
    std::vector<std::pair<std::size_t, Complex>> out;
    for (SparseMatrixC::InnerIterator it(m, static_cast<int>(col)); it; ++it) {
        if (it.value() != Complex{}) out.emplace_back(static_cast<std::size_t>(it.row()), it.value());
    }
    return out;
}

std::vector<std::size_t> off_diagonal_neighbors(const LoopyLaplacian& q, std::size_t i) {
    std::vector<std::size_t> out;
    for (const auto& [row, value] : column_entries(q.matrix(), i)) {
        if (row != i) out.push_back(row);
    }
    return out;
}

// Drops the given positions and adds symmetric updates to the remaining entries.
LoopyLaplacian remove_and_update(const LoopyLaplacian& q, const std::set<std::size_t>& removed,
                                 const std::vector<std::tuple<std::size_t, std::size_t, Complex>>& updates) {
    std::vector<long> remap(q.size(), -1);
    std::vector<BusId> index;
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (removed.count(i)) continue;
        remap[i] = static_cast<long>(index.size());
        index.push_back(q.index()[i]);
    }
    std::vector<Triplet> triplets;
    const auto& m = q.matrix();
    for (int k = 0; k < m.outerSize(); ++k) {
        for (SparseMatrixC::InnerIterator it(m, k); it; ++it) {
            long r = remap[static_cast<std::size_t>(it.row())];
            long c = remap[static_cast<std::size_t>(it.col())];
            if (r >= 0 && c >= 0) triplets.emplace_back(r, c, it.value());
        }
    }
    for (const auto& [i, j, delta] : updates) {
        triplets.emplace_back(remap[i], remap[j], delta);
        if (i != j) triplets.emplace_back(remap[j], remap[i], delta);
    }
    const auto n = static_cast<int>(index.size());
    SparseMatrixC out(n, n);
    out.setFromTriplets(triplets.begin(), triplets.end());
    out.makeCompressed();
    return LoopyLaplacian(std::move(out), std::move(index));
}

void require_aligned(const std::vector<BusId>& expected, const std::vector<BusId>& actual, const char* what) {
    if (expected != actual) throw IndexError(std::string(what) + " is not aligned with the matrix index");
}

}  // namespace

LoopyLaplacian::LoopyLaplacian(SparseMatrixC q, std::vector<BusId> index) : q_(std::move(q)), index_(std::move(index)) {
    if (q_.rows() != q_.cols() || static_cast<std::size_t>(q_.rows()) != index_.size()) {
        throw IndexError("laplacian shape does not match its index");
    }
    for (std::size_t i = 0; i < index_.size(); ++i) {
        if (!position_.emplace(index_[i], i).second) throw IndexError("duplicate bus in index: " + index_[i].str());
    }
}

std::size_t LoopyLaplacian::position(const BusId& id) const {
    auto it = position_.find(id);
    if (it == position_.end()) throw IndexError("bus " + id.str() + " is not in the laplacian index");
    return it->second;
}

Complex LoopyLaplacian::at(const BusId& i, const BusId& j) const {
    return q_.coeff(static_cast<int>(position(i)), static_cast<int>(position(j)));
}

LoopyLaplacian build_loopy_laplacian(const Network& net) { return build_loopy_laplacian(net, net.bus_ids()); }

LoopyLaplacian build_loopy_laplacian(const Network& net, const std::vector<BusId>& ordering) {
    if (ordering.size() != net.bus_count()) throw IndexError("ordering does not cover the network");
    std::map<BusId, int> pos;
    for (std::size_t i = 0; i < ordering.size(); ++i) {
        if (!net.has_bus(ordering[i]) || !pos.emplace(ordering[i], static_cast<int>(i)).second) {
            throw IndexError("ordering is not a permutation of the buses: " + ordering[i].str());
        }
    }
    std::vector<Triplet> triplets;
    for (const auto& [id, bus] : net.buses()) {
        if (bus.shunt != Complex{}) triplets.emplace_back(pos[id], pos[id], bus.shunt);
    }
    for (const auto& line : net.lines()) {
        const int a = pos[line.a];
        const int b = pos[line.b];
        triplets.emplace_back(a, b, -line.admittance);
        triplets.emplace_back(b, a, -line.admittance);
        triplets.emplace_back(a, a, line.admittance);
        triplets.emplace_back(b, b, line.admittance);
    }
    const auto n = static_cast<int>(ordering.size());
    SparseMatrixC q(n, n);
    q.setFromTriplets(triplets.begin(), triplets.end());
    q.makeCompressed();
    return LoopyLaplacian(std::move(q), ordering);
}

AdjacencyData adjacency_from_laplacian(const LoopyLaplacian& q) {
    const auto& m = q.matrix();
    const double tol = kSymmetryTol * std::max(1.0, max_abs(m));
    AdjacencyData out;
    out.index = q.index();
    out.shunts.assign(q.size(), Complex{});
    std::vector<double> row_abs(q.size(), 0.0);
    for (int k = 0; k < m.outerSize(); ++k) {
        for (SparseMatrixC::InnerIterator it(m, k); it; ++it) {
            const auto i = static_cast<std::size_t>(it.row());
            const auto j = static_cast<std::size_t>(it.col());
            if (std::abs(it.value() - m.coeff(it.col(), it.row())) > tol) {
                throw ValidationError("laplacian is not symmetric at " + q.index()[i].str() + "," + q.index()[j].str());
            }
            out.shunts[i] += it.value();
            row_abs[i] += std::abs(it.value());
            if (i < j && it.value() != Complex{}) out.lines.push_back(Line{q.index()[i], q.index()[j], -it.value(), false});
        }
    }
    // Row sums of buses without a shunt cancel to rounding noise.
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (std::abs(out.shunts[i]) <= kShuntCancelTol * row_abs[i]) out.shunts[i] = Complex{};
    }
    for (auto& line : out.lines) {
        if (line.b < line.a) std::swap(line.a, line.b);
    }
    std::sort(out.lines.begin(), out.lines.end(),
              [](const Line& x, const Line& y) { return x.key() < y.key(); });
    return out;
}

Network network_from_laplacian(const LoopyLaplacian& q, const CurrentVector& c, const Network& reference) {
    require_aligned(q.index(), c.index, "current vector");
    auto adj = adjacency_from_laplacian(q);
    Network out;
    for (std::size_t i = 0; i < adj.index.size(); ++i) {
        Bus bus;
        bus.id = adj.index[i];
        bus.nominal_voltage_kv = reference.has_bus(bus.id) ? reference.bus(bus.id).nominal_voltage_kv : 0.0;
        bus.shunt = adj.shunts[i];
        bus.current = c.values[static_cast<Eigen::Index>(i)];
        out.add_bus(bus);
    }
    for (const auto& line : adj.lines) out.add_line(line.a, line.b, line.admittance, false);
    return out;
}

KronResult kron_reduce(const LoopyLaplacian& q, const std::vector<BusId>& alpha) {
    const std::size_t n = q.size();
    std::vector<char> is_alpha(n, 0);
    for (const auto& id : alpha) {
        auto p = q.position(id);
        if (is_alpha[p]) throw IndexError("duplicate reference bus " + id.str());
        is_alpha[p] = 1;
    }
    if (alpha.size() <= 1 || alpha.size() >= n) {
        throw DomainError("kron reduction needs 1 < |alpha| < n, got |alpha| = " + std::to_string(alpha.size()) +
                          ", n = " + std::to_string(n));
    }

    KronResult result;
    result.source_index = q.index();
    std::vector<long> pos_alpha(n, -1), pos_interior(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
        if (is_alpha[i]) {
            pos_alpha[i] = static_cast<long>(result.alpha.size());
            result.alpha.push_back(q.index()[i]);
        } else {
            pos_interior[i] = static_cast<long>(result.interior.size());
            result.interior.push_back(q.index()[i]);
        }
    }

    const auto& m = q.matrix();
    std::vector<Triplet> reduced;
    for (int k = 0; k < m.outerSize(); ++k) {
        for (SparseMatrixC::InnerIterator it(m, k); it; ++it) {
            if (is_alpha[it.row()] && is_alpha[it.col()]) {
                reduced.emplace_back(pos_alpha[it.row()], pos_alpha[it.col()], it.value());
            }
        }
    }
    std::vector<Triplet> accompanying;

    // Interior components are independent blocks of the interior matrix.
    std::vector<char> seen(n, 0);
    for (std::size_t start = 0; start < n; ++start) {
        if (is_alpha[start] || seen[start]) continue;
        std::vector<std::size_t> comp;
        std::set<std::size_t> boundary;
        std::queue<std::size_t> queue;
        queue.push(start);
        seen[start] = 1;
        while (!queue.empty()) {
            auto cur = queue.front();
            queue.pop();
            comp.push_back(cur);
            for (const auto& [row, value] : column_entries(m, cur)) {
                if (row == cur) continue;
                if (is_alpha[row]) {
                    boundary.insert(row);
                } else if (!seen[row]) {
                    seen[row] = 1;
                    queue.push(row);
                }
            }
        }
        std::sort(comp.begin(), comp.end());
        std::vector<std::size_t> bnd(boundary.begin(), boundary.end());
        std::map<std::size_t, int> local, local_b;
        for (std::size_t i = 0; i < comp.size(); ++i) local[comp[i]] = static_cast<int>(i);
        for (std::size_t i = 0; i < bnd.size(); ++i) local_b[bnd[i]] = static_cast<int>(i);

        const auto nc = static_cast<int>(comp.size());
        const auto nb = static_cast<int>(bnd.size());
        std::vector<Triplet> cc;
        Eigen::MatrixXcd cb = Eigen::MatrixXcd::Zero(nc, nb);
        for (std::size_t i = 0; i < comp.size(); ++i) {
            for (const auto& [row, value] : column_entries(m, comp[i])) {
                if (is_alpha[row]) {
                    cb(static_cast<int>(i), local_b[row]) = value;
                } else {
                    cc.emplace_back(local[row], static_cast<int>(i), value);
                }
            }
        }
        SparseMatrixC qcc(nc, nc);
        qcc.setFromTriplets(cc.begin(), cc.end());
        qcc.makeCompressed();

        auto block_name = [&] {
            std::string names;
            for (std::size_t i = 0; i < comp.size() && i < 5; ++i) names += (i ? "," : "") + q.index()[comp[i]].str();
            if (comp.size() > 5) names += ",...";
            return "interior block {" + names + "}";
        };

        Eigen::MatrixXcd x;
        if (comp.size() <= kDenseLimit) {
            Eigen::MatrixXcd dense(qcc);
            Eigen::PartialPivLU<Eigen::MatrixXcd> lu(dense);
            const double rcond = lu.rcond();
            if (!(rcond >= kMinRcond)) throw NumericalError("singular " + block_name());
            x = lu.solve(cb);
        } else {
            Eigen::SparseLU<SparseMatrixC, Eigen::COLAMDOrdering<int>> lu;
            lu.analyzePattern(qcc);
            lu.factorize(qcc);
            if (lu.info() != Eigen::Success) throw NumericalError("singular " + block_name());
            x = lu.solve(cb);
            if (lu.info() != Eigen::Success) throw NumericalError("solve failed on " + block_name());
        }
        const double residual = (qcc * x - cb).norm();
        const double scale = Eigen::MatrixXcd(qcc).norm() * x.norm() + cb.norm();
        if (!(residual <= kResidualTol * scale) || !x.allFinite()) {
            throw NumericalError("inaccurate solve on " + block_name());
        }

        // Q_red[B,B] -= Q_[B,c] X with Q_[B,c] = cb^T; Q_ac[B,c] = -X^T.
        Eigen::MatrixXcd update = cb.transpose() * x;
        for (int p = 0; p < nb; ++p) {
            for (int r = 0; r < nb; ++r) {
                reduced.emplace_back(pos_alpha[bnd[p]], pos_alpha[bnd[r]], -update(p, r));
            }
            for (int k = 0; k < nc; ++k) {
                if (x(k, p) != Complex{}) accompanying.emplace_back(pos_alpha[bnd[p]], pos_interior[comp[k]], -x(k, p));
            }
        }
    }

    const auto na = static_cast<int>(result.alpha.size());
    SparseMatrixC red(na, na);
    red.setFromTriplets(reduced.begin(), reduced.end());
    SparseMatrixC red_t = red.transpose();
    const double drift = max_abs(SparseMatrixC(red - red_t));
    if (drift > kSymmetryTol * std::max(1.0, max_abs(red))) {
        throw IntegrityError("reduced laplacian lost symmetry (drift " + std::to_string(drift) + ")");
    }
    SparseMatrixC sym = (red + red_t) * Complex(0.5, 0.0);
    sym.prune([](const Eigen::Index&, const Eigen::Index&, const Complex& v) { return v != Complex{}; });
    sym.makeCompressed();
    result.reduced = LoopyLaplacian(std::move(sym), result.alpha);

    result.accompanying = SparseMatrixC(na, static_cast<int>(result.interior.size()));
    result.accompanying.setFromTriplets(accompanying.begin(), accompanying.end());
    result.accompanying.makeCompressed();
    return result;
}

LoopyLaplacian closed_form_eliminate(const LoopyLaplacian& q, const BusId& node) {
    const std::size_t n = q.position(node);
    const auto nbrs = off_diagonal_neighbors(q, n);
    const auto& m = q.matrix();
    auto Q = [&](std::size_t i, std::size_t j) { return m.coeff(static_cast<int>(i), static_cast<int>(j)); };
    const Complex qnn = Q(n, n);
    if (qnn == Complex{}) throw NumericalError("zero diagonal at " + node.str());

    std::vector<std::tuple<std::size_t, std::size_t, Complex>> updates;
    if (nbrs.size() == 1) {
        const auto r = nbrs[0];
        updates.emplace_back(r, r, -Q(r, n) * Q(r, n) / qnn);
    } else if (nbrs.size() == 2) {
        const auto a = nbrs[0];
        const auto c = nbrs[1];
        updates.emplace_back(a, a, -Q(a, n) * Q(a, n) / qnn);
        updates.emplace_back(c, c, -Q(c, n) * Q(c, n) / qnn);
        updates.emplace_back(a, c, -Q(a, n) * Q(c, n) / qnn);
    } else {
        throw UnsupportedConfigurationError("closed-form elimination needs degree 1 or 2; " + node.str() + " has degree " +
                                            std::to_string(nbrs.size()));
    }
    return remove_and_update(q, {n}, updates);
}

LoopyLaplacian closed_form_eliminate(const LoopyLaplacian& q, const SparseTriangle& triangle) {
    const std::size_t r = q.position(triangle.root);
    const std::size_t f = q.position(triangle.first);
    const std::size_t s = q.position(triangle.second);
    const auto& m = q.matrix();
    auto Q = [&](std::size_t i, std::size_t j) { return m.coeff(static_cast<int>(i), static_cast<int>(j)); };

    auto sorted = [](std::vector<std::size_t> v) {
        std::sort(v.begin(), v.end());
        return v;
    };
    const auto expect_f = sorted({r, s});
    const auto expect_s = sorted({r, f});
    if (sorted(off_diagonal_neighbors(q, f)) != expect_f || sorted(off_diagonal_neighbors(q, s)) != expect_s) {
        throw UnsupportedConfigurationError("{" + triangle.root.str() + "," + triangle.first.str() + "," +
                                            triangle.second.str() + "} is not a sparsely connected triangle");
    }
    const Complex qrf = Q(r, f), qrs = Q(r, s), qff = Q(f, f), qss = Q(s, s), qfs = Q(f, s);
    const Complex det = qff * qss - qfs * qfs;
    if (det == Complex{}) throw NumericalError("singular triangle block");
    const Complex gain = (qrf * qrf * qss - 2.0 * qrf * qrs * qfs + qrs * qrs * qff) / det;
    return remove_and_update(q, {f, s}, {{r, r, -gain}});
}

CurrentVector current_vector(const Network& net, const std::vector<BusId>& index) {
    CurrentVector c;
    c.index = index;
    c.values = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(index.size()));
    for (std::size_t i = 0; i < index.size(); ++i) {
        c.values[static_cast<Eigen::Index>(i)] = net.bus(index[i]).current;
    }
    return c;
}

CurrentVector reduced_currents(const KronResult& kr, const CurrentVector& c) {
    require_aligned(kr.source_index, c.index, "current vector");
    std::map<BusId, Eigen::Index> pos;
    for (std::size_t i = 0; i < c.index.size(); ++i) pos[c.index[i]] = static_cast<Eigen::Index>(i);
    Eigen::VectorXcd ca(static_cast<Eigen::Index>(kr.alpha.size()));
    Eigen::VectorXcd ci(static_cast<Eigen::Index>(kr.interior.size()));
    for (std::size_t i = 0; i < kr.alpha.size(); ++i) ca[static_cast<Eigen::Index>(i)] = c.values[pos[kr.alpha[i]]];
    for (std::size_t i = 0; i < kr.interior.size(); ++i) {
        ci[static_cast<Eigen::Index>(i)] = c.values[pos[kr.interior[i]]];
    }
    CurrentVector out;
    out.index = kr.alpha;
    out.values = ca + kr.accompanying * ci;
    return out;
}

VoltageVector solve_voltages(const LoopyLaplacian& q, const CurrentVector& c) {
    require_aligned(q.index(), c.index, "current vector");
    VoltageVector v;
    v.index = q.index();
    if (c.values.isZero(0.0)) {
        v.values = Eigen::VectorXcd::Zero(c.values.size());
        return v;
    }
    Eigen::SparseLU<SparseMatrixC, Eigen::COLAMDOrdering<int>> lu;
    lu.analyzePattern(q.matrix());
    lu.factorize(q.matrix());
    if (lu.info() != Eigen::Success) throw NumericalError("singular loopy laplacian");
    v.values = lu.solve(c.values);
    if (lu.info() != Eigen::Success || !v.values.allFinite()) throw NumericalError("voltage solve failed");
    const double residual = (q.matrix() * v.values - c.values).norm();
    if (!(residual <= kResidualTol * c.values.norm())) {
        throw NumericalError("voltage solve residual " + std::to_string(residual) + " too large");
    }
    return v;
}

PowerVector power_injections(const VoltageVector& v, const CurrentVector& c) {
    if (v.index != c.index) throw IndexError("voltage and current vectors are not aligned");
    PowerVector s;
    s.index = v.index;
    s.values = v.values.cwiseProduct(c.values.conjugate());
    return s;
}

TriangleAggregate aggregate_triangle_laplacian(const LoopyLaplacian& q, const CurrentVector& c,
                                               const std::array<BusId, 3>& triple) {
    require_aligned(q.index(), c.index, "current vector");
    std::array<std::size_t, 3> p{};
    for (int k = 0; k < 3; ++k) p[k] = q.position(triple[k]);
    if (p[0] == p[1] || p[0] == p[2] || p[1] == p[2]) throw ValidationError("triangle members must be distinct");
    const auto& m = q.matrix();
    for (auto [i, j] : {std::pair{0, 1}, std::pair{0, 2}, std::pair{1, 2}}) {
        if (m.coeff(static_cast<int>(p[i]), static_cast<int>(p[j])) == Complex{}) {
            throw ValidationError("{" + triple[0].str() + "," + triple[1].str() + "," + triple[2].str() +
                                  "} is not a triangle");
        }
    }

    std::vector<long> remap(q.size(), -1);
    std::vector<BusId> index;
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (i == p[1] || i == p[2]) continue;
        remap[i] = static_cast<long>(index.size());
        index.push_back(q.index()[i]);
    }
    for (int k = 1; k < 3; ++k) remap[p[k]] = remap[p[0]];

    std::vector<Triplet> triplets;
    for (int k = 0; k < m.outerSize(); ++k) {
        for (SparseMatrixC::InnerIterator it(m, k); it; ++it) {
            triplets.emplace_back(remap[static_cast<std::size_t>(it.row())], remap[static_cast<std::size_t>(it.col())],
                                  it.value());
        }
    }
    const auto n = static_cast<int>(index.size());
    SparseMatrixC out(n, n);
    out.setFromTriplets(triplets.begin(), triplets.end());
    out.prune([](const Eigen::Index&, const Eigen::Index&, const Complex& v) { return v != Complex{}; });
    out.makeCompressed();

    TriangleAggregate agg{LoopyLaplacian(std::move(out), index), CurrentVector{}};
    agg.c.index = index;
    agg.c.values = Eigen::VectorXcd::Zero(n);
    for (std::size_t i = 0; i < q.size(); ++i) agg.c.values[remap[i]] += c.values[static_cast<Eigen::Index>(i)];
    return agg;
}

}  // namespace gridreduce
