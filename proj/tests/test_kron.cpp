#include "doctest.h"

#include <cmath>

#include "gridreduce/errors.hpp"
#include "gridreduce/grid_core.hpp"
#include "gridreduce/kron.hpp"
#include "support/test_support.hpp"

using namespace gridreduce;
using testing::bus;
using testing::graph;

namespace {

const Complex I(0, 1);

Network two_bus() {
    Network net;
    net.add_bus({bus("b1"), 69, -I, {}});
    net.add_bus({bus("b2"), 69, {}, {}});
    net.add_line(bus("b1"), bus("b2"), -I);
    return net;
}

Network path3() {
    auto net = two_bus();
    net.add_bus({bus("b3"), 69, {}, {}});
    net.add_line(bus("b2"), bus("b3"), -I);
    return net;
}

void set_admittance(Network& net, const BusId& a, const BusId& b, Complex y) {
    net.remove_line(a, b);
    net.add_line(a, b, y);
}

std::vector<BusId> ids(std::initializer_list<const char*> names) {
    std::vector<BusId> out;
    for (auto n : names) out.push_back(bus(n));
    return out;
}

}  // namespace

TEST_CASE("loopy laplacian of a two-bus line") {
    const auto q = build_loopy_laplacian(two_bus());
    CHECK(q.at(bus("b1"), bus("b1")) == -2.0 * I);
    CHECK(q.at(bus("b1"), bus("b2")) == I);
    CHECK(q.at(bus("b2"), bus("b1")) == I);
    CHECK(q.at(bus("b2"), bus("b2")) == -I);

    Network one;
    one.add_bus({bus("x"), 69, -I, {}});
    CHECK(build_loopy_laplacian(one).at(bus("x"), bus("x")) == -I);
}

TEST_CASE("rows of a shunt-free laplacian sum to zero") {
    Rng rng(8);
    auto net = testing::random_network(rng, 15, 0.2);
    for (const auto& id : net.bus_ids()) net.bus(id).shunt = {};
    const auto q = build_loopy_laplacian(net).dense();
    for (Eigen::Index r = 0; r < q.rows(); ++r) CHECK(std::abs(q.row(r).sum()) < 1e-12);
}

TEST_CASE("laplacian ordering errors") {
    CHECK_THROWS_AS(build_loopy_laplacian(two_bus(), ids({"b1"})), IndexError);
    CHECK_THROWS_AS(build_loopy_laplacian(two_bus(), ids({"b1", "zz"})), IndexError);
}

TEST_CASE("adjacency recovery") {
    const auto adj = adjacency_from_laplacian(build_loopy_laplacian(two_bus()));
    REQUIRE(adj.lines.size() == 1);
    CHECK(adj.lines[0].admittance == -I);
    CHECK(adj.shunts[0] == -I);
    CHECK(adj.shunts[1] == Complex{});

    SparseMatrixC diag(2, 2);
    diag.insert(0, 0) = -I;
    diag.insert(1, 1) = -2.0 * I;
    const auto iso = adjacency_from_laplacian(LoopyLaplacian(diag, ids({"p", "q"})));
    CHECK(iso.lines.empty());
    CHECK(iso.shunts[1] == -2.0 * I);

    SparseMatrixC asym(2, 2);
    asym.insert(0, 1) = I;
    asym.insert(0, 0) = -I;
    asym.insert(1, 1) = -I;
    CHECK_THROWS(adjacency_from_laplacian(LoopyLaplacian(asym, ids({"p", "q"}))));
}

TEST_CASE("adjacency roundtrip is exact on dyadic admittances") {
    Rng rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        auto net = testing::random_network(rng, 12, 0.25);
        for (const auto& line : net.lines()) {
            set_admittance(net, line.a, line.b, Complex(0, -0.25 * static_cast<double>(1 + rng.uniform_below(16))));
        }
        for (const auto& id : net.bus_ids()) {
            if (net.bus(id).shunt != Complex{}) net.bus(id).shunt = Complex(0, -0.125 * static_cast<double>(1 + rng.uniform_below(8)));
        }
        const auto q = build_loopy_laplacian(net);
        CurrentVector zero{q.index(), Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(q.size()))};
        CHECK(network_from_laplacian(q, zero, net) == net);
    }
}

TEST_CASE("adjacency roundtrip on random admittances") {
    Rng rng(22);
    const auto net = testing::random_network(rng, 20, 0.2);
    const auto adj = adjacency_from_laplacian(build_loopy_laplacian(net));
    for (std::size_t k = 0; k < adj.index.size(); ++k) {
        const auto want = net.bus(adj.index[k]).shunt;
        CHECK(std::abs(adj.shunts[k] - want) <= 1e-12 * std::max(1.0, std::abs(want)) * 20);
    }
    CHECK(adj.lines.size() == net.line_count());
    for (const auto& line : adj.lines) CHECK(line.admittance == net.line(line.a, line.b).admittance);
}

TEST_CASE("kron reduction of the fig 1 star gives a complete graph") {
    // Interior b1..b3 form a triangle; each links to its own exterior bus.
    Network net = graph({{"b1", "b2"}, {"b2", "b3"}, {"b1", "b3"}, {"b1", "e1"}, {"b2", "e2"}, {"b3", "e3"}});
    const auto kr = kron_reduce(build_loopy_laplacian(net), ids({"e1", "e2", "e3"}));
    for (const auto& a : kr.alpha) {
        for (const auto& b : kr.alpha) {
            if (a != b) CHECK(std::abs(kr.reduced.at(a, b)) > 1e-9);
        }
    }
}

TEST_CASE("kron reduction of the three-bus path") {
    const auto kr = kron_reduce(build_loopy_laplacian(path3()), ids({"b1", "b2"}));
    CHECK(std::abs(kr.reduced.at(bus("b2"), bus("b2")) - (-I)) < 1e-12);
    CHECK(std::abs(kr.reduced.at(bus("b1"), bus("b2")) - I) < 1e-12);
    const auto adj = adjacency_from_laplacian(kr.reduced);
    CHECK(std::abs(adj.shunts[1]) < 1e-12);
}

TEST_CASE("degree-one closed form matches kron reduction") {
    Rng rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        auto net = testing::random_network(rng, 8, 0.3);
        net.add_bus({bus("leaf"), 69, Complex(0, -rng.uniform(0, 1)), {}});
        net.add_line(bus("leaf"), bus("b003"), Complex(0, -rng.uniform(0.5, 5)));
        const auto q = build_loopy_laplacian(net);
        std::vector<BusId> alpha = net.bus_ids();
        alpha.erase(std::find(alpha.begin(), alpha.end(), bus("leaf")));
        const auto kr = kron_reduce(q, alpha);
        const auto cf = closed_form_eliminate(q, bus("leaf"));
        CHECK(testing::max_abs_diff(kr.reduced, cf) <= 1e-12);
        // Only the root diagonal moves.
        for (const auto& a : alpha) {
            for (const auto& b : alpha) {
                if (a == bus("b003") && b == bus("b003")) continue;
                CHECK(cf.at(a, b) == q.at(a, b));
            }
        }
        const Complex qrn = q.at(bus("b003"), bus("leaf"));
        const Complex qnn = q.at(bus("leaf"), bus("leaf"));
        CHECK(std::abs(cf.at(bus("b003"), bus("b003")) - (q.at(bus("b003"), bus("b003")) - qrn * qrn / qnn)) < 1e-12);
    }
}

TEST_CASE("degree-two closed form with lines -i and -2i") {
    Network net = graph({{"a", "x1"}, {"a", "x2"}, {"x1", "x2"}, {"b", "x1"}, {"b", "x2"}});
    net.add_bus({bus("m"), 69, {}, {}});
    net.add_line(bus("a"), bus("m"), -I);
    net.add_line(bus("m"), bus("b"), -2.0 * I);
    const auto q = build_loopy_laplacian(net);
    const auto cf = closed_form_eliminate(q, bus("m"));
    const auto kr = kron_reduce(q, ids({"a", "b", "x1", "x2"}));
    CHECK(testing::max_abs_diff(cf, kr.reduced) <= 1e-12);
    // Series combination of -i and -2i.
    const Complex series = (-I) * (-2.0 * I) / (-3.0 * I);
    CHECK(std::abs(-cf.at(bus("a"), bus("b")) - series) < 1e-12);
}

TEST_CASE("sparse triangle closed form matches kron reduction") {
    const auto net = testing::fig4_sparse_triangle();
    const auto q = build_loopy_laplacian(net);
    const auto cf = closed_form_eliminate(q, SparseTriangle{bus("b3"), bus("b1"), bus("b2")});
    const auto kr = kron_reduce(q, ids({"b3", "c1", "c2", "c3"}));
    CHECK(testing::max_abs_diff(cf, kr.reduced) <= 1e-12);

    Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        Network w = testing::fig4_sparse_triangle();
        for (const auto& line : w.lines()) set_admittance(w, line.a, line.b, Complex(0, -rng.uniform(0.5, 5)));
        w.bus(bus("b1")).shunt = Complex(0, -rng.uniform(0, 1));
        w.bus(bus("b2")).shunt = Complex(0, -rng.uniform(0, 1));
        const auto qw = build_loopy_laplacian(w);
        CHECK(testing::max_abs_diff(closed_form_eliminate(qw, SparseTriangle{bus("b3"), bus("b1"), bus("b2")}),
                                    kron_reduce(qw, ids({"b3", "c1", "c2", "c3"})).reduced) <= 1e-12);
    }
}

TEST_CASE("closed form rejects unsupported configurations") {
    const auto q = build_loopy_laplacian(graph({{"a", "b"}, {"a", "c"}, {"a", "d"}, {"b", "c"}, {"c", "d"}}));
    CHECK_THROWS_AS(closed_form_eliminate(q, bus("a")), UnsupportedConfigurationError);
    CHECK_THROWS_AS(closed_form_eliminate(q, SparseTriangle{bus("a"), bus("b"), bus("c")}), UnsupportedConfigurationError);
}

TEST_CASE("kron preconditions") {
    const auto q = build_loopy_laplacian(path3());
    CHECK_THROWS_AS(kron_reduce(q, ids({"b1"})), DomainError);
    CHECK_THROWS_AS(kron_reduce(q, ids({"b1", "b2", "b3"})), DomainError);
    CHECK_THROWS_AS(kron_reduce(q, ids({"b1", "zz"})), IndexError);

    SparseMatrixC m(3, 3);
    m.insert(0, 0) = -I;
    m.insert(1, 1) = Complex{};
    m.insert(2, 2) = -I;
    CHECK_THROWS_AS(kron_reduce(LoopyLaplacian(m, ids({"p", "q", "r"})), ids({"p", "r"})), NumericalError);
}

TEST_CASE("reduced currents") {
    const auto net = path3();
    const auto q = build_loopy_laplacian(net);
    const auto kr = kron_reduce(q, ids({"b1", "b2"}));
    CurrentVector c{q.index(), Eigen::VectorXcd(3)};
    c.values << Complex(0.5, 0.1), Complex(-0.2, 0.3), Complex{};
    const auto cr = reduced_currents(kr, c);
    CHECK(cr.values[0] == c.values[0]);
    CHECK(cr.values[1] == c.values[1]);

    // Leaf current lands entirely on its root.
    c.values[2] = Complex(0.7, -0.4);
    const auto leaf = reduced_currents(kr, c);
    CHECK(leaf.values[0] == c.values[0]);
    CHECK(std::abs(leaf.values[1] - (c.values[1] + c.values[2])) < 1e-12);

    CurrentVector wrong{ids({"b1", "b2"}), Eigen::VectorXcd::Zero(2)};
    CHECK_THROWS_AS(reduced_currents(kr, wrong), IndexError);
}

TEST_CASE("voltages and power injections") {
    SparseMatrixC m(1, 1);
    m.insert(0, 0) = -I;
    const LoopyLaplacian q(m, ids({"x"}));
    CurrentVector c{ids({"x"}), Eigen::VectorXcd::Constant(1, 1.0)};
    CHECK(std::abs(solve_voltages(q, c).values[0] - I) < 1e-15);
    CurrentVector zero{ids({"x"}), Eigen::VectorXcd::Zero(1)};
    CHECK(solve_voltages(q, zero).values[0] == Complex{});

    Rng rng(2);
    const auto net = testing::random_network(rng, 3, 1.0);
    const auto q3 = build_loopy_laplacian(net);
    const auto c3 = testing::random_currents(rng, q3.index());
    const auto v3 = solve_voltages(q3, c3);
    CHECK((q3.matrix() * v3.values - c3.values).norm() <= 1e-9 * c3.values.norm());

    VoltageVector v{ids({"x"}), Eigen::VectorXcd::Constant(1, 1.0)};
    CurrentVector ci{ids({"x"}), Eigen::VectorXcd::Constant(1, I)};
    CHECK(power_injections(v, ci).values[0] == -I);
    CHECK(power_injections(v, zero).values[0] == Complex{});
    VoltageVector vr{ids({"x"}), Eigen::VectorXcd::Constant(1, 2.0)};
    CurrentVector cr{ids({"x"}), Eigen::VectorXcd::Constant(1, 3.0)};
    CHECK(power_injections(vr, cr).values[0].imag() == 0.0);
    CHECK_THROWS_AS(power_injections(v, CurrentVector{ids({"y"}), Eigen::VectorXcd::Zero(1)}), IndexError);

    SparseMatrixC sing(2, 2);
    sing.insert(0, 0) = I;
    sing.insert(0, 1) = -I;
    sing.insert(1, 0) = -I;
    sing.insert(1, 1) = I;
    CHECK_THROWS_AS(solve_voltages(LoopyLaplacian(sing, ids({"p", "q"})), CurrentVector{ids({"p", "q"}), Eigen::VectorXcd::Ones(2)}),
                    NumericalError);
}

TEST_CASE("kron reduction changes net power by the interior term") {
    // The change equals C_int^T Q_int^{-1} conj(C_int) up to sign conventions; zero when interior currents vanish.
    Rng rng(31);
    for (int trial = 0; trial < 10; ++trial) {
        const auto net = testing::random_network(rng, 8, 0.3);
        const auto q = build_loopy_laplacian(net);
        auto c = testing::random_currents(rng, q.index());
        std::vector<BusId> alpha(q.index().begin(), q.index().begin() + 5);
        const auto kr = kron_reduce(q, alpha);
        for (Eigen::Index k = 5; k < 8; ++k) c.values[k] = Complex{};
        const auto s_full = power_injections(solve_voltages(q, c), c).sum();
        const auto cr = reduced_currents(kr, c);
        const auto s_red = power_injections(solve_voltages(kr.reduced, cr), cr).sum();
        CHECK(std::abs(s_full - s_red) <= 1e-9 * std::max(1.0, std::abs(s_full)));
    }
}

TEST_CASE("strictly inductive networks carry purely imaginary net power") {
    Rng rng(32);
    for (int trial = 0; trial < 10; ++trial) {
        const auto net = testing::random_network(rng, 9, 0.3);
        const auto q = build_loopy_laplacian(net);
        const auto c = testing::random_currents(rng, q.index());
        const auto s = power_injections(solve_voltages(q, c), c).sum();
        CHECK(std::abs(s.real()) <= 1e-9 * std::abs(s));
        CHECK(s.imag() > 0.0);
    }
}

TEST_CASE("kron closure, monotonicity and path preservation") {
    Rng rng(41);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t n = 4 + rng.uniform_below(9);
        const auto net = testing::random_network(rng, n, rng.uniform(0.05, 0.5));
        const auto q = build_loopy_laplacian(net);
        auto order = q.index();
        rng.shuffle(order);
        const std::size_t k = 2 + rng.uniform_below(n - 2);
        std::vector<BusId> alpha(order.begin(), order.begin() + static_cast<long>(k));
        const auto kr = kron_reduce(q, alpha);

        Network reduced = network_from_laplacian(kr.reduced, CurrentVector{kr.alpha, Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(k))}, net);
        CHECK(validate(reduced, ValidationMode::Lenient).inductive_ok());
        CHECK(is_connected(reduced));

        for (const auto& a : alpha) {
            for (const auto& b : alpha) {
                if (a == b) continue;
                const Complex before = net.has_line(a, b) ? net.line(a, b).admittance : Complex{};
                const Complex after = -kr.reduced.at(a, b);
                CHECK((I * after).real() >= (I * before).real() - 1e-12);
            }
        }

        std::map<BusId, std::set<BusId>> clusters;
        for (const auto& a : alpha) clusters[a] = {a};
        const auto oracle = testing::path_oracle_edges(net, clusters);
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = i + 1; j < k; ++j) {
                const bool present = std::abs(kr.reduced.at(alpha[i], alpha[j])) > 1e-12;
                CHECK(present == (oracle.count(make_edge(alpha[i], alpha[j])) == 1));
            }
        }
    }
}

TEST_CASE("kron output stays symmetric") {
    Rng rng(43);
    const auto net = testing::random_network(rng, 80, 0.05);
    const auto q = build_loopy_laplacian(net);
    std::vector<BusId> alpha(q.index().begin(), q.index().begin() + 10);
    const auto m = kron_reduce(q, alpha).reduced.dense();
    CHECK((m - m.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("triangle aggregation") {
    Network net = graph({{"t1", "t2"}, {"t2", "t3"}, {"t1", "t3"}, {"t1", "x1"}, {"t2", "x2"}, {"t3", "x3"}, {"x1", "x2"}, {"x2", "x3"}});
    for (const char* id : {"t1", "t2", "t3"}) net.bus(bus(id)).shunt = -I;
    const auto q = build_loopy_laplacian(net);
    CurrentVector c{q.index(), Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(q.size()))};
    const auto agg = aggregate_triangle_laplacian(q, c, {bus("t1"), bus("t2"), bus("t3")});
    const auto adj = adjacency_from_laplacian(agg.q);
    const auto pos = agg.q.position(bus("t1"));
    CHECK(std::abs(adj.shunts[pos] - (-3.0 * I)) < 1e-12);
    for (const char* x : {"x1", "x2", "x3"}) CHECK(std::abs(-agg.q.at(bus("t1"), bus(x)) - (-I)) < 1e-12);
    CHECK(agg.c.values[static_cast<Eigen::Index>(pos)] == Complex{});
    CHECK_FALSE(agg.q.contains(bus("t2")));

    CHECK_THROWS(aggregate_triangle_laplacian(q, c, {bus("t1"), bus("x1"), bus("x2")}));
}

TEST_CASE("triangle aggregation sums currents and shunts") {
    Rng rng(51);
    for (int trial = 0; trial < 20; ++trial) {
        auto net = testing::random_network(rng, 10, 0.4);
        std::array<BusId, 3> tri;
        bool found = false;
        for (const auto& line : net.lines()) {
            for (const auto& [third, d] : net.neighbors(line.a)) {
                if (third != line.b && net.has_line(third, line.b)) {
                    tri = {line.a, line.b, third};
                    found = true;
                    break;
                }
            }
            if (found) break;
        }
        if (!found) continue;
        const auto q = build_loopy_laplacian(net);
        const auto c = testing::random_currents(rng, q.index());
        const auto agg = aggregate_triangle_laplacian(q, c, tri);
        Complex want_shunt{}, want_c{};
        for (const auto& b : tri) {
            want_shunt += net.bus(b).shunt;
            want_c += c.values[static_cast<Eigen::Index>(q.position(b))];
        }
        const auto adj = adjacency_from_laplacian(agg.q);
        const auto pos = agg.q.position(tri[0]);
        CHECK(std::abs(adj.shunts[pos] - want_shunt) < 1e-12);
        CHECK(std::abs(agg.c.values[static_cast<Eigen::Index>(pos)] - want_c) < 1e-12);
        const auto rebuilt = network_from_laplacian(agg.q, agg.c, net);
        CHECK(is_connected(rebuilt));
        CHECK(validate(rebuilt, ValidationMode::Lenient).inductive_ok());
        CHECK_NOTHROW(solve_voltages(agg.q, agg.c));
    }
}
