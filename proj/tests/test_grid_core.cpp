#include "doctest.h"

#include "gridreduce/errors.hpp"
#include "gridreduce/grid_core.hpp"
#include "support/test_support.hpp"

using namespace gridreduce;
using testing::bus;
using testing::graph;

namespace {

Bus make_bus(const std::string& id, double kv = 69.0, Complex shunt = {}) { return Bus{BusId(id), kv, shunt, {}}; }

RawNetwork path3() {
    RawNetwork raw;
    raw.buses = {make_bus("b1", 69, {0, -1}), make_bus("b2"), make_bus("b3")};
    raw.lines = {{bus("b1"), bus("b2"), {0, -1}, false}, {bus("b2"), bus("b3"), {0, -1}, false}};
    return raw;
}

}  // namespace

TEST_CASE("preprocessing keeps the largest component") {
    RawNetwork raw;
    for (int k = 0; k < 8; ++k) raw.buses.push_back(make_bus("n" + std::to_string(k), 69, {0, -1}));
    for (int k = 0; k < 4; ++k) raw.lines.push_back({bus("n" + std::to_string(k)), bus("n" + std::to_string(k + 1)), {0, -1}, false});
    raw.lines.push_back({bus("n5"), bus("n6"), {0, -1}, false});
    raw.lines.push_back({bus("n6"), bus("n7"), {0, -1}, false});
    const auto net = preprocess_degree_zero(raw);
    CHECK(net.bus_count() == 5);
    CHECK(net.has_bus(bus("n0")));
    CHECK_FALSE(net.has_bus(bus("n5")));
}

TEST_CASE("preprocessing breaks component ties by the smallest id") {
    RawNetwork raw;
    raw.buses = {make_bus("d"), make_bus("c"), make_bus("a"), make_bus("b")};
    raw.lines = {{bus("d"), bus("c"), {0, -1}, false}, {bus("b"), bus("a"), {0, -1}, false}};
    const auto net = preprocess_degree_zero(raw);
    CHECK(net.has_bus(bus("a")));
    CHECK(net.bus_count() == 2);
}

TEST_CASE("zero-voltage bus on a ring is dropped") {
    RawNetwork raw;
    for (const char* id : {"r1", "r2", "r3", "r4"}) raw.buses.push_back(make_bus(id, 69, {0, -0.1}));
    raw.buses.push_back(make_bus("z", 0.0));
    raw.lines = {{bus("r1"), bus("r2"), {0, -1}, false}, {bus("r2"), bus("r3"), {0, -1}, false},
                 {bus("r3"), bus("r4"), {0, -1}, false}, {bus("r4"), bus("r1"), {0, -1}, false},
                 {bus("z"), bus("r1"), {0, -1}, false}};
    const auto net = preprocess_degree_zero(raw);
    CHECK(net.bus_count() == 4);
    CHECK(net.line_count() == 4);
    CHECK_FALSE(net.has_bus(bus("z")));
}

TEST_CASE("parallel lines merge by admittance sum and self lines become shunt") {
    RawNetwork raw;
    raw.buses = {make_bus("b1"), make_bus("b2")};
    raw.lines = {{bus("b1"), bus("b2"), {0, -2}, false}, {bus("b2"), bus("b1"), {0, -3}, false},
                 {bus("b1"), bus("b1"), {0, -0.5}, false}};
    const auto net = preprocess_degree_zero(raw);
    CHECK(net.line_count() == 1);
    CHECK(net.line(bus("b1"), bus("b2")).admittance == Complex(0, -5));
    CHECK(net.bus(bus("b1")).shunt == Complex(0, -0.5));
}

TEST_CASE("preprocessing errors") {
    RawNetwork raw;
    raw.buses = {make_bus("z", 0.0)};
    CHECK_THROWS_AS(preprocess_degree_zero(raw), DomainError);
    raw.buses = {make_bus("a"), make_bus("a")};
    CHECK_THROWS_AS(preprocess_degree_zero(raw), ValidationError);
    raw.buses = {make_bus("a")};
    raw.lines = {{bus("a"), bus("q"), {0, -1}, false}};
    CHECK_THROWS_AS(preprocess_degree_zero(raw), NotFoundError);
}

TEST_CASE("preprocessing is idempotent") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        auto raw = to_raw(testing::random_network(rng, 12, 0.2));
        raw.buses.push_back(make_bus("zz", 0.0));
        raw.lines.push_back({bus("zz"), raw.buses.front().id, {0, -1}, false});
        raw.lines.push_back(raw.lines.front());
        const auto once = preprocess_degree_zero(raw);
        CHECK(preprocess_degree_zero(to_raw(once)) == once);
    }
}

TEST_CASE("validate on the three-bus path") {
    auto net = preprocess_degree_zero(path3());
    CHECK(validate(net, ValidationMode::Strict).ok());

    auto raw = path3();
    raw.lines[0].admittance = {1, -1};
    const auto bad = preprocess_degree_zero(raw);
    const auto report = validate(bad, ValidationMode::Lenient);
    REQUIRE(report.violations.size() == 1);
    CHECK(report.violations[0].kind == ViolationKind::NonInductiveLine);
    CHECK(report.violations[0].subject.find("b1") != std::string::npos);
    CHECK_THROWS_AS(validate(bad, ValidationMode::Strict), ValidationError);

    raw = path3();
    raw.buses[0].shunt = {};
    const auto no_shunt = validate(preprocess_degree_zero(raw), ValidationMode::Lenient);
    REQUIRE(no_shunt.violations.size() == 1);
    CHECK(no_shunt.violations[0].kind == ViolationKind::NoNonzeroShunt);
    CHECK(no_shunt.violations[0].message.find("no non-zero diagonal") != std::string::npos);
}

TEST_CASE("validate flags a disconnected network and a net-power imbalance") {
    auto net = graph({{"a", "b"}}, {"c"});
    const auto report = validate(net, ValidationMode::Lenient);
    bool disconnected = false;
    for (const auto& v : report.violations) disconnected = disconnected || v.kind == ViolationKind::Disconnected;
    CHECK(disconnected);

    auto powered = preprocess_degree_zero(path3());
    powered.bus(bus("b3")).current = {1.0, 0.0};
    const auto imbalance = validate(powered, ValidationMode::Lenient);
    REQUIRE(imbalance.violations.size() == 1);
    CHECK(imbalance.violations[0].kind == ViolationKind::NetPowerImbalance);
    CHECK(imbalance.inductive_ok());
}

TEST_CASE("degree map") {
    const auto fig2 = testing::fig2_tree();
    const auto deg = degree_map(fig2);
    CHECK(deg.at(bus("b5")) == 3);
    CHECK(deg.at(bus("b7")) == 1);
    CHECK(degree_map(graph({}, {"solo"})).at(bus("solo")) == 0);
    for (const auto& [id, d] : degree_map(graph({{"b1", "b2"}, {"b2", "b3"}, {"b1", "b3"}}))) CHECK(d == 2);
}

TEST_CASE("degree sum is twice the line count") {
    Rng rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        const auto net = testing::random_network(rng, 3 + rng.uniform_below(30), 0.15);
        std::size_t total = 0;
        for (const auto& [id, d] : degree_map(net)) total += d;
        CHECK(total == 2 * net.line_count());
    }
}

TEST_CASE("graph density") {
    CHECK(graph_density(graph({{"a", "b"}, {"a", "c"}, {"a", "d"}, {"b", "c"}, {"b", "d"}, {"c", "d"}})) == doctest::Approx(1.0));
    CHECK(graph_density(graph({{"a", "b"}, {"b", "c"}})) == doctest::Approx(2.0 / 3.0));
    CHECK(graph_density(graph({{"h", "a"}, {"h", "b"}, {"h", "c"}, {"h", "d"}})) == doctest::Approx(0.4));
    CHECK_THROWS_AS(graph_density(graph({}, {"solo"})), DomainError);
}

TEST_CASE("topological connectivity") {
    const auto tri = topological_connectivity(graph({{"b1", "b2"}, {"b2", "b3"}, {"b1", "b3"}}));
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) CHECK(tri(i, j) == (i != j));
    }
    const auto two = topological_connectivity(graph({{"b1", "b2"}}));
    CHECK(!two(0, 0));
    CHECK(two(0, 1));
    CHECK(two(1, 0));
    CHECK(!two(1, 1));

    const auto fig2 = testing::fig2_tree();
    const auto ids = fig2.bus_ids();
    const auto t = topological_connectivity(fig2, ids);
    const auto row = static_cast<std::size_t>(std::find(ids.begin(), ids.end(), bus("b5")) - ids.begin());
    std::size_t ones = 0;
    for (std::size_t j = 0; j < ids.size(); ++j) ones += t(row, j) ? 1 : 0;
    CHECK(ones == 3);

    Rng rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        const auto net = testing::random_network(rng, 10, 0.3);
        const auto m = topological_connectivity(net);
        for (std::size_t i = 0; i < 10; ++i) {
            CHECK(!m(i, i));
            for (std::size_t j = 0; j < 10; ++j) CHECK(m(i, j) == m(j, i));
        }
    }
}

TEST_CASE("connectivity ordering must be a permutation") {
    const auto net = graph({{"b1", "b2"}});
    CHECK_THROWS_AS(topological_connectivity(net, {bus("b1")}), IndexError);
    CHECK_THROWS_AS(topological_connectivity(net, {bus("b1"), bus("b9")}), IndexError);
}
