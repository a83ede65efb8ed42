#include "doctest.h"

#include <algorithm>

#include "gridreduce/errors.hpp"
#include "gridreduce/expansion.hpp"
#include "gridreduce/ledger.hpp"
#include "gridreduce/pipeline.hpp"
#include "support/test_support.hpp"

using namespace gridreduce;
using testing::bus;
using testing::graph;

namespace {

const std::vector<Stage> kAll{Stage::D1, Stage::D2, Stage::Tri};

TopologicalRun reduce(const Network& net, Thresholds thr = {}, std::uint64_t seed = 0, std::vector<Stage> stages = kAll) {
    return run_topological(net, stages, thr, seed);
}

ExpansionResult expand_text(const Network& net, const ReductionLedger& ledger, const std::string& target) {
    return expand(net, ledger, parse_target(target, ledger));
}

void check_consistent(const Network& original, const Network& net, const ReductionLedger& ledger) {
    CHECK(reconstruct_original(net, ledger) == original);
    CHECK(materialize(original, ledger) == net);
}

std::set<std::string> names(const std::vector<BusId>& ids) {
    std::set<std::string> out;
    for (const auto& id : ids) out.insert(id.str());
    return out;
}

// Buses of a subtree rooted at the given list.
Network restrict(const Network& net, const std::set<std::string>& keep) {
    Network out;
    for (const auto& [id, b] : net.buses()) {
        if (keep.count(id.str())) out.add_bus(b);
    }
    for (const auto& l : net.lines()) {
        if (keep.count(l.a.str()) && keep.count(l.b.str())) out.add_line(l.a, l.b, l.admittance, l.meta);
    }
    return out;
}

}  // namespace

TEST_CASE("expanding the whole fig 2 tree restores the subtree exactly") {
    const auto net = testing::fig2_tree();
    const auto run = reduce(net, {}, 0, {Stage::D1});
    const auto r = expand_text(run.state.network, run.state.ledger, "t_b1");
    CHECK(names(r.added_nodes) == std::set<std::string>{"b2", "b3", "b4", "b5", "b6", "b7"});
    REQUIRE(r.anchor);
    CHECK(r.anchor->str() == "b1");
    CHECK(r.network == net);
    CHECK(r.ledger.entries.empty());
    const std::set<std::string> tree{"b1", "b2", "b3", "b4", "b5", "b6", "b7"};
    CHECK(restrict(r.network, tree) == restrict(net, tree));
}

TEST_CASE("expanding a single leaf restores its path and reroots the sibling") {
    const auto net = testing::fig2_tree();
    const auto run = reduce(net, {}, 0, {Stage::D1});
    const auto target = parse_target("t_b1:b6", run.state.ledger);
    CHECK(target.kind == ExpansionKind::SingleLeaf);
    const auto r = expand(run.state.network, run.state.ledger, target);
    CHECK(names(r.added_nodes) == std::set<std::string>{"b4", "b5", "b6"});
    CHECK(r.network.has_line(bus("b1"), bus("b4")));
    CHECK(r.network.has_line(bus("b4"), bus("b5")));
    CHECK(r.network.has_line(bus("b5"), bus("b6")));
    const auto& t5 = r.ledger.entries.at(FieldKey::tree(bus("b5")));
    REQUIRE(t5.size() == 1);
    CHECK(std::get<PathItem>(t5[0].body).nodes == std::vector<BusId>{bus("b7"), bus("b5")});
    CHECK(r.ledger.entries.at(FieldKey::tree(bus("b1"))).size() == 2);
    check_consistent(net, r.network, r.ledger);
}

TEST_CASE("expanding an absorbed bus restores its own lines") {
    const auto net = testing::fig6_pure_triangle();
    const auto run = reduce(net, Thresholds{std::nullopt, 6}, 5, kAll);
    const auto& t = std::get<TriangleCollapse>(run.state.trace.back());
    const auto key = FieldKey::triangle(t.base).str();
    const auto r = expand_text(run.state.network, run.state.ledger, key + ":" + t.second.str());
    CHECK(names(r.added_nodes) == std::set<std::string>{t.second.str()});
    for (const auto& [nb, data] : net.neighbors(t.second)) {
        if (r.network.has_bus(nb)) CHECK(r.network.has_line(t.second, nb));
    }
    // The external line of the restored bus no longer hangs off the base.
    BusId external;
    for (const auto& [nb, data] : net.neighbors(t.second)) {
        if (nb != t.base && nb != t.third) external = nb;
    }
    CHECK_FALSE(r.network.has_line(t.base, external));
    CHECK(r.removed_edges.size() == 1);
    check_consistent(net, r.network, r.ledger);
}

TEST_CASE("expanding a mid-string bus before its neighbour is a dependency error") {
    const auto net = testing::fig3_string();
    const auto run = reduce(net, {}, 0, {Stage::D1, Stage::D2});
    try {
        expand_text(run.state.network, run.state.ledger, "e_b1_b5:b2");
        FAIL("expected a dependency error");
    } catch (const DependencyError& e) {
        REQUIRE(!e.prerequisites().empty());
        CHECK(e.prerequisites().front() == "e_b1_b5:b3");
    }
    // Outer-first works.
    auto r = expand_text(run.state.network, run.state.ledger, "e_b1_b5:b4");
    CHECK(names(r.added_nodes) == std::set<std::string>{"b4"});
    check_consistent(net, r.network, r.ledger);
    r = expand_text(r.network, r.ledger, "e_b1_b4:b3");
    r = expand_text(r.network, r.ledger, "e_b1_b3:b2");
    CHECK(r.network == net);
}

TEST_CASE("unknown targets are not found") {
    const auto run = reduce(testing::fig2_tree(), {}, 0, {Stage::D1});
    CHECK_THROWS_AS(parse_target("t_zz", run.state.ledger), NotFoundError);
    CHECK_THROWS_AS(parse_target("t_b1:zz", run.state.ledger), NotFoundError);
    CHECK_THROWS_AS(expand_text(run.state.network, run.state.ledger, "t_b1:b1"), NotFoundError);
    CHECK(parse_target("ALL", run.state.ledger).kind == ExpansionKind::All);
}

TEST_CASE("expand_all inverts the pipeline") {
    Rng rng(13);
    for (int trial = 0; trial < 30; ++trial) {
        const auto net = testing::random_meshed_network(rng, 6 + rng.uniform_below(80));
        const std::optional<double> vthrs[] = {std::nullopt, 138.0, 230.0};
        const Thresholds thr{vthrs[rng.uniform_below(3)], 4 + static_cast<int>(rng.uniform_below(5))};
        const auto run = reduce(net, thr, rng.next());
        const auto r = expand_all(run.state.network, run.state.ledger);
        CHECK(r.network == net);
        CHECK(r.ledger.entries.empty());
        const auto again = expand_all(r.network, r.ledger);
        CHECK(again.network == r.network);
        CHECK(again.added_nodes.empty());
    }
}

TEST_CASE("expand_all on an empty ledger is the identity") {
    const auto net = testing::fig3_string();
    const auto r = expand_all(net, ReductionLedger{});
    CHECK(r.network == net);
}

TEST_CASE("random partial expansions stay replay-consistent") {
    Rng rng(17);
    for (int trial = 0; trial < 25; ++trial) {
        const auto original = testing::random_meshed_network(rng, 10 + rng.uniform_below(50));
        const auto run = reduce(original, Thresholds{std::nullopt, 7}, rng.next());
        Network net = run.state.network;
        ReductionLedger ledger = run.state.ledger;
        for (int step = 0; step < 200 && !ledger.entries.empty(); ++step) {
            std::vector<std::string> targets;
            for (const auto& [key, items] : ledger.entries) targets.push_back(key.str());
            const auto hidden = index_hidden(ledger);
            for (const auto& id : original.bus_ids()) {
                if (!hidden.hidden(id)) continue;
                if (auto t = home_target(ledger, id)) targets.push_back(*t);
            }
            const auto& pick = targets[rng.uniform_below(targets.size())];
            try {
                const auto r = expand_text(net, ledger, pick);
                CHECK(r.network.bus_count() >= net.bus_count());
                net = r.network;
                ledger = r.ledger;
                check_consistent(original, net, ledger);
            } catch (const DependencyError& e) {
                CHECK(!e.prerequisites().empty());
            }
        }
        CHECK(expand_all(net, ledger).network == original);
    }
}

TEST_CASE("whole-field expansion waits for its anchors") {
    // A tree hangs off b3 inside the string, so t_b3 lives nested in the edge field.
    const auto net = graph({{"b1", "b2"}, {"b2", "b3"}, {"b3", "b4"}, {"b4", "b5"}, {"b3", "leaf"}, {"b1", "c1"}, {"b1", "c2"},
                            {"b1", "c3"}, {"b5", "c1"}, {"b5", "c2"}, {"b5", "c3"}, {"c1", "c2"}, {"c2", "c3"}, {"c1", "c3"}});
    const auto run = reduce(net, {}, 0, {Stage::D1, Stage::D2});
    CHECK_FALSE(run.state.ledger.has(FieldKey::tree(bus("b3"))));
    const auto r = expand_text(run.state.network, run.state.ledger, "e_b1_b5:b4");
    const auto r2 = expand_text(r.network, r.ledger, "e_b1_b4:b3");
    CHECK(r2.ledger.has(FieldKey::tree(bus("b3"))));
    const auto r3 = expand_text(r2.network, r2.ledger, "t_b3");
    CHECK(r3.network.has_bus(bus("leaf")));
    check_consistent(net, r3.network, r3.ledger);
}

TEST_CASE("cluster sizes count the root") {
    const auto net = testing::fig2_tree();
    const auto run = reduce(net, {}, 0, {Stage::D1});
    const auto sizes = cluster_sizes(run.state.network, run.state.ledger);
    CHECK(sizes.at(bus("b1")) == 7);
    CHECK(sizes.at(bus("x1")) == 1);
    const auto fields = expandable_fields(run.state.network, run.state.ledger);
    CHECK(fields.at(bus("b1")) == std::vector<std::string>{"t_b1"});
}

TEST_CASE("serialization") {
    const ReductionLedger empty;
    const auto doc = nlohmann::ordered_json::parse(serialize(empty));
    CHECK(doc.at("format_version") == 1);
    CHECK(doc.at("entries").empty());

    const auto run = reduce(testing::fig2_tree(), {}, 0, {Stage::D1});
    const auto fig2 = nlohmann::ordered_json::parse(serialize(run.state.ledger));
    REQUIRE(fig2.at("entries").size() == 1);
    CHECK(fig2.at("entries")[0].at("key") == "t_b1");
    CHECK(fig2.at("entries")[0].at("items").size() == 4);
    CHECK(fig2.contains("stage_counts"));
    CHECK(fig2.contains("seed"));
    CHECK(fig2.contains("thresholds"));

    Rng rng(19);
    for (int trial = 0; trial < 20; ++trial) {
        const auto net = testing::random_meshed_network(rng, 60);
        const auto r = reduce(net, Thresholds{138.0, 6}, rng.next());
        const auto text = serialize(r.state.ledger);
        const auto back = deserialize(text);
        CHECK(back == r.state.ledger);
        CHECK(serialize(back) == text);
    }
}

TEST_CASE("malformed ledgers report where they fail") {
    try {
        deserialize("{\n  \"format_version\": 1,\n  oops\n}", "bad.json");
        FAIL("expected parse error");
    } catch (const ParseError& e) {
        const std::string what = e.what();
        CHECK(what.rfind("bad.json:3:", 0) == 0);
    }
    CHECK_THROWS_AS(deserialize("{\"format_version\": 2}"), ParseError);
    const auto run = reduce(testing::fig2_tree(), {}, 0, {Stage::D1});
    auto doc = nlohmann::ordered_json::parse(serialize(run.state.ledger));
    doc["entries"][0]["key"] = "q_b1";
    CHECK_THROWS_AS(deserialize(doc.dump()), ParseError);
}

TEST_CASE("a bus recorded in two fields is an integrity error") {
    const auto net = testing::fig2_tree();
    auto run = reduce(net, {}, 0, {Stage::D1});
    auto ledger = run.state.ledger;
    ledger.entries[FieldKey::tree(bus("x1"))].push_back(LedgerItem{PathItem{{bus("b2"), bus("x1")}}, Stage::D1, 99});
    CHECK_THROWS_AS(reconstruct_original(run.state.network, ledger), IntegrityError);
}
