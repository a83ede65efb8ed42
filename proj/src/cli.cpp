#include "gridreduce/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <map>
#include <thread>

#include <CLI11.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "gridreduce/errors.hpp"
#include "gridreduce/grid_core.hpp"
#include "gridreduce/http_service.hpp"
#include "gridreduce/kron.hpp"
#include "gridreduce/metrics.hpp"
#include "gridreduce/network_io.hpp"
#include "gridreduce/pipeline.hpp"
#include "gridreduce/synthetic.hpp"

namespace gridreduce {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

std::optional<double> parse_vthr(const std::string& text) {
    if (text == "none") return std::nullopt;
    const auto raw = parse_network("id,voltage_kv,shunt_re,shunt_im,current_re,current_im\nx," + text + ",0,0,0,0\n",
                                   "from_id,to_id,adm_re,adm_im\n", "--vthr", "--vthr");
    const double v = raw.buses.front().nominal_voltage_kv;
    if (!(v > 0.0)) throw DomainError("--vthr must be positive or 'none'");
    return v;
}

Thresholds thresholds(const std::string& vthr, int dthr) {
    Thresholds t;
    t.vthr = parse_vthr(vthr);
    t.dthr = dthr;
    if (dthr < 4) throw DomainError("--dthr must be at least 4");
    return t;
}

Network load_dir(const fs::path& dir) { return network_from_raw(load_network(dir / "buses.csv", dir / "lines.csv")); }

ordered_json load_json(const fs::path& path) {
    const auto text = read_text(path);
    auto doc = ordered_json::parse(text, nullptr, false);
    if (doc.is_discarded()) throw ParseError(path.string(), 0, 0, "invalid JSON");
    return doc;
}

void log_violations(const ValidationReport& report) {
    for (const auto& v : report.violations) spdlog::warn("{}: {}", to_string(v.kind), v.message);
}

struct ReduceOptions {
    std::string buses, lines, stages = "d1,d2,tri", vthr = "none", out_dir;
    int dthr = 6;
    std::uint64_t seed = 0;
    bool strict = false;
};

int cmd_reduce(const ReduceOptions& o, std::ostream& out) {
    const auto net = preprocess_degree_zero(load_network(o.buses, o.lines));
    const auto report = validate(net, o.strict ? ValidationMode::Strict : ValidationMode::Lenient);
    log_violations(report);
    const auto stages = parse_stages(o.stages);
    const auto thr = thresholds(o.vthr, o.dthr);
    const auto run = run_topological(net, stages, thr, o.seed);
    const fs::path dir(o.out_dir);
    save_network(run.state.network, dir);
    write_text(dir / "ledger.json", serialize(run.state.ledger));
    write_text(dir / "report.json", to_json(run.report).dump(1) + "\n");
    if (o.strict) {
        const auto q = build_loopy_laplacian(net);
        const auto numeric = numeric_reduction_pipeline(net, current_vector(net, q.index()), stages, thr, o.seed);
        save_network(network_from_laplacian(numeric.q, numeric.c, numeric.network), dir / "equivalent");
    }
    for (const auto& c : run.state.ledger.stage_counts) out << c.stage << ": " << c.nodes << " buses, " << c.edges << " lines\n";
    return 0;
}

int cmd_expand(const std::string& net_dir, const std::string& ledger_path, const std::string& target,
               const std::string& out_dir, std::ostream& out) {
    const auto net = load_dir(net_dir);
    const auto ledger = deserialize(read_text(ledger_path), ledger_path);
    const auto parsed = parse_target(target, ledger);
    const auto result = parsed.kind == ExpansionKind::All ? expand_all(net, ledger) : expand(net, ledger, parsed);
    const fs::path dir(out_dir);
    save_network(result.network, dir);
    write_text(dir / "ledger.json", serialize(result.ledger));
    auto count = [](std::size_t n, const char* one, const char* many) { return std::to_string(n) + " " + (n == 1 ? one : many); };
    out << count(result.added_nodes.size(), "bus", "buses") << " restored, " << count(result.added_edges.size(), "line", "lines")
        << " added, " << count(result.removed_edges.size(), "line", "lines") << " removed";
    if (result.anchor) out << ", anchor " << result.anchor->str();
    out << "\n";
    return 0;
}

int cmd_stats(const std::string& net_dir, const std::string& ledger_path, const std::string& compare_dir, bool json,
              std::ostream& out) {
    const auto net = load_dir(net_dir);
    std::optional<ReductionLedger> ledger;
    if (!ledger_path.empty()) ledger = deserialize(read_text(ledger_path), ledger_path);
    std::optional<Network> compare;
    if (!compare_dir.empty()) compare = load_dir(compare_dir);
    const auto doc = stats_document(net, ledger ? &*ledger : nullptr, compare ? &*compare : nullptr);
    out << (json ? doc.dump(1) + "\n" : format_stats_table(doc));
    return 0;
}

int cmd_synth(const std::string& spec_path, std::optional<std::uint64_t> seed, const std::string& vthr, int dthr,
              const std::string& out_dir, std::ostream& out) {
    const auto spec = parse_synthetic_spec(load_json(spec_path));
    const auto s = seed ? *seed : spec.seed.value_or(0);
    const auto net = generate_synthetic(spec, s);
    const fs::path dir(out_dir);
    save_network(net, dir);
    ordered_json doc;
    doc["seed"] = s;
    doc["spec"] = to_json(spec);
    const auto thr = thresholds(vthr, dthr);
    doc["thresholds"] = {{"vthr", thr.vthr ? ordered_json(*thr.vthr) : ordered_json("none")}, {"dthr", thr.dthr}};
    doc["predicted"] = nullptr;
    if (const auto predicted = predict_counts(spec, thr)) {
        doc["predicted"] = ordered_json::array();
        for (const auto& c : predicted->stages) doc["predicted"].push_back({{"stage", c.stage}, {"nodes", c.nodes}, {"edges", c.edges}});
    }
    write_text(dir / "synth.json", doc.dump(1) + "\n");
    out << net.bus_count() << " buses, " << net.line_count() << " lines\n";
    return 0;
}

struct EnsembleOptions {
    std::string buses, lines, spec, stages = "d1,d2,tri", vthr = "none";
    int dthr = 6;
    std::uint64_t seed = 0;
    std::size_t runs = 100;
    std::size_t threads = 0;
    bool json = false;
};

int cmd_ensemble(const EnsembleOptions& o, std::ostream& out) {
    Network net;
    if (!o.spec.empty()) {
        const auto spec = parse_synthetic_spec(load_json(o.spec));
        net = generate_synthetic(spec, spec.seed.value_or(0));
    } else {
        if (o.buses.empty() || o.lines.empty()) throw ValidationError("ensemble needs --spec or both --buses and --lines");
        net = preprocess_degree_zero(load_network(o.buses, o.lines));
        log_violations(validate(net, ValidationMode::Lenient));
    }
    const auto stages = parse_stages(o.stages);
    const auto thr = thresholds(o.vthr, o.dthr);
    if (o.runs == 0) throw DomainError("--runs must be positive");

    std::vector<std::size_t> sizes(o.runs);
    std::vector<std::exception_ptr> failures(o.runs);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < o.runs; i = next++) {
            try {
                sizes[i] = run_topological(net, stages, thr, o.seed + i).state.network.bus_count();
            } catch (...) {
                failures[i] = std::current_exception();
            }
        }
    };
    std::size_t n_threads = o.threads ? o.threads : std::max(1u, std::thread::hardware_concurrency());
    n_threads = std::min(n_threads, o.runs);
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    for (const auto& f : failures) {
        if (f) std::rethrow_exception(f);
    }

    std::map<std::size_t, std::size_t> histogram;
    double mean = 0.0;
    for (auto s : sizes) {
        ++histogram[s];
        mean += static_cast<double>(s);
    }
    mean /= static_cast<double>(sizes.size());
    double var = 0.0;
    for (auto s : sizes) var += (static_cast<double>(s) - mean) * (static_cast<double>(s) - mean);
    const double stddev = std::sqrt(var / static_cast<double>(sizes.size()));
    const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());

    if (o.json) {
        ordered_json doc;
        doc["runs"] = o.runs;
        doc["seed"] = o.seed;
        doc["input_nodes"] = net.bus_count();
        doc["final_nodes"] = sizes;
        doc["histogram"] = ordered_json::array();
        for (const auto& [size, count] : histogram) doc["histogram"].push_back({{"nodes", size}, {"count", count}});
        doc["min"] = *lo;
        doc["max"] = *hi;
        doc["mean"] = mean;
        doc["std"] = stddev;
        out << doc.dump(1) << "\n";
    } else {
        out << "runs " << o.runs << ", seeds " << o.seed << ".." << o.seed + o.runs - 1 << "\n";
        out << "final buses: min " << *lo << ", max " << *hi << ", mean " << format_double(mean) << ", std "
            << format_double(stddev) << "\n";
        for (const auto& [size, count] : histogram) out << size << "\t" << count << "\n";
    }
    return 0;
}

int cmd_serve(const std::string& net_dir, const std::string& ledger_path, const std::string& host, int port,
              std::ostream& out) {
    Session session(load_dir(net_dir), deserialize(read_text(ledger_path), ledger_path));
    ExplorationService service(std::move(session));
    const int bound = service.bind(host, port);
    out << "listening on http://" << host << ":" << bound << "\n" << std::flush;
    service.listen();
    return 0;
}

void configure_logging(std::ostream& err) {
    auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
    auto logger = std::make_shared<spdlog::logger>("gridreduce", sink);
    logger->set_pattern("[%l] %v");
    auto level = spdlog::level::warn;
    if (const char* env = std::getenv("GRIDREDUCE_LOG")) level = spdlog::level::from_str(env);
    logger->set_level(level);
    spdlog::set_default_logger(logger);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    configure_logging(err);
    CLI::App app{"Power-grid topology reduction and exploration", "gridreduce"};
    app.require_subcommand(1);

    ReduceOptions ro;
    auto* reduce = app.add_subcommand("reduce", "Reduce a network and write the reduced tables, ledger and report");
    reduce->add_option("--buses", ro.buses, "Bus table")->required();
    reduce->add_option("--lines", ro.lines, "Line table")->required();
    reduce->add_option("--stages", ro.stages, "Comma-separated prefix of d1,d2,tri");
    reduce->add_option("--vthr", ro.vthr, "Voltage threshold in kV, or none");
    reduce->add_option("--dthr", ro.dthr, "Degree threshold");
    reduce->add_option("--seed", ro.seed, "Seed for the triangle stage");
    reduce->add_option("--out-dir", ro.out_dir, "Output directory")->required();
    reduce->add_flag("--strict", ro.strict, "Reject inputs violating the network hypotheses and write the electrical equivalent");

    std::string net_dir, ledger_path, target, out_dir, compare_dir, host = "127.0.0.1";
    auto* expand_cmd = app.add_subcommand("expand", "Undo part of a reduction");
    expand_cmd->add_option("--net", net_dir, "Directory with buses.csv and lines.csv")->required();
    expand_cmd->add_option("--ledger", ledger_path, "Ledger file")->required();
    expand_cmd->add_option("--target", target, "KEY, KEY:MEMBER or ALL")->required();
    expand_cmd->add_option("--out-dir", out_dir, "Output directory")->required();

    bool json = false;
    auto* stats = app.add_subcommand("stats", "Print network statistics");
    stats->add_option("--net", net_dir, "Directory with buses.csv and lines.csv")->required();
    stats->add_option("--ledger", ledger_path, "Ledger of the reduction that produced the network");
    stats->add_option("--compare", compare_dir, "Second network for the Wasserstein distance");
    stats->add_flag("--json", json, "Print JSON");

    std::string spec_path, vthr = "none";
    std::optional<std::uint64_t> synth_seed;
    int dthr = 6;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic network with predictable reduction counts");
    synth->add_option("--spec", spec_path, "Spec JSON")->required();
    synth->add_option("--seed", synth_seed, "Seed for admittances");
    synth->add_option("--vthr", vthr, "Voltage threshold used for the predicted counts");
    synth->add_option("--dthr", dthr, "Degree threshold used for the predicted counts");
    synth->add_option("--out-dir", out_dir, "Output directory")->required();

    EnsembleOptions eo;
    auto* ensemble = app.add_subcommand("ensemble", "Distribution of the final bus count over many seeds");
    ensemble->add_option("--runs", eo.runs, "Number of seeds");
    ensemble->add_option("--seed", eo.seed, "First seed");
    ensemble->add_option("--buses", eo.buses, "Bus table");
    ensemble->add_option("--lines", eo.lines, "Line table");
    ensemble->add_option("--spec", eo.spec, "Synthetic spec instead of tables");
    ensemble->add_option("--stages", eo.stages, "Comma-separated prefix of d1,d2,tri");
    ensemble->add_option("--vthr", eo.vthr, "Voltage threshold in kV, or none");
    ensemble->add_option("--dthr", eo.dthr, "Degree threshold");
    ensemble->add_option("--threads", eo.threads, "Worker threads (0 = hardware)");
    ensemble->add_flag("--json", eo.json, "Print JSON");

    int port = 8080;
    auto* serve = app.add_subcommand("serve", "Start the exploration service");
    serve->add_option("--net", net_dir, "Directory with buses.csv and lines.csv")->required();
    serve->add_option("--ledger", ledger_path, "Ledger file")->required();
    serve->add_option("--port", port, "Port (0 picks a free one)");
    serve->add_option("--host", host, "Bind address");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*reduce) return cmd_reduce(ro, out);
        if (*expand_cmd) return cmd_expand(net_dir, ledger_path, target, out_dir, out);
        if (*stats) return cmd_stats(net_dir, ledger_path, compare_dir, json, out);
        if (*synth) return cmd_synth(spec_path, synth_seed, vthr, dthr, out_dir, out);
        if (*ensemble) return cmd_ensemble(eo, out);
        if (*serve) return cmd_serve(net_dir, ledger_path, host, port, out);
    } catch (const DependencyError& e) {
        err << "error[" << e.kind() << "]: " << e.what() << "\n";
        if (!e.prerequisites().empty()) {
            err << "expand first:";
            for (const auto& p : e.prerequisites()) err << " " << p;
            err << "\n";
        }
        return 3;
    } catch (const Error& e) {
        err << "error[" << e.kind() << "]: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error[internal]: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace gridreduce
