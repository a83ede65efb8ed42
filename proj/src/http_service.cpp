#include "gridreduce/http_service.hpp"

#include <regex>
#include <shared_mutex>

#include <spdlog/spdlog.h>

#include "httplib.h"

#include "gridreduce/errors.hpp"

namespace gridreduce {

using nlohmann::ordered_json;

struct ExplorationService::State {
    explicit State(Session s) : session(std::move(s)) {}
    Session session;
    std::shared_mutex mutex;
};

namespace {

void send_json(httplib::Response& res, int status, const ordered_json& doc) {
    res.status = status;
    res.set_content(doc.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& kind, const std::string& message) {
    send_json(res, status, {{"error", message}, {"kind", kind}});
}

bool local_origin(const std::string& origin) {
    static const std::regex pattern(R"(^https?://(localhost|127\.0\.0\.1)(:\d+)?$)");
    return std::regex_match(origin, pattern);
}

// Runs a handler and maps library errors to HTTP status codes.
template <typename F>
void guarded(httplib::Response& res, F&& body) {
    try {
        body();
    } catch (const DependencyError& e) {
        ordered_json doc{{"error", e.what()}, {"kind", e.kind()}, {"prerequisites", e.prerequisites()}};
        send_json(res, 409, doc);
    } catch (const NotFoundError& e) {
        send_error(res, 404, e.kind(), e.what());
    } catch (const IntegrityError& e) {
        send_error(res, 500, e.kind(), e.what());
    } catch (const Error& e) {
        send_error(res, 400, e.kind(), e.what());
    } catch (const std::exception& e) {
        send_error(res, 500, "internal", e.what());
    }
}

}  // namespace

ExplorationService::ExplorationService(Session session)
    : state_(std::make_unique<State>(std::move(session))), server_(std::make_unique<httplib::Server>()) {
    auto* state = state_.get();
    auto& server = *server_;

    server.set_post_routing_handler([](const httplib::Request& req, httplib::Response& res) {
        const auto origin = req.get_header_value("Origin");
        if (!origin.empty() && local_origin(origin)) {
            res.set_header("Access-Control-Allow-Origin", origin);
            res.set_header("Vary", "Origin");
        }
    });
    server.Options(R"(/api/.*)", [](const httplib::Request& req, httplib::Response& res) {
        const auto origin = req.get_header_value("Origin");
        if (!origin.empty() && local_origin(origin)) {
            res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
            res.set_header("Access-Control-Allow-Headers", "Content-Type");
        }
        res.status = 204;
    });

    server.Get("/api/network", [state](const httplib::Request&, httplib::Response& res) {
        guarded(res, [&] {
            std::shared_lock lock(state->mutex);
            send_json(res, 200, state->session.network_document());
        });
    });
    server.Get("/api/stats", [state](const httplib::Request&, httplib::Response& res) {
        guarded(res, [&] {
            std::shared_lock lock(state->mutex);
            send_json(res, 200, state->session.stats_document());
        });
    });
    server.Post("/api/expand", [state](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const auto body = ordered_json::parse(req.body, nullptr, false);
            if (body.is_discarded() || !body.is_object() || !body.contains("target") || !body["target"].is_string()) {
                send_error(res, 400, "validation", "request body must be {\"target\": string}");
                return;
            }
            const auto target = body["target"].get<std::string>();
            std::unique_lock lock(state->mutex);
            auto delta = state->session.expand(target);
            spdlog::info("expanded {}", target);
            send_json(res, 200, delta);
        });
    });
    server.Post("/api/undo", [state](const httplib::Request&, httplib::Response& res) {
        guarded(res, [&] {
            std::unique_lock lock(state->mutex);
            send_json(res, 200, state->session.undo());
        });
    });
}

ExplorationService::~ExplorationService() { stop(); }

int ExplorationService::bind(const std::string& host, int port) {
    if (port == 0) {
        const int bound = server_->bind_to_any_port(host);
        if (bound < 0) throw Error("cannot bind " + host);
        return bound;
    }
    if (!server_->bind_to_port(host, port)) throw Error("cannot bind " + host + ":" + std::to_string(port));
    return port;
}

void ExplorationService::listen() { server_->listen_after_bind(); }

void ExplorationService::stop() {
    if (server_) server_->stop();
}

}  // namespace gridreduce
