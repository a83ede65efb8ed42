#pragma once

#include <memory>
#include <string>

#include "gridreduce/session.hpp"

namespace httplib {
class Server;
}

namespace gridreduce {

class ExplorationService {
public:
    explicit ExplorationService(Session session);
    ~ExplorationService();

    // Binds to host:port (port 0 picks a free port) and returns the bound port.
    int bind(const std::string& host, int port);
    // Blocks until stop() is called.
    void listen();
    void stop();

private:
    struct State;
    std::unique_ptr<State> state_;
    std::unique_ptr<httplib::Server> server_;
};

}  // namespace gridreduce
