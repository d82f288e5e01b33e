#include <chrono>
#include <csignal>
#include <iostream>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "support/mock_llm.hpp"
#include "tripweaver/scenario.hpp"

namespace {
volatile std::sig_atomic_t g_stop = 0;

void handle_signal(int) { g_stop = 1; }
}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tripweaver-mock-llm - scripted chat-completions endpoint for testing"};
    std::string config_path = "scenarios/paper_scenario.json";
    int port = 0;
    app.add_option("--config", config_path, "scenario the canned responses are based on");
    app.add_option("--port", port, "port to bind (0 = ephemeral)");

    try {
        app.parse(argc, argv);
        tripweaver::testing::MockLlmServer server(tripweaver::load_scenario(config_path));
        std::signal(SIGINT, handle_signal);
        std::signal(SIGTERM, handle_signal);
        const std::string base = server.start(port);
        std::cout << "mock llm listening; set LLM_BASE_URL=" << base << std::endl;
        while (!g_stop) {
            std::this_thread::sleep_for(std::chrono::milliseconds(200));
        }
        server.stop();
        return 0;
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const tripweaver::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
