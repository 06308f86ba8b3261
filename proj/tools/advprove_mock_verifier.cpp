#include <csignal>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "advprove/mock_verifier.hpp"

namespace {
volatile std::sig_atomic_t g_stop = 0;
void handle_signal(int) { g_stop = 1; }
}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deterministic mock proof verifier (line protocol over TCP)"};
  int port = 0;
  app.add_option("--port", port, "listen port (0 picks a free one)");
  CLI11_PARSE(app, argc, argv);

  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);

  advprove::verifier::MockVerifierServer server;
  const int bound = server.start(port);
  std::cout << "listening on 127.0.0.1:" << bound << std::endl;
  while (!g_stop) {
    std::this_thread::sleep_for(std::chrono::milliseconds(200));
  }
  server.stop();
  return 0;
}
