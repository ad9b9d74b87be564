#include <csignal>
#include <iostream>

#include "voxagent/cli.hpp"

namespace {

std::atomic<bool> g_interrupted{false};

extern "C" void on_signal(int) { g_interrupted.store(true); }

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  return voxagent::cli::run_cli(argc, argv, std::cout, std::cerr, &g_interrupted);
}
