#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "commands.hpp"

namespace {

// PHOTON_GATE_LOG = error | info | debug; warnings by default.
void setup_logging() {
  auto logger = spdlog::stderr_logger_mt("photon-gate");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  const char* env = std::getenv("PHOTON_GATE_LOG");
  if (env == nullptr || *env == '\0') {
    return;
  }
  const std::string level = env;
  if (level == "error") {
    spdlog::set_level(spdlog::level::err);
  } else if (level == "info") {
    spdlog::set_level(spdlog::level::info);
  } else if (level == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else {
    spdlog::warn("PHOTON_GATE_LOG='{}' not one of error, info, debug", level);
  }
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  std::vector<std::string> args(argv + 1, argv + argc);
  return photongate::cli::run(args, std::cout, std::cerr);
}
