#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "pgc/execute.hpp"
#include "pgc/json_writer.hpp"

namespace {

void write_error_artifact(const std::string& out_dir, const std::string& code,
                          const std::string& message) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  pgc::JsonWriter w;
  w.field("error", code);
  w.field("message", message);
  std::ofstream out(std::filesystem::path(out_dir) / "errors.json",
                    std::ios::binary);
  if (out) out << w.str() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Prescribed-curvature mean-field solver on spherical subdomains"};
  std::string command;
  std::string config_path;
  std::string out_dir;
  long seed = -1;
  int threads = 0;

  app.add_option("command", command,
                 "one of: mesh, solve, sweep, bubble-scan, mt-check, "
                 "classify, report")
      ->required();
  app.add_option("--config", config_path, "TOML configuration file");
  app.add_option("--out", out_dir, "artifact output directory");
  app.add_option("--seed", seed, "override the configured random seed");
  app.add_option("--threads", threads, "override the configured thread count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  const std::string fallback_out = out_dir.empty() ? "out" : out_dir;
  if (!pgc::is_known_command(command)) {
    std::cerr << "unknown command: " << command << "\n";
    write_error_artifact(fallback_out, "invalid-argument",
                         "unknown command: " + command);
    return 2;
  }

  pgc::RunConfig config;
  try {
    if (!config_path.empty()) config = pgc::parse_config_file(config_path);
  } catch (const pgc::Error& err) {
    std::cerr << "config error: " << err.what() << "\n";
    write_error_artifact(fallback_out, pgc::error_code_name(err.code()),
                         err.what());
    return 2;
  }
  if (!out_dir.empty()) config.out_dir = out_dir;
  if (seed >= 0) config.seed = seed;
  if (threads > 0) config.threads = threads;

  const int status = pgc::execute(command, config);
  if (status != 0)
    std::cerr << command << " failed; see "
              << (std::filesystem::path(config.out_dir) / "errors.json")
                     .string()
              << "\n";
  return status;
}
