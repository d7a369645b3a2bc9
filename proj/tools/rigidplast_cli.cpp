// Command-line driver: rigidplast <command> --config <path> [--threads N] [--out DIR]
// The TOOL_OUT environment variable overrides --out.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "rigidplast/rigidplast.hpp"

int main(int argc, char** argv) {
  using namespace rigidplast;
  CLI::App app{"Elasto-plastic evolutions, rigid-plastic limit sweeps and safe-load certificates"};
  app.require_subcommand(1, 1);
  std::string config_path;
  std::optional<int> threads;
  std::optional<std::string> out_dir;
  for (Command c : {Command::Run, Command::Sweep, Command::Example41, Command::SafeLoad,
                    Command::Report}) {
    auto* sub = app.add_subcommand(command_name(c));
    sub->add_option("--config", config_path, "key = value configuration file")->required();
    sub->add_option("--threads", threads, "worker threads for sweep entries (default 1)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--out", out_dir, "output directory (overrides output_dir)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitConfig;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();

  RunConfig cfg;
  std::string out = "out";
  try {
    cfg = parse_config(read_text_file(config_path));
    cfg.command = *parse_command(cmd);
    if (threads) cfg.threads = *threads;
    out = cfg.output_dir;
    if (out_dir) out = *out_dir;
    if (const char* env = std::getenv("TOOL_OUT"); env && *env) out = env;
    cfg.output_dir = out;
    cfg.validate();
  } catch (const std::exception& e) {
    auto [record, code] = describe_failure(e);
    std::cerr << "error: " << e.what() << '\n';
    std::string dir = out_dir.value_or("");
    if (const char* env = std::getenv("TOOL_OUT"); env && *env) dir = env;
    if (!dir.empty()) {
      try {
        ensure_directory(dir);
        write_text_file(std::filesystem::path(dir) / "error.json", dump_json(record));
      } catch (const std::exception&) {
      }
    }
    return code;
  }

  std::string message;
  const int code = execute(cfg, out, &message);
  if (code != kExitOk) std::cerr << "error: " << message << '\n';
  return code;
}
