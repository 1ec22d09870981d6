#include <iostream>
#include <thread>

#include "adaptoml/pipeline.hpp"

int main(int argc, char** argv) {
  using namespace adaptoml;
  CliParse parsed;
  try {
    parsed = parse_cli(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "adaptoml: " << e.what() << "\nRun with --help for usage.\n";
    return 1;
  }
  if (parsed.exit_now) {
    std::cout << parsed.output;
    return 0;
  }

  RunOptions options;
  options.threads = parsed.threads ? parsed.threads : std::max(1u, std::thread::hardware_concurrency());
  std::string last_stage;
  options.progress = [&](const Progress& p) {
    if (p.stage != last_stage) {
      std::cerr << "[" << p.stage << "]\n";
      last_stage = p.stage;
    }
  };
  options.warn = [](const std::string& w) { std::cerr << w << "\n"; };

  try {
    const auto out = run_pipeline(parsed.config, options);
    std::cout << "outputs in " << out.out_dir.string() << "\n";
    for (const auto& f : out.files) std::cout << "  " << f.filename().string() << "\n";
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "adaptoml: " << e.what() << "\n";
    return 1;
  } catch (const StageError& e) {
    std::cerr << "adaptoml: " << e.what() << "\n";
    if (!e.written().empty()) {
      std::cerr << "files written before the failure:\n";
      for (const auto& f : e.written()) std::cerr << "  " << f.string() << "\n";
    }
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "adaptoml: " << e.what() << "\n";
    return 2;
  }
}
