#include <CLI11.hpp>

#include <csignal>
#include <iostream>

#include "adaptoml/service.hpp"

namespace {
adaptoml::Service* g_service = nullptr;
void on_signal(int) {
  if (g_service) g_service->stop();
}
}  // namespace

int main(int argc, char** argv) {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string root = "adaptoml_service";
  std::string static_dir;
  std::size_t workers = 1;
  std::size_t threads = 1;
  double max_upload_mb = 64;

  CLI::App app{"AdaptoML HTTP job service", "adaptoml-service"};
  app.add_option("--host", host, "Bind address")->capture_default_str();
  app.add_option("--port", port, "Bind port")->capture_default_str();
  app.add_option("--root", root, "Directory for uploaded datasets and job outputs")->capture_default_str();
  app.add_option("--workers", workers, "Jobs executed concurrently")->capture_default_str();
  app.add_option("--threads-per-job", threads, "Grid-search threads inside one job")->capture_default_str();
  app.add_option("--max-upload-mb", max_upload_mb, "Upload size limit in MiB")->capture_default_str();
  app.add_option("--static", static_dir, "Directory of UI assets served under /");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    adaptoml::ServiceConfig cfg;
    cfg.root = root;
    cfg.workers = workers;
    cfg.threads_per_job = threads;
    cfg.max_upload_bytes = static_cast<std::size_t>(max_upload_mb * 1024 * 1024);
    if (!static_dir.empty()) cfg.static_dir = static_dir;
    adaptoml::Service service(cfg);
    g_service = &service;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cerr << "listening on http://" << host << ":" << port << "\n";
    service.run(host, port);
    g_service = nullptr;
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "adaptoml-service: " << e.what() << "\n";
    return 2;
  }
}
