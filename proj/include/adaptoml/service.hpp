#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "adaptoml/pipeline.hpp"

namespace adaptoml {

struct ServiceConfig {
  std::filesystem::path root = "adaptoml_service";  // datasets/ and jobs/ live here
  std::size_t max_upload_bytes = 64ull << 20;
  std::size_t workers = 1;  // jobs executed concurrently
  std::size_t threads_per_job = 1;
  std::optional<std::filesystem::path> static_dir;  // served under /
};

enum class JobState { queued, running, succeeded, failed };
std::string_view to_string(JobState s) noexcept;

struct JobRecord {
  std::string job_id;
  std::string config_json;  // as submitted (dataset refs, not paths)
  JobState state = JobState::queued;
  std::string stage;
  std::size_t done = 0;
  std::size_t total = 0;
  std::string error;
  std::vector<std::string> artifacts;
};

/// SHA-256 hex digest.
std::string sha256_hex(std::string_view bytes);

/// HTTP job service:
///   POST /api/datasets                    -> 201 {dataset_ref}
///   GET  /api/datasets/{ref}/schema       -> 200 | 404 | 422
///   POST /api/jobs                        -> 202 {job_id} | 422 {errors}
///   GET  /api/jobs/{id}                   -> 200 | 404
///   GET  /api/jobs/{id}/artifacts         -> 200 | 404 | 409
///   GET  /api/jobs/{id}/artifacts/{name}  -> file | 404 | 409
/// Jobs left queued or running by a previous process come back as failed
/// with error "interrupted".
class Service {
 public:
  explicit Service(ServiceConfig config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Bind and serve on a background thread; port 0 picks a free port.
  /// Returns the bound port. Throws Error when binding fails.
  int start(const std::string& host, int port);
  /// Bind and serve on the calling thread until stop().
  void run(const std::string& host, int port);
  void stop();

  std::optional<JobRecord> job(const std::string& id) const;
  /// Blocks until the job is succeeded or failed (or the timeout passes).
  std::optional<JobRecord> wait(const std::string& id, double timeout_seconds) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace adaptoml
