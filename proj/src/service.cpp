#include "adaptoml/service.hpp"

#include <httplib.h>
#include <json.hpp>
#include <openssl/evp.h>

#include <condition_variable>
#include <deque>
#include <map>
#include <mutex>
#include <random>
#include <thread>

namespace adaptoml {

using nlohmann::json;
namespace fs = std::filesystem;

std::string_view to_string(JobState s) noexcept {
  switch (s) {
    case JobState::queued: return "queued";
    case JobState::running: return "running";
    case JobState::succeeded: return "succeeded";
    case JobState::failed: return "failed";
  }
  return "failed";
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

namespace {

JobState parse_state(const std::string& s) {
  if (s == "queued") return JobState::queued;
  if (s == "running") return JobState::running;
  if (s == "succeeded") return JobState::succeeded;
  return JobState::failed;
}

bool is_hex_token(std::string_view s, std::size_t len) {
  return s.size() == len && std::all_of(s.begin(), s.end(), [](char c) {
           return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
         });
}

std::string content_type(const fs::path& name) {
  const auto ext = name.extension().string();
  if (ext == ".csv") return "text/csv";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".json") return "application/json";
  if (ext == ".txt") return "text/plain; charset=utf-8";
  return "application/octet-stream";
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(2) + "\n", "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, {{"error", message}});
}

}  // namespace

struct Service::Impl {
  ServiceConfig cfg;
  httplib::Server server;
  std::thread listener;

  mutable std::mutex mutex;
  mutable std::condition_variable changed;
  std::map<std::string, JobRecord> jobs;
  std::map<std::string, PipelineConfig> resolved;  // job id -> runnable config
  std::deque<std::string> queue;
  std::vector<std::thread> workers;
  bool stopping = false;
  std::mt19937_64 ids{std::random_device{}()};

  explicit Impl(ServiceConfig c) : cfg(std::move(c)) {
    fs::create_directories(datasets_dir());
    fs::create_directories(jobs_dir());
    recover();
    routes();
    for (std::size_t i = 0; i < std::max<std::size_t>(1, cfg.workers); ++i) workers.emplace_back([this] { work(); });
  }

  ~Impl() {
    {
      std::lock_guard lock(mutex);
      stopping = true;
    }
    changed.notify_all();
    server.stop();
    if (listener.joinable()) listener.join();
    for (auto& w : workers) w.join();
  }

  fs::path datasets_dir() const { return cfg.root / "datasets"; }
  fs::path jobs_dir() const { return cfg.root / "jobs"; }
  fs::path dataset_path(const std::string& ref) const { return datasets_dir() / (ref + ".csv"); }
  fs::path job_dir(const std::string& id) const { return jobs_dir() / id; }
  fs::path out_dir(const std::string& id) const { return job_dir(id) / "out"; }

  // -- persistence of job records --------------------------------------------

  static json record_json(const JobRecord& r) {
    return {{"job_id", r.job_id},
            {"state", std::string(to_string(r.state))},
            {"config", json::parse(r.config_json)},
            {"progress", {{"stage", r.stage}, {"done", r.done}, {"total", r.total}}},
            {"error", r.error},
            {"artifacts", r.artifacts}};
  }

  void persist(const JobRecord& r) const {
    write_file_atomic(job_dir(r.job_id) / "job.json", record_json(r).dump(2) + "\n");
  }

  void recover() {
    for (const auto& entry : fs::directory_iterator(jobs_dir())) {
      const auto path = entry.path() / "job.json";
      if (!fs::exists(path)) continue;
      try {
        const auto j = json::parse(read_file(path));
        JobRecord r;
        r.job_id = j.at("job_id").get<std::string>();
        r.config_json = j.at("config").dump();
        r.state = parse_state(j.at("state").get<std::string>());
        r.stage = j.at("progress").at("stage").get<std::string>();
        r.done = j.at("progress").at("done").get<std::size_t>();
        r.total = j.at("progress").at("total").get<std::size_t>();
        r.error = j.at("error").get<std::string>();
        r.artifacts = j.at("artifacts").get<std::vector<std::string>>();
        if (r.state == JobState::queued || r.state == JobState::running) {
          r.state = JobState::failed;
          r.error = "interrupted";
          r.artifacts.clear();
          persist(r);
        }
        jobs.emplace(r.job_id, std::move(r));
      } catch (const std::exception&) {
        // Unreadable record: leave it on disk, do not serve it.
      }
    }
  }

  // -- worker -----------------------------------------------------------------

  void work() {
    for (;;) {
      std::string id;
      PipelineConfig config;
      {
        std::unique_lock lock(mutex);
        changed.wait(lock, [&] { return stopping || !queue.empty(); });
        if (stopping) return;
        id = queue.front();
        queue.pop_front();
        config = resolved.at(id);
        auto& r = jobs.at(id);
        r.state = JobState::running;
        persist(r);
      }
      changed.notify_all();

      RunOptions options;
      options.threads = cfg.threads_per_job;
      options.progress = [&](const Progress& p) {
        std::lock_guard lock(mutex);
        auto& r = jobs.at(id);
        r.stage = p.stage;
        r.done = p.done;
        r.total = p.total;
      };
      JobRecord final_state;
      try {
        const auto outputs = run_pipeline(config, options);
        std::lock_guard lock(mutex);
        auto& r = jobs.at(id);
        r.state = JobState::succeeded;
        r.artifacts.clear();
        for (const auto& f : outputs.files) r.artifacts.push_back(f.filename().string());
        final_state = r;
      } catch (const std::exception& e) {
        std::lock_guard lock(mutex);
        auto& r = jobs.at(id);
        r.state = JobState::failed;
        r.error = e.what();
        r.artifacts.clear();
        final_state = r;
      }
      {
        std::lock_guard lock(mutex);
        resolved.erase(id);
        persist(final_state);
      }
      changed.notify_all();
    }
  }

  // -- request handlers -----------------------------------------------------

  void routes() {
    server.set_payload_max_length(std::numeric_limits<std::size_t>::max());

    server.Post("/api/datasets", [this](const httplib::Request& req, httplib::Response& res) {
      if (req.body.empty()) return send_error(res, 400, "empty dataset body");
      if (req.body.size() > cfg.max_upload_bytes)
        return send_error(res, 400, "dataset exceeds the upload limit of " + std::to_string(cfg.max_upload_bytes) +
                                        " bytes");
      const auto ref = sha256_hex(req.body);
      const auto path = dataset_path(ref);
      if (!fs::exists(path)) write_file_atomic(path, req.body);
      send_json(res, 201, {{"dataset_ref", ref}, {"bytes", req.body.size()}});
    });

    server.Get(R"(/api/datasets/([^/]+)/schema)", [this](const httplib::Request& req, httplib::Response& res) {
      const std::string ref = req.matches[1];
      if (!is_hex_token(ref, 64) || !fs::exists(dataset_path(ref)))
        return send_error(res, 404, "unknown dataset '" + ref + "'");
      try {
        const Dataset d = load_csv(dataset_path(ref));
        json columns = json::array();
        for (const auto& c : d.schema().columns)
          columns.push_back({{"name", c.name}, {"kind", std::string(to_string(c.kind))}, {"missing", d.missing_count(*d.schema().find(c.name))}});
        send_json(res, 200, {{"dataset_ref", ref}, {"rows", d.size()}, {"columns", columns}});
      } catch (const Error& e) {
        send_error(res, 422, e.what());
      }
    });

    server.Post("/api/jobs", [this](const httplib::Request& req, httplib::Response& res) { submit(req, res); });

    server.Get(R"(/api/jobs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      const auto r = find(req.matches[1]);
      if (!r) return send_error(res, 404, "unknown job");
      send_json(res, 200, record_json(*r));
    });

    server.Get(R"(/api/jobs/([^/]+)/artifacts)", [this](const httplib::Request& req, httplib::Response& res) {
      const auto r = find(req.matches[1]);
      if (!r) return send_error(res, 404, "unknown job");
      if (r->state != JobState::succeeded)
        return send_error(res, 409, "job is " + std::string(to_string(r->state)) + "; artifacts are available after success");
      json list = json::array();
      for (const auto& name : r->artifacts) {
        const auto path = out_dir(r->job_id) / name;
        list.push_back({{"name", name},
                        {"content_type", content_type(name)},
                        {"bytes", fs::exists(path) ? fs::file_size(path) : 0}});
      }
      send_json(res, 200, {{"job_id", r->job_id}, {"artifacts", list}});
    });

    server.Get(R"(/api/jobs/([^/]+)/artifacts/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      const auto r = find(req.matches[1]);
      if (!r) return send_error(res, 404, "unknown job");
      if (r->state != JobState::succeeded)
        return send_error(res, 409, "job is " + std::string(to_string(r->state)));
      const std::string name = req.matches[2];
      // Only names the job itself listed are served, which rules out traversal.
      if (std::find(r->artifacts.begin(), r->artifacts.end(), name) == r->artifacts.end())
        return send_error(res, 404, "unknown artifact '" + name + "'");
      try {
        res.status = 200;
        res.set_content(read_file(out_dir(r->job_id) / name), content_type(name));
      } catch (const Error& e) {
        send_error(res, 404, e.what());
      }
    });

    if (cfg.static_dir) server.set_mount_point("/", cfg.static_dir->string());
  }

  std::optional<JobRecord> find(const std::string& id) const {
    std::lock_guard lock(mutex);
    auto it = jobs.find(id);
    if (it == jobs.end()) return std::nullopt;
    return it->second;
  }

  void submit(const httplib::Request& req, httplib::Response& res) {
    PipelineConfig config;
    try {
      config = config_from_json(req.body);
    } catch (const ConfigValidationError& e) {
      return reject(res, e.errors());
    }
    std::vector<FieldError> errors;
    auto resolve = [&](const char* field, std::string& value) {
      if (value.empty()) return;
      if (!is_hex_token(value, 64) || !fs::exists(dataset_path(value))) {
        errors.push_back({field, "unknown dataset ref '" + value + "' (upload it via POST /api/datasets)"});
        return;
      }
      value = dataset_path(value).string();
    };
    PipelineConfig runnable = config;
    resolve("data_path", runnable.data_path);
    resolve("predict_path", runnable.predict_path);
    resolve("partial_fit_path", runnable.partial_fit_path);
    for (auto& p : runnable.model_paths) resolve("model_paths", p);
    for (auto& e : validation_errors(runnable))
      if (std::none_of(errors.begin(), errors.end(), [&](const FieldError& f) { return f.field == e.field; }))
        errors.push_back(std::move(e));
    if (!errors.empty()) return reject(res, errors);

    JobRecord r;
    {
      std::lock_guard lock(mutex);
      do {
        r.job_id = to_hex(ids()) + to_hex(ids());
      } while (jobs.contains(r.job_id));
    }
    runnable.out_dir = out_dir(r.job_id).string();
    r.config_json = config_to_json(config);
    fs::create_directories(out_dir(r.job_id));
    {
      std::lock_guard lock(mutex);
      persist(r);
      jobs.emplace(r.job_id, r);
      resolved.emplace(r.job_id, std::move(runnable));
      queue.push_back(r.job_id);
    }
    changed.notify_all();
    send_json(res, 202, {{"job_id", r.job_id}, {"state", "queued"}});
  }

  static void reject(httplib::Response& res, const std::vector<FieldError>& errors) {
    json list = json::array();
    for (const auto& e : errors) list.push_back({{"field", e.field}, {"message", e.message}});
    send_json(res, 422, {{"error", "invalid configuration"}, {"errors", list}});
  }
};

Service::Service(ServiceConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}
Service::~Service() = default;

int Service::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) bound = impl_->server.bind_to_any_port(host);
  else if (!impl_->server.bind_to_port(host, port)) bound = -1;
  if (bound < 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
  impl_->listener = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void Service::run(const std::string& host, int port) {
  if (!impl_->server.bind_to_port(host, port)) throw Error("cannot bind " + host + ":" + std::to_string(port));
  impl_->server.listen_after_bind();
}

void Service::stop() { impl_->server.stop(); }

std::optional<JobRecord> Service::job(const std::string& id) const { return impl_->find(id); }

std::optional<JobRecord> Service::wait(const std::string& id, double timeout_seconds) const {
  std::unique_lock lock(impl_->mutex);
  impl_->changed.wait_for(lock, std::chrono::duration<double>(timeout_seconds), [&] {
    auto it = impl_->jobs.find(id);
    return it == impl_->jobs.end() || it->second.state == JobState::succeeded || it->second.state == JobState::failed;
  });
  auto it = impl_->jobs.find(id);
  if (it == impl_->jobs.end()) return std::nullopt;
  return it->second;
}

}  // namespace adaptoml
