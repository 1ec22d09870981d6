#include <doctest.h>

#include <httplib.h>
#include <json.hpp>

#include "adaptoml/service.hpp"
#include "support/testing.hpp"

using namespace adaptoml;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Running {
  testing::TempDir dir;
  std::unique_ptr<Service> service;
  int port = 0;

  explicit Running(std::size_t max_upload = 1 << 20) { start(max_upload); }

  void start(std::size_t max_upload = 1 << 20) {
    ServiceConfig cfg;
    cfg.root = dir / "root";
    cfg.max_upload_bytes = max_upload;
    service = std::make_unique<Service>(cfg);
    port = service->start("127.0.0.1", 0);
  }
  void restart() {
    service.reset();
    start();
  }
  httplib::Client client() const { return httplib::Client("127.0.0.1", port); }
};

std::string upload(httplib::Client& c, const std::string& body) {
  auto res = c.Post("/api/datasets", body, "text/csv");
  REQUIRE(res);
  REQUIRE(res->status == 201);
  return json::parse(res->body)["dataset_ref"].get<std::string>();
}

json job_config(const std::string& ref) {
  return {{"data_path", ref},
          {"label_column", "label"},
          {"personalization_column", "user"},
          {"task", "classification"},
          {"families", {"gaussian_nb"}}};
}

}  // namespace

TEST_SUITE("service") {

TEST_CASE("sha256 of known inputs") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("dataset upload and schema") {
  Running s;
  auto c = s.client();
  const std::string csv = testing::synthetic_csv(30, 2, true);
  const auto ref = upload(c, csv);
  CHECK(ref == sha256_hex(csv));
  CHECK(upload(c, csv) == ref);  // content addressed

  auto schema = c.Get("/api/datasets/" + ref + "/schema");
  REQUIRE(schema);
  CHECK(schema->status == 200);
  const auto j = json::parse(schema->body);
  CHECK(j["rows"] == 30);
  CHECK(j["columns"].size() == 5);
  CHECK(j["columns"][2]["kind"] == "categorical");
  CHECK(j["columns"][1]["missing"].get<int>() > 0);

  CHECK(c.Get("/api/datasets/" + std::string(64, 'a') + "/schema")->status == 404);
  CHECK(c.Get("/api/datasets/../schema")->status == 404);
  CHECK(c.Post("/api/datasets", "", "text/csv")->status == 400);
  const auto bad = upload(c, "a,b\n1\n");
  CHECK(c.Get("/api/datasets/" + bad + "/schema")->status == 422);
}

TEST_CASE("upload limit") {
  Running s(64);
  auto c = s.client();
  CHECK(c.Post("/api/datasets", std::string(65, 'x'), "text/csv")->status == 400);
  CHECK(c.Post("/api/datasets", std::string(64, 'x'), "text/csv")->status == 201);
}

TEST_CASE("job submission validates fields") {
  Running s;
  auto c = s.client();
  auto res = c.Post("/api/jobs", R"({"task": "classification"})", "application/json");
  REQUIRE(res);
  CHECK(res->status == 422);
  const auto j = json::parse(res->body);
  std::set<std::string> fields;
  for (const auto& e : j["errors"]) fields.insert(e["field"].get<std::string>());
  CHECK(fields.count("data_path"));
  CHECK(fields.count("label_column"));

  // Paths are not accepted, only dataset refs.
  auto cfg = job_config("/etc/passwd");
  res = c.Post("/api/jobs", cfg.dump(), "application/json");
  CHECK(res->status == 422);
  CHECK(res->body.find("data_path") != std::string::npos);

  cfg = job_config(upload(c, testing::synthetic_csv(40, 1)));
  cfg["normalization"] = "sometimes";
  CHECK(c.Post("/api/jobs", cfg.dump(), "application/json")->status == 422);
  CHECK(c.Post("/api/jobs", "not json", "application/json")->status == 422);
}

TEST_CASE("job lifecycle and artifacts") {
  Running s;
  auto c = s.client();
  const auto ref = upload(c, testing::synthetic_csv(60, 4));
  auto res = c.Post("/api/jobs", job_config(ref).dump(), "application/json");
  REQUIRE(res);
  REQUIRE(res->status == 202);
  const auto id = json::parse(res->body)["job_id"].get<std::string>();

  const auto done = s.service->wait(id, 60);
  REQUIRE(done);
  REQUIRE(done->state == JobState::succeeded);

  const auto status = json::parse(c.Get("/api/jobs/" + id)->body);
  CHECK(status["state"] == "succeeded");
  CHECK(status["config"]["data_path"] == ref);
  CHECK(status["progress"]["stage"] == "report");

  const auto list = json::parse(c.Get("/api/jobs/" + id + "/artifacts")->body);
  std::set<std::string> names;
  for (const auto& a : list["artifacts"]) names.insert(a["name"].get<std::string>());
  CHECK(names.count("results.csv"));
  CHECK(names.count("summary.txt"));

  auto csv = c.Get("/api/jobs/" + id + "/artifacts/results.csv");
  CHECK(csv->status == 200);
  CHECK(csv->get_header_value("Content-Type") == "text/csv");
  CHECK(csv->body.rfind("candidate_id,", 0) == 0);
  CHECK(c.Get("/api/jobs/" + id + "/artifacts/search_scores.svg")->get_header_value("Content-Type") ==
        "image/svg+xml");
  CHECK(c.Get("/api/jobs/" + id + "/artifacts/job.json")->status == 404);
  CHECK(c.Get("/api/jobs/" + id + "/artifacts/..%2Fjob.json")->status == 404);
  CHECK(c.Get("/api/jobs/nope")->status == 404);
  CHECK(c.Get("/api/jobs/nope/artifacts")->status == 404);
}

TEST_CASE("failed jobs report the stage error and refuse artifacts") {
  Running s;
  auto c = s.client();
  const auto ref = upload(c, "x,user,label\n1,u1,a\n2,u1,b\n");
  auto cfg = job_config(ref);
  auto res = c.Post("/api/jobs", cfg.dump(), "application/json");
  REQUIRE(res->status == 202);
  const auto id = json::parse(res->body)["job_id"].get<std::string>();
  const auto done = s.service->wait(id, 60);
  REQUIRE(done);
  CHECK(done->state == JobState::failed);
  CHECK_FALSE(done->error.empty());
  CHECK(c.Get("/api/jobs/" + id + "/artifacts")->status == 409);
  CHECK(c.Get("/api/jobs/" + id + "/artifacts/results.csv")->status == 409);
}

TEST_CASE("restart recovers finished jobs and fails interrupted ones") {
  Running s;
  auto c = s.client();
  const auto ref = upload(c, testing::synthetic_csv(40, 5));
  const auto id = json::parse(c.Post("/api/jobs", job_config(ref).dump(), "application/json")->body)["job_id"]
                      .get<std::string>();
  REQUIRE(s.service->wait(id, 60)->state == JobState::succeeded);

  // A record left behind by a process that died mid-run.
  const auto stale = s.dir / "root" / "jobs" / "deadbeef";
  fs::create_directories(stale);
  json rec = {{"job_id", "deadbeef"},
              {"state", "running"},
              {"config", job_config(ref)},
              {"progress", {{"stage", "fit"}, {"done", 3}, {"total", 10}}},
              {"error", ""},
              {"artifacts", json::array()}};
  testing::write_text(stale / "job.json", rec.dump());

  s.restart();
  auto c2 = s.client();
  CHECK(json::parse(c2.Get("/api/jobs/" + id)->body)["state"] == "succeeded");
  CHECK(c2.Get("/api/jobs/" + id + "/artifacts/results.csv")->status == 200);
  const auto j = json::parse(c2.Get("/api/jobs/deadbeef")->body);
  CHECK(j["state"] == "failed");
  CHECK(j["error"] == "interrupted");
  CHECK(json::parse(testing::read_text(stale / "job.json"))["state"] == "failed");
}

}  // TEST_SUITE
