#include "adaptoml/search.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <thread>

namespace adaptoml {

std::string Candidate::hyperparams_text() const {
  const std::string norm = std::string("normalize=") + (normalize ? "on" : "off");
  const std::string rest = canonical_text(spec.hyperparameters);
  return rest.empty() ? norm : norm + ";" + rest;
}

std::vector<Hyperparams> default_family_grid(Family family) {
  std::vector<Hyperparams> grid;
  switch (family) {
    case Family::gaussian_nb: grid.push_back({}); break;
    case Family::knn_classifier:
    case Family::knn_regressor:
      for (double k : {1.0, 3.0, 5.0, 7.0}) grid.push_back({{"k", k}});
      break;
    case Family::sgd_classifier:
    case Family::sgd_regressor:
      for (double lr : {0.1, 0.01, 0.001})
        for (double l2 : {0.0, 1e-4}) grid.push_back({{"learning_rate", lr}, {"l2", l2}});
      break;
    case Family::decision_tree:
      for (double depth : {3.0, 5.0, 10.0}) grid.push_back({{"max_depth", depth}});
      break;
  }
  return grid;
}

std::vector<Candidate> default_grid(Task task, const std::vector<Family>& families,
                                    const std::vector<bool>& normalization, std::uint64_t seed) {
  if (families.empty()) throw ConfigError("no model families enabled");
  if (normalization.empty()) throw ConfigError("no normalization variant enabled");
  for (auto f : families)
    if (task_of(f) != task)
      throw ConfigError(std::string(to_string(f)) + " is not a " + std::string(to_string(task)) + " model");
  std::vector<Candidate> out;
  for (auto f : all_families()) {
    if (std::find(families.begin(), families.end(), f) == families.end()) continue;
    for (const auto& hp : default_family_grid(f))
      for (bool norm : normalization) out.push_back({out.size(), norm, ModelSpec::make(f, hp, seed)});
  }
  return out;
}

double CandidateResult::metric(std::string_view split, std::string_view name) const {
  const auto& values = split == "validation" ? validation : test;
  for (const auto& [k, v] : values)
    if (k == name) return v;
  return std::numeric_limits<double>::quiet_NaN();
}

std::optional<std::size_t> SearchResult::best_incremental() const {
  std::vector<double> scores;
  std::vector<bool> skip;
  for (const auto& r : results) {
    scores.push_back(r.validation_score);
    skip.push_back(r.failed || !r.candidate.spec.incremental_capable());
  }
  return argbest(scores, skip, criterion);
}

std::vector<ResultRow> SearchResult::rows(Task task) const {
  std::vector<std::string> names = metric_names(task);
  if (std::find(names.begin(), names.end(), criterion.name) == names.end()) names.push_back(criterion.name);
  std::vector<ResultRow> out;
  for (const auto& r : results)
    for (const char* split : {"validation", "test"})
      for (const auto& name : names)
        out.push_back({std::to_string(r.candidate.id), std::string(to_string(r.candidate.spec.family)),
                       r.candidate.hyperparams_text(), split, name,
                       r.failed ? std::numeric_limits<double>::quiet_NaN() : r.metric(split, name)});
  return out;
}

namespace {

double lookup(const std::vector<std::pair<std::string, double>>& values, const std::string& name) {
  for (const auto& [k, v] : values)
    if (k == name) return v;
  throw ConfigError("criterion '" + name + "' was not computed");
}

}  // namespace

CandidateResult evaluate_candidate(const Candidate& c, const PreparedData& data, const Criterion& criterion) {
  CandidateResult r;
  r.candidate = c;
  const auto start = std::chrono::steady_clock::now();
  try {
    Matrix x_train = data.x_train, x_val = data.x_val, x_test = data.x_test;
    if (c.normalize) {
      const auto norm = fit_normalizer(x_train);
      x_train = norm.transform(x_train);
      x_val = norm.transform(x_val);
      if (!x_test.empty()) x_test = norm.transform(x_test);
    }
    const auto model = fit(c.spec, x_train, data.y_train, data.feature_names,
                           data.task == Task::classification ? std::optional(data.n_classes) : std::nullopt);
    r.validation = score_predictions(data.task, data.y_val, predict(model, x_val), data.n_classes);
    r.validation_score = lookup(r.validation, criterion.name);
    if (!x_test.empty()) {
      r.test = score_predictions(data.task, data.y_test, predict(model, x_test), data.n_classes);
      r.test_score = lookup(r.test, criterion.name);
    } else {
      r.test_score = std::numeric_limits<double>::quiet_NaN();
    }
  } catch (const std::exception& e) {
    r.failed = true;
    r.error = "candidate " + std::to_string(c.id) + ": " + e.what();
    r.validation.clear();
    r.test.clear();
    r.validation_score = r.test_score = std::numeric_limits<double>::quiet_NaN();
  }
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

std::optional<std::size_t> argbest(const std::vector<double>& scores, const std::vector<bool>& skip,
                                   const Criterion& criterion) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if ((i < skip.size() && skip[i]) || std::isnan(scores[i])) continue;
    if (!best || criterion.better(scores[i], scores[*best])) best = i;
  }
  return best;
}

SearchResult grid_search(const PreparedData& data, const SearchConfig& config) {
  const auto& candidates = config.candidates;
  if (candidates.empty()) throw ConfigError("grid search needs at least one candidate");
  if (data.x_train.empty()) throw DataError("training split is empty");
  if (data.x_val.empty()) throw ConfigError("validation split is empty; increase val_frac");
  for (std::size_t i = 0; i < candidates.size(); ++i)
    if (candidates[i].id != i) throw ConfigError("candidate ids must be 0..n-1 in order");

  SearchResult result;
  result.criterion = config.criterion;
  result.results.resize(candidates.size());

  std::atomic<std::size_t> next{0};
  std::size_t done = 0;
  std::mutex progress_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < candidates.size(); i = next++) {
      result.results[i] = evaluate_candidate(candidates[i], data, config.criterion);
      std::lock_guard lock(progress_mutex);
      ++done;
      if (config.progress) config.progress(done, candidates.size());
    }
  };
  const std::size_t width = std::clamp<std::size_t>(config.threads, 1, candidates.size());
  if (width == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < width; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::vector<double> scores;
  std::vector<bool> skip;
  for (const auto& r : result.results) {
    scores.push_back(r.validation_score);
    skip.push_back(r.failed);
  }
  const auto best = argbest(scores, skip, config.criterion);
  if (!best) {
    std::string first_error;
    for (const auto& r : result.results)
      if (r.failed) {
        first_error = r.error;
        break;
      }
    throw TrainingError("all " + std::to_string(candidates.size()) + " candidates failed" +
                        (first_error.empty() ? std::string(" (no finite validation score)") : "; first: " + first_error));
  }
  result.best_id = *best;
  return result;
}

SelectedModel select_best(const SearchResult& r, const PreparedData& data, std::optional<std::size_t> id) {
  const auto& chosen = r.results.at(id.value_or(r.best_id));
  if (chosen.failed) throw TrainingError("cannot refit failed " + chosen.error);
  Matrix x = data.x_train.vstack(data.x_val);
  std::vector<double> y = data.y_train;
  y.insert(y.end(), data.y_val.begin(), data.y_val.end());
  std::optional<Normalizer> norm;
  if (chosen.candidate.normalize) {
    norm = fit_normalizer(x);
    x = norm->transform(x);
  }
  auto model = fit(chosen.candidate.spec, x, y, data.feature_names,
                   data.task == Task::classification ? std::optional(data.n_classes) : std::nullopt);
  return {chosen.candidate, std::move(norm), std::move(model)};
}

}  // namespace adaptoml
