#pragma once

#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "adaptoml/dataset.hpp"
#include "adaptoml/models.hpp"
#include "adaptoml/reporting.hpp"

namespace adaptoml {

/// Rows grouped by personalization value (ordered by value). The
/// personalization column is dropped from every partition.
std::map<std::string, Dataset> partition_by_user(const Dataset& d, std::string_view per_col);

/// One user's data, already in the model's feature space.
struct UserData {
  std::string user_id;
  Matrix x;
  std::vector<double> y;
};

struct AdaptConfig {
  double user_train_frac = 0.5;
  std::uint64_t seed = 42;
};

struct UserAdaptation {
  std::string user_id;
  bool skipped = false;
  std::string warning;
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
  std::optional<TrainedModel> adapted;
  std::vector<std::pair<std::string, double>> before;  // base model on user-test
  std::vector<std::pair<std::string, double>> after;   // adapted model on user-test
};

struct AdaptationResult {
  AdaptConfig config;
  std::vector<UserAdaptation> users;  // input order

  const UserAdaptation* find(std::string_view user) const;
  std::vector<std::string> warnings() const;
};

/// Per user: seeded split into user-train / user-test (stratified by class
/// when every class has two or more rows), adapted = partial_fit(clone(base),
/// user-train), both models scored on user-test. `base` is never modified.
/// Users with fewer than two rows are skipped with a warning.
AdaptationResult adapt_models(const TrainedModel& base, const std::vector<UserData>& users,
                              const AdaptConfig& config);

// ---------------------------------------------------------------------------
// Sessions
// ---------------------------------------------------------------------------

struct SessionBatch {
  Matrix x_train;
  std::vector<double> y_train;
  Matrix x_test;
  std::vector<double> y_test;
};

/// Evaluation of one model on one test set.
struct Checkpoint {
  std::string name;  // base, new, all
  std::vector<double> y_true, y_pred;
  std::optional<ClassMetrics> cls;
  std::optional<RegMetrics> reg;

  double accuracy() const { return cls ? cls->accuracy : std::numeric_limits<double>::quiet_NaN(); }
};

struct SessionEntry {
  std::size_t index = 0;  // 0 = base model
  std::vector<Checkpoint> checkpoints;  // base, new, all

  const Checkpoint& at(std::string_view name) const;
};

struct SessionReport {
  Task task = Task::classification;
  std::size_t n_classes = 0;
  std::vector<SessionEntry> sessions;  // s0..sT
  std::optional<TrainedModel> final_model;

  std::size_t session_count() const { return sessions.empty() ? 0 : sessions.size() - 1; }
  std::vector<double> alpha(std::string_view checkpoint) const;  // sessions 1..T
};

/// s0 scores m0 on the base test set (all three checkpoints coincide). For
/// i >= 1, m_i = partial_fit(m_{i-1}, batch_i) scored on the base test set,
/// batch i's test rows, and the union of base and session tests 1..i.
SessionReport run_sessions(const TrainedModel& m0, const Matrix& base_x_test,
                           const std::vector<double>& base_y_test, const std::vector<SessionBatch>& batches);

struct OmegaMetrics {
  double omega_base = 0.0;
  double omega_new = 0.0;
  double omega_all = 0.0;
  double alpha_ideal = 0.0;
  std::vector<double> kemker_loss;  // sessions 1..T
};

/// alpha_ideal defaults to s0's base-test accuracy. Throws ConfigError for
/// alpha_ideal <= 0 or a report without sessions.
OmegaMetrics kemker_metrics(const SessionReport& r, std::optional<double> alpha_ideal = std::nullopt);

/// Closed form over raw accuracies (sessions 1..T).
OmegaMetrics kemker_metrics(const std::vector<double>& alpha_base, const std::vector<double>& alpha_new,
                            const std::vector<double>& alpha_all, double alpha_ideal);

/// Split `n` rows into `sessions` contiguous batches of near-equal size
/// (the first n % sessions batches get one extra row).
std::vector<std::pair<std::size_t, std::size_t>> sequential_batches(std::size_t n, std::size_t sessions);

}  // namespace adaptoml
