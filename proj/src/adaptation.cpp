#include "adaptoml/adaptation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace adaptoml {

std::map<std::string, Dataset> partition_by_user(const Dataset& d, std::string_view per_col) {
  const auto col = d.schema().find(per_col);
  if (!col) throw DataError("personalization column '" + std::string(per_col) + "' not found");
  if (d.schema().label_column == per_col)
    throw ConfigError("personalization column '" + std::string(per_col) + "' is also the label column");
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < d.size(); ++i) groups[cell_text(d.at(i, *col))].push_back(i);
  std::map<std::string, Dataset> out;
  for (const auto& [user, rows] : groups) out.emplace(user, d.select_rows(rows).drop_column(per_col));
  return out;
}

const UserAdaptation* AdaptationResult::find(std::string_view user) const {
  for (const auto& u : users)
    if (u.user_id == user) return &u;
  return nullptr;
}

std::vector<std::string> AdaptationResult::warnings() const {
  std::vector<std::string> out;
  for (const auto& u : users)
    if (!u.warning.empty()) out.push_back(u.warning);
  return out;
}

namespace {

std::vector<std::pair<std::string, double>> score(const TrainedModel& m, const Matrix& x,
                                                  const std::vector<double>& y) {
  return score_predictions(m.task(), y, predict(m, x), m.n_classes());
}

IndexSplit user_split(const UserData& u, Task task, double test_frac, std::uint64_t seed) {
  std::vector<std::string> strata(u.y.size());
  std::map<double, std::size_t> counts;
  for (std::size_t i = 0; i < u.y.size(); ++i) {
    strata[i] = format_double(u.y[i]);
    ++counts[u.y[i]];
  }
  bool stratify = task == Task::classification;
  for (const auto& [cls, n] : counts) stratify = stratify && n >= 2;
  return split_indices(strata, test_frac, 0.0, seed, stratify);
}

}  // namespace

AdaptationResult adapt_models(const TrainedModel& base, const std::vector<UserData>& users,
                              const AdaptConfig& config) {
  if (!(config.user_train_frac >= 0.0 && config.user_train_frac <= 1.0))
    throw ConfigError("user_train_frac must be in [0, 1]");
  if (!base.fitted()) throw Error("adaptation needs a fitted base model");
  if (!base.spec().incremental_capable())
    throw CapabilityError(std::string(to_string(base.family())) + " cannot be adapted incrementally");

  AdaptationResult result;
  result.config = config;
  for (const auto& u : users) {
    UserAdaptation a;
    a.user_id = u.user_id;
    if (u.y.size() < 2) {
      a.skipped = true;
      a.warning = "user '" + u.user_id + "' skipped: " + std::to_string(u.y.size()) + " row(s), need at least 2";
      result.users.push_back(std::move(a));
      continue;
    }
    try {
      if (config.user_train_frac == 0.0) {
        // Nothing to learn from: every row is user-test, adapted = base.
        a.test_rows = u.y.size();
        a.adapted = clone(base);
        a.before = score(base, u.x, u.y);
        a.after = a.before;
      } else {
        const auto parts = user_split(u, base.task(), 1.0 - config.user_train_frac, config.seed);
        const Matrix x_train = u.x.select_rows(parts.train);
        std::vector<double> y_train;
        for (auto i : parts.train) y_train.push_back(u.y[i]);
        a.train_rows = parts.train.size();
        a.test_rows = parts.test.size();
        a.adapted = partial_fit(clone(base), x_train, y_train);
        if (!parts.test.empty()) {
          const Matrix x_test = u.x.select_rows(parts.test);
          std::vector<double> y_test;
          for (auto i : parts.test) y_test.push_back(u.y[i]);
          a.before = score(base, x_test, y_test);
          a.after = score(*a.adapted, x_test, y_test);
        } else {
          a.warning = "user '" + u.user_id + "' has no user-test rows; metrics not reported";
        }
      }
    } catch (const DataError& e) {
      a.skipped = true;
      a.adapted.reset();
      a.warning = "user '" + u.user_id + "' skipped: " + e.what();
    }
    result.users.push_back(std::move(a));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Sessions
// ---------------------------------------------------------------------------

const Checkpoint& SessionEntry::at(std::string_view name) const {
  for (const auto& c : checkpoints)
    if (c.name == name) return c;
  throw Error("session " + std::to_string(index) + " has no checkpoint '" + std::string(name) + "'");
}

std::vector<double> SessionReport::alpha(std::string_view checkpoint) const {
  std::vector<double> out;
  for (std::size_t i = 1; i < sessions.size(); ++i) out.push_back(sessions[i].at(checkpoint).accuracy());
  return out;
}

namespace {

Checkpoint evaluate(const TrainedModel& m, std::string name, const Matrix& x, const std::vector<double>& y) {
  Checkpoint c;
  c.name = std::move(name);
  c.y_true = y;
  c.y_pred = predict(m, x);
  if (m.task() == Task::classification)
    c.cls = classification_metrics(c.y_true, c.y_pred, m.n_classes());
  else
    c.reg = regression_metrics(c.y_true, c.y_pred);
  return c;
}

}  // namespace

SessionReport run_sessions(const TrainedModel& m0, const Matrix& base_x_test,
                           const std::vector<double>& base_y_test, const std::vector<SessionBatch>& batches) {
  if (batches.empty()) throw ConfigError("at least one session is required");
  if (!m0.spec().incremental_capable())
    throw CapabilityError(std::string(to_string(m0.family())) + " does not support incremental updates");
  if (base_x_test.empty()) throw DataError("sessions need a non-empty base test set");

  SessionReport report;
  report.task = m0.task();
  report.n_classes = m0.n_classes();

  SessionEntry s0;
  s0.index = 0;
  const auto base_eval = evaluate(m0, "base", base_x_test, base_y_test);
  for (const char* name : {"base", "new", "all"}) {
    auto c = base_eval;
    c.name = name;
    s0.checkpoints.push_back(std::move(c));
  }
  report.sessions.push_back(std::move(s0));

  TrainedModel model = m0;
  Matrix cum_x = base_x_test;
  std::vector<double> cum_y = base_y_test;
  for (std::size_t i = 0; i < batches.size(); ++i) {
    const auto& b = batches[i];
    if (b.x_train.empty() || b.x_test.empty())
      throw DataError("session " + std::to_string(i + 1) + " has an empty train or test part");
    model = partial_fit(model, b.x_train, b.y_train);
    cum_x = cum_x.vstack(b.x_test);
    cum_y.insert(cum_y.end(), b.y_test.begin(), b.y_test.end());
    SessionEntry s;
    s.index = i + 1;
    s.checkpoints.push_back(evaluate(model, "base", base_x_test, base_y_test));
    s.checkpoints.push_back(evaluate(model, "new", b.x_test, b.y_test));
    s.checkpoints.push_back(evaluate(model, "all", cum_x, cum_y));
    report.sessions.push_back(std::move(s));
  }
  report.final_model = std::move(model);
  return report;
}

OmegaMetrics kemker_metrics(const std::vector<double>& alpha_base, const std::vector<double>& alpha_new,
                            const std::vector<double>& alpha_all, double alpha_ideal) {
  if (alpha_base.empty()) throw ConfigError("kemker metrics need at least one session");
  if (alpha_new.size() != alpha_base.size() || alpha_all.size() != alpha_base.size())
    throw ConfigError("kemker metrics: accuracy lists differ in length");
  if (!(alpha_ideal > 0.0)) throw ConfigError("alpha_ideal must be > 0, got " + format_double(alpha_ideal));
  const double t = static_cast<double>(alpha_base.size());
  auto mean = [&](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / t; };
  OmegaMetrics m;
  m.alpha_ideal = alpha_ideal;
  m.omega_base = mean(alpha_base) / alpha_ideal;
  m.omega_new = mean(alpha_new);
  m.omega_all = mean(alpha_all) / alpha_ideal;
  for (double a : alpha_base) m.kemker_loss.push_back(1.0 - a / alpha_ideal);
  return m;
}

OmegaMetrics kemker_metrics(const SessionReport& r, std::optional<double> alpha_ideal) {
  if (r.task != Task::classification) throw ConfigError("kemker metrics are defined for classification only");
  if (r.session_count() == 0) throw ConfigError("kemker metrics need at least one session");
  const double ideal = alpha_ideal.value_or(r.sessions[0].at("base").accuracy());
  return kemker_metrics(r.alpha("base"), r.alpha("new"), r.alpha("all"), ideal);
}

std::vector<std::pair<std::size_t, std::size_t>> sequential_batches(std::size_t n, std::size_t sessions) {
  if (sessions == 0) throw ConfigError("session count must be >= 1");
  if (n < sessions)
    throw DataError("partial-fit data has " + std::to_string(n) + " rows, fewer than " + std::to_string(sessions) +
                    " sessions");
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t begin = 0;
  for (std::size_t s = 0; s < sessions; ++s) {
    const std::size_t len = n / sessions + (s < n % sessions ? 1 : 0);
    out.emplace_back(begin, begin + len);
    begin += len;
  }
  return out;
}

}  // namespace adaptoml
