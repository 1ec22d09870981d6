#include "adaptoml/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "adaptoml/simd/kernels.hpp"

namespace adaptoml {

// ---------------------------------------------------------------------------
// Families and specs
// ---------------------------------------------------------------------------

std::string_view to_string(Family family) noexcept {
  switch (family) {
    case Family::gaussian_nb: return "gaussian_nb";
    case Family::sgd_classifier: return "sgd_classifier";
    case Family::knn_classifier: return "knn_classifier";
    case Family::decision_tree: return "decision_tree";
    case Family::sgd_regressor: return "sgd_regressor";
    case Family::knn_regressor: return "knn_regressor";
  }
  return "unknown";
}

const std::vector<Family>& all_families() {
  static const std::vector<Family> families{Family::gaussian_nb,   Family::sgd_classifier,
                                            Family::knn_classifier, Family::decision_tree,
                                            Family::sgd_regressor,  Family::knn_regressor};
  return families;
}

Family parse_family(std::string_view text) {
  for (auto f : all_families())
    if (to_string(f) == text) return f;
  std::vector<std::string> names;
  for (auto f : all_families()) names.emplace_back(to_string(f));
  throw ConfigError("unknown model family '" + std::string(text) + "' (expected one of " +
                    join(names, ", ") + ")");
}

Task task_of(Family family) noexcept {
  return family == Family::sgd_regressor || family == Family::knn_regressor ? Task::regression
                                                                            : Task::classification;
}

bool incremental_capable(Family family) noexcept { return family != Family::decision_tree; }

std::string canonical_text(const Hyperparams& params) {
  std::vector<std::string> parts;
  for (const auto& [k, v] : params) parts.push_back(k + "=" + format_double(v));
  return join(parts, ";");
}

namespace {

Hyperparams defaults_for(Family family) {
  switch (family) {
    case Family::gaussian_nb: return {{"var_smoothing", 1e-9}};
    case Family::sgd_classifier:
    case Family::sgd_regressor: return {{"epochs", 100}, {"l2", 0.0}, {"learning_rate", 0.01}};
    case Family::knn_classifier:
    case Family::knn_regressor: return {{"k", 5}};
    case Family::decision_tree: return {{"max_depth", 5}, {"min_samples_split", 2}};
  }
  return {};
}

bool is_whole(double v) { return std::isfinite(v) && std::floor(v) == v; }

}  // namespace

ModelSpec ModelSpec::make(Family family, const Hyperparams& overrides, std::uint64_t seed) {
  ModelSpec spec{family, defaults_for(family), seed};
  for (const auto& [k, v] : overrides) spec.hyperparameters[k] = v;
  spec.validate();
  return spec;
}

double ModelSpec::param(std::string_view name) const {
  if (auto it = hyperparameters.find(std::string(name)); it != hyperparameters.end()) return it->second;
  const auto defaults = defaults_for(family);
  if (auto it = defaults.find(std::string(name)); it != defaults.end()) return it->second;
  throw ConfigError(std::string(to_string(family)) + " has no hyperparameter '" + std::string(name) + "'");
}

void ModelSpec::validate() const {
  const auto defaults = defaults_for(family);
  for (const auto& [k, v] : hyperparameters) {
    if (!defaults.contains(k))
      throw ConfigError(std::string(to_string(family)) + ": unknown hyperparameter '" + k + "'");
    if (!std::isfinite(v)) throw ConfigError(std::string(to_string(family)) + ": " + k + " must be finite");
  }
  auto fail = [&](const std::string& what) {
    throw ConfigError(std::string(to_string(family)) + ": " + what);
  };
  switch (family) {
    case Family::gaussian_nb:
      if (param("var_smoothing") < 0) fail("var_smoothing must be >= 0");
      break;
    case Family::sgd_classifier:
    case Family::sgd_regressor:
      if (!(param("learning_rate") > 0)) fail("learning_rate must be > 0");
      if (param("l2") < 0) fail("l2 must be >= 0");
      if (!is_whole(param("epochs")) || param("epochs") < 1) fail("epochs must be an integer >= 1");
      break;
    case Family::knn_classifier:
    case Family::knn_regressor:
      if (!is_whole(param("k")) || param("k") < 1) fail("k must be an integer >= 1");
      break;
    case Family::decision_tree:
      if (!is_whole(param("max_depth")) || param("max_depth") < 1) fail("max_depth must be an integer >= 1");
      if (!is_whole(param("min_samples_split")) || param("min_samples_split") < 2)
        fail("min_samples_split must be an integer >= 2");
      break;
  }
}

std::uint64_t feature_signature(const std::vector<std::string>& names) {
  std::uint64_t h = fnv1a64("");
  for (const auto& n : names) {
    h = fnv1a64(n, h);
    h = fnv1a64("\x1f", h);
  }
  return h;
}

// ---------------------------------------------------------------------------
// Naive Bayes statistics
// ---------------------------------------------------------------------------

std::vector<double> NaiveBayesParams::priors() const {
  std::vector<double> out(class_count.size(), 0.0);
  if (total_count > 0)
    for (std::size_t c = 0; c < out.size(); ++c) out[c] = class_count[c] / total_count;
  return out;
}

Matrix NaiveBayesParams::variances() const {
  Matrix out(m2.rows(), m2.cols());
  for (std::size_t c = 0; c < m2.rows(); ++c)
    for (std::size_t j = 0; j < m2.cols(); ++j)
      out(c, j) = class_count[c] > 0 ? m2(c, j) / class_count[c] : 0.0;
  return out;
}

double NaiveBayesParams::epsilon(double var_smoothing) const {
  double max_var = 0.0;
  if (total_count > 0)
    for (double m : feature_m2) max_var = std::max(max_var, m / total_count);
  const double eps = var_smoothing * max_var;
  // All features constant: fall back to an absolute floor.
  return eps > 0 ? eps : std::max(var_smoothing, 1e-300);
}

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

struct ModelAccess {
  static TrainedModel& mark_fitted(TrainedModel& m) {
    m.fitted_ = true;
    return m;
  }
  static ModelParams& params(TrainedModel& m) { return m.params_; }
};

namespace {

std::vector<std::string> default_names(std::size_t d) {
  std::vector<std::string> out;
  for (std::size_t j = 0; j < d; ++j) out.push_back("x" + std::to_string(j));
  return out;
}

std::size_t linear_outputs(Task task, std::size_t n_classes) {
  if (task == Task::regression) return 1;
  if (n_classes <= 1) return 0;
  return n_classes == 2 ? 1 : n_classes;
}

ModelParams empty_params(Family family, std::size_t d, std::size_t n_classes) {
  switch (family) {
    case Family::gaussian_nb: {
      NaiveBayesParams nb;
      nb.class_count.assign(n_classes, 0.0);
      nb.mean = Matrix(n_classes, d);
      nb.m2 = Matrix(n_classes, d);
      nb.feature_mean.assign(d, 0.0);
      nb.feature_m2.assign(d, 0.0);
      return nb;
    }
    case Family::sgd_classifier:
    case Family::sgd_regressor: {
      const std::size_t outputs = linear_outputs(task_of(family), n_classes);
      return LinearParams{Matrix(outputs, d), std::vector<double>(outputs, 0.0)};
    }
    case Family::knn_classifier:
    case Family::knn_regressor: return KnnParams{Matrix(0, d), {}};
    case Family::decision_tree: return TreeParams{};
  }
  return TreeParams{};
}

void check_inputs(const TrainedModel& m, const Matrix& x, std::span<const double> y) {
  if (x.rows() == 0) throw DataError("training matrix is empty");
  if (x.rows() != y.size())
    throw DataError("X has " + std::to_string(x.rows()) + " rows but y has " + std::to_string(y.size()));
  if (x.cols() != m.feature_names().size())
    throw SignatureError("model expects " + std::to_string(m.feature_names().size()) +
                         " features, got " + std::to_string(x.cols()));
  if (!x.all_finite()) throw DataError("training matrix contains NaN or infinite values");
  for (double v : y) {
    if (!std::isfinite(v)) throw DataError("targets contain NaN or infinite values");
    if (m.task() == Task::classification) {
      if (v < 0 || std::floor(v) != v) throw DataError("class targets must be non-negative integers");
      if (v >= static_cast<double>(m.n_classes()))
        throw DataError("unknown class index " + format_double(v) + " (model knows " +
                        std::to_string(m.n_classes()) + " classes)");
    }
  }
}

}  // namespace

TrainedModel TrainedModel::untrained(ModelSpec spec, std::vector<std::string> feature_names,
                                     std::size_t n_classes) {
  spec.validate();
  if (feature_names.empty()) throw DataError("a model needs at least one feature");
  if (spec.task() == Task::classification && n_classes == 0)
    throw ConfigError("classifier needs the full class list on first use");
  if (spec.task() == Task::regression) n_classes = 0;
  TrainedModel m;
  m.params_ = empty_params(spec.family, feature_names.size(), n_classes);
  m.spec_ = std::move(spec);
  m.feature_names_ = std::move(feature_names);
  m.n_classes_ = n_classes;
  return m;
}

TrainedModel TrainedModel::restore(ModelSpec spec, std::vector<std::string> feature_names,
                                   std::size_t n_classes, ModelParams params) {
  TrainedModel m = untrained(std::move(spec), std::move(feature_names), n_classes);
  const std::size_t d = m.feature_names_.size();
  const std::size_t k = m.n_classes_;
  auto bad = [&](const std::string& what) {
    throw FormatError(std::string(to_string(m.family())) + " parameters: " + what);
  };
  const bool matches = std::visit(
      [&](const auto& p) { return std::holds_alternative<std::decay_t<decltype(p)>>(m.params_); }, params);
  if (!matches) bad("parameter block does not match the family");

  if (const auto* nb = std::get_if<NaiveBayesParams>(&params)) {
    if (nb->class_count.size() != k || nb->mean.rows() != k || nb->mean.cols() != d ||
        nb->m2.rows() != k || nb->m2.cols() != d || nb->feature_mean.size() != d ||
        nb->feature_m2.size() != d)
      bad("shape mismatch");
  } else if (const auto* lin = std::get_if<LinearParams>(&params)) {
    const std::size_t outputs = linear_outputs(m.task(), k);
    if (lin->weights.rows() != outputs || (outputs && lin->weights.cols() != d) || lin->bias.size() != outputs)
      bad("shape mismatch");
  } else if (const auto* knn = std::get_if<KnnParams>(&params)) {
    if (knn->rows.rows() != knn->targets.size() || (knn->rows.rows() && knn->rows.cols() != d))
      bad("shape mismatch");
    if (knn->rows.rows() == 0) bad("no stored rows");
    if (m.task() == Task::classification)
      for (double t : knn->targets)
        if (t < 0 || t >= static_cast<double>(k) || std::floor(t) != t) bad("target outside class list");
  } else if (const auto* tree = std::get_if<TreeParams>(&params)) {
    if (tree->nodes.empty()) bad("empty tree");
    const int n = static_cast<int>(tree->nodes.size());
    std::vector<int> parents(tree->nodes.size(), 0);
    for (const auto& node : tree->nodes) {
      if (node.leaf()) {
        if (node.value < 0 || node.value >= static_cast<double>(k)) bad("leaf class outside class list");
        continue;
      }
      if (node.feature >= static_cast<int>(d)) bad("split feature out of range");
      if (node.left <= 0 || node.left >= n || node.right <= 0 || node.right >= n) bad("child index out of range");
      ++parents[static_cast<std::size_t>(node.left)];
      ++parents[static_cast<std::size_t>(node.right)];
    }
    for (std::size_t i = 1; i < parents.size(); ++i)
      if (parents[i] != 1) bad("nodes do not form a single rooted tree");
    if (parents[0] != 0) bad("root has a parent");
  }
  m.params_ = std::move(params);
  m.fitted_ = true;
  return m;
}

// ---------------------------------------------------------------------------
// Naive Bayes
// ---------------------------------------------------------------------------

namespace {

struct RunningStats {
  double n = 0.0;
  std::vector<double> mean;
  std::vector<double> m2;
};

/// Chan et al. pairwise merge of (n, mean, M2) summaries.
void merge_stats(double& n_a, std::span<double> mean_a, std::span<double> m2_a, const RunningStats& b) {
  if (b.n == 0) return;
  if (n_a == 0) {
    n_a = b.n;
    std::copy(b.mean.begin(), b.mean.end(), mean_a.begin());
    std::copy(b.m2.begin(), b.m2.end(), m2_a.begin());
    return;
  }
  const double n = n_a + b.n;
  for (std::size_t j = 0; j < mean_a.size(); ++j) {
    const double delta = b.mean[j] - mean_a[j];
    mean_a[j] += delta * (b.n / n);
    m2_a[j] += b.m2[j] + delta * delta * (n_a * b.n / n);
  }
  n_a = n;
}

RunningStats batch_stats(const Matrix& x, const std::vector<std::size_t>& rows) {
  RunningStats s;
  const std::size_t d = x.cols();
  s.n = static_cast<double>(rows.size());
  s.mean.assign(d, 0.0);
  s.m2.assign(d, 0.0);
  if (rows.empty()) return s;
  for (auto i : rows)
    for (std::size_t j = 0; j < d; ++j) s.mean[j] += x(i, j);
  for (auto& m : s.mean) m /= s.n;
  for (auto i : rows)
    for (std::size_t j = 0; j < d; ++j) {
      const double dev = x(i, j) - s.mean[j];
      s.m2[j] += dev * dev;
    }
  return s;
}

void nb_update(NaiveBayesParams& nb, const Matrix& x, std::span<const double> y) {
  const std::size_t k = nb.class_count.size();
  std::vector<std::vector<std::size_t>> by_class(k);
  std::vector<std::size_t> all(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    by_class[static_cast<std::size_t>(y[i])].push_back(i);
    all[i] = i;
  }
  for (std::size_t c = 0; c < k; ++c)
    merge_stats(nb.class_count[c], nb.mean.row(c), nb.m2.row(c), batch_stats(x, by_class[c]));
  merge_stats(nb.total_count, nb.feature_mean, nb.feature_m2, batch_stats(x, all));
}

std::vector<double> nb_predict(const TrainedModel& m, const NaiveBayesParams& nb, const Matrix& x) {
  const std::size_t k = nb.class_count.size(), d = x.cols();
  const double eps = nb.epsilon(m.spec().param("var_smoothing"));
  const auto priors = nb.priors();
  Matrix inv_var(k, d);
  std::vector<double> base(k, -std::numeric_limits<double>::infinity());
  for (std::size_t c = 0; c < k; ++c) {
    if (nb.class_count[c] <= 0) continue;
    double log_norm = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double var = nb.m2(c, j) / nb.class_count[c] + eps;
      inv_var(c, j) = 1.0 / var;
      log_norm += std::log(2.0 * std::numbers::pi * var);
    }
    base[c] = std::log(priors[c]) - 0.5 * log_norm;
  }
  const auto& kern = simd::active();
  std::vector<double> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    std::size_t best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t c = 0; c < k; ++c) {
      if (nb.class_count[c] <= 0) continue;
      const double score =
          base[c] - 0.5 * kern.weighted_squared_distance(x.row(i).data(), nb.mean.row(c).data(),
                                                          inv_var.row(c).data(), d);
      if (!any || score > best_score) {
        best = c;
        best_score = score;
        any = true;
      }
    }
    out[i] = static_cast<double>(best);
  }
  return out;
}

// ---------------------------------------------------------------------------
// SGD (logistic / squared loss)
// ---------------------------------------------------------------------------

double sigmoid(double u) {
  if (u >= 0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

void sgd_step(const TrainedModel& m, LinearParams& lin, std::span<const double> row, double target) {
  const auto& kern = simd::active();
  const double lr = m.spec().param("learning_rate");
  const double decay = 1.0 - lr * m.spec().param("l2");
  const std::size_t d = row.size();
  const std::size_t outputs = lin.weights.rows();
  for (std::size_t o = 0; o < outputs; ++o) {
    double* w = lin.weights.row(o).data();
    const double z = kern.dot(w, row.data(), d) + lin.bias[o];
    double g;
    if (m.task() == Task::regression) {
      g = z - target;
    } else {
      // Binary: the single row scores class 1. One-vs-rest otherwise.
      const bool positive = outputs == 1 ? target == 1.0 : target == static_cast<double>(o);
      const double t = positive ? 1.0 : -1.0;
      g = -t * sigmoid(-t * z);
    }
    kern.axpby(-lr * g, row.data(), decay, w, d);
    lin.bias[o] -= lr * g;
  }
}

void check_finite(const LinearParams& lin) {
  bool ok = lin.weights.all_finite();
  for (double b : lin.bias) ok = ok && std::isfinite(b);
  if (!ok) throw TrainingError("SGD diverged (non-finite weights); try a smaller learning rate or normalization");
}

std::vector<double> sgd_predict(const TrainedModel& m, const LinearParams& lin, const Matrix& x) {
  const auto& kern = simd::active();
  const std::size_t outputs = lin.weights.rows(), d = x.cols();
  std::vector<double> out(x.rows(), 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    if (m.task() == Task::regression) {
      out[i] = kern.dot(lin.weights.row(0).data(), x.row(i).data(), d) + lin.bias[0];
    } else if (outputs == 1) {
      const double z = kern.dot(lin.weights.row(0).data(), x.row(i).data(), d) + lin.bias[0];
      out[i] = z > 0 ? 1.0 : 0.0;
    } else if (outputs > 1) {
      std::size_t best = 0;
      double best_z = -std::numeric_limits<double>::infinity();
      for (std::size_t o = 0; o < outputs; ++o) {
        const double z = kern.dot(lin.weights.row(o).data(), x.row(i).data(), d) + lin.bias[o];
        if (z > best_z) {
          best_z = z;
          best = o;
        }
      }
      out[i] = static_cast<double>(best);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// k nearest neighbours
// ---------------------------------------------------------------------------

std::vector<double> knn_predict(const TrainedModel& m, const KnnParams& knn, const Matrix& x) {
  const auto& kern = simd::active();
  const std::size_t stored = knn.rows.rows(), d = x.cols();
  const std::size_t k = std::min(stored, static_cast<std::size_t>(m.spec().param("k")));
  std::vector<std::pair<double, std::size_t>> dist(stored);
  std::vector<double> out(x.rows());
  std::vector<std::size_t> votes(std::max<std::size_t>(m.n_classes(), 1));
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t r = 0; r < stored; ++r)
      dist[r] = {kern.squared_distance(x.row(i).data(), knn.rows.row(r).data(), d), r};
    // Pair ordering breaks distance ties by the lower stored-row index.
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    if (m.task() == Task::regression) {
      double sum = 0.0;
      for (std::size_t n = 0; n < k; ++n) sum += knn.targets[dist[n].second];
      out[i] = sum / static_cast<double>(k);
    } else {
      std::fill(votes.begin(), votes.end(), 0);
      for (std::size_t n = 0; n < k; ++n) ++votes[static_cast<std::size_t>(knn.targets[dist[n].second])];
      out[i] = static_cast<double>(std::max_element(votes.begin(), votes.end()) - votes.begin());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// CART (Gini)
// ---------------------------------------------------------------------------

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, std::span<const double> y, std::size_t n_classes, int max_depth,
              std::size_t min_split)
      : x_(x), y_(y), k_(n_classes), max_depth_(max_depth), min_split_(min_split) {}

  TreeParams build() {
    std::vector<std::size_t> rows(x_.rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    TreeParams tree;
    tree.nodes.emplace_back();
    grow(tree, 0, rows, 0);
    return tree;
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double impurity = std::numeric_limits<double>::infinity();
  };

  static double gini_sum(const std::vector<double>& counts, double n) {
    // n * gini = n - sum(c^2) / n
    if (n == 0) return 0.0;
    double sq = 0.0;
    for (double c : counts) sq += c * c;
    return n - sq / n;
  }

  std::vector<double> class_counts(const std::vector<std::size_t>& rows) const {
    std::vector<double> counts(k_, 0.0);
    for (auto i : rows) counts[static_cast<std::size_t>(y_[i])] += 1.0;
    return counts;
  }

  Split best_split(const std::vector<std::size_t>& rows) const {
    Split best;
    const double n = static_cast<double>(rows.size());
    std::vector<std::size_t> order = rows;
    for (std::size_t j = 0; j < x_.cols(); ++j) {
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return x_(a, j) < x_(b, j) || (x_(a, j) == x_(b, j) && a < b);
      });
      std::vector<double> left(k_, 0.0);
      std::vector<double> right = class_counts(rows);
      for (std::size_t p = 0; p + 1 < order.size(); ++p) {
        const auto cls = static_cast<std::size_t>(y_[order[p]]);
        left[cls] += 1.0;
        right[cls] -= 1.0;
        const double here = x_(order[p], j), next = x_(order[p + 1], j);
        if (here == next) continue;
        const double nl = static_cast<double>(p + 1);
        const double impurity = (gini_sum(left, nl) + gini_sum(right, n - nl)) / n;
        // Strict improvement keeps the earliest (feature, threshold) on ties.
        if (impurity < best.impurity - 1e-12) {
          best.feature = static_cast<int>(j);
          best.threshold = here + (next - here) / 2.0;
          best.impurity = impurity;
        }
      }
    }
    return best;
  }

  void grow(TreeParams& tree, std::size_t node, const std::vector<std::size_t>& rows, int depth) {
    const auto counts = class_counts(rows);
    const auto majority = static_cast<double>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    const bool pure = std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0; }) <= 1;
    tree.nodes[node].value = majority;
    if (pure || depth >= max_depth_ || rows.size() < min_split_) return;
    const Split split = best_split(rows);
    if (split.feature < 0) return;

    std::vector<std::size_t> left_rows, right_rows;
    for (auto i : rows) (x_(i, static_cast<std::size_t>(split.feature)) <= split.threshold ? left_rows : right_rows).push_back(i);

    const auto left = tree.nodes.size();
    tree.nodes.emplace_back();
    const auto right = tree.nodes.size();
    tree.nodes.emplace_back();
    tree.nodes[node].feature = split.feature;
    tree.nodes[node].threshold = split.threshold;
    tree.nodes[node].left = static_cast<int>(left);
    tree.nodes[node].right = static_cast<int>(right);
    grow(tree, left, left_rows, depth + 1);
    grow(tree, right, right_rows, depth + 1);
  }

  const Matrix& x_;
  std::span<const double> y_;
  std::size_t k_;
  int max_depth_;
  std::size_t min_split_;
};

std::vector<double> tree_predict(const TreeParams& tree, const Matrix& x) {
  std::vector<double> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    std::size_t n = 0;
    while (!tree.nodes[n].leaf()) {
      const auto& node = tree.nodes[n];
      n = static_cast<std::size_t>(x(i, static_cast<std::size_t>(node.feature)) <= node.threshold ? node.left
                                                                                                 : node.right);
    }
    out[i] = tree.nodes[n].value;
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Public entry points
// ---------------------------------------------------------------------------

TrainedModel fit(const ModelSpec& spec, const Matrix& x, std::span<const double> y,
                 std::vector<std::string> feature_names, std::optional<std::size_t> n_classes) {
  if (x.rows() == 0) throw DataError("training matrix is empty");
  if (feature_names.empty()) feature_names = default_names(x.cols());
  std::size_t k = 0;
  if (spec.task() == Task::classification) {
    if (n_classes) k = *n_classes;
    else
      for (double v : y) k = std::max(k, static_cast<std::size_t>(std::max(0.0, v)) + 1);
  }
  TrainedModel m = TrainedModel::untrained(spec, std::move(feature_names), k);
  check_inputs(m, x, y);
  ModelParams& params = ModelAccess::params(m);

  switch (spec.family) {
    case Family::gaussian_nb: nb_update(std::get<NaiveBayesParams>(params), x, y); break;
    case Family::sgd_classifier:
    case Family::sgd_regressor: {
      auto& lin = std::get<LinearParams>(params);
      Rng rng(spec.seed);
      std::vector<std::size_t> order(x.rows());
      const auto epochs = static_cast<std::size_t>(spec.param("epochs"));
      for (std::size_t e = 0; e < epochs; ++e) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        rng.shuffle(std::span<std::size_t>(order));
        for (auto i : order) sgd_step(m, lin, x.row(i), y[i]);
      }
      check_finite(lin);
      break;
    }
    case Family::knn_classifier:
    case Family::knn_regressor: {
      auto& knn = std::get<KnnParams>(params);
      knn.rows = x;
      knn.targets.assign(y.begin(), y.end());
      break;
    }
    case Family::decision_tree: {
      TreeBuilder builder(x, y, k, static_cast<int>(spec.param("max_depth")),
                          static_cast<std::size_t>(spec.param("min_samples_split")));
      params = builder.build();
      break;
    }
  }
  return ModelAccess::mark_fitted(m);
}

TrainedModel partial_fit(const TrainedModel& m, const Matrix& x, std::span<const double> y,
                         std::optional<std::size_t> n_classes) {
  if (!m.spec().incremental_capable())
    throw CapabilityError(std::string(to_string(m.family())) + " does not support incremental updates");
  if (n_classes && m.task() == Task::classification && *n_classes != m.n_classes())
    throw DataError("class list (" + std::to_string(*n_classes) + ") differs from the model's (" +
                    std::to_string(m.n_classes()) + ")");
  TrainedModel out = m;
  check_inputs(out, x, y);
  ModelParams& params = ModelAccess::params(out);
  switch (m.family()) {
    case Family::gaussian_nb: nb_update(std::get<NaiveBayesParams>(params), x, y); break;
    case Family::sgd_classifier:
    case Family::sgd_regressor: {
      auto& lin = std::get<LinearParams>(params);
      for (std::size_t i = 0; i < x.rows(); ++i) sgd_step(out, lin, x.row(i), y[i]);
      check_finite(lin);
      break;
    }
    case Family::knn_classifier:
    case Family::knn_regressor: {
      auto& knn = std::get<KnnParams>(params);
      knn.rows = knn.rows.vstack(x);
      knn.targets.insert(knn.targets.end(), y.begin(), y.end());
      break;
    }
    case Family::decision_tree: break;
  }
  return ModelAccess::mark_fitted(out);
}

std::vector<double> predict(const TrainedModel& m, const Matrix& x) {
  if (!m.fitted()) throw Error("model is not fitted");
  if (x.cols() != m.feature_names().size())
    throw SignatureError("model expects " + std::to_string(m.feature_names().size()) +
                         " features, got " + std::to_string(x.cols()));
  if (m.task() == Task::classification && m.n_classes() == 1) return std::vector<double>(x.rows(), 0.0);
  return std::visit(
      [&](const auto& p) -> std::vector<double> {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, NaiveBayesParams>) return nb_predict(m, p, x);
        else if constexpr (std::is_same_v<P, LinearParams>) return sgd_predict(m, p, x);
        else if constexpr (std::is_same_v<P, KnnParams>) return knn_predict(m, p, x);
        else return tree_predict(p, x);
      },
      m.params());
}

}  // namespace adaptoml
