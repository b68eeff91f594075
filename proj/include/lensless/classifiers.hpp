#pragma once

#include <algorithm>
#include <string>
#include <variant>
#include <vector>

#include "lensless/errors.hpp"
#include "lensless/featmat.hpp"
#include "lensless/knn.hpp"
#include "lensless/parallel.hpp"
#include "lensless/svm.hpp"
#include "lensless/tree.hpp"

namespace lensless {

// One-vs-one multiclass SVM: one binary model per unordered class pair, in
// canonical (i, j) order with i < j over the ascending class set. The binary
// convention is +1 for the lower class of the pair.
struct OvoModel {
  std::vector<int> class_set;
  std::vector<SvmBinaryModel> models;  // pairs (0,1),(0,2),...,(k-2,k-1)
  size_t dim = 0;
};

inline OvoModel ovo_train(const FeatureMatrix& X, const std::vector<int>& y,
                          const SmoOptions& opt, unsigned threads = 1) {
  if (X.rows != y.size()) fail(ErrorKind::Shape, "ovo: labels do not match rows");
  OvoModel model;
  model.dim = X.dim;
  model.class_set.assign(y.begin(), y.end());
  std::sort(model.class_set.begin(), model.class_set.end());
  model.class_set.erase(std::unique(model.class_set.begin(), model.class_set.end()),
                        model.class_set.end());
  size_t k = model.class_set.size();
  if (k < 2) fail(ErrorKind::Domain, "ovo: need at least two classes");

  std::vector<std::pair<int, int>> pairs;
  for (size_t a = 0; a + 1 < k; ++a) {
    for (size_t b = a + 1; b < k; ++b) {
      pairs.emplace_back(model.class_set[a], model.class_set[b]);
    }
  }
  model.models.resize(pairs.size());
  parallel_for(pairs.size(), threads, [&](size_t p) {
    auto [ca, cb] = pairs[p];
    FeatureMatrix sub;
    sub.dim = X.dim;
    std::vector<int> sub_y;
    for (size_t i = 0; i < X.rows; ++i) {
      if (y[i] != ca && y[i] != cb) continue;
      const float* r = X.row(i);
      sub.data.insert(sub.data.end(), r, r + X.dim);
      sub_y.push_back(y[i] == ca ? 1 : -1);
      ++sub.rows;
    }
    try {
      model.models[p] = svm_train_binary(sub, sub_y, opt);
    } catch (const Error& e) {
      fail(e.kind(), "pair (" + std::to_string(ca) + "," + std::to_string(cb) + "): " + e.what());
    }
  });
  return model;
}

// Majority vote; vote ties broken by the summed signed score accumulated in
// each class's favor, then by the lowest class id.
inline int ovo_predict(const OvoModel& model, const float* x, size_t dim) {
  size_t k = model.class_set.size();
  std::vector<int> votes(k, 0);
  std::vector<double> score_sum(k, 0.0);
  size_t p = 0;
  for (size_t a = 0; a + 1 < k; ++a) {
    for (size_t b = a + 1; b < k; ++b, ++p) {
      double s = svm_predict_binary(model.models[p], x, dim);
      if (s > 0.0) votes[a]++;
      else votes[b]++;
      score_sum[a] += s;
      score_sum[b] -= s;
    }
  }
  size_t best = 0;
  for (size_t c = 1; c < k; ++c) {
    if (votes[c] > votes[best] ||
        (votes[c] == votes[best] && score_sum[c] > score_sum[best])) {
      best = c;  // ascending scan: remaining ties keep the lowest class id
    }
  }
  return model.class_set[best];
}

// -------------------------------------------------------------------------
// Candidate roster and validation-based selection
// -------------------------------------------------------------------------

enum class ModelKind { SvmOvo, Knn, Tree };

inline const char* kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::SvmOvo: return "svm-ovo";
    case ModelKind::Knn: return "knn";
    case ModelKind::Tree: return "tree";
  }
  return "?";
}

struct TrainedModel {
  ModelKind kind = ModelKind::SvmOvo;
  std::string name;  // roster entry name, e.g. "svm-linear"
  std::variant<OvoModel, KnnModel, TreeModel> payload;
  std::vector<int> class_set;
  double val_accuracy = 0.0;
};

inline int predict(const TrainedModel& model, const float* x, size_t dim) {
  if (std::holds_alternative<OvoModel>(model.payload)) {
    return ovo_predict(std::get<OvoModel>(model.payload), x, dim);
  }
  if (std::holds_alternative<KnnModel>(model.payload)) {
    const KnnModel& knn = std::get<KnnModel>(model.payload);
    if (dim != knn.train.dim) fail(ErrorKind::Shape, "knn input dimension mismatch");
    return knn_predict(knn, x);
  }
  return tree_predict(std::get<TreeModel>(model.payload), x);
}

inline double evaluate_accuracy(const TrainedModel& model, const FeatureMatrix& X,
                                const std::vector<int>& y) {
  if (X.rows != y.size()) fail(ErrorKind::Shape, "evaluate: labels do not match rows");
  if (X.rows == 0) fail(ErrorKind::Domain, "evaluate: empty dataset");
  size_t correct = 0;
  for (size_t i = 0; i < X.rows; ++i) {
    if (predict(model, X.row(i), X.dim) == y[i]) ++correct;
  }
  return double(correct) / double(X.rows);
}

struct RosterParams {
  double svm_c = 1.0;
  double rbf_gamma = 0.0;  // 0 = auto (1 / dim)
  bool svm_linear = true;
  bool svm_rbf = true;
  int knn_k = 5;
  int tree_max_depth = 20;
  int tree_min_leaf = 1;
  size_t gram_budget_bytes = size_t(1) << 30;
};

// Trains the fixed candidate roster in its canonical order: SVM variants
// first, then knn, then tree. The order doubles as the selection tie rule.
inline std::vector<TrainedModel> train_roster(const FeatureMatrix& X, const std::vector<int>& y,
                                              const RosterParams& params, unsigned threads = 1) {
  std::vector<int> class_set(y.begin(), y.end());
  std::sort(class_set.begin(), class_set.end());
  class_set.erase(std::unique(class_set.begin(), class_set.end()), class_set.end());

  std::vector<TrainedModel> roster;
  if (params.svm_linear) {
    SmoOptions opt;
    opt.C = params.svm_c;
    opt.kernel.type = KernelSpec::Type::Linear;
    opt.gram_budget_bytes = params.gram_budget_bytes;
    TrainedModel m;
    m.kind = ModelKind::SvmOvo;
    m.name = "svm-linear";
    m.payload = ovo_train(X, y, opt, threads);
    m.class_set = class_set;
    roster.push_back(std::move(m));
  }
  if (params.svm_rbf) {
    SmoOptions opt;
    opt.C = params.svm_c;
    opt.kernel.type = KernelSpec::Type::Rbf;
    opt.kernel.gamma = params.rbf_gamma > 0.0 ? params.rbf_gamma : 1.0 / double(X.dim);
    opt.gram_budget_bytes = params.gram_budget_bytes;
    TrainedModel m;
    m.kind = ModelKind::SvmOvo;
    m.name = "svm-rbf";
    m.payload = ovo_train(X, y, opt, threads);
    m.class_set = class_set;
    roster.push_back(std::move(m));
  }
  {
    TrainedModel m;
    m.kind = ModelKind::Knn;
    m.name = "knn";
    KnnModel knn;
    knn.train = X;
    knn.labels = y;
    knn.k = params.knn_k;
    m.payload = std::move(knn);
    m.class_set = class_set;
    roster.push_back(std::move(m));
  }
  {
    TrainedModel m;
    m.kind = ModelKind::Tree;
    m.name = "tree";
    m.payload = tree_train(X, y, params.tree_max_depth, params.tree_min_leaf);
    m.class_set = class_set;
    roster.push_back(std::move(m));
  }
  return roster;
}

// Scores every candidate on the validation set (recorded into val_accuracy)
// and returns the index of the winner; ties keep the earlier roster entry.
inline size_t select_best(std::vector<TrainedModel>& candidates, const FeatureMatrix& val_X,
                          const std::vector<int>& val_y) {
  if (candidates.empty()) fail(ErrorKind::Domain, "select_best: no candidates");
  if (val_X.rows == 0) fail(ErrorKind::Domain, "select_best: empty validation set");
  size_t best = 0;
  for (size_t i = 0; i < candidates.size(); ++i) {
    candidates[i].val_accuracy = evaluate_accuracy(candidates[i], val_X, val_y);
    if (candidates[i].val_accuracy > candidates[best].val_accuracy) best = i;
  }
  return best;
}

}  // namespace lensless
