#pragma once

#include <algorithm>
#include <map>
#include <vector>

#include "lensless/errors.hpp"
#include "lensless/featmat.hpp"

namespace lensless {

struct KnnModel {
  FeatureMatrix train;
  std::vector<int> labels;
  int k = 5;
};

struct KnnVote {
  int label = 0;
  size_t k_used = 0;  // k clamped to the training size when it exceeds it
};

// Brute-force k-NN by squared Euclidean distance. Neighbor order is the
// lexicographic (distance, training index) pair, so equidistant points always
// resolve toward the earlier index; vote ties go to the lowest class id.
inline KnnVote knn_classify_detail(const FeatureMatrix& train, const std::vector<int>& labels,
                                   const float* x, int k) {
  if (train.rows == 0) fail(ErrorKind::Domain, "knn: empty training set");
  if (k < 1) fail(ErrorKind::Config, "knn: k must be >= 1");
  size_t n = train.rows;
  size_t k_used = std::min(size_t(k), n);

  std::vector<std::pair<double, size_t>> dist(n);
  for (size_t i = 0; i < n; ++i) {
    dist[i] = {sqdist_f(train.row(i), x, train.dim), i};
  }
  std::partial_sort(dist.begin(), dist.begin() + k_used, dist.end());

  std::map<int, size_t> votes;
  for (size_t i = 0; i < k_used; ++i) votes[labels[dist[i].second]]++;
  int best_label = votes.begin()->first;
  size_t best_count = votes.begin()->second;
  for (const auto& [label, count] : votes) {
    if (count > best_count) {
      best_label = label;
      best_count = count;
    }
  }
  return {best_label, k_used};
}

inline int knn_classify(const FeatureMatrix& train, const std::vector<int>& labels,
                        const float* x, int k) {
  return knn_classify_detail(train, labels, x, k).label;
}

inline int knn_predict(const KnnModel& model, const float* x) {
  return knn_classify(model.train, model.labels, x, model.k);
}

}  // namespace lensless
