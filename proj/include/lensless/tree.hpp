#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "lensless/errors.hpp"
#include "lensless/featmat.hpp"

namespace lensless {

struct TreeNode {
  bool leaf = true;
  int label = 0;       // leaf only
  int feature = -1;    // split only
  float threshold = 0.0f;
  int left = -1;
  int right = -1;
};

struct TreeModel {
  std::vector<TreeNode> nodes;  // node 0 is the root
  int max_depth = 20;
  int min_leaf = 1;
};

namespace detail {

// CART grower. Labels are remapped to compact ids [0, n_classes) up front so
// per-split class bookkeeping is two flat count arrays; moving one sample
// across the candidate threshold then updates the Gini terms in O(1) via the
// running sums of squared counts.
struct TreeBuilder {
  const FeatureMatrix& X;
  const std::vector<int>& yc;      // compact class ids
  const std::vector<int>& classes; // compact id -> original label, ascending
  int max_depth;
  int min_leaf;
  std::vector<TreeNode> nodes;
  std::vector<std::pair<float, int>> vals;  // sort scratch: (value, compact id)

  int majority(const std::vector<size_t>& counts) const {
    size_t best_c = 0;
    int best = 0;
    for (size_t c = 0; c < counts.size(); ++c) {
      if (counts[c] > best_c) {  // ascending scan: ties keep the lowest id
        best_c = counts[c];
        best = int(c);
      }
    }
    return classes[best];
  }

  int grow(std::vector<size_t>& idx, int depth) {
    size_t n = idx.size();
    std::vector<size_t> counts(classes.size(), 0);
    for (size_t i : idx) counts[yc[i]]++;
    size_t n_present = 0;
    for (size_t c : counts) n_present += c > 0 ? 1 : 0;

    int node_id = int(nodes.size());
    nodes.emplace_back();
    if (n_present == 1 || depth >= max_depth) {
      nodes[node_id].label = majority(counts);
      return node_id;
    }

    // Ascending (feature, threshold) scan with strict improvement implements
    // the lowest-feature-then-lowest-threshold tie rule.
    double best_score = std::numeric_limits<double>::infinity();
    int best_feature = -1;
    float best_threshold = 0.0f;
    vals.resize(n);
    std::vector<size_t> left_cnt(classes.size());
    for (size_t f = 0; f < X.dim; ++f) {
      for (size_t i = 0; i < n; ++i) vals[i] = {X.row(idx[i])[f], yc[idx[i]]};
      std::sort(vals.begin(), vals.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      if (vals.front().first == vals.back().first) continue;  // constant feature

      std::fill(left_cnt.begin(), left_cnt.end(), size_t(0));
      double sum_sq_left = 0.0;   // sum of squared left counts
      double sum_sq_right = 0.0;  // sum of squared right counts
      for (size_t c = 0; c < counts.size(); ++c) {
        sum_sq_right += double(counts[c]) * double(counts[c]);
      }
      for (size_t i = 0; i + 1 < n; ++i) {
        int c = vals[i].second;
        size_t lc = left_cnt[c]++;
        size_t rc = counts[c] - lc;  // right count before the move
        sum_sq_left += 2.0 * double(lc) + 1.0;
        sum_sq_right -= 2.0 * double(rc) - 1.0;
        float a = vals[i].first, b = vals[i + 1].first;
        if (a == b) continue;
        size_t n_left = i + 1, n_right = n - n_left;
        if (n_left < size_t(min_leaf) || n_right < size_t(min_leaf)) continue;
        // Weighted Gini rewritten so only the squared-count sums matter:
        // (nl*gini_l + nr*gini_r)/n = 1 - (ssl/nl + ssr/nr)/n. Minimizing it
        // means maximizing score = ssl/nl + ssr/nr; negate to keep a minimum.
        double score = -(sum_sq_left / double(n_left) + sum_sq_right / double(n_right));
        if (score < best_score) {
          // Midpoint in float; at float-adjacent values it may round up to
          // b, in which case fall back to a (the split predicate is x <= t).
          float t = float(0.5 * (double(a) + double(b)));
          if (t >= b) t = a;
          best_score = score;
          best_feature = int(f);
          best_threshold = t;
        }
      }
    }

    if (best_feature < 0) {  // no admissible split (ties or min_leaf everywhere)
      nodes[node_id].label = majority(counts);
      return node_id;
    }

    std::vector<size_t> left_idx, right_idx;
    for (size_t i : idx) {
      if (X.row(i)[best_feature] <= best_threshold) left_idx.push_back(i);
      else right_idx.push_back(i);
    }
    idx.clear();
    idx.shrink_to_fit();
    nodes[node_id].leaf = false;
    nodes[node_id].feature = best_feature;
    nodes[node_id].threshold = best_threshold;
    int left = grow(left_idx, depth + 1);
    int right = grow(right_idx, depth + 1);
    nodes[node_id].left = left;
    nodes[node_id].right = right;
    return node_id;
  }
};

}  // namespace detail

inline TreeModel tree_train(const FeatureMatrix& X, const std::vector<int>& y, int max_depth,
                            int min_leaf) {
  if (X.rows == 0 || y.size() != X.rows) fail(ErrorKind::Shape, "tree: labels do not match rows");
  if (max_depth < 0 || min_leaf < 1) fail(ErrorKind::Config, "tree: bad depth/min_leaf");

  std::vector<int> classes(y.begin(), y.end());
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  std::vector<int> yc(y.size());
  for (size_t i = 0; i < y.size(); ++i) {
    yc[i] = int(std::lower_bound(classes.begin(), classes.end(), y[i]) - classes.begin());
  }

  detail::TreeBuilder builder{X, yc, classes, max_depth, min_leaf, {}, {}};
  std::vector<size_t> idx(X.rows);
  for (size_t i = 0; i < X.rows; ++i) idx[i] = i;
  builder.grow(idx, 0);
  TreeModel model;
  model.nodes = std::move(builder.nodes);
  model.max_depth = max_depth;
  model.min_leaf = min_leaf;
  return model;
}

inline int tree_predict(const TreeModel& model, const float* x) {
  int node = 0;
  while (!model.nodes[node].leaf) {
    const TreeNode& nd = model.nodes[node];
    node = x[nd.feature] <= nd.threshold ? nd.left : nd.right;
  }
  return model.nodes[node].label;
}

// Gini impurity of a label multiset; exposed for tests.
inline double gini_impurity(const std::vector<int>& labels) {
  if (labels.empty()) return 0.0;
  std::vector<int> classes(labels.begin(), labels.end());
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  double g = 1.0;
  for (int c : classes) {
    double p = double(std::count(labels.begin(), labels.end(), c)) / double(labels.size());
    g -= p * p;
  }
  return g;
}

}  // namespace lensless
