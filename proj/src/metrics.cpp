#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "litefat/errors.hpp"
#include "litefat/model.hpp"

namespace litefat::model {

int predict_class(const std::vector<double>& mean_probs) {
  if (mean_probs.empty()) throw InputError("predict_class: empty vector");
  std::size_t best = 0;
  for (std::size_t m = 1; m < mean_probs.size(); ++m)
    if (mean_probs[m] > mean_probs[best]) best = m;
  return static_cast<int>(best);
}

std::vector<double> mean_probs(const numkit::DenseMatrix& probs) {
  std::vector<double> mean(probs.cols, 0.0);
  for (std::size_t t = 0; t < probs.rows; ++t)
    for (std::size_t m = 0; m < probs.cols; ++m) mean[m] += probs.at(t, m);
  for (double& v : mean) v /= static_cast<double>(probs.rows);
  return mean;
}

namespace {

// One-vs-rest area under the ROC curve from the rank statistic, with
// midranks for tied scores. Degenerate classes (no positives or no
// negatives) are skipped by the caller.
double rank_auc(const std::vector<double>& scores,
                const std::vector<bool>& positive) {
  const std::size_t n = scores.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });
  std::vector<double> rank(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[idx[j + 1]] == scores[idx[i]]) ++j;
    const double mid = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 +
                       1.0;
    for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = mid;
    i = j + 1;
  }
  double pos_rank_sum = 0.0;
  std::size_t pos = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (positive[k]) {
      pos_rank_sum += rank[k];
      ++pos;
    }
  }
  const std::size_t neg = n - pos;
  const double u = pos_rank_sum -
                   static_cast<double>(pos) * (static_cast<double>(pos) + 1.0) /
                       2.0;
  return u / (static_cast<double>(pos) * static_cast<double>(neg));
}

}  // namespace

Metrics classification_metrics(
    const std::vector<std::vector<double>>& clip_probs,
    const std::vector<int>& labels, std::size_t classes) {
  if (clip_probs.empty())
    throw InputError("classification_metrics: no predictions");
  if (clip_probs.size() != labels.size()) {
    std::ostringstream msg;
    msg << "classification_metrics: " << clip_probs.size()
        << " predictions vs " << labels.size() << " labels";
    throw InputError(msg.str());
  }
  for (int label : labels)
    if (label < 0 || static_cast<std::size_t>(label) >= classes)
      throw InputError("classification_metrics: label out of range");

  std::vector<int> predicted;
  predicted.reserve(clip_probs.size());
  for (const auto& probs : clip_probs) {
    if (probs.size() != classes)
      throw InputError("classification_metrics: probability vector length "
                       "does not match the class count");
    predicted.push_back(predict_class(probs));
  }

  Metrics out;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (predicted[i] == labels[i]) ++correct;
  out.accuracy = static_cast<double>(correct) /
                 static_cast<double>(labels.size());

  const auto one_class = [&](std::size_t cls, double& precision,
                             double& recall, double& f1) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const bool is_true = labels[i] == static_cast<int>(cls);
      const bool is_pred = predicted[i] == static_cast<int>(cls);
      if (is_true && is_pred) ++tp;
      if (!is_true && is_pred) ++fp;
      if (is_true && !is_pred) ++fn;
    }
    precision = tp + fp == 0 ? 0.0
                             : static_cast<double>(tp) /
                                   static_cast<double>(tp + fp);
    recall = tp + fn == 0 ? 0.0
                          : static_cast<double>(tp) /
                                static_cast<double>(tp + fn);
    f1 = precision + recall == 0.0
             ? 0.0
             : 2.0 * precision * recall / (precision + recall);
  };

  if (classes == 2) {
    // Binary task: report the positive class (index 1).
    one_class(1, out.precision, out.recall, out.f1);
  } else {
    for (std::size_t cls = 0; cls < classes; ++cls) {
      double p = 0.0, r = 0.0, f = 0.0;
      one_class(cls, p, r, f);
      out.precision += p;
      out.recall += r;
      out.f1 += f;
    }
    out.precision /= static_cast<double>(classes);
    out.recall /= static_cast<double>(classes);
    out.f1 /= static_cast<double>(classes);
  }

  double auc_sum = 0.0;
  std::size_t auc_classes = 0;
  for (std::size_t cls = 0; cls < classes; ++cls) {
    std::vector<double> scores;
    std::vector<bool> positive;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      scores.push_back(clip_probs[i][cls]);
      const bool is_pos = labels[i] == static_cast<int>(cls);
      positive.push_back(is_pos);
      if (is_pos) ++pos;
    }
    if (pos == 0 || pos == labels.size()) continue;  // undefined for the class
    auc_sum += rank_auc(scores, positive);
    ++auc_classes;
  }
  out.auc = auc_classes == 0 ? 0.5 : auc_sum / static_cast<double>(auc_classes);
  return out;
}

}  // namespace litefat::model
