#include "pedsub/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "pedsub/errors.hpp"

namespace ped {
namespace {

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) throw InvalidArgument("prediction and truth lengths differ");
  if (a == 0) throw InvalidArgument("empty evaluation set");
}

double euclidean(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
  return std::sqrt(s);
}

}  // namespace

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
  check_lengths(predicted.size(), truth.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double auc_binary(std::span<const double> scores, std::span<const int> truth) {
  check_lengths(scores.size(), truth.size());
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) {
      const int y = truth[order[t]];
      if (y != 0 && y != 1) throw InvalidArgument("binary AUC needs 0/1 labels");
      if (y == 1) {
        rank_sum += midrank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = truth.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw InvalidArgument("AUC undefined: only one class present");
  const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

double auc_multiclass(const std::vector<std::vector<double>>& proba, std::span<const int> truth) {
  check_lengths(proba.size(), truth.size());
  const std::size_t k = proba.front().size();
  if (k < 2) throw InvalidArgument("AUC needs at least two classes");
  std::vector<double> scores(truth.size());
  std::vector<int> one_vs_rest(truth.size());
  auto class_auc = [&](std::size_t c) {
    for (std::size_t i = 0; i < truth.size(); ++i) {
      if (proba[i].size() != k) throw InvalidArgument("ragged probability matrix");
      scores[i] = proba[i][c];
      one_vs_rest[i] = truth[i] == static_cast<int>(c);
    }
    return auc_binary(scores, one_vs_rest);
  };
  if (k == 2) return class_auc(1);
  double sum = 0.0;
  for (std::size_t c = 0; c < k; ++c) sum += class_auc(c);
  return sum / static_cast<double>(k);
}

std::vector<std::vector<std::size_t>> confusion_matrix(std::span<const int> predicted,
                                                       std::span<const int> truth, int n_classes) {
  check_lengths(predicted.size(), truth.size());
  const auto k = static_cast<std::size_t>(n_classes);
  std::vector<std::vector<std::size_t>> m(k, std::vector<std::size_t>(k, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= n_classes || predicted[i] < 0 || predicted[i] >= n_classes)
      throw InvalidArgument("class id out of range");
    ++m[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(predicted[i])];
  }
  return m;
}

EvalReport evaluate(std::span<const int> predicted, const std::vector<std::vector<double>>& proba,
                    std::span<const int> truth, int n_classes) {
  EvalReport r;
  r.accuracy = accuracy(predicted, truth);
  r.confusion = confusion_matrix(predicted, truth, n_classes);
  r.n_test = truth.size();
  try {
    r.auc = auc_multiclass(proba, truth);
  } catch (const InvalidArgument&) {
    r.auc = std::numeric_limits<double>::quiet_NaN();
  }
  return r;
}

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json j{{"accuracy", report.accuracy},
                   {"auc", nullptr},
                   {"confusion", report.confusion},
                   {"n_test", report.n_test}};
  if (!std::isnan(report.auc)) j["auc"] = report.auc;
  return j;
}

std::string eval_csv_header() { return "accuracy,auc,n_test"; }

std::string eval_csv_row(const EvalReport& report) {
  std::ostringstream os;
  os.precision(17);
  os << report.accuracy << ',';
  if (std::isnan(report.auc)) os << "NA";
  else os << report.auc;
  os << ',' << report.n_test;
  return os.str();
}

double mean_cross_distance(const PointSet& a, const PointSet& b) {
  if (a.dim != b.dim) throw InvalidArgument("point sets differ in dimension");
  if (a.size() == 0 || b.size() == 0) throw InvalidArgument("empty point set");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto pa = a.point(i);
    double row = 0.0;
    for (std::size_t j = 0; j < b.size(); ++j) row += euclidean(pa, b.point(j));
    sum += row;
  }
  return sum / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

double mean_within_distance(const PointSet& a) {
  if (a.size() == 0) throw InvalidArgument("empty point set");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j) sum += euclidean(a.point(i), a.point(j));
  const double n = static_cast<double>(a.size());
  return 2.0 * sum / (n * n);
}

double energy_distance(const PointSet& a, const PointSet& b) {
  return 2.0 * mean_cross_distance(a, b) - mean_within_distance(a) - mean_within_distance(b);
}

}  // namespace ped
