#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <json.hpp>

namespace ped {

double accuracy(std::span<const int> predicted, std::span<const int> truth);

/// Mann-Whitney AUC with midranks for tied scores. Throws InvalidArgument
/// unless both classes occur in `truth` (values 0/1).
double auc_binary(std::span<const double> scores, std::span<const int> truth);

/// Unweighted mean of the K one-vs-rest AUCs. `proba[i][k]` is row i's score
/// for class k.
double auc_multiclass(const std::vector<std::vector<double>>& proba, std::span<const int> truth);

/// K x K counts, rows = truth, columns = prediction.
std::vector<std::vector<std::size_t>> confusion_matrix(std::span<const int> predicted,
                                                       std::span<const int> truth, int n_classes);

struct EvalReport {
  double accuracy = 0.0;
  double auc = 0.0;  // NaN when undefined (a class missing from the test set)
  std::vector<std::vector<std::size_t>> confusion;
  std::size_t n_test = 0;
};

EvalReport evaluate(std::span<const int> predicted, const std::vector<std::vector<double>>& proba,
                    std::span<const int> truth, int n_classes);

nlohmann::json to_json(const EvalReport& report);
/// Header and row of the fixed-column CSV form.
std::string eval_csv_header();
std::string eval_csv_row(const EvalReport& report);

/// Row-major point set, `dim` coordinates per point.
struct PointSet {
  std::size_t dim = 0;
  std::vector<double> coords;

  std::size_t size() const { return dim == 0 ? 0 : coords.size() / dim; }
  std::span<const double> point(std::size_t i) const { return {coords.data() + i * dim, dim}; }
};

/// Mean Euclidean distance over all pairs (a, b) with a in `a`, b in `b`.
double mean_cross_distance(const PointSet& a, const PointSet& b);
/// Mean distance over all ordered pairs of the set, i == j included (V-statistic).
double mean_within_distance(const PointSet& a);

/// 2 E|A-B| - E|A-A'| - E|B-B'| (V-statistic form: zero for identical sets).
double energy_distance(const PointSet& a, const PointSet& b);

}  // namespace ped
