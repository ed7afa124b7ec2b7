#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pedsub/dataset.hpp"
#include "pedsub/seed.hpp"

namespace ped {

enum class Family {
  radial3,
  waveform,
  twonorm,
  threenorm,
  ringnorm,
  imbalanced_threenorm,
  logistic_bin,
  softmax_mult,
};

enum class CovariateKind { mvn, mixture, multivariate_t };

/// Covariate law of the regression families: a Gaussian, an equal-covariance
/// Gaussian mixture, or a multivariate t with `df` degrees of freedom.
struct CovariateModel {
  CovariateKind kind = CovariateKind::mvn;
  std::vector<std::vector<double>> means;  // one per mixture component
  std::vector<double> weights;             // mixture weights, sum to 1
  std::vector<double> sigma;               // p x p row-major, SPD
  double df = 3.0;
};

struct GeneratorSpec {
  Family family = Family::radial3;
  int p = 2;
  /// logistic_bin: length p. softmax_mult: (K-1)*p, blocks per non-baseline class.
  std::vector<double> beta;
  CovariateModel covariates;
  /// Class priors for Breiman families (imbalanced_threenorm: (0.95, 0.05)).
  std::vector<double> class_weights;
  /// Preset name, kept for metadata only.
  std::string name;

  /// Throws ConfigError on an invalid spec.
  void validate() const;
  int n_classes() const;

  /// Named configurations: radial3, waveform, twonorm, threenorm, ringnorm,
  /// imbalanced_threenorm, logistic_bin/bin-mvn0|bin-mvn1|bin-mix|bin-t3,
  /// softmax_mult/mult-mvn0|mult-mvn1.5|mult-mix|mult-t3. `p` <= 0 keeps the
  /// family's default dimension.
  static GeneratorSpec preset(std::string_view name, int p = 0);
};

std::string family_name(Family family);
Family family_from_name(std::string_view name);

nlohmann::json to_json(const GeneratorSpec& spec);
GeneratorSpec generator_spec_from_json(const nlohmann::json& j);

/// Rows are i.i.d. from the family; output depends only on (spec, n_rows, seed).
Dataset generate(const GeneratorSpec& spec, std::size_t n_rows, Seed seed);

}  // namespace ped
