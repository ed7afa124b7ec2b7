#include "pedsub/generators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "pedsub/errors.hpp"
#include "pedsub/parallel.hpp"

namespace ped {
namespace {

constexpr std::size_t kChunkRows = 4096;

std::vector<double> equicorrelated(int p, double diag, double off) {
  std::vector<double> s(static_cast<std::size_t>(p * p), off);
  for (int i = 0; i < p; ++i) s[static_cast<std::size_t>(i * p + i)] = diag;
  return s;
}

std::vector<double> filled(int p, double v) { return std::vector<double>(static_cast<std::size_t>(p), v); }

/// Draws covariate vectors; the Cholesky factor is computed once per call to generate.
class CovariateSampler {
 public:
  CovariateSampler(const CovariateModel& model, int p) : model_(model), p_(p) {
    Eigen::MatrixXd sigma(p, p);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j) sigma(i, j) = model.sigma[static_cast<std::size_t>(i * p + j)];
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) throw ConfigError("covariance matrix is not positive definite");
    chol_ = llt.matrixL();
  }

  void draw(Rng& rng, double* out) const {
    std::normal_distribution<double> normal;
    Eigen::VectorXd z(p_);
    for (int i = 0; i < p_; ++i) z(i) = normal(rng);
    Eigen::VectorXd x = chol_ * z;
    std::size_t component = 0;
    if (model_.kind == CovariateKind::mixture) {
      std::discrete_distribution<std::size_t> pick(model_.weights.begin(), model_.weights.end());
      component = pick(rng);
    } else if (model_.kind == CovariateKind::multivariate_t) {
      std::chi_squared_distribution<double> chi2(model_.df);
      x *= std::sqrt(model_.df / chi2(rng));
    }
    const auto& mu = model_.means[component];
    for (int i = 0; i < p_; ++i) out[i] = mu[static_cast<std::size_t>(i)] + x(i);
  }

 private:
  const CovariateModel& model_;
  int p_;
  Eigen::MatrixXd chol_;
};

/// Breiman's triangular waveforms, peaks at positions 7, 15 and 11 (1-based).
double waveform_base(int which, int i) {
  static constexpr int peaks[3] = {7, 15, 11};
  return std::max(6.0 - std::abs(i - peaks[which]), 0.0);
}

int draw_class(Rng& rng, const std::vector<double>& weights) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = unif(rng);
  for (std::size_t k = 0; k + 1 < weights.size(); ++k) {
    if (u < weights[k]) return static_cast<int>(k);
    u -= weights[k];
  }
  return static_cast<int>(weights.size()) - 1;
}

void threenorm_row(Rng& rng, int label, int p, double* x) {
  std::normal_distribution<double> normal;
  std::bernoulli_distribution coin(0.5);
  const double a = 2.0 / std::sqrt(static_cast<double>(p));
  if (label == 0) {
    const double sign = coin(rng) ? 1.0 : -1.0;
    for (int j = 0; j < p; ++j) x[j] = sign * a + normal(rng);
  } else {
    for (int j = 0; j < p; ++j) x[j] = (j % 2 == 0 ? a : -a) + normal(rng);
  }
}

}  // namespace

std::string family_name(Family family) {
  switch (family) {
    case Family::radial3: return "radial3";
    case Family::waveform: return "waveform";
    case Family::twonorm: return "twonorm";
    case Family::threenorm: return "threenorm";
    case Family::ringnorm: return "ringnorm";
    case Family::imbalanced_threenorm: return "imbalanced_threenorm";
    case Family::logistic_bin: return "logistic_bin";
    case Family::softmax_mult: return "softmax_mult";
  }
  return "unknown";
}

Family family_from_name(std::string_view name) {
  for (Family f : {Family::radial3, Family::waveform, Family::twonorm, Family::threenorm,
                   Family::ringnorm, Family::imbalanced_threenorm, Family::logistic_bin,
                   Family::softmax_mult}) {
    if (family_name(f) == name) return f;
  }
  throw ConfigError("unknown generator family '" + std::string(name) + "'");
}

int GeneratorSpec::n_classes() const {
  switch (family) {
    case Family::radial3:
    case Family::waveform:
    case Family::softmax_mult: return 3;
    default: return 2;
  }
}

void GeneratorSpec::validate() const {
  if (p < 1) throw ConfigError("generator dimension p must be >= 1");
  if (family == Family::radial3 && p != 2) throw ConfigError("radial3 is defined for p = 2");
  if (family == Family::waveform && p != 21) throw ConfigError("waveform is defined for p = 21");
  if (!class_weights.empty()) {
    if (class_weights.size() != static_cast<std::size_t>(n_classes()))
      throw ConfigError("class weight count does not match the class count");
    double s = 0.0;
    for (double w : class_weights) {
      if (w < 0.0) throw ConfigError("class weights must be nonnegative");
      s += w;
    }
    if (std::abs(s - 1.0) > 1e-9) throw ConfigError("class weights must sum to 1");
  }
  if (family != Family::logistic_bin && family != Family::softmax_mult) return;

  const auto pp = static_cast<std::size_t>(p);
  const std::size_t want_beta = family == Family::logistic_bin ? pp : 2 * pp;
  if (beta.size() != want_beta)
    throw ConfigError("beta has length " + std::to_string(beta.size()) + ", expected " +
                      std::to_string(want_beta));
  const auto& cov = covariates;
  if (cov.sigma.size() != pp * pp) throw ConfigError("covariance must be p x p");
  for (std::size_t i = 0; i < pp; ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (std::abs(cov.sigma[i * pp + j] - cov.sigma[j * pp + i]) > 1e-12)
        throw ConfigError("covariance matrix is not symmetric");
  if (cov.means.empty()) throw ConfigError("covariate model needs a mean vector");
  for (const auto& m : cov.means)
    if (m.size() != pp) throw ConfigError("covariate mean must have length p");
  if (cov.kind == CovariateKind::mixture) {
    if (cov.weights.size() != cov.means.size())
      throw ConfigError("mixture needs one weight per component");
    double s = 0.0;
    for (double w : cov.weights) {
      if (w < 0.0) throw ConfigError("mixture weights must be nonnegative");
      s += w;
    }
    if (std::abs(s - 1.0) > 1e-9) throw ConfigError("mixture weights must sum to 1");
  }
  if (cov.kind == CovariateKind::multivariate_t && !(cov.df > 0.0))
    throw ConfigError("t degrees of freedom must be positive");
  CovariateSampler check(cov, p);  // throws when Sigma is not PD
}

GeneratorSpec GeneratorSpec::preset(std::string_view name, int p) {
  GeneratorSpec s;
  s.name = std::string(name);
  auto regression = [&](Family f, int dim, double sd_scale, CovariateKind kind,
                        std::vector<std::vector<double>> means) {
    s.family = f;
    s.p = dim;
    s.covariates.kind = kind;
    s.covariates.means = std::move(means);
    if (kind == CovariateKind::mixture) s.covariates.weights = {0.5, 0.5};
    auto sigma = equicorrelated(dim, 1.0, 0.5);
    for (double& v : sigma) v *= sd_scale;
    s.covariates.sigma = std::move(sigma);
    s.covariates.df = 3.0;
  };

  if (name == "logistic_bin" || name.starts_with("bin-")) {
    const int d = p > 0 ? p : 7;
    std::string_view c = name == "logistic_bin" ? "bin-mvn0" : name;
    if (c == "bin-mvn0") regression(Family::logistic_bin, d, 1.0, CovariateKind::mvn, {filled(d, 0.0)});
    else if (c == "bin-mvn1") regression(Family::logistic_bin, d, 1.0, CovariateKind::mvn, {filled(d, 1.0)});
    else if (c == "bin-mix")
      regression(Family::logistic_bin, d, 1.0, CovariateKind::mixture, {filled(d, 1.0), filled(d, -1.0)});
    else if (c == "bin-t3")
      regression(Family::logistic_bin, d, 0.1, CovariateKind::multivariate_t, {filled(d, 0.0)});
    else throw ConfigError("unknown generator preset '" + std::string(name) + "'");
    s.beta = filled(d, 0.5);
    return s;
  }
  if (name == "softmax_mult" || name.starts_with("mult-")) {
    const int d = p > 0 ? p : 3;
    std::string_view c = name == "softmax_mult" ? "mult-mvn0" : name;
    if (c == "mult-mvn0") regression(Family::softmax_mult, d, 1.0, CovariateKind::mvn, {filled(d, 0.0)});
    else if (c == "mult-mvn1.5")
      regression(Family::softmax_mult, d, 1.0, CovariateKind::mvn, {filled(d, 1.5)});
    else if (c == "mult-mix")
      regression(Family::softmax_mult, d, 1.0, CovariateKind::mixture, {filled(d, 1.0), filled(d, -1.0)});
    else if (c == "mult-t3")
      regression(Family::softmax_mult, d, 1.0, CovariateKind::multivariate_t, {filled(d, 0.0)});
    else throw ConfigError("unknown generator preset '" + std::string(name) + "'");
    s.beta = filled(d, 1.0);
    auto second = filled(d, 2.0);
    s.beta.insert(s.beta.end(), second.begin(), second.end());
    return s;
  }

  s.family = family_from_name(name);
  switch (s.family) {
    case Family::radial3: s.p = 2; break;
    case Family::waveform: s.p = 21; break;
    case Family::imbalanced_threenorm:
      s.p = p > 0 ? p : 2;
      s.class_weights = {0.95, 0.05};
      break;
    default: s.p = p > 0 ? p : 2; break;
  }
  return s;
}

nlohmann::json to_json(const GeneratorSpec& spec) {
  nlohmann::json j{{"family", family_name(spec.family)}, {"p", spec.p}, {"name", spec.name}};
  if (!spec.class_weights.empty()) j["class_weights"] = spec.class_weights;
  if (spec.family == Family::logistic_bin || spec.family == Family::softmax_mult) {
    const auto& c = spec.covariates;
    j["beta"] = spec.beta;
    j["covariates"] = {
        {"kind", c.kind == CovariateKind::mvn       ? "mvn"
                 : c.kind == CovariateKind::mixture ? "mixture"
                                                    : "multivariate_t"},
        {"means", c.means},
        {"weights", c.weights},
        {"sigma", c.sigma},
        {"df", c.df}};
  }
  return j;
}

GeneratorSpec generator_spec_from_json(const nlohmann::json& j) {
  try {
    GeneratorSpec s;
    s.family = family_from_name(j.at("family").get<std::string>());
    s.p = j.at("p").get<int>();
    s.name = j.value("name", family_name(s.family));
    s.class_weights = j.value("class_weights", std::vector<double>{});
    if (j.contains("beta")) s.beta = j.at("beta").get<std::vector<double>>();
    if (j.contains("covariates")) {
      const auto& c = j.at("covariates");
      const auto kind = c.at("kind").get<std::string>();
      s.covariates.kind = kind == "mvn"       ? CovariateKind::mvn
                          : kind == "mixture" ? CovariateKind::mixture
                                              : CovariateKind::multivariate_t;
      s.covariates.means = c.at("means").get<std::vector<std::vector<double>>>();
      s.covariates.weights = c.value("weights", std::vector<double>{});
      s.covariates.sigma = c.at("sigma").get<std::vector<double>>();
      s.covariates.df = c.value("df", 3.0);
    }
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed generator spec: ") + e.what());
  }
}

Dataset generate(const GeneratorSpec& spec, std::size_t n_rows, Seed seed) {
  if (n_rows == 0) throw InvalidArgument("n_rows must be >= 1");
  spec.validate();
  const int p = spec.p;
  const auto pp = static_cast<std::size_t>(p);
  const int k = spec.n_classes();

  std::vector<double> rows(n_rows * pp);  // row-major scratch
  std::vector<int> labels(n_rows, 0);
  std::optional<CovariateSampler> covariates;
  if (spec.family == Family::logistic_bin || spec.family == Family::softmax_mult)
    covariates.emplace(spec.covariates, p);
  const std::vector<double> weights =
      spec.class_weights.empty() ? std::vector<double>(static_cast<std::size_t>(k), 1.0 / k)
                                 : spec.class_weights;

  const std::size_t chunks = (n_rows + kChunkRows - 1) / kChunkRows;
  parallel_for(chunks, [&](std::size_t chunk) {
    Rng rng = make_rng(derive_subseed(seed, "gen", chunk));
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const std::size_t end = std::min(n_rows, (chunk + 1) * kChunkRows);
    for (std::size_t i = chunk * kChunkRows; i < end; ++i) {
      double* x = rows.data() + i * pp;
      int& y = labels[i];
      switch (spec.family) {
        case Family::radial3:
          for (int j = 0; j < p; ++j) x[j] = normal(rng);
          break;
        case Family::twonorm: {
          y = draw_class(rng, weights);
          const double a = 2.0 / std::sqrt(static_cast<double>(p));
          for (int j = 0; j < p; ++j) x[j] = (y == 0 ? a : -a) + normal(rng);
          break;
        }
        case Family::threenorm:
        case Family::imbalanced_threenorm:
          y = draw_class(rng, weights);
          threenorm_row(rng, y, p, x);
          break;
        case Family::ringnorm: {
          y = draw_class(rng, weights);
          const double a = 1.0 / std::sqrt(static_cast<double>(p));
          for (int j = 0; j < p; ++j) x[j] = y == 0 ? 2.0 * normal(rng) : a + normal(rng);
          break;
        }
        case Family::waveform: {
          y = draw_class(rng, weights);
          static constexpr int pairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
          const double u = unif(rng);
          for (int j = 0; j < p; ++j) {
            x[j] = u * waveform_base(pairs[y][0], j + 1) +
                   (1.0 - u) * waveform_base(pairs[y][1], j + 1) + normal(rng);
          }
          break;
        }
        case Family::logistic_bin: {
          covariates->draw(rng, x);
          double eta = 0.0;
          for (int j = 0; j < p; ++j) eta += x[j] * spec.beta[static_cast<std::size_t>(j)];
          y = unif(rng) < 1.0 / (1.0 + std::exp(-eta)) ? 1 : 0;
          break;
        }
        case Family::softmax_mult: {
          covariates->draw(rng, x);
          double eta1 = 0.0, eta2 = 0.0;
          for (std::size_t j = 0; j < pp; ++j) {
            eta1 += x[j] * spec.beta[j];
            eta2 += x[j] * spec.beta[pp + j];
          }
          const double m = std::max({0.0, eta1, eta2});
          const double w0 = std::exp(-m), w1 = std::exp(eta1 - m), w2 = std::exp(eta2 - m);
          const double u = unif(rng) * (w0 + w1 + w2);
          y = u < w0 ? 0 : (u < w0 + w1 ? 1 : 2);
          break;
        }
      }
    }
  });

  if (spec.family == Family::radial3) {
    // Empirical radius quantiles of this batch: the outer 5% form class 1,
    // the inner 3% class 2, everything else the majority class 0.
    std::vector<double> radius(n_rows);
    for (std::size_t i = 0; i < n_rows; ++i)
      radius[i] = std::hypot(rows[i * pp], rows[i * pp + 1]);
    std::vector<std::size_t> order(n_rows);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return radius[a] != radius[b] ? radius[a] < radius[b] : a < b;
    });
    const auto inner = static_cast<std::size_t>(std::floor(0.03 * static_cast<double>(n_rows)));
    const auto outer = static_cast<std::size_t>(std::floor(0.05 * static_cast<double>(n_rows)));
    for (std::size_t r = 0; r < n_rows; ++r) {
      const std::size_t i = order[r];
      labels[i] = r < inner ? 2 : (r >= n_rows - outer ? 1 : 0);
    }
  }

  std::vector<ColumnSchema> schema;
  std::vector<std::vector<double>> columns(pp, std::vector<double>(n_rows));
  for (std::size_t j = 0; j < pp; ++j) {
    schema.push_back(ColumnSchema::continuous("x" + std::to_string(j + 1)));
    for (std::size_t i = 0; i < n_rows; ++i) columns[j][i] = rows[i * pp + j];
  }
  return Dataset(std::move(schema), std::move(columns), std::move(labels), k);
}

}  // namespace ped
