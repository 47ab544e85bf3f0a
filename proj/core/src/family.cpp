#include "glmboot/family.hpp"

#include <algorithm>
#include <cmath>

namespace glmboot {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
constexpr double kHalfLog2Pi = 0.91893853320467274178;

// Exponentials are clamped at argument +-700; overflow then surfaces as a
// non-finite term in the consuming operation, which reports the index
// instead of returning +-Inf silently.
double cexp(double u) { return std::exp(std::clamp(u, -700.0, 700.0)); }

double log1pexp(double u) {
  if (u <= -37.0) return std::exp(u);
  if (u <= 18.0) return std::log1p(std::exp(u));
  if (u <= 33.3) return u + std::exp(-u);
  return u;
}

double sigmoid(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

double norm_pdf(double u) { return kInvSqrt2Pi * std::exp(-0.5 * u * u); }
double norm_cdf(double u) { return 0.5 * std::erfc(-u * kInvSqrt2); }

// phi(u)/Phi(u). erfc keeps the direct ratio exact to a few ulps down to
// u = -26; past that both terms underflow and the asymptotic Mills-ratio
// expansion in t = -u takes over (eight terms: relative error < 1e-14 at
// the switch point).
double mills_lower(double u) {
  if (u >= -26.0) return norm_pdf(u) / norm_cdf(u);
  const double t = -u;
  const double r2 = 1.0 / (t * t);
  static constexpr double kOddFact[] = {1.0,    3.0,     15.0,    105.0,
                                        945.0,  10395.0, 135135.0};
  double series = 1.0, power = 1.0, sign = -1.0;
  for (double c : kOddFact) {
    power *= r2;
    series += sign * c * power;
    sign = -sign;
  }
  return t / series;
}

// phi(u)/(1 - Phi(u))
double mills_upper(double u) { return mills_lower(-u); }

double log_norm_cdf(double u) {
  if (u >= -26.0) return std::log(norm_cdf(u));
  return -0.5 * u * u - kHalfLog2Pi - std::log(mills_lower(u));
}

}  // namespace

FamilyId family_from_string(const std::string& name) {
  if (name == "linear") return FamilyId::linear;
  if (name == "logistic") return FamilyId::logistic;
  if (name == "probit") return FamilyId::probit;
  if (name == "poisson") return FamilyId::poisson;
  if (name == "gamma") return FamilyId::gamma;
  throw InputError("unknown family '" + name +
                   "' (expected linear|logistic|probit|poisson|gamma)");
}

std::string to_string(FamilyId id) {
  switch (id) {
    case FamilyId::linear: return "linear";
    case FamilyId::logistic: return "logistic";
    case FamilyId::probit: return "probit";
    case FamilyId::poisson: return "poisson";
    case FamilyId::gamma: return "gamma";
  }
  throw std::logic_error("unreachable family id");
}

FamilySpec make_family(FamilyId id, double shape_alpha) {
  if (id == FamilyId::gamma && !(shape_alpha > 0.0))
    throw InputError("make_family: gamma shape_alpha must be positive");
  return FamilySpec(id, id == FamilyId::gamma ? shape_alpha : 1.0);
}

double FamilySpec::h(double u) const {
  switch (id_) {
    case FamilyId::linear:
    case FamilyId::logistic:
    case FamilyId::poisson: return u;
    case FamilyId::gamma: return -alpha_ * cexp(-u);
    case FamilyId::probit: return log_norm_cdf(u) - log_norm_cdf(-u);
  }
  return 0;
}

double FamilySpec::dh(double u) const {
  switch (id_) {
    case FamilyId::linear:
    case FamilyId::logistic:
    case FamilyId::poisson: return 1.0;
    case FamilyId::gamma: return alpha_ * cexp(-u);
    case FamilyId::probit: return mills_lower(u) + mills_upper(u);
  }
  return 0;
}

double FamilySpec::d2h(double u) const {
  switch (id_) {
    case FamilyId::linear:
    case FamilyId::logistic:
    case FamilyId::poisson: return 0.0;
    case FamilyId::gamma: return -alpha_ * cexp(-u);
    case FamilyId::probit: {
      const double r = mills_lower(u), rb = mills_upper(u);
      return -r * (u + r) + rb * (rb - u);
    }
  }
  return 0;
}

double FamilySpec::d3h(double u) const {
  switch (id_) {
    case FamilyId::linear:
    case FamilyId::logistic:
    case FamilyId::poisson: return 0.0;
    case FamilyId::gamma: return alpha_ * cexp(-u);
    case FamilyId::probit: {
      const double r = mills_lower(u), rb = mills_upper(u);
      const double dr = -r * (u + r);    // r'
      const double drb = rb * (rb - u);  // rbar'
      return (-dr * (u + r) - r * (1.0 + dr)) +
             (drb * (rb - u) + rb * (drb - 1.0));
    }
  }
  return 0;
}

double FamilySpec::h1(double u) const {
  switch (id_) {
    case FamilyId::linear: return 0.5 * u * u;
    case FamilyId::logistic: return log1pexp(u);
    case FamilyId::poisson: return cexp(u);
    case FamilyId::gamma: return alpha_ * u;
    case FamilyId::probit: return -log_norm_cdf(-u);
  }
  return 0;
}

double FamilySpec::dh1(double u) const {
  switch (id_) {
    case FamilyId::linear: return u;
    case FamilyId::logistic: return sigmoid(u);
    case FamilyId::poisson: return cexp(u);
    case FamilyId::gamma: return alpha_;
    case FamilyId::probit: return mills_upper(u);
  }
  return 0;
}

double FamilySpec::d2h1(double u) const {
  switch (id_) {
    case FamilyId::linear: return 1.0;
    case FamilyId::logistic: {
      const double s = sigmoid(u);
      return s * (1.0 - s);
    }
    case FamilyId::poisson: return cexp(u);
    case FamilyId::gamma: return 0.0;
    case FamilyId::probit: {
      const double rb = mills_upper(u);
      return rb * (rb - u);
    }
  }
  return 0;
}

double FamilySpec::d3h1(double u) const {
  switch (id_) {
    case FamilyId::linear: return 0.0;
    case FamilyId::logistic: {
      const double s = sigmoid(u);
      return s * (1.0 - s) * (1.0 - 2.0 * s);
    }
    case FamilyId::poisson: return cexp(u);
    case FamilyId::gamma: return 0.0;
    case FamilyId::probit: {
      const double rb = mills_upper(u);
      const double drb = rb * (rb - u);
      return drb * (rb - u) + rb * (drb - 1.0);
    }
  }
  return 0;
}

double FamilySpec::g_inv(double u) const {
  switch (id_) {
    case FamilyId::linear: return u;
    case FamilyId::logistic: return sigmoid(u);
    case FamilyId::poisson:
    case FamilyId::gamma: return cexp(u);
    case FamilyId::probit: return norm_cdf(u);
  }
  return 0;
}

double FamilySpec::dg_inv(double u) const {
  switch (id_) {
    case FamilyId::linear: return 1.0;
    case FamilyId::logistic: {
      const double s = sigmoid(u);
      return s * (1.0 - s);
    }
    case FamilyId::poisson:
    case FamilyId::gamma: return cexp(u);
    case FamilyId::probit: return norm_pdf(u);
  }
  return 0;
}

double FamilySpec::var_fun(double u) const {
  switch (id_) {
    case FamilyId::linear: return 1.0;
    case FamilyId::logistic: {
      const double s = sigmoid(u);
      return s * (1.0 - s);
    }
    case FamilyId::poisson: return cexp(u);
    case FamilyId::gamma: return cexp(2.0 * u) / alpha_;
    case FamilyId::probit: return norm_cdf(u) * norm_cdf(-u);
  }
  return 0;
}

ValidityVerdict validate_dataset(const FamilySpec& family,
                                 const Dataset& data) {
  ValidityVerdict v;
  if (data.n() < 1 || data.p() < 1) {
    v.valid = false;
    v.reason = "dataset must have n >= 1 and p >= 1";
    return v;
  }
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    bool bad = !std::isfinite(data.y(i)) || !data.X.row(i).allFinite();
    if (!bad) {
      const double yi = data.y(i);
      switch (family.id()) {
        case FamilyId::linear: break;
        case FamilyId::logistic:
        case FamilyId::probit: bad = !(yi == 0.0 || yi == 1.0); break;
        case FamilyId::poisson: bad = !(yi >= 0.0); break;
        case FamilyId::gamma: bad = !(yi > 0.0); break;
      }
    }
    if (bad) v.bad_rows.push_back(i);
  }
  if (!v.bad_rows.empty()) {
    v.valid = false;
    v.reason = "response outside the " + to_string(family.id()) +
               " family support (or non-finite entry)";
  }
  return v;
}

namespace {

void check_dims(const Dataset& data, const Eigen::VectorXd& beta,
                const Eigen::VectorXd& weights, const char* where) {
  if (beta.size() != data.p())
    throw DimensionError(std::string(where) + ": beta has length " +
                         std::to_string(beta.size()) + ", expected " +
                         std::to_string(data.p()));
  if (weights.size() != data.n())
    throw DimensionError(std::string(where) + ": weights have length " +
                         std::to_string(weights.size()) + ", expected " +
                         std::to_string(data.n()));
}

}  // namespace

double neg_log_likelihood(const FamilySpec& family, const Dataset& data,
                          const Eigen::VectorXd& beta,
                          const Eigen::VectorXd& weights) {
  check_dims(data, beta, weights, "neg_log_likelihood");
  const Eigen::VectorXd eta = data.X * beta;
  double total = 0.0;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const double w = weights(i);
    if (w == 0.0) continue;
    const double term =
        w * (-data.y(i) * family.h(eta(i)) + family.h1(eta(i)));
    if (!std::isfinite(term))
      throw NonFiniteError("neg_log_likelihood: non-finite term", i);
    total += term;
  }
  return total;
}

double neg_log_likelihood(const FamilySpec& family, const Dataset& data,
                          const Eigen::VectorXd& beta) {
  return neg_log_likelihood(family, data, beta,
                            Eigen::VectorXd::Ones(data.n()));
}

Eigen::VectorXd nll_gradient(const FamilySpec& family, const Dataset& data,
                             const Eigen::VectorXd& beta,
                             const Eigen::VectorXd& weights) {
  check_dims(data, beta, weights, "nll_gradient");
  const Eigen::VectorXd eta = data.X * beta;
  Eigen::VectorXd g = Eigen::VectorXd::Zero(data.p());
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const double w = weights(i);
    if (w == 0.0) continue;
    const double s =
        w * (family.g_inv(eta(i)) - data.y(i)) * family.dh(eta(i));
    if (!std::isfinite(s))
      throw NonFiniteError("nll_gradient: non-finite term", i);
    g.noalias() += s * data.X.row(i).transpose();
  }
  return g;
}

Eigen::VectorXd nll_gradient(const FamilySpec& family, const Dataset& data,
                             const Eigen::VectorXd& beta) {
  return nll_gradient(family, data, beta, Eigen::VectorXd::Ones(data.n()));
}

DiagnosticsMatrices diagnostics_matrices(const FamilySpec& family,
                                         const Dataset& data,
                                         const Eigen::VectorXd& beta) {
  if (beta.size() != data.p())
    throw DimensionError("diagnostics_matrices: beta length mismatch");
  const Eigen::Index n = data.n(), p = data.p();
  const Eigen::VectorXd eta = data.X * beta;
  DiagnosticsMatrices out{Eigen::MatrixXd::Zero(p, p),
                          Eigen::MatrixXd::Zero(p, p)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = eta(i);
    const double resid = data.y(i) - family.g_inv(u);
    const double kappa = family.dg_inv(u) * family.dh(u) - resid * family.d2h(u);
    const double score = family.dh(u) * resid;
    const auto xi = data.X.row(i).transpose();
    out.L_n.noalias() += kappa * xi * xi.transpose();
    out.S_n_hat.noalias() += (score * score) * xi * xi.transpose();
  }
  out.L_n /= static_cast<double>(n);
  out.S_n_hat /= static_cast<double>(n);
  return out;
}

}  // namespace glmboot
