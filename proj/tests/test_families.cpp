#include <doctest.h>

#include <cmath>

#include "glmboot/family.hpp"
#include "test_support.hpp"

using namespace glmboot;
using testsupport::all_families;
using testsupport::central_diff;
using testsupport::close_rel;

TEST_SUITE_BEGIN("families");

TEST_CASE("table components: linear") {
  const FamilySpec f = make_family(FamilyId::linear);
  CHECK(f.h(2.0) == doctest::Approx(2.0));
  CHECK(f.h1(2.0) == doctest::Approx(2.0));
  CHECK(f.d2h1(0.7) == 1.0);
  CHECK(f.var_fun(-3.1) == 1.0);
}

TEST_CASE("table components: gamma") {
  const FamilySpec f = make_family(FamilyId::gamma, 1.0);
  CHECK(f.h(0.0) == doctest::Approx(-1.0));
  CHECK(f.h1(3.5) == doctest::Approx(3.5));
  const FamilySpec f2 = make_family(FamilyId::gamma, 2.5);
  CHECK(f2.h(0.0) == doctest::Approx(-2.5));
  CHECK(f2.h1(2.0) == doctest::Approx(5.0));
  CHECK(f2.g_inv(1.0) == doctest::Approx(std::exp(1.0)));
  // var of Gamma(shape a, mean e^u) is e^{2u}/a
  CHECK(f2.var_fun(0.5) == doctest::Approx(std::exp(1.0) / 2.5));
}

TEST_CASE("table components: logistic") {
  const FamilySpec f = make_family(FamilyId::logistic);
  CHECK(f.h1(2.0) == doctest::Approx(std::log(1.0 + std::exp(2.0))).epsilon(1e-12));
  CHECK(f.g_inv(0.0) == doctest::Approx(0.5));
  CHECK(f.var_fun(0.0) == doctest::Approx(0.25));
  // tail stability: no overflow, monotone limits
  CHECK(f.h1(800.0) == doctest::Approx(800.0));
  CHECK(f.h1(-800.0) == doctest::Approx(0.0));
}

TEST_CASE("table components: poisson") {
  const FamilySpec f = make_family(FamilyId::poisson);
  CHECK(f.h(1.3) == doctest::Approx(1.3));
  CHECK(f.h1(1.3) == doctest::Approx(std::exp(1.3)));
  CHECK(f.var_fun(1.3) == doctest::Approx(std::exp(1.3)));
}

TEST_CASE("table components: probit") {
  const FamilySpec f = make_family(FamilyId::probit);
  const double Phi1 = 0.5 * std::erfc(-1.0 / std::sqrt(2.0));
  CHECK(f.h(1.0) == doctest::Approx(std::log(Phi1 / (1.0 - Phi1))).epsilon(1e-12));
  CHECK(f.h1(1.0) == doctest::Approx(-std::log(1.0 - Phi1)).epsilon(1e-12));
  CHECK(f.g_inv(0.0) == doctest::Approx(0.5));
  // deep-tail evaluation stays finite and positive
  CHECK(std::isfinite(f.h(-35.0)));
  CHECK(std::isfinite(f.dh(-35.0)));
  CHECK(f.dh(-35.0) > 0.0);
  CHECK(std::isfinite(f.h1(35.0)));
}

TEST_CASE("make_family rejects bad input") {
  CHECK_THROWS_AS(make_family(FamilyId::gamma, 0.0), InputError);
  CHECK_THROWS_AS(make_family(FamilyId::gamma, -1.0), InputError);
  CHECK_THROWS_AS(family_from_string("weibull"), InputError);
}

TEST_CASE("identity h1' = g_inv * h' on [-10, 10]") {
  for (FamilyId id : all_families()) {
    const FamilySpec f = make_family(id, 1.7);
    for (int k = 0; k < 1000; ++k) {
      const double u = -10.0 + 20.0 * k / 999.0;
      const double lhs = f.dh1(u);
      const double rhs = f.g_inv(u) * f.dh(u);
      CHECK_MESSAGE(std::abs(lhs - rhs) <= 1e-8 * (1.0 + std::abs(lhs)),
                    to_string(id) << " at u=" << u);
    }
  }
}

TEST_CASE("identity h1'' = g_inv' h' + g_inv h'' on [-10, 10]") {
  for (FamilyId id : all_families()) {
    const FamilySpec f = make_family(id, 0.8);
    for (int k = 0; k < 1000; ++k) {
      const double u = -10.0 + 20.0 * k / 999.0;
      const double lhs = f.d2h1(u);
      const double rhs = f.dg_inv(u) * f.dh(u) + f.g_inv(u) * f.d2h(u);
      CHECK_MESSAGE(std::abs(lhs - rhs) <= 1e-8 * (1.0 + std::abs(lhs)),
                    to_string(id) << " at u=" << u);
    }
  }
}

TEST_CASE("analytic derivatives match central differences on [-6, 6]") {
  for (FamilyId id : all_families()) {
    const FamilySpec f = make_family(id, 1.4);
    struct Pair {
      std::function<double(double)> base;
      std::function<double(double)> deriv;
      const char* name;
    };
    const Pair pairs[] = {
        {[&](double u) { return f.h(u); }, [&](double u) { return f.dh(u); },
         "h'"},
        {[&](double u) { return f.dh(u); }, [&](double u) { return f.d2h(u); },
         "h''"},
        {[&](double u) { return f.d2h(u); }, [&](double u) { return f.d3h(u); },
         "h'''"},
        {[&](double u) { return f.h1(u); }, [&](double u) { return f.dh1(u); },
         "h1'"},
        {[&](double u) { return f.dh1(u); },
         [&](double u) { return f.d2h1(u); }, "h1''"},
        {[&](double u) { return f.d2h1(u); },
         [&](double u) { return f.d3h1(u); }, "h1'''"},
        {[&](double u) { return f.g_inv(u); },
         [&](double u) { return f.dg_inv(u); }, "g_inv'"},
    };
    for (const auto& pr : pairs) {
      for (int k = 0; k <= 120; ++k) {
        const double u = -6.0 + 12.0 * k / 120.0;
        const double fd = central_diff(pr.base, u);
        CHECK_MESSAGE(close_rel(pr.deriv(u), fd, 1e-5),
                      to_string(id) << " " << pr.name << " at u=" << u
                                    << " analytic=" << pr.deriv(u)
                                    << " fd=" << fd);
      }
    }
  }
}

TEST_CASE("convexity of the per-observation likelihood kernels") {
  for (FamilyId id : all_families()) {
    if (id == FamilyId::linear) continue;
    const FamilySpec f = make_family(id, 1.2);
    for (int k = 0; k <= 400; ++k) {
      const double u = -10.0 + 20.0 * k / 400.0;
      CHECK(f.d2h1(u) >= -1e-12);
      if (id == FamilyId::probit) {
        // -h is not convex for probit, but with binary responses the
        // likelihood kernels -h + h1 (y = 1) and h1 (y = 0) are.
        CHECK(f.d2h1(u) - f.d2h(u) >= -1e-12);
      } else {
        CHECK(-f.d2h(u) >= -1e-12);
      }
    }
  }
  const FamilySpec lin = make_family(FamilyId::linear);
  CHECK(lin.d2h(0.3) == 0.0);
  CHECK(lin.d2h1(0.3) == 1.0);
}

TEST_CASE("var_fun positive on the working range") {
  for (FamilyId id : all_families()) {
    const FamilySpec f = make_family(id, 2.0);
    for (int k = 0; k <= 200; ++k) {
      const double u = -10.0 + 20.0 * k / 200.0;
      CHECK(f.var_fun(u) > 0.0);
    }
  }
}

TEST_CASE("validate_dataset support rules") {
  Dataset d{Eigen::MatrixXd::Identity(4, 2), Eigen::VectorXd(4)};

  d.y << 0, 1, 1, 0;
  CHECK(validate_dataset(make_family(FamilyId::logistic), d).valid);

  d.y << 0.5, 1, 1, 0;
  const auto bad = validate_dataset(make_family(FamilyId::logistic), d);
  CHECK_FALSE(bad.valid);
  REQUIRE(bad.bad_rows.size() == 1);
  CHECK(bad.bad_rows[0] == 0);

  d.y << 1.0, 2.0, 0.0, 3.0;
  const auto gam = validate_dataset(make_family(FamilyId::gamma), d);
  CHECK_FALSE(gam.valid);
  REQUIRE(gam.bad_rows.size() == 1);
  CHECK(gam.bad_rows[0] == 2);
  CHECK(validate_dataset(make_family(FamilyId::poisson), d).valid);

  Dataset lin{Eigen::MatrixXd::Ones(3, 1), Eigen::VectorXd(3)};
  lin.y << -3.2, 0.0, 7.1;
  CHECK(validate_dataset(make_family(FamilyId::linear), lin).valid);

  lin.y(1) = std::nan("");
  CHECK_FALSE(validate_dataset(make_family(FamilyId::linear), lin).valid);
}

TEST_CASE("neg_log_likelihood closed forms") {
  const FamilySpec lin = make_family(FamilyId::linear);
  Dataset d{Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd(2)};
  d.y << 1, 2;
  Eigen::VectorXd beta(2);
  beta << 1, 2;
  CHECK(neg_log_likelihood(lin, d, beta) == doctest::Approx(-2.5));

  // all-zero weights give an empty sum for any family
  for (FamilyId id : all_families()) {
    Dataset ok = testsupport::random_dataset(make_family(id), 6, 2, 99);
    CHECK(neg_log_likelihood(make_family(id), ok, Eigen::VectorXd::Zero(2),
                             Eigen::VectorXd::Zero(6)) == 0.0);
  }

  const FamilySpec logi = make_family(FamilyId::logistic);
  Dataset one{Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Ones(1)};
  CHECK(neg_log_likelihood(logi, one, Eigen::VectorXd::Zero(1)) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));

  CHECK_THROWS_AS(neg_log_likelihood(lin, d, Eigen::VectorXd::Zero(3)),
                  DimensionError);
}

TEST_CASE("neg_log_likelihood reports the overflowing observation") {
  const FamilySpec gam = make_family(FamilyId::gamma);
  Dataset d{Eigen::MatrixXd::Ones(2, 1), Eigen::VectorXd(2)};
  d.y << 1.0, 1e290;
  Eigen::VectorXd beta(1);
  beta << -800.0;  // exp(-eta) clamps at e^700, then y * e^700 overflows
  try {
    neg_log_likelihood(gam, d, beta);
    FAIL("expected NonFiniteError");
  } catch (const NonFiniteError& e) {
    CHECK(e.index() == 1);
  }
}

TEST_CASE("nll_gradient closed forms and examples") {
  const FamilySpec lin = make_family(FamilyId::linear);
  Rng rng = make_rng(7);
  Eigen::MatrixXd X = generate_design(12, 3, rng);
  Eigen::VectorXd beta(3), w(12);
  beta << 0.3, -1.1, 0.0;
  for (int i = 0; i < 12; ++i) w(i) = 0.25 + 0.05 * i;
  Dataset d{X, Eigen::VectorXd::Zero(12)};
  {
    Rng r2 = make_rng(8);
    d.y = generate_responses(lin, X, beta, r2);
  }
  const Eigen::VectorXd g = nll_gradient(lin, d, beta, w);
  const Eigen::VectorXd expected =
      -X.transpose() * w.asDiagonal() * (d.y - X * beta);
  CHECK((g - expected).lpNorm<Eigen::Infinity>() < 1e-12);

  // residuals vanish -> zero gradient
  Dataset exact{X, X * beta};
  CHECK(nll_gradient(lin, exact, beta).lpNorm<Eigen::Infinity>() < 1e-12);

  const FamilySpec logi = make_family(FamilyId::logistic);
  Dataset one{Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Ones(1)};
  const Eigen::VectorXd g1 = nll_gradient(logi, one, Eigen::VectorXd::Zero(1));
  CHECK(g1(0) == doctest::Approx(-0.5));
}

TEST_CASE("nll_gradient matches finite differences on random instances") {
  int instance = 0;
  for (int rep = 0; rep < 10; ++rep) {
    for (FamilyId id : all_families()) {
      const FamilySpec f = make_family(id, 1.3);
      const Eigen::Index n = 8 + 4 * (instance % 3), p = 2 + instance % 2;
      Dataset d = testsupport::random_dataset(f, n, p, 1000 + instance, 0.6);
      Rng rng = make_rng(2000 + instance);
      std::uniform_real_distribution<double> unif(0.1, 2.0);
      Eigen::VectorXd beta(p), w(n);
      for (Eigen::Index j = 0; j < p; ++j) beta(j) = unif(rng) - 1.0;
      for (Eigen::Index i = 0; i < n; ++i) w(i) = unif(rng);

      const Eigen::VectorXd g = nll_gradient(f, d, beta, w);
      for (Eigen::Index j = 0; j < p; ++j) {
        const double fd = central_diff(
            [&](double t) {
              Eigen::VectorXd b = beta;
              b(j) = t;
              return neg_log_likelihood(f, d, b, w);
            },
            beta(j), 1e-5);
        CHECK_MESSAGE(close_rel(g(j), fd, 1e-6),
                      to_string(id) << " coord " << j << " grad=" << g(j)
                                    << " fd=" << fd);
      }
      ++instance;
    }
  }
}

TEST_CASE("diagnostics_matrices closed forms") {
  Rng rng = make_rng(42);
  Eigen::MatrixXd X = generate_design(20, 3, rng);

  const FamilySpec lin = make_family(FamilyId::linear);
  Dataset d{X, Eigen::VectorXd::Random(20)};
  Eigen::VectorXd beta = Eigen::VectorXd::Random(3);
  const auto lin_diag = diagnostics_matrices(lin, d, beta);
  const Eigen::MatrixXd expected = X.transpose() * X / 20.0;
  CHECK((lin_diag.L_n - expected).norm() < 1e-12);
  CHECK((lin_diag.L_n - lin_diag.L_n.transpose()).norm() < 1e-14);

  // gamma with y_i = mu_i + sd_i makes the plug-in equal alpha * X'X / n
  const double alpha = 2.0;
  const FamilySpec gam = make_family(FamilyId::gamma, alpha);
  Dataset dg{X, Eigen::VectorXd(20)};
  const Eigen::VectorXd eta = X * beta;
  for (int i = 0; i < 20; ++i)
    dg.y(i) = gam.g_inv(eta(i)) + std::sqrt(gam.var_fun(eta(i)));
  const auto gam_diag = diagnostics_matrices(gam, dg, beta);
  CHECK((gam_diag.S_n_hat - alpha * expected).norm() <
        1e-10 * alpha * expected.norm());

  // logistic, single row x = (1), beta = 0: L_n = 1/4
  const FamilySpec logi = make_family(FamilyId::logistic);
  Dataset one{Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Ones(1)};
  const auto logi_diag =
      diagnostics_matrices(logi, one, Eigen::VectorXd::Zero(1));
  CHECK(logi_diag.L_n(0, 0) == doctest::Approx(0.25));

  // logistic closed form at general beta
  Dataset db = testsupport::random_dataset(logi, 25, 3, 5);
  Eigen::VectorXd bb(3);
  bb << 0.4, -0.2, 0.1;
  const auto diag2 = diagnostics_matrices(logi, db, bb);
  Eigen::MatrixXd manual = Eigen::MatrixXd::Zero(3, 3);
  const Eigen::VectorXd eta2 = db.X * bb;
  for (int i = 0; i < 25; ++i) {
    const double e = std::exp(eta2(i));
    manual += e / ((1 + e) * (1 + e)) * db.X.row(i).transpose() * db.X.row(i);
  }
  manual /= 25.0;
  CHECK((diag2.L_n - manual).norm() < 1e-12);
}

TEST_SUITE_END();
