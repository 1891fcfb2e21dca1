#include <gtest/gtest.h>

#include "eerk/tableau.hpp"

namespace {

using namespace eerk;

// Stages and phi slots are written 1-based below to match the usual tables;
// the accessors are 0-based in stages.
double lam(const EERKTableau& t, int i, int j, int l) { return t.lambda(i - 1, j - 1, l); }
double mu(const EERKTableau& t, int i, int l) { return t.mu(i - 1, l); }

TEST(Builtin, Rk2Coefficients) {
  const EERKTableau t = builtin("rk2");
  EXPECT_EQ(t.stages(), 2);
  EXPECT_EQ(t.classical_order(), 2);
  EXPECT_EQ(t.nodes(), (std::vector<double>{0.0, 0.5}));
  EXPECT_EQ(lam(t, 2, 1, 1), 0.5);
  EXPECT_EQ(mu(t, 2, 1), 1.0);
  EXPECT_EQ(mu(t, 1, 1), 0.0);
  EXPECT_EQ(mu_column_sum(t, 1), 1.0);
  EXPECT_EQ(mu_column_sum(t, 2), 0.0);
}

TEST(Builtin, Rk2bCoefficients) {
  const EERKTableau t = builtin("rk2b");
  EXPECT_EQ(lam(t, 2, 1, 1), 0.5);
  EXPECT_EQ(mu(t, 1, 1), 1.0);
  EXPECT_EQ(mu(t, 1, 2), -2.0);
  EXPECT_EQ(mu(t, 2, 2), 2.0);
  EXPECT_EQ(mu(t, 2, 1), 0.0);
  EXPECT_EQ(mu_column_sum(t, 1), 1.0);
  EXPECT_EQ(mu_column_sum(t, 2), 0.0);
}

TEST(Builtin, KrogstadCoefficients) {
  const EERKTableau t = builtin("krogstad");
  EXPECT_EQ(t.stages(), 4);
  EXPECT_EQ(t.classical_order(), 4);
  EXPECT_EQ(t.nodes(), (std::vector<double>{0.0, 0.5, 0.5, 1.0}));
  EXPECT_EQ(lam(t, 2, 1, 1), 0.5);
  EXPECT_EQ(lam(t, 3, 1, 1), 0.5);
  EXPECT_EQ(lam(t, 3, 1, 2), -1.0);
  EXPECT_EQ(lam(t, 3, 2, 2), 1.0);
  EXPECT_EQ(lam(t, 4, 1, 1), 1.0);
  EXPECT_EQ(lam(t, 4, 1, 2), -2.0);
  EXPECT_EQ(lam(t, 4, 3, 2), 2.0);
  EXPECT_EQ(lam(t, 4, 2, 2), 0.0);
  EXPECT_EQ(mu(t, 1, 1), 1.0);
  EXPECT_EQ(mu(t, 1, 2), -3.0);
  EXPECT_EQ(mu(t, 1, 3), 4.0);
  EXPECT_EQ(mu(t, 2, 2), 2.0);
  EXPECT_EQ(mu(t, 2, 3), -4.0);
  EXPECT_EQ(mu(t, 3, 2), 2.0);
  EXPECT_EQ(mu(t, 3, 3), -4.0);
  EXPECT_EQ(mu(t, 4, 2), -1.0);
  EXPECT_EQ(mu(t, 4, 3), 4.0);
  EXPECT_EQ(mu_column_sum(t, 2), -3.0 + 2.0 + 2.0 - 1.0);
  EXPECT_EQ(mu_column_sum(t, 3), 4.0 - 4.0 - 4.0 + 4.0);
}

TEST(Builtin, UnknownNameRejected) { EXPECT_THROW(builtin("rk5"), std::invalid_argument); }

TEST(Builtin, IndicesPastStageCountReadZero) {
  const EERKTableau t = builtin("rk2");
  EXPECT_EQ(t.mu(1, 3), 0.0);
  EXPECT_EQ(t.lambda(1, 0, 5), 0.0);
  EXPECT_THROW(t.mu(0, 0), std::out_of_range);
}

TEST(Builtin, KrogstadHigherSlotsVanish) {
  const EERKTableau t = builtin("krogstad");
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      EXPECT_EQ(t.lambda(i, j, 3), 0.0);
      EXPECT_EQ(t.lambda(i, j, 4), 0.0);
    }
    EXPECT_EQ(t.mu(i, 4), 0.0);
  }
}

TEST(Construction, EnforcesExplicitnessAndNodeRange) {
  EERKTableau t("x", 2, {0.0, 0.5});
  EXPECT_THROW(t.set_lambda(0, 0, 1, 1.0), std::invalid_argument);
  EXPECT_THROW(t.set_lambda(0, 1, 1, 1.0), std::invalid_argument);
  EXPECT_THROW(t.set_lambda(1, 0, 3, 1.0), std::out_of_range);
  EXPECT_THROW(EERKTableau("y", 1, {1.5}), std::invalid_argument);
  EXPECT_THROW(EERKTableau("y", 1, {}), std::invalid_argument);
}

TEST(Construction, ConsistencyChecked) {
  EERKTableau t("x", 2, {0.0, 0.5});
  t.set_lambda(1, 0, 1, 0.25);
  EXPECT_NEAR(t.consistency_residual(), 0.25, 1e-16);
  EXPECT_THROW(t.require_consistent(), std::invalid_argument);
  for (const auto& name : builtin_names()) {
    EXPECT_LE(builtin(name).consistency_residual(), 1e-14) << name;
  }
}

TEST(OrderConditions, Rk2) {
  const ConditionReport r = check_order_conditions(builtin("rk2"), 2);
  EXPECT_EQ(r.entries.size(), 2u);
  EXPECT_EQ(r.at("order_1").residual, 0.0);
  EXPECT_EQ(r.at("order_2").residual, 0.0);
  EXPECT_TRUE(r.all_satisfied());
}

TEST(OrderConditions, KrogstadAndRk2b) {
  EXPECT_TRUE(check_order_conditions(builtin("krogstad"), 4).all_satisfied());
  EXPECT_LE(check_order_conditions(builtin("krogstad"), 4).max_residual(), 1e-15);
  EXPECT_TRUE(check_order_conditions(builtin("rk2b"), 2).all_satisfied());
}

TEST(OrderConditions, ZeroWeightsGiveUnitResidual) {
  EERKTableau t("zero", 1, {0.0});
  const ConditionReport r = check_order_conditions(t, 1);
  EXPECT_EQ(r.at("order_1").residual, 1.0);
  EXPECT_FALSE(r.at("order_1").satisfied);
  EXPECT_THROW(check_order_conditions(t, 5), std::invalid_argument);
}

TEST(OrderConditions, RowsOfHandComputedSums) {
  // krogstad, r = 3: sum_l (sum_i mu_il) / (l+2)! with column sums (1, 0, 0).
  // Independent: sum_i mu_i1/3! + mu_i2/4! + mu_i3/5! per stage.
  const EERKTableau t = builtin("krogstad");
  double sum = 0.0;
  const double f[] = {0.0, 1.0 / 6.0, 1.0 / 24.0, 1.0 / 120.0};
  for (int i = 1; i <= 4; ++i)
    for (int l = 1; l <= 3; ++l) sum += mu(t, i, l) * f[l];
  EXPECT_NEAR(sum, 1.0 / 6.0, 1e-16);
}

TEST(OrderConditions, PerturbedMuIsDetected) {
  for (const auto& name : builtin_names()) {
    const EERKTableau base = builtin(name);
    const int s = base.stages();
    for (int i = 0; i < s; ++i) {
      for (int l = 1; l <= s; ++l) {
        EERKTableau t = base;
        t.set_mu(i, l, t.mu(i, l) + 1e-6);
        const ConditionReport r = check_order_conditions(t, t.classical_order());
        // phi_l(0) = 1/l! weights slot l in the conditions.
        EXPECT_GE(r.max_residual(), 0.5e-6 / std::tgamma(l + 1.0)) << name << " i=" << i << " l=" << l;
      }
    }
  }
}

TEST(Simplifying, BuiltinsSatisfyAll) {
  for (const auto& name : builtin_names()) {
    const ConditionReport r = check_simplifying(builtin(name));
    EXPECT_TRUE(r.all_satisfied()) << name;
    EXPECT_LE(r.max_residual(), 1e-13) << name;
  }
  const ConditionReport k = check_simplifying(builtin("krogstad"));
  EXPECT_EQ(k.at("lambda_4_1").residual, 0.0);
  EXPECT_EQ(k.at("lambda_4_2").residual, 0.0);
  EXPECT_EQ(lam(builtin("krogstad"), 4, 1, 2) + lam(builtin("krogstad"), 4, 3, 2), 0.0);
}

TEST(Simplifying, CounterexampleFlagged) {
  EERKTableau t = builtin("rk2");
  t.set_lambda(1, 0, 2, 1.0);
  const ConditionReport r = check_simplifying(t);
  EXPECT_FALSE(r.all_satisfied());
  EXPECT_EQ(r.at("lambda_2_2").residual, 1.0);
  EXPECT_FALSE(r.at("lambda_2_2").satisfied);
  EXPECT_TRUE(satisfies_mu_conditions(t));
  EXPECT_FALSE(satisfies_lambda_conditions(t));
}

TEST(Simplifying, ResidualsNonnegative) {
  EERKTableau t = builtin("krogstad");
  t.set_mu(0, 1, 0.5);
  t.set_lambda(3, 0, 1, 0.2);
  for (const auto& e : check_simplifying(t).entries) EXPECT_GE(e.residual, 0.0);
}

TEST(ColumnSums, TwoByTwoSystemIsExact) {
  const ColumnSumSystem sys = column_sum_system(2);
  EXPECT_EQ(sys.matrix[0][0], Rational(1));
  EXPECT_EQ(sys.matrix[0][1], Rational(1, 2));
  EXPECT_EQ(sys.matrix[1][0], Rational(1, 2));
  EXPECT_EQ(sys.matrix[1][1], Rational(1, 6));
  EXPECT_EQ(sys.solution[0], Rational(1));
  EXPECT_EQ(sys.solution[1], Rational(0));
}

TEST(ColumnSums, SolutionIsFirstCanonicalVector) {
  for (int s = 1; s <= 6; ++s) {
    const ColumnSumSystem sys = column_sum_system(s);
    for (int l = 0; l < s; ++l) EXPECT_EQ(sys.solution[static_cast<std::size_t>(l)], Rational(l == 0 ? 1 : 0));
  }
}

TEST(ColumnSumCriterion, BuiltinsAndSingleStage) {
  EXPECT_TRUE(theorem1_verify(builtin("rk2")));
  EXPECT_TRUE(theorem1_verify(builtin("krogstad")));
  EERKTableau one("euler", 1, {0.0});
  one.set_mu(0, 1, 1.0);
  EXPECT_TRUE(theorem1_verify(one));
}

TEST(ColumnSumCriterion, InapplicableWhenStagesExceedOrder) {
  EERKTableau t("s3q2", 2, {0.0, 0.5, 1.0});
  EXPECT_THROW(theorem1_verify(t), std::domain_error);
}

TEST(ColumnSumCriterion, ImpliesMuConditions) {
  for (const auto& name : builtin_names()) {
    const EERKTableau t = builtin(name);
    if (t.stages() > t.classical_order()) continue;
    if (!theorem1_verify(t)) continue;
    for (const auto& e : check_simplifying(t).entries) {
      if (e.condition.rfind("mu_", 0) == 0) {
        EXPECT_LE(e.residual, 1e-12) << name << " " << e.condition;
      }
    }
  }
}

TEST(ColumnSumCriterion, WrongColumnSumsRejected) {
  EERKTableau t("bad", 2, {0.0, 0.5});
  t.set_lambda(1, 0, 1, 0.5);
  t.set_mu(1, 1, 1.0);
  t.set_mu(0, 2, 0.1);
  EXPECT_FALSE(theorem1_verify(t));
}

TEST(Scalars, KrogstadHandComputed) {
  const EERKTableau t = builtin("krogstad");
  const TableauScalars sc(t);
  // m_n = sum_i mu_in c_i with c = (0, 1/2, 1/2, 1)
  EXPECT_EQ(sc.m_at(1), 0.0);
  EXPECT_EQ(sc.m_at(2), -3.0 * 0.0 + 2.0 * 0.5 + 2.0 * 0.5 - 1.0 * 1.0);
  EXPECT_EQ(sc.m_at(3), 4.0 * 0.0 - 4.0 * 0.5 - 4.0 * 0.5 + 4.0 * 1.0);
  EXPECT_EQ(sc.m_at(3), 0.0);
  EXPECT_EQ(sc.m_at(4), 0.0);
  // stage 3: lambda_31l c_1 + lambda_32l c_2 = (0, 1/2)
  EXPECT_EQ(sc.lambda_c_at(1, 2), 0.0);
  EXPECT_EQ(sc.lambda_c_at(2, 2), 0.5);
  // stage 4: c_3 lambda_432 = 1
  EXPECT_EQ(sc.lambda_c_at(2, 3), 1.0);
  EXPECT_EQ(sc.lambda_c_at(7, 3), 0.0);
  // big_lambda_i = sum lambda / (l + 1)!: stage 4 = 1/2 - 2/6 + 2/6 = 1/2
  EXPECT_NEAR(sc.big_lambda[3], 0.5, 1e-16);
  EXPECT_NEAR(sc.big_lambda[2], 0.5 / 2.0 - 1.0 / 6.0 + 1.0 / 6.0, 1e-16);
  // gamma_i = sum lambda c_j / l!: stage 4 = 2 * (1/2) / 2 = 1/2
  EXPECT_NEAR(sc.gamma[3], 0.5, 1e-16);
}

TEST(Scalars, Rk2) {
  const TableauScalars sc(builtin("rk2"));
  EXPECT_EQ(sc.m_at(1), 0.5);
  EXPECT_EQ(sc.m_at(2), 0.0);
  EXPECT_EQ(sc.m_at(0), 0.0);
}

TEST(TextFormat, RoundTrip) {
  for (const auto& name : builtin_names()) {
    const EERKTableau t = builtin(name);
    EXPECT_EQ(from_text(to_text(t)), t) << name;
  }
}

TEST(TextFormat, RejectsMalformedInput) {
  EXPECT_THROW(from_text("name x\ns 2\nq 2\nc 0 0.5\nlambda 1 2 1 0.5\n"), std::invalid_argument);
  EXPECT_THROW(from_text("name x\ns 2\nq 2\nc 0\n"), std::invalid_argument);
  EXPECT_THROW(from_text("name x\ns 2\nq 2\nc 0 0.5\nbogus 1\n"), std::invalid_argument);
}

}  // namespace
