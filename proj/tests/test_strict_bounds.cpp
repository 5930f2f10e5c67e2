#include "annuity_bounds/strict_bounds.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace annuity_bounds;

namespace {

ContractSpec contract(ProductKind kind, double T, int x = 60) {
	ContractSpec c;
	c.kind = kind;
	c.x = x;
	c.T = T;
	return c;
}

// Zero rates, cash-only fund, no roll-up: every option price collapses to A0.
MarketParams still_market() {
	MarketParams m;
	m.curve = YieldCurveParams::flat(0.0);
	m.sigma_r = 0.0;
	m.r0 = 0.0;
	return m;
}

FundParams cash_fund() {
	FundParams f;
	f.pi_S = 0.0;
	f.pi_P = 0.0;
	return f;
}

AnnualSurvival table_probs(int x, int n) { return annual_survival_probs(default_life_table(), x, n); }

} // namespace

TEST(StepSurvival, RightAndLeftContinuousSteps) {
	const AnnualSurvival p{60, {0.9, 0.8}};
	EXPECT_DOUBLE_EQ(step_survival(p, StepDirection::Sup, 0.0, 0.5), 1.0);
	EXPECT_DOUBLE_EQ(step_survival(p, StepDirection::Sup, 0.0, 1.0), 0.9);
	EXPECT_DOUBLE_EQ(step_survival(p, StepDirection::Sup, 0.0, 2.0), 0.72);
	EXPECT_DOUBLE_EQ(step_survival(p, StepDirection::Inf, 0.0, 0.0), 1.0);
	EXPECT_DOUBLE_EQ(step_survival(p, StepDirection::Inf, 0.0, 0.5), 0.9);
	EXPECT_DOUBLE_EQ(step_survival(p, StepDirection::Inf, 0.0, 1.0), 0.9);
	EXPECT_DOUBLE_EQ(step_survival(p, StepDirection::Inf, 0.0, 1.5), 0.72);
	EXPECT_DOUBLE_EQ(step_survival(p, StepDirection::Inf, 0.0, 1.5, 1), 0.9);
	for (FaaKind k : kAllFaaKinds)
		for (double s = 0.0; s <= 2.0; s += 0.125) {
			EXPECT_LE(step_survival(p, StepDirection::Inf, 0.0, s), faa_survival(p, k, s) + 1e-15);
			EXPECT_GE(step_survival(p, StepDirection::Sup, 0.0, s), faa_survival(p, k, s) - 1e-15);
		}
}

TEST(StrictHorizon, WholeYearsInsideInterval) {
	EXPECT_EQ(strict_horizon(0.0, 5.0), 5);
	EXPECT_EQ(strict_horizon(0.5, 5.0), 4);
	EXPECT_EQ(strict_horizon(0.5, 0.9), 0);
}

TEST(GmabBounds, CollapseToSurvivalTimesOption) {
	const AnnualSurvival p{60, {0.99, 0.98, 0.97, 1.0, 0.9}};
	auto spec = contract(ProductKind::GMAB, 5.0);
	spec.r_g = 0.0;
	const auto b = strict_bounds(spec, still_market(), cash_fund(), p, 0.0, 100.0);
	EXPECT_NEAR(b.upper, 100.0 * 0.99 * 0.98 * 0.97 * 0.9, 1e-12);
	EXPECT_EQ(b.upper, b.lower);

	const auto q = AnnualSurvival{60, {0.95, 1.0, 1.0}};
	spec.T = 3.0;
	EXPECT_NEAR(strict_bounds(spec, still_market(), cash_fund(), q, 0.0, 100.0).lower, 95.0, 1e-12);
}

TEST(GmabBounds, EveryFaaGivesTheSamePrice) {
	const MarketParams m;
	const FundParams f;
	for (int T : {1, 3, 7}) {
		const auto spec = contract(ProductKind::GMAB, T);
		const auto p = table_probs(60, T);
		const auto b = strict_bounds(spec, m, f, p, m.r0, f.A0);
		for (FaaKind k : kAllFaaKinds) EXPECT_NEAR(faa_baseline_price(spec, m, f, p, k, m.r0, f.A0), b.upper, 1e-10);
	}
}

TEST(GmibBounds, MatchesPanelwiseQuadrature) {
	const MarketParams m;
	const FundParams f;
	const auto spec = contract(ProductKind::GMIB, 4.0);
	const auto p = table_probs(70, 4);
	auto flow = [&](double s) { return price_gmib_flow(m, f, f.A0, m.r0, 0.0, s, spec); };
	double upper = 0.0, lower = 0.0;
	for (int j = 0; j < 4; ++j) {
		const double integral = oracle::simpson(flow, j, j + 1.0, 1e-13);
		upper += p.cumulative(j) * integral;
		lower += p.cumulative(j + 1) * integral;
	}
	const auto b = strict_bounds(spec, m, f, p, m.r0, f.A0);
	EXPECT_NEAR(b.upper, upper, 1e-8);
	EXPECT_NEAR(b.lower, lower, 1e-8);
	ASSERT_EQ(b.upper_schedule.interventions.size(), 4u);
	EXPECT_DOUBLE_EQ(b.upper_schedule.interventions[2].tau, 3.0);
	EXPECT_DOUBLE_EQ(b.upper_schedule.interventions[2].jump, 1.0 - p.probs[2]);
}

TEST(GmibBounds, CertainSurvivalCollapses) {
	const MarketParams m;
	const FundParams f;
	const auto spec = contract(ProductKind::GMIB, 3.0);
	const auto b = strict_bounds(spec, m, f, AnnualSurvival{60, {1.0, 1.0, 1.0}}, m.r0, f.A0);
	EXPECT_NEAR(b.upper, b.lower, 1e-14);
	auto flow = [&](double s) { return price_gmib_flow(m, f, f.A0, m.r0, 0.0, s, spec); };
	EXPECT_NEAR(b.upper, oracle::simpson(flow, 0.0, 3.0, 1e-13), 1e-8);
}

TEST(GmdbBounds, OneYearExtremesOfTheDeathBenefit) {
	const MarketParams m;
	const FundParams f;
	const auto spec = contract(ProductKind::GMDB, 1.0);
	const AnnualSurvival p{60, {0.97}};
	double hi = 0.0, lo = std::numeric_limits<double>::infinity();
	for (int i = 0; i <= 20000; ++i) {
		const double tau = i / 20000.0;
		const double c = price_max_payoff(m, f, f.A0, m.r0, 0.0, tau, spec.guarantee(f.A0, tau));
		hi = std::max(hi, c);
		lo = std::min(lo, c);
	}
	const auto b = strict_bounds(spec, m, f, p, m.r0, f.A0);
	EXPECT_NEAR(b.upper, 0.03 * hi, 1e-9);
	EXPECT_NEAR(b.lower, 0.03 * lo, 1e-9);
	EXPECT_LE(b.formula_upper, b.upper + 1e-12);
	EXPECT_GE(b.formula_lower, b.lower - 1e-12);
}

TEST(GmdbBounds, DeathMassTelescopes) {
	const AnnualSurvival p{60, {0.99, 0.95, 0.9, 0.8}};
	auto spec = contract(ProductKind::GMDB, 4.0);
	spec.r_g = 0.0;
	const auto b = strict_bounds(spec, still_market(), cash_fund(), p, 0.0, 100.0);
	EXPECT_NEAR(b.upper, 100.0 * (1.0 - p.cumulative(4)), 1e-10);
	EXPECT_NEAR(b.lower, b.upper, 1e-10);
	ASSERT_TRUE(b.assumptions.has_value());
	EXPECT_TRUE(b.assumptions->rg_dominates_forward);
	EXPECT_EQ(strict_bounds(spec, still_market(), cash_fund(), AnnualSurvival{60, {1.0, 1.0, 1.0, 1.0}}, 0.0, 100.0)
					  .upper,
			0.0);
}

TEST(GmdbBounds, FlagsForwardAboveRollUp) {
	const MarketParams m;
	const FundParams f;
	const auto b = strict_bounds(contract(ProductKind::GMDB, 5.0), m, f, table_probs(60, 5), m.r0, f.A0);
	EXPECT_TRUE(b.assumptions_violated);
}

class StrictSandwich : public ::testing::TestWithParam<std::tuple<ProductKind, int, int>> {};

TEST_P(StrictSandwich, FaaPricesLieInsideBounds) {
	const auto [kind, x, T] = GetParam();
	const MarketParams m;
	const FundParams f;
	const auto spec = contract(kind, T, x);
	const auto p = table_probs(x, T);
	const auto b = strict_bounds(spec, m, f, p, m.r0, f.A0);
	EXPECT_LE(b.lower, b.upper);
	for (FaaKind k : kAllFaaKinds) {
		const double v = faa_baseline_price(spec, m, f, p, k, m.r0, f.A0);
		EXPECT_GE(v, b.lower - 1e-9) << to_string(k);
		EXPECT_LE(v, b.upper + 1e-9) << to_string(k);
	}
}

INSTANTIATE_TEST_SUITE_P(Products, StrictSandwich,
		::testing::Combine(::testing::Values(ProductKind::GMIB, ProductKind::GMDB), ::testing::Values(40, 60, 80),
				::testing::Values(1, 3, 10)));

TEST(StrictBounds, UpperGrowsWithMaturity) {
	const MarketParams m;
	const FundParams f;
	for (auto kind : {ProductKind::GMIB, ProductKind::GMDB}) {
		double prev = 0.0;
		for (int T = 1; T <= 10; ++T) {
			const double u = strict_bounds(contract(kind, T), m, f, table_probs(60, T), m.r0, f.A0).upper;
			EXPECT_GT(u, prev);
			prev = u;
		}
	}
}

TEST(StrictBounds, RejectsCombinedAndShortTables) {
	const MarketParams m;
	const FundParams f;
	EXPECT_THROW(strict_bounds(contract(ProductKind::Combined, 2.0), m, f, table_probs(60, 2), m.r0, f.A0), Error);
	try {
		strict_bounds(contract(ProductKind::GMIB, 5.0), m, f, table_probs(60, 3), m.r0, f.A0);
		FAIL();
	} catch (const Error &e) {
		EXPECT_EQ(e.code(), ErrorCode::AgeOutOfRange);
	}
}
