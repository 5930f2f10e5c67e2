#include "annuity_bounds/mc_oracle.hpp"

#include <gtest/gtest.h>

using namespace annuity_bounds;

namespace {

McConfig small(std::size_t paths = 20000, int steps = 12) {
	McConfig c;
	c.paths = paths;
	c.steps_per_year = steps;
	c.block = 2048;
	return c;
}

ContractSpec contract(ProductKind kind, double T, int x = 60) {
	ContractSpec c;
	c.kind = kind;
	c.x = x;
	c.T = T;
	return c;
}

AnnualSurvival probs(int x, int n) { return annual_survival_probs(default_life_table(), x, n); }

} // namespace

TEST(McPaths, SeedDeterminesPaths) {
	const auto a = simulate_market_paths(MarketParams{}, FundParams{}, 2.0, small(4096));
	const auto b = simulate_market_paths(MarketParams{}, FundParams{}, 2.0, small(4096));
	EXPECT_EQ(a.fund, b.fund);
	EXPECT_EQ(a.rate, b.rate);
	auto other = small(4096);
	other.seed = 43;
	EXPECT_NE(simulate_market_paths(MarketParams{}, FundParams{}, 2.0, other).fund, a.fund);
}

TEST(McPaths, ThreadCountDoesNotChangeEstimates) {
	const auto spec = contract(ProductKind::GMIB, 2.0);
	const auto policy = MortalityPolicy::faa(probs(60, 2), FaaKind::UDD);
	auto one = small(8192);
	one.threads = 1;
	auto four = one;
	four.threads = 4;
	const auto e1 = mc_price_streaming(spec, MarketParams{}, FundParams{}, one, policy);
	const auto e4 = mc_price_streaming(spec, MarketParams{}, FundParams{}, four, policy);
	EXPECT_EQ(e1.mean, e4.mean);
	EXPECT_EQ(e1.std_error, e4.std_error);
	const auto stored = mc_price(spec, FundParams{}, simulate_market_paths(MarketParams{}, FundParams{}, 2.0, one), policy);
	EXPECT_NEAR(stored.mean, e1.mean, 1e-10 * e1.mean);
}

TEST(McPaths, DiscountedFundAndBondAreUnbiased) {
	const MarketParams m;
	for (double T : {1.0, 5.0}) {
		const auto paths = simulate_market_paths(m, FundParams{}, T, small());
		const auto chk = mc_market_check(paths);
		EXPECT_NEAR(chk.discounted_fund.mean, 100.0, 4.0 * chk.discounted_fund.std_error) << T;
		EXPECT_NEAR(chk.discount.mean, zcb_price(m, m.r0, 0.0, T), 4.0 * chk.discount.std_error + 1e-12) << T;
	}
}

TEST(McPrice, NoMortalityGmabIsTheOptionPrice) {
	const MarketParams m;
	const FundParams f;
	const auto spec = contract(ProductKind::GMAB, 3.0);
	const auto est = mc_price_streaming(spec, m, f, small(), MortalityPolicy::constant(0.0));
	EXPECT_NEAR(est.mean, price_max_payoff(m, f, 100.0, m.r0, 0.0, 3.0, spec.guarantee(100.0, 3.0)),
			4.0 * est.std_error);
}

TEST(McPrice, ConstantHazardFactorsOut) {
	const auto spec = contract(ProductKind::GMAB, 2.0);
	const auto paths = simulate_market_paths(MarketParams{}, FundParams{}, 2.0, small(4096));
	const double base = mc_price(spec, FundParams{}, paths, MortalityPolicy::constant(0.0)).mean;
	EXPECT_NEAR(mc_price(spec, FundParams{}, paths, MortalityPolicy::constant(0.07)).mean, std::exp(-0.14) * base,
			1e-9 * base);
	EXPECT_LT(mc_price(spec, FundParams{}, paths, MortalityPolicy::constant(50.0)).mean, 1e-40);
}

TEST(McPrice, DeathBenefitAgreesWithClosedForm) {
	const MarketParams m;
	const FundParams f;
	const auto p = probs(60, 2);
	for (auto kind : {ProductKind::GMIB, ProductKind::GMDB}) {
		const auto spec = contract(kind, 2.0);
		const double closed = faa_baseline_price(spec, m, f, p, FaaKind::UDD, m.r0, f.A0);
		const auto est = mc_price_streaming(spec, m, f, small(40000, 24), MortalityPolicy::faa(p, FaaKind::UDD));
		EXPECT_NEAR(est.mean, closed, 4.0 * est.std_error + 2e-3 * closed) << to_string(kind);
	}
}

TEST(McPrice, AntitheticPairsReduceError) {
	const auto spec = contract(ProductKind::GMAB, 3.0);
	auto anti = small(16384);
	auto plain = anti;
	plain.antithetic = false;
	const auto policy = MortalityPolicy::constant(0.01);
	const auto a = mc_price_streaming(spec, MarketParams{}, FundParams{}, anti, policy);
	const auto b = mc_price_streaming(spec, MarketParams{}, FundParams{}, plain, policy);
	EXPECT_LT(a.std_error, b.std_error);
}

TEST(McPrice, ErrorShrinksWithRootPaths) {
	const auto spec = contract(ProductKind::GMIB, 2.0);
	const auto policy = MortalityPolicy::faa(probs(60, 2), FaaKind::CFM);
	const auto a = mc_price_streaming(spec, MarketParams{}, FundParams{}, small(8192), policy);
	const auto b = mc_price_streaming(spec, MarketParams{}, FundParams{}, small(32768), policy);
	EXPECT_NEAR(a.std_error / b.std_error, 2.0, 0.2);
}

TEST(McConfig, RejectsOddAntitheticCounts) {
	auto c = small(1001);
	EXPECT_THROW(c.validate(), Error);
	c.antithetic = false;
	EXPECT_NO_THROW(c.validate());
}

TEST(StrictPolicies, PreserveAnnualSurvival) {
	const auto p = probs(70, 3);
	const double h = 1.0 / 24.0;
	const auto policies = sample_strict_policies(p, 3, h, 6, 11);
	ASSERT_EQ(policies.size(), 6u);
	const auto spec = contract(ProductKind::GMAB, 3.0);
	const auto paths = simulate_market_paths(MarketParams{}, FundParams{}, 3.0, small(2048, 24));
	const double base = mc_price(spec, FundParams{}, paths, MortalityPolicy::constant(0.0)).mean;
	for (const auto &pol : policies)
		EXPECT_NEAR(mc_price(spec, FundParams{}, paths, pol).mean, p.cumulative(3) * base, 1e-6 * base);
}

TEST(Audit, StrictBoundsHoldOnSampledPolicies) {
	const MarketParams m;
	const FundParams f;
	const auto spec = contract(ProductKind::GMDB, 2.0);
	const auto p = probs(60, 2);
	const auto strict = strict_bounds(spec, m, f, p, m.r0, f.A0);
	EXPECT_TRUE(audit_strict_bounds(spec, m, f, p, strict, 0, small()).entries.empty());
	const auto report = audit_strict_bounds(spec, m, f, p, strict, 6, small(8192, 24));
	EXPECT_EQ(report.entries.size(), 9u);
	EXPECT_TRUE(report.passed());
}

TEST(Audit, BandPoliciesMatchTargetsInExpectation) {
	const auto p = probs(60, 2);
	const auto band = HazardBand::from_faa(p, FaaKind::Balducci, 1.0);
	const auto paths = simulate_market_paths(reduced_market(MarketParams{}, 0.01), FundParams{}, 2.0, small(4096, 24));
	const auto policies = sample_band_policies(band, paths, 100.0, 2, 4, 5);
	const auto spec = contract(ProductKind::GMAB, 2.0);
	const double base = mc_price(spec, FundParams{}, paths, MortalityPolicy::constant(0.0)).mean;
	ASSERT_EQ(policies.size(), 4u);
	for (const auto &pol : policies) {
		// the payoff is not constant, so only a loose sanity range applies
		const double v = mc_price(spec, FundParams{}, paths, pol).mean;
		EXPECT_GT(v, 0.5 * p.cumulative(2) * base);
		EXPECT_LT(v, base);
	}
}
