#include "annuity_bounds/relaxed_hjb.hpp"
#include "annuity_bounds/strict_bounds.hpp"

#include <gtest/gtest.h>

using namespace annuity_bounds;

namespace {

constexpr int kNx = 121;
constexpr int kNt = 16;
constexpr double kRate = 0.01;

ContractSpec contract(ProductKind kind, double T, int x = 60) {
	ContractSpec c;
	c.kind = kind;
	c.x = x;
	c.T = T;
	return c;
}

ContractSpec empty_contract(double T) {
	auto c = contract(ProductKind::Combined, T);
	c.masks = {false, false, false};
	return c;
}

HjbConfig config(const ContractSpec &spec, Direction dir, ConstraintMode mode = ConstraintMode::Full,
		int Nx = kNx, int Nt = kNt) {
	return make_hjb_config(spec, FundParams{}, MarketParams{}, kRate, dir, mode, Nx, Nt);
}

const MarketParams &reduced() {
	static const MarketParams m = reduced_market(MarketParams{}, kRate);
	return m;
}

AnnualSurvival probs(int x, int n) { return annual_survival_probs(default_life_table(), x, n); }

double dual_objective(const HjbConfig &cfg, const HazardBand &band, const ContractSpec &spec, const LambdaVector &l) {
	return evaluate_dual(cfg, band, spec, reduced(), FundParams{}, l).objective;
}

} // namespace

TEST(BangBang, PicksTheBandEdge) {
	EXPECT_DOUBLE_EQ(bang_bang_control(1.0, 2.0, 0.05, 0.02, Direction::Worst), 0.05 - 0.02);
	EXPECT_EQ(bang_bang_control(3.0, 2.0, 0.05, 0.02, Direction::Worst), 0.07);
	EXPECT_EQ(bang_bang_control(2.0, 2.0, 0.05, 0.02, Direction::Worst), 0.07);
	EXPECT_EQ(bang_bang_control(1.0, 2.0, 0.05, 0.02, Direction::Best), 0.07);
	EXPECT_DOUBLE_EQ(bang_bang_control(3.0, 2.0, 0.05, 0.02, Direction::Best), 0.05 - 0.02);
	EXPECT_EQ(bang_bang_control(1.0, 2.0, 0.05, 1.0, Direction::Worst), 0.0);
}

TEST(HazardBand, FaaBandIsConsistentWithTargets) {
	const auto band = HazardBand::from_faa(probs(60, 5), FaaKind::Balducci, 0.5);
	EXPECT_LT(band.baseline_consistency(), 1e-10);
	EXPECT_EQ(band.lower(2.5), 0.0);
	EXPECT_NEAR(band.upper(2.5) - band.mu(2.5), 0.5, 1e-15);
	EXPECT_THROW(HazardBand::from_faa(probs(60, 5), FaaKind::UDD, -1.0), Error);
}

TEST(HjbConfig, GridAndConstraintTimes) {
	const auto cfg = config(contract(ProductKind::GMAB, 4.0), Direction::Worst);
	EXPECT_NEAR(cfg.sigma_A, 0.12, 1e-15);
	EXPECT_NEAR(cfg.grid.x_max - std::log(100.0), 6.0 * 0.12 * 2.0, 1e-12);
	EXPECT_EQ(cfg.constraint_times, (std::vector<int>{1, 2, 3, 4}));
	EXPECT_EQ(constraint_times_for(ConstraintMode::TerminalOnly, 4), (std::vector<int>{4}));
	try {
		config(contract(ProductKind::GMAB, 2.5), Direction::Worst);
		FAIL();
	} catch (const Error &e) {
		EXPECT_EQ(e.code(), ErrorCode::NonIntegerMaturity);
	}
}

TEST(HjbSolve, EmptyPayoffWithoutMultipliersIsZero) {
	const auto spec = empty_contract(3.0);
	const auto cfg = config(spec, Direction::Worst);
	const auto band = HazardBand::constant(0.02, 3, 0.01);
	const auto surf = hjb_solve(cfg, band, spec, reduced(), FundParams{}, LambdaVector(3));
	for (const auto &row : surf.values)
		for (double v : row) EXPECT_EQ(v, 0.0);
}

TEST(HjbSolve, TerminalMultiplierOnEmptyPayoff) {
	// sup over mu of -lambda * survival: the extreme band edge wins everywhere
	const double mu = 0.03, delta = 0.02, lambda = 5.0;
	const auto spec = empty_contract(2.0);
	const auto band = HazardBand::constant(mu, 2, delta);
	for (auto mode : {ConstraintMode::TerminalOnly, ConstraintMode::Full}) {
		const auto cfg = config(spec, Direction::Worst, mode);
		LambdaVector l(2);
		l[2] = lambda;
		EXPECT_NEAR(hjb_solve(cfg, band, spec, reduced(), FundParams{}, l).origin_value(),
				-lambda * std::exp(-(mu + delta) * 2.0), 1e-5 * lambda);
		l[2] = -lambda;
		EXPECT_NEAR(hjb_solve(cfg, band, spec, reduced(), FundParams{}, l).origin_value(),
				lambda * std::exp(-(mu - delta) * 2.0), 1e-5 * lambda);
	}
}

TEST(ConstraintSurvival, ConstantHazardPolicy) {
	const double mu = 0.04, delta = 0.01;
	const auto spec = empty_contract(3.0);
	const auto cfg = config(spec, Direction::Worst);
	const auto band = HazardBand::constant(mu, 3, delta);
	const auto surf = hjb_solve(cfg, band, spec, reduced(), FundParams{}, LambdaVector(3));
	const auto s = constraint_survival(cfg, band, surf);
	for (int j = 1; j <= 3; ++j) EXPECT_NEAR(s[static_cast<std::size_t>(j) - 1], std::exp(-(mu + delta) * j), 1e-5);
}

TEST(ConstraintSurvival, ZeroWidthBandReproducesTargets) {
	for (FaaKind kind : kAllFaaKinds) {
		const auto spec = contract(ProductKind::GMIB, 5.0, 80);
		const auto cfg = config(spec, Direction::Worst, ConstraintMode::Full, kNx, 64);
		const auto band = HazardBand::from_faa(probs(80, 5), kind, 0.0);
		const auto surf = hjb_solve(cfg, band, spec, reduced(), FundParams{}, LambdaVector(5));
		const auto s = constraint_survival(cfg, band, surf);
		for (int j = 1; j <= 5; ++j)
			EXPECT_NEAR(s[static_cast<std::size_t>(j) - 1], band.targets[static_cast<std::size_t>(j) - 1], 1e-6)
					<< to_string(kind) << " j=" << j;
	}
}

TEST(ConstraintSurvival, RejectsForeignGrid) {
	const auto spec = contract(ProductKind::GMAB, 2.0);
	const auto band = HazardBand::constant(0.02, 2, 0.01);
	const auto surf = hjb_solve(config(spec, Direction::Worst), band, spec, reduced(), FundParams{}, LambdaVector(2));
	try {
		constraint_survival(config(spec, Direction::Worst, ConstraintMode::Full, kNx + 20), band, surf);
		FAIL();
	} catch (const Error &e) {
		EXPECT_EQ(e.code(), ErrorCode::GridMismatch);
	}
}

TEST(HjbSolve, PolicyStaysInsideTheBand) {
	const auto spec = contract(ProductKind::GMDB, 3.0);
	const auto band = HazardBand::from_faa(probs(60, 3), FaaKind::Balducci, 0.5);
	LambdaVector l(3);
	l[1] = 2.0;
	l[3] = -1.0;
	for (auto dir : {Direction::Worst, Direction::Best}) {
		const auto surf = hjb_solve(config(spec, dir), band, spec, reduced(), FundParams{}, l);
		for (std::size_t k = 0; k < surf.policy.size(); ++k)
			for (double m : surf.policy[k]) {
				const double t = surf.times[k];
				const bool ok = (m >= band.lower(t) - 1e-12 && m <= band.upper(t) + 1e-12) ||
						(m >= band.lower(t, true) - 1e-12 && m <= band.upper(t, true) + 1e-12);
				EXPECT_TRUE(ok) << t << " " << m;
			}
	}
}

TEST(HjbSolve, ZeroWidthBandMatchesClosedForm) {
	for (auto kind : {ProductKind::GMAB, ProductKind::GMIB, ProductKind::GMDB}) {
		const auto spec = contract(kind, 3.0);
		const auto p = probs(60, 3);
		const auto band = HazardBand::from_faa(p, FaaKind::Balducci, 0.0);
		const double closed = faa_baseline_price(spec, reduced(), FundParams{}, p, FaaKind::Balducci, kRate, 100.0);
		for (auto dir : {Direction::Worst, Direction::Best}) {
			const auto cfg = config(spec, dir, ConstraintMode::Full, 241, 32);
			const double v = hjb_solve(cfg, band, spec, reduced(), FundParams{}, LambdaVector(3)).origin_value();
			EXPECT_NEAR(v, closed, 2e-3 * std::max(1.0, closed)) << to_string(kind);
		}
	}
}

TEST(DualObjective, ConvexAlongSegments) {
	const auto spec = contract(ProductKind::GMIB, 3.0);
	const auto band = HazardBand::from_faa(probs(60, 3), FaaKind::Balducci, 1.0);
	for (auto dir : {Direction::Worst, Direction::Best}) {
		const auto cfg = config(spec, dir);
		LambdaVector a(3), b(3), mid(3);
		a.values = {-20.0, 5.0, 40.0};
		b.values = {30.0, -10.0, 0.0};
		for (int j = 1; j <= 3; ++j) mid[j] = 0.5 * (a[j] + b[j]);
		const double fa = dual_objective(cfg, band, spec, a), fb = dual_objective(cfg, band, spec, b);
		EXPECT_LE(dual_objective(cfg, band, spec, mid), 0.5 * (fa + fb) + 1e-8) << to_string(dir);
	}
}

TEST(HjbSolve, WorstValueDecreasesInEachMultiplier) {
	const auto spec = contract(ProductKind::GMDB, 3.0);
	const auto cfg = config(spec, Direction::Worst);
	const auto band = HazardBand::from_faa(probs(60, 3), FaaKind::Balducci, 1.0);
	for (int j = 1; j <= 3; ++j) {
		double prev = std::numeric_limits<double>::infinity();
		for (double l = -10.0; l <= 10.0; l += 5.0) {
			LambdaVector lv(3);
			lv[j] = l;
			const double v = hjb_solve(cfg, band, spec, reduced(), FundParams{}, lv).origin_value();
			EXPECT_LE(v, prev + 1e-10);
			prev = v;
		}
	}
}

TEST(OptimizeLambda, BoundsBracketTheBaseline) {
	const auto spec = contract(ProductKind::GMIB, 3.0);
	const auto p = probs(60, 3);
	const auto band = HazardBand::from_faa(p, FaaKind::Balducci, 1.0);
	const double base = faa_baseline_price(spec, reduced(), FundParams{}, p, FaaKind::Balducci, kRate, 100.0);
	double values[2][2];
	for (auto mode : {ConstraintMode::TerminalOnly, ConstraintMode::Full}) {
		const auto w = optimize_lambda(config(spec, Direction::Worst, mode), band, spec, reduced(), FundParams{},
				LambdaVector(3));
		const auto b = optimize_lambda(config(spec, Direction::Best, mode), band, spec, reduced(), FundParams{},
				LambdaVector(3));
		ASSERT_TRUE(w.converged && b.converged);
		EXPECT_LE(w.max_residual(), 1e-3);
		EXPECT_LE(b.max_residual(), 1e-3);
		EXPECT_GE(w.value, base - 1e-3);
		EXPECT_LE(b.value, base + 1e-3);
		values[mode == ConstraintMode::Full][0] = w.value;
		values[mode == ConstraintMode::Full][1] = b.value;
	}
	const double slack = 1e-6 * 25.0;
	EXPECT_LE(values[1][0], values[0][0] + slack);
	EXPECT_GE(values[1][1], values[0][1] - slack);
}

TEST(OptimizeLambda, IterationCapIsReported) {
	const auto spec = contract(ProductKind::GMDB, 3.0);
	const auto band = HazardBand::from_faa(probs(60, 3), FaaKind::Balducci, 1.0);
	DualSettings s;
	s.max_iter = 1;
	const auto r = optimize_lambda(config(spec, Direction::Worst), band, spec, reduced(), FundParams{},
			LambdaVector(3), s);
	EXPECT_FALSE(r.converged);
	try {
		require_converged(r);
		FAIL();
	} catch (const Error &e) {
		EXPECT_EQ(e.code(), ErrorCode::DualNotConverged);
	}
}

TEST(DeltaSweep, WiderBandsWidenTheBounds) {
	const auto spec = contract(ProductKind::GMAB, 2.0);
	const auto p = probs(60, 2);
	const std::vector<double> deltas{0.25, 1.0, 4.0};
	const auto w = delta_sweep(config(spec, Direction::Worst), p, FaaKind::Balducci, spec, reduced(), FundParams{},
			deltas);
	const auto b = delta_sweep(config(spec, Direction::Best), p, FaaKind::Balducci, spec, reduced(), FundParams{},
			deltas);
	ASSERT_EQ(w.differences.size(), 2u);
	for (std::size_t i = 0; i < 2; ++i) {
		const double tol = 1e-6 * std::max(1.0, std::abs(w.results[i].value));
		EXPECT_GE(w.differences[i], -tol);
		EXPECT_LE(b.differences[i], tol);
	}
	EXPECT_THROW(delta_sweep(config(spec, Direction::Worst), p, FaaKind::Balducci, spec, reduced(), FundParams{},
						 {1.0, 0.5}),
			Error);
}
