#pragma once

#include "annuity_bounds/error.hpp"
#include "annuity_bounds/lifetable.hpp"
#include "annuity_bounds/market.hpp"
#include "annuity_bounds/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace annuity_bounds {

enum class StepDirection { Sup, Inf };

struct Intervention {
	double tau = 0.0;
	/// Discrete death probability applied at tau (1 - p_j).
	double jump = 0.0;
};

struct InterventionSchedule {
	std::vector<Intervention> interventions;

	bool empty() const noexcept { return interventions.empty(); }
	std::size_t size() const noexcept { return interventions.size(); }
};

struct StrictBounds {
	double upper = 0.0;
	double lower = 0.0;
	InterventionSchedule upper_schedule;
	std::string lower_schedule_note;

	/// GMDB only: the closed-form year-end / year-start sums, and the
	/// assumption report behind them.
	double formula_upper = 0.0;
	double formula_lower = 0.0;
	bool assumptions_violated = false;
	std::optional<GmdbAssumptionReport> assumptions;
};

/// Number of whole table years between ceil(t) and floor(T).
inline int strict_horizon(double t, double T) {
	return std::max(0, static_cast<int>(std::floor(T)) - static_cast<int>(std::ceil(t)));
}

/// Step survival curves attaining the GMIB/GMDB extremes; `years` caps the
/// product (defaults to the whole of p).
inline double step_survival(const AnnualSurvival &p, StepDirection dir, double t, double s,
		int years = -1) {
	const int cap = years < 0 ? p.years() : std::min(years, p.years());
	const double start = std::ceil(t);
	double out = 1.0;
	for (int j = 0; j < cap; ++j) {
		const bool included = dir == StepDirection::Sup ? start + j + 1 <= s : start + j < s;
		if (!included) break;
		out *= p.probs[static_cast<std::size_t>(j)];
	}
	return out;
}

namespace detail {

struct Panel {
	double lo;
	double hi;
};

/// [t, T] split at integer knots.
inline std::vector<Panel> integer_panels(double t, double T) {
	std::vector<Panel> panels;
	double lo = t;
	while (lo < T) {
		double hi = std::min(T, std::floor(lo) + 1.0);
		if (hi <= lo) hi = std::min(T, lo + 1.0);
		panels.push_back({lo, hi});
		lo = hi;
	}
	return panels;
}

/// Panel integral; the first panel starts at the valuation time where option
/// prices have square-root behaviour.
template <class F>
double panel_integral(F &&f, const Panel &panel, double t) {
	if (panel.lo == t) return quadrature::integrate_sqrt_start(f, panel.lo, panel.hi, 1e-11);
	return quadrature::adaptive_gauss_legendre(f, panel.lo, panel.hi, 1e-11, 0.0);
}

inline void check_inputs(const ContractSpec &spec, const MarketParams &mkt, const FundParams &fund,
		const AnnualSurvival &p, double A_t) {
	spec.validate();
	mkt.validate();
	fund.validate();
	if (!(A_t > 0.0)) throw Error(ErrorCode::NonPositiveFund, "fund value must be positive");
	const int m = strict_horizon(spec.t, spec.T);
	require(p.years() >= m, ErrorCode::AgeOutOfRange,
			"need " + std::to_string(m) + " one-year probabilities, got " + std::to_string(p.years()));
	for (double q : p.probs)
		require(q > 0.0 && q <= 1.0, ErrorCode::InvalidParameter, "one-year probabilities must lie in (0,1]");
}

inline double faa_curve(const AnnualSurvival &p, FaaKind kind, double t, double s, int m) {
	const double since = std::clamp(s - std::ceil(t), 0.0, static_cast<double>(m));
	return faa_survival(p, kind, since);
}

} // namespace detail

inline StrictBounds gmab_bounds(const ContractSpec &spec, const MarketParams &mkt, const FundParams &fund,
		const AnnualSurvival &p, double r_t, double A_t) {
	require(spec.kind == ProductKind::GMAB, ErrorCode::InvalidParameter, "gmab_bounds needs a GMAB contract");
	detail::check_inputs(spec, mkt, fund, p, A_t);
	const int m = strict_horizon(spec.t, spec.T);
	const double price = price_max_payoff(mkt, fund, A_t, r_t, spec.t, spec.T, spec.guarantee(fund.A0, spec.T));
	StrictBounds out;
	out.upper = out.lower = p.cumulative(m) * price;
	out.lower_schedule_note = "every admissible control is optimal";
	return out;
}

inline StrictBounds gmib_bounds(const ContractSpec &spec, const MarketParams &mkt, const FundParams &fund,
		const AnnualSurvival &p, double r_t, double A_t) {
	require(spec.kind == ProductKind::GMIB, ErrorCode::InvalidParameter, "gmib_bounds needs a GMIB contract");
	detail::check_inputs(spec, mkt, fund, p, A_t);
	const int m = strict_horizon(spec.t, spec.T);
	auto flow = [&](double s) { return price_gmib_flow(mkt, fund, A_t, r_t, spec.t, s, spec); };

	StrictBounds out;
	for (const auto &panel : detail::integer_panels(spec.t, spec.T)) {
		const double mid = 0.5 * (panel.lo + panel.hi);
		const double integral = detail::panel_integral(flow, panel, spec.t);
		out.upper += step_survival(p, StepDirection::Sup, spec.t, mid, m) * integral;
		out.lower += step_survival(p, StepDirection::Inf, spec.t, mid, m) * integral;
	}
	const double start = std::ceil(spec.t);
	for (int j = 0; j < m; ++j)
		out.upper_schedule.interventions.push_back({start + j + 1, 1.0 - p.probs[static_cast<std::size_t>(j)]});
	out.lower_schedule_note =
			"not attained: limit of jumps 1-p_j at times decreasing to ceil(t)+j";
	return out;
}

namespace detail {

/// Extremum of a smooth function over [lo, hi]: grid scan then golden-section refinement.
template <class F>
std::pair<double, double> extremum_on(F &&f, double lo, double hi, bool maximize) {
	constexpr int grid = 32;
	const double sign = maximize ? 1.0 : -1.0;
	int best = 0;
	std::vector<double> values(grid + 1);
	for (int i = 0; i <= grid; ++i) {
		values[static_cast<std::size_t>(i)] = sign * f(lo + (hi - lo) * i / grid);
		if (values[static_cast<std::size_t>(i)] > values[static_cast<std::size_t>(best)]) best = i;
	}
	double best_x = lo + (hi - lo) * best / grid;
	double best_v = values[static_cast<std::size_t>(best)];
	if (best == 0 || best == grid) return {best_x, sign * best_v};
	double a = lo + (hi - lo) * (best - 1) / grid;
	double b = lo + (hi - lo) * (best + 1) / grid;
	const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
	double c = b - ratio * (b - a), d = a + ratio * (b - a);
	double fc = sign * f(c), fd = sign * f(d);
	for (int it = 0; it < 60 && b - a > 1e-12; ++it) {
		if (fc > fd) {
			b = d; d = c; fd = fc;
			c = b - ratio * (b - a); fc = sign * f(c);
		} else {
			a = c; c = d; fc = fd;
			d = a + ratio * (b - a); fd = sign * f(d);
		}
	}
	const double x = 0.5 * (a + b);
	const double v = sign * f(x);
	if (v > best_v) { best_v = v; best_x = x; }
	return {best_x, sign * best_v};
}

} // namespace detail

inline StrictBounds gmdb_bounds(const ContractSpec &spec, const MarketParams &mkt, const FundParams &fund,
		const AnnualSurvival &p, double r_t, double A_t) {
	require(spec.kind == ProductKind::GMDB, ErrorCode::InvalidParameter, "gmdb_bounds needs a GMDB contract");
	detail::check_inputs(spec, mkt, fund, p, A_t);
	const int m = strict_horizon(spec.t, spec.T);
	auto benefit = [&](double tau) {
		return price_max_payoff(mkt, fund, A_t, r_t, spec.t, tau, spec.guarantee(fund.A0, tau));
	};

	StrictBounds out;
	out.assumptions = check_gmdb_assumptions(mkt, r_t, spec.t, spec.T, spec.r_g);
	out.assumptions_violated = !out.assumptions->satisfied();

	const double start = std::ceil(spec.t);
	double alive = 1.0;
	for (int j = 0; j < m; ++j) {
		const double q = 1.0 - p.probs[static_cast<std::size_t>(j)];
		const double year_start = start + j;
		const double year_end = year_start + 1.0;
		out.formula_upper += benefit(year_end) * q * alive;
		out.formula_lower += benefit(year_start) * q * alive;
		const auto [tau_max, c_max] = detail::extremum_on(benefit, year_start, year_end, true);
		const auto [tau_min, c_min] = detail::extremum_on(benefit, year_start, year_end, false);
		out.upper += c_max * q * alive;
		out.lower += c_min * q * alive;
		out.upper_schedule.interventions.push_back({tau_max, q});
		alive *= p.probs[static_cast<std::size_t>(j)];
	}
	out.lower_schedule_note =
			"jumps 1-p_j at the year's cheapest death time; at a year start this is a limit, not attained";
	return out;
}

inline StrictBounds strict_bounds(const ContractSpec &spec, const MarketParams &mkt, const FundParams &fund,
		const AnnualSurvival &p, double r_t, double A_t) {
	switch (spec.kind) {
	case ProductKind::GMAB: return gmab_bounds(spec, mkt, fund, p, r_t, A_t);
	case ProductKind::GMIB: return gmib_bounds(spec, mkt, fund, p, r_t, A_t);
	case ProductKind::GMDB: return gmdb_bounds(spec, mkt, fund, p, r_t, A_t);
	case ProductKind::Combined: break;
	}
	throw Error(ErrorCode::InvalidParameter, "strict bounds are defined per product, not for Combined");
}

/// Contract price when within-year mortality follows a fractional age assumption.
inline double faa_baseline_price(const ContractSpec &spec, const MarketParams &mkt, const FundParams &fund,
		const AnnualSurvival &p, FaaKind kind, double r_t, double A_t) {
	detail::check_inputs(spec, mkt, fund, p, A_t);
	const int m = strict_horizon(spec.t, spec.T);
	const double start = std::ceil(spec.t);
	const auto legs = spec.active_legs();
	double total = 0.0;

	if (legs.accumulation)
		total += detail::faa_curve(p, kind, spec.t, spec.T, m) *
				price_max_payoff(mkt, fund, A_t, r_t, spec.t, spec.T, spec.guarantee(fund.A0, spec.T));

	if (legs.income) {
		auto integrand = [&](double s) {
			return detail::faa_curve(p, kind, spec.t, s, m) *
					price_gmib_flow(mkt, fund, A_t, r_t, spec.t, s, spec);
		};
		for (const auto &panel : detail::integer_panels(spec.t, spec.T))
			total += detail::panel_integral(integrand, panel, spec.t);
	}

	if (legs.death) {
		// density of death = survival x hazard, only inside whole table years
		auto integrand = [&](double s) {
			const double since = s - start;
			return price_max_payoff(mkt, fund, A_t, r_t, spec.t, s, spec.guarantee(fund.A0, s)) *
					faa_survival(p, kind, since) * faa_hazard(p, kind, std::min(since, m - 1e-15));
		};
		for (int j = 0; j < m; ++j)
			total += detail::panel_integral(integrand, {start + j, start + j + 1.0}, spec.t);
	}
	return total;
}

} // namespace annuity_bounds
