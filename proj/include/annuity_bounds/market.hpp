#pragma once

#include "annuity_bounds/error.hpp"
#include "annuity_bounds/quadrature.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <string_view>

namespace annuity_bounds {

/// Forward-curve family f(0,t) = b + c e^{-at} + d a t e^{-at}.
struct YieldCurveParams {
	double a = 0.015;
	double b = -0.0105;
	double c = 0.02;
	double d = 0.75;

	static YieldCurveParams flat(double rate) { return {1.0, rate, 0.0, 0.0}; }

	void validate() const {
		require(a > 0.0 && std::isfinite(b) && std::isfinite(c) && std::isfinite(d),
				ErrorCode::InvalidParameter, "yield curve requires a > 0 and finite b, c, d");
	}
};

/// Hull-White short rate correlated with a lognormal stock.
struct MarketParams {
	double kappa = 0.1;
	double sigma_r = 0.02;
	double sigma_S = 0.2;
	double rho = 0.3;
	double r0 = 0.01;
	YieldCurveParams curve{};
	/// Real-world stock drift; only the density process uses it.
	double mu_S = std::numeric_limits<double>::quiet_NaN();

	void validate() const {
		curve.validate();
		require(kappa > 0.0, ErrorCode::InvalidParameter, "kappa must be positive");
		require(sigma_S > 0.0, ErrorCode::InvalidParameter, "sigma_S must be positive");
		require(sigma_r >= 0.0, ErrorCode::InvalidParameter, "sigma_r must be non-negative");
		require(std::abs(rho) < 1.0, ErrorCode::InvalidParameter, "|rho| must be < 1");
		require(std::isfinite(r0), ErrorCode::InvalidParameter, "r0 must be finite");
	}
};

/// Constant-mix fund: pi_S in stock, pi_P in zero-coupon bonds, rest in cash.
struct FundParams {
	double A0 = 100.0;
	double pi_S = 0.6;
	double pi_P = 0.2;

	void validate() const {
		require(A0 > 0.0, ErrorCode::NonPositiveFund, "A0 must be positive");
		require(pi_S >= 0.0 && pi_S <= 1.0 && pi_P >= 0.0 && pi_P <= 1.0 && pi_S + pi_P <= 1.0,
				ErrorCode::InvalidParameter, "fund weights must lie in [0,1] with pi_S + pi_P <= 1");
	}
};

enum class ProductKind { GMAB, GMIB, GMDB, Combined };

constexpr std::string_view to_string(ProductKind kind) noexcept {
	switch (kind) {
	case ProductKind::GMAB: return "GMAB";
	case ProductKind::GMIB: return "GMIB";
	case ProductKind::GMDB: return "GMDB";
	case ProductKind::Combined: return "Combined";
	}
	return "?";
}

inline ProductKind parse_product_kind(std::string_view name) {
	if (name == "GMAB" || name == "gmab") return ProductKind::GMAB;
	if (name == "GMIB" || name == "gmib") return ProductKind::GMIB;
	if (name == "GMDB" || name == "gmdb") return ProductKind::GMDB;
	if (name == "Combined" || name == "combined") return ProductKind::Combined;
	throw Error(ErrorCode::InvalidParameter, "unknown product '" + std::string(name) + "'");
}

/// Which payoff legs are active: terminal (H), income flow (H~), death benefit (H^).
struct PayoffMask {
	bool accumulation = false;
	bool income = false;
	bool death = false;
};

struct ContractSpec {
	ProductKind kind = ProductKind::GMAB;
	double r_g = 0.03;
	int x = 60;
	double t = 0.0;
	double T = 5.0;
	/// Only read when kind == Combined.
	PayoffMask masks{};

	PayoffMask active_legs() const {
		switch (kind) {
		case ProductKind::GMAB: return {true, false, false};
		case ProductKind::GMIB: return {false, true, false};
		case ProductKind::GMDB: return {false, false, true};
		case ProductKind::Combined: return masks;
		}
		return masks;
	}

	/// G_s = A0 e^{r_g s}, shared by the accumulation, income and death guarantees.
	double guarantee(double A0, double s) const { return A0 * std::exp(r_g * s); }

	void validate() const {
		require(t >= 0.0 && t < T, ErrorCode::InvalidParameter, "valuation time must satisfy 0 <= t < T");
		require(std::isfinite(r_g), ErrorCode::InvalidParameter, "r_g must be finite");
	}
};

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double forward_rate0(const YieldCurveParams &curve, double t) {
	const double decay = std::exp(-curve.a * t);
	return curve.b + curve.c * decay + curve.d * curve.a * t * decay;
}

inline double forward_rate0_slope(const YieldCurveParams &curve, double t) {
	return curve.a * std::exp(-curve.a * t) * (curve.d - curve.c - curve.d * curve.a * t);
}

/// Integral of f(0,s) over [0, T].
inline double integrated_forward0(const YieldCurveParams &curve, double T) {
	const double a = curve.a;
	const double one_minus = -std::expm1(-a * T);
	return curve.b * T + (curve.c / a) * one_minus + curve.d * (one_minus / a - T * std::exp(-a * T));
}

inline double discount0(const YieldCurveParams &curve, double T) {
	return std::exp(-integrated_forward0(curve, T));
}

inline double theta(const MarketParams &mkt, double t) {
	const double k = mkt.kappa;
	return forward_rate0_slope(mkt.curve, t) / k + forward_rate0(mkt.curve, t) +
			mkt.sigma_r * mkt.sigma_r / (2.0 * k * k) * (-std::expm1(-2.0 * k * t));
}

/// B(t,T) = (1 - e^{-kappa (T-t)}) / kappa.
inline double bond_B(double kappa, double t, double T) {
	return -std::expm1(-kappa * (T - t)) / kappa;
}

namespace detail {

inline double log_zcb(const MarketParams &mkt, double r_t, double t, double T) {
	const double k = mkt.kappa;
	const double B = bond_B(k, t, T);
	const double variance_term = mkt.sigma_r * mkt.sigma_r / (4.0 * k) * (-std::expm1(-2.0 * k * t)) * B * B;
	return -B * r_t - integrated_forward0(mkt.curve, T) + integrated_forward0(mkt.curve, t) +
			B * forward_rate0(mkt.curve, t) - variance_term;
}

} // namespace detail

/// Hull-White zero-coupon bond price P(t,T) given r_t.
inline double zcb_price(const MarketParams &mkt, double r_t, double t, double T) {
	require(t >= 0.0 && t <= T, ErrorCode::InvalidParameter, "zcb_price needs 0 <= t <= T");
	if (t == T) return 1.0;
	return std::exp(detail::log_zcb(mkt, r_t, t, T));
}

/// Instantaneous forward f(t,s) = -d/ds ln P(t,s), central difference h = 1e-5.
inline double forward_rate(const MarketParams &mkt, double r_t, double t, double s) {
	require(t <= s, ErrorCode::InvalidParameter, "forward_rate needs t <= s");
	constexpr double h = 1e-5;
	return -(detail::log_zcb(mkt, r_t, t, s + h) - detail::log_zcb(mkt, r_t, t, s - h)) / (2.0 * h);
}

/// Instantaneous volatility row of the fund measured in units of the bond maturing at T.
inline std::array<double, 2> forward_fund_volatility(const MarketParams &mkt, const FundParams &fund,
		double s, double T) {
	const double B = bond_B(mkt.kappa, s, T);
	const double rho_bar = std::sqrt(1.0 - mkt.rho * mkt.rho);
	// B sigma_r e2' Sigma
	const std::array<double, 2> bond{B * mkt.sigma_r * mkt.rho, B * mkt.sigma_r * rho_bar};
	// pi' Sigma_F(s)
	const std::array<double, 2> mix{fund.pi_S * mkt.sigma_S - fund.pi_P * mkt.rho * mkt.sigma_r * B,
			-fund.pi_P * rho_bar * mkt.sigma_r * B};
	return {bond[0] + mix[0], bond[1] + mix[1]};
}

/// Aggregated variance sigma_Y^2(t,T) of the forward fund.
inline double sigma_Y_sq(const MarketParams &mkt, const FundParams &fund, double t, double T) {
	require(t <= T, ErrorCode::InvalidParameter, "sigma_Y_sq needs t <= T");
	if (t == T) return 0.0;
	auto integrand = [&](double s) {
		const auto v = forward_fund_volatility(mkt, fund, s, T);
		return v[0] * v[0] + v[1] * v[1];
	};
	return quadrature::adaptive_gauss_legendre(integrand, t, T, 1e-10, 0.0);
}

/// Pieces of the max-payoff price; price = G P + A N(-d1) - G P N(-d2).
struct MaxPayoffPrice {
	double price = 0.0;
	double discount = 1.0;
	double sigma_Y = 0.0;
	double d1 = 0.0;
	double d2 = 0.0;
	bool degenerate = false;
};

inline MaxPayoffPrice max_payoff_terms(const MarketParams &mkt, const FundParams &fund, double A_t,
		double r_t, double t, double T, double G) {
	if (!(A_t > 0.0)) throw Error(ErrorCode::NonPositiveFund, "fund value must be positive");
	require(G >= 0.0, ErrorCode::InvalidParameter, "guarantee must be non-negative");
	MaxPayoffPrice out;
	out.discount = zcb_price(mkt, r_t, t, T);
	const double strike = G * out.discount;
	const double var = sigma_Y_sq(mkt, fund, t, T);
	out.sigma_Y = std::sqrt(var);
	if (G == 0.0) {
		out.price = A_t;
		out.d1 = out.d2 = -std::numeric_limits<double>::infinity();
		out.degenerate = true;
		return out;
	}
	if (var < 1e-18) {
		out.price = std::max(A_t, strike);
		out.degenerate = true;
		return out;
	}
	out.d2 = (std::log(strike / A_t) + 0.5 * var) / out.sigma_Y;
	out.d1 = out.d2 - out.sigma_Y;
	out.price = strike + A_t * normal_cdf(-out.d1) - strike * normal_cdf(-out.d2);
	return out;
}

/// C_t(T,G): time-t price of max(A_T, G).
inline double price_max_payoff(const MarketParams &mkt, const FundParams &fund, double A_t,
		double r_t, double t, double T, double G) {
	return max_payoff_terms(mkt, fund, A_t, r_t, t, T, G).price;
}

/// C_t(s, G^I_s): time-t price of the income rate A0 r_g + (A_s - G^I_s)_+ paid at s.
inline double price_gmib_flow(const MarketParams &mkt, const FundParams &fund, double A_t, double r_t,
		double t, double s, const ContractSpec &spec) {
	const double G = spec.guarantee(fund.A0, s);
	const auto terms = max_payoff_terms(mkt, fund, A_t, r_t, t, s, G);
	const double call = terms.price - G * terms.discount;
	return fund.A0 * spec.r_g * terms.discount + std::max(call, 0.0);
}

struct GmdbAssumptionReport {
	bool rg_dominates_forward = true;
	bool drift_condition = true;
	/// Location and value of max_s (f(t,s) - r_g) on the check grid.
	double worst_s = 0.0;
	double worst_excess = -std::numeric_limits<double>::infinity();
	double alpha = 0.0;
	double drift_value = 0.0;

	bool satisfied() const noexcept { return rg_dominates_forward && drift_condition; }
};

inline double gmdb_alpha(double kappa, double t, double T) {
	return std::expm1(-kappa * (T - t)) / kappa;
}

inline GmdbAssumptionReport check_gmdb_assumptions(const MarketParams &mkt, double r_t, double t,
		double T, double r_g) {
	GmdbAssumptionReport report;
	const int steps = std::max(1, static_cast<int>(std::ceil((T - t) / 0.01 - 1e-9)));
	for (int i = 0; i <= steps; ++i) {
		const double s = (i == steps) ? T : t + i * 0.01;
		const double excess = forward_rate(mkt, r_t, t, s) - r_g;
		if (excess > report.worst_excess) {
			report.worst_excess = excess;
			report.worst_s = s;
		}
	}
	report.rg_dominates_forward = report.worst_excess <= 0.0;
	report.alpha = gmdb_alpha(mkt.kappa, t, T);
	if (report.alpha > 0.0) throw Error(ErrorCode::SolverFailure, "alpha(t) must be non-positive");
	report.drift_value = r_t * report.alpha - theta(mkt, t) * (report.alpha + (T - t));
	report.drift_condition = report.drift_value <= 0.0;
	return report;
}

/// Deterministic-rate market used by the relaxed solver: flat curve at r, no rate volatility.
inline MarketParams reduced_market(const MarketParams &mkt, double r) {
	MarketParams out = mkt;
	out.sigma_r = 0.0;
	out.r0 = r;
	out.curve = YieldCurveParams::flat(r);
	out.mu_S = r;
	return out;
}

} // namespace annuity_bounds
