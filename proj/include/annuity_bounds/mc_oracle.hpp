#pragma once

#include "annuity_bounds/error.hpp"
#include "annuity_bounds/lifetable.hpp"
#include "annuity_bounds/market.hpp"
#include "annuity_bounds/parallel.hpp"
#include "annuity_bounds/quadrature.hpp"
#include "annuity_bounds/relaxed_hjb.hpp"
#include "annuity_bounds/strict_bounds.hpp"

#include <boost/math/tools/toms748_solve.hpp>

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace annuity_bounds {

struct McConfig {
	std::size_t paths = 100000;
	int steps_per_year = 64;
	std::uint64_t seed = 42;
	bool antithetic = true;
	/// Paths per RNG stream; block b draws from its own generator.
	std::size_t block = 4096;
	int threads = 0;

	void validate() const {
		require(paths >= 2 && steps_per_year >= 1 && block >= 2, ErrorCode::InvalidParameter,
				"Monte Carlo needs paths >= 2, steps_per_year >= 1");
		require(!antithetic || (paths % 2 == 0 && block % 2 == 0), ErrorCode::InvalidParameter,
				"antithetic sampling needs even path and block counts");
	}
};

/// Simulated trajectories on a uniform grid. Row p of each matrix holds one path;
/// antithetic partners are stored as consecutive rows.
struct PathSet {
	std::vector<double> times;
	std::size_t paths = 0;
	bool antithetic = false;
	/// Fund holding the bond that matures at the horizon.
	std::vector<double> fund;
	/// Value at time s of the fund whose bond matures at s (the measure used by the
	/// income and death closed forms); equals `fund` at the horizon.
	std::vector<double> fund_matched;
	std::vector<double> rate;
	/// int_0^t r
	std::vector<double> integrated_rate;

	std::size_t nodes() const noexcept { return times.size(); }
	std::size_t at(std::size_t p, std::size_t k) const noexcept { return p * times.size() + k; }
};

struct McEstimate {
	double mean = 0.0;
	double std_error = 0.0;
	std::size_t paths = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
	x += 0x9e3779b97f4a7c15ULL;
	x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
	x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
	return x ^ (x >> 31);
}

inline std::vector<double> uniform_times(double T, int steps_per_year) {
	const int K = std::max(1, static_cast<int>(std::llround(T * steps_per_year)));
	std::vector<double> t(static_cast<std::size_t>(K) + 1);
	for (int k = 0; k <= K; ++k) t[static_cast<std::size_t>(k)] = k == K ? T : T * k / K;
	return t;
}

/// Deterministic pieces of the exact Hull-White / fund simulation.
struct HwMoments {
	const MarketParams &mkt;
	const FundParams &fund;

	double shift() const { return mkt.r0 - forward_rate0(mkt.curve, 0.0); }

	double mean_rate(double t) const {
		const double k = mkt.kappa, s = mkt.sigma_r;
		const double e = -std::expm1(-k * t);
		return forward_rate0(mkt.curve, t) + s * s / (2.0 * k * k) * e * e + shift() * std::exp(-k * t);
	}

	double mean_integrated_rate(double t) const {
		const double k = mkt.kappa, s = mkt.sigma_r;
		const double conv = t - 2.0 * (-std::expm1(-k * t)) / k + (-std::expm1(-2.0 * k * t)) / (2.0 * k);
		return integrated_forward0(mkt.curve, t) + s * s / (2.0 * k * k) * conv + shift() * bond_B(k, 0.0, t);
	}

	/// int_0^t B(u,Tb) du and int_0^t B(u,Tb)^2 du.
	std::pair<double, double> b_integrals(double t, double Tb) const {
		const double k = mkt.kappa;
		const double e1 = std::exp(-k * (Tb - t)) - std::exp(-k * Tb);
		const double e2 = std::exp(-2.0 * k * (Tb - t)) - std::exp(-2.0 * k * Tb);
		return {(t - e1 / k) / k, (t - 2.0 * e1 / k + e2 / (2.0 * k)) / (k * k)};
	}

	/// Quadratic variation of ln A up to t for a fund whose bond matures at Tb.
	double fund_variance(double t, double Tb) const {
		const auto [i1, i2] = b_integrals(t, Tb);
		const double a = fund.pi_S * mkt.sigma_S, b = fund.pi_P * mkt.sigma_r;
		return a * a * t - 2.0 * a * b * mkt.rho * i1 + b * b * i2;
	}
};

/// Fills rows [first, first + count) of `out`.
inline void simulate_block(const MarketParams &mkt, const FundParams &fund, const McConfig &cfg,
		std::size_t block_index, std::size_t first, std::size_t count, PathSet &out) {
	std::mt19937_64 rng(splitmix64(cfg.seed ^ splitmix64(block_index + 1)));
	std::normal_distribution<double> normal;
	const auto &t = out.times;
	const std::size_t K = t.size() - 1;
	const double T = t.back();
	const double k = mkt.kappa, sr = mkt.sigma_r;
	const double rho = mkt.rho, rho_bar = std::sqrt(1.0 - rho * rho);
	const double lnA0 = std::log(fund.A0);
	const HwMoments mom{mkt, fund};
	const double a_S = fund.pi_S * mkt.sigma_S, b_P = fund.pi_P * sr;

	std::vector<double> z(3 * K);
	for (std::size_t p = first; p < first + count; ++p) {
		const bool mirror = cfg.antithetic && ((p - first) % 2 == 1);
		if (!mirror)
			for (auto &zi : z) zi = normal(rng);
		const double sign = mirror ? -1.0 : 1.0;
		double Wr = 0.0, Y = 0.0, WS = 0.0;
		for (std::size_t q = 0; q <= K; ++q) {
			if (q > 0) {
				const double h = t[q] - t[q - 1];
				const double c = -std::expm1(-k * h) / k;
				const double v = -std::expm1(-2.0 * k * h) / (2.0 * k);
				const double dW = std::sqrt(h) * sign * z[3 * (q - 1)];
				const double eY = (c / h) * dW + std::sqrt(std::max(v - c * c / h, 0.0)) * sign * z[3 * (q - 1) + 1];
				const double dWperp = std::sqrt(h) * sign * z[3 * (q - 1) + 2];
				Y = std::exp(-k * h) * Y + eY;
				Wr += dW;
				WS += rho * dW + rho_bar * dWperp;
			}
			const double s = t[q];
			const double intr = mom.mean_integrated_rate(s) + sr * (Wr - Y) / k;
			const std::size_t idx = out.at(p, q);
			out.rate[idx] = mom.mean_rate(s) + sr * Y;
			out.integrated_rate[idx] = intr;
			out.fund[idx] = std::exp(lnA0 + intr - 0.5 * mom.fund_variance(s, T) + a_S * WS -
					b_P * (Wr - std::exp(-k * (T - s)) * Y) / k);
			out.fund_matched[idx] = std::exp(lnA0 + intr - 0.5 * mom.fund_variance(s, s) + a_S * WS -
					b_P * (Wr - Y) / k);
		}
	}
}

inline std::size_t block_count(const McConfig &cfg) { return (cfg.paths + cfg.block - 1) / cfg.block; }

} // namespace detail

/// Exact joint simulation of (r, int r, fund) on a uniform grid up to T.
inline PathSet simulate_market_paths(const MarketParams &mkt, const FundParams &fund, double T,
		const McConfig &cfg) {
	cfg.validate();
	mkt.validate();
	fund.validate();
	require(T > 0.0, ErrorCode::InvalidParameter, "horizon must be positive");
	PathSet out;
	out.times = detail::uniform_times(T, cfg.steps_per_year);
	out.paths = cfg.paths;
	out.antithetic = cfg.antithetic;
	const std::size_t cells = cfg.paths * out.times.size();
	out.fund.resize(cells);
	out.fund_matched.resize(cells);
	out.rate.resize(cells);
	out.integrated_rate.resize(cells);
	parallel_for(detail::block_count(cfg), [&](std::size_t b) {
		const std::size_t first = b * cfg.block;
		detail::simulate_block(mkt, fund, cfg, b, first, std::min(cfg.block, cfg.paths - first), out);
	}, cfg.threads);
	return out;
}

/// Hazard mu(t, A_t) plus discrete death probabilities at fixed times.
struct MortalityPolicy {
	/// intensity(t, A, left_limit)
	std::function<double(double, double, bool)> intensity;
	std::vector<Intervention> jumps;

	static MortalityPolicy deterministic(std::function<double(double, bool)> mu) {
		return {[mu = std::move(mu)](double t, double, bool left) { return mu(t, left); }, {}};
	}
	static MortalityPolicy constant(double mu) {
		return {[mu](double, double, bool) { return mu; }, {}};
	}
	static MortalityPolicy faa(const AnnualSurvival &p, FaaKind kind) {
		const auto band = HazardBand::from_faa(p, kind, 0.0);
		return deterministic(band.baseline);
	}
};

namespace detail {

/// Per-path discounted payoff under a policy, trapezoidal in time.
inline double path_value(const ContractSpec &spec, const FundParams &fund, const PathSet &paths,
		const MortalityPolicy &policy, const std::vector<double> &jump_at, std::size_t p) {
	const auto legs = spec.active_legs();
	const auto &t = paths.times;
	const std::size_t K = t.size() - 1;
	double log_surv = 0.0;
	double surv_plus = 1.0;
	double total = 0.0;

	auto flow = [&](std::size_t k, double mu, double S) {
		const double disc = std::exp(-paths.integrated_rate[paths.at(p, k)]);
		const double A = paths.fund_matched[paths.at(p, k)];
		const double G = spec.guarantee(fund.A0, t[k]);
		double f = 0.0;
		if (legs.income) f += fund.A0 * spec.r_g + std::max(A - G, 0.0);
		if (legs.death) f += mu * std::max(A, G);
		return disc * S * f;
	};

	double mu_prev = policy.intensity(t[0], paths.fund[paths.at(p, 0)], false);
	double jump_mult = 1.0;
	if (jump_at[0] > 0.0) {
		if (legs.death) total += std::max(fund.A0, spec.guarantee(fund.A0, 0.0)) * jump_at[0];
		jump_mult = 1.0 - jump_at[0];
	}
	surv_plus = jump_mult;
	double f_prev = flow(0, mu_prev, surv_plus);
	for (std::size_t k = 1; k <= K; ++k) {
		const double h = t[k] - t[k - 1];
		const double A = paths.fund[paths.at(p, k)];
		const double mu_left = policy.intensity(t[k], A, true);
		log_surv -= 0.5 * h * (mu_prev + mu_left);
		const double surv_minus = jump_mult * std::exp(log_surv);
		total += 0.5 * h * (f_prev + flow(k, mu_left, surv_minus));
		double surv = surv_minus;
		if (jump_at[k] > 0.0) {
			if (legs.death) {
				const double G = spec.guarantee(fund.A0, t[k]);
				total += std::exp(-paths.integrated_rate[paths.at(p, k)]) *
						std::max(paths.fund_matched[paths.at(p, k)], G) * surv_minus * jump_at[k];
			}
			jump_mult *= 1.0 - jump_at[k];
			surv = jump_mult * std::exp(log_surv);
		}
		if (k < K) {
			mu_prev = policy.intensity(t[k], A, false);
			f_prev = flow(k, mu_prev, surv);
		} else if (legs.accumulation) {
			total += std::exp(-paths.integrated_rate[paths.at(p, k)]) *
					std::max(paths.fund[paths.at(p, k)], spec.guarantee(fund.A0, t[k])) * surv;
		}
	}
	return total;
}

inline std::vector<double> jump_grid(const PathSet &paths, const MortalityPolicy &policy) {
	std::vector<double> jumps(paths.times.size(), 0.0);
	const double h = paths.times.size() > 1 ? paths.times[1] - paths.times[0] : 1.0;
	for (const auto &j : policy.jumps) {
		const double pos = j.tau / h;
		const auto k = static_cast<std::size_t>(std::llround(pos));
		if (std::abs(pos - static_cast<double>(k)) > 1e-7 || k >= paths.times.size())
			throw Error(ErrorCode::InconsistentGrid, "jump at t=" + std::to_string(j.tau) + " is not a grid node");
		require(j.jump >= 0.0 && j.jump <= 1.0, ErrorCode::InvalidParameter, "jump sizes must lie in [0,1]");
		jumps[k] = 1.0 - (1.0 - jumps[k]) * (1.0 - j.jump);
	}
	return jumps;
}

struct Moments {
	double sum = 0.0;
	double sum_sq = 0.0;
	std::size_t n = 0;

	void add(double x) {
		sum += x;
		sum_sq += x * x;
		++n;
	}
	void merge(const Moments &o) {
		sum += o.sum;
		sum_sq += o.sum_sq;
		n += o.n;
	}
	McEstimate estimate(std::size_t paths) const {
		McEstimate e;
		e.paths = paths;
		if (n == 0) return e;
		e.mean = sum / static_cast<double>(n);
		const double var = n > 1 ? std::max(0.0, (sum_sq - sum * e.mean) / static_cast<double>(n - 1)) : 0.0;
		e.std_error = std::sqrt(var / static_cast<double>(n));
		return e;
	}
};

inline Moments price_rows(const ContractSpec &spec, const FundParams &fund, const PathSet &paths,
		const MortalityPolicy &policy, const std::vector<double> &jumps, std::size_t first, std::size_t count) {
	Moments m;
	if (paths.antithetic) {
		for (std::size_t p = first; p + 1 < first + count; p += 2)
			m.add(0.5 * (path_value(spec, fund, paths, policy, jumps, p) +
					path_value(spec, fund, paths, policy, jumps, p + 1)));
	} else {
		for (std::size_t p = first; p < first + count; ++p) m.add(path_value(spec, fund, paths, policy, jumps, p));
	}
	return m;
}

} // namespace detail

/// Survival-weighted Monte Carlo price of the contract on simulated paths (valuation at t = 0).
inline McEstimate mc_price(const ContractSpec &spec, const FundParams &fund, const PathSet &paths,
		const MortalityPolicy &policy) {
	require(spec.t == 0.0, ErrorCode::InvalidParameter, "Monte Carlo prices are computed at t = 0");
	require(paths.times.size() >= 2 && std::abs(paths.times.back() - spec.T) < 1e-9, ErrorCode::InconsistentGrid,
			"path horizon must equal the contract maturity");
	const auto jumps = detail::jump_grid(paths, policy);
	return detail::price_rows(spec, fund, paths, policy, jumps, 0, paths.paths).estimate(paths.paths);
}

/// Same estimator without storing the paths: blocks are simulated, priced and
/// reduced in block order.
inline McEstimate mc_price_streaming(const ContractSpec &spec, const MarketParams &mkt, const FundParams &fund,
		const McConfig &cfg, const MortalityPolicy &policy) {
	cfg.validate();
	mkt.validate();
	fund.validate();
	require(spec.t == 0.0, ErrorCode::InvalidParameter, "Monte Carlo prices are computed at t = 0");
	const std::size_t blocks = detail::block_count(cfg);
	std::vector<detail::Moments> partial(blocks);
	const auto times = detail::uniform_times(spec.T, cfg.steps_per_year);
	parallel_for(blocks, [&](std::size_t b) {
		const std::size_t first = b * cfg.block;
		const std::size_t count = std::min(cfg.block, cfg.paths - first);
		PathSet local;
		local.times = times;
		local.paths = count;
		local.antithetic = cfg.antithetic;
		const std::size_t cells = count * times.size();
		local.fund.resize(cells);
		local.fund_matched.resize(cells);
		local.rate.resize(cells);
		local.integrated_rate.resize(cells);
		// rows are local, the stream is the global block index
		detail::simulate_block(mkt, fund, cfg, b, 0, count, local);
		const auto jumps = detail::jump_grid(local, policy);
		partial[b] = detail::price_rows(spec, fund, local, policy, jumps, 0, count);
	}, cfg.threads);
	detail::Moments total;
	for (const auto &m : partial) total.merge(m);
	return total.estimate(cfg.paths);
}

/// Discounted-fund and bond estimators at the horizon, for martingale checks.
struct MarketCheck {
	McEstimate discounted_fund;
	McEstimate discount;
};

inline MarketCheck mc_market_check(const PathSet &paths) {
	detail::Moments fund_m, disc_m;
	const std::size_t K = paths.times.size() - 1;
	auto row = [&](std::size_t p) {
		const double d = std::exp(-paths.integrated_rate[paths.at(p, K)]);
		return std::pair{d * paths.fund[paths.at(p, K)], d};
	};
	if (paths.antithetic) {
		for (std::size_t p = 0; p + 1 < paths.paths; p += 2) {
			const auto a = row(p), b = row(p + 1);
			fund_m.add(0.5 * (a.first + b.first));
			disc_m.add(0.5 * (a.second + b.second));
		}
	} else {
		for (std::size_t p = 0; p < paths.paths; ++p) {
			const auto a = row(p);
			fund_m.add(a.first);
			disc_m.add(a.second);
		}
	}
	return {fund_m.estimate(paths.paths), disc_m.estimate(paths.paths)};
}

struct AuditEntry {
	std::string family;
	std::size_t sample = 0;
	McEstimate estimate;
	double lower = 0.0;
	double upper = 0.0;
	bool inside = true;
};

struct AuditReport {
	std::vector<AuditEntry> entries;

	std::size_t violations() const {
		std::size_t v = 0;
		for (const auto &e : entries) v += e.inside ? 0 : 1;
		return v;
	}
	bool passed() const { return violations() == 0; }
};

namespace detail {

inline AuditEntry audit_entry(std::string family, std::size_t sample, const McEstimate &est, double lower,
		double upper) {
	AuditEntry e{std::move(family), sample, est, lower, upper, true};
	e.inside = lower - 3.0 * est.std_error <= est.mean && est.mean <= upper + 3.0 * est.std_error;
	return e;
}

/// Deterministic hazard on [j, j+1): baseline times (1 + eps sin(2 pi f u + phi)), scaled to a target integral.
struct YearShape {
	double eps = 0.0, freq = 1.0, phase = 0.0, scale = 1.0;
};

} // namespace detail

/// Strict-feasible policies: each year keeps exp(-int mu) * (1 - jump) = p_j, with part of the
/// year's mortality moved into a discrete jump at a random grid node.
inline std::vector<MortalityPolicy> sample_strict_policies(const AnnualSurvival &p, int years, double h,
		std::size_t samples, std::uint64_t seed) {
	std::vector<MortalityPolicy> out;
	const auto base = HazardBand::from_faa(p, FaaKind::UDD, 0.0);
	for (std::size_t s = 0; s < samples; ++s) {
		std::mt19937_64 rng(detail::splitmix64(seed + 7919 * (s + 1)));
		std::uniform_real_distribution<double> U(0.0, 1.0);
		std::vector<detail::YearShape> shapes(static_cast<std::size_t>(years));
		MortalityPolicy pol;
		const int nodes_per_year = std::max(1, static_cast<int>(std::llround(1.0 / h)));
		for (int j = 0; j < years; ++j) {
			auto &sh = shapes[static_cast<std::size_t>(j)];
			sh.eps = 0.9 * U(rng);
			sh.freq = 1.0 + std::floor(3.0 * U(rng));
			sh.phase = 2.0 * std::numbers::pi * U(rng);
			const double w = (s % 4 == 0) ? 0.0 : 0.9 * U(rng);
			const double pj = p.probs[static_cast<std::size_t>(j)];
			const double integral = quadrature::adaptive_gauss_legendre(
					[&](double t) {
						return base.mu(t) * (1.0 + sh.eps * std::sin(2.0 * std::numbers::pi * sh.freq * (t - j) + sh.phase));
					},
					j, j + 1.0 - 1e-13, 1e-12, 0.0);
			sh.scale = integral > 0.0 ? -(1.0 - w) * std::log(pj) / integral : 0.0;
			if (w > 0.0) {
				const int node = 1 + static_cast<int>(std::floor(U(rng) * nodes_per_year));
				pol.jumps.push_back({j + std::min(node, nodes_per_year) * h, 1.0 - std::pow(pj, w)});
			}
		}
		pol.intensity = [base, shapes, years](double t, double, bool left) {
			int j = static_cast<int>(std::floor(t));
			if (left && t == std::floor(t) && t > 0.0) --j;
			j = std::clamp(j, 0, years - 1);
			const auto &sh = shapes[static_cast<std::size_t>(j)];
			const double mu = left ? base.mu(t, true) : base.mu(t, false);
			return sh.scale * mu * (1.0 + sh.eps * std::sin(2.0 * std::numbers::pi * sh.freq * (t - j) + sh.phase));
		};
		out.push_back(std::move(pol));
	}
	return out;
}

/// Band policies mu = clamp(mu_a + delta amp sin(w1 ln(A/A0) + w2 t + phi) + c_j), with c_j
/// calibrated on `paths` so the sample mean of exp(-int_0^j mu) equals the target.
inline std::vector<MortalityPolicy> sample_band_policies(const HazardBand &band, const PathSet &paths,
		double A0, int years, std::size_t samples, std::uint64_t seed) {
	std::vector<MortalityPolicy> out;
	const auto &t = paths.times;
	const std::size_t per_year = (t.size() - 1) / static_cast<std::size_t>(years);
	for (std::size_t s = 0; s < samples; ++s) {
		std::mt19937_64 rng(detail::splitmix64(seed + 104729 * (s + 1)));
		std::uniform_real_distribution<double> U(0.0, 1.0);
		const double amp = 0.25 + 0.75 * U(rng);
		const double w1 = 2.0 + 8.0 * U(rng);
		const double w2 = 2.0 * std::numbers::pi * U(rng);
		const double phi = 2.0 * std::numbers::pi * U(rng);
		std::vector<double> shift(static_cast<std::size_t>(years), 0.0);
		auto raw_hazard = [band, amp, w1, w2, phi, A0](double tt, double A, bool left) {
			return band.mu(tt, left) + band.delta * amp * std::sin(w1 * std::log(A / A0) + w2 * tt + phi);
		};
		auto hazard = [band, raw_hazard](double tt, double A, bool left, double c) {
			return std::clamp(raw_hazard(tt, A, left) + c, band.lower(tt, left), band.upper(tt, left));
		};
		std::vector<double> log_surv(paths.paths, 0.0);
		// unclamped hazard at the right limit of each step start and the left limit of its end
		std::vector<double> raw_start(paths.paths * per_year), raw_end(paths.paths * per_year);
		std::vector<double> lo_start(per_year), hi_start(per_year), lo_end(per_year), hi_end(per_year);
		for (int j = 0; j < years; ++j) {
			const std::size_t k0 = static_cast<std::size_t>(j) * per_year;
			for (std::size_t i = 0; i < per_year; ++i) {
				const double a = t[k0 + i], b = t[k0 + i + 1];
				lo_start[i] = band.lower(a, false);
				hi_start[i] = band.upper(a, false);
				lo_end[i] = band.lower(b, true);
				hi_end[i] = band.upper(b, true);
				for (std::size_t p = 0; p < paths.paths; ++p) {
					raw_start[p * per_year + i] = raw_hazard(a, paths.fund[paths.at(p, k0 + i)], false);
					raw_end[p * per_year + i] = raw_hazard(b, paths.fund[paths.at(p, k0 + i + 1)], true);
				}
			}
			auto year_integral = [&](std::size_t p, double c) {
				double acc = 0.0;
				for (std::size_t i = 0; i < per_year; ++i) {
					const double h = t[k0 + i + 1] - t[k0 + i];
					acc += 0.5 * h * (std::clamp(raw_start[p * per_year + i] + c, lo_start[i], hi_start[i]) +
							std::clamp(raw_end[p * per_year + i] + c, lo_end[i], hi_end[i]));
				}
				return acc;
			};
			const double target = band.targets[static_cast<std::size_t>(j)];
			auto excess = [&](double c) {
				double sum = 0.0;
				for (std::size_t p = 0; p < paths.paths; ++p) sum += std::exp(log_surv[p] - year_integral(p, c));
				return sum / static_cast<double>(paths.paths) - target;
			};
			const double span = 2.0 * band.delta + 1.0;
			double c = 0.0;
			const double f_lo = excess(-span), f_hi = excess(span);
			if (f_lo <= 0.0) c = -span;
			else if (f_hi >= 0.0) c = span;
			else {
				std::uintmax_t iters = 100;
				const auto bracket = boost::math::tools::toms748_solve(excess, -span, span, f_lo, f_hi,
						boost::math::tools::eps_tolerance<double>(48), iters);
				c = 0.5 * (bracket.first + bracket.second);
			}
			shift[static_cast<std::size_t>(j)] = c;
			for (std::size_t p = 0; p < paths.paths; ++p) log_surv[p] -= year_integral(p, c);
		}
		MortalityPolicy pol;
		pol.intensity = [hazard, shift, years](double tt, double A, bool left) {
			int j = static_cast<int>(std::floor(tt));
			if (left && tt == std::floor(tt) && tt > 0.0) --j;
			j = std::clamp(j, 0, years - 1);
			return hazard(tt, A, left, shift[static_cast<std::size_t>(j)]);
		};
		out.push_back(std::move(pol));
	}
	return out;
}

/// MC audit of strict bounds in the full market: FAA baselines plus `samples` random
/// strict-feasible policies, each priced on common paths.
inline AuditReport audit_strict_bounds(const ContractSpec &spec, const MarketParams &mkt, const FundParams &fund,
		const AnnualSurvival &p, const StrictBounds &strict, std::size_t samples, const McConfig &cfg) {
	AuditReport report;
	if (samples == 0) return report;
	require(spec.t == 0.0 && std::abs(spec.T - std::round(spec.T)) < 1e-12, ErrorCode::InvalidParameter,
			"strict audit needs t = 0 and an integer maturity");
	const int years = static_cast<int>(std::round(spec.T));
	const auto paths = simulate_market_paths(mkt, fund, spec.T, cfg);
	for (FaaKind kind : kAllFaaKinds)
		report.entries.push_back(detail::audit_entry("faa-" + std::string(to_string(kind)), 0,
				mc_price(spec, fund, paths, MortalityPolicy::faa(p, kind)), strict.lower, strict.upper));
	const auto policies = sample_strict_policies(p, years, 1.0 / cfg.steps_per_year, samples, cfg.seed);
	for (std::size_t s = 0; s < policies.size(); ++s)
		report.entries.push_back(detail::audit_entry("strict-feasible", s,
				mc_price(spec, fund, paths, policies[s]), strict.lower, strict.upper));
	return report;
}

/// MC audit of relaxed bounds in the reduced market with rate r: band policies that match
/// the survival targets in expectation must price inside [best, worst].
inline AuditReport audit_relaxed_bounds(const ContractSpec &spec, const MarketParams &mkt, const FundParams &fund,
		const HazardBand &band, double r, const RelaxedBounds &worst, const RelaxedBounds &best,
		std::size_t samples, const McConfig &cfg) {
	AuditReport report;
	if (samples == 0) return report;
	require(spec.t == 0.0 && std::abs(spec.T - std::round(spec.T)) < 1e-12, ErrorCode::InvalidParameter,
			"relaxed audit needs t = 0 and an integer maturity");
	const int years = static_cast<int>(std::round(spec.T));
	const auto reduced = reduced_market(mkt, r);
	const auto paths = simulate_market_paths(reduced, fund, spec.T, cfg);
	const auto policies = sample_band_policies(band, paths, fund.A0, years, samples, cfg.seed);
	for (std::size_t s = 0; s < policies.size(); ++s)
		report.entries.push_back(detail::audit_entry("band-expectation", s,
				mc_price(spec, fund, paths, policies[s]), best.value, worst.value));
	return report;
}

/// Both audits; the relaxed one only when relaxed results are supplied.
inline AuditReport verify_bounds(const ContractSpec &spec, const MarketParams &mkt, const FundParams &fund,
		const AnnualSurvival &p, const StrictBounds &strict, const HazardBand *band, double r,
		const RelaxedBounds *worst, const RelaxedBounds *best, std::size_t samples, const McConfig &cfg) {
	auto report = audit_strict_bounds(spec, mkt, fund, p, strict, samples, cfg);
	if (band && worst && best) {
		auto relaxed = audit_relaxed_bounds(spec, mkt, fund, *band, r, *worst, *best, samples, cfg);
		report.entries.insert(report.entries.end(), relaxed.entries.begin(), relaxed.entries.end());
	}
	return report;
}

} // namespace annuity_bounds
