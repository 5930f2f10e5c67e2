#pragma once

#include "annuity_bounds/error.hpp"
#include "annuity_bounds/lifetable.hpp"
#include "annuity_bounds/market.hpp"
#include "annuity_bounds/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <set>
#include <vector>

namespace annuity_bounds {

enum class Direction { Worst, Best };

constexpr std::string_view to_string(Direction d) noexcept {
	return d == Direction::Worst ? "worst" : "best";
}

/// Band [(mu_a - delta)+, mu_a + delta] around a baseline hazard.
struct HazardBand {
	/// baseline(t, left_limit)
	std::function<double(double, bool)> baseline;
	double delta = 0.0;
	/// j-year survival targets, index j-1 for j = 1..n.
	std::vector<double> targets;

	int years() const noexcept { return static_cast<int>(targets.size()); }

	double mu(double t, bool left_limit = false) const { return baseline(t, left_limit); }
	double lower(double t, bool left_limit = false) const {
		return std::max(0.0, baseline(t, left_limit) - delta);
	}
	double upper(double t, bool left_limit = false) const { return baseline(t, left_limit) + delta; }

	static HazardBand from_faa(const AnnualSurvival &p, FaaKind kind, double delta) {
		require(delta >= 0.0, ErrorCode::InvalidParameter, "delta must be non-negative");
		HazardBand band;
		band.delta = delta;
		band.baseline = [p, kind](double t, bool left) {
			return left && t > 0.0 ? faa_hazard_left(p, kind, t)
			                       : faa_hazard(p, kind, std::min(t, p.years() - 1e-12));
		};
		for (int j = 1; j <= p.years(); ++j) band.targets.push_back(p.cumulative(j));
		return band;
	}

	static HazardBand constant(double mu, int n, double delta) {
		require(mu >= 0.0 && delta >= 0.0 && n >= 1, ErrorCode::InvalidParameter,
				"constant band needs mu >= 0, delta >= 0, n >= 1");
		HazardBand band;
		band.delta = delta;
		band.baseline = [mu](double, bool) { return mu; };
		for (int j = 1; j <= n; ++j) band.targets.push_back(std::exp(-mu * j));
		return band;
	}

	/// Largest |exp(-int_0^j mu_a) - target_j| over j.
	double baseline_consistency() const {
		double worst = 0.0, integral = 0.0;
		for (int j = 1; j <= years(); ++j) {
			integral += quadrature::adaptive_gauss_legendre(
					[&](double s) { return baseline(s, false); }, j - 1.0, j - 1e-14, 1e-13, 0.0);
			worst = std::max(worst, std::abs(std::exp(-integral) - targets[static_cast<std::size_t>(j) - 1]));
		}
		return worst;
	}
};

struct HjbGrid {
	double x_min = 0.0;
	double x_max = 0.0;
	int Nx = 401;
	int Nt = 64;
};

struct HjbConfig {
	int n = 5;
	double r = 0.01;
	double sigma_A = 0.12;
	HjbGrid grid{};
	std::vector<int> constraint_times;
	Direction direction = Direction::Worst;
	PayoffMask masks{};
	int policy_max_iter = 50;
	double policy_tol = 1e-10;
	int rannacher_steps = 2;

	void validate() const {
		require(n >= 1, ErrorCode::InvalidParameter, "horizon must be at least one year");
		require(sigma_A >= 0.0 && std::isfinite(r), ErrorCode::InvalidParameter, "need sigma_A >= 0 and finite r");
		require(grid.Nx >= 3 && grid.Nt >= 1 && grid.x_min < grid.x_max, ErrorCode::InvalidParameter,
				"grid needs Nx >= 3, Nt >= 1, x_min < x_max");
		require(!constraint_times.empty(), ErrorCode::InvalidParameter, "no constraint times");
		for (int j : constraint_times)
			require(j >= 1 && j <= n, ErrorCode::InvalidParameter, "constraint times must lie in 1..n");
		require(policy_max_iter >= 1 && rannacher_steps >= 0, ErrorCode::InvalidParameter,
				"policy iteration cap must be positive");
	}

	bool constrained_at(int j) const {
		return std::find(constraint_times.begin(), constraint_times.end(), j) != constraint_times.end();
	}
};

enum class ConstraintMode { TerminalOnly, Full };

inline std::vector<int> constraint_times_for(ConstraintMode mode, int n) {
	if (mode == ConstraintMode::TerminalOnly) return {n};
	std::vector<int> out(static_cast<std::size_t>(n));
	std::iota(out.begin(), out.end(), 1);
	return out;
}

/// Reduced deterministic-rate configuration: sigma_A = pi_S sigma_S, grid ln A0 +- 6 sigma_A sqrt(n).
inline HjbConfig make_hjb_config(const ContractSpec &spec, const FundParams &fund, const MarketParams &mkt,
		double r, Direction direction, ConstraintMode mode, int Nx = 401, int Nt = 64) {
	spec.validate();
	const double n_real = spec.T;
	require(std::abs(n_real - std::round(n_real)) < 1e-12, ErrorCode::NonIntegerMaturity,
			"relaxed bounds need an integer maturity");
	HjbConfig cfg;
	cfg.n = static_cast<int>(std::round(n_real));
	cfg.r = r;
	cfg.sigma_A = fund.pi_S * mkt.sigma_S;
	const double half = std::max(0.5, 6.0 * cfg.sigma_A * std::sqrt(static_cast<double>(cfg.n)));
	const double x0 = std::log(fund.A0);
	cfg.grid = {x0 - half, x0 + half, Nx, Nt};
	cfg.constraint_times = constraint_times_for(mode, cfg.n);
	cfg.direction = direction;
	cfg.masks = spec.active_legs();
	return cfg;
}

struct LambdaVector {
	/// values[j-1] multiplies the constraint at year j.
	std::vector<double> values;

	LambdaVector() = default;
	explicit LambdaVector(int n, double fill = 0.0) : values(static_cast<std::size_t>(n), fill) {}

	double operator[](int j) const { return values[static_cast<std::size_t>(j) - 1]; }
	double &operator[](int j) { return values[static_cast<std::size_t>(j) - 1]; }
	int size() const noexcept { return static_cast<int>(values.size()); }
};

/// Mortality choice edge (upper or lower band edge) for each node of one time step.
struct PolicyStep {
	double t_lo = 0.0;
	double t_hi = 0.0;
	double theta = 0.5;
	std::vector<std::uint8_t> upper_edge;
};

struct ValueSurface {
	std::vector<double> x;
	std::vector<double> times;
	/// values[k][i] = v(times[k], x[i]); policy likewise holds mu*.
	std::vector<std::vector<double>> values;
	std::vector<std::vector<double>> policy;
	std::vector<PolicyStep> steps;
	double x0 = 0.0;
	int n = 0;
	int Nt = 0;

	double value_at(double x_query, std::size_t k = 0) const {
		const auto &row = values[k];
		const double dx = x[1] - x[0];
		const double pos = std::clamp((x_query - x.front()) / dx, 0.0, static_cast<double>(x.size() - 1));
		const auto i = std::min(static_cast<std::size_t>(pos), x.size() - 2);
		const double w = pos - static_cast<double>(i);
		return (1.0 - w) * row[i] + w * row[i + 1];
	}

	double origin_value() const { return value_at(x0, 0); }
};

/// Optimal hazard for a single node (max_mu rule, ties to the upper edge for Worst).
inline double bang_bang_control(double H_hat, double v, double mu_a, double delta, Direction direction) {
	const double lo = std::max(0.0, mu_a - delta);
	const double hi = mu_a + delta;
	if (direction == Direction::Worst) return H_hat < v ? lo : hi;
	return H_hat > v ? lo : hi;
}

namespace detail {

inline void solve_tridiagonal(const std::vector<double> &lower, std::vector<double> diag,
		const std::vector<double> &upper, std::vector<double> &rhs) {
	const std::size_t N = diag.size();
	for (std::size_t i = 1; i < N; ++i) {
		const double m = lower[i] / diag[i - 1];
		diag[i] -= m * upper[i - 1];
		rhs[i] -= m * rhs[i - 1];
	}
	rhs[N - 1] /= diag[N - 1];
	for (std::size_t i = N - 1; i-- > 0;)
		rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
}

/// Fund generator in log coordinates (no discounting), tridiagonal coefficients.
struct Generator {
	std::vector<double> lower, diag, upper;

	Generator(const HjbConfig &cfg, double dx) {
		const auto N = static_cast<std::size_t>(cfg.grid.Nx);
		lower.assign(N, 0.0);
		diag.assign(N, 0.0);
		upper.assign(N, 0.0);
		const double a = 0.5 * cfg.sigma_A * cfg.sigma_A;
		const double b = cfg.r - a;
		double lo = a / (dx * dx) - b / (2.0 * dx);
		double up = a / (dx * dx) + b / (2.0 * dx);
		double mid = -2.0 * a / (dx * dx);
		if (lo < 0.0 || up < 0.0) {
			// drift dominated: upwind first derivative
			lo = a / (dx * dx) + std::max(-b, 0.0) / dx;
			up = a / (dx * dx) + std::max(b, 0.0) / dx;
			mid = -lo - up;
		}
		for (std::size_t i = 1; i + 1 < N; ++i) {
			lower[i] = lo;
			diag[i] = mid;
			upper[i] = up;
		}
		// v_xx = v_x at both edges (value linear in the fund) leaves r v_x
		diag[0] = -cfg.r / dx;
		upper[0] = cfg.r / dx;
		lower[N - 1] = -cfg.r / dx;
		diag[N - 1] = cfg.r / dx;
	}

	void apply(const std::vector<double> &v, std::vector<double> &out) const {
		const std::size_t N = v.size();
		for (std::size_t i = 0; i < N; ++i) {
			double s = diag[i] * v[i];
			if (i > 0) s += lower[i] * v[i - 1];
			if (i + 1 < N) s += upper[i] * v[i + 1];
			out[i] = s;
		}
	}
};

struct Level {
	double mu_lo;
	double mu_hi;
	std::vector<double> income;
	std::vector<double> death;
};

inline Level make_level(const HjbConfig &cfg, const HazardBand &band, const ContractSpec &spec,
		const FundParams &fund, const std::vector<double> &x, double t, bool left_limit) {
	Level level;
	level.mu_lo = band.lower(t, left_limit);
	level.mu_hi = band.upper(t, left_limit);
	const double G = spec.guarantee(fund.A0, t);
	level.income.assign(x.size(), 0.0);
	level.death.assign(x.size(), 0.0);
	for (std::size_t i = 0; i < x.size(); ++i) {
		const double A = std::exp(x[i]);
		if (cfg.masks.income) level.income[i] = fund.A0 * spec.r_g + std::max(A - G, 0.0);
		if (cfg.masks.death) level.death[i] = std::max(A, G);
	}
	return level;
}

inline std::vector<double> make_grid(const HjbConfig &cfg) {
	std::vector<double> x(static_cast<std::size_t>(cfg.grid.Nx));
	const double dx = (cfg.grid.x_max - cfg.grid.x_min) / (cfg.grid.Nx - 1);
	for (std::size_t i = 0; i < x.size(); ++i) x[i] = cfg.grid.x_min + dx * static_cast<double>(i);
	return x;
}

/// Substeps of [j-1, j] going backward. After a restart at j the first step is
/// replaced by implicit substeps.
inline std::vector<std::pair<double, double>> year_substeps(const HjbConfig &cfg, int j, bool restart,
		std::vector<double> &thetas) {
	std::vector<std::pair<double, double>> out;
	thetas.clear();
	const double dt = 1.0 / cfg.grid.Nt;
	auto node = [&](int k) { return k == cfg.grid.Nt ? static_cast<double>(j) : (j - 1) + k * dt; };
	for (int k = cfg.grid.Nt; k > 0; --k) {
		const double hi = node(k), lo = node(k - 1);
		if (k == cfg.grid.Nt && restart && cfg.rannacher_steps > 0) {
			const double h = (hi - lo) / cfg.rannacher_steps;
			for (int p = 0; p < cfg.rannacher_steps; ++p) {
				const double top = hi - p * h;
				out.push_back({p + 1 == cfg.rannacher_steps ? lo : top - h, top});
				thetas.push_back(1.0);
			}
			continue;
		}
		out.push_back({lo, hi});
		thetas.push_back(0.5);
	}
	return out;
}

} // namespace detail

/// Backward solve of the reduced HJB with interior multiplier jumps.
inline ValueSurface hjb_solve(const HjbConfig &cfg, const HazardBand &band, const ContractSpec &spec,
		const MarketParams &mkt, const FundParams &fund, const LambdaVector &lambda) {
	cfg.validate();
	mkt.validate();
	fund.validate();
	require(std::abs(spec.T - cfg.n) < 1e-12, ErrorCode::NonIntegerMaturity,
			"maturity must equal the integer horizon n");
	require(spec.t == 0.0, ErrorCode::InvalidParameter, "relaxed bounds are computed at t = 0");
	require(band.years() >= cfg.n, ErrorCode::InvalidParameter, "hazard band shorter than the horizon");
	require(lambda.size() == cfg.n, ErrorCode::InvalidParameter, "lambda needs one entry per year");
	for (double l : lambda.values) require(std::isfinite(l), ErrorCode::InvalidParameter, "lambda must be finite");

	const double sgn = cfg.direction == Direction::Worst ? 1.0 : -1.0;
	ValueSurface surf;
	surf.x = detail::make_grid(cfg);
	surf.n = cfg.n;
	surf.Nt = cfg.grid.Nt;
	surf.x0 = std::log(fund.A0);
	const auto N = surf.x.size();
	const double dx = surf.x[1] - surf.x[0];
	const detail::Generator gen(cfg, dx);

	const std::size_t K = static_cast<std::size_t>(cfg.n * cfg.grid.Nt);
	surf.times.resize(K + 1);
	for (std::size_t k = 0; k <= K; ++k)
		surf.times[k] = static_cast<double>(k) / cfg.grid.Nt;
	surf.values.assign(K + 1, std::vector<double>(N, 0.0));
	surf.policy.assign(K + 1, std::vector<double>(N, 0.0));

	std::vector<double> v(N);
	for (std::size_t i = 0; i < N; ++i)
		v[i] = cfg.masks.accumulation ? std::max(std::exp(surf.x[i]), spec.guarantee(fund.A0, cfg.n)) : 0.0;

	std::vector<double> Lv(N), rhs(N), lower(N), diag(N), upper(N), v_new(N), score(N);
	std::vector<std::uint8_t> edge(N), next_edge(N);
	std::vector<double> thetas;
	const bool worst = cfg.direction == Direction::Worst;

	for (int j = cfg.n; j >= 1; --j) {
		const bool jump = cfg.constrained_at(j);
		if (jump) {
			const double shift = sgn * lambda[j] * std::exp(cfg.r * j);
			for (auto &vi : v) vi -= shift;
		}
		surf.values[static_cast<std::size_t>(j * cfg.grid.Nt)] = v;
		const bool restart = jump || j == cfg.n;
		const auto substeps = detail::year_substeps(cfg, j, restart, thetas);
		for (std::size_t s = 0; s < substeps.size(); ++s) {
			const auto [t_lo, t_hi] = substeps[s];
			const double theta = thetas[s];
			const double h = t_hi - t_lo;
			const double disc = std::exp(-cfg.r * h);
			const auto lvl_lo = detail::make_level(cfg, band, spec, fund, surf.x, t_lo, false);
			const auto lvl_hi = detail::make_level(cfg, band, spec, fund, surf.x, t_hi, true);
			const double width_lo = lvl_lo.mu_hi - lvl_lo.mu_lo;
			const double width_hi = lvl_hi.mu_hi - lvl_hi.mu_lo;

			gen.apply(v, Lv);
			auto choose = [&](const std::vector<double> &v_lo, std::vector<std::uint8_t> &out) {
				for (std::size_t i = 0; i < N; ++i) {
					const double s_i = theta * h * width_lo * (lvl_lo.death[i] - v_lo[i]) +
							(1.0 - theta) * h * disc * width_hi * (lvl_hi.death[i] - v[i]);
					out[i] = worst ? (s_i >= 0.0) : (s_i <= 0.0);
				}
			};
			choose(v, edge);
			bool done = false;
			for (int it = 0; it < cfg.policy_max_iter; ++it) {
				for (std::size_t i = 0; i < N; ++i) {
					const double m_lo = edge[i] ? lvl_lo.mu_hi : lvl_lo.mu_lo;
					const double m_hi = edge[i] ? lvl_hi.mu_hi : lvl_hi.mu_lo;
					lower[i] = -theta * h * gen.lower[i];
					upper[i] = -theta * h * gen.upper[i];
					diag[i] = 1.0 - theta * h * gen.diag[i] + theta * h * m_lo;
					rhs[i] = disc * (v[i] + (1.0 - theta) * h * (Lv[i] - m_hi * v[i])) +
							theta * h * (lvl_lo.income[i] + m_lo * lvl_lo.death[i]) +
							(1.0 - theta) * h * disc * (lvl_hi.income[i] + m_hi * lvl_hi.death[i]);
				}
				detail::solve_tridiagonal(lower, diag, upper, rhs);
				choose(rhs, next_edge);
				double change = 0.0;
				if (it > 0)
					for (std::size_t i = 0; i < N; ++i) change = std::max(change, std::abs(rhs[i] - v_new[i]));
				v_new = rhs;
				if (next_edge == edge || (it > 0 && change <= cfg.policy_tol)) {
					done = true;
					break;
				}
				edge.swap(next_edge);
			}
			if (!done)
				throw Error(ErrorCode::GridTooCoarse, "policy iteration did not converge at t=" + std::to_string(t_lo));
			v = v_new;
			for (const double vi : v)
				if (!std::isfinite(vi)) throw Error(ErrorCode::SolverFailure, "non-finite value in HJB solve");

			if (std::abs(t_hi - cfg.n) < 1e-12)
				for (std::size_t i = 0; i < N; ++i) surf.policy[K][i] = edge[i] ? lvl_hi.mu_hi : lvl_hi.mu_lo;
			const double k_real = t_lo * cfg.grid.Nt;
			const auto k = static_cast<std::size_t>(std::llround(k_real));
			if (std::abs(k_real - static_cast<double>(k)) < 1e-9) {
				surf.values[k] = v;
				for (std::size_t i = 0; i < N; ++i)
					surf.policy[k][i] = edge[i] ? lvl_lo.mu_hi : lvl_lo.mu_lo;
			}
			surf.steps.push_back({t_lo, t_hi, theta, edge});
		}
	}
	return surf;
}

/// E[exp(-int_0^j mu*)] for each constraint time j, by the companion linear PDE on
/// the same grid and policy. Result index j-1; unconstrained years are NaN.
inline std::vector<double> constraint_survival(const HjbConfig &cfg, const HazardBand &band,
		const ValueSurface &surface) {
	cfg.validate();
	require(surface.n == cfg.n && surface.Nt == cfg.grid.Nt &&
					surface.x.size() == static_cast<std::size_t>(cfg.grid.Nx) &&
					std::abs(surface.x.front() - cfg.grid.x_min) < 1e-12 &&
					std::abs(surface.x.back() - cfg.grid.x_max) < 1e-9,
			ErrorCode::GridMismatch, "policy surface does not match the configuration grid");
	const auto N = surface.x.size();
	const double dx = surface.x[1] - surface.x[0];
	const detail::Generator gen(cfg, dx);

	std::vector<std::vector<double>> u;
	std::vector<int> js;
	std::vector<double> out(static_cast<std::size_t>(cfg.n), std::numeric_limits<double>::quiet_NaN());
	std::vector<double> lower(N), diag(N), upper(N), Lu(N);

	std::size_t s = 0;
	for (int j = cfg.n; j >= 1; --j) {
		if (cfg.constrained_at(j)) {
			u.emplace_back(N, 1.0);
			js.push_back(j);
		}
		for (; s < surface.steps.size() && surface.steps[s].t_lo >= j - 1 - 1e-12; ++s) {
			const auto &step = surface.steps[s];
			const double h = step.t_hi - step.t_lo;
			const double theta = step.theta;
			const double lo_lo = band.lower(step.t_lo, false), hi_lo = band.upper(step.t_lo, false);
			const double lo_hi = band.lower(step.t_hi, true), hi_hi = band.upper(step.t_hi, true);
			for (std::size_t i = 0; i < N; ++i) {
				const double m_lo = step.upper_edge[i] ? hi_lo : lo_lo;
				lower[i] = -theta * h * gen.lower[i];
				upper[i] = -theta * h * gen.upper[i];
				diag[i] = 1.0 - theta * h * gen.diag[i] + theta * h * m_lo;
			}
			for (auto &uj : u) {
				gen.apply(uj, Lu);
				for (std::size_t i = 0; i < N; ++i) {
					const double m_hi = step.upper_edge[i] ? hi_hi : lo_hi;
					Lu[i] = uj[i] + (1.0 - theta) * h * (Lu[i] - m_hi * uj[i]);
				}
				detail::solve_tridiagonal(lower, diag, upper, Lu);
				uj.swap(Lu);
			}
		}
	}
	for (std::size_t q = 0; q < u.size(); ++q) {
		ValueSurface probe;
		probe.x = surface.x;
		probe.values = {u[q]};
		out[static_cast<std::size_t>(js[q]) - 1] = probe.value_at(surface.x0, 0);
	}
	return out;
}

struct RelaxedBounds {
	double value = 0.0;
	LambdaVector lambda_star;
	/// |E[exp(-int mu*)] - target_j| per year; zero at unconstrained years.
	std::vector<double> residuals;
	std::vector<double> survival;
	int dual_iterations = 0;
	double delta = 0.0;
	Direction direction = Direction::Worst;
	bool converged = false;

	double max_residual() const {
		double m = 0.0;
		for (double r : residuals) m = std::max(m, r);
		return m;
	}
};

struct DualSettings {
	double grad_tol = 1e-3;
	double rel_obj_tol = 1e-6;
	int max_iter = 400;
	double box = 1e4;
};

struct DualPoint {
	LambdaVector lambda;
	double objective = 0.0;
	double value = 0.0;
	std::vector<double> survival;
	/// Gradient of the minimized objective over active years (target - survival).
	std::vector<double> gradient;

	double grad_norm() const {
		double m = 0.0;
		for (double g : gradient) m = std::max(m, std::abs(g));
		return m;
	}
};

/// Dual objective written as a minimization in both directions:
/// Worst: v(0; lambda) + sum lambda_j p_j; Best: -(v(0; lambda) - sum lambda_j p_j).
inline DualPoint evaluate_dual(const HjbConfig &cfg, const HazardBand &band, const ContractSpec &spec,
		const MarketParams &mkt, const FundParams &fund, const LambdaVector &lambda) {
	const auto surface = hjb_solve(cfg, band, spec, mkt, fund, lambda);
	DualPoint pt;
	pt.lambda = lambda;
	pt.value = surface.origin_value();
	pt.survival = constraint_survival(cfg, band, surface);
	const double sgn = cfg.direction == Direction::Worst ? 1.0 : -1.0;
	pt.objective = sgn * pt.value;
	for (int j : cfg.constraint_times) {
		const double target = band.targets[static_cast<std::size_t>(j) - 1];
		pt.objective += lambda[j] * target;
		pt.gradient.push_back(target - pt.survival[static_cast<std::size_t>(j) - 1]);
	}
	return pt;
}

namespace detail {

inline double norm2(const std::vector<double> &v) {
	double s = 0.0;
	for (double x : v) s += x * x;
	return std::sqrt(s);
}

inline void project_simplex(std::vector<double> &y) {
	std::vector<double> sorted = y;
	std::sort(sorted.begin(), sorted.end(), std::greater<>());
	double cum = 0.0, tau = 0.0;
	for (std::size_t a = 0; a < sorted.size(); ++a) {
		cum += sorted[a];
		const double t = (cum - 1.0) / static_cast<double>(a + 1);
		if (sorted[a] - t > 0.0) tau = t;
	}
	for (double &v : y) v = std::max(v - tau, 0.0);
}

/// argmin over the simplex of |G^T w|^2 / (2u) + alpha.w (accelerated projected gradient).
inline std::vector<double> bundle_weights(const std::vector<std::vector<double>> &G,
		const std::vector<double> &alpha, double u) {
	const std::size_t k = G.size();
	std::vector<std::vector<double>> Q(k, std::vector<double>(k, 0.0));
	double trace = 0.0;
	for (std::size_t a = 0; a < k; ++a) {
		for (std::size_t b = 0; b <= a; ++b) {
			double s = 0.0;
			for (std::size_t c = 0; c < G[a].size(); ++c) s += G[a][c] * G[b][c];
			Q[a][b] = Q[b][a] = s / u;
		}
		trace += Q[a][a];
	}
	const double step = 1.0 / std::max(trace, 1e-300);
	auto objective = [&](const std::vector<double> &w) {
		double q = 0.0;
		for (std::size_t a = 0; a < k; ++a) {
			double row = 0.0;
			for (std::size_t b = 0; b < k; ++b) row += Q[a][b] * w[b];
			q += w[a] * (0.5 * row + alpha[a]);
		}
		return q;
	};
	std::vector<double> w(k, 0.0), prev, z, grad(k);
	w.back() = 1.0;
	z = w;
	double t = 1.0, q_prev = objective(w);
	for (int it = 0; it < 5000; ++it) {
		for (std::size_t a = 0; a < k; ++a) {
			grad[a] = alpha[a];
			for (std::size_t b = 0; b < k; ++b) grad[a] += Q[a][b] * z[b];
		}
		prev = w;
		for (std::size_t a = 0; a < k; ++a) w[a] = z[a] - step * grad[a];
		project_simplex(w);
		const double q = objective(w);
		double moved = 0.0;
		for (std::size_t a = 0; a < k; ++a) moved = std::max(moved, std::abs(w[a] - prev[a]));
		if (moved < 1e-14) break;
		double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
		if (q > q_prev) t_next = 1.0; // restart
		for (std::size_t a = 0; a < k; ++a) z[a] = w[a] + (t - 1.0) / t_next * (w[a] - prev[a]);
		if (q > q_prev) z = w;
		t = t_next;
		q_prev = q;
	}
	return w;
}

} // namespace detail

/// Outer dual problem over lambda (minimum for Worst, maximum for Best) by a proximal
/// bundle method. The dual is piecewise smooth: where the payoff is flat the optimal
/// control randomizes between the bang-bang policies of nearby multipliers, and the
/// aggregate subgradient is the constraint gap of that mixture.
inline RelaxedBounds optimize_lambda(const HjbConfig &cfg, const HazardBand &band, const ContractSpec &spec,
		const MarketParams &mkt, const FundParams &fund, const LambdaVector &lambda0,
		const DualSettings &settings = {}) {
	cfg.validate();
	const auto &active = cfg.constraint_times;
	const std::size_t m = active.size();
	const std::size_t n = static_cast<std::size_t>(cfg.n);
	auto eval = [&](const LambdaVector &l) { return evaluate_dual(cfg, band, spec, mkt, fund, l); };
	auto clip = [&](double v) { return std::clamp(v, -settings.box, settings.box); };

	LambdaVector start = lambda0.size() == cfg.n ? lambda0 : LambdaVector(cfg.n);
	for (int j = 1; j <= cfg.n; ++j) start[j] = cfg.constrained_at(j) ? clip(start[j]) : 0.0;

	struct Cut {
		std::vector<double> g;
		std::vector<double> survival;
		double at_center; // linearization evaluated at the stability center
	};

	DualPoint center = eval(start);
	int iterations = 1;
	std::vector<Cut> cuts{{center.gradient, center.survival, center.objective}};
	std::vector<double> mixed_survival = center.survival;
	std::vector<double> mixed_gradient = center.gradient;
	bool converged = m == 0 || center.grad_norm() <= settings.grad_tol;

	double lam_scale = 1.0;
	for (int j : active) lam_scale = std::max(lam_scale, std::abs(center.lambda[j]));
	double u = std::max(detail::norm2(center.gradient), 1e-12) / (0.1 * lam_scale);
	const std::size_t max_cuts = std::max<std::size_t>(2 * m + 8, 20);

	while (!converged && iterations < settings.max_iter) {
		std::vector<std::vector<double>> G;
		std::vector<double> alpha;
		for (const auto &c : cuts) {
			G.push_back(c.g);
			alpha.push_back(std::max(center.objective - c.at_center, 0.0));
		}
		const auto w = detail::bundle_weights(G, alpha, u);
		std::vector<double> agg(m, 0.0), agg_surv(n, 0.0);
		double agg_alpha = 0.0;
		for (std::size_t i = 0; i < cuts.size(); ++i) {
			for (std::size_t c = 0; c < m; ++c) agg[c] += w[i] * cuts[i].g[c];
			for (std::size_t c = 0; c < n; ++c) agg_surv[c] += w[i] * cuts[i].survival[c];
			agg_alpha += w[i] * alpha[i];
		}
		double agg_max = 0.0;
		for (double g : agg) agg_max = std::max(agg_max, std::abs(g));
		const double obj_tol = settings.rel_obj_tol * std::max(1.0, std::abs(center.objective));
		if (agg_max <= settings.grad_tol && agg_alpha <= obj_tol) {
			mixed_survival = agg_surv;
			mixed_gradient = agg;
			converged = true;
			break;
		}
		const double agg_sq = detail::norm2(agg) * detail::norm2(agg);
		const double predicted = -agg_sq / u - agg_alpha;

		LambdaVector trial = center.lambda;
		for (std::size_t c = 0; c < m; ++c) trial[active[c]] = clip(center.lambda[active[c]] - agg[c] / u);
		const DualPoint pt = eval(trial);
		++iterations;

		double shift_dot = 0.0;
		std::vector<double> shift(m);
		for (std::size_t c = 0; c < m; ++c) shift[c] = trial[active[c]] - center.lambda[active[c]];

		if (pt.objective <= center.objective + 0.1 * predicted) {
			const double ratio = (center.objective - pt.objective) / -predicted;
			for (auto &c : cuts) {
				shift_dot = 0.0;
				for (std::size_t k = 0; k < m; ++k) shift_dot += c.g[k] * shift[k];
				c.at_center += shift_dot;
			}
			center = pt;
			cuts.push_back({pt.gradient, pt.survival, pt.objective});
			mixed_survival = pt.survival;
			mixed_gradient = pt.gradient;
			if (ratio > 0.5) u *= 0.5;
			if (center.grad_norm() <= settings.grad_tol && -predicted <= obj_tol) converged = true;
		} else {
			shift_dot = 0.0;
			for (std::size_t k = 0; k < m; ++k) shift_dot += pt.gradient[k] * shift[k];
			cuts.push_back({pt.gradient, pt.survival, pt.objective - shift_dot});
			u *= 1.25;
		}

		if (cuts.size() > max_cuts) {
			// fold the current model into one aggregate cut, keep the newest
			Cut aggregate{agg, agg_surv, center.objective - agg_alpha};
			Cut newest = cuts.back();
			cuts = {aggregate, newest};
		}
	}

	RelaxedBounds out;
	out.lambda_star = center.lambda;
	out.value = cfg.direction == Direction::Worst ? center.objective : -center.objective;
	out.survival = mixed_survival;
	out.residuals.assign(n, 0.0);
	for (std::size_t c = 0; c < m; ++c)
		out.residuals[static_cast<std::size_t>(active[c]) - 1] = std::abs(mixed_gradient[c]);
	out.dual_iterations = iterations;
	out.delta = band.delta;
	out.direction = cfg.direction;
	out.converged = converged;
	return out;
}

/// Throws DualNotConverged for a result that hit the iteration cap.
inline const RelaxedBounds &require_converged(const RelaxedBounds &b) {
	if (!b.converged)
		throw Error(ErrorCode::DualNotConverged, "dual optimization stopped after " +
				std::to_string(b.dual_iterations) + " iterations, max residual " + std::to_string(b.max_residual()));
	return b;
}

struct DeltaSweep {
	std::vector<RelaxedBounds> results;
	/// results[i].value - results[i-1].value, i >= 1.
	std::vector<double> differences;
};

/// Relaxed bounds over increasing band widths; lambda warm-starts from the previous width.
inline DeltaSweep delta_sweep(const HjbConfig &cfg, const AnnualSurvival &p, FaaKind kind,
		const ContractSpec &spec, const MarketParams &mkt, const FundParams &fund,
		const std::vector<double> &deltas, const DualSettings &settings = {}) {
	for (std::size_t i = 0; i < deltas.size(); ++i) {
		require(deltas[i] >= 0.0, ErrorCode::InvalidParameter, "deltas must be non-negative");
		require(i == 0 || deltas[i] > deltas[i - 1], ErrorCode::InvalidParameter, "deltas must increase");
	}
	DeltaSweep out;
	LambdaVector lambda(cfg.n);
	for (double delta : deltas) {
		const auto band = HazardBand::from_faa(p, kind, delta);
		out.results.push_back(optimize_lambda(cfg, band, spec, mkt, fund, lambda, settings));
		lambda = out.results.back().lambda_star;
		if (out.results.size() > 1)
			out.differences.push_back(out.results.back().value - out.results[out.results.size() - 2].value);
	}
	return out;
}

} // namespace annuity_bounds
