#pragma once

#include "annuity_bounds/config.hpp"
#include "annuity_bounds/mc_oracle.hpp"
#include "annuity_bounds/parallel.hpp"
#include "annuity_bounds/relaxed_hjb.hpp"
#include "annuity_bounds/strict_bounds.hpp"

#include <charconv>
#include <cstdint>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

namespace annuity_bounds {

inline constexpr std::string_view kToolVersion = "1.0.0";

/// A CSV cell: text, integer or real.
using Cell = std::variant<std::string, long long, double>;

struct ResultTable {
	std::vector<std::string> header;
	std::vector<std::vector<Cell>> rows;
};

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view data) {
	std::uint64_t h = 0xcbf29ce484222325ULL;
	for (unsigned char c : data) {
		h ^= c;
		h *= 0x100000001b3ULL;
	}
	return h;
}

/// Shortest round-trip decimal, independent of the C locale.
inline std::string format_number(double v) {
	require(std::isfinite(v), ErrorCode::SolverFailure, "non-finite value in result table");
	char buf[64];
	const auto res = std::to_chars(buf, buf + sizeof buf, v);
	return std::string(buf, res.ptr);
}

inline std::string format_cell(const Cell &c) {
	if (const auto *s = std::get_if<std::string>(&c)) return *s;
	if (const auto *i = std::get_if<long long>(&c)) return std::to_string(*i);
	return format_number(std::get<double>(c));
}

inline std::string config_hash(const RunConfig &cfg) {
	char buf[17];
	const auto res = std::to_chars(buf, buf + sizeof buf, fnv1a(cfg.canonical), 16);
	std::string hex(buf, res.ptr);
	return std::string(16 - hex.size(), '0') + hex;
}

inline std::string to_csv(const ResultTable &table, const RunConfig &cfg) {
	std::string out = "# annuity-bounds " + std::string(kToolVersion) + " mode=" + std::string(to_string(cfg.mode)) +
			" config-fnv1a=" + config_hash(cfg) + "\n";
	for (std::size_t i = 0; i < table.header.size(); ++i) out += (i ? "," : "") + table.header[i];
	out += "\n";
	for (const auto &row : table.rows) {
		for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + format_cell(row[i]);
		out += "\n";
	}
	return out;
}

namespace detail {

struct CellKey {
	ProductKind kind;
	int age;
	double T;
};

inline std::vector<CellKey> cartesian(const RunConfig &cfg) {
	std::vector<CellKey> keys;
	for (auto kind : cfg.products)
		for (int x : cfg.ages)
			for (double T : cfg.maturities) keys.push_back({kind, x, T});
	return keys;
}

inline int whole_years(double T) { return static_cast<int>(std::ceil(T - 1e-12)); }

inline std::vector<std::vector<Cell>> survival_rows(const RunConfig &cfg, const LifeTable &table, int x) {
	const int years = whole_years(cfg.curve_horizon);
	const auto p = annual_survival_probs(table, x, years);
	const auto steps = static_cast<long long>(std::llround(cfg.curve_horizon / cfg.curve_step));
	std::vector<std::vector<Cell>> rows;
	for (long long i = 0; i <= steps; ++i) {
		const double s = std::min(cfg.curve_horizon, static_cast<double>(i) * cfg.curve_step);
		rows.push_back({static_cast<long long>(x), s, faa_survival(p, FaaKind::UDD, s),
				faa_survival(p, FaaKind::CFM, s), faa_survival(p, FaaKind::Balducci, s),
				step_survival(p, StepDirection::Sup, 0.0, s), step_survival(p, StepDirection::Inf, 0.0, s)});
	}
	return rows;
}

inline std::vector<Cell> key_cells(const CellKey &k) {
	return {std::string(to_string(k.kind)), static_cast<long long>(k.age), k.T};
}

inline std::vector<std::vector<Cell>> price_rows(const RunConfig &cfg, const LifeTable &table, const CellKey &k) {
	const auto spec = cfg.contract(k.kind, k.age, k.T);
	const auto p = annual_survival_probs(table, k.age, strict_horizon(cfg.t, k.T));
	auto row = key_cells(k);
	for (FaaKind kind : kAllFaaKinds)
		row.push_back(faa_baseline_price(spec, cfg.market, cfg.fund, p, kind, cfg.market.r0, cfg.fund.A0));
	if (cfg.mode == RunMode::StrictBounds) {
		const auto b = strict_bounds(spec, cfg.market, cfg.fund, p, cfg.market.r0, cfg.fund.A0);
		const bool gmdb = k.kind == ProductKind::GMDB;
		row.insert(row.end(), {b.lower, b.upper, gmdb ? b.formula_lower : b.lower, gmdb ? b.formula_upper : b.upper,
				static_cast<long long>(b.assumptions_violated ? 0 : 1)});
	}
	return {row};
}

inline std::pair<RelaxedBounds, RelaxedBounds> relaxed_pair(const RunConfig &cfg, const ContractSpec &spec,
		const HazardBand &band, const LambdaVector &warm_worst, const LambdaVector &warm_best) {
	const auto reduced = reduced_market(cfg.market, cfg.rate);
	auto solve = [&](Direction dir, const LambdaVector &warm) {
		const auto hc = make_hjb_config(spec, cfg.fund, cfg.market, cfg.rate, dir, cfg.constraints, cfg.Nx, cfg.Nt);
		return require_converged(optimize_lambda(hc, band, spec, reduced, cfg.fund, warm, cfg.dual));
	};
	return {solve(Direction::Worst, warm_worst), solve(Direction::Best, warm_best)};
}

inline std::vector<std::vector<Cell>> relaxed_rows(const RunConfig &cfg, const LifeTable &table, const CellKey &k) {
	const auto spec = cfg.contract(k.kind, k.age, k.T);
	const int n = whole_years(k.T);
	const auto p = annual_survival_probs(table, k.age, n);
	const auto reduced = reduced_market(cfg.market, cfg.rate);
	const std::string cons = cfg.constraints == ConstraintMode::Full ? "full" : "terminal";
	std::vector<std::vector<Cell>> rows;
	const std::vector<double> deltas = cfg.mode == RunMode::DeltaSweep ? cfg.deltas : std::vector<double>{cfg.delta};
	LambdaVector warm_w(n), warm_b(n);
	for (double delta : deltas) {
		const auto band = HazardBand::from_faa(p, cfg.baseline_faa, delta);
		const auto [w, b] = relaxed_pair(cfg, spec, band, warm_w, warm_b);
		warm_w = w.lambda_star;
		warm_b = b.lambda_star;
		auto row = key_cells(k);
		row.push_back(delta);
		if (cfg.mode == RunMode::RelaxedBounds) {
			row.push_back(cons);
			row.push_back(faa_baseline_price(spec, reduced, cfg.fund, p, cfg.baseline_faa, cfg.rate, cfg.fund.A0));
		}
		row.insert(row.end(), {b.value, w.value, std::max(w.max_residual(), b.max_residual())});
		if (cfg.mode == RunMode::RelaxedBounds)
			row.push_back(static_cast<long long>(w.dual_iterations + b.dual_iterations));
		rows.push_back(std::move(row));
	}
	return rows;
}

inline std::vector<std::vector<Cell>> mc_rows(const RunConfig &cfg, const LifeTable &table, const CellKey &k) {
	const auto spec = cfg.contract(k.kind, k.age, k.T);
	const auto p = annual_survival_probs(table, k.age, whole_years(k.T));
	const double closed = faa_baseline_price(spec, cfg.market, cfg.fund, p, FaaKind::UDD, cfg.market.r0, cfg.fund.A0);
	const auto est = mc_price_streaming(spec, cfg.market, cfg.fund, cfg.mc, MortalityPolicy::faa(p, FaaKind::UDD));
	std::size_t samples = 0, violations = 0;
	if (cfg.audit_samples > 0 && k.kind != ProductKind::Combined) {
		const auto strict = strict_bounds(spec, cfg.market, cfg.fund, p, cfg.market.r0, cfg.fund.A0);
		const auto report = audit_strict_bounds(spec, cfg.market, cfg.fund, p, strict, cfg.audit_samples, cfg.mc);
		samples = report.entries.size();
		violations = report.violations();
	}
	auto row = key_cells(k);
	const double z = est.std_error > 0.0 ? (est.mean - closed) / est.std_error : 0.0;
	row.insert(row.end(), {closed, est.mean, est.std_error, z, static_cast<long long>(samples),
			static_cast<long long>(violations)});
	return {row};
}

inline std::vector<std::string> header_for(RunMode mode) {
	switch (mode) {
	case RunMode::SurvivalCurves: return {"age", "t", "udd", "cfm", "balducci", "sup", "inf"};
	case RunMode::FaaPrice: return {"product", "age", "maturity", "faa_udd", "faa_cfm", "faa_balducci"};
	case RunMode::StrictBounds:
		return {"product", "age", "maturity", "faa_udd", "faa_cfm", "faa_balducci", "strict_lower", "strict_upper",
				"formula_lower", "formula_upper", "assumptions_ok"};
	case RunMode::RelaxedBounds:
		return {"product", "age", "maturity", "delta", "constraints", "faa_baseline", "relaxed_lower",
				"relaxed_upper", "residual_max", "dual_iterations"};
	case RunMode::DeltaSweep:
		return {"product", "age", "maturity", "delta", "relaxed_lower", "relaxed_upper", "residual_max"};
	case RunMode::McCheck:
		return {"product", "age", "maturity", "closed_form", "mc_mean", "mc_std_error", "z_score", "audit_samples",
				"audit_violations"};
	}
	return {};
}

} // namespace detail

/// Executes the configured mode over every (product, age, maturity) cell; rows come
/// out in cell order whatever the thread count.
inline ResultTable run(const RunConfig &cfg, const LifeTable &table) {
	ResultTable out;
	out.header = detail::header_for(cfg.mode);
	std::vector<std::vector<std::vector<Cell>>> parts;
	const int threads = cfg.mc.threads;

	if (cfg.mode == RunMode::SurvivalCurves) {
		parts.resize(cfg.ages.size());
		parallel_for(cfg.ages.size(), [&](std::size_t i) { parts[i] = detail::survival_rows(cfg, table, cfg.ages[i]); },
				threads);
	} else {
		const auto keys = detail::cartesian(cfg);
		parts.resize(keys.size());
		auto cell = [&](std::size_t i) {
			switch (cfg.mode) {
			case RunMode::FaaPrice:
			case RunMode::StrictBounds: parts[i] = detail::price_rows(cfg, table, keys[i]); break;
			case RunMode::RelaxedBounds:
			case RunMode::DeltaSweep: parts[i] = detail::relaxed_rows(cfg, table, keys[i]); break;
			case RunMode::McCheck: parts[i] = detail::mc_rows(cfg, table, keys[i]); break;
			case RunMode::SurvivalCurves: break;
			}
		};
		// Monte Carlo parallelizes over path blocks instead
		if (cfg.mode == RunMode::McCheck)
			for (std::size_t i = 0; i < keys.size(); ++i) cell(i);
		else
			parallel_for(keys.size(), cell, threads);
	}
	for (auto &p : parts)
		for (auto &r : p) out.rows.push_back(std::move(r));
	return out;
}

inline void write_text(const std::string &path, const std::string &text) {
	std::ofstream f(path, std::ios::binary | std::ios::trunc);
	if (!f) throw Error(ErrorCode::ConfigInvalid, "cannot write " + path);
	f << text;
	if (!f) throw Error(ErrorCode::SolverFailure, "write to " + path + " failed");
}

} // namespace annuity_bounds
