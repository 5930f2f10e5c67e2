#pragma once

#include "annuity_bounds/error.hpp"
#include "annuity_bounds/lifetable.hpp"
#include "annuity_bounds/market.hpp"
#include "annuity_bounds/mc_oracle.hpp"
#include "annuity_bounds/relaxed_hjb.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace annuity_bounds {

enum class RunMode { SurvivalCurves, FaaPrice, StrictBounds, RelaxedBounds, DeltaSweep, McCheck };

constexpr std::string_view to_string(RunMode mode) noexcept {
	switch (mode) {
	case RunMode::SurvivalCurves: return "survival-curves";
	case RunMode::FaaPrice: return "faa-price";
	case RunMode::StrictBounds: return "strict-bounds";
	case RunMode::RelaxedBounds: return "relaxed-bounds";
	case RunMode::DeltaSweep: return "delta-sweep";
	case RunMode::McCheck: return "mc-check";
	}
	return "unknown";
}

struct LifeTableSource {
	/// Empty when the table is generated.
	std::string path;
	double makeham_A = 0.0002, makeham_B = 3e-5, makeham_c = 1.09;
	int base_age = 0, span = 120;
};

struct RunConfig {
	RunMode mode = RunMode::StrictBounds;
	LifeTableSource life_table;
	MarketParams market;
	FundParams fund;
	std::vector<ProductKind> products{ProductKind::GMAB, ProductKind::GMIB, ProductKind::GMDB};
	PayoffMask combined_masks{true, true, true};
	double r_g = 0.03;
	double t = 0.0;
	std::vector<int> ages{40, 60, 80};
	std::vector<double> maturities{1, 2, 3, 5, 7, 10, 15};

	// survival-curves
	double curve_step = 0.01;
	double curve_horizon = 5.0;

	// relaxed modes
	FaaKind baseline_faa = FaaKind::Balducci;
	double rate = 0.01;
	double delta = 1.0;
	std::vector<double> deltas{0.25, 0.5, 1.0, 2.0, 4.0};
	ConstraintMode constraints = ConstraintMode::Full;
	int Nx = 401;
	int Nt = 64;
	DualSettings dual;

	// mc-check
	McConfig mc;
	std::size_t audit_samples = 0;

	std::string output;
	/// Canonical dump of the parsed document, hashed into the CSV header.
	std::string canonical;

	LifeTable load_table() const {
		if (!life_table.path.empty()) return load_life_table(life_table.path);
		return make_makeham_table(life_table.makeham_A, life_table.makeham_B, life_table.makeham_c,
				life_table.base_age, life_table.span);
	}

	ContractSpec contract(ProductKind kind, int age, double T) const {
		ContractSpec s;
		s.kind = kind;
		s.r_g = r_g;
		s.x = age;
		s.t = t;
		s.T = T;
		if (kind == ProductKind::Combined) s.masks = combined_masks;
		return s;
	}
};

namespace detail {

using json = nlohmann::json;

inline void config_fail(const std::string &what) { throw Error(ErrorCode::ConfigInvalid, what); }

inline void reject_unknown(const json &obj, const std::string &section, std::initializer_list<const char *> keys) {
	if (!obj.is_object()) config_fail(section + " must be an object");
	for (const auto &[key, _] : obj.items())
		if (std::none_of(keys.begin(), keys.end(), [&](const char *k) { return key == k; }))
			config_fail("unknown key '" + key + "' in " + section);
}

template <class T>
void read(const json &obj, const char *key, T &out, const std::string &section) {
	if (!obj.contains(key)) return;
	try {
		out = obj.at(key).get<T>();
	} catch (const json::exception &) {
		config_fail(section + "." + key + " has the wrong type");
	}
}

inline double finite(double v, const std::string &name) {
	if (!std::isfinite(v)) config_fail(name + " must be finite");
	return v;
}

} // namespace detail

inline RunMode parse_run_mode(std::string_view name) {
	for (auto m : {RunMode::SurvivalCurves, RunMode::FaaPrice, RunMode::StrictBounds, RunMode::RelaxedBounds,
				 RunMode::DeltaSweep, RunMode::McCheck})
		if (to_string(m) == name) return m;
	throw Error(ErrorCode::ConfigInvalid, "unknown mode '" + std::string(name) + "'");
}

/// Semantic checks that need no numerics; throws ConfigInvalid.
inline void validate_run_config(const RunConfig &c, const LifeTable &table) {
	auto fail = detail::config_fail;
	try {
		c.market.validate();
		c.fund.validate();
	} catch (const Error &e) {
		fail(e.what());
	}
	if (c.ages.empty() || c.maturities.empty()) fail("ages and maturities must be non-empty");
	if (c.products.empty()) fail("contract.products must be non-empty");
	if (!(c.t >= 0.0)) fail("contract.t must be >= 0");
	const bool relaxed = c.mode == RunMode::RelaxedBounds || c.mode == RunMode::DeltaSweep;
	for (double T : c.maturities) {
		if (!(T > c.t) || !std::isfinite(T)) fail("every maturity must exceed contract.t");
		if ((relaxed || c.mode == RunMode::McCheck) && std::abs(T - std::round(T)) > 1e-12)
			fail("relaxed and mc-check modes need integer maturities");
	}
	if ((relaxed || c.mode == RunMode::McCheck) && c.t != 0.0) fail("relaxed and mc-check modes need contract.t = 0");
	if (c.mode == RunMode::StrictBounds &&
			std::find(c.products.begin(), c.products.end(), ProductKind::Combined) != c.products.end())
		fail("strict bounds are per product; drop Combined");
	if (c.mode == RunMode::SurvivalCurves && !(c.curve_step > 0.0 && c.curve_horizon > 0.0))
		fail("survival_curves.step and horizon must be positive");
	if (relaxed) {
		if (c.Nx < 3 || c.Nt < 1) fail("grid needs Nx >= 3 and Nt >= 1");
		if (!(c.delta >= 0.0)) fail("delta must be >= 0");
		for (std::size_t i = 0; i < c.deltas.size(); ++i)
			if (!(c.deltas[i] >= 0.0) || (i > 0 && !(c.deltas[i] > c.deltas[i - 1])))
				fail("deltas must be non-negative and increasing");
		if (c.mode == RunMode::DeltaSweep && c.deltas.empty()) fail("deltas must be non-empty");
		if (!(c.dual.grad_tol > 0.0 && c.dual.max_iter >= 1)) fail("dual settings must be positive");
	}
	if (c.mode == RunMode::McCheck) {
		try {
			c.mc.validate();
		} catch (const Error &e) {
			fail(e.what());
		}
	}
	double longest = c.mode == RunMode::SurvivalCurves ? c.curve_horizon : 0.0;
	for (double T : c.maturities) longest = std::max(longest, T);
	const int years = static_cast<int>(std::ceil(longest - 1e-12));
	for (int x : c.ages)
		if (!table.covers(x) || !table.covers(x + years))
			fail("life table does not cover age " + std::to_string(x) + " plus " + std::to_string(years) + " years");
}

/// Parses and validates a configuration document; relative table paths resolve
/// against `base_dir`.
inline RunConfig parse_run_config(const std::string &text, const std::filesystem::path &base_dir = {}) {
	using detail::json;
	using detail::read;
	json doc;
	try {
		doc = json::parse(text);
	} catch (const json::parse_error &e) {
		detail::config_fail(std::string("malformed JSON: ") + e.what());
	}
	detail::reject_unknown(doc, "config",
			{"mode", "life_table", "market", "fund", "contract", "numerics", "output"});
	RunConfig c;
	if (!doc.contains("mode")) detail::config_fail("mode is required");
	std::string mode;
	read(doc, "mode", mode, "config");
	c.mode = parse_run_mode(mode);
	read(doc, "output", c.output, "config");

	if (doc.contains("life_table")) {
		const auto &lt = doc["life_table"];
		detail::reject_unknown(lt, "life_table", {"path", "makeham"});
		if (lt.contains("path") && lt.contains("makeham")) detail::config_fail("life_table: give path or makeham, not both");
		read(lt, "path", c.life_table.path, "life_table");
		if (!c.life_table.path.empty()) {
			std::filesystem::path p(c.life_table.path);
			if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
			if (!std::filesystem::is_regular_file(p)) detail::config_fail("life table file not found: " + p.string());
			c.life_table.path = p.string();
		}
		if (lt.contains("makeham")) {
			const auto &mk = lt["makeham"];
			detail::reject_unknown(mk, "life_table.makeham", {"A", "B", "c", "base_age", "span"});
			read(mk, "A", c.life_table.makeham_A, "life_table.makeham");
			read(mk, "B", c.life_table.makeham_B, "life_table.makeham");
			read(mk, "c", c.life_table.makeham_c, "life_table.makeham");
			read(mk, "base_age", c.life_table.base_age, "life_table.makeham");
			read(mk, "span", c.life_table.span, "life_table.makeham");
		}
	}

	if (doc.contains("market")) {
		const auto &m = doc["market"];
		detail::reject_unknown(m, "market", {"kappa", "sigma_r", "sigma_S", "rho", "r0", "curve"});
		read(m, "kappa", c.market.kappa, "market");
		read(m, "sigma_r", c.market.sigma_r, "market");
		read(m, "sigma_S", c.market.sigma_S, "market");
		read(m, "rho", c.market.rho, "market");
		read(m, "r0", c.market.r0, "market");
		if (m.contains("curve")) {
			const auto &cv = m["curve"];
			detail::reject_unknown(cv, "market.curve", {"a", "b", "c", "d"});
			read(cv, "a", c.market.curve.a, "market.curve");
			read(cv, "b", c.market.curve.b, "market.curve");
			read(cv, "c", c.market.curve.c, "market.curve");
			read(cv, "d", c.market.curve.d, "market.curve");
		}
	}

	if (doc.contains("fund")) {
		const auto &f = doc["fund"];
		detail::reject_unknown(f, "fund", {"A0", "pi_S", "pi_P"});
		read(f, "A0", c.fund.A0, "fund");
		read(f, "pi_S", c.fund.pi_S, "fund");
		read(f, "pi_P", c.fund.pi_P, "fund");
	}

	if (doc.contains("contract")) {
		const auto &k = doc["contract"];
		detail::reject_unknown(k, "contract", {"products", "r_g", "t", "ages", "maturities", "masks"});
		if (k.contains("products")) {
			std::vector<std::string> names;
			read(k, "products", names, "contract");
			c.products.clear();
			try {
				for (const auto &n : names) c.products.push_back(parse_product_kind(n));
			} catch (const Error &e) {
				detail::config_fail(e.what());
			}
		}
		read(k, "r_g", c.r_g, "contract");
		read(k, "t", c.t, "contract");
		read(k, "ages", c.ages, "contract");
		read(k, "maturities", c.maturities, "contract");
		if (k.contains("masks")) {
			const auto &mk = k["masks"];
			detail::reject_unknown(mk, "contract.masks", {"accumulation", "income", "death"});
			read(mk, "accumulation", c.combined_masks.accumulation, "contract.masks");
			read(mk, "income", c.combined_masks.income, "contract.masks");
			read(mk, "death", c.combined_masks.death, "contract.masks");
		}
	}

	if (doc.contains("numerics")) {
		const auto &n = doc["numerics"];
		detail::reject_unknown(n, "numerics", {"survival_curves", "relaxed", "mc", "threads"});
		read(n, "threads", c.mc.threads, "numerics");
		if (n.contains("survival_curves")) {
			const auto &s = n["survival_curves"];
			detail::reject_unknown(s, "numerics.survival_curves", {"step", "horizon"});
			read(s, "step", c.curve_step, "numerics.survival_curves");
			read(s, "horizon", c.curve_horizon, "numerics.survival_curves");
		}
		if (n.contains("relaxed")) {
			const auto &r = n["relaxed"];
			detail::reject_unknown(r, "numerics.relaxed",
					{"baseline_faa", "rate", "delta", "deltas", "constraints", "Nx", "Nt", "grad_tol", "max_iter"});
			std::string faa, cons;
			read(r, "baseline_faa", faa, "numerics.relaxed");
			if (!faa.empty()) {
				try {
					c.baseline_faa = parse_faa_kind(faa);
				} catch (const Error &e) {
					detail::config_fail(e.what());
				}
			}
			read(r, "constraints", cons, "numerics.relaxed");
			if (cons == "terminal") c.constraints = ConstraintMode::TerminalOnly;
			else if (cons == "full" || cons.empty()) c.constraints = ConstraintMode::Full;
			else detail::config_fail("numerics.relaxed.constraints must be 'full' or 'terminal'");
			read(r, "rate", c.rate, "numerics.relaxed");
			read(r, "delta", c.delta, "numerics.relaxed");
			read(r, "deltas", c.deltas, "numerics.relaxed");
			read(r, "Nx", c.Nx, "numerics.relaxed");
			read(r, "Nt", c.Nt, "numerics.relaxed");
			read(r, "grad_tol", c.dual.grad_tol, "numerics.relaxed");
			read(r, "max_iter", c.dual.max_iter, "numerics.relaxed");
			detail::finite(c.rate, "numerics.relaxed.rate");
		}
		if (n.contains("mc")) {
			const auto &m = n["mc"];
			detail::reject_unknown(m, "numerics.mc", {"paths", "steps_per_year", "seed", "antithetic", "block", "audit_samples"});
			read(m, "paths", c.mc.paths, "numerics.mc");
			read(m, "steps_per_year", c.mc.steps_per_year, "numerics.mc");
			read(m, "seed", c.mc.seed, "numerics.mc");
			read(m, "antithetic", c.mc.antithetic, "numerics.mc");
			read(m, "block", c.mc.block, "numerics.mc");
			read(m, "audit_samples", c.audit_samples, "numerics.mc");
		}
	}
	c.canonical = doc.dump();
	return c;
}

inline RunConfig load_run_config(const std::string &path) {
	std::ifstream in(path);
	if (!in) throw Error(ErrorCode::ConfigInvalid, "cannot open config " + path);
	std::ostringstream buf;
	buf << in.rdbuf();
	return parse_run_config(buf.str(), std::filesystem::path(path).parent_path());
}

} // namespace annuity_bounds
