#pragma once

#include "annuity_bounds/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace annuity_bounds {

/// Expected survivor counts l_x at consecutive integer ages.
class LifeTable {
public:
	LifeTable(int base_age, std::vector<double> counts)
		: base_age_(base_age), counts_(std::move(counts)) {
		require(!counts_.empty(), ErrorCode::InvalidParameter, "life table has no rows");
		for (std::size_t i = 0; i < counts_.size(); ++i) {
			if (!(counts_[i] > 0.0) || !std::isfinite(counts_[i]))
				throw RowError(ErrorCode::NonPositiveCount, static_cast<int>(i) + 1,
						"l_x must be positive");
			if (i > 0 && counts_[i] > counts_[i - 1])
				throw RowError(ErrorCode::IncreasingCount, static_cast<int>(i) + 1,
						"l_x increases with age");
		}
	}

	int base_age() const noexcept { return base_age_; }
	int max_age() const noexcept { return base_age_ + static_cast<int>(counts_.size()) - 1; }
	const std::vector<double> &counts() const noexcept { return counts_; }

	bool covers(int age) const noexcept { return age >= base_age_ && age <= max_age(); }

	double count_at(int age) const {
		require(covers(age), ErrorCode::AgeOutOfRange,
				"age " + std::to_string(age) + " outside table");
		return counts_[static_cast<std::size_t>(age - base_age_)];
	}

private:
	int base_age_;
	std::vector<double> counts_;
};

/// One-year survival probabilities p_j = l_{x+j+1} / l_{x+j}, j = 0..n-1.
struct AnnualSurvival {
	int anchor_age = 0;
	std::vector<double> probs;

	int years() const noexcept { return static_cast<int>(probs.size()); }

	/// Product of the first j probabilities (j-year survival from the anchor).
	double cumulative(int j) const {
		require(j >= 0 && j <= years(), ErrorCode::HorizonExceeded,
				"cumulative survival beyond table horizon");
		double s = 1.0;
		for (int i = 0; i < j; ++i) s *= probs[static_cast<std::size_t>(i)];
		return s;
	}
};

enum class FaaKind { UDD, CFM, Balducci };

inline constexpr FaaKind kAllFaaKinds[] = {FaaKind::UDD, FaaKind::CFM, FaaKind::Balducci};

constexpr std::string_view to_string(FaaKind kind) noexcept {
	switch (kind) {
	case FaaKind::UDD: return "udd";
	case FaaKind::CFM: return "cfm";
	case FaaKind::Balducci: return "balducci";
	}
	return "?";
}

inline FaaKind parse_faa_kind(std::string_view name) {
	std::string lower(name);
	std::transform(lower.begin(), lower.end(), lower.begin(),
			[](unsigned char c) { return static_cast<char>(std::tolower(c)); });
	if (lower == "udd") return FaaKind::UDD;
	if (lower == "cfm") return FaaKind::CFM;
	if (lower == "balducci" || lower == "bald") return FaaKind::Balducci;
	throw Error(ErrorCode::InvalidParameter, "unknown fractional age assumption '" + lower + "'");
}

namespace detail {

inline std::string_view trim(std::string_view s) {
	const auto first = s.find_first_not_of(" \t\r");
	if (first == std::string_view::npos) return {};
	const auto last = s.find_last_not_of(" \t\r");
	return s.substr(first, last - first + 1);
}

template <class T>
bool parse_number(std::string_view s, T &out) {
	s = trim(s);
	if (s.empty()) return false;
	const auto *end = s.data() + s.size();
	auto [ptr, ec] = std::from_chars(s.data(), end, out);
	return ec == std::errc() && ptr == end;
}

} // namespace detail

/// Parses a two-column `age,lx` CSV document.
inline LifeTable parse_life_table(std::string_view text) {
	std::vector<std::string_view> lines;
	std::size_t pos = 0;
	while (pos <= text.size()) {
		auto nl = text.find('\n', pos);
		if (nl == std::string_view::npos) nl = text.size();
		auto line = detail::trim(text.substr(pos, nl - pos));
		if (!line.empty() && line.front() != '#') lines.push_back(line);
		pos = nl + 1;
	}
	if (lines.empty()) throw Error(ErrorCode::MissingHeader, "empty document");
	{
		std::string header(lines.front());
		header.erase(std::remove_if(header.begin(), header.end(),
				[](unsigned char c) { return std::isspace(c); }), header.end());
		std::transform(header.begin(), header.end(), header.begin(),
				[](unsigned char c) { return static_cast<char>(std::tolower(c)); });
		if (header != "age,lx")
			throw Error(ErrorCode::MissingHeader, "expected header 'age,lx'");
	}

	int base_age = 0;
	std::vector<double> counts;
	for (std::size_t i = 1; i < lines.size(); ++i) {
		const int row = static_cast<int>(i);
		const auto comma = lines[i].find(',');
		int age = 0;
		double lx = 0.0;
		if (comma == std::string_view::npos ||
				!detail::parse_number(lines[i].substr(0, comma), age) ||
				!detail::parse_number(lines[i].substr(comma + 1), lx))
			throw RowError(ErrorCode::MalformedRow, row, "expected '<age>,<lx>'");
		if (counts.empty()) {
			base_age = age;
		} else if (age != base_age + static_cast<int>(counts.size())) {
			throw RowError(ErrorCode::NonConsecutiveAges, row,
					"age " + std::to_string(age) + " does not follow " +
					std::to_string(base_age + static_cast<int>(counts.size()) - 1));
		}
		if (!(lx > 0.0) || !std::isfinite(lx))
			throw RowError(ErrorCode::NonPositiveCount, row, "l_x must be positive");
		if (!counts.empty() && lx > counts.back())
			throw RowError(ErrorCode::IncreasingCount, row, "l_x increases with age");
		counts.push_back(lx);
	}
	if (counts.empty()) throw Error(ErrorCode::InvalidParameter, "life table has no rows");
	return LifeTable(base_age, std::move(counts));
}

inline LifeTable load_life_table(const std::string &path) {
	std::ifstream in(path);
	require(static_cast<bool>(in), ErrorCode::InvalidParameter, "cannot open life table '" + path + "'");
	std::ostringstream buffer;
	buffer << in.rdbuf();
	return parse_life_table(buffer.str());
}

inline std::string to_csv(const LifeTable &table) {
	std::ostringstream out;
	out.precision(17);
	out << "age,lx\n";
	for (std::size_t i = 0; i < table.counts().size(); ++i)
		out << table.base_age() + static_cast<int>(i) << ',' << table.counts()[i] << '\n';
	return out.str();
}

/// Synthetic table from the Makeham hazard A + B c^x, integrated exactly per year.
inline LifeTable make_makeham_table(double A, double B, double c, int base_age, int span,
		double l0 = 100000.0) {
	require(A >= 0.0 && B > 0.0 && c > 1.0 && span >= 1 && l0 > 0.0,
			ErrorCode::InvalidParameter, "Makeham parameters require A>=0, B>0, c>1, span>=1");
	const double log_c = std::log(c);
	std::vector<double> counts(static_cast<std::size_t>(span) + 1);
	counts[0] = l0;
	for (int k = 0; k < span; ++k) {
		const double x = base_age + k;
		// B * (c^{x+1} - c^x) / ln c, written to avoid cancellation
		const double gompertz = B * std::pow(c, x) * std::expm1(log_c) / log_c;
		counts[static_cast<std::size_t>(k) + 1] = counts[static_cast<std::size_t>(k)] * std::exp(-(A + gompertz));
	}
	return LifeTable(base_age, std::move(counts));
}

/// The bundled default table: Makeham(0.0002, 3e-5, 1.09) from age 0 to 120.
inline LifeTable default_life_table() {
	return make_makeham_table(0.0002, 3e-5, 1.09, 0, 120, 100000.0);
}

inline AnnualSurvival annual_survival_probs(const LifeTable &table, int x, int n) {
	require(n >= 0, ErrorCode::InvalidParameter, "negative horizon");
	if (!table.covers(x) || !table.covers(x + n))
		throw Error(ErrorCode::AgeOutOfRange, "table covers ages " +
				std::to_string(table.base_age()) + ".." + std::to_string(table.max_age()) +
				", requested " + std::to_string(x) + ".." + std::to_string(x + n));
	AnnualSurvival out;
	out.anchor_age = x;
	out.probs.reserve(static_cast<std::size_t>(n));
	for (int j = 0; j < n; ++j)
		out.probs.push_back(table.count_at(x + j + 1) / table.count_at(x + j));
	return out;
}

/// Within-year survival u-fraction of a year with one-year survival p.
inline double within_year_survival(double p, FaaKind kind, double u) {
	if (u <= 0.0) return 1.0;
	if (u >= 1.0) return p;
	switch (kind) {
	case FaaKind::UDD: return 1.0 - u * (1.0 - p);
	case FaaKind::CFM: return std::pow(p, u);
	case FaaKind::Balducci: return p / (u + (1.0 - u) * p);
	}
	return 1.0;
}

/// Hazard at fraction u of a year with one-year survival p.
inline double within_year_hazard(double p, FaaKind kind, double u) {
	const double q = 1.0 - p;
	switch (kind) {
	case FaaKind::UDD: return q / (1.0 - u * q);
	case FaaKind::CFM: return -std::log(p);
	case FaaKind::Balducci: return q / (p + u * q);
	}
	return 0.0;
}

inline double faa_survival(const AnnualSurvival &p, FaaKind kind, double t) {
	const int n = p.years();
	if (!(t >= 0.0) || t > static_cast<double>(n))
		throw Error(ErrorCode::HorizonExceeded, "t=" + std::to_string(t) +
				" outside [0," + std::to_string(n) + "]");
	const int k = static_cast<int>(std::floor(t));
	double s = 1.0;
	for (int j = 0; j < k; ++j) s *= p.probs[static_cast<std::size_t>(j)];
	const double u = t - k;
	if (u > 0.0) s *= within_year_survival(p.probs[static_cast<std::size_t>(k)], kind, u);
	return s;
}

/// Hazard rate; right limit at integer ages.
inline double faa_hazard(const AnnualSurvival &p, FaaKind kind, double t) {
	const int n = p.years();
	if (!(t >= 0.0) || !(t < static_cast<double>(n)))
		throw Error(ErrorCode::HorizonExceeded, "t=" + std::to_string(t) +
				" outside [0," + std::to_string(n) + ")");
	const int k = static_cast<int>(std::floor(t));
	return within_year_hazard(p.probs[static_cast<std::size_t>(k)], kind, t - k);
}

/// Hazard rate; left limit at integer ages, t in (0, n].
inline double faa_hazard_left(const AnnualSurvival &p, FaaKind kind, double t) {
	const int n = p.years();
	if (!(t > 0.0) || t > static_cast<double>(n))
		throw Error(ErrorCode::HorizonExceeded, "t=" + std::to_string(t) +
				" outside (0," + std::to_string(n) + "]");
	const int k = static_cast<int>(std::ceil(t)) - 1;
	return within_year_hazard(p.probs[static_cast<std::size_t>(k)], kind, t - k);
}

} // namespace annuity_bounds
