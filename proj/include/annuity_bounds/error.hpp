#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace annuity_bounds {

enum class ErrorCode {
	MissingHeader,
	NonConsecutiveAges,
	NonPositiveCount,
	IncreasingCount,
	MalformedRow,
	InvalidParameter,
	AgeOutOfRange,
	HorizonExceeded,
	NonPositiveFund,
	GridTooCoarse,
	NonIntegerMaturity,
	GridMismatch,
	InconsistentGrid,
	DualNotConverged,
	ConfigInvalid,
	SolverFailure,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
	switch (code) {
	case ErrorCode::MissingHeader: return "MissingHeader";
	case ErrorCode::NonConsecutiveAges: return "NonConsecutiveAges";
	case ErrorCode::NonPositiveCount: return "NonPositiveCount";
	case ErrorCode::IncreasingCount: return "IncreasingCount";
	case ErrorCode::MalformedRow: return "MalformedRow";
	case ErrorCode::InvalidParameter: return "InvalidParameter";
	case ErrorCode::AgeOutOfRange: return "AgeOutOfRange";
	case ErrorCode::HorizonExceeded: return "HorizonExceeded";
	case ErrorCode::NonPositiveFund: return "NonPositiveFund";
	case ErrorCode::GridTooCoarse: return "GridTooCoarse";
	case ErrorCode::NonIntegerMaturity: return "NonIntegerMaturity";
	case ErrorCode::GridMismatch: return "GridMismatch";
	case ErrorCode::InconsistentGrid: return "InconsistentGrid";
	case ErrorCode::DualNotConverged: return "DualNotConverged";
	case ErrorCode::ConfigInvalid: return "ConfigInvalid";
	case ErrorCode::SolverFailure: return "SolverFailure";
	}
	return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
public:
	Error(ErrorCode code, const std::string &what)
		: std::runtime_error(std::string(to_string(code)) + ": " + what),
		  code_(code) {}

	ErrorCode code() const noexcept { return code_; }

private:
	ErrorCode code_;
};

/// Row-level parse failure; `row` is 1-based over data rows (header excluded).
class RowError : public Error {
public:
	RowError(ErrorCode code, int row, const std::string &what)
		: Error(code, "row " + std::to_string(row) + ": " + what), row_(row) {}

	int row() const noexcept { return row_; }

private:
	int row_;
};

inline void require(bool condition, ErrorCode code, const std::string &what) {
	if (!condition) throw Error(code, what);
}

} // namespace annuity_bounds
