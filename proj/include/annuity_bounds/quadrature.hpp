#pragma once

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>

namespace annuity_bounds::quadrature {

/// Composite Gauss-Legendre rule with `panels` equal panels of 64 nodes.
template <class F>
double gauss_legendre(F &&f, double a, double b, int panels) {
	if (b <= a) return 0.0;
	const double h = (b - a) / panels;
	double sum = 0.0;
	for (int k = 0; k < panels; ++k) {
		const double lo = a + k * h;
		const double hi = (k + 1 == panels) ? b : lo + h;
		sum += boost::math::quadrature::gauss<double, 64>::integrate(f, lo, hi);
	}
	return sum;
}

/// Composite Gauss-Legendre with panel doubling until the relative change drops
/// below `rel_tol` (absolute floor `abs_tol`).
template <class F>
double adaptive_gauss_legendre(F &&f, double a, double b, double rel_tol = 1e-10,
		double abs_tol = 1e-14, int max_panels = 4096) {
	if (b <= a) return 0.0;
	int panels = std::max(1, static_cast<int>(std::ceil(b - a)));
	double previous = gauss_legendre(f, a, b, panels);
	while (panels < max_panels) {
		panels *= 2;
		const double current = gauss_legendre(f, a, b, panels);
		if (std::abs(current - previous) <= std::max(abs_tol, rel_tol * std::abs(current)))
			return current;
		previous = current;
	}
	return previous;
}

/// Integral over [a, b] of an integrand with a square-root type singularity at
/// `a` (option time value near expiry). Uses s = a + (b - a) w^2.
template <class F>
double integrate_sqrt_start(F &&f, double a, double b, double rel_tol = 1e-10) {
	if (b <= a) return 0.0;
	const double width = b - a;
	auto g = [&](double w) { return f(a + width * w * w) * 2.0 * width * w; };
	return adaptive_gauss_legendre(g, 0.0, 1.0, rel_tol);
}

} // namespace annuity_bounds::quadrature
