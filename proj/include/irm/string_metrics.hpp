#pragma once

#include <algorithm>
#include <cstddef>
#include <string_view>
#include <vector>

namespace irm {

/// Unit-cost edit distance, two-row dynamic programme.
inline std::size_t levenshtein(std::string_view a, std::string_view b) {
	if (a.size() < b.size())
		std::swap(a, b);
	std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
	for (std::size_t j = 0; j <= b.size(); ++j)
		prev[j] = j;
	for (std::size_t i = 1; i <= a.size(); ++i) {
		cur[0] = i;
		for (std::size_t j = 1; j <= b.size(); ++j) {
			std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
			cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
		}
		std::swap(prev, cur);
	}
	return prev[b.size()];
}

inline double jaro(std::string_view a, std::string_view b) {
	if (a.empty() && b.empty())
		return 1.0;
	if (a.empty() || b.empty())
		return 0.0;
	const std::size_t window = std::max(a.size(), b.size()) / 2 > 0 ? std::max(a.size(), b.size()) / 2 - 1 : 0;
	std::vector<char> ma(a.size(), 0), mb(b.size(), 0);
	std::size_t m = 0;
	for (std::size_t i = 0; i < a.size(); ++i) {
		std::size_t lo = i > window ? i - window : 0;
		std::size_t hi = std::min(b.size(), i + window + 1);
		for (std::size_t j = lo; j < hi; ++j)
			if (!mb[j] && a[i] == b[j]) {
				ma[i] = mb[j] = 1;
				++m;
				break;
			}
	}
	if (m == 0)
		return 0.0;
	std::size_t t = 0;
	for (std::size_t i = 0, j = 0; i < a.size(); ++i) {
		if (!ma[i])
			continue;
		while (!mb[j])
			++j;
		if (a[i] != b[j])
			++t;
		++j;
	}
	const double md = static_cast<double>(m);
	return (md / a.size() + md / b.size() + (md - t / 2.0) / md) / 3.0;
}

/// Jaro similarity boosted by the common prefix (at most 4 chars, scale 0.1).
inline double jaro_winkler(std::string_view a, std::string_view b, double scale = 0.1, std::size_t max_prefix = 4) {
	double j = jaro(a, b);
	std::size_t l = 0;
	while (l < std::min({a.size(), b.size(), max_prefix}) && a[l] == b[l])
		++l;
	return j + l * scale * (1.0 - j);
}

} // namespace irm
