#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "irm/error.hpp"

namespace irm::util {

inline std::string lower(std::string_view s) {
	std::string out(s);
	std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
	return out;
}

inline std::string_view trim(std::string_view s) {
	while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
		s.remove_prefix(1);
	while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
		s.remove_suffix(1);
	return s;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
	std::vector<std::string> out;
	std::size_t start = 0;
	while (true) {
		auto pos = s.find(sep, start);
		out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
		if (pos == std::string_view::npos)
			break;
		start = pos + 1;
	}
	return out;
}

inline std::vector<std::string> split_ws(std::string_view s) {
	std::vector<std::string> out;
	std::istringstream in{std::string(s)};
	for (std::string w; in >> w;)
		out.push_back(w);
	return out;
}

inline std::string join(const std::vector<std::string> &parts, std::string_view sep) {
	std::string out;
	for (std::size_t i = 0; i < parts.size(); ++i) {
		if (i)
			out += sep;
		out += parts[i];
	}
	return out;
}

inline bool starts_with_ci(std::string_view s, std::string_view prefix) {
	return s.size() >= prefix.size() && lower(s.substr(0, prefix.size())) == lower(prefix);
}

inline std::string read_file(const std::string &path) {
	std::ifstream in(path, std::ios::binary);
	if (!in)
		throw InputError("cannot read '" + path + "'");
	std::ostringstream ss;
	ss << in.rdbuf();
	return ss.str();
}

#ifndef IRM_DATA_DIR
#define IRM_DATA_DIR "data"
#endif

/// Location of a bundled data file. The IRM_DATA_DIR environment variable
/// overrides the directory baked in at build time.
inline std::string data_path(std::string_view name) {
	const char *env = std::getenv("IRM_DATA_DIR");
	std::string dir = env && *env ? env : IRM_DATA_DIR;
	return dir + "/" + std::string(name);
}

// 64-bit FNV-1a, used only for staleness fingerprints.
inline std::string fingerprint(std::string_view data) {
	std::uint64_t h = 1469598103934665603ull;
	for (unsigned char c : data) {
		h ^= c;
		h *= 1099511628211ull;
	}
	static constexpr char hex[] = "0123456789abcdef";
	std::string out(16, '0');
	for (int i = 15; i >= 0; --i, h >>= 4)
		out[static_cast<std::size_t>(i)] = hex[h & 0xf];
	return out;
}

} // namespace irm::util
