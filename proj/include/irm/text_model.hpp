#pragma once

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "json.hpp"

#include "irm/error.hpp"
#include "irm/util.hpp"

namespace irm {

/// Half-open byte range [begin, end) into the UTF-8 source document.
struct ByteSpan {
	std::size_t begin = 0;
	std::size_t end = 0;

	bool empty() const { return end <= begin; }
	friend bool operator==(const ByteSpan &, const ByteSpan &) = default;
};

struct Token {
	int index = 0; ///< 1-based position in the sentence
	std::string surface;
	std::string lemma; ///< lowercase base form
	std::string pos;   ///< Penn-style tag
	ByteSpan span;
};

struct DependencyEdge {
	int head = 0; ///< 0 is the virtual root
	int dependent = 0;
	std::string relation;

	friend bool operator==(const DependencyEdge &, const DependencyEdge &) = default;
};

enum class SectionKind { Summary, General, SituationSpecific };

inline std::string to_string(SectionKind k) {
	switch (k) {
	case SectionKind::Summary: return "Summary";
	case SectionKind::General: return "General";
	case SectionKind::SituationSpecific: return "SituationSpecific";
	}
	return "General";
}

/// (relation, head surface, dependent surface), lowercased. Used to compare
/// parses produced by different parsers.
struct RoleTriple {
	std::string relation;
	std::string head;
	std::string dependent;
	auto operator<=>(const RoleTriple &) const = default;
};

/// Tokens plus a dependency tree for one sentence. `edges[i]` always holds
/// the incoming edge of token i+1 once the graph is parsed.
struct SentenceGraph {
	std::string id;
	std::vector<Token> tokens;
	std::vector<DependencyEdge> edges;
	SectionKind section = SectionKind::General;
	std::string text;
	ByteSpan span;
	bool parsed = false;

	int size() const { return static_cast<int>(tokens.size()); }
	const Token &token(int index) const { return tokens.at(static_cast<std::size_t>(index - 1)); }

	int head_of(int index) const {
		if (!parsed || index < 1 || index > size())
			return -1;
		return edges[static_cast<std::size_t>(index - 1)].head;
	}

	std::string_view relation_of(int index) const {
		if (!parsed || index < 1 || index > size())
			return {};
		return edges[static_cast<std::size_t>(index - 1)].relation;
	}

	int root() const {
		for (const auto &e : edges)
			if (e.head == 0)
				return e.dependent;
		return 0;
	}

	std::vector<int> dependents(int head, std::string_view relation = {}) const {
		std::vector<int> out;
		for (const auto &e : edges)
			if (e.head == head && (relation.empty() || e.relation == relation))
				out.push_back(e.dependent);
		return out;
	}

	int first_dependent(int head, std::string_view relation) const {
		for (const auto &e : edges)
			if (e.head == head && e.relation == relation)
				return e.dependent;
		return 0;
	}

	bool dominates(int ancestor, int index) const {
		for (int guard = 0; index > 0 && guard <= size(); ++guard) {
			if (index == ancestor)
				return true;
			index = head_of(index);
		}
		return false;
	}

	/// Smallest and largest token index dominated by `head` (inclusive).
	std::pair<int, int> subtree_range(int head) const {
		int lo = head, hi = head;
		for (int i = 1; i <= size(); ++i)
			if (dominates(head, i)) {
				lo = std::min(lo, i);
				hi = std::max(hi, i);
			}
		return {lo, hi};
	}

	void sort_edges() {
		std::sort(edges.begin(), edges.end(), [](const auto &a, const auto &b) { return a.dependent < b.dependent; });
	}
};

/// Throws CyclicParse unless the edges form a single-rooted tree over the tokens.
inline void check_tree(const SentenceGraph &g) {
	const int n = g.size();
	if (static_cast<int>(g.edges.size()) != n)
		throw CyclicParse(g.id);
	std::vector<int> head(static_cast<std::size_t>(n + 1), -1);
	int roots = 0;
	for (const auto &e : g.edges) {
		if (e.dependent < 1 || e.dependent > n || e.head < 0 || e.head > n || head[static_cast<std::size_t>(e.dependent)] != -1)
			throw CyclicParse(g.id);
		head[static_cast<std::size_t>(e.dependent)] = e.head;
		if (e.head == 0)
			++roots;
	}
	if (n > 0 && roots != 1)
		throw CyclicParse(g.id);
	for (int i = 1; i <= n; ++i) {
		int cur = i;
		for (int steps = 0; cur != 0; ++steps) {
			if (steps > n)
				throw CyclicParse(g.id);
			cur = head[static_cast<std::size_t>(cur)];
		}
	}
}

inline std::set<RoleTriple> role_triples(const SentenceGraph &g, const std::set<std::string> &relations) {
	std::set<RoleTriple> out;
	for (const auto &e : g.edges) {
		if (!relations.count(e.relation) || e.head == 0)
			continue;
		out.insert({e.relation, util::lower(g.token(e.head).surface), util::lower(g.token(e.dependent).surface)});
	}
	return out;
}

namespace detail {

inline bool parse_int(std::string_view s, int &out) {
	auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
	return ec == std::errc() && ptr == s.data() + s.size();
}

// Assign byte spans by locating each form left to right inside `text`.
inline void align_spans(SentenceGraph &g, std::size_t base) {
	std::size_t cursor = 0;
	for (auto &t : g.tokens) {
		auto pos = g.text.find(t.surface, cursor);
		if (pos == std::string::npos)
			pos = cursor;
		t.span = {base + pos, base + pos + std::max<std::size_t>(t.surface.size(), 1)};
		cursor = pos + t.surface.size();
	}
}

} // namespace detail

/// Reads CoNLL-U. Multiword-token ranges and empty nodes are skipped; XPOS is
/// used as the tag with UPOS as fallback.
inline std::vector<SentenceGraph> ingest_conllu(std::string_view text) {
	std::vector<SentenceGraph> out;
	SentenceGraph cur;
	bool has_text = false;
	std::size_t line_no = 0;

	auto flush = [&]() {
		if (cur.tokens.empty()) {
			cur = {};
			has_text = false;
			return;
		}
		if (cur.id.empty())
			cur.id = "s" + std::to_string(out.size() + 1);
		if (!has_text) {
			std::vector<std::string> forms;
			for (const auto &t : cur.tokens)
				forms.push_back(t.surface);
			cur.text = util::join(forms, " ");
		}
		detail::align_spans(cur, 0);
		cur.span = {0, cur.text.size()};
		cur.sort_edges();
		cur.parsed = true;
		check_tree(cur);
		out.push_back(std::move(cur));
		cur = {};
		has_text = false;
	};

	std::size_t start = 0;
	while (start <= text.size()) {
		auto nl = text.find('\n', start);
		std::string_view line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
		++line_no;
		if (!line.empty() && line.back() == '\r')
			line.remove_suffix(1);

		if (util::trim(line).empty()) {
			flush();
		} else if (line.front() == '#') {
			auto body = util::trim(line.substr(1));
			if (body.rfind("sent_id", 0) == 0 && body.find('=') != std::string_view::npos)
				cur.id = std::string(util::trim(body.substr(body.find('=') + 1)));
			else if (body.rfind("text", 0) == 0 && body.find('=') != std::string_view::npos) {
				cur.text = std::string(util::trim(body.substr(body.find('=') + 1)));
				has_text = true;
			}
		} else {
			auto cols = util::split(line, '\t');
			if (cols.size() != 10)
				throw MalformedConllu(line_no, "expected 10 tab-separated columns, got " + std::to_string(cols.size()));
			// multiword ranges and empty nodes carry '-' or '.' in the ID
			if (cols[0].find_first_of("-.") == std::string::npos) {
				int id = 0, head = 0;
				if (!detail::parse_int(cols[0], id))
					throw MalformedConllu(line_no, "non-integer ID '" + cols[0] + "'");
				if (!detail::parse_int(cols[6], head))
					throw MalformedConllu(line_no, "non-integer HEAD '" + cols[6] + "'");
				if (id != cur.size() + 1)
					throw MalformedConllu(line_no, "token IDs must be contiguous from 1");
				Token t;
				t.index = id;
				t.surface = cols[1];
				t.lemma = util::lower(cols[2] == "_" ? cols[1] : cols[2]);
				t.pos = cols[4] != "_" ? cols[4] : cols[3];
				cur.tokens.push_back(std::move(t));
				cur.edges.push_back({head, id, cols[7]});
			}
		}
		if (nl == std::string_view::npos)
			break;
		start = nl + 1;
	}
	flush();

	for (const auto &g : out)
		for (const auto &e : g.edges)
			if (e.head > g.size())
				throw CyclicParse(g.id);
	return out;
}

/// Writes a graph back as CoNLL-U (used for fixtures and debugging).
inline std::string to_conllu(const SentenceGraph &g) {
	std::string out = "# sent_id = " + g.id + "\n# text = " + g.text + "\n";
	for (const auto &t : g.tokens) {
		auto head = g.head_of(t.index);
		out += std::to_string(t.index) + "\t" + t.surface + "\t" + t.lemma + "\t_\t" + t.pos + "\t_\t" +
		       (head < 0 ? std::string("_") : std::to_string(head)) + "\t" +
		       (g.parsed ? std::string(g.relation_of(t.index)) : std::string("_")) + "\t_\t_\n";
	}
	return out + "\n";
}

inline void to_json(nlohmann::json &j, const SentenceGraph &g) {
	j = nlohmann::json{{"id", g.id},
	                   {"section", to_string(g.section)},
	                   {"text", g.text},
	                   {"span", {g.span.begin, g.span.end}},
	                   {"parsed", g.parsed}};
	auto tokens = nlohmann::json::array();
	for (const auto &t : g.tokens) {
		nlohmann::json tj{{"i", t.index}, {"form", t.surface}, {"lemma", t.lemma}, {"pos", t.pos}, {"span", {t.span.begin, t.span.end}}};
		if (g.parsed) {
			tj["head"] = g.head_of(t.index);
			tj["rel"] = std::string(g.relation_of(t.index));
		}
		tokens.push_back(std::move(tj));
	}
	j["tokens"] = std::move(tokens);
}

} // namespace irm
