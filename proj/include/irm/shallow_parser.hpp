#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "irm/error.hpp"
#include "irm/text_model.hpp"
#include "irm/util.hpp"

namespace irm {

struct LexEntry {
	std::string tag;
	std::string lemma;
	friend bool operator==(const LexEntry &, const LexEntry &) = default;
};

/// Word -> tag readings. Listed words keep their listed order; regular
/// inflections of listed bases are derived on lookup.
class PosLexicon {
public:
	static PosLexicon parse(std::string_view text, const std::string &name = "<memory>") {
		PosLexicon lx;
		std::size_t line_no = 0;
		for (const auto &raw : util::split(text, '\n')) {
			++line_no;
			auto line = util::trim(raw);
			if (line.empty() || line.front() == '#')
				continue;
			auto words = util::split_ws(line);
			if (words.size() < 2)
				throw LexiconFormatError(name, line_no, "expected a word followed by at least one tag");
			auto &slot = lx.entries_[util::lower(words[0])];
			for (std::size_t i = 1; i < words.size(); ++i) {
				auto slash = words[i].find('/');
				LexEntry e{words[i].substr(0, slash), slash == std::string::npos ? util::lower(words[0]) : words[i].substr(slash + 1)};
				if (e.tag.empty() || e.lemma.empty())
					throw LexiconFormatError(name, line_no, "empty tag or lemma in '" + words[i] + "'");
				if (std::find(slot.begin(), slot.end(), e) == slot.end())
					slot.push_back(std::move(e));
			}
		}
		return lx;
	}

	static PosLexicon load(const std::string &path) { return parse(util::read_file(path), path); }

	bool contains(std::string_view w) const { return entries_.count(std::string(w)) > 0; }

	/// Readings for a lowercase word; empty when the word is unknown.
	std::vector<LexEntry> analyses(std::string_view word) const {
		std::string w(word);
		if (auto it = entries_.find(w); it != entries_.end())
			return it->second;
		std::vector<LexEntry> out;
		auto add = [&](const std::string &base, std::string_view from_prefix, const std::string &tag) {
			auto it = entries_.find(base);
			if (it == entries_.end())
				return;
			for (const auto &e : it->second)
				if (e.tag == from_prefix) {
					LexEntry d{tag, e.lemma};
					if (std::find(out.begin(), out.end(), d) == out.end())
						out.push_back(d);
				}
		};
		auto ends = [&](std::string_view suf) { return w.size() > suf.size() + 1 && w.compare(w.size() - suf.size(), suf.size(), suf) == 0; };
		auto plural_or_3sg = [&](const std::string &base) {
			auto it = entries_.find(base);
			if (it == entries_.end())
				return;
			for (const auto &e : it->second) {
				std::string tag = e.tag == "NN" ? "NNS" : e.tag == "VB" ? "VBZ" : "";
				LexEntry d{tag, e.lemma};
				if (!tag.empty() && std::find(out.begin(), out.end(), d) == out.end())
					out.push_back(d);
			}
		};
		if (ends("ies"))
			plural_or_3sg(w.substr(0, w.size() - 3) + "y");
		if (ends("es"))
			plural_or_3sg(w.substr(0, w.size() - 2));
		if (ends("s") && !ends("ss"))
			plural_or_3sg(w.substr(0, w.size() - 1));
		if (ends("ed")) {
			std::vector<std::string> bases{w.substr(0, w.size() - 2), w.substr(0, w.size() - 1)};
			if (w.size() > 4 && w[w.size() - 3] == w[w.size() - 4])
				bases.push_back(w.substr(0, w.size() - 3));
			if (ends("ied"))
				bases.push_back(w.substr(0, w.size() - 3) + "y");
			for (const auto &b : bases) {
				add(b, "VB", "VBN");
				add(b, "VB", "VBD");
			}
		}
		if (ends("ing")) {
			std::string stem = w.substr(0, w.size() - 3);
			std::vector<std::string> bases{stem, stem + "e"};
			if (stem.size() > 2 && stem[stem.size() - 1] == stem[stem.size() - 2])
				bases.push_back(stem.substr(0, stem.size() - 1));
			for (const auto &b : bases)
				add(b, "VB", "VBG");
		}
		return out;
	}

private:
	std::map<std::string, std::vector<LexEntry>> entries_;
};

namespace tags {

inline bool noun(std::string_view t) { return t == "NN" || t == "NNS" || t == "NNP" || t == "NNPS"; }
inline bool verb(std::string_view t) { return t.size() >= 2 && t.substr(0, 2) == "VB"; }
inline bool finite(std::string_view t) { return t == "VBZ" || t == "VBP" || t == "VBD" || t == "MD"; }
inline bool adj(std::string_view t) { return t == "JJ" || t == "JJR" || t == "JJS"; }
inline bool adv(std::string_view t) { return t == "RB" || t == "RBR" || t == "RBS"; }
inline bool punct(std::string_view t) { return t == "." || t == "," || t == ":" || t == "-LRB-" || t == "-RRB-" || t == "``" || t == "''"; }

} // namespace tags

/// Rule-based tagger and dependency attacher for the controlled requirements
/// English: declarative or imperative clauses with one finite main verb,
/// modal chains ("needs to", "has to", "should"), possessives, parenthesized
/// appositives, leading When/If clauses and relative "which" clauses.
class ShallowParser {
public:
	explicit ShallowParser(PosLexicon lex) : lex_(std::move(lex)) {}

	static const ShallowParser &bundled() {
		static const ShallowParser p(PosLexicon::load(util::data_path("pos_lexicon.txt")));
		return p;
	}

	const PosLexicon &lexicon() const { return lex_; }

	/// Splits text into tokens with byte spans offset by `base`.
	std::vector<Token> tokenize(std::string_view text, std::size_t base = 0) const {
		std::vector<Token> out;
		auto alnum = [](unsigned char c) { return std::isalnum(c) || c >= 0x80; };
		auto push = [&](std::size_t b, std::size_t e) {
			Token t;
			t.index = static_cast<int>(out.size()) + 1;
			t.surface = std::string(text.substr(b, e - b));
			t.span = {base + b, base + e};
			out.push_back(std::move(t));
		};
		std::size_t i = 0;
		while (i < text.size()) {
			unsigned char c = static_cast<unsigned char>(text[i]);
			if (std::isspace(c)) {
				++i;
				continue;
			}
			bool abbrev = false;
			for (std::string_view a : {"e.g.", "i.e.", "etc."})
				if (util::starts_with_ci(text.substr(i), a)) {
					push(i, i + a.size());
					i += a.size();
					abbrev = true;
					break;
				}
			if (abbrev)
				continue;
			std::size_t j = i;
			if (std::isdigit(c)) {
				while (j < text.size() && (std::isdigit(static_cast<unsigned char>(text[j])) ||
				                           ((text[j] == '.' || text[j] == ',') && j + 1 < text.size() &&
				                            std::isdigit(static_cast<unsigned char>(text[j + 1])))))
					++j;
				push(i, j);
				i = j;
				continue;
			}
			if (alnum(c)) {
				while (j < text.size()) {
					unsigned char d = static_cast<unsigned char>(text[j]);
					if (alnum(d))
						++j;
					else if ((d == '-' || d == '\'') && j + 1 < text.size() && alnum(static_cast<unsigned char>(text[j + 1])))
						++j;
					else
						break;
				}
				push(i, j);
				i = j;
				continue;
			}
			push(i, i + 1);
			++i;
		}
		return out;
	}

	void tag(std::vector<Token> &toks) const {
		const int n = static_cast<int>(toks.size());
		std::vector<std::vector<LexEntry>> cands(toks.size());
		for (int i = 0; i < n; ++i)
			cands[i] = readings(toks, i);

		bool finite_in_clause = false;
		for (int i = 0; i < n; ++i) {
			auto &t = toks[i];
			const auto &cs = cands[i];
			int p = i - 1;
			while (p >= 0 && tags::adv(toks[p].pos))
				--p;
			std::string prev = p >= 0 ? toks[p].pos : "";
			std::string low = util::lower(t.surface);
			auto has = [&](auto pred) {
				for (const auto &c : cs)
					if (pred(c.tag))
						return true;
				return false;
			};
			auto pick = [&](auto pred) -> std::optional<LexEntry> {
				for (const auto &c : cs)
					if (pred(c.tag))
						return c;
				return std::nullopt;
			};
			auto next_has = [&](int k, auto pred) {
				if (k >= n)
					return false;
				for (const auto &c : cands[k])
					if (pred(c.tag))
						return true;
				return false;
			};
			int nx = i + 1;
			while (nx < n && next_has(nx, [](auto &g) { return tags::adv(g); }) && !next_has(nx, [](auto &g) { return tags::verb(g); }))
				++nx;

			LexEntry chosen = cs.front();
			if (cs.size() > 1) {
				if (low == "to") {
					bool verb_follows = next_has(nx, [](auto &g) { return g == "VB"; }) && !next_has(nx, [](auto &g) { return g == "DT" || g == "PRP$"; });
					bool bare = (nx >= n || tags::punct(cands[nx].front().tag)) && tags::verb(prev);
					chosen = *pick([&](auto &g) { return g == ((verb_follows || bare) ? "TO" : "IN"); });
				} else if (low == "that") {
					bool rel = tags::noun(prev) && next_has(i + 1, [](auto &g) { return tags::finite(g); });
					chosen = *pick([&](auto &g) { return g == (rel ? "WDT" : "DT"); });
				} else if (low == "once") {
					bool clause = next_has(i + 1, [](auto &g) { return g == "DT" || g == "PRP" || tags::noun(g); });
					chosen = *pick([&](auto &g) { return g == (clause ? "IN" : "RB"); });
				} else if (has(tags::verb) && has([](auto &g) { return !tags::verb(g); })) {
					chosen = choose_nv(toks, cands, i, prev, p, nx, finite_in_clause);
				} else if (has([](auto &g) { return g == "VBN"; }) && has([](auto &g) { return g == "VBD"; })) {
					bool after_aux = p >= 0 && (toks[p].lemma == "be" || toks[p].lemma == "have" || toks[p].lemma == "get");
					bool past = !after_aux && !finite_in_clause && (tags::noun(prev) || prev == "PRP");
					chosen = *pick([&](auto &g) { return g == (past ? "VBD" : "VBN"); });
				}
			}
			t.pos = chosen.tag;
			t.lemma = chosen.lemma;
			if (tags::finite(t.pos))
				finite_in_clause = true;
			if (t.pos == "," || t.pos == "WDT" || t.pos == "WP" || t.pos == "WRB" || low == "if" || low == "whether" || t.pos == "-LRB-")
				finite_in_clause = false;
		}
	}

	/// Tags and attaches one sentence. Throws UnparsableSentence when no verb
	/// is found at all.
	SentenceGraph parse(std::string_view sentence, const std::string &id = "s1", std::size_t base = 0) const {
		SentenceGraph g;
		g.id = id;
		g.text = std::string(sentence);
		g.span = {base, base + sentence.size()};
		g.tokens = tokenize(sentence, base);
		tag(g.tokens);
		if (g.tokens.empty() || std::none_of(g.tokens.begin(), g.tokens.end(), [](const Token &t) { return tags::verb(t.pos) || t.pos == "MD"; }))
			throw UnparsableSentence(id);
		Attacher a(g.tokens);
		a.run();
		for (int i = 1; i <= g.size(); ++i)
			g.edges.push_back({a.head[i], i, a.rel[i]});
		g.parsed = true;
		check_tree(g);
		return g;
	}

private:
	std::vector<LexEntry> readings(const std::vector<Token> &toks, int i) const {
		const auto &s = toks[i].surface;
		std::string low = util::lower(s);
		unsigned char c0 = static_cast<unsigned char>(s[0]);
		if (s == "(")
			return {{"-LRB-", "("}};
		if (s == ")")
			return {{"-RRB-", ")"}};
		if (s == "." || s == "!" || s == "?")
			return {{".", s}};
		if (s == ",")
			return {{",", ","}};
		if (s == ";" || s == ":" || s == "-")
			return {{":", s}};
		if (s == "\"")
			return {{"``", s}};
		if (std::isdigit(c0))
			return {{"CD", low}};
		auto a = lex_.analyses(low);
		bool caps = s.size() > 1 && std::all_of(s.begin(), s.end(), [](unsigned char ch) { return std::isupper(ch) || std::isdigit(ch) || ch == '-'; });
		if (!a.empty() && !(caps && i > 0))
			return a;
		// unknown word
		bool initial = true;
		for (int k = 0; k < i; ++k)
			if (std::isalnum(static_cast<unsigned char>(toks[k].surface[0])))
				initial = false;
		if (!initial && (caps || std::isupper(c0)))
			return {{"NNP", s}};
		auto ends = [&](std::string_view suf) { return low.size() > suf.size() + 2 && low.compare(low.size() - suf.size(), suf.size(), suf) == 0; };
		if (ends("ly"))
			return {{"RB", low}};
		if (ends("ing"))
			return {{"VBG", low.substr(0, low.size() - 3)}};
		if (ends("ed"))
			return {{"VBN", low.substr(0, low.size() - 2)}};
		if (ends("able") || ends("ible") || ends("ive") || ends("ous") || ends("ful") || ends("al"))
			return {{"JJ", low}};
		if (ends("s") && !ends("ss"))
			return {{"NNS", low.substr(0, low.size() - 1)}};
		return {{"NN", low}};
	}

	static LexEntry choose_nv(const std::vector<Token> &toks, const std::vector<std::vector<LexEntry>> &cands, int i,
	                          const std::string &prev, int p, int nx, bool finite_in_clause) {
		const auto &cs = cands[i];
		const int n = static_cast<int>(toks.size());
		auto first = [&](auto pred) -> std::optional<LexEntry> {
			for (const auto &c : cs)
				if (pred(c.tag))
					return c;
			return std::nullopt;
		};
		auto nominal = [&]() { return *first([](auto &g) { return !tags::verb(g); }); };
		auto base_verb = [&]() {
			if (auto v = first([](auto &g) { return g == "VB"; }))
				return *v;
			return *first([](auto &g) { return tags::verb(g); });
		};
		auto finite_verb = [&]() {
			if (auto v = first([](auto &g) { return g == "VBZ" || g == "VBP" || g == "VBD"; }))
				return *v;
			auto v = base_verb();
			if (v.tag == "VB")
				v.tag = "VBP";
			return v;
		};
		std::string next = nx < n ? cands[nx].front().tag : ".";
		bool next_is_closed = next == "DT" || next == "PRP$" || next == "IN" || next == "TO" || tags::adv(next) ||
		                      tags::punct(next) || next == "CD" || next == "PRP";

		if (prev == "TO" || prev == "MD")
			return base_verb();
		if (prev == "DT" || prev == "PRP$" || tags::adj(prev) || prev == "CD" || prev == "IN" || prev == "POS")
			return nominal();
		if (p < 0)
			return base_verb();
		if ((tags::noun(prev) || prev == "PRP" || prev == "WDT" || prev == "WP") && !finite_in_clause && next_is_closed)
			return finite_verb();
		if (prev == "CC")
			return next_is_closed ? base_verb() : nominal();
		if (tags::verb(prev))
			return nominal();
		(void)toks;
		return cs.front();
	}

	// Builds heads/relations over 1-based token indices.
	struct Attacher {
		const std::vector<Token> &t;
		int n;
		std::vector<int> head;
		std::vector<std::string> rel;
		std::vector<int> close_of; // "(" index -> matching ")" index
		std::vector<int> np_head;
		int root = 0;

		explicit Attacher(const std::vector<Token> &toks)
			: t(toks), n(static_cast<int>(toks.size())), head(toks.size() + 1, -1), rel(toks.size() + 1),
			  close_of(toks.size() + 2, 0), np_head(toks.size() + 2, 0) {
			std::vector<int> stack;
			for (int i = 1; i <= n; ++i) {
				if (tg(i) == "-LRB-")
					stack.push_back(i);
				else if (tg(i) == "-RRB-" && !stack.empty()) {
					close_of[stack.back()] = i;
					stack.pop_back();
				}
			}
		}

		const std::string &tg(int i) const { return t[static_cast<std::size_t>(i - 1)].pos; }
		const std::string &lem(int i) const { return t[static_cast<std::size_t>(i - 1)].lemma; }
		std::string low(int i) const { return util::lower(t[static_cast<std::size_t>(i - 1)].surface); }
		bool is_noun(int i) const { return tags::noun(tg(i)); }
		bool is_verb(int i) const { return tags::verb(tg(i)) || tg(i) == "MD"; }
		bool is_adj(int i) const { return tags::adj(tg(i)); }
		bool is_adv(int i) const { return tags::adv(tg(i)); }
		bool is_punct(int i) const { return tags::punct(tg(i)); }
		int skip(int i) const { return (i <= n && tg(i) == "-LRB-" && close_of[i]) ? close_of[i] + 1 : i; }

		bool attach(int d, int h, const std::string &r) {
			if (d < 1 || d > n || h < 1 || h > n || d == h || head[d] != -1)
				return false;
			for (int cur = h, guard = 0; cur > 0 && guard <= n; ++guard) {
				if (cur == d)
					return false;
				cur = head[cur];
			}
			head[d] = h;
			rel[d] = r;
			return true;
		}

		struct NP {
			int b = 0, head = 0, end = 0;
		};

		NP match_np(int i, int e) const {
			if (i >= e)
				return {i, 0, i};
			const auto &t0 = tg(i);
			if (t0 == "PRP" || t0 == "WP" || t0 == "WDT")
				return {i, i, i + 1};
			int j = i;
			if (t0 == "DT" || t0 == "PRP$")
				++j;
			int first_mod = j, last_noun = 0;
			while (j < e) {
				if (is_noun(j)) {
					last_noun = j++;
					continue;
				}
				if (last_noun)
					break;
				if (is_adj(j) || tg(j) == "CD") {
					++j;
					continue;
				}
				if ((tg(j) == "VBN" || tg(j) == "VBG") && j > i && j + 1 < e && (is_noun(j + 1) || is_adj(j + 1))) {
					++j;
					continue;
				}
				if (is_adv(j) && j + 1 < e && is_adj(j + 1) && j + 2 < e && (is_noun(j + 2) || is_adj(j + 2))) {
					++j;
					continue;
				}
				break;
			}
			if (!last_noun) {
				if (j > first_mod && tg(j - 1) == "CD")
					return {i, j - 1, j};
				static const std::set<std::string> demonstratives{"that", "this", "these", "those"};
				if (j == first_mod && first_mod == i + 1 && demonstratives.count(low(i)))
					return {i, i, i + 1};
				return {i, 0, i};
			}
			NP np{i, last_noun, last_noun + 1};
			// "place of interest": of + a single bare singular noun stays inside the phrase
			int k = np.end;
			if (k + 1 < e && low(k) == "of" && (tg(k + 1) == "NN" || tg(k + 1) == "NNP") && !(k + 2 < e && is_noun(k + 2)))
				np.end = k + 2;
			return np;
		}

		void attach_np(const NP &np) {
			int h = np.head;
			for (int k = np.b; k < np.end; ++k)
				np_head[k] = h;
			int stop = std::min(np.end, h);
			for (int k = np.b; k < stop; ++k) {
				const auto &g = tg(k);
				if (g == "DT")
					attach(k, h, "det");
				else if (g == "PRP$")
					attach(k, h, "poss");
				else if (tags::noun(g))
					attach(k, h, "nn");
				else if (g == "CD")
					attach(k, h, "num");
				else if (is_adv(k) && k + 1 < np.end)
					attach(k, k + 1, "advmod");
				else
					attach(k, h, "amod");
			}
			if (np.end > h + 1) { // of-compound
				attach(h + 1, h, "prep");
				attach(h + 2, h + 1, "pobj");
			}
		}

		bool has_verb(int b, int e) const {
			for (int i = b; i < e; i = skip(i + 0) == i ? i + 1 : skip(i))
				if (is_verb(i))
					return true;
			return false;
		}

		int find_comma(int b, int e) const {
			for (int i = b; i < e;) {
				if (skip(i) != i) {
					i = skip(i);
					continue;
				}
				if (tg(i) == ",")
					return i;
				++i;
			}
			return 0;
		}

		static bool subordinator(const std::string &w) {
			static const std::set<std::string> s{"when", "if", "while", "whenever", "unless", "because", "until", "once", "after", "before"};
			return s.count(w) > 0;
		}

		void run() {
			int e = n + 1;
			root = parse_span(1, e);
			if (root == 0)
				root = 1;
			// parentheticals, outermost first
			for (int o = 1; o <= n; ++o) {
				if (tg(o) != "-LRB-" || !close_of[o] || head[o] != -1)
					continue;
				int c = close_of[o];
				int host = 0;
				if (o > 1)
					host = np_head[o - 1] ? np_head[o - 1] : o - 1;
				if (host == 0 || host == o)
					host = root;
				int k = o + 1;
				while (k < c && (tg(k) == "FW" || tg(k) == "," || tg(k) == ":"))
					++k;
				int h = 0;
				NP np = match_np(k, c);
				if (np.head && np.end == c && k == o + 1) {
					attach_np(np);
					attach(np.head, host, "appos");
					h = np.head;
				} else if (k < c) {
					h = parse_span(k, c);
					if (h) {
						std::string r = (tg(k) == "WDT" || tg(k) == "WP") ? "rcmod" : tg(k) == "IN" ? "prep" : "dep";
						attach(h, host, r);
					}
				}
				if (!h)
					h = host;
				for (int j = o + 1; j < k; ++j)
					attach(j, h, tg(j) == "FW" ? "advmod" : "punct");
				attach(o, h, "punct");
				attach(c, h, "punct");
			}
			head[root] = 0;
			rel[root] = "root";
			for (int i = 1; i <= n; ++i)
				if (head[i] == -1) {
					if (!attach(i, root, is_punct(i) ? "punct" : "dep")) {
						head[i] = root;
						rel[i] = "dep";
					}
				}
		}

		/// Parses [b, e) and returns its head (0 when empty).
		int parse_span(int b, int e) {
			if (b >= e)
				return 0;
			if (has_verb(b, e))
				return parse_clause(b, e);
			return parse_fragment(b, e);
		}

		int parse_fragment(int b, int e) {
			int frag = 0;
			Ctx c;
			c.verb = 0;
			c.frag = &frag;
			if (tg(b) == "IN" || tg(b) == "TO") {
				complements(b, e, c);
				return frag;
			}
			NP np = match_np(b, e);
			if (np.head) {
				attach_np(np);
				frag = np.head;
				c.last_np = np.head;
				c.last_kind = Ctx::Np;
				complements(np.end, e, c);
				return frag;
			}
			complements(b, e, c);
			return frag;
		}

		struct Ctx {
			enum Kind { None, Np, Verb, Pred };
			int verb = 0;         // verb complements attach to
			int last_np = 0;      // most recent noun-phrase head
			int last_pred = 0;    // predicate adjective/adverb ("far", "closer", "once")
			int last_prep = 0;
			int antecedent = 0;   // inherited relative-clause antecedent
			Kind last_kind = None;
			bool obj_done = false;
			int *frag = nullptr;  // when set, the first free attachment becomes the fragment head
		};

		int host_of(Ctx &c, int tok) {
			if (c.verb)
				return c.verb;
			if (c.frag) {
				if (*c.frag == 0) {
					*c.frag = tok;
					return 0;
				}
				return *c.frag;
			}
			return c.last_np;
		}

		void attach_free(Ctx &c, int tok, const std::string &r) {
			int h = host_of(c, tok);
			if (h)
				attach(tok, h, r);
		}

		int parse_clause(int b, int e) {
			// trailing sentence punctuation
			int end = e;
			std::vector<int> trail;
			while (end - 1 > b && (tg(end - 1) == "." || tg(end - 1) == ":")) {
				trail.push_back(end - 1);
				--end;
			}
			int h = clause_body(b, end);
			for (int p : trail)
				attach(p, h, "punct");
			return h;
		}

		int clause_body(int b, int e) {
			std::string w = low(b);
			// In order to V ..., main
			if (w == "in" && b + 2 < e && low(b + 1) == "order" && low(b + 2) == "to") {
				int comma = find_comma(b + 3, e);
				int sub_end = comma ? comma : e;
				int sub = parse_span(b + 3, sub_end);
				attach(b + 2, sub, "aux");
				attach(b, sub, "mark");
				attach(b + 1, b, "mwe");
				if (!comma)
					return sub;
				int main = parse_span(comma + 1, e);
				attach(sub, main, "advcl");
				attach(comma, main, "punct");
				return main;
			}
			if (subordinator(w) && (tg(b) == "IN" || tg(b) == "WRB" || w == "once")) {
				int comma = find_comma(b + 1, e);
				int sub = parse_span(b + 1, comma ? comma : e);
				attach(b, sub, "mark");
				if (!comma)
					return sub;
				int main = parse_span(comma + 1, e);
				attach(sub, main, "advcl");
				attach(comma, main, "punct");
				return main;
			}
			// leading verbless phrase set off by a comma ("At the same time, ...")
			if (int comma = find_comma(b, e); comma && (tg(b) == "IN" || tg(b) == "TO") && !has_verb(b, comma) && has_verb(comma + 1, e)) {
				int main = parse_span(comma + 1, e);
				int pp = parse_fragment(b, comma);
				attach(pp, main, "prep");
				attach(comma, main, "punct");
				return main;
			}

			// locate the verb group: a clause opening with a verb is imperative,
			// otherwise the first finite verb heads it
			int v = 0;
			int lead = b;
			while (lead < e && is_adv(lead))
				++lead;
			if (lead < e && is_verb(lead))
				v = lead;
			for (int i = b; !v && i < e; i = skip(i) == i ? i + 1 : skip(i))
				if (tags::finite(tg(i))) {
					v = i;
					break;
				}
			if (!v)
				for (int i = b; i < e; i = skip(i) == i ? i + 1 : skip(i))
					if (is_verb(i)) {
						v = i;
						break;
					}
			if (!v)
				return parse_fragment(b, e);
			int cs = v;
			while (cs - 1 >= b && is_adv(cs - 1))
				--cs;

			// chain: [adv* verb]+ joined by infinitival "to"
			struct Seg {
				std::vector<int> toks;
				int to = 0;
				int main = 0;
			};
			std::vector<Seg> segs(1);
			int i = cs;
			int last_verb = 0;
			while (i < e) {
				const auto &g = tg(i);
				bool ok = false;
				if (is_adv(i)) {
					int k = i;
					while (k < e && is_adv(k))
						++k;
					ok = k < e && (is_verb(k) || tg(k) == "TO") && chain_accepts(last_verb, k, segs.back().toks.empty());
				} else if (g == "TO") {
					int k = i + 1;
					while (k < e && is_adv(k))
						++k;
					ok = last_verb && k < e && tg(k) == "VB";
					if (ok) {
						segs.push_back({});
						segs.back().to = i;
						last_verb = 0;
						++i;
						continue;
					}
				} else if (is_verb(i)) {
					ok = chain_accepts(last_verb, i, segs.back().toks.empty());
					if (ok)
						last_verb = i;
				}
				if (!ok)
					break;
				segs.back().toks.push_back(i);
				++i;
			}
			int after = i;
			for (auto &s : segs)
				for (int k : s.toks)
					if (is_verb(k))
						s.main = k;
			if (segs.back().main == 0) // dangling "to"
				segs.pop_back();
			for (std::size_t si = 0; si < segs.size(); ++si) {
				auto &s = segs[si];
				for (int k : s.toks) {
					if (k == s.main)
						continue;
					if (is_adv(k))
						attach(k, s.main, (low(k) == "not" || low(k) == "never") ? "neg" : "advmod");
					else if (lem(k) == "be" && tg(s.main) == "VBN")
						attach(k, s.main, "auxpass");
					else
						attach(k, s.main, "aux");
				}
				if (si > 0) {
					attach(s.main, segs[si - 1].main, "xcomp");
					attach(s.to, s.main, "aux");
				}
			}
			int vroot = segs.front().main;
			int deep = segs.back().main;

			// subject zone
			if (b < cs) {
				NP np = match_np(b, cs);
				if (np.head) {
					attach_np(np);
					bool passive = false;
					for (int k = 1; k <= n; ++k)
						if (head[k] == vroot && rel[k] == "auxpass")
							passive = true;
					attach(np.head, vroot, passive ? "nsubjpass" : "nsubj");
					Ctx c;
					c.last_np = np.head;
					c.last_kind = Ctx::Np;
					c.antecedent = np.head;
					complements(np.end, cs, c);
				} else {
					Ctx c;
					c.verb = vroot;
					complements(b, cs, c);
				}
			}
			Ctx c;
			c.verb = deep;
			c.last_kind = Ctx::Verb;
			c.antecedent = inherited_antecedent;
			complements(after, e, c);
			return vroot;
		}

		bool chain_accepts(int last_verb, int k, bool seg_empty) const {
			const auto &g = tg(k);
			if (!last_verb)
				return seg_empty || g == "VB";
			const auto &pl = lem(last_verb);
			const auto &pg = tg(last_verb);
			if (g == "VB")
				return pg == "MD" || pl == "do";
			if (g == "VBN")
				return pl == "be" || pl == "have" || pl == "get";
			if (g == "VBG")
				return pl == "be" && pg != "VBN" && pg != "VBG";
			return false;
		}

		void complements(int i, int e, Ctx &c) {
			static const std::set<std::string> nominal_preps{"of", "regarding", "per", "near", "in", "for", "about"};
			static const std::set<std::string> control_verbs{"allow", "enable", "permit", "require", "ask", "want", "force"};
			static const std::set<std::string> comparator_words{"more", "less", "greater", "fewer", "equal", "than", "to", "or", "lower", "higher"};
			int pending_cc = 0;
			Ctx::Kind cc_kind = Ctx::None;
			int cc_conjunct = 0;

			auto take_conj = [&](int new_head, Ctx::Kind kind) -> bool {
				if (!pending_cc || kind != cc_kind || !cc_conjunct)
					return false;
				bool ok = attach(new_head, cc_conjunct, "conj");
				attach(pending_cc, cc_conjunct, "cc");
				pending_cc = 0;
				return ok;
			};

			while (i < e) {
				if (skip(i) != i) {
					i = skip(i);
					continue;
				}
				const std::string g = tg(i);
				const std::string w = low(i);

				if (g == "," || g == ":" || g == ".") {
					++i;
					continue;
				}
				if (g == "CC") {
					int k = i + 1;
					while (k < e && is_adv(k))
						++k;
					if (k < e && is_verb(k) && c.verb) {
						int v2 = parse_span(k, e);
						attach(v2, c.verb, "conj");
						attach(i, c.verb, "cc");
						return;
					}
					pending_cc = i;
					if (k < e && (tg(k) == "IN" || tg(k) == "TO")) {
						cc_kind = Ctx::Verb; // marks prepositional coordination
						cc_conjunct = c.last_prep;
					} else if (k < e && (is_adj(k) && !(k + 1 < e && is_noun(k + 1))) && c.last_pred) {
						cc_kind = Ctx::Pred;
						cc_conjunct = c.last_pred;
					} else {
						cc_kind = Ctx::Np;
						cc_conjunct = c.last_np;
					}
					++i;
					continue;
				}
				if (g == "TO" && i + 1 < e) {
					int k = i + 1;
					while (k < e && is_adv(k))
						++k;
					if (k < e && tg(k) == "VB") {
						int host = 0;
						std::string r = "xcomp";
						if (c.last_kind == Ctx::Pred && c.last_pred)
							host = c.last_pred;
						else if (c.last_kind == Ctx::Np && c.last_np && !(c.verb && control_verbs.count(lem(c.verb))))
							host = c.last_np, r = "vmod";
						else
							host = c.verb ? c.verb : c.last_np;
						int h = infinitive(i, e, c.last_np ? c.last_np : c.antecedent);
						if (host)
							attach(h, host, r);
						else
							attach_free(c, h, "dep");
						return;
					}
				}
				if (w == "at" && i + 1 < e && (low(i + 1) == "least" || low(i + 1) == "most")) {
					attach_free(c, i, "advmod");
					attach(i + 1, i, "mwe");
					i += 2;
					continue;
				}
				if (comparator_words.count(w) && w != "to" && w != "or" && w != "than") {
					int k = i;
					while (k < e && k < i + 6 && comparator_words.count(low(k)))
						++k;
					if (k > i + 1 && k < e && tg(k) == "CD") {
						int cd = k;
						int qh = (k + 1 < e && is_noun(k + 1)) ? k + 1 : k;
						if (qh != cd)
							attach(cd, qh, "num");
						attach(i, cd, "quantmod");
						for (int m = i + 1; m < k; ++m)
							attach(m, i, "mwe");
						int nxt = qh + 1;
						if (nxt < e && (is_adj(nxt) || is_adv(nxt)) && !(nxt + 1 < e && is_noun(nxt + 1))) {
							attach(qh, nxt, "npadvmod");
							attach_free(c, nxt, (c.verb && lem(c.verb) == "be") ? "acomp" : "advmod");
							c.last_pred = nxt;
							c.last_kind = Ctx::Pred;
							i = nxt + 1;
						} else {
							object(c, qh);
							c.last_np = qh;
							c.last_kind = Ctx::Np;
							i = qh + 1;
						}
						continue;
					}
				}
				if ((g == "IN" || g == "WRB") && (w == "whether" || (subordinator(w) && w != "once" && w != "after" && w != "before") ||
				                                  (w == "once" && g == "IN"))) {
					int h = parse_span(i + 1, e);
					attach(i, h, "mark");
					attach_free(c, h, w == "whether" ? "ccomp" : "advcl");
					return;
				}
				if (g == "IN" || g == "TO") {
					int host = 0;
					if (pending_cc && cc_kind == Ctx::Verb && cc_conjunct) {
						take_conj(i, Ctx::Verb);
					} else if (c.last_kind == Ctx::Np && c.last_np && nominal_preps.count(w)) {
						host = c.last_np;
					} else if (c.last_kind == Ctx::Pred && c.last_pred) {
						host = c.last_pred;
					} else if (c.verb) {
						host = c.verb;
					} else if (c.frag) {
						host = host_of(c, i);
					} else {
						host = c.last_np;
					}
					if (host)
						attach(i, host, "prep");
					c.last_prep = i;
					int k = i + 1;
					if (k < e && tg(k) == "VBG") {
						int h = parse_span(k, e);
						attach(h, i, "pcomp");
						return;
					}
					NP np = match_np(k, e);
					if (np.head) {
						attach_np(np);
						attach(np.head, i, "pobj");
						c.last_np = np.head;
						c.last_kind = Ctx::Np;
						i = np.end;
					} else {
						c.last_kind = Ctx::None;
						i = k;
					}
					continue;
				}
				if (g == "WDT" || g == "WP") {
					int ante = c.last_np ? c.last_np : c.antecedent;
					int h = parse_span(i, e);
					if (ante)
						attach(h, ante, "rcmod");
					else
						attach_free(c, h, "dep");
					return;
				}
				if (g == "VBN" || g == "VBG" || g == "VB" || g == "VBZ" || g == "VBP" || g == "VBD") {
					int h = parse_span(i, e);
					if (c.last_kind == Ctx::Np && c.last_np && (g == "VBN" || g == "VBG"))
						attach(h, c.last_np, "vmod");
					else
						attach_free(c, h, "xcomp");
					return;
				}
				if (w == "any" && i + 1 < e && low(i + 1) == "more") {
					attach_free(c, i + 1, "advmod");
					attach(i, i + 1, "advmod");
					i += 2;
					continue;
				}
				NP np = match_np(i, e);
				if (np.head) {
					attach_np(np);
					if (!take_conj(np.head, Ctx::Np))
						object(c, np.head);
					c.last_np = np.head;
					c.last_kind = Ctx::Np;
					i = np.end;
					continue;
				}
				if (is_adj(i)) {
					if (!take_conj(i, Ctx::Pred))
						attach_free(c, i, "acomp");
					c.last_pred = i;
					c.last_kind = Ctx::Pred;
					++i;
					continue;
				}
				if (is_adv(i)) {
					if (i + 1 < e && is_adj(i + 1)) {
						attach(i, i + 1, (w == "not" || w == "never") ? "neg" : "advmod");
					} else {
						attach_free(c, i, (w == "not" || w == "never") ? "neg" : "advmod");
						c.last_pred = i;
						c.last_kind = Ctx::Pred;
					}
					++i;
					continue;
				}
				if (g == "FW") {
					attach_free(c, i, "advmod");
					++i;
					continue;
				}
				attach_free(c, i, "dep");
				++i;
			}
			if (pending_cc && cc_conjunct)
				attach(pending_cc, cc_conjunct, "cc");
		}

		void object(Ctx &c, int h) {
			if (!c.verb) {
				attach_free(c, h, "dep");
				return;
			}
			if (!c.obj_done) {
				attach(h, c.verb, lem(c.verb) == "be" ? "attr" : "dobj");
				c.obj_done = true;
			} else {
				attach(h, c.verb, "npadvmod");
			}
		}

		int infinitive(int to, int e, int antecedent) {
			int k = to + 1;
			// the infinitival VP is a subjectless clause; reuse the clause parser
			int h = parse_clause_with_antecedent(k, e, antecedent);
			attach(to, h, "aux");
			return h;
		}

		int parse_clause_with_antecedent(int b, int e, int antecedent) {
			int saved = inherited_antecedent;
			inherited_antecedent = antecedent;
			int h = parse_span(b, e);
			inherited_antecedent = saved;
			return h;
		}

		int inherited_antecedent = 0;
	};

	PosLexicon lex_;
};

/// Parses one sentence with the bundled lexicon.
inline SentenceGraph shallow_parse(std::string_view sentence, const std::string &id = "s1") {
	return ShallowParser::bundled().parse(sentence, id);
}

} // namespace irm
