#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "irm/error.hpp"
#include "irm/util.hpp"

namespace irm {

enum class SynPos { Verb, Noun };
enum class Measure { Path, Wup };

inline std::string to_string(SynPos p) { return p == SynPos::Verb ? "verb" : "noun"; }
inline std::string to_string(Measure m) { return m == Measure::Path ? "path" : "wup"; }

inline Measure parse_measure(std::string_view s) {
	if (s == "path")
		return Measure::Path;
	if (s == "wup")
		return Measure::Wup;
	throw InputError("unknown similarity measure '" + std::string(s) + "' (expected path or wup)");
}

struct Synset {
	std::string id;
	std::set<std::string> lemmas;
	SynPos pos = SynPos::Verb;
	std::set<std::string> hypernyms;
};

struct SimilarityScore {
	double value = 0.0;
	Measure measure = Measure::Wup;
};

/// Hypernym graph over synsets. Read-only after construction.
class SynsetGraph {
public:
	SynsetGraph() = default;

	/// Builds and validates a graph: hypernyms resolve, share the POS, form no
	/// cycle, and every synset reaches the single root of its POS.
	explicit SynsetGraph(std::vector<Synset> synsets, const std::string &name = "<memory>") {
		for (auto &s : synsets) {
			if (by_id_.count(s.id))
				throw LexiconFormatError(name, 0, "duplicate synset id '" + s.id + "'");
			by_id_.emplace(s.id, std::move(s));
		}
		for (const auto &[id, s] : by_id_) {
			for (const auto &h : s.hypernyms) {
				auto it = by_id_.find(h);
				if (it == by_id_.end())
					throw LexiconFormatError(name, 0, "synset '" + id + "' names unknown hypernym '" + h + "'");
				if (it->second.pos != s.pos)
					throw LexiconFormatError(name, 0, "synset '" + id + "' has a hypernym of another part of speech");
			}
			if (s.hypernyms.empty()) {
				if (roots_.count(s.pos))
					throw LexiconFormatError(name, 0, "more than one " + to_string(s.pos) + " root ('" + roots_[s.pos] + "', '" + id + "')");
				roots_[s.pos] = id;
			}
			for (const auto &l : s.lemmas)
				index_[{l, s.pos}].push_back(id);
		}
		// depth doubles as the cycle check
		for (const auto &[id, s] : by_id_)
			depth_of(id, name, 0);
	}

	static SynsetGraph parse(std::string_view text, const std::string &name = "<memory>") {
		std::vector<Synset> out;
		std::size_t line_no = 0;
		for (const auto &raw : util::split(text, '\n')) {
			++line_no;
			auto line = util::trim(raw);
			if (line.empty() || line.front() == '#')
				continue;
			auto cols = util::split(line, '|');
			if (cols.size() != 4)
				throw LexiconFormatError(name, line_no, "expected id|pos|lemmas|hypernyms");
			Synset s;
			s.id = std::string(util::trim(cols[0]));
			if (s.id.empty())
				throw LexiconFormatError(name, line_no, "empty synset id");
			auto pos = util::trim(cols[1]);
			if (pos == "verb" || pos == "v")
				s.pos = SynPos::Verb;
			else if (pos == "noun" || pos == "n")
				s.pos = SynPos::Noun;
			else
				throw LexiconFormatError(name, line_no, "unknown part of speech '" + std::string(pos) + "'");
			for (const auto &l : util::split(cols[2], ','))
				if (auto t = util::trim(l); !t.empty())
					s.lemmas.insert(util::lower(t));
			if (s.lemmas.empty())
				throw LexiconFormatError(name, line_no, "synset without lemmas");
			for (const auto &h : util::split(cols[3], ','))
				if (auto t = util::trim(h); !t.empty())
					s.hypernyms.insert(std::string(t));
			out.push_back(std::move(s));
		}
		return SynsetGraph(std::move(out), name);
	}

	static SynsetGraph load(const std::string &path) { return parse(util::read_file(path), path); }

	const Synset &at(std::string_view id) const {
		auto it = by_id_.find(std::string(id));
		if (it == by_id_.end())
			throw UnknownSynset(std::string(id));
		return it->second;
	}
	bool contains(std::string_view id) const { return by_id_.count(std::string(id)) > 0; }
	std::size_t size() const { return by_id_.size(); }

	std::vector<std::string> synsets_of(std::string_view lemma, SynPos pos) const {
		auto it = index_.find({util::lower(lemma), pos});
		return it == index_.end() ? std::vector<std::string>{} : it->second;
	}

	std::string root(SynPos pos) const {
		auto it = roots_.find(pos);
		return it == roots_.end() ? std::string() : it->second;
	}

	/// Longest hypernym chain to the root, counting the root as 1.
	int depth(std::string_view id) const { return depths_.at(std::string(at(id).id)); }

	/// Every ancestor (including the synset itself) with its minimal hop distance.
	std::map<std::string, int> ancestors(std::string_view id) const {
		std::map<std::string, int> dist;
		std::vector<std::string> frontier{at(id).id};
		dist[frontier.front()] = 0;
		while (!frontier.empty()) {
			std::vector<std::string> next;
			for (const auto &s : frontier)
				for (const auto &h : by_id_.at(s).hypernyms)
					if (!dist.count(h)) {
						dist[h] = dist[s] + 1;
						next.push_back(h);
					}
			frontier = std::move(next);
		}
		return dist;
	}

private:
	int depth_of(const std::string &id, const std::string &name, int guard) {
		if (auto it = depths_.find(id); it != depths_.end()) {
			if (it->second < 0)
				throw LexiconFormatError(name, 0, "hypernym cycle through '" + id + "'");
			return it->second;
		}
		if (guard > static_cast<int>(by_id_.size()))
			throw LexiconFormatError(name, 0, "hypernym cycle through '" + id + "'");
		depths_[id] = -1;
		int d = 1;
		for (const auto &h : by_id_.at(id).hypernyms)
			d = std::max(d, depth_of(h, name, guard + 1) + 1);
		depths_[id] = d;
		return d;
	}

	std::map<std::string, Synset> by_id_;
	std::map<std::pair<std::string, SynPos>, std::vector<std::string>> index_;
	std::map<SynPos, std::string> roots_;
	std::map<std::string, int> depths_;
};

namespace detail {

inline void check_pair(const SynsetGraph &g, std::string_view a, std::string_view b) {
	const auto &sa = g.at(a);
	const auto &sb = g.at(b);
	if (sa.pos != sb.pos)
		throw PosMismatch(sa.id, sb.id);
}

} // namespace detail

/// 1 / (1 + shortest path through a common hypernym).
inline SimilarityScore path_similarity(std::string_view a, std::string_view b, const SynsetGraph &g) {
	detail::check_pair(g, a, b);
	auto da = g.ancestors(a);
	auto db = g.ancestors(b);
	int best = -1;
	for (const auto &[id, d] : da)
		if (auto it = db.find(id); it != db.end())
			if (best < 0 || d + it->second < best)
				best = d + it->second;
	return {best < 0 ? 0.0 : 1.0 / (1.0 + best), Measure::Path};
}

/// Wu-Palmer: 2 depth(lcs) / (depth(a) + depth(b)), lcs = deepest common subsumer.
inline SimilarityScore wup_similarity(std::string_view a, std::string_view b, const SynsetGraph &g) {
	detail::check_pair(g, a, b);
	if (a == b)
		return {1.0, Measure::Wup};
	auto da = g.ancestors(a);
	auto db = g.ancestors(b);
	int lcs = 0;
	for (const auto &[id, d] : da)
		if (db.count(id))
			lcs = std::max(lcs, g.depth(id));
	// depth is the longest chain, so a proper subsumer is strictly shallower
	// and distinct synsets stay below 1
	return {2.0 * lcs / (g.depth(a) + g.depth(b)), Measure::Wup};
}

inline SimilarityScore similarity(std::string_view a, std::string_view b, const SynsetGraph &g, Measure m) {
	return m == Measure::Path ? path_similarity(a, b, g) : wup_similarity(a, b, g);
}

/// Best similarity between any verb sense of `lemma` and any verb sense of a
/// seed. Out-of-vocabulary lemmas score 0.
inline SimilarityScore verb_affinity(std::string_view lemma, const std::set<std::string> &seeds, const SynsetGraph &g,
                                     Measure m = Measure::Wup) {
	SimilarityScore best{0.0, m};
	for (const auto &a : g.synsets_of(lemma, SynPos::Verb))
		for (const auto &seed : seeds)
			for (const auto &b : g.synsets_of(seed, SynPos::Verb))
				best.value = std::max(best.value, similarity(a, b, g, m).value);
	return best;
}

/// Seed verb lists per invariant type.
struct SeedSets {
	std::set<std::string> exchange{"exchange", "propagate"};
	std::set<std::string> process{"have", "monitor", "assess", "obtain", "acquire", "determine"};

	static SeedSets parse(std::string_view text, const std::string &name = "<memory>") {
		SeedSets s;
		bool got_e = false, got_p = false;
		std::size_t line_no = 0;
		for (const auto &raw : util::split(text, '\n')) {
			++line_no;
			auto line = util::trim(raw);
			if (line.empty() || line.front() == '#')
				continue;
			auto colon = line.find(':');
			if (colon == std::string_view::npos)
				throw LexiconFormatError(name, line_no, "expected 'type: lemma ...'");
			auto key = util::lower(util::trim(line.substr(0, colon)));
			std::set<std::string> lemmas;
			for (const auto &w : util::split_ws(line.substr(colon + 1)))
				lemmas.insert(util::lower(w));
			if (lemmas.empty())
				throw LexiconFormatError(name, line_no, "empty seed list");
			if (key == "exchange")
				s.exchange = std::move(lemmas), got_e = true;
			else if (key == "process")
				s.process = std::move(lemmas), got_p = true;
			else
				throw LexiconFormatError(name, line_no, "unknown seed type '" + key + "'");
		}
		if (!got_e || !got_p)
			throw LexiconFormatError(name, line_no, "seed file needs both exchange: and process: lines");
		return s;
	}

	static SeedSets load(const std::string &path) { return parse(util::read_file(path), path); }
};

} // namespace irm
