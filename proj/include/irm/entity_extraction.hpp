#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "irm/document.hpp"
#include "irm/error.hpp"
#include "irm/journal.hpp"
#include "irm/string_metrics.hpp"
#include "irm/text_model.hpp"
#include "irm/util.hpp"

namespace irm {

enum class KindHint { Component, Attribute, Unknown };

inline std::string to_string(KindHint k) {
	switch (k) {
	case KindHint::Component: return "component";
	case KindHint::Attribute: return "attribute";
	case KindHint::Unknown: return "unknown";
	}
	return "unknown";
}

struct Mention {
	std::string sentence_id;
	int first = 0; ///< token range, inclusive
	int last = 0;
	int head = 0;
	std::string role; ///< nsubj, dobj, iobj, pobj or appos
	ByteSpan span;
	KindHint hint = KindHint::Unknown;
	std::string rule;  ///< R1..R4
	std::string owner; ///< possessor phrase for R2
};

struct EntityCandidate {
	std::string phrase;  ///< normalized, lowercase
	std::string display; ///< normalized, original case kept for acronyms
	std::string key;     ///< phrase without hyphens, used for string matching
	std::string head_lemma;
	std::vector<Mention> mentions;
	KindHint kind_hint = KindHint::Unknown;
};

enum class ClusterStatus { Auto, PendingReview, Confirmed, Rejected };

inline std::string to_string(ClusterStatus s) {
	switch (s) {
	case ClusterStatus::Auto: return "auto";
	case ClusterStatus::PendingReview: return "pending_review";
	case ClusterStatus::Confirmed: return "confirmed";
	case ClusterStatus::Rejected: return "rejected";
	}
	return "auto";
}

struct AliasEvidence {
	std::string kind; ///< apposition, string_distance or journal
	std::string a;
	std::string b;
	double score = 0.0;
	std::string sentence_id;
	std::string verdict; ///< confirm, reject or empty when undecided
};

struct AliasCluster {
	std::string canonical;
	std::set<std::string> members;
	std::vector<AliasEvidence> evidence;
	ClusterStatus status = ClusterStatus::Auto;
};

struct Apposition {
	std::string host;
	std::string appositive;
	std::string sentence_id;
};

struct MetricConfig {
	double threshold = 0.84;
};

struct CatalogAttribute {
	std::string name;  ///< display form of the canonical phrase
	std::string ident; ///< identifier used in signatures
	AliasCluster cluster;
	std::vector<Mention> mentions;
};

struct CatalogComponent {
	std::string name;
	AliasCluster cluster;
	std::vector<Mention> mentions;
	std::vector<CatalogAttribute> attributes;
};

struct DroppedCandidate {
	std::string phrase;
	std::string reason;
	std::vector<Mention> mentions;
};

struct PhraseRef {
	int component = -1;
	int attribute = -1; ///< -1 when the phrase names the component itself
};

struct ComponentCatalog {
	std::vector<CatalogComponent> components;
	std::vector<DroppedCandidate> dropped;

	const CatalogComponent *component(std::string_view name) const {
		for (const auto &c : components)
			if (c.name == name)
				return &c;
		return nullptr;
	}
	const CatalogAttribute *attribute(std::string_view comp, std::string_view ident) const {
		if (auto *c = component(comp))
			for (const auto &a : c->attributes)
				if (a.ident == ident)
					return &a;
		return nullptr;
	}
	/// Which catalog entry a normalized phrase belongs to, if any.
	std::optional<PhraseRef> resolve(std::string_view text) const {
		// members are stored lowercase
		const auto phrase = util::lower(text);
		for (std::size_t c = 0; c < components.size(); ++c) {
			if (components[c].cluster.members.count(phrase))
				return PhraseRef{static_cast<int>(c), -1};
			const auto &attrs = components[c].attributes;
			for (std::size_t a = 0; a < attrs.size(); ++a)
				if (attrs[a].cluster.members.count(phrase))
					return PhraseRef{static_cast<int>(c), static_cast<int>(a)};
		}
		return std::nullopt;
	}
};

namespace detail {

inline const std::set<std::string> &strip_words() {
	static const std::set<std::string> s{"every", "the",  "its",  "their", "a",        "an",        "each",
	                                     "this",  "that", "these", "those", "any",      "some",      "all",
	                                     "his",   "her",  "our",  "existing", "different", "appropriate", "same"};
	return s;
}

inline bool is_noun_tag(std::string_view t) { return t.rfind("NN", 0) == 0; }
inline bool is_adj_tag(std::string_view t) { return t.rfind("JJ", 0) == 0; }
inline bool is_verb_tag(std::string_view t) { return t.rfind("VB", 0) == 0; }

inline bool is_acronym(std::string_view w) {
	if (w.size() < 2)
		return false;
	return std::all_of(w.begin(), w.end(), [](char c) { return std::isupper(static_cast<unsigned char>(c)) || std::isdigit(static_cast<unsigned char>(c)); });
}

inline std::string singularize(const std::string &w) {
	auto ends = [&](std::string_view suf) { return w.size() > suf.size() && w.compare(w.size() - suf.size(), suf.size(), suf) == 0; };
	if (ends("ies"))
		return w.substr(0, w.size() - 3) + "y";
	for (std::string_view s : {"sses", "ches", "shes", "xes", "zes"})
		if (ends(s))
			return w.substr(0, w.size() - 2);
	if (ends("ss") || ends("us") || ends("is"))
		return w;
	if (ends("s"))
		return w.substr(0, w.size() - 1);
	return w;
}

inline std::string match_key(std::string_view phrase) {
	std::string out;
	for (char c : phrase)
		if (c != '-')
			out += c;
	return out;
}

/// Tokens sitting inside a "(e.g. ...)" / "(i.e. ...)" / "(for example ...)" aside.
inline std::vector<bool> aside_mask(const SentenceGraph &g) {
	std::vector<bool> mask(static_cast<std::size_t>(g.size()) + 1, false);
	for (int i = 1; i <= g.size(); ++i) {
		if (g.token(i).surface != "(")
			continue;
		int j = i + 1;
		while (j <= g.size() && g.token(j).surface != ")")
			++j;
		bool aside = false;
		if (i + 1 <= g.size()) {
			auto w = util::lower(g.token(i + 1).surface);
			aside = w == "e.g." || w == "i.e." || w == "e.g" || w == "i.e" ||
			        (w == "for" && i + 2 <= g.size() && util::lower(g.token(i + 2).surface) == "example");
		}
		if (aside)
			for (int k = i; k <= std::min(j, g.size()); ++k)
				mask[static_cast<std::size_t>(k)] = true;
		i = j;
	}
	return mask;
}

/// Noun phrase around head `h`: contiguous noun/adjective modifiers on the
/// left, plus a trailing "of <noun>" compound ("place of interest").
inline std::pair<int, int> np_span(const SentenceGraph &g, int h) {
	int first = h;
	while (first > 1) {
		const auto &t = g.token(first - 1);
		if (!(is_noun_tag(t.pos) || is_adj_tag(t.pos)) || !g.dominates(h, first - 1))
			break;
		--first;
	}
	int last = h;
	if (h + 2 <= g.size() && util::lower(g.token(h + 1).surface) == "of" && g.head_of(h + 1) == h &&
	    g.relation_of(h + 1) == "prep" && g.head_of(h + 2) == h + 1 && is_noun_tag(g.token(h + 2).pos) &&
	    g.dependents(h + 2).empty())
		last = h + 2;
	return {first, last};
}

struct Normalized {
	std::string phrase;
	std::string display;
	std::string head_lemma;
	int first = 0;
};

inline Normalized normalize(const SentenceGraph &g, int first, int last, int head) {
	while (first < head && strip_words().count(util::lower(g.token(first).surface)))
		++first;
	std::vector<std::string> disp;
	for (int i = first; i <= last; ++i) {
		const auto &t = g.token(i);
		std::string w = is_acronym(t.surface) ? t.surface : util::lower(t.surface);
		if (i == head && (t.pos == "NNS" || t.pos == "NNPS"))
			w = singularize(w);
		disp.push_back(w);
	}
	Normalized n;
	n.display = util::join(disp, " ");
	n.phrase = util::lower(n.display);
	n.head_lemma = util::lower(disp[static_cast<std::size_t>(head - first)]);
	n.first = first;
	return n;
}

inline std::string candidate_role(std::string_view rel) {
	if (rel == "nsubj" || rel == "nsubjpass")
		return "nsubj";
	if (rel == "dobj" || rel == "iobj" || rel == "pobj" || rel == "appos")
		return std::string(rel);
	return {};
}

inline std::size_t sentence_ordinal(const RequirementsDocument &doc, std::string_view sid) {
	for (std::size_t i = 0; i < doc.sentences.size(); ++i)
		if (doc.sentences[i].id == sid)
			return i;
	return doc.sentences.size();
}

inline std::string phrase_at(const SentenceGraph &g, int h) {
	auto [first, last] = np_span(g, h);
	return normalize(g, first, last, h).phrase;
}

/// Subject phrase of the main clause of the item a sub-item hangs from
/// ("every car needs to:" gives "car" to 1(a)..1(d)).
inline std::string inherited_subject(const RequirementsDocument &doc, std::string_view sid) {
	const auto *item = doc.item_of(sid);
	if (!item || item->parent.empty())
		return {};
	const auto *parent = doc.item(item->parent);
	if (!parent || parent->sentence_ids.empty())
		return {};
	const auto *g = doc.sentence(parent->sentence_ids.back());
	if (!g || !g->parsed)
		return {};
	for (int v = g->root(); v > 0;) {
		int s = g->first_dependent(v, "nsubj");
		if (s && is_noun_tag(g->token(s).pos))
			return phrase_at(*g, s);
		v = 0;
	}
	return {};
}

inline bool clause_passive(const SentenceGraph &g, int v) { return g.first_dependent(v, "auxpass") != 0; }

/// True when `v` carries an obligation: should/must/shall, or need/have + to-infinitive.
inline bool obligation_verb(const SentenceGraph &g, int v) {
	for (int a : g.dependents(v, "aux")) {
		auto l = util::lower(g.token(a).lemma);
		if (l == "should" || l == "must" || l == "shall")
			return !clause_passive(g, v);
	}
	auto lemma = util::lower(g.token(v).lemma);
	if (lemma != "need" && lemma != "have")
		return false;
	for (int x : g.dependents(v, "xcomp"))
		if (g.first_dependent(x, "aux") && util::lower(g.token(g.first_dependent(x, "aux")).surface) == "to")
			return !clause_passive(g, x);
	// lead-in "needs to:" whose infinitives are the sub-items
	for (int d : g.dependents(v))
		if (util::lower(g.token(d).surface) == "to" && g.dependents(d).empty())
			return true;
	return false;
}

} // namespace detail

/// One candidate per distinct normalized noun phrase in a subject/object role.
inline std::vector<EntityCandidate> extract_candidates(const RequirementsDocument &doc) {
	std::vector<EntityCandidate> out;
	std::map<std::string, std::size_t> index;
	for (const auto &g : doc.sentences) {
		if (!g.parsed)
			continue;
		auto aside = detail::aside_mask(g);
		for (int h = 1; h <= g.size(); ++h) {
			const auto &t = g.token(h);
			if (!detail::is_noun_tag(t.pos) || aside[static_cast<std::size_t>(h)])
				continue;
			auto role = detail::candidate_role(g.relation_of(h));
			if (role.empty())
				continue;
			// tail of an "of" compound belongs to the phrase on its left
			if (h > 2 && detail::is_noun_tag(g.token(h - 2).pos) && detail::np_span(g, h - 2).second == h)
				continue;
			auto [first, last] = detail::np_span(g, h);
			auto n = detail::normalize(g, first, last, h);
			if (n.phrase.empty())
				continue;
			Mention m;
			m.sentence_id = g.id;
			m.first = n.first;
			m.last = last;
			m.head = h;
			m.role = role;
			m.span = {g.token(n.first).span.begin, g.token(last).span.end};
			auto it = index.find(n.phrase);
			if (it == index.end()) {
				EntityCandidate c;
				c.phrase = n.phrase;
				c.display = n.display;
				c.key = detail::match_key(n.phrase);
				c.head_lemma = n.head_lemma;
				index[n.phrase] = out.size();
				out.push_back(std::move(c));
				it = index.find(n.phrase);
			}
			out[it->second].mentions.push_back(std::move(m));
		}
	}
	return out;
}

namespace detail {

/// Subject phrase the possessive on mention head `h` refers to. Walks up
/// clause by clause; relative pronouns and the mention itself do not count,
/// "it" is taken as the first nominal subject elsewhere in the sentence.
inline std::string possessor_subject(const RequirementsDocument &doc, const SentenceGraph &g, int h) {
	int v = g.head_of(h);
	for (int guard = 0; v > 0 && guard <= g.size(); ++guard) {
		if (is_verb_tag(g.token(v).pos)) {
			int s = g.first_dependent(v, "nsubj");
			if (!s)
				s = g.first_dependent(v, "nsubjpass");
			if (s && s != h) {
				const auto &st = g.token(s);
				if (is_noun_tag(st.pos))
					return phrase_at(g, s);
				if (st.pos == "PRP") {
					for (int i = 1; i <= g.size(); ++i)
						if (i != h && g.relation_of(i) == "nsubj" && is_noun_tag(g.token(i).pos))
							return phrase_at(g, i);
					return inherited_subject(doc, g.id);
				}
			}
		}
		v = g.head_of(v);
	}
	return inherited_subject(doc, g.id);
}

} // namespace detail

/// Assigns kind hints by rules R1..R4 (first match wins per mention); a
/// candidate is a component if any mention says so, else an attribute if any
/// mention says so.
inline std::vector<EntityCandidate> hint_kinds(std::vector<EntityCandidate> cands, const RequirementsDocument &doc) {
	static const std::set<std::string> r3_verbs{"monitor", "assess", "update", "exchange"};
	std::set<std::string> components;
	for (auto &c : cands)
		for (auto &m : c.mentions) {
			const auto *g = doc.sentence(m.sentence_id);
			if (!g || g->relation_of(m.head) != "nsubj")
				continue;
			int v = g->head_of(m.head);
			if (v > 0 && detail::obligation_verb(*g, v)) {
				m.hint = KindHint::Component;
				m.rule = "R1";
				components.insert(c.phrase);
			}
		}
	for (auto &c : cands) {
		for (auto &m : c.mentions) {
			if (m.hint == KindHint::Component)
				continue;
			const auto *g = doc.sentence(m.sentence_id);
			if (!g)
				continue;
			int poss = g->first_dependent(m.head, "poss");
			if (poss) {
				std::string owner = detail::is_noun_tag(g->token(poss).pos) ? detail::phrase_at(*g, poss)
				                                                            : detail::possessor_subject(doc, *g, m.head);
				if (!owner.empty() && owner != c.phrase && components.count(owner)) {
					m.hint = KindHint::Attribute;
					m.rule = "R2";
					m.owner = owner;
					continue;
				}
			}
			int v = g->head_of(m.head);
			if (m.role == "dobj" && v > 0 && r3_verbs.count(util::lower(g->token(v).lemma))) {
				m.hint = KindHint::Attribute;
				m.rule = "R3";
				continue;
			}
			m.rule = "R4";
		}
		bool comp = false, attr = false;
		for (const auto &m : c.mentions) {
			comp |= m.hint == KindHint::Component;
			attr |= m.hint == KindHint::Attribute;
		}
		c.kind_hint = comp ? KindHint::Component : attr ? KindHint::Attribute : KindHint::Unknown;
	}
	return cands;
}

inline std::vector<Apposition> detect_appositions(const RequirementsDocument &doc) {
	std::vector<Apposition> out;
	for (const auto &g : doc.sentences) {
		if (!g.parsed)
			continue;
		for (int d = 1; d <= g.size(); ++d) {
			if (g.relation_of(d) != "appos")
				continue;
			int h = g.head_of(d);
			if (h < 1 || !detail::is_noun_tag(g.token(h).pos) || !detail::is_noun_tag(g.token(d).pos))
				continue;
			out.push_back({detail::phrase_at(g, h), detail::phrase_at(g, d), g.id});
		}
	}
	return out;
}

namespace detail {

inline std::string pair_target(std::string a, std::string b) {
	if (b < a)
		std::swap(a, b);
	return a + "|" + b;
}

struct UnionFind {
	std::vector<std::size_t> parent;
	explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
	std::size_t find(std::size_t x) {
		while (parent[x] != x)
			x = parent[x] = parent[parent[x]];
		return x;
	}
	void unite(std::size_t a, std::size_t b) {
		a = find(a), b = find(b);
		if (a != b)
			parent[std::max(a, b)] = std::min(a, b);
	}
};

/// Every alias edge the document supports: appositions, string-distance
/// pairs over the threshold, and merges the journal adds by hand.
inline std::vector<AliasEvidence> alias_edges(const std::vector<EntityCandidate> &cands,
                                              const std::vector<Apposition> &pairs, const MetricConfig &cfg,
                                              const DecisionJournal *journal) {
	std::set<std::string> known;
	for (const auto &c : cands)
		known.insert(c.phrase);
	std::vector<AliasEvidence> edges;
	std::set<std::string> seen;
	for (const auto &p : pairs)
		if (known.count(p.host) && known.count(p.appositive) && p.host != p.appositive)
			edges.push_back({"apposition", p.host, p.appositive, 1.0, p.sentence_id, "confirm"});
	auto verdict = [&](const std::string &a, const std::string &b) -> std::string {
		if (!journal)
			return {};
		auto c = journal->choice(DecisionKind::AliasMerge, pair_target(a, b));
		return c ? *c : std::string();
	};
	for (std::size_t i = 0; i < cands.size(); ++i)
		for (std::size_t j = i + 1; j < cands.size(); ++j) {
			double s = jaro_winkler(cands[i].key, cands[j].key);
			if (s < cfg.threshold)
				continue;
			auto [a, b] = std::minmax(cands[i].phrase, cands[j].phrase);
			seen.insert(pair_target(a, b));
			edges.push_back({"string_distance", a, b, s, "", verdict(a, b)});
		}
	if (journal)
		for (const auto &[target, choice] : journal->effective(DecisionKind::AliasMerge)) {
			if (seen.count(target) || choice != "confirm")
				continue;
			auto bar = target.find('|');
			if (bar == std::string::npos)
				continue;
			auto a = target.substr(0, bar), b = target.substr(bar + 1);
			if (known.count(a) && known.count(b))
				edges.push_back({"journal", a, b, 0.0, "", "confirm"});
		}
	return edges;
}

inline std::string pick_canonical(const std::set<std::string> &members, const std::map<std::string, std::size_t> &freq) {
	std::string best;
	for (const auto &m : members) {
		if (best.empty()) {
			best = m;
			continue;
		}
		auto fm = freq.at(m), fb = freq.at(best);
		if (fm != fb ? fm > fb : m.size() != best.size() ? m.size() > best.size() : m < best)
			best = m;
	}
	return best;
}

/// Union-find over candidates using the edges `take` accepts.
template <class Take>
std::vector<AliasCluster> group(const std::vector<EntityCandidate> &cands, const std::vector<AliasEvidence> &edges,
                                Take take) {
	std::map<std::string, std::size_t> idx, freq;
	for (std::size_t i = 0; i < cands.size(); ++i) {
		idx[cands[i].phrase] = i;
		freq[cands[i].phrase] = cands[i].mentions.size();
	}
	UnionFind uf(cands.size());
	for (const auto &e : edges)
		if (take(e))
			uf.unite(idx.at(e.a), idx.at(e.b));
	std::map<std::size_t, AliasCluster> by_root;
	for (std::size_t i = 0; i < cands.size(); ++i)
		by_root[uf.find(i)].members.insert(cands[i].phrase);
	std::vector<AliasCluster> out;
	for (auto &[root, cl] : by_root) {
		for (const auto &e : edges)
			if (cl.members.count(e.a) || cl.members.count(e.b))
				cl.evidence.push_back(e);
		bool pending = false, confirmed = false, rejected = false;
		for (const auto &e : cl.evidence) {
			bool inside = cl.members.count(e.a) && cl.members.count(e.b);
			if (e.kind == "apposition")
				continue;
			if (e.verdict == "reject")
				rejected = true;
			else if (inside && e.verdict.empty())
				pending = true;
			else if (inside)
				confirmed = true;
		}
		cl.status = pending ? ClusterStatus::PendingReview
		            : confirmed ? ClusterStatus::Confirmed
		            : rejected ? ClusterStatus::Rejected
		                       : ClusterStatus::Auto;
		cl.canonical = pick_canonical(cl.members, freq);
		out.push_back(std::move(cl));
	}
	// order-independent output: sort by canonical
	std::sort(out.begin(), out.end(), [](const auto &a, const auto &b) { return a.canonical < b.canonical; });
	return out;
}

} // namespace detail

/// Partition of the candidates: appositions merge outright, string-distance
/// pairs merge pending review, journal rejections keep pairs apart.
inline std::vector<AliasCluster> cluster_aliases(const std::vector<EntityCandidate> &cands,
                                                 const std::vector<Apposition> &pairs, const MetricConfig &cfg = {},
                                                 const DecisionJournal *journal = nullptr) {
	auto edges = detail::alias_edges(cands, pairs, cfg, journal);
	return detail::group(cands, edges, [](const AliasEvidence &e) { return e.verdict != "reject"; });
}

namespace detail {

/// Clusters the catalog is built from: only settled merges count.
inline std::vector<AliasCluster> settled_clusters(const std::vector<EntityCandidate> &cands,
                                                  const std::vector<Apposition> &pairs, const MetricConfig &cfg,
                                                  const DecisionJournal *journal) {
	auto edges = alias_edges(cands, pairs, cfg, journal);
	return group(cands, edges, [](const AliasEvidence &e) { return e.verdict == "confirm"; });
}

inline std::string title_word(std::string_view w) {
	std::string out;
	bool start = true;
	for (char c : w) {
		if (c == '-') {
			out += c;
			start = true;
			continue;
		}
		out += start ? static_cast<char>(std::toupper(static_cast<unsigned char>(c))) : c;
		start = false;
	}
	return out;
}

inline std::string component_name(const AliasCluster &cl, const std::map<std::string, std::string> &display) {
	std::vector<std::vector<std::string>> multi;
	for (const auto &m : cl.members) {
		auto words = util::split_ws(display.at(m));
		if (words.size() > 1)
			multi.push_back(words);
	}
	if (multi.size() >= 2) {
		bool same = std::all_of(multi.begin(), multi.end(), [&](const auto &w) { return util::lower(w[0]) == util::lower(multi[0][0]); });
		if (same)
			return is_acronym(multi[0][0]) ? multi[0][0] : title_word(multi[0][0]);
	}
	std::string out;
	for (const auto &w : util::split_ws(display.at(cl.canonical)))
		out += is_acronym(w) ? w : title_word(w);
	return out;
}

inline std::string attribute_ident(std::string_view display) {
	static const std::set<std::string> generic{"level", "value", "status", "data", "information"};
	auto words = util::split_ws(display);
	if (words.size() > 1 && generic.count(util::lower(words.back())))
		words.pop_back();
	std::string out;
	for (std::size_t i = 0; i < words.size(); ++i) {
		std::string w;
		bool up = i > 0;
		for (char c : words[i]) {
			if (c == '-') {
				up = true;
				continue;
			}
			w += up ? static_cast<char>(std::toupper(static_cast<unsigned char>(c))) : c;
			up = false;
		}
		out += w;
	}
	return out;
}

} // namespace detail

struct ExtractionResult {
	std::vector<EntityCandidate> candidates;
	std::vector<Apposition> appositions;
	std::vector<AliasCluster> clusters; ///< including pending merges
	std::vector<DecisionRequest> requests;
	std::optional<ComponentCatalog> catalog; ///< absent while an owner decision blocks
};

namespace detail {

struct OwnerPlan {
	std::string target;
	std::vector<std::string> options;
	std::string winner; ///< empty on a tie
	std::map<std::string, int> votes;
	std::string excerpt;
};

/// Owner votes per attribute cluster, given the settled clusters.
inline std::map<std::string, OwnerPlan> owner_plans(const std::vector<EntityCandidate> &cands,
                                                    const std::vector<AliasCluster> &clusters,
                                                    const RequirementsDocument &doc,
                                                    std::map<std::string, std::string> &comp_names) {
	std::map<std::string, const EntityCandidate *> by_phrase;
	std::map<std::string, std::string> display;
	for (const auto &c : cands) {
		by_phrase[c.phrase] = &c;
		display[c.phrase] = c.display;
	}
	std::map<std::string, std::string> member_comp; // phrase -> component name
	comp_names.clear();
	std::set<std::string> used;
	for (const auto &cl : clusters) {
		bool comp = std::any_of(cl.members.begin(), cl.members.end(),
		                        [&](const auto &m) { return by_phrase.at(m)->kind_hint == KindHint::Component; });
		if (!comp)
			continue;
		auto name = component_name(cl, display);
		auto base = name;
		for (int n = 2; used.count(name); ++n)
			name = base + std::to_string(n);
		used.insert(name);
		comp_names[cl.canonical] = name;
		for (const auto &m : cl.members)
			member_comp[m] = name;
	}
	std::map<std::string, OwnerPlan> plans;
	for (const auto &cl : clusters) {
		if (comp_names.count(cl.canonical))
			continue;
		bool attr = std::any_of(cl.members.begin(), cl.members.end(),
		                        [&](const auto &m) { return by_phrase.at(m)->kind_hint == KindHint::Attribute; });
		if (!attr || comp_names.empty())
			continue;
		OwnerPlan p;
		p.target = cl.canonical;
		for (const auto &[canon, name] : comp_names)
			p.options.push_back(name);
		std::sort(p.options.begin(), p.options.end());
		for (const auto &m : cl.members)
			for (const auto &mn : by_phrase.at(m)->mentions) {
				if (p.excerpt.empty())
					if (const auto *g = doc.sentence(mn.sentence_id))
						p.excerpt = g->text;
				if (mn.rule == "R2")
					if (auto it = member_comp.find(mn.owner); it != member_comp.end())
						++p.votes[it->second];
			}
		int best = 0, count = 0;
		for (const auto &[name, v] : p.votes)
			if (v > best)
				best = v, count = 1, p.winner = name;
			else if (v == best)
				++count;
		if (best == 0 || count > 1)
			p.winner.clear();
		plans[cl.canonical] = std::move(p);
	}
	return plans;
}

} // namespace detail

/// Catalog from settled merges plus the journal. Throws UnresolvedDecision
/// when an attribute's owner is tied and the journal does not settle it.
inline ComponentCatalog build_catalog(const std::vector<EntityCandidate> &cands, const std::vector<Apposition> &pairs,
                                      const DecisionJournal &journal, const RequirementsDocument &doc,
                                      const MetricConfig &cfg = {}) {
	ComponentCatalog cat;
	if (cands.empty())
		return cat;
	auto clusters = detail::settled_clusters(cands, pairs, cfg, &journal);
	std::map<std::string, const EntityCandidate *> by_phrase;
	std::map<std::string, std::string> display;
	for (const auto &c : cands) {
		by_phrase[c.phrase] = &c;
		display[c.phrase] = c.display;
	}
	std::map<std::string, std::string> comp_names;
	auto plans = detail::owner_plans(cands, clusters, doc, comp_names);

	auto mentions_of = [&](const AliasCluster &cl) {
		std::vector<Mention> ms;
		for (const auto &m : cl.members)
			for (const auto &mn : by_phrase.at(m)->mentions)
				ms.push_back(mn);
		std::sort(ms.begin(), ms.end(), [&](const Mention &a, const Mention &b) {
			auto oa = detail::sentence_ordinal(doc, a.sentence_id), ob = detail::sentence_ordinal(doc, b.sentence_id);
			return oa != ob ? oa < ob : a.first < b.first;
		});
		return ms;
	};
	auto first_pos = [&](const std::vector<Mention> &ms) {
		return std::make_pair(detail::sentence_ordinal(doc, ms.front().sentence_id), ms.front().first);
	};

	for (const auto &cl : clusters)
		if (auto it = comp_names.find(cl.canonical); it != comp_names.end())
			cat.components.push_back({it->second, cl, mentions_of(cl), {}});
	std::sort(cat.components.begin(), cat.components.end(),
	          [&](const auto &a, const auto &b) { return first_pos(a.mentions) < first_pos(b.mentions); });

	for (const auto &cl : clusters) {
		if (comp_names.count(cl.canonical))
			continue;
		auto pit = plans.find(cl.canonical);
		if (pit == plans.end()) {
			for (const auto &m : cl.members)
				cat.dropped.push_back({m, "unknown kind", by_phrase.at(m)->mentions});
			continue;
		}
		std::string owner = pit->second.winner;
		if (auto c = journal.choice(DecisionKind::Owner, cl.canonical))
			owner = *c;
		if (owner.empty())
			throw UnresolvedDecision("owner:" + cl.canonical);
		auto comp = std::find_if(cat.components.begin(), cat.components.end(), [&](const auto &c) { return c.name == owner; });
		if (comp == cat.components.end())
			throw UnknownName(owner);
		CatalogAttribute a;
		a.name = display.at(cl.canonical);
		a.ident = detail::attribute_ident(a.name);
		a.cluster = cl;
		a.mentions = mentions_of(cl);
		comp->attributes.push_back(std::move(a));
	}
	for (auto &c : cat.components) {
		std::sort(c.attributes.begin(), c.attributes.end(),
		          [&](const auto &a, const auto &b) { return first_pos(a.mentions) < first_pos(b.mentions); });
		std::set<std::string> idents;
		for (auto &a : c.attributes) {
			auto base = a.ident;
			for (int n = 2; idents.count(a.ident); ++n)
				a.ident = base + std::to_string(n);
			idents.insert(a.ident);
		}
	}
	std::sort(cat.dropped.begin(), cat.dropped.end(), [](const auto &a, const auto &b) { return a.phrase < b.phrase; });
	return cat;
}

/// Full extraction stage: candidates, hints, clusters, review requests and,
/// unless an owner decision blocks, the catalog.
inline ExtractionResult extract_entities(const RequirementsDocument &doc, const DecisionJournal &journal,
                                         const MetricConfig &cfg = {}) {
	ExtractionResult r;
	r.candidates = hint_kinds(extract_candidates(doc), doc);
	r.appositions = detect_appositions(doc);
	r.clusters = cluster_aliases(r.candidates, r.appositions, cfg, &journal);

	std::map<std::string, const EntityCandidate *> by_phrase;
	for (const auto &c : r.candidates)
		by_phrase[c.phrase] = &c;
	auto settled = detail::settled_clusters(r.candidates, r.appositions, cfg, &journal);
	std::map<std::string, const AliasCluster *> settled_of;
	for (const auto &cl : settled)
		for (const auto &m : cl.members)
			settled_of[m] = &cl;
	auto hinted = [&](const std::string &phrase) {
		const auto *cl = settled_of.at(phrase);
		return std::any_of(cl->members.begin(), cl->members.end(),
		                   [&](const auto &m) { return by_phrase.at(m)->kind_hint != KindHint::Unknown; });
	};
	auto spans = [&](const std::string &phrase) {
		auto a = nlohmann::json::array();
		for (const auto &m : by_phrase.at(phrase)->mentions)
			a.push_back({{"sentence", m.sentence_id}, {"begin", m.span.begin}, {"end", m.span.end}});
		return a;
	};
	auto excerpt = [&](const std::string &phrase) {
		const auto &m = by_phrase.at(phrase)->mentions.front();
		const auto *g = doc.sentence(m.sentence_id);
		return g ? g->text : std::string();
	};

	for (const auto &e : detail::alias_edges(r.candidates, r.appositions, cfg, &journal)) {
		if (e.kind != "string_distance" || !e.verdict.empty())
			continue;
		if (!hinted(e.a) && !hinted(e.b))
			continue;
		DecisionRequest q;
		q.kind = DecisionKind::AliasMerge;
		q.target = detail::pair_target(e.a, e.b);
		q.suggestion = "confirm";
		q.options = {"confirm", "reject"};
		q.stage = "extract";
		q.blocking = false;
		q.evidence = {{"kind", "string_distance"}, {"metric", "jaro_winkler"}, {"score", e.score},
		              {"a", e.a},                 {"b", e.b},                 {"spans", {{e.a, spans(e.a)}, {e.b, spans(e.b)}}}};
		q.excerpt = excerpt(e.a);
		r.requests.push_back(std::move(q));
	}

	std::map<std::string, std::string> comp_names;
	auto plans = detail::owner_plans(r.candidates, settled, doc, comp_names);
	bool blocked = false;
	for (const auto &[canon, p] : plans) {
		if (!p.winner.empty() || journal.choice(DecisionKind::Owner, canon))
			continue;
		DecisionRequest q;
		q.kind = DecisionKind::Owner;
		q.target = canon;
		q.options = p.options;
		q.suggestion = p.options.empty() ? std::string() : p.options.front();
		q.stage = "extract";
		q.blocking = true;
		q.evidence = {{"votes", p.votes}};
		q.excerpt = p.excerpt;
		r.requests.push_back(std::move(q));
		blocked = true;
	}
	if (!blocked)
		r.catalog = build_catalog(r.candidates, r.appositions, journal, doc, cfg);
	return r;
}

// ---- serialization -------------------------------------------------------

inline nlohmann::json mention_json(const Mention &m) {
	nlohmann::json j{{"sentence_id", m.sentence_id}, {"tokens", {m.first, m.last}}, {"head", m.head}, {"role", m.role},
	                 {"span", {m.span.begin, m.span.end}}, {"hint", to_string(m.hint)}, {"rule", m.rule}};
	if (!m.owner.empty())
		j["owner"] = m.owner;
	return j;
}

inline nlohmann::json cluster_json(const AliasCluster &c) {
	auto ev = nlohmann::json::array();
	for (const auto &e : c.evidence) {
		nlohmann::json x{{"kind", e.kind}, {"a", e.a}, {"b", e.b}};
		if (e.kind == "apposition")
			x["sentence_id"] = e.sentence_id;
		else if (e.kind == "string_distance")
			x["score"] = e.score;
		if (!e.verdict.empty())
			x["verdict"] = e.verdict;
		ev.push_back(x);
	}
	return {{"canonical", c.canonical}, {"members", c.members}, {"evidence", ev}, {"status", to_string(c.status)}};
}

inline nlohmann::json candidates_json(const std::vector<EntityCandidate> &cands) {
	auto arr = nlohmann::json::array();
	for (const auto &c : cands) {
		auto ms = nlohmann::json::array();
		for (const auto &m : c.mentions)
			ms.push_back(mention_json(m));
		arr.push_back({{"phrase", c.phrase}, {"display", c.display}, {"head_lemma", c.head_lemma},
		               {"kind_hint", to_string(c.kind_hint)}, {"mentions", ms}});
	}
	return arr;
}

inline nlohmann::json catalog_json(const ComponentCatalog &cat) {
	auto comps = nlohmann::json::array();
	for (const auto &c : cat.components) {
		auto attrs = nlohmann::json::array();
		for (const auto &a : c.attributes) {
			auto ms = nlohmann::json::array();
			for (const auto &m : a.mentions)
				ms.push_back(mention_json(m));
			attrs.push_back({{"name", a.name}, {"ident", a.ident}, {"cluster", cluster_json(a.cluster)}, {"mentions", ms}});
		}
		auto ms = nlohmann::json::array();
		for (const auto &m : c.mentions)
			ms.push_back(mention_json(m));
		comps.push_back({{"name", c.name}, {"cluster", cluster_json(c.cluster)}, {"mentions", ms}, {"attributes", attrs}});
	}
	return {{"components", comps}};
}

inline nlohmann::json dropped_json(const ComponentCatalog &cat) {
	auto arr = nlohmann::json::array();
	for (const auto &d : cat.dropped) {
		auto ms = nlohmann::json::array();
		for (const auto &m : d.mentions)
			ms.push_back(mention_json(m));
		arr.push_back({{"phrase", d.phrase}, {"reason", d.reason}, {"mentions", ms}});
	}
	return {{"dropped_candidates", arr}};
}

inline KindHint parse_kind_hint(std::string_view s) {
	for (auto k : {KindHint::Component, KindHint::Attribute, KindHint::Unknown})
		if (to_string(k) == s)
			return k;
	throw SchemaViolation("hint", "unknown kind hint '" + std::string(s) + "'");
}

inline ClusterStatus parse_cluster_status(std::string_view s) {
	for (auto k : {ClusterStatus::Auto, ClusterStatus::PendingReview, ClusterStatus::Confirmed, ClusterStatus::Rejected})
		if (to_string(k) == s)
			return k;
	throw SchemaViolation("status", "unknown cluster status '" + std::string(s) + "'");
}

inline Mention mention_from_json(const nlohmann::json &j) {
	Mention m;
	m.sentence_id = j.at("sentence_id").get<std::string>();
	m.first = j.at("tokens").at(0).get<int>();
	m.last = j.at("tokens").at(1).get<int>();
	m.head = j.value("head", m.last);
	m.role = j.at("role").get<std::string>();
	m.span = {j.at("span").at(0).get<std::size_t>(), j.at("span").at(1).get<std::size_t>()};
	m.hint = parse_kind_hint(j.at("hint").get<std::string>());
	m.rule = j.at("rule").get<std::string>();
	m.owner = j.value("owner", "");
	return m;
}

inline AliasCluster cluster_from_json(const nlohmann::json &j) {
	AliasCluster c;
	c.canonical = j.at("canonical").get<std::string>();
	for (const auto &m : j.at("members"))
		c.members.insert(m.get<std::string>());
	for (const auto &e : j.at("evidence"))
		c.evidence.push_back({e.at("kind").get<std::string>(), e.at("a").get<std::string>(), e.at("b").get<std::string>(),
		                      e.value("score", 0.0), e.value("sentence_id", ""), e.value("verdict", "")});
	c.status = parse_cluster_status(j.at("status").get<std::string>());
	if (!c.members.count(c.canonical))
		throw SchemaViolation("cluster/canonical", "canonical '" + c.canonical + "' is not a member");
	return c;
}

inline ComponentCatalog catalog_from_json(const nlohmann::json &j) {
	ComponentCatalog cat;
	for (const auto &cj : j.at("components")) {
		CatalogComponent c;
		c.name = cj.at("name").get<std::string>();
		c.cluster = cluster_from_json(cj.at("cluster"));
		for (const auto &m : cj.at("mentions"))
			c.mentions.push_back(mention_from_json(m));
		for (const auto &aj : cj.at("attributes")) {
			CatalogAttribute a;
			a.name = aj.at("name").get<std::string>();
			a.ident = aj.at("ident").get<std::string>();
			a.cluster = cluster_from_json(aj.at("cluster"));
			for (const auto &m : aj.at("mentions"))
				a.mentions.push_back(mention_from_json(m));
			c.attributes.push_back(std::move(a));
		}
		cat.components.push_back(std::move(c));
	}
	return cat;
}

} // namespace irm
