#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "irm/document.hpp"
#include "irm/entity_extraction.hpp"
#include "irm/error.hpp"
#include "irm/journal.hpp"
#include "irm/lexicon.hpp"
#include "irm/text_model.hpp"
#include "irm/util.hpp"

namespace irm {

enum class InvariantType { Abstract, Process, Exchange, Assumption, Unknown };

inline std::string to_string(InvariantType t) {
	switch (t) {
	case InvariantType::Abstract: return "Abstract";
	case InvariantType::Process: return "Process";
	case InvariantType::Exchange: return "Exchange";
	case InvariantType::Assumption: return "Assumption";
	case InvariantType::Unknown: return "Unknown";
	}
	return "Unknown";
}

inline InvariantType parse_invariant_type(std::string_view s) {
	for (auto t : {InvariantType::Abstract, InvariantType::Process, InvariantType::Exchange, InvariantType::Assumption,
	               InvariantType::Unknown})
		if (to_string(t) == s)
			return t;
	throw SchemaViolation("type", "unknown invariant type '" + std::string(s) + "'");
}

struct Condition {
	std::vector<std::string> subject; ///< Component::attribute references
	std::string subject_text;         ///< e.g. distance(E-Car::position, E-Car::POI)
	std::string comparator;           ///< < <= > >= =, empty when unrecognized
	std::optional<double> value;
	std::string unit;
	std::string raw_text;

	bool recognized() const { return !comparator.empty(); }
};

struct TimingConstraint {
	double max_period = 0.0;
	std::string unit = "s";
};

/// Tokens of one sentence a record covers; empty `tokens` means all of it.
struct ClauseScope {
	std::string sentence_id;
	std::vector<int> tokens;

	bool covers(int i) const { return tokens.empty() || std::find(tokens.begin(), tokens.end(), i) != tokens.end(); }
};

struct ClassifiedRequirement {
	std::string record_id; ///< item id, or "<item>/when" for a split-off condition
	std::string item_id;
	std::vector<ClauseScope> scopes;
	SectionKind section = SectionKind::General;
	InvariantType type = InvariantType::Process;
	double confidence = 0.0;
	std::string main_verb_lemma;
	double exchange_affinity = 0.0;
	double process_affinity = 0.0;
	std::optional<Condition> condition;
	std::optional<TimingConstraint> timing;
	std::vector<std::string> children;
	std::string linked; ///< the other half of a split conditional
	bool pending_review = false;
	std::string text;

	std::vector<std::string> sentence_ids() const {
		std::vector<std::string> out;
		for (const auto &s : scopes)
			out.push_back(s.sentence_id);
		return out;
	}
};

struct ComparatorTable {
	std::vector<std::pair<std::vector<std::string>, std::string>> phrases; ///< longest first

	static ComparatorTable parse(std::string_view text, const std::string &name = "<memory>") {
		static const std::set<std::string> ok{"<", "<=", ">", ">=", "="};
		ComparatorTable t;
		std::size_t line_no = 0;
		for (const auto &raw : util::split(text, '\n')) {
			++line_no;
			auto line = util::trim(raw);
			if (line.empty() || line.front() == '#')
				continue;
			auto tab = line.find('\t');
			if (tab == std::string_view::npos)
				throw LexiconFormatError(name, line_no, "expected phrase<TAB>comparator");
			auto words = util::split_ws(util::lower(line.substr(0, tab)));
			auto cmp = std::string(util::trim(line.substr(tab + 1)));
			if (words.empty() || !ok.count(cmp))
				throw LexiconFormatError(name, line_no, "bad comparator entry");
			t.phrases.emplace_back(std::move(words), cmp);
		}
		std::stable_sort(t.phrases.begin(), t.phrases.end(),
		                 [](const auto &a, const auto &b) { return a.first.size() > b.first.size(); });
		return t;
	}
	static ComparatorTable load(const std::string &path) { return parse(util::read_file(path), path); }
	static const ComparatorTable &bundled() {
		static const ComparatorTable t = load(util::data_path("comparators.txt"));
		return t;
	}
};

struct ClassifierConfig {
	const SynsetGraph *graph = nullptr;
	SeedSets seeds;
	Measure measure = Measure::Wup;
	ComparatorTable comparators;

	static const SynsetGraph &bundled_graph() {
		static const SynsetGraph g = SynsetGraph::load(util::data_path("synsets.txt"));
		return g;
	}
	static ClassifierConfig bundled() {
		ClassifierConfig c;
		c.graph = &bundled_graph();
		c.comparators = ComparatorTable::bundled();
		return c;
	}
};

namespace detail {

inline const std::set<std::string> &conditional_marks() {
	static const std::set<std::string> s{"when", "if", "while", "whenever"};
	return s;
}

/// The verb a requirement is about: "has to monitor" and "needs to monitor"
/// are about monitoring.
inline int main_verb(const SentenceGraph &g) {
	int v = g.root();
	for (int guard = 0; v > 0 && guard < g.size(); ++guard) {
		auto l = util::lower(g.token(v).lemma);
		if (l != "need" && l != "have")
			break;
		int x = 0;
		for (int c : g.dependents(v, "xcomp"))
			if (int a = g.first_dependent(c, "aux"); a && util::lower(g.token(a).surface) == "to")
				x = c;
		if (!x)
			break;
		v = x;
	}
	return v;
}

/// advcl head introduced by a conditional subordinator, or 0.
inline int conditional_clause(const SentenceGraph &g) {
	for (int i = 1; i <= g.size(); ++i) {
		if (g.relation_of(i) != "advcl")
			continue;
		for (int m : g.dependents(i, "mark"))
			if (conditional_marks().count(util::lower(g.token(m).surface)))
				return i;
		for (int m : g.dependents(i, "advmod"))
			if (conditional_marks().count(util::lower(g.token(m).surface)))
				return i;
	}
	return 0;
}

inline std::vector<int> subtree(const SentenceGraph &g, int head) {
	std::vector<int> out;
	for (int i = 1; i <= g.size(); ++i)
		if (g.dominates(head, i))
			out.push_back(i);
	return out;
}

inline std::string text_of(const SentenceGraph &g, const std::vector<int> &toks) {
	if (toks.empty())
		return {};
	auto b = g.token(toks.front()).span.begin, e = g.token(toks.back()).span.end;
	if (b >= g.span.begin && e <= g.span.end && e >= b)
		return g.text.substr(b - g.span.begin, e - b);
	std::vector<std::string> w;
	for (int i : toks)
		w.push_back(g.token(i).surface);
	return util::join(w, " ");
}

inline double unit_seconds(std::string_view u) {
	auto l = util::lower(u);
	if (l == "s" || l == "sec" || l == "second" || l == "seconds" || l == "secs")
		return 1;
	if (l == "ms" || l == "millisecond" || l == "milliseconds")
		return 0.001;
	if (l == "min" || l == "minute" || l == "minutes")
		return 60;
	if (l == "h" || l == "hour" || l == "hours")
		return 3600;
	return 0;
}

inline std::optional<double> number(std::string_view s) {
	std::string t;
	for (char c : s)
		if (c != ',')
			t += c;
	if (t.empty())
		return std::nullopt;
	char *end = nullptr;
	double v = std::strtod(t.c_str(), &end);
	if (end != t.c_str() + t.size() || !std::isfinite(v))
		return std::nullopt;
	return v;
}

inline std::string param_ref(const ComponentCatalog &cat, const PhraseRef &r) {
	const auto &c = cat.components[static_cast<std::size_t>(r.component)];
	return c.name + "::" + (r.attribute < 0 ? std::string("?") : c.attributes[static_cast<std::size_t>(r.attribute)].ident);
}

/// Catalog entry for the noun phrase headed by token `h`.
inline std::optional<PhraseRef> resolve_token(const SentenceGraph &g, int h, const ComponentCatalog &cat) {
	if (h < 1 || !is_noun_tag(g.token(h).pos))
		return std::nullopt;
	return cat.resolve(phrase_at(g, h));
}

} // namespace detail

/// Comparator, threshold and subject of a conditional clause. With no
/// recognizable comparator only raw_text is filled.
inline Condition extract_condition(const SentenceGraph &g, const ComponentCatalog &catalog,
                                   const ComparatorTable &table = ComparatorTable::bundled(), int clause = -1) {
	if (clause < 0)
		clause = detail::conditional_clause(g);
	Condition c;
	std::vector<int> toks = clause > 0 ? detail::subtree(g, clause) : std::vector<int>{};
	if (clause <= 0)
		for (int i = 1; i <= g.size(); ++i)
			toks.push_back(i);
	// drop the subordinator and trailing punctuation from the raw text
	std::vector<int> body;
	for (int i : toks) {
		auto rel = g.relation_of(i);
		if ((rel == "mark" || rel == "advmod") && g.head_of(i) == clause &&
		    detail::conditional_marks().count(util::lower(g.token(i).surface)))
			continue;
		if (rel == "punct")
			continue;
		body.push_back(i);
	}
	c.raw_text = detail::text_of(g, body);

	std::size_t hit = body.size();
	for (std::size_t k = 0; k < body.size() && hit == body.size(); ++k)
		for (const auto &[words, cmp] : table.phrases) {
			if (k + words.size() > body.size())
				continue;
			bool ok = true;
			for (std::size_t w = 0; w < words.size() && ok; ++w)
				ok = util::lower(g.token(body[k + w]).surface) == words[w];
			if (ok) {
				c.comparator = cmp;
				hit = k + words.size();
				break;
			}
		}
	if (c.comparator.empty())
		return c;
	for (std::size_t k = hit; k < body.size(); ++k) {
		const auto &t = g.token(body[k]);
		if (t.pos != "CD")
			continue;
		c.value = detail::number(t.surface);
		if (k + 1 < body.size()) {
			const auto &u = g.token(body[k + 1]);
			if (detail::is_noun_tag(u.pos) || u.surface == "%")
				c.unit = u.surface;
		}
		break;
	}

	// subject: a spatial predicate against an attribute gives a distance
	// between the subject component's position and that attribute
	int subj = clause > 0 ? g.first_dependent(clause, "nsubj") : 0;
	PhraseRef sref;
	if (subj)
		if (auto r = detail::resolve_token(g, subj, catalog))
			sref = *r;
	static const std::set<std::string> spatial{"far", "close", "near", "away", "closer", "farther", "further"};
	std::optional<std::string> target;
	bool is_spatial = false;
	for (int i : body)
		if (spatial.count(util::lower(g.token(i).surface)))
			is_spatial = true;
	if (is_spatial)
		for (int i : body)
			if (g.relation_of(i) == "pobj")
				if (auto r = detail::resolve_token(g, i, catalog); r && r->attribute >= 0)
					target = detail::param_ref(catalog, *r);
	if (is_spatial && sref.component >= 0 && target) {
		const auto &comp = catalog.components[static_cast<std::size_t>(sref.component)];
		std::string pos = comp.name + "::?";
		for (const auto &a : comp.attributes)
			if (a.ident == "position" || a.ident == "location")
				pos = comp.name + "::" + a.ident;
		c.subject = {pos, *target};
		c.subject_text = "distance(" + pos + ", " + *target + ")";
		return c;
	}
	if (sref.component >= 0) {
		c.subject = {detail::param_ref(catalog, sref)};
	} else {
		for (int i : body)
			if (auto r = detail::resolve_token(g, i, catalog); r && r->attribute >= 0)
				c.subject.push_back(detail::param_ref(catalog, *r));
	}
	if (c.subject.empty() && subj)
		c.subject_text = detail::phrase_at(g, subj);
	else
		c.subject_text = util::join(c.subject, ", ");
	return c;
}

/// "at least once per N <unit>" / "at least every N <unit>" in the given tokens.
inline std::optional<TimingConstraint> extract_timing(const SentenceGraph &g, const std::vector<int> &scope = {}) {
	std::vector<std::string> w;
	for (int i = 1; i <= g.size(); ++i)
		if (scope.empty() || std::find(scope.begin(), scope.end(), i) != scope.end())
			w.push_back(util::lower(g.token(i).surface));
	for (std::size_t k = 0; k + 4 < w.size() + 1; ++k) {
		if (w[k] != "at" || k + 1 >= w.size() || w[k + 1] != "least")
			continue;
		std::size_t n = k + 2;
		if (n + 1 < w.size() && w[n] == "once" && w[n + 1] == "per")
			n += 2;
		else if (n < w.size() && w[n] == "every")
			n += 1;
		else
			continue;
		if (n + 1 >= w.size())
			continue;
		auto v = detail::number(w[n]);
		double scale = detail::unit_seconds(w[n + 1]);
		if (v && *v > 0 && scale > 0)
			return TimingConstraint{*v * scale, "s"};
	}
	return std::nullopt;
}

namespace detail {

inline void score_verb(ClassifiedRequirement &r, const ClassifierConfig &cfg) {
	const auto &g = cfg.graph ? *cfg.graph : ClassifierConfig::bundled_graph();
	double e = verb_affinity(r.main_verb_lemma, cfg.seeds.exchange, g, cfg.measure).value;
	double p = verb_affinity(r.main_verb_lemma, cfg.seeds.process, g, cfg.measure).value;
	r.exchange_affinity = e;
	r.process_affinity = p;
	if (e > p) {
		r.type = InvariantType::Exchange;
		r.confidence = (e - p) / e;
	} else if (p > e) {
		r.type = InvariantType::Process;
		r.confidence = (p - e) / p;
	} else {
		r.type = InvariantType::Process;
		r.confidence = 0.0;
		r.pending_review = true;
	}
}

} // namespace detail

/// Classifies one outline item. Returns one record, or two when a
/// situation-specific conditional splits into condition and main clause
/// (condition first).
inline std::vector<ClassifiedRequirement> classify(const RequirementItem &item, const RequirementsDocument &doc,
                                                   const ComponentCatalog &catalog, const ClassifierConfig &cfg) {
	ClassifiedRequirement r;
	r.record_id = item.item_id;
	r.item_id = item.item_id;
	r.section = item.section;
	r.children = item.children;
	std::vector<std::string> texts;
	for (const auto &sid : item.sentence_ids) {
		r.scopes.push_back({sid, {}});
		if (const auto *g = doc.sentence(sid))
			texts.push_back(g->text);
	}
	r.text = util::join(texts, " ");

	const SentenceGraph *first = item.sentence_ids.empty() ? nullptr : doc.sentence(item.sentence_ids.front());
	if (first && first->parsed)
		if (int v = detail::main_verb(*first))
			r.main_verb_lemma = util::lower(first->token(v).lemma);

	if (!item.children.empty()) {
		r.type = InvariantType::Abstract;
		r.confidence = 1.0;
		return {r};
	}
	if (!first || !first->parsed || r.main_verb_lemma.empty()) {
		r.type = InvariantType::Unknown;
		r.pending_review = true;
		return {r};
	}

	int cond = item.section == SectionKind::SituationSpecific ? detail::conditional_clause(*first) : 0;
	if (cond) {
		auto cond_toks = detail::subtree(*first, cond);
		std::vector<int> main_toks;
		for (int i = 1; i <= first->size(); ++i)
			if (std::find(cond_toks.begin(), cond_toks.end(), i) == cond_toks.end())
				main_toks.push_back(i);

		ClassifiedRequirement a;
		a.record_id = item.item_id + "/when";
		a.item_id = item.item_id;
		a.section = item.section;
		a.scopes = {{first->id, cond_toks}};
		a.type = InvariantType::Assumption;
		a.confidence = 1.0;
		a.main_verb_lemma = util::lower(first->token(cond).lemma);
		a.condition = extract_condition(*first, catalog, cfg.comparators, cond);
		a.pending_review = !a.condition->recognized();
		a.linked = r.record_id;
		a.text = a.condition->raw_text;

		r.scopes = {{first->id, main_toks}};
		r.linked = a.record_id;
		std::vector<int> body = main_toks;
		while (!body.empty() && first->relation_of(body.front()) == "punct")
			body.erase(body.begin());
		while (!body.empty() && first->relation_of(body.back()) == "punct")
			body.pop_back();
		r.text = detail::text_of(*first, body);
		for (std::size_t k = 1; k < item.sentence_ids.size(); ++k)
			r.scopes.push_back({item.sentence_ids[k], {}});
		detail::score_verb(r, cfg);
		r.timing = extract_timing(*first, main_toks);
		return {a, r};
	}
	detail::score_verb(r, cfg);
	r.timing = extract_timing(*first);
	return {r};
}

/// Classifies every item in document order and applies type overrides from
/// the journal.
inline std::vector<ClassifiedRequirement> classify_all(const RequirementsDocument &doc, const ComponentCatalog &catalog,
                                                       const ClassifierConfig &cfg,
                                                       const DecisionJournal *journal = nullptr) {
	std::vector<ClassifiedRequirement> out;
	for (const auto &item : doc.items)
		for (auto &r : classify(item, doc, catalog, cfg))
			out.push_back(std::move(r));
	if (journal)
		for (auto &r : out)
			if (auto c = journal->choice(DecisionKind::TypeOverride, r.record_id)) {
				r.type = parse_invariant_type(*c);
				r.pending_review = false;
				r.confidence = 1.0;
			}
	return out;
}

/// Review requests for uncertain classifications. Unknown types block.
inline std::vector<DecisionRequest> classification_requests(const std::vector<ClassifiedRequirement> &reqs) {
	std::vector<DecisionRequest> out;
	for (const auto &r : reqs) {
		if (!r.pending_review)
			continue;
		DecisionRequest q;
		q.kind = DecisionKind::TypeOverride;
		q.target = r.record_id;
		q.stage = "classify";
		q.excerpt = r.text;
		if (r.type == InvariantType::Assumption) {
			q.suggestion = "Assumption";
			q.options = {"Assumption"};
			q.blocking = false;
			q.evidence = {{"reason", "unrecognized comparator"}, {"raw_text", r.condition ? r.condition->raw_text : ""}};
		} else {
			q.suggestion = "Process";
			q.options = {"Process", "Exchange", "Abstract"};
			q.blocking = r.type == InvariantType::Unknown;
			q.evidence = {{"main_verb", r.main_verb_lemma},
			              {"exchange_affinity", r.exchange_affinity},
			              {"process_affinity", r.process_affinity}};
		}
		out.push_back(std::move(q));
	}
	return out;
}

inline nlohmann::json classification_json(const ClassifiedRequirement &r) {
	nlohmann::json j{{"record_id", r.record_id},
	                 {"item_id", r.item_id},
	                 {"section", to_string(r.section)},
	                 {"type", to_string(r.type)},
	                 {"confidence", std::round(r.confidence * 1e4) / 1e4},
	                 {"main_verb_lemma", r.main_verb_lemma},
	                 {"children", r.children},
	                 {"pending_review", r.pending_review},
	                 {"text", r.text}};
	auto scopes = nlohmann::json::array();
	for (const auto &s : r.scopes)
		scopes.push_back({{"sentence_id", s.sentence_id}, {"tokens", s.tokens}});
	j["scopes"] = scopes;
	if (!r.linked.empty())
		j["linked"] = r.linked;
	if (r.condition) {
		nlohmann::json c{{"subject", r.condition->subject},
		                 {"subject_text", r.condition->subject_text},
		                 {"comparator", r.condition->comparator},
		                 {"unit", r.condition->unit},
		                 {"raw_text", r.condition->raw_text}};
		c["value"] = r.condition->value ? nlohmann::json(*r.condition->value) : nlohmann::json(nullptr);
		j["condition"] = c;
	}
	if (r.timing)
		j["timing"] = {{"max_period", r.timing->max_period}, {"unit", r.timing->unit}};
	return j;
}

} // namespace irm
