#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "irm/classification.hpp"
#include "irm/document.hpp"
#include "irm/entity_extraction.hpp"
#include "irm/error.hpp"
#include "irm/journal.hpp"

namespace irm {

enum class Direction { Undecided, In, Out };

inline std::string to_string(Direction d) {
	switch (d) {
	case Direction::Undecided: return "undecided";
	case Direction::In: return "in";
	case Direction::Out: return "out";
	}
	return "undecided";
}

inline Direction parse_direction(std::string_view s) {
	if (s == "in")
		return Direction::In;
	if (s == "out")
		return Direction::Out;
	if (s == "undecided")
		return Direction::Undecided;
	throw SchemaViolation("direction", "unknown direction '" + std::string(s) + "'");
}

struct KnowledgeParameter {
	std::string component;
	std::string attribute; ///< attribute identifier or "?"
	Direction direction = Direction::Undecided;
	std::string source; ///< S1, S2, journal, assumption or empty

	bool placeholder() const { return attribute == "?"; }
	std::string ref() const { return component + "::" + attribute; }
	friend bool operator==(const KnowledgeParameter &a, const KnowledgeParameter &b) {
		return a.component == b.component && a.attribute == b.attribute && a.direction == b.direction;
	}
};

struct FlowSignature {
	std::string record_id;
	InvariantType type = InvariantType::Process;
	std::vector<KnowledgeParameter> params;

	bool has(std::string_view ref) const {
		return std::any_of(params.begin(), params.end(), [&](const auto &p) { return p.ref() == ref; });
	}
	std::size_t count(Direction d) const {
		return static_cast<std::size_t>(std::count_if(params.begin(), params.end(), [&](const auto &p) { return p.direction == d; }));
	}
	bool decided() const { return count(Direction::Undecided) == 0; }
	std::set<std::string> components() const {
		std::set<std::string> out;
		for (const auto &p : params)
			out.insert(p.component);
		return out;
	}
	std::set<std::string> outputs() const {
		std::set<std::string> out;
		for (const auto &p : params)
			if (p.direction == Direction::Out)
				out.insert(p.ref());
		return out;
	}
};

inline std::string direction_target(const KnowledgeParameter &p, std::string_view record) {
	return p.ref() + "@" + std::string(record);
}

// ---- text form -------------------------------------------------------------

namespace detail {

/// Inputs, then undecided, then outputs; inside each direction params are
/// grouped by component in order of first appearance there. Idempotent, so
/// the text form survives a parse.
inline std::vector<KnowledgeParameter> canonical_order(const std::vector<KnowledgeParameter> &ps) {
	std::vector<KnowledgeParameter> out;
	for (auto d : {Direction::In, Direction::Undecided, Direction::Out}) {
		std::vector<std::string> comps;
		for (const auto &p : ps)
			if (p.direction == d && std::find(comps.begin(), comps.end(), p.component) == comps.end())
				comps.push_back(p.component);
		for (const auto &c : comps)
			for (const auto &p : ps)
				if (p.component == c && p.direction == d)
					out.push_back(p);
	}
	return out;
}

inline bool name_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
inline bool name_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'; }

} // namespace detail

/// "C::a, C::b -> C::c". Every parameter must be decided.
inline std::string format_signature(const FlowSignature &sig) {
	std::vector<std::string> ins, outs;
	for (const auto &p : detail::canonical_order(sig.params)) {
		if (p.direction == Direction::Undecided)
			throw UnresolvedDecision("direction:" + direction_target(p, sig.record_id));
		(p.direction == Direction::In ? ins : outs).push_back(p.ref());
	}
	auto l = util::join(ins, ", "), r = util::join(outs, ", ");
	if (l.empty() && r.empty())
		return "->";
	if (l.empty())
		return "-> " + r;
	if (r.empty())
		return l + " ->";
	return l + " -> " + r;
}

/// Inverse of format_signature. Names are checked against the catalog when one is given.
inline FlowSignature parse_signature(std::string_view text, const ComponentCatalog *catalog = nullptr) {
	FlowSignature sig;
	std::size_t i = 0;
	bool seen_arrow = false;
	auto skip_ws = [&] {
		while (i < text.size() && (text[i] == ' ' || text[i] == '\t'))
			++i;
	};
	auto name = [&]() -> std::string {
		if (i >= text.size() || !detail::name_start(text[i]))
			throw SignatureSyntaxError(i, "expected a name");
		auto b = i;
		while (i < text.size() && detail::name_char(text[i])) {
			if (text[i] == '-' && i + 1 < text.size() && text[i + 1] == '>')
				break;
			++i;
		}
		return std::string(text.substr(b, i - b));
	};
	auto param_list = [&](Direction d) {
		skip_ws();
		if (i >= text.size() || text.compare(i, 2, "->") == 0)
			return;
		while (true) {
			skip_ws();
			KnowledgeParameter p;
			p.direction = d;
			p.component = name();
			if (text.compare(i, 2, "::") != 0)
				throw SignatureSyntaxError(i, "expected '::'");
			i += 2;
			if (i < text.size() && text[i] == '?') {
				p.attribute = "?";
				++i;
			} else {
				p.attribute = name();
			}
			sig.params.push_back(std::move(p));
			skip_ws();
			if (i < text.size() && text[i] == ',') {
				++i;
				continue;
			}
			return;
		}
	};
	param_list(Direction::In);
	skip_ws();
	if (text.compare(i, 2, "->") != 0)
		throw SignatureSyntaxError(i, "expected '->'");
	i += 2;
	seen_arrow = true;
	param_list(Direction::Out);
	skip_ws();
	if (i != text.size() || !seen_arrow)
		throw SignatureSyntaxError(i, "unexpected trailing text");
	if (catalog)
		for (const auto &p : sig.params) {
			if (!catalog->component(p.component))
				throw UnknownName(p.component);
			if (!p.placeholder() && !catalog->attribute(p.component, p.attribute))
				throw UnknownName(p.ref());
		}
	return sig;
}

// ---- collection ------------------------------------------------------------

/// One undecided parameter per catalog attribute mentioned inside the
/// record's clauses, in mention order. A condition's subject comes first.
inline FlowSignature collect_params(const ClassifiedRequirement &req, const RequirementsDocument &doc,
                                    const ComponentCatalog &catalog) {
	FlowSignature sig;
	sig.record_id = req.record_id;
	sig.type = req.type;
	auto add = [&](const std::string &comp, const std::string &attr) {
		if (!sig.has(comp + "::" + attr))
			sig.params.push_back({comp, attr, Direction::Undecided, ""});
	};
	if (req.condition)
		for (const auto &ref : req.condition->subject) {
			auto sep = ref.find("::");
			if (sep != std::string::npos && ref.substr(sep + 2) != "?")
				add(ref.substr(0, sep), ref.substr(sep + 2));
		}
	struct Hit {
		std::size_t sentence;
		int token;
		std::string comp, attr;
	};
	std::vector<Hit> hits;
	for (const auto &c : catalog.components)
		for (const auto &a : c.attributes)
			for (const auto &m : a.mentions)
				for (const auto &s : req.scopes)
					if (s.sentence_id == m.sentence_id && s.covers(m.head))
						hits.push_back({detail::sentence_ordinal(doc, m.sentence_id), m.head, c.name, a.ident});
	std::sort(hits.begin(), hits.end(), [](const Hit &a, const Hit &b) {
		return a.sentence != b.sentence ? a.sentence < b.sentence : a.token < b.token;
	});
	for (const auto &h : hits)
		add(h.comp, h.attr);
	return sig;
}

/// Components named in the record's clauses that contribute no attribute
/// get a `C::?` placeholder (left undecided).
inline void add_placeholders(FlowSignature &sig, const ClassifiedRequirement &req, const RequirementsDocument &doc,
                             const ComponentCatalog &catalog) {
	struct Hit {
		std::size_t sentence;
		int token;
		std::string comp;
	};
	std::vector<Hit> hits;
	for (const auto &c : catalog.components)
		for (const auto &m : c.mentions)
			for (const auto &s : req.scopes)
				if (s.sentence_id == m.sentence_id && s.covers(m.head))
					hits.push_back({detail::sentence_ordinal(doc, m.sentence_id), m.head, c.name});
	std::sort(hits.begin(), hits.end(), [](const Hit &a, const Hit &b) {
		return a.sentence != b.sentence ? a.sentence < b.sentence : a.token < b.token;
	});
	auto comps = sig.components();
	for (const auto &h : hits)
		if (!comps.count(h.comp)) {
			sig.params.push_back({h.comp, "?", Direction::Undecided, ""});
			comps.insert(h.comp);
		}
}

// ---- inference -------------------------------------------------------------

struct FlowResult {
	std::vector<FlowSignature> signatures;
	std::vector<DecisionRequest> requests;

	bool blocked() const {
		return std::any_of(requests.begin(), requests.end(), [](const auto &r) { return r.blocking; });
	}
};

/// Direction inference. S3 (journal) is applied first and pins parameters;
/// then S1 (lone parameter of a Process is an output) and S2 (an attribute
/// that is an output somewhere is an input elsewhere) run to a fixed point.
/// S1 clashes and every S2 result come back as review requests; so does
/// every parameter left undecided, and every finished non-assumption
/// signature without an output.
inline FlowResult infer_directions(std::vector<FlowSignature> sigs, const DecisionJournal &journal,
                                   const std::map<std::string, std::string> &excerpts = {}) {
	FlowResult res;
	auto excerpt = [&](const std::string &rec) {
		auto it = excerpts.find(rec);
		return it == excerpts.end() ? std::string() : it->second;
	};
	auto directions = journal.effective(DecisionKind::Direction);

	// S3 plus placeholders the journal adds
	for (auto &sig : sigs) {
		for (auto &p : sig.params) {
			if (sig.type == InvariantType::Assumption) {
				p.direction = Direction::In;
				p.source = "assumption";
			}
			if (auto it = directions.find(direction_target(p, sig.record_id)); it != directions.end()) {
				auto d = parse_direction(it->second);
				if (sig.type == InvariantType::Assumption && d == Direction::Out)
					throw ConflictingDecisions(it->first);
				p.direction = d;
				p.source = "journal";
			}
		}
		for (const auto &[target, choice] : directions) {
			auto at = target.rfind('@');
			if (at == std::string::npos || target.substr(at + 1) != sig.record_id)
				continue;
			auto ref = target.substr(0, at);
			if (ref.size() < 4 || ref.compare(ref.size() - 3, 3, "::?") != 0 || sig.has(ref))
				continue;
			// a stale entry for a component this signature no longer mentions
			if (!sig.components().count(ref.substr(0, ref.size() - 3)))
				continue;
			auto d = parse_direction(choice);
			if (d == Direction::Undecided)
				continue;
			sig.params.push_back({ref.substr(0, ref.size() - 3), "?", d, "journal"});
		}
	}

	std::map<std::string, std::set<std::string>> out_in; // attribute ref -> records where it is out
	auto refresh_outs = [&] {
		out_in.clear();
		for (const auto &s : sigs)
			for (const auto &p : s.params)
				if (p.direction == Direction::Out && !p.placeholder())
					out_in[p.ref()].insert(s.record_id);
	};

	bool changed = true;
	for (int guard = 0; changed && guard < 1000; ++guard) {
		changed = false;
		refresh_outs();
		for (auto &sig : sigs) {
			if (sig.type != InvariantType::Process || sig.params.size() != 1)
				continue;
			auto &p = sig.params.front();
			if (p.direction != Direction::Undecided || p.placeholder())
				continue;
			p.direction = Direction::Out;
			p.source = "S1";
			changed = true;
		}
		refresh_outs();
		for (auto &sig : sigs) {
			if (sig.type == InvariantType::Assumption)
				continue;
			for (auto &p : sig.params) {
				if (p.direction != Direction::Undecided || p.placeholder())
					continue;
				auto it = out_in.find(p.ref());
				if (it == out_in.end())
					continue;
				bool elsewhere = std::any_of(it->second.begin(), it->second.end(), [&](const auto &r) { return r != sig.record_id; });
				if (!elsewhere)
					continue;
				p.direction = Direction::In;
				p.source = "S2";
				changed = true;
			}
		}
	}

	refresh_outs();
	for (const auto &sig : sigs) {
		for (const auto &p : sig.params) {
			DecisionRequest q;
			q.kind = DecisionKind::Direction;
			q.target = direction_target(p, sig.record_id);
			q.options = {"in", "out"};
			q.stage = "flow";
			q.blocking = true;
			q.excerpt = excerpt(sig.record_id);
			if (p.source == "S2") {
				q.suggestion = "in";
				q.evidence = {{"rule", "S2"}, {"out_in", out_in[p.ref()]}};
			} else if (p.source == "S1") {
				auto others = out_in[p.ref()];
				others.erase(sig.record_id);
				if (others.empty())
					continue;
				q.suggestion = "out";
				q.evidence = {{"rule", "S1"}, {"conflict", "output elsewhere"}, {"out_in", others}};
			} else if (p.direction == Direction::Undecided) {
				bool has_out = sig.count(Direction::Out) > 0;
				q.suggestion = sig.type == InvariantType::Abstract || !has_out ? "out" : "in";
				if (p.placeholder() && has_out)
					q.suggestion = "in";
				q.evidence = {{"rule", "undecided"}};
			} else {
				continue;
			}
			res.requests.push_back(std::move(q));
		}
		if ((sig.type == InvariantType::Process || sig.type == InvariantType::Exchange) && sig.decided() &&
		    sig.count(Direction::Out) == 0) {
			// owner of the missing output: the component holding most parameters
			std::map<std::string, int> n;
			for (const auto &p : sig.params)
				++n[p.component];
			std::string comp;
			int best = -1;
			for (const auto &p : sig.params)
				if (n[p.component] > best)
					best = n[p.component], comp = p.component;
			if (comp.empty())
				continue;
			DecisionRequest q;
			q.kind = DecisionKind::Direction;
			q.target = comp + "::?@" + sig.record_id;
			q.suggestion = "out";
			q.options = {"out", "in"};
			q.stage = "flow";
			q.blocking = true;
			q.evidence = {{"rule", "no output"}};
			q.excerpt = excerpt(sig.record_id);
			if (std::none_of(res.requests.begin(), res.requests.end(), [&](const auto &r) { return r.id() == q.id(); }))
				res.requests.push_back(std::move(q));
		}
	}

	for (auto &sig : sigs)
		if (sig.decided())
			sig.params = detail::canonical_order(sig.params);
	res.signatures = std::move(sigs);
	return res;
}

inline nlohmann::json signature_json(const FlowSignature &s) {
	auto ps = nlohmann::json::array();
	for (const auto &p : s.params)
		ps.push_back({{"component", p.component}, {"attribute", p.attribute}, {"direction", to_string(p.direction)},
		              {"source", p.source}});
	nlohmann::json j{{"record_id", s.record_id}, {"type", to_string(s.type)}, {"params", ps}};
	j["text"] = s.decided() ? nlohmann::json(format_signature(s)) : nlohmann::json(nullptr);
	return j;
}

inline FlowSignature signature_from_json(const nlohmann::json &j) {
	FlowSignature s;
	s.record_id = j.at("record_id").get<std::string>();
	s.type = parse_invariant_type(j.at("type").get<std::string>());
	for (const auto &p : j.at("params"))
		s.params.push_back({p.at("component").get<std::string>(), p.at("attribute").get<std::string>(),
		                    parse_direction(p.at("direction").get<std::string>()), p.value("source", "")});
	return s;
}

} // namespace irm
