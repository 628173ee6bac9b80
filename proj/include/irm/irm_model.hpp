#pragma once

#include <algorithm>
#include <functional>
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
#include "irm/knowledge_flow.hpp"

namespace irm {

enum class Origin { Extracted, Proposed, Manual };

inline std::string to_string(Origin o) {
	switch (o) {
	case Origin::Extracted: return "extracted";
	case Origin::Proposed: return "proposed";
	case Origin::Manual: return "manual";
	}
	return "extracted";
}

inline Origin parse_origin(std::string_view s) {
	for (auto o : {Origin::Extracted, Origin::Proposed, Origin::Manual})
		if (to_string(o) == s)
			return o;
	throw SchemaViolation("origin", "unknown origin '" + std::string(s) + "'");
}

enum class DecompKind { And, Or };

inline std::string to_string(DecompKind k) { return k == DecompKind::And ? "AND" : "OR"; }

struct TraceRef {
	std::string item_id;
	std::string sentence_id;
	ByteSpan span;
	friend bool operator==(const TraceRef &, const TraceRef &) = default;
};

struct Invariant {
	int id = 0;
	std::string key; ///< record id, or a synthesized key such as "group:E-Car::plan"
	std::string description;
	InvariantType type = InvariantType::Process;
	FlowSignature signature;
	std::vector<TraceRef> trace;
	Origin origin = Origin::Extracted;
	bool system_output = false;
	std::optional<Condition> condition;
	std::optional<TimingConstraint> timing;
};

struct Decomposition {
	int parent = 0;
	std::vector<int> children;
	DecompKind kind = DecompKind::And;
};

struct TraceEntry {
	std::string item_id;
	std::vector<int> invariants;
};

struct IrmModel {
	ComponentCatalog catalog;
	std::vector<Invariant> invariants; ///< sorted by id
	std::vector<Decomposition> decompositions;
	std::vector<TraceEntry> traces;
	nlohmann::json journal_ref = nlohmann::json::object();

	const Invariant *find(int id) const {
		for (const auto &i : invariants)
			if (i.id == id)
				return &i;
		return nullptr;
	}
	Invariant *find(int id) {
		for (auto &i : invariants)
			if (i.id == id)
				return &i;
		return nullptr;
	}
	const Invariant *by_key(std::string_view key) const {
		for (const auto &i : invariants)
			if (i.key == key)
				return &i;
		return nullptr;
	}
	int parent_of(int id) const {
		for (const auto &d : decompositions)
			if (std::find(d.children.begin(), d.children.end(), id) != d.children.end())
				return d.parent;
		return 0;
	}
	const Decomposition *decomposition_of(int parent) const {
		for (const auto &d : decompositions)
			if (d.parent == parent)
				return &d;
		return nullptr;
	}
	std::vector<int> roots() const {
		std::vector<int> out;
		for (const auto &i : invariants)
			if (!parent_of(i.id))
				out.push_back(i.id);
		return out;
	}
	bool is_ancestor(int a, int b) const {
		for (int p = parent_of(b), guard = 0; p && guard <= static_cast<int>(invariants.size()); p = parent_of(p), ++guard)
			if (p == a)
				return true;
		return false;
	}
};

/// True iff the parameters name two or more components.
inline bool needs_exchange(const FlowSignature &sig) { return sig.components().size() >= 2; }

struct Proposal {
	std::string target; ///< record id of the refined invariant
	std::vector<Invariant> invariants;
};

/// Splits a cross-component invariant into exchanges towards the component
/// owning its outputs plus one local process. Ids are left at 0.
inline Proposal propose_refinement(const Invariant &inv) {
	if (!needs_exchange(inv.signature))
		throw InputError("invariant '" + inv.key + "' involves a single component; nothing to refine");
	std::set<std::string> owners;
	for (const auto &p : inv.signature.params)
		if (p.direction == Direction::Out)
			owners.insert(p.component);
	if (owners.size() != 1)
		throw NoOutputOwner(inv.key);
	const auto owner = *owners.begin();

	Proposal pr;
	pr.target = inv.key;
	std::vector<std::string> comps;
	for (const auto &p : inv.signature.params)
		if (p.component != owner && std::find(comps.begin(), comps.end(), p.component) == comps.end())
			comps.push_back(p.component);
	std::vector<std::string> copies;
	for (const auto &c : comps) {
		Invariant ex;
		ex.key = "refine:" + inv.key + "/exchange:" + c;
		ex.type = InvariantType::Exchange;
		ex.origin = Origin::Proposed;
		ex.trace = inv.trace;
		ex.signature.record_id = ex.key;
		ex.signature.type = InvariantType::Exchange;
		std::vector<std::string> refs;
		for (const auto &p : inv.signature.params)
			if (p.component == c) {
				ex.signature.params.push_back({p.component, p.attribute, Direction::In, "proposal"});
				refs.push_back(p.ref());
				copies.push_back(p.attribute == "?" ? c + " copy" : p.attribute + " copy");
			}
		ex.signature.params.push_back({owner, "?", Direction::Out, "proposal"});
		ex.description = util::join(refs, ", ") + " is propagated to " + owner;
		pr.invariants.push_back(std::move(ex));
	}
	Invariant proc;
	proc.key = "refine:" + inv.key + "/process";
	proc.type = InvariantType::Process;
	proc.origin = Origin::Proposed;
	proc.trace = inv.trace;
	proc.signature.record_id = proc.key;
	proc.signature.type = InvariantType::Process;
	std::vector<std::string> outs, ins;
	for (const auto &p : inv.signature.params)
		if (p.component == owner) {
			proc.signature.params.push_back({p.component, p.attribute, p.direction, "proposal"});
			(p.direction == Direction::Out ? outs : ins).push_back(p.ref());
		}
	proc.signature.params.push_back({owner, "?", Direction::In, "proposal"});
	for (const auto &c : copies)
		ins.push_back(c);
	proc.description = util::join(outs, ", ") + " computed from " + util::join(ins, ", ");
	pr.invariants.push_back(std::move(proc));
	return pr;
}

struct SituationPair {
	std::string assumption; ///< record id
	std::string main;       ///< record id
};

struct SituationGroup {
	std::set<std::string> outputs;
	std::vector<SituationPair> pairs;
	bool degenerate() const { return pairs.size() < 2; }
	std::string key() const {
		return "group:" + util::join(std::vector<std::string>(outputs.begin(), outputs.end()), ",");
	}
};

/// Situation-specific (assumption, main clause) pairs grouped by the main
/// clause's output set, in document order.
inline std::vector<SituationGroup> group_situations(const std::vector<ClassifiedRequirement> &reqs,
                                                    const std::vector<FlowSignature> &sigs) {
	std::map<std::string, const FlowSignature *> sig_of;
	for (const auto &s : sigs)
		sig_of[s.record_id] = &s;
	std::vector<SituationGroup> out;
	for (const auto &r : reqs) {
		if (r.type != InvariantType::Assumption || r.linked.empty() || r.section != SectionKind::SituationSpecific)
			continue;
		auto it = sig_of.find(r.linked);
		std::set<std::string> outs = it == sig_of.end() ? std::set<std::string>{} : it->second->outputs();
		auto g = std::find_if(out.begin(), out.end(), [&](const auto &x) { return x.outputs == outs; });
		if (g == out.end()) {
			out.push_back({outs, {}});
			g = out.end() - 1;
		}
		g->pairs.push_back({r.record_id, r.linked});
	}
	return out;
}

struct AssembleReport {
	std::vector<std::string> notes; ///< degenerate groups, duplication candidates
	nlohmann::json duplication = nlohmann::json::array();
};

struct AssembleResult {
	std::optional<IrmModel> model;
	std::vector<DecisionRequest> requests;
	AssembleReport report;
};

namespace detail {

inline std::vector<TraceRef> trace_of(const ClassifiedRequirement &r, const RequirementsDocument &doc) {
	std::vector<TraceRef> out;
	for (const auto &s : r.scopes) {
		const auto *g = doc.sentence(s.sentence_id);
		if (!g)
			continue;
		ByteSpan span = g->span;
		if (!s.tokens.empty() && g->size() > 0) {
			std::vector<int> body;
			for (int i : s.tokens)
				if (g->relation_of(i) != "punct")
					body.push_back(i);
			if (!body.empty())
				span = {g->token(body.front()).span.begin, g->token(body.back()).span.end};
		}
		out.push_back({r.item_id, s.sentence_id, span});
	}
	return out;
}

/// Forest, resolution and decomposition shape checks.
inline void verify_model(const IrmModel &m) {
	std::set<int> ids;
	for (const auto &i : m.invariants) {
		if (i.id <= 0 || !ids.insert(i.id).second)
			throw SchemaViolation("invariants/" + std::to_string(i.id), "ids must be positive and unique");
		if (i.description.empty())
			throw SchemaViolation("invariants/" + std::to_string(i.id) + "/description", "empty");
		if (i.origin == Origin::Extracted && i.trace.empty())
			throw SchemaViolation("invariants/" + std::to_string(i.id) + "/trace", "extracted invariant without trace");
		for (const auto &p : i.signature.params) {
			if (!m.catalog.component(p.component))
				throw SchemaViolation("invariants/" + std::to_string(i.id) + "/signature", "unknown component '" + p.component + "'");
			if (!p.placeholder() && !m.catalog.attribute(p.component, p.attribute))
				throw SchemaViolation("invariants/" + std::to_string(i.id) + "/signature", "unknown attribute '" + p.ref() + "'");
		}
	}
	std::map<int, int> parent;
	std::set<int> parents;
	for (std::size_t k = 0; k < m.decompositions.size(); ++k) {
		const auto &d = m.decompositions[k];
		auto path = "decompositions/" + std::to_string(k);
		if (!ids.count(d.parent))
			throw SchemaViolation(path + "/parent", "unknown invariant " + std::to_string(d.parent));
		if (!parents.insert(d.parent).second)
			throw SchemaViolation(path + "/parent", "invariant decomposed twice");
		if (d.children.empty())
			throw SchemaViolation(path + "/children", "empty");
		if (d.kind == DecompKind::Or && d.children.size() < 2)
			throw SchemaViolation(path + "/children", "OR needs at least two children");
		for (int c : d.children) {
			if (!ids.count(c))
				throw SchemaViolation(path + "/children", "unknown invariant " + std::to_string(c));
			if (c == d.parent)
				throw SchemaViolation(path + "/children", "parent among its own children");
			if (!parent.emplace(c, d.parent).second)
				throw SchemaViolation(path + "/children", "invariant " + std::to_string(c) + " has two parents");
		}
	}
	// cycle check: every walk up must end at a root
	for (int id : ids) {
		int cur = id;
		for (std::size_t steps = 0; parent.count(cur); ++steps) {
			if (steps > ids.size())
				throw SchemaViolation("decompositions", "cycle through invariant " + std::to_string(id));
			cur = parent[cur];
		}
	}
}

} // namespace detail

/// Builds the decomposition forest. Composition choices come from the
/// journal; anything still open is returned as a request and no model is
/// built.
inline AssembleResult assemble(const RequirementsDocument &doc, const std::vector<ClassifiedRequirement> &reqs,
                               const std::vector<FlowSignature> &sigs, const ComponentCatalog &catalog,
                               const DecisionJournal &journal) {
	AssembleResult res;
	std::map<std::string, const ClassifiedRequirement *> req_of;
	std::map<std::string, const FlowSignature *> sig_of;
	for (const auto &r : reqs)
		req_of[r.record_id] = &r;
	for (const auto &s : sigs)
		sig_of[s.record_id] = &s;
	auto comp = [&](const std::string &target) { return journal.choice(DecisionKind::Composition, target); };
	auto ask = [&](std::string target, std::string suggestion, std::vector<std::string> options, nlohmann::json ev,
	               std::string excerpt) {
		DecisionRequest q;
		q.kind = DecisionKind::Composition;
		q.target = std::move(target);
		q.suggestion = std::move(suggestion);
		q.options = std::move(options);
		q.stage = "compose";
		q.blocking = true;
		q.evidence = std::move(ev);
		q.excerpt = std::move(excerpt);
		res.requests.push_back(std::move(q));
	};

	// manual attachments: composition "attach:<record>" -> parent record or "root"
	std::map<std::string, std::string> attach;
	for (const auto &[target, choice] : journal.effective(DecisionKind::Composition))
		if (target.rfind("attach:", 0) == 0)
			attach[target.substr(7)] = choice;

	// refinements
	std::map<std::string, Proposal> accepted;
	std::vector<std::string> rejected;
	for (const auto &r : reqs) {
		if (r.type == InvariantType::Assumption || r.type == InvariantType::Exchange || !r.children.empty())
			continue;
		auto sit = sig_of.find(r.record_id);
		if (sit == sig_of.end() || !needs_exchange(*sit->second))
			continue;
		Invariant probe;
		probe.key = r.record_id;
		probe.signature = *sit->second;
		probe.trace = detail::trace_of(r, doc);
		Proposal pr;
		try {
			pr = propose_refinement(probe);
		} catch (const NoOutputOwner &) {
			// no single computing component; the designer keeps it as is or attaches children by hand
			if (!comp("refine:" + r.record_id))
				ask("refine:" + r.record_id, "keep", {"keep"}, {{"reason", "outputs span several components"}}, r.text);
			continue;
		}
		auto choice = comp("refine:" + r.record_id);
		if (!choice) {
			auto ev = nlohmann::json::array();
			for (const auto &i : pr.invariants)
				ev.push_back({{"type", to_string(i.type)}, {"description", i.description},
				              {"signature", format_signature(i.signature)}});
			ask("refine:" + r.record_id, "accept", {"accept", "reject"}, {{"proposed", ev}}, r.text);
		} else if (*choice == "accept") {
			accepted[r.record_id] = std::move(pr);
		} else {
			rejected.push_back(r.record_id);
		}
	}

	// situation groups
	auto groups = group_situations(reqs, sigs);
	std::map<std::string, const SituationGroup *> group_of_record; // main/assumption record -> group
	std::vector<const SituationGroup *> accepted_groups;
	for (const auto &g : groups) {
		auto outs = std::vector<std::string>(g.outputs.begin(), g.outputs.end());
		if (g.degenerate())
			res.report.notes.push_back("situation " + g.pairs.front().main + " has no alternative with outputs {" +
			                           util::join(outs, ", ") + "}; an OR needs two");
		auto choice = comp(g.key());
		std::string excerpt;
		for (const auto &p : g.pairs)
			if (auto it = req_of.find(p.main); it != req_of.end())
				excerpt += (excerpt.empty() ? "" : " | ") + it->second->text;
		if (!choice) {
			nlohmann::json ev{{"outputs", outs}, {"alternatives", nlohmann::json::array()}};
			for (const auto &p : g.pairs)
				ev["alternatives"].push_back({{"assumption", p.assumption}, {"main", p.main}});
			ask(g.key(), "accept", {"accept", "reject"}, ev, excerpt);
			continue;
		}
		if (*choice != "accept")
			continue;
		accepted_groups.push_back(&g);
		for (const auto &p : g.pairs) {
			group_of_record[p.assumption] = &g;
			group_of_record[p.main] = &g;
		}
		if (!attach.count(g.key())) {
			// suggest the general requirement that produces the same outputs
			std::string suggestion = "root";
			for (const auto &r : reqs)
				if (r.section != SectionKind::SituationSpecific && sig_of.count(r.record_id)) {
					const auto outs_r = sig_of.at(r.record_id)->outputs();
					if (!g.outputs.empty() && std::includes(outs_r.begin(), outs_r.end(), g.outputs.begin(), g.outputs.end())) {
						suggestion = r.record_id;
						break;
					}
				}
			std::vector<std::string> options{"root"};
			for (const auto &r : reqs)
				if (r.type != InvariantType::Assumption && !group_of_record.count(r.record_id))
					options.push_back(r.record_id);
			ask("attach:" + g.key(), suggestion, options, {{"outputs", outs}}, excerpt);
		}
	}

	for (const auto &r : rejected) {
		bool manual = std::any_of(attach.begin(), attach.end(), [&](const auto &a) { return a.second == r; });
		if (!manual)
			throw UnresolvedProposal(r);
	}
	if (!res.requests.empty())
		return res;

	// ---- build ----
	IrmModel m;
	m.catalog = catalog;
	m.journal_ref = {{"digest", journal.digest()}, {"entries", journal.size()}};
	int next_id = 1;
	std::map<std::string, int> id_of; // key -> id
	auto add = [&](Invariant inv) {
		inv.id = next_id++;
		id_of[inv.key] = inv.id;
		m.invariants.push_back(std::move(inv));
		return m.invariants.back().id;
	};
	auto from_record = [&](const ClassifiedRequirement &r) {
		Invariant inv;
		inv.key = r.record_id;
		inv.description = r.text;
		inv.type = r.type;
		if (auto it = sig_of.find(r.record_id); it != sig_of.end())
			inv.signature = *it->second;
		inv.signature.record_id = r.record_id;
		inv.signature.type = r.type;
		inv.trace = detail::trace_of(r, doc);
		inv.condition = r.condition;
		inv.timing = r.timing;
		inv.origin = Origin::Extracted;
		return inv;
	};

	std::map<int, std::pair<DecompKind, std::vector<int>>> children; // parent id -> children
	std::set<const SituationGroup *> emitted;
	std::map<std::string, std::string> parent_key; // child key -> parent key
	std::set<std::string> top_level;

	for (const auto &r : reqs) {
		if (auto git = group_of_record.find(r.record_id); git != group_of_record.end()) {
			const auto *g = git->second;
			if (emitted.count(g))
				continue;
			emitted.insert(g);
			auto outs = std::vector<std::string>(g->outputs.begin(), g->outputs.end());
			int or_id = 0;
			if (!g->degenerate()) {
				Invariant orp;
				orp.key = g->key();
				orp.description = "Alternative: " + util::join(outs, ", ") + " maintained";
				orp.type = InvariantType::Abstract;
				orp.origin = Origin::Proposed;
				or_id = add(std::move(orp));
				children[or_id].first = DecompKind::Or;
				top_level.insert(g->key());
			}
			for (const auto &p : g->pairs) {
				const auto &a = *req_of.at(p.assumption);
				const auto &mr = *req_of.at(p.main);
				Invariant sit;
				sit.key = "situation:" + a.item_id;
				const auto *item = doc.item(a.item_id);
				std::vector<std::string> texts;
				if (item)
					for (const auto &sid : item->sentence_ids)
						if (const auto *s = doc.sentence(sid))
							texts.push_back(s->text);
				sit.description = texts.empty() ? a.text + ", " + mr.text : util::join(texts, " ");
				sit.type = InvariantType::Abstract;
				sit.origin = Origin::Proposed;
				for (const auto &t : detail::trace_of(a, doc))
					sit.trace.push_back(t);
				int sid = add(std::move(sit));
				if (or_id) {
					children[or_id].second.push_back(sid);
					parent_key["situation:" + a.item_id] = g->key();
				} else {
					top_level.insert("situation:" + a.item_id);
				}
				children[sid].first = DecompKind::And;
				int aid = add(from_record(a));
				int mid = add(from_record(mr));
				children[sid].second = {aid, mid};
				parent_key[a.record_id] = "situation:" + a.item_id;
				parent_key[mr.record_id] = "situation:" + a.item_id;
			}
			continue;
		}
		add(from_record(r));
		const auto *item = doc.item(r.item_id);
		if (r.linked.empty() || r.type != InvariantType::Assumption) {
			if (item && !item->parent.empty())
				parent_key[r.record_id] = item->parent;
			else if (r.linked.empty())
				top_level.insert(r.record_id);
		}
		if (auto pit = accepted.find(r.record_id); pit != accepted.end())
			for (auto inv : pit->second.invariants) {
				auto key = inv.key;
				inv.signature.record_id = key;
				add(std::move(inv));
				parent_key[key] = r.record_id;
			}
	}
	// unaccepted split conditionals stay linked to their main clause
	for (const auto &r : reqs)
		if (r.type == InvariantType::Assumption && !r.linked.empty() && !parent_key.count(r.record_id)) {
			std::string skey = "situation:" + r.item_id;
			if (!id_of.count(skey)) {
				Invariant sit;
				sit.key = skey;
				sit.description = r.text;
				if (auto it = req_of.find(r.linked); it != req_of.end())
					sit.description = r.text + ", " + it->second->text;
				sit.type = InvariantType::Abstract;
				sit.origin = Origin::Proposed;
				sit.trace = detail::trace_of(r, doc);
				add(std::move(sit));
				top_level.insert(skey);
			}
			parent_key[r.record_id] = skey;
			parent_key[r.linked] = skey;
			top_level.erase(r.linked);
		}

	for (const auto &[child, parent] : attach) {
		if (!id_of.count(child))
			throw UnknownName(child);
		if (parent == "root") {
			parent_key.erase(child);
			top_level.insert(child);
			continue;
		}
		if (!id_of.count(parent))
			throw UnknownName(parent);
		parent_key[child] = parent;
		top_level.erase(child);
	}

	for (const auto &inv : m.invariants) {
		auto it = parent_key.find(inv.key);
		if (it == parent_key.end()) {
			if (!top_level.count(inv.key))
				throw DanglingInvariant(inv.key);
			continue;
		}
		int pid = id_of.at(it->second);
		auto &slot = children[pid];
		if (std::find(slot.second.begin(), slot.second.end(), inv.id) == slot.second.end())
			slot.second.push_back(inv.id);
	}
	for (auto &[pid, kc] : children) {
		std::sort(kc.second.begin(), kc.second.end());
		if (!kc.second.empty())
			m.decompositions.push_back({pid, kc.second, kc.first});
	}

	// roots own their outputs as system outputs
	for (auto &inv : m.invariants)
		inv.system_output = m.parent_of(inv.id) == 0;

	for (const auto &item : doc.items) {
		TraceEntry t{item.item_id, {}};
		for (const auto &inv : m.invariants)
			if (inv.origin == Origin::Extracted &&
			    std::any_of(inv.trace.begin(), inv.trace.end(), [&](const auto &tr) { return tr.item_id == item.item_id; }))
				t.invariants.push_back(inv.id);
		m.traces.push_back(std::move(t));
	}

	// subtree duplication is only reported
	for (const auto *g : accepted_groups) {
		if (g->degenerate())
			continue;
		int gid = id_of.at(g->key());
		for (const auto &inv : m.invariants) {
			if (inv.id == gid || m.is_ancestor(gid, inv.id) || inv.type == InvariantType::Assumption)
				continue;
			auto outs = inv.signature.outputs();
			if (!g->outputs.empty() && std::includes(outs.begin(), outs.end(), g->outputs.begin(), g->outputs.end()) &&
			    m.is_ancestor(inv.id, gid))
				res.report.duplication.push_back(
				    {{"group", gid}, {"invariant", inv.id}, {"alternatives", g->pairs.size()},
				     {"reason", "computes the outputs the alternatives maintain; a copy per alternative may be intended"}});
		}
	}

	detail::verify_model(m);
	res.model = std::move(m);
	return res;
}

// ---- serialization ---------------------------------------------------------

inline nlohmann::json condition_json(const Condition &c) {
	nlohmann::json j{{"subject", c.subject}, {"subject_text", c.subject_text}, {"comparator", c.comparator},
	                 {"unit", c.unit},       {"raw_text", c.raw_text}};
	j["value"] = c.value ? nlohmann::json(*c.value) : nlohmann::json(nullptr);
	return j;
}

inline nlohmann::json model_json(const IrmModel &m) {
	nlohmann::json j;
	j["schema_version"] = 1;
	j["components"] = catalog_json(m.catalog).at("components");
	auto invs = nlohmann::json::array();
	for (const auto &i : m.invariants) {
		nlohmann::json x{{"id", i.id},
		                 {"key", i.key},
		                 {"description", i.description},
		                 {"type", to_string(i.type)},
		                 {"origin", to_string(i.origin)},
		                 {"system_output", i.system_output}};
		x["signature"] = signature_json(i.signature);
		auto tr = nlohmann::json::array();
		for (const auto &t : i.trace)
			tr.push_back({{"item_id", t.item_id}, {"sentence_id", t.sentence_id}, {"span", {t.span.begin, t.span.end}}});
		x["trace"] = tr;
		x["condition"] = i.condition ? condition_json(*i.condition) : nlohmann::json(nullptr);
		x["timing"] = i.timing ? nlohmann::json{{"max_period", i.timing->max_period}, {"unit", i.timing->unit}}
		                       : nlohmann::json(nullptr);
		invs.push_back(x);
	}
	j["invariants"] = invs;
	auto ds = nlohmann::json::array();
	for (const auto &d : m.decompositions)
		ds.push_back({{"parent", d.parent}, {"children", d.children}, {"kind", to_string(d.kind)}});
	j["decompositions"] = ds;
	auto ts = nlohmann::json::array();
	for (const auto &t : m.traces)
		ts.push_back({{"item_id", t.item_id}, {"invariants", t.invariants}});
	j["traces"] = ts;
	j["journal_ref"] = m.journal_ref;
	return j;
}

/// Canonical text: sorted keys, 2-space indent, LF, trailing newline.
inline std::string serialize(const IrmModel &m) { return model_json(m).dump(2) + "\n"; }

inline IrmModel deserialize_json(const nlohmann::json &j) {
	auto need = [&](const nlohmann::json &obj, const char *key, const std::string &path) -> const nlohmann::json & {
		if (!obj.is_object() || !obj.contains(key))
			throw SchemaViolation(path + "/" + key, "missing");
		return obj.at(key);
	};
	try {
		if (need(j, "schema_version", "") != 1)
			throw SchemaViolation("/schema_version", "expected 1");
		for (const char *k : {"components", "invariants", "decompositions", "traces"})
			if (!need(j, k, "").is_array())
				throw SchemaViolation(std::string("/") + k, "expected an array");
		need(j, "journal_ref", "");
		IrmModel m;
		m.catalog = catalog_from_json(j);
		for (std::size_t k = 0; k < j["invariants"].size(); ++k) {
			const auto &x = j["invariants"][k];
			auto path = "/invariants/" + std::to_string(k);
			Invariant i;
			i.id = need(x, "id", path).get<int>();
			i.key = need(x, "key", path).get<std::string>();
			i.description = need(x, "description", path).get<std::string>();
			i.type = parse_invariant_type(need(x, "type", path).get<std::string>());
			i.origin = parse_origin(need(x, "origin", path).get<std::string>());
			i.system_output = need(x, "system_output", path).get<bool>();
			i.signature = signature_from_json(need(x, "signature", path));
			for (const auto &t : need(x, "trace", path))
				i.trace.push_back({t.at("item_id").get<std::string>(), t.at("sentence_id").get<std::string>(),
				                   {t.at("span").at(0).get<std::size_t>(), t.at("span").at(1).get<std::size_t>()}});
			if (const auto &c = need(x, "condition", path); !c.is_null()) {
				Condition cd;
				cd.subject = c.at("subject").get<std::vector<std::string>>();
				cd.subject_text = c.at("subject_text").get<std::string>();
				cd.comparator = c.at("comparator").get<std::string>();
				cd.unit = c.at("unit").get<std::string>();
				cd.raw_text = c.at("raw_text").get<std::string>();
				if (!c.at("value").is_null())
					cd.value = c.at("value").get<double>();
				i.condition = cd;
			}
			if (const auto &t = need(x, "timing", path); !t.is_null())
				i.timing = TimingConstraint{t.at("max_period").get<double>(), t.at("unit").get<std::string>()};
			m.invariants.push_back(std::move(i));
		}
		for (std::size_t k = 0; k < j["decompositions"].size(); ++k) {
			const auto &x = j["decompositions"][k];
			auto path = "/decompositions/" + std::to_string(k);
			Decomposition d;
			d.parent = need(x, "parent", path).get<int>();
			d.children = need(x, "children", path).get<std::vector<int>>();
			auto kind = need(x, "kind", path).get<std::string>();
			if (kind != "AND" && kind != "OR")
				throw SchemaViolation(path + "/kind", "expected AND or OR");
			d.kind = kind == "AND" ? DecompKind::And : DecompKind::Or;
			m.decompositions.push_back(std::move(d));
		}
		for (const auto &t : j["traces"])
			m.traces.push_back({t.at("item_id").get<std::string>(), t.at("invariants").get<std::vector<int>>()});
		m.journal_ref = j["journal_ref"];
		detail::verify_model(m);
		return m;
	} catch (const nlohmann::json::exception &e) {
		throw SchemaViolation("/", e.what());
	}
}

inline IrmModel deserialize(std::string_view text) {
	nlohmann::json j;
	try {
		j = nlohmann::json::parse(text);
	} catch (const nlohmann::json::exception &e) {
		throw SchemaViolation("/", e.what());
	}
	return deserialize_json(j);
}

} // namespace irm
