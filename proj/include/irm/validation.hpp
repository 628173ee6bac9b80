#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"

#include "irm/error.hpp"
#include "irm/irm_model.hpp"
#include "irm/util.hpp"

namespace irm {

/// One resolution of every OR reachable from the roots. `selected` is sorted.
struct Configuration {
	int id = 0; ///< 1-based, enumeration order
	std::vector<int> selected;

	bool has(int inv) const { return std::binary_search(selected.begin(), selected.end(), inv); }
};

enum class FindingKind { MissingInput, MultipleWriters, UnusedOutput, UnusedAttribute };
enum class Severity { Error, Warning };

inline std::string to_string(FindingKind k) {
	switch (k) {
	case FindingKind::MissingInput: return "MissingInput";
	case FindingKind::MultipleWriters: return "MultipleWriters";
	case FindingKind::UnusedOutput: return "UnusedOutput";
	case FindingKind::UnusedAttribute: return "UnusedAttribute";
	}
	return "MissingInput";
}

inline std::string to_string(Severity s) { return s == Severity::Error ? "error" : "warning"; }

struct Finding {
	FindingKind kind = FindingKind::MissingInput;
	int configuration = 0; ///< 0 for model-wide checks
	std::string subject;   ///< Component::attribute
	std::vector<int> involved;
	Severity severity = Severity::Error;
	std::string message;
	std::vector<int> configurations; ///< every configuration the finding occurs in
};

struct ValidationReport {
	std::string model_ref;
	std::size_t configurations = 0;
	std::vector<Finding> findings;

	std::string verdict() const {
		bool warn = false;
		for (const auto &f : findings) {
			if (f.severity == Severity::Error)
				return "errors";
			warn = true;
		}
		return warn ? "warnings" : "pass";
	}
	std::size_t count(Severity s) const {
		return static_cast<std::size_t>(
		    std::count_if(findings.begin(), findings.end(), [&](const auto &f) { return f.severity == s; }));
	}
};

namespace detail {

inline double count_configs(const IrmModel &m, int node) {
	const auto *d = m.decomposition_of(node);
	if (!d)
		return 1;
	double n = d->kind == DecompKind::And ? 1 : 0;
	for (int c : d->children)
		n = d->kind == DecompKind::And ? n * count_configs(m, c) : n + count_configs(m, c);
	return n;
}

inline std::vector<std::vector<int>> product(const std::vector<std::vector<int>> &acc,
                                             const std::vector<std::vector<int>> &next) {
	std::vector<std::vector<int>> out;
	out.reserve(acc.size() * next.size());
	for (const auto &a : acc)
		for (const auto &b : next) {
			auto x = a;
			x.insert(x.end(), b.begin(), b.end());
			out.push_back(std::move(x));
		}
	return out;
}

inline std::vector<std::vector<int>> configs_of(const IrmModel &m, int node) {
	const auto *d = m.decomposition_of(node);
	if (!d)
		return {{node}};
	std::vector<std::vector<int>> out;
	if (d->kind == DecompKind::And) {
		out = {{node}};
		for (int c : d->children)
			out = product(out, configs_of(m, c));
	} else {
		for (int c : d->children)
			for (auto &sub : configs_of(m, c)) {
				sub.insert(sub.begin(), node);
				out.push_back(std::move(sub));
			}
	}
	return out;
}

} // namespace detail

/// Cartesian product of OR choices, depth-first in child order; the first
/// OR met is the slowest-varying choice.
inline std::vector<Configuration> enumerate_configurations(const IrmModel &m, std::size_t cap = 10000) {
	auto roots = m.roots();
	double total = 1;
	for (int r : roots)
		total *= detail::count_configs(m, r);
	if (total > static_cast<double>(cap))
		throw ConfigurationExplosion(total, cap);
	std::vector<std::vector<int>> acc{{}};
	for (int r : roots)
		acc = detail::product(acc, detail::configs_of(m, r));
	std::vector<Configuration> out;
	for (auto &sel : acc) {
		std::sort(sel.begin(), sel.end());
		out.push_back({static_cast<int>(out.size()) + 1, std::move(sel)});
	}
	return out;
}

inline std::vector<Finding> check_missing_inputs(const Configuration &cfg, const IrmModel &m) {
	std::set<std::string> produced;
	for (int id : cfg.selected)
		if (const auto *inv = m.find(id))
			for (const auto &p : inv->signature.params)
				if (p.direction == Direction::Out)
					produced.insert(p.ref());
	std::vector<Finding> out;
	for (int id : cfg.selected) {
		const auto *inv = m.find(id);
		if (!inv)
			continue;
		for (const auto &p : inv->signature.params) {
			if (p.direction == Direction::Undecided)
				throw UnresolvedDecision(direction_target(p, inv->key));
			if (p.direction != Direction::In)
				continue;
			if (p.placeholder()) {
				out.push_back({FindingKind::MissingInput, cfg.id, p.ref(), {id}, Severity::Warning,
				               "unnamed input of invariant " + std::to_string(id) + " cannot be checked", {cfg.id}});
				continue;
			}
			if (!produced.count(p.ref()))
				out.push_back({FindingKind::MissingInput, cfg.id, p.ref(), {id}, Severity::Error,
				               "invariant " + std::to_string(id) + " reads " + p.ref() + " but nothing in the configuration writes it",
				               {cfg.id}});
		}
	}
	return out;
}

/// A writer refined by another writer of the same attribute below it is not
/// counted; only the most specific writers compete.
inline std::vector<Finding> check_multiple_writers(const Configuration &cfg, const IrmModel &m) {
	std::map<std::string, std::vector<int>> writers;
	for (int id : cfg.selected)
		if (const auto *inv = m.find(id))
			for (const auto &p : inv->signature.params)
				if (p.direction == Direction::Out && !p.placeholder())
					writers[p.ref()].push_back(id);
	std::vector<Finding> out;
	for (const auto &[ref, ws] : writers) {
		std::vector<int> leaves;
		for (int w : ws)
			if (std::none_of(ws.begin(), ws.end(), [&](int o) { return o != w && m.is_ancestor(w, o); }))
				leaves.push_back(w);
		if (leaves.size() < 2)
			continue;
		std::vector<std::string> names;
		for (int w : ws)
			names.push_back(std::to_string(w));
		out.push_back({FindingKind::MultipleWriters, cfg.id, ref, ws, Severity::Error,
		               ref + " written by invariants " + util::join(names, ", "), {cfg.id}});
	}
	return out;
}

/// UnusedOutput for one configuration.
inline std::vector<Finding> check_unused_outputs(const Configuration &cfg, const IrmModel &m) {
	std::set<std::string> consumed;
	for (int id : cfg.selected)
		if (const auto *inv = m.find(id))
			for (const auto &p : inv->signature.params)
				if (p.direction == Direction::In)
					consumed.insert(p.ref());
	std::vector<Finding> out;
	for (int id : cfg.selected) {
		const auto *inv = m.find(id);
		if (!inv || inv->system_output)
			continue;
		for (const auto &p : inv->signature.params)
			if (p.direction == Direction::Out && !p.placeholder() && !consumed.count(p.ref()))
				out.push_back({FindingKind::UnusedOutput, cfg.id, p.ref(), {id}, Severity::Warning,
				               p.ref() + " written by invariant " + std::to_string(id) + " is never read", {cfg.id}});
	}
	return out;
}

/// UnusedAttribute over the whole model.
inline std::vector<Finding> check_unused_attributes(const IrmModel &m) {
	std::set<std::string> used;
	for (const auto &inv : m.invariants)
		for (const auto &p : inv.signature.params)
			used.insert(p.ref());
	std::vector<Finding> out;
	for (const auto &c : m.catalog.components)
		for (const auto &a : c.attributes) {
			auto ref = c.name + "::" + a.ident;
			if (!used.count(ref))
				out.push_back({FindingKind::UnusedAttribute, 0, ref, {}, Severity::Warning,
				               "attribute " + ref + " appears in no signature", {}});
		}
	return out;
}

/// Every configuration's UnusedOutput findings plus the global unused attributes.
inline std::vector<Finding> check_unused(const IrmModel &m, const std::vector<Configuration> &configs) {
	std::vector<Finding> out;
	for (const auto &c : configs)
		for (auto &f : check_unused_outputs(c, m))
			out.push_back(std::move(f));
	for (auto &f : check_unused_attributes(m))
		out.push_back(std::move(f));
	return out;
}

inline ValidationReport validate(const IrmModel &m, std::size_t cap = 10000) {
	ValidationReport rep;
	rep.model_ref = util::fingerprint(serialize(m));
	auto configs = enumerate_configurations(m, cap);
	rep.configurations = configs.size();
	std::vector<Finding> all;
	for (const auto &c : configs) {
		for (auto &f : check_missing_inputs(c, m))
			all.push_back(std::move(f));
		for (auto &f : check_multiple_writers(c, m))
			all.push_back(std::move(f));
	}
	for (auto &f : check_unused(m, configs))
		all.push_back(std::move(f));

	// dedupe by (kind, subject, involved), keeping the first configuration
	std::map<std::tuple<FindingKind, std::string, std::vector<int>>, std::size_t> seen;
	for (auto &f : all) {
		auto key = std::make_tuple(f.kind, f.subject, f.involved);
		if (auto it = seen.find(key); it != seen.end()) {
			auto &cs = rep.findings[it->second].configurations;
			for (int c : f.configurations)
				if (std::find(cs.begin(), cs.end(), c) == cs.end())
					cs.push_back(c);
			continue;
		}
		seen[key] = rep.findings.size();
		rep.findings.push_back(std::move(f));
	}
	std::stable_sort(rep.findings.begin(), rep.findings.end(), [](const Finding &a, const Finding &b) {
		return std::tie(a.configuration, a.kind, a.subject, a.involved) <
		       std::tie(b.configuration, b.kind, b.subject, b.involved);
	});
	return rep;
}

inline nlohmann::json report_json(const ValidationReport &r) {
	auto fs = nlohmann::json::array();
	for (const auto &f : r.findings)
		fs.push_back({{"kind", to_string(f.kind)},
		              {"configuration", f.configuration},
		              {"configurations", f.configurations},
		              {"subject", f.subject},
		              {"involved", f.involved},
		              {"severity", to_string(f.severity)},
		              {"message", f.message}});
	return {{"model_ref", r.model_ref},
	        {"configurations", r.configurations},
	        {"findings", fs},
	        {"errors", r.count(Severity::Error)},
	        {"warnings", r.count(Severity::Warning)},
	        {"verdict", r.verdict()}};
}

inline std::string report_text(const ValidationReport &r) {
	std::string out = "verdict: " + r.verdict() + "\n";
	out += "configurations: " + std::to_string(r.configurations) + "\n";
	out += "errors: " + std::to_string(r.count(Severity::Error)) + ", warnings: " +
	       std::to_string(r.count(Severity::Warning)) + "\n";
	for (const auto &f : r.findings) {
		out += "  [" + to_string(f.severity) + "] " + to_string(f.kind) + " " + f.subject;
		if (f.configuration)
			out += " (configuration " + std::to_string(f.configuration) + ")";
		out += ": " + f.message + "\n";
	}
	return out;
}

} // namespace irm
