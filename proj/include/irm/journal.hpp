#pragma once

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "irm/error.hpp"
#include "irm/util.hpp"

namespace irm {

enum class DecisionKind { AliasMerge, Owner, Direction, TypeOverride, Composition };

inline std::string to_string(DecisionKind k) {
	switch (k) {
	case DecisionKind::AliasMerge: return "alias_merge";
	case DecisionKind::Owner: return "owner";
	case DecisionKind::Direction: return "direction";
	case DecisionKind::TypeOverride: return "type_override";
	case DecisionKind::Composition: return "composition";
	}
	return "alias_merge";
}

inline DecisionKind parse_decision_kind(std::string_view s) {
	for (auto k : {DecisionKind::AliasMerge, DecisionKind::Owner, DecisionKind::Direction, DecisionKind::TypeOverride,
	               DecisionKind::Composition})
		if (to_string(k) == s)
			return k;
	throw SchemaViolation("kind", "unknown decision kind '" + std::string(s) + "'");
}

/// A point where the pipeline wants a human choice. `id` is "<kind>:<target>".
struct DecisionRequest {
	DecisionKind kind = DecisionKind::AliasMerge;
	std::string target;
	std::string suggestion;
	std::vector<std::string> options;
	std::string stage;
	bool blocking = true;
	nlohmann::json evidence = nlohmann::json::object();
	std::string excerpt;

	std::string id() const { return to_string(kind) + ":" + target; }
};

inline nlohmann::json request_json(const DecisionRequest &r) {
	return {{"id", r.id()},
	        {"kind", to_string(r.kind)},
	        {"target", r.target},
	        {"suggestion", r.suggestion},
	        {"options", r.options},
	        {"stage", r.stage},
	        {"blocking", r.blocking},
	        {"evidence", r.evidence},
	        {"excerpt", r.excerpt}};
}

struct JournalEntry {
	std::string decision_id;
	DecisionKind kind = DecisionKind::AliasMerge;
	std::string target;
	std::string choice;
	std::string author;
	std::string timestamp;
};

inline nlohmann::json entry_json(const JournalEntry &e) {
	return {{"decision_id", e.decision_id}, {"kind", to_string(e.kind)}, {"target", e.target},
	        {"choice", e.choice},           {"author", e.author},        {"timestamp", e.timestamp}};
}

inline std::string utc_now() {
	auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
	std::tm tm{};
	gmtime_r(&t, &tm);
	char buf[32];
	std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
	return buf;
}

/// Append-only decision log. A later entry for the same (kind, target)
/// supersedes earlier ones; nothing is ever rewritten.
class DecisionJournal {
public:
	static DecisionJournal parse(std::string_view text) {
		DecisionJournal j;
		std::size_t line_no = 0;
		for (const auto &raw : util::split(text, '\n')) {
			++line_no;
			auto line = util::trim(raw);
			if (line.empty())
				continue;
			nlohmann::json v;
			try {
				v = nlohmann::json::parse(line);
			} catch (const nlohmann::json::exception &ex) {
				throw SchemaViolation("journal line " + std::to_string(line_no), ex.what());
			}
			JournalEntry e;
			auto field = [&](const char *k) {
				if (!v.contains(k) || !v[k].is_string())
					throw SchemaViolation("journal line " + std::to_string(line_no) + "/" + k, "missing or not a string");
				return v[k].get<std::string>();
			};
			e.decision_id = field("decision_id");
			e.kind = parse_decision_kind(field("kind"));
			e.target = field("target");
			e.choice = field("choice");
			e.author = v.value("author", "");
			e.timestamp = v.value("timestamp", "");
			j.push(std::move(e));
		}
		return j;
	}

	/// Missing file reads as an empty journal.
	static DecisionJournal load(const std::string &path) {
		std::ifstream in(path);
		if (!in)
			return {};
		return parse(util::read_file(path));
	}

	const std::vector<JournalEntry> &entries() const { return entries_; }
	std::size_t size() const { return entries_.size(); }

	std::optional<std::string> choice(DecisionKind kind, std::string_view target) const {
		auto it = latest_.find({kind, std::string(target)});
		if (it == latest_.end())
			return std::nullopt;
		return entries_[it->second].choice;
	}

	/// Effective (non-superseded) entries of one kind, keyed by target.
	std::map<std::string, std::string> effective(DecisionKind kind) const {
		std::map<std::string, std::string> out;
		for (const auto &[key, idx] : latest_)
			if (key.first == kind)
				out[key.second] = entries_[idx].choice;
		return out;
	}

	/// First unused d-NNNN at or after size()+1; ids need not be contiguous.
	std::string next_id() const {
		char buf[32];
		for (std::size_t n = entries_.size() + 1;; ++n) {
			std::snprintf(buf, sizeof buf, "d-%04zu", n);
			if (!ids_.count(buf))
				return buf;
		}
	}

	/// Adds an entry in memory, filling id and timestamp when empty.
	const JournalEntry &push(JournalEntry e) {
		if (e.decision_id.empty())
			e.decision_id = next_id();
		if (e.timestamp.empty())
			e.timestamp = utc_now();
		if (auto it = ids_.find(e.decision_id); it != ids_.end()) {
			const auto &old = entries_[it->second];
			if (old.kind != e.kind || old.target != e.target || old.choice != e.choice)
				throw ConflictingDecisions(e.target);
			return old; // exact replay of a known entry
		}
		ids_[e.decision_id] = entries_.size();
		latest_[{e.kind, e.target}] = entries_.size();
		entries_.push_back(std::move(e));
		return entries_.back();
	}

	/// Appends to the file first, then to memory; the file is the source of truth.
	const JournalEntry &append(const std::string &path, JournalEntry e) {
		if (e.decision_id.empty())
			e.decision_id = next_id();
		if (e.timestamp.empty())
			e.timestamp = utc_now();
		std::ofstream out(path, std::ios::app | std::ios::binary);
		if (!out)
			throw InputError("cannot append to journal '" + path + "'");
		out << entry_json(e).dump() << '\n';
		out.flush();
		if (!out)
			throw InputError("write to journal '" + path + "' failed");
		return push(std::move(e));
	}

	std::string to_jsonl() const {
		std::string out;
		for (const auto &e : entries_)
			out += entry_json(e).dump() + "\n";
		return out;
	}

	/// Fingerprint of the effective decisions; authors and timestamps do not count.
	std::string digest() const {
		std::string acc;
		for (const auto &[key, idx] : latest_)
			acc += to_string(key.first) + "\x1f" + key.second + "\x1f" + entries_[idx].choice + "\n";
		return util::fingerprint(acc);
	}

private:
	std::vector<JournalEntry> entries_;
	std::map<std::pair<DecisionKind, std::string>, std::size_t> latest_;
	std::map<std::string, std::size_t> ids_;
};

} // namespace irm
