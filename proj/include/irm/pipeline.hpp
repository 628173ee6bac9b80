#pragma once

#include <array>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <fcntl.h>
#include <unistd.h>

#include "json.hpp"

#include "irm/classification.hpp"
#include "irm/document.hpp"
#include "irm/entity_extraction.hpp"
#include "irm/error.hpp"
#include "irm/irm_model.hpp"
#include "irm/journal.hpp"
#include "irm/knowledge_flow.hpp"
#include "irm/lexicon.hpp"
#include "irm/validation.hpp"

namespace irm {

enum class Stage { Segment, Extract, Classify, Flow, Compose, Validate };

inline constexpr std::array<Stage, 6> all_stages{Stage::Segment, Stage::Extract, Stage::Classify,
                                                 Stage::Flow,    Stage::Compose, Stage::Validate};

inline std::string to_string(Stage s) {
	switch (s) {
	case Stage::Segment: return "segment";
	case Stage::Extract: return "extract";
	case Stage::Classify: return "classify";
	case Stage::Flow: return "flow";
	case Stage::Compose: return "compose";
	case Stage::Validate: return "validate";
	}
	return "segment";
}

inline Stage parse_stage(std::string_view s) {
	for (auto st : all_stages)
		if (to_string(st) == s)
			return st;
	throw InputError("unknown stage '" + std::string(s) + "'");
}

enum ExitCode { ExitOk = 0, ExitPending = 2, ExitValidation = 3, ExitInput = 4 };

struct RunConfig {
	std::string input;
	std::string conllu; ///< optional gold parses; shallow parser otherwise
	std::string state = "irm-state.json";
	std::string journal; ///< defaults to decisions.jsonl next to the state file
	std::string lexicon; ///< synset graph; bundled when empty
	std::string seeds;   ///< seed verb file; built-in lists when empty
	double threshold = 0.84;
	Measure measure = Measure::Wup;
	std::size_t cap = 10000;
	bool force = false;
	bool assume_defaults = false;

	std::string journal_path() const {
		if (!journal.empty())
			return journal;
		auto dir = std::filesystem::path(state).parent_path();
		return (dir / "decisions.jsonl").string();
	}
	void check() const {
		if (!(threshold >= 0.0 && threshold <= 1.0))
			throw InputError("threshold must lie in [0,1]");
		if (cap < 1)
			throw InputError("cap must be at least 1");
	}
	/// State file location when no --state is given.
	static std::string default_state() {
		const char *env = std::getenv("IRM_STATE_DIR");
		if (env && *env)
			return (std::filesystem::path(env) / "irm-state.json").string();
		return "irm-state.json";
	}
};

/// Everything one pass through the stages produced, in memory.
struct PipelineRun {
	RequirementsDocument doc;
	ExtractionResult extraction;
	std::vector<ClassifiedRequirement> requirements;
	std::vector<DecisionRequest> classify_requests;
	FlowResult flow;
	AssembleResult assembly;
	std::optional<ValidationReport> report;
	std::map<Stage, std::string> keys;
	std::map<Stage, nlohmann::json> outputs;
	std::optional<Stage> blocked_at;
	std::string blocked_reason;
	Stage reached = Stage::Segment;

	std::vector<DecisionRequest> requests() const {
		std::vector<DecisionRequest> out = extraction.requests;
		out.insert(out.end(), classify_requests.begin(), classify_requests.end());
		out.insert(out.end(), flow.requests.begin(), flow.requests.end());
		out.insert(out.end(), assembly.requests.begin(), assembly.requests.end());
		return out;
	}
	std::vector<DecisionRequest> requests_of(Stage s) const {
		switch (s) {
		case Stage::Extract: return extraction.requests;
		case Stage::Classify: return classify_requests;
		case Stage::Flow: return flow.requests;
		case Stage::Compose: return assembly.requests;
		default: return {};
		}
	}
};

namespace detail {

inline std::string decisions_of(const DecisionJournal &j, std::initializer_list<DecisionKind> kinds) {
	std::string acc;
	for (auto k : kinds)
		for (const auto &[t, c] : j.effective(k))
			acc += to_string(k) + "\x1f" + t + "\x1f" + c + "\n";
	return acc;
}

inline std::string key(const std::string &upstream, const std::string &own) {
	return util::fingerprint(upstream + "\x1e" + own);
}

inline bool stage_blocked(const std::vector<DecisionRequest> &rs) {
	return std::any_of(rs.begin(), rs.end(), [](const auto &r) { return r.blocking; });
}

inline nlohmann::json requests_json(const std::vector<DecisionRequest> &rs) {
	auto a = nlohmann::json::array();
	for (const auto &r : rs)
		a.push_back(request_json(r));
	return a;
}

} // namespace detail

/// Runs the stages up to `upto` against a journal. Stops early at the first
/// stage that blocks on a decision.
inline PipelineRun compute(const RunConfig &cfg, const DecisionJournal &journal, Stage upto = Stage::Validate) {
	cfg.check();
	PipelineRun run;
	auto reach = [&](Stage s) {
		run.reached = s;
		return static_cast<int>(s) <= static_cast<int>(upto);
	};

	// segment
	reach(Stage::Segment);
	auto text = util::read_file(cfg.input);
	std::string conllu = cfg.conllu.empty() ? std::string() : util::read_file(cfg.conllu);
	run.doc = segment_document(text);
	if (conllu.empty())
		parse_document(run.doc);
	else
		attach_conllu(run.doc, ingest_conllu(conllu));
	run.keys[Stage::Segment] = detail::key(text, conllu.empty() ? "shallow" : conllu);
	run.outputs[Stage::Segment] = {{"document", document_json(run.doc)}};
	if (!reach(Stage::Extract))
		return run;

	// extract
	MetricConfig mc;
	mc.threshold = cfg.threshold;
	run.extraction = extract_entities(run.doc, journal, mc);
	run.keys[Stage::Extract] =
	    detail::key(run.keys[Stage::Segment], std::to_string(cfg.threshold) + "\x1f" +
	                                              detail::decisions_of(journal, {DecisionKind::AliasMerge, DecisionKind::Owner}));
	{
		nlohmann::json o{{"candidates", candidates_json(run.extraction.candidates)}};
		auto cl = nlohmann::json::array();
		for (const auto &c : run.extraction.clusters)
			cl.push_back(cluster_json(c));
		o["clusters"] = cl;
		if (run.extraction.catalog) {
			o["catalog"] = catalog_json(*run.extraction.catalog);
			o["dropped"] = dropped_json(*run.extraction.catalog);
		}
		o["requests"] = detail::requests_json(run.extraction.requests);
		run.outputs[Stage::Extract] = o;
	}
	if (!run.extraction.catalog) {
		run.blocked_at = Stage::Extract;
		run.blocked_reason = "component ownership undecided";
		return run;
	}
	const auto &catalog = *run.extraction.catalog;
	if (!reach(Stage::Classify))
		return run;

	// classify
	ClassifierConfig cc;
	std::string lex_text = cfg.lexicon.empty() ? "bundled" : util::read_file(cfg.lexicon);
	std::optional<SynsetGraph> graph;
	if (cfg.lexicon.empty())
		cc.graph = &ClassifierConfig::bundled_graph();
	else {
		graph = SynsetGraph::parse(lex_text, cfg.lexicon);
		cc.graph = &*graph;
	}
	std::string seed_text = cfg.seeds.empty() ? "default" : util::read_file(cfg.seeds);
	if (!cfg.seeds.empty())
		cc.seeds = SeedSets::parse(seed_text, cfg.seeds);
	cc.measure = cfg.measure;
	cc.comparators = ComparatorTable::bundled();
	run.requirements = classify_all(run.doc, catalog, cc, &journal);
	run.classify_requests = classification_requests(run.requirements);
	run.keys[Stage::Classify] =
	    detail::key(run.keys[Stage::Extract], lex_text + "\x1f" + seed_text + "\x1f" + to_string(cfg.measure) + "\x1f" +
	                                              detail::decisions_of(journal, {DecisionKind::TypeOverride}));
	{
		auto a = nlohmann::json::array();
		for (const auto &r : run.requirements)
			a.push_back(classification_json(r));
		run.outputs[Stage::Classify] = {{"requirements", a},
		                                {"requests", detail::requests_json(run.classify_requests)}};
	}
	if (detail::stage_blocked(run.classify_requests)) {
		run.blocked_at = Stage::Classify;
		run.blocked_reason = "requirement type undecided";
		return run;
	}
	if (!reach(Stage::Flow))
		return run;

	// flow
	std::vector<FlowSignature> sigs;
	std::map<std::string, std::string> excerpts;
	for (const auto &r : run.requirements) {
		auto s = collect_params(r, run.doc, catalog);
		add_placeholders(s, r, run.doc, catalog);
		sigs.push_back(std::move(s));
		excerpts[r.record_id] = r.text;
	}
	run.flow = infer_directions(std::move(sigs), journal, excerpts);
	run.keys[Stage::Flow] =
	    detail::key(run.keys[Stage::Classify], detail::decisions_of(journal, {DecisionKind::Direction}));
	{
		auto a = nlohmann::json::array();
		for (const auto &s : run.flow.signatures)
			a.push_back(signature_json(s));
		run.outputs[Stage::Flow] = {{"signatures", a}, {"requests", detail::requests_json(run.flow.requests)}};
	}
	if (run.flow.blocked()) {
		run.blocked_at = Stage::Flow;
		run.blocked_reason = "parameter directions undecided";
		return run;
	}
	if (!reach(Stage::Compose))
		return run;

	// compose
	run.keys[Stage::Compose] =
	    detail::key(run.keys[Stage::Flow], detail::decisions_of(journal, {DecisionKind::Composition}));
	try {
		run.assembly = assemble(run.doc, run.requirements, run.flow.signatures, catalog, journal);
	} catch (const UnresolvedProposal &e) {
		run.outputs[Stage::Compose] = {{"error", e.what()}, {"requests", nlohmann::json::array()}};
		run.blocked_at = Stage::Compose;
		run.blocked_reason = e.what();
		return run;
	}
	{
		nlohmann::json o{{"requests", detail::requests_json(run.assembly.requests)},
		                 {"notes", run.assembly.report.notes},
		                 {"duplication", run.assembly.report.duplication}};
		o["model"] = run.assembly.model ? model_json(*run.assembly.model) : nlohmann::json(nullptr);
		run.outputs[Stage::Compose] = o;
	}
	if (!run.assembly.model) {
		run.blocked_at = Stage::Compose;
		run.blocked_reason = "composition undecided";
		return run;
	}
	if (!reach(Stage::Validate))
		return run;

	// validate
	run.report = validate(*run.assembly.model, cfg.cap);
	run.keys[Stage::Validate] = detail::key(run.keys[Stage::Compose], std::to_string(cfg.cap));
	run.outputs[Stage::Validate] = {{"report", report_json(*run.report)}};
	return run;
}

/// Adds the suggested choice of every open request to an in-memory copy of
/// the journal, one stage at a time, until nothing is left to accept. The
/// file is not touched.
inline DecisionJournal overlay_defaults(const RunConfig &cfg, DecisionJournal journal, Stage upto = Stage::Validate) {
	for (int round = 0; round < 32; ++round) {
		auto run = compute(cfg, journal, upto);
		bool added = false;
		// earliest stage first: later requests may rest on names that are about to change
		std::vector<DecisionRequest> open;
		for (auto s : all_stages) {
			for (const auto &r : run.requests_of(s))
				if (!r.suggestion.empty() && !journal.choice(r.kind, r.target))
					open.push_back(r);
			if (!open.empty())
				break;
		}
		for (const auto &r : open) {
			if (r.suggestion.empty() || journal.choice(r.kind, r.target))
				continue;
			JournalEntry e;
			e.kind = r.kind;
			e.target = r.target;
			e.choice = r.suggestion;
			e.author = "assume-defaults";
			e.timestamp = "1970-01-01T00:00:00Z";
			journal.push(std::move(e));
			added = true;
		}
		if (!added)
			break;
	}
	return journal;
}

// ---- state file ------------------------------------------------------------

/// Advisory lock next to the state file; released on destruction.
class StateLock {
public:
	explicit StateLock(const std::string &state) : path_(state + ".lock") {
		if (auto dir = std::filesystem::path(state).parent_path(); !dir.empty()) {
			std::error_code ec;
			std::filesystem::create_directories(dir, ec);
		}
		fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
		if (fd_ < 0)
			throw InputError(errno == EEXIST ? "state '" + state + "' is locked by another process (" + path_ + ")"
			                                 : "cannot create lock file '" + path_ + "'");
		auto pid = std::to_string(::getpid()) + "\n";
		if (::write(fd_, pid.data(), pid.size()) < 0) {
			// the pid is informational only
		}
	}
	~StateLock() {
		if (fd_ >= 0) {
			::close(fd_);
			::unlink(path_.c_str());
		}
	}
	StateLock(const StateLock &) = delete;
	StateLock &operator=(const StateLock &) = delete;

private:
	std::string path_;
	int fd_ = -1;
};

inline nlohmann::json load_state(const std::string &path) {
	std::ifstream in(path);
	if (!in)
		return {{"schema_version", 1}, {"stages", nlohmann::json::object()}};
	try {
		auto j = nlohmann::json::parse(util::read_file(path));
		if (!j.is_object() || j.value("schema_version", 0) != 1 || !j.contains("stages") || !j["stages"].is_object())
			throw SchemaViolation(path, "not a pipeline state file");
		return j;
	} catch (const nlohmann::json::exception &e) {
		throw SchemaViolation(path, e.what());
	}
}

inline void save_state(const std::string &path, const nlohmann::json &state) {
	auto dir = std::filesystem::path(path).parent_path();
	if (!dir.empty())
		std::filesystem::create_directories(dir);
	auto tmp = path + ".tmp";
	{
		std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
		if (!out)
			throw InputError("cannot write state '" + path + "'");
		out << state.dump(2) << '\n';
		if (!out)
			throw InputError("write to state '" + path + "' failed");
	}
	std::filesystem::rename(tmp, path);
}

inline nlohmann::json config_json(const RunConfig &c) {
	return {{"input", c.input},
	        {"conllu", c.conllu},
	        {"journal", c.journal_path()},
	        {"lexicon", c.lexicon},
	        {"seeds", c.seeds},
	        {"threshold", c.threshold},
	        {"measure", to_string(c.measure)},
	        {"cap", c.cap},
	        {"assume_defaults", c.assume_defaults}};
}

struct StageOutcome {
	Stage stage = Stage::Segment;
	int exit_code = ExitOk;
	std::string status; ///< ok, unchanged, blocked, errors
	std::vector<DecisionRequest> requests;
	std::optional<ValidationReport> report;
	std::optional<IrmModel> model;
	std::optional<ComponentCatalog> catalog;
	std::string message;
};

inline int exit_code_for(const PipelineRun &run, Stage s) {
	if (run.blocked_at && *run.blocked_at == s)
		return ExitPending;
	if (s == Stage::Validate && run.report && run.report->verdict() == "errors")
		return ExitValidation;
	return ExitOk;
}

namespace detail {

inline void record_stage(nlohmann::json &state, const PipelineRun &run, Stage s) {
	auto &slot = state["stages"][to_string(s)];
	slot = {{"key", run.keys.at(s)}, {"output", run.outputs.at(s)}};
	slot["status"] = run.blocked_at && *run.blocked_at == s ? "blocked"
	                 : exit_code_for(run, s) == ExitValidation ? "errors"
	                                                           : "ok";
}

/// Drops stage entries whose key no longer matches this run.
inline void drop_stale(nlohmann::json &state, const PipelineRun &run) {
	for (auto s : all_stages) {
		auto name = to_string(s);
		if (!state["stages"].contains(name))
			continue;
		auto it = run.keys.find(s);
		if (it == run.keys.end() || state["stages"][name].value("key", "") != it->second)
			state["stages"].erase(name);
	}
}

} // namespace detail

/// Runs one stage and records it in the state file. Upstream stages must be
/// recorded and fresh unless `force` is set, in which case they are
/// refreshed too.
inline StageOutcome run_stage(Stage stage, const RunConfig &cfg) {
	StateLock lock(cfg.state);
	auto journal = DecisionJournal::load(cfg.journal_path());
	if (cfg.assume_defaults)
		journal = overlay_defaults(cfg, std::move(journal), stage);
	auto run = compute(cfg, journal, stage);
	auto state = load_state(cfg.state);

	StageOutcome out;
	out.stage = stage;
	const bool reached = run.keys.count(stage) > 0;
	for (auto s : all_stages) {
		if (s == stage)
			break;
		if (!run.keys.count(s))
			break;
		auto name = to_string(s);
		bool fresh = state["stages"].contains(name) && state["stages"][name].value("key", "") == run.keys.at(s);
		if (!fresh && !cfg.force)
			throw StaleUpstream(name);
		if (!fresh)
			detail::record_stage(state, run, s);
	}
	if (!reached) {
		// an upstream stage blocked first
		out.stage = *run.blocked_at;
		out.exit_code = ExitPending;
		out.status = "blocked";
		out.requests = run.requests_of(*run.blocked_at);
		out.message = "blocked at " + to_string(*run.blocked_at) + ": " + run.blocked_reason;
		return out;
	}
	auto name = to_string(stage);
	bool unchanged = state["stages"].contains(name) && state["stages"][name].value("key", "") == run.keys.at(stage) &&
	                 state["stages"][name]["output"] == run.outputs.at(stage);
	state["config"] = config_json(cfg);
	state["document"] = {{"path", cfg.input}, {"key", run.keys.at(Stage::Segment)}};
	detail::record_stage(state, run, stage);
	detail::drop_stale(state, run);
	// downstream stages computed from other keys are gone now; nothing else to do
	if (!unchanged)
		save_state(cfg.state, state);

	out.exit_code = exit_code_for(run, stage);
	out.status = out.exit_code == ExitPending ? "blocked" : out.exit_code == ExitValidation ? "errors"
	                                                     : unchanged                        ? "unchanged"
	                                                                                        : "ok";
	out.requests = run.requests_of(stage);
	out.report = run.report;
	out.model = run.assembly.model;
	out.catalog = run.extraction.catalog;
	if (run.blocked_at)
		out.message = run.blocked_reason;
	return out;
}

/// All stages in order, stopping at the first that blocks.
inline StageOutcome run_all(const RunConfig &cfg) {
	StateLock lock(cfg.state);
	auto journal = DecisionJournal::load(cfg.journal_path());
	if (cfg.assume_defaults)
		journal = overlay_defaults(cfg, std::move(journal));
	auto run = compute(cfg, journal);
	auto state = load_state(cfg.state);
	auto before = state;
	state["config"] = config_json(cfg);
	state["document"] = {{"path", cfg.input}, {"key", run.keys.at(Stage::Segment)}};
	for (auto s : all_stages)
		if (run.keys.count(s) && run.outputs.count(s))
			detail::record_stage(state, run, s);
	detail::drop_stale(state, run);
	if (state != before)
		save_state(cfg.state, state);

	StageOutcome out;
	out.report = run.report;
	out.model = run.assembly.model;
	out.catalog = run.extraction.catalog;
	if (run.blocked_at) {
		out.stage = *run.blocked_at;
		out.exit_code = ExitPending;
		out.status = "blocked";
		out.requests = run.requests(); // non-blocking requests of earlier stages too
		out.message = "blocked at " + to_string(*run.blocked_at) + ": " + run.blocked_reason;
		return out;
	}
	out.stage = Stage::Validate;
	out.exit_code = exit_code_for(run, Stage::Validate);
	out.status = out.exit_code == ExitValidation ? "errors" : "ok";
	out.requests = run.requests();
	return out;
}

inline nlohmann::json outcome_json(const StageOutcome &o) {
	nlohmann::json j{{"stage", to_string(o.stage)},
	                 {"status", o.status},
	                 {"exit_code", o.exit_code},
	                 {"requests", detail::requests_json(o.requests)}};
	if (!o.message.empty())
		j["message"] = o.message;
	if (o.report)
		j["report"] = report_json(*o.report);
	return j;
}

} // namespace irm
