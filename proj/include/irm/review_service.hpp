#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "irm/error.hpp"
#include "irm/journal.hpp"
#include "irm/pipeline.hpp"

namespace irm {

/// One designer session over a state file and its journal.
class Session {
public:
	Session(std::string id, RunConfig cfg) : id_(std::move(id)), cfg_(std::move(cfg)) {
		cfg_.assume_defaults = false;
		refresh();
	}

	const std::string &id() const { return id_; }

	long revision() const {
		std::lock_guard<std::mutex> g(mu_);
		return revision_;
	}

	std::vector<DecisionRequest> pending() const {
		std::lock_guard<std::mutex> g(mu_);
		return pending_;
	}

	nlohmann::json state() const {
		std::lock_guard<std::mutex> g(mu_);
		return load_state(cfg_.state);
	}

	std::optional<nlohmann::json> model() const {
		std::lock_guard<std::mutex> g(mu_);
		if (!outcome_.model)
			return std::nullopt;
		return model_json(*outcome_.model);
	}

	std::optional<nlohmann::json> report() const {
		std::lock_guard<std::mutex> g(mu_);
		if (!outcome_.report)
			return std::nullopt;
		return report_json(*outcome_.report);
	}

	/// Appends the choice to the journal, then re-runs the pipeline. The
	/// decision must be pending, or already journaled (a revert).
	long submit(const std::string &decision_id, const std::string &choice, const std::string &author,
	            long expected_revision) {
		std::lock_guard<std::mutex> g(mu_);
		if (expected_revision != revision_)
			throw RevisionConflict(expected_revision, revision_);
		auto colon = decision_id.find(':');
		if (colon == std::string::npos)
			throw UnknownDecision(decision_id);
		DecisionKind kind;
		try {
			kind = parse_decision_kind(decision_id.substr(0, colon));
		} catch (const SchemaViolation &) {
			throw UnknownDecision(decision_id);
		}
		auto target = decision_id.substr(colon + 1);
		auto journal = DecisionJournal::load(cfg_.journal_path());
		const DecisionRequest *req = nullptr;
		for (const auto &r : pending_)
			if (r.id() == decision_id)
				req = &r;
		if (!req && !journal.choice(kind, target))
			throw UnknownDecision(decision_id);
		if (req && !req->options.empty() &&
		    std::find(req->options.begin(), req->options.end(), choice) == req->options.end())
			throw InputError("choice '" + choice + "' is not one of the options for '" + decision_id + "'");
		if (choice.empty())
			throw InputError("empty choice");
		JournalEntry e;
		e.kind = kind;
		e.target = target;
		e.choice = choice;
		e.author = author.empty() ? "designer" : author;
		journal.append(cfg_.journal_path(), std::move(e));
		++revision_;
		refresh_locked();
		return revision_;
	}

	/// Recomputes from the journal on disk; also what a restart does.
	void refresh() {
		std::lock_guard<std::mutex> g(mu_);
		refresh_locked();
	}

	std::string status() const {
		std::lock_guard<std::mutex> g(mu_);
		if (outcome_.model && outcome_.status != "blocked")
			return "model ready";
		return outcome_.status + (outcome_.message.empty() ? "" : ": " + outcome_.message);
	}

private:
	void refresh_locked() {
		try {
			outcome_ = run_all(cfg_);
		} catch (const UnresolvedDecision &e) {
			outcome_ = {};
			outcome_.status = "blocked";
			outcome_.message = e.what();
		}
		pending_.clear();
		auto journal = DecisionJournal::load(cfg_.journal_path());
		for (const auto &r : outcome_.requests)
			if (!journal.choice(r.kind, r.target))
				pending_.push_back(r);
	}

	std::string id_;
	RunConfig cfg_;
	mutable std::mutex mu_;
	long revision_ = 0;
	StageOutcome outcome_;
	std::vector<DecisionRequest> pending_;
};

/// REST front end. All payloads are the on-disk JSON shapes.
class ReviewService {
public:
	Session &open(const std::string &id, const RunConfig &cfg) {
		std::lock_guard<std::mutex> g(mu_);
		auto s = std::make_unique<Session>(id, cfg);
		auto &ref = *s;
		sessions_[id] = std::move(s);
		return ref;
	}

	Session &session(const std::string &id) {
		std::lock_guard<std::mutex> g(mu_);
		auto it = sessions_.find(id);
		if (it == sessions_.end())
			throw UnknownSession(id);
		return *it->second;
	}

	nlohmann::json list_decisions(const std::string &id) {
		auto &s = session(id);
		auto a = nlohmann::json::array();
		for (const auto &r : s.pending())
			a.push_back(request_json(r));
		return {{"revision", s.revision()}, {"status", s.status()}, {"decisions", a}};
	}

	nlohmann::json submit_decision(const std::string &id, const std::string &decision_id, const std::string &choice,
	                               const std::string &author, long expected_revision) {
		auto &s = session(id);
		s.submit(decision_id, choice, author, expected_revision);
		return list_decisions(id);
	}

	httplib::Server &server() {
		if (!routed_)
			route();
		return server_;
	}

	/// Binds to 127.0.0.1; port 0 picks a free one. Returns the port.
	int bind(int port) {
		auto &srv = server();
		if (port == 0)
			return srv.bind_to_any_port("127.0.0.1");
		if (!srv.bind_to_port("127.0.0.1", port))
			throw InputError("cannot bind 127.0.0.1:" + std::to_string(port));
		return port;
	}
	bool listen_after_bind() { return server_.listen_after_bind(); }
	void stop() { server_.stop(); }

private:
	static void reply(httplib::Response &res, int status, const nlohmann::json &body) {
		res.status = status;
		res.set_content(body.dump(2) + "\n", "application/json");
	}

	template <class F> void guarded(httplib::Response &res, F &&f) {
		try {
			f();
		} catch (const UnknownSession &e) {
			reply(res, 404, {{"error", e.code()}, {"message", e.what()}});
		} catch (const UnknownDecision &e) {
			reply(res, 404, {{"error", e.code()}, {"message", e.what()}});
		} catch (const RevisionConflict &e) {
			reply(res, 409, {{"error", e.code()}, {"message", e.what()}});
		} catch (const InputError &e) {
			reply(res, 400, {{"error", e.code()}, {"message", e.what()}});
		} catch (const Error &e) {
			reply(res, 500, {{"error", e.code()}, {"message", e.what()}});
		} catch (const nlohmann::json::exception &e) {
			reply(res, 400, {{"error", "BadRequest"}, {"message", e.what()}});
		}
	}

	void route() {
		routed_ = true;
		const std::string base = R"(/api/sessions/([^/]+))";
		server_.Get(base + "/state", [this](const httplib::Request &req, httplib::Response &res) {
			guarded(res, [&] { reply(res, 200, session(req.matches[1]).state()); });
		});
		server_.Get(base + "/decisions", [this](const httplib::Request &req, httplib::Response &res) {
			guarded(res, [&] { reply(res, 200, list_decisions(req.matches[1])); });
		});
		server_.Post(base + "/decisions/(.+)", [this](const httplib::Request &req, httplib::Response &res) {
			guarded(res, [&] {
				auto body = nlohmann::json::parse(req.body);
				if (!body.is_object() || !body.contains("choice") || !body.contains("expected_revision"))
					throw InputError("body needs choice and expected_revision");
				reply(res, 200,
				      submit_decision(req.matches[1], req.matches[2], body.at("choice").get<std::string>(),
				                      body.value("author", std::string("designer")),
				                      body.at("expected_revision").get<long>()));
			});
		});
		server_.Get(base + "/model", [this](const httplib::Request &req, httplib::Response &res) {
			guarded(res, [&] {
				auto m = session(req.matches[1]).model();
				if (!m)
					reply(res, 404, {{"error", "NoModel"}, {"message", "model not assembled yet"}});
				else
					reply(res, 200, *m);
			});
		});
		server_.Get(base + "/report", [this](const httplib::Request &req, httplib::Response &res) {
			guarded(res, [&] {
				auto r = session(req.matches[1]).report();
				if (!r)
					reply(res, 404, {{"error", "NoReport"}, {"message", "model not validated yet"}});
				else
					reply(res, 200, *r);
			});
		});
		server_.Get(base + "/revision", [this](const httplib::Request &req, httplib::Response &res) {
			guarded(res, [&] { reply(res, 200, {{"revision", session(req.matches[1]).revision()}}); });
		});
	}

	std::mutex mu_;
	std::map<std::string, std::unique_ptr<Session>> sessions_;
	httplib::Server server_;
	bool routed_ = false;
};

} // namespace irm
