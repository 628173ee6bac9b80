#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "irm/review_service.hpp"
#include "support.hpp"

using namespace irm;

namespace {

// service on a free port, torn down with the fixture
class Served : public ::testing::Test {
protected:
	test::TempDir dir;
	RunConfig cfg;
	std::unique_ptr<ReviewService> svc;
	std::thread loop;
	int port = 0;

	void start(bool gold_journal) {
		cfg = test::gold_config(dir.str());
		cfg.journal = dir / "decisions.jsonl";
		if (gold_journal)
			test::write_text(cfg.journal, util::read_file(test::fixture("ecar.gold-journal.jsonl")));
		svc = std::make_unique<ReviewService>();
		svc->open("s1", cfg);
		port = svc->bind(0);
		loop = std::thread([this] { svc->listen_after_bind(); });
		svc->server().wait_until_ready();
	}
	void TearDown() override {
		if (svc)
			svc->stop();
		if (loop.joinable())
			loop.join();
	}

	httplib::Client client() const { return httplib::Client("127.0.0.1", port); }

	nlohmann::json get(const std::string &path, int want = 200) {
		auto c = client();
		auto res = c.Get(path);
		EXPECT_TRUE(res) << path;
		if (!res)
			return {};
		EXPECT_EQ(res->status, want) << path << "\n" << res->body;
		return nlohmann::json::parse(res->body);
	}

	std::pair<int, nlohmann::json> post(const std::string &did, const std::string &choice, long rev,
	                                    const std::string &session = "s1") {
		auto c = client();
		nlohmann::json body{{"choice", choice}, {"author", "tester"}, {"expected_revision", rev}};
		auto res = c.Post("/api/sessions/" + session + "/decisions/" + did, body.dump(), "application/json");
		EXPECT_TRUE(res);
		if (!res)
			return {-1, {}};
		return {res->status, nlohmann::json::parse(res->body)};
	}

	std::set<std::string> components() {
		auto state = get("/api/sessions/s1/state");
		std::set<std::string> out;
		for (const auto &c : state["stages"]["extract"]["output"]["catalog"]["components"])
			out.insert(c["name"].get<std::string>());
		return out;
	}

	std::size_t journal_lines() const {
		if (!std::filesystem::exists(cfg.journal))
			return 0;
		auto t = util::read_file(cfg.journal);
		return static_cast<std::size_t>(std::count(t.begin(), t.end(), '\n'));
	}

	static const nlohmann::json *find(const nlohmann::json &list, const std::string &id) {
		for (const auto &d : list["decisions"])
			if (d["id"] == id)
				return &d;
		return nullptr;
	}
};

} // namespace

TEST_F(Served, ColdStartOffersTheCarMerge) {
	start(false);
	auto list = get("/api/sessions/s1/decisions");
	EXPECT_EQ(list["revision"], 0);
	const auto *d = find(list, "alias_merge:car|e-car");
	ASSERT_NE(d, nullptr) << list.dump(2);
	EXPECT_EQ((*d)["kind"], "alias_merge");
	EXPECT_EQ((*d)["suggestion"], "confirm");
	EXPECT_EQ((*d)["evidence"]["kind"], "string_distance");
	EXPECT_NEAR((*d)["evidence"]["score"].get<double>(), jaro_winkler("car", "ecar"), 1e-12);
	// spans point at the phrases in the source text
	auto text = util::read_file(test::fixture("ecar.txt"));
	auto doc = test::gold_doc();
	for (const auto &[phrase, spans] : (*d)["evidence"]["spans"].items()) {
		ASSERT_FALSE(spans.empty());
		for (const auto &s : spans) {
			auto b = s["begin"].get<std::size_t>(), e = s["end"].get<std::size_t>();
			ASSERT_LT(b, e);
			ASSERT_LE(e, text.size());
			auto got = util::lower(text.substr(b, e - b));
			EXPECT_NE(got.find(phrase.substr(phrase.find_last_of(' ') + 1)), std::string::npos) << got;
		}
	}
	EXPECT_FALSE((*d)["excerpt"].get<std::string>().empty());
	// flow directions are pending as well, and they are what blocks
	bool blocking_direction = false;
	for (const auto &x : list["decisions"])
		blocking_direction |= x["kind"] == "direction" && x["blocking"] == true;
	EXPECT_TRUE(blocking_direction);
	get("/api/sessions/s1/model", 404);
}

TEST_F(Served, ConfirmingTheMergeDropsAComponent) {
	start(false);
	auto before = components();
	EXPECT_EQ(before.size(), 3u);
	auto [status, list] = post("alias_merge:car|e-car", "confirm", 0);
	ASSERT_EQ(status, 200) << list.dump(2);
	EXPECT_EQ(list["revision"], 1);
	EXPECT_EQ(find(list, "alias_merge:car|e-car"), nullptr);
	EXPECT_EQ(components().size(), 2u);
	EXPECT_EQ(get("/api/sessions/s1/revision")["revision"], 1);
	EXPECT_EQ(journal_lines(), 1u);
	auto j = DecisionJournal::load(cfg.journal);
	EXPECT_EQ(j.entries()[0].author, "tester");
}

TEST_F(Served, RejectingKeepsThePhrasesApart) {
	start(false);
	auto [status, list] = post("alias_merge:car|e-car", "reject", 0);
	ASSERT_EQ(status, 200);
	EXPECT_EQ(components().size(), 3u);
	EXPECT_EQ(find(list, "alias_merge:car|e-car"), nullptr);
}

TEST_F(Served, StaleRevisionConflictsWithoutWriting) {
	start(false);
	ASSERT_EQ(post("alias_merge:car|e-car", "confirm", 0).first, 200);
	auto lines = journal_lines();
	auto [status, body] = post("alias_merge:car|e-car", "reject", 0);
	EXPECT_EQ(status, 409);
	EXPECT_EQ(body["error"], "RevisionConflict");
	EXPECT_EQ(journal_lines(), lines);
	EXPECT_EQ(get("/api/sessions/s1/revision")["revision"], 1);
}

TEST_F(Served, UnknownThingsAre404) {
	start(false);
	auto [s1, b1] = post("alias_merge:nothing|here", "confirm", 0);
	EXPECT_EQ(s1, 404);
	EXPECT_EQ(b1["error"], "UnknownDecision");
	EXPECT_EQ(post("bogus", "x", 0).first, 404);
	EXPECT_EQ(post("alias_merge:car|e-car", "confirm", 0, "nope").first, 404);
	EXPECT_EQ(get("/api/sessions/nope/decisions", 404)["error"], "UnknownSession");
	get("/api/sessions/nope/revision", 404);
	EXPECT_EQ(journal_lines(), 0u);
}

TEST_F(Served, BadBodiesAre400) {
	start(false);
	auto c = client();
	auto res = c.Post("/api/sessions/s1/decisions/alias_merge:car|e-car", "{", "application/json");
	ASSERT_TRUE(res);
	EXPECT_EQ(res->status, 400);
	res = c.Post("/api/sessions/s1/decisions/alias_merge:car|e-car", R"({"choice":"confirm"})", "application/json");
	ASSERT_TRUE(res);
	EXPECT_EQ(res->status, 400);
	EXPECT_EQ(post("alias_merge:car|e-car", "maybe", 0).first, 400);
	EXPECT_EQ(journal_lines(), 0u);
}

TEST_F(Served, FullyJournaledSessionIsReady) {
	start(true);
	auto list = get("/api/sessions/s1/decisions");
	EXPECT_TRUE(list["decisions"].empty()) << list.dump(2);
	EXPECT_EQ(list["status"], "model ready");
	EXPECT_EQ(get("/api/sessions/s1/model"),
	          nlohmann::json::parse(util::read_file(test::fixture("ecar.gold-model.json"))));
	EXPECT_EQ(get("/api/sessions/s1/report"),
	          nlohmann::json::parse(util::read_file(test::fixture("ecar.gold-report.json"))));
}

TEST_F(Served, RevertingADirectionSupersedesAndRerunsFlow) {
	start(true);
	auto flow_key = [&] { return get("/api/sessions/s1/state")["stages"]["flow"]["key"]; };
	auto key0 = flow_key();
	auto lines = journal_lines();
	auto [status, list] = post("direction:E-Car::POI@1", "in", 0);
	ASSERT_EQ(status, 200) << list.dump(2);
	EXPECT_EQ(journal_lines(), lines + 1);
	EXPECT_NE(flow_key(), key0);
	EXPECT_EQ(DecisionJournal::load(cfg.journal).choice(DecisionKind::Direction, "E-Car::POI@1"), "in");
	// revert the revert
	ASSERT_EQ(post("direction:E-Car::POI@1", "out", 1).first, 200);
	EXPECT_EQ(journal_lines(), lines + 2);
	EXPECT_EQ(flow_key(), key0);
	// same model; only the entry count moved, the digest of effective choices did not
	auto m = get("/api/sessions/s1/model");
	auto gold = nlohmann::json::parse(util::read_file(test::fixture("ecar.gold-model.json")));
	EXPECT_EQ(m["journal_ref"]["entries"], 29);
	EXPECT_EQ(m["journal_ref"]["digest"], gold["journal_ref"]["digest"]);
	m["journal_ref"].erase("entries");
	gold["journal_ref"].erase("entries");
	EXPECT_EQ(m, gold);
}

TEST_F(Served, RestartRecoversFromTheJournal) {
	start(false);
	ASSERT_EQ(post("alias_merge:car|e-car", "confirm", 0).first, 200);
	auto before = get("/api/sessions/s1/decisions")["decisions"];
	Session again("s2", cfg);
	nlohmann::json after = nlohmann::json::array();
	for (const auto &r : again.pending())
		after.push_back(request_json(r));
	EXPECT_EQ(after, before);
}

TEST_F(Served, ConcurrentSubmitsAtOneRevisionLetOneThrough) {
	start(false);
	std::atomic<int> ok{0}, conflict{0};
	std::vector<std::thread> ts;
	for (int i = 0; i < 4; ++i)
		ts.emplace_back([&, i] {
			auto [s, b] = post("alias_merge:car|e-car", i % 2 ? "confirm" : "reject", 0);
			(s == 200 ? ok : conflict)++;
		});
	for (auto &t : ts)
		t.join();
	EXPECT_EQ(ok, 1);
	EXPECT_EQ(conflict, 3);
	EXPECT_EQ(journal_lines(), 1u);
}

TEST(ReviewServiceApi, InProcessCalls) {
	test::TempDir dir;
	auto cfg = test::gold_config(dir.str());
	cfg.journal = dir / "j.jsonl";
	ReviewService svc;
	svc.open("a", cfg);
	auto list = svc.list_decisions("a");
	EXPECT_EQ(list["revision"], 0);
	EXPECT_THROW(svc.list_decisions("b"), UnknownSession);
	EXPECT_THROW(svc.submit_decision("a", "owner:nothing", "X", "t", 0), UnknownDecision);
	EXPECT_THROW(svc.submit_decision("a", "alias_merge:car|e-car", "confirm", "t", 3), RevisionConflict);
	auto next = svc.submit_decision("a", "alias_merge:car|e-car", "confirm", "t", 0);
	EXPECT_EQ(next["revision"], 1);
}
