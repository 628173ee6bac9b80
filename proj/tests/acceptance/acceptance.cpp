// Acceptance run over the e-car fixture. One PASS/FAIL line per criterion;
// exit status is the number of failed criteria.

#include <chrono>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <regex>
#include <sys/wait.h>

#include "irm/pipeline.hpp"
#include "../support.hpp"

using namespace irm;
using Clock = std::chrono::steady_clock;

namespace {

struct Check {
	std::vector<std::string> fails;
	std::string note;
	void expect(bool ok, const std::string &what) {
		if (!ok)
			fails.push_back(what);
	}
	template <class A, class B> void equal(const A &got, const B &want, const std::string &what) {
		if (!(got == want))
			fails.push_back(what);
	}
};

double ms_since(Clock::time_point t0) {
	return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

int failed = 0;

void criterion(const std::string &name, double budget_ms, const std::function<void(Check &)> &body) {
	Check c;
	auto t0 = Clock::now();
	try {
		body(c);
	} catch (const std::exception &e) {
		c.fails.push_back(std::string("exception: ") + e.what());
	}
	double ms = ms_since(t0);
	if (budget_ms > 0 && ms > budget_ms)
		c.fails.push_back("took " + std::to_string(ms) + " ms, budget " + std::to_string(budget_ms));
	bool ok = c.fails.empty();
	failed += ok ? 0 : 1;
	std::printf("%s  %-22s %8.1f ms  %s\n", ok ? "PASS" : "FAIL", name.c_str(), ms,
	            ok ? c.note.c_str() : util::join(c.fails, "; ").c_str());
	std::fflush(stdout);
}

PipelineRun gold_run() { return compute(test::gold_config(), test::gold_journal()); }

std::set<std::string> triples(const SentenceGraph &g) {
	std::set<std::string> out;
	for (const auto &t : role_triples(g, {"nsubj", "dobj", "appos"}))
		out.insert(t.relation + "(" + t.head + ", " + t.dependent + ")");
	return out;
}

// ---- oracles -------------------------------------------------------------------

std::size_t edit_distance(const std::string &a, const std::string &b) {
	std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
	for (std::size_t i = 0; i <= a.size(); ++i)
		d[i][0] = i;
	for (std::size_t j = 0; j <= b.size(); ++j)
		d[0][j] = j;
	for (std::size_t i = 1; i <= a.size(); ++i)
		for (std::size_t j = 1; j <= b.size(); ++j)
			d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] != b[j - 1])});
	return d[a.size()][b.size()];
}

std::string random_word(std::mt19937 &rng) {
	static const std::string alpha = "abce- ";
	std::string s(rng() % 9, ' ');
	for (auto &ch : s)
		ch = alpha[rng() % alpha.size()];
	return s;
}

// smallest closed direction assignment, by trying every subset of open params
std::map<std::string, Direction> least_directions(const std::vector<FlowSignature> &sigs, const DecisionJournal &j) {
	std::map<std::string, Direction> fixed;
	std::map<std::string, std::pair<std::string, std::string>> where; // target -> ref, record
	std::vector<std::string> open;
	for (const auto &s : sigs)
		for (const auto &p : s.params) {
			auto t = direction_target(p, s.record_id);
			where[t] = {p.ref(), s.record_id};
			if (auto c = j.choice(DecisionKind::Direction, t))
				fixed[t] = *c == "in" ? Direction::In : Direction::Out;
			else if (s.type == InvariantType::Assumption)
				fixed[t] = Direction::In;
			else if (s.type == InvariantType::Process && s.params.size() == 1)
				fixed[t] = Direction::Out;
			else
				open.push_back(t);
		}
	std::optional<std::map<std::string, Direction>> best;
	for (unsigned mask = 0; mask < (1u << open.size()); ++mask) {
		auto a = fixed;
		for (std::size_t i = 0; i < open.size(); ++i)
			a[open[i]] = (mask >> i) & 1 ? Direction::In : Direction::Undecided;
		bool closed = true;
		for (const auto &t : open)
			if (a[t] == Direction::Undecided)
				for (const auto &[u, d] : a)
					if (d == Direction::Out && where[u].first == where[t].first && where[u].second != where[t].second)
						closed = false;
		auto decided = [](const auto &m) {
			return std::count_if(m.begin(), m.end(), [](const auto &kv) { return kv.second != Direction::Undecided; });
		};
		if (closed && (!best || decided(a) < decided(*best)))
			best = a;
	}
	return *best;
}

std::vector<FlowSignature> random_signatures(std::mt19937 &rng, DecisionJournal &pins) {
	static const std::vector<InvariantType> types{InvariantType::Process, InvariantType::Process, InvariantType::Exchange,
	                                              InvariantType::Assumption, InvariantType::Abstract};
	std::vector<FlowSignature> sigs;
	int budget = 1 + static_cast<int>(rng() % 6);
	for (int s = 0; budget > 0 && s < 4; ++s) {
		FlowSignature sig;
		sig.record_id = "r" + std::to_string(s);
		sig.type = types[rng() % types.size()];
		int k = 1 + static_cast<int>(rng() % std::min(3, budget));
		for (int i = 0; i < k; ++i) {
			std::string comp = rng() % 2 ? "A" : "B", attr = std::string(1, static_cast<char>('x' + rng() % 3));
			if (!sig.has(comp + "::" + attr)) {
				sig.params.push_back({comp, attr, Direction::Undecided, ""});
				--budget;
			}
		}
		for (const auto &p : sig.params)
			if (rng() % 5 == 0)
				pins.push({"", DecisionKind::Direction, direction_target(p, sig.record_id),
				           sig.type == InvariantType::Assumption || rng() % 2 ? "in" : "out", "t", "2026-01-01T00:00:00Z"});
		sigs.push_back(std::move(sig));
	}
	return sigs;
}

std::set<std::vector<int>> subset_configurations(const IrmModel &m) {
	int n = static_cast<int>(m.invariants.size());
	std::set<std::vector<int>> out;
	for (unsigned mask = 0; mask < (1u << n); ++mask) {
		auto in = [&](int id) { return ((mask >> (id - 1)) & 1u) != 0; };
		bool ok = true;
		for (const auto &inv : m.invariants) {
			int p = m.parent_of(inv.id);
			ok &= p ? (!in(inv.id) || in(p)) : in(inv.id);
		}
		for (const auto &d : m.decompositions)
			if (in(d.parent)) {
				auto k = std::count_if(d.children.begin(), d.children.end(), in);
				ok &= d.kind == DecompKind::And ? k == static_cast<long>(d.children.size()) : k == 1;
			}
		if (!ok)
			continue;
		std::vector<int> sel;
		for (int id = 1; id <= n; ++id)
			if (in(id))
				sel.push_back(id);
		out.insert(sel);
	}
	return out;
}

IrmModel random_forest(std::mt19937 &rng) {
	IrmModel m;
	int n = 1 + static_cast<int>(rng() % 12);
	std::map<int, std::vector<int>> kids;
	for (int i = 1; i <= n; ++i) {
		Invariant inv;
		inv.id = i;
		inv.key = std::to_string(i);
		m.invariants.push_back(inv);
		if (i > 1 && rng() % 3)
			kids[1 + static_cast<int>(rng() % static_cast<unsigned>(i - 1))].push_back(i);
	}
	for (auto &[p, cs] : kids)
		m.decompositions.push_back({p, cs, cs.size() >= 2 && rng() % 2 ? DecompKind::Or : DecompKind::And});
	return m;
}

int run_cli(const std::string &args) {
	int status = std::system((std::string(IRM_CLI) + " " + args + " > /dev/null 2>&1").c_str());
	return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

int main() {
	auto start = Clock::now();

	criterion("role-triples", 1000, [](Check &c) {
		const std::string sentence = "Every car needs to continuously monitor its energy level (battery).";
		std::set<std::string> want{"nsubj(needs, car)", "dobj(monitor, level)", "appos(level, battery)"};
		auto gs = ingest_conllu(util::read_file(test::fixture("monitor-sentence.conllu")));
		c.expect(gs.size() == 1, "one CoNLL-U sentence");
		if (!gs.empty())
			c.equal(triples(gs[0]), want, "ingest_conllu triples");
		c.equal(triples(shallow_parse(sentence)), want, "shallow_parse triples");
		c.note = util::join(std::vector<std::string>(want.begin(), want.end()), " ");
	});

	criterion("component-extraction", 5000, [](Check &c) {
		auto doc = test::gold_doc();
		auto r = extract_entities(doc, test::gold_journal());
		c.expect(r.catalog.has_value(), "catalog built");
		if (!r.catalog)
			return;
		const auto &cat = *r.catalog;
		std::map<std::string, std::set<std::string>> got;
		for (const auto &comp : cat.components)
			for (const auto &a : comp.attributes)
				got[comp.name].insert(a.name);
		std::map<std::string, std::set<std::string>> want{{"E-Car", {"energy level", "position", "POI", "plan"}},
		                                                  {"Parking", {"availability"}}};
		c.equal(got.size(), want.size(), "two components");
		for (const auto &comp : cat.components)
			if (!want.count(comp.name))
				c.expect(false, "unexpected component " + comp.name);
		for (const auto &[name, attrs] : want)
			c.equal(got[name], attrs, "attributes of " + name + " = {" + util::join(std::vector<std::string>(got[name].begin(), got[name].end()), ", ") + "}");
		for (const auto &[a, b] : std::vector<std::pair<std::string, std::string>>{{"car", "e-car"},
		                                                                          {"parking place", "parking station"},
		                                                                          {"battery", "energy level"},
		                                                                          {"POI", "place of interest"},
		                                                                          {"plan", "trip plan"}}) {
			auto ra = cat.resolve(a), rb = cat.resolve(b);
			c.expect(ra && rb && ra->component == rb->component && ra->attribute == rb->attribute, "alias " + a + "/" + b + " merged");
		}
		c.note = "E-Car{energy level, position, POI, plan} Parking{availability}";
	});

	criterion("classification", 5000, [](Check &c) {
		auto run = gold_run();
		std::map<std::string, std::string> got;
		std::map<std::string, double> timing;
		for (const auto &r : run.requirements) {
			got[r.record_id] = to_string(r.type);
			if (r.timing)
				timing[r.record_id] = r.timing->max_period;
		}
		std::map<std::string, std::string> want{
		    {"1", "Abstract"},     {"1(a)", "Process"}, {"1(b)", "Process"},      {"1(c)", "Process"},
		    {"1(d)", "Process"},   {"2", "Process"},    {"3", "Exchange"},        {"4/when", "Assumption"},
		    {"4", "Process"},      {"5/when", "Assumption"}, {"5", "Process"}};
		c.equal(got, want, "type labels");
		c.equal(timing, (std::map<std::string, double>{{"4", 60.0}, {"5", 10.0}}), "timing 60 s / 10 s");
		c.note = std::to_string(got.size()) + " records, 4/5 split, timing 60 s and 10 s";
	});

	criterion("knowledge-flow", 5000, [](Check &c) {
		auto run = gold_run();
		std::map<std::string, std::string> text;
		for (const auto &s : run.flow.signatures)
			text[s.record_id] = format_signature(s);
		const std::string want = "E-Car::energy, E-Car::POI, Parking::availability -> E-Car::plan";
		c.equal(text["1(d)"], want, "1(d) signature '" + text["1(d)"] + "'");
		// with the short component names of the reference trace
		auto renamed = std::regex_replace(std::regex_replace(text["1(d)"], std::regex("E-Car::"), "V::"),
		                                  std::regex("Parking::"), "P::");
		c.equal(renamed, std::string("V::energy, V::POI, P::availability -> V::plan"), "1(d) as V/P");
		// S1 on its own, without journal pins
		std::vector<FlowSignature> sigs;
		for (const auto &r : run.requirements) {
			auto s = collect_params(r, run.doc, *run.extraction.catalog);
			add_placeholders(s, r, run.doc, *run.extraction.catalog);
			sigs.push_back(std::move(s));
		}
		auto bare = infer_directions(sigs, {});
		for (const auto &s : bare.signatures)
			if (s.record_id == "1(a)" || s.record_id == "1(b)") {
				c.expect(s.params.size() == 1 && s.params[0].direction == Direction::Out && s.params[0].source == "S1",
				         s.record_id + " single S1 output");
			}
		c.note = renamed;
	});

	criterion("exchange-detection", 5000, [](Check &c) {
		auto run = gold_run();
		std::map<std::string, bool> got;
		for (const auto &s : run.flow.signatures)
			got[s.record_id] = needs_exchange(s);
		std::map<std::string, bool> want{{"1(a)", false}, {"1(b)", false}, {"1(c)", false},
		                                 {"1(d)", true},  {"2", false},    {"3", true}};
		for (const auto &[rec, v] : want)
			c.expect(got.count(rec) && got[rec] == v, rec + (v ? " needs" : " does not need") + " an exchange");
		c.note = "1(d), 3 cross components";
	});

	criterion("validation", 10000, [](Check &c) {
		auto run = gold_run();
		c.expect(run.report.has_value(), "gold run validated");
		if (!run.report)
			return;
		c.equal(run.report->count(Severity::Error), 0u, "no errors on gold model");
		c.equal(run.report->configurations, 2u, "2 configurations");
		std::map<std::string, FindingKind> defects{{"ecar.defect-missing-input.json", FindingKind::MissingInput},
		                                           {"ecar.defect-multiple-writers.json", FindingKind::MultipleWriters},
		                                           {"ecar.defect-unused-attribute.json", FindingKind::UnusedAttribute}};
		for (const auto &[file, kind] : defects) {
			auto rep = validate(deserialize(util::read_file(test::fixture(file))));
			std::set<FindingKind> kinds;
			for (const auto &f : rep.findings)
				kinds.insert(f.kind);
			c.equal(kinds, std::set<FindingKind>{kind}, file + " finds only " + to_string(kind));
		}
		auto first = report_json(*run.report).dump();
		for (int i = 0; i < 5; ++i)
			c.equal(report_json(*gold_run().report).dump(), first, "report run " + std::to_string(i) + " identical");
		c.note = "gold pass, 2 configurations; 3 defects; 5 identical reports";
	});

	criterion("property-suites", 30000, [](Check &c) {
		std::mt19937 rng(2026);
		// string metrics
		for (int i = 0; i < 1000; ++i) {
			auto a = random_word(rng), b = random_word(rng), x = random_word(rng);
			auto ab = levenshtein(a, b);
			c.expect(ab == edit_distance(a, b), "levenshtein vs DP '" + a + "','" + b + "'");
			c.expect(ab == levenshtein(b, a), "levenshtein symmetric");
			c.expect(levenshtein(a, a) == 0 && (ab == 0) == (a == b), "levenshtein identity");
			c.expect(levenshtein(a, x) <= ab + levenshtein(b, x), "triangle inequality");
			double jw = jaro_winkler(a, b);
			c.expect(jw >= 0.0 && jw <= 1.0, "jaro_winkler in [0,1]");
			c.expect(jw == jaro_winkler(b, a), "jaro_winkler symmetric");
			c.expect(a.empty() || jaro_winkler(a, a) == 1.0, "jaro_winkler identity");
		}
		if (c.fails.size() > 5)
			c.fails.resize(5);
		// similarity bounds over every same-POS synset pair in the bundled lexicon
		const auto &g = ClassifierConfig::bundled_graph();
		std::map<std::string, std::vector<std::string>> by_pos;
		for (const auto &line : util::split(util::read_file(util::data_path("synsets.txt")), '\n')) {
			auto t = util::trim(line);
			if (t.empty() || t.front() == '#')
				continue;
			auto cols = util::split(t, '|');
			by_pos[std::string(util::trim(cols[1]))].push_back(std::string(util::trim(cols[0])));
		}
		std::size_t pairs = 0;
		for (const auto &[pos, ids] : by_pos)
			for (const auto &a : ids)
				for (const auto &b : ids) {
					for (auto m : {Measure::Path, Measure::Wup}) {
						double v = similarity(a, b, g, m).value;
						c.expect(v >= 0.0 && v <= 1.0, "similarity bound " + a + "," + b);
						c.expect(v == similarity(b, a, g, m).value, "similarity symmetric " + a + "," + b);
					}
					++pairs;
				}
		// direction inference
		for (int trial = 0; trial < 500; ++trial) {
			DecisionJournal pins;
			auto sigs = random_signatures(rng, pins);
			auto r = infer_directions(sigs, pins);
			std::map<std::string, Direction> got;
			for (const auto &s : r.signatures)
				for (const auto &p : s.params)
					if (!p.placeholder() || p.source != "journal")
						got[direction_target(p, s.record_id)] = p.direction;
			c.equal(got, least_directions(sigs, pins), "directions trial " + std::to_string(trial));
			// accepting suggestions ends with an output on every process and exchange
			auto j = pins;
			for (int round = 0; round < 8; ++round) {
				auto step = infer_directions(sigs, j);
				if (step.requests.empty())
					break;
				for (const auto &q : step.requests)
					j.push({"", q.kind, q.target, q.suggestion, "t", "2026-01-01T00:00:00Z"});
			}
			auto done = infer_directions(sigs, j);
			for (const auto &s : done.signatures)
				if ((s.type == InvariantType::Process || s.type == InvariantType::Exchange) && !s.params.empty())
					c.expect(s.count(Direction::Out) >= 1, "output guaranteed trial " + std::to_string(trial));
		}
		// configurations
		for (int trial = 0; trial < 300; ++trial) {
			auto m = random_forest(rng);
			std::set<std::vector<int>> got;
			for (const auto &cfg : enumerate_configurations(m))
				got.insert(cfg.selected);
			c.equal(got, subset_configurations(m), "configurations trial " + std::to_string(trial));
		}
		// journal replay
		test::TempDir a, b;
		auto ra = run_all(test::gold_config(a.str())), rb = run_all(test::gold_config(b.str()));
		c.equal(serialize(*ra.model), serialize(*rb.model), "replayed model identical");
		c.equal(report_json(*ra.report).dump(), report_json(*rb.report).dump(), "replayed report identical");
		c.equal(load_state(a / "irm-state.json")["stages"], load_state(b / "irm-state.json")["stages"],
		        "replayed stage outputs identical");
		if (c.fails.size() > 8)
			c.fails.resize(8);
		c.note = "1000 string cases, " + std::to_string(pairs) + " synset pairs, 500 flow sets, 300 forests, replay";
	});

	criterion("cli-assume-defaults", 60000, [&](Check &c) {
		test::TempDir dir;
		auto f = [](const std::string &n) { return test::fixture(n); };
		int rc = run_cli("run --assume-defaults --in " + f("ecar.txt") + " --conllu " + f("ecar.conllu") + " --journal " +
		                 f("ecar.gold-journal.jsonl") + " --state " + (dir / "s.json") + " --out " + (dir / "out"));
		c.equal(rc, 0, "exit code " + std::to_string(rc));
		c.equal(util::read_file(dir / "out/model.json"), util::read_file(f("ecar.gold-model.json")), "model matches gold");
		c.equal(nlohmann::json::parse(util::read_file(dir / "out/report.json")),
		        nlohmann::json::parse(util::read_file(f("ecar.gold-report.json"))), "report matches gold");
		c.expect(ms_since(start) < 60000, "whole acceptance run under 60 s");
		c.note = "total so far " + std::to_string(static_cast<int>(ms_since(start))) + " ms";
	});

	std::printf("%s  %d failed, %.1f ms total\n", failed ? "FAIL" : "PASS", failed, ms_since(start));
	return failed;
}
