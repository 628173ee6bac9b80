#include <gtest/gtest.h>

#include <map>
#include <random>

#include "irm/validation.hpp"
#include "support.hpp"

using namespace irm;

namespace {

ComponentCatalog small_catalog() {
	ComponentCatalog cat;
	for (const auto &[name, attrs] : std::vector<std::pair<std::string, std::vector<std::string>>>{
	         {"A", {"a", "b", "c"}}, {"B", {"a"}}}) {
		CatalogComponent c;
		c.name = name;
		for (const auto &a : attrs) {
			CatalogAttribute at;
			at.name = at.ident = a;
			c.attributes.push_back(at);
		}
		cat.components.push_back(c);
	}
	return cat;
}

struct Builder {
	IrmModel m;
	Builder() { m.catalog = small_catalog(); }
	int add(const std::string &sig) {
		Invariant inv;
		inv.id = static_cast<int>(m.invariants.size()) + 1;
		inv.key = "k" + std::to_string(inv.id);
		inv.description = "invariant " + std::to_string(inv.id);
		inv.signature = parse_signature(sig);
		inv.signature.record_id = inv.key;
		inv.origin = Origin::Manual;
		m.invariants.push_back(inv);
		return inv.id;
	}
	void decompose(int parent, std::vector<int> children, DecompKind k) { m.decompositions.push_back({parent, children, k}); }
	IrmModel done() {
		for (auto &i : m.invariants)
			i.system_output = m.parent_of(i.id) == 0;
		return m;
	}
};

IrmModel fixture_model(const std::string &name) { return deserialize(util::read_file(test::fixture(name))); }

const std::vector<std::string> kRefs{"A::a", "A::b", "A::c", "B::a"};

IrmModel random_forest(std::mt19937 &rng, int max_nodes = 12) {
	Builder b;
	int n = 1 + static_cast<int>(rng() % static_cast<unsigned>(max_nodes));
	std::map<int, std::vector<int>> kids;
	for (int i = 1; i <= n; ++i) {
		std::vector<std::string> ins, outs;
		for (const auto &r : kRefs) {
			auto roll = rng() % 5;
			if (roll == 0)
				ins.push_back(r);
			else if (roll == 1)
				outs.push_back(r);
		}
		b.add(util::join(ins, ", ") + " -> " + util::join(outs, ", "));
		if (i > 1 && rng() % 3)
			kids[1 + static_cast<int>(rng() % static_cast<unsigned>(i - 1))].push_back(i);
	}
	for (auto &[p, cs] : kids)
		b.decompose(p, cs, cs.size() >= 2 && rng() % 2 ? DecompKind::Or : DecompKind::And);
	return b.done();
}

// every subset of invariants closed under the decomposition rules
std::set<std::vector<int>> configurations_oracle(const IrmModel &m) {
	int n = static_cast<int>(m.invariants.size());
	std::set<std::vector<int>> out;
	for (unsigned mask = 0; mask < (1u << n); ++mask) {
		auto in = [&](int id) { return (mask >> (id - 1)) & 1u; };
		bool ok = true;
		for (const auto &inv : m.invariants) {
			int p = m.parent_of(inv.id);
			if (!p && !in(inv.id))
				ok = false;
			if (p && in(inv.id) && !in(p))
				ok = false;
		}
		for (const auto &d : m.decompositions) {
			if (!in(d.parent))
				continue;
			int chosen = 0;
			for (int c : d.children)
				chosen += in(c) ? 1 : 0;
			if (d.kind == DecompKind::And ? chosen != static_cast<int>(d.children.size()) : chosen != 1)
				ok = false;
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

using FindingKey = std::tuple<std::string, std::string, std::vector<int>>;

// missing inputs and competing writers computed straight from the definitions
std::set<FindingKey> findings_oracle(const IrmModel &m, const std::set<std::vector<int>> &configs) {
	std::set<FindingKey> out;
	for (const auto &sel : configs) {
		std::map<std::string, std::vector<int>> writers;
		for (int id : sel)
			for (const auto &p : m.find(id)->signature.params)
				if (p.direction == Direction::Out)
					writers[p.ref()].push_back(id);
		for (int id : sel)
			for (const auto &p : m.find(id)->signature.params)
				if (p.direction == Direction::In && !writers.count(p.ref()))
					out.insert({"MissingInput", p.ref(), {id}});
		for (const auto &[ref, ws] : writers) {
			int specific = 0;
			for (int w : ws) {
				bool refined = false;
				for (int o : ws)
					for (int p = m.parent_of(o); p; p = m.parent_of(p))
						refined |= p == w;
				specific += refined ? 0 : 1;
			}
			if (specific >= 2)
				out.insert({"MultipleWriters", ref, ws});
		}
	}
	return out;
}

std::set<FindingKey> error_keys(const ValidationReport &r) {
	std::set<FindingKey> out;
	for (const auto &f : r.findings)
		if (f.kind == FindingKind::MissingInput || f.kind == FindingKind::MultipleWriters)
			out.insert({to_string(f.kind), f.subject, f.involved});
	return out;
}

} // namespace

TEST(Configurations, Counts) {
	{
		Builder b;
		b.add("-> A::a");
		EXPECT_EQ(enumerate_configurations(b.done()).size(), 1u);
	}
	{
		Builder b;
		int r = b.add("-> A::a"), x = b.add("-> A::a"), y = b.add("-> A::a");
		b.decompose(r, {x, y}, DecompKind::Or);
		auto cs = enumerate_configurations(b.done());
		ASSERT_EQ(cs.size(), 2u);
		EXPECT_EQ(cs[0].selected, (std::vector<int>{1, 2}));
		EXPECT_EQ(cs[1].selected, (std::vector<int>{1, 3}));
		EXPECT_EQ(cs[0].id, 1);
	}
	{
		Builder b;
		int r = b.add("->"), o1 = b.add("->"), o2 = b.add("->");
		int a = b.add("->"), c = b.add("->"), d = b.add("->"), e = b.add("->"), f = b.add("->");
		b.decompose(r, {o1, o2}, DecompKind::And);
		b.decompose(o1, {a, c}, DecompKind::Or);
		b.decompose(o2, {d, e, f}, DecompKind::Or);
		auto cs = enumerate_configurations(b.done());
		ASSERT_EQ(cs.size(), 6u);
		// the first OR varies slowest
		EXPECT_TRUE(cs[0].has(a) && cs[1].has(a) && cs[2].has(a));
		EXPECT_TRUE(cs[0].has(d) && cs[1].has(e) && cs[2].has(f));
		EXPECT_THROW(enumerate_configurations(b.done(), 5), ConfigurationExplosion);
		EXPECT_NO_THROW(enumerate_configurations(b.done(), 6));
	}
	EXPECT_EQ(enumerate_configurations(Builder{}.done()).size(), 1u);
}

TEST(Configurations, RandomForestsMatchSubsetOracle) {
	std::mt19937 rng(77);
	for (int trial = 0; trial < 400; ++trial) {
		auto m = random_forest(rng);
		auto want = configurations_oracle(m);
		auto got = enumerate_configurations(m);
		std::set<std::vector<int>> got_sets;
		for (std::size_t i = 0; i < got.size(); ++i) {
			EXPECT_EQ(got[i].id, static_cast<int>(i) + 1);
			EXPECT_TRUE(std::is_sorted(got[i].selected.begin(), got[i].selected.end()));
			got_sets.insert(got[i].selected);
		}
		ASSERT_EQ(got.size(), got_sets.size()) << "duplicate configuration, trial " << trial;
		ASSERT_EQ(got_sets, want) << "trial " << trial;
	}
}

TEST(Checks, RandomForestsMatchFindingOracle) {
	std::mt19937 rng(78);
	for (int trial = 0; trial < 400; ++trial) {
		auto m = random_forest(rng);
		auto rep = validate(m);
		ASSERT_EQ(error_keys(rep), findings_oracle(m, configurations_oracle(m))) << "trial " << trial;
		// every finding lists the configurations it occurs in, first one first
		for (const auto &f : rep.findings)
			if (f.configuration) {
				ASSERT_FALSE(f.configurations.empty());
				EXPECT_EQ(f.configurations.front(), f.configuration);
			}
	}
}

TEST(Checks, AddingAWriterOnlyRemovesMissingInputs) {
	std::mt19937 rng(79);
	for (int trial = 0; trial < 200; ++trial) {
		auto m = random_forest(rng, 8);
		auto before = validate(m);
		std::set<std::string> missing;
		for (const auto &f : before.findings)
			if (f.kind == FindingKind::MissingInput)
				missing.insert(f.subject);
		if (missing.empty())
			continue;
		auto ref = *missing.begin();
		Invariant w;
		w.id = static_cast<int>(m.invariants.size()) + 1;
		w.key = "writer";
		w.description = "writes " + ref;
		w.signature = parse_signature("-> " + ref);
		w.system_output = true;
		m.invariants.push_back(w);
		auto after = validate(m);
		for (const auto &f : after.findings)
			if (f.kind == FindingKind::MissingInput) {
				EXPECT_NE(f.subject, ref);
				EXPECT_TRUE(missing.count(f.subject));
			}
	}
}

TEST(Checks, MostSpecificWriterWins) {
	Builder b;
	int r = b.add("-> A::a"), c = b.add("-> A::a");
	b.decompose(r, {c}, DecompKind::And);
	EXPECT_TRUE(check_multiple_writers(enumerate_configurations(b.done())[0], b.done()).empty());
	Builder b2;
	b2.add("-> A::a");
	b2.add("-> A::a");
	auto m = b2.done();
	auto fs = check_multiple_writers(enumerate_configurations(m)[0], m);
	ASSERT_EQ(fs.size(), 1u);
	EXPECT_EQ(fs[0].involved, (std::vector<int>{1, 2}));
}

TEST(Checks, PlaceholderInputIsAWarning) {
	Builder b;
	b.add("A::? -> A::a");
	auto rep = validate(b.done());
	int missing = 0;
	for (const auto &f : rep.findings) {
		EXPECT_EQ(f.severity, Severity::Warning);
		missing += f.kind == FindingKind::MissingInput ? 1 : 0;
	}
	EXPECT_EQ(missing, 1);
	EXPECT_EQ(rep.verdict(), "warnings");
	// unused A::b, A::c and B::a are reported once each, model-wide
	Builder b2;
	b2.add("-> A::a");
	int x = b2.add("A::a -> A::b");
	b2.decompose(1, {x}, DecompKind::And);
	auto rep2 = validate(b2.done());
	std::set<std::string> unused;
	for (const auto &f : rep2.findings) {
		EXPECT_EQ(f.severity, Severity::Warning);
		if (f.kind == FindingKind::UnusedAttribute)
			unused.insert(f.subject);
		if (f.kind == FindingKind::UnusedOutput) {
			EXPECT_EQ(f.subject, "A::b");
		}
	}
	EXPECT_EQ(unused, (std::set<std::string>{"A::c", "B::a"}));
	EXPECT_EQ(rep2.verdict(), "warnings");
}

TEST(Checks, UndecidedDirectionIsRefused) {
	Builder b;
	b.add("-> A::a");
	auto m = b.done();
	m.invariants[0].signature.params[0].direction = Direction::Undecided;
	EXPECT_THROW(validate(m), UnresolvedDecision);
}

TEST(Fixtures, GoldModelPasses) {
	auto m = fixture_model("ecar.gold-model.json");
	auto rep = validate(m);
	EXPECT_EQ(rep.configurations, 2u);
	EXPECT_TRUE(rep.findings.empty());
	EXPECT_EQ(rep.verdict(), "pass");
	EXPECT_EQ(report_json(rep), nlohmann::json::parse(util::read_file(test::fixture("ecar.gold-report.json"))));
	EXPECT_THROW(validate(m, 1), ConfigurationExplosion);
}

TEST(Fixtures, MissingInputDefect) {
	auto rep = validate(fixture_model("ecar.defect-missing-input.json"));
	EXPECT_EQ(rep.verdict(), "errors");
	std::set<std::vector<int>> involved;
	for (const auto &f : rep.findings) {
		EXPECT_EQ(f.kind, FindingKind::MissingInput);
		EXPECT_EQ(f.subject, "E-Car::position");
		involved.insert(f.involved);
	}
	EXPECT_EQ(involved, (std::set<std::vector<int>>{{10}, {13}}));
}

TEST(Fixtures, MultipleWritersDefect) {
	auto rep = validate(fixture_model("ecar.defect-multiple-writers.json"));
	EXPECT_EQ(rep.configurations, 1u);
	ASSERT_EQ(rep.findings.size(), 1u);
	EXPECT_EQ(rep.findings[0].kind, FindingKind::MultipleWriters);
	EXPECT_EQ(rep.findings[0].subject, "E-Car::plan");
	EXPECT_EQ(rep.findings[0].involved, (std::vector<int>{5, 11, 14}));
}

TEST(Fixtures, UnusedAttributeDefect) {
	auto rep = validate(fixture_model("ecar.defect-unused-attribute.json"));
	ASSERT_EQ(rep.findings.size(), 1u);
	EXPECT_EQ(rep.findings[0].kind, FindingKind::UnusedAttribute);
	EXPECT_EQ(rep.findings[0].subject, "E-Car::color");
	EXPECT_EQ(rep.verdict(), "warnings");
}

TEST(Fixtures, DroppingAWriterIsDetected) {
	// metamorphic: remove the only writer of E-Car::position from the gold model
	auto m = fixture_model("ecar.gold-model.json");
	auto *inv = m.find(3);
	ASSERT_EQ(format_signature(inv->signature), "-> E-Car::position");
	inv->signature.params.clear();
	auto rep = validate(m);
	std::set<int> readers;
	for (const auto &f : rep.findings)
		if (f.kind == FindingKind::MissingInput && f.subject == "E-Car::position")
			readers.insert(f.involved.front());
	EXPECT_EQ(readers, (std::set<int>{10, 13}));
}

TEST(Report, DeterministicAndSorted) {
	auto m = fixture_model("ecar.defect-missing-input.json");
	auto first = report_json(validate(m)).dump();
	for (int i = 0; i < 5; ++i)
		EXPECT_EQ(report_json(validate(m)).dump(), first);
	auto rep = validate(m);
	for (std::size_t i = 1; i < rep.findings.size(); ++i) {
		const auto &a = rep.findings[i - 1], &b = rep.findings[i];
		EXPECT_LE(std::tie(a.configuration, a.kind, a.subject, a.involved), std::tie(b.configuration, b.kind, b.subject, b.involved));
	}
	auto text = report_text(rep);
	EXPECT_NE(text.find("verdict: errors"), std::string::npos);
	EXPECT_NE(text.find("MissingInput E-Car::position"), std::string::npos);
}

TEST(Report, EmptyModelPasses) {
	auto rep = validate(IrmModel{});
	EXPECT_EQ(rep.configurations, 1u);
	EXPECT_EQ(rep.verdict(), "pass");
}
