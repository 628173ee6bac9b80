#include <gtest/gtest.h>

#include <map>

#include "irm/classification.hpp"
#include "support.hpp"

using namespace irm;

namespace {

struct Classified {
	RequirementsDocument doc;
	ComponentCatalog catalog;
	std::vector<ClassifiedRequirement> reqs;
};

Classified gold(Measure m = Measure::Wup) {
	Classified c;
	c.doc = test::gold_doc();
	c.catalog = *extract_entities(c.doc, test::gold_journal()).catalog;
	auto cfg = ClassifierConfig::bundled();
	cfg.measure = m;
	c.reqs = classify_all(c.doc, c.catalog, cfg);
	return c;
}

// two general items to seed a Car component, then one situation-specific item
Classified small(const std::string &situation, const DecisionJournal *journal = nullptr) {
	Classified c;
	c.doc = segment_document("Demo\n\nRequirements:\nThe general requirements are:\n"
	                         "1. Every car has to continuously monitor its battery level.\n"
	                         "2. Every car has to monitor its position.\n"
	                         "The situation-specific requirements are:\n3. " +
	                         situation + "\n");
	parse_document(c.doc);
	c.catalog = *extract_entities(c.doc, DecisionJournal{}).catalog;
	c.reqs = classify_all(c.doc, c.catalog, ClassifierConfig::bundled(), journal);
	return c;
}

const ClassifiedRequirement &rec(const std::vector<ClassifiedRequirement> &rs, const std::string &id) {
	for (const auto &r : rs)
		if (r.record_id == id)
			return r;
	throw std::runtime_error("no record " + id);
}

} // namespace

TEST(Classify, FixtureTypes) {
	auto c = gold();
	std::map<std::string, std::string> got;
	for (const auto &r : c.reqs)
		got[r.record_id] = to_string(r.type);
	std::map<std::string, std::string> expected{
	    {"1", "Abstract"},    {"1(a)", "Process"},   {"1(b)", "Process"},    {"1(c)", "Process"},
	    {"1(d)", "Process"},  {"2", "Process"},      {"3", "Exchange"},      {"4/when", "Assumption"},
	    {"4", "Process"},     {"5/when", "Assumption"}, {"5", "Process"}};
	EXPECT_EQ(got, expected);
}

TEST(Classify, PathMeasureAgreesOnFixture) {
	auto a = gold(Measure::Wup), b = gold(Measure::Path);
	ASSERT_EQ(a.reqs.size(), b.reqs.size());
	for (std::size_t i = 0; i < a.reqs.size(); ++i)
		EXPECT_EQ(a.reqs[i].type, b.reqs[i].type) << a.reqs[i].record_id;
}

TEST(Classify, FixtureConditions) {
	auto c = gold();
	const auto &w4 = rec(c.reqs, "4/when");
	ASSERT_TRUE(w4.condition);
	EXPECT_EQ(w4.condition->comparator, ">");
	EXPECT_EQ(w4.condition->value, 5.0);
	EXPECT_EQ(w4.condition->unit, "km");
	EXPECT_EQ(w4.condition->subject_text, "distance(E-Car::position, E-Car::POI)");
	EXPECT_EQ(w4.condition->subject, (std::vector<std::string>{"E-Car::position", "E-Car::POI"}));
	const auto &w5 = rec(c.reqs, "5/when");
	ASSERT_TRUE(w5.condition);
	EXPECT_EQ(w5.condition->comparator, "<=");
	EXPECT_EQ(w5.condition->value, 5.0);
	EXPECT_EQ(w5.condition->unit, "km");
}

TEST(Classify, FixtureTiming) {
	auto c = gold();
	ASSERT_TRUE(rec(c.reqs, "4").timing);
	EXPECT_EQ(rec(c.reqs, "4").timing->max_period, 60.0);
	ASSERT_TRUE(rec(c.reqs, "5").timing);
	EXPECT_EQ(rec(c.reqs, "5").timing->max_period, 10.0);
	EXPECT_FALSE(rec(c.reqs, "1(a)").timing);
}

TEST(Classify, EveryItemClassifiedOnce) {
	auto c = gold();
	std::map<std::string, int> per_item;
	std::set<std::string> ids;
	for (const auto &r : c.reqs) {
		++per_item[r.item_id];
		EXPECT_TRUE(ids.insert(r.record_id).second) << r.record_id;
		EXPECT_NE(r.type, InvariantType::Unknown);
		EXPECT_GE(r.confidence, 0.0);
		EXPECT_LE(r.confidence, 1.0);
	}
	for (const auto &it : c.doc.items) {
		int expected = it.section == SectionKind::SituationSpecific ? 2 : 1;
		EXPECT_EQ(per_item[it.item_id], expected) << it.item_id;
	}
	EXPECT_EQ(per_item.size(), c.doc.items.size());
}

TEST(Classify, AssumptionsAreSplitFromTheirMainClause) {
	auto c = gold();
	for (const auto &r : c.reqs) {
		if (r.type != InvariantType::Assumption)
			continue;
		const auto &main = rec(c.reqs, r.linked);
		EXPECT_EQ(main.linked, r.record_id);
		EXPECT_EQ(main.item_id, r.item_id);
		ASSERT_EQ(r.scopes.size(), 1u);
		const auto &sid = r.scopes[0].sentence_id;
		const auto *g = c.doc.sentence(sid);
		ASSERT_NE(g, nullptr);
		// the two scopes partition the sentence's tokens
		std::set<int> cond(r.scopes[0].tokens.begin(), r.scopes[0].tokens.end()), rest;
		for (const auto &s : main.scopes)
			if (s.sentence_id == sid)
				rest.insert(s.tokens.begin(), s.tokens.end());
		EXPECT_FALSE(cond.empty());
		for (int t : cond)
			EXPECT_FALSE(rest.count(t));
		EXPECT_EQ(cond.size() + rest.size(), static_cast<std::size_t>(g->size()));
		// the condition text is drawn from the sentence
		EXPECT_NE(util::lower(g->text).find(util::lower(r.condition->raw_text.substr(0, 10))), std::string::npos);
	}
}

TEST(Classify, AffinitiesMatchDirectComputation) {
	auto c = gold();
	auto cfg = ClassifierConfig::bundled();
	for (const auto &r : c.reqs) {
		if (r.type == InvariantType::Abstract || r.type == InvariantType::Assumption)
			continue;
		double e = verb_affinity(r.main_verb_lemma, cfg.seeds.exchange, *cfg.graph).value;
		double p = verb_affinity(r.main_verb_lemma, cfg.seeds.process, *cfg.graph).value;
		EXPECT_DOUBLE_EQ(r.exchange_affinity, e) << r.record_id;
		EXPECT_DOUBLE_EQ(r.process_affinity, p) << r.record_id;
		EXPECT_EQ(r.type, e > p ? InvariantType::Exchange : InvariantType::Process) << r.record_id;
		EXPECT_EQ(r.pending_review, e == p) << r.record_id;
	}
}

TEST(Classify, SeedVerbsClassifyAsTheirOwnType) {
	SeedSets seeds;
	auto check = [&](const std::string &verb, InvariantType want) {
		auto doc = segment_document("Demo\n\nRequirements:\nThe general requirements are:\n1. Every car has to " + verb +
		                            " its position.\n");
		parse_document(doc);
		auto cat = *extract_entities(doc, DecisionJournal{}).catalog;
		auto rs = classify_all(doc, cat, ClassifierConfig::bundled());
		ASSERT_EQ(rs.size(), 1u);
		EXPECT_EQ(rs[0].main_verb_lemma, verb);
		EXPECT_EQ(rs[0].type, want) << verb;
		EXPECT_DOUBLE_EQ(want == InvariantType::Exchange ? rs[0].exchange_affinity : rs[0].process_affinity, 1.0);
	};
	for (const auto &v : seeds.exchange)
		check(v, InvariantType::Exchange);
	for (const auto &v : seeds.process)
		check(v, InvariantType::Process);
}

TEST(Condition, PercentAndTiming) {
	auto c = small("When a car has its battery level at 0%, it should stop at least every 5 minutes.");
	const auto &w = rec(c.reqs, "3/when");
	ASSERT_TRUE(w.condition);
	EXPECT_EQ(w.condition->comparator, "=");
	EXPECT_EQ(w.condition->value, 0.0);
	EXPECT_EQ(w.condition->unit, "%");
	ASSERT_TRUE(rec(c.reqs, "3").timing);
	EXPECT_EQ(rec(c.reqs, "3").timing->max_period, 300.0);
}

TEST(Condition, AttributeSubjectAndLessThan) {
	auto c = small("When the battery level is less than 20%, a car should update its position at least once per 30 seconds.");
	const auto &w = rec(c.reqs, "3/when");
	EXPECT_EQ(w.condition->comparator, "<");
	EXPECT_EQ(w.condition->value, 20.0);
	EXPECT_EQ(w.condition->subject, (std::vector<std::string>{"Car::battery"}));
	EXPECT_EQ(rec(c.reqs, "3").timing->max_period, 30.0);
}

TEST(Condition, EveryComparatorPhraseIsRecognized) {
	const auto &table = ComparatorTable::bundled();
	for (const auto &[words, cmp] : table.phrases) {
		auto phrase = util::join(words, " ");
		auto c = small("When the battery level is " + phrase + " 20%, a car should monitor its position.");
		const auto &w = rec(c.reqs, "3/when");
		ASSERT_TRUE(w.condition) << phrase;
		EXPECT_EQ(w.condition->comparator, cmp) << phrase;
		EXPECT_EQ(w.condition->value, 20.0) << phrase;
	}
}

TEST(Condition, UnrecognizedComparatorIsReviewedNotBlocking) {
	auto c = small("When a car is somewhere odd, it should monitor its position.");
	const auto &w = rec(c.reqs, "3/when");
	EXPECT_EQ(w.type, InvariantType::Assumption);
	EXPECT_FALSE(w.condition->recognized());
	EXPECT_EQ(w.condition->raw_text, "a car is somewhere odd");
	EXPECT_TRUE(w.pending_review);
	auto qs = classification_requests(c.reqs);
	ASSERT_EQ(qs.size(), 1u);
	EXPECT_EQ(qs[0].target, "3/when");
	EXPECT_FALSE(qs[0].blocking);
	EXPECT_EQ(qs[0].options, (std::vector<std::string>{"Assumption"}));
}

TEST(Condition, TableParsing) {
	auto t = ComparatorTable::parse("at\t=\nequal to or less than\t<=\n");
	EXPECT_EQ(t.phrases.front().second, "<="); // longest first
	EXPECT_THROW(ComparatorTable::parse("at =\n"), LexiconFormatError);
	EXPECT_THROW(ComparatorTable::parse("at\t!=\n"), LexiconFormatError);
}

TEST(Timing, Phrases) {
	auto g = shallow_parse("A car should update its plan at least once per 2 minutes.");
	ASSERT_TRUE(extract_timing(g));
	EXPECT_EQ(extract_timing(g)->max_period, 120.0);
	EXPECT_FALSE(extract_timing(shallow_parse("A car should update its plan.")));
	EXPECT_EQ(extract_timing(shallow_parse("A car should update its plan at least every 3 hours."))->max_period, 10800.0);
}

TEST(Classify, UnparsableItemIsUnknownAndBlocks) {
	auto c = small("The battery level of the car.");
	const auto &r = rec(c.reqs, "3");
	EXPECT_EQ(r.type, InvariantType::Unknown);
	auto qs = classification_requests(c.reqs);
	ASSERT_EQ(qs.size(), 1u);
	EXPECT_TRUE(qs[0].blocking);
	EXPECT_EQ(qs[0].kind, DecisionKind::TypeOverride);
}

TEST(Classify, JournalOverrideSettlesType) {
	DecisionJournal j;
	j.push({"", DecisionKind::TypeOverride, "3", "Exchange", "t", "2026-01-01T00:00:00Z"});
	auto c = small("The battery level of the car.", &j);
	EXPECT_EQ(rec(c.reqs, "3").type, InvariantType::Exchange);
	EXPECT_TRUE(classification_requests(c.reqs).empty());
}

TEST(Classify, Deterministic) {
	auto a = gold(), b = gold();
	ASSERT_EQ(a.reqs.size(), b.reqs.size());
	for (std::size_t i = 0; i < a.reqs.size(); ++i)
		EXPECT_EQ(classification_json(a.reqs[i]), classification_json(b.reqs[i]));
}
