#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "irm/pipeline.hpp"

namespace irm::test {

inline std::string fixture(const std::string &name) { return util::data_path("fixtures/" + name); }

inline RequirementsDocument gold_doc(bool conllu = true) {
	auto doc = segment_document(util::read_file(fixture("ecar.txt")));
	if (conllu)
		attach_conllu(doc, ingest_conllu(util::read_file(fixture("ecar.conllu"))));
	else
		parse_document(doc);
	return doc;
}

inline DecisionJournal gold_journal() { return DecisionJournal::load(fixture("ecar.gold-journal.jsonl")); }

inline RunConfig gold_config(const std::string &state_dir = {}) {
	RunConfig c;
	c.input = fixture("ecar.txt");
	c.conllu = fixture("ecar.conllu");
	c.journal = fixture("ecar.gold-journal.jsonl");
	if (!state_dir.empty())
		c.state = (std::filesystem::path(state_dir) / "irm-state.json").string();
	return c;
}

/// The gold journal without the entries `drop` rejects.
template <class Pred> DecisionJournal journal_without(Pred drop) {
	DecisionJournal j;
	auto gold = gold_journal();
	for (const auto &e : gold.entries())
		if (!drop(e))
			j.push(e);
	return j;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
	TempDir() {
		static std::mt19937_64 rng(std::random_device{}());
		path_ = std::filesystem::temp_directory_path() / ("irm-test-" + std::to_string(rng()));
		std::filesystem::create_directories(path_);
	}
	~TempDir() {
		std::error_code ec;
		std::filesystem::remove_all(path_, ec);
	}
	TempDir(const TempDir &) = delete;
	TempDir &operator=(const TempDir &) = delete;
	std::string str() const { return path_.string(); }
	std::string operator/(const std::string &name) const { return (path_ / name).string(); }

private:
	std::filesystem::path path_;
};

inline void write_text(const std::string &path, const std::string &text) {
	std::ofstream out(path, std::ios::binary | std::ios::trunc);
	out << text;
}

} // namespace irm::test
