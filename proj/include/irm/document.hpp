#pragma once

#include <cctype>
#include <map>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "irm/error.hpp"
#include "irm/shallow_parser.hpp"
#include "irm/text_model.hpp"
#include "irm/util.hpp"

namespace irm {

struct Section {
	SectionKind kind = SectionKind::General;
	std::vector<std::string> sentence_ids;
};

struct RequirementItem {
	std::string item_id; ///< outline label such as "1" or "1(d)"
	std::string parent;  ///< empty for top-level items
	int order = 0;       ///< position in the document
	SectionKind section = SectionKind::General;
	std::vector<std::string> sentence_ids;
	std::vector<std::string> children;
};

struct RequirementsDocument {
	std::string title;
	std::string source;
	std::vector<Section> sections;
	std::vector<RequirementItem> items;
	std::vector<SentenceGraph> sentences;
	std::vector<std::string> warnings;

	const SentenceGraph *sentence(std::string_view id) const {
		for (const auto &s : sentences)
			if (s.id == id)
				return &s;
		return nullptr;
	}
	const RequirementItem *item(std::string_view id) const {
		for (const auto &it : items)
			if (it.item_id == id)
				return &it;
		return nullptr;
	}
	const Section *section(SectionKind k) const {
		for (const auto &s : sections)
			if (s.kind == k)
				return &s;
		return nullptr;
	}
	/// Item owning a sentence, or nullptr for section-level prose.
	const RequirementItem *item_of(std::string_view sentence_id) const {
		for (const auto &it : items)
			for (const auto &sid : it.sentence_ids)
				if (sid == sentence_id)
					return &it;
		return nullptr;
	}
};

namespace detail {

/// Sentence boundaries inside one chunk: [.!?] followed by whitespace and an
/// uppercase letter. Abbreviations like "e.g." never end a sentence.
inline std::vector<std::pair<std::size_t, std::size_t>> split_sentences(std::string_view text) {
	std::vector<std::pair<std::size_t, std::size_t>> out;
	std::size_t start = 0;
	auto push = [&](std::size_t b, std::size_t e) {
		auto piece = text.substr(b, e - b);
		auto lead = piece.size() - piece.substr(piece.find_first_not_of(" \t") == std::string_view::npos ? piece.size() : piece.find_first_not_of(" \t")).size();
		auto trimmed = util::trim(piece);
		if (!trimmed.empty())
			out.emplace_back(b + lead, b + lead + trimmed.size());
	};
	for (std::size_t i = 0; i < text.size(); ++i) {
		char c = text[i];
		if (c != '.' && c != '!' && c != '?')
			continue;
		bool abbrev = false;
		for (std::string_view a : {"e.g.", "i.e.", "etc."})
			if (i + 1 >= a.size() && util::lower(text.substr(i + 1 - a.size(), a.size())) == a)
				abbrev = true;
		if (abbrev)
			continue;
		std::size_t j = i + 1;
		if (j >= text.size() || !std::isspace(static_cast<unsigned char>(text[j])))
			continue;
		while (j < text.size() && std::isspace(static_cast<unsigned char>(text[j])))
			++j;
		if (j < text.size() && std::isupper(static_cast<unsigned char>(text[j]))) {
			push(start, i + 1);
			start = j;
		}
	}
	push(start, text.size());
	return out;
}

} // namespace detail

/// Splits raw requirements text into sections, outline items and sentences.
/// Sentences are returned unparsed; see parse_document / attach_conllu.
inline RequirementsDocument segment_document(std::string_view raw) {
	RequirementsDocument doc;
	doc.source = std::string(raw);
	bool heading_seen = false;
	std::optional<std::size_t> cur_section;
	std::string cur_top;
	std::optional<std::size_t> cur_item;
	int order = 0;

	static const std::regex top_label(R"(^(\d+)[.)]\s+)");
	static const std::regex sub_label(R"(^\(([a-z])\)\s+)");

	auto open_section = [&](SectionKind k) {
		doc.sections.push_back({k, {}});
		cur_section = doc.sections.size() - 1;
		cur_item.reset();
		cur_top.clear();
	};
	auto add_text = [&](std::size_t base, std::string_view text) {
		if (!cur_section)
			open_section(SectionKind::Summary);
		for (auto [b, e] : detail::split_sentences(text)) {
			SentenceGraph g;
			g.id = "s" + std::to_string(doc.sentences.size() + 1);
			g.text = std::string(text.substr(b, e - b));
			g.span = {base + b, base + e};
			g.section = doc.sections[*cur_section].kind;
			doc.sections[*cur_section].sentence_ids.push_back(g.id);
			if (cur_item)
				doc.items[*cur_item].sentence_ids.push_back(g.id);
			doc.sentences.push_back(std::move(g));
		}
	};

	std::size_t start = 0;
	bool first_line = true;
	while (start < raw.size()) {
		auto nl = raw.find('\n', start);
		auto line_end = nl == std::string_view::npos ? raw.size() : nl;
		std::string_view line = raw.substr(start, line_end - start);
		std::size_t lead = 0;
		while (lead < line.size() && std::isspace(static_cast<unsigned char>(line[lead])))
			++lead;
		std::string_view body = util::trim(line);
		std::size_t base = start + lead;
		start = line_end + 1;
		if (body.empty())
			continue;

		if (util::starts_with_ci(body, "Summary:")) {
			heading_seen = true;
			open_section(SectionKind::Summary);
			auto rest = body.substr(8);
			auto skip = rest.size() - util::trim(rest).size();
			if (!util::trim(rest).empty())
				add_text(base + 8 + (rest.find_first_not_of(" \t")), util::trim(rest));
			(void)skip;
			first_line = false;
			continue;
		}
		if (util::starts_with_ci(body, "Requirements:")) {
			heading_seen = true;
			open_section(SectionKind::General);
			auto rest = body.substr(13);
			if (!util::trim(rest).empty())
				add_text(base + 13 + rest.find_first_not_of(" \t"), util::trim(rest));
			first_line = false;
			continue;
		}
		if (util::starts_with_ci(body, "The situation-specific requirements")) {
			heading_seen = true;
			open_section(SectionKind::SituationSpecific);
			add_text(base, body);
			first_line = false;
			continue;
		}
		if (first_line && !heading_seen) {
			doc.title = std::string(body);
			first_line = false;
			continue;
		}
		first_line = false;

		std::string sbody(body);
		std::smatch m;
		if (cur_section && doc.sections[*cur_section].kind != SectionKind::Summary && std::regex_search(sbody, m, top_label)) {
			RequirementItem it;
			it.item_id = m[1].str();
			it.order = order++;
			it.section = doc.sections[*cur_section].kind;
			if (doc.item(it.item_id))
				throw InputError("duplicate requirement label '" + it.item_id + "'");
			doc.items.push_back(std::move(it));
			cur_item = doc.items.size() - 1;
			cur_top = m[1].str();
			auto off = static_cast<std::size_t>(m.length(0));
			add_text(base + off, body.substr(off));
			continue;
		}
		if (cur_section && !cur_top.empty() && std::regex_search(sbody, m, sub_label)) {
			RequirementItem it;
			it.item_id = cur_top + "(" + m[1].str() + ")";
			it.parent = cur_top;
			it.order = order++;
			it.section = doc.sections[*cur_section].kind;
			if (doc.item(it.item_id))
				throw InputError("duplicate requirement label '" + it.item_id + "'");
			for (auto &p : doc.items)
				if (p.item_id == cur_top)
					p.children.push_back(it.item_id);
			doc.items.push_back(std::move(it));
			cur_item = doc.items.size() - 1;
			auto off = static_cast<std::size_t>(m.length(0));
			add_text(base + off, body.substr(off));
			continue;
		}
		add_text(base, body);
	}
	if (!heading_seen)
		throw MissingSection();
	return doc;
}

/// Parses every sentence with the shallow parser. Sentences without a verb
/// stay unparsed and are reported in `warnings`.
inline void parse_document(RequirementsDocument &doc, const ShallowParser &parser = ShallowParser::bundled()) {
	for (auto &s : doc.sentences) {
		try {
			auto g = parser.parse(s.text, s.id, s.span.begin);
			s.tokens = std::move(g.tokens);
			s.edges = std::move(g.edges);
			s.parsed = true;
		} catch (const UnparsableSentence &) {
			s.tokens = parser.tokenize(s.text, s.span.begin);
			parser.tag(s.tokens);
			s.edges.clear();
			s.parsed = false;
			doc.warnings.push_back("sentence " + s.id + " has no finite verb; treated as prose");
		}
	}
}

/// Attaches externally produced parses, matched to document sentences in order.
inline void attach_conllu(RequirementsDocument &doc, std::vector<SentenceGraph> graphs) {
	if (graphs.size() != doc.sentences.size())
		throw InputError("CoNLL-U has " + std::to_string(graphs.size()) + " sentences but the document has " +
		                 std::to_string(doc.sentences.size()));
	for (std::size_t i = 0; i < graphs.size(); ++i) {
		auto &s = doc.sentences[i];
		auto &g = graphs[i];
		s.tokens = std::move(g.tokens);
		s.edges = std::move(g.edges);
		s.parsed = true;
		detail::align_spans(s, s.span.begin);
	}
}

inline nlohmann::json document_json(const RequirementsDocument &doc) {
	nlohmann::json j;
	j["title"] = doc.title;
	auto secs = nlohmann::json::array();
	for (const auto &s : doc.sections)
		secs.push_back({{"kind", to_string(s.kind)}, {"sentences", s.sentence_ids}});
	j["sections"] = secs;
	auto items = nlohmann::json::array();
	for (const auto &it : doc.items)
		items.push_back({{"item_id", it.item_id},
		                 {"parent", it.parent},
		                 {"order", it.order},
		                 {"section", to_string(it.section)},
		                 {"sentences", it.sentence_ids},
		                 {"children", it.children}});
	j["items"] = items;
	auto sents = nlohmann::json::array();
	for (const auto &s : doc.sentences)
		sents.push_back(s);
	j["sentences"] = sents;
	j["warnings"] = doc.warnings;
	return j;
}

} // namespace irm
