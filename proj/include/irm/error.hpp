#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace irm {

/// Base of every error raised by the pipeline. `code()` is a stable
/// machine-readable name used in JSON error payloads.
class Error : public std::runtime_error {
public:
	Error(std::string code, const std::string &what)
		: std::runtime_error(what), code_(std::move(code)) {}
	const std::string &code() const noexcept { return code_; }

private:
	std::string code_;
};

class MalformedConllu : public Error {
public:
	MalformedConllu(std::size_t line, const std::string &why)
		: Error("MalformedConllu", "malformed CoNLL-U at line " + std::to_string(line) + ": " + why), line_no(line) {}
	std::size_t line_no;
};

class CyclicParse : public Error {
public:
	explicit CyclicParse(const std::string &sentence)
		: Error("CyclicParse", "dependency heads of sentence '" + sentence + "' do not form a tree"), sentence_id(sentence) {}
	std::string sentence_id;
};

class UnparsableSentence : public Error {
public:
	explicit UnparsableSentence(const std::string &sentence)
		: Error("UnparsableSentence", "no finite verb in sentence '" + sentence + "'"), sentence_id(sentence) {}
	std::string sentence_id;
};

class MissingSection : public Error {
public:
	MissingSection() : Error("MissingSection", "no Summary: or Requirements: heading found") {}
};

class UnknownSynset : public Error {
public:
	explicit UnknownSynset(const std::string &id) : Error("UnknownSynset", "unknown synset '" + id + "'") {}
};

class PosMismatch : public Error {
public:
	PosMismatch(const std::string &a, const std::string &b)
		: Error("PosMismatch", "synsets '" + a + "' and '" + b + "' have different parts of speech") {}
};

class LexiconFormatError : public Error {
public:
	LexiconFormatError(const std::string &file, std::size_t line, const std::string &why)
		: Error("LexiconFormatError", file + ":" + std::to_string(line) + ": " + why) {}
};

class UnresolvedDecision : public Error {
public:
	explicit UnresolvedDecision(const std::string &target)
		: Error("UnresolvedDecision", "decision required for '" + target + "'"), target(target) {}
	std::string target;
};

class SignatureSyntaxError : public Error {
public:
	SignatureSyntaxError(std::size_t pos, const std::string &why)
		: Error("SyntaxError", "signature syntax error at " + std::to_string(pos) + ": " + why), position(pos) {}
	std::size_t position;
};

class UnknownName : public Error {
public:
	explicit UnknownName(const std::string &n) : Error("UnknownName", "unknown name '" + n + "'"), name(n) {}
	std::string name;
};

class ConflictingDecisions : public Error {
public:
	explicit ConflictingDecisions(const std::string &t)
		: Error("ConflictingDecisions", "contradictory journal entries for '" + t + "'") {}
};

class NoOutputOwner : public Error {
public:
	explicit NoOutputOwner(const std::string &inv)
		: Error("NoOutputOwner", "outputs of '" + inv + "' span several components") {}
};

class DanglingInvariant : public Error {
public:
	explicit DanglingInvariant(const std::string &inv)
		: Error("DanglingInvariant", "invariant '" + inv + "' has no parent and is not a top-level requirement") {}
};

class UnresolvedProposal : public Error {
public:
	explicit UnresolvedProposal(const std::string &inv)
		: Error("UnresolvedProposal", "refinement of '" + inv + "' is neither accepted nor replaced by manual children") {}
};

class SchemaViolation : public Error {
public:
	SchemaViolation(const std::string &p, const std::string &why)
		: Error("SchemaViolation", "schema violation at " + p + ": " + why), path(p) {}
	std::string path;
};

class ConfigurationExplosion : public Error {
public:
	ConfigurationExplosion(double count, std::size_t cap)
		: Error("ConfigurationExplosion", "configuration count " + std::to_string(static_cast<long long>(count)) +
		                                      " exceeds cap " + std::to_string(cap)) {}
};

class StaleUpstream : public Error {
public:
	explicit StaleUpstream(const std::string &stage)
		: Error("StaleUpstream", "stage '" + stage + "' is missing or stale; run it first or pass --force") {}
};

class RevisionConflict : public Error {
public:
	RevisionConflict(long expected, long actual)
		: Error("RevisionConflict", "expected revision " + std::to_string(expected) + " but session is at " +
		                                std::to_string(actual)) {}
};

class UnknownDecision : public Error {
public:
	explicit UnknownDecision(const std::string &id) : Error("UnknownDecision", "no decision '" + id + "'") {}
};

class UnknownSession : public Error {
public:
	explicit UnknownSession(const std::string &id) : Error("UnknownSession", "no session '" + id + "'") {}
};

class InputError : public Error {
public:
	explicit InputError(const std::string &what) : Error("InputError", what) {}
};

} // namespace irm
