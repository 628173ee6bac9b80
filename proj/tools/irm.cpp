// irm: command-line driver for the requirements-to-model pipeline.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "irm/pipeline.hpp"
#include "irm/review_service.hpp"

namespace {

irm::ReviewService *g_service = nullptr;

void on_signal(int) {
	if (g_service)
		g_service->stop();
}

void write_file(const std::filesystem::path &p, const std::string &text) {
	std::ofstream out(p, std::ios::binary | std::ios::trunc);
	if (!out)
		throw irm::InputError("cannot write '" + p.string() + "'");
	out << text;
}

void write_outputs(const std::string &dir, const irm::StageOutcome &o) {
	if (dir.empty())
		return;
	std::filesystem::create_directories(dir);
	if (o.catalog) {
		write_file(std::filesystem::path(dir) / "catalog.json", irm::catalog_json(*o.catalog).dump(2) + "\n");
		write_file(std::filesystem::path(dir) / "dropped_candidates.json", irm::dropped_json(*o.catalog).dump(2) + "\n");
	}
	if (o.model)
		write_file(std::filesystem::path(dir) / "model.json", irm::serialize(*o.model));
	if (o.report) {
		write_file(std::filesystem::path(dir) / "report.json", irm::report_json(*o.report).dump(2) + "\n");
		write_file(std::filesystem::path(dir) / "report.txt", irm::report_text(*o.report));
	}
}

void print(const irm::StageOutcome &o, bool json) {
	if (json) {
		std::cout << irm::outcome_json(o).dump(2) << "\n";
		return;
	}
	std::cout << irm::to_string(o.stage) << ": " << o.status;
	if (!o.message.empty())
		std::cout << " (" << o.message << ")";
	std::cout << "\n";
	for (const auto &r : o.requests) {
		std::cout << "  " << (r.blocking ? "[blocking] " : "") << r.id() << " suggest=" << r.suggestion;
		if (!r.options.empty())
			std::cout << " options=" << irm::util::join(r.options, "|");
		std::cout << "\n";
	}
	if (o.report && o.stage == irm::Stage::Validate)
		std::cout << irm::report_text(*o.report);
}

} // namespace

int main(int argc, char **argv) {
	CLI::App app{"Requirements text to invariant model pipeline"};
	app.require_subcommand(1);

	irm::RunConfig cfg;
	cfg.state = irm::RunConfig::default_state();
	std::string measure = "wup";
	std::string out_dir;
	std::string model_file;
	bool json = false;
	int port = 8080;

	auto common = [&](CLI::App *sc, bool need_input) {
		auto *in = sc->add_option("--in", cfg.input, "requirements text file");
		if (need_input)
			in->required();
		sc->add_option("--conllu", cfg.conllu, "gold dependency parses (CoNLL-U)");
		sc->add_option("--state", cfg.state, "pipeline state file");
		sc->add_option("--journal", cfg.journal, "decision journal (JSONL)");
		sc->add_option("--lexicon", cfg.lexicon, "synset graph file");
		sc->add_option("--seeds", cfg.seeds, "seed verb file");
		sc->add_option("--threshold", cfg.threshold, "alias similarity threshold");
		sc->add_option("--measure", measure, "verb similarity measure")->check(CLI::IsMember({"path", "wup"}));
		sc->add_option("--cap", cfg.cap, "configuration cap");
		sc->add_option("--out", out_dir, "directory for catalog, model and report files");
		sc->add_flag("--json", json, "machine-readable output");
		sc->add_flag("--force", cfg.force, "recompute stale upstream stages");
		sc->add_flag("--assume-defaults", cfg.assume_defaults, "accept every suggested decision in memory");
	};

	std::vector<std::pair<CLI::App *, irm::Stage>> stages;
	for (auto st : irm::all_stages) {
		auto *sc = app.add_subcommand(irm::to_string(st), "run the " + irm::to_string(st) + " stage");
		common(sc, st != irm::Stage::Validate);
		if (st == irm::Stage::Validate)
			sc->add_option("--model", model_file, "validate this model file instead of the pipeline state");
		stages.emplace_back(sc, st);
	}
	auto *run = app.add_subcommand("run", "run every stage, stopping at the first pending decision");
	common(run, true);
	auto *serve = app.add_subcommand("serve", "serve state and decisions over HTTP on 127.0.0.1");
	common(serve, true);
	serve->add_option("--port", port, "port (0 picks a free one)");

	try {
		app.parse(argc, argv);
	} catch (const CLI::ParseError &e) {
		int rc = app.exit(e);
		return rc == 0 ? 0 : irm::ExitInput;
	}

	try {
		cfg.measure = irm::parse_measure(measure);
		for (auto &[sc, st] : stages) {
			if (!sc->parsed())
				continue;
			if (st == irm::Stage::Validate && !model_file.empty()) {
				auto model = irm::deserialize(irm::util::read_file(model_file));
				irm::StageOutcome o;
				o.stage = st;
				o.report = irm::validate(model, cfg.cap);
				o.exit_code = o.report->verdict() == "errors" ? irm::ExitValidation : irm::ExitOk;
				o.status = o.exit_code ? "errors" : "ok";
				write_outputs(out_dir, o);
				print(o, json);
				return o.exit_code;
			}
			if (cfg.input.empty())
				throw irm::InputError("--in is required");
			auto o = irm::run_stage(st, cfg);
			write_outputs(out_dir, o);
			print(o, json);
			return o.exit_code;
		}
		if (run->parsed()) {
			auto o = irm::run_all(cfg);
			write_outputs(out_dir, o);
			print(o, json);
			return o.exit_code;
		}
		if (serve->parsed()) {
			irm::ReviewService svc;
			auto &s = svc.open("default", cfg);
			int bound = svc.bind(port);
			g_service = &svc;
			std::signal(SIGINT, on_signal);
			std::signal(SIGTERM, on_signal);
			std::cout << "serving session '" << s.id() << "' on http://127.0.0.1:" << bound << "/api/sessions/"
			          << s.id() << "/decisions" << std::endl;
			svc.listen_after_bind();
			return 0;
		}
	} catch (const irm::UnresolvedDecision &e) {
		std::cerr << "pending: " << e.what() << "\n";
		return irm::ExitPending;
	} catch (const irm::UnresolvedProposal &e) {
		std::cerr << "pending: " << e.what() << "\n";
		return irm::ExitPending;
	} catch (const irm::ConfigurationExplosion &e) {
		std::cerr << "error: " << e.what() << "\n";
		return irm::ExitValidation;
	} catch (const irm::Error &e) {
		std::cerr << "error: " << e.code() << ": " << e.what() << "\n";
		return irm::ExitInput;
	} catch (const std::exception &e) {
		std::cerr << "error: " << e.what() << "\n";
		return irm::ExitInput;
	}
	return irm::ExitOk;
}
