#include "annuity_bounds/config.hpp"
#include "annuity_bounds/runner.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>

using namespace annuity_bounds;

namespace {

constexpr int kExitInvalid = 2;
constexpr int kExitNumerical = 3;

struct Loaded {
	RunConfig cfg;
	LifeTable table;
};

Loaded load(const std::string &path) {
	auto cfg = load_run_config(path);
	LifeTable table = [&] {
		try {
			return cfg.load_table();
		} catch (const Error &e) {
			throw Error(ErrorCode::ConfigInvalid, std::string("life table: ") + e.what());
		}
	}();
	validate_run_config(cfg, table);
	return {std::move(cfg), std::move(table)};
}

} // namespace

int main(int argc, char **argv) {
	CLI::App app{"Guaranteed-benefit bounds under life-table uncertainty"};
	app.require_subcommand(1);
	std::string config_path, out_path;

	auto *run_cmd = app.add_subcommand("run", "compute the configured mode and write CSV");
	run_cmd->add_option("--config", config_path, "JSON run configuration")->required();
	run_cmd->add_option("--out", out_path, "CSV destination (overrides the config's output)");

	auto *validate_cmd = app.add_subcommand("validate", "check a configuration without computing");
	validate_cmd->add_option("--config", config_path, "JSON run configuration")->required();

	try {
		app.parse(argc, argv);
	} catch (const CLI::ParseError &e) {
		const int code = app.exit(e);
		return code == 0 ? 0 : kExitInvalid;
	}

	std::optional<Loaded> loaded;
	try {
		loaded.emplace(load(config_path));
	} catch (const Error &e) {
		std::cerr << "invalid configuration: " << e.what() << "\n";
		return kExitInvalid;
	}

	if (*validate_cmd) {
		std::cout << "ok: mode " << to_string(loaded->cfg.mode) << ", config-fnv1a " << config_hash(loaded->cfg) << "\n";
		return 0;
	}

	if (out_path.empty()) out_path = loaded->cfg.output;
	std::string csv;
	try {
		csv = to_csv(run(loaded->cfg, loaded->table), loaded->cfg);
	} catch (const Error &e) {
		std::cerr << "numerical failure: " << e.what() << "\n";
		return kExitNumerical;
	}
	try {
		if (out_path.empty() || out_path == "-") std::cout << csv;
		else write_text(out_path, csv);
	} catch (const Error &e) {
		std::cerr << e.what() << "\n";
		return e.code() == ErrorCode::ConfigInvalid ? kExitInvalid : kExitNumerical;
	}
	return 0;
}
