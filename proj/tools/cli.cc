#include "cli.h"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "plank/checker.h"
#include "plank/parser.h"

namespace plank::cli {

namespace {

struct Loaded {
  Script script;
  CheckedScript checked;
};

// Reads, parses and checks the script, printing diagnostics on failure.
std::optional<Loaded> load(const CliConfig& cfg, std::ostream& err, int& code) {
  std::ifstream in(cfg.script_path, std::ios::binary);
  if (!in) {
    fmt::print(err, "{}: error: cannot read file\n", cfg.script_path);
    code = kInputError;
    return std::nullopt;
  }
  std::stringstream buf;
  buf << in.rdbuf();
  auto parsed = parse_script(buf.str(), cfg.script_path);
  if (!parsed) {
    for (const auto& e : parsed.errors()) fmt::print(err, "{}\n", format_parse_error(e));
    code = kInputError;
    return std::nullopt;
  }
  auto checked = check_script(parsed.value());
  if (!checked) {
    for (const auto& e : checked.errors()) fmt::print(err, "{}\n", format_check_error(e));
    code = kCheckError;
    return std::nullopt;
  }
  return Loaded{std::move(parsed).value(), std::move(checked).value()};
}

Spelling spelling(const CliConfig& cfg) { return cfg.ascii_output ? Spelling::Ascii : Spelling::Unicode; }

}  // namespace

int run_check(const CliConfig& cfg, std::ostream& out, std::ostream& err) {
  int code = kOk;
  auto loaded = load(cfg, err, code);
  if (!loaded) return code;
  fmt::print(out, "ok: {} declarations, {} rules\n", loaded->script.declarations.size(),
             loaded->script.rules().size());
  return kOk;
}

int run_normalize(const CliConfig& cfg, std::ostream& out, std::ostream& err) {
  if (!cfg.term_text) {
    fmt::print(err, "error: normalize needs --term\n");
    return kInputError;
  }
  int code = kOk;
  auto loaded = load(cfg, err, code);
  if (!loaded) return code;

  auto parsed = parse_term(*cfg.term_text, "<term>");
  if (!parsed) {
    for (const auto& e : parsed.errors()) fmt::print(err, "{}\n", format_parse_error(e));
    return kInputError;
  }
  const Term& term = parsed.value();
  const GlobalEnv& gamma = loaded->checked.gamma;
  auto sort = declared_sort(gamma, term);
  if (!sort) {
    fmt::print(err, "<term>:1:1: error: the term must be a construction of a declared constructor\n");
    return kCheckError;
  }
  auto errs = check_ground_term(gamma, term, *sort);
  if (!errs.empty()) {
    for (const auto& e : errs) fmt::print(err, "{}\n", format_check_error(e));
    return kCheckError;
  }

  Rewriter rewriter(gamma, loaded->script);
  const Spelling sp = spelling(cfg);
  NormalizeResult result{term, {}, NormalizeStatus::NormalForm};
  size_t count = 0;
  try {
    result = rewriter.normalize(term, cfg.max_steps, [&](const RewriteStep& step, const Term& now) {
      ++count;
      if (cfg.trace) fmt::print(err, "{}\n", format_step(count, step, rewriter.rules()[step.rule_index], now, sp));
    });
  } catch (const EngineError& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kCheckError;
  }
  fmt::print(out, "{}\n", render(result.term, sp));
  if (result.status == NormalizeStatus::FuelExhausted) {
    fmt::print(err, "error: no normal form within {} steps\n", cfg.max_steps);
    return kFuelExhausted;
  }
  return kOk;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sort checker and normalizer for plank rewrite scripts", "plank"};
  app.require_subcommand(1);

  CliConfig cfg;
  bool unicode = false;

  auto* check = app.add_subcommand("check", "Parse and sort-check a script");
  check->add_option("script", cfg.script_path, "Script file")->required();

  auto* normalize = app.add_subcommand("normalize", "Rewrite a term to normal form");
  normalize->add_option("script", cfg.script_path, "Script file")->required();
  normalize->add_option("--term", cfg.term_text, "Term to normalize")->required();
  normalize->add_option("--max-steps", cfg.max_steps, "Rewrite step limit")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  normalize->add_flag("--trace", cfg.trace, "Log every step to stderr");
  normalize->add_flag("--unicode", unicode, "Print with Unicode arrows, brackets and negation");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e, out, err);
    return rc == 0 ? kOk : kInputError;
  }
  cfg.ascii_output = !unicode;
  if (*check) {
    cfg.command = CliConfig::Command::Check;
    return run_check(cfg, out, err);
  }
  cfg.command = CliConfig::Command::Normalize;
  return run_normalize(cfg, out, err);
}

}  // namespace plank::cli
