// xmrc command-line front end.
//
//   xmrc run --config run.conf [--key value ...]
//   xmrc report --run-dir runs/demo
//   xmrc validate-corpus --corpus data/xquad [--languages en,de]
//   xmrc make-fixture --out data/synthetic --languages en,de --samples 20

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "xmrc/config.hpp"
#include "xmrc/corpus.hpp"
#include "xmrc/error.hpp"
#include "xmrc/fixtures.hpp"
#include "xmrc/report.hpp"
#include "xmrc/runner.hpp"
#include "xmrc/util.hpp"

namespace {

// Leftover `--key value` or `--key=value` arguments become config overrides.
void apply_overrides(xmrc::ConfigMap& map, const std::vector<std::string>& extras) {
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const auto& arg = extras[i];
    if (arg.rfind("--", 0) != 0 || arg.size() == 2) throw xmrc::ConfigError("unexpected argument '" + arg + "'");
    auto body = arg.substr(2);
    if (auto eq = body.find('='); eq != std::string::npos) {
      map.set(body.substr(0, eq), body.substr(eq + 1));
      continue;
    }
    if (i + 1 == extras.size()) throw xmrc::ConfigError("override --" + body + " needs a value");
    map.set(body, extras[++i]);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-lingual reading comprehension evaluation and analysis"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run the enabled stages; extra --key value pairs override the config");
  std::string config_path;
  run->add_option("--config", config_path, "Flat key = value config file");
  run->allow_extras();

  auto* report = app.add_subcommand("report", "Render tables and figures from a run directory");
  std::string run_dir;
  report->add_option("--run-dir", run_dir, "Run directory")->required();

  auto* validate = app.add_subcommand("validate-corpus", "Load and check a parallel corpus");
  std::string corpus_prefix;
  std::vector<std::string> languages;
  validate->add_option("--corpus", corpus_prefix, "Corpus prefix <dir>/<name>")->required();
  validate->add_option("--languages", languages, "Languages to require")->delimiter(',');

  auto* fixture = app.add_subcommand("make-fixture", "Write a synthetic parallel corpus");
  std::string fixture_out;
  std::vector<std::string> fixture_langs{"en", "de"};
  std::size_t fixture_samples = 20;
  std::uint64_t fixture_seed = 1;
  fixture->add_option("--out", fixture_out, "Output prefix <dir>/<name>")->required();
  fixture->add_option("--languages", fixture_langs, "Languages")->delimiter(',');
  fixture->add_option("--samples", fixture_samples, "Number of samples");
  fixture->add_option("--seed", fixture_seed, "Seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      auto map = config_path.empty() ? xmrc::ConfigMap{} : xmrc::ConfigMap::load(config_path);
      apply_overrides(map, run->remaining());
      auto config = xmrc::RunConfig::from_map(map);
      auto manifest = xmrc::run(config);
      bool ok = true;
      for (const auto& s : manifest.stages) {
        std::cout << s.name << ": " << s.status << (s.reused ? " (reused)" : "")
                  << (s.message.empty() ? "" : " - " + s.message) << "\n";
        if (s.status == "failed") ok = false;
      }
      std::cout << "template " << manifest.template_used << ", backend calls " << manifest.backend_calls
                << ", cache hits " << manifest.cache_hits << "\n";
      return ok ? 0 : 2;
    }
    if (*report) {
      auto result = xmrc::render_report(run_dir);
      for (const auto& f : result.files) std::cout << "wrote report/" << f << "\n";
      for (const auto& n : result.notes) std::cout << "note: " << n << "\n";
      return 0;
    }
    if (*validate) {
      auto corpus = xmrc::load_corpus(corpus_prefix, languages);
      std::cout << corpus.name << ": " << corpus.samples.size() << " samples, languages "
                << xmrc::join(corpus.languages, ",") << ", digest " << corpus.digest() << "\n";
      return 0;
    }
    if (*fixture) {
      std::filesystem::path out(fixture_out);
      auto corpus = xmrc::make_synthetic_corpus(fixture_langs, fixture_samples, fixture_seed, out.filename().string());
      xmrc::save_corpus(corpus, out.parent_path().empty() ? std::filesystem::path(".") : out.parent_path());
      std::cout << "wrote " << corpus.samples.size() << " samples for " << xmrc::join(corpus.languages, ",") << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
