// paracon: metricity analysis of connections given by a JSON manifest.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "paracon/corpus.hpp"
#include "paracon/errors.hpp"
#include "paracon/report.hpp"

namespace {

std::vector<double> parse_point(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) {
      throw paracon::AnalysisError(paracon::ErrorCode::InvalidArgument, "bad coordinate '" + item + "'");
    }
    out.push_back(v);
  }
  return out;
}

void emit(const paracon::RunResult& result, const std::string& out_path, const std::string& format) {
  const std::string body = paracon::dump_report(result.report);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw paracon::AnalysisError(paracon::ErrorCode::InvalidArgument, "cannot write " + out_path);
  out << body;
  if (format == "text") {
    std::cout << paracon::text_summary(result.report);
  } else {
    std::cout << body;
  }
}

}  // namespace

int main(int argc, char** argv) {
  paracon::apply_thread_limit();

  CLI::App app{"Decide whether a connection admits a parallel metric"};
  app.set_version_flag("--version", std::string(PARACON_VERSION));
  app.require_subcommand(1);

  std::string out_path = "report.json";
  std::string format = "json";
  int steps = 0;
  std::uint64_t seed = 0;
  bool timings = false;
  bool serial = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", out_path, "Report path")->capture_default_str();
    sub->add_option("--steps", steps, "RK4 and quadrature steps (overrides the manifest)")->check(CLI::Range(16, 1 << 24));
    sub->add_option("--seed", seed, "Seed for the PD search restarts (overrides the manifest)");
    sub->add_option("--format", format, "Console output")->check(CLI::IsMember({"json", "text"}))->capture_default_str();
    sub->add_flag("--timings", timings, "Record wall-clock time per stage in the report");
    sub->add_flag("--serial", serial, "Run every stage on one thread");
  };

  std::string manifest_path;
  std::string point;
  std::string loop;
  std::string corpus_id;

  auto* analyze = app.add_subcommand("analyze", "Full pipeline: flag, local and global metricity");
  analyze->add_option("manifest", manifest_path, "Manifest JSON")->required()->check(CLI::ExistingFile);
  add_common(analyze);

  auto* flag = app.add_subcommand("flag", "Derived flag at one point");
  flag->add_option("manifest", manifest_path, "Manifest JSON")->required()->check(CLI::ExistingFile);
  flag->add_option("--point", point, "Comma-separated coordinates; missing ones come from the base point")->required();
  add_common(flag);

  auto* holonomy = app.add_subcommand("holonomy", "Holonomy of the terminal subspace around one loop");
  holonomy->add_option("manifest", manifest_path, "Manifest JSON")->required()->check(CLI::ExistingFile);
  holonomy->add_option("--loop", loop, "Loop name")->required();
  add_common(holonomy);

  auto* global = app.add_subcommand("global", "Global metricity verdict");
  global->add_option("manifest", manifest_path, "Manifest JSON")->required()->check(CLI::ExistingFile);
  add_common(global);

  auto* corpus = app.add_subcommand("corpus", "Run a built-in corpus entry against its golden values");
  corpus->add_option("--id", corpus_id, "Entry id")->required();
  add_common(corpus);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  paracon::RunOptions opts;
  opts.exec = serial ? paracon::Exec::serial : paracon::Exec::parallel;
  opts.timings = timings;
  auto* sub = app.get_subcommands().front();
  if (sub->count("--steps") > 0) opts.steps = steps;
  if (sub->count("--seed") > 0) opts.seed = seed;

  try {
    if (sub == corpus) {
      const auto entries = paracon::load_corpus();
      const auto& entry = paracon::find_entry(entries, corpus_id);
      const auto outcome = paracon::run_golden(entry, opts);
      emit(outcome.run, out_path, "text");
      std::cout << (outcome.exit_code_matches ? "PASS" : "FAIL") << "  exit_code " << outcome.run.exit_code
                << "\n";
      for (const auto& c : outcome.checks) {
        std::cout << (c.passed ? "PASS" : "FAIL") << "  " << c.path << "  [" << c.source << "]";
        if (!c.passed) std::cout << "  " << c.detail;
        std::cout << "\n";
      }
      return outcome.passed() ? 0 : 1;
    }

    const paracon::Manifest manifest = paracon::load_manifest(manifest_path);
    paracon::RunResult result;
    if (sub == analyze) result = paracon::run_analyze(manifest, opts);
    if (sub == global) result = paracon::run_global(manifest, opts);
    if (sub == flag) result = paracon::run_flag(manifest, parse_point(point), opts);
    if (sub == holonomy) result = paracon::run_holonomy(manifest, loop, opts);
    emit(result, out_path, format);
    return result.exit_code;
  } catch (const paracon::AnalysisError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
}
