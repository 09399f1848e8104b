#include <doctest.h>

#include "paracon/corpus.hpp"
#include "paracon/errors.hpp"
#include "paracon/report.hpp"

using namespace paracon;

namespace {

const std::vector<CorpusEntry>& corpus() {
  static const auto c = load_corpus();
  return c;
}

}  // namespace

TEST_CASE("analyze reports are byte-identical across runs and execution modes") {
  for (const auto& e : corpus()) {
    RunOptions serial;
    serial.exec = Exec::serial;
    const std::string a = dump_report(run_analyze(e.manifest).report);
    const std::string b = dump_report(run_analyze(e.manifest).report);
    const std::string c = dump_report(run_analyze(e.manifest, serial).report);
    INFO(e.id);
    CHECK(a == b);
    CHECK(a == c);
  }
}

TEST_CASE("reports echo effective settings and overrides") {
  const Manifest& m = find_entry(corpus(), "s1-line-bundle").manifest;
  RunOptions o;
  o.steps = 512;
  o.seed = 77;
  const auto r = run_analyze(m, o).report;
  CHECK(r["effective"]["rk4_steps"] == 512);
  CHECK(r["effective"]["seed"] == 77);
  CHECK(r["manifest"]["digest"] == m.digest());
  CHECK_FALSE(r.contains("timings"));
  o.timings = true;
  CHECK(run_analyze(m, o).report.contains("timings"));
}

TEST_CASE("exit codes") {
  CHECK(run_analyze(find_entry(corpus(), "sphere").manifest).exit_code == 0);
  CHECK(run_global(find_entry(corpus(), "smooth-pathology").manifest).exit_code == 2);
  const auto f = run_flag(find_entry(corpus(), "smooth-pathology").manifest, {0.5});
  CHECK(f.exit_code == 0);
  CHECK(f.report["trace"]["dims"].back() == 3);
  const auto h = run_holonomy(find_entry(corpus(), "punctured-plane").manifest, "unit-circle");
  CHECK(h.exit_code == 0);
  CHECK_THROWS_AS(run_holonomy(find_entry(corpus(), "punctured-plane").manifest, "nope"), AnalysisError);
  CHECK_THROWS_AS(run_flag(find_entry(corpus(), "sphere").manifest, {1, 2, 3}), AnalysisError);
}

TEST_CASE("text summary mentions the verdict") {
  const auto r = run_analyze(find_entry(corpus(), "punctured-plane").manifest).report;
  const std::string t = text_summary(r);
  CHECK(t.find("status metric") != std::string::npos);
  CHECK(t.find("caveat") != std::string::npos);
}
