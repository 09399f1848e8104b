#include "paracon/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "paracon/errors.hpp"

namespace paracon {

using nlohmann::json;

namespace {

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw AnalysisError(ErrorCode::CorpusCorrupted, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return json::parse(buf.str());
  } catch (const json::parse_error& err) {
    throw AnalysisError(ErrorCode::CorpusCorrupted, path.string() + ": " + err.what());
  }
}

void validate_expected(const json& e, const std::string& where) {
  auto bad = [&](const std::string& what) {
    throw AnalysisError(ErrorCode::CorpusCorrupted, where + ": " + what);
  };
  if (!e.is_object() || !e.contains("checks") || !e["checks"].is_array()) bad("missing checks array");
  if (!e.contains("exit_code") || !e["exit_code"].is_number_integer()) bad("missing exit_code");
  for (std::size_t i = 0; i < e["checks"].size(); ++i) {
    const json& c = e["checks"][i];
    const std::string at = "checks/" + std::to_string(i);
    if (!c.is_object() || !c.contains("path") || !c["path"].is_string()) bad(at + ": missing path");
    if (!c.contains("expect")) bad(at + ": missing expect");
    if (!c.contains("source") || !c["source"].is_string()) bad(at + ": missing source");
    const auto src = c["source"].get<std::string>();
    if (src != "published-example" && src != "derived" && src != "trivial") bad(at + ": unknown source");
    if (c.contains("tol") && !(c["tol"].is_number() && c["tol"].get<double>() >= 0)) bad(at + ": bad tol");
    if (c.contains("rel_tol") && !(c["rel_tol"].is_number() && c["rel_tol"].get<double>() >= 0)) {
      bad(at + ": bad rel_tol");
    }
  }
}

/// Recursive comparison; numbers within tolerance, everything else equal.
bool close(const json& actual, const json& expected, double tol, double rel_tol, std::string& why,
           const std::string& where) {
  if (expected.is_number() && actual.is_number()) {
    const double a = actual.get<double>();
    const double e = expected.get<double>();
    const double allowed = std::max(tol, rel_tol * std::abs(e));
    if (allowed == 0.0 ? a == e : std::abs(a - e) <= allowed) return true;
    std::ostringstream os;
    os.precision(10);
    os << where << ": got " << a << ", expected " << e << " (allowed " << allowed << ")";
    why = os.str();
    return false;
  }
  if (expected.is_array() && actual.is_array()) {
    if (expected.size() != actual.size()) {
      why = where + ": size " + std::to_string(actual.size()) + ", expected " + std::to_string(expected.size());
      return false;
    }
    for (std::size_t i = 0; i < expected.size(); ++i) {
      if (!close(actual[i], expected[i], tol, rel_tol, why, where + "/" + std::to_string(i))) return false;
    }
    return true;
  }
  if (actual == expected) return true;
  why = where + ": got " + actual.dump() + ", expected " + expected.dump();
  return false;
}

}  // namespace

std::filesystem::path default_corpus_dir() {
  if (const char* env = std::getenv("PARACON_CORPUS"); env != nullptr && *env != '\0') return env;
  return PARACON_CORPUS_DIR;
}

std::vector<CorpusEntry> load_corpus(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw AnalysisError(ErrorCode::CorpusCorrupted, "no corpus directory at " + dir.string());
  }
  std::vector<CorpusEntry> out;
  for (const auto& item : std::filesystem::directory_iterator(dir)) {
    if (!item.is_directory()) continue;
    CorpusEntry e;
    e.dir = item.path();
    e.id = item.path().filename().string();
    try {
      e.manifest = parse_manifest(read_json(e.dir / "manifest.json"));
    } catch (const AnalysisError& err) {
      if (err.code() == ErrorCode::CorpusCorrupted) throw;
      throw AnalysisError(ErrorCode::CorpusCorrupted, e.id + "/manifest.json: " + err.what());
    }
    if (e.manifest.id != e.id) {
      throw AnalysisError(ErrorCode::CorpusCorrupted, e.id + ": manifest id is '" + e.manifest.id + "'");
    }
    e.expected = read_json(e.dir / "expected.json");
    validate_expected(e.expected, e.id + "/expected.json");
    out.push_back(std::move(e));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

const CorpusEntry& find_entry(const std::vector<CorpusEntry>& corpus, const std::string& id) {
  for (const auto& e : corpus) {
    if (e.id == id) return e;
  }
  throw AnalysisError(ErrorCode::InvalidArgument, "no corpus entry '" + id + "'");
}

CheckOutcome evaluate_check(const json& report, const json& check) {
  CheckOutcome out;
  out.path = check.at("path").get<std::string>();
  out.source = check.value("source", "");
  const json::json_pointer ptr(out.path);
  if (!report.contains(ptr)) {
    out.detail = "field missing from report";
    return out;
  }
  const double tol = check.value("tol", 0.0);
  const double rel_tol = check.value("rel_tol", 0.0);
  out.passed = close(report.at(ptr), check.at("expect"), tol, rel_tol, out.detail, out.path);
  return out;
}

bool GoldenOutcome::passed() const {
  if (!exit_code_matches) return false;
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

GoldenOutcome run_golden(const CorpusEntry& entry, const RunOptions& opts) {
  GoldenOutcome out;
  out.run = run_analyze(entry.manifest, opts);
  out.exit_code_matches = out.run.exit_code == entry.expected["exit_code"].get<int>();
  for (const auto& check : entry.expected["checks"]) out.checks.push_back(evaluate_check(out.run.report, check));
  return out;
}

}  // namespace paracon
