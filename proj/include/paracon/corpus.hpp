#pragma once

// Built-in corpus: manifests shipped under corpus/<id>/ with golden
// expectations in expected.json. A golden check addresses a report field by
// JSON pointer and compares it exactly or within a tolerance.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "paracon/manifest.hpp"
#include "paracon/report.hpp"

namespace paracon {

struct CorpusEntry {
  std::string id;
  Manifest manifest;
  nlohmann::json expected;  // {"exit_code", "checks": [...]}
  std::filesystem::path dir;
};

/// Directory compiled in at build time, overridable by PARACON_CORPUS.
std::filesystem::path default_corpus_dir();

/// Every entry under dir, sorted by id. Throws CorpusCorrupted.
std::vector<CorpusEntry> load_corpus(const std::filesystem::path& dir = default_corpus_dir());

const CorpusEntry& find_entry(const std::vector<CorpusEntry>& corpus, const std::string& id);

struct CheckOutcome {
  std::string path;
  std::string source;  // published-example, derived or trivial
  bool passed = false;
  std::string detail;
};

struct GoldenOutcome {
  RunResult run;
  std::vector<CheckOutcome> checks;
  bool exit_code_matches = false;
  bool passed() const;
};

/// Runs `analyze` on the entry and evaluates every golden check.
GoldenOutcome run_golden(const CorpusEntry& entry, const RunOptions& opts = {});

/// One check against a report; exposed for tests.
CheckOutcome evaluate_check(const nlohmann::json& report, const nlohmann::json& check);

}  // namespace paracon
