#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "abf/session.hpp"

namespace abf {

nlohmann::json to_json(const TrialRecord& r);
/// Throws SchemaVersionMismatch or MalformedRecord.
TrialRecord trial_from_json(const nlohmann::json& j);

/// JSON-lines trial store: one `<subject>.jsonl` file per subject, one
/// record per line, each tagged with the schema version.
class TrialStore {
 public:
  explicit TrialStore(std::filesystem::path dir);

  void append(const TrialRecord& record);
  /// Throws MalformedRecord / SchemaVersionMismatch naming the bad line.
  std::vector<TrialRecord> load(const std::string& subject_id) const;
  std::vector<std::string> subjects() const;
  bool protocol_complete(const std::string& subject_id) const;
  /// Calibration result kept beside the trials as `<subject>.baseline.json`.
  void save_baseline(const std::string& subject_id, const Baseline& baseline) const;
  std::optional<Baseline> load_baseline(const std::string& subject_id) const;

  std::filesystem::path path_for(const std::string& subject_id) const;
  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  std::filesystem::path dir_;
};

std::vector<TrialRecord> load_jsonl(const std::filesystem::path& file);

}  // namespace abf
