#include "abf/trial_store.hpp"

#include <algorithm>
#include <fstream>

#include "abf/error.hpp"

namespace abf {

using nlohmann::json;

json to_json(const TrialRecord& r) {
  json samples = json::array();
  for (const auto& p : r.samples) samples.push_back({p.t, p.x, p.y});
  json occupancy = json::object();
  for (auto label : kAllRegions) occupancy[std::string(to_string(label))] = r.metrics.occupancy(label);

  return {
      {"schema", kTrialSchemaVersion},
      {"id", r.id},
      {"subject", r.subject_id},
      {"group", to_string(r.group)},
      {"condition", {{"eyes", to_string(r.condition.eyes)}, {"surface", to_string(r.condition.surface)}}},
      {"abf_on", r.abf_on},
      {"baseline", {{"x0", r.baseline.x0}, {"y0", r.baseline.y0}, {"window", r.baseline.window},
                    {"n_samples", r.baseline.n_samples}}},
      {"metrics", {{"R", r.metrics.range}, {"V", r.metrics.variance}, {"n", r.metrics.n},
                   {"region_occupancy", std::move(occupancy)}}},
      {"reference_volume", r.reference_volume},
      {"started_at", r.started_at},
      {"source", r.source},
      {"status", to_string(r.status)},
      {"gaps", r.gaps},
      {"samples", std::move(samples)},
  };
}

TrialRecord trial_from_json(const json& j) {
  if (!j.is_object() || !j.contains("schema")) throw Error(Errc::MalformedRecord, "missing schema field");
  if (j.at("schema").get<int>() != kTrialSchemaVersion) {
    throw Error(Errc::SchemaVersionMismatch, "record schema " + j.at("schema").dump() + ", expected " +
                                                 std::to_string(kTrialSchemaVersion));
  }
  try {
    TrialRecord r;
    r.id = j.at("id").get<std::string>();
    r.subject_id = j.at("subject").get<std::string>();
    r.group = parse_group(j.at("group").get<std::string>());
    r.condition.eyes = parse_eyes(j.at("condition").at("eyes").get<std::string>());
    r.condition.surface = parse_surface(j.at("condition").at("surface").get<std::string>());
    r.abf_on = j.at("abf_on").get<bool>();
    const auto& b = j.at("baseline");
    r.baseline = {b.at("x0").get<double>(), b.at("y0").get<double>(), b.at("window").get<double>(),
                  b.at("n_samples").get<std::size_t>()};
    const auto& m = j.at("metrics");
    r.metrics.range = m.at("R").get<double>();
    r.metrics.variance = m.at("V").get<double>();
    r.metrics.n = m.at("n").get<std::size_t>();
    for (auto label : kAllRegions) {
      r.metrics.region_occupancy[static_cast<std::size_t>(label)] =
          m.at("region_occupancy").at(std::string(to_string(label))).get<double>();
    }
    r.reference_volume = j.at("reference_volume").get<double>();
    r.started_at = j.at("started_at").get<std::string>();
    r.source = j.at("source").get<std::string>();
    const auto status = j.at("status").get<std::string>();
    if (status == "complete") r.status = TrialStatus::Complete;
    else if (status == "aborted") r.status = TrialStatus::Aborted;
    else if (status == "incomplete") r.status = TrialStatus::Incomplete;
    else throw Error(Errc::MalformedRecord, "unknown status '" + status + "'");
    r.gaps = j.at("gaps").get<std::size_t>();
    const auto& samples = j.at("samples");
    r.samples.reserve(samples.size());
    for (const auto& s : samples) r.samples.push_back({s.at(0).get<double>(), s.at(1).get<double>(), s.at(2).get<double>()});
    return r;
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedRecord, e.what());
  }
}

std::vector<TrialRecord> load_jsonl(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(Errc::Io, "cannot open " + file.string());
  std::vector<TrialRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = file.string() + ":" + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(Errc::MalformedRecord, where + ": " + e.what());
    }
    try {
      out.push_back(trial_from_json(j));
    } catch (const Error& e) {
      throw Error(e.code(), where + ": " + e.what());
    }
  }
  return out;
}

TrialStore::TrialStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path TrialStore::path_for(const std::string& subject_id) const {
  if (subject_id.empty() || subject_id.find_first_of("/\\") != std::string::npos || subject_id.front() == '.') {
    throw Error(Errc::InvalidArgument, "invalid subject id '" + subject_id + "'");
  }
  return dir_ / (subject_id + ".jsonl");
}

void TrialStore::append(const TrialRecord& record) {
  std::ofstream out(path_for(record.subject_id), std::ios::app);
  if (!out) throw Error(Errc::Io, "cannot append to " + path_for(record.subject_id).string());
  out << to_json(record).dump() << '\n';
  out.flush();
  if (!out) throw Error(Errc::Io, "write failed for " + path_for(record.subject_id).string());
}

std::vector<TrialRecord> TrialStore::load(const std::string& subject_id) const {
  return load_jsonl(path_for(subject_id));
}

std::vector<std::string> TrialStore::subjects() const {
  std::vector<std::string> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") out.push_back(entry.path().stem().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

void TrialStore::save_baseline(const std::string& subject_id, const Baseline& b) const {
  auto path = path_for(subject_id);
  path.replace_extension(".baseline.json");
  std::ofstream out(path, std::ios::trunc);
  out << json{{"schema", kTrialSchemaVersion},
              {"subject", subject_id},
              {"x0", b.x0},
              {"y0", b.y0},
              {"window", b.window},
              {"n_samples", b.n_samples}}
             .dump()
      << '\n';
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
}

std::optional<Baseline> TrialStore::load_baseline(const std::string& subject_id) const {
  auto path = path_for(subject_id);
  path.replace_extension(".baseline.json");
  std::ifstream in(path);
  if (!in) return std::nullopt;
  try {
    const json j = json::parse(in);
    if (j.at("schema").get<int>() != kTrialSchemaVersion) {
      throw Error(Errc::SchemaVersionMismatch, path.string() + ": unsupported schema");
    }
    return Baseline{j.at("x0").get<double>(), j.at("y0").get<double>(), j.at("window").get<double>(),
                    j.at("n_samples").get<std::size_t>()};
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedRecord, path.string() + ": " + e.what());
  }
}

bool TrialStore::protocol_complete(const std::string& subject_id) const {
  if (!std::filesystem::exists(path_for(subject_id))) return false;
  const auto records = load(subject_id);
  return abf::protocol_complete(records);
}

}  // namespace abf
