#include "sslaw/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "sslaw/error.hpp"

namespace sslaw {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kValidation: return "E_VALIDATION";
    case ErrorKind::kDomain: return "E_DOMAIN";
    case ErrorKind::kNumerical: return "E_NUMERICAL";
    case ErrorKind::kIo: return "E_IO";
  }
  return "E_UNKNOWN";
}

std::string_view to_string(LevelKey key) {
  return key == LevelKey::kXLevel ? "x_level" : "source_tag";
}

LevelKey level_key_from_string(std::string_view name) {
  if (name == "x_level") return LevelKey::kXLevel;
  if (name == "source_tag") return LevelKey::kSourceTag;
  fail(ErrorKind::kValidation, "unknown level key '" + std::string(name) + "' (expected x_level or source_tag)");
}

std::string format_number(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

namespace {

std::string row_tag(std::size_t row) { return "row " + std::to_string(row); }

void validate_row(const Observation& obs, std::size_t row) {
  if (obs.model_id.empty()) fail(ErrorKind::kValidation, row_tag(row) + ": empty model_id");
  if (!(obs.n_params > 0.0) || !std::isfinite(obs.n_params))
    fail(ErrorKind::kValidation, row_tag(row) + ": n_params must be positive and finite");
  if (!(obs.d_tokens > 0.0) || !std::isfinite(obs.d_tokens))
    fail(ErrorKind::kValidation, row_tag(row) + ": d_tokens must be positive and finite");
  if (!(obs.loss > 0.0) || !std::isfinite(obs.loss))
    fail(ErrorKind::kValidation, row_tag(row) + ": loss must be positive and finite");
  if (obs.x_level && !std::isfinite(*obs.x_level))
    fail(ErrorKind::kValidation, row_tag(row) + ": x_level must be finite");
}

using DuplicateKey = std::tuple<std::string, double, bool, double, bool, std::string>;

DuplicateKey duplicate_key(const Observation& obs) {
  return {obs.model_id, obs.d_tokens, obs.x_level.has_value(), obs.x_level.value_or(0.0),
          obs.source_tag.has_value(), obs.source_tag.value_or("")};
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Splits one CSV record. Double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.emplace_back(trim(current));
      current.clear();
    } else {
      current.push_back(ch);
    }
  }
  fields.emplace_back(trim(current));
  return fields;
}

double parse_real(std::string_view cell, std::string_view column, std::size_t row) {
  std::string_view s = trim(cell);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    fail(ErrorKind::kValidation,
         row_tag(row) + ": non-numeric value '" + std::string(cell) + "' in column " + std::string(column));
  }
  return value;
}

}  // namespace

ObservationSet::ObservationSet(std::vector<Observation> observations, Normalization normalization,
                               LevelKey level_key)
    : observations_(std::move(observations)), normalization_(normalization), level_key_(level_key) {
  if (!(normalization_.n_scale > 0.0) || !(normalization_.d_scale > 0.0) ||
      !std::isfinite(normalization_.n_scale) || !std::isfinite(normalization_.d_scale)) {
    fail(ErrorKind::kValidation, "normalization scales must be positive and finite");
  }
  std::set<DuplicateKey> seen;
  for (std::size_t i = 0; i < observations_.size(); ++i) {
    validate_row(observations_[i], i + 1);
    if (!seen.insert(duplicate_key(observations_[i])).second) {
      fail(ErrorKind::kValidation, row_tag(i + 1) + ": duplicate key (model_id=" + observations_[i].model_id +
                                       ", d_tokens=" + format_number(observations_[i].d_tokens) + ")");
    }
  }
}

bool ObservationSet::has_x() const {
  return std::all_of(observations_.begin(), observations_.end(),
                     [](const Observation& o) { return o.x_level.has_value(); });
}

ObservationSet ObservationSet::with_observations(std::vector<Observation> observations) const {
  return ObservationSet(std::move(observations), normalization_, level_key_);
}

ObservationSet ObservationSet::with_normalization(Normalization normalization) const {
  return ObservationSet(observations_, normalization, level_key_);
}

ObservationSet parse_observations_csv(std::string_view text, LevelKey level_key) {
  std::istringstream in{std::string(text)};
  std::string line;
  // Skip a UTF-8 BOM and blank lines before the header.
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    std::string_view view = line;
    if (view.substr(0, 3) == "\xEF\xBB\xBF") view.remove_prefix(3);
    if (trim(view).empty()) continue;
    header = split_csv_line(view);
    break;
  }
  if (header.empty()) fail(ErrorKind::kValidation, "CSV input has no header row");

  std::map<std::string, std::size_t> column;
  for (std::size_t i = 0; i < header.size(); ++i) column.emplace(header[i], i);
  for (const char* required : {"model_id", "n_params", "d_tokens", "loss"}) {
    if (!column.count(required)) fail(ErrorKind::kValidation, std::string("missing column ") + required);
  }
  const auto x_col = column.find("x_level");
  const auto tag_col = column.find("source_tag");

  std::vector<Observation> rows;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      fail(ErrorKind::kValidation, row_tag(row) + ": expected " + std::to_string(header.size()) + " fields, got " +
                                       std::to_string(cells.size()));
    }
    Observation obs;
    obs.model_id = cells[column["model_id"]];
    obs.n_params = parse_real(cells[column["n_params"]], "n_params", row);
    obs.d_tokens = parse_real(cells[column["d_tokens"]], "d_tokens", row);
    obs.loss = parse_real(cells[column["loss"]], "loss", row);
    if (x_col != column.end() && !cells[x_col->second].empty()) {
      obs.x_level = parse_real(cells[x_col->second], "x_level", row);
    }
    if (tag_col != column.end() && !cells[tag_col->second].empty()) obs.source_tag = cells[tag_col->second];
    validate_row(obs, row);
    rows.push_back(std::move(obs));
  }
  return ObservationSet(std::move(rows), Normalization{}, level_key);
}

ObservationSet parse_observations_json(std::string_view text, LevelKey level_key) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::kValidation, std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_array()) fail(ErrorKind::kValidation, "JSON observations must be an array of objects");

  auto number = [](const nlohmann::json& obj, const char* key, std::size_t row) {
    if (!obj.contains(key)) fail(ErrorKind::kValidation, row_tag(row) + ": missing key " + key);
    const auto& v = obj.at(key);
    if (!v.is_number()) fail(ErrorKind::kValidation, row_tag(row) + ": non-numeric value in key " + key);
    return v.get<double>();
  };

  std::vector<Observation> rows;
  std::size_t row = 0;
  for (const auto& obj : doc) {
    ++row;
    if (!obj.is_object()) fail(ErrorKind::kValidation, row_tag(row) + ": expected an object");
    Observation obs;
    if (!obj.contains("model_id") || !obj.at("model_id").is_string())
      fail(ErrorKind::kValidation, row_tag(row) + ": missing key model_id");
    obs.model_id = obj.at("model_id").get<std::string>();
    obs.n_params = number(obj, "n_params", row);
    obs.d_tokens = number(obj, "d_tokens", row);
    obs.loss = number(obj, "loss", row);
    if (obj.contains("x_level") && !obj.at("x_level").is_null()) obs.x_level = number(obj, "x_level", row);
    if (obj.contains("source_tag") && !obj.at("source_tag").is_null())
      obs.source_tag = obj.at("source_tag").get<std::string>();
    validate_row(obs, row);
    rows.push_back(std::move(obs));
  }
  return ObservationSet(std::move(rows), Normalization{}, level_key);
}

DataFormat format_from_path(const std::filesystem::path& path) {
  return path.extension() == ".json" ? DataFormat::kJson : DataFormat::kCsv;
}

ObservationSet load_observations(const std::filesystem::path& path, DataFormat format, LevelKey level_key) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  return format == DataFormat::kJson ? parse_observations_json(text, level_key)
                                     : parse_observations_csv(text, level_key);
}

std::string level_label(const Observation& obs, LevelKey key) {
  if (key == LevelKey::kXLevel) return obs.x_level ? format_number(*obs.x_level) : std::string();
  return obs.source_tag.value_or("");
}

std::vector<LevelGroup> group_by_level(const ObservationSet& set) {
  const LevelKey key = set.level_key();
  std::vector<LevelGroup> groups;
  if (key == LevelKey::kXLevel) {
    std::map<double, std::vector<Observation>> buckets;
    for (std::size_t i = 0; i < set.size(); ++i) {
      const auto& obs = set[i];
      if (!obs.x_level) fail(ErrorKind::kValidation, row_tag(i + 1) + ": missing x_level for level grouping");
      buckets[*obs.x_level].push_back(obs);
    }
    for (auto& [level, rows] : buckets) {
      groups.push_back({format_number(level), level, set.with_observations(std::move(rows))});
    }
  } else {
    std::map<std::string, std::vector<Observation>> buckets;
    for (const auto& obs : set.observations()) buckets[obs.source_tag.value_or("")].push_back(obs);
    for (auto& [tag, rows] : buckets) {
      groups.push_back({tag, std::nullopt, set.with_observations(std::move(rows))});
    }
  }
  return groups;
}

std::vector<double> distinct_axis_values(const ObservationSet& set, Axis axis) {
  if (set.empty()) fail(ErrorKind::kValidation, "distinct_axis_values: empty observation set");
  std::vector<double> values;
  values.reserve(set.size());
  for (const auto& obs : set.observations()) values.push_back(axis == Axis::kN ? obs.n_params : obs.d_tokens);
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  return values;
}

}  // namespace sslaw
