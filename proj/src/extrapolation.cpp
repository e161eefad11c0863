#include "sslaw/extrapolation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "sslaw/error.hpp"
#include "sslaw/metrics.hpp"

namespace sslaw {

std::string_view to_string(SplitMode mode) {
  switch (mode) {
    case SplitMode::kToken: return "token";
    case SplitMode::kModel: return "model";
    case SplitMode::kJoint: return "joint";
  }
  return "token";
}

std::string_view to_string(FitMode mode) { return mode == FitMode::kPerLevel ? "per_level" : "joint_x"; }

SplitMode split_mode_from_string(std::string_view name) {
  if (name == "token") return SplitMode::kToken;
  if (name == "model") return SplitMode::kModel;
  if (name == "joint") return SplitMode::kJoint;
  fail(ErrorKind::kValidation, "unknown split mode '" + std::string(name) + "' (expected token, model or joint)");
}

FitMode fit_mode_from_string(std::string_view name) {
  if (name == "per_level") return FitMode::kPerLevel;
  if (name == "joint_x") return FitMode::kJointX;
  fail(ErrorKind::kValidation, "unknown fit mode '" + std::string(name) + "' (expected per_level or joint_x)");
}

void SplitSpec::validate() const {
  const bool need_j = mode != SplitMode::kModel;
  const bool need_k = mode != SplitMode::kToken;
  if (need_j && (!j || *j < 1)) fail(ErrorKind::kValidation, std::string(to_string(mode)) + " split requires j >= 1");
  if (need_k && (!k || *k < 1)) fail(ErrorKind::kValidation, std::string(to_string(mode)) + " split requires k >= 1");
}

std::string SplitSpec::label() const {
  switch (mode) {
    case SplitMode::kToken: return "j=" + std::to_string(j.value_or(0));
    case SplitMode::kModel: return "k=" + std::to_string(k.value_or(0));
    case SplitMode::kJoint: return "k=" + std::to_string(k.value_or(0)) + ",j=" + std::to_string(j.value_or(0));
  }
  return {};
}

namespace {

// Rank of each row's D among its model's distinct D values (0 = earliest).
std::vector<std::size_t> token_ranks(const ObservationSet& set) {
  std::map<std::string, std::set<double>> per_model;
  for (const auto& obs : set.observations()) per_model[obs.model_id].insert(obs.d_tokens);
  std::vector<std::size_t> ranks;
  ranks.reserve(set.size());
  for (const auto& obs : set.observations()) {
    const auto& ds = per_model[obs.model_id];
    ranks.push_back(static_cast<std::size_t>(std::distance(ds.begin(), ds.find(obs.d_tokens))));
  }
  return ranks;
}

std::map<std::string, std::size_t> distinct_d_per_model(const ObservationSet& set) {
  std::map<std::string, std::set<double>> per_model;
  for (const auto& obs : set.observations()) per_model[obs.model_id].insert(obs.d_tokens);
  std::map<std::string, std::size_t> counts;
  for (const auto& [model, ds] : per_model) counts[model] = ds.size();
  return counts;
}

// Groups by level, treating a set with no x_level at all as one group.
std::vector<LevelGroup> level_groups(const ObservationSet& set) {
  const bool none_have_x = std::none_of(set.observations().begin(), set.observations().end(),
                                        [](const Observation& o) { return o.x_level.has_value(); });
  if (set.level_key() == LevelKey::kXLevel && none_have_x) return {{"all", std::nullopt, set}};
  return group_by_level(set);
}

double predict_or_throw(const FitResult& fit, const Observation& obs) {
  try {
    return predict_observation(fit, obs);
  } catch (const Error& e) {
    fail(ErrorKind::kDomain, "prediction failed for model " + obs.model_id + " at d_tokens=" +
                                 format_number(obs.d_tokens) + ": " + e.what());
  }
}

}  // namespace

Split make_split(const ObservationSet& set, const SplitSpec& spec) {
  spec.validate();
  if (set.empty()) fail(ErrorKind::kValidation, "cannot split an empty observation set");

  const auto ranks = token_ranks(set);
  const auto n_values = distinct_axis_values(set, Axis::kN);
  const auto d_counts = distinct_d_per_model(set);

  double n_cut = 0.0;  // largest training model size
  if (spec.mode != SplitMode::kToken) {
    const auto k = static_cast<std::size_t>(*spec.k);
    if (n_values.size() < k + 1) {
      fail(ErrorKind::kValidation, "model split with k=" + std::to_string(k) + " needs at least " +
                                       std::to_string(k + 1) + " distinct model sizes, found " +
                                       std::to_string(n_values.size()));
    }
    n_cut = n_values[k - 1];
  }
  if (spec.mode != SplitMode::kModel) {
    const auto j = static_cast<std::size_t>(*spec.j);
    for (const auto& [model, count] : d_counts) {
      const bool trained = spec.mode == SplitMode::kToken ||
                           std::any_of(set.observations().begin(), set.observations().end(), [&](const Observation& o) {
                             return o.model_id == model && o.n_params <= n_cut;
                           });
      if (trained && count < j) {
        fail(ErrorKind::kValidation, "token split with j=" + std::to_string(j) + " but model " + model + " has only " +
                                         std::to_string(count) + " distinct token counts");
      }
    }
  }

  std::vector<Observation> train, test, excluded;
  if (spec.mode == SplitMode::kToken) {
    for (std::size_t i = 0; i < set.size(); ++i) {
      (ranks[i] < static_cast<std::size_t>(*spec.j) ? train : test).push_back(set[i]);
    }
  } else if (spec.mode == SplitMode::kModel) {
    for (const auto& obs : set.observations()) (obs.n_params <= n_cut ? train : test).push_back(obs);
  } else {
    double horizon = 0.0;
    for (std::size_t i = 0; i < set.size(); ++i) {
      if (set[i].n_params <= n_cut && ranks[i] < static_cast<std::size_t>(*spec.j)) {
        horizon = std::max(horizon, set[i].d_tokens);
      }
    }
    for (std::size_t i = 0; i < set.size(); ++i) {
      const auto& obs = set[i];
      if (obs.n_params <= n_cut) {
        (ranks[i] < static_cast<std::size_t>(*spec.j) ? train : excluded).push_back(obs);
      } else {
        (spec.joint_all_heldout || obs.d_tokens > horizon ? test : excluded).push_back(obs);
      }
    }
  }
  if (test.empty()) fail(ErrorKind::kValidation, "split " + spec.label() + " leaves an empty test set");
  if (train.empty()) fail(ErrorKind::kValidation, "split " + spec.label() + " leaves an empty training set");
  return {set.with_observations(std::move(train)), set.with_observations(std::move(test)),
          set.with_observations(std::move(excluded))};
}

FitMode default_fit_mode(const LawSpec& law) { return law.needs_x ? FitMode::kJointX : FitMode::kPerLevel; }

ExtrapReport run_extrapolation(const ObservationSet& set, const LawSpec& law, const SplitSpec& spec,
                               const FitConfig& config, std::optional<FitMode> fit_mode) {
  const Split split = make_split(set, spec);
  ExtrapReport report;
  report.law_id = law.id;
  report.split = spec;
  report.fit_mode = fit_mode.value_or(default_fit_mode(law));
  report.train_count = split.train.size();
  report.test_count = split.test.size();
  report.excluded_count = split.excluded.size();

  std::map<std::string, std::size_t> fit_for_level;  // level label -> index into report.fits
  if (report.fit_mode == FitMode::kJointX) {
    report.fits.push_back(fit(law, split.train, config));
    report.fit_levels.push_back("*");
  } else {
    for (const auto& group : level_groups(split.train)) {
      fit_for_level[group.label] = report.fits.size();
      report.fits.push_back(fit(law, group.set, config));
      report.fit_levels.push_back(group.label);
    }
  }

  std::vector<EvalPairs> groups;
  for (const auto& group : level_groups(split.test)) {
    const FitResult* fr = &report.fits.front();
    if (report.fit_mode == FitMode::kPerLevel) {
      const auto it = fit_for_level.find(group.label);
      if (it == fit_for_level.end()) {
        fail(ErrorKind::kValidation, "no training observations at level " + group.label);
      }
      fr = &report.fits[it->second];
    }
    EvalPairs pairs;
    pairs.group_label = group.label;
    for (const auto& obs : group.set.observations()) {
      pairs.predicted.push_back(predict_or_throw(*fr, obs));
      pairs.observed.push_back(obs.loss);
    }
    report.per_level_r2.push_back({group.label, try_r_squared(pairs)});
    report.test_predicted.insert(report.test_predicted.end(), pairs.predicted.begin(), pairs.predicted.end());
    report.test_observed.insert(report.test_observed.end(), pairs.observed.begin(), pairs.observed.end());
    groups.push_back(std::move(pairs));
  }
  report.pooled_r2 = try_pooled_r_squared(groups);
  return report;
}

std::optional<double> mean_predictor_pooled_r2(const ObservationSet& set, const SplitSpec& spec) {
  const Split split = make_split(set, spec);
  std::map<std::string, double> level_mean;
  for (const auto& group : level_groups(split.train)) {
    double sum = 0.0;
    for (const auto& obs : group.set.observations()) sum += obs.loss;
    level_mean[group.label] = sum / static_cast<double>(group.set.size());
  }
  std::vector<EvalPairs> groups;
  for (const auto& group : level_groups(split.test)) {
    const auto it = level_mean.find(group.label);
    if (it == level_mean.end()) fail(ErrorKind::kValidation, "no training observations at level " + group.label);
    EvalPairs pairs;
    for (const auto& obs : group.set.observations()) {
      pairs.predicted.push_back(it->second);
      pairs.observed.push_back(obs.loss);
    }
    groups.push_back(std::move(pairs));
  }
  return try_pooled_r_squared(groups);
}

SweepTable progressive_sweep(const ObservationSet& set, const std::vector<LawSpec>& laws,
                             const std::vector<SplitSpec>& specs, const FitConfig& config,
                             std::optional<FitMode> fit_mode) {
  SweepTable table;
  for (const auto& law : laws) table.laws.push_back(law.id);
  table.splits = specs;
  for (const auto& law : laws) {
    for (const auto& spec : specs) {
      SweepCell cell{law.id, spec, std::nullopt, {}};
      try {
        cell.report = run_extrapolation(set, law, spec, config, fit_mode);
      } catch (const Error& e) {
        cell.error = std::string(to_string(e.kind())) + ": " + e.what();
      }
      table.cells.push_back(std::move(cell));
    }
  }
  return table;
}

nlohmann::json to_json(const SplitSpec& spec) {
  nlohmann::json doc{{"mode", std::string(to_string(spec.mode))}, {"label", spec.label()}};
  doc["j"] = spec.j ? nlohmann::json(*spec.j) : nlohmann::json(nullptr);
  doc["k"] = spec.k ? nlohmann::json(*spec.k) : nlohmann::json(nullptr);
  doc["joint_all_heldout"] = spec.joint_all_heldout;
  return doc;
}

namespace {

nlohmann::json score_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json("n/a"); }

}  // namespace

nlohmann::json to_json(const ExtrapReport& report) {
  nlohmann::json doc;
  doc["law_id"] = std::string(to_string(report.law_id));
  doc["split"] = to_json(report.split);
  doc["fit_mode"] = std::string(to_string(report.fit_mode));
  doc["pooled_r2"] = score_json(report.pooled_r2);
  doc["pooled_r2_definition"] = "r2 of all held-out predictions concatenated across levels (one global mean)";
  nlohmann::json levels = nlohmann::json::array();
  for (const auto& s : report.per_level_r2) levels.push_back({{"level", s.level}, {"r2", score_json(s.r2)}});
  doc["per_level_r2"] = std::move(levels);
  nlohmann::json fits = nlohmann::json::array();
  for (std::size_t i = 0; i < report.fits.size(); ++i) {
    auto f = to_json(report.fits[i]);
    f["level"] = report.fit_levels[i];
    fits.push_back(std::move(f));
  }
  doc["fits"] = std::move(fits);
  doc["train_count"] = report.train_count;
  doc["test_count"] = report.test_count;
  doc["excluded_count"] = report.excluded_count;
  return doc;
}

nlohmann::json to_json(const SweepTable& table) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& cell : table.cells) {
    nlohmann::json c{{"law_id", std::string(to_string(cell.law_id))}, {"split", to_json(cell.split)}};
    if (cell.report) {
      c["report"] = to_json(*cell.report);
    } else {
      c["error"] = cell.error;
    }
    cells.push_back(std::move(c));
  }
  nlohmann::json laws = nlohmann::json::array();
  for (auto id : table.laws) laws.push_back(std::string(to_string(id)));
  nlohmann::json splits = nlohmann::json::array();
  for (const auto& s : table.splits) splits.push_back(to_json(s));
  return {{"laws", laws}, {"splits", splits}, {"cells", cells}};
}

std::string render_sweep_table(const SweepTable& table) {
  const std::size_t cols = table.splits.size();
  std::vector<std::string> header{"Method"};
  for (const auto& s : table.splits) header.push_back(s.label());

  // Best pooled score per column.
  std::vector<std::optional<double>> best(cols);
  for (std::size_t l = 0; l < table.laws.size(); ++l) {
    for (std::size_t c = 0; c < cols; ++c) {
      const auto& cell = table.at(l, c);
      if (cell.report && cell.report->pooled_r2 && (!best[c] || *cell.report->pooled_r2 > *best[c])) {
        best[c] = cell.report->pooled_r2;
      }
    }
  }

  std::vector<std::vector<std::string>> rows{header};
  for (std::size_t l = 0; l < table.laws.size(); ++l) {
    std::vector<std::string> row{law_spec(table.laws[l]).display_name};
    for (std::size_t c = 0; c < cols; ++c) {
      const auto& cell = table.at(l, c);
      if (cell.report && cell.report->pooled_r2) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.3f", *cell.report->pooled_r2);
        std::string text = buf;
        if (best[c] && *cell.report->pooled_r2 == *best[c]) text += "*";
        row.push_back(text);
      } else {
        row.push_back("n/a");
      }
    }
    rows.push_back(std::move(row));
  }

  std::vector<std::size_t> width(cols + 1, 0);
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      if (c == 0) {
        out << rows[r][c] << std::string(width[c] - rows[r][c].size(), ' ');
      } else {
        out << " | " << std::string(width[c] - rows[r][c].size(), ' ') << rows[r][c];
      }
    }
    out << '\n';
    if (r == 0) {
      std::size_t total = width[0];
      for (std::size_t c = 1; c < width.size(); ++c) total += width[c] + 3;
      out << std::string(total, '-') << '\n';
    }
  }
  return out.str();
}

}  // namespace sslaw
