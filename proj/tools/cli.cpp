#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "sslaw/dataset.hpp"
#include "sslaw/error.hpp"
#include "sslaw/extrapolation.hpp"
#include "sslaw/fitter.hpp"
#include "sslaw/landscape.hpp"
#include "sslaw/laws.hpp"
#include "sslaw/metrics.hpp"
#include "sslaw/perturb.hpp"

namespace sslaw::cli {

using nlohmann::json;

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    fail(ErrorKind::kIo, "sha256 unavailable");
  }
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char byte[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(byte, sizeof byte, "%02x", md[i]);
    hex += byte;
  }
  return hex;
}

namespace {

struct Globals {
  bool no_timestamp = false;
  bool serial = false;
  int threads = 0;
  std::string manifest_path;
};

// Options shared by every command that fits.
struct FitFlags {
  std::string data;
  std::string level_key = "x_level";
  double n_scale = 1e9;
  double d_scale = 1e9;
  int starts = 16;
  int random_starts = 0;
  std::uint64_t seed = 0;
  int max_iters = 10000;
  std::string objective = "loss";
  std::string x_orientation;
};

void add_fit_flags(CLI::App* sub, FitFlags& f) {
  sub->add_option("--data", f.data, "Observation file (.csv or .json)")->required()->check(CLI::ExistingFile);
  sub->add_option("--level-key", f.level_key, "Level grouping: x_level or source_tag");
  sub->add_option("--n-scale", f.n_scale, "Divisor applied to N");
  sub->add_option("--d-scale", f.d_scale, "Divisor applied to D");
  sub->add_option("--starts", f.starts, "Deterministic starts");
  sub->add_option("--random-starts", f.random_starts, "Extra random starts");
  sub->add_option("--seed", f.seed, "Seed for random starts")->envname("SSLAW_SEED");
  sub->add_option("--max-iters", f.max_iters, "Iteration cap per start");
  sub->add_option("--objective", f.objective, "loss or log_loss");
  sub->add_option("--x-orientation", f.x_orientation, "mitigating or amplifying, for X-aware laws");
}

FitConfig make_config(const FitFlags& f, const Globals& g) {
  FitConfig cfg;
  cfg.starts = f.starts;
  cfg.random_starts = f.random_starts;
  cfg.seed = f.seed;
  cfg.max_iters = f.max_iters;
  cfg.objective_space = objective_space_from_string(f.objective);
  if (!f.x_orientation.empty()) cfg.x_orientation = x_orientation_from_string(f.x_orientation);
  cfg.exec = g.serial ? ExecPolicy::kSerial : ExecPolicy::kParallel;
  cfg.validate();
  return cfg;
}

ObservationSet load_data(const FitFlags& f) {
  if (!(f.n_scale > 0.0) || !(f.d_scale > 0.0)) fail(ErrorKind::kValidation, "normalization scales must be positive");
  auto set = load_observations(f.data, format_from_path(f.data), level_key_from_string(f.level_key));
  return set.with_normalization({f.n_scale, f.d_scale});
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Requested laws in registry order, duplicates dropped.
std::vector<LawSpec> parse_laws(const std::string& text) {
  std::vector<LawId> ids;
  if (text == "all") {
    for (const auto& law : law_registry()) ids.push_back(law.id);
  } else {
    for (const auto& name : split_list(text)) ids.push_back(law_spec(name).id);
  }
  if (ids.empty()) fail(ErrorKind::kValidation, "no laws requested");
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  std::vector<LawSpec> out;
  for (LawId id : ids) out.push_back(law_spec(id));
  return out;
}

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string render_table(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& row : rows) {
    width.resize(std::max(width.size(), row.size()), 0);
    // Column width in code points so the UTF-8 plus-minus sign aligns.
    for (std::size_t c = 0; c < row.size(); ++c) {
      const auto cps = static_cast<std::size_t>(
          std::count_if(row[c].begin(), row[c].end(), [](char ch) { return (ch & 0xC0) != 0x80; }));
      width[c] = std::max(width[c], cps);
    }
  }
  std::ostringstream out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      const auto& cell = rows[r][c];
      const auto cps = static_cast<std::size_t>(
          std::count_if(cell.begin(), cell.end(), [](char ch) { return (ch & 0xC0) != 0x80; }));
      const std::string pad(width[c] - cps, ' ');
      if (c == 0) {
        out << cell << pad;
      } else {
        out << " | " << pad << cell;
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

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path);
  out << text;
  if (!out) fail(ErrorKind::kIo, "write failed for " + path);
}

json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::kValidation, path + ": " + e.what());
  }
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Every option of the subcommand with its resolved value, defaults included.
json resolved_flags(const CLI::App* sub) {
  json flags = json::object();
  for (const CLI::Option* opt : sub->get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string& name = opt->get_lnames().front();
    if (name == "help") continue;
    if (opt->get_expected_max() == 0) {
      flags[name] = opt->count() > 0;
    } else if (opt->count() > 0) {
      const auto& res = opt->results();
      flags[name] = res.size() == 1 ? json(res.front()) : json(res);
    } else {
      flags[name] = opt->get_default_str();
    }
  }
  return flags;
}

class Runner {
 public:
  Runner(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  int run(const std::vector<std::string>& args);

 private:
  void emit_manifest(const CLI::App* sub, const std::vector<std::string>& inputs, std::optional<std::uint64_t> seed,
                     const std::string& primary_out);

  int cmd_fit(const CLI::App* sub);
  int cmd_compare(const CLI::App* sub);
  int cmd_extrapolate(const CLI::App* sub);
  int cmd_grid(const CLI::App* sub);
  int cmd_perturb(const CLI::App* sub);
  int cmd_measure(const CLI::App* sub);
  int cmd_convert(const CLI::App* sub);
  int cmd_exponents(const CLI::App* sub);
  int cmd_laws(const CLI::App* sub);

  std::ostream& out_;
  std::ostream& err_;
  Globals globals_;

  FitFlags fit_;
  std::string law_;
  std::string out_path_;
  std::string laws_ = "all";
  bool group_by_level_ = false;
  std::string fit_mode_;
  std::string split_mode_;
  std::string k_list_;
  std::string j_list_;
  bool joint_all_heldout_ = false;
  bool baseline_ = false;
  std::string fit_path_;
  GridSpec grid_;
  std::string spacing_ = "log";
  std::optional<double> x_;
  std::string report_path_;
  std::string in_path_;
  std::string original_path_;
  double snr_db_ = 0.0;
  std::uint64_t seed_ = 0;
  std::string power_mode_ = "global";
  std::string segments_;
  std::string dtype_ = "f64";
};

void Runner::emit_manifest(const CLI::App* sub, const std::vector<std::string>& inputs,
                           std::optional<std::uint64_t> seed, const std::string& primary_out) {
  json m{{"artifact", "sslaw"}, {"version", kArtifactVersion}, {"command", sub->get_name()}};
  m["flags"] = resolved_flags(sub);
  m["threads"] = globals_.serial ? 1 : max_threads();
  m["exec"] = globals_.serial ? "serial" : "parallel";
  auto& digests = m["inputs"] = json::array();
  for (const auto& path : inputs) digests.push_back({{"path", path}, {"sha256", sha256_file(path)}});
  m["seed"] = seed ? json(*seed) : json();
  if (!globals_.no_timestamp) m["timestamp"] = utc_now();

  std::string path = globals_.manifest_path;
  if (path.empty() && !primary_out.empty()) path = primary_out + ".manifest.json";
  if (path.empty()) {
    err_ << "manifest: " << m.dump() << '\n';
  } else {
    write_text(path, m.dump(2) + "\n");
  }
}

int Runner::cmd_fit(const CLI::App* sub) {
  const LawSpec& base = law_spec(law_);
  const ObservationSet data = load_data(fit_);
  if (base.needs_x && !data.has_x()) {
    fail(ErrorKind::kValidation, "law " + base.name + " requires x_level on every row (missing column x_level)");
  }
  if (base.needs_x && fit_.x_orientation.empty()) {
    fail(ErrorKind::kValidation, "law " + base.name + " requires --x-orientation (mitigating or amplifying)");
  }
  const FitConfig cfg = make_config(fit_, globals_);
  const FitResult result = fit(base, data, cfg);
  const std::string payload = to_json(result).dump(2) + "\n";
  if (out_path_.empty()) {
    out_ << payload;
  } else {
    write_text(out_path_, payload);
    out_ << "law=" << base.name << " r2_train=" << (result.r2_train ? format_number(*result.r2_train) : "n/a")
         << " converged=" << (result.converged ? "true" : "false") << " sse=" << format_number(result.sse) << '\n';
  }
  emit_manifest(sub, {fit_.data}, fit_.seed, out_path_);
  return kExitOk;
}

int Runner::cmd_compare(const CLI::App* sub) {
  const ObservationSet data = load_data(fit_);
  const FitConfig cfg = make_config(fit_, globals_);
  const auto laws = parse_laws(laws_);
  const std::optional<FitMode> forced = fit_mode_.empty() ? std::nullopt : std::optional(fit_mode_from_string(fit_mode_));

  std::vector<LevelGroup> groups;
  if (group_by_level_) {
    groups = group_by_level(data);
  } else {
    groups.push_back({"all", std::nullopt, data});
  }

  struct Cell {
    std::optional<double> r2;
    std::string error;
  };
  std::vector<std::vector<Cell>> cells(laws.size(), std::vector<Cell>(groups.size()));
  std::vector<FitMode> modes;
  for (std::size_t l = 0; l < laws.size(); ++l) {
    const LawSpec law = resolve_law(laws[l], cfg);
    const FitMode mode = forced.value_or(default_fit_mode(law));
    modes.push_back(mode);
    const auto score = [&](const FitResult& fr, const ObservationSet& set) {
      EvalPairs pairs;
      for (const auto& obs : set.observations()) {
        pairs.predicted.push_back(predict_observation(fr, obs));
        pairs.observed.push_back(obs.loss);
      }
      return try_r_squared(pairs);
    };
    if (mode == FitMode::kJointX && groups.size() > 1) {
      try {
        const FitResult fr = fit(law, data, cfg);
        for (std::size_t g = 0; g < groups.size(); ++g) {
          try {
            cells[l][g].r2 = score(fr, groups[g].set);
            if (!cells[l][g].r2) cells[l][g].error = "undefined variance";
          } catch (const Error& e) {
            cells[l][g].error = e.what();
          }
        }
      } catch (const Error& e) {
        for (auto& cell : cells[l]) cell.error = e.what();
      }
    } else {
      for (std::size_t g = 0; g < groups.size(); ++g) {
        try {
          const FitResult fr = fit(law, groups[g].set, cfg);
          cells[l][g].r2 = score(fr, groups[g].set);
          if (!cells[l][g].r2) cells[l][g].error = "undefined variance";
        } catch (const Error& e) {
          cells[l][g].error = e.what();
        }
      }
    }
  }

  std::vector<std::optional<LevelSummary>> summaries(laws.size());
  for (std::size_t l = 0; l < laws.size(); ++l) {
    std::vector<std::pair<double, double>> scores;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      if (cells[l][g].r2) scores.emplace_back(static_cast<double>(g), *cells[l][g].r2);
    }
    if (!scores.empty()) summaries[l] = summarize_levels(scores);
  }

  // Best defined value per column (levels, then Avg).
  std::vector<std::optional<double>> best(groups.size() + 1);
  for (std::size_t l = 0; l < laws.size(); ++l) {
    for (std::size_t g = 0; g < groups.size(); ++g) {
      const auto& r2 = cells[l][g].r2;
      if (r2 && (!best[g] || *r2 > *best[g])) best[g] = r2;
    }
    if (summaries[l] && (!best.back() || summaries[l]->mean > *best.back())) best.back() = summaries[l]->mean;
  }

  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header{"Method"};
  for (const auto& g : groups) header.push_back(g.label);
  header.push_back("Avg ± Std");
  rows.push_back(header);
  json doc{{"schema", "sslaw.compare/1"}, {"version", kArtifactVersion}, {"group_by_level", group_by_level_}};
  doc["std_definition"] = "population";
  auto& levels_json = doc["levels"] = json::array();
  for (const auto& g : groups) levels_json.push_back(g.label);
  auto& rows_json = doc["rows"] = json::array();
  bool any_ok = false;
  for (std::size_t l = 0; l < laws.size(); ++l) {
    std::vector<std::string> row{laws[l].display_name};
    json row_json{{"law", laws[l].name}, {"display_name", laws[l].display_name},
                  {"fit_mode", std::string(to_string(modes[l]))}};
    auto& cells_json = row_json["cells"] = json::array();
    for (std::size_t g = 0; g < groups.size(); ++g) {
      const auto& cell = cells[l][g];
      if (cell.r2) {
        any_ok = true;
        row.push_back(fixed3(*cell.r2) + (*cell.r2 == *best[g] ? "*" : ""));
        cells_json.push_back({{"level", groups[g].label}, {"r2", *cell.r2}});
      } else {
        row.push_back("n/a");
        cells_json.push_back({{"level", groups[g].label}, {"r2", nullptr}, {"error", cell.error}});
      }
    }
    if (summaries[l]) {
      row.push_back(fixed3(summaries[l]->mean) + " ± " + fixed3(summaries[l]->std) +
                    (summaries[l]->mean == *best.back() ? "*" : ""));
      row_json["avg"] = summaries[l]->mean;
      row_json["std"] = summaries[l]->std;
    } else {
      row.push_back("n/a");
      row_json["avg"] = nullptr;
      row_json["std"] = nullptr;
    }
    rows.push_back(std::move(row));
    rows_json.push_back(std::move(row_json));
  }

  out_ << render_table(rows);
  if (!out_path_.empty()) write_text(out_path_, doc.dump(2) + "\n");
  emit_manifest(sub, {fit_.data}, fit_.seed, out_path_);
  if (!any_ok) fail(ErrorKind::kNumerical, "every comparison cell failed");
  return kExitOk;
}

int Runner::cmd_extrapolate(const CLI::App* sub) {
  const ObservationSet data = load_data(fit_);
  const FitConfig cfg = make_config(fit_, globals_);
  const auto laws = parse_laws(laws_);
  const SplitMode mode = split_mode_from_string(split_mode_);
  const std::optional<FitMode> forced = fit_mode_.empty() ? std::nullopt : std::optional(fit_mode_from_string(fit_mode_));

  const auto to_ints = [](const std::string& text, const char* flag) {
    std::vector<int> out;
    for (const auto& item : split_list(text)) {
      try {
        std::size_t used = 0;
        out.push_back(std::stoi(item, &used));
        if (used != item.size()) throw std::invalid_argument(item);
      } catch (const std::exception&) {
        fail(ErrorKind::kValidation, std::string(flag) + ": not an integer: '" + item + "'");
      }
    }
    return out;
  };
  const auto ks = to_ints(k_list_, "--k");
  const auto js = to_ints(j_list_, "--j");

  std::vector<SplitSpec> specs;
  const auto make = [&](std::optional<int> k, std::optional<int> j) {
    SplitSpec s{mode, j, k, joint_all_heldout_};
    s.validate();
    specs.push_back(s);
  };
  if (mode == SplitMode::kToken) {
    if (js.empty()) fail(ErrorKind::kValidation, "token mode needs --j");
    for (int j : js) make(std::nullopt, j);
  } else if (mode == SplitMode::kModel) {
    if (ks.empty()) fail(ErrorKind::kValidation, "model mode needs --k");
    for (int k : ks) make(k, std::nullopt);
  } else {
    if (ks.empty() || js.empty()) fail(ErrorKind::kValidation, "joint mode needs --k and --j");
    if (ks.size() != js.size() && ks.size() != 1 && js.size() != 1) {
      fail(ErrorKind::kValidation, "--k and --j lists must have equal length (or one entry)");
    }
    const std::size_t n = std::max(ks.size(), js.size());
    for (std::size_t i = 0; i < n; ++i) make(ks[ks.size() == 1 ? 0 : i], js[js.size() == 1 ? 0 : i]);
  }
  // Unsatisfiable splits are usage errors, caught before any fitting.
  for (const auto& s : specs) make_split(data, s);

  const SweepTable table = progressive_sweep(data, laws, specs, cfg, forced);
  out_ << render_sweep_table(table);

  json doc = to_json(table);
  doc["schema"] = "sslaw.extrapolate/1";
  doc["version"] = kArtifactVersion;
  if (baseline_) {
    auto& base = doc["mean_baseline"] = json::array();
    for (const auto& s : specs) {
      const auto r2 = mean_predictor_pooled_r2(data, s);
      base.push_back({{"split", s.label()}, {"pooled_r2", r2 ? json(*r2) : json()}});
      out_ << "mean baseline " << s.label() << ": " << (r2 ? fixed3(*r2) : std::string("n/a")) << '\n';
    }
  }
  if (!out_path_.empty()) write_text(out_path_, doc.dump(2) + "\n");
  emit_manifest(sub, {fit_.data}, fit_.seed, out_path_);
  if (std::none_of(table.cells.begin(), table.cells.end(), [](const SweepCell& c) { return c.report.has_value(); })) {
    fail(ErrorKind::kNumerical, "every extrapolation cell failed");
  }
  return kExitOk;
}

int Runner::cmd_grid(const CLI::App* sub) {
  const FitResult fr = fit_result_from_json(read_json_file(fit_path_));
  grid_.spacing = spacing_from_string(spacing_);
  const LossGrid grid = grid_eval(fr, grid_, x_, globals_.serial ? ExecPolicy::kSerial : ExecPolicy::kParallel);
  const std::string csv = grid_to_csv(grid);
  if (out_path_.empty()) {
    out_ << csv;
  } else {
    write_text(out_path_, csv);
  }

  json report{{"schema", "sslaw.grid/1"}, {"version", kArtifactVersion}, {"law", fr.law().name}};
  if (grid.n_axis.size() >= 3 && grid.d_axis.size() >= 3) {
    const BasinReport basin = detect_basin(grid);
    report["basin"] = to_json(basin);
    if (!out_path_.empty()) {
      out_ << "interior_minimum=" << (basin.has_interior_minimum ? "true" : "false")
           << " argmin_n=" << format_number(basin.argmin_n) << " argmin_d=" << format_number(basin.argmin_d)
           << " loss=" << format_number(basin.min_value) << " n_axis=" << to_string(basin.monotonic_n)
           << " d_axis=" << to_string(basin.monotonic_d) << '\n';
    }
  }
  if (fr.law().is_shannon()) report["exponents"] = to_json(exponent_report(fr));
  if (!report_path_.empty()) write_text(report_path_, report.dump(2) + "\n");
  emit_manifest(sub, {fit_path_}, std::nullopt, out_path_);
  return kExitOk;
}

int Runner::cmd_perturb(const CLI::App* sub) {
  const WeightVector w = read_wvec(in_path_);
  PerturbOptions opts;
  opts.power_mode = power_mode_from_string(power_mode_);
  opts.exec = globals_.serial ? ExecPolicy::kSerial : ExecPolicy::kParallel;
  for (const auto& item : split_list(segments_)) {
    try {
      opts.segment_lengths.push_back(std::stoull(item));
    } catch (const std::exception&) {
      fail(ErrorKind::kValidation, "--segments: not a length: '" + item + "'");
    }
  }
  const PerturbOutcome res = inject(w, snr_db_, seed_, opts);
  write_wvec(out_path_, res.perturbed);
  json doc = to_json(res.report);
  doc["schema"] = "sslaw.perturb/1";
  doc["version"] = kArtifactVersion;
  if (report_path_.empty()) {
    out_ << doc.dump(2) << '\n';
  } else {
    write_text(report_path_, doc.dump(2) + "\n");
    out_ << "target_snr_db=" << format_number(snr_db_) << " sigma2=" << format_number(res.report.sigma2)
         << " empirical_snr_db="
         << (res.report.empirical_snr_db ? format_number(*res.report.empirical_snr_db) : std::string("inf")) << '\n';
  }
  emit_manifest(sub, {in_path_}, seed_, out_path_);
  return kExitOk;
}

int Runner::cmd_measure(const CLI::App* sub) {
  const double db = measure_snr(read_wvec(original_path_), read_wvec(in_path_),
                                globals_.serial ? ExecPolicy::kSerial : ExecPolicy::kParallel);
  out_ << "snr_db=" << format_number(db) << '\n';
  emit_manifest(sub, {original_path_, in_path_}, std::nullopt, "");
  return kExitOk;
}

int Runner::cmd_convert(const CLI::App* sub) {
  const auto is_wvec = [](const std::string& p) { return p.size() >= 5 && p.substr(p.size() - 5) == ".wvec"; };
  const DType dtype = dtype_ == "f32" ? DType::kF32 : dtype_ == "f64" ? DType::kF64 : [&]() -> DType {
    fail(ErrorKind::kValidation, "unknown dtype '" + dtype_ + "' (expected f32 or f64)");
  }();
  WeightVector w;
  if (is_wvec(in_path_)) {
    w = read_wvec(in_path_);
  } else {
    std::ifstream in(in_path_, std::ios::binary);
    if (!in) fail(ErrorKind::kIo, "cannot open " + in_path_);
    std::ostringstream buf;
    buf << in.rdbuf();
    w = decode_text_vector(buf.str(), dtype);
  }
  if (is_wvec(out_path_)) {
    write_wvec(out_path_, w);
  } else {
    write_text(out_path_, encode_text_vector(w));
  }
  out_ << "count=" << w.count() << " dtype=" << to_string(w.dtype) << '\n';
  emit_manifest(sub, {in_path_}, std::nullopt, out_path_);
  return kExitOk;
}

int Runner::cmd_exponents(const CLI::App* sub) {
  const FitResult fr = fit_result_from_json(read_json_file(fit_path_));
  out_ << to_json(exponent_report(fr)).dump(2) << '\n';
  emit_manifest(sub, {fit_path_}, std::nullopt, "");
  return kExitOk;
}

int Runner::cmd_laws(const CLI::App* sub) {
  for (const auto& law : law_registry()) {
    out_ << law.name << "  (" << law.display_name << ")  params:";
    for (const auto& p : law.param_names) out_ << ' ' << p;
    if (law.needs_x) out_ << "  [x]";
    out_ << '\n';
  }
  emit_manifest(sub, {}, std::nullopt, "");
  return kExitOk;
}

int Runner::run(const std::vector<std::string>& args) {
  CLI::App app{"Scaling-law fitting, extrapolation, landscape and weight-noise tools", "sslaw"};
  app.require_subcommand(1);
  app.fallthrough();
  app.option_defaults()->always_capture_default();
  app.add_flag("--no-timestamp", globals_.no_timestamp, "Omit timestamps from manifests");
  app.add_flag("--serial", globals_.serial, "Use the serial reference kernels");
  app.add_option("--threads", globals_.threads, "OpenMP thread count (0 = runtime default)");
  app.add_option("--manifest", globals_.manifest_path, "Manifest path (default <out>.manifest.json)");

  auto* fit_cmd = app.add_subcommand("fit", "Fit one law to observations");
  add_fit_flags(fit_cmd, fit_);
  fit_cmd->add_option("--law", law_, "Law id (see `laws`)")->required();
  fit_cmd->add_option("--out", out_path_, "FitResult JSON path");

  auto* compare_cmd = app.add_subcommand("compare", "Per-level R^2 table across laws");
  add_fit_flags(compare_cmd, fit_);
  compare_cmd->add_option("--laws", laws_, "'all' or a comma list");
  compare_cmd->add_flag("--group-by-level", group_by_level_, "One column per level");
  compare_cmd->add_option("--fit-mode", fit_mode_, "per_level or joint_x");
  compare_cmd->add_option("--out", out_path_, "Comparison JSON path");

  auto* extrap_cmd = app.add_subcommand("extrapolate", "Progressive extrapolation sweep");
  add_fit_flags(extrap_cmd, fit_);
  extrap_cmd->add_option("--laws", laws_, "'all' or a comma list");
  extrap_cmd->add_option("--mode", split_mode_, "token, model or joint")->required();
  extrap_cmd->add_option("--k", k_list_, "Comma list of kept model counts");
  extrap_cmd->add_option("--j", j_list_, "Comma list of kept checkpoint counts");
  extrap_cmd->add_option("--fit-mode", fit_mode_, "per_level or joint_x");
  extrap_cmd->add_flag("--joint-all-heldout", joint_all_heldout_, "Joint mode: test every held-out-model point");
  extrap_cmd->add_flag("--baseline", baseline_, "Also score the mean predictor");
  extrap_cmd->add_option("--out", out_path_, "Sweep JSON path");

  auto* grid_cmd = app.add_subcommand("grid", "Evaluate a fitted law on an (N, D) lattice");
  grid_cmd->add_option("--fit", fit_path_, "FitResult JSON")->required()->check(CLI::ExistingFile);
  grid_cmd->add_option("--n-min", grid_.n_min)->required();
  grid_cmd->add_option("--n-max", grid_.n_max)->required();
  grid_cmd->add_option("--d-min", grid_.d_min)->required();
  grid_cmd->add_option("--d-max", grid_.d_max)->required();
  grid_.n_steps = 50;
  grid_.d_steps = 50;
  grid_cmd->add_option("--n-steps", grid_.n_steps);
  grid_cmd->add_option("--d-steps", grid_.d_steps);
  grid_cmd->add_option("--spacing", spacing_, "log or linear");
  grid_cmd->add_option("--x", x_, "Level for X-aware laws");
  grid_cmd->add_option("--out", out_path_, "Grid CSV path");
  grid_cmd->add_option("--report", report_path_, "Basin and exponent JSON path");

  auto* perturb_cmd = app.add_subcommand("perturb", "Inject SNR-calibrated Gaussian noise into a WVEC file");
  perturb_cmd->add_option("--in", in_path_, "Input WVEC")->required()->check(CLI::ExistingFile);
  perturb_cmd->add_option("--out", out_path_, "Output WVEC")->required();
  perturb_cmd->add_option("--snr-db", snr_db_)->required();
  perturb_cmd->add_option("--seed", seed_)->envname("SSLAW_SEED");
  perturb_cmd->add_option("--power-mode", power_mode_, "global or per_segment");
  perturb_cmd->add_option("--segments", segments_, "Comma list of segment lengths");
  perturb_cmd->add_option("--report", report_path_, "PerturbReport JSON path");

  auto* measure_cmd = app.add_subcommand("measure", "SNR in dB between two WVEC files");
  measure_cmd->add_option("--original", original_path_)->required()->check(CLI::ExistingFile);
  measure_cmd->add_option("--perturbed", in_path_)->required()->check(CLI::ExistingFile);

  auto* convert_cmd = app.add_subcommand("convert", "Convert between WVEC and one-value-per-line text");
  convert_cmd->add_option("--in", in_path_)->required()->check(CLI::ExistingFile);
  convert_cmd->add_option("--out", out_path_)->required();
  convert_cmd->add_option("--dtype", dtype_, "f32 or f64, for text input");

  auto* exp_cmd = app.add_subcommand("exponents", "Exponent verdicts of a fitted Shannon law");
  exp_cmd->add_option("--fit", fit_path_, "FitResult JSON")->required()->check(CLI::ExistingFile);

  auto* laws_cmd = app.add_subcommand("laws", "List registered laws");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out_ << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out_ << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err_ << "error[E_USAGE]: " << e.what() << '\n';
    const CLI::App* failed = &app;
    for (const auto* sub : app.get_subcommands()) failed = sub;
    err_ << failed->help();
    return kExitValidation;
  }

#ifdef _OPENMP
  if (globals_.threads > 0) omp_set_num_threads(globals_.threads);
#endif

  try {
    if (fit_cmd->parsed()) return cmd_fit(fit_cmd);
    if (compare_cmd->parsed()) return cmd_compare(compare_cmd);
    if (extrap_cmd->parsed()) return cmd_extrapolate(extrap_cmd);
    if (grid_cmd->parsed()) return cmd_grid(grid_cmd);
    if (perturb_cmd->parsed()) return cmd_perturb(perturb_cmd);
    if (measure_cmd->parsed()) return cmd_measure(measure_cmd);
    if (convert_cmd->parsed()) return cmd_convert(convert_cmd);
    if (exp_cmd->parsed()) return cmd_exponents(exp_cmd);
    if (laws_cmd->parsed()) return cmd_laws(laws_cmd);
  } catch (const Error& e) {
    err_ << "error[" << to_string(e.kind()) << "]: " << e.what() << '\n';
    return e.kind() == ErrorKind::kValidation ? kExitValidation : kExitFailure;
  } catch (const json::exception& e) {
    err_ << "error[E_VALIDATION]: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err_ << "error[E_INTERNAL]: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitValidation;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Runner runner(out, err);
  return runner.run(args);
}

}  // namespace sslaw::cli
