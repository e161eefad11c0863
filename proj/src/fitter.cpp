#include "sslaw/fitter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/QR>

#include "sslaw/error.hpp"
#include "sslaw/metrics.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sslaw {

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

std::string_view to_string(ObjectiveSpace space) { return space == ObjectiveSpace::kLoss ? "loss" : "log_loss"; }

ObjectiveSpace objective_space_from_string(std::string_view name) {
  if (name == "loss") return ObjectiveSpace::kLoss;
  if (name == "log_loss") return ObjectiveSpace::kLogLoss;
  fail(ErrorKind::kValidation, "unknown objective space '" + std::string(name) + "'");
}

void FitConfig::validate() const {
  if (starts < 1) fail(ErrorKind::kValidation, "starts must be >= 1");
  if (random_starts < 0) fail(ErrorKind::kValidation, "random_starts must be >= 0");
  if (max_iters < 1) fail(ErrorKind::kValidation, "max_iters must be >= 1");
  if (!(tol_rel_sse > 0.0) || !(tol_grad > 0.0)) fail(ErrorKind::kValidation, "tolerances must be positive");
  if (!(fd_step > 0.0) || fd_step > 1e-2) fail(ErrorKind::kValidation, "fd_step must lie in (0, 1e-2]");
  if (init_values.empty()) fail(ErrorKind::kValidation, "init_values must not be empty");
  for (double v : init_values) {
    if (!(v > 0.0) || !std::isfinite(v)) fail(ErrorKind::kValidation, "init_values must be positive");
  }
}

LawSpec FitResult::law() const {
  const LawSpec& base = law_spec(law_id);
  return base.needs_x ? with_orientation(base, x_orientation) : base;
}

LawSpec resolve_law(const LawSpec& law, const FitConfig& config) {
  if (!config.x_orientation || !law.needs_x) return law;
  return with_orientation(law, *config.x_orientation);
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Box on u = ln(theta) so exp(u) never underflows to zero or overflows.
constexpr double kLogBound = 300.0;
// Trust cap on one step in u; larger jumps tend to strand a coefficient at
// the edge of the box.
constexpr double kMaxLogStep = 1.0;

// Evaluation context shared by every start: pre-logged points and targets in
// objective space.
struct Problem {
  const LawSpec* law;
  std::vector<detail::EvalPoint> points;
  Eigen::VectorXd target;
  ObjectiveSpace space;
  double target_energy;  // sum of squared targets, for the negligible-SSE test

  // Fills `out` with residuals; false when any point is not evaluable.
  bool residuals(const double* theta, Eigen::VectorXd& out) const {
    const auto m = static_cast<Eigen::Index>(points.size());
    out.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double pred = detail::loss_or_nan(*law, theta, points[static_cast<std::size_t>(i)]);
      if (std::isnan(pred)) return false;
      const double value = space == ObjectiveSpace::kLoss ? pred : std::log(pred);
      out[i] = value - target[i];
    }
    return true;
  }
};

Problem make_problem(const LawSpec& law, const ObservationSet& data, ObjectiveSpace space) {
  Problem prob{&law, {}, Eigen::VectorXd(static_cast<Eigen::Index>(data.size())), space, 0.0};
  prob.points.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    prob.points.push_back(detail::make_point(data.normalized_n(i), data.normalized_d(i),
                                             law.needs_x ? data[i].x_level : std::nullopt));
    const double y = space == ObjectiveSpace::kLoss ? data[i].loss : std::log(data[i].loss);
    prob.target[static_cast<Eigen::Index>(i)] = y;
    prob.target_energy += y * y;
  }
  return prob;
}

// Central differences in ln(theta); one-sided when half the stencil leaves
// the domain, zero column when both do.
void jacobian(const Problem& prob, const Eigen::VectorXd& u, const Eigen::VectorXd& r0, double h,
              Eigen::MatrixXd& jac) {
  const auto m = r0.size();
  const auto p = u.size();
  jac.resize(m, p);
  std::vector<double> theta(static_cast<std::size_t>(p));
  for (Eigen::Index j = 0; j < p; ++j) theta[static_cast<std::size_t>(j)] = std::exp(u[j]);
  Eigen::VectorXd hi(m), lo(m);
  for (Eigen::Index j = 0; j < p; ++j) {
    const auto sj = static_cast<std::size_t>(j);
    theta[sj] = std::exp(u[j] + h);
    const bool ok_hi = prob.residuals(theta.data(), hi);
    theta[sj] = std::exp(u[j] - h);
    const bool ok_lo = prob.residuals(theta.data(), lo);
    theta[sj] = std::exp(u[j]);
    if (ok_hi && ok_lo) {
      jac.col(j) = (hi - lo) / (2.0 * h);
    } else if (ok_hi) {
      jac.col(j) = (hi - r0) / h;
    } else if (ok_lo) {
      jac.col(j) = (r0 - lo) / h;
    } else {
      jac.col(j).setZero();
    }
  }
}

std::vector<double> to_theta(const Eigen::VectorXd& u) {
  std::vector<double> theta(static_cast<std::size_t>(u.size()));
  for (Eigen::Index j = 0; j < u.size(); ++j) theta[static_cast<std::size_t>(j)] = std::exp(u[j]);
  return theta;
}

LocalSolveResult solve(const Problem& prob, std::span<const double> start_log, const FitConfig& cfg) {
  const auto p = static_cast<Eigen::Index>(start_log.size());
  const auto m = static_cast<Eigen::Index>(prob.points.size());
  Eigen::VectorXd u(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    u[j] = start_log[static_cast<std::size_t>(j)];
    if (!std::isfinite(u[j])) fail(ErrorKind::kNumerical, "non-finite start point");
  }

  Eigen::VectorXd r(m);
  {
    const auto theta = to_theta(u);
    if (!prob.residuals(theta.data(), r)) fail(ErrorKind::kNumerical, "non-finite residuals at the start point");
  }
  double sse = r.squaredNorm();
  LocalSolveResult out;
  out.sse_history.push_back(sse);

  // SSE at the level of rounding noise relative to the targets counts as met.
  const double negligible = cfg.tol_rel_sse * cfg.tol_rel_sse * prob.target_energy;
  auto finish = [&](bool converged) {
    out.params = to_theta(u);
    out.sse = sse;
    out.converged = converged;
    return out;
  };
  if (sse <= negligible) return finish(true);

  Eigen::MatrixXd jac;
  jacobian(prob, u, r, cfg.fd_step, jac);

  Eigen::MatrixXd augmented(m + p, p);
  Eigen::VectorXd rhs(m + p);
  Eigen::VectorXd r_new(m);
  double lambda = -1.0;
  double nu = 2.0;

  while (out.iterations < cfg.max_iters) {
    const Eigen::VectorXd grad = jac.transpose() * r;
    const Eigen::VectorXd col_norm = jac.colwise().norm();
    const double r_norm = std::sqrt(sse);
    double cosine = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (col_norm[j] > 0.0) cosine = std::max(cosine, std::abs(grad[j]) / (col_norm[j] * r_norm));
    }
    if (cosine <= cfg.tol_grad) return finish(true);

    // Marquardt scaling by the column norms, floored so a dead column stays
    // regularized.
    Eigen::VectorXd scale = col_norm.cwiseMax(1e-12 * std::max(1.0, col_norm.maxCoeff()));
    if (lambda < 0.0) lambda = 1e-3;

    bool accepted = false;
    while (!accepted && out.iterations < cfg.max_iters) {
      ++out.iterations;
      augmented.topRows(m) = jac;
      augmented.bottomRows(p) = (std::sqrt(lambda) * scale).asDiagonal();
      rhs.head(m) = -r;
      rhs.tail(p).setZero();
      Eigen::VectorXd raw_step = augmented.householderQr().solve(rhs);
      const double largest = raw_step.cwiseAbs().maxCoeff();
      if (largest > kMaxLogStep) raw_step *= kMaxLogStep / largest;
      const Eigen::VectorXd u_new = (u + raw_step).cwiseMax(-kLogBound).cwiseMin(kLogBound);
      const Eigen::VectorXd step = u_new - u;
      double sse_new = kInf;
      if (step.allFinite()) {
        const auto theta = to_theta(u_new);
        if (prob.residuals(theta.data(), r_new)) sse_new = r_new.squaredNorm();
      }
      if (std::isfinite(sse_new) && sse_new < sse) {
        const double predicted = sse - (r + jac * step).squaredNorm();
        const double rho = predicted > 0.0 ? (sse - sse_new) / predicted : 0.0;
        const double rel = (sse - sse_new) / sse;
        u = u_new;
        r = r_new;
        sse = sse_new;
        out.sse_history.push_back(sse);
        lambda *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * rho - 1.0, 3));
        nu = 2.0;
        accepted = true;
        if (sse <= negligible || rel <= cfg.tol_rel_sse) return finish(true);
      } else {
        lambda *= nu;
        nu *= 2.0;
        if (!std::isfinite(lambda) || lambda > 1e250) return finish(false);
      }
    }
    if (!accepted) break;
    jacobian(prob, u, r, cfg.fd_step, jac);
  }
  return finish(false);
}

void check_fit_preconditions(const LawSpec& law, const ObservationSet& data) {
  if (data.empty()) fail(ErrorKind::kValidation, "cannot fit an empty observation set");
  if (law.needs_x && !data.has_x()) {
    fail(ErrorKind::kValidation, "law " + law.name + " requires x_level on every observation (missing column x_level)");
  }
  if (data.size() < law.param_count()) {
    fail(ErrorKind::kValidation, "law " + law.name + " has " + std::to_string(law.param_count()) +
                                     " parameters but only " + std::to_string(data.size()) + " observations");
  }
  if (law.needs_x && law.x_orientation == XOrientation::kNone) {
    fail(ErrorKind::kValidation, "law " + law.name + " requires an X orientation");
  }
}

double uniform01(std::mt19937_64& gen) { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }

}  // namespace

std::vector<std::vector<double>> start_points(const LawSpec& law, const FitConfig& config) {
  config.validate();
  const std::size_t p = law.param_count();
  const std::size_t k = config.init_values.size();

  // Number of coordinate-wise combinations, capped at `starts`.
  std::size_t combos = 1;
  for (std::size_t i = 0; i < p && combos < static_cast<std::size_t>(config.starts); ++i) combos *= k;
  const std::size_t deterministic = std::min(combos, static_cast<std::size_t>(config.starts));

  std::vector<std::vector<double>> out;
  out.reserve(static_cast<std::size_t>(config.starts + config.random_starts));
  for (std::size_t t = 0; t < deterministic; ++t) {
    std::vector<double> start(p);
    std::size_t rest = t;
    for (std::size_t j = p; j-- > 0;) {
      start[j] = config.init_values[rest % k];
      rest /= k;
    }
    out.push_back(std::move(start));
  }

  std::mt19937_64 gen(config.seed);
  const double lo = std::log(1e-3);
  const double hi = std::log(1e2);
  const std::size_t random_total = static_cast<std::size_t>(config.starts) - deterministic +
                                   static_cast<std::size_t>(config.random_starts);
  for (std::size_t t = 0; t < random_total; ++t) {
    std::vector<double> start(p);
    for (auto& v : start) v = std::exp(lo + uniform01(gen) * (hi - lo));
    out.push_back(std::move(start));
  }
  return out;
}

std::vector<double> residuals(const LawSpec& law, std::span<const double> params, const ObservationSet& data,
                              ObjectiveSpace space) {
  validate_params(law, params);
  if (law.needs_x && !data.has_x()) fail(ErrorKind::kValidation, "law " + law.name + " requires x_level");
  std::vector<double> out;
  out.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double pred = predict_loss(law, params, data.normalized_n(i), data.normalized_d(i), data[i].x_level);
    out.push_back(space == ObjectiveSpace::kLoss ? pred - data[i].loss : std::log(pred) - std::log(data[i].loss));
  }
  return out;
}

LocalSolveResult local_solve(const LawSpec& law, const ObservationSet& data, std::span<const double> start_log,
                             const FitConfig& config) {
  config.validate();
  check_fit_preconditions(law, data);
  if (start_log.size() != law.param_count()) fail(ErrorKind::kValidation, "start has the wrong arity");
  const Problem prob = make_problem(law, data, config.objective_space);
  return solve(prob, start_log, config);
}

FitDetail fit_detailed(const LawSpec& base_law, const ObservationSet& data, const FitConfig& config) {
  config.validate();
  const LawSpec law = resolve_law(base_law, config);
  check_fit_preconditions(law, data);
  const Problem prob = make_problem(law, data, config.objective_space);

  FitDetail out;
  for (auto& start : start_points(law, config)) out.starts.push_back({std::move(start), std::nullopt, {}});

  const auto run_start = [&](std::size_t s) {
    auto& outcome = out.starts[s];
    std::vector<double> start_log(outcome.start.size());
    std::transform(outcome.start.begin(), outcome.start.end(), start_log.begin(),
                   [](double v) { return std::log(v); });
    try {
      outcome.result = solve(prob, start_log, config);
    } catch (const Error& e) {
      outcome.failure = e.what();
    }
  };

  const auto count = static_cast<std::ptrdiff_t>(out.starts.size());
  if (config.exec == ExecPolicy::kParallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t s = 0; s < count; ++s) run_start(static_cast<std::size_t>(s));
  } else {
    for (std::ptrdiff_t s = 0; s < count; ++s) run_start(static_cast<std::size_t>(s));
  }

  // Lowest SSE wins; strict comparison keeps the lowest index on ties.
  std::optional<std::size_t> best;
  for (std::size_t s = 0; s < out.starts.size(); ++s) {
    const auto& res = out.starts[s].result;
    if (!res || !std::isfinite(res->sse)) continue;
    if (!best || res->sse < out.starts[*best].result->sse) best = s;
  }
  if (!best) fail(ErrorKind::kNumerical, "all starts diverged for law " + law.name);

  const auto& winner = *out.starts[*best].result;
  FitResult& fr = out.result;
  fr.law_id = law.id;
  fr.x_orientation = law.x_orientation;
  fr.params = ParamVector{law.id, winner.params};
  fr.normalization = data.normalization();
  fr.sse = winner.sse;
  fr.n_obs = data.size();
  fr.converged = winner.converged;
  fr.iterations_used = winner.iterations;
  fr.start_index_won = static_cast<int>(*best);
  fr.seed = config.seed;
  fr.objective_space = config.objective_space;

  EvalPairs pairs;
  for (std::size_t i = 0; i < data.size(); ++i) {
    pairs.predicted.push_back(
        detail::loss_or_nan(law, winner.params.data(), prob.points[i]));
    pairs.observed.push_back(data[i].loss);
  }
  if (std::all_of(pairs.predicted.begin(), pairs.predicted.end(), [](double v) { return std::isfinite(v); })) {
    fr.r2_train = data.size() >= 2 ? try_r_squared(pairs) : std::nullopt;
  }
  return out;
}

FitResult fit(const LawSpec& law, const ObservationSet& data, const FitConfig& config) {
  return fit_detailed(law, data, config).result;
}

double predict_observation(const FitResult& fit, const Observation& obs) {
  return predict_loss(fit.law(), fit.params.values, obs.n_params / fit.normalization.n_scale,
                      obs.d_tokens / fit.normalization.d_scale, obs.x_level);
}

nlohmann::json to_json(const FitResult& fit) {
  const LawSpec& spec = law_spec(fit.law_id);
  nlohmann::json params = nlohmann::json::array();
  for (std::size_t i = 0; i < fit.params.values.size(); ++i) {
    params.push_back({{"name", spec.param_names[i]}, {"value", fit.params.values[i]}});
  }
  nlohmann::json doc;
  doc["schema"] = "sslaw.fit/1";
  doc["law_id"] = spec.name;
  doc["x_orientation"] = std::string(to_string(fit.x_orientation));
  doc["params"] = std::move(params);
  doc["normalization"] = {{"n_scale", fit.normalization.n_scale}, {"d_scale", fit.normalization.d_scale}};
  doc["sse"] = fit.sse;
  doc["r2_train"] = fit.r2_train ? nlohmann::json(*fit.r2_train) : nlohmann::json("n/a");
  doc["n_obs"] = fit.n_obs;
  doc["converged"] = fit.converged;
  doc["iterations_used"] = fit.iterations_used;
  doc["start_index_won"] = fit.start_index_won;
  doc["seed"] = fit.seed;
  doc["objective_space"] = std::string(to_string(fit.objective_space));
  return doc;
}

FitResult fit_result_from_json(const nlohmann::json& doc) {
  try {
    FitResult fr;
    const LawSpec& spec = law_spec(doc.at("law_id").get<std::string>());
    fr.law_id = spec.id;
    fr.x_orientation = x_orientation_from_string(doc.at("x_orientation").get<std::string>());
    std::vector<double> values;
    for (const auto& entry : doc.at("params")) values.push_back(entry.at("value").get<double>());
    validate_params(spec, values);
    fr.params = ParamVector{spec.id, std::move(values)};
    fr.normalization = {doc.at("normalization").at("n_scale").get<double>(),
                        doc.at("normalization").at("d_scale").get<double>()};
    fr.sse = doc.at("sse").get<double>();
    if (doc.at("r2_train").is_number()) fr.r2_train = doc.at("r2_train").get<double>();
    fr.n_obs = doc.at("n_obs").get<std::size_t>();
    fr.converged = doc.at("converged").get<bool>();
    fr.iterations_used = doc.at("iterations_used").get<int>();
    fr.start_index_won = doc.at("start_index_won").get<int>();
    fr.seed = doc.at("seed").get<std::uint64_t>();
    fr.objective_space = objective_space_from_string(doc.at("objective_space").get<std::string>());
    return fr;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kValidation, std::string("malformed fit JSON: ") + e.what());
  }
}

}  // namespace sslaw
