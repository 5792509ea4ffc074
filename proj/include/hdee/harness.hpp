#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hdee/datagen.hpp"
#include "hdee/inference.hpp"
#include "hdee/matrix_io.hpp"
#include "hdee/normal.hpp"

namespace hdee {

struct ExperimentConfig {
  GeneratorSpec generator;
  int target = 1;
  int column = 1;
  long reps = 1;
  double alpha = 0.05;
  TuningRule lambda_rule;
  TuningRule lambda_prime_rule;
  bool parallel = false;
  std::uint64_t seed = 0;

  void validate() const {
    if (reps < 1) throw BadSpec("ExperimentConfig: reps must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw BadSpec("ExperimentConfig: alpha must be in (0,1)");
    lambda_rule.validate();
    lambda_prime_rule.validate();
    GeneratorSpec g = generator;
    g.target = target;
    g.column = column;
    g.validate();
  }
};

struct RepRecord {
  double theta_tilde = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  bool covered = false;
};

struct ExperimentResult {
  double coverage = 0.0;
  double avg_length = 0.0;
  std::vector<double> u_samples;
  long failures = 0;
  std::vector<RepRecord> per_rep;
};

namespace detail {

inline int harness_thread_cap() {
  if (const char* env = std::getenv("HDEE_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<int>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

struct RepOutcome {
  bool failed = true;
  RepRecord rec;
  double u = std::numeric_limits<double>::quiet_NaN();
};

inline RepOutcome run_one_replicate(const ExperimentConfig& cfg, long r) {
  RepOutcome out;
  GeneratorSpec gs = cfg.generator;
  gs.seed = sub_seed(cfg.seed, static_cast<std::uint64_t>(r));
  gs.target = cfg.target;
  gs.column = cfg.column;
  try {
    GeneratedData gen = generate(gs);
    ModelInstance model{gs.kind, std::move(gen.dataset), cfg.target, cfg.column};
    InferenceResult inf = run_inference(model, cfg.lambda_rule, cfg.lambda_prime_rule, cfg.alpha);
    out.rec.theta_tilde = inf.theta_tilde;
    out.rec.ci_lo = inf.ci_lo;
    out.rec.ci_hi = inf.ci_hi;
    out.rec.covered = gen.theta_star >= inf.ci_lo && gen.theta_star <= inf.ci_hi;
    const double scale = std::sqrt(inf.delta_hat / static_cast<double>(inf.n_eff));
    if (scale > 0.0) out.u = (inf.theta_tilde - gen.theta_star) / scale;
    out.failed = false;
  } catch (const Error&) {
    out.failed = true;
  }
  return out;
}

}  // namespace detail

// Monte Carlo driver. Replicate r always draws from the sub-seeded stream
// seed ^ splitmix64(r), so the per-replicate records do not depend on the
// execution order and parallel runs reproduce serial ones exactly.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<detail::RepOutcome> outcomes(cfg.reps);

  const int nthreads =
      cfg.parallel ? std::min<long>(detail::harness_thread_cap(), cfg.reps) : 1;
  if (nthreads <= 1) {
    for (long r = 0; r < cfg.reps; ++r) outcomes[r] = detail::run_one_replicate(cfg, r);
  } else {
    std::atomic<long> next{0};
    auto worker = [&]() {
      while (true) {
        const long r = next.fetch_add(1);
        if (r >= cfg.reps) return;
        outcomes[r] = detail::run_one_replicate(cfg, r);
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  ExperimentResult res;
  long covered = 0;
  double length_sum = 0.0;
  for (long r = 0; r < cfg.reps; ++r) {
    const auto& o = outcomes[r];
    if (o.failed) {
      ++res.failures;
      continue;
    }
    res.per_rep.push_back(o.rec);
    covered += o.rec.covered ? 1 : 0;
    length_sum += o.rec.ci_hi - o.rec.ci_lo;
    if (std::isfinite(o.u)) res.u_samples.push_back(o.u);
  }
  const long effective = cfg.reps - res.failures;
  if (effective == 0) throw AllReplicatesFailed("run_experiment: all replicates failed");
  res.coverage = static_cast<double>(covered) / static_cast<double>(effective);
  res.avg_length = length_sum / static_cast<double>(effective);
  return res;
}

// Kolmogorov-Smirnov distance between the sample and the standard normal,
// via the sorted-sample formula.
inline double ks_normality(std::vector<double> samples) {
  samples.erase(std::remove_if(samples.begin(), samples.end(),
                               [](double v) { return !std::isfinite(v); }),
                samples.end());
  if (samples.size() < 20)
    throw TooFewSamples("ks_normality: need >= 20 finite samples, got " +
                        std::to_string(samples.size()));
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double cdf = normal_cdf(samples[i]);
    d = std::max(d, (static_cast<double>(i) + 1.0) / n - cdf);
    d = std::max(d, cdf - static_cast<double>(i) / n);
  }
  return d;
}

// Table renderings: markdown rounds the way the reference tables print
// (coverage to 2 decimals, length to 1, "0.95 (0.3)"), CSV keeps full
// precision.
inline std::string emit_table_markdown(
    const std::vector<std::pair<std::string, ExperimentResult>>& results) {
  std::string out = "| setting | coverage (avg length) |\n| --- | --- |\n";
  char buf[64];
  for (const auto& [label, r] : results) {
    std::snprintf(buf, sizeof(buf), "%.2f (%.1f)", r.coverage, r.avg_length);
    out += "| " + label + " | " + buf + " |\n";
  }
  return out;
}

inline std::string emit_table_csv(
    const std::vector<std::pair<std::string, ExperimentResult>>& results) {
  std::string out = "label,reps,failures,coverage,avg_length\n";
  for (const auto& [label, r] : results) {
    out += label + ',' + std::to_string(r.per_rep.size() + r.failures) + ',' +
           std::to_string(r.failures) + ',' + format_double(r.coverage) + ',' +
           format_double(r.avg_length) + '\n';
  }
  return out;
}

namespace detail {

inline ModelKind parse_model_kind(const std::string& s) {
  if (s == "linear") return ModelKind::Linear;
  if (s == "ivr") return ModelKind::Ivr;
  if (s == "clime") return ModelKind::Clime;
  if (s == "skeptic") return ModelKind::Skeptic;
  if (s == "lda") return ModelKind::Lda;
  if (s == "var1") return ModelKind::Var1;
  throw BadSpec("unknown model '" + s + "' (expected linear|ivr|clime|skeptic|lda|var1)");
}

inline TuningRule parse_tuning_rule(const nlohmann::json& j, const std::string& key) {
  if (!j.is_object()) throw BadSpec("key '" + key + "' must be an object");
  if (!j.contains("type")) throw BadSpec("key '" + key + ".type' is missing");
  const std::string type = j.at("type").get<std::string>();
  TuningRule rule;
  if (type == "fixed_formula") {
    rule.kind = TuningRule::Kind::FixedFormula;
    if (!j.contains("c")) throw BadSpec("key '" + key + ".c' is missing");
    rule.c = j.at("c").get<double>();
  } else if (type == "fixed_value") {
    rule.kind = TuningRule::Kind::FixedValue;
    if (!j.contains("value")) throw BadSpec("key '" + key + ".value' is missing");
    rule.value = j.at("value").get<double>();
  } else if (type == "cv") {
    rule.kind = TuningRule::Kind::CrossValidation;
    if (!j.contains("grid")) throw BadSpec("key '" + key + ".grid' is missing");
    rule.grid = j.at("grid").get<std::vector<double>>();
    rule.folds = j.value("folds", 10);
  } else {
    throw BadSpec("key '" + key + ".type' must be fixed_formula|fixed_value|cv");
  }
  return rule;
}

}  // namespace detail

// Keys: model, n/n1/n2/T, d, rho, beta_mode, alpha_power, target, column,
// reps, alpha, lambda {...}, lambda_prime {...}, seed, parallel.
inline ExperimentConfig parse_experiment_config(const nlohmann::json& j) {
  ExperimentConfig cfg;
  if (!j.is_object()) throw BadSpec("config root must be a JSON object");
  if (!j.contains("model")) throw BadSpec("key 'model' is missing");
  cfg.generator.kind = detail::parse_model_kind(j.at("model").get<std::string>());
  if (!j.contains("d")) throw BadSpec("key 'd' is missing");
  cfg.generator.d = j.at("d").get<int>();
  cfg.generator.n = j.value("n", 0L);
  cfg.generator.n1 = j.value("n1", 0L);
  cfg.generator.n2 = j.value("n2", 0L);
  cfg.generator.T = j.value("T", 0L);
  cfg.generator.rho = j.value("rho", 0.0);
  if (j.contains("beta_mode")) {
    const std::string mode = j.at("beta_mode").get<std::string>();
    if (mode == "dirac") cfg.generator.beta_mode = BetaMode::Dirac;
    else if (mode == "uniform") cfg.generator.beta_mode = BetaMode::Uniform;
    else throw BadSpec("key 'beta_mode' must be dirac|uniform");
  }
  cfg.generator.alpha_power = j.value("alpha_power", 5.0);
  cfg.target = j.value("target", 1);
  cfg.column = j.value("column", 1);
  cfg.reps = j.value("reps", 0L);
  cfg.alpha = j.value("alpha", 0.05);
  if (!j.contains("lambda")) throw BadSpec("key 'lambda' is missing");
  cfg.lambda_rule = detail::parse_tuning_rule(j.at("lambda"), "lambda");
  if (!j.contains("lambda_prime")) throw BadSpec("key 'lambda_prime' is missing");
  cfg.lambda_prime_rule = detail::parse_tuning_rule(j.at("lambda_prime"), "lambda_prime");
  cfg.seed = j.value("seed", 0ULL);
  cfg.parallel = j.value("parallel", false);
  cfg.validate();
  return cfg;
}

}  // namespace hdee
