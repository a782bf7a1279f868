// Copyright 2026 The IGW Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "igw/analysis.hpp"
#include "igw/csv.hpp"
#include "igw/error.hpp"
#include "igw/exact_dist.hpp"
#include "igw/extended_count.hpp"
#include "igw/igw_process.hpp"
#include "igw/parallel.hpp"
#include "igw/reproduction_laws.hpp"
#include "igw/rng.hpp"

namespace igw::cli {

enum ExitCode : int {
  kOk = 0,
  kInvalidInput = 1,
  kRegimeRejected = 2,
  kIndeterminate = 3,
  kVerificationFailed = 4,
};

inline constexpr std::size_t kMaxGridPoints = 1'000'000;

/// Fully resolved settings for one invocation; every knob has a default.
struct ExperimentConfig {
  std::string command;
  std::string what;
  std::string law_text;
  double theta = 1.0;
  std::uint64_t x = 1;
  std::size_t horizon = 200;
  std::size_t n = 1;
  double threshold = 1e9;
  std::size_t replicas = 0;  // 0: per-command default
  std::uint64_t seed = 1;
  unsigned workers = 1;
  std::string out;
  std::uint64_t exact_cap = NumberLadder{}.exact_cap;
  double quad_tol = kDefaultQuadTol;
  double root_tol = kDefaultRootTol;
  std::string caps_text = "4096,4096,512";
  double confidence = 0.99;
  std::size_t max_x = 4;
  std::size_t max_n = 12;
  std::size_t switch_point = 64;
  bool theta_squared_chernoff = false;
  std::uint64_t align_level = 100;
  double tolerance = 0.1;
  std::string grid;
  std::string quantity = "death-interval";
};

/// Parsed view of `ExperimentConfig` with typed objects.
struct Resolved {
  IGWParams params;
  Caps caps;
  NumberLadder ladder;
};

inline Caps parse_caps(std::string_view text) {
  std::vector<std::size_t> v;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string_view tok = text.substr(start, comma == std::string_view::npos ? comma : comma - start);
    std::size_t value = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    require(ec == std::errc() && ptr == tok.data() + tok.size() && !tok.empty(),
            "--caps: bad value '" + std::string(tok) + "', expected z,s,x");
    v.push_back(value);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  require(v.size() == 3, "--caps: expected three values z,s,x");
  require(v[0] >= 1 && v[1] >= 1 && v[2] >= 1, "--caps: caps must be >= 1");
  return {v[0], v[1], v[2]};
}

inline std::string format_caps(const Caps& c) {
  return std::to_string(c.z_cap) + "," + std::to_string(c.s_cap) + "," + std::to_string(c.x_cap);
}

inline ExtendedCount threshold_count(double v, const NumberLadder& ladder) {
  require(v >= 1.0 && std::isfinite(v), "--threshold must be a finite value >= 1");
  if (v <= static_cast<double>(ladder.exact_cap)) return ExtendedCount::exact(static_cast<std::uint64_t>(std::ceil(v)));
  return ExtendedCount::from_log(std::log(v), ladder.exact_cap);
}

/// Sweep grid `name=values`, values either `a,b,c` or `lo:hi[:step]`.
struct Grid {
  std::string name;
  std::vector<double> values;
};

inline Grid parse_grid(std::string_view text) {
  Grid g;
  const std::size_t eq = text.find('=');
  require(eq != std::string_view::npos, "--grid: expected name=values, got '" + std::string(text) + "'");
  g.name = std::string(text.substr(0, eq));
  require(g.name == "x" || g.name == "theta", "--grid: unknown parameter '" + g.name + "', expected x or theta");
  const std::string_view body = text.substr(eq + 1);
  if (body.empty()) return g;
  if (body.find(':') != std::string_view::npos) {
    std::vector<double> parts;
    std::size_t start = 0;
    while (true) {
      const std::size_t colon = body.find(':', start);
      parts.push_back(igw::detail::parse_double_token(body.substr(start, colon == std::string_view::npos ? colon : colon - start),
                                                 "--grid"));
      if (colon == std::string_view::npos) break;
      start = colon + 1;
    }
    require(parts.size() == 2 || parts.size() == 3, "--grid: range must be lo:hi or lo:hi:step");
    const double lo = parts[0], hi = parts[1], st = parts.size() == 3 ? parts[2] : 1.0;
    require(st > 0.0, "--grid: step must be positive");
    if (hi < lo) return g;
    const double count = std::floor((hi - lo) / st + 1e-9) + 1.0;
    require(count <= static_cast<double>(kMaxGridPoints),
            "--grid: " + format_real(count) + " points exceeds the limit of " + std::to_string(kMaxGridPoints));
    for (std::size_t i = 0; i < static_cast<std::size_t>(count); ++i) g.values.push_back(lo + static_cast<double>(i) * st);
  } else {
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = body.find(',', start);
      g.values.push_back(igw::detail::parse_double_token(
          body.substr(start, comma == std::string_view::npos ? comma : comma - start), "--grid"));
      require(g.values.size() <= kMaxGridPoints, "--grid: too many points");
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
  }
  if (g.name == "x")
    for (double v : g.values)
      require(v >= 0.0 && v == std::floor(v), "--grid: x values must be nonnegative integers, got " + format_real(v));
  return g;
}

inline std::uint64_t point_seed(std::uint64_t master, std::size_t index) {
  return igw::detail::splitmix64(master ^ derive_stream_id(index, "sweep"));
}

/// Reads `key=value` lines into `--key value` arguments. Blank lines and
/// lines starting with '#' are skipped.
inline std::vector<std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "--config: cannot open '" + path + "'");
  std::vector<std::string> args;
  std::string line;
  std::size_t lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos,
            "--config: line " + std::to_string(lineno) + " is not key=value: '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    require(!key.empty(), "--config: empty key on line " + std::to_string(lineno));
    if (key == "theta-squared-chernoff") {
      if (value == "true" || value == "1") args.push_back("--theta-squared-chernoff");
      continue;
    }
    args.push_back("--" + key);
    args.push_back(value);
  }
  return args;
}

namespace detail {

inline void add_options(CLI::App& app, ExperimentConfig& c) {
  app.add_option("--law", c.law_text, "reproduction law: binary:L or pmf:k=p,...")->required();
  app.add_option("--theta", c.theta, "thinning parameter in (0,1]")->required();
  app.add_option("--x", c.x, "initial state");
  app.add_option("--horizon", c.horizon, "time horizon (steps)");
  app.add_option("--n", c.n, "number of steps for finite-horizon quantities");
  app.add_option("--threshold", c.threshold, "explosion threshold for Monte Carlo");
  app.add_option("--replicas", c.replicas, "Monte Carlo replicas");
  app.add_option("--seed", c.seed, "master seed");
  app.add_option("--workers", c.workers, "worker threads (output does not depend on it)");
  app.add_option("--out", c.out, "output file (default stdout)");
  app.add_option("--exact-cap", c.exact_cap, "largest count kept as an exact integer");
  app.add_option("--quad-tol", c.quad_tol, "absolute quadrature tolerance");
  app.add_option("--root-tol", c.root_tol, "bisection tolerance for fixed points");
  app.add_option("--caps", c.caps_text, "exact-engine caps z,s,x");
  app.add_option("--confidence", c.confidence, "confidence level of intervals");
  app.add_option("--max-x", c.max_x, "largest state in verification grids");
  app.add_option("--max-n", c.max_n, "largest step count in verification grids");
  app.add_option("--switch-point", c.switch_point, "last state handled exactly by the explosion certificate");
  app.add_flag("--theta-squared-chernoff", c.theta_squared_chernoff, "use exp(phi - theta^2 psi) in the certificate");
  app.add_option("--align-level", c.align_level, "ratio table rows start at the first X_n >= this (0: absolute n)");
  app.add_option("--tolerance", c.tolerance, "relative tolerance for the ratio table");
  app.add_option("--grid", c.grid, "sweep grid: x=lo:hi[:step] or theta=a,b,...");
  app.add_option("--quantity", c.quantity, "sweep quantity")
      ->check(CLI::IsMember({"death-interval", "mc-death", "explosion", "q-star", "classify"}));
}

inline void write_common_meta(CsvWriter& w, const ExperimentConfig& c, const Resolved& r) {
  w.meta("igw_version", kVersion);
  w.meta("command", c.what.empty() ? c.command : c.command + " " + c.what);
  w.meta("law", format_law(r.params.law));
  w.meta("theta", format_real(r.params.theta));
  w.meta("x", std::to_string(c.x));
  w.meta("seed", std::to_string(c.seed));
  w.meta("replicas", std::to_string(c.replicas));
  w.meta("horizon", std::to_string(c.horizon));
  w.meta("n", std::to_string(c.n));
  w.meta("threshold", format_real(c.threshold));
  w.meta("caps", format_caps(r.caps));
  w.meta("exact_cap", std::to_string(r.ladder.exact_cap));
  w.meta("float_cap", format_real(r.ladder.float_cap));
  w.meta("exact_binomial_cap", std::to_string(r.ladder.exact_binomial_cap));
  w.meta("quad_tol", format_real(c.quad_tol));
  w.meta("root_tol", format_real(c.root_tol));
  w.meta("confidence", format_real(c.confidence));
  w.meta("max_x", std::to_string(c.max_x));
  w.meta("max_n", std::to_string(c.max_n));
  w.meta("switch_point", std::to_string(c.switch_point));
  w.meta("theta_squared_chernoff", c.theta_squared_chernoff ? "true" : "false");
  w.meta("align_level", std::to_string(c.align_level));
  w.meta("tolerance", format_real(c.tolerance));
  if (c.command == "sweep") {
    w.meta("grid", c.grid);
    w.meta("quantity", c.quantity);
  }
}

inline void write_dist(CsvWriter& w, const TruncatedDist& d) {
  w.row({"value", "prob"});
  for (std::size_t v = 0; v < d.atoms.size(); ++v)
    if (d.atoms[v] != 0.0) w.row({cell(static_cast<std::uint64_t>(v)), cell(d.atoms[v])});
  w.row({"overflow", cell(d.overflow)});
}

inline int cmd_simulate(const ExperimentConfig& c, const Resolved& r, std::ostream& os) {
  const ExtendedCount threshold = threshold_count(c.threshold, r.ladder);
  const auto trajs = parallel_map<Trajectory>(c.replicas, c.workers, [&](std::size_t i) {
    RngStream rng(c.seed, derive_stream_id(i, "simulate"));
    return simulate_trajectory(c.x, r.params, c.horizon, threshold, rng, r.ladder);
  });
  CsvWriter w(os);
  write_common_meta(w, c, r);
  w.row({"replica", "step", "state_mode", "state_value", "log_state", "y_ratio", "termination"});
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    const Trajectory& t = trajs[i];
    for (std::size_t k = 0; k < t.states.size(); ++k) {
      const ExtendedCount& s = t.states[k];
      const std::string value = s.is_exact() ? cell(s.exact_value()) : cell(s.to_double());
      const std::string y = k < t.ratios.size() && t.ratios[k] ? cell(*t.ratios[k]) : "";
      w.row({cell(static_cast<std::uint64_t>(i)), cell(static_cast<std::uint64_t>(k)), s.mode_name(), value,
             cell(s.log_value()), y, to_string(t.termination)});
    }
  }
  return kOk;
}

inline int cmd_exact(const ExperimentConfig& c, const Resolved& r, std::ostream& os) {
  if (c.what == "one-step-death") {
    os << format_real(one_step_death_prob(c.x, r.params)) << '\n';
    return kOk;
  }
  CsvWriter w(os);
  write_common_meta(w, c, r);
  if (c.what == "total-progeny") {
    write_dist(w, total_progeny_dist(r.params.law, c.x, r.caps));
  } else if (c.what == "one-step") {
    write_dist(w, one_step_dist(c.x, r.params, r.caps));
  } else if (c.what == "finite-death") {
    const IntervalProb p = finite_horizon_death(c.x, r.params, c.n, r.caps);
    w.row({"lo", "hi"});
    w.row({cell(p.lo), cell(p.hi)});
  } else {
    const IntervalProb p = death_prob_interval(c.x, r.params, r.caps, c.horizon);
    w.row({"lo", "hi"});
    w.row({cell(p.lo), cell(p.hi)});
  }
  return kOk;
}

inline int cmd_bounds(const ExperimentConfig& c, const Resolved& r, std::ostream& os) {
  std::ostringstream body;
  CsvWriter b(body);
  std::vector<std::pair<std::string, std::string>> extra;
  if (c.what == "fixed-point") {
    const double q = fixed_point_q(r.params, c.root_tol);
    b.row({"q_star", "q_star_pow_x"});
    b.row({cell(q), cell(geometric_death_bound(q, c.x))});
  } else if (c.what == "binary") {
    const auto lambda = r.params.law.lambda();
    require(lambda.has_value(), "--law: closed-form bound needs a binary:L law");
    const double q = binary_death_bound(*lambda, r.params.theta);
    b.row({"q", "q_pow_x"});
    b.row({cell(q), cell(geometric_death_bound(q, c.x))});
  } else {
    ExplosionOptions opt;
    opt.switch_point = c.switch_point;
    opt.quad_tol = c.quad_tol;
    opt.theta_squared_chernoff = c.theta_squared_chernoff;
    const ExplosionCertificate cert = explosion_lower_bound(c.x, r.params, r.caps, opt);
    extra = {{"bound", cell(cert.bound)},
             {"log_bound", cell(cert.log_bound)},
             {"valid", cell(cert.valid)},
             {"tail_from", cell(cert.tail_from)},
             {"tail_sum", cell(cert.tail_sum)},
             {"tail_sup", cell(cert.tail_sup)}};
    b.row({"state", "method", "raw", "gamma", "a_part", "b_part"});
    for (const GammaRecord& g : cert.records)
      b.row({cell(g.state), to_string(g.method), cell(g.raw), cell(g.gamma), cell(g.a_part), cell(g.b_part)});
  }
  CsvWriter w(os);
  write_common_meta(w, c, r);
  for (const auto& [k, v] : extra) w.meta(k, v);
  os << body.str();
  return kOk;
}

inline std::vector<std::string> estimate_cells(const McEstimate& e) {
  return {cell(e.point), cell(e.ci_lo), cell(e.ci_hi), cell(e.standard_error())};
}

inline int cmd_mc(const ExperimentConfig& c, const Resolved& r, std::ostream& os) {
  CsvWriter w(os);
  if (c.what == "death") {
    McOptions opt;
    opt.replicas = c.replicas;
    opt.horizon = c.horizon;
    opt.threshold = threshold_count(c.threshold, r.ladder);
    opt.master_seed = c.seed;
    opt.workers = c.workers;
    opt.confidence = c.confidence;
    opt.ladder = r.ladder;
    const DeathEstimate e = mc_death_prob(c.x, r.params, opt);
    write_common_meta(w, c, r);
    w.row({"x", "replicas", "died", "exploded", "undecided", "death_point", "death_lo", "death_hi", "death_se",
           "explosion_point", "explosion_lo", "explosion_hi", "explosion_se", "undecided_frac"});
    std::vector<std::string> row = {cell(c.x), cell(static_cast<std::uint64_t>(c.replicas)),
                                    cell(static_cast<std::uint64_t>(e.death.successes)),
                                    cell(static_cast<std::uint64_t>(e.explosion.successes)),
                                    cell(static_cast<std::uint64_t>(e.undecided_count))};
    for (auto& s : estimate_cells(e.death)) row.push_back(s);
    for (auto& s : estimate_cells(e.explosion)) row.push_back(s);
    row.push_back(cell(e.undecided));
    w.row(row);
    return kOk;
  }
  RatioOptions opt;
  opt.replicas = c.replicas;
  opt.horizon = c.horizon;
  opt.master_seed = c.seed;
  opt.workers = c.workers;
  opt.align_level = c.align_level;
  opt.tolerance = c.tolerance;
  opt.ladder = r.ladder;
  const RatioConvergence rc = mc_ratio_convergence(r.params, c.x, opt);
  write_common_meta(w, c, r);
  w.meta("exploded", std::to_string(rc.exploded));
  w.meta("died", std::to_string(rc.died));
  w.meta("undecided", std::to_string(rc.undecided));
  w.meta("aligned", std::to_string(rc.aligned));
  w.row({"offset", "count", "median_y", "median_abs_err", "q05", "q25", "q50", "q75", "q95", "frac_within"});
  for (const auto& row : rc.rows)
    w.row({cell(static_cast<std::uint64_t>(row.offset)), cell(static_cast<std::uint64_t>(row.count)),
           cell(row.median_y), cell(row.median_abs_error), cell(row.q05), cell(row.q25), cell(row.q50),
           cell(row.q75), cell(row.q95), cell(row.frac_within)});
  return kOk;
}

inline int status_exit(bool any_fail, bool any_indeterminate) {
  if (any_fail) return kVerificationFailed;
  if (any_indeterminate) return kIndeterminate;
  return kOk;
}

inline int cmd_verify(const ExperimentConfig& c, const Resolved& r, std::ostream& os) {
  std::ostringstream body;
  CsvWriter b(body);
  bool fail = false, indeterminate = false;
  if (c.what == "submult") {
    require_regime(r.params.law.p0() == 0.0, "submultiplicativity check needs p_0 = 0");
    const TransitionKernel kernel(r.params, r.caps);
    b.row({"x", "y", "n", "joint_lo", "joint_hi", "left_hi", "right_hi", "product_hi", "status"});
    for (std::uint64_t x = 1; x <= c.max_x; ++x)
      for (std::uint64_t y = x; y <= c.max_x; ++y)
        for (std::size_t n = 1; n <= c.max_n; ++n) {
          const SubmultiplicativityReport rep = submultiplicativity_check(kernel, x, y, n);
          fail |= rep.status == CheckStatus::Fail;
          indeterminate |= rep.status == CheckStatus::Indeterminate;
          b.row({cell(x), cell(y), cell(static_cast<std::uint64_t>(n)), cell(rep.joint.lo), cell(rep.joint.hi),
                 cell(rep.left.hi), cell(rep.right.hi), cell(rep.product_hi), to_string(rep.status)});
        }
  } else if (c.what == "absorption") {
    b.row({"n", "survival_lo", "survival_hi", "bound", "strict", "status"});
    for (const AbsorptionRow& row : geometric_absorption_check(r.params, c.x, c.max_n, r.caps)) {
      fail |= row.status == CheckStatus::Fail;
      indeterminate |= row.status == CheckStatus::Indeterminate;
      b.row({cell(static_cast<std::uint64_t>(row.n)), cell(row.survival.lo), cell(row.survival.hi), cell(row.bound),
             cell(row.strict), to_string(row.status)});
    }
  } else {
    ExplosionOptions opt;
    opt.switch_point = c.switch_point;
    opt.quad_tol = c.quad_tol;
    opt.theta_squared_chernoff = c.theta_squared_chernoff;
    const TransitionKernel kernel(r.params, r.caps);
    b.row({"x", "explosion_bound", "valid", "death_lo", "death_hi", "sum", "status"});
    for (std::uint64_t x = 1; x <= c.max_x; ++x) {
      const ExplosionCertificate cert = explosion_lower_bound(x, r.params, r.caps, opt);
      const IntervalProb d = death_prob_interval(kernel, x, c.horizon);
      const double sum = cert.bound + d.hi;
      const bool ok = sum <= 1.0 + 1e-9;
      fail |= !ok;
      b.row({cell(x), cell(cert.bound), cell(cert.valid), cell(d.lo), cell(d.hi), cell(sum), ok ? "pass" : "fail"});
    }
  }
  CsvWriter w(os);
  write_common_meta(w, c, r);
  w.meta("result", fail ? "fail" : indeterminate ? "indeterminate" : "pass");
  os << body.str();
  return status_exit(fail, indeterminate);
}

inline int cmd_sweep(const ExperimentConfig& c, const Resolved& r, std::ostream& os) {
  const Grid grid = parse_grid(c.grid);
  const std::size_t count = grid.values.size();
  std::vector<std::string> header = {"index", "x", "theta"};
  const std::string& q = c.quantity;
  if (q == "death-interval") header.insert(header.end(), {"lo", "hi"});
  else if (q == "mc-death") header.insert(header.end(), {"point", "ci_lo", "ci_hi", "undecided"});
  else if (q == "explosion") header.insert(header.end(), {"bound", "valid"});
  else if (q == "q-star") header.insert(header.end(), {"q_star", "q_star_pow_x"});
  else header.insert(header.end(), {"mean_regime", "as_regime"});

  // One kernel serves every point when only x varies.
  std::optional<TransitionKernel> shared;
  if (q == "death-interval" && grid.name == "x" && count > 0 && r.params.law.p0() == 0.0 && r.params.theta < 1.0)
    shared.emplace(r.params, r.caps);

  const auto rows = parallel_map<std::vector<std::string>>(count, c.workers, [&](std::size_t i) {
    const std::uint64_t x = grid.name == "x" ? static_cast<std::uint64_t>(grid.values[i]) : c.x;
    const IGWParams params(r.params.law, grid.name == "theta" ? grid.values[i] : r.params.theta);
    std::vector<std::string> row = {cell(static_cast<std::uint64_t>(i)), cell(x), cell(params.theta)};
    if (q == "death-interval") {
      const IntervalProb p = shared ? death_prob_interval(*shared, x, c.horizon)
                                    : death_prob_interval(x, params, r.caps, c.horizon);
      row.insert(row.end(), {cell(p.lo), cell(p.hi)});
    } else if (q == "mc-death") {
      McOptions opt;
      opt.replicas = c.replicas;
      opt.horizon = c.horizon;
      opt.threshold = threshold_count(std::max(c.threshold, static_cast<double>(x)), r.ladder);
      opt.master_seed = point_seed(c.seed, i);
      opt.confidence = c.confidence;
      opt.ladder = r.ladder;
      const DeathEstimate e = mc_death_prob(x, params, opt);
      row.insert(row.end(), {cell(e.death.point), cell(e.death.ci_lo), cell(e.death.ci_hi), cell(e.undecided)});
    } else if (q == "explosion") {
      ExplosionOptions opt;
      opt.switch_point = c.switch_point;
      opt.quad_tol = c.quad_tol;
      opt.theta_squared_chernoff = c.theta_squared_chernoff;
      const ExplosionCertificate cert = explosion_lower_bound(x, params, r.caps, opt);
      row.insert(row.end(), {cell(cert.bound), cell(cert.valid)});
    } else if (q == "q-star") {
      const double qs = fixed_point_q(params, c.root_tol);
      row.insert(row.end(), {cell(qs), cell(geometric_death_bound(qs, x))});
    } else {
      const RegimeReport rep = classify_regimes(params);
      row.insert(row.end(), {to_string(rep.mean_regime), to_string(rep.as_regime)});
    }
    return row;
  });
  CsvWriter w(os);
  write_common_meta(w, c, r);
  w.row(header);
  for (const auto& row : rows) w.row(row);
  return kOk;
}

}  // namespace detail

/// Entry point of the `igw` tool. Output goes to `out` (or --out), diagnostics to `err`.
inline int run(const std::vector<std::string>& argv_in, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args = argv_in;
  std::string config_path;
  try {
    // Config values go in front of the first flag so that command-line flags, parsed later, win.
    for (std::size_t i = 1; i < args.size(); ++i) {
      std::string path;
      if (args[i] == "--config") {
        require(i + 1 < args.size(), "--config: missing file name");
        path = args[i + 1];
        args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
      } else if (args[i].rfind("--config=", 0) == 0) {
        path = args[i].substr(9);
        args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      } else {
        continue;
      }
      config_path = path;
      const auto extra = read_config_file(path);
      std::size_t at = 1;
      while (at < args.size() && !args[at].empty() && args[at][0] != '-') ++at;
      args.insert(args.begin() + static_cast<std::ptrdiff_t>(at), extra.begin(), extra.end());
      break;
    }
  } catch (const InvalidInput& e) {
    err << "igw: error: " << e.what() << '\n';
    return kInvalidInput;
  }

  ExperimentConfig c;
  CLI::App app{"Iterated Galton-Watson processes with binomial thinning", "igw"};
  app.option_defaults()->take_last();
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));
  struct Sub {
    const char* name;
    const char* help;
    std::vector<std::string> whats;
  };
  const std::vector<Sub> subs = {
      {"simulate", "simulate trajectories", {}},
      {"exact", "exact distributions and certified intervals",
       {"total-progeny", "one-step", "one-step-death", "finite-death", "death-interval"}},
      {"bounds", "analytic certificates", {"fixed-point", "binary", "explosion"}},
      {"mc", "Monte Carlo estimates", {"death", "ratio"}},
      {"verify", "inequality checks on certified intervals", {"submult", "absorption", "certificate"}},
      {"classify", "regime classification", {}},
      {"sweep", "one row per grid point", {}},
  };
  for (const Sub& s : subs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    if (!s.whats.empty())
      sub->add_option("what", c.what, "quantity")->required()->check(CLI::IsMember(s.whats));
    detail::add_options(*sub, c);
    sub->callback([&c, name = s.name] { c.command = name; });
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    if (const auto nl = msg.find('\n'); nl != std::string::npos) msg.resize(nl);
    err << "igw: error: " << msg << '\n';
    return kInvalidInput;
  }
  for (CLI::App* sub : app.get_subcommands())
    if (sub->parsed() && c.command.empty()) c.command = sub->get_name();

  try {
    require(c.theta > 0.0 && c.theta <= 1.0, "--theta must lie in (0,1], got " + format_real(c.theta));
    require(c.confidence > 0.0 && c.confidence < 1.0, "--confidence must lie in (0,1)");
    require(c.quad_tol > 0.0, "--quad-tol must be positive");
    require(c.root_tol > 0.0, "--root-tol must be positive");
    require(c.horizon >= 1, "--horizon must be >= 1");
    require(c.n >= 1, "--n must be >= 1");
    require(c.workers >= 1, "--workers must be >= 1");
    require(c.exact_cap >= 1, "--exact-cap must be >= 1");
    if (c.replicas == 0) c.replicas = c.command == "simulate" ? 1 : 1000;
    OffspringLaw law = [&] {
      try {
        return parse_law(c.law_text);
      } catch (const InvalidInput& e) {
        throw InvalidInput(std::string("--law: ") + e.what());
      }
    }();
    NumberLadder ladder;
    ladder.exact_cap = c.exact_cap;
    const Resolved r{IGWParams(std::move(law), c.theta), parse_caps(c.caps_text), ladder};

    std::ofstream file;
    std::ostringstream buffer;
    int code = kOk;
    if (c.command == "classify") {
      const RegimeReport rep = classify_regimes(r.params);
      buffer << to_string(rep.mean_regime) << ',' << to_string(rep.as_regime) << '\n';
    } else if (c.command == "simulate") {
      code = detail::cmd_simulate(c, r, buffer);
    } else if (c.command == "exact") {
      code = detail::cmd_exact(c, r, buffer);
    } else if (c.command == "bounds") {
      code = detail::cmd_bounds(c, r, buffer);
    } else if (c.command == "mc") {
      code = detail::cmd_mc(c, r, buffer);
    } else if (c.command == "verify") {
      code = detail::cmd_verify(c, r, buffer);
    } else {
      code = detail::cmd_sweep(c, r, buffer);
    }
    if (c.out.empty()) {
      out << buffer.str();
    } else {
      file.open(c.out, std::ios::binary);
      require(static_cast<bool>(file), "--out: cannot open '" + c.out + "'");
      file << buffer.str();
    }
    return code;
  } catch (const RegimeError& e) {
    err << "igw: regime: " << e.what() << '\n';
    return kRegimeRejected;
  } catch (const InvalidInput& e) {
    err << "igw: error: " << e.what() << '\n';
    return kInvalidInput;
  }
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return run(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace igw::cli
