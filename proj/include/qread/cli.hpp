#ifndef QREAD_CLI_HPP
#define QREAD_CLI_HPP

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qread/bell_receiver.hpp"
#include "qread/classical_bound.hpp"
#include "qread/emit.hpp"
#include "qread/errors.hpp"
#include "qread/fock_oracle.hpp"
#include "qread/phase_space.hpp"
#include "qread/quantum_bound.hpp"
#include "qread/reading_analysis.hpp"

namespace qread::cli {

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NumericalFailure:
    case ErrorKind::OracleAccuracy:
    case ErrorKind::InternalConsistency:
      return 3;
    default:
      return 2;
  }
}

/// Output-only keys per command, skipped when a JSON result is loaded back as a config.
inline const std::set<std::string>& result_keys(const std::string& command) {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"bounds", {"c", "q", "b", "t_opt", "g", "w", "b_inf", "q_inf"}},
      {"gain-scan", {"points", "inconclusive", "failed", "max_g", "max_g_r0", "max_g_r1", "max_g_n"}},
      {"ideal", {"x", "ybar", "nbar"}},
      {"threshold", {"n_th", "x", "w", "f"}},
      {"bell",
       {"c", "best_g", "best_m", "best_phi", "p_test", "p_h0_given_h1", "p_h1_given_h0", "sigma", "quantile",
        "v0", "v1", "mc_estimate", "mc_std_error", "mc_trials_used"}},
      {"oracle-check",
       {"fock", "gaussian", "rel_error", "agree", "helstrom_error", "trace_deficit0", "trace_deficit1"}},
  };
  static const std::set<std::string> none;
  const auto it = keys.find(command);
  return it == keys.end() ? none : it->second;
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline void push_setting(std::vector<std::string>& tokens, std::string key, const std::string& value) {
  if (key.rfind("--", 0) == 0) key = key.substr(2);
  require(!key.empty(), ErrorKind::InvalidInput, "empty key in config file");
  if (value == "true") {
    tokens.push_back("--" + key);
  } else if (value != "false") {
    tokens.push_back("--" + key);
    tokens.push_back(value);
  }
}

inline std::string exact_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// Converts a config file into option tokens. Accepts flat key=value lines or a flat JSON object
/// (as written by the json output of the same command).
inline std::vector<std::string> config_tokens(const std::string& path, const std::string& command) {
  std::ifstream f(path);
  require(static_cast<bool>(f), ErrorKind::InvalidInput, "cannot read config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  const std::string text = ss.str();
  std::vector<std::string> tokens;
  if (detail::trim(text).rfind('{', 0) == 0) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::InvalidInput, std::string("config is not valid JSON: ") + e.what());
    }
    require(j.is_object(), ErrorKind::InvalidInput, "JSON config must be a flat object");
    const auto& skip = result_keys(command);
    for (const auto& [key, value] : j.items()) {
      if (key == "command") {
        require(value.is_string() && value.get<std::string>() == command, ErrorKind::InvalidInput,
                "config was written for a different command");
        continue;
      }
      if (skip.count(key) || value.is_null()) continue;
      if (value.is_boolean()) {
        detail::push_setting(tokens, key, value.get<bool>() ? "true" : "false");
      } else if (value.is_number_integer()) {
        detail::push_setting(tokens, key, std::to_string(value.get<std::int64_t>()));
      } else if (value.is_number()) {
        detail::push_setting(tokens, key, detail::exact_number(value.get<double>()));
      } else if (value.is_string()) {
        detail::push_setting(tokens, key, value.get<std::string>());
      } else {
        throw Error(ErrorKind::InvalidInput, "config value for " + key + " is not a scalar");
      }
    }
    return tokens;
  }
  std::istringstream lines(text);
  std::string line;
  int lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorKind::InvalidInput,
            "config line " + std::to_string(lineno) + " is not key=value");
    const std::string key = detail::trim(line.substr(0, eq));
    if (key == "command") {
      require(detail::trim(line.substr(eq + 1)) == command, ErrorKind::InvalidInput,
              "config was written for a different command");
      continue;
    }
    detail::push_setting(tokens, key, detail::trim(line.substr(eq + 1)));
  }
  return tokens;
}

/// Splices `--config PATH` (or `--config=PATH`) out of args and inserts the file's settings right
/// after the command, so explicit flags given later take precedence.
inline std::vector<std::string> expand_config(std::vector<std::string> args) {
  if (args.empty()) return args;
  for (std::size_t i = 1; i < args.size(); ++i) {
    std::string path;
    std::size_t width = 0;
    if (args[i] == "--config") {
      require(i + 1 < args.size(), ErrorKind::InvalidInput, "--config needs a path");
      path = args[i + 1];
      width = 2;
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      width = 1;
    } else {
      continue;
    }
    args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i + width));
    const auto tokens = config_tokens(path, args[0]);
    args.insert(args.begin() + 1, tokens.begin(), tokens.end());
    return expand_config(args);  // a config may not name another config, but more may follow
  }
  return args;
}

struct CellArgs {
  double r0 = 0.0;
  double r1 = 1.0;
  double nbar = 0.0;
  double eps = 0.0;
  CellSpec cell() const {
    CellSpec c{r0, r1, nbar, eps};
    c.validate();
    return c;
  }
};

inline void add_cell(CLI::App* cmd, CellArgs& a, bool r1_required = true) {
  cmd->add_option("--r0", a.r0, "Reflectivity encoding bit 0")->required();
  auto* r1 = cmd->add_option("--r1", a.r1, "Reflectivity encoding bit 1");
  if (r1_required) r1->required();
  cmd->add_option("--nbar", a.nbar, "Thermal photons of the environment")->capture_default_str();
  cmd->add_option("--eps", a.eps, "Stray photons injected per mode")->capture_default_str();
}

inline Record cell_record(const std::string& command, const CellArgs& a) {
  Record r;
  r.add("command", command).add("r0", a.r0).add("r1", a.r1).add("nbar", a.nbar).add("eps", a.eps);
  return r;
}

struct Output {
  std::string format = "json";
  std::optional<std::string> out;
};

inline void add_output(CLI::App* cmd, Output& o, const std::string& default_format) {
  o.format = default_format;
  cmd->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
  cmd->add_option("--out", o.out, "Output file (default: standard output)");
}

inline int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  try {
    args = expand_config(raw_args);
  } catch (const Error& e) {
    err << "qread: " << e.what() << "\n";
    return exit_code(e.kind());
  }

  CLI::App app{"Quantum reading of classical memories: bounds, gain scans and receiver analysis", "qread"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every command");
  app.footer("Any command also accepts --config PATH: key=value lines or a JSON object written by --format json.");
  std::function<void()> action;

  // bounds
  CellArgs b_cell;
  double b_n = 0.0;
  std::int64_t b_m = 1;
  Output b_out;
  auto* bounds = app.add_subcommand("bounds", "Classical, Chernoff and Bhattacharyya bounds for one memory");
  add_cell(bounds, b_cell);
  bounds->add_option("--n", b_n, "Mean photons irradiated per cell")->required();
  bounds->add_option("--m", b_m, "Bandwidth (signal modes)")->required();
  add_output(bounds, b_out, "json");
  bounds->callback([&] {
    action = [&] {
      const CellSpec cell = b_cell.cell();
      const auto c = classical_bound(cell, static_cast<double>(b_m), b_n);
      const auto q = chernoff_bound(cell, b_m, b_n);
      const auto b = bhattacharyya_bound(cell, b_m, b_n);
      Record r = cell_record("bounds", b_cell);
      r.add("n", b_n).add("m", b_m).add("c", c.value).add("q", q.value).add("b", b.value).add("t_opt", q.t_opt);
      r.add("g", binary_entropy(c.value) - binary_entropy(q.value));
      if (cell.pure_loss()) {
        const auto a = asymptotic_bounds(cell, b_n);
        r.add("w", a.w).add("b_inf", a.b_inf);
        if (a.q_inf) r.add("q_inf", *a.q_inf);
      }
      emit_text(render(r, parse_format(b_out.format)), b_out.out, out);
    };
  });

  // gain-scan
  std::string s_plane;
  double s_n = 0.0, s_n_min = 0.0, s_r1 = 1.0, s_nbar = 0.0, s_eps = 0.0;
  std::int64_t s_m = 1;
  std::optional<double> s_mstar;
  int s_grid = 200;
  bool s_broadband = false;
  Output s_out;
  auto* scan = app.add_subcommand("gain-scan", "Information gain over the r0 x r1 or r0 x N plane");
  scan->add_option("--plane", s_plane, "r0r1: fixed N; r0n: N axis from --n-min to --n")
      ->required()
      ->check(CLI::IsMember({"r0r1", "r0n"}));
  scan->add_option("--n", s_n, "Mean photons (upper end of the N axis on the r0n plane)")->required();
  scan->add_option("--m", s_m, "Bandwidth of the EPR transmitter")->required();
  scan->add_option("--mstar", s_mstar, "Bandwidth cap of the classical transmitters (thermal model)");
  scan->add_option("--nbar", s_nbar, "Thermal photons of the environment")->capture_default_str();
  scan->add_option("--eps", s_eps, "Stray photons injected per mode")->capture_default_str();
  scan->add_option("--grid", s_grid, "Points per axis")->required();
  scan->add_option("--n-min", s_n_min, "Lower end of the N axis (r0n plane)")->capture_default_str();
  scan->add_option("--r1", s_r1, "Fixed r1 on the r0n plane")->capture_default_str();
  scan->add_flag("--broadband", s_broadband, "r0n plane with r1 = 1: use the M -> infinity bound");
  add_output(scan, s_out, "csv");
  scan->callback([&] {
    action = [&] {
      ScanRequest req;
      req.plane = s_plane == "r0r1" ? Plane::R0R1 : Plane::R0N;
      req.energy_n = s_n;
      req.n_min = s_n_min;
      req.m = s_m;
      req.broadband = s_broadband;
      req.r1 = s_r1;
      req.m_star = s_mstar;
      req.nbar = s_nbar;
      req.eps = s_eps;
      req.grid = s_grid;
      require(s_r1 >= 0.0 && s_r1 <= 1.0, ErrorKind::InvalidInput, "r1 must lie in [0,1]");
      const ScanGrid grid = scan_plane(req);
      Table t;
      t.columns = {"r0", "r1", "n", "m", "c", "q", "g", "inconclusive", "failed"};
      std::int64_t n_inconclusive = 0, n_failed = 0;
      for (const auto& cell : grid.cells) {
        const double r1 = req.plane == Plane::R0R1 ? cell.y : req.r1;
        const double n = req.plane == Plane::R0R1 ? req.energy_n : cell.y;
        const std::int64_t m = req.broadband ? std::int64_t{0} : req.m;
        n_inconclusive += cell.inconclusive;
        n_failed += cell.failed;
        if (cell.failed) {
          t.rows.push_back({cell.x, r1, n, m, NAN, NAN, NAN, true, true});
        } else {
          t.rows.push_back({cell.x, r1, n, m, cell.gain.c, cell.gain.q, cell.gain.g, cell.inconclusive, false});
        }
      }
      emit_text(render(t, parse_format(s_out.format)), s_out.out, out);
      if (s_out.out) {
        Record r;
        r.add("command", std::string("gain-scan")).add("points", static_cast<std::int64_t>(grid.cells.size()));
        r.add("inconclusive", n_inconclusive).add("failed", n_failed);
        if (const ScanCell* best = grid.max_gain()) {
          r.add("max_g", best->gain.g).add("max_g_r0", best->x);
          r.add("max_g_r1", req.plane == Plane::R0R1 ? best->y : req.r1);
          r.add("max_g_n", req.plane == Plane::R0R1 ? req.energy_n : best->y);
        }
        out << to_json(r);
      }
    };
  });

  // ideal
  double i_r0 = 0.0, i_n_min = 0.1, i_n_max = 10.0;
  std::optional<int> i_points;
  Output i_out;
  auto* ideal = app.add_subcommand("ideal", "Zero-level curve of the gain for an ideal memory (r1 = 1)");
  ideal->add_option("--r0", i_r0, "Reflectivity encoding bit 0")->required();
  ideal->add_option("--n-min", i_n_min, "First N of the gain table")->capture_default_str();
  ideal->add_option("--n-max", i_n_max, "Last N of the gain table")->capture_default_str();
  ideal->add_option("--n-points", i_points, "Rows of a gain table over N (M = 1 and M -> infinity)");
  add_output(ideal, i_out, "json");
  ideal->callback([&] {
    action = [&] {
      const auto p = ideal_threshold_curve(i_r0);
      if (!i_points) {
        Record r;
        r.add("command", std::string("ideal")).add("r0", i_r0).add("x", p.x).add("ybar", p.ybar).add("nbar", p.nbar);
        emit_text(render(r, parse_format(i_out.format)), i_out.out, out);
        return;
      }
      require(*i_points >= 1, ErrorKind::InvalidInput, "n-points must be >= 1");
      require(i_n_min >= 0.0 && i_n_max >= i_n_min, ErrorKind::InvalidInput, "N range is empty");
      const CellSpec cell{i_r0, 1.0, 0.0, 0.0};
      Table t;
      t.columns = {"r0", "n", "nbar", "c", "q_m1", "g_m1", "q_inf", "g_inf"};
      for (int k = 0; k < *i_points; ++k) {
        const double n = *i_points == 1 ? i_n_min : i_n_min + (i_n_max - i_n_min) * k / (*i_points - 1);
        const auto g1 = info_gain(cell, 1, n);
        const auto ginf = broadband_gain(cell, n);
        t.rows.push_back({i_r0, n, p.nbar, g1.c, g1.q, g1.g, ginf.q, ginf.g});
      }
      emit_text(render(t, parse_format(i_out.format)), i_out.out, out);
    };
  });

  // threshold
  double t_r0 = 0.0, t_r1 = 1.0;
  Output t_out;
  auto* threshold = app.add_subcommand("threshold", "Threshold energy above which EPR transmitters can win");
  threshold->add_option("--r0", t_r0, "Reflectivity encoding bit 0")->required();
  threshold->add_option("--r1", t_r1, "Reflectivity encoding bit 1")->required();
  add_output(threshold, t_out, "json");
  threshold->callback([&] {
    action = [&] {
      const double n_th = threshold_energy(t_r0, t_r1);
      const auto k = PureLossCoefficients::from(t_r0, t_r1, n_th);
      Record r;
      r.add("command", std::string("threshold")).add("r0", t_r0).add("r1", t_r1);
      r.add("n_th", n_th).add("x", k.x).add("w", k.w).add("f", k.f);
      emit_text(render(r, parse_format(t_out.format)), t_out.out, out);
    };
  });

  // bell
  CellArgs e_cell;
  double e_n = 0.0, e_phi_min = 1e-6, e_phi_max = 0.5;
  std::int64_t e_m_min = 1, e_m_max = 256;
  int e_phi_points = 50;
  std::optional<double> e_mstar;
  std::optional<std::int64_t> e_trials;
  std::uint64_t e_seed = 1;
  Output e_out;
  auto* bell = app.add_subcommand("bell", "Bell-measurement receiver: gain optimized over M and phi");
  add_cell(bell, e_cell);
  bell->add_option("--n", e_n, "Mean photons irradiated per cell")->required();
  bell->add_option("--m-min", e_m_min, "Smallest bandwidth")->required();
  bell->add_option("--m-max", e_m_max, "Largest bandwidth")->required();
  bell->add_option("--phi-points", e_phi_points, "Log-spaced significance levels")->required();
  bell->add_option("--phi-min", e_phi_min, "Smallest significance level")->capture_default_str();
  bell->add_option("--phi-max", e_phi_max, "Largest significance level")->capture_default_str();
  bell->add_option("--mstar", e_mstar, "Bandwidth cap of the classical transmitters (thermal model)");
  bell->add_option("--mc-trials", e_trials, "Monte Carlo check of the optimum with this many trials");
  bell->add_option("--seed", e_seed, "Monte Carlo seed")->capture_default_str();
  add_output(bell, e_out, "csv");
  bell->callback([&] {
    action = [&] {
      const CellSpec cell = e_cell.cell();
      require(e_phi_max < 1.0, ErrorKind::InvalidInput, "significance level must lie in (0,1)");
      const auto phis = log_spaced(e_phi_min, e_phi_max, e_phi_points);
      const auto best = optimize_g_test(cell, e_n, e_m_min, e_m_max, phis, e_mstar);
      const auto stats = p_test(cell, e_n, ReceiverConfig{best.best_m, best.best_phi});
      Record r = cell_record("bell", e_cell);
      r.add("n", e_n).add("m-min", e_m_min).add("m-max", e_m_max).add("phi-points", std::int64_t{e_phi_points});
      r.add("phi-min", e_phi_min).add("phi-max", e_phi_max);
      if (e_mstar) r.add("mstar", *e_mstar);
      r.add("c", best.c).add("best_g", best.best_g).add("best_m", best.best_m).add("best_phi", best.best_phi);
      r.add("p_test", stats.p_test).add("p_h0_given_h1", stats.p_h0_given_h1).add("p_h1_given_h0", stats.p_h1_given_h0);
      r.add("v0", stats.v0).add("v1", stats.v1).add("sigma", stats.sigma).add("quantile", stats.quantile);
      if (e_trials) {
        const auto mc = monte_carlo_error(cell, e_n, ReceiverConfig{best.best_m, best.best_phi}, *e_trials, e_seed);
        r.add("mc-trials", *e_trials).add("seed", static_cast<std::int64_t>(e_seed));
        r.add("mc_estimate", mc.estimate).add("mc_std_error", mc.std_error).add("mc_trials_used", mc.trials);
      }
      if (e_out.out) {
        Table t;
        t.columns = {"m", "phi", "p_test", "g", "valid"};
        for (const auto& p : best.surface) t.rows.push_back({p.m, p.phi, p.p_test, p.g, p.valid});
        emit_text(render(t, parse_format(e_out.format)), e_out.out, out);
      }
      out << to_json(r);
    };
  });

  // oracle-check
  CellArgs o_cell;
  double o_ns = 0.0, o_t = 0.5;
  int o_cutoff = 0;
  Output o_out;
  auto* oracle = app.add_subcommand("oracle-check", "Compare the Gaussian overlap with the truncated Fock computation");
  add_cell(oracle, o_cell);
  oracle->add_option("--ns", o_ns, "Mean photons per signal mode")->required();
  oracle->add_option("--cutoff", o_cutoff, "Fock cutoff per mode (2..64)")->required();
  oracle->add_option("--t", o_t, "Overlap exponent in (0,1)")->required();
  add_output(oracle, o_out, "json");
  oracle->callback([&] {
    action = [&] {
      const CellSpec cell = o_cell.cell();
      require(o_t > 0.0 && o_t < 1.0, ErrorKind::InvalidInput, "t must lie in (0,1)");
      const auto f0 = fock::conditional_output_fock<fock::quad>(cell, 0, o_ns, o_cutoff);
      const auto f1 = fock::conditional_output_fock<fock::quad>(cell, 1, o_ns, o_cutoff);
      const double fock_value = fock::overlap_fock(f0, f1, o_t);
      const double gauss_value =
          gaussian_overlap(conditional_output_state(cell, 0, o_ns), conditional_output_state(cell, 1, o_ns), o_t).value;
      const double rel = std::abs(fock_value / gauss_value - 1.0);
      Record r = cell_record("oracle-check", o_cell);
      r.add("ns", o_ns).add("cutoff", std::int64_t{o_cutoff}).add("t", o_t);
      r.add("fock", fock_value).add("gaussian", gauss_value).add("rel_error", rel).add("agree", rel <= 1e-6);
      r.add("helstrom_error", fock::helstrom_error_fock(f0, f1));
      r.add("trace_deficit0", f0.trace_deficit()).add("trace_deficit1", f1.trace_deficit());
      emit_text(render(r, parse_format(o_out.format)), o_out.out, out);
    };
  });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "qread: invalid-input: " << e.what() << "\n";
    return 2;
  }
  try {
    action();
  } catch (const Error& e) {
    err << "qread: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const CLI::ParseError& e) {
    err << "qread: invalid-input: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "qread: numerical-failure: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

inline int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace qread::cli

#endif  // QREAD_CLI_HPP
