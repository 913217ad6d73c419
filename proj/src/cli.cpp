#include "qpkam/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "qpkam/diophantine.hpp"
#include "qpkam/errors.hpp"
#include "qpkam/io.hpp"
#include "qpkam/kam.hpp"
#include "qpkam/maps.hpp"

namespace qpkam {

using nlohmann::json;

namespace {

std::ostream& log_of(const CliContext& ctx) { return ctx.log ? *ctx.log : std::cerr; }

void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write " + path.string());
  os << text;
}

void write_json(const std::filesystem::path& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

// Wall-clock facts live here so the result files stay reproducible.
class Metadata {
 public:
  Metadata(std::string command, const CliContext& ctx)
      : command_(std::move(command)), ctx_(ctx), start_(std::chrono::steady_clock::now()) {}

  void write(int exit_code) const {
    const auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    const std::time_t now = std::time(nullptr);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    try {
      write_json(ctx_.out / (command_ + ".meta.json"), {{"command", command_},
                                                        {"timestamp", stamp},
                                                        {"wall_seconds", secs},
                                                        {"threads", ctx_.threads},
                                                        {"exit_code", exit_code}});
    } catch (const std::exception& e) {
      log_of(ctx_) << "warning: " << e.what() << "\n";
    }
  }

 private:
  std::string command_;
  const CliContext& ctx_;
  std::chrono::steady_clock::time_point start_;
};

double number_or_inf(const json& v, const char* key) {
  if (v.is_string() && (v.get<std::string>() == "inf" || v.get<std::string>() == "infinity")) return INFINITY;
  if (!v.is_number()) throw ConfigError(std::string(key) + " must be a number or \"inf\"");
  return v.get<double>();
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

json map_json(const ExperimentConfig& cfg) {
  require(cfg.map.is_object(), "\"map\" is required for this command");
  json m = cfg.map;
  if (!m.contains("omega")) m["omega"] = cfg.omega;
  return m;
}

struct Certified {
  Frequency freq;
  RotationCertificate cert;
};

// Frequency and rotation certificates. Throws ResonantFrequency and
// NoneAdmissible; std::invalid_argument becomes ConfigError.
Certified certify_inputs(const ExperimentConfig& cfg, const CliContext& ctx) {
  const int K = cfg.certify_K > 0 ? cfg.certify_K : cfg.K;
  try {
    Certified out{certify_frequency(cfg.omega, K, cfg.sigma0), {}};
    double alpha = 0.0;
    if (cfg.alpha) {
      alpha = *cfg.alpha;
    } else {
      const auto s = sample_admissible(out.freq, cfg.gamma, cfg.tau, cfg.interval_a, cfg.interval_b, K, 64, cfg.seed);
      alpha = s.accepted.front().alpha;
      if (ctx.verbose) log_of(ctx) << "sampled alpha = " << alpha << "\n";
    }
    out.cert = certify_rotation(alpha, out.freq, cfg.gamma, cfg.tau, cfg.interval_a, cfg.interval_b, K);
    return out;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

void print_rejection(const RotationCertificate& c, std::ostream& os) {
  os << "rotation rejected: " << c.message;
  if (c.line == RejectLine::Lattice) {
    os << " (k = (";
    for (std::size_t i = 0; i < c.k.size(); ++i) os << (i ? ", " : "") << c.k[i];
    os << "), j = " << c.j << ", distance = " << c.distance << ", margin = " << c.margin << ")";
  }
  os << "\n";
}

json divisor_reports(const Frequency& freq, const RotationNumber& rot) {
  json out = json::array();
  for (int m : {5, 10, 20})
    if (m <= rot.K) out.push_back(to_json(divisor_sum_bound_check(freq, rot, m)));
  return out;
}

KamSchedule schedule_of(const ExperimentConfig& cfg, double p) {
  try {
    return build_schedule(p, static_cast<int>(cfg.omega.size()), cfg.tau, cfg.gamma, cfg.q, cfg.k_max);
  } catch (const SmoothnessTooLow& e) {
    throw ConfigError(e.what());
  } catch (const QTooLarge& e) {
    throw ConfigError(e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

double smoothness_of(const ExperimentConfig& cfg, const QpPlanarMap& m) {
  if (cfg.p) return *cfg.p;
  return m.p > 0.0 ? m.p : INFINITY;
}

double ev(const ShellFunction& f, double x) { return eval(f, cd(x, 0.0)).value.real(); }

CurveGraph curve_entry(const json& e, const ExperimentConfig& cfg, const Frequency& freq) {
  if (e.contains("flat")) {
    CurveGraph c{ShellFunction(freq, cfg.K), ShellFunction(freq, cfg.K)};
    c.psi[c.psi.lattice().zero()] = e.at("flat").get<double>();
    return c;
  }
  if (e.contains("file")) {
    std::ifstream is(e.at("file").get<std::string>());
    if (!is) throw ConfigError("cannot read curve file " + e.at("file").get<std::string>());
    json j;
    try {
      j = json::parse(is);
    } catch (const json::parse_error& err) {
      throw ConfigError(err.what());
    }
    const InvariantCurve ic = curve_from_json(j);
    return {ic.phi, ic.psi};
  }
  return {shell_from_json(e.at("phi")), shell_from_json(e.at("psi"))};
}

template <class F>
int guarded(const char* name, const CliContext& ctx, F&& body) {
  Metadata meta(name, ctx);
  int code = kExitOk;
  try {
    code = body();
  } catch (const ConfigError& e) {
    log_of(ctx) << e.what() << "\n";
    code = kExitConfig;
  } catch (const ResonantFrequency& e) {
    log_of(ctx) << e.what() << "\n";
    code = kExitRejected;
  } catch (const NoneAdmissible& e) {
    log_of(ctx) << e.what() << "\n";
    code = kExitRejected;
  } catch (const std::exception& e) {
    log_of(ctx) << "error: " << e.what() << "\n";
    code = kExitConfig;
  }
  meta.write(code);
  return code;
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  static const std::set<std::string> known = {
      "map",  "omega", "sigma0",       "gamma", "tau",       "alpha",       "interval", "p",         "q",
      "K",    "J",     "k_max",        "tol",   "certify_K", "radial_width", "bandwidth", "csv_samples",
      "csv_span", "curves", "seed"};
  require(j.is_object(), "config must be a JSON object");
  for (const auto& [key, _] : j.items()) require(known.count(key) > 0, "unknown config key \"" + key + "\"");

  ExperimentConfig c;
  try {
    if (j.contains("map")) {
      c.map = j.at("map");
      require(c.map.is_object(), "\"map\" must be an object");
    }
    if (j.contains("omega")) {
      c.omega = j.at("omega").get<std::vector<double>>();
    } else if (c.map.is_object() && c.map.contains("omega")) {
      c.omega = c.map.at("omega").get<std::vector<double>>();
    }
    require(!c.omega.empty(), "\"omega\" must be a nonempty array");
    for (double w : c.omega) require(std::isfinite(w), "\"omega\" entries must be finite");

    auto num = [&](const char* key, double& dst) {
      if (j.contains(key)) dst = j.at(key).get<double>();
    };
    auto integer = [&](const char* key, int& dst) {
      if (j.contains(key)) dst = j.at(key).get<int>();
    };
    num("sigma0", c.sigma0);
    num("gamma", c.gamma);
    num("tau", c.tau);
    num("tol", c.tol);
    num("radial_width", c.radial_width);
    num("bandwidth", c.bandwidth);
    num("csv_span", c.csv_span);
    integer("K", c.K);
    integer("J", c.J);
    integer("k_max", c.k_max);
    integer("certify_K", c.certify_K);
    integer("csv_samples", c.csv_samples);
    if (j.contains("alpha")) c.alpha = j.at("alpha").get<double>();
    if (j.contains("p")) c.p = number_or_inf(j.at("p"), "p");
    if (j.contains("q")) c.q = j.at("q").get<double>();
    if (j.contains("interval")) {
      const auto iv = j.at("interval").get<std::vector<double>>();
      require(iv.size() == 2, "\"interval\" must be [a, b]");
      c.interval_a = iv[0];
      c.interval_b = iv[1];
    }
    if (j.contains("curves")) {
      c.curves = j.at("curves");
      require(c.curves.is_array(), "\"curves\" must be an array");
    }
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw ConfigError(e.what());
  }

  require(c.sigma0 > 0.0 && c.gamma > 0.0 && c.tau > 0.0, "sigma0, gamma and tau must be positive");
  require(c.K >= 1 && c.J >= 1 && c.k_max >= 0 && c.certify_K >= 0, "K, J >= 1 and k_max, certify_K >= 0 required");
  require(c.tol > 0.0 && c.radial_width > 0.0 && c.bandwidth > 0.0, "tol, radial_width and bandwidth must be positive");
  require(c.interval_a < c.interval_b, "interval must satisfy a < b");
  require(c.csv_samples >= 1 && c.csv_span > 0.0, "csv_samples >= 1 and csv_span > 0 required");
  require(!c.p || *c.p > 0.0, "p must be positive");
  require(!c.q || (*c.q > 0.0 && *c.q < 1.0), "q must lie in (0, 1)");
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config " + path.string());
  try {
    return parse_config(json::parse(is));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

int cmd_certify(const ExperimentConfig& cfg, const CliContext& ctx) {
  return guarded("certify", ctx, [&] {
    const Certified c = certify_inputs(cfg, ctx);
    json report = {{"frequency", to_json(c.freq)}, {"rotation", to_json(c.cert)}};
    report["divisor_sums"] = c.cert.accepted ? divisor_reports(c.freq, c.cert.rotation) : json::array();
    write_json(ctx.out / "certify.json", report);
    if (!c.cert.accepted) {
      print_rejection(c.cert, log_of(ctx));
      return kExitRejected;
    }
    if (ctx.verbose) log_of(ctx) << "certified alpha = " << c.cert.rotation.alpha << "\n";
    return kExitOk;
  });
}

int cmd_schedule(const ExperimentConfig& cfg, const CliContext& ctx) {
  return guarded("schedule", ctx, [&] {
    double p = cfg.p.value_or(INFINITY);
    if (!cfg.p && cfg.map.is_object()) p = smoothness_of(cfg, map_from_json(map_json(cfg)));
    const KamSchedule s = schedule_of(cfg, p);
    write_json(ctx.out / "schedule.json", s.to_json());
    char line[256];
    std::printf("p = %g  tau = %g  gamma = %g  q = %.6g  theta = %.6g  eps0 = %.6g  M0 = %.6g\n", s.p, s.tau, s.gamma,
                s.q, s.theta, s.eps0, s.M0);
    std::printf("%3s %12s %12s %12s %12s %12s %12s %12s %12s %12s\n", "k", "r", "s", "r'", "s'", "eps", "M", "b",
                "B", "delta");
    for (int k = 0; k <= s.k_max(); ++k) {
      std::snprintf(line, sizeof line, "%3d %12.5e %12.5e %12.5e %12.5e %12.5e %12.5e %12.5e %12.5e %12.5e\n", k,
                    s.r[k], s.s[k], s.r_prime[k], s.s_prime[k], s.eps[k], s.M[k], s.b[k], s.B[k], s.delta[k]);
      std::fputs(line, stdout);
    }
    if (!s.condition_ok || !s.relations_ok)
      log_of(ctx) << "warning: schedule relations do not hold: " << s.relations_message << "\n";
    return kExitOk;
  });
}

int cmd_solve(const ExperimentConfig& cfg, const CliContext& ctx) {
  return guarded("solve", ctx, [&] {
    QpPlanarMap m = map_from_json(map_json(cfg));
    m.p = smoothness_of(cfg, m);
    const KamSchedule s = schedule_of(cfg, m.p);
    const Certified c = certify_inputs(cfg, ctx);
    if (!c.cert.accepted) {
      print_rejection(c.cert, log_of(ctx));
      return kExitRejected;
    }
    KamOptions opt;
    opt.K = cfg.K;
    opt.J = cfg.J;
    opt.radial_width = cfg.radial_width;
    opt.tol = cfg.tol;
    opt.bandwidth = cfg.bandwidth;

    KamResult res;
    try {
      res = run(m, c.cert.rotation, s, opt);
    } catch (const KamNotConverged& e) {
      write_json(ctx.out / "trace.json", {{"schedule", s.to_json()}, {"levels", trace_json(e.trace)},
                                          {"converged", false}, {"message", e.what()}});
      log_of(ctx) << e.what() << "\n";
      return kExitNotConverged;
    } catch (const Error& e) {
      log_of(ctx) << e.what() << "\n";
      return kExitNotConverged;
    }

    write_json(ctx.out / "curve.json", to_json(res.curve));
    write_json(ctx.out / "trace.json",
               {{"schedule", s.to_json()},
                {"levels", trace_json(res.trace)},
                {"converged", true},
                {"eps0", res.eps0},
                {"smallness",
                 {{"lhs0", res.smallness.lhs0},
                  {"rhs0", res.smallness.rhs0},
                  {"lhsP", res.smallness.lhsP},
                  {"rhsP", res.smallness.rhsP},
                  {"p_used", res.smallness.p_used},
                  {"pass", res.smallness.pass}}}});

    std::ostringstream csv;
    csv << "xi,theta,r\n";
    char row[96];
    for (int i = 0; i < cfg.csv_samples; ++i) {
      const double xi = cfg.csv_span * i / cfg.csv_samples;
      std::snprintf(row, sizeof row, "%.17g,%.17g,%.17g\n", xi, xi + ev(res.curve.phi, xi), ev(res.curve.psi, xi));
      csv << row;
    }
    write_file(ctx.out / "curve.csv", csv.str());
    if (ctx.verbose)
      for (const auto& r : res.trace) log_of(ctx) << "level " << r.k << ": defect " << r.defect << "\n";
    return kExitOk;
  });
}

int cmd_diagnose(const ExperimentConfig& cfg, const CliContext& ctx) {
  return guarded("diagnose", ctx, [&] {
    const QpPlanarMap m = map_from_json(map_json(cfg));
    json targets = cfg.curves;
    if (targets.is_null()) targets = json::array({{{"flat", cfg.alpha.value_or(0.5 * (cfg.interval_a + cfg.interval_b))}}});

    json out = json::array();
    for (const auto& e : targets) {
      json rep;
      CurveGraph c;
      try {
        c = curve_entry(e, cfg, m.freq);
      } catch (const json::exception& err) {
        throw ConfigError(err.what());
      }
      try {
        const IntersectionReport w = intersection_witness(m, c);
        const bool found = w.sign_change || w.identical;
        rep["intersection"] = {{"witness", found},
                               {"status", w.identical ? "identical" : (found ? "witness" : "no witness at resolution")},
                               {"xi_star", w.xi_star},
                               {"min_d", w.min_d},
                               {"max_d", w.max_d},
                               {"area_evaluated", w.area_evaluated},
                               {"area_positive", w.area_positive},
                               {"area_negative", w.area_negative}};
      } catch (const Error& err) {
        rep["intersection"] = {{"witness", false}, {"status", "error"}, {"message", err.what()}};
      }
      try {
        rep["exactness_defect"] = exactness_defect(m, c);
      } catch (const Error& err) {
        rep["exactness_defect"] = nullptr;
        rep["exactness_message"] = err.what();
      }
      out.push_back(rep);
    }
    write_json(ctx.out / "diagnose.json", {{"model", m.model}, {"curves", out},
                                           {"note", "absence of a witness is a statement about the grid only"}});
    return kExitOk;
  });
}

int cmd_diophantine(const DiophantineArgs& args, const CliContext& ctx) {
  return guarded("diophantine", ctx, [&] {
    require(!args.omega.empty() && args.K >= 1 && args.count >= 1 && args.a < args.b, "invalid diophantine flags");
    Frequency freq;
    try {
      freq = certify_frequency(args.omega, args.K, args.sigma0);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    json report = {{"frequency", to_json(freq)}};
    try {
      const SampleResult s =
          sample_admissible(freq, args.gamma, args.tau, args.a, args.b, args.K, args.count, args.seed);
      json alphas = json::array();
      for (const auto& r : s.accepted) alphas.push_back(r.alpha);
      report["fraction"] = s.fraction;
      report["drawn"] = s.drawn.size();
      report["accepted"] = alphas;
      report["divisor_sums"] = divisor_reports(freq, s.accepted.front());
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    write_json(ctx.out / "diophantine.json", report);
    std::cout << report.dump(2) << "\n";
    return kExitOk;
  });
}

int cli_main(int argc, char** argv) {
  CLI::App app{"Invariant curves of quasi-periodic twist maps"};
  app.require_subcommand(1);
  std::string config_path, out_dir = ".";
  std::optional<std::uint64_t> seed;
  bool verbose = false;
  app.add_option("--config", config_path, "experiment config (JSON)");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "random seed, overrides the config");
  app.add_flag("--verbose", verbose);
  app.fallthrough();

  auto* certify = app.add_subcommand("certify", "frequency and rotation certificates");
  auto* solve = app.add_subcommand("solve", "run the KAM iteration");
  auto* diagnose = app.add_subcommand("diagnose", "intersection and exactness diagnostics");
  auto* schedule = app.add_subcommand("schedule", "print the parameter schedule");
  auto* dioph = app.add_subcommand("diophantine", "sample admissible rotation numbers");
  DiophantineArgs da;
  std::vector<double> interval;
  dioph->add_option("--omega", da.omega)->delimiter(',')->required();
  dioph->add_option("--sigma0", da.sigma0);
  dioph->add_option("--gamma", da.gamma);
  dioph->add_option("--tau", da.tau);
  dioph->add_option("--K", da.K);
  dioph->add_option("--interval", interval)->delimiter(',')->expected(2);
  dioph->add_option("--count", da.count);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  CliContext ctx;
  ctx.out = out_dir;
  ctx.verbose = verbose;
  if (const char* t = std::getenv("QPKAM_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(t, &end, 10);
    if (end == t || *end != '\0' || v < 1) {
      std::cerr << "QPKAM_THREADS must be a positive integer\n";
      return kExitConfig;
    }
    ctx.threads = 1;  // every module runs on one thread, so any cap is met
  }

  if (dioph->parsed()) {
    if (!interval.empty()) {
      da.a = interval[0];
      da.b = interval[1];
    }
    if (seed) da.seed = *seed;
    return cmd_diophantine(da, ctx);
  }

  if (config_path.empty()) {
    std::cerr << "--config is required\n";
    return kExitConfig;
  }
  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  }
  if (seed) cfg.seed = *seed;

  if (certify->parsed()) return cmd_certify(cfg, ctx);
  if (solve->parsed()) return cmd_solve(cfg, ctx);
  if (diagnose->parsed()) return cmd_diagnose(cfg, ctx);
  if (schedule->parsed()) return cmd_schedule(cfg, ctx);
  return kExitConfig;
}

}  // namespace qpkam
