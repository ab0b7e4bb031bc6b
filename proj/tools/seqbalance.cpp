#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "seqbal/seqbal.hpp"

using namespace seqbal;
using json = nlohmann::ordered_json;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_verify_failed = 1;
constexpr int exit_config = 2;
constexpr const char* version = "seqbalance 1.0.0";

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---- option groups -------------------------------------------------------

struct Common {
  std::uint64_t seed = 1;
  std::size_t jobs = 1;
  std::string out = "-";
  std::string format = "csv";
  std::string config;
  bool no_timestamp = false;
};

struct InstanceFlags {
  std::string instance = "halfzero";
  std::size_t p = 1;
  std::size_t q = 4;
  std::size_t K = 0;  // 0: ceil(sqrt(T))
  std::size_t clusters = 5;
  double gamma = 0.8;
  std::string input;
};

struct DesignFlags {
  std::string design = "pigeonhole";
  std::string partition = "auto";
  double eta = 0.5;
  double phi = 0.0;  // 0: builder default
  double c = 2.0;
  double gamma_lb = 0.5;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--seed", c.seed, "base seed")->envname("SEQBALANCE_SEED");
  app->add_option("--jobs", c.jobs, "worker threads, 0 = all cores");
  app->add_option("--out", c.out, "output file, - for stdout");
  app->add_option("--format", c.format, "output format")->check(CLI::IsMember({"csv", "json"}));
  app->add_option("--config", c.config, "JSON file with flat keys; flags override it");
  app->add_flag("--no-timestamp", c.no_timestamp, "omit the timestamp from report headers");
}

void add_instance(CLI::App* app, InstanceFlags& f) {
  app->add_option("--instance", f.instance, "instance family")
      ->check(CLI::IsMember({"halfzero", "grid", "alternating", "clustered", "discrete", "uniform", "fixed"}));
  app->add_option("--p", f.p, "continuous dimensions (grid, clustered, uniform)");
  app->add_option("--q", f.q, "binary covariates (discrete)");
  app->add_option("--K", f.K, "cells of the alternating instance, 0 = ceil(sqrt(T))");
  app->add_option("--clusters", f.clusters, "cluster count N (clustered)");
  app->add_option("--gamma", f.gamma, "cluster diameter exponent (clustered)");
  app->add_option("--input", f.input, "instance CSV; implies --instance fixed");
}

void add_design(CLI::App* app, DesignFlags& f) {
  app->add_option("--design", f.design, "assignment design")
      ->check(CLI::IsMember({"crd", "pigeonhole", "single", "matchedpair"}));
  app->add_option("--partition", f.partition, "pigeonhole cells, auto picks by covariate space")
      ->check(CLI::IsMember({"auto", "uniform1d", "grid", "natural", "mixed", "clustered"}));
  app->add_option("--eta", f.eta, "uniform1d exponent");
  app->add_option("--phi", f.phi, "grid exponent, 0 = 1/p");
  app->add_option("--c", f.c, "grid constant");
  app->add_option("--gamma-lb", f.gamma_lb, "clustered lower bound on gamma");
}

// ---- parsing helpers -----------------------------------------------------

std::size_t parse_size(const std::string& s) {
  try {
    std::size_t pos = 0;
    const auto v = std::stoull(s, &pos);
    if (pos != s.size()) throw ConfigError("bad integer '" + s + "'");
    return static_cast<std::size_t>(v);
  } catch (const std::logic_error&) {
    throw ConfigError("bad integer '" + s + "'");
  }
}

/// "a..b" doubles from a to b, "a..b*k" multiplies by k, "a,b,c" lists.
std::vector<std::size_t> parse_horizons(const std::string& s) {
  std::vector<std::size_t> out;
  const auto dots = s.find("..");
  if (dots == std::string::npos) {
    for (const auto& tok : split(s, ',')) out.push_back(parse_size(tok));
  } else {
    const std::size_t a = parse_size(s.substr(0, dots));
    std::string rest = s.substr(dots + 2);
    std::size_t factor = 2;
    if (const auto star = rest.find('*'); star != std::string::npos) {
      factor = parse_size(rest.substr(star + 1));
      rest = rest.substr(0, star);
    }
    const std::size_t b = parse_size(rest);
    if (a == 0 || factor < 2 || b < a) throw ConfigError("bad horizon range '" + s + "'");
    for (std::size_t T = a; T <= b; T *= factor) out.push_back(T);
  }
  if (out.empty()) throw ConfigError("no horizons in '" + s + "'");
  return out;
}

ArrivalSequence read_instance_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  return read_sequence_csv(in);
}

InstanceSpec instance_spec(const InstanceFlags& f) {
  InstanceSpec s;
  s.p = f.p;
  s.q = f.q;
  s.clusters = f.clusters;
  s.gamma = f.gamma;
  if (f.K > 0) s.K = f.K;
  if (!f.input.empty()) {
    s.kind = InstanceKind::fixed;
    s.sequence = read_instance_file(f.input);
    return s;
  }
  const std::string& k = f.instance;
  if (k == "halfzero") s.kind = InstanceKind::halfzero;
  else if (k == "grid") s.kind = InstanceKind::grid;
  else if (k == "alternating") s.kind = InstanceKind::alternating;
  else if (k == "clustered") s.kind = InstanceKind::clustered;
  else if (k == "discrete") s.kind = InstanceKind::discrete_uniform;
  else if (k == "uniform") s.kind = InstanceKind::uniform;
  else throw ConfigError("--instance fixed needs --input");
  return s;
}

CovariateSpace instance_space(const InstanceSpec& s) {
  switch (s.kind) {
    case InstanceKind::halfzero:
    case InstanceKind::alternating: return CovariateSpace::continuous(1);
    case InstanceKind::grid:
    case InstanceKind::clustered:
    case InstanceKind::uniform: return CovariateSpace::continuous(s.p);
    case InstanceKind::discrete_uniform: return CovariateSpace::binary(s.q);
    case InstanceKind::fixed: return s.sequence->space;
  }
  return CovariateSpace::continuous(1);
}

DesignSpec design_spec(const DesignFlags& f, const CovariateSpace& space) {
  DesignSpec d;
  if (f.design == "crd") d.kind = DesignKind::crd;
  else if (f.design == "pigeonhole") d.kind = DesignKind::pigeonhole;
  else if (f.design == "single") d.kind = DesignKind::single;
  else d.kind = DesignKind::matched_pair;
  d.eta = f.eta;
  if (f.phi > 0) d.phi = f.phi;
  d.c = f.c;
  d.gamma_lb = f.gamma_lb;
  const std::string& p = f.partition;
  if (p == "auto") {
    if (space.p() == 0) d.partition = PartitionKind::natural_discrete;
    else if (space.q() > 0) d.partition = PartitionKind::mixed;
    else if (space.p() == 1) d.partition = PartitionKind::uniform_1d;
    else d.partition = PartitionKind::grid;
  } else if (p == "uniform1d") d.partition = PartitionKind::uniform_1d;
  else if (p == "grid") d.partition = PartitionKind::grid;
  else if (p == "natural") d.partition = PartitionKind::natural_discrete;
  else if (p == "mixed") d.partition = PartitionKind::mixed;
  else d.partition = PartitionKind::clustered;
  return d;
}

// ---- provenance and output -----------------------------------------------

using Meta = std::vector<std::pair<std::string, std::string>>;

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// The resolved value of every option of `app`, in declaration order.
Meta resolved_config(const CLI::App* app, const Common& common) {
  Meta meta{{"tool", version}, {"command", app->get_name()}};
  for (const CLI::Option* opt : app->get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string name = opt->get_lnames().front();
    if (name == "help" || name == "config" || name == "out") continue;
    std::string value;
    if (name == "seed") {
      value = std::to_string(common.seed);
    } else if (opt->count() > 0) {
      const auto& r = opt->results();
      value = r.back();
      if (opt->get_expected_min() == 0) value = "true";
    } else {
      value = opt->get_default_str();
      if (opt->get_expected_min() == 0 && value.empty()) value = "false";
    }
    meta.emplace_back(name, value);
  }
  if (!common.no_timestamp) meta.emplace_back("timestamp", utc_timestamp());
  return meta;
}

json meta_json(const Meta& meta) {
  json j = json::object();
  for (const auto& [k, v] : meta) j[k] = v;
  return j;
}

/// Writes through `emit` to --out (or stdout).
void write_output(const Common& common, const std::function<void(std::ostream&)>& emit) {
  if (common.out == "-") {
    emit(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream f(common.out, std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + common.out + "'");
  emit(f);
  if (!f) throw std::runtime_error("write to '" + common.out + "' failed");
}

std::string join_key(const CellKey& key) {
  if (key.empty()) return "*";
  std::string s;
  for (std::size_t i = 0; i < key.size(); ++i) s += (i ? ":" : "") + std::to_string(key[i]);
  return s;
}

// ---- commands ------------------------------------------------------------

struct GenCmd {
  Common common;
  InstanceFlags inst;
  std::size_t T = 64;
};

int run_gen(const CLI::App* app, const GenCmd& cmd) {
  const auto meta = resolved_config(app, cmd.common);
  const auto spec = instance_spec(cmd.inst);
  const auto seq = make_instance(spec, cmd.T, derive_seed(cmd.common.seed, 0, 0));
  write_output(cmd.common, [&](std::ostream& out) {
    if (cmd.common.format == "json") {
      json j;
      j["config"] = meta_json(meta);
      j["p"] = seq.space.p();
      j["q"] = seq.space.q();
      j["supports"] = seq.space.supports();
      json rows = json::array();
      for (const auto& x : seq.subjects) rows.push_back(std::vector<double>(x.coords().begin(), x.coords().end()));
      j["subjects"] = rows;
      out << j.dump(2) << '\n';
    } else {
      write_header(out, meta);
      write_sequence_csv(out, seq);
    }
  });
  return exit_ok;
}

struct AssignCmd {
  Common common;
  InstanceFlags inst;
  DesignFlags design;
  std::size_t T = 64;
};

int run_assign(const CLI::App* app, const AssignCmd& cmd) {
  const auto meta = resolved_config(app, cmd.common);
  const auto spec = instance_spec(cmd.inst);
  const std::size_t T = spec.sequence ? spec.sequence->size() : cmd.T;
  const auto seq = make_instance(spec, T, derive_seed(cmd.common.seed, 0, 0));
  const auto d = design_spec(cmd.design, seq.space);
  const auto run = run_design(d, seq, derive_seed(cmd.common.seed, 0, 1));
  std::optional<Partition> part;
  if (d.kind == DesignKind::pigeonhole || d.kind == DesignKind::single) part = make_partition(d, seq.space, T);
  write_output(cmd.common, [&](std::ostream& out) {
    if (cmd.common.format == "json") {
      json j;
      j["config"] = meta_json(meta);
      j["T"] = T;
      j["discrepancy"] = run.discrepancy;
      j["tau"] = run.trace.tau;
      json rows = json::array();
      for (std::size_t t = 0; t < T; ++t) {
        rows.push_back({{"t", t + 1}, {"w", as_int(run.trace.w[t])},
                        {"cell_key", part ? join_key(part->key(seq.subjects[t])) : "*"}});
      }
      j["trace"] = rows;
      out << j.dump(2) << '\n';
    } else {
      auto m = meta;
      m.emplace_back("discrepancy", format_number(run.discrepancy));
      m.emplace_back("tau", std::to_string(run.trace.tau));
      write_header(out, m);
      out << "t,w,cell_key\n";
      for (std::size_t t = 0; t < T; ++t) {
        out << t + 1 << ',' << as_int(run.trace.w[t]) << ','
            << (part ? join_key(part->key(seq.subjects[t])) : "*") << '\n';
      }
    }
  });
  if (cmd.common.out != "-") std::cout << format_number(run.discrepancy) << '\n';
  return exit_ok;
}

struct DiscrepancyCmd {
  Common common;
  std::string control, treated, control_file, treated_file;
  std::string solver = "auto";
};

std::vector<Subject> group_from(const std::string& inline_pts, const std::string& file, const char* which) {
  if (!inline_pts.empty() && !file.empty()) throw ConfigError(std::string("give either --") + which + " or --" + which + "-file");
  if (!file.empty()) return read_instance_file(file).subjects;
  if (inline_pts.empty()) throw ConfigError(std::string("missing --") + which);
  return parse_inline_points(inline_pts);
}

int run_discrepancy(const CLI::App* app, const DiscrepancyCmd& cmd) {
  const auto meta = resolved_config(app, cmd.common);
  const auto a = group_from(cmd.control, cmd.control_file, "control");
  const auto b = group_from(cmd.treated, cmd.treated_file, "treated");
  const Matching m = cmd.solver == "bruteforce" ? discrepancy_bruteforce(a, b)
                                                : discrepancy(a, b, cmd.solver == "hungarian" ? Solver::hungarian
                                                                                              : Solver::automatic);
  std::cout << format_number(m.cost) << '\n';
  if (cmd.common.out != "-") {
    write_output(cmd.common, [&](std::ostream& out) {
      if (cmd.common.format == "json") {
        json j;
        j["config"] = meta_json(meta);
        j["discrepancy"] = m.cost;
        j["pairs"] = m.pairs;
        out << j.dump(2) << '\n';
      } else {
        write_header(out, meta);
        out << "control,treated\n";
        for (auto [i, k] : m.pairs) out << i << ',' << k << '\n';
        out << "# discrepancy=" << format_number(m.cost) << '\n';
      }
    });
  }
  return exit_ok;
}

struct RatesCmd {
  Common common;
  InstanceFlags inst;
  DesignFlags design;
  std::string horizons = "64..4096";
  std::size_t R = 100;
  std::string samples;
};

int run_rates(const CLI::App* app, const RatesCmd& cmd) {
  if (cmd.R < 30) throw ConfigError("--R must be at least 30");
  const auto meta = resolved_config(app, cmd.common);
  const auto spec = instance_spec(cmd.inst);
  const auto Ts = spec.sequence ? std::vector<std::size_t>{spec.sequence->size()} : parse_horizons(cmd.horizons);
  const auto d = design_spec(cmd.design, instance_space(spec));
  const auto report = run_mc(d, spec, Ts, cmd.R, cmd.common.seed, cmd.common.jobs);
  std::optional<RateFit> fit;
  try {
    fit = fit_rate(report);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::degenerate_input) throw;
  }
  write_output(cmd.common, [&](std::ostream& out) {
    if (cmd.common.format == "json") {
      json j;
      j["config"] = meta_json(meta);
      json rows = json::array();
      for (const auto& r : report.rows) {
        rows.push_back({{"design", r.design}, {"instance", r.instance}, {"T", r.T}, {"R", r.R}, {"mean", r.mean},
                        {"std", r.std}, {"ci", r.ci}, {"mean_tau", r.mean_tau}});
      }
      j["rows"] = rows;
      j["fit"] = fit ? json{{"slope", fit->slope}, {"intercept", fit->intercept}, {"r2", fit->r2}} : json(nullptr);
      out << j.dump(2) << '\n';
    } else {
      write_header(out, meta);
      out << "design,instance,T,R,mean,std,ci,mean_tau\n";
      for (const auto& r : report.rows) {
        out << r.design << ',' << r.instance << ',' << r.T << ',' << r.R << ',' << format_number(r.mean) << ','
            << format_number(r.std) << ',' << format_number(r.ci) << ',' << format_number(r.mean_tau) << '\n';
      }
      if (fit) {
        write_header(out, {{"fit_slope", format_number(fit->slope)},
                           {"fit_intercept", format_number(fit->intercept)},
                           {"fit_r2", format_number(fit->r2)}});
      }
    }
  });
  if (!cmd.samples.empty()) {
    Common dump = cmd.common;
    dump.out = cmd.samples;
    write_output(dump, [&](std::ostream& out) {
      write_header(out, meta);
      out << "T,rep,discrepancy\n";
      for (const auto& r : report.rows) {
        for (std::size_t k = 0; k < r.samples.size(); ++k) out << r.T << ',' << k << ',' << format_number(r.samples[k]) << '\n';
      }
    });
  }
  if (cmd.common.out != "-") {
    if (fit) {
      std::cout << "slope=" << format_number(fit->slope) << " intercept=" << format_number(fit->intercept)
                << " r2=" << format_number(fit->r2) << '\n';
    } else {
      std::cout << "slope=none (need at least 4 distinct T)\n";
    }
  }
  return exit_ok;
}

struct AteCmd {
  Common common;
  std::size_t T = 10000;
  std::size_t d = 16;
  double marginal = 0.5;
  double coef_scale = 1.0;
  double intercept = 0.05;
  std::size_t boost_top_k = 5;
  double boost_factor = 3.0;
  double noise_upper = -1.0;  // negative: mean control probability
  std::uint64_t pop_seed = 1;
  std::size_t R = 2000;
  std::string designs = "crd,pigeonhole";
  bool sweep = false;
  std::string samples;
};

int run_ate(const CLI::App* app, const AteCmd& cmd) {
  const auto meta = resolved_config(app, cmd.common);
  DgpConfig cfg;
  cfg.T = cmd.T;
  cfg.d = cmd.d;
  cfg.marginals.assign(cmd.d, cmd.marginal);
  cfg.coef_scale = cmd.coef_scale;
  cfg.intercept = cmd.intercept;
  cfg.boost_top_k = cmd.boost_top_k;
  cfg.boost_factor = cmd.boost_factor;
  if (cmd.noise_upper >= 0) cfg.noise_upper = cmd.noise_upper;
  cfg.seed = cmd.pop_seed;
  std::vector<AteDesign> designs;
  for (const auto& name : split(cmd.designs, ',')) {
    if (name == "crd") designs.push_back(AteDesign::crd);
    else if (name == "pigeonhole") designs.push_back(AteDesign::pigeonhole);
    else throw ConfigError("unknown ATE design '" + name + "'");
  }
  const auto rep = ate_study(cfg, designs, cmd.R, cmd.common.seed, cmd.common.jobs);
  std::optional<SweepResult> sweep;
  if (cmd.sweep) sweep = sample_size_sweep(cfg, cmd.R, cmd.common.seed, {0.8, 0.85, 0.9, 0.95, 1.0}, cmd.common.jobs);

  write_output(cmd.common, [&](std::ostream& out) {
    if (cmd.common.format == "json") {
      json j;
      j["config"] = meta_json(meta);
      j["tau"] = rep.tau;
      j["noise_upper"] = rep.noise_upper;
      json arms = json::array();
      for (const auto& a : rep.arms) {
        arms.push_back({{"design", a.design}, {"R", a.R}, {"mean", a.mean}, {"var", a.var}, {"var_se", a.var_se}});
      }
      j["arms"] = arms;
      j["reduction"] = rep.reduction ? json(*rep.reduction) : json(nullptr);
      j["reduction_se"] = rep.reduction_se ? json(*rep.reduction_se) : json(nullptr);
      if (sweep) {
        json pts = json::array();
        for (const auto& p : sweep->points) pts.push_back({{"T", p.T}, {"var", p.var}});
        j["sweep"] = {{"crd_var", sweep->crd_var}, {"points", pts},
                      {"crossing", sweep->crossing ? json(*sweep->crossing) : json(nullptr)}};
      }
      out << j.dump(2) << '\n';
    } else {
      auto m = meta;
      m.emplace_back("tau", format_number(rep.tau));
      m.emplace_back("noise_upper_used", format_number(rep.noise_upper));
      if (rep.reduction) {
        m.emplace_back("reduction", format_number(*rep.reduction));
        m.emplace_back("reduction_se", format_number(*rep.reduction_se));
      }
      write_header(out, m);
      out << "design,R,mean,var,var_se\n";
      for (const auto& a : rep.arms) {
        out << a.design << ',' << a.R << ',' << format_number(a.mean) << ',' << format_number(a.var) << ','
            << format_number(a.var_se) << '\n';
      }
      if (sweep) {
        write_header(out, {{"sweep_crd_var", format_number(sweep->crd_var)},
                           {"sweep_crossing", sweep->crossing ? format_number(*sweep->crossing) : "none"}});
        for (const auto& p : sweep->points) write_header(out, {{"sweep_T" + std::to_string(p.T), format_number(p.var)}});
      }
    }
  });
  if (!cmd.samples.empty()) {
    Common dump = cmd.common;
    dump.out = cmd.samples;
    write_output(dump, [&](std::ostream& out) {
      write_header(out, meta);
      out << "design,rep,tau_hat\n";
      for (const auto& a : rep.arms) {
        for (std::size_t k = 0; k < a.samples.size(); ++k) out << a.design << ',' << k << ',' << format_number(a.samples[k]) << '\n';
      }
    });
  }
  if (cmd.common.out != "-" && rep.reduction) {
    std::cout << "tau=" << format_number(rep.tau) << " reduction=" << format_number(*rep.reduction)
              << " se=" << format_number(*rep.reduction_se) << '\n';
  }
  return exit_ok;
}

// ---- verify --------------------------------------------------------------

/// de Moivre's closed form for E|X - np|, X ~ Bin(n, p).
double de_moivre_mad(std::size_t n, double p) {
  const double nd = static_cast<double>(n);
  const double nu = std::floor(nd * p) + 1.0;
  const double lchoose = std::lgamma(nd + 1) - std::lgamma(nu + 1) - std::lgamma(nd - nu + 1);
  return 2.0 * nu * std::exp(lchoose + nu * std::log(p) + (nd - nu + 1) * std::log1p(-p));
}

struct VerifyCmd {
  Common common;
};

int run_verify(const CLI::App*, const VerifyCmd& cmd) {
  int failures = 0;
  auto check = [&](const std::string& name, bool ok, const std::string& detail) {
    std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << detail << '\n';
    if (!ok) ++failures;
  };
  auto near = [](double a, double b, double tol = 1e-9) { return std::abs(a - b) <= tol; };
  auto design = [](DesignKind k) {
    DesignSpec d;
    d.kind = k;
    return d;
  };

  const auto ex1 = scalar_sequence({0.1, 0.7, 0.4, 0.9});
  {
    const double v = discrepancy(parse_inline_points("0.1;0.4"), parse_inline_points("0.7;0.9")).cost;
    check("example1-discrepancy", near(v, 1.1), format_number(v) + " vs 1.1");
  }
  {
    const double v = exact_expected_discrepancy(design(DesignKind::crd), ex1);
    check("example1-crd-exact", near(v, 0.7), format_number(v) + " vs 0.7");
  }
  {
    const double v = exact_expected_discrepancy(design(DesignKind::matched_pair), ex1);
    const double run = trace_discrepancy(ex1, matched_pair_assign(ex1, cmd.common.seed).trace);
    check("example1-matched-pair", near(v, 0.5) && near(run, 0.5), format_number(v) + ", run " + format_number(run));
  }
  {
    const double v = exact_expected_discrepancy(design(DesignKind::pigeonhole), ex1);
    check("example2-pigeonhole-exact", near(v, 0.5), format_number(v) + " vs 0.5");
  }
  {
    // Coins (treated, control) on the first two arrivals must give (T,C,C,T), tau = 3.
    const auto part = build_uniform_1d(4, 0.5);
    bool seen = false, ok = true;
    for (std::uint64_t s = 0; s < 256 && !seen; ++s) {
      const auto t = pigeonhole_assign(ex1, part, derive_seed(cmd.common.seed, s));
      if (t.w[0] != Label::treated || t.w[1] != Label::control) continue;
      seen = true;
      ok = t.w[2] == Label::control && t.w[3] == Label::treated && t.tau == 3;
    }
    check("example2-trajectory", seen && ok, seen ? "w=(T,C,C,T), tau=3" : "coin pattern not reached");
  }
  {
    bool ok = true;
    std::string detail;
    for (std::size_t T : {4, 6, 8}) {
      const double e = exact_expected_discrepancy(design(DesignKind::crd), gen_halfzero_halfone(T));
      const double h = crd_halfzero_expected(T);
      ok = ok && near(e, h);
      detail += "T=" + std::to_string(T) + " " + format_number(e) + "/" + format_number(h) + " ";
    }
    ok = ok && near(crd_halfzero_expected(4), 2.0 / 3) && near(crd_halfzero_binomial_model(4), 1.0);
    check("halfzero-crd-enumeration", ok, detail + "(binomial model at T=4: 1)");
  }
  {
    bool ok = true;
    double worst = 0;
    for (std::size_t n : {1, 2, 5, 10, 51, 100, 1000}) {
      for (double p : {0.1, 0.3, 0.5}) {
        const double err = std::abs(binomial_mad(n, p) - de_moivre_mad(n, p));
        worst = std::max(worst, err);
        ok = ok && err <= 1e-9 * std::max(1.0, de_moivre_mad(n, p));
      }
    }
    const std::size_t n = 10000;
    const double asym = std::sqrt(2 * 0.25 * static_cast<double>(n) / std::numbers::pi);
    const double gap = std::abs(binomial_mad(n, 0.5) - asym);
    ok = ok && gap <= 1.0 / std::sqrt(static_cast<double>(n));
    check("blyth-binomial-mad", ok, "max |exact - closed form| " + format_number(worst) + ", asymptote gap at n=1e4 " + format_number(gap));
  }
  {
    Rng rng(derive_seed(cmd.common.seed, 0, 21));
    std::size_t bad = 0;
    for (int k = 0; k < 200; ++k) {
      const std::size_t n = 1 + rng.below(5), p = 1 + rng.below(3);
      std::vector<Subject> a, b;
      for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> x(p), y(p);
        for (auto& v : x) v = rng.uniform();
        for (auto& v : y) v = rng.uniform();
        a.emplace_back(x);
        b.emplace_back(y);
      }
      if (!near(discrepancy(a, b).cost, discrepancy_bruteforce(a, b).cost)) ++bad;
    }
    for (int k = 0; k < 50; ++k) {
      std::vector<Subject> pts;
      for (int i = 0; i < 8; ++i) pts.emplace_back(std::vector<double>{rng.uniform(), rng.uniform()});
      if (!near(min_weight_pairing(pts).cost, pairing_bruteforce(pts).cost)) ++bad;
    }
    check("matching-oracles", bad == 0, std::to_string(bad) + " mismatches over 250 instances");
  }
  {
    const double v = exact_expected_discrepancy(design(DesignKind::single), scalar_sequence({0, 1, 0, 1}));
    check("single-pigeonhole-exact", near(v, 1.0), format_number(v) + " vs 1");
  }
  {
    std::size_t bad = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
      const auto seq = gen_uniform(100, 1, derive_seed(cmd.common.seed, s, 22));
      if (matched_pairing(seq).cost > 1.0) ++bad;
    }
    check("matched-pair-p1-bound", bad == 0, std::to_string(bad) + " of 100 sequences above 1");
  }
  std::cout << (failures == 0 ? "all checks passed" : std::to_string(failures) + " check(s) failed") << '\n';
  return failures == 0 ? exit_ok : exit_verify_failed;
}

// ---- config files --------------------------------------------------------

std::string config_value(const json& v, const std::string& key) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number()) return v.dump();
  if (v.is_array()) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + config_value(v[i], key);
    return s;
  }
  throw ConfigError("config key '" + key + "' has an unsupported value");
}

/// Flat JSON keys become leading arguments so that command-line flags, which
/// come later, take precedence.
std::vector<std::string> config_arguments(const CLI::App* sub, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  std::vector<std::string> args;
  for (const auto& [key, value] : j.items()) {
    std::string name = key;
    std::replace(name.begin(), name.end(), '_', '-');
    const CLI::Option* opt = sub->get_option_no_throw("--" + name);
    if (opt == nullptr || name == "config" || name == "help") throw ConfigError("unknown config key '" + key + "'");
    if (value.is_null()) continue;
    if (opt->get_expected_min() == 0) {
      if (!value.is_boolean()) throw ConfigError("config key '" + key + "' must be true or false");
      if (value.get<bool>()) args.push_back("--" + name);
      continue;
    }
    args.push_back("--" + name);
    args.push_back(config_value(value, key));
  }
  return args;
}

std::string find_config_path(const std::vector<std::string>& args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  return path;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequential experiment balancing: designs, discrepancy and Monte Carlo studies", "seqbalance"};
  app.set_version_flag("--version", version);
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)->always_capture_default();

  GenCmd gen;
  auto* gen_app = app.add_subcommand("gen", "write an instance as CSV");
  add_common(gen_app, gen.common);
  add_instance(gen_app, gen.inst);
  gen_app->add_option("--T", gen.T, "horizon");

  AssignCmd assign;
  auto* assign_app = app.add_subcommand("assign", "run one design on one instance");
  add_common(assign_app, assign.common);
  add_instance(assign_app, assign.inst);
  add_design(assign_app, assign.design);
  assign_app->add_option("--T", assign.T, "horizon (ignored with --input)");

  DiscrepancyCmd disc;
  auto* disc_app = app.add_subcommand("discrepancy", "score two groups by minimum-weight matching");
  add_common(disc_app, disc.common);
  disc_app->add_option("--control", disc.control, "points, ';' between points and ',' between coordinates");
  disc_app->add_option("--treated", disc.treated, "points, same syntax as --control");
  disc_app->add_option("--control-file", disc.control_file, "instance CSV holding the control group");
  disc_app->add_option("--treated-file", disc.treated_file, "instance CSV holding the treated group");
  disc_app->add_option("--solver", disc.solver)->check(CLI::IsMember({"auto", "hungarian", "bruteforce"}));

  RatesCmd rates;
  auto* rates_app = app.add_subcommand("rates", "Monte Carlo discrepancy over horizons with a log-log fit");
  add_common(rates_app, rates.common);
  add_instance(rates_app, rates.inst);
  add_design(rates_app, rates.design);
  rates_app->add_option("--T", rates.horizons, "a..b (doubling), a..b*k, or a,b,c");
  rates_app->add_option("--R", rates.R, "replications per horizon (>= 30)");
  rates_app->add_option("--samples", rates.samples, "also write per-replication discrepancies here");

  AteCmd ate;
  auto* ate_app = app.add_subcommand("ate", "difference-in-means variance under CRD and pigeonhole");
  add_common(ate_app, ate.common);
  ate_app->add_option("--T", ate.T, "population size");
  ate_app->add_option("--d", ate.d, "binary covariates");
  ate_app->add_option("--marginal", ate.marginal, "Bernoulli rate of every covariate");
  ate_app->add_option("--coef-scale", ate.coef_scale, "standard deviation of the drawn coefficients");
  ate_app->add_option("--intercept", ate.intercept);
  ate_app->add_option("--boost-top-k", ate.boost_top_k);
  ate_app->add_option("--boost-factor", ate.boost_factor);
  ate_app->add_option("--noise-upper", ate.noise_upper, "uplift bound, negative = mean control probability");
  ate_app->add_option("--pop-seed", ate.pop_seed, "population seed");
  ate_app->add_option("--R", ate.R, "replications per design (>= 100)");
  ate_app->add_option("--designs", ate.designs, "comma list of crd, pigeonhole");
  ate_app->add_flag("--sweep", ate.sweep, "also run the sample-size sweep");
  ate_app->add_option("--samples", ate.samples, "also write per-replication estimates here");

  VerifyCmd verify;
  auto* verify_app = app.add_subcommand("verify", "run the golden-value suite");
  add_common(verify_app, verify.common);

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    if (!args.empty()) {
      if (const auto path = find_config_path(args); !path.empty()) {
        const CLI::App* sub = app.get_subcommand_no_throw(args.front());
        if (sub == nullptr) throw ConfigError("--config must follow a command");
        auto extra = config_arguments(sub, path);
        args.insert(args.begin() + 1, extra.begin(), extra.end());
      }
    }
    std::vector<const char*> cargv{argv[0]};
    for (const auto& a : args) cargv.push_back(a.c_str());
    app.parse(static_cast<int>(cargv.size()), cargv.data());
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_config;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return exit_config;
  }

  try {
    if (gen_app->parsed()) return run_gen(gen_app, gen);
    if (assign_app->parsed()) return run_assign(assign_app, assign);
    if (disc_app->parsed()) return run_discrepancy(disc_app, disc);
    if (rates_app->parsed()) return run_rates(rates_app, rates);
    if (ate_app->parsed()) return run_ate(ate_app, ate);
    if (verify_app->parsed()) return run_verify(verify_app, verify);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return exit_config;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_config;
  }
  return exit_config;
}
