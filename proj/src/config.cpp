#include "ega/config.hpp"

#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/lexical_cast.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace ega {

namespace {

template <class T>
T as(const std::string& key, const std::string& v) {
  try {
    return boost::lexical_cast<T>(boost::trim_copy(v));
  } catch (const boost::bad_lexical_cast&) {
    throw ConfigError("config key '" + key + "': cannot parse '" + v + "'");
  }
}

template <>
bool as<bool>(const std::string& key, const std::string& v) {
  const std::string t = boost::to_lower_copy(boost::trim_copy(v));
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ConfigError("config key '" + key + "': cannot parse '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> parts;
  boost::split(parts, v, boost::is_any_of(", "), boost::token_compress_on);
  std::erase_if(parts, [](const std::string& s) { return s.empty(); });
  return parts;
}

template <class F>
auto translate(const std::string& key, F&& f) {
  try {
    return f();
  } catch (const ContractViolation& e) {
    throw ConfigError("config key '" + key + "': " + e.what());
  }
}

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;
using Table = std::map<std::string, std::map<std::string, Setter>>;

#define EGA_NUM(section, name, field, type) \
  t[section][name] = [](ExperimentConfig& c, const std::string& v) { c.field = as<type>(section "." name, v); }

const Table& table() {
  static const Table tbl = [] {
    Table t;
    t["system"]["name"] = [](ExperimentConfig& c, const std::string& v) { c.system = boost::trim_copy(v); };
    EGA_NUM("system", "sigma", l63.sigma, double);
    EGA_NUM("system", "rho", l63.rho, double);
    EGA_NUM("system", "beta", l63.beta, double);
    EGA_NUM("system", "slow", l96.S, int);
    EGA_NUM("system", "fast", l96.B, int);
    EGA_NUM("system", "forcing", l96.A, double);
    EGA_NUM("system", "c", l96.c, double);
    EGA_NUM("system", "d", l96.d, double);
    EGA_NUM("system", "gamma", l96.gamma, double);

    t["submodel"]["layers"] = [](ExperimentConfig& c, const std::string& v) {
      c.layers.clear();
      for (const auto& p : split_list(v)) c.layers.push_back(as<int>("submodel.layers", p));
    };
    EGA_NUM("submodel", "seed", submodel_seed, std::uint64_t);

    t["solver"]["scheme"] = [](ExperimentConfig& c, const std::string& v) {
      c.solver.scheme = translate("solver.scheme", [&] { return parse_scheme(boost::trim_copy(v)); });
    };
    EGA_NUM("solver", "substeps", solver.substeps, int);
    EGA_NUM("solver", "h", h, double);
    EGA_NUM("solver", "n", n, std::size_t);

    EGA_NUM("data", "samples", samples, std::size_t);
    EGA_NUM("data", "burn_in", burn_in, std::size_t);
    EGA_NUM("data", "validation_fraction", validation_fraction, double);
    EGA_NUM("data", "truth_substeps", truth_substeps, int);
    EGA_NUM("data", "seed", data_seed, std::uint64_t);
    EGA_NUM("data", "csv", csv, bool);

    t["train"]["mode"] = [](ExperimentConfig& c, const std::string& v) {
      c.train.mode = translate("train.mode", [&] { return parse_train_mode(boost::trim_copy(v)); });
    };
    t["train"]["jacobian"] = [](ExperimentConfig& c, const std::string& v) {
      c.train.jacobian.method = translate("train.jacobian", [&] { return parse_method(boost::trim_copy(v)); });
    };
    t["train"]["optimizer"] = [](ExperimentConfig& c, const std::string& v) {
      const std::string s = boost::trim_copy(v);
      if (s == "adam") c.train.optimizer.kind = OptimizerKind::Adam;
      else if (s == "sgd") c.train.optimizer.kind = OptimizerKind::Sgd;
      else throw ConfigError("config key 'train.optimizer': expected adam or sgd, got '" + s + "'");
    };
    EGA_NUM("train", "lr", train.optimizer.lr, double);
    EGA_NUM("train", "beta1", train.optimizer.beta1, double);
    EGA_NUM("train", "beta2", train.optimizer.beta2, double);
    EGA_NUM("train", "eps", train.optimizer.eps, double);
    EGA_NUM("train", "batch", train.batch, std::size_t);
    EGA_NUM("train", "epochs", train.epochs, std::size_t);
    EGA_NUM("train", "reg_weight", train.reg_weight, double);
    EGA_NUM("train", "etlm_members", train.jacobian.etlm_members, int);
    EGA_NUM("train", "etlm_scale", train.jacobian.etlm_scale, double);
    EGA_NUM("train", "seed", train.seed, std::uint64_t);
    EGA_NUM("train", "threads", train.threads, int);
    EGA_NUM("train", "fine_tune_epochs", fine_tune_epochs, std::size_t);

    EGA_NUM("metrics", "lyapunov_h", lyapunov_h, double);
    EGA_NUM("metrics", "lyapunov_transient", lyapunov_transient, std::size_t);
    EGA_NUM("metrics", "lyapunov_steps", lyapunov_steps, std::size_t);
    EGA_NUM("metrics", "lyapunov_qr_interval", lyapunov_qr_interval, std::size_t);
    EGA_NUM("metrics", "meg_initials", meg_initials, std::size_t);
    EGA_NUM("metrics", "meg_seeds", meg_seeds, std::size_t);
    EGA_NUM("metrics", "meg_horizon", meg_horizon, std::size_t);
    EGA_NUM("metrics", "meg_spacing", meg_spacing, std::size_t);
    EGA_NUM("metrics", "pdf_transient", pdf_transient, std::size_t);
    EGA_NUM("metrics", "pdf_steps", pdf_steps, std::size_t);
    EGA_NUM("metrics", "pdf_component", pdf_component, int);
    EGA_NUM("metrics", "pdf_bins", pdf_bins, std::size_t);
    EGA_NUM("metrics", "grad_h_max", grad_h_max, double);
    EGA_NUM("metrics", "grad_h_min", grad_h_min, double);
    EGA_NUM("metrics", "grad_points", grad_points, std::size_t);
    EGA_NUM("metrics", "grad_anchors", grad_anchors, std::size_t);
    EGA_NUM("metrics", "grad_seeds", grad_seeds, std::size_t);
    EGA_NUM("metrics", "grad_horizon_time", grad_horizon_time, double);
    t["metrics"]["grad_methods"] = [](ExperimentConfig& c, const std::string& v) {
      c.grad_methods.clear();
      for (const auto& p : split_list(v))
        c.grad_methods.push_back(translate("metrics.grad_methods", [&] { return parse_method(p); }));
    };

    t["io"]["out"] = [](ExperimentConfig& c, const std::string& v) { c.out = boost::trim_copy(v); };
    t["io"]["dataset"] = [](ExperimentConfig& c, const std::string& v) { c.dataset = boost::trim_copy(v); };
    t["io"]["params"] = [](ExperimentConfig& c, const std::string& v) { c.params = boost::trim_copy(v); };
    return t;
  }();
  return tbl;
}

#undef EGA_NUM

void apply_system_defaults(ExperimentConfig& c) {
  if (c.system == "l96") {
    c.h = 0.1;
    c.samples = 20000;
    c.truth_substeps = 100;
    c.train.epochs = 20;
    c.lyapunov_h = 0.1;
    c.pdf_transient = 1000;
  }
}

}  // namespace

Testbed ExperimentConfig::testbed() const {
  if (system == "l63") return lorenz63_testbed(l63);
  if (system == "l96") return translate("system", [&] { return lorenz96_testbed(l96); });
  throw ConfigError("config key 'system.name': expected l63 or l96, got '" + system + "'");
}

std::vector<int> ExperimentConfig::resolved_layers() const {
  if (!layers.empty()) return layers;
  if (system == "l96") {
    std::vector<int> l{l96.S};
    for (int i = 0; i < 6; ++i) l.push_back(100);
    l.push_back(l96.S);
    return l;
  }
  return {3, 3, 3, 3};
}

void ExperimentConfig::set_seed(std::uint64_t seed) {
  submodel_seed = seed;
  data_seed = seed;
  train.seed = seed;
  train.jacobian.seed = seed;
}

void ExperimentConfig::validate() const {
  const Testbed bed = testbed();
  const auto l = resolved_layers();
  if (l.size() < 2 || l.front() != bed.observed_dim || l.back() != bed.observed_dim)
    throw ConfigError("config key 'submodel.layers': first and last width must equal the state dimension " +
                      std::to_string(bed.observed_dim));
  for (int w : l)
    if (w < 1) throw ConfigError("config key 'submodel.layers': widths must be positive");
  if (!(h > 0.0)) throw ConfigError("config key 'solver.h': must be positive");
  if (n < 1) throw ConfigError("config key 'solver.n': must be >= 1");
  if (solver.substeps < 1) throw ConfigError("config key 'solver.substeps': must be >= 1");
  if (truth_substeps < 1) throw ConfigError("config key 'data.truth_substeps': must be >= 1");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
    throw ConfigError("config key 'data.validation_fraction': must lie in [0, 1)");
  if (!(train.optimizer.lr >= 0.0)) throw ConfigError("config key 'train.lr': must be non-negative");
  if (train.batch < 1) throw ConfigError("config key 'train.batch': must be >= 1");
  if (train.jacobian.method == JacobianMethod::Etlm && train.jacobian.etlm_members < 2)
    throw ConfigError("config key 'train.etlm_members': must be >= 2");
  if (lyapunov_qr_interval < 1) throw ConfigError("config key 'metrics.lyapunov_qr_interval': must be >= 1");
  if (pdf_component < 0 || pdf_component >= bed.observed_dim)
    throw ConfigError("config key 'metrics.pdf_component': out of range");
}

ExperimentConfig parse_config(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }
  ExperimentConfig cfg;
  if (auto sys = tree.get_optional<std::string>("system.name")) cfg.system = boost::trim_copy(*sys);
  if (cfg.system != "l63" && cfg.system != "l96")
    throw ConfigError("config key 'system.name': expected l63 or l96, got '" + cfg.system + "'");
  apply_system_defaults(cfg);

  const Table& t = table();
  for (const auto& [section, body] : tree) {
    auto sec = t.find(section);
    if (sec == t.end()) {
      if (body.empty()) throw ConfigError("config: top-level key '" + section + "' must sit inside a section");
      throw ConfigError("config: unknown section [" + section + "]");
    }
    for (const auto& [key, value] : body) {
      auto it = sec->second.find(key);
      if (it == sec->second.end()) throw ConfigError("config: unknown key '" + section + "." + key + "'");
      it->second(cfg, value.data());
    }
  }
  cfg.train.solver = cfg.solver;
  cfg.train.horizon = cfg.n;
  cfg.train.validation_fraction = cfg.validation_fraction;
  cfg.train.jacobian.seed = cfg.train.seed;
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string render_config(const ExperimentConfig& c) {
  std::ostringstream o;
  o << std::setprecision(17);
  auto list = [](const auto& xs, auto&& fmt) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + fmt(xs[i]);
    return s;
  };
  o << "[system]\nname = " << c.system << "\n";
  if (c.system == "l63") {
    o << "sigma = " << c.l63.sigma << "\nrho = " << c.l63.rho << "\nbeta = " << c.l63.beta << "\n";
  } else {
    o << "slow = " << c.l96.S << "\nfast = " << c.l96.B << "\nforcing = " << c.l96.A << "\nc = " << c.l96.c
      << "\nd = " << c.l96.d << "\ngamma = " << c.l96.gamma << "\n";
  }
  o << "\n[submodel]\nlayers = " << list(c.resolved_layers(), [](int w) { return std::to_string(w); })
    << "\nseed = " << c.submodel_seed << "\n";
  o << "\n[solver]\nscheme = " << scheme_name(c.solver.scheme) << "\nsubsteps = " << c.solver.substeps
    << "\nh = " << c.h << "\nn = " << c.n << "\n";
  o << "\n[data]\nsamples = " << c.samples << "\nburn_in = " << c.burn_in
    << "\nvalidation_fraction = " << c.validation_fraction << "\ntruth_substeps = " << c.truth_substeps
    << "\nseed = " << c.data_seed << "\ncsv = " << (c.csv ? "true" : "false") << "\n";
  const auto& t = c.train;
  o << "\n[train]\nmode = " << train_mode_name(t.mode) << "\njacobian = " << method_name(t.jacobian.method)
    << "\noptimizer = " << (t.optimizer.kind == OptimizerKind::Adam ? "adam" : "sgd") << "\nlr = " << t.optimizer.lr
    << "\nbeta1 = " << t.optimizer.beta1 << "\nbeta2 = " << t.optimizer.beta2 << "\neps = " << t.optimizer.eps
    << "\nbatch = " << t.batch << "\nepochs = " << t.epochs << "\nreg_weight = " << t.reg_weight
    << "\netlm_members = " << t.jacobian.etlm_members << "\netlm_scale = " << t.jacobian.etlm_scale
    << "\nseed = " << t.seed << "\nthreads = " << t.threads << "\nfine_tune_epochs = " << c.fine_tune_epochs << "\n";
  o << "\n[metrics]\nlyapunov_h = " << c.lyapunov_h << "\nlyapunov_transient = " << c.lyapunov_transient
    << "\nlyapunov_steps = " << c.lyapunov_steps << "\nlyapunov_qr_interval = " << c.lyapunov_qr_interval
    << "\nmeg_initials = " << c.meg_initials << "\nmeg_seeds = " << c.meg_seeds << "\nmeg_horizon = " << c.meg_horizon
    << "\nmeg_spacing = " << c.meg_spacing << "\npdf_transient = " << c.pdf_transient << "\npdf_steps = " << c.pdf_steps
    << "\npdf_component = " << c.pdf_component << "\npdf_bins = " << c.pdf_bins << "\ngrad_h_max = " << c.grad_h_max
    << "\ngrad_h_min = " << c.grad_h_min << "\ngrad_points = " << c.grad_points << "\ngrad_anchors = " << c.grad_anchors
    << "\ngrad_seeds = " << c.grad_seeds << "\ngrad_horizon_time = " << c.grad_horizon_time
    << "\ngrad_methods = " << list(c.grad_methods, [](JacobianMethod m) { return method_name(m); }) << "\n";
  o << "\n[io]\nout = " << c.out << "\n";
  if (!c.dataset.empty()) o << "dataset = " << c.dataset << "\n";
  if (!c.params.empty()) o << "params = " << c.params << "\n";
  return o.str();
}

}  // namespace ega
