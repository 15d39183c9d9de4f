#include "commands.hpp"

#include <algorithm>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "ega/config.hpp"
#include "ega/experiments.hpp"
#include "ega/io.hpp"

namespace ega::cli {

namespace fs = std::filesystem;

namespace {

struct Run {
  ExperimentConfig cfg;
  fs::path out;
  Testbed bed;
};

Run prepare(const std::string& command, const Options& opts) {
  Run r{load_config(opts.config), {}, {}};
  if (opts.seed) r.cfg.set_seed(*opts.seed);
  if (opts.threads) r.cfg.train.threads = *opts.threads;
  if (opts.out) r.cfg.out = *opts.out;
  r.out = r.cfg.out;
  r.bed = r.cfg.testbed();
  fs::create_directories(r.out);
  write_text(r.out / (command + ".config.ini"), render_config(r.cfg));
  return r;
}

SolverKind truth_kind(const ExperimentConfig& cfg) { return {Scheme::RK4, cfg.truth_substeps}; }

Dataset build_dataset(const Run& r) {
  if (r.cfg.samples == 0) throw ConfigError("config key 'data.samples': empty dataset requested (N = 0)");
  GenerationSpec g;
  g.initial = r.bed.initial_state(r.cfg.data_seed);
  g.burn_in = r.cfg.burn_in;
  g.samples = r.cfg.samples;
  g.horizon = r.cfg.n;
  g.h = r.cfg.h;
  g.substeps = r.cfg.truth_substeps;
  return generate_dataset(r.bed, g);
}

Dataset obtain_dataset(const Run& r) {
  if (r.cfg.dataset.empty()) return build_dataset(r);
  Dataset d = read_dataset(r.cfg.dataset);
  if (d.dim != r.bed.observed_dim) throw ConfigError("dataset dimension does not match the configured system");
  if (std::abs(d.h - r.cfg.h) > 1e-12 * r.cfg.h) throw ConfigError("dataset stride h does not match solver.h");
  if (d.horizon < r.cfg.n) throw ConfigError("dataset horizon is shorter than solver.n");
  return d;
}

MlpSubmodel initial_submodel(const Run& r) {
  if (!r.cfg.params.empty()) {
    MlpSubmodel m = read_params(r.cfg.params);
    if (m.layer_sizes() != r.cfg.resolved_layers())
      throw ConfigError("params file layer sizes differ from submodel.layers");
    return m;
  }
  return MlpSubmodel::random(r.cfg.resolved_layers(), r.cfg.submodel_seed);
}

Json data_manifest_extra(const Run& r) {
  return {{"system", r.cfg.system},
          {"seed", r.cfg.data_seed},
          {"burn_in", r.cfg.burn_in},
          {"truth_substeps", r.cfg.truth_substeps}};
}

int cmd_gen_data(const Options& opts) {
  const Run r = prepare("gen-data", opts);
  const Dataset d = build_dataset(r);
  write_dataset(r.out / "dataset.bin", d, data_manifest_extra(r));
  if (r.cfg.csv) write_dataset_csv(r.out / "dataset.csv", d);
  std::cout << "wrote " << d.size() << " samples (horizon " << d.horizon << ", h " << d.h << ") to "
            << (r.out / "dataset.bin").string() << "\n";
  return kOk;
}

Json history_json(const TrainReport& rep) {
  return {{"train_loss", rep.train_loss},
          {"val_loss", rep.val_loss},
          {"val_online_loss", rep.val_online_loss},
          {"skipped_batches", rep.skipped_per_epoch}};
}

int train_common(const std::string& command, const Options& opts, bool fine) {
  Run r = prepare(command, opts);
  if (fine && r.cfg.params.empty()) throw ConfigError("fine-tune needs io.params (offline-trained weights)");
  const Dataset data = obtain_dataset(r);
  HybridSystem sys(r.bed.core, initial_submodel(r));

  TrainConfig tc = r.cfg.train;
  if (fine) {
    tc.epochs = r.cfg.fine_tune_epochs;
    if (tc.mode == TrainMode::Offline) tc.mode = TrainMode::Online;
  }
  const Split split = split_dataset(data.size(), tc.validation_fraction);
  const auto& val = split.validation.empty() ? split.train : split.validation;
  const double core_loss = online_loss_bounded(sys.core_only(), tc.solver, data, val, tc.horizon);

  const TrainReport rep = fine ? fine_tune(sys, data, tc) : train(sys, data, tc);
  write_params(r.out / "params.bin", sys.submodel());

  Json doc = {{"command", command},
              {"system", r.cfg.system},
              {"mode", train_mode_name(tc.mode)},
              {"jacobian", method_name(tc.jacobian.method)},
              {"protocol", "default optimizer, batch and epoch settings unless overridden in the config"},
              {"seed", tc.seed},
              {"epochs", tc.epochs},
              {"history", history_json(rep)},
              {"skipped_batches", rep.skipped_batches},
              {"initial_val_online_loss", rep.initial_val_online_loss},
              {"final_val_online_loss", rep.val_online_loss.empty() ? rep.initial_val_online_loss
                                                                     : rep.val_online_loss.back()},
              {"core_val_online_loss", core_loss},
              {"params_file", "params.bin"},
              {"config", render_config(r.cfg)}};
  write_json(r.out / "report.json", doc);
  std::cout << command << ": final online validation loss " << doc["final_val_online_loss"].get<double>()
            << " (physical core " << core_loss << ")\n";
  return kOk;
}

int cmd_grad_check(const Options& opts) {
  const Run r = prepare("grad-check", opts);
  if (r.cfg.system != "l63") throw ConfigError("grad-check runs on the Lorenz 63 hybrid (system.name = l63)");
  GradCheckSpec spec;
  spec.hs = log_spaced(r.cfg.grad_h_max, r.cfg.grad_h_min, r.cfg.grad_points);
  spec.horizon = r.cfg.n;
  spec.horizon_time = r.cfg.grad_horizon_time;
  spec.anchors = r.cfg.grad_anchors;
  spec.seeds = r.cfg.grad_seeds;
  spec.seed = r.cfg.submodel_seed;
  spec.layers = r.cfg.resolved_layers();
  spec.solver = r.cfg.solver;
  spec.truth_substeps = r.cfg.truth_substeps;
  spec.methods = r.cfg.grad_methods;
  spec.system = r.cfg.l63;
  const GradCheckResult res = run_grad_check(spec);

  std::ostringstream csv;
  csv << std::setprecision(17) << "h,n,mode,epsilon,solver_epsilon\n";
  for (const auto& row : res.rows)
    csv << row.h << "," << row.n << "," << method_name(row.method) << "," << row.epsilon << "," << row.solver_epsilon
        << "\n";
  write_text(r.out / "grad_check.csv", csv.str());

  Json fits = Json::array();
  for (const auto& f : res.fits) {
    fits.push_back({{"mode", method_name(f.method)},
                    {"slope", f.loss.slope},
                    {"intercept", f.loss.intercept},
                    {"solver_slope", f.solver.slope},
                    {"solver_intercept", f.solver.intercept}});
    std::cout << method_name(f.method) << ": slope " << f.loss.slope << " (solver-gradient slope " << f.solver.slope
              << ")\n";
  }
  write_json(r.out / "grad_check.json", {{"scheme", scheme_name(spec.solver.scheme)},
                                         {"substeps", spec.solver.substeps},
                                         {"horizon", spec.horizon},
                                         {"horizon_time", spec.horizon_time},
                                         {"anchors", spec.anchors},
                                         {"seeds", spec.seeds},
                                         {"fits", fits}});
  return kOk;
}

struct Models {
  HybridSystem truth;
  HybridSystem core;
  std::optional<HybridSystem> hybrid;
};

Models models(const Run& r) {
  Models m{HybridSystem(r.bed.truth), HybridSystem(r.bed.core), std::nullopt};
  if (!r.cfg.params.empty()) m.hybrid = HybridSystem(r.bed.core, initial_submodel(r));
  return m;
}

StateVec attractor_state(const Run& r) {
  const HybridSystem truth(r.bed.truth);
  return rollout(truth_kind(r.cfg), truth, r.bed.initial_state(r.cfg.data_seed), std::max<std::size_t>(r.cfg.burn_in, 1),
                 r.cfg.h)
      .last();
}

Json lyapunov_json(const LyapunovResult& res) {
  return {{"exponents", std::vector<double>(res.exponents.data(), res.exponents.data() + res.exponents.size())},
          {"dimension", res.dimension},
          {"h", res.protocol.h},
          {"transient_steps", res.protocol.transient},
          {"qr_interval", res.protocol.qr_interval},
          {"total_steps", res.protocol.steps},
          {"retried", res.retried}};
}

void run_lyapunov(const Run& r, const Models& m) {
  LyapunovProtocol p;
  p.h = r.cfg.lyapunov_h;
  p.transient = r.cfg.lyapunov_transient;
  p.steps = r.cfg.lyapunov_steps;
  p.qr_interval = r.cfg.lyapunov_qr_interval;
  const StateVec z = attractor_state(r);
  Json doc = Json::object();
  auto one = [&](const std::string& name, const HybridSystem& sys, const StateVec& u0, const SolverKind& kind) {
    p.kind = kind;
    const LyapunovResult res = lyapunov_spectrum(sys, u0, p);
    doc[name] = lyapunov_json(res);
    std::cout << name << ": exponents " << res.exponents.transpose() << ", dimension " << res.dimension << "\n";
  };
  one("truth", m.truth, z, truth_kind(r.cfg));
  one("core", m.core, r.bed.observe(z), r.cfg.solver);
  if (m.hybrid) one("hybrid", *m.hybrid, r.bed.observe(z), r.cfg.solver);
  write_json(r.out / "lyapunov.json", doc);
}

void run_meg(const Run& r, const Models& m) {
  const auto refs = reference_trajectories(r.bed, truth_kind(r.cfg), r.bed.initial_state(r.cfg.data_seed),
                                           r.cfg.burn_in, r.cfg.meg_initials, r.cfg.meg_spacing, r.cfg.meg_horizon,
                                           r.cfg.h);
  std::ostringstream csv;
  csv << std::setprecision(17) << "model,lead,mean,stddev,scaled_std,raw_mse\n";
  Json doc = {{"initials", r.cfg.meg_initials}, {"horizon", r.cfg.meg_horizon}, {"h", r.cfg.h}};
  auto one = [&](const std::string& name, const HybridSystem& sys) {
    const MegCurve c = mean_error_growth({sys}, r.cfg.solver, refs, r.cfg.h);
    for (std::size_t i = 0; i < c.mean.size(); ++i)
      csv << name << "," << i + 1 << "," << c.mean[i] << "," << c.stddev[i] << "," << c.scaled_std[i] << ","
          << c.raw_mean[i] << "\n";
    doc[name] = {{"used", c.used},
                 {"excluded", c.excluded},
                 {"diverged", c.diverged},
                 {"final_meg", c.empty() ? 0.0 : c.mean.back()},
                 {"final_raw_mse", c.empty() ? 0.0 : c.raw_mean.back()}};
  };
  one("core", m.core);
  if (m.hybrid) one("hybrid", *m.hybrid);
  write_text(r.out / "meg.csv", csv.str());
  write_json(r.out / "meg.json", doc);
}

void run_pdf(const Run& r, const Models& m) {
  const StateVec z = attractor_state(r);
  const int comp = r.cfg.pdf_component;
  const auto truth = component_series(m.truth, truth_kind(r.cfg), z, r.cfg.pdf_transient, r.cfg.pdf_steps, r.cfg.h, comp);
  std::vector<std::pair<std::string, std::vector<double>>> series;
  series.emplace_back("core", component_series(m.core, r.cfg.solver, r.bed.observe(z), r.cfg.pdf_transient,
                                               r.cfg.pdf_steps, r.cfg.h, comp));
  if (m.hybrid)
    series.emplace_back("hybrid", component_series(*m.hybrid, r.cfg.solver, r.bed.observe(z), r.cfg.pdf_transient,
                                                   r.cfg.pdf_steps, r.cfg.h, comp));

  const auto [lo_it, hi_it] = std::minmax_element(truth.begin(), truth.end());
  const double pad = 0.1 * (*hi_it - *lo_it);
  const double lo = *lo_it - pad, hi = *hi_it + pad;
  std::vector<Histogram> hists{histogram(truth, r.cfg.pdf_bins, lo, hi)};
  for (const auto& s : series) hists.push_back(histogram(s.second, r.cfg.pdf_bins, lo, hi));

  std::ostringstream csv;
  csv << std::setprecision(17) << "bin_lo,bin_hi,truth";
  for (const auto& s : series) csv << "," << s.first;
  csv << "\n";
  for (std::size_t b = 0; b < r.cfg.pdf_bins; ++b) {
    const double a = lo + static_cast<double>(b) * hists[0].width();
    csv << a << "," << a + hists[0].width();
    for (const auto& hg : hists) csv << "," << hg.density(b);
    csv << "\n";
  }
  write_text(r.out / "histogram.csv", csv.str());

  Json doc = {{"component", comp}, {"steps", r.cfg.pdf_steps}, {"transient", r.cfg.pdf_transient}, {"h", r.cfg.h}};
  for (const auto& s : series) {
    const double ks = distribution_distance(s.second, truth);
    doc["ks_" + s.first] = ks;
    std::cout << "KS(" << s.first << ", truth) = " << ks << "\n";
  }
  write_json(r.out / "ks.json", doc);
}

int cmd_metric(const std::string& command, const Options& opts) {
  const Run r = prepare(command, opts);
  const Models m = models(r);
  if (command == "lyapunov" || command == "evaluate") run_lyapunov(r, m);
  if (command == "meg" || command == "evaluate") run_meg(r, m);
  if (command == "pdf" || command == "evaluate") run_pdf(r, m);
  return kOk;
}

using Handler = std::function<int(const Options&)>;

const std::map<std::string, Handler>& handlers() {
  static const std::map<std::string, Handler> h = {
      {"gen-data", cmd_gen_data},
      {"train", [](const Options& o) { return train_common("train", o, false); }},
      {"fine-tune", [](const Options& o) { return train_common("fine-tune", o, true); }},
      {"grad-check", cmd_grad_check},
      {"evaluate", [](const Options& o) { return cmd_metric("evaluate", o); }},
      {"lyapunov", [](const Options& o) { return cmd_metric("lyapunov", o); }},
      {"meg", [](const Options& o) { return cmd_metric("meg", o); }},
      {"pdf", [](const Options& o) { return cmd_metric("pdf", o); }},
  };
  return h;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"gen-data", "train",    "fine-tune", "grad-check",
                                                 "evaluate", "lyapunov", "meg",       "pdf"};
  return names;
}

int run(const std::string& command, const Options& opts) {
  try {
    return handlers().at(command)(opts);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const ContractViolation& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kConfig;
  } catch (const SchemaError& e) {
    std::cerr << "schema mismatch: " << e.what() << "\n";
    return kSchema;
  } catch (const TrainingAborted& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return kNumerical;
  } catch (const BlowUpError& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return kNumerical;
  } catch (const NonFiniteError& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return kNumerical;
  } catch (const DegenerateEnsembleError& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return kNumerical;
  } catch (const TapeLimitError& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
}

}  // namespace ega::cli
