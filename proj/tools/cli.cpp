#include "cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include "sbell/agents.hpp"
#include "sbell/classifier.hpp"
#include "sbell/config.hpp"
#include "sbell/degeneracy.hpp"
#include "sbell/error.hpp"
#include "sbell/runner.hpp"

namespace sbell::cli {
namespace {

std::string fmt(double x, int precision = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, x);
  return buf;
}

std::vector<double> parse_doubles(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError(std::string("bad number in ") + what + ": '" + item + "'");
    }
  }
  return out;
}

void print_summary(std::ostream& out, const ExperimentSummary& s) {
  out << "trials: " << s.n_attempted << " attempted, " << s.n_complete << " complete, " << s.n_failed << " failed\n";
  out << "E(A,B) = " << fmt(s.table.e_ab) << "   E(A,B') = " << fmt(s.table.e_abp) << "   E(A',B) = "
      << fmt(s.table.e_apb) << "   E(A',B') = " << fmt(s.table.e_apbp) << "\n";
  out << "S = " << fmt(s.s) << "   |S| = " << fmt(std::abs(s.s));
  if (s.ci) {
    out << "   " << fmt(100 * s.analysis.ci_level, 0) << "% CI [" << fmt(s.ci->low) << ", " << fmt(s.ci->high) << "]";
  }
  out << "\n";
  const auto& d = s.signaling.deltas;
  out << "signaling: delta_total = " << fmt(s.signaling.delta_total) << " (A " << fmt(d[0]) << ", A' " << fmt(d[1])
      << ", B " << fmt(d[2]) << ", B' " << fmt(d[3]) << ")   s_odd = " << fmt(s.signaling.s_odd)
      << "   contextual beyond signaling (s_odd > 2 + delta): " << (s.signaling.contextual_cbd ? "yes" : "no") << "\n";
  const double a = std::abs(s.s);
  out << "bounds: classical |S| <= 2: " << (a > kClassicalBound ? "VIOLATED" : "respected")
      << "   quantum |S| <= 2.8284: " << (a > kQuantumBound ? "EXCEEDED" : "respected")
      << "   algebraic |S| <= 4\n";
}

void write_outputs(const std::filesystem::path& dir, const ExperimentSummary& s) {
  std::filesystem::create_directories(dir);
  auto write = [](const std::filesystem::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!(f << text)) throw Error("cannot write " + p.string());
  };
  write(dir / "summary.json", summary_text(s));
  write(dir / "series.tsv", series_text(s));
}

QuantumAngles parse_angles(const std::string& text) {
  if (text == "tsirelson") return QuantumAngles::tsirelson();
  const auto v = parse_doubles(text, "--angles");
  if (v.size() != 4) throw ConfigError("--angles expects 'tsirelson' or four radians a,a',b,b'");
  return {v[0], v[1], v[2], v[3]};
}

StrategyDistribution parse_strategy(const std::string& text, std::uint64_t seed) {
  if (text == "all-plus") return StrategyDistribution::point(0);
  if (text == "all-minus") return StrategyDistribution::point(15);
  if (text == "uniform") return StrategyDistribution::uniform();
  if (text == "random") {
    Rng rng(derive_seed(seed, 0x5eed));
    return StrategyDistribution::random(rng);
  }
  const auto v = parse_doubles(text, "--strategy");
  try {
    if (v.size() == 1 && v[0] >= 0 && v[0] < 16 && v[0] == std::floor(v[0]))
      return StrategyDistribution::point(static_cast<unsigned>(v[0]));
    if (v.size() == kLocalStrategyCount) {
      std::array<double, kLocalStrategyCount> w;
      std::copy(v.begin(), v.end(), w.begin());
      return StrategyDistribution(w);
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("--strategy: ") + e.what());
  }
  throw ConfigError("--strategy expects all-plus, all-minus, uniform, random, an index 0-15, or 16 weights");
}

FlipRule parse_flip(const std::string& text) {
  if (text == "b") return {true, false};
  if (text == "bprime") return {false, true};
  if (text == "both") return {true, true};
  throw ConfigError("--flip expects b, bprime or both");
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string kind;
  std::size_t trials = 1000;
  std::uint64_t seed = 0;
  std::string angles = "tsirelson";
  std::string strategy = "all-plus";
  std::string flip = "bprime";
  std::string out;
  std::string data_dir;
  std::string label;
  std::size_t resamples = 1000;
  std::size_t concurrency = 1;
  bool resume = false;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  std::unique_ptr<AgentSource> agents;
  if (a.kind == "lhv") {
    agents = lhv_agent(parse_strategy(a.strategy, a.seed));
  } else if (a.kind == "quantum") {
    agents = quantum_agent(parse_angles(a.angles));
  } else if (a.kind == "prbox") {
    agents = pr_box_agent();
  } else if (a.kind == "signaling") {
    agents = signaling_agent(parse_flip(a.flip));
  } else {
    throw ConfigError("unknown agent kind '" + a.kind + "' (expected lhv, quantum, prbox, signaling)");
  }

  ExperimentConfig config;
  config.n_trials = a.trials;
  config.seed = a.seed;
  config.bootstrap_resamples = a.resamples;
  config.concurrency = a.concurrency;
  config.label = a.label.empty() ? a.kind : a.label;
  if (!a.data_dir.empty()) config.pools = StimulusPools::load(a.data_dir);
  const ClassifierBackend& classifier = KeywordClassifier::bundled();

  ExperimentSummary summary;
  if (!a.out.empty()) {
    config.output_dir = a.out;
    RunOptions opts;
    opts.resume = a.resume;
    summary = *run_experiment(config, *agents, classifier, opts).summary;
  } else {
    summary = summarize(run_trials(config, *agents, classifier), config.analysis(), config.label);
  }
  out << "simulate " << a.kind << " (seed " << a.seed << ")\n";
  print_summary(out, summary);
  if (a.kind == "quantum") out << "analytic S at these angles = " << fmt(quantum_s(parse_angles(a.angles)), 6) << "\n";
  if (!a.out.empty()) out << "wrote " << (std::filesystem::path(a.out) / "records.jsonl").string() << ", summary.json, series.tsv\n";
  return kSuccess;
}

struct RunArgs {
  std::string config;
  std::optional<std::size_t> trials;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string classifier;
  std::string pool;
  std::string label;
  std::optional<std::size_t> concurrency;
  bool resume = false;
};

int cmd_run(const RunArgs& a, std::ostream& out) {
  RunSettings s = load_run_settings(a.config);
  if (a.trials) s.experiment.n_trials = *a.trials;
  if (a.seed) s.experiment.seed = *a.seed;
  if (!a.out.empty()) s.experiment.output_dir = a.out;
  if (!a.classifier.empty()) s.classifier.backend = a.classifier;
  if (!a.pool.empty()) s.pool = a.pool;
  if (!a.label.empty()) s.experiment.label = a.label;
  if (a.concurrency) s.experiment.concurrency = *a.concurrency;
  if (s.experiment.output_dir.empty()) throw ConfigError("no output directory (set \"out\" in the config or pass --out)");
  s.experiment.validate();

  auto transport = std::make_shared<HttpChatTransport>(s.transport_retry);
  // Both builders resolve credentials, so a missing variable fails here before any trial runs.
  auto agents = build_remote_agents(s, transport);
  auto classifier = build_classifier(s, transport);

  RunOptions opts;
  opts.resume = a.resume;
  const RunResult result = run_experiment(s.experiment, *agents, *classifier, opts);
  print_summary(out, *result.summary);
  out << "wrote " << (s.experiment.output_dir / "records.jsonl").string() << ", summary.json, series.tsv\n";
  return kSuccess;
}

struct AnalyzeArgs {
  std::string records;
  std::string classifier;
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
};

int cmd_analyze(const AnalyzeArgs& a, std::ostream& out) {
  auto file = read_record_file(a.records);
  if (!file) throw DataError("record file has no header", a.records, 0);
  std::vector<TrialRecord> records = std::move(file->trials);

  if (!a.classifier.empty()) {
    std::unique_ptr<ClassifierBackend> backend;
    if (a.classifier == "keyword") {
      backend = std::make_unique<KeywordClassifier>(KeywordClassifier::bundled());
    } else if (a.classifier == "remote") {
      if (a.config.empty()) throw ConfigError("--classifier remote needs --config for the provider settings");
      RunSettings s = load_run_settings(a.config);
      s.classifier.backend = "remote";
      auto transport = std::make_shared<HttpChatTransport>(s.transport_retry);
      backend = build_classifier(s, transport);
    } else {
      throw ConfigError("--classifier expects keyword or remote");
    }
    records = reclassify(std::move(records), *backend);
  }
  AnalysisParams params = file->header.analysis;
  if (a.seed) params.seed = *a.seed;
  const ExperimentSummary summary = summarize(records, params, file->header.label);
  print_summary(out, summary);
  if (!a.out.empty()) {
    write_outputs(a.out, summary);
    out << "wrote " << (std::filesystem::path(a.out) / "summary.json").string() << ", series.tsv\n";
  }
  return kSuccess;
}

struct DegeneracyArgs {
  double c_concept = 5.0;
  double c_relationship = 1.0;
  int n_min = 1;
  int n_max = 30;
  std::string pe = "0,0.01,0.02,0.05,0.1";
  bool factorial = false;
  std::string out = "degeneracy.tsv";
};

int cmd_degeneracy(const DegeneracyArgs& a, std::ostream& out) {
  DegeneracyModel m;
  m.bits_per_concept = a.c_concept;
  m.bits_per_relationship = a.c_relationship;
  m.include_factorial = a.factorial;
  SweepTable table;
  try {
    table = sweep_curves(m, a.n_min, a.n_max, parse_doubles(a.pe, "--pe"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  std::ofstream f(a.out, std::ios::binary | std::ios::trunc);
  if (!(f << sweep_text(table))) throw Error("cannot write " + a.out);
  out << "degeneracy sweep: N = " << a.n_min << ".." << a.n_max << ", K = " << table.rows.front().k_bits << ".."
      << table.rows.back().k_bits << " bits, " << table.error_values.size() << " error rates"
      << (a.factorial ? ", with 1/N! prefactor" : "") << "\n";
  out << "wrote " << a.out << "\n";
  return kSuccess;
}

int cmd_report(const std::vector<std::string>& paths, const std::string& out_path, std::ostream& out) {
  std::ostringstream table;
  char line[256];
  std::snprintf(line, sizeof line, "%-12s %6s %8s %8s %22s %8s\n", "Experiment", "N", "S", "|S|", "CI", "Delta");
  table << line;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    ExperimentSummary s;
    try {
      s = summary_from_json(nlohmann::json::parse(read_text_file(paths[i])));
    } catch (const DataError&) {
      throw;
    } catch (const std::exception& e) {
      throw DataError(e.what(), paths[i], 0);
    }
    const std::string name = s.label.empty() ? std::to_string(i + 1) : s.label;
    const std::string ci = s.ci ? "[" + fmt(s.ci->low, 3) + ", " + fmt(s.ci->high, 3) + "]" : "-";
    std::snprintf(line, sizeof line, "%-12s %6zu %8s %8s %22s %8s\n", name.c_str(), s.n_complete, fmt(s.s, 3).c_str(),
                  fmt(std::abs(s.s), 3).c_str(), ci.c_str(), fmt(s.signaling.delta_total, 3).c_str());
    table << line;
  }
  out << table.str();
  if (!out_path.empty()) {
    std::ofstream f(out_path, std::ios::binary | std::ios::trunc);
    if (!(f << table.str())) throw Error("cannot write " + out_path);
  }
  return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Semantic CHSH Bell test for interpretive agents", "sbell"};
  app.require_subcommand(1, 1);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Run an experiment against live model endpoints");
  run->add_option("--config", run_args.config, "JSON run configuration")->required();
  run->add_option("--trials", run_args.trials, "Number of trials");
  run->add_option("--seed", run_args.seed, "Random seed");
  run->add_option("--out", run_args.out, "Output directory");
  run->add_option("--classifier", run_args.classifier, "keyword or remote")->check(CLI::IsMember({"keyword", "remote"}));
  run->add_option("--pool", run_args.pool, "Model pool name from the config");
  run->add_option("--label", run_args.label, "Experiment label for reports");
  run->add_option("--concurrency", run_args.concurrency, "Trials in flight");
  run->add_flag("--resume", run_args.resume, "Continue an interrupted run in --out");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run the pipeline with a simulated agent");
  simulate->add_option("kind", sim.kind, "lhv, quantum, prbox or signaling")->required();
  simulate->add_option("--trials", sim.trials, "Number of trials");
  simulate->add_option("--seed", sim.seed, "Random seed");
  simulate->add_option("--angles", sim.angles, "quantum: 'tsirelson' or a,a',b,b' in radians");
  simulate->add_option("--strategy", sim.strategy, "lhv: all-plus, all-minus, uniform, random, index, or 16 weights");
  simulate->add_option("--flip", sim.flip, "signaling: which Bob setting reacts (b, bprime, both)");
  simulate->add_option("--out", sim.out, "Output directory (records, summary, series)");
  simulate->add_option("--data-dir", sim.data_dir, "Directory overriding the bundled stimulus files");
  simulate->add_option("--label", sim.label, "Experiment label for reports");
  simulate->add_option("--bootstrap-resamples", sim.resamples, "Bootstrap resamples for the CI");
  simulate->add_option("--concurrency", sim.concurrency, "Trials in flight");
  simulate->add_flag("--resume", sim.resume, "Continue an interrupted run in --out");

  AnalyzeArgs an;
  auto* analyze = app.add_subcommand("analyze", "Recompute the summary from a record file");
  analyze->add_option("records", an.records, "records.jsonl")->required();
  analyze->add_option("--classifier", an.classifier, "Reclassify with keyword or remote");
  analyze->add_option("--config", an.config, "Config with provider settings (remote classifier)");
  analyze->add_option("--out", an.out, "Write summary.json and series.tsv here");
  analyze->add_option("--seed", an.seed, "Override the bootstrap seed");

  DegeneracyArgs dg;
  std::uint64_t unused_seed = 0;
  auto* degeneracy = app.add_subcommand("degeneracy", "Emit the perfect-interpretation probability sweep");
  degeneracy->add_option("--c-concept", dg.c_concept, "Bits per concept");
  degeneracy->add_option("--c-relationship", dg.c_relationship, "Bits per pairwise relationship");
  degeneracy->add_option("--n-min", dg.n_min, "Smallest number of concepts");
  degeneracy->add_option("--n-max", dg.n_max, "Largest number of concepts");
  degeneracy->add_option("--pe", dg.pe, "Comma-separated error-per-bit values");
  degeneracy->add_flag("--factorial", dg.factorial, "Apply the 1/N! prefactor");
  degeneracy->add_option("--out", dg.out, "Output table (tab-separated)");
  degeneracy->add_option("--seed", unused_seed, "Accepted for uniformity; the sweep is deterministic");

  std::vector<std::string> report_paths;
  std::string report_out;
  auto* report = app.add_subcommand("report", "Tabulate several summary files");
  report->add_option("summaries", report_paths, "summary.json files")->required();
  report->add_option("--out", report_out, "Also write the table to this file");
  report->add_option("--seed", unused_seed, "Accepted for uniformity; unused");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }

  try {
    if (run->parsed()) return cmd_run(run_args, out);
    if (simulate->parsed()) return cmd_simulate(sim, out);
    if (analyze->parsed()) return cmd_analyze(an, out);
    if (degeneracy->parsed()) return cmd_degeneracy(dg, out);
    if (report->parsed()) return cmd_report(report_paths, report_out, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const DataError& e) {
    err << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeFailure;
  }
  return kConfigError;
}

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace sbell::cli
