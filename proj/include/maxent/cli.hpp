#pragma once

// Command-line surface: one multiplexed binary with the check, estimate,
// evaluate, and build subcommands. Exit codes: 0 success, 1 incompatible
// files (check only), 2 input or parse error. Findings go to the diagnostic
// stream, summaries and tables to the output stream, results to files written
// atomically (temp + rename).

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "maxent/checker.hpp"
#include "maxent/errors.hpp"
#include "maxent/estimator.hpp"
#include "maxent/evaluator.hpp"
#include "maxent/features.hpp"
#include "maxent/formats.hpp"
#include "maxent/model.hpp"

namespace maxent::cli {

struct InvocationResult {
  int exit_code = 0;
  std::string stdout_text;
  std::string stderr_text;
};

namespace detail {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::IoError, "cannot open '" + path + "' for reading");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error(ErrorCode::IoError, "cannot open '" + tmp + "' for writing");
    }
    out << content;
    out.flush();
    if (!out) {
      throw Error(ErrorCode::IoError, "failed writing '" + tmp + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::IoError, "cannot move '" + tmp + "' to '" + path + "'");
  }
}

inline void print_findings(const Report& report, std::ostream& err) {
  for (const Finding& f : report.errors) {
    err << "ERROR " << to_string(f.code) << ' ' << f.location << ' ' << f.message << '\n';
  }
  for (const Finding& f : report.warnings) {
    err << "WARNING " << to_string(f.code) << ' ' << f.location << ' ' << f.message << '\n';
  }
}

inline void print_table_header(std::ostream& out, bool entropy) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%5s  %-13s %-13s %-13s %-13s", "iter", "d(m[g],a)",
                "|Update|", "Max(alpha)", "L(C|m)");
  out << buf;
  if (entropy) {
    std::snprintf(buf, sizeof(buf), " %-13s", "H(m|f)");
    out << buf;
  }
  out << '\n';
}

inline void print_table_row(std::ostream& out, std::size_t iter, const Diagnostics& d) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%5zu  %-13.6g %-13.6g %-13.6g %-13.6g", iter, d.distance,
                d.update_norm, d.max_alpha, d.codelength);
  out << buf;
  if (d.entropy) {
    std::snprintf(buf, sizeof(buf), " %-13.6g", *d.entropy);
    out << buf;
  }
  out << '\n';
}

struct CheckOptions {
  bool verbose = false;
  std::string params_path;
  std::string events_path;
  std::string expressions_path;
};

inline int run_check(const CheckOptions& opt, std::ostream& out, std::ostream& err) {
  std::optional<ParametersFile> params;
  std::optional<EventsFile> events;
  std::optional<ExpressionsFile> expressions;
  try {
    if (!opt.params_path.empty()) {
      params = parse_parameters(read_file(opt.params_path), ParseStrictness::Lenient);
    }
    if (!opt.events_path.empty()) {
      events = parse_events(read_file(opt.events_path), ParseStrictness::Lenient);
    }
    if (!opt.expressions_path.empty()) {
      expressions = parse_expressions(read_file(opt.expressions_path), ParseStrictness::Lenient);
    }
  } catch (const Error& e) {
    err << "ERROR " << e.what() << '\n';
    return 2;
  }
  const Report report = verify(params ? &*params : nullptr, events ? &*events : nullptr,
                               expressions ? &*expressions : nullptr, opt.verbose);
  print_findings(report, err);
  if (params) {
    out << "parameters: alphabet " << params->alphabet_size << ", "
        << params->marginal.size() + params->conditional.size() << " parameter(s)\n";
  }
  if (events) {
    out << "events: " << events->marginal.size() << " marginal, " << events->conditional.size()
        << " conditional event(s)\n";
  }
  if (expressions) {
    out << "expressions: " << expressions->expressions.size() << " expression(s)\n";
  }
  out << report.errors.size() << " error(s), " << report.warnings.size() << " warning(s)\n";
  out << (report.compatible() ? "compatible\n" : "incompatible\n");
  return report.compatible() ? 0 : 1;
}

struct EstimateOptions {
  bool monotonic = false;
  bool entropy = false;
  std::uint64_t threads = 1;
  std::string model_in;
  std::string events_path;
  std::uint64_t iterations = 0;
  std::string model_out;
};

inline int run_estimate(const EstimateOptions& opt, std::ostream& out, std::ostream& err) {
  try {
    ParametersFile params = parse_parameters(read_file(opt.model_in), ParseStrictness::Lenient);
    const EventsFile events = parse_events(read_file(opt.events_path), ParseStrictness::Lenient);
    const Report report = verify(&params, &events, nullptr, false);
    print_findings(report, err);
    if (!report.compatible()) {
      err << "ERROR input files are incompatible; nothing estimated\n";
      return 2;
    }

    Model model(params, events);
    const EmpiricalSummary summary = summarize_empirical(events);
    TrainConfig config;
    config.iterations = opt.iterations;
    config.monotonic = opt.monotonic;
    config.compute_entropy = opt.entropy;
    const std::vector<Diagnostics> history =
        train(model, events, summary, targets_of(params), config);

    print_table_header(out, opt.entropy);
    std::size_t iter = 1;
    for (const Diagnostics& d : history) {
      print_table_row(out, iter++, d);
      if (d.clamped_updates > 0) {
        err << "WARNING iteration " << iter - 1 << ": " << d.clamped_updates
            << " update(s) clamped to |ln alpha| <= 30; the targets look inconsistent\n";
      }
      if (d.nonconverged_updates > 0) {
        err << "WARNING iteration " << iter - 1 << ": " << d.nonconverged_updates
            << " root solve(s) stopped at the step budget\n";
      }
    }
    if (opt.monotonic && history.size() < opt.iterations) {
      out << "stopped after " << history.size()
          << " iteration(s): the codelength stopped decreasing\n";
    }

    for (Parameter& p : params.marginal) {
      p.alpha = model.alpha(p.index);
    }
    for (Parameter& p : params.conditional) {
      p.alpha = model.alpha(p.index);
    }
    write_file_atomic(opt.model_out, to_text(params));
    return 0;
  } catch (const Error& e) {
    err << "ERROR " << e.what() << '\n';
    return 2;
  }
}

struct EvaluateOptions {
  std::string model_path;
  std::string events_path;
  std::string expressions_path;
  std::string results_path;
};

inline int run_evaluate(const EvaluateOptions& opt, std::ostream& out, std::ostream& err) {
  try {
    const ParametersFile params =
        parse_parameters(read_file(opt.model_path), ParseStrictness::Lenient);
    const EventsFile events = parse_events(read_file(opt.events_path), ParseStrictness::Lenient);
    const ExpressionsFile expressions =
        parse_expressions(read_file(opt.expressions_path), ParseStrictness::Lenient);
    const Report report = verify(&params, &events, &expressions, false);
    print_findings(report, err);
    if (!report.compatible()) {
      err << "ERROR input files are incompatible; nothing evaluated\n";
      return 2;
    }
    const Model model(params, events);
    const std::vector<double> values = evaluate(model, expressions);
    std::string text;
    for (double v : values) {
      text += maxent::detail::format_f64(v);
      text += '\n';
    }
    write_file_atomic(opt.results_path, text);
    out << "evaluated " << values.size() << " expression(s) to " << opt.results_path << '\n';
    return 0;
  } catch (const Error& e) {
    err << "ERROR " << e.what() << '\n';
    return 2;
  }
}

struct BuildOptions {
  std::string corpus_path;
  std::string out_prefix;
  std::uint64_t order = 1;
  std::string mode = "overlapping";
  std::uint64_t c_min = 0;
  std::vector<std::uint64_t> triggers;
};

inline int run_build(const BuildOptions& opt, std::ostream& out, std::ostream& err) {
  try {
    const Corpus corpus = parse_corpus(read_file(opt.corpus_path));

    FeatureSpec spec;
    spec.order = opt.order;
    spec.c_min = opt.c_min;
    spec.triggers = opt.triggers;
    if (opt.mode == "basic") {
      spec.mode = MarkovMode::Basic;
    } else if (opt.mode == "overlapping") {
      spec.mode = MarkovMode::Overlapping;
    } else if (opt.mode == "complemented") {
      spec.mode = MarkovMode::Complemented;
    } else if (opt.mode == "heterogeneous") {
      spec.mode = MarkovMode::Heterogeneous;
    } else {
      err << "ERROR unknown mode '" << opt.mode << "'\n";
      return 2;
    }

    const FeatureSet features = extract_features(corpus, spec);
    if (features.features.empty()) {
      err << "ERROR no features survive the threshold c_min=" << spec.c_min << '\n';
      return 2;
    }
    const ContextTable table = intern_contexts(corpus, spec);
    const EventsFile events = emit_events(corpus, spec, table, features);
    const ParametersFile params = emit_parameters(features, events, corpus.alphabet_size);

    write_file_atomic(opt.out_prefix + ".params", to_text(params));
    write_file_atomic(opt.out_prefix + ".events", to_text(events));

    out << "corpus: " << corpus.tokens.size() << " token(s), alphabet " << corpus.alphabet_size
        << '\n';
    out << "features: " << features.features.size() << " (" << params.marginal.size()
        << " marginal, " << params.conditional.size() << " conditional)\n";
    out << "contexts: " << table.size() << '\n';
    out << "events: " << events.marginal.size() << " marginal, " << events.conditional.size()
        << " conditional\n";
    out << "wrote " << opt.out_prefix << ".params and " << opt.out_prefix << ".events\n";
    return 0;
  } catch (const Error& e) {
    err << "ERROR " << e.what() << '\n';
    return 2;
  }
}

}  // namespace detail

// Parses and runs one invocation; arguments exclude the program name.
inline int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"maxent - conditional maximum entropy modeling toolkit"};
  app.require_subcommand(1);

  detail::CheckOptions check_opt;
  CLI::App* check = app.add_subcommand(
      "check", "Verify parameters/events/expressions files for mutual compatibility");
  check->alias("me.checker");
  check->add_flag("-v,--verbose", check_opt.verbose, "More detailed messages");
  check->add_option("-p,--parameters", check_opt.params_path, "Parameters file");
  check->add_option("-e,--events", check_opt.events_path, "Events file");
  check->add_option("-x,--expressions", check_opt.expressions_path, "Expressions file");

  detail::EstimateOptions est_opt;
  CLI::App* estimate =
      app.add_subcommand("estimate", "Improved iterative scaling over an events file");
  estimate->alias("me.estimate");
  estimate->add_flag("-m,--monotonic", est_opt.monotonic,
                     "Stop as soon as the codelength increases");
  estimate->add_flag("--entropy", est_opt.entropy, "Also report H(m|f) each iteration");
  estimate->add_option("--threads", est_opt.threads,
                       "Worker cap; results are identical for any value");
  estimate->add_option("model.in", est_opt.model_in, "Input parameters file")->required();
  estimate->add_option("events", est_opt.events_path, "Events file")->required();
  estimate->add_option("n", est_opt.iterations, "Number of iterations")->required();
  estimate->add_option("model.out", est_opt.model_out, "Output parameters file")->required();

  detail::EvaluateOptions eval_opt;
  CLI::App* evaluate =
      app.add_subcommand("evaluate", "Evaluate probability expressions in nats");
  evaluate->alias("me.evaluate");
  evaluate->add_option("model", eval_opt.model_path, "Parameters file")->required();
  evaluate->add_option("events", eval_opt.events_path, "Events file")->required();
  evaluate->add_option("expressions", eval_opt.expressions_path, "Expressions file")->required();
  evaluate->add_option("results", eval_opt.results_path, "Results file")->required();

  detail::BuildOptions build_opt;
  CLI::App* build = app.add_subcommand(
      "build", "Extract Markov/trigger features from a corpus and emit model files");
  build->add_option("corpus", build_opt.corpus_path, "Corpus file: 'alphabet <k>' then tokens")
      ->required();
  build->add_option("prefix", build_opt.out_prefix, "Output prefix for .params/.events")
      ->required();
  build->add_option("--order", build_opt.order, "Markov order n");
  build->add_option("--mode", build_opt.mode,
                    "basic | overlapping | complemented | heterogeneous");
  build->add_option("--c-min", build_opt.c_min, "Keep features with count > c_min");
  build->add_option("--trigger", build_opt.triggers, "Trigger word (repeatable)");

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("maxent");
  for (const std::string& a : args) {
    argv.push_back(a.c_str());
  }
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    err << app.help();
    return 2;
  }

  if (check->parsed()) {
    if (check_opt.params_path.empty() && check_opt.events_path.empty() &&
        check_opt.expressions_path.empty()) {
      err << "ERROR no input files; supply at least one of -p, -e, -x\n";
      err << check->help();
      return 2;
    }
    return detail::run_check(check_opt, out, err);
  }
  if (estimate->parsed()) {
    return detail::run_estimate(est_opt, out, err);
  }
  if (evaluate->parsed()) {
    return detail::run_evaluate(eval_opt, out, err);
  }
  if (build->parsed()) {
    return detail::run_build(build_opt, out, err);
  }
  err << app.help();
  return 2;
}

// In-process invocation with captured streams; used by the test suites.
inline InvocationResult run(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  InvocationResult result;
  result.exit_code = dispatch(args, out, err);
  result.stdout_text = out.str();
  result.stderr_text = err.str();
  return result;
}

}  // namespace maxent::cli
