// intentgate command line: artifact building, offline evaluation and the HTTP service.

#include "intentgate/benchmark.hpp"
#include "intentgate/config.hpp"
#include "intentgate/error.hpp"
#include "intentgate/evaluation.hpp"
#include "intentgate/finetune.hpp"
#include "intentgate/io.hpp"
#include "intentgate/service.hpp"
#include "intentgate/synthetic.hpp"
#include "intentgate/wire.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

namespace fs = std::filesystem;
using namespace intentgate;

namespace {

// Flags shared by every subcommand that builds a pipeline or talks to a backend. Unset flags
// fall back to the config file, then to built-in defaults.
struct PipelineFlags {
  std::optional<std::string> embed_backend, generate_backend, route, score, on_failure, oos_token;
  std::optional<std::string> catalog, classifier, dictionary, prompt_template, audit_log, host;
  std::optional<double> timeout_s, temperature;
  std::optional<int> concurrency, max_tokens, port;
  std::optional<std::size_t> k;

  void add_backend_flags(CLI::App* app) {
    app->add_option("--embed-backend", embed_backend, "mock | mock:<dim> | http://host:port");
    app->add_option("--generate-backend", generate_backend, "mock:top1 | mock:oos | mock:text=<s> | mock:oracle | URL");
    app->add_option("--timeout", timeout_s, "Backend timeout in seconds");
    app->add_option("--concurrency", concurrency, "Max in-flight generate calls");
    app->add_option("--max-tokens", max_tokens, "Generation budget");
    app->add_option("--temperature", temperature, "Generation temperature");
  }
  void add_pipeline_flags(CLI::App* app) {
    add_backend_flags(app);
    app->add_option("--catalog", catalog, "Intent catalog JSON");
    app->add_option("--classifier", classifier, "Classifier model JSON");
    app->add_option("--dictionary", dictionary, "NNK dictionary JSON");
    app->add_option("--template", prompt_template, "Gate prompt template file");
    app->add_option("--route", route, "low | moderate | high | full | classifier-only | tau=<f>");
    app->add_option("-k,--k", k, "Candidates passed to the gate");
    app->add_option("--score", score, "nnk | entropy | energy");
    app->add_option("--on-backend-failure", on_failure, "fail | degrade");
    app->add_option("--oos-token", oos_token, "Out-of-scope label");
  }
  void add_service_flags(CLI::App* app) {
    app->add_option("--host", host, "Bind address");
    app->add_option("--port", port, "Bind port (0 = any)");
    app->add_option("--audit-log", audit_log, "Append classify responses to this JSONL file");
  }
};

std::string config_path;
PipelineFlags flags;

PipelineConfig resolve_config() {
  PipelineConfig c;
  if (!config_path.empty()) {
    c = PipelineConfig::from_file(ConfigFile::load(config_path), fs::path(config_path).parent_path());
  }
  if (flags.embed_backend) c.embed_backend = *flags.embed_backend;
  if (flags.generate_backend) c.generate_backend = *flags.generate_backend;
  if (flags.timeout_s) c.timeout = std::chrono::milliseconds(static_cast<long long>(*flags.timeout_s * 1000.0));
  if (flags.concurrency) c.concurrency = *flags.concurrency;
  if (flags.max_tokens) c.max_tokens = *flags.max_tokens;
  if (flags.temperature) c.temperature = *flags.temperature;
  if (flags.route) c.strategy = *flags.route;
  if (flags.k) c.k = *flags.k;
  if (flags.score) c.score_method = *flags.score;
  if (flags.on_failure) c.on_backend_failure = *flags.on_failure;
  if (flags.oos_token) c.oos_token = *flags.oos_token;
  if (flags.catalog) c.catalog_path = *flags.catalog;
  if (flags.classifier) c.classifier_path = *flags.classifier;
  if (flags.dictionary) c.dictionary_path = *flags.dictionary;
  if (flags.prompt_template) c.template_path = *flags.prompt_template;
  if (flags.host) c.host = *flags.host;
  if (flags.port) c.port = *flags.port;
  if (flags.audit_log) c.audit_log = *flags.audit_log;
  c.validate();
  return c;
}

// JSONL dataset, or a HINT3 CSV when the path ends in .csv.
LabeledDataset load_any_dataset(const fs::path& path, const std::string& oos_token) {
  if (path.extension() == ".csv") return load_hint3(path, kHint3OosSentinel, oos_token);
  return io::load_dataset(path);
}

std::string catalog_oos(const PipelineConfig& c) {
  if (!c.oos_token.empty()) return c.oos_token;
  if (!c.catalog_path.empty()) return io::load_catalog(c.catalog_path).oos_token;
  return IntentCatalog{}.oos_token;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    part = trim(part);
    if (part.empty()) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(part, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != part.size()) throw InvalidArgument("not a number: '" + part + "'");
    out.push_back(v);
  }
  return out;
}

std::vector<std::string> split_names(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    part = trim(part);
    if (!part.empty()) out.push_back(part);
  }
  return out;
}

void wait_for_signal() {
  static std::atomic<bool> stop{false};
  std::signal(SIGINT, [](int) { stop = true; });
  std::signal(SIGTERM, [](int) { stop = true; });
  while (!stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("intentgate"));

  CLI::App app{"Uncertainty-gated intent detection: classifier, escalation gate, evaluation and service"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may also follow the subcommand
  std::string log_level = "info";
  app.add_option("--config", config_path, "TOML-style config file")->check(CLI::ExistingFile);
  app.add_option("--log-level", log_level, "trace | debug | info | warn | error | off");

  // embed
  auto* embed = app.add_subcommand("embed", "Attach normalized embeddings to a dataset");
  std::string embed_in, embed_out;
  embed->add_option("--data", embed_in, "Dataset (.jsonl or HINT3 .csv)")->required();
  embed->add_option("--out", embed_out, "Output JSONL")->required();
  flags.add_backend_flags(embed);
  embed->add_option("--oos-token", flags.oos_token, "Label for HINT3 out-of-scope rows");

  // train
  auto* train = app.add_subcommand("train", "Train the focal-loss softmax classifier");
  std::string train_data, train_out, alpha_spec = "inverse";
  TrainingConfig tcfg;
  train->add_option("--data", train_data, "Embedded in-scope training JSONL")->required();
  train->add_option("--catalog", flags.catalog, "Intent catalog JSON");
  train->add_option("--out", train_out, "Classifier JSON")->required();
  train->add_option("--gamma", tcfg.gamma, "Focusing parameter")->capture_default_str();
  train->add_option("--alpha", alpha_spec, "inverse | <scalar> | comma list per class")->capture_default_str();
  train->add_option("--lr", tcfg.learning_rate, "Learning rate")->capture_default_str();
  train->add_option("--epochs", tcfg.epochs, "Full-batch epochs")->capture_default_str();
  train->add_option("--seed", tcfg.seed, "Init seed")->capture_default_str();

  // fit-scorer
  auto* fit = app.add_subcommand("fit-scorer", "Learn the NNK-Means dictionary");
  std::string fit_data, fit_out;
  NnkFitConfig fcfg;
  std::optional<std::size_t> fit_atoms;
  fit->add_option("--data", fit_data, "Embedded training JSONL")->required();
  fit->add_option("--out", fit_out, "Dictionary JSON")->required();
  fit->add_option("--atoms", fit_atoms, "Dictionary size M (default: min(|train|, 20 per intent))");
  fit->add_option("--neighbors", fcfg.neighbors, "Atoms per code K")->capture_default_str();
  fit->add_option("--iterations", fcfg.iterations, "Iterations T")->capture_default_str();
  fit->add_option("--seed", fcfg.seed, "Seed")->capture_default_str();

  // gen-guidelines
  auto* guide = app.add_subcommand("gen-guidelines", "Generate one guideline per intent with the LLM backend");
  std::string guide_data, guide_out;
  int guide_tokens = 256;
  guide->add_option("--data", guide_data, "Training JSONL")->required();
  guide->add_option("--catalog", flags.catalog, "Intent catalog JSON");
  guide->add_option("--out", guide_out, "Catalog JSON with guidelines")->required();
  guide->add_option("--guideline-tokens", guide_tokens, "max_tokens per guideline")->capture_default_str();
  flags.add_backend_flags(guide);

  // build-ftset
  auto* ftset = app.add_subcommand("build-ftset", "Build the gate fine-tuning set");
  std::string ft_data, ft_out;
  std::size_t ft_per_intent = 10;
  int ft_epochs = 1;
  FtsetOptions fopts;
  ftset->add_option("--data", ft_data, "Training JSONL")->required();
  ftset->add_option("--catalog", flags.catalog, "Catalog JSON with guidelines");
  ftset->add_option("--classifier", flags.classifier, "Classifier JSON");
  ftset->add_option("--template", flags.prompt_template, "Gate prompt template file");
  ftset->add_option("--out", ft_out, "Output prefix; writes <prefix>.epochN.jsonl")->required();
  ftset->add_option("--per-intent", ft_per_intent, "Examples drawn per intent")->capture_default_str();
  ftset->add_option("-k,--k", fopts.k, "Candidates per example")->capture_default_str();
  ftset->add_option("--seed", fopts.seed, "Seed")->capture_default_str();
  ftset->add_option("--epochs", ft_epochs, "Epoch files to write")->capture_default_str()->check(CLI::PositiveNumber);
  ftset->add_flag("--force-gold", fopts.force_gold_in_candidates, "Put the gold label into every positive's candidates");

  // classify
  auto* classify = app.add_subcommand("classify", "Classify utterances (one JSON response per line)");
  std::vector<std::string> texts;
  std::string classify_file;
  classify->add_option("--text", texts, "Utterance (repeatable)");
  classify->add_option("--input", classify_file, "File with one utterance per line");
  flags.add_pipeline_flags(classify);

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP classification service");
  flags.add_pipeline_flags(serve);
  flags.add_service_flags(serve);

  // bench
  auto* bench = app.add_subcommand("bench", "Evaluate routing strategies on a labeled dataset");
  std::string bench_data, bench_out, bench_strategies = "classifier-only,low,moderate,high,full";
  std::string bench_thresholds = "0.15,0.10,0.05";
  std::optional<std::string> headline;
  bench->add_option("--data", bench_data, "Test set (.jsonl or HINT3 .csv)")->required();
  bench->add_option("--out", bench_out, "Report directory")->required();
  bench->add_option("--strategies", bench_strategies, "Comma list of strategies")->capture_default_str();
  bench->add_option("--thresholds", bench_thresholds, "Routing-analysis thresholds")->capture_default_str();
  bench->add_option("--headline", headline, "micro_f1 | macro_f1 | weighted_f1 (config: report.headline)");
  flags.add_pipeline_flags(bench);

  // report
  auto* report = app.add_subcommand("report", "Render routing analysis from bench records");
  std::string report_dir, report_format = "table", report_thresholds;
  int sweep = 0;
  report->add_option("--bench-dir", report_dir, "Directory written by bench")->required();
  report->add_option("--format", report_format, "table | csv | json")->capture_default_str();
  report->add_option("--thresholds", report_thresholds, "Comma list (default: the bench thresholds)");
  report->add_option("--sweep", sweep, "Instead: N+1 evenly spaced thresholds over [0, max score]");
  report->add_option("--oos-token", flags.oos_token, "Out-of-scope label");

  // synth
  auto* synth = app.add_subcommand("synth", "Write a synthetic clustered world (catalog, train, test)");
  std::string synth_out, oos_mode = "cluster";
  SyntheticWorldConfig scfg;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--dim", scfg.dim)->capture_default_str();
  synth->add_option("--intents", scfg.n_intents)->capture_default_str();
  synth->add_option("--train", scfg.train)->capture_default_str();
  synth->add_option("--ins-test", scfg.ins_test)->capture_default_str();
  synth->add_option("--oos-test", scfg.oos_test)->capture_default_str();
  synth->add_option("--noise", scfg.noise)->capture_default_str();
  synth->add_option("--oos-mode", oos_mode, "cluster | spread")->capture_default_str();
  synth->add_option("--seed", scfg.seed)->capture_default_str();

  // mock-backend
  auto* mock = app.add_subcommand("mock-backend", "Serve the backend wire protocol with mock models");
  flags.add_backend_flags(mock);
  flags.add_service_flags(mock);

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (embed->parsed()) {
      const auto cfg = resolve_config();
      auto dataset = load_any_dataset(embed_in, catalog_oos(cfg));
      auto backend = make_embed_backend(cfg.embed_backend, cfg.timeout);
      embed_dataset(dataset, *backend);
      io::save_dataset(dataset, embed_out);
      spdlog::info("embedded {} items (dim {}) with {}", dataset.size(), dataset.dimension(), backend->describe());
    } else if (train->parsed()) {
      const auto cfg = resolve_config();
      if (cfg.catalog_path.empty()) throw InvalidArgument("train: --catalog is required");
      const auto catalog = io::load_catalog(cfg.catalog_path);
      if (alpha_spec != "inverse") {
        const auto values = parse_list(alpha_spec);
        if (values.size() == 1) {
          tcfg.alpha = values.front();
        } else {
          tcfg.alpha = values;
        }
      }
      const auto model = train_classifier(io::load_dataset(train_data), catalog, tcfg);
      io::save_json(classifier_to_json(model), train_out);
      spdlog::info("classifier: loss {:.6f} -> {:.6f}", model.meta().initial_loss, model.meta().final_loss);
    } else if (fit->parsed()) {
      const auto dataset = io::load_dataset(fit_data);
      if (!dataset.fully_embedded()) throw InvalidArgument("fit-scorer: dataset must be embedded (run `embed` first)");
      std::set<std::string> labels;
      for (const auto& item : dataset.items) labels.insert(item.label);
      fcfg.n_atoms = fit_atoms.value_or(default_atom_count(dataset.size(), labels.size()));
      fcfg.neighbors = std::min(fcfg.neighbors, fcfg.n_atoms);
      const auto dict = fit_nnk(dataset.embedding_matrix(), fcfg);
      io::save_json(dictionary_to_json(dict), fit_out);
      spdlog::info("dictionary: {} atoms, final mean residual {:.6f}", dict.num_atoms(), dict.meta().final_error);
    } else if (guide->parsed()) {
      const auto cfg = resolve_config();
      if (cfg.catalog_path.empty()) throw InvalidArgument("gen-guidelines: --catalog is required");
      auto catalog = io::load_catalog(cfg.catalog_path);
      auto backend = make_generate_backend(cfg.generate_backend, cfg.timeout, cfg.concurrency);
      generate_guidelines(*backend, catalog, io::load_dataset(guide_data), guide_tokens);
      io::save_catalog(catalog, guide_out);
    } else if (ftset->parsed()) {
      const auto cfg = resolve_config();
      if (cfg.catalog_path.empty() || cfg.classifier_path.empty()) {
        throw InvalidArgument("build-ftset: --catalog and --classifier are required");
      }
      const auto catalog = io::load_catalog(cfg.catalog_path);
      const auto model = classifier_from_json(io::load_json(cfg.classifier_path));
      const auto tmpl = cfg.template_path.empty() ? PromptTemplate::default_gate() : PromptTemplate::load(cfg.template_path);
      const auto subset = select_examples(io::load_dataset(ft_data), catalog, ft_per_intent, fopts.seed);
      const auto result = build_ftset(subset, model, catalog, fopts);
      if (result.gold_absent_positives > 0) {
        spdlog::warn("{} positive examples lack the gold label among their candidates", result.gold_absent_positives);
      }
      for (int epoch = 0; epoch < ft_epochs; ++epoch) {
        std::string content;
        for (const auto& line : serialize_epoch(result.examples, epoch, fopts.seed, catalog, tmpl)) content += line + "\n";
        const auto path = ft_out + ".epoch" + std::to_string(epoch) + ".jsonl";
        io::write_text_file(path, content);
        spdlog::info("wrote {} examples to {}", result.examples.size(), path);
      }
    } else if (classify->parsed()) {
      const auto pipeline = build_pipeline(resolve_config());
      if (!classify_file.empty()) {
        std::istringstream in(io::read_text_file(classify_file));
        for (std::string line; std::getline(in, line);) {
          if (!trim(line).empty()) texts.push_back(line);
        }
      }
      if (texts.empty()) throw InvalidArgument("classify: give --text or --input");
      for (const auto& t : texts) std::cout << response_to_json(pipeline.classify(t)).dump() << '\n';
    } else if (serve->parsed()) {
      const auto cfg = resolve_config();
      Service service(std::make_shared<const Pipeline>(build_pipeline(cfg)), cfg.audit_log);
      service.bind(cfg.host, cfg.port);
      service.start();
      spdlog::info("serving on {}", service.url());
      wait_for_signal();
      service.stop();
    } else if (bench->parsed()) {
      const auto cfg = resolve_config();
      const auto dataset = load_any_dataset(bench_data, catalog_oos(cfg));
      const auto gold = gold_by_text(dataset);
      const auto pipeline = build_pipeline(cfg, &gold);
      std::vector<RoutingStrategy> strategies;
      for (const auto& name : split_names(bench_strategies)) strategies.push_back(resolve_strategy(name));
      const auto result = run_benchmark(pipeline, dataset, strategies, parse_list(bench_thresholds));
      std::string head = "micro_f1";
      if (!config_path.empty()) head = ConfigFile::load(config_path).get_string("report.headline", head);
      if (headline) head = *headline;
      write_benchmark_reports(result, bench_out, head);
      std::cout << benchmark_to_table(result, head);
    } else if (report->parsed()) {
      const fs::path dir(report_dir);
      std::vector<RoutingRecord> records;
      std::istringstream in(io::read_text_file(dir / "records.jsonl"));
      double max_score = 0.0;
      for (std::string line; std::getline(in, line);) {
        if (trim(line).empty()) continue;
        const auto j = nlohmann::json::parse(line);
        records.push_back({j.at("gold").get<std::string>(), j.at("classifier").get<std::string>(), j.at("score").get<double>()});
        max_score = std::max(max_score, records.back().score);
      }
      std::vector<double> thresholds;
      if (sweep > 0) {
        for (int i = 0; i <= sweep; ++i) thresholds.push_back(max_score * i / sweep);
      } else if (!report_thresholds.empty()) {
        thresholds = parse_list(report_thresholds);
      } else {
        const auto bench_report = io::load_json(dir / "report.json");
        for (const auto& row : bench_report.at("routing").at("rows")) {
          thresholds.push_back(row.at("tau").get<double>());
        }
      }
      const auto analysis = routing_analysis(records, thresholds, flags.oos_token.value_or(IntentCatalog{}.oos_token));
      if (report_format == "csv") {
        std::cout << routing_to_csv(analysis);
      } else if (report_format == "json") {
        std::cout << routing_to_json(analysis).dump(2) << '\n';
      } else if (report_format == "table") {
        std::cout << routing_to_table(analysis);
      } else {
        throw InvalidArgument("report: unknown format '" + report_format + "'");
      }
    } else if (synth->parsed()) {
      if (oos_mode == "spread") {
        scfg.oos_mode = OosMode::spread;
      } else if (oos_mode != "cluster") {
        throw InvalidArgument("synth: --oos-mode must be cluster or spread");
      }
      const auto world = make_synthetic_world(scfg);
      fs::create_directories(synth_out);
      io::save_catalog(world.catalog, fs::path(synth_out) / "catalog.json");
      io::save_dataset(world.train, fs::path(synth_out) / "train.jsonl");
      io::save_dataset(world.test, fs::path(synth_out) / "test.jsonl");
    } else if (mock->parsed()) {
      const auto cfg = resolve_config();
      wire::BackendServer server(make_embed_backend(cfg.embed_backend, cfg.timeout),
                                 make_generate_backend(cfg.generate_backend, cfg.timeout, cfg.concurrency));
      server.bind(cfg.host, cfg.port);
      server.start();
      spdlog::info("mock backend on {}", server.url());
      wait_for_signal();
      server.stop();
    }
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
