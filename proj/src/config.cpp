#include "intentgate/config.hpp"

#include "intentgate/error.hpp"
#include "intentgate/io.hpp"
#include "intentgate/wire.hpp"

#include <charconv>

namespace intentgate {

namespace {

std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

std::string unquote(const std::string& raw, std::size_t line_no) {
  if (raw.size() < 2 || raw.back() != '"') {
    throw InvalidArgument("config line " + std::to_string(line_no) + ": unterminated string");
  }
  std::string out;
  for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
    if (raw[i] == '\\' && i + 2 < raw.size()) {
      const char e = raw[++i];
      switch (e) {
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        case '"': out.push_back('"'); break;
        case '\\': out.push_back('\\'); break;
        default: throw InvalidArgument("config line " + std::to_string(line_no) + ": bad escape");
      }
    } else {
      out.push_back(raw[i]);
    }
  }
  return out;
}

}  // namespace

ConfigFile ConfigFile::parse(const std::string& text) {
  ConfigFile cfg;
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    ++line_no;
    const std::string line = trim(strip_comment(text.substr(pos, end - pos)));
    pos = end + 1;
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw InvalidArgument("config line " + std::to_string(line_no) + ": bad section");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InvalidArgument("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw InvalidArgument("config line " + std::to_string(line_no) + ": empty key");
    if (!value.empty() && value.front() == '"') value = unquote(value, line_no);
    cfg.values_[section.empty() ? key : section + "." + key] = std::move(value);
  }
  return cfg;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) { return parse(io::read_text_file(path)); }

std::optional<std::string> ConfigFile::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string ConfigFile::get_string(const std::string& key, const std::string& fallback) const {
  return get(key).value_or(fallback);
}

double ConfigFile::get_double(const std::string& key, double fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || ptr != v->data() + v->size()) throw InvalidArgument("config: '" + key + "' is not a number");
  return out;
}

long long ConfigFile::get_int(const std::string& key, long long fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || ptr != v->data() + v->size()) throw InvalidArgument("config: '" + key + "' is not an integer");
  return out;
}

bool ConfigFile::get_bool(const std::string& key, bool fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  if (*v == "true") return true;
  if (*v == "false") return false;
  throw InvalidArgument("config: '" + key + "' is not a boolean");
}

PipelineConfig PipelineConfig::from_file(const ConfigFile& f, const std::filesystem::path& base_dir) {
  PipelineConfig c;
  auto path = [&](const std::string& key) -> std::filesystem::path {
    const auto v = f.get(key);
    if (!v || v->empty()) return {};
    std::filesystem::path p(*v);
    return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  };
  c.embed_backend = f.get_string("backend.embed", c.embed_backend);
  c.generate_backend = f.get_string("backend.generate", c.generate_backend);
  c.timeout = std::chrono::milliseconds(static_cast<long long>(f.get_double("backend.timeout_s", 30.0) * 1000.0));
  c.concurrency = static_cast<int>(f.get_int("backend.concurrency", c.concurrency));
  c.strategy = f.get_string("routing.strategy", c.strategy);
  c.k = static_cast<std::size_t>(f.get_int("routing.k", static_cast<long long>(c.k)));
  c.score_method = f.get_string("routing.score", c.score_method);
  c.on_backend_failure = f.get_string("routing.on_backend_failure", c.on_backend_failure);
  c.oos_token = f.get_string("routing.oos_token", c.oos_token);
  c.max_tokens = static_cast<int>(f.get_int("llm.max_tokens", c.max_tokens));
  c.temperature = f.get_double("llm.temperature", c.temperature);
  c.catalog_path = path("artifacts.catalog");
  c.classifier_path = path("artifacts.classifier");
  c.dictionary_path = path("artifacts.dictionary");
  c.template_path = path("artifacts.template");
  c.host = f.get_string("service.host", c.host);
  c.port = static_cast<int>(f.get_int("service.port", c.port));
  c.audit_log = path("service.audit_log");
  return c;
}

void PipelineConfig::validate() const {
  if (k < 1) throw InvalidArgument("config: k must be >= 1");
  if (concurrency < 1) throw InvalidArgument("config: concurrency must be >= 1");
  if (timeout.count() <= 0) throw InvalidArgument("config: timeout must be positive");
  if (max_tokens < 1) throw InvalidArgument("config: max_tokens must be >= 1");
  resolve_strategy(strategy);
  parse_score_method(score_method);
  parse_failure_policy(on_backend_failure);
}

std::shared_ptr<EmbedBackend> make_embed_backend(const std::string& spec, std::chrono::milliseconds timeout) {
  if (spec == "mock") return std::make_shared<HashingEmbedder>();
  if (spec.starts_with("mock:")) {
    const auto dim_text = spec.substr(5);
    std::size_t dim = 0;
    const auto [ptr, ec] = std::from_chars(dim_text.data(), dim_text.data() + dim_text.size(), dim);
    if (ec != std::errc() || ptr != dim_text.data() + dim_text.size()) {
      throw InvalidArgument("embed backend: bad mock spec '" + spec + "' (mock or mock:<dim>)");
    }
    return std::make_shared<HashingEmbedder>(dim);
  }
  return std::make_shared<wire::HttpEmbedBackend>(spec, timeout);
}

std::shared_ptr<GenerateBackend> make_generate_backend(const std::string& spec, std::chrono::milliseconds timeout,
                                                       int concurrency,
                                                       const std::unordered_map<std::string, std::string>* gold_by_text) {
  std::shared_ptr<GenerateBackend> inner;
  if (spec == "mock" || spec == "mock:top1") {
    inner = std::make_shared<TopCandidateGenerator>();
  } else if (spec == "mock:oos") {
    inner = std::make_shared<FunctionGenerator>(
        [](const GenerateRequest& r) { return r.context ? r.context->oos_token : std::string("OOS"); }, "mock:oos");
  } else if (spec.starts_with("mock:text=")) {
    inner = std::make_shared<FixedGenerator>(spec.substr(10));
  } else if (spec == "mock:oracle") {
    if (!gold_by_text) throw InvalidArgument("mock:oracle needs gold labels (only available in bench)");
    inner = std::make_shared<OracleGenerator>(*gold_by_text);
  } else if (spec.starts_with("mock")) {
    throw InvalidArgument("generate backend: unknown mock '" + spec + "'");
  } else {
    inner = std::make_shared<wire::HttpGenerateBackend>(spec, timeout);
  }
  return std::make_shared<ConcurrencyLimitedGenerator>(std::move(inner), concurrency);
}

PipelineOptions make_pipeline_options(const PipelineConfig& config) {
  config.validate();
  PipelineOptions o;
  o.strategy = resolve_strategy(config.strategy);
  o.k = config.k;
  o.score_method = parse_score_method(config.score_method);
  o.on_backend_failure = parse_failure_policy(config.on_backend_failure);
  o.gate.max_tokens = config.max_tokens;
  o.gate.temperature = config.temperature;
  return o;
}

Pipeline build_pipeline(const PipelineConfig& config, const std::unordered_map<std::string, std::string>* gold_by_text) {
  const auto options = make_pipeline_options(config);
  if (config.catalog_path.empty()) throw InvalidArgument("config: artifacts.catalog is required");
  if (config.classifier_path.empty()) throw InvalidArgument("config: artifacts.classifier is required");

  auto catalog = io::load_catalog(config.catalog_path);
  if (!config.oos_token.empty()) {
    catalog.oos_token = config.oos_token;
    require_valid(catalog);
  }
  auto classifier = classifier_from_json(io::load_json(config.classifier_path));
  std::optional<NnkDictionary> dictionary;
  if (!config.dictionary_path.empty()) dictionary = dictionary_from_json(io::load_json(config.dictionary_path));
  auto tmpl = config.template_path.empty() ? PromptTemplate::default_gate() : PromptTemplate::load(config.template_path);

  return Pipeline(std::move(catalog), std::move(classifier), std::move(dictionary), options,
                  make_embed_backend(config.embed_backend, config.timeout),
                  make_generate_backend(config.generate_backend, config.timeout, config.concurrency, gold_by_text),
                  std::move(tmpl));
}

}  // namespace intentgate
