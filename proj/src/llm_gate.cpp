#include "intentgate/llm_gate.hpp"

#include "intentgate/error.hpp"
#include "intentgate/io.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <set>

namespace intentgate {

const std::string_view kDefaultGateTemplate =
    "You are the intent detection component of a task-oriented dialogue system.\n"
    "Read the user utterance and decide which of the candidate intents it expresses.\n"
    "If none of the candidate intents fits the utterance, answer {oos_token}.\n"
    "\n"
    "Candidate intents:\n"
    "{candidates}\n"
    "\n"
    "Utterance: {utterance}\n"
    "\n"
    "Answer with exactly one option: the name of one candidate intent, or {oos_token}.\n"
    "Answer:";

PromptTemplate::PromptTemplate(std::string source) : source_(std::move(source)) {
  static const std::set<std::string> known = {"utterance", "candidates", "oos_token"};
  std::set<std::string> seen;
  std::string literal;
  for (std::size_t i = 0; i < source_.size(); ++i) {
    const char c = source_[i];
    if (c == '{' && i + 1 < source_.size() && source_[i + 1] == '{') {
      literal.push_back('{');
      ++i;
    } else if (c == '}' && i + 1 < source_.size() && source_[i + 1] == '}') {
      literal.push_back('}');
      ++i;
    } else if (c == '{') {
      const auto close = source_.find('}', i);
      if (close == std::string::npos) throw InvalidArgument("prompt template: unclosed '{'");
      std::string name = source_.substr(i + 1, close - i - 1);
      if (!known.contains(name)) throw InvalidArgument("prompt template: unknown placeholder {" + name + "}");
      if (!literal.empty()) segments_.push_back({false, std::move(literal)});
      literal.clear();
      seen.insert(name);
      segments_.push_back({true, std::move(name)});
      i = close;
    } else if (c == '}') {
      throw InvalidArgument("prompt template: stray '}'");
    } else {
      literal.push_back(c);
    }
  }
  if (!literal.empty()) segments_.push_back({false, std::move(literal)});
  for (const auto& name : known) {
    if (!seen.contains(name)) throw InvalidArgument("prompt template: missing placeholder {" + name + "}");
  }
}

PromptTemplate PromptTemplate::default_gate() {
  static const PromptTemplate tmpl{std::string(kDefaultGateTemplate)};
  return tmpl;
}

PromptTemplate PromptTemplate::load(const std::string& path) {
  return PromptTemplate(io::read_text_file(path));
}

std::string PromptTemplate::render(std::string_view utterance, std::string_view candidates,
                                   std::string_view oos_token) const {
  std::string out;
  for (const auto& seg : segments_) {
    if (!seg.placeholder) {
      out += seg.text;
    } else if (seg.text == "utterance") {
      out += utterance;
    } else if (seg.text == "candidates") {
      out += candidates;
    } else {
      out += oos_token;
    }
  }
  return out;
}

std::string render_candidates(const std::vector<IntentDef>& candidates) {
  std::string out;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (i) out += '\n';
    out += "- " + candidates[i].name;
    if (!candidates[i].guideline.empty()) out += ": " + candidates[i].guideline;
  }
  return out;
}

GatePrompt build_prompt(std::string_view utterance, const std::vector<IntentDef>& candidates,
                        std::string_view oos_token, const PromptTemplate& tmpl) {
  if (candidates.empty()) throw InvalidArgument("build_prompt: need at least one candidate");
  GatePrompt prompt;
  std::set<std::string> names;
  for (const auto& c : candidates) {
    if (c.name.empty()) throw InvalidArgument("build_prompt: empty candidate name");
    if (!names.insert(c.name).second) throw InvalidArgument("build_prompt: duplicate candidate '" + c.name + "'");
    if (c.name == oos_token) throw InvalidArgument("build_prompt: candidate equals oos_token");
    prompt.candidates.push_back(c.name);
  }
  prompt.oos_token = std::string(oos_token);
  prompt.text = tmpl.render(utterance, render_candidates(candidates), oos_token);
  return prompt;
}

std::string_view to_string(ParsePath path) {
  switch (path) {
    case ParsePath::exact: return "exact";
    case ParsePath::fuzzy: return "fuzzy";
    case ParsePath::fallback: return "fallback";
  }
  return "unknown";
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

struct Span {
  std::size_t begin, end;
};

// Occurrences of `needle` in `hay` not adjacent to other word characters.
std::vector<Span> bounded_occurrences(const std::string& hay, const std::string& needle) {
  std::vector<Span> out;
  if (needle.empty()) return out;
  for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) {
    const auto end = pos + needle.size();
    const bool left_ok = pos == 0 || !is_word_char(hay[pos - 1]) || !is_word_char(needle.front());
    const bool right_ok = end == hay.size() || !is_word_char(hay[end]) || !is_word_char(needle.back());
    if (left_ok && right_ok) out.push_back({pos, end});
  }
  return out;
}

}  // namespace

GateVerdict parse_response(std::string_view raw, const std::vector<std::string>& candidates,
                           std::string_view oos_token) {
  if (candidates.empty()) throw InvalidArgument("parse_response: need at least one candidate");
  GateVerdict verdict;
  verdict.raw = std::string(raw);

  std::vector<std::string> options = candidates;
  options.emplace_back(oos_token);

  const std::string answer = lower(trim(raw));
  for (const auto& option : options) {
    if (answer == lower(option)) {
      verdict.label = option;
      verdict.path = ParsePath::exact;
      return verdict;
    }
  }

  std::vector<std::vector<Span>> spans;
  for (const auto& option : options) spans.push_back(bounded_occurrences(answer, lower(option)));
  // An option whose every mention sits inside a longer option's mention is not counted.
  auto covered = [&](std::size_t i) {
    for (const auto& s : spans[i]) {
      bool inside = false;
      for (std::size_t j = 0; j < options.size() && !inside; ++j) {
        if (j == i) continue;
        for (const auto& t : spans[j]) {
          if (t.begin <= s.begin && s.end <= t.end && (t.end - t.begin) > (s.end - s.begin)) {
            inside = true;
            break;
          }
        }
      }
      if (!inside) return false;
    }
    return true;
  };
  std::vector<std::size_t> mentioned;
  for (std::size_t i = 0; i < options.size(); ++i) {
    if (!spans[i].empty() && !covered(i)) mentioned.push_back(i);
  }
  if (mentioned.size() == 1) {
    verdict.label = options[mentioned.front()];
    verdict.path = ParsePath::fuzzy;
    return verdict;
  }

  spdlog::info("llm gate: unparseable answer '{}', falling back to '{}'", raw, candidates.front());
  verdict.label = candidates.front();
  verdict.path = ParsePath::fallback;
  return verdict;
}

GateVerdict decide(GenerateBackend& backend, std::string_view utterance, const TopKPrediction& topk,
                   const IntentCatalog& catalog, const PromptTemplate& tmpl, const GateOptions& options) {
  if (topk.ranked.empty()) throw InvalidArgument("decide: empty top-k");
  std::vector<IntentDef> candidates;
  for (const auto& [name, p] : topk.ranked) candidates.push_back(catalog.at(name));
  const auto prompt = build_prompt(utterance, candidates, catalog.oos_token, tmpl);

  GateContext context{std::string(utterance), prompt.candidates, catalog.oos_token};
  GenerateRequest request{prompt.text, options.max_tokens, options.temperature, &context};
  std::string raw;
  try {
    raw = backend.generate(request);
  } catch (const BackendError& e) {
    throw BackendError(e.what(), topk.top1());
  } catch (const std::exception& e) {
    throw BackendError(std::string("generate backend failed: ") + e.what(), topk.top1());
  }
  return parse_response(raw, prompt.candidates, catalog.oos_token);
}

std::string build_guideline_prompt(std::string_view intent_name, const std::vector<std::string>& utterances) {
  std::string out;
  out += "Intent name: ";
  out += intent_name;
  out += "\n\nUtterances labeled with this intent:\n";
  for (const auto& u : utterances) out += "- " + u + "\n";
  out +=
      "\nWrite a definition of this intent. A human annotator who reads the definition next to the "
      "utterances above should decide to label every one of them with this intent. Reply with the "
      "definition only.";
  return out;
}

std::string generate_guideline(GenerateBackend& backend, std::string_view intent_name,
                               const std::vector<std::string>& utterances, int max_tokens) {
  if (utterances.empty()) {
    throw InvalidArgument("generate_guideline: no utterances for intent '" + std::string(intent_name) + "'");
  }
  GenerateRequest request{build_guideline_prompt(intent_name, utterances), max_tokens, 0.0, nullptr};
  std::string text;
  try {
    text = backend.generate(request);
  } catch (const BackendError&) {
    throw;
  } catch (const std::exception& e) {
    throw BackendError(std::string("guideline generation failed: ") + e.what());
  }
  if (trim(text).empty()) {
    throw BackendError("guideline generation returned empty text for '" + std::string(intent_name) + "'");
  }
  return text;
}

void generate_guidelines(GenerateBackend& backend, IntentCatalog& catalog, const LabeledDataset& dataset,
                         int max_tokens) {
  // All or nothing: the catalog is only touched once every intent has a guideline.
  std::vector<std::string> guidelines;
  for (const auto& intent : catalog.intents) {
    std::vector<std::string> utterances;
    for (const auto& item : dataset.items) {
      if (item.label == intent.name) utterances.push_back(item.utterance.text);
    }
    guidelines.push_back(generate_guideline(backend, intent.name, utterances, max_tokens));
  }
  for (std::size_t i = 0; i < guidelines.size(); ++i) catalog.intents[i].guideline = std::move(guidelines[i]);
}

}  // namespace intentgate
