#pragma once

#include "intentgate/backend.hpp"
#include "intentgate/classifier.hpp"
#include "intentgate/domain.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace intentgate {

// Text template with named placeholders {utterance}, {candidates}, {oos_token}.
// "{{" and "}}" render literal braces. All three placeholders are required.
class PromptTemplate {
 public:
  explicit PromptTemplate(std::string source);

  static PromptTemplate default_gate();
  static PromptTemplate load(const std::string& path);

  const std::string& source() const noexcept { return source_; }
  std::string render(std::string_view utterance, std::string_view candidates,
                     std::string_view oos_token) const;

 private:
  struct Segment {
    bool placeholder;
    std::string text;  // literal text, or placeholder name
  };
  std::string source_;
  std::vector<Segment> segments_;
};

// Shipped default; identical to templates/gate_prompt.txt.
extern const std::string_view kDefaultGateTemplate;

struct GatePrompt {
  std::string text;
  std::vector<std::string> candidates;  // in rendered order
  std::string oos_token;
};

// One line per candidate: "- <name>: <guideline>" (or "- <name>" without a guideline).
std::string render_candidates(const std::vector<IntentDef>& candidates);

GatePrompt build_prompt(std::string_view utterance, const std::vector<IntentDef>& candidates,
                        std::string_view oos_token,
                        const PromptTemplate& tmpl = PromptTemplate::default_gate());

enum class ParsePath { exact, fuzzy, fallback };
std::string_view to_string(ParsePath path);

struct GateVerdict {
  std::string label;  // one of the candidates or the oos_token
  std::string raw;
  ParsePath path = ParsePath::exact;
};

// Exact (trimmed, case-insensitive) match, else a unique word-bounded mention of one option,
// else the first candidate.
GateVerdict parse_response(std::string_view raw, const std::vector<std::string>& candidates,
                           std::string_view oos_token);

struct GateOptions {
  int max_tokens = 32;
  double temperature = 0.0;
};

// Prompt with the top-k candidates, query the backend, parse. Transport failures surface as
// BackendError carrying the classifier top-1.
GateVerdict decide(GenerateBackend& backend, std::string_view utterance, const TopKPrediction& topk,
                   const IntentCatalog& catalog, const PromptTemplate& tmpl = PromptTemplate::default_gate(),
                   const GateOptions& options = {});

std::string build_guideline_prompt(std::string_view intent_name, const std::vector<std::string>& utterances);

// Backend output is returned verbatim.
std::string generate_guideline(GenerateBackend& backend, std::string_view intent_name,
                               const std::vector<std::string>& utterances, int max_tokens = 256);

// Fills every intent's guideline from its training utterances in `dataset`.
void generate_guidelines(GenerateBackend& backend, IntentCatalog& catalog, const LabeledDataset& dataset,
                         int max_tokens = 256);

}  // namespace intentgate
