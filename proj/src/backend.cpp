#include "intentgate/backend.hpp"

#include "intentgate/error.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>

namespace intentgate {

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

void add_feature(std::vector<double>& v, std::string_view feature, double weight) {
  const auto h = fnv1a(feature);
  const double sign = (h >> 63) ? -1.0 : 1.0;
  v[h % v.size()] += sign * weight;
}

}  // namespace

HashingEmbedder::HashingEmbedder(std::size_t dim) : dim_(dim) {
  if (dim_ < 2) throw InvalidArgument("hashing embedder: dim must be >= 2");
}

std::vector<double> HashingEmbedder::embed_one(const std::string& text) const {
  std::vector<double> v(dim_, 0.0);
  std::string lowered;
  lowered.reserve(text.size());
  for (unsigned char c : text) lowered.push_back(static_cast<char>(std::tolower(c)));

  std::string word;
  auto flush = [&] {
    if (word.empty()) return;
    add_feature(v, "w:" + word, 1.0);
    const std::string padded = " " + word + " ";
    for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
      add_feature(v, "c:" + padded.substr(i, 3), 0.5);
    }
    word.clear();
  };
  for (char c : lowered) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      word.push_back(c);
    } else {
      flush();
    }
  }
  flush();

  if (std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; })) {
    add_feature(v, "<empty>", 1.0);
  }
  return v;
}

std::vector<std::vector<double>> HashingEmbedder::embed(const std::vector<std::string>& texts) {
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed_one(t));
  return out;
}

std::string HashingEmbedder::describe() const { return "mock:" + std::to_string(dim_); }

std::string TopCandidateGenerator::generate(const GenerateRequest& request) {
  if (request.context) {
    if (request.context->candidates.empty()) return request.context->oos_token;
    return request.context->candidates.front();
  }
  // Over the wire there is no context: take the first "- name[: guideline]" line.
  std::size_t pos = 0;
  while (pos < request.prompt.size()) {
    auto end = request.prompt.find('\n', pos);
    if (end == std::string::npos) end = request.prompt.size();
    const std::string_view line(request.prompt.data() + pos, end - pos);
    if (line.starts_with("- ")) {
      const auto name = line.substr(2, line.find(": ") == std::string_view::npos ? std::string_view::npos
                                                                                 : line.find(": ") - 2);
      return std::string(name);
    }
    pos = end + 1;
  }
  return "OOS";
}

std::string OracleGenerator::generate(const GenerateRequest& request) {
  if (!request.context) throw BackendError("oracle generator needs a gate context");
  const auto& ctx = *request.context;
  const auto it = gold_.find(ctx.utterance);
  if (it == gold_.end()) return ctx.oos_token;
  const auto& c = ctx.candidates;
  return std::find(c.begin(), c.end(), it->second) != c.end() ? it->second : ctx.oos_token;
}

ConcurrencyLimitedGenerator::ConcurrencyLimitedGenerator(std::shared_ptr<GenerateBackend> inner,
                                                         std::ptrdiff_t max_in_flight)
    : inner_(std::move(inner)), slots_(std::clamp<std::ptrdiff_t>(max_in_flight, 1, 1024)) {
  if (!inner_) throw InvalidArgument("concurrency limiter: null backend");
}

std::string ConcurrencyLimitedGenerator::generate(const GenerateRequest& request) {
  slots_.acquire();
  struct Release {
    std::counting_semaphore<1024>& s;
    ~Release() { s.release(); }
  } release{slots_};
  return inner_->generate(request);
}

void embed_dataset(LabeledDataset& dataset, EmbedBackend& backend, std::size_t batch_size) {
  if (batch_size == 0) batch_size = 1;
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < dataset.items.size(); ++i) {
    if (!dataset.items[i].utterance.has_embedding()) pending.push_back(i);
  }
  for (std::size_t start = 0; start < pending.size(); start += batch_size) {
    const auto end = std::min(pending.size(), start + batch_size);
    std::vector<std::string> texts;
    for (std::size_t i = start; i < end; ++i) texts.push_back(dataset.items[pending[i]].utterance.text);
    const auto vectors = backend.embed(texts);
    if (vectors.size() != texts.size()) {
      throw BackendError("embed backend returned " + std::to_string(vectors.size()) + " vectors for " +
                         std::to_string(texts.size()) + " texts");
    }
    for (std::size_t i = start; i < end; ++i) {
      dataset.items[pending[i]].utterance.embedding = normalize_embedding(vectors[i - start]);
    }
  }
  dataset.dimension();
}

Vector embed_text(EmbedBackend& backend, const std::string& text) {
  const auto vectors = backend.embed({text});
  if (vectors.size() != 1) throw BackendError("embed backend returned wrong number of vectors");
  return normalize_embedding(vectors.front());
}

}  // namespace intentgate
