#include "intentgate/evaluation.hpp"

#include "intentgate/error.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace intentgate {

namespace {

struct CsvRow {
  std::vector<std::string> fields;
  std::size_t line = 0;  // line where the row starts
};

// RFC 4180: quoted fields may contain commas, doubled quotes and newlines.
std::vector<CsvRow> read_csv(std::istream& in) {
  std::vector<CsvRow> rows;
  CsvRow row;
  std::string field;
  bool quoted = false;
  bool row_has_content = false;
  std::size_t line = 1;
  row.line = 1;
  char c;
  auto end_field = [&] {
    row.fields.push_back(std::move(field));
    field.clear();
  };
  auto end_row = [&] {
    end_field();
    if (row_has_content) rows.push_back(std::move(row));
    row = CsvRow{};
    row.line = line;
    row_has_content = false;
  };
  while (in.get(c)) {
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        quoted = true;
        row_has_content = true;
        break;
      case ',':
        end_field();
        row_has_content = true;
        break;
      case '\r':
        break;
      case '\n':
        ++line;
        end_row();
        break;
      default:
        field.push_back(c);
        row_has_content = true;
    }
  }
  if (quoted) throw InvalidArgument("csv: unterminated quoted field starting on line " + std::to_string(row.line));
  if (row_has_content || !field.empty()) {
    row_has_content = true;
    end_row();
  }
  return rows;
}

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double f1_of(double p, double r) { return (p + r) == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

}  // namespace

LabeledDataset parse_hint3(std::istream& in, const std::string& oos_sentinel, const std::string& oos_token) {
  const auto rows = read_csv(in);
  if (rows.empty()) throw InvalidArgument("hint3: missing header row");

  std::optional<std::size_t> sentence_col, label_col;
  for (std::size_t i = 0; i < rows[0].fields.size(); ++i) {
    const auto name = trim(rows[0].fields[i]);
    if (name == "sentence") sentence_col = i;
    if (name == "label") label_col = i;
  }
  if (!sentence_col || !label_col) {
    throw InvalidArgument("hint3: header must contain columns 'sentence' and 'label'");
  }

  LabeledDataset dataset;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& fields = rows[r].fields;
    const std::string where = "hint3 row " + std::to_string(r) + " (line " + std::to_string(rows[r].line) + ")";
    const std::string sentence = *sentence_col < fields.size() ? trim(fields[*sentence_col]) : std::string();
    const std::string label = *label_col < fields.size() ? trim(fields[*label_col]) : std::string();
    if (sentence.empty()) throw InvalidArgument(where + ": empty sentence");
    if (label.empty()) throw InvalidArgument(where + ": missing label");

    LabeledItem item;
    item.utterance.id = "row-" + std::to_string(r);
    item.utterance.text = sentence;
    item.label = label == oos_sentinel ? oos_token : label;
    dataset.items.push_back(std::move(item));
  }
  if (dataset.empty()) spdlog::warn("hint3: file has a header but no rows");
  return dataset;
}

LabeledDataset load_hint3(const std::filesystem::path& path, const std::string& oos_sentinel,
                          const std::string& oos_token) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  return parse_hint3(in, oos_sentinel, oos_token);
}

bool MetricsReport::has_flag(std::string_view flag) const {
  return std::find(flags.begin(), flags.end(), flag) != flags.end();
}

const ClassMetrics& MetricsReport::metrics_for(std::string_view label) const {
  for (const auto& m : per_class) {
    if (m.label == label) return m;
  }
  throw InvalidArgument("no metrics for label '" + std::string(label) + "'");
}

MetricsReport evaluate(const std::vector<std::string>& predictions, const std::vector<std::string>& gold,
                       const IntentCatalog& catalog) {
  if (predictions.size() != gold.size()) {
    throw InvalidArgument("evaluate: " + std::to_string(predictions.size()) + " predictions for " +
                          std::to_string(gold.size()) + " gold labels");
  }
  if (gold.empty()) throw InvalidArgument("evaluate: nothing to evaluate");

  MetricsReport report;
  report.n = gold.size();
  report.labels = catalog.names();
  report.labels.push_back(catalog.oos_token);
  const auto n_labels = report.labels.size();
  const auto oos = n_labels - 1;

  auto index = [&](const std::string& label) -> std::size_t {
    if (catalog.is_oos(label)) return oos;
    if (auto i = catalog.index_of(label)) return *i;
    throw InvalidArgument("evaluate: unknown label '" + label + "'");
  };

  report.confusion.assign(n_labels, std::vector<std::size_t>(n_labels, 0));
  std::size_t correct = 0, ins_total = 0, ins_correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const auto g = index(gold[i]);
    const auto p = index(predictions[i]);
    ++report.confusion[g][p];
    if (g == p) ++correct;
    if (g != oos) {
      ++ins_total;
      if (g == p) ++ins_correct;
    }
  }

  std::size_t tp_sum = 0, pred_sum = 0, support_sum = 0;
  double macro_sum = 0.0, weighted_sum = 0.0;
  std::size_t macro_count = 0;
  for (std::size_t c = 0; c < n_labels; ++c) {
    ClassMetrics m;
    m.label = report.labels[c];
    m.true_positives = report.confusion[c][c];
    for (std::size_t o = 0; o < n_labels; ++o) {
      m.support += report.confusion[c][o];
      m.predicted += report.confusion[o][c];
    }
    m.precision_undefined = m.predicted == 0;
    m.recall_undefined = m.support == 0;
    m.precision = ratio(m.true_positives, m.predicted);
    m.recall = ratio(m.true_positives, m.support);
    m.f1 = f1_of(m.precision, m.recall);

    tp_sum += m.true_positives;
    pred_sum += m.predicted;
    support_sum += m.support;
    if (m.support > 0 || m.predicted > 0) {
      macro_sum += m.f1;
      ++macro_count;
    }
    weighted_sum += m.f1 * static_cast<double>(m.support);
    report.per_class.push_back(std::move(m));
  }

  report.accuracy = ratio(correct, report.n);
  // Count form of 2PR/(P+R); exact, so it equals accuracy bit for bit on single-label data.
  report.micro_f1 = ratio(2 * tp_sum, pred_sum + support_sum);
  report.macro_f1 = macro_count == 0 ? 0.0 : macro_sum / static_cast<double>(macro_count);
  report.weighted_f1 = weighted_sum / static_cast<double>(support_sum);
  report.ins_accuracy = ratio(ins_correct, ins_total);
  if (ins_total == 0) report.flags.emplace_back("ins_accuracy_undefined");

  const auto& om = report.per_class[oos];
  report.oos_precision = om.precision;
  report.oos_recall = om.recall;
  report.oos_f1 = om.f1;
  if (om.precision_undefined) report.flags.emplace_back("oos_precision_undefined");
  if (om.recall_undefined) report.flags.emplace_back("oos_recall_undefined");
  for (const auto& m : report.per_class) {
    if (&m == &om) continue;
    if (m.precision_undefined && m.support > 0) report.flags.push_back("precision_undefined:" + m.label);
  }
  return report;
}

std::string_view to_string(RoutingCategory category) {
  switch (category) {
    case RoutingCategory::gold_oos: return "gold_oos";
    case RoutingCategory::misclassified_ins: return "misclassified_ins";
    case RoutingCategory::correct_ins: return "correct_ins";
  }
  return "unknown";
}

std::optional<double> RoutingRow::fraction(RoutingCategory category) const {
  switch (category) {
    case RoutingCategory::gold_oos: return gold_oos;
    case RoutingCategory::misclassified_ins: return misclassified_ins;
    case RoutingCategory::correct_ins: return correct_ins;
  }
  return std::nullopt;
}

RoutingAnalysis routing_analysis(const std::vector<RoutingRecord>& records, const std::vector<double>& thresholds,
                                 const std::string& oos_token) {
  for (const auto& r : records) {
    if (!std::isfinite(r.score)) throw InvalidArgument("routing_analysis: non-finite score");
  }
  for (double tau : thresholds) {
    if (std::isnan(tau)) throw InvalidArgument("routing_analysis: NaN threshold");
  }

  RoutingAnalysis analysis;
  auto category_of = [&](const RoutingRecord& r) {
    if (r.gold == oos_token) return RoutingCategory::gold_oos;
    return r.predicted == r.gold ? RoutingCategory::correct_ins : RoutingCategory::misclassified_ins;
  };
  for (const auto& r : records) {
    switch (category_of(r)) {
      case RoutingCategory::gold_oos: ++analysis.gold_oos_count; break;
      case RoutingCategory::misclassified_ins: ++analysis.misclassified_ins_count; break;
      case RoutingCategory::correct_ins: ++analysis.correct_ins_count; break;
    }
  }

  for (double tau : thresholds) {
    std::size_t oos = 0, mis = 0, ok = 0;
    for (const auto& r : records) {
      if (!(r.score > tau)) continue;
      switch (category_of(r)) {
        case RoutingCategory::gold_oos: ++oos; break;
        case RoutingCategory::misclassified_ins: ++mis; break;
        case RoutingCategory::correct_ins: ++ok; break;
      }
    }
    RoutingRow row;
    row.tau = tau;
    if (analysis.gold_oos_count) row.gold_oos = ratio(oos, analysis.gold_oos_count);
    if (analysis.misclassified_ins_count) row.misclassified_ins = ratio(mis, analysis.misclassified_ins_count);
    if (analysis.correct_ins_count) row.correct_ins = ratio(ok, analysis.correct_ins_count);
    analysis.rows.push_back(row);
  }
  return analysis;
}

std::string format_number(double value, int precision) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (std::isnan(value)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, value);
  return buf;
}

nlohmann::ordered_json metrics_to_json(const MetricsReport& report) {
  using oj = nlohmann::ordered_json;
  oj per_class = oj::array();
  for (const auto& m : report.per_class) {
    per_class.push_back({{"label", m.label},
                         {"support", m.support},
                         {"predicted", m.predicted},
                         {"precision", m.precision},
                         {"recall", m.recall},
                         {"f1", m.f1},
                         {"precision_undefined", m.precision_undefined},
                         {"recall_undefined", m.recall_undefined}});
  }
  return {{"n", report.n},
          {"accuracy", report.accuracy},
          {"micro_f1", report.micro_f1},
          {"macro_f1", report.macro_f1},
          {"weighted_f1", report.weighted_f1},
          {"ins_accuracy", report.ins_accuracy},
          {"oos_precision", report.oos_precision},
          {"oos_recall", report.oos_recall},
          {"oos_f1", report.oos_f1},
          {"flags", report.flags},
          {"labels", report.labels},
          {"per_class", std::move(per_class)},
          {"confusion", report.confusion}};
}

namespace {

std::string pad(const std::string& s, std::size_t width, bool right = false) {
  if (s.size() >= width) return s;
  const std::string fill(width - s.size(), ' ');
  return right ? fill + s : s + fill;
}

std::string fraction_text(const std::optional<double>& f) { return f ? format_number(*f, 4) : "NA"; }

}  // namespace

std::string metrics_to_table(const MetricsReport& report) {
  std::size_t width = 5;
  for (const auto& l : report.labels) width = std::max(width, l.size());
  std::ostringstream out;
  out << pad("label", width) << "  " << pad("support", 7, true) << "  " << pad("precision", 9, true) << "  "
      << pad("recall", 9, true) << "  " << pad("f1", 9, true) << '\n';
  for (const auto& m : report.per_class) {
    out << pad(m.label, width) << "  " << pad(std::to_string(m.support), 7, true) << "  "
        << pad(format_number(m.precision, 4), 9, true) << "  " << pad(format_number(m.recall, 4), 9, true) << "  "
        << pad(format_number(m.f1, 4), 9, true) << '\n';
  }
  out << '\n';
  const std::pair<const char*, double> summary[] = {
      {"n", static_cast<double>(report.n)},
      {"accuracy", report.accuracy},
      {"micro_f1", report.micro_f1},
      {"macro_f1", report.macro_f1},
      {"weighted_f1", report.weighted_f1},
      {"ins_accuracy", report.ins_accuracy},
      {"oos_precision", report.oos_precision},
      {"oos_recall", report.oos_recall},
  };
  for (const auto& [name, value] : summary) {
    out << pad(name, 14) << (std::string(name) == "n" ? std::to_string(report.n) : format_number(value, 4)) << '\n';
  }
  if (!report.flags.empty()) {
    out << pad("flags", 14);
    for (std::size_t i = 0; i < report.flags.size(); ++i) out << (i ? ", " : "") << report.flags[i];
    out << '\n';
  }
  return out.str();
}

nlohmann::ordered_json routing_to_json(const RoutingAnalysis& analysis) {
  using oj = nlohmann::ordered_json;
  auto value = [](const std::optional<double>& f) { return f ? oj(*f) : oj(nullptr); };
  oj rows = oj::array();
  for (const auto& r : analysis.rows) {
    rows.push_back({{"tau", std::isfinite(r.tau) ? oj(r.tau) : oj(format_number(r.tau))},
                    {"gold_oos", value(r.gold_oos)},
                    {"misclassified_ins", value(r.misclassified_ins)},
                    {"correct_ins", value(r.correct_ins)}});
  }
  return {{"counts",
           {{"gold_oos", analysis.gold_oos_count},
            {"misclassified_ins", analysis.misclassified_ins_count},
            {"correct_ins", analysis.correct_ins_count}}},
          {"rows", std::move(rows)}};
}

std::string routing_to_csv(const RoutingAnalysis& analysis) {
  std::ostringstream out;
  out << "threshold,category,fraction\n";
  for (const auto& r : analysis.rows) {
    for (auto c : {RoutingCategory::gold_oos, RoutingCategory::misclassified_ins, RoutingCategory::correct_ins}) {
      const auto f = r.fraction(c);
      out << format_number(r.tau) << ',' << to_string(c) << ',' << (f ? format_number(*f) : "NA") << '\n';
    }
  }
  return out.str();
}

std::string routing_to_table(const RoutingAnalysis& analysis) {
  std::ostringstream out;
  out << pad("tau", 10) << pad("gold_oos", 12, true) << pad("misclass_ins", 14, true) << pad("correct_ins", 13, true)
      << '\n';
  for (const auto& r : analysis.rows) {
    out << pad(format_number(r.tau, 4), 10) << pad(fraction_text(r.gold_oos), 12, true)
        << pad(fraction_text(r.misclassified_ins), 14, true) << pad(fraction_text(r.correct_ins), 13, true) << '\n';
  }
  out << "counts: gold_oos=" << analysis.gold_oos_count << " misclassified_ins=" << analysis.misclassified_ins_count
      << " correct_ins=" << analysis.correct_ins_count << '\n';
  return out.str();
}

}  // namespace intentgate
