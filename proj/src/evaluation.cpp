#include "stockrag/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>
#include "json.hpp"

namespace stockrag::evaluation {

namespace {

double ratio(std::int64_t num, std::int64_t den, bool& degenerate) noexcept {
  if (den == 0) {
    degenerate = true;
    return 0.0;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

std::string fixed3(double v) {
  auto s = fmt::format("{:.3f}", v);
  if (s == "-0.000") s = "0.000";
  return s;
}

double round3(double v) {
  double r = std::round(v * 1000.0) / 1000.0;
  return r == 0.0 ? 0.0 : r;
}

struct Row {
  std::string model;
  int shots;
};

std::vector<Row> report_rows(const ReportInput& input) {
  std::vector<std::string> models = input.models;
  for (const auto& [key, _] : input.groups)
    if (std::find(models.begin(), models.end(), key.model) == models.end()) models.push_back(key.model);
  std::vector<Row> rows;
  for (const auto& m : models) {
    std::set<int> shots;
    for (const auto& [key, _] : input.groups)
      if (key.model == m) shots.insert(key.shots);
    for (int s : shots) rows.push_back({m, s});
  }
  return rows;
}

struct Column {
  const char* name;
  double AggregateMetrics::*member;
};

constexpr Column kColumns[] = {{"np", &AggregateMetrics::np},   {"pp", &AggregateMetrics::pp},
                               {"nr", &AggregateMetrics::nr},   {"pr", &AggregateMetrics::pr},
                               {"acc", &AggregateMetrics::acc}, {"mcc", &AggregateMetrics::mcc},
                               {"wf1", &AggregateMetrics::wf1}};

}  // namespace

ConfusionMatrix confusion(std::span<const inference::PredictionRecord> records) {
  ConfusionMatrix cm;
  for (const auto& r : records) {
    if (r.verdict == inference::Verdict::invalid)
      throw Error(fmt::format("record {} run {} has an unresolved INVALID verdict", r.bundle_id, r.run_index));
    const bool predicted_up = r.verdict == inference::Verdict::up;
    const bool actual_up = r.label == labeling::Movement::up;
    if (predicted_up && actual_up) ++cm.tp;
    else if (predicted_up) ++cm.fp;
    else if (actual_up) ++cm.fn;
    else ++cm.tn;
  }
  return cm;
}

PrecisionRecall precision_recall(const ConfusionMatrix& cm) noexcept {
  PrecisionRecall p;
  p.pp = ratio(cm.tp, cm.tp + cm.fp, p.pp_degenerate);
  p.pr = ratio(cm.tp, cm.tp + cm.fn, p.pr_degenerate);
  p.np = ratio(cm.tn, cm.tn + cm.fn, p.np_degenerate);
  p.nr = ratio(cm.tn, cm.tn + cm.fp, p.nr_degenerate);
  return p;
}

double f1(double precision, double recall) noexcept {
  const double den = precision + recall;
  return den == 0.0 ? 0.0 : 2.0 * precision * recall / den;
}

double weighted_f1_from_rates(double pp, double pr, double np, double nr, double weight_pos, double weight_neg) {
  const double total = weight_pos + weight_neg;
  if (!(total > 0.0)) throw UndefinedInputError("class weights sum to zero");
  return (weight_pos * f1(pp, pr) + weight_neg * f1(np, nr)) / total;
}

double weighted_f1(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw UndefinedInputError("weighted F1 of an empty confusion matrix");
  const auto p = precision_recall(cm);
  return weighted_f1_from_rates(p.pp, p.pr, p.np, p.nr, static_cast<double>(cm.tp + cm.fn),
                                static_cast<double>(cm.tn + cm.fp));
}

MccResult mcc_detail(const ConfusionMatrix& cm) noexcept {
  const double a = static_cast<double>(cm.tp + cm.fp);
  const double b = static_cast<double>(cm.tp + cm.fn);
  const double c = static_cast<double>(cm.tn + cm.fp);
  const double d = static_cast<double>(cm.tn + cm.fn);
  if (a == 0.0 || b == 0.0 || c == 0.0 || d == 0.0) return {0.0, true};
  const double num = static_cast<double>(cm.tp) * static_cast<double>(cm.tn) -
                     static_cast<double>(cm.fp) * static_cast<double>(cm.fn);
  double v = num / std::sqrt(a * b * c * d);
  return {std::clamp(v, -1.0, 1.0), false};
}

double accuracy(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw UndefinedInputError("accuracy of an empty confusion matrix");
  return static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
}

RunMetrics run_metrics(const ConfusionMatrix& cm, std::int64_t invalid_count) {
  RunMetrics m;
  m.cm = cm;
  const auto p = precision_recall(cm);
  m.pp = p.pp;
  m.pr = p.pr;
  m.np = p.np;
  m.nr = p.nr;
  m.acc = accuracy(cm);
  m.wf1 = weighted_f1(cm);
  const auto mc = mcc_detail(cm);
  m.mcc = mc.value;
  m.degenerate = mc.degenerate || p.pp_degenerate || p.pr_degenerate || p.np_degenerate || p.nr_degenerate;
  m.invalid_rate = static_cast<double>(invalid_count) / static_cast<double>(cm.total());
  return m;
}

RunMetrics run_metrics(std::span<const inference::PredictionRecord> records) {
  const auto invalid = std::count_if(records.begin(), records.end(), [](const auto& r) { return r.invalid; });
  return run_metrics(confusion(records), static_cast<std::int64_t>(invalid));
}

AggregateMetrics aggregate(std::span<const RunMetrics> runs) {
  if (runs.empty()) throw UndefinedInputError("aggregate of zero runs");
  AggregateMetrics a;
  const double n = static_cast<double>(runs.size());
  for (const auto& r : runs) {
    a.np += r.np;
    a.pp += r.pp;
    a.nr += r.nr;
    a.pr += r.pr;
    a.acc += r.acc;
    a.wf1 += r.wf1;
    a.mcc += r.mcc;
    a.invalid_rate += r.invalid_rate;
  }
  for (double* v : {&a.np, &a.pp, &a.nr, &a.pr, &a.acc, &a.wf1, &a.mcc, &a.invalid_rate}) *v /= n;
  double var = 0.0;
  for (const auto& r : runs) var += (r.wf1 - a.wf1) * (r.wf1 - a.wf1);
  a.wf1_std = std::sqrt(var / n);
  a.runs = static_cast<int>(runs.size());
  return a;
}

std::map<GroupKey, AggregateMetrics> evaluate_records(std::span<const inference::PredictionRecord> records) {
  std::map<GroupKey, std::map<int, std::vector<inference::PredictionRecord>>> grouped;
  for (const auto& r : records) grouped[{r.model_name, r.shots, r.horizon_months}][r.run_index].push_back(r);
  std::map<GroupKey, AggregateMetrics> out;
  for (const auto& [key, by_run] : grouped) {
    std::vector<RunMetrics> runs;
    for (const auto& [_, recs] : by_run) runs.push_back(run_metrics(recs));
    out.emplace(key, aggregate(runs));
  }
  return out;
}

std::string emit_report(const ReportInput& input, ReportFormat format) {
  const auto rows = report_rows(input);
  auto find = [&](const Row& row, int h) -> const AggregateMetrics* {
    auto it = input.groups.find(GroupKey{row.model, row.shots, h});
    return it == input.groups.end() ? nullptr : &it->second;
  };

  if (format == ReportFormat::json) {
    nlohmann::ordered_json doc;
    doc["horizons"] = input.horizons;
    doc["rows"] = nlohmann::ordered_json::array();
    for (const auto& row : rows) {
      nlohmann::ordered_json r;
      r["model"] = row.model;
      r["shots"] = row.shots;
      r["horizons"] = nlohmann::ordered_json::object();
      for (int h : input.horizons) {
        const auto* m = find(row, h);
        if (!m) continue;
        nlohmann::ordered_json block;
        for (const auto& c : kColumns) block[c.name] = round3(m->*(c.member));
        block["wf1_std"] = round3(m->wf1_std);
        block["invalid_rate"] = round3(m->invalid_rate);
        block["runs"] = m->runs;
        r["horizons"][std::to_string(h)] = std::move(block);
      }
      doc["rows"].push_back(std::move(r));
    }
    return doc.dump(2) + "\n";
  }

  std::string out;
  if (format == ReportFormat::csv) {
    out += "model,shots";
    for (int h : input.horizons) {
      for (const auto& c : kColumns) out += fmt::format(",h{}_{}", h, c.name);
      out += fmt::format(",h{0}_wf1_std,h{0}_invalid_rate", h);
    }
    out += '\n';
    for (const auto& row : rows) {
      out += fmt::format("{},{}", row.model, row.shots);
      for (int h : input.horizons) {
        const auto* m = find(row, h);
        constexpr std::size_t cells = std::size(kColumns) + 2;
        if (!m) {
          out += std::string(cells, ',');
          continue;
        }
        for (const auto& c : kColumns) out += "," + fixed3(m->*(c.member));
        out += "," + fixed3(m->wf1_std) + "," + fixed3(m->invalid_rate);
      }
      out += '\n';
    }
    return out;
  }

  // markdown
  out += "| Shots | Model |";
  std::string rule = "|---|---|";
  for (int h : input.horizons) {
    for (const char* name : {"NP", "PP", "NR", "PR", "ACC", "MCC", "WF1"}) {
      out += fmt::format(" {}M {} |", h, name);
      rule += "---|";
    }
    out += fmt::format(" {}M Invalid |", h);
    rule += "---|";
  }
  out += "\n" + rule + "\n";
  for (const auto& row : rows) {
    out += fmt::format("| {}-shot | {} |", row.shots, row.model);
    for (int h : input.horizons) {
      const auto* m = find(row, h);
      if (!m) {
        for (std::size_t i = 0; i < std::size(kColumns) + 1; ++i) out += " - |";
        continue;
      }
      for (const auto& c : kColumns) {
        if (c.member == &AggregateMetrics::wf1)
          out += fmt::format(" {}<sub>{}</sub> |", fixed3(m->wf1), fixed3(m->wf1_std));
        else
          out += fmt::format(" {} |", fixed3(m->*(c.member)));
      }
      out += fmt::format(" {} |", fixed3(m->invalid_rate));
    }
    out += '\n';
  }
  return out;
}

}  // namespace stockrag::evaluation
