#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "stockrag/inference.hpp"

namespace stockrag::evaluation {

/// Binary confusion matrix with UP as the positive class.
struct ConfusionMatrix {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t tn = 0;

  std::int64_t total() const noexcept { return tp + fp + fn + tn; }
  bool operator==(const ConfusionMatrix&) const = default;
};

/// Tallies one run. Records must carry a binary verdict.
ConfusionMatrix confusion(std::span<const inference::PredictionRecord> records);

struct PrecisionRecall {
  double pp = 0.0;
  double pr = 0.0;
  double np = 0.0;
  double nr = 0.0;
  // Set when the matching denominator was zero and the value forced to 0.
  bool pp_degenerate = false;
  bool pr_degenerate = false;
  bool np_degenerate = false;
  bool nr_degenerate = false;
};

PrecisionRecall precision_recall(const ConfusionMatrix& cm) noexcept;

/// Harmonic mean, 0 when both inputs are 0.
double f1(double precision, double recall) noexcept;

/// Support-weighted mean of per-class F1. UndefinedInputError on an empty
/// matrix.
double weighted_f1(const ConfusionMatrix& cm);

/// The same quantity from reported rates and class weights, as needed to
/// check published tables.
double weighted_f1_from_rates(double pp, double pr, double np, double nr, double weight_pos, double weight_neg);

struct MccResult {
  double value = 0.0;
  bool degenerate = false;
};

MccResult mcc_detail(const ConfusionMatrix& cm) noexcept;
inline double mcc(const ConfusionMatrix& cm) noexcept { return mcc_detail(cm).value; }

double accuracy(const ConfusionMatrix& cm);

struct RunMetrics {
  double np = 0.0, pp = 0.0, nr = 0.0, pr = 0.0;
  double acc = 0.0, wf1 = 0.0, mcc = 0.0;
  double invalid_rate = 0.0;
  ConfusionMatrix cm;
  bool degenerate = false;
};

RunMetrics run_metrics(std::span<const inference::PredictionRecord> records);
RunMetrics run_metrics(const ConfusionMatrix& cm, std::int64_t invalid_count);

struct AggregateMetrics {
  double np = 0.0, pp = 0.0, nr = 0.0, pr = 0.0;
  double acc = 0.0, wf1 = 0.0, mcc = 0.0;
  double invalid_rate = 0.0;
  /// Population standard deviation of per-run WF1.
  double wf1_std = 0.0;
  int runs = 0;
};

AggregateMetrics aggregate(std::span<const RunMetrics> runs);

struct GroupKey {
  std::string model;
  int shots = 0;
  int horizon = 3;
  auto operator<=>(const GroupKey&) const = default;
};

/// Groups records by (model, shots, horizon), splits each group by
/// run_index, and aggregates.
std::map<GroupKey, AggregateMetrics> evaluate_records(std::span<const inference::PredictionRecord> records);

enum class ReportFormat { markdown, csv, json };

struct ReportInput {
  /// Row order: models in this order, then shots ascending.
  std::vector<std::string> models;
  std::vector<int> horizons;
  std::map<GroupKey, AggregateMetrics> groups;
};

/// One row per (model, shots) with a NP PP NR PR ACC MCC WF1 block (plus
/// WF1 std and invalid rate) per horizon; values to 3 decimals.
std::string emit_report(const ReportInput& input, ReportFormat format);

}  // namespace stockrag::evaluation
