#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "adprompt/errors.hpp"
#include "adprompt/label.hpp"
#include "adprompt/verdict_parser.hpp"

namespace adprompt {

// One test subject's result in one run.
struct LabeledOutcome {
  std::string subject_id;
  ClassLabel true_label = ClassLabel::HC;
  VerdictOrFailure result;
};

inline bool is_parsed(const LabeledOutcome& outcome) {
  return std::holds_alternative<Verdict>(outcome.result);
}

inline size_t count_failures(const std::vector<LabeledOutcome>& outcomes) {
  size_t n = 0;
  for (const auto& o : outcomes) {
    if (!is_parsed(o)) ++n;
  }
  return n;
}

// Fraction of parsed outcomes whose prediction matches the true label.
// Failures never enter the denominator and are never imputed to a class;
// they are counted separately. An all-failure run has no defined accuracy.
inline double accuracy(const std::vector<LabeledOutcome>& outcomes) {
  size_t parsed = 0;
  size_t correct = 0;
  for (const auto& o : outcomes) {
    if (!is_parsed(o)) continue;
    ++parsed;
    if (std::get<Verdict>(o.result).prediction == o.true_label) ++correct;
  }
  if (parsed == 0) {
    throw DataError("accuracy undefined: every outcome failed to parse");
  }
  return static_cast<double>(correct) / static_cast<double>(parsed);
}

// Threshold-free ROC-AUC over the parsed outcomes, computed by midranks
// (the Mann-Whitney statistic): ties contribute 1/2. Unavailable — not an
// error — when either class is absent among parsed outcomes or when any
// parsed outcome carries no probability (the no-proxy ablation).
inline std::optional<double> roc_auc(const std::vector<LabeledOutcome>& outcomes) {
  std::vector<std::pair<double, bool>> scored;  // (probability, is_ad)
  for (const auto& o : outcomes) {
    if (!is_parsed(o)) continue;
    const auto& verdict = std::get<Verdict>(o.result);
    if (!verdict.probability) return std::nullopt;
    scored.emplace_back(*verdict.probability, o.true_label == ClassLabel::AD);
  }
  size_t n_ad = 0;
  for (const auto& [_, is_ad] : scored) n_ad += is_ad ? 1 : 0;
  const size_t n_hc = scored.size() - n_ad;
  if (n_ad == 0 || n_hc == 0) return std::nullopt;

  std::sort(scored.begin(), scored.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  double ad_rank_sum = 0.0;
  size_t i = 0;
  while (i < scored.size()) {
    size_t j = i;
    while (j < scored.size() && scored[j].first == scored[i].first) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
    for (size_t t = i; t < j; ++t) {
      if (scored[t].second) ad_rank_sum += midrank;
    }
    i = j;
  }
  const double n1 = static_cast<double>(n_ad);
  const double n0 = static_cast<double>(n_hc);
  return (ad_rank_sum - n1 * (n1 + 1.0) / 2.0) / (n1 * n0);
}

struct RunMetrics {
  std::string mode;
  int k = 0;
  uint64_t seed = 0;
  std::optional<double> accuracy;  // absent only for an all-failure run
  std::optional<double> auc;
  size_t n_failures = 0;
  size_t n_total = 0;
};

inline RunMetrics compute_run_metrics(const std::vector<LabeledOutcome>& outcomes,
                                      std::string mode, int k, uint64_t seed) {
  RunMetrics m;
  m.mode = std::move(mode);
  m.k = k;
  m.seed = seed;
  m.n_total = outcomes.size();
  m.n_failures = count_failures(outcomes);
  if (m.n_failures < m.n_total) m.accuracy = accuracy(outcomes);
  m.auc = roc_auc(outcomes);
  return m;
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample std (n-1 denominator); 0 for a single run
  size_t n = 0;
};

inline MeanStd mean_std(const std::vector<double>& values) {
  MeanStd out;
  out.n = values.size();
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return out;
}

struct GroupAggregate {
  std::string mode;
  int k = 0;
  size_t n_runs = 0;
  std::optional<MeanStd> accuracy;
  std::optional<MeanStd> auc;  // absent when any run in the group lacks AUC
  size_t total_failures = 0;
};

// Cross-seed aggregation per (mode, k). A group where any run has no AUC
// aggregates accuracy only.
inline std::vector<GroupAggregate> aggregate(const std::vector<RunMetrics>& runs) {
  std::map<std::pair<std::string, int>, std::vector<const RunMetrics*>> groups;
  for (const auto& r : runs) groups[{r.mode, r.k}].push_back(&r);

  std::vector<GroupAggregate> out;
  for (const auto& [key, members] : groups) {
    GroupAggregate g;
    g.mode = key.first;
    g.k = key.second;
    g.n_runs = members.size();
    std::vector<double> accs;
    std::vector<double> aucs;
    bool auc_complete = true;
    for (const auto* r : members) {
      if (r->accuracy) accs.push_back(*r->accuracy);
      if (r->auc) {
        aucs.push_back(*r->auc);
      } else {
        auc_complete = false;
      }
      g.total_failures += r->n_failures;
    }
    if (!accs.empty()) g.accuracy = mean_std(accs);
    if (auc_complete && !aucs.empty()) g.auc = mean_std(aucs);
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace adprompt
